//! Prime tables for column bases.

/// All primes up to and including `limit`, by sieve of Eratosthenes.
pub fn sieve(limit: usize) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for p in 2..=limit {
        if !composite[p] {
            out.push(p as u64);
            let mut m = p * p;
            while m <= limit {
                composite[m] = true;
                m += p;
            }
        }
    }
    out
}

/// The first `k` odd primes: 3, 5, 7, 11, ...
///
/// Column i of the hybrid matrix uses the i-th odd prime as its base, so
/// `odd_primes(d)[i-1]` is the base of column i.
pub fn odd_primes(k: usize) -> Vec<u64> {
    if k == 0 {
        return Vec::new();
    }
    // k-th odd prime is the (k+1)-th prime; p_n < n (ln n + ln ln n) for n >= 6.
    let n = (k + 1).max(6) as f64;
    let mut limit = (n * (n.ln() + n.ln().ln())).ceil() as usize + 16;
    loop {
        let primes = sieve(limit);
        if primes.len() >= k + 1 {
            return primes[1..=k].to_vec();
        }
        limit *= 2;
    }
}

/// i-th odd prime, 1-based: `nth_odd_prime(1) == 3`.
pub fn nth_odd_prime(i: usize) -> u64 {
    assert!(i >= 1, "odd prime index is 1-based");
    odd_primes(i)[i - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_small() {
        assert_eq!(sieve(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(sieve(1).is_empty());
    }

    #[test]
    fn odd_prime_table() {
        assert_eq!(odd_primes(8), vec![3, 5, 7, 11, 13, 17, 19, 23]);
        assert_eq!(nth_odd_prime(1), 3);
        assert_eq!(nth_odd_prime(2), 5);
        assert_eq!(nth_odd_prime(3), 7);
    }

    #[test]
    fn odd_primes_large_count() {
        let ps = odd_primes(10_000);
        assert_eq!(ps.len(), 10_000);
        // 10001st prime overall
        assert_eq!(ps[9_999], 104_743);
        for w in ps.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
