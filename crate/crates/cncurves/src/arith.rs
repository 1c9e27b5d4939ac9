//! Exact integer arithmetic substrate: sieves, factorization, square-free
//! enumeration, quadratic symbols and two-square decompositions.

use thiserror::Error;

/// Hard cap on sieve size: 2^31 entries (~8 GiB of `u32`) is far beyond any
/// scale this pipeline runs at; requests above it are configuration mistakes.
pub const MAX_SIEVE_LIMIT: u64 = 1 << 31;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("sieve limit {0} exceeds the memory budget of {MAX_SIEVE_LIMIT}")]
    SieveTooLarge(u64),
    #[error("{0} is out of range for this prime table (limit {1})")]
    OutOfRange(u64, u64),
    #[error("Jacobi symbol (a/n) requires odd n >= 1, got n = {0}")]
    EvenModulus(u64),
    #[error("two-square decomposition requires a prime p ≡ 1 (mod 4), got {0}")]
    NotOneModFour(u64),
}

/// Smallest-prime-factor table up to a fixed limit.
///
/// `spf[n]` is the least prime dividing `n` (so `spf[p] == p` exactly when
/// `p` is prime). Immutable after construction and freely shareable across
/// threads.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    spf: Vec<u32>,
}

impl PrimeTable {
    /// Builds the sieve up to `limit` (inclusive).
    pub fn new(limit: u64) -> Result<Self, ArithError> {
        if limit > MAX_SIEVE_LIMIT {
            return Err(ArithError::SieveTooLarge(limit));
        }
        let limit = limit.max(2);
        let n = limit as usize + 1;
        let mut spf = vec![0u32; n];
        for i in 2..n {
            if spf[i] == 0 {
                // i is prime; mark it and every unmarked multiple
                let mut j = i;
                while j < n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Ok(PrimeTable { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n`, or `None` for `n < 2`.
    pub fn spf(&self, n: u64) -> Option<u64> {
        if (2..=self.limit).contains(&n) {
            Some(self.spf[n as usize] as u64)
        } else {
            None
        }
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] as u64 == n
    }

    /// The first `k` primes, in order. Panics if the table is too small to
    /// contain them (the default 3·10^6 table holds far more than the 1000
    /// primes the trace pipeline asks for).
    pub fn first_primes(&self, k: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(k);
        let mut n = 2;
        while out.len() < k {
            assert!(n <= self.limit, "prime table too small for {k} primes");
            if self.is_prime(n) {
                out.push(n);
            }
            n += 1;
        }
        out
    }

    pub fn primes_up_to(&self, x: u64) -> Vec<u64> {
        (2..=x.min(self.limit)).filter(|&n| self.is_prime(n)).collect()
    }
}

/// Complete factorization of a positive integer, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Number of distinct prime factors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn reconstruct(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| p.pow(e))
            .product::<u64>()
            .max(1)
    }
}

/// Factors `n` by repeated division by smallest prime factors.
pub fn factor(n: u64, table: &PrimeTable) -> Result<Factorization, ArithError> {
    if n < 1 || n > table.limit() {
        return Err(ArithError::OutOfRange(n, table.limit()));
    }
    let mut factors = Vec::new();
    let mut m = n;
    while m > 1 {
        let p = table.spf(m).expect("m within table");
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        factors.push((p, e));
    }
    Ok(Factorization { n, factors })
}

/// ω(2D): distinct prime factors of 2D.
pub fn omega_2d(d: u64, table: &PrimeTable) -> Result<u32, ArithError> {
    let f = factor(d, table)?;
    Ok(if d % 2 == 0 { f.omega() } else { f.omega() + 1 })
}

/// All square-free integers `1..=x` in increasing order.
///
/// Marks multiples of p² directly; the density tends to 6/π² ≈ 0.6079.
pub fn enumerate_squarefree(x: u64, table: &PrimeTable) -> Result<Vec<u64>, ArithError> {
    if x > table.limit() {
        return Err(ArithError::OutOfRange(x, table.limit()));
    }
    Ok(squarefree_flags(x)
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(n, &sf)| if sf { Some(n as u64) } else { None })
        .collect())
}

/// `flags[n] == true` iff `n` is square-free (flags[0] is false).
pub fn squarefree_flags(x: u64) -> Vec<bool> {
    let n = x as usize;
    let mut flags = vec![true; n + 1];
    if n >= 1 {
        flags[0] = false;
    }
    let mut d = 2usize;
    while d * d <= n {
        let dd = d * d;
        let mut m = dd;
        while m <= n {
            flags[m] = false;
            m += dd;
        }
        d += 1;
    }
    flags
}

pub fn is_squarefree(n: u64, table: &PrimeTable) -> Result<bool, ArithError> {
    Ok(factor(n, table)?.is_squarefree())
}

/// Jacobi symbol (a/n) for odd positive n; equals the Legendre symbol when n
/// is prime. `a` is first reduced mod n.
pub fn jacobi(a: i64, n: u64) -> Result<i8, ArithError> {
    if n % 2 == 0 {
        return Err(ArithError::EvenModulus(n));
    }
    let mut n = n;
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut result: i8 = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            // (2/n) = -1 for n ≡ 3, 5 (mod 8)
            if n % 8 == 3 || n % 8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        // quadratic reciprocity for odd a, n
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    Ok(if n == 1 { result } else { 0 })
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc: u64 = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % m as u128) as u64;
        }
        base = ((base as u128 * base as u128) % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// Square root of `a` mod odd prime `p` by Tonelli-Shanks.
/// Returns `None` when `a` is a non-residue.
pub fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    // write p-1 = q * 2^s with q odd
    let mut q = p - 1;
    let mut s = 0u32;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    // any quadratic non-residue works as the generator
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0u32;
        let mut tt = t;
        while tt != 1 {
            tt = ((tt as u128 * tt as u128) % p as u128) as u64;
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = ((b as u128 * b as u128) % p as u128) as u64;
        t = ((t as u128 * c as u128) % p as u128) as u64;
        r = ((r as u128 * b as u128) % p as u128) as u64;
    }
    Some(r)
}

/// Writes a prime p ≡ 1 (mod 4) as a² + b² with a odd, b even and b ≥ 0,
/// the sign of a fixed by a + b ≡ 1 (mod 4).
///
/// Cornacchia-style: start from a square root of -1 mod p and run the
/// Euclidean descent until the remainder drops below √p. The normalization
/// is the one that makes `2a` equal the Frobenius trace `a_p` of
/// `y² = x³ - x` (validated against brute-force point counts).
pub fn two_squares(p: u64) -> Result<(i64, u64), ArithError> {
    if p % 4 != 1 {
        return Err(ArithError::NotOneModFour(p));
    }
    let r0 = sqrt_mod(p - 1, p).expect("-1 is a QR mod p ≡ 1 (mod 4)");
    let mut a = p;
    let mut b = r0.max(p - r0).min(p - 1);
    // descend until b < sqrt(p); then (b, sqrt(p - b^2)) is the decomposition
    while b * b >= p {
        let t = a % b;
        a = b;
        b = t;
        debug_assert!(b > 0);
    }
    let a2 = b;
    let b2 = isqrt_u128((p - a2 * a2) as u128) as u64;
    debug_assert_eq!(a2 * a2 + b2 * b2, p);
    // exactly one of (a2, b2) is odd since p ≡ 1 (mod 4)
    let (odd, even) = if a2 % 2 == 1 { (a2, b2) } else { (b2, a2) };
    let odd = odd as i64;
    let even_i = even as i64;
    // pick the sign of the odd part so that a + b ≡ 1 (mod 4)
    let a_signed = if (odd + even_i).rem_euclid(4) == 1 {
        odd
    } else {
        -odd
    };
    debug_assert_eq!((a_signed + even_i).rem_euclid(4), 1);
    Ok((a_signed, even))
}

/// Integer square root of a u128.
pub fn isqrt_u128(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u128;
    // fix up float error
    while x > 0 && x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Squarefree kernel of a nonzero integer (product of primes with odd
/// exponent, sign preserved).
pub fn squarefree_kernel(x: i64) -> i64 {
    debug_assert!(x != 0);
    let sign = x.signum();
    let mut n = x.unsigned_abs();
    let mut kern: i64 = 1;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            if e % 2 == 1 {
                kern *= d as i64;
            }
        }
        d += 1;
    }
    if n > 1 {
        kern *= n as i64;
    }
    kern * sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spf_small_table() {
        let t = PrimeTable::new(10).unwrap();
        let want = [0, 0, 2, 3, 2, 5, 2, 7, 2, 3, 2];
        for (n, &w) in want.iter().enumerate() {
            assert_eq!(t.spf(n as u64).unwrap_or(0), w, "spf({n})");
        }
    }

    #[test]
    fn spf_limit_two() {
        let t = PrimeTable::new(2).unwrap();
        assert_eq!(t.spf(2), Some(2));
    }

    #[test]
    fn sieve_capacity_error() {
        assert!(matches!(
            PrimeTable::new(MAX_SIEVE_LIMIT + 1),
            Err(ArithError::SieveTooLarge(_))
        ));
    }

    #[test]
    fn factor_basics() {
        let t = PrimeTable::new(200).unwrap();
        let f = factor(12, &t).unwrap();
        assert_eq!(f.factors, vec![(2, 2), (3, 1)]);
        assert_eq!(f.omega(), 2);
        let f = factor(105, &t).unwrap();
        assert_eq!(f.factors, vec![(3, 1), (5, 1), (7, 1)]);
        assert_eq!(f.omega(), 3);
        assert!(factor(300, &t).is_err());
    }

    #[test]
    fn factor_large_prime_against_trial_division() {
        let t = PrimeTable::new(3_000_000).unwrap();
        // trial-division oracle
        let n: u64 = 2_999_999;
        let mut d = 2;
        let mut is_prime = true;
        while d * d <= n {
            if n % d == 0 {
                is_prime = false;
                break;
            }
            d += 1;
        }
        assert!(is_prime);
        assert_eq!(t.spf(n), Some(n));
        let f = factor(n, &t).unwrap();
        assert_eq!(f.factors, vec![(n, 1)]);
    }

    #[test]
    fn squarefree_small() {
        let t = PrimeTable::new(10).unwrap();
        assert_eq!(enumerate_squarefree(10, &t).unwrap(), vec![1, 2, 3, 5, 6, 7, 10]);
    }

    #[test]
    fn squarefree_density_window() {
        let t = PrimeTable::new(100_000).unwrap();
        let count = enumerate_squarefree(100_000, &t).unwrap().len() as f64;
        let ratio = count / 100_000.0;
        assert!((0.60..=0.62).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn squarefree_count_one_million() {
        let flags = squarefree_flags(1_000_000);
        assert_eq!(flags.iter().filter(|&&b| b).count(), 607_926);
    }

    #[test]
    fn jacobi_spot_values() {
        assert_eq!(jacobi(2, 7).unwrap(), 1);
        // oracle: squares mod 13 are {1,3,4,9,10,12}; 5 is not among them
        let squares: Vec<u64> = (1..13).map(|x| x * x % 13).collect();
        assert!(!squares.contains(&5));
        assert_eq!(jacobi(5, 13).unwrap(), -1);
        assert_eq!(jacobi(0, 5).unwrap(), 0);
        assert_eq!(jacobi(-1, 5).unwrap(), 1);
        assert_eq!(jacobi(-1, 7).unwrap(), -1);
        assert!(jacobi(3, 8).is_err());
    }

    #[test]
    fn two_squares_spot_values() {
        assert_eq!(two_squares(5).unwrap(), (-1, 2));
        assert_eq!(two_squares(13).unwrap(), (3, 2));
        assert_eq!(two_squares(29).unwrap(), (-5, 2));
        assert_eq!(two_squares(41).unwrap(), (5, 4));
        assert!(two_squares(7).is_err());
    }

    #[test]
    fn two_squares_normalization_unique() {
        // among the four sign choices of (±a, ±b), exactly one with b ≥ 0 and
        // a odd satisfies a + b ≡ 1 (mod 4)
        for p in [5u64, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97, 101] {
            let (a, b) = two_squares(p).unwrap();
            assert_eq!((a * a + (b * b) as i64) as u64, p);
            assert_eq!(a.rem_euclid(2), 1);
            assert_eq!(b % 2, 0);
            let hits = [a, -a]
                .iter()
                .filter(|&&s| (s + b as i64).rem_euclid(4) == 1)
                .count();
            assert_eq!(hits, 1, "p={p}");
        }
    }

    proptest! {
        #[test]
        fn factor_reconstructs(n in 1u64..10_000) {
            let t = PrimeTable::new(10_000).unwrap();
            let f = factor(n, &t).unwrap();
            prop_assert_eq!(f.reconstruct(), n);
            let mut prev = 0;
            for &(p, _) in &f.factors {
                prop_assert!(p > prev);
                prev = p;
            }
        }

        #[test]
        fn jacobi_multiplicative(a in -500i64..500, b in -500i64..500) {
            for p in [3u64, 5, 7, 11, 13, 101] {
                let ja = jacobi(a, p).unwrap();
                let jb = jacobi(b, p).unwrap();
                let jab = jacobi(a.wrapping_mul(b), p).unwrap();
                prop_assert_eq!(jab, ja * jb);
            }
        }
    }
}
