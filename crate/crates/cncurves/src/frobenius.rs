//! Frobenius traces a_p for the quadratic twist family E_D and for cubic and
//! quartic twist families, and the Frobenius average function.
//!
//! E_1 has CM by Z[i]: a_p(E_1) = 0 for p ≡ 3 (mod 4), and 2a for
//! p = a² + b² normalized by a odd, b even, a + b ≡ 1 (mod 4). Twisting by
//! square-free D multiplies by the Legendre symbol (D/p). The brute-force
//! character sum stays as the independent oracle and serves the cubic and
//! quartic families, where no closed form is used.

use crate::arith::{jacobi, two_squares, ArithError, PrimeTable};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrobeniusError {
    #[error("p = {0} divides the discriminant: bad reduction")]
    BadReduction(u64),
    #[error("p = 2 is outside the odd-prime trace formulas")]
    PrimeTwo,
    #[error("average over an empty curve set is undefined")]
    EmptyAverage,
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// a_p of y² = x³ + a4·x + a6 over F_p by the quadratic character sum
/// a_p = −Σ_x χ(x³ + a4x + a6), for odd p of good reduction.
pub fn ap_bruteforce(a4: i64, a6: i64, p: u64) -> Result<i64, FrobeniusError> {
    if p == 2 {
        return Err(FrobeniusError::PrimeTwo);
    }
    // disc = −16(4a4³ + 27a6²)
    let disc = -16i128 * (4 * (a4 as i128).pow(3) + 27 * (a6 as i128).pow(2));
    if disc == 0 || disc.rem_euclid(p as i128) == 0 {
        return Err(FrobeniusError::BadReduction(p));
    }
    // χ table: χ[x] ∈ {-1, 0, +1}
    let mut chi = vec![-1i8; p as usize];
    chi[0] = 0;
    for x in 1..p {
        chi[(x as u128 * x as u128 % p as u128) as usize] = 1;
    }
    let a4m = (a4.rem_euclid(p as i64)) as u64;
    let a6m = (a6.rem_euclid(p as i64)) as u64;
    let mut sum: i64 = 0;
    for x in 0..p {
        let x2 = x as u128 * x as u128 % p as u128;
        let cube = x2 * x as u128 % p as u128;
        let v = (cube + a4m as u128 * x as u128 + a6m as u128) % p as u128;
        sum += chi[v as usize] as i64;
    }
    Ok(-sum)
}

/// a_p(E_1) for odd p: 0 at p ≡ 3 (mod 4), twice the normalized odd part of
/// the two-square decomposition at p ≡ 1 (mod 4).
pub fn ap_base(p: u64) -> Result<i64, FrobeniusError> {
    if p == 2 {
        return Err(FrobeniusError::PrimeTwo);
    }
    if p % 4 == 3 {
        return Ok(0);
    }
    let (a, _) = two_squares(p)?;
    Ok(2 * a)
}

/// a_p(E_D) = (D/p)·a_p(E_1) for good p; 0 at p | 2D (additive reduction)
/// and at supersingular p ≡ 3 (mod 4).
pub fn ap_twist(d: u64, p: u64) -> Result<i64, FrobeniusError> {
    if p == 2 || (2 * d) % p == 0 {
        return Ok(0);
    }
    if p % 4 == 3 {
        return Ok(0);
    }
    Ok(jacobi(d as i64, p)? as i64 * ap_base(p)?)
}

/// Trace vector of E_D at the first k primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceVector {
    pub d: u64,
    pub primes: Vec<u64>,
    pub a: Vec<i64>,
}

pub fn trace_vector(d: u64, k: usize, table: &PrimeTable) -> Result<TraceVector, FrobeniusError> {
    let primes = table.first_primes(k);
    let a = primes
        .iter()
        .map(|&p| ap_twist(d, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TraceVector { d, primes, a })
}

impl TraceVector {
    /// Hasse bound, evenness for odd p, vanishing at p ≡ 3 (mod 4) away
    /// from 2D.
    pub fn check_invariants(&self) -> bool {
        self.primes.iter().zip(&self.a).all(|(&p, &a)| {
            let hasse = (a * a) as u128 <= 4 * p as u128;
            let even = p == 2 || a % 2 == 0;
            let ss = p % 4 != 3 || (2 * self.d) % p == 0 || a == 0;
            hasse && even && ss
        })
    }
}

/// Twist family selector for Frobenius averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwistFamily {
    /// y² = x³ − d²x (closed-form traces)
    Quadratic,
    /// y² = x³ − d², cubic twists of y² = x³ − 1
    Cubic,
    /// y² = x³ − 2dx, quartic twists of y² = x³ − 2x
    Quartic,
}

impl TwistFamily {
    /// Curve coefficients (a4, a6) for twist parameter d.
    pub fn coefficients(&self, d: u64) -> (i64, i64) {
        let d = d as i64;
        match self {
            TwistFamily::Quadratic => (-d * d, 0),
            TwistFamily::Cubic => (0, -d * d),
            TwistFamily::Quartic => (-2 * d, 0),
        }
    }

    /// a_p of the twist by d; bad primes contribute 0 to every series.
    pub fn ap(&self, d: u64, p: u64) -> Result<i64, FrobeniusError> {
        match self {
            TwistFamily::Quadratic => ap_twist(d, p),
            _ => {
                let (a4, a6) = self.coefficients(d);
                match ap_bruteforce(a4, a6, p) {
                    Ok(a) => Ok(a),
                    Err(FrobeniusError::BadReduction(_)) | Err(FrobeniusError::PrimeTwo) => Ok(0),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// Frobenius average f_X(n) = (1/#SF(X))·Σ_{D ∈ SF(X)} a_{p_n}(E_D) over the
/// square-free D ≤ X passing `filter`.
///
/// For the quadratic family the sum collapses to a_{p_n}(E_1)·mean of
/// (D/p_n), computed from exact integer symbol sums; cubic and quartic
/// twists are counted curve by curve.
pub fn frob_average(
    n: usize,
    x: u64,
    family: TwistFamily,
    filter: Option<&dyn Fn(u64) -> bool>,
    table: &PrimeTable,
) -> Result<f64, FrobeniusError> {
    let p = *table
        .first_primes(n)
        .last()
        .expect("n >= 1 primes available");
    let sf = crate::arith::enumerate_squarefree(x, table)?;
    let included: Vec<u64> = match filter {
        Some(f) => sf.into_iter().filter(|&d| f(d)).collect(),
        None => sf,
    };
    if included.is_empty() {
        return Err(FrobeniusError::EmptyAverage);
    }
    let count = included.len() as f64;
    match family {
        TwistFamily::Quadratic => {
            if p == 2 || p % 4 == 3 {
                return Ok(0.0);
            }
            let base = ap_base(p)?;
            let mut sym_sum: i64 = 0;
            for &d in &included {
                sym_sum += jacobi(d as i64, p)? as i64;
            }
            Ok(base as f64 * sym_sum as f64 / count)
        }
        _ => {
            let mut sum: i64 = 0;
            for &d in &included {
                sum += family.ap(d, p)?;
            }
            Ok(sum as f64 / count)
        }
    }
}

/// Running average C_n(p) = (1/n)·Σ_{k ≤ n} (k/p), from the exact integer
/// partial sum.
pub fn legendre_running_average(p: u64, n: u64) -> Result<f64, FrobeniusError> {
    Ok(legendre_partial_sum(p, n)? as f64 / n as f64)
}

/// Exact partial sum Σ_{k ≤ n} (k/p).
pub fn legendre_partial_sum(p: u64, n: u64) -> Result<i64, FrobeniusError> {
    // the symbol is p-periodic and a full period sums to 0
    let mut prefix = Vec::with_capacity(p as usize);
    let mut acc = 0i64;
    for k in 0..p {
        acc += jacobi(k as i64, p)? as i64;
        prefix.push(acc);
    }
    debug_assert_eq!(*prefix.last().unwrap(), 0);
    let r = n % p;
    Ok(if r == 0 { 0 } else { prefix[r as usize] })
}

/// Per residue class (mod 8) averages of a_p over square-free D ≤ X for a
/// list of primes; `normalize` divides by 2√p. Rows are plot-ready
/// (prime, class, value).
pub fn class_averages(
    x: u64,
    primes: &[u64],
    normalize: bool,
    table: &PrimeTable,
) -> Result<Vec<(u64, u8, f64)>, FrobeniusError> {
    use rayon::prelude::*;
    let sf = crate::arith::enumerate_squarefree(x, table)?;
    let mut by_class: Vec<Vec<u64>> = vec![Vec::new(); 8];
    for &d in &sf {
        by_class[(d % 8) as usize].push(d);
    }
    let per_prime: Vec<Vec<(u64, u8, f64)>> = primes
        .par_iter()
        .map(|&p| -> Result<Vec<(u64, u8, f64)>, FrobeniusError> {
            let mut rows = Vec::with_capacity(6);
            for class in [1u8, 2, 3, 5, 6, 7] {
                let ds = &by_class[class as usize];
                if ds.is_empty() {
                    continue;
                }
                let mut sum: i64 = 0;
                if p > 2 && p % 4 == 1 {
                    let base = ap_base(p)?;
                    let mut sym = 0i64;
                    for &d in ds {
                        if (2 * d) % p != 0 {
                            sym += jacobi(d as i64, p)? as i64;
                        }
                    }
                    sum = base * sym;
                }
                let mut value = sum as f64 / ds.len() as f64;
                if normalize {
                    value /= 2.0 * (p as f64).sqrt();
                }
                rows.push((p, class, value));
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    Ok(per_prime.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PrimeTable {
        PrimeTable::new(10_000).unwrap()
    }

    #[test]
    fn bruteforce_base_curve() {
        assert_eq!(ap_bruteforce(-1, 0, 5).unwrap(), -2);
        assert_eq!(ap_bruteforce(-1, 0, 7).unwrap(), 0);
        assert_eq!(ap_bruteforce(-1, 0, 13).unwrap(), 6);
    }

    #[test]
    fn base_matches_bruteforce() {
        for p in table().primes_up_to(1000) {
            if p == 2 {
                continue;
            }
            assert_eq!(ap_base(p).unwrap(), ap_bruteforce(-1, 0, p).unwrap(), "p={p}");
        }
    }

    #[test]
    fn base_spot_values() {
        assert_eq!(ap_base(5).unwrap(), -2);
        assert_eq!(ap_base(7).unwrap(), 0);
        assert_eq!(ap_base(41).unwrap(), 10);
        assert!(ap_base(2).is_err());
    }

    #[test]
    fn twist_values() {
        assert_eq!(ap_twist(5, 13).unwrap(), -6);
        assert_eq!(ap_twist(5, 5).unwrap(), 0);
        assert_eq!(ap_twist(1, 13).unwrap(), 6);
        // cross-check against the point count on y² = x³ − 25x over F_13
        assert_eq!(ap_bruteforce(-25, 0, 13).unwrap(), -6);
    }

    #[test]
    fn twist_matches_bruteforce_small() {
        let t = table();
        for d in 1u64..=20 {
            if !crate::arith::is_squarefree(d, &t).unwrap() {
                continue;
            }
            for p in t.primes_up_to(200) {
                if p == 2 || (2 * d) % p == 0 {
                    continue;
                }
                assert_eq!(
                    ap_twist(d, p).unwrap(),
                    ap_bruteforce(-((d * d) as i64), 0, p).unwrap(),
                    "d={d} p={p}"
                );
            }
        }
    }

    #[test]
    fn trace_vector_examples() {
        let t = table();
        let tv = trace_vector(1, 3, &t).unwrap();
        assert_eq!(tv.primes, vec![2, 3, 5]);
        assert_eq!(tv.a, vec![0, 0, -2]);
        assert!(tv.check_invariants());

        let tv5 = trace_vector(5, 4, &t).unwrap();
        assert_eq!(tv5.a, vec![0, 0, 0, 0]);

        let tv6 = trace_vector(6, 5, &t).unwrap();
        // entry at p=5: (6/5) = (1/5) = +1 times a_5(E_1) = −2
        assert_eq!(tv6.primes[2], 5);
        assert_eq!(tv6.a[2], -2);
    }

    #[test]
    fn zero_trace_columns_at_first_1000_primes() {
        // for D = 1 the vanishing entries are exactly p = 2 (bad) plus the
        // 504 supersingular primes p ≡ 3 (mod 4): 505 columns
        let t = PrimeTable::new(10_000).unwrap();
        let tv = trace_vector(1, 1000, &t).unwrap();
        let zeros = tv.a.iter().filter(|&&a| a == 0).count();
        assert_eq!(zeros, 505);
        let ss = tv.primes.iter().filter(|&&p| p % 4 == 3).count();
        assert_eq!(ss, 504);
    }

    #[test]
    fn average_with_class_filter() {
        let t = table();
        // restricting to one residue class keeps the algebraic identity
        let filter = |d: u64| d % 8 == 1;
        let f = frob_average(3, 500, TwistFamily::Quadratic, Some(&filter), &t).unwrap();
        let sf = crate::arith::enumerate_squarefree(500, &t).unwrap();
        let class: Vec<u64> = sf.into_iter().filter(|&d| d % 8 == 1).collect();
        let mean: f64 = class.iter().map(|&d| jacobi(d as i64, 5).unwrap() as f64).sum::<f64>()
            / class.len() as f64;
        assert!((f - ap_base(5).unwrap() as f64 * mean).abs() < 1e-12);
    }

    #[test]
    fn average_vanishes_at_three_mod_four() {
        let t = table();
        // p_2 = 3 and p_4 = 7 are ≡ 3 (mod 4)
        assert_eq!(frob_average(2, 500, TwistFamily::Quadratic, None, &t).unwrap(), 0.0);
        assert_eq!(frob_average(4, 500, TwistFamily::Quadratic, None, &t).unwrap(), 0.0);
    }

    #[test]
    fn average_single_element() {
        let t = table();
        // X = 1: average over {1} is a_p(E_1)
        let f = frob_average(3, 1, TwistFamily::Quadratic, None, &t).unwrap();
        assert_eq!(f, ap_base(5).unwrap() as f64);
    }

    #[test]
    fn average_equals_symbol_identity() {
        // f_X(n) = a_p(E_1) · mean of Jacobi symbols, checked directly
        let t = table();
        let x = 300;
        let f = frob_average(3, x, TwistFamily::Quadratic, None, &t).unwrap();
        let sf = crate::arith::enumerate_squarefree(x, &t).unwrap();
        let mean: f64 = sf.iter().map(|&d| jacobi(d as i64, 5).unwrap() as f64).sum::<f64>()
            / sf.len() as f64;
        let direct = ap_base(5).unwrap() as f64 * mean;
        assert!((f - direct).abs() < 1e-12);
    }

    #[test]
    fn empty_filter_is_error() {
        let t = table();
        let none = |_: u64| false;
        assert!(matches!(
            frob_average(3, 100, TwistFamily::Quadratic, Some(&none), &t),
            Err(FrobeniusError::EmptyAverage)
        ));
    }

    #[test]
    fn legendre_averages() {
        assert_eq!(legendre_running_average(5, 4).unwrap(), 0.0);
        assert_eq!(legendre_running_average(5, 5).unwrap(), 0.0);
        let c = legendre_running_average(7, 3).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_partial_sum_bound() {
        for p in [3u64, 5, 7, 11, 13, 97] {
            for n in 1..=(3 * p) {
                let s = legendre_partial_sum(p, n).unwrap().unsigned_abs();
                assert!(s <= (p - 1) / 2, "p={p} n={n} sum={s}");
            }
        }
    }

    #[test]
    fn class_average_rows() {
        let t = table();
        let rows = class_averages(200, &[3, 5, 13], true, &t).unwrap();
        for &(p, class, v) in &rows {
            assert!((-1.0..=1.0).contains(&v), "p={p} c={class} v={v}");
            if p % 4 == 3 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn normalized_class_averages_at_scale() {
        // all normalized per-class averages stay below 1e-2 at X = 10^6
        // over the first 1000 primes
        let t = PrimeTable::new(1_000_000).unwrap();
        let plist = t.first_primes(1000);
        let rows = class_averages(1_000_000, &plist, true, &t).unwrap();
        assert_eq!(rows.len(), 6000);
        let max = rows.iter().map(|r| r.2.abs()).fold(0.0f64, f64::max);
        assert!(max < 1e-2, "max normalized class average {max}");
    }

    #[test]
    fn hasse_bound_on_families() {
        let t = table();
        for fam in [TwistFamily::Cubic, TwistFamily::Quartic] {
            for d in 1..=10u64 {
                for p in t.primes_up_to(100) {
                    let a = fam.ap(d, p).unwrap();
                    assert!((a * a) as u128 <= 4 * p as u128);
                }
            }
        }
    }
}
