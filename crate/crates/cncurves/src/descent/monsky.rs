//! Monsky matrix: F₂ rank computation of s(D) for odd square-free D.
//!
//! For D = p₁⋯p_t (distinct odd primes) let [x/p] ∈ F₂ be the additive
//! character of the Legendre symbol, (x/p) = (−1)^[x/p]. Build
//!
//! * A: a_ij = [p_j/p_i] for i ≠ j, diagonal a_ii = Σ_{j≠i} a_ij,
//! * D₂ = diag([2/p_i]), D₋₂ = diag([−2/p_i]),
//!
//! and the 2t×2t block matrix
//!
//! ```text
//!   M_D = | A + D₂   D₂      |
//!         | D₂       A + D₋₂ |
//! ```
//!
//! Then s(D) = 2t − rank_F₂(M_D). The descent oracle is normative; this path
//! is trusted only because the two agree on every odd square-free D ≤ 10⁴
//! (enforced by the acceptance suite before any large-scale run).

use crate::arith::{factor, jacobi, PrimeTable};

use super::DescentError;

/// Additive character of the Legendre symbol for a unit x mod p.
fn addchar(x: i64, p: u64) -> u64 {
    match jacobi(x, p).expect("odd prime modulus") {
        1 => 0,
        -1 => 1,
        _ => unreachable!("x must be a unit mod p"),
    }
}

/// s(D) for odd square-free D via the Monsky matrix.
pub fn monsky_rank(d: u64, table: &PrimeTable) -> Result<u32, DescentError> {
    if d % 2 == 0 {
        return Err(DescentError::EvenD(d));
    }
    let f = factor(d, table)?;
    if !f.is_squarefree() {
        return Err(DescentError::NotSquarefree(d));
    }
    let primes: Vec<u64> = f.factors.iter().map(|&(p, _)| p).collect();
    let t = primes.len();
    if t == 0 {
        // D = 1: empty matrix, Selmer group is all torsion
        return Ok(0);
    }
    assert!(2 * t <= 64, "Monsky matrix exceeds one machine word");

    // A with zero row sums off the diagonal convention
    let mut a = vec![0u64; t]; // row bitmasks, bit j = a_ij
    for i in 0..t {
        let mut diag = 0u64;
        for j in 0..t {
            if i != j {
                let bit = addchar(primes[j] as i64, primes[i]);
                a[i] |= bit << j;
                diag ^= bit;
            }
        }
        a[i] |= diag << i;
    }
    let d2: Vec<u64> = primes.iter().map(|&p| addchar(2, p)).collect();
    let dm2: Vec<u64> = primes.iter().map(|&p| addchar(-2, p)).collect();

    // assemble rows of the 2t×2t matrix; columns 0..t then t..2t
    let mut rows = Vec::with_capacity(2 * t);
    for i in 0..t {
        let nw = a[i] ^ (d2[i] << i);
        let ne = d2[i] << i;
        rows.push(nw | (ne << t));
    }
    for i in 0..t {
        let sw = d2[i] << i;
        let se = a[i] ^ (dm2[i] << i);
        rows.push(sw | (se << t));
    }
    let rank = rank_f2_word(&mut rows);
    Ok(2 * t as u32 - rank)
}

/// Rank of a set of F₂ row vectors packed into single machine words, via an
/// xor basis indexed by leading bit.
pub fn rank_f2_word(rows: &mut [u64]) -> u32 {
    let mut basis = [0u64; 64];
    let mut rank = 0u32;
    for &row in rows.iter() {
        let mut r = row;
        while r != 0 {
            let lead = 63 - r.leading_zeros() as usize;
            if basis[lead] == 0 {
                basis[lead] = r;
                rank += 1;
                break;
            }
            r ^= basis[lead];
        }
    }
    rank
}

/// Rank of wide F₂ rows (each row a slice of words), for matrices beyond one
/// machine word. In-place Gaussian elimination over blocks of 64 columns.
pub fn rank_f2_wide(rows: &mut Vec<Vec<u64>>, ncols: usize) -> u32 {
    let mut rank = 0usize;
    for col in 0..ncols {
        let (w, b) = (col / 64, col % 64);
        let mut pivot = None;
        for (i, row) in rows.iter().enumerate().skip(rank) {
            if row[w] >> b & 1 == 1 {
                pivot = Some(i);
                break;
            }
        }
        let Some(p) = pivot else { continue };
        rows.swap(rank, p);
        let pivot_row = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[w] >> b & 1 == 1 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x ^= *y;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values_match_known_selmer_ranks() {
        let t = PrimeTable::new(1000).unwrap();
        assert_eq!(monsky_rank(1, &t).unwrap(), 0);
        assert_eq!(monsky_rank(3, &t).unwrap(), 0);
        assert_eq!(monsky_rank(5, &t).unwrap(), 1);
        assert_eq!(monsky_rank(7, &t).unwrap(), 1);
        assert_eq!(monsky_rank(15, &t).unwrap(), 1);
        assert_eq!(monsky_rank(17, &t).unwrap(), 2);
        assert_eq!(monsky_rank(41, &t).unwrap(), 2);
    }

    #[test]
    fn rejects_even_and_non_squarefree() {
        let t = PrimeTable::new(1000).unwrap();
        assert!(matches!(monsky_rank(6, &t), Err(DescentError::EvenD(6))));
        assert!(matches!(monsky_rank(9, &t), Err(DescentError::NotSquarefree(9))));
    }

    #[test]
    fn word_rank_matches_wide_rank() {
        let cases: Vec<Vec<u64>> = vec![
            vec![0b11, 0b10],
            vec![0b111, 0b101, 0b010],
            vec![0, 0, 0],
            vec![0b1, 0b1, 0b1],
            vec![0b1010, 0b0101, 0b1111, 0b0001],
        ];
        for rows in cases {
            let mut a = rows.clone();
            let mut b: Vec<Vec<u64>> = rows.iter().map(|&r| vec![r]).collect();
            assert_eq!(rank_f2_word(&mut a), rank_f2_wide(&mut b, 64));
        }
    }
}
