//! Principal component analysis via cyclic Jacobi rotations on the sample
//! covariance matrix.

use super::LearnError;

#[derive(Debug, Clone)]
pub struct PcaResult {
    pub mean: Vec<f64>,
    /// orthonormal component rows, by non-increasing explained variance
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// row-wise projection of the centered data on the kept components
    pub projections: Vec<Vec<f64>>,
    pub total_variance: f64,
}

/// Top-k principal components of a row-major matrix.
///
/// Eigendecomposition runs cyclic Jacobi sweeps until the off-diagonal norm
/// drops below 1e-12 of the matrix norm; each component's sign is fixed by
/// making its largest-magnitude entry positive.
pub fn pca(matrix: &[Vec<f64>], k: usize) -> Result<PcaResult, LearnError> {
    let n = matrix.len();
    if n < 2 {
        return Err(LearnError::TooFewRows(2));
    }
    let d = matrix[0].len();
    assert!(k <= d, "cannot keep more components than columns");
    let mut mean = vec![0.0; d];
    for row in matrix {
        for j in 0..d {
            mean[j] += row[j];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    // sample covariance
    let mut cov = vec![vec![0.0; d]; d];
    for row in matrix {
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in i..d {
                cov[i][j] += ci * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    let total_variance: f64 = (0..d).map(|i| cov[i][i]).sum();
    if total_variance == 0.0 {
        return Err(LearnError::DegenerateInput);
    }

    let (eigvals, eigvecs) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigvals[b].total_cmp(&eigvals[a]));

    let mut components = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for &col in order.iter().take(k) {
        let mut v: Vec<f64> = (0..d).map(|r| eigvecs[r][col]).collect();
        // sign convention: largest-magnitude entry positive
        let lead = v
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap();
        if lead < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        components.push(v);
        explained.push(eigvals[col].max(0.0));
    }
    let projections: Vec<Vec<f64>> = matrix
        .iter()
        .map(|row| {
            components
                .iter()
                .map(|c| (0..d).map(|j| (row[j] - mean[j]) * c[j]).sum())
                .collect()
        })
        .collect();
    Ok(PcaResult { mean, components, explained_variance: explained, projections, total_variance })
}

/// Eigenvalues and eigenvectors (columns of the returned matrix) of a
/// symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let norm: f64 = a
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..d {
            for j in i + 1..d {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() < 1e-12 * norm {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..d {
                    let (aip, aiq) = (a[i][p], a[i][q]);
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..d {
                    let (apj, aqj) = (a[p][j], a[q][j]);
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..d {
                    let (vip, viq) = (v[i][p], v[i][q]);
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    let vals = (0..d).map(|i| a[i][i]).collect();
    (vals, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_single_component() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let r = pca(&rows, 2).unwrap();
        assert!((r.explained_variance[0] - r.total_variance).abs() < 1e-9 * r.total_variance);
        assert!(r.explained_variance[1].abs() < 1e-9 * r.total_variance);
    }

    #[test]
    fn isotropic_square_equal_variance() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let r = pca(&rows, 2).unwrap();
        assert!((r.explained_variance[0] - r.explained_variance[1]).abs() < 1e-12);
    }

    #[test]
    fn variance_conservation_and_orthonormality() {
        // deterministic pseudo-random 5-column matrix
        let mut state = 1u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..5).map(|_| next() * 10.0).collect()).collect();
        let r = pca(&rows, 5).unwrap();
        let sum: f64 = r.explained_variance.iter().sum();
        assert!((sum - r.total_variance).abs() < 1e-8 * r.total_variance);
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = (0..5).map(|t| r.components[i][t] * r.components[j][t]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "({i},{j}) dot={dot}");
            }
        }
        // round-trip: full reconstruction from all components
        for (row, proj) in rows.iter().zip(&r.projections) {
            for j in 0..5 {
                let mut rec = r.mean[j];
                for (c, p) in r.components.iter().zip(proj) {
                    rec += c[j] * p;
                }
                assert!((rec - row[j]).abs() < 1e-8, "reconstruction off: {rec} vs {}", row[j]);
            }
        }
        // sign convention
        for c in &r.components {
            let lead = c.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn zero_variance_rejected() {
        let rows = vec![vec![3.0, 3.0]; 10];
        assert!(matches!(pca(&rows, 1), Err(LearnError::DegenerateInput)));
    }
}
