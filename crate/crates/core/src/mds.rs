//! Classical multidimensional scaling: the double-centering operator and the
//! spectral embedding built from it.

use crate::error::{Error, Result, Warning};
use crate::graph::DistanceMatrix;
use crate::linalg::{symmetric_eig, Matrix};

/// Double-centers the squared distances: `−H S H / 2` with `S = (D²ᵢⱼ)` and
/// `H = I − eeᵀ/n`. Row sums of the output vanish.
pub fn tau(d: &DistanceMatrix) -> Result<Matrix> {
    let n = d.n();
    if !d.all_finite() {
        return Err(Error::InvalidParam(
            "distance matrix has unreached (infinite) entries".into(),
        ));
    }
    // Work on squared distances.
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            s.set(i, j, v * v);
        }
    }
    let mut row_mean = vec![0.0; n];
    let mut grand = 0.0;
    for i in 0..n {
        let m: f64 = s.row(i).iter().sum::<f64>() / n as f64;
        row_mean[i] = m;
        grand += m;
    }
    grand /= n as f64;

    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let centered = s.get(i, j) - row_mean[i] - row_mean[j] + grand;
            out.set(i, j, -0.5 * centered);
        }
    }
    // Exact symmetry for the eigensolver.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

/// Spectral embedding with eigenvalue clamping information.
#[derive(Debug, Clone)]
pub struct MdsOutput {
    /// n×d coordinates, rows aligned with the distance matrix.
    pub embedding: Matrix,
    /// Eigenvalues of τ(D) used for the embedding, descending.
    pub eigenvalues: Vec<f64>,
    /// How many of the requested eigenvalues were negative and clamped.
    pub clamped: usize,
}

impl MdsOutput {
    pub fn warnings(&self) -> Vec<Warning> {
        if self.clamped > 0 {
            vec![Warning::NegativeEigenvaluesClamped {
                count: self.clamped,
            }]
        } else {
            Vec::new()
        }
    }
}

/// Classical MDS: rows of the embedding are `√λᵢ νᵢ` over the top `dim`
/// eigenpairs of `τ(D)`. Negative eigenvalues are clamped to zero and
/// counted; it is an error when no positive eigenvalue remains.
pub fn classical_mds(d: &DistanceMatrix, dim: usize) -> Result<MdsOutput> {
    let n = d.n();
    if dim < 1 {
        return Err(Error::InvalidParam("target dimension must be >= 1".into()));
    }
    if dim > n {
        return Err(Error::InvalidParam(format!(
            "target dimension {dim} exceeds point count {n}"
        )));
    }
    let t = tau(d)?;
    let eig = symmetric_eig(&t, dim)?;
    if eig.values.iter().all(|&l| l <= 0.0) {
        return Err(Error::NoPositiveEigenvalue { requested: dim });
    }
    let mut clamped = 0usize;
    let mut embedding = Matrix::zeros(n, dim);
    for c in 0..dim {
        let lambda = eig.values[c];
        let scale = if lambda > 0.0 {
            lambda.sqrt()
        } else {
            if lambda < 0.0 {
                clamped += 1;
            }
            0.0
        };
        for i in 0..n {
            embedding.set(i, c, scale * eig.vectors.get(i, c));
        }
    }
    Ok(MdsOutput {
        embedding,
        eigenvalues: eig.values,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(entries: &[&[f64]]) -> DistanceMatrix {
        let n = entries.len();
        let mut d = DistanceMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(entries[i][j], entries[j][i]);
                if i < j {
                    d.set_sym(i, j, entries[i][j]);
                }
            }
        }
        d
    }

    #[test]
    fn tau_zero_matrix() {
        let d = DistanceMatrix::zeros(3);
        let t = tau(&d).unwrap();
        assert!(t.max_abs() == 0.0);
    }

    #[test]
    fn tau_two_points() {
        // Direct H·S·H arithmetic for D = [[0,2],[2,0]] gives [[1,−1],[−1,1]].
        let d = dm(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let t = tau(&d).unwrap();
        assert!((t.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((t.get(0, 1) + 1.0).abs() < 1e-12);
        assert!((t.get(1, 0) + 1.0).abs() < 1e-12);
        assert!((t.get(1, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_row_sums_vanish() {
        let d = dm(&[
            &[0.0, 1.0, 2.2, 3.1],
            &[1.0, 0.0, 1.4, 2.0],
            &[2.2, 1.4, 0.0, 1.1],
            &[3.1, 2.0, 1.1, 0.0],
        ]);
        let t = tau(&d).unwrap();
        for i in 0..4 {
            let sum: f64 = t.row(i).iter().sum();
            assert!(sum.abs() < 1e-10, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn tau_rejects_unreached() {
        let mut d = DistanceMatrix::zeros(2);
        d.set_sym(0, 1, f64::INFINITY);
        assert!(tau(&d).is_err());
    }

    #[test]
    fn mds_two_points() {
        let d = dm(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let out = classical_mds(&d, 1).unwrap();
        assert_eq!(out.clamped, 0);
        let a = out.embedding.get(0, 0);
        let b = out.embedding.get(1, 0);
        // Coordinates are ±1 up to a global sign.
        assert!((a.abs() - 1.0).abs() < 1e-10);
        assert!((a + b).abs() < 1e-10);
    }

    #[test]
    fn mds_degenerate_all_zero() {
        let d = DistanceMatrix::zeros(3);
        assert!(matches!(
            classical_mds(&d, 1),
            Err(Error::NoPositiveEigenvalue { .. })
        ));
    }

    #[test]
    fn mds_reproduces_euclidean_configuration() {
        // 50 deterministic pseudo-random points in R³; the embedding must
        // reproduce every pairwise distance.
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 50;
        let mut pts = Matrix::zeros(n, 3);
        for i in 0..n {
            for j in 0..3 {
                pts.set(i, j, next() * 4.0 - 2.0);
            }
        }
        let d = DistanceMatrix::euclidean(&pts);
        let out = classical_mds(&d, 3).unwrap();
        for i in 0..n {
            for j in (i + 1)..n {
                let de = crate::graph::euclid(out.embedding.row(i), out.embedding.row(j));
                let dd = d.get(i, j);
                assert!((de - dd).abs() <= 1e-8 * dd, "pair ({i},{j}): {de} vs {dd}");
            }
        }
    }

    #[test]
    fn mds_scale_equivariance() {
        let d = dm(&[&[0.0, 1.0, 1.8], &[1.0, 0.0, 1.2], &[1.8, 1.2, 0.0]]);
        let out1 = classical_mds(&d, 2).unwrap();
        let mut d3 = DistanceMatrix::zeros(3);
        for i in 0..3 {
            for j in (i + 1)..3 {
                d3.set_sym(i, j, 3.0 * d.get(i, j));
            }
        }
        let out3 = classical_mds(&d3, 2).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let a = out1.embedding.get(i, j) * 3.0;
                let b = out3.embedding.get(i, j);
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }
}
