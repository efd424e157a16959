//! Quantitative evaluation of embeddings: Procrustes residuals, geodesic
//! preservation errors and residual variance.

use crate::error::{Error, Result};
use crate::graph::{euclid, DistanceMatrix};
use crate::linalg::{symmetric_eig, Matrix};

fn centered(x: &Matrix) -> Matrix {
    let n = x.rows();
    let d = x.cols();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += x.get(i, j);
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut c = x.clone();
    for i in 0..n {
        for j in 0..d {
            c.set(i, j, c.get(i, j) - mean[j]);
        }
    }
    c
}

/// Orthogonal matrix maximizing `tr(Rᵀ C)`: `R = U Vᵀ` from the SVD of the
/// cross-covariance, with reflections allowed. Small `d×d` problem solved
/// through the symmetric eigendecomposition of `CᵀC`; null directions are
/// completed from the standard basis.
fn optimal_rotation(cross: &Matrix) -> Matrix {
    let d = cross.rows();
    let ctc = cross.transpose().matmul(cross);
    let eig = symmetric_eig(&ctc, d).expect("CᵀC is symmetric");
    let sigma_max = eig
        .values
        .first()
        .map(|&l| l.max(0.0).sqrt())
        .unwrap_or(0.0);
    let tol = 1e-12 * sigma_max.max(1.0);

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let sigma = eig.values[i].max(0.0).sqrt();
        if sigma > tol {
            let v = eig.vector(i);
            let cv = cross.matvec(&v);
            u_cols.push(cv.iter().map(|x| x / sigma).collect());
        } else {
            // Complete with the basis vector least represented so far.
            let mut best: Option<(f64, Vec<f64>)> = None;
            for e in 0..d {
                let mut cand = vec![0.0; d];
                cand[e] = 1.0;
                for u in &u_cols {
                    let dot: f64 = u.iter().zip(&cand).map(|(x, y)| x * y).sum();
                    for (c, ui) in cand.iter_mut().zip(u) {
                        *c -= dot * ui;
                    }
                }
                let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
                if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                    best = Some((norm, cand));
                }
            }
            let (norm, mut cand) = best.expect("d >= 1");
            for c in cand.iter_mut() {
                *c /= norm;
            }
            u_cols.push(cand);
        }
    }

    // R = U Vᵀ.
    let mut r = Matrix::zeros(d, d);
    for (i, u) in u_cols.iter().enumerate() {
        let v = eig.vector(i);
        for row in 0..d {
            for col in 0..d {
                r.set(row, col, r.get(row, col) + u[row] * v[col]);
            }
        }
    }
    r
}

/// Root-mean-square pointwise distance after the optimal rigid alignment
/// (rotation, reflection and translation; no scaling) of `b` onto `a`.
pub fn procrustes_residual(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let ac = centered(a);
    let bc = centered(b);
    let cross = bc.transpose().matmul(&ac); // d×d
    let rot = optimal_rotation(&cross);
    let aligned = bc.matmul(&rot);
    let mut sq = 0.0;
    for i in 0..n {
        sq += ac
            .row(i)
            .iter()
            .zip(aligned.row(i))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>();
    }
    Ok((sq / n as f64).sqrt())
}

/// Relative geodesic-preservation errors `| ||yᵢ−yⱼ|| − D(i,j) | / D(i,j)`
/// aggregated over the given pairs (or every `i<j` pair when `pairs` is
/// `None`). Returns `(max, mean)`.
pub fn geodesic_preservation(
    y: &Matrix,
    d_geo: &DistanceMatrix,
    pairs: Option<&[(usize, usize)]>,
) -> Result<(f64, f64)> {
    if y.rows() != d_geo.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} embedding rows vs {} distance rows",
            y.rows(),
            d_geo.n()
        )));
    }
    let mut max_err = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    let mut eval = |i: usize, j: usize| -> Result<()> {
        let d = d_geo.get(i, j);
        if d <= 0.0 {
            return Err(Error::ZeroGeodesic { i, j });
        }
        let e = (euclid(y.row(i), y.row(j)) - d).abs() / d;
        max_err = max_err.max(e);
        sum += e;
        count += 1;
        Ok(())
    };
    match pairs {
        Some(ps) => {
            for &(i, j) in ps {
                eval(i, j)?;
            }
        }
        None => {
            for i in 0..y.rows() {
                for j in (i + 1)..y.rows() {
                    eval(i, j)?;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidParam("no pairs to evaluate".into()));
    }
    Ok((max_err, sum / count as f64))
}

/// `1 − r²` where `r` is the linear correlation of the upper-triangle
/// entries of the two matrices. Errors when either set of entries is
/// constant (undefined correlation).
pub fn residual_variance(d_geo: &DistanceMatrix, d_y: &DistanceMatrix) -> Result<f64> {
    if d_geo.n() != d_y.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} rows",
            d_geo.n(),
            d_y.n()
        )));
    }
    let n = d_geo.n();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            xs.push(d_geo.get(i, j));
            ys.push(d_y.get(i, j));
        }
    }
    if xs.is_empty() {
        return Err(Error::InvalidParam("need at least two points".into()));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantMatrix);
    }
    let r2 = (sxy * sxy) / (sxx * syy);
    Ok((1.0 - r2).clamp(0.0, 1.0))
}
