//! Dense linear-algebra kernels used by every embedding algorithm:
//! symmetric eigendecomposition, QR orthonormalization, regularized affine
//! least squares, and PCA.
//!
//! Everything here is a pure function over immutable inputs; values are safe
//! to share read-only across threads.

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty());
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows >= 1 && cols >= 1);
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (j, &b) in orow.iter().enumerate() {
                    out_row[j] += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Maximum absolute deviation from symmetry together with its position.
    pub fn symmetry_deviation(&self) -> (f64, usize, usize) {
        let mut dev = 0.0;
        let (mut bi, mut bj) = (0, 0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                let d = (self.get(i, j) - self.get(j, i)).abs();
                if d > dev {
                    dev = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        (dev, bi, bj)
    }
}

/// Eigenvalues (descending) with orthonormal, sign-fixed eigenvectors.
///
/// Vectors are the columns of `vectors`. The sign convention makes the
/// entry of largest magnitude in each vector nonnegative, ties broken by
/// lowest index, so decompositions are deterministic.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenPairs {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

/// An orthonormal rotation plus a translation; preserves all pairwise
/// distances exactly.
#[derive(Debug, Clone)]
pub struct RigidTransform {
    pub rotation: Matrix,
    pub translation: Vec<f64>,
}

impl RigidTransform {
    pub fn identity(d: usize) -> Self {
        RigidTransform {
            rotation: Matrix::identity(d),
            translation: vec![0.0; d],
        }
    }

    /// Applies `R x + t` to a single point.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.rotation.matvec(x);
        for (yi, ti) in y.iter_mut().zip(&self.translation) {
            *yi += ti;
        }
        y
    }

    /// Applies the transform to every row of a points-as-rows matrix.
    pub fn apply_rows(&self, pts: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(pts.rows(), pts.cols());
        for i in 0..pts.rows() {
            let y = self.apply(pts.row(i));
            out.row_mut(i).copy_from_slice(&y);
        }
        out
    }

    /// Max-abs deviation of `rotationᵀ·rotation` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let rtr = self.rotation.transpose().matmul(&self.rotation);
        let mut dev = 0.0f64;
        for i in 0..rtr.rows() {
            for j in 0..rtr.cols() {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((rtr.get(i, j) - target).abs());
            }
        }
        dev
    }
}

/// Fixes a vector's sign so its largest-magnitude entry (lowest index on
/// ties) is nonnegative.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = v[0].abs();
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

const SYMMETRY_TOL: f64 = 1e-10;

fn check_eig_input(m: &Matrix, top_d: usize) -> Result<usize> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let (dev, i, j) = m.symmetry_deviation();
    let scale = m.max_abs().max(1.0);
    if dev > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { i, j, max_dev: dev });
    }
    if top_d == 0 || top_d > n {
        return Err(Error::EigenCountOutOfRange {
            requested: top_d,
            n,
        });
    }
    Ok(n)
}

/// Sorts eigenpairs descending (stable), applies the sign convention and
/// keeps the top `top_d` columns.
fn finish_eigenpairs(
    diag: &[f64],
    vectors_are_columns: impl Fn(usize) -> Vec<f64>,
    n: usize,
    top_d: usize,
) -> EigenPairs {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        diag[y]
            .partial_cmp(&diag[x])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    let mut values = Vec::with_capacity(top_d);
    let mut vectors = Matrix::zeros(n, top_d);
    for (col, &idx) in order.iter().take(top_d).enumerate() {
        values.push(diag[idx]);
        let mut vec = vectors_are_columns(idx);
        fix_sign(&mut vec);
        for (row, &val) in vec.iter().enumerate() {
            vectors.set(row, col, val);
        }
    }
    EigenPairs { values, vectors }
}

/// Top `top_d` eigenpairs of a symmetric matrix: Householder reduction to
/// tridiagonal form followed by implicit-shift QL iteration, with the
/// orthogonal transforms accumulated into eigenvectors.
pub fn symmetric_eig(m: &Matrix, top_d: usize) -> Result<EigenPairs> {
    let n = check_eig_input(m, top_d)?;

    // Symmetrize exactly so rounding in the input cannot bias the reduction.
    let mut z = m.clone();
    for p in 0..n {
        for q in (p + 1)..n {
            let avg = 0.5 * (z.get(p, q) + z.get(q, p));
            z.set(p, q, avg);
            z.set(q, p, avg);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, &mut d, &mut e);
    ql_implicit(&mut z, &mut d, &mut e)?;

    Ok(finish_eigenpairs(&d, |idx| z.column(idx), n, top_d))
}

/// Householder reduction of a symmetric matrix to tridiagonal form; the
/// accumulated orthogonal transform replaces `z`, the diagonal lands in `d`
/// and the subdiagonal in `e[1..]`.
fn tridiagonalize(z: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = z.rows();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z.get(i, k).abs()).sum();
            if scale == 0.0 {
                e[i] = z.get(i, l);
            } else {
                for k in 0..=l {
                    let v = z.get(i, k) / scale;
                    z.set(i, k, v);
                    h += v * v;
                }
                let f = z.get(i, l);
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z.set(i, l, f - g);
                let mut f_acc = 0.0;
                for j in 0..=l {
                    z.set(j, i, z.get(i, j) / h);
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += z.get(j, k) * z.get(i, k);
                    }
                    for k in (j + 1)..=l {
                        g_acc += z.get(k, j) * z.get(i, k);
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * z.get(i, j);
                }
                let hh = f_acc / (2.0 * h);
                for j in 0..=l {
                    let f = z.get(i, j);
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let v = z.get(j, k) - (f * e[k] + g * z.get(i, k));
                        z.set(j, k, v);
                    }
                }
            }
        } else {
            e[i] = z.get(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    // Accumulate the transformation.
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z.get(i, k) * z.get(k, j);
                }
                for k in 0..i {
                    let v = z.get(k, j) - g * z.get(k, i);
                    z.set(k, j, v);
                }
            }
        }
        d[i] = z.get(i, i);
        z.set(i, i, 1.0);
        for j in 0..i {
            z.set(j, i, 0.0);
            z.set(i, j, 0.0);
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix, rotating the
/// accumulated transform's adjacent column pairs in step.
fn ql_implicit(z: &mut Matrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = z.rows();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // Look for a negligible subdiagonal element.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::InvalidParam(
                    "eigensolver failed to converge in 60 iterations".into(),
                ));
            }
            // Form the implicit shift.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m as isize - 1;
            while i >= l as isize {
                let iu = i as usize;
                let mut f = s * e[iu];
                let b = c * e[iu];
                r = f.hypot(g);
                e[iu + 1] = r;
                if r == 0.0 {
                    // Deflate: recover and restart this eigenvalue.
                    d[iu + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[iu + 1] - p;
                r = (d[iu] - g) * s + 2.0 * c * b;
                p = s * r;
                d[iu + 1] = g + p;
                g = c * r - b;
                // Rotate the adjacent eigenvector columns.
                for k in 0..n {
                    f = z.get(k, iu + 1);
                    z.set(k, iu + 1, s * z.get(k, iu) + c * f);
                    z.set(k, iu, c * z.get(k, iu) - s * f);
                }
                i -= 1;
            }
            if r == 0.0 && i >= l as isize {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Cyclic Jacobi eigendecomposition, kept as an independent cross-check for
/// the QL-based [`symmetric_eig`]. Convergence: off-diagonal Frobenius norm
/// below `1e-12 * ||M||_F`, at most 100 sweeps.
pub fn symmetric_eig_jacobi(m: &Matrix, top_d: usize) -> Result<EigenPairs> {
    let n = check_eig_input(m, top_d)?;

    // Only the upper triangle of the working copy is maintained; the
    // eigenvector accumulator is stored transposed (rows are vectors) so each
    // rotation touches two contiguous rows.
    let mut a = m.clone();
    for p in 0..n {
        for q in (p + 1)..n {
            let avg = 0.5 * (a.get(p, q) + a.get(q, p));
            a.set(p, q, avg);
        }
    }
    let mut vt = Matrix::identity(n);
    let norm = m.frobenius_norm();
    let threshold = 1e-12 * norm;

    for sweep in 0..100 {
        let mut off_sum = 0.0;
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sum += a.get(p, q).abs();
                off += a.get(p, q) * a.get(p, q);
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= threshold {
            break;
        }
        // Early sweeps only rotate pivots above a shrinking threshold; later
        // sweeps also zero pivots too small to move either eigenvalue.
        let sweep_threshold = if sweep < 3 {
            0.2 * off_sum / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let g = 100.0 * apq.abs();
                if sweep >= 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a.set(p, q, 0.0);
                    continue;
                }
                if apq.abs() <= sweep_threshold {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);

                // Both slots of each pair hold the symmetric value, so the
                // same rotation applies across the three index segments.
                let rot = move |x: f64, y: f64| (c * x - s * y, s * x + c * y);
                for j in 0..p {
                    let (x, y) = rot(a.get(j, p), a.get(j, q));
                    a.set(j, p, x);
                    a.set(j, q, y);
                }
                for j in (p + 1)..q {
                    let (x, y) = rot(a.get(p, j), a.get(j, q));
                    a.set(p, j, x);
                    a.set(j, q, y);
                }
                for j in (q + 1)..n {
                    let (x, y) = rot(a.get(p, j), a.get(q, j));
                    a.set(p, j, x);
                    a.set(q, j, y);
                }

                // row_p and row_q of Vᵀ rotate in place.
                let (head, tail) = vt.data.split_at_mut(q * n);
                let row_p = &mut head[p * n..p * n + n];
                let row_q = &mut tail[..n];
                for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
                    let x = c * *vp - s * *vq;
                    let y = s * *vp + c * *vq;
                    *vp = x;
                    *vq = y;
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    Ok(finish_eigenpairs(
        &diag,
        |idx| vt.row(idx).to_vec(),
        n,
        top_d,
    ))
}

/// QR factors with nonnegative diagonal of `R`, plus whether a diagonal
/// perturbation was needed to restore full rank.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: Matrix,
    pub r: Matrix,
    pub perturbed: bool,
}

/// QR decomposition of a square matrix by Householder reflections, with the
/// diagonal of `R` forced nonnegative (the corresponding columns of `Q` are
/// flipped). Rank-deficient input gets one diagonal-shift retry before
/// failing.
pub fn qr_orthonormalize(a: &Matrix) -> Result<QrFactors> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "QR orthonormalization needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    match householder_qr(a) {
        Some((q, r)) => Ok(QrFactors {
            q,
            r,
            perturbed: false,
        }),
        None => {
            let shift = 1e-8 * a.max_abs().max(1.0);
            let mut perturbed = a.clone();
            for i in 0..n {
                perturbed.set(i, i, perturbed.get(i, i) + shift);
            }
            match householder_qr(&perturbed) {
                Some((q, r)) => Ok(QrFactors {
                    q,
                    r,
                    perturbed: true,
                }),
                None => Err(Error::RankDeficient),
            }
        }
    }
}

/// Householder QR; returns `None` when a diagonal of `R` collapses to
/// (numerical) zero, i.e. the input is rank deficient.
fn householder_qr(a: &Matrix) -> Option<(Matrix, Matrix)> {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = Matrix::identity(n);
    let rank_tol = 1e-12 * a.max_abs().max(1.0);

    for k in 0..n {
        // Householder vector for column k below the diagonal.
        let mut norm = 0.0;
        for i in k..n {
            norm += r.get(i, k) * r.get(i, k);
        }
        let norm = norm.sqrt();
        if norm <= rank_tol {
            return None;
        }
        let alpha = if r.get(k, k) > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        for i in k..n {
            v[i] = r.get(i, k);
        }
        v[k] -= alpha;
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            // R <- (I - 2vvᵀ/vᵀv) R,  Q <- Q (I - 2vvᵀ/vᵀv)
            for j in k..n {
                let dot: f64 = (k..n).map(|i| v[i] * r.get(i, j)).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..n {
                    r.set(i, j, r.get(i, j) - f * v[i]);
                }
            }
            for i in 0..n {
                let dot: f64 = (k..n).map(|j| q.get(i, j) * v[j]).sum();
                let f = 2.0 * dot / vnorm2;
                for j in k..n {
                    q.set(i, j, q.get(i, j) - f * v[j]);
                }
            }
        }
        r.set(k, k, alpha);
        for i in (k + 1)..n {
            r.set(i, k, 0.0);
        }
    }

    // Force the diagonal of R nonnegative.
    for k in 0..n {
        if r.get(k, k) < 0.0 {
            for j in 0..n {
                r.set(k, j, -r.get(k, j));
            }
            for i in 0..n {
                q.set(i, k, -q.get(i, k));
            }
        }
        if r.get(k, k).abs() <= rank_tol {
            return None;
        }
    }
    Some((q, r))
}

/// Solves the regularized affine fit `(A β) = RY Zᵀ (Z Zᵀ + λI)⁻¹` with
/// `Z = [Y; eᵀ]`, mapping the columns of `Y` onto the columns of `RY`.
///
/// Returns the raw (not yet orthonormal) `A` and the translation `β`.
pub fn solve_affine_lsq(y: &Matrix, ry: &Matrix, lambda: f64) -> Result<(Matrix, Vec<f64>)> {
    let d = y.rows();
    let l = y.cols();
    if ry.rows() != d || ry.cols() != l {
        return Err(Error::ShapeMismatch(format!(
            "source is {}x{}, target is {}x{}",
            d,
            l,
            ry.rows(),
            ry.cols()
        )));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParam("lambda must be nonnegative".into()));
    }

    // Z = [Y; eᵀ] is (d+1) x l.
    let mut z = Matrix::zeros(d + 1, l);
    for i in 0..d {
        z.row_mut(i).copy_from_slice(y.row(i));
    }
    for j in 0..l {
        z.set(d, j, 1.0);
    }

    let zt = z.transpose();
    let mut normal = z.matmul(&zt);
    for i in 0..(d + 1) {
        normal.set(i, i, normal.get(i, i) + lambda);
    }
    let rhs = ry.matmul(&zt); // d x (d+1)

    // Solve normal · Xᵀ = rhsᵀ column by column.
    let solved =
        solve_linear_system(&normal, &rhs.transpose()).ok_or(Error::SingularNormalMatrix)?;
    let coeffs = solved.transpose(); // d x (d+1)

    let mut a = Matrix::zeros(d, d);
    let mut beta = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            a.set(i, j, coeffs.get(i, j));
        }
        beta[i] = coeffs.get(i, d);
    }
    if !a.all_finite() || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::SingularNormalMatrix);
    }
    Ok((a, beta))
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear_system(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.rows(), n);
    let m = b.cols();
    let mut aug = Matrix::zeros(n, n + m);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, a.get(i, j));
        }
        for j in 0..m {
            aug.set(i, n + j, b.get(i, j));
        }
    }
    let pivot_tol = 1e-14 * a.max_abs().max(1.0);
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if aug.get(row, col).abs() > aug.get(pivot, col).abs() {
                pivot = row;
            }
        }
        if aug.get(pivot, col).abs() <= pivot_tol {
            return None;
        }
        if pivot != col {
            for j in 0..(n + m) {
                let tmp = aug.get(col, j);
                aug.set(col, j, aug.get(pivot, j));
                aug.set(pivot, j, tmp);
            }
        }
        let p = aug.get(col, col);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = aug.get(row, col) / p;
            if f == 0.0 {
                continue;
            }
            for j in col..(n + m) {
                aug.set(row, j, aug.get(row, j) - f * aug.get(col, j));
            }
        }
    }
    let mut x = Matrix::zeros(n, m);
    for i in 0..n {
        let p = aug.get(i, i);
        for j in 0..m {
            x.set(i, j, aug.get(i, n + j) / p);
        }
    }
    Some(x)
}

/// Translation minimizing `Σᵢ ||A yᵢ + β − ryᵢ||²`: the mean of the per-point
/// residuals `ryᵢ − A yᵢ`.
pub fn recompute_translation(a: &Matrix, y: &Matrix, ry: &Matrix) -> Result<Vec<f64>> {
    let d = a.rows();
    let l = y.cols();
    if l == 0 || ry.cols() != l || y.rows() != d || ry.rows() != d {
        return Err(Error::ShapeMismatch(format!(
            "translation fit: A is {}x{}, Y is {}x{}, RY is {}x{}",
            a.rows(),
            a.cols(),
            y.rows(),
            y.cols(),
            ry.rows(),
            ry.cols()
        )));
    }
    let mut beta = vec![0.0; d];
    for t in 0..l {
        let col: Vec<f64> = (0..d).map(|i| y.get(i, t)).collect();
        let ay = a.matvec(&col);
        for i in 0..d {
            beta[i] += ry.get(i, t) - ay[i];
        }
    }
    for b in beta.iter_mut() {
        *b /= l as f64;
    }
    Ok(beta)
}

/// Mean-centers the rows of a points-as-rows matrix; returns the centered
/// matrix and the mean.
fn center_rows(x: &Matrix) -> (Matrix, Vec<f64>) {
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
    (c, mean)
}

/// Principal directions of the (optionally centered) point set, returned as
/// columns sorted by decreasing variance, sign-fixed. Also returns the
/// corresponding singular values.
fn principal_directions(points: &Matrix, center: bool) -> (Matrix, Vec<f64>) {
    let (work, _mean);
    let x = if center {
        (work, _mean) = center_rows(points);
        &work
    } else {
        points
    };
    let n = x.rows();
    let dim = x.cols();

    if dim <= n {
        // Scatter is dim x dim.
        let scatter = x.transpose().matmul(x);
        let eig = symmetric_eig(&scatter, dim).expect("scatter matrix is symmetric");
        let sigmas: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
        (eig.vectors, sigmas)
    } else {
        // Gram route for very wide data: directions recovered from Xᵀ u / σ.
        let gram = x.matmul(&x.transpose());
        let eig = symmetric_eig(&gram, n).expect("gram matrix is symmetric");
        let mut dirs = Matrix::zeros(dim, n);
        let mut sigmas = Vec::with_capacity(n);
        for c in 0..n {
            let sigma = eig.values[c].max(0.0).sqrt();
            sigmas.push(sigma);
            if sigma > 0.0 {
                let u = eig.vector(c);
                let mut dir: Vec<f64> = (0..dim)
                    .map(|j| (0..n).map(|i| x.get(i, j) * u[i]).sum::<f64>() / sigma)
                    .collect();
                fix_sign(&mut dir);
                for (j, &v) in dir.iter().enumerate() {
                    dirs.set(j, c, v);
                }
            }
        }
        (dirs, sigmas)
    }
}

/// Mean-centered projection of `x` (points as rows) onto its top `d`
/// principal directions.
pub fn pca_embed(x: &Matrix, d: usize) -> Result<Matrix> {
    let n = x.rows();
    let dim = x.cols();
    if n < 2 {
        return Err(Error::InvalidParam("PCA needs at least two points".into()));
    }
    if d < 1 || d > dim.min(n - 1) {
        return Err(Error::InvalidParam(format!(
            "PCA target dimension {d} out of range 1..={}",
            dim.min(n - 1)
        )));
    }
    let (centered, _mean) = center_rows(x);
    let (dirs, _sigmas) = principal_directions(&centered, false);
    let mut out = Matrix::zeros(n, d);
    for i in 0..n {
        for c in 0..d {
            let mut v = 0.0;
            for j in 0..dim {
                v += centered.get(i, j) * dirs.get(j, c);
            }
            out.set(i, c, v);
        }
    }
    Ok(out)
}

pub const SPAN_RANK_TOL: f64 = 1e-6;

/// Number of singular values of the centered point matrix exceeding
/// `tol` times the largest one; 0 for a single point or a degenerate set.
pub fn affine_span_rank(points: &Matrix, tol: f64) -> usize {
    if points.rows() < 2 {
        return 0;
    }
    let (centered, _mean) = center_rows(points);
    let (_dirs, sigmas) = principal_directions(&centered, false);
    let largest = sigmas.first().copied().unwrap_or(0.0);
    if largest <= 0.0 {
        return 0;
    }
    sigmas.iter().filter(|&&s| s > tol * largest).count()
}

/// Principal frame about the origin (uncentered scatter), used for the
/// rotation references of the composition step. Errors when fewer than
/// `dim` independent directions exist.
pub(crate) fn principal_frame_uncentered(points: &Matrix) -> Result<Matrix> {
    let dim = points.cols();
    let (dirs, sigmas) = principal_directions(points, false);
    let largest = sigmas.first().copied().unwrap_or(0.0);
    let rank = if largest > 0.0 {
        sigmas
            .iter()
            .filter(|&&s| s > SPAN_RANK_TOL * largest)
            .count()
    } else {
        0
    };
    if rank < dim || dirs.cols() < dim {
        return Err(Error::DegenerateReferences { rank, dim });
    }
    let mut frame = Matrix::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            frame.set(r, c, dirs.get(r, c));
        }
    }
    Ok(frame)
}
