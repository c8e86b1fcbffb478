//! Small dense linear algebra helpers on top of `nalgebra` (QR and SVD via
//! `faer`).

use nalgebra::{DMatrix, DVector};

/// Thin QR factorization `a = q r` with `q` of size `m x min(m, n)` having
/// orthonormal columns. Signs are fixed so that the largest-magnitude entry
/// of every column of `q` is positive (the matching row of `r` is flipped).
pub fn thin_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if n == 0 {
        return (DMatrix::zeros(m, 0), DMatrix::zeros(0, 0));
    }
    let (mut q, mut r) = householder_qr(a);
    let k = q.ncols();
    let mut q_err = orthonormality_error(&q);
    if q_err > 1e-12 {
        // second pass; q = q2 r2, a = q2 (r2 r)
        let (q2, r2) = householder_qr(&q);
        q = q2;
        r = r2 * r;
        q_err = orthonormality_error(&q);
        debug_assert!(q_err <= 1e-10, "re-orthonormalization failed: {q_err:e}");
    }
    for c in 0..k {
        if column_sign(&q, c) < 0.0 {
            q.column_mut(c).neg_mut();
            r.row_mut(c).neg_mut();
        }
    }
    (q, r)
}

/// Blocked Householder QR from faer; nalgebra's unblocked version is several
/// times slower on the tall `n x 2r` bases of the integrator.
fn householder_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let qr = faer::MatRef::from_column_major_slice(a.as_slice(), m, n).qr();
    let (q, r) = (qr.compute_thin_Q(), qr.thin_R());
    let k = m.min(n);
    (DMatrix::from_fn(m, k, |i, j| q[(i, j)]), DMatrix::from_fn(k, n, |i, j| r[(i, j)]))
}

/// Orthonormal basis for the span of the columns of `a` (thin QR factor).
pub fn orthonormal_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    thin_qr(a).0
}

/// `‖QᵀQ − I‖_F`.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let g = q.transpose() * q;
    let n = g.nrows();
    (g - DMatrix::<f64>::identity(n, n)).norm()
}

/// Sign of the largest-magnitude entry of column `c`; the first such entry
/// wins ties.
fn column_sign(m: &DMatrix<f64>, c: usize) -> f64 {
    let col = m.column(c);
    let mut best = 0.0_f64;
    for &x in col.iter() {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Flip columns of `x` and `v` so their largest-magnitude entries are
/// positive, adjusting `s` to leave `x s vᵀ` unchanged.
pub fn canonicalize_signs(x: &mut DMatrix<f64>, s: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for c in 0..x.ncols() {
        if column_sign(x, c) < 0.0 {
            x.column_mut(c).neg_mut();
            s.row_mut(c).neg_mut();
        }
    }
    for c in 0..v.ncols() {
        if column_sign(v, c) < 0.0 {
            v.column_mut(c).neg_mut();
            s.column_mut(c).neg_mut();
        }
    }
}

/// Singular value decomposition `a = u diag(s) vᵀ` with singular values in
/// non-increasing order; `u` is `m x k`, `v` is `n x k`, `k = min(m, n)`.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_sorted(a: &DMatrix<f64>) -> SortedSvd {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return SortedSvd {
            u: DMatrix::zeros(m, 0),
            singular_values: DVector::zeros(0),
            v: DMatrix::zeros(n, 0),
        };
    }
    // nalgebra's bidiagonal SVD can return inconsistent factors for
    // rank-deficient input, so the decomposition is done by faer.
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let svd = fa.thin_svd().expect("svd of a finite matrix");
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| fs[j].total_cmp(&fs[i]));
    let u = DMatrix::from_fn(m, k, |r, c| fu[(r, order[c])]);
    let v = DMatrix::from_fn(n, k, |r, c| fv[(r, order[c])]);
    let singular_values = DVector::from_fn(k, |c, _| fs[order[c]]);
    SortedSvd { u, singular_values, v }
}

/// `diag(d) m`.
pub fn scale_rows(d: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    scale_rows_mut(d, &mut out);
    out
}

pub fn scale_rows_mut(d: &[f64], m: &mut DMatrix<f64>) {
    debug_assert_eq!(d.len(), m.nrows());
    let n = m.nrows();
    for col in m.as_mut_slice().chunks_exact_mut(n) {
        for (x, s) in col.iter_mut().zip(d) {
            *x *= s;
        }
    }
}

/// `aᵀ diag(d) b`.
pub fn weighted_gram(a: &DMatrix<f64>, d: &[f64], b: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * scale_rows(d, b)
}

/// Horizontal concatenation `[a, b]`.
pub fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "hcat row mismatch");
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}
