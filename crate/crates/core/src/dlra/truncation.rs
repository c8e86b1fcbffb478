use nalgebra::{DMatrix, DVector};

use super::{Factors, TruncationPolicy};
use crate::discretization::VelocityGrid;
use crate::linalg::{canonicalize_signs, hcat, svd_sorted, thin_qr};

/// Directions of `(I - z zᵀ) V̂` with singular values below this are treated
/// as the null direction created by the projection.
const NULL_DIRECTION_TOL: f64 = 1e-12;

/// Smallest `r` in `1..=k` with `(sum_{j >= r} s_j^2)^{1/2} <= theta`, capped
/// at `cap`. Returns 0 only when there are no singular values.
pub fn select_rank(singular_values: &[f64], theta: f64, cap: usize) -> usize {
    let k = singular_values.len();
    if k == 0 {
        return 0;
    }
    // tail[r] = sum_{j >= r} s_j^2
    let mut tail = vec![0.0; k + 1];
    for j in (0..k).rev() {
        tail[j] = tail[j + 1] + singular_values[j] * singular_values[j];
    }
    let theta_sq = theta * theta;
    let r = (1..=k).find(|&r| tail[r] <= theta_sq).unwrap_or(k);
    r.min(cap.max(1))
}

/// Rank-revealing truncation of `xbig s_big vbigᵀ` with the tail criterion
/// `theta = theta_coeff * sigma_max(s_big)`.
pub fn truncate_standard(
    xbig: &DMatrix<f64>,
    s_big: &DMatrix<f64>,
    vbig: &DMatrix<f64>,
    policy: &TruncationPolicy,
) -> Factors {
    truncate_with_cap(xbig, s_big, vbig, policy.theta_coeff, policy.r_max)
}

fn truncate_with_cap(
    xbig: &DMatrix<f64>,
    s_big: &DMatrix<f64>,
    vbig: &DMatrix<f64>,
    theta_coeff: f64,
    cap: usize,
) -> Factors {
    let svd = svd_sorted(s_big);
    let sv = svd.singular_values.as_slice();
    let theta = theta_coeff * sv.first().copied().unwrap_or(0.0);
    let r = select_rank(sv, theta, cap);
    let mut x = xbig * svd.u.columns(0, r);
    let mut v = vbig * svd.v.columns(0, r);
    let mut s = DMatrix::from_diagonal(&DVector::from_column_slice(&sv[..r]));
    canonicalize_signs(&mut x, &mut s, &mut v);
    Factors { x, s, v }
}

/// Moment direction `z = Z / ‖Z‖` with `Z_k = w_half_k / c_d`.
pub fn moment_direction(vgrid: &VelocityGrid) -> DVector<f64> {
    let z = DVector::from_column_slice(&vgrid.w_half);
    let n = z.norm();
    z / n
}

/// Result of the moment-preserving truncation, with the pieces it was built
/// from so callers can inspect them.
#[derive(Debug, Clone)]
pub struct ConservativeTruncation {
    pub factors: Factors,
    /// Rank-one part along the moment direction, kept exactly.
    pub h1: Factors,
    /// Moment-free remainder before truncation.
    pub h2: Factors,
    /// Truncated remainder.
    pub h2_kept: Factors,
    /// Absolute threshold used on the remainder.
    pub threshold: f64,
}

impl ConservativeTruncation {
    /// Rank of the truncated remainder.
    pub fn remainder_rank(&self) -> usize {
        self.h2_kept.rank()
    }
}

/// Split `xbig s_big vbigᵀ = H1 + H2` with `H1 = g z zᵀ` and `H2 z = 0`, keep
/// `H1` exactly and truncate `H2` with the standard criterion on its own
/// singular values. The result has rank `rank(H2 kept) + 1` and the same
/// moment `g Z` as the input.
pub fn truncate_conservative(
    xbig: &DMatrix<f64>,
    s_big: &DMatrix<f64>,
    vbig: &DMatrix<f64>,
    vgrid: &VelocityGrid,
    policy: &TruncationPolicy,
) -> ConservativeTruncation {
    let z = moment_direction(vgrid);

    // H1 = xbig y zᵀ with y = s_big vbigᵀ z
    let y = s_big * (vbig.transpose() * &z);
    let s1 = y.norm();
    let coeff = if s1 > 0.0 {
        &y / s1
    } else {
        let mut e = DVector::zeros(y.len());
        e[0] = 1.0;
        e
    };
    let x1 = xbig * &coeff;
    let h1 = Factors {
        x: DMatrix::from_column_slice(x1.len(), 1, x1.as_slice()),
        s: DMatrix::from_element(1, 1, s1),
        v: DMatrix::from_column_slice(z.len(), 1, z.as_slice()),
    };

    // H2 = xbig s_big ((I - z zᵀ) vbig)ᵀ, factored through an SVD of the
    // projected basis so the velocity factor is orthogonal to z.
    let w = vbig - &z * (z.transpose() * vbig);
    let w_svd = svd_sorted(&w);
    let keep = w_svd
        .singular_values
        .iter()
        .take_while(|&&s| s > NULL_DIRECTION_TOL)
        .count();
    let qw = w_svd.u.columns(0, keep).into_owned();
    let rw = DMatrix::from_diagonal(&w_svd.singular_values.rows(0, keep).into_owned())
        * w_svd.v.columns(0, keep).transpose();
    let core2 = s_big * rw.transpose();
    let h2 = Factors { x: xbig.clone(), s: core2.clone(), v: qw.clone() };

    let sigma_max = svd_sorted(&core2).singular_values.iter().copied().next().unwrap_or(0.0);
    let threshold = policy.theta_coeff * sigma_max;
    let h2_kept = if keep == 0 {
        Factors {
            x: DMatrix::zeros(xbig.nrows(), 0),
            s: DMatrix::zeros(0, 0),
            v: DMatrix::zeros(vbig.nrows(), 0),
        }
    } else {
        truncate_with_cap(xbig, &core2, &qw, policy.theta_coeff, policy.r_max.saturating_sub(1))
    };

    let (qx, r1) = thin_qr(&hcat(&h1.x, &h2_kept.x));
    let (qv, r2) = thin_qr(&hcat(&h1.v, &h2_kept.v));
    let n = 1 + h2_kept.rank();
    let mut block = DMatrix::zeros(n, n);
    block[(0, 0)] = s1;
    block.view_mut((1, 1), (n - 1, n - 1)).copy_from(&h2_kept.s);
    let core = &r1 * block * r2.transpose();
    let factors = square_up(qx, core, qv);

    ConservativeTruncation { factors, h1, h2, h2_kept, threshold }
}

/// Bring `x s vᵀ` to a square core; only needed when one of the bases ran out
/// of rows during recombination.
fn square_up(x: DMatrix<f64>, s: DMatrix<f64>, v: DMatrix<f64>) -> Factors {
    let (mut x, mut s, mut v) = if s.is_square() {
        (x, s, v)
    } else {
        let svd = svd_sorted(&s);
        let k = svd.singular_values.len();
        (
            x * svd.u,
            DMatrix::from_diagonal(&svd.singular_values),
            v * svd.v.columns(0, k),
        )
    };
    canonicalize_signs(&mut x, &mut s, &mut v);
    Factors { x, s, v }
}
