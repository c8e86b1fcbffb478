use nalgebra::{DMatrix, DVector};

use crate::discretization::VelocityGrid;
use crate::linalg::{hcat, orthonormal_basis, scale_rows};

/// Orthonormal basis containing the columns of `new` and `old_basis`, and the
/// projection `basisᵀ old_basis` of the old basis onto it.
///
/// The basis has `min(rows, 2r)` columns; dependent input columns are
/// completed by arbitrary orthonormal directions.
pub fn augment_2r(new: &DMatrix<f64>, old_basis: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let basis = orthonormal_basis(&hcat(new, old_basis));
    let proj = basis.transpose() * old_basis;
    (basis, proj)
}

/// Second augmentation used by the norm-stable variant: the spatial basis
/// gains `diag(rho'^2) X̂`, the velocity basis gains `diag(w_half) V̂`.
pub fn augment_4r(
    xhat: &DMatrix<f64>,
    rho_next: &DVector<f64>,
    vhat: &DMatrix<f64>,
    vgrid: &VelocityGrid,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let rho_sq: Vec<f64> = rho_next.iter().map(|r| r * r).collect();
    let x = orthonormal_basis(&hcat(xhat, &scale_rows(&rho_sq, xhat)));
    let v = orthonormal_basis(&hcat(vhat, &scale_rows(&vgrid.w_half, vhat)));
    (x, v)
}
