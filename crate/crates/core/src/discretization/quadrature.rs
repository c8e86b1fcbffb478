//! Gauss-Hermite velocity grids.
//!
//! Nodes are the eigenvalues of the symmetric Jacobi matrix of the Hermite
//! recurrence (Golub-Welsch), refined by Newton steps on the normalized
//! Hermite function `psi_n`. Weights are never formed as `omega_k` directly:
//! the scaled weight `omega_k e^{v_k^2} = 1 / sum_{j<n} psi_j(v_k)^2` is
//! bounded for every node, which keeps `omega_k e^{3 v_k^2 / 2}` finite up to
//! several hundred nodes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const QL_MAX_SWEEPS: usize = 60;
const NEWTON_MAX_ITERS: usize = 12;
const RESCALE_THRESHOLD: f64 = 1e150;

/// Velocity quadrature together with the exponential weight vectors used by
/// every moment and norm.
///
/// For a tensor grid in `d` velocity dimensions, node `k` has components
/// `components[a][k]`, `a < d`, with the first axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub n_v: usize,
    /// Node components, one vector of length `n_v` per velocity axis.
    pub components: Vec<Vec<f64>>,
    /// Raw Gauss-Hermite weights for the weight function `e^{-|v|^2}`.
    pub weights: Vec<f64>,
    /// `omega_k e^{|v_k|^2 / 2}`, normalized so that the discrete Maxwellian
    /// has unit mass: `sum_k w_half_k = (2 pi)^{d/2}`.
    pub w_half: Vec<f64>,
    /// `omega_k e^{|v_k|^2}` with the same normalization factor.
    pub w_full: Vec<f64>,
    /// `omega_k e^{3 |v_k|^2 / 2}` with the same normalization factor.
    pub w_three_half: Vec<f64>,
    /// Velocity bound entering the CFL rule, `max_k |v_k|` (Euclidean).
    pub v_cap: f64,
}

impl VelocityGrid {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Node values of a one-dimensional grid (first component otherwise).
    pub fn nodes(&self) -> &[f64] {
        &self.components[0]
    }

    /// `(2 pi)^{d/2}`, the Maxwellian normalization in `d` velocity dimensions.
    pub fn maxwellian_norm(&self) -> f64 {
        (2.0 * PI).powf(self.dim() as f64 / 2.0)
    }

    /// `|v_k|^2` summed over components.
    pub fn speed_sq(&self) -> Vec<f64> {
        (0..self.n_v)
            .map(|k| self.components.iter().map(|c| c[k] * c[k]).sum())
            .collect()
    }

    /// Discrete unit mass `(2 pi)^{-d/2} sum_k w_half_k`.
    pub fn unit_mass(&self) -> f64 {
        self.w_half.iter().sum::<f64>() / self.maxwellian_norm()
    }
}

/// One-dimensional Gauss-Hermite rule with `n_v` nodes.
pub fn gauss_hermite_rule(n_v: usize) -> Result<VelocityGrid> {
    if n_v == 0 {
        return Err(Error::InvalidArgument("n_v must be at least 1".into()));
    }
    let rule = HermiteRule::compute(n_v)?;
    Ok(rule.into_grid())
}

/// Tensor product of two one-dimensional rules, flattened with the first axis
/// varying fastest. `v_cap` is the largest Euclidean node norm.
pub fn tensor_velocity_grid_2d(n_v1: usize, n_v2: usize) -> Result<VelocityGrid> {
    if n_v1 == 0 || n_v2 == 0 {
        return Err(Error::InvalidArgument("n_v1 and n_v2 must be at least 1".into()));
    }
    let r1 = HermiteRule::compute(n_v1)?;
    let r2 = if n_v2 == n_v1 { r1.clone() } else { HermiteRule::compute(n_v2)? };
    let n = n_v1 * n_v2;
    let mut c1 = Vec::with_capacity(n);
    let mut c2 = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut w_half = Vec::with_capacity(n);
    let mut w_full = Vec::with_capacity(n);
    let mut w_three_half = Vec::with_capacity(n);
    let (h1, f1, t1) = r1.derived();
    let (h2, f2, t2) = r2.derived();
    for l in 0..n_v2 {
        for k in 0..n_v1 {
            c1.push(r1.nodes[k]);
            c2.push(r2.nodes[l]);
            weights.push((r1.log_weights[k] + r2.log_weights[l]).exp());
            w_half.push(h1[k] * h2[l]);
            w_full.push(f1[k] * f2[l]);
            w_three_half.push(t1[k] * t2[l]);
        }
    }
    let v_cap = c1
        .iter()
        .zip(&c2)
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    Ok(VelocityGrid {
        n_v: n,
        components: vec![c1, c2],
        weights,
        w_half,
        w_full,
        w_three_half,
        v_cap,
    })
}

#[derive(Debug, Clone)]
struct HermiteRule {
    nodes: Vec<f64>,
    /// `omega_k e^{v_k^2}`.
    scaled_weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl HermiteRule {
    fn compute(n: usize) -> Result<Self> {
        let mut nodes = jacobi_eigenvalues(n)?;
        nodes.sort_by(|a, b| a.total_cmp(b));
        for (index, x) in nodes.iter_mut().enumerate() {
            *x = newton_polish(n, *x, index)?;
        }
        antisymmetrize(&mut nodes);

        let mut scaled_weights: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let eval = HermiteEval::at(n, x);
                (-2.0 * eval.log_scale - eval.sum_sq.ln()).exp()
            })
            .collect();
        symmetrize(&mut scaled_weights);
        let log_weights = nodes
            .iter()
            .zip(&scaled_weights)
            .map(|(x, w)| w.ln() - x * x)
            .collect();
        Ok(Self { nodes, scaled_weights, log_weights })
    }

    /// `(w_half, w_full, w_three_half)` including the unit-mass normalization.
    fn derived(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let damp: Vec<f64> = self.nodes.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let raw_half: Vec<f64> = self.scaled_weights.iter().zip(&damp).map(|(w, d)| w * d).collect();
        let mass: f64 = raw_half.iter().sum();
        let scale = (2.0 * PI).sqrt() / mass;
        let w_half = raw_half.iter().map(|w| w * scale).collect();
        let w_full = self.scaled_weights.iter().map(|w| w * scale).collect();
        let w_three_half = self
            .scaled_weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, x)| w * (0.5 * x * x).exp() * scale)
            .collect();
        (w_half, w_full, w_three_half)
    }

    fn into_grid(self) -> VelocityGrid {
        let (w_half, w_full, w_three_half) = self.derived();
        let weights = self.log_weights.iter().map(|l| l.exp()).collect();
        let v_cap = self.nodes.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        VelocityGrid {
            n_v: self.nodes.len(),
            components: vec![self.nodes],
            weights,
            w_half,
            w_full,
            w_three_half,
            v_cap,
        }
    }
}

/// Make the node set exactly antisymmetric about the origin.
fn antisymmetrize(nodes: &mut [f64]) {
    let n = nodes.len();
    for k in 0..n / 2 {
        let m = 0.5 * (nodes[k] - nodes[n - 1 - k]);
        nodes[k] = m;
        nodes[n - 1 - k] = -m;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

fn symmetrize(weights: &mut [f64]) {
    let n = weights.len();
    for k in 0..n / 2 {
        let m = 0.5 * (weights[k] + weights[n - 1 - k]);
        weights[k] = m;
        weights[n - 1 - k] = m;
    }
}

/// Normalized Hermite functions evaluated by the three-term recurrence with a
/// running exponent so that neither `e^{-x^2/2}` nor the growing polynomial
/// part leaves the double range.
struct HermiteEval {
    /// scaled `psi_n(x)`
    psi_n: f64,
    /// scaled `psi_{n-1}(x)`
    psi_nm1: f64,
    /// scaled `sum_{j<n} psi_j(x)^2` (scale applied twice)
    sum_sq: f64,
    /// true value = scaled value * e^{log_scale}
    log_scale: f64,
}

impl HermiteEval {
    fn at(n: usize, x: f64) -> Self {
        let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
        let mut prev = 0.0;
        let mut cur = 1.0;
        let mut sum_sq = 0.0;
        for j in 0..n {
            sum_sq += cur * cur;
            let jf = j as f64;
            let next = (2.0 / (jf + 1.0)).sqrt() * x * cur - (jf / (jf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE_THRESHOLD {
                let inv = 1.0 / RESCALE_THRESHOLD;
                prev *= inv;
                cur *= inv;
                sum_sq *= inv * inv;
                log_scale += RESCALE_THRESHOLD.ln();
            }
        }
        Self { psi_n: cur, psi_nm1: prev, sum_sq, log_scale }
    }
}

fn newton_polish(n: usize, mut x: f64, index: usize) -> Result<f64> {
    let nf = n as f64;
    let mut last_step = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITERS {
        let e = HermiteEval::at(n, x);
        // psi_n' = sqrt(2n) psi_{n-1} - x psi_n
        let deriv = (2.0 * nf).sqrt() * e.psi_nm1 - x * e.psi_n;
        if deriv == 0.0 {
            break;
        }
        let step = e.psi_n / deriv;
        x -= step;
        last_step = step.abs();
        if last_step <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    if last_step <= 1e-12 * x.abs().max(1.0) {
        Ok(x)
    } else {
        Err(Error::QuadratureNoConvergence { index, residual: last_step })
    }
}

/// Eigenvalues of the Jacobi matrix with zero diagonal and off-diagonal
/// `sqrt(k/2)`, by the implicit QL algorithm with Wilkinson shifts.
fn jacobi_eigenvalues(n: usize) -> Result<Vec<f64>> {
    let mut d = vec![0.0_f64; n];
    // e[i] couples d[i] and d[i+1]
    let mut e: Vec<f64> = (1..=n).map(|k| if k < n { (k as f64 / 2.0).sqrt() } else { 0.0 }).collect();

    for l in 0..n {
        let mut iter = 0;
        loop {
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
            if iter > QL_MAX_SWEEPS {
                return Err(Error::QuadratureNoConvergence { index: l, residual: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}
