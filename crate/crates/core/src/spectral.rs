//! Moment-system matrices and transforms between velocity and moment space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hermite::{eval_phi_all, QuadratureSet};
use crate::linalg;

/// Collision operator variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Collision {
    /// Conserves `g_0, g_1`.
    Q1,
    /// Conserves `g_0, g_1, g_2`.
    Q2,
}

impl Collision {
    pub fn block_size(self) -> usize {
        match self {
            Collision::Q1 => 2,
            Collision::Q2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Collision::Q1 => "Q1",
            Collision::Q2 => "Q2",
        }
    }
}

impl std::str::FromStr for Collision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Q1" => Ok(Collision::Q1),
            "Q2" => Ok(Collision::Q2),
            other => Err(Error::config(format!(
                "unknown collision variant '{other}'"
            ))),
        }
    }
}

/// `α_p = √p`.
pub fn alpha(p: usize) -> f64 {
    (p as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct MomentSystem {
    pub quadrature: QuadratureSet,
    pub collision: Collision,
    pub a: DMatrix<f64>,
    /// Diagonal of the collision matrix.
    pub q_diag: Vec<f64>,
    /// `v[(i, k)] = φ_i(v_k)`.
    pub v: DMatrix<f64>,
    /// Half weights `w_1..w_N`.
    pub w: Vec<f64>,
    pub block: usize,
    pub a11: DMatrix<f64>,
    pub a12: DMatrix<f64>,
    pub a22: DMatrix<f64>,
}

pub fn build_system(quadrature: QuadratureSet, collision: Collision) -> Result<MomentSystem> {
    let m = 2 * quadrature.n_half;
    let block = collision.block_size();
    if m < block {
        return Err(Error::config(format!(
            "collision {} needs at least {block} moments, N = {} gives {m}",
            collision.name(),
            quadrature.n_half
        )));
    }
    let mut a = DMatrix::zeros(m, m);
    for p in 1..m {
        a[(p - 1, p)] = alpha(p);
        a[(p, p - 1)] = alpha(p);
    }
    let q_diag = (0..m).map(|i| if i < block { 0.0 } else { -1.0 }).collect();
    let mut v = DMatrix::zeros(m, m);
    for (k, &vk) in quadrature.nodes.iter().enumerate() {
        for (i, phi) in eval_phi_all(m - 1, vk).into_iter().enumerate() {
            v[(i, k)] = phi;
        }
    }
    let a11 = a.view((0, 0), (block, block)).into_owned();
    let a12 = a.view((0, block), (block, m - block)).into_owned();
    let a22 = a.view((block, block), (m - block, m - block)).into_owned();
    let w = quadrature.weights.clone();
    Ok(MomentSystem {
        quadrature,
        collision,
        a,
        q_diag,
        v,
        w,
        block,
        a11,
        a12,
        a22,
    })
}

impl MomentSystem {
    pub fn dim(&self) -> usize {
        2 * self.quadrature.n_half
    }

    pub fn n_half(&self) -> usize {
        self.quadrature.n_half
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.q_diag.clone()))
    }

    /// `w_k` aligned with all `2N` nodes.
    pub fn full_weights(&self) -> Vec<f64> {
        self.quadrature.full_weights()
    }

    /// `G = V diag(W, W) F`.
    pub fn moments_from_dvm(&self, f: &[f64]) -> Vec<f64> {
        let m = self.dim();
        let w = self.full_weights();
        (0..m)
            .map(|i| (0..m).map(|k| self.v[(i, k)] * w[k] * f[k]).sum())
            .collect()
    }

    /// `F = V^T G`.
    pub fn dvm_from_moments(&self, g: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|k| (0..m).map(|i| self.v[(i, k)] * g[i]).sum())
            .collect()
    }

    /// `‖V diag(W,W) V^T − I‖_max`.
    pub fn orthogonality_residual(&self) -> f64 {
        let m = self.dim();
        let wd = DMatrix::from_diagonal(&DVector::from_vec(self.full_weights()));
        (&self.v * wd * self.v.transpose() - DMatrix::identity(m, m)).amax()
    }

    /// `‖A V − V diag(−Λ, Λ)‖_max`.
    pub fn spectral_residual(&self) -> f64 {
        let nodes = DVector::from_vec(self.quadrature.nodes.clone());
        (&self.a * &self.v - &self.v * DMatrix::from_diagonal(&nodes)).amax()
    }

    /// `‖A12^T A11^{-1} A12‖_max`; only meaningful for Q1 where `A11` is invertible.
    pub fn q1_block_identity_residual(&self) -> Option<f64> {
        let inv = self.a11.clone().try_inverse()?;
        Some((self.a12.transpose() * inv * &self.a12).amax())
    }
}

/// Characteristic structure of `A11`.
#[derive(Debug, Clone)]
pub struct CharDecomposition {
    pub lambda: f64,
    pub p_plus: DVector<f64>,
    pub p_minus: DVector<f64>,
    pub p_zero: Option<DVector<f64>>,
    /// Columns `(P+, P−)`.
    pub p1: DMatrix<f64>,
    /// `diag(λ, −λ)`.
    pub lambda1: DMatrix<f64>,
}

impl CharDecomposition {
    /// Families as (vector, speed): `+` first, then `0` when present, then `−`.
    pub fn families(&self) -> Vec<(DVector<f64>, f64)> {
        let mut out = vec![(self.p_plus.clone(), self.lambda)];
        if let Some(p0) = &self.p_zero {
            out.push((p0.clone(), 0.0));
        }
        out.push((self.p_minus.clone(), -self.lambda));
        out
    }
}

pub fn char_decomposition(sys: &MomentSystem) -> CharDecomposition {
    let s2 = std::f64::consts::SQRT_2;
    match sys.collision {
        Collision::Q1 => {
            let lambda = alpha(1);
            let p_plus = DVector::from_vec(vec![1.0 / s2, 1.0 / s2]);
            let p_minus = DVector::from_vec(vec![1.0 / s2, -1.0 / s2]);
            finish(lambda, p_plus, p_minus, None)
        }
        Collision::Q2 => {
            let (a1, a2) = (alpha(1), alpha(2));
            let lambda = (a1 * a1 + a2 * a2).sqrt();
            let c = 1.0 / (s2 * lambda);
            let p_plus = DVector::from_vec(vec![a1 * c, lambda * c, a2 * c]);
            let p_minus = DVector::from_vec(vec![a1 * c, -lambda * c, a2 * c]);
            let p_zero = DVector::from_vec(vec![a2 / lambda, 0.0, -a1 / lambda]);
            finish(lambda, p_plus, p_minus, Some(p_zero))
        }
    }
}

fn finish(
    lambda: f64,
    p_plus: DVector<f64>,
    p_minus: DVector<f64>,
    p_zero: Option<DVector<f64>>,
) -> CharDecomposition {
    let b = p_plus.len();
    let mut p1 = DMatrix::zeros(b, 2);
    p1.set_column(0, &p_plus);
    p1.set_column(1, &p_minus);
    let lambda1 = DMatrix::from_diagonal(&DVector::from_vec(vec![lambda, -lambda]));
    CharDecomposition {
        lambda,
        p_plus,
        p_minus,
        p_zero,
        p1,
        lambda1,
    }
}

/// Matrix governing the homogeneous kinetic layer: `A22 − A12^T A11^{-1} A12`
/// for Q1, the trailing tridiagonal block `Ã_H` (entries `α_5..α_{2N−1}`) for Q2.
pub fn layer_matrix(sys: &MomentSystem) -> DMatrix<f64> {
    match sys.collision {
        Collision::Q1 => {
            let inv = sys.a11.clone().try_inverse().expect("Q1 A11 is invertible");
            &sys.a22 - sys.a12.transpose() * inv * &sys.a12
        }
        Collision::Q2 => {
            let m = sys.dim();
            let d = m.saturating_sub(4);
            let mut h = DMatrix::zeros(d, d);
            for i in 1..d {
                h[(i - 1, i)] = alpha(4 + i);
                h[(i, i - 1)] = alpha(4 + i);
            }
            h
        }
    }
}

/// Decaying eigen-directions of a layer matrix.
#[derive(Debug, Clone)]
pub struct StableSubspace {
    pub matrix: DMatrix<f64>,
    pub r_minus: DMatrix<f64>,
    /// Positive eigenvalues `μ_j`, ascending.
    pub mu: Vec<f64>,
    /// `1/μ_j`.
    pub decay_rates: Vec<f64>,
}

pub fn stable_subspace(matrix: &DMatrix<f64>) -> Result<StableSubspace> {
    let d = matrix.nrows();
    if d == 0 {
        return Ok(StableSubspace {
            matrix: matrix.clone(),
            r_minus: DMatrix::zeros(0, 0),
            mu: vec![],
            decay_rates: vec![],
        });
    }
    let eig = linalg::symmetric_eigen(matrix)?;
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    if eig.values.iter().any(|l| l.abs() < 1e-12 * scale) {
        return Err(Error::numerical("layer matrix is singular"));
    }
    let pos: Vec<usize> = (0..d).filter(|&j| eig.values[j] > 0.0).collect();
    let mut r_minus = DMatrix::zeros(d, pos.len());
    for (c, &j) in pos.iter().enumerate() {
        r_minus.set_column(c, &eig.vectors.column(j));
    }
    let mu: Vec<f64> = pos.iter().map(|&j| eig.values[j]).collect();
    let decay_rates = mu.iter().map(|m| 1.0 / m).collect();
    Ok(StableSubspace {
        matrix: matrix.clone(),
        r_minus,
        mu,
        decay_rates,
    })
}

/// `(ρ, q, S)` with `ρ = g_0`, `q = g_1`, `S = √2 g_2 + g_0`.
pub fn macroscopic(g: &[f64]) -> (f64, f64, f64) {
    let g2 = g.get(2).copied().unwrap_or(0.0);
    (
        g[0],
        g.get(1).copied().unwrap_or(0.0),
        std::f64::consts::SQRT_2 * g2 + g[0],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::build_quadrature;

    fn sys(n: usize, c: Collision) -> MomentSystem {
        build_system(build_quadrature(n).unwrap(), c).unwrap()
    }

    #[test]
    fn n2_matrices() {
        let s = sys(2, Collision::Q1);
        assert!((s.a[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((s.a[(1, 2)] - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.a[(2, 3)] - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.q_diag, vec![0.0, 0.0, -1.0, -1.0]);
        assert_eq!(sys(2, Collision::Q2).q_diag, vec![0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn transforms() {
        let s = sys(1, Collision::Q1);
        let g = s.moments_from_dvm(&[0.0, 1.0]);
        assert!((g[0] - 0.5).abs() < 1e-14 && (g[1] - 0.5).abs() < 1e-14);
        let s = sys(3, Collision::Q2);
        let g = s.moments_from_dvm(&[1.0; 6]);
        assert!((g[0] - 1.0).abs() < 1e-13);
        assert!(g[1..].iter().all(|x| x.abs() < 1e-13));
        let f = s.dvm_from_moments(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        for (fk, vk) in f.iter().zip(&s.quadrature.nodes) {
            assert!((fk - vk).abs() < 1e-13);
        }
    }

    #[test]
    fn char_q2() {
        let s = sys(3, Collision::Q2);
        let c = char_decomposition(&s);
        assert!((c.lambda - 3f64.sqrt()).abs() < 1e-15);
        let p0 = c.p_zero.clone().unwrap();
        assert!((&s.a11 * &p0).amax() < 1e-15);
        assert!((&s.a11 * &c.p_plus - &c.p_plus * c.lambda).amax() < 1e-15);
        let k = (p0.transpose() * &s.a12 * s.a12.transpose() * &p0)[(0, 0)];
        assert!((k - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stable_subspaces() {
        let s = stable_subspace(&layer_matrix(&sys(2, Collision::Q1))).unwrap();
        assert_eq!(s.mu.len(), 1);
        assert!((s.decay_rates[0] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        let h = 1.0 / 2f64.sqrt();
        assert!((s.r_minus[(0, 0)] - h).abs() < 1e-14 && (s.r_minus[(1, 0)] - h).abs() < 1e-14);
        let s = stable_subspace(&layer_matrix(&sys(3, Collision::Q2))).unwrap();
        assert!((s.decay_rates[0] - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        let s = stable_subspace(&layer_matrix(&sys(3, Collision::Q1))).unwrap();
        assert_eq!(s.mu.len(), 2);
    }

    #[test]
    fn macroscopic_conventions() {
        assert_eq!(macroscopic(&[1.0, 0.0, 0.0, 0.0]), (1.0, 0.0, 1.0));
        assert_eq!(macroscopic(&[0.0, 1.0, 0.0, 0.0]), (0.0, 1.0, 0.0));
        let (_, _, s) = macroscopic(&[0.0, 0.0, 1.0, 0.0]);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
