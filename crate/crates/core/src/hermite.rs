//! Orthonormal probabilists' Hermite polynomials and Gauss–Hermite quadrature.

use crate::error::{Error, Result};
use crate::linalg;

/// Largest half node count accepted by [`build_quadrature`].
pub const MAX_HALF_NODES: usize = 16;

/// `φ_k(v)` by forward recurrence `v φ_k = √k φ_{k-1} + √(k+1) φ_{k+1}`.
pub fn eval_phi(k: usize, v: f64) -> f64 {
    *eval_phi_all(k, v).last().expect("non-empty")
}

/// `φ_0(v) .. φ_k(v)`.
pub fn eval_phi_all(k: usize, v: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0);
    if k >= 1 {
        out.push(v);
    }
    for j in 1..k {
        let next = (v * out[j] - (j as f64).sqrt() * out[j - 1]) / ((j + 1) as f64).sqrt();
        out.push(next);
    }
    out
}

/// Values of `φ_0..φ_degree` at a list of abscissae.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub degree: usize,
    pub abscissae: Vec<f64>,
    /// `values[i][k] = φ_i(abscissae[k])`
    pub values: Vec<Vec<f64>>,
}

impl BasisEval {
    pub fn new(degree: usize, abscissae: &[f64]) -> Self {
        let cols: Vec<Vec<f64>> = abscissae.iter().map(|&v| eval_phi_all(degree, v)).collect();
        let values = (0..=degree)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        Self {
            degree,
            abscissae: abscissae.to_vec(),
            values,
        }
    }

    /// Largest relative violation of the three-term recurrence.
    pub fn recurrence_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, &v) in self.abscissae.iter().enumerate() {
            for j in 1..self.degree {
                let lhs = v * self.values[j][k];
                let rhs = (j as f64).sqrt() * self.values[j - 1][k]
                    + ((j + 1) as f64).sqrt() * self.values[j + 1][k];
                let scale = lhs.abs().max(rhs.abs()).max(1.0);
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
        worst
    }
}

/// Standard Gaussian density.
pub fn maxwellian(v: f64) -> f64 {
    (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gauss–Hermite nodes and weights for `2N` velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    pub n_half: usize,
    /// `(-z_1, .., -z_N, z_1, .., z_N)` with `0 < z_1 < .. < z_N`.
    pub nodes: Vec<f64>,
    /// Weight of `±z_k`.
    pub weights: Vec<f64>,
}

impl QuadratureSet {
    pub fn positive_nodes(&self) -> &[f64] {
        &self.nodes[self.n_half..]
    }

    /// Weights aligned with `nodes`.
    pub fn full_weights(&self) -> Vec<f64> {
        let mut w = self.weights.clone();
        w.extend_from_slice(&self.weights);
        w
    }

    pub fn vmax(&self) -> f64 {
        self.nodes[2 * self.n_half - 1]
    }

    /// `max_{i,j} |Σ_k w_k φ_i(v_k) φ_j(v_k) - δ_ij|` over `i, j < 2N`.
    pub fn orthonormality_residual(&self) -> f64 {
        let m = 2 * self.n_half;
        let basis = BasisEval::new(m - 1, &self.nodes);
        let w = self.full_weights();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let s: f64 = (0..m)
                    .map(|k| w[k] * basis.values[i][k] * basis.values[j][k])
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// Golub–Welsch on the `2N × 2N` Jacobi matrix with off-diagonal `√1 .. √(2N-1)`.
pub fn build_quadrature(n_half: usize) -> Result<QuadratureSet> {
    if n_half == 0 || n_half > MAX_HALF_NODES {
        return Err(Error::config(format!(
            "quadrature half size N must be in 1..={MAX_HALF_NODES}, got {n_half}"
        )));
    }
    let m = 2 * n_half;
    let off: Vec<f64> = (1..m).map(|p| (p as f64).sqrt()).collect();
    let eig = linalg::tridiagonal_eigen(&vec![0.0; m], &off)?;
    // symmetrise: the spectrum is exactly sign-symmetric
    let mut z = Vec::with_capacity(n_half);
    let mut w = Vec::with_capacity(n_half);
    for k in 0..n_half {
        let pos = n_half + k;
        let neg = n_half - 1 - k;
        z.push(0.5 * (eig.values[pos] - eig.values[neg]));
        let wp = eig.vectors[(0, pos)].powi(2);
        let wn = eig.vectors[(0, neg)].powi(2);
        w.push(0.5 * (wp + wn));
    }
    // Newton polish on φ_{2N}, with φ'_{2N} = √(2N) φ_{2N-1}; the eigenvalues
    // carry absolute errors that the large φ_k at the outer nodes amplify
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let p = eval_phi_all(m, *zk);
            let d = (m as f64).sqrt() * p[m - 1];
            if d == 0.0 {
                break;
            }
            *zk -= p[m] / d;
        }
    }
    if z.iter().any(|&x| !(x > 0.0)) || z.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::numerical(
            "quadrature nodes not strictly positive and distinct",
        ));
    }
    // renormalise the half weights so Σ over 2N nodes is exactly 1
    let total: f64 = 2.0 * w.iter().sum::<f64>();
    w.iter_mut().for_each(|x| *x /= total);
    let mut nodes: Vec<f64> = z.iter().map(|x| -x).collect();
    nodes.extend_from_slice(&z);
    Ok(QuadratureSet {
        n_half,
        nodes,
        weights: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values() {
        assert_eq!(eval_phi(0, 0.7), 1.0);
        assert!(eval_phi(2, 1.0).abs() < 1e-15);
        assert!((eval_phi(3, 1.0) + 2.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn maxwellian_values() {
        assert!((maxwellian(0.0) - 0.3989422804014327).abs() < 1e-15);
        assert_eq!(maxwellian(1.3), maxwellian(-1.3));
    }

    #[test]
    fn one_node_pair() {
        let q = build_quadrature(1).unwrap();
        assert!((q.nodes[0] + 1.0).abs() < 1e-14 && (q.nodes[1] - 1.0).abs() < 1e-14);
        assert!((q.weights[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(build_quadrature(0).is_err());
        assert!(build_quadrature(MAX_HALF_NODES + 1).is_err());
    }
}
