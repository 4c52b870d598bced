//! Order-by-order recursions for the outer and viscous terms, and the basis
//! bookkeeping for kinetic layers.

use nalgebra::DMatrix;

use super::expoly::ExpPoly;
use super::heat::HeatBc;
use super::layer::LayerSolver;
use super::symbolic::LinExpr;
use super::Case;
use crate::error::Result;
use crate::field::fornberg_weights;
use crate::spectral::{CharDecomposition, MomentSystem};

/// Outer terms: sources are `ū_j` (`b` components each).
#[derive(Debug, Clone)]
pub struct OuterModel {
    /// `v̄_k` for `k = 0..=K+2`.
    pub vbar: Vec<LinExpr>,
    /// `∂t ū_j`.
    pub rules: Vec<Option<LinExpr>>,
    /// `−A12 ∂x v̄_k`, the forcing of `ū_k`.
    pub source: Vec<LinExpr>,
    pub block: usize,
}

impl OuterModel {
    pub fn new(sys: &MomentSystem, order: usize) -> Result<Self> {
        let b = sys.block;
        let r = sys.dim() - b;
        let eye = DMatrix::identity(b, b);
        let a12t = sys.a12.transpose();
        let ubar = |j: usize| LinExpr::source(j, &eye);
        let mut vbar: Vec<LinExpr> = vec![LinExpr::zero(r), LinExpr::zero(r)];
        let mut rules: Vec<Option<LinExpr>> = vec![None; order + 1];
        let mut source = Vec::new();
        for k in 0..=order + 2 {
            if k >= 2 {
                let mut v = vbar[k - 2].dt(&rules)?.scaled(-1.0);
                v.add_scaled(&ubar(k - 2).d().map(&a12t), -1.0);
                v.add_scaled(&vbar[k - 2].d().map(&sys.a22), -1.0);
                vbar.push(v);
            }
            if k <= order {
                let mut rule = ubar(k).d().map(&sys.a11).scaled(-1.0);
                rule.add_scaled(&vbar[k].d().map(&sys.a12), -1.0);
                rules[k] = Some(rule);
                source.push(vbar[k].d().map(&sys.a12).scaled(-1.0));
            }
        }
        Ok(Self {
            vbar,
            rules,
            source,
            block: b,
        })
    }

    /// `Ū_k = (ū_k, v̄_k)`.
    pub fn full(&self, k: usize) -> LinExpr {
        let u = LinExpr::source(k, &DMatrix::identity(self.block, self.block));
        LinExpr::stack(&[&u, &self.vbar[k]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub bc: HeatBc,
    /// Index of the boundary solve that supplies the boundary data.
    pub fed_by: usize,
}

/// Viscous terms: sources are the scalar heat profiles `h_j = P0^T û_j`.
#[derive(Debug, Clone)]
pub struct ViscousModel {
    pub kappa: f64,
    pub profiles: Vec<Option<Profile>>,
    /// `û_k`, `k = 0..=K`.
    pub uhat: Vec<LinExpr>,
    /// `v̂_k`, `k = 0..=K+1`.
    pub vhat: Vec<LinExpr>,
    /// `f̂_j` for each profile.
    pub forcing: Vec<Option<LinExpr>>,
    /// `∂t h_j = κ ∂zz h_j + f̂_j`.
    pub rules: Vec<Option<LinExpr>>,
}

impl ViscousModel {
    pub fn new(
        sys: &MomentSystem,
        chars: &CharDecomposition,
        case: Case,
        order: usize,
    ) -> Result<Self> {
        let p0 = chars
            .p_zero
            .clone()
            .expect("viscous layers need a zero characteristic speed");
        let b = sys.block;
        let r = sys.dim() - b;
        let p0m = DMatrix::from_column_slice(b, 1, p0.as_slice());
        let p0a12 = p0m.transpose() * &sys.a12;
        let kappa = (&p0a12 * p0a12.transpose())[(0, 0)];
        let a12t = sys.a12.transpose();
        let p1t_a12 = chars.p1.transpose() * &sys.a12;
        let lam_inv = chars.lambda1.clone().try_inverse().expect("nonzero speeds");

        let profiles: Vec<Option<Profile>> = (0..=order)
            .map(|j| match case {
                Case::Q2Ibvp1 if j == 1 => Some(Profile {
                    bc: HeatBc::Slope,
                    fed_by: 2,
                }),
                Case::Q2Ibvp2 => Some(Profile {
                    bc: HeatBc::Value,
                    fed_by: j,
                }),
                _ => None,
            })
            .collect();

        let mut rules: Vec<Option<LinExpr>> = vec![None; order + 1];
        let mut forcing: Vec<Option<LinExpr>> = vec![None; order + 1];
        let mut uhat: Vec<LinExpr> = Vec::new();
        let mut vhat: Vec<LinExpr> = Vec::new();
        let mut pi: Vec<LinExpr> = Vec::new();
        for k in 0..=order + 1 {
            let mut v = LinExpr::zero(r);
            if k >= 2 {
                v.add_scaled(&vhat[k - 2].dt(&rules)?, -1.0);
            }
            if k >= 1 {
                v.add_scaled(&uhat[k - 1].d().map(&a12t), -1.0);
                v.add_scaled(&vhat[k - 1].d().map(&sys.a22), -1.0);
            }
            let mut p = LinExpr::zero(2);
            if k >= 1 {
                p = pi[k - 1].dt(&rules)?.tail()?;
            }
            p.add_scaled(&v.map(&p1t_a12), -1.0);
            let p = p.map(&lam_inv);
            if k <= order {
                let mut u = p.map(&chars.p1);
                if profiles[k].is_some() {
                    u.add_scaled(&LinExpr::source(k, &p0m), 1.0);
                    let mut inner = LinExpr::zero(r);
                    if k >= 1 {
                        inner = vhat[k - 1].dt(&rules)?;
                    }
                    inner.add_scaled(&p.d().map(&chars.p1).map(&a12t), 1.0);
                    inner.add_scaled(&v.d().map(&sys.a22), 1.0);
                    let f = inner.d().map(&p0a12);
                    let mut rule = LinExpr::source(k, &DMatrix::from_element(1, 1, kappa))
                        .d()
                        .d();
                    rule.add_scaled(&f, 1.0);
                    forcing[k] = Some(f);
                    rules[k] = Some(rule);
                }
                uhat.push(u);
            }
            vhat.push(v);
            pi.push(p);
        }
        Ok(Self {
            kappa,
            profiles,
            uhat,
            vhat,
            forcing,
            rules,
        })
    }

    /// `Û_k = (û_k, v̂_k)`.
    pub fn full(&self, k: usize) -> LinExpr {
        LinExpr::stack(&[&self.uhat[k], &self.vhat[k]])
    }
}

/// Kinetic layers `Ũ_k = Σ_a c_{k,a}(t) Ψ_{k,a}(y)`: the basis is the
/// homogeneous solutions followed by particular solutions forced by
/// `Ψ_{k−2,a}`, whose coefficients are `∂t c_{k−2,a}`.
#[derive(Debug, Clone)]
pub struct KineticModel {
    pub solver: LayerSolver,
    pub dim: usize,
    pub modes: usize,
    pub basis: Vec<Vec<ExpPoly>>,
    /// `γ_k` at every time step.
    pub gamma: Vec<Vec<Vec<f64>>>,
}

impl KineticModel {
    pub fn new(sys: &MomentSystem, order: usize) -> Result<Self> {
        let solver = LayerSolver::new(sys)?;
        let modes = solver.modes();
        let hom = solver.homogeneous_basis();
        let mut basis: Vec<Vec<ExpPoly>> = Vec::new();
        for k in 0..=order {
            let mut b = hom.clone();
            if k >= 2 {
                let forced: Vec<ExpPoly> =
                    basis[k - 2].iter().map(|p| solver.particular(p)).collect();
                b.extend(forced);
            }
            basis.push(b);
        }
        Ok(Self {
            solver,
            dim: sys.dim(),
            modes,
            basis,
            gamma: vec![Vec::new(); order + 1],
        })
    }

    /// `r`-th time derivative of the coefficients of `Ũ_k` at step `n`.
    pub fn coeffs(&self, k: usize, n: usize, r: usize, dt: f64, causal: bool) -> Vec<f64> {
        let mut out = series_derivative(&self.gamma[k], n, r, dt, causal);
        out.extend(self.forced_coeffs(k, n, r, dt, causal));
        out
    }

    /// Coefficients of the particular part of `Ũ_k`.
    pub fn forced_coeffs(&self, k: usize, n: usize, r: usize, dt: f64, causal: bool) -> Vec<f64> {
        if k >= 2 {
            self.coeffs(k - 2, n, r + 1, dt, causal)
        } else {
            Vec::new()
        }
    }

    /// `Σ_a c_a Ψ_{k,a}`.
    pub fn combine(&self, k: usize, c: &[f64]) -> ExpPoly {
        let mut out = ExpPoly::zero(self.dim);
        for (p, ci) in self.basis[k].iter().zip(c) {
            if *ci != 0.0 {
                out.add(p, *ci);
            }
        }
        out
    }
}

/// Time-step multiple used for `r`-th differences of stored series.
fn series_stride(r: usize, dt: f64) -> usize {
    if r <= 1 {
        return 1;
    }
    let target = 1e-8f64.powf(1.0 / (r as f64 + 1.0));
    ((target / dt).round() as usize).max(1)
}

/// `r`-th derivative of a uniformly sampled vector series at index `n`:
/// backward differences when `causal`, otherwise centred where possible.
pub fn series_derivative(
    series: &[Vec<f64>],
    n: usize,
    r: usize,
    dt: f64,
    causal: bool,
) -> Vec<f64> {
    let dim = series.first().map_or(0, |v| v.len());
    if r == 0 {
        return series[n].clone();
    }
    let len = n.min(series.len() - 1) + 1;
    let idx: Vec<usize> = if causal {
        let pts = (r + 2).min(len);
        if pts <= r {
            return vec![0.0; dim];
        }
        (n + 1 - pts..=n).collect()
    } else {
        let total = series.len();
        let mut s = series_stride(r, dt);
        let mut w = r + 2;
        if w.is_multiple_of(2) {
            w += 1;
        }
        while s > 1 && (w - 1) * s >= total {
            s /= 2;
        }
        if (w - 1) * s >= total {
            return vec![0.0; dim];
        }
        let half = (w / 2 * s) as isize;
        let start = (n as isize - half).clamp(0, (total - 1 - (w - 1) * s) as isize) as usize;
        (0..w).map(|i| start + i * s).collect()
    };
    let xs: Vec<f64> = idx.iter().map(|&i| (i as f64 - n as f64) * dt).collect();
    let wts = fornberg_weights(0.0, &xs, r);
    let mut out = vec![0.0; dim];
    for (i, wi) in idx.iter().zip(&wts) {
        for (o, v) in out.iter_mut().zip(&series[*i]) {
            *o += wi * v;
        }
    }
    out
}
