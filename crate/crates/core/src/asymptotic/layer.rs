//! Kinetic boundary layers: bounded solutions of `A ∂y U = Q U − h` on `y ≥ 0`.

use nalgebra::DMatrix;

use super::expoly::ExpPoly;
use crate::error::Result;
use crate::linalg::{self, SymEigen};
use crate::spectral::{
    alpha, layer_matrix, stable_subspace, Collision, MomentSystem, StableSubspace,
};

#[derive(Debug, Clone)]
pub struct LayerSolver {
    collision: Collision,
    dim: usize,
    block: usize,
    a: DMatrix<f64>,
    q: DMatrix<f64>,
    /// Q1 only: `A11^{-1}` and `A12`.
    a11_inv: Option<DMatrix<f64>>,
    a12: DMatrix<f64>,
    eig: SymEigen,
    pub stable: StableSubspace,
    /// Offset of the layer-matrix unknowns inside the full vector.
    offset: usize,
}

impl LayerSolver {
    pub fn new(sys: &MomentSystem) -> Result<Self> {
        let m = layer_matrix(sys);
        let stable = stable_subspace(&m)?;
        let eig = if m.nrows() > 0 {
            linalg::symmetric_eigen(&m)?
        } else {
            SymEigen {
                values: vec![],
                vectors: DMatrix::zeros(0, 0),
            }
        };
        let a11_inv = match sys.collision {
            Collision::Q1 => sys.a11.clone().try_inverse(),
            Collision::Q2 => None,
        };
        let offset = match sys.collision {
            Collision::Q1 => 2,
            Collision::Q2 => 4,
        };
        Ok(Self {
            collision: sys.collision,
            dim: sys.dim(),
            block: sys.block,
            a: sys.a.clone(),
            q: sys.q_matrix(),
            a11_inv,
            a12: sys.a12.clone(),
            eig,
            stable,
            offset,
        })
    }

    pub fn modes(&self) -> usize {
        self.stable.mu.len()
    }

    /// One bounded homogeneous solution per decaying mode.
    pub fn homogeneous_basis(&self) -> Vec<ExpPoly> {
        (0..self.modes())
            .map(|j| {
                let rate = self.stable.decay_rates[j];
                let r: Vec<f64> = self.stable.r_minus.column(j).iter().copied().collect();
                let mut tail = ExpPoly::zero(r.len());
                tail.push(rate, 0, r);
                self.complete(&tail, &ExpPoly::zero(self.dim))
            })
            .collect()
    }

    /// Particular bounded solution with forcing `h`; its decaying-mode
    /// coordinates vanish at `y = 0`.
    pub fn particular(&self, h: &ExpPoly) -> ExpPoly {
        let m = self.dim;
        let d = self.eig.values.len();
        let forcing = match self.collision {
            Collision::Q1 => {
                let inv = self.a11_inv.as_ref().expect("Q1");
                let hu = h.slice(0, self.block);
                let hv = h.slice(self.block, m - self.block);
                let mut f = hv.scaled(-1.0);
                f.add(&hu.map(&(self.a12.transpose() * inv)), 1.0);
                f
            }
            Collision::Q2 => {
                let (_, u3) = self.q2_odd(h);
                let du3 = u3.derivative();
                let mut f = h.slice(4, d).scaled(-1.0);
                if d > 0 {
                    f.add(&du3.embed(d, 0), -alpha(4));
                }
                f
            }
        };
        // diagonalise: μ_i w_i' = −w_i + (R^T f)_i
        let mut tail = ExpPoly::zero(d);
        if d > 0 {
            let rt = self.eig.vectors.transpose();
            let g = forcing.map(&rt);
            for i in 0..d {
                let wi = g.component(i).solve_mode(self.eig.values[i]);
                let col: Vec<f64> = self.eig.vectors.column(i).iter().copied().collect();
                for t in &wi.terms {
                    tail.push(t.rate, t.power, col.iter().map(|c| c * t.coef[0]).collect());
                }
            }
        }
        self.complete(&tail, h)
    }

    /// `U1 = ∫h0/α1`, `U3 = (∫h2 − α2 U1)/α3` for Q2.
    fn q2_odd(&self, h: &ExpPoly) -> (ExpPoly, ExpPoly) {
        let u1 = h.component(0).tail_integral().scaled(1.0 / alpha(1));
        let mut u3 = h.component(2).tail_integral();
        u3.add(&u1, -alpha(2));
        (u1, u3.scaled(1.0 / alpha(3)))
    }

    /// Rebuild the full vector from the layer-matrix unknowns.
    fn complete(&self, tail: &ExpPoly, h: &ExpPoly) -> ExpPoly {
        let m = self.dim;
        match self.collision {
            Collision::Q1 => {
                let inv = self.a11_inv.as_ref().expect("Q1");
                let mut iu = h.slice(0, self.block).tail_integral();
                iu.add(&tail.map(&self.a12), -1.0);
                let u = iu.map(inv);
                let mut out = u.embed(m, 0);
                out.add(&tail.embed(m, self.block), 1.0);
                out
            }
            Collision::Q2 => {
                let (u1, u3) = self.q2_odd(h);
                let d = m - 4;
                let mut s = u3.clone();
                s.add(&h.component(3), 1.0);
                let mut u2 = s.tail_integral();
                if d > 0 {
                    u2.add(&tail.component(0), -alpha(4));
                }
                let u2 = u2.scaled(1.0 / alpha(3));
                let mut u0 = h.component(1).tail_integral();
                u0.add(&u2, -alpha(2));
                let u0 = u0.scaled(1.0 / alpha(1));
                let mut out = u0.embed(m, 0);
                out.add(&u1.embed(m, 1), 1.0);
                out.add(&u2.embed(m, 2), 1.0);
                out.add(&u3.embed(m, 3), 1.0);
                if d > 0 {
                    out.add(&tail.embed(m, self.offset), 1.0);
                }
                out
            }
        }
    }

    /// `max |A U' − Q U + h|` over sample points.
    pub fn residual(&self, u: &ExpPoly, h: &ExpPoly, ys: &[f64]) -> f64 {
        let du = u.derivative();
        let mut worst = 0.0f64;
        for &y in ys {
            let uy = nalgebra::DVector::from_vec(u.eval(y));
            let duy = nalgebra::DVector::from_vec(du.eval(y));
            let hy = nalgebra::DVector::from_vec(h.eval(y));
            let r = &self.a * duy - &self.q * uy + hy;
            worst = worst.max(r.amax());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::build_quadrature;
    use crate::spectral::build_system;

    fn ys() -> Vec<f64> {
        (0..40).map(|i| 0.25 * i as f64).collect()
    }

    #[test]
    fn homogeneous_and_forced_layers_solve_the_ode() {
        for c in [Collision::Q1, Collision::Q2] {
            for n in 2..=5 {
                let sys = build_system(build_quadrature(n).unwrap(), c).unwrap();
                let ls = LayerSolver::new(&sys).unwrap();
                let zero = ExpPoly::zero(sys.dim());
                let basis = ls.homogeneous_basis();
                for hb in &basis {
                    assert!(ls.residual(hb, &zero, &ys()) < 1e-12);
                    assert!(hb
                        .eval(40.0 / hb.slowest_rate())
                        .iter()
                        .all(|v| v.abs() < 1e-10));
                }
                // forcing built from the homogeneous modes, as at higher orders
                let mut h = ExpPoly::zero(sys.dim());
                for (j, hb) in basis.iter().enumerate() {
                    h.add(hb, 1.0 + j as f64);
                }
                h.push(0.9, 1, (0..sys.dim()).map(|i| 0.1 * i as f64).collect());
                let p = ls.particular(&h);
                assert!(ls.residual(&p, &h, &ys()) < 1e-11, "{c:?} N={n}");
            }
        }
    }
}
