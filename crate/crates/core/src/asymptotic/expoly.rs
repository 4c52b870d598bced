//! Vector-valued exponential polynomials `Σ c · y^p e^{−κ y}` on `y ≥ 0`.

use nalgebra::DMatrix;

const RATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub rate: f64,
    pub power: u32,
    pub coef: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly {
    pub dim: usize,
    pub terms: Vec<ExpTerm>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_TOL * a.abs().max(b.abs()).max(1.0)
}

impl ExpPoly {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Add `coef · y^power e^{−rate y}`, merging with an existing term.
    pub fn push(&mut self, rate: f64, power: u32, coef: Vec<f64>) {
        assert_eq!(coef.len(), self.dim, "exp-poly dimension mismatch");
        assert!(rate > 0.0, "exp-poly terms must decay");
        if coef.iter().all(|c| *c == 0.0) {
            return;
        }
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| t.power == power && same_rate(t.rate, rate))
        {
            t.coef.iter_mut().zip(&coef).for_each(|(a, b)| *a += b);
        } else {
            self.terms.push(ExpTerm { rate, power, coef });
        }
    }

    pub fn scalar(rate: f64, power: u32, c: f64) -> Self {
        let mut p = Self::zero(1);
        p.push(rate, power, vec![c]);
        p
    }

    pub fn eval(&self, y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for t in &self.terms {
            let s = y.powi(t.power as i32) * (-t.rate * y).exp();
            out.iter_mut().zip(&t.coef).for_each(|(o, c)| *o += c * s);
        }
        out
    }

    pub fn eval_component(&self, i: usize, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef[i] * y.powi(t.power as i32) * (-t.rate * y).exp())
            .sum()
    }

    pub fn add(&mut self, other: &ExpPoly, s: f64) {
        for t in &other.terms {
            self.push(t.rate, t.power, t.coef.iter().map(|c| s * c).collect());
        }
    }

    pub fn scaled(&self, s: f64) -> ExpPoly {
        let mut out = ExpPoly::zero(self.dim);
        out.add(self, s);
        out
    }

    pub fn component(&self, i: usize) -> ExpPoly {
        let mut out = ExpPoly::zero(1);
        for t in &self.terms {
            out.push(t.rate, t.power, vec![t.coef[i]]);
        }
        out
    }

    /// Rows `start..start+len` as a new polynomial.
    pub fn slice(&self, start: usize, len: usize) -> ExpPoly {
        let mut out = ExpPoly::zero(len);
        for t in &self.terms {
            out.push(t.rate, t.power, t.coef[start..start + len].to_vec());
        }
        out
    }

    /// Place `self` at rows `offset..` of a `dim`-vector.
    pub fn embed(&self, dim: usize, offset: usize) -> ExpPoly {
        let mut out = ExpPoly::zero(dim);
        for t in &self.terms {
            let mut c = vec![0.0; dim];
            c[offset..offset + self.dim].copy_from_slice(&t.coef);
            out.push(t.rate, t.power, c);
        }
        out
    }

    /// `M · self`.
    pub fn map(&self, m: &DMatrix<f64>) -> ExpPoly {
        assert_eq!(m.ncols(), self.dim);
        let mut out = ExpPoly::zero(m.nrows());
        for t in &self.terms {
            let c: Vec<f64> = (0..m.nrows())
                .map(|r| (0..self.dim).map(|k| m[(r, k)] * t.coef[k]).sum())
                .collect();
            out.push(t.rate, t.power, c);
        }
        out
    }

    pub fn derivative(&self) -> ExpPoly {
        let mut out = ExpPoly::zero(self.dim);
        for t in &self.terms {
            out.push(
                t.rate,
                t.power,
                t.coef.iter().map(|c| -t.rate * c).collect(),
            );
            if t.power > 0 {
                let p = t.power as f64;
                out.push(t.rate, t.power - 1, t.coef.iter().map(|c| p * c).collect());
            }
        }
        out
    }

    /// `∫_y^∞`.
    pub fn tail_integral(&self) -> ExpPoly {
        let mut out = ExpPoly::zero(self.dim);
        for t in &self.terms {
            let p = t.power;
            for q in 0..=p {
                let f = factorial(p) / (factorial(q) * t.rate.powi((p - q + 1) as i32));
                out.push(t.rate, q, t.coef.iter().map(|c| f * c).collect());
            }
        }
        out
    }

    /// Solution of `μ w' = −w + g` on `y ≥ 0`: for `μ > 0` with `w(0) = 0`,
    /// for `μ < 0` the bounded one. `self` must be scalar.
    pub fn solve_mode(&self, mu: f64) -> ExpPoly {
        assert_eq!(self.dim, 1);
        let mut out = ExpPoly::zero(1);
        for t in &self.terms {
            let p = t.power;
            let g = t.coef[0];
            if mu > 0.0 {
                let a = 1.0 / mu;
                let d = a - t.rate;
                if same_rate(a, t.rate) {
                    out.push(a, p + 1, vec![g / (mu * (p as f64 + 1.0))]);
                } else {
                    for q in 0..=p {
                        let sign = if (p - q) % 2 == 0 { 1.0 } else { -1.0 };
                        let f = sign * factorial(p) / (factorial(q) * d.powi((p - q + 1) as i32));
                        out.push(t.rate, q, vec![g * f / mu]);
                    }
                    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                    out.push(
                        a,
                        0,
                        vec![-g * sign * factorial(p) / (mu * d.powi(p as i32 + 1))],
                    );
                }
            } else {
                let nu = -mu;
                let c = t.rate + 1.0 / nu;
                for q in 0..=p {
                    let f = factorial(p) / (factorial(q) * c.powi((p - q + 1) as i32));
                    out.push(t.rate, q, vec![g * f / nu]);
                }
            }
        }
        out
    }

    /// Smallest decay rate present (infinite for the zero polynomial).
    pub fn slowest_rate(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.rate)
            .fold(f64::INFINITY, f64::min)
    }
}
