use crate::error::{Error, Result};
use crate::field::Field;
use crate::spectral::{alpha, MomentSystem};

/// Compactly supported bump `exp(1 − 1/(1 − r²))`, `r = (x − center)/width`,
/// carrying one amplitude per equilibrium moment.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitudes: Vec<f64>,
}

impl Bump {
    /// Profile value and its first derivative.
    pub fn shape(&self, x: f64) -> (f64, f64) {
        let r = (x - self.center) / self.width;
        if r.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let d = 1.0 - r * r;
        let b = (1.0 - 1.0 / d).exp();
        (b, -2.0 * r / (d * d) * b / self.width)
    }
}

/// Equilibrium initial data on a half line: a sum of bumps in the conserved
/// moments, completed by the first-order nonequilibrium correction
/// `v = −ε A12^T ∂x u`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub bumps: Vec<Bump>,
}

impl InitialData {
    pub fn single(center: f64, width: f64, amplitudes: Vec<f64>) -> Self {
        Self {
            bumps: vec![Bump {
                center,
                width,
                amplitudes,
            }],
        }
    }

    /// Default profile: support `[0.5, 2.5]`, unit amplitude in `g_0`.
    pub fn default_for(block: usize) -> Self {
        let mut amp = vec![0.0; block];
        amp[0] = 1.0;
        Self::single(1.5, 1.0, amp)
    }

    pub fn validate(&self, block: usize) -> Result<()> {
        for b in &self.bumps {
            if b.amplitudes.len() != block {
                return Err(Error::config(format!(
                    "bump needs {block} amplitudes, got {}",
                    b.amplitudes.len()
                )));
            }
            // supports may reach past x = 0; only the part on x ≥ 0 is used
            if !(b.width > 0.0) || !(b.center >= 0.0) || !b.center.is_finite() {
                return Err(Error::config("bump needs width > 0 and center ≥ 0"));
            }
        }
        Ok(())
    }

    pub fn block(&self) -> usize {
        self.bumps.first().map_or(0, |b| b.amplitudes.len())
    }

    /// Right end of the union of supports.
    pub fn support_end(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.center + b.width)
            .fold(0.0, f64::max)
    }

    /// Equilibrium part `ū(x, 0)` and `∂x ū(x, 0)`.
    pub fn equilibrium(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let nb = self.block();
        let mut u = vec![0.0; nb];
        let mut du = vec![0.0; nb];
        for b in &self.bumps {
            let (s, ds) = b.shape(x);
            for i in 0..nb {
                u[i] += b.amplitudes[i] * s;
                du[i] += b.amplitudes[i] * ds;
            }
        }
        (u, du)
    }

    /// Full moment vector at `x`.
    pub fn moments(&self, sys: &MomentSystem, eps: f64, x: f64) -> Vec<f64> {
        let b = sys.block;
        let (u, du) = self.equilibrium(x);
        let mut g = vec![0.0; sys.dim()];
        g[..b].copy_from_slice(&u);
        g[b] = -eps * alpha(b) * du[b - 1];
        g
    }

    /// Moment field at the given abscissae.
    pub fn moment_field(&self, sys: &MomentSystem, eps: f64, xs: &[f64]) -> Field {
        let mut f = Field::zeros(sys.dim(), xs.len());
        for (j, &x) in xs.iter().enumerate() {
            f.set_column(j, &self.moments(sys, eps, x));
        }
        f
    }

    /// `Σ c_i · data_i`, bump lists concatenated.
    pub fn combine(parts: &[(f64, &InitialData)]) -> InitialData {
        let mut bumps = Vec::new();
        for (c, d) in parts {
            for b in &d.bumps {
                bumps.push(Bump {
                    center: b.center,
                    width: b.width,
                    amplitudes: b.amplitudes.iter().map(|a| c * a).collect(),
                });
            }
        }
        InitialData { bumps }
    }
}
