//! Crank–Nicolson solver for `∂t h − κ ∂zz h = f` on `[0, z_max]` with
//! `h(z_max) = 0` and Dirichlet or Neumann data at `z = 0`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatBc {
    /// `h(0, t)` prescribed.
    Value,
    /// `∂z h(0, t)` prescribed.
    Slope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatGrid {
    pub dz: f64,
    pub points: usize,
}

impl HeatGrid {
    pub fn new(z_max: f64, dz: f64) -> Result<Self> {
        if !(dz > 0.0) || !(z_max > 4.0 * dz) {
            return Err(Error::config("viscous grid needs dz > 0 and z_max > 4 dz"));
        }
        let cells = (z_max / dz).round() as usize;
        Ok(Self {
            dz: z_max / cells as f64,
            points: cells + 1,
        })
    }

    pub fn z_max(&self) -> f64 {
        self.dz * (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| i as f64 * self.dz).collect()
    }
}

/// Implicit Euler half steps taken before switching to Crank–Nicolson.
const STARTUP_STEPS: usize = 2;

#[derive(Debug, Clone)]
pub struct HeatSolver {
    pub grid: HeatGrid,
    pub kappa: f64,
    pub bc: HeatBc,
    pub dt: f64,
    steps_taken: usize,
}

impl HeatSolver {
    pub fn new(grid: HeatGrid, kappa: f64, bc: HeatBc, dt: f64) -> Self {
        Self {
            grid,
            kappa,
            bc,
            dt,
            steps_taken: 0,
        }
    }

    /// Advance by `dt`. `f_old`/`f_new` are the forcing at both time levels,
    /// `bc_old`/`bc_new` the boundary data.
    pub fn step(&mut self, h: &mut [f64], f_old: &[f64], f_new: &[f64], bc_old: f64, bc_new: f64) {
        if self.steps_taken < STARTUP_STEPS {
            let f_mid: Vec<f64> = f_old
                .iter()
                .zip(f_new)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let bc_mid = 0.5 * (bc_old + bc_new);
            self.theta_step(h, 1.0, 0.5 * self.dt, &f_mid, &f_mid, bc_mid, bc_mid);
            self.theta_step(h, 1.0, 0.5 * self.dt, f_new, f_new, bc_new, bc_new);
        } else {
            self.theta_step(h, 0.5, self.dt, f_old, f_new, bc_old, bc_new);
        }
        self.steps_taken += 1;
    }

    #[allow(clippy::too_many_arguments)]
    fn theta_step(
        &self,
        h: &mut [f64],
        theta: f64,
        dt: f64,
        f_old: &[f64],
        f_new: &[f64],
        bc_old: f64,
        bc_new: f64,
    ) {
        let n = self.grid.points;
        let dz = self.grid.dz;
        let r = self.kappa * dt / (dz * dz);
        // slope data enters through the ghost value h[-1] = h[1] − 2 dz g
        let lap = |h: &[f64], i: usize, g: f64| -> f64 {
            if i == 0 {
                2.0 * (h[1] - h[0] - dz * g)
            } else {
                h[i - 1] - 2.0 * h[i] + h[i + 1]
            }
        };
        let mut rhs = vec![0.0; n];
        for i in 0..n - 1 {
            rhs[i] = h[i]
                + (1.0 - theta) * r * lap(h, i, bc_old)
                + dt * (theta * f_new[i] + (1.0 - theta) * f_old[i]);
        }
        // tridiagonal system a_i x_{i-1} + b_i x_i + c_i x_{i+1} = rhs_i on 0..n−2
        let m = n - 1;
        let mut a = vec![-theta * r; m];
        let mut b = vec![1.0 + 2.0 * theta * r; m];
        let mut c = vec![-theta * r; m];
        match self.bc {
            HeatBc::Value => {
                b[0] = 1.0;
                c[0] = 0.0;
                rhs[0] = bc_new;
            }
            HeatBc::Slope => {
                c[0] = -2.0 * theta * r;
                rhs[0] -= 2.0 * theta * r * dz * bc_new;
            }
        }
        a[0] = 0.0;
        c[m - 1] = -theta * r;
        thomas(&a, &b, &c, &mut rhs[..m]);
        h[..m].copy_from_slice(&rhs[..m]);
        h[n - 1] = 0.0;
    }
}

fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut bp = b[0];
    cp[0] = c[0] / bp;
    d[0] /= bp;
    for i in 1..n {
        bp = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / bp;
        d[i] = (d[i] - a[i] * d[i - 1]) / bp;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}
