//! Outer hyperbolic solves `∂t ū + A11 ∂x ū = S` by exact characteristic
//! shifts on a grid with `dx = λ dt`, sources integrated by the trapezoid rule
//! along each characteristic.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::spectral::CharDecomposition;

#[derive(Debug, Clone, PartialEq)]
pub struct OuterGrid {
    pub h: f64,
    pub points: usize,
    pub dt: f64,
    pub steps: usize,
}

impl OuterGrid {
    /// Steps are rounded up to a multiple of `quantum` so that the times
    /// `j T / quantum` fall on the grid.
    pub fn new(
        length: f64,
        speed: f64,
        final_time: f64,
        target_h: f64,
        quantum: usize,
    ) -> Result<Self> {
        if !(length > 0.0) || !(final_time > 0.0) || !(target_h > 0.0) || !(speed > 0.0) {
            return Err(Error::config(
                "outer grid needs positive length, time, spacing and speed",
            ));
        }
        let q = quantum.max(1);
        let raw = (speed * final_time / target_h).ceil() as usize;
        let steps = raw.div_ceil(q) * q;
        let dt = final_time / steps as f64;
        let h = speed * dt;
        let points = (length / h).ceil() as usize + 1;
        Ok(Self {
            h,
            points,
            dt,
            steps,
        })
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| j as f64 * self.h).collect()
    }

    pub fn length(&self) -> f64 {
        self.h * (self.points - 1) as f64
    }
}

/// Characteristic amplitudes of one outer term.
#[derive(Debug, Clone)]
pub struct OuterState {
    /// `(P_f, sign of speed)`, incoming family first.
    families: Vec<(DVector<f64>, i8)>,
    pub beta: Vec<Vec<f64>>,
}

impl OuterState {
    pub fn new(chars: &CharDecomposition, u0: &[Vec<f64>]) -> Self {
        let families: Vec<(DVector<f64>, i8)> = chars
            .families()
            .into_iter()
            .map(|(p, s)| {
                (
                    p,
                    if s > 0.0 {
                        1
                    } else if s < 0.0 {
                        -1
                    } else {
                        0
                    },
                )
            })
            .collect();
        let beta = families.iter().map(|(p, _)| project(p, u0)).collect();
        Self { families, beta }
    }

    pub fn points(&self) -> usize {
        self.beta[0].len()
    }

    /// Advance the interior by one step; the incoming value at `x = 0` is left
    /// for [`Self::set_incoming`].
    pub fn advance(&mut self, dt: f64, src_old: &[Vec<f64>], src_new: &[Vec<f64>]) {
        let n = self.points();
        for (f, (p, sign)) in self.families.iter().enumerate() {
            let so = project(p, src_old);
            let sn = project(p, src_new);
            let b = &mut self.beta[f];
            match sign {
                1 => {
                    for j in (1..n).rev() {
                        b[j] = b[j - 1] + 0.5 * dt * (so[j - 1] + sn[j]);
                    }
                }
                -1 => {
                    for j in 0..n - 1 {
                        b[j] = b[j + 1] + 0.5 * dt * (so[j + 1] + sn[j]);
                    }
                    b[n - 1] = 0.0;
                }
                _ => {
                    for j in 0..n {
                        b[j] += 0.5 * dt * (so[j] + sn[j]);
                    }
                }
            }
        }
    }

    pub fn set_incoming(&mut self, value: f64) {
        self.beta[0][0] = value;
    }

    /// `ū(0)` without the incoming family.
    pub fn known_trace(&self) -> DVector<f64> {
        let b = self.families[0].0.len();
        let mut out = DVector::zeros(b);
        for (f, (p, _)) in self.families.iter().enumerate().skip(1) {
            out += p * self.beta[f][0];
        }
        out
    }

    /// Equilibrium components on the grid, `b × points`.
    pub fn u(&self) -> Vec<Vec<f64>> {
        let b = self.families[0].0.len();
        let n = self.points();
        let mut out = vec![vec![0.0; n]; b];
        for (f, (p, _)) in self.families.iter().enumerate() {
            for (c, row) in out.iter_mut().enumerate() {
                let pc = p[c];
                if pc != 0.0 {
                    row.iter_mut()
                        .zip(&self.beta[f])
                        .for_each(|(o, v)| *o += pc * v);
                }
            }
        }
        out
    }
}

fn project(p: &DVector<f64>, comps: &[Vec<f64>]) -> Vec<f64> {
    let n = comps.first().map_or(0, |c| c.len());
    let mut out = vec![0.0; n];
    for (c, row) in comps.iter().enumerate() {
        let pc = p[c];
        if pc != 0.0 {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += pc * v);
        }
    }
    out
}
