//! Multi-component fields on uniform 1D grids, finite-difference stencils and
//! interpolation.

use crate::error::{Error, Result};

/// `comps` scalar profiles over `cells` grid points, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    comps: usize,
    cells: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(comps: usize, cells: usize) -> Self {
        Self {
            comps,
            cells,
            data: vec![0.0; comps * cells],
        }
    }

    pub fn from_components(components: Vec<Vec<f64>>) -> Result<Self> {
        let comps = components.len();
        let cells = components.first().map_or(0, Vec::len);
        if components.iter().any(|c| c.len() != cells) {
            return Err(Error::config("field components differ in length"));
        }
        Ok(Self {
            comps,
            cells,
            data: components.concat(),
        })
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.data[c * self.cells..(c + 1) * self.cells]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.cells..(c + 1) * self.cells]
    }

    pub fn get(&self, c: usize, j: usize) -> f64 {
        self.data[c * self.cells + j]
    }

    pub fn set(&mut self, c: usize, j: usize, v: f64) {
        self.data[c * self.cells + j] = v;
    }

    /// All components at grid point `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.comps).map(|c| self.get(c, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (c, x) in v.iter().enumerate() {
            self.set(c, j, *x);
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.comps == other.comps && self.cells == other.cells
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Field) {
        assert!(self.same_shape(other), "field shape mismatch");
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += s * b);
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            comps: self.comps,
            cells: self.cells,
            data: self.data.iter().map(|x| s * x).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        assert!(self.same_shape(other), "field shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Fornberg weights for the `order`-th derivative at `x0` from nodes `xs`.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Finite-difference operator for the `order`-th derivative on a uniform grid.
///
/// Interior points use a centred stencil of `order + accuracy` (rounded up to odd)
/// points; near the ends the stencil is shifted inside the grid.
#[derive(Debug, Clone)]
pub struct Stencil {
    order: usize,
    width: usize,
    table: Vec<Vec<f64>>,
}

impl Stencil {
    pub fn new(order: usize, accuracy: usize) -> Self {
        let mut width = order + accuracy;
        if width.is_multiple_of(2) {
            width += 1;
        }
        // table[s]: stencil whose first point lies `s` cells left of the target
        let table = (0..width)
            .map(|s| {
                let start = -(s as isize);
                let xs: Vec<f64> = (0..width).map(|i| (start + i as isize) as f64).collect();
                fornberg_weights(0.0, &xs, order)
            })
            .collect();
        Self {
            order,
            width,
            table,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Derivative of `values` (spacing `h`) at index `j`.
    pub fn at(&self, values: &[f64], h: f64, j: usize) -> f64 {
        let n = values.len();
        let half = self.width / 2;
        let start = if j < half {
            0
        } else if j + half >= n {
            n.saturating_sub(self.width)
        } else {
            j - half
        };
        let s = j - start;
        let w = &self.table[s];
        let mut acc = 0.0;
        for (i, wi) in w.iter().enumerate() {
            acc += wi * values[start + i];
        }
        acc / h.powi(self.order as i32)
    }

    pub fn apply(&self, values: &[f64], h: f64) -> Vec<f64> {
        assert!(values.len() >= self.width, "grid too short for stencil");
        (0..values.len()).map(|j| self.at(values, h, j)).collect()
    }
}

/// `∫_{x_j}^{x_end}` of a sampled function on a uniform grid, for every `j`
/// (trapezoid with the end derivative correction).
pub fn tail_integral(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let d1 = Stencil::new(1, 4).apply(values, h);
    for j in (0..n - 1).rev() {
        out[j] = out[j + 1] + 0.5 * h * (values[j] + values[j + 1]);
    }
    for j in 0..n {
        out[j] -= h * h / 12.0 * (d1[n - 1] - d1[j]);
    }
    out
}

/// Degree-`points-1` Lagrange interpolation of samples at `x0 + i h`; returns 0
/// outside `[x0, x0 + (n-1) h]`.
pub fn interpolate(values: &[f64], x0: f64, h: f64, x: f64, points: usize) -> f64 {
    let n = values.len();
    let s = (x - x0) / h;
    if n == 0 || s < -1e-9 || s > (n - 1) as f64 + 1e-9 {
        return 0.0;
    }
    let p = points.min(n);
    let base = s.floor() as isize - (p as isize - 1) / 2;
    let start = base.clamp(0, (n - p) as isize) as usize;
    let mut acc = 0.0;
    for i in 0..p {
        let xi = (start + i) as f64;
        let mut l = 1.0;
        for k in 0..p {
            if k != i {
                let xk = (start + k) as f64;
                l *= (s - xk) / (xi - xk);
            }
        }
        acc += l * values[start + i];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!(
            (w[0] - 1.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14 && (w[2] - 1.0).abs() < 1e-14
        );
    }

    #[test]
    fn stencil_exact_on_polynomials() {
        let h = 0.1;
        let vals: Vec<f64> = (0..20).map(|i| (i as f64 * h).powi(4)).collect();
        let d = Stencil::new(2, 4).apply(&vals, h);
        for (i, di) in d.iter().enumerate() {
            let x = i as f64 * h;
            assert!((di - 12.0 * x * x).abs() < 1e-9, "{i}: {di}");
        }
        let d3 = Stencil::new(3, 4).apply(&vals, h);
        assert!((d3[0]).abs() < 1e-7 && (d3[19] - 24.0 * 1.9).abs() < 1e-6);
    }

    #[test]
    fn tail_integral_of_exponential() {
        let h = 0.01;
        let vals: Vec<f64> = (0..4001).map(|i| (-(i as f64) * h).exp()).collect();
        let t = tail_integral(&vals, h);
        assert!((t[0] - 1.0).abs() < 1e-9);
        assert!((t[100] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn interpolation_reproduces_quintic() {
        let vals: Vec<f64> = (0..10)
            .map(|i| (i as f64).powi(5) - 3.0 * i as f64)
            .collect();
        let x = 4.37;
        assert!((interpolate(&vals, 0.0, 1.0, x, 6) - (x.powi(5) - 3.0 * x)).abs() < 1e-9);
        assert_eq!(interpolate(&vals, 0.0, 1.0, 9.5, 6), 0.0);
    }
}
