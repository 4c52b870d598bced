//! Linear combinations `Σ c · ∂^a s_{j,c}` of spatial derivatives of sampled
//! source profiles, with time derivatives eliminated through per-source rules.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::Stencil;

const PRUNE: f64 = 1e-14;

/// `∂^deriv` of component `comp` of source profile `source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub source: usize,
    pub comp: usize,
    pub deriv: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinExpr {
    rows: usize,
    terms: BTreeMap<Atom, DVector<f64>>,
}

impl LinExpr {
    pub fn zero(rows: usize) -> Self {
        Self {
            rows,
            terms: BTreeMap::new(),
        }
    }

    /// `m · (s_{source,0}, .., s_{source,comps−1})^T` for an `rows × comps` matrix.
    pub fn source(source: usize, m: &DMatrix<f64>) -> Self {
        let mut e = Self::zero(m.nrows());
        for c in 0..m.ncols() {
            e.push(
                Atom {
                    source,
                    comp: c,
                    deriv: 0,
                },
                m.column(c).into_owned(),
            );
        }
        e
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Atom, &DVector<f64>)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, atom: Atom) -> DVector<f64> {
        self.terms
            .get(&atom)
            .cloned()
            .unwrap_or_else(|| DVector::zeros(self.rows))
    }

    /// The expression with `atom` removed.
    pub fn without(&self, atom: Atom) -> Self {
        let mut out = self.clone();
        out.terms.remove(&atom);
        out
    }

    pub fn max_deriv(&self) -> usize {
        self.terms.keys().map(|a| a.deriv).max().unwrap_or(0)
    }

    fn push(&mut self, atom: Atom, coef: DVector<f64>) {
        assert_eq!(coef.len(), self.rows, "expression row mismatch");
        let entry = self
            .terms
            .entry(atom)
            .or_insert_with(|| DVector::zeros(coef.len()));
        *entry += coef;
        if entry.amax() < PRUNE {
            self.terms.remove(&atom);
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, s: f64) {
        for (a, c) in &other.terms {
            self.push(*a, c * s);
        }
    }

    pub fn plus(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        let mut out = LinExpr::zero(self.rows);
        out.add_scaled(self, s);
        out
    }

    /// `m · self`.
    pub fn map(&self, m: &DMatrix<f64>) -> LinExpr {
        assert_eq!(m.ncols(), self.rows);
        let mut out = LinExpr::zero(m.nrows());
        for (a, c) in &self.terms {
            out.push(*a, m * c);
        }
        out
    }

    /// Stack `parts` vertically.
    pub fn stack(parts: &[&LinExpr]) -> LinExpr {
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = LinExpr::zero(rows);
        let mut off = 0;
        for p in parts {
            for (a, c) in &p.terms {
                let mut v = DVector::zeros(rows);
                v.rows_mut(off, p.rows).copy_from(c);
                out.push(*a, v);
            }
            off += p.rows;
        }
        out
    }

    pub fn rows_range(&self, start: usize, len: usize) -> LinExpr {
        let mut out = LinExpr::zero(len);
        for (a, c) in &self.terms {
            out.push(*a, c.rows(start, len).into_owned());
        }
        out
    }

    /// Spatial derivative.
    pub fn d(&self) -> LinExpr {
        let mut out = LinExpr::zero(self.rows);
        for (a, c) in &self.terms {
            out.push(
                Atom {
                    deriv: a.deriv + 1,
                    ..*a
                },
                c.clone(),
            );
        }
        out
    }

    /// `∫_s^∞` for decaying profiles; only defined on derivatives.
    pub fn tail(&self) -> Result<LinExpr> {
        let mut out = LinExpr::zero(self.rows);
        for (a, c) in &self.terms {
            if a.deriv == 0 {
                return Err(Error::numerical(
                    "tail integral of an undifferentiated profile",
                ));
            }
            out.push(
                Atom {
                    deriv: a.deriv - 1,
                    ..*a
                },
                -c,
            );
        }
        Ok(out)
    }

    /// Time derivative, with `rules[j]` giving `∂t` of source `j`
    /// (one row per component).
    pub fn dt(&self, rules: &[Option<LinExpr>]) -> Result<LinExpr> {
        let mut out = LinExpr::zero(self.rows);
        for (a, c) in &self.terms {
            let rule = rules
                .get(a.source)
                .and_then(|r| r.as_ref())
                .ok_or_else(|| Error::numerical(format!("no time rule for source {}", a.source)))?;
            let mut r = rule.rows_range(a.comp, 1);
            for _ in 0..a.deriv {
                r = r.d();
            }
            out.add_scaled(
                &r.map(&DMatrix::from_column_slice(self.rows, 1, c.as_slice())),
                1.0,
            );
        }
        Ok(out)
    }

    /// Pointwise evaluation from atom values.
    pub fn eval(&self, mut value: impl FnMut(Atom) -> Result<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.rows);
        for (a, c) in &self.terms {
            out += c * value(*a)?;
        }
        Ok(out)
    }
}

/// Derivatives of sampled sources on a uniform grid, cached per atom.
#[derive(Debug)]
pub struct AtomCache<'a> {
    spacing: f64,
    sources: &'a [Option<Vec<Vec<f64>>>],
    cache: HashMap<Atom, Vec<f64>>,
}

impl<'a> AtomCache<'a> {
    /// `sources[j][c]` holds samples of component `c` of source `j`.
    pub fn new(spacing: f64, sources: &'a [Option<Vec<Vec<f64>>>]) -> Self {
        Self {
            spacing,
            sources,
            cache: HashMap::new(),
        }
    }

    fn raw(&self, atom: Atom) -> Result<&'a [f64]> {
        self.sources
            .get(atom.source)
            .and_then(|s| s.as_ref())
            .and_then(|s| s.get(atom.comp))
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::numerical(format!("source {} is not available", atom.source)))
    }

    pub fn get(&mut self, atom: Atom) -> Result<&[f64]> {
        if !self.cache.contains_key(&atom) {
            let raw = self.raw(atom)?;
            let d = derivative(raw, self.spacing, atom.deriv);
            self.cache.insert(atom, d);
        }
        Ok(&self.cache[&atom])
    }

    /// Whole-grid evaluation, `rows × points`.
    pub fn eval_grid(&mut self, e: &LinExpr) -> Result<Vec<Vec<f64>>> {
        let n = self
            .sources
            .iter()
            .flatten()
            .flatten()
            .map(|v| v.len())
            .next()
            .unwrap_or(0);
        let mut out = vec![vec![0.0; n]; e.rows()];
        for (a, c) in e.terms() {
            let vals = self.get(*a)?.to_vec();
            for (r, row) in out.iter_mut().enumerate() {
                let cr = c[r];
                if cr != 0.0 {
                    row.iter_mut().zip(&vals).for_each(|(o, v)| *o += cr * v);
                }
            }
        }
        Ok(out)
    }

    /// Value at grid index `j`.
    pub fn eval_at(&mut self, e: &LinExpr, j: usize) -> Result<DVector<f64>> {
        e.eval(|a| Ok(self.get(a)?[j]))
    }
}

/// Point evaluation at index `j` without caching whole-grid derivatives.
pub fn eval_point(
    spacing: f64,
    sources: &[Option<Vec<Vec<f64>>>],
    e: &LinExpr,
    j: usize,
) -> Result<DVector<f64>> {
    e.eval(|a| {
        let raw = sources
            .get(a.source)
            .and_then(|s| s.as_ref())
            .and_then(|s| s.get(a.comp))
            .ok_or_else(|| Error::numerical(format!("source {} is not available", a.source)))?;
        Ok(point_derivative(raw, spacing, a.deriv, j))
    })
}

/// Spacing multiple keeping round-off in an `order`-th difference near `1e-8`.
fn stride(h: f64, order: usize) -> usize {
    if order < 5 {
        return 1;
    }
    let target = 2.0 * 1e-8f64.powf(1.0 / order as f64);
    ((target / h).ceil() as usize).max(1)
}

/// `order`-th derivative of uniformly sampled values, fourth-order accurate in
/// the (possibly coarsened) spacing.
pub fn derivative(values: &[f64], h: f64, order: usize) -> Vec<f64> {
    if order == 0 {
        return values.to_vec();
    }
    let s = stride(h, order);
    let st = Stencil::new(order, 4);
    let n = values.len();
    let mut out = vec![0.0; n];
    for r in 0..s.min(n) {
        let sub: Vec<f64> = values[r..].iter().step_by(s).copied().collect();
        if sub.len() < st.width() {
            continue;
        }
        let d = st.apply(&sub, h * s as f64);
        for (i, v) in d.into_iter().enumerate() {
            out[r + i * s] = v;
        }
    }
    out
}

/// Single-point version of [`derivative`].
pub fn point_derivative(values: &[f64], h: f64, order: usize, j: usize) -> f64 {
    if order == 0 {
        return values[j];
    }
    let s = stride(h, order);
    let sub: Vec<f64> = values[j % s..].iter().step_by(s).copied().collect();
    Stencil::new(order, 4).at(&sub, h * s as f64, j / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_a_gaussian() {
        let h = 0.01;
        let xs: Vec<f64> = (0..800).map(|i| i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| (-(x - 4.0) * (x - 4.0)).exp()).collect();
        let d2 = derivative(&f, h, 2);
        for (j, &x) in xs.iter().enumerate().step_by(37) {
            let u = x - 4.0;
            let exact = (4.0 * u * u - 2.0) * (-u * u).exp();
            assert!((d2[j] - exact).abs() < 1e-6);
        }
        let d6 = derivative(&f, h, 6);
        let u: f64 = 0.3;
        let j = 430;
        // H6(u) e^{-u²} with physicists' Hermite H6
        let h6 = 64.0 * u.powi(6) - 480.0 * u.powi(4) + 720.0 * u * u - 120.0;
        assert!((d6[j] - h6 * (-u * u).exp()).abs() < 1e-2 * h6.abs().max(1.0));
    }

    #[test]
    fn time_rule_substitution() {
        // ∂t s = ∂² s  →  ∂t(∂s) = ∂³ s
        let rule = LinExpr::source(0, &DMatrix::from_element(1, 1, 1.0))
            .d()
            .d();
        let e = LinExpr::source(0, &DMatrix::from_element(2, 1, 1.0)).d();
        let dt = e.dt(&[Some(rule)]).unwrap();
        let terms: Vec<_> = dt.terms().collect();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0.deriv, 3);
        assert_eq!(terms[0].1.as_slice(), &[1.0, 1.0]);
        assert!(e.tail().unwrap().tail().is_err());
    }
}
