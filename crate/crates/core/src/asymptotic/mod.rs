//! Small-ε asymptotic expansions of the half-line problems.
//!
//! Every case is written as one expansion in powers of `√ε`:
//!
//! `U_ε = Σ_k ε^{k/2} (Ū_k(x, t) + Û_k(x/√ε, t) + Ũ_k(x/ε, t))`
//!
//! Outer terms live on a uniform `x` grid, viscous terms are scalar heat
//! profiles on a `z` grid plus reconstructed components, kinetic terms are
//! exponential-polynomial profiles in `y` with time-dependent coefficients.
//! For the Q1 cases the odd indices vanish, so index `2j` is the `ε^j` term.

mod engine;
pub mod expoly;
pub mod heat;
pub mod layer;
pub mod model;
pub mod outer;
pub mod symbolic;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use self::expoly::ExpPoly;
use self::heat::HeatGrid;
use self::model::{KineticModel, OuterModel, ViscousModel};
use self::outer::OuterGrid;
use self::symbolic::{AtomCache, LinExpr};
use crate::coupling::{build_boundary_matrix, BoundaryKind, BoundaryMatrix};
use crate::error::{Error, Result};
use crate::field::{interpolate, Field};
use crate::linalg;
use crate::solver::InitialData;
use crate::spectral::{
    char_decomposition, layer_matrix, stable_subspace, CharDecomposition, Collision, MomentSystem,
};

/// Points used by the interpolating evaluator.
const INTERP_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    Q1Ibvp1,
    Q1Ibvp2,
    Q2Ibvp1,
    Q2Ibvp2,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Q1Ibvp1, Case::Q1Ibvp2, Case::Q2Ibvp1, Case::Q2Ibvp2];

    pub fn collision(self) -> Collision {
        match self {
            Case::Q1Ibvp1 | Case::Q1Ibvp2 => Collision::Q1,
            Case::Q2Ibvp1 | Case::Q2Ibvp2 => Collision::Q2,
        }
    }

    pub fn boundary_kind(self, edges: usize) -> Result<BoundaryKind> {
        match self {
            Case::Q1Ibvp1 | Case::Q2Ibvp1 => Ok(BoundaryKind::B1),
            Case::Q1Ibvp2 | Case::Q2Ibvp2 => BoundaryKind::b2(edges),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Case::Q1Ibvp1 => "q1-ibvp1",
            Case::Q1Ibvp2 => "q1-ibvp2",
            Case::Q2Ibvp1 => "q2-ibvp1",
            Case::Q2Ibvp2 => "q2-ibvp2",
        }
    }

    /// Highest half-index `K` built by default.
    pub fn default_order(self) -> usize {
        match self {
            Case::Q2Ibvp2 => 3,
            _ => 2,
        }
    }

    pub fn has_kinetic(self) -> bool {
        matches!(self, Case::Q1Ibvp2 | Case::Q2Ibvp2)
    }

    pub fn has_viscous(self) -> bool {
        matches!(self, Case::Q2Ibvp1 | Case::Q2Ibvp2)
    }

    pub fn resolve_order(self, order: Option<usize>) -> Result<usize> {
        let k = order.unwrap_or(self.default_order());
        match self {
            Case::Q2Ibvp1 if k != 2 => Err(Error::config("q2-ibvp1 is built to order 2 only")),
            _ if k > 3 => Err(Error::config(format!("expansion order {k} exceeds 3"))),
            _ => Ok(k),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Case {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Case::ALL
            .into_iter()
            .find(|c| c.tag() == t)
            .ok_or_else(|| Error::config(format!("unknown case '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionConfig {
    pub epsilon: f64,
    pub final_time: f64,
    /// Target spacing of the outer grid; the actual spacing is `λ T / steps`.
    pub outer_spacing: f64,
    /// Defaults to the initial support plus `λ T + 1`.
    pub outer_length: Option<f64>,
    pub z_max: f64,
    pub dz: f64,
    /// Must be multiples of `T / 64`.
    pub snapshot_times: Vec<f64>,
    pub edges: usize,
    pub order: Option<usize>,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            final_time: 1.0,
            outer_spacing: 1.0 / 1024.0,
            outer_length: None,
            z_max: 20.0,
            dz: 0.01,
            snapshot_times: vec![0.0, 0.5, 1.0],
            edges: 3,
            order: None,
        }
    }
}

impl ExpansionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.final_time > 0.0) {
            return Err(Error::config("final time must be positive"));
        }
        if !(self.outer_spacing > 0.0) || self.outer_length.is_some_and(|l| !(l > 0.0)) {
            return Err(Error::config(
                "outer grid needs positive spacing and length",
            ));
        }
        if self.snapshot_times.is_empty() {
            return Err(Error::config("no snapshot times requested"));
        }
        Ok(())
    }
}

/// Stored state at one evaluation time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    /// `ū_k`, `b × points`.
    pub outer: Vec<Vec<Vec<f64>>>,
    /// Heat profiles `h_k` where present.
    pub heat: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Condition number of the boundary system of every order.
    pub boundary_condition: Vec<f64>,
    /// Largest relative residual of the boundary solves.
    pub max_solve_residual: f64,
    /// Heat boundary data per solve order and time step.
    pub heat_boundary_data: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct OuterTerm {
    pub index: usize,
    /// Power of `ε` multiplying the term.
    pub scale_exponent: f64,
    pub h: f64,
    pub u: Field,
    pub v: Field,
}

#[derive(Debug, Clone)]
pub struct ViscousLayerTerm {
    pub index: usize,
    pub scale_exponent: f64,
    pub dz: f64,
    /// `h_k = P0^T û_k` when the order carries a heat profile.
    pub profile: Option<Vec<f64>>,
    pub u: Field,
    pub v: Field,
}

#[derive(Debug, Clone)]
pub struct KineticLayerTerm {
    pub index: usize,
    pub scale_exponent: f64,
    /// Coefficients on the stable subspace.
    pub gamma: Vec<f64>,
    /// Coefficients of the whole basis, forced part included.
    pub coefficients: Vec<f64>,
    pub profile: ExpPoly,
}

impl KineticLayerTerm {
    pub fn sample(&self, ys: &[f64]) -> Field {
        let mut f = Field::zeros(self.profile.dim, ys.len());
        for (j, &y) in ys.iter().enumerate() {
            f.set_column(j, &self.profile.eval(y));
        }
        f
    }

    /// Slowest decay length of the profile.
    pub fn decay_length(&self) -> f64 {
        let r = self.profile.slowest_rate();
        if r.is_finite() && r > 0.0 {
            1.0 / r
        } else {
            0.0
        }
    }
}

/// Geometrically stretched grid on `[0, y_max]`, finest at `y = 0`.
pub fn stretched_grid(y_max: f64, points: usize, ratio: f64) -> Vec<f64> {
    let n = points.max(2) - 1;
    if (ratio - 1.0).abs() < 1e-14 {
        return (0..=n).map(|i| y_max * i as f64 / n as f64).collect();
    }
    let q = ratio.powf(1.0 / n as f64);
    let total = (q.powi(n as i32) - 1.0) / (q - 1.0);
    (0..=n)
        .map(|i| y_max * (q.powi(i as i32) - 1.0) / (q - 1.0) / total)
        .collect()
}

/// Outer, viscous and kinetic contributions, each already scaled.
#[derive(Debug, Clone)]
pub struct ExpansionParts {
    pub outer: Field,
    pub viscous: Field,
    pub kinetic: Field,
}

impl ExpansionParts {
    pub fn total(&self) -> Field {
        let mut f = self.outer.clone();
        f.axpy(1.0, &self.viscous);
        f.axpy(1.0, &self.kinetic);
        f
    }
}

/// Leftover fields of the expansion inserted into the moment system.
#[derive(Debug, Clone)]
pub struct ResidualFields {
    /// Nonequilibrium rows: `−Σ ε^{(m−2)/2} v̄_m − ε^{(K−1)/2} v̂_{K+1}`.
    pub e1: Field,
    pub e1_t: Field,
    /// The viscous part of `e1` alone.
    pub e1_viscous: Field,
    pub e1_viscous_t: Field,
    /// All rows: time derivatives of the top layer terms.
    pub e2: Field,
    pub e2_t: Field,
}

#[derive(Debug, Clone)]
pub struct AsymptoticExpansion {
    pub case: Case,
    pub epsilon: f64,
    pub order: usize,
    pub sys: MomentSystem,
    pub chars: CharDecomposition,
    pub boundary: BoundaryMatrix,
    pub outer_grid: OuterGrid,
    pub heat_grid: Option<HeatGrid>,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Diagnostics,
    pub outer_model: OuterModel,
    pub viscous: Option<ViscousModel>,
    pub kinetic: Option<KineticModel>,
}

/// Builds the expansion of `case`.
pub fn build_expansion(
    sys: &MomentSystem,
    case: Case,
    initial: &InitialData,
    cfg: &ExpansionConfig,
) -> Result<AsymptoticExpansion> {
    engine::build(sys, case, initial, cfg)
}

/// Reflecting wall for Q1: the outer terms alone.
pub fn solve_outer_q1_ibvp1(
    sys: &MomentSystem,
    initial: &InitialData,
    cfg: &ExpansionConfig,
) -> Result<AsymptoticExpansion> {
    build_expansion(sys, Case::Q1Ibvp1, initial, cfg)
}

pub fn solve_q1_ibvp2(
    sys: &MomentSystem,
    initial: &InitialData,
    cfg: &ExpansionConfig,
) -> Result<AsymptoticExpansion> {
    build_expansion(sys, Case::Q1Ibvp2, initial, cfg)
}

pub fn solve_q2_ibvp1(
    sys: &MomentSystem,
    initial: &InitialData,
    cfg: &ExpansionConfig,
) -> Result<AsymptoticExpansion> {
    build_expansion(sys, Case::Q2Ibvp1, initial, cfg)
}

pub fn solve_q2_ibvp2(
    sys: &MomentSystem,
    initial: &InitialData,
    cfg: &ExpansionConfig,
) -> Result<AsymptoticExpansion> {
    build_expansion(sys, Case::Q2Ibvp2, initial, cfg)
}

fn sources_of(rows: &[Vec<Vec<f64>>]) -> Vec<Option<Vec<Vec<f64>>>> {
    rows.iter().map(|u| Some(u.clone())).collect()
}

fn heat_sources(h: &[Option<Vec<f64>>]) -> Vec<Option<Vec<Vec<f64>>>> {
    h.iter()
        .map(|p| p.as_ref().map(|v| vec![v.clone()]))
        .collect()
}

fn sample_rows(rows: &[Vec<f64>], h: f64, points: &[f64]) -> Field {
    let mut f = Field::zeros(rows.len(), points.len());
    for (c, row) in rows.iter().enumerate() {
        for (j, &s) in points.iter().enumerate() {
            f.set(c, j, interpolate(row, 0.0, h, s, INTERP_POINTS));
        }
    }
    f
}

impl AsymptoticExpansion {
    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn snapshot(&self, t: f64) -> Result<&Snapshot> {
        let tol = 1e-9 * self.outer_grid.dt.max(1e-3);
        self.snapshots
            .iter()
            .find(|s| (s.time - t).abs() < tol.max(1e-9))
            .ok_or_else(|| {
                Error::config(format!(
                    "time {t} is not a stored evaluation time (available: {:?})",
                    self.snapshot_times()
                ))
            })
    }

    fn scale(&self, exponent: f64) -> f64 {
        self.epsilon.powf(exponent)
    }

    fn outer_grid_values(&self, snap: &Snapshot, exprs: &[&LinExpr]) -> Result<Vec<Vec<Vec<f64>>>> {
        let src = sources_of(&snap.outer);
        let mut cache = AtomCache::new(self.outer_grid.h, &src);
        exprs
            .iter()
            .map(|e| self.eval_grid(&mut cache, e, self.outer_grid.points))
            .collect()
    }

    fn heat_grid_values(&self, snap: &Snapshot, exprs: &[&LinExpr]) -> Result<Vec<Vec<Vec<f64>>>> {
        let g = self
            .heat_grid
            .as_ref()
            .ok_or_else(|| Error::config("expansion has no viscous layer"))?;
        let src = heat_sources(&snap.heat);
        let mut cache = AtomCache::new(g.dz, &src);
        exprs
            .iter()
            .map(|e| self.eval_grid(&mut cache, e, g.points))
            .collect()
    }

    fn eval_grid(
        &self,
        cache: &mut AtomCache<'_>,
        e: &LinExpr,
        points: usize,
    ) -> Result<Vec<Vec<f64>>> {
        if e.is_zero() {
            return Ok(vec![vec![0.0; points]; e.rows()]);
        }
        cache.eval_grid(e)
    }

    pub fn outer_terms(&self, t: f64) -> Result<Vec<OuterTerm>> {
        let snap = self.snapshot(t)?;
        let vb: Vec<&LinExpr> = self.outer_model.vbar[..=self.order].iter().collect();
        let v = self.outer_grid_values(snap, &vb)?;
        (0..=self.order)
            .map(|k| {
                Ok(OuterTerm {
                    index: k,
                    scale_exponent: k as f64 / 2.0,
                    h: self.outer_grid.h,
                    u: Field::from_components(snap.outer[k].clone())?,
                    v: Field::from_components(v[k].clone())?,
                })
            })
            .collect()
    }

    pub fn viscous_terms(&self, t: f64) -> Result<Vec<ViscousLayerTerm>> {
        let Some(vm) = &self.viscous else {
            return Ok(Vec::new());
        };
        let snap = self.snapshot(t)?;
        let g = self.heat_grid.as_ref().expect("viscous grid");
        let mut exprs = Vec::new();
        for k in 0..=self.order {
            exprs.push(&vm.uhat[k]);
            exprs.push(&vm.vhat[k]);
        }
        let vals = self.heat_grid_values(snap, &exprs)?;
        (0..=self.order)
            .map(|k| {
                Ok(ViscousLayerTerm {
                    index: k,
                    scale_exponent: k as f64 / 2.0,
                    dz: g.dz,
                    profile: snap.heat[k].clone(),
                    u: Field::from_components(vals[2 * k].clone())?,
                    v: Field::from_components(vals[2 * k + 1].clone())?,
                })
            })
            .collect()
    }

    pub fn kinetic_terms(&self, t: f64) -> Result<Vec<KineticLayerTerm>> {
        let Some(km) = &self.kinetic else {
            return Ok(Vec::new());
        };
        let snap = self.snapshot(t)?;
        let dt = self.outer_grid.dt;
        Ok((0..=self.order)
            .map(|k| {
                let c = km.coeffs(k, snap.step, 0, dt, false);
                KineticLayerTerm {
                    index: k,
                    scale_exponent: k as f64 / 2.0,
                    gamma: c[..km.modes].to_vec(),
                    profile: km.combine(k, &c),
                    coefficients: c,
                }
            })
            .collect())
    }

    /// `U_ε(x, t)` at the points `xs`, `dim × xs.len()`.
    pub fn evaluate(&self, xs: &[f64], t: f64) -> Result<Field> {
        Ok(self.evaluate_parts(xs, t)?.total())
    }

    pub fn evaluate_parts(&self, xs: &[f64], t: f64) -> Result<ExpansionParts> {
        let snap = self.snapshot(t)?;
        let m = self.dim();
        let mut outer = Field::zeros(m, xs.len());
        let fulls: Vec<LinExpr> = (0..=self.order).map(|k| self.outer_model.full(k)).collect();
        let refs: Vec<&LinExpr> = fulls.iter().collect();
        for (k, rows) in self.outer_grid_values(snap, &refs)?.iter().enumerate() {
            outer.axpy(
                self.scale(k as f64 / 2.0),
                &sample_rows(rows, self.outer_grid.h, xs),
            );
        }
        let mut viscous = Field::zeros(m, xs.len());
        if let Some(vm) = &self.viscous {
            let g = self.heat_grid.as_ref().expect("viscous grid");
            let zs: Vec<f64> = xs.iter().map(|x| x / self.epsilon.sqrt()).collect();
            let fulls: Vec<LinExpr> = (0..=self.order).map(|k| vm.full(k)).collect();
            let refs: Vec<&LinExpr> = fulls.iter().collect();
            for (k, rows) in self.heat_grid_values(snap, &refs)?.iter().enumerate() {
                viscous.axpy(self.scale(k as f64 / 2.0), &sample_rows(rows, g.dz, &zs));
            }
        }
        let mut kinetic = Field::zeros(m, xs.len());
        for term in self.kinetic_terms(t)? {
            let ys: Vec<f64> = xs.iter().map(|x| x / self.epsilon).collect();
            kinetic.axpy(self.scale(term.scale_exponent), &term.sample(&ys));
        }
        Ok(ExpansionParts {
            outer,
            viscous,
            kinetic,
        })
    }

    /// `|B U_ε(0, t)|`.
    pub fn boundary_residual(&self, t: f64) -> Result<f64> {
        let u = self.evaluate(&[0.0], t)?;
        Ok((&self.boundary.rows * DVector::from_vec(u.column(0))).norm())
    }

    /// Largest layer contribution at the far end of the outer grid.
    pub fn far_end_layer(&self, t: f64) -> Result<f64> {
        let x = self.outer_grid.length();
        let parts = self.evaluate_parts(&[x], t)?;
        Ok(parts.viscous.max_abs().max(parts.kinetic.max_abs()))
    }

    /// Leftover fields at the points `xs`.
    pub fn residual_fields(&self, xs: &[f64], t: f64) -> Result<ResidualFields> {
        let snap = self.snapshot(t)?;
        let m = self.dim();
        let b = self.sys.block;
        let k_top = self.order;
        let eps = self.epsilon;
        let mut e1 = Field::zeros(m - b, xs.len());
        let mut e1_t = Field::zeros(m - b, xs.len());
        for mm in k_top + 1..=k_top + 2 {
            let v = &self.outer_model.vbar[mm];
            let vt = v.dt(&self.outer_model.rules)?;
            let vals = self.outer_grid_values(snap, &[v, &vt])?;
            let s = -self.scale((mm as f64 - 2.0) / 2.0);
            e1.axpy(s, &sample_rows(&vals[0], self.outer_grid.h, xs));
            e1_t.axpy(s, &sample_rows(&vals[1], self.outer_grid.h, xs));
        }
        let mut e1_viscous = Field::zeros(m - b, xs.len());
        let mut e1_viscous_t = Field::zeros(m - b, xs.len());
        let mut e2 = Field::zeros(m, xs.len());
        let mut e2_t = Field::zeros(m, xs.len());
        if let Some(vm) = &self.viscous {
            let g = self.heat_grid.as_ref().expect("viscous grid");
            let zs: Vec<f64> = xs.iter().map(|x| x / eps.sqrt()).collect();
            let v = &vm.vhat[k_top + 1];
            let vt = v.dt(&vm.rules)?;
            let top = vm.full(k_top);
            let top_t = top.dt(&vm.rules)?;
            let top_tt = top_t.dt(&vm.rules)?;
            let vals = self.heat_grid_values(snap, &[v, &vt, &top_t, &top_tt])?;
            let s = -self.scale((k_top as f64 - 1.0) / 2.0);
            e1_viscous.axpy(s, &sample_rows(&vals[0], g.dz, &zs));
            e1_viscous_t.axpy(s, &sample_rows(&vals[1], g.dz, &zs));
            let s2 = self.scale(k_top as f64 / 2.0);
            e2.axpy(s2, &sample_rows(&vals[2], g.dz, &zs));
            e2_t.axpy(s2, &sample_rows(&vals[3], g.dz, &zs));
        }
        e1.axpy(1.0, &e1_viscous);
        e1_t.axpy(1.0, &e1_viscous_t);
        if let Some(km) = &self.kinetic {
            let ys: Vec<f64> = xs.iter().map(|x| x / eps).collect();
            let dt = self.outer_grid.dt;
            for k in k_top.saturating_sub(1)..=k_top {
                let s = self.scale(k as f64 / 2.0);
                for (r, target) in [(1usize, &mut e2), (2, &mut e2_t)] {
                    let c = km.coeffs(k, snap.step, r, dt, false);
                    let p = km.combine(k, &c);
                    let mut f = Field::zeros(m, ys.len());
                    for (j, &y) in ys.iter().enumerate() {
                        f.set_column(j, &p.eval(y));
                    }
                    target.axpy(s, &f);
                }
            }
        }
        Ok(ResidualFields {
            e1,
            e1_t,
            e1_viscous,
            e1_viscous_t,
            e2,
            e2_t,
        })
    }
}

/// Boundary matrix of the order-0 solve for a B2 junction: columns `B[P+; 0]`,
/// then `B[P0; 0]` for Q2, then the decaying kinetic modes at `y = 0`.
pub fn kinetic_boundary_matrix(sys: &MomentSystem, edges: usize) -> Result<DMatrix<f64>> {
    let chars = char_decomposition(sys);
    let bm = build_boundary_matrix(BoundaryKind::b2(edges)?, sys);
    let solver = layer::LayerSolver::new(sys)?;
    let b = sys.block;
    let lift = |p: &DVector<f64>| {
        let mut v = DVector::zeros(sys.dim());
        v.rows_mut(0, b).copy_from(p);
        &bm.rows * v
    };
    let mut cols = vec![lift(&chars.p_plus)];
    if let Some(p0) = &chars.p_zero {
        cols.push(lift(p0));
    }
    for h in solver.homogeneous_basis() {
        cols.push(&bm.rows * DVector::from_vec(h.eval(0.0)));
    }
    Ok(DMatrix::from_columns(&cols))
}

pub fn kinetic_boundary_condition(sys: &MomentSystem, edges: usize) -> Result<f64> {
    Ok(linalg::condition_number(&kinetic_boundary_matrix(
        sys, edges,
    )?))
}

/// Determinant of the rows of `[P+, P0]` on the even moments `g0, g2`.
pub fn q2_even_block_determinant(sys: &MomentSystem) -> Result<f64> {
    let chars = char_decomposition(sys);
    let p0 = chars
        .p_zero
        .ok_or_else(|| Error::config("needs the Q2 collision operator"))?;
    Ok(chars.p_plus[0] * p0[2] - chars.p_plus[2] * p0[0])
}

/// Even rows of the decaying eigenvectors of the Q2 layer matrix.
pub fn q2_even_stable_rows(sys: &MomentSystem) -> Result<DMatrix<f64>> {
    if sys.collision != Collision::Q2 {
        return Err(Error::config("needs the Q2 collision operator"));
    }
    let st = stable_subspace(&layer_matrix(sys))?;
    let r = &st.r_minus;
    let rows: Vec<usize> = (0..r.nrows()).step_by(2).collect();
    Ok(r.select_rows(rows.iter()))
}

pub fn q2_even_stable_min_singular(sys: &MomentSystem) -> Result<f64> {
    Ok(linalg::min_singular_value(&q2_even_stable_rows(sys)?))
}
