//! Discrete norms, residual audits of the expansions, and error studies
//! against the kinetic solver.

use rayon::prelude::*;

use crate::asymptotic::{build_expansion, AsymptoticExpansion, Case, ExpansionConfig};
use crate::coupling::{from_network_vars, to_network_vars, NetworkVariables};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::hermite::build_quadrature;
use crate::solver::{
    solve_halfline, solve_network, Grid, IbvpProblem, InitialData, NetworkProblem, Scheme,
};
use crate::spectral::{build_system, Collision, MomentSystem};

/// Environment variable capping the worker threads of the sweeps.
pub const THREADS_ENV: &str = "KINETIC_NET_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSuite {
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
}

/// Norms of a field sampled with spacing `dx`, summed over components.
pub fn norms(field: &Field, dx: f64) -> Result<NormSuite> {
    if field.cells() == 0 || field.comps() == 0 {
        return Err(Error::config("norms of an empty field"));
    }
    if !(dx > 0.0) {
        return Err(Error::config("grid spacing must be positive"));
    }
    let (mut s2, mut d2, mut linf) = (0.0, 0.0, 0.0f64);
    for c in 0..field.comps() {
        let r = field.component(c);
        for v in r {
            s2 += v * v;
            linf = linf.max(v.abs());
        }
        for w in r.windows(2) {
            let d = (w[1] - w[0]) / dx;
            d2 += d * d;
        }
    }
    let l2 = (s2 * dx).sqrt();
    Ok(NormSuite {
        l2,
        linf,
        h1: (l2 * l2 + d2 * dx).sqrt(),
    })
}

/// Least-squares fit of `log error = slope · log ε + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

pub fn fit_slope(eps: &[f64], errors: &[f64]) -> Result<SlopeFit> {
    if eps.len() != errors.len() || eps.len() < 2 {
        return Err(Error::config(
            "slope fit needs at least two matching points",
        ));
    }
    if eps.iter().chain(errors).any(|v| !(*v > 0.0)) {
        return Err(Error::numerical("slope fit needs positive values"));
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (rss / n).sqrt(),
    })
}

/// Fit over the three smallest `ε` and over the full range.
fn fits(eps: &[f64], errors: &[f64]) -> Result<(SlopeFit, SlopeFit)> {
    let mut idx: Vec<usize> = (0..eps.len()).collect();
    idx.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
    let small: Vec<usize> = idx.into_iter().take(3).collect();
    let se: Vec<f64> = small.iter().map(|&i| eps[i]).collect();
    let sr: Vec<f64> = small.iter().map(|&i| errors[i]).collect();
    Ok((fit_slope(&se, &sr)?, fit_slope(eps, errors)?))
}

fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(Error::config("an ε sweep needs at least 3 values"));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::config(
            "ε values must lie in (0, 1) and decrease strictly",
        ));
    }
    Ok(())
}

fn decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn tag_eps<T>(eps: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("ε = {eps}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("ε = {eps}: {m}")),
    })
}

/// Runs `f` over `items` on a pool capped by [`THREADS_ENV`].
fn par_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Settings shared by the residual and convergence sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n_half: usize,
    pub edges: usize,
    pub final_time: f64,
    /// Kinetic reference cells per unit `ε`.
    pub cells_per_eps: usize,
    pub cfl: f64,
    pub scheme: Scheme,
    pub initial: Option<InitialData>,
    pub order: Option<usize>,
    pub outer_spacing: f64,
    pub z_max: f64,
    pub dz: f64,
    /// Evaluation times per unit time in residual audits.
    pub residual_times: usize,
    /// Compare with a run on half the spacing at the largest `ε`.
    pub richardson: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_half: 3,
            edges: 3,
            final_time: 1.0,
            cells_per_eps: 16,
            cfl: 0.9,
            scheme: Scheme::Upwind,
            initial: None,
            order: None,
            outer_spacing: 1.0 / 1024.0,
            z_max: 20.0,
            dz: 0.01,
            residual_times: 16,
            richardson: true,
        }
    }
}

impl StudyConfig {
    pub fn system(&self, collision: Collision) -> Result<MomentSystem> {
        build_system(build_quadrature(self.n_half)?, collision)
    }

    fn initial_for(&self, block: usize) -> InitialData {
        self.initial
            .clone()
            .unwrap_or_else(|| InitialData::default_for(block))
    }

    fn expansion_config(&self, eps: f64, length: f64, times: Vec<f64>) -> ExpansionConfig {
        ExpansionConfig {
            epsilon: eps,
            final_time: self.final_time,
            outer_spacing: self.outer_spacing,
            outer_length: Some(length),
            z_max: self.z_max,
            dz: self.dz,
            snapshot_times: times,
            edges: self.edges,
            order: self.order,
        }
    }

    fn reference_grid(
        &self,
        sys: &MomentSystem,
        eps: f64,
        support_end: f64,
        cells_per_eps: usize,
    ) -> Result<Grid> {
        let vmax = sys.quadrature.vmax();
        let length = Grid::default_length(support_end, vmax, self.final_time);
        Grid::for_epsilon(eps, cells_per_eps, length, self.final_time, self.cfl, vmax)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub epsilon: f64,
    pub case: Case,
    /// `L²([0, T] × R+)` norms.
    pub e1: f64,
    pub e1_t: f64,
    pub e2: f64,
    pub e2_t: f64,
    /// Viscous part of `E1`.
    pub e1_viscous: f64,
    /// Largest spatial `L²` norm over the evaluation times.
    pub e1_max: f64,
    pub e2_max: f64,
    pub e1_viscous_max: f64,
    /// Exponents implied by the sweep: `‖E1‖ ~ ε^{1/2+κ1}`, `‖E2‖ ~ ε^{1+κ2}`.
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
}

/// Space-time norms of the leftover fields, evaluated on `dx = ε / 16` and
/// at the stored times (trapezoid rule in time).
pub fn residual_audit(exp: &AsymptoticExpansion) -> Result<ResidualReport> {
    let times = exp.snapshot_times();
    if times.len() < 2 {
        return Err(Error::config(
            "residual audit needs at least two stored times",
        ));
    }
    let dx = exp.epsilon / 16.0;
    let n = (exp.outer_grid.length() / dx).floor() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|j| j as f64 * dx).collect();
    let l2 = |f: &Field| -> f64 { f.data().iter().map(|v| v * v).sum::<f64>() * dx };
    let mut samples = Vec::new();
    for &t in &times {
        let r = exp.residual_fields(&xs, t)?;
        samples.push([
            l2(&r.e1),
            l2(&r.e1_t),
            l2(&r.e2),
            l2(&r.e2_t),
            l2(&r.e1_viscous),
        ]);
    }
    let mut acc = [0.0; 5];
    let mut maxes = [0.0f64; 5];
    for (i, s) in samples.iter().enumerate() {
        for q in 0..5 {
            maxes[q] = maxes[q].max(s[q].sqrt());
        }
        if i > 0 {
            let w = 0.5 * (times[i] - times[i - 1]);
            for q in 0..5 {
                acc[q] += w * (s[q] + samples[i - 1][q]);
            }
        }
    }
    let r = acc.map(f64::sqrt);
    Ok(ResidualReport {
        epsilon: exp.epsilon,
        case: exp.case,
        e1: r[0],
        e1_t: r[1],
        e2: r[2],
        e2_t: r[3],
        e1_viscous: r[4],
        e1_max: maxes[0],
        e2_max: maxes[2],
        e1_viscous_max: maxes[4],
        kappa1: None,
        kappa2: None,
    })
}

#[derive(Debug, Clone)]
pub struct ResidualSweep {
    pub case: Case,
    pub reports: Vec<ResidualReport>,
    pub e1_fit: Option<SlopeFit>,
    pub e2_fit: Option<SlopeFit>,
    pub e1_viscous_fit: Option<SlopeFit>,
}

fn optional_fit(eps: &[f64], v: &[f64]) -> Option<SlopeFit> {
    if v.iter().all(|x| *x > 0.0) {
        fit_slope(eps, v).ok()
    } else {
        None
    }
}

pub fn residual_sweep(case: Case, eps_list: &[f64], cfg: &StudyConfig) -> Result<ResidualSweep> {
    check_eps_list(eps_list)?;
    let sys = cfg.system(case.collision())?;
    let init = cfg.initial_for(sys.block);
    let m = cfg.residual_times.max(1);
    if 64 % m != 0 {
        return Err(Error::config("residual times per unit must divide 64"));
    }
    let times: Vec<f64> = (0..=m)
        .map(|i| cfg.final_time * i as f64 / m as f64)
        .collect();
    let length = init.support_end() + sys.quadrature.vmax() * cfg.final_time + 1.0;
    let mut reports = par_map(eps_list, |&eps| {
        tag_eps(
            eps,
            (|| {
                let exp = build_expansion(
                    &sys,
                    case,
                    &init,
                    &cfg.expansion_config(eps, length, times.clone()),
                )?;
                residual_audit(&exp)
            })(),
        )
    })?;
    let pick = |f: fn(&ResidualReport) -> f64| -> Vec<f64> { reports.iter().map(f).collect() };
    let e1_fit = optional_fit(eps_list, &pick(|r| r.e1));
    let e2_fit = optional_fit(eps_list, &pick(|r| r.e2));
    let e1_viscous_fit = optional_fit(eps_list, &pick(|r| r.e1_viscous));
    for r in &mut reports {
        r.kappa1 = e1_fit.map(|f| f.slope - 0.5);
        r.kappa2 = e2_fit.map(|f| f.slope - 1.0);
    }
    Ok(ResidualSweep {
        case,
        reports,
        e1_fit,
        e2_fit,
        e1_viscous_fit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceEntry {
    pub epsilon: f64,
    pub dx: f64,
    pub cells: usize,
    pub norms: NormSuite,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub case: Case,
    pub entries: Vec<ConvergenceEntry>,
    /// Fit of the `H¹` errors over the three smallest `ε`.
    pub fit: SlopeFit,
    pub fit_full: SlopeFit,
    pub fit_l2: SlopeFit,
    pub fit_linf: SlopeFit,
    /// `H¹` errors decrease with `ε`.
    pub monotone: bool,
    /// `‖U_{dx} − U_{dx/2}‖_{H¹} / ‖U − U_ε‖_{H¹}` at the largest `ε`.
    pub richardson_ratio: Option<f64>,
}

fn sample_on(exp: &AsymptoticExpansion, xs: &[f64], t: f64) -> Result<Field> {
    exp.evaluate(xs, t)
}

fn difference(a: &Field, b: &Field) -> Field {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d
}

/// Cell averages of pairs of fine cells.
fn coarsen(f: &Field) -> Field {
    let cells = f.cells() / 2;
    let mut out = Field::zeros(f.comps(), cells);
    for c in 0..f.comps() {
        let r = f.component(c);
        for j in 0..cells {
            out.set(c, j, 0.5 * (r[2 * j] + r[2 * j + 1]));
        }
    }
    out
}

pub fn convergence_study(
    case: Case,
    eps_list: &[f64],
    cfg: &StudyConfig,
) -> Result<ConvergenceReport> {
    check_eps_list(eps_list)?;
    let sys = cfg.system(case.collision())?;
    let init = cfg.initial_for(sys.block);
    let kind = case.boundary_kind(cfg.edges)?;
    let t = cfg.final_time;
    let results = par_map(eps_list, |&eps| {
        tag_eps(
            eps,
            (|| {
                let grid = cfg.reference_grid(&sys, eps, init.support_end(), cfg.cells_per_eps)?;
                let reference = |grid: &Grid| -> Result<Field> {
                    let p = IbvpProblem {
                        sys: &sys,
                        boundary: kind,
                        epsilon: eps,
                        grid: grid.clone(),
                        scheme: cfg.scheme,
                        initial: init.moment_field(&sys, eps, &grid.centers()),
                        snapshot_times: vec![t],
                    };
                    Ok(solve_halfline(&p)?.last()[0].clone())
                };
                let u = reference(&grid)?;
                let exp = build_expansion(
                    &sys,
                    case,
                    &init,
                    &cfg.expansion_config(eps, grid.length, vec![0.0, t]),
                )?;
                let ue = sample_on(&exp, &grid.centers(), t)?;
                let err = norms(&difference(&u, &ue), grid.dx)?;
                let rich = if cfg.richardson && eps == eps_list[0] {
                    let fine =
                        cfg.reference_grid(&sys, eps, init.support_end(), 2 * cfg.cells_per_eps)?;
                    let uf = coarsen(&reference(&fine)?);
                    Some(norms(&difference(&u, &uf), grid.dx)?.h1 / err.h1)
                } else {
                    None
                };
                Ok((
                    ConvergenceEntry {
                        epsilon: eps,
                        dx: grid.dx,
                        cells: grid.cells,
                        norms: err,
                    },
                    rich,
                ))
            })(),
        )
    })?;
    let richardson_ratio = results.iter().find_map(|(_, r)| *r);
    let entries: Vec<ConvergenceEntry> = results.into_iter().map(|(e, _)| e).collect();
    let h1: Vec<f64> = entries.iter().map(|e| e.norms.h1).collect();
    let l2: Vec<f64> = entries.iter().map(|e| e.norms.l2).collect();
    let linf: Vec<f64> = entries.iter().map(|e| e.norms.linf).collect();
    let (fit, fit_full) = fits(eps_list, &h1)?;
    Ok(ConvergenceReport {
        case,
        monotone: decreasing(&h1),
        fit,
        fit_full,
        fit_l2: fits(eps_list, &l2)?.0,
        fit_linf: fits(eps_list, &linf)?.0,
        entries,
        richardson_ratio,
    })
}

/// Default network data: shifted bumps of decreasing height, one per edge.
pub fn default_edge_data(block: usize, edges: usize) -> Vec<InitialData> {
    (0..edges)
        .map(|i| {
            let mut amp = vec![0.0; block];
            amp[0] = 1.0 - 0.3 * i as f64;
            amp[1] = 0.2 * i as f64;
            InitialData::single(1.5 + 0.25 * i as f64, 1.0, amp)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEntry {
    pub epsilon: f64,
    /// `‖G^{(i)} − G^{(i)}_ε‖_{L∞}` per edge.
    pub edge_linf: Vec<f64>,
    /// `‖U^{(k)} − U^{(k)}_ε‖_{L∞}` of the transformed variables.
    pub transformed_linf: Vec<f64>,
    /// The triangle-inequality bounds on the edge errors hold.
    pub bound_holds: bool,
}

#[derive(Debug, Clone)]
pub struct NetworkReport {
    pub collision: Collision,
    pub edges: usize,
    pub entries: Vec<NetworkEntry>,
    /// Every edge error decreases with `ε`.
    pub monotone: bool,
}

/// Network solve against the expansion assembled edge by edge: the sum of the
/// edges through the reflecting case, the differences through the junction case.
pub fn network_study(
    collision: Collision,
    eps_list: &[f64],
    cfg: &StudyConfig,
) -> Result<NetworkReport> {
    check_eps_list(eps_list)?;
    let sys = cfg.system(collision)?;
    let n = cfg.edges;
    if n < 2 {
        return Err(Error::config("a network needs at least 2 edges"));
    }
    let data = default_edge_data(sys.block, n);
    let mut transformed = vec![InitialData::combine(
        &data.iter().map(|d| (1.0, d)).collect::<Vec<_>>(),
    )];
    for d in &data[1..] {
        transformed.push(InitialData::combine(&[(1.0, d), (-1.0, &data[0])]));
    }
    let (sum_case, diff_case) = match collision {
        Collision::Q1 => (Case::Q1Ibvp1, Case::Q1Ibvp2),
        Collision::Q2 => (Case::Q2Ibvp1, Case::Q2Ibvp2),
    };
    let support = data.iter().map(|d| d.support_end()).fold(0.0, f64::max);
    let t = cfg.final_time;
    let entries = par_map(eps_list, |&eps| {
        tag_eps(
            eps,
            (|| {
                let grid = cfg.reference_grid(&sys, eps, support, cfg.cells_per_eps)?;
                let xs = grid.centers();
                let p = NetworkProblem {
                    sys: &sys,
                    epsilon: eps,
                    grid: grid.clone(),
                    scheme: cfg.scheme,
                    initial: data
                        .iter()
                        .map(|d| d.moment_field(&sys, eps, &xs))
                        .collect(),
                    snapshot_times: vec![t],
                };
                let reference = solve_network(&p)?.last().to_vec();
                let mut u_eps = Vec::new();
                for (k, d) in transformed.iter().enumerate() {
                    let case = if k == 0 { sum_case } else { diff_case };
                    let mut ecfg = cfg.expansion_config(eps, grid.length, vec![0.0, t]);
                    if case == Case::Q2Ibvp1 {
                        ecfg.order = None;
                    }
                    let exp = build_expansion(&sys, case, d, &ecfg)?;
                    u_eps.push(exp.evaluate(&xs, t)?);
                }
                let g_eps = from_network_vars(&NetworkVariables { u: u_eps.clone() })?;
                let u_ref = to_network_vars(&reference)?;
                let edge_linf: Vec<f64> = reference
                    .iter()
                    .zip(&g_eps)
                    .map(|(a, b)| a.max_abs_diff(b))
                    .collect();
                let transformed_linf: Vec<f64> = u_ref
                    .u
                    .iter()
                    .zip(&u_eps)
                    .map(|(a, b)| a.max_abs_diff(b))
                    .collect();
                let slack = 1e-12 * (1.0 + transformed_linf.iter().sum::<f64>());
                let first = transformed_linf.iter().sum::<f64>() / n as f64;
                let bound_holds = edge_linf[0] <= first + slack
                    && (1..n).all(|i| edge_linf[i] <= transformed_linf[i] + edge_linf[0] + slack);
                Ok(NetworkEntry {
                    epsilon: eps,
                    edge_linf,
                    transformed_linf,
                    bound_holds,
                })
            })(),
        )
    })?;
    let monotone =
        (0..n).all(|i| decreasing(&entries.iter().map(|e| e.edge_linf[i]).collect::<Vec<_>>()));
    Ok(NetworkReport {
        collision,
        edges: n,
        entries,
        monotone,
    })
}
