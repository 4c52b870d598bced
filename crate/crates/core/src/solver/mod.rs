//! Finite-volume solver for the discrete-velocity relaxation system on half
//! lines and star networks.
//!
//! Each discrete velocity is transported by an upwind flux; relaxation towards
//! the local equilibrium is applied in closed form. Junction and reflection
//! rules act through ghost cells: the ghost of velocity `v` at cell `−1−m` is
//! built from the mirror velocity `−v` at cell `m`.

mod initial;

pub use initial::{Bump, InitialData};

use crate::coupling::{build_boundary_matrix, BoundaryKind};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::spectral::MomentSystem;

/// Uniform cell-centred grid on `[0, length]` with a fixed time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub cells: usize,
    pub dx: f64,
    pub dt: f64,
    pub final_time: f64,
    pub steps: usize,
}

impl Grid {
    /// Largest stable step below `cfl · dx / vmax`, shortened so that `steps · dt = T`.
    pub fn new(length: f64, cells: usize, final_time: f64, cfl: f64, vmax: f64) -> Result<Self> {
        if !(length > 0.0) || cells < 4 {
            return Err(Error::config(
                "grid needs positive length and at least 4 cells",
            ));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::config(format!(
                "CFL number must be in (0, 1], got {cfl}"
            )));
        }
        if !(final_time >= 0.0) {
            return Err(Error::config("final time must be non-negative"));
        }
        let dx = length / cells as f64;
        let dt_max = cfl * dx / vmax;
        let steps = (final_time / dt_max).ceil().max(1.0) as usize;
        let dt = if final_time > 0.0 {
            final_time / steps as f64
        } else {
            dt_max
        };
        let steps = if final_time > 0.0 { steps } else { 0 };
        Ok(Self {
            length,
            cells,
            dx,
            dt,
            final_time,
            steps,
        })
    }

    /// Grid with `dx = ε / cells_per_eps` exactly and length at least `min_length`.
    pub fn for_epsilon(
        eps: f64,
        cells_per_eps: usize,
        min_length: f64,
        final_time: f64,
        cfl: f64,
        vmax: f64,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        let dx = eps / cells_per_eps as f64;
        let cells = (min_length / dx).ceil() as usize;
        Self::new(cells as f64 * dx, cells, final_time, cfl, vmax)
    }

    /// Domain length that keeps the far boundary out of reach of data supported
    /// in `[0, support_end]`.
    pub fn default_length(support_end: f64, vmax: f64, final_time: f64) -> f64 {
        support_end + vmax * final_time + 1.0
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells)
            .map(|j| (j as f64 + 0.5) * self.dx)
            .collect()
    }

    pub fn cfl(&self, vmax: f64) -> f64 {
        vmax * self.dt / self.dx
    }
}

/// Time discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// First-order upwind transport, implicit Euler relaxation.
    #[default]
    Upwind,
    /// Fromm (second-order upwind-biased) transport with Strang-split exact relaxation.
    Fromm,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upwind" => Ok(Scheme::Upwind),
            "fromm" => Ok(Scheme::Fromm),
            other => Err(Error::config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// How ghost cells at `x = 0` are filled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Junction {
    /// Star network: average over the other edges.
    Network,
    /// Single edge with a reflection factor.
    Reflect(BoundaryKind),
}

/// Stored states and conservation bookkeeping.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `snapshots[s][edge]` in moment variables.
    pub snapshots: Vec<Vec<Field>>,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// `∫ Σ_edges q(L, t) dt` with the numerical flux actually used.
    pub far_outflow: f64,
    /// `∫ Σ_edges (flux into the edge at x = 0) dt`.
    pub junction_inflow: f64,
    /// Largest `|B U(0, t)|` over all steps (reflection runs only).
    pub max_boundary_residual: f64,
}

impl Trajectory {
    pub fn last(&self) -> &[Field] {
        self.snapshots.last().expect("at least one snapshot")
    }

    /// Relative mismatch of `mass(T) − mass(0) + far outflow − junction inflow`.
    pub fn mass_audit(&self) -> f64 {
        let defect = self.final_mass - self.initial_mass + self.far_outflow - self.junction_inflow;
        defect.abs() / self.initial_mass.abs().max(f64::MIN_POSITIVE)
    }
}

/// One time step of the relaxation system on every edge.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    sys: &'a MomentSystem,
    eps: f64,
    dx: f64,
    dt: f64,
    scheme: Scheme,
    junction: Junction,
    weights: Vec<f64>,
    mirror: Vec<usize>,
}

/// Mass fluxes of a single step, already multiplied by `dt`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepFluxes {
    pub far_outflow: f64,
    pub junction_inflow: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(
        sys: &'a MomentSystem,
        eps: f64,
        grid: &Grid,
        scheme: Scheme,
        junction: Junction,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        let vmax = sys.quadrature.vmax();
        if grid.cfl(vmax) > 1.0 + 1e-12 {
            return Err(Error::config(format!(
                "CFL condition violated: {}",
                grid.cfl(vmax)
            )));
        }
        let n = sys.n_half();
        let mirror = (0..2 * n)
            .map(|k| if k < n { k + n } else { k - n })
            .collect();
        Ok(Self {
            sys,
            eps,
            dx: grid.dx,
            dt: grid.dt,
            scheme,
            junction,
            weights: sys.full_weights(),
            mirror,
        })
    }

    /// Advance DVM states (one field per edge) by `dt`.
    pub fn step(&self, edges: &mut [Field]) -> StepFluxes {
        match self.scheme {
            Scheme::Upwind => {
                let fl = self.transport(edges);
                let theta = self.dt / self.eps;
                for f in edges.iter_mut() {
                    self.relax(f, |fk, mk| (fk + theta * mk) / (1.0 + theta));
                }
                fl
            }
            Scheme::Fromm => {
                let decay = (-0.5 * self.dt / self.eps).exp();
                for f in edges.iter_mut() {
                    self.relax(f, |fk, mk| mk + decay * (fk - mk));
                }
                let fl = self.transport(edges);
                for f in edges.iter_mut() {
                    self.relax(f, |fk, mk| mk + decay * (fk - mk));
                }
                fl
            }
        }
    }

    fn ghost(&self, edges: &[Field], edge: usize, k: usize, m: usize) -> f64 {
        let km = self.mirror[k];
        match self.junction {
            Junction::Network => {
                let n = edges.len();
                let others: f64 = (0..n)
                    .filter(|&e| e != edge)
                    .map(|e| edges[e].get(km, m))
                    .sum();
                others / (n as f64 - 1.0)
            }
            Junction::Reflect(kind) => kind.reflection_factor() * edges[edge].get(km, m),
        }
    }

    fn transport(&self, edges: &mut [Field]) -> StepFluxes {
        let cells = edges[0].cells();
        let nv = edges[0].comps();
        let lam = self.dt / self.dx;
        // ghost values from the pre-step state of all edges
        let ghosts: Vec<Vec<[f64; 2]>> = (0..edges.len())
            .map(|e| {
                (0..nv)
                    .map(|k| [self.ghost(edges, e, k, 0), self.ghost(edges, e, k, 1)])
                    .collect()
            })
            .collect();
        let mut out = StepFluxes::default();
        let mut ext = vec![0.0; cells + 4];
        let mut flux = vec![0.0; cells + 1];
        for (e, f) in edges.iter_mut().enumerate() {
            for k in 0..nv {
                let v = self.sys.quadrature.nodes[k];
                let col = f.component(k);
                // ext[i + 2] = cell i; two ghosts at each end
                ext[0] = ghosts[e][k][1];
                ext[1] = ghosts[e][k][0];
                ext[2..cells + 2].copy_from_slice(col);
                ext[cells + 2] = col[cells - 1];
                ext[cells + 3] = col[cells - 1];
                let nu = v.abs() * lam;
                for (i, fl) in flux.iter_mut().enumerate() {
                    // interface between cell i-1 and cell i  ->  ext[i+1] | ext[i+2]
                    let (l, r) = (i + 1, i + 2);
                    *fl = match (self.scheme, v > 0.0) {
                        (Scheme::Upwind, true) => v * ext[l],
                        (Scheme::Upwind, false) => v * ext[r],
                        (Scheme::Fromm, true) => {
                            v * (ext[l] + 0.25 * (1.0 - nu) * (ext[r] - ext[l - 1]))
                        }
                        (Scheme::Fromm, false) => {
                            v * (ext[r] - 0.25 * (1.0 - nu) * (ext[r + 1] - ext[l]))
                        }
                    };
                }
                let w = self.weights[k] * self.dt;
                out.junction_inflow += w * flux[0];
                out.far_outflow += w * flux[cells];
                let col = f.component_mut(k);
                for j in 0..cells {
                    col[j] -= lam * (flux[j + 1] - flux[j]);
                }
            }
        }
        out
    }

    fn relax(&self, f: &mut Field, update: impl Fn(f64, f64) -> f64) {
        let b = self.sys.block;
        let nv = f.comps();
        let cells = f.cells();
        let mut g = vec![0.0; b];
        for j in 0..cells {
            for (i, gi) in g.iter_mut().enumerate() {
                *gi = (0..nv)
                    .map(|k| self.sys.v[(i, k)] * self.weights[k] * f.get(k, j))
                    .sum();
            }
            for k in 0..nv {
                let mk: f64 = (0..b).map(|i| self.sys.v[(i, k)] * g[i]).sum();
                let fk = f.get(k, j);
                f.set(k, j, update(fk, mk));
            }
        }
    }
}

/// A half-line problem `U_t + A U_x = Q U / ε` with `B U(0, t) = 0`.
#[derive(Debug, Clone)]
pub struct IbvpProblem<'a> {
    pub sys: &'a MomentSystem,
    pub boundary: BoundaryKind,
    pub epsilon: f64,
    pub grid: Grid,
    pub scheme: Scheme,
    /// Moment field at the cell centres.
    pub initial: Field,
    pub snapshot_times: Vec<f64>,
}

/// An `n`-edge star network sharing one grid.
#[derive(Debug, Clone)]
pub struct NetworkProblem<'a> {
    pub sys: &'a MomentSystem,
    pub epsilon: f64,
    pub grid: Grid,
    pub scheme: Scheme,
    /// One moment field per edge.
    pub initial: Vec<Field>,
    pub snapshot_times: Vec<f64>,
}

pub fn solve_network(problem: &NetworkProblem) -> Result<Trajectory> {
    if problem.initial.len() < 2 {
        return Err(Error::config("a network needs at least 2 edges"));
    }
    run(
        problem.sys,
        problem.epsilon,
        &problem.grid,
        problem.scheme,
        Junction::Network,
        &problem.initial,
        &problem.snapshot_times,
    )
}

pub fn solve_halfline(problem: &IbvpProblem) -> Result<Trajectory> {
    run(
        problem.sys,
        problem.epsilon,
        &problem.grid,
        problem.scheme,
        Junction::Reflect(problem.boundary),
        std::slice::from_ref(&problem.initial),
        &problem.snapshot_times,
    )
}

fn to_dvm(sys: &MomentSystem, g: &Field) -> Field {
    let mut f = Field::zeros(g.comps(), g.cells());
    for j in 0..g.cells() {
        f.set_column(j, &sys.dvm_from_moments(&g.column(j)));
    }
    f
}

fn to_moments(sys: &MomentSystem, f: &Field) -> Field {
    let mut g = Field::zeros(f.comps(), f.cells());
    for j in 0..f.cells() {
        g.set_column(j, &sys.moments_from_dvm(&f.column(j)));
    }
    g
}

fn total_mass(edges: &[Field], dx: f64) -> f64 {
    edges
        .iter()
        .map(|g| g.component(0).iter().sum::<f64>() * dx)
        .sum()
}

fn run(
    sys: &MomentSystem,
    eps: f64,
    grid: &Grid,
    scheme: Scheme,
    junction: Junction,
    initial: &[Field],
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    for g in initial {
        if g.comps() != sys.dim() || g.cells() != grid.cells {
            return Err(Error::config(
                "initial field does not match grid and system size",
            ));
        }
    }
    let stepper = Stepper::new(sys, eps, grid, scheme, junction)?;
    let mut snap_steps: Vec<usize> = Vec::new();
    for &t in snapshot_times {
        if t < -1e-12 || t > grid.final_time + 1e-9 {
            return Err(Error::config(format!("snapshot time {t} outside [0, T]")));
        }
        snap_steps.push((t / grid.dt).round() as usize);
    }
    let mut state: Vec<Field> = initial.iter().map(|g| to_dvm(sys, g)).collect();
    let boundary = match junction {
        Junction::Reflect(kind) => Some(build_boundary_matrix(kind, sys)),
        Junction::Network => None,
    };
    let n = sys.n_half();
    let mut traj = Trajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
        initial_mass: total_mass(initial, grid.dx),
        final_mass: 0.0,
        far_outflow: 0.0,
        junction_inflow: 0.0,
        max_boundary_residual: 0.0,
    };
    let record = |step: usize, state: &[Field], traj: &mut Trajectory| {
        for _ in snap_steps.iter().filter(|&&k| k == step) {
            traj.times.push(step as f64 * grid.dt);
            traj.snapshots
                .push(state.iter().map(|f| to_moments(sys, f)).collect());
        }
    };
    record(0, &state, &mut traj);
    for step in 1..=grid.steps {
        let fl = stepper.step(&mut state);
        traj.far_outflow += fl.far_outflow;
        traj.junction_inflow += fl.junction_inflow;
        if let (Some(b), Junction::Reflect(kind)) = (&boundary, junction) {
            // upwind trace: outgoing from cell 0, incoming from the reflection rule
            let f0 = state[0].column(0);
            let mut trace = f0[..n].to_vec();
            trace.extend(f0[..n].iter().map(|x| kind.reflection_factor() * x));
            let u0 = sys.moments_from_dvm(&trace);
            let r = crate::coupling::boundary_residual(b, &u0);
            traj.max_boundary_residual = traj.max_boundary_residual.max(r);
        }
        record(step, &state, &mut traj);
    }
    let final_moments: Vec<Field> = state.iter().map(|f| to_moments(sys, f)).collect();
    traj.final_mass = total_mass(&final_moments, grid.dx);
    Ok(traj)
}
