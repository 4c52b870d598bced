//! Co-advancing time loop: outer terms, heat profiles and kinetic-layer
//! coefficients of all orders, coupled through one boundary solve per order
//! and time level.

use nalgebra::{DMatrix, DVector};

use super::heat::{HeatBc, HeatGrid, HeatSolver};
use super::model::{KineticModel, OuterModel, ViscousModel};
use super::outer::{OuterGrid, OuterState};
use super::symbolic::{eval_point, Atom, AtomCache, LinExpr};
use super::{AsymptoticExpansion, Case, Diagnostics, ExpansionConfig, Snapshot};
use crate::coupling::build_boundary_matrix;
use crate::error::{Error, Result};
use crate::linalg::LinearSolver;
use crate::solver::InitialData;
use crate::spectral::{char_decomposition, MomentSystem};

/// Steps are a multiple of this, so `j T / 64` are grid times.
const TIME_QUANTUM: usize = 64;

/// Boundary solve of one order: unknowns `(β+, heat datum?, γ)`.
struct OrderSolve {
    solver: LinearSolver,
    /// Heat atom whose boundary value is unknown, with its profile.
    heat: Option<(Atom, usize)>,
    /// `B · Û_k(0)` with the unknown atom removed.
    viscous_known: LinExpr,
    /// `B Ψ_{k,a}(0)` for the particular basis functions.
    forced_columns: DMatrix<f64>,
}

pub(crate) fn build(
    sys: &MomentSystem,
    case: Case,
    initial: &InitialData,
    cfg: &ExpansionConfig,
) -> Result<AsymptoticExpansion> {
    if sys.collision != case.collision() {
        return Err(Error::config(format!(
            "case {} needs collision {}",
            case.tag(),
            case.collision().name()
        )));
    }
    cfg.validate()?;
    initial.validate(sys.block)?;
    let order = case.resolve_order(cfg.order)?;
    let chars = char_decomposition(sys);
    let boundary = build_boundary_matrix(case.boundary_kind(cfg.edges)?, sys);
    let b = sys.block;

    let outer_model = OuterModel::new(sys, order)?;
    let viscous = match case {
        Case::Q2Ibvp1 | Case::Q2Ibvp2 => Some(ViscousModel::new(sys, &chars, case, order)?),
        _ => None,
    };
    let mut kinetic = match case {
        Case::Q1Ibvp2 | Case::Q2Ibvp2 => Some(KineticModel::new(sys, order)?),
        _ => None,
    };

    let length = cfg
        .outer_length
        .unwrap_or(initial.support_end() + chars.lambda * cfg.final_time + 1.0);
    let grid = OuterGrid::new(
        length,
        chars.lambda,
        cfg.final_time,
        cfg.outer_spacing,
        TIME_QUANTUM,
    )?;
    let snap_steps = snapshot_steps(&cfg.snapshot_times, grid.dt, cfg.final_time)?;
    let heat_grid = match viscous {
        Some(_) => Some(HeatGrid::new(cfg.z_max, cfg.dz)?),
        None => None,
    };

    // order-by-order boundary systems
    let kinetic_modes = kinetic.as_ref().map_or(0, |k| k.modes);
    let mut solves = Vec::new();
    let mut conditions = Vec::new();
    for k in 0..=order {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        let mut plus = DVector::zeros(sys.dim());
        plus.rows_mut(0, b).copy_from(&chars.p_plus);
        cols.push(&boundary.rows * plus);
        let mut heat = None;
        let mut viscous_known = LinExpr::zero(boundary.rows.nrows());
        if let Some(vm) = &viscous {
            let full = vm.full(k).map(&boundary.rows);
            for (j, p) in vm.profiles.iter().enumerate() {
                if let Some(p) = p {
                    if p.fed_by == k {
                        let deriv = match p.bc {
                            HeatBc::Value => 0,
                            HeatBc::Slope => 1,
                        };
                        heat = Some((
                            Atom {
                                source: j,
                                comp: 0,
                                deriv,
                            },
                            j,
                        ));
                    }
                }
            }
            viscous_known = match heat {
                Some((a, _)) => {
                    cols.push(full.coefficient(a));
                    full.without(a)
                }
                None => full,
            };
            for (a, _) in viscous_known.terms() {
                let fed = vm.profiles[a.source].map(|p| p.fed_by);
                if fed.is_none_or(|f| f >= k) {
                    return Err(Error::numerical(format!(
                        "order {k} boundary data depends on a profile not yet advanced"
                    )));
                }
            }
        }
        let mut forced_columns = DMatrix::zeros(boundary.rows.nrows(), 0);
        if let Some(km) = &kinetic {
            for p in &km.basis[k][..km.modes] {
                cols.push(&boundary.rows * DVector::from_vec(p.eval(0.0)));
            }
            let forced = &km.basis[k][km.modes..];
            forced_columns = DMatrix::zeros(boundary.rows.nrows(), forced.len());
            for (i, p) in forced.iter().enumerate() {
                forced_columns.set_column(i, &(&boundary.rows * DVector::from_vec(p.eval(0.0))));
            }
        }
        let c = DMatrix::from_columns(&cols);
        let solver = LinearSolver::new(c, &format!("{} order-{k} boundary system", case.tag()))?;
        conditions.push(solver.condition);
        solves.push(OrderSolve {
            solver,
            heat,
            viscous_known,
            forced_columns,
        });
    }

    // initial state
    let xs = grid.nodes();
    let mut u_init = vec![vec![0.0; grid.points]; b];
    for (j, &x) in xs.iter().enumerate() {
        let (u, _) = initial.equilibrium(x);
        for c in 0..b {
            u_init[c][j] = u[c];
        }
    }
    let zero_u = vec![vec![0.0; grid.points]; b];
    let mut states: Vec<OuterState> = (0..=order)
        .map(|k| OuterState::new(&chars, if k == 0 { &u_init } else { &zero_u }))
        .collect();
    let mut ucur: Vec<Option<Vec<Vec<f64>>>> = states.iter().map(|s| Some(s.u())).collect();
    let mut src_old: Vec<Vec<Vec<f64>>> = Vec::new();
    for k in 0..=order {
        src_old.push(AtomCache::new(grid.h, &ucur).eval_grid(&outer_model.source[k])?);
    }

    let nz = heat_grid.as_ref().map_or(0, |g| g.points);
    let mut heat: Vec<Option<Vec<Vec<f64>>>> = (0..=order)
        .map(|j| {
            viscous
                .as_ref()
                .and_then(|vm| vm.profiles[j])
                .map(|_| vec![vec![0.0; nz]])
        })
        .collect();
    let mut heat_solvers: Vec<Option<HeatSolver>> = (0..=order)
        .map(|j| {
            let vm = viscous.as_ref()?;
            let p = vm.profiles[j]?;
            Some(HeatSolver::new(heat_grid.clone()?, vm.kappa, p.bc, grid.dt))
        })
        .collect();
    let mut f_old: Vec<Vec<f64>> = vec![vec![0.0; nz]; order + 1];
    let mut bc_old: Vec<f64> = vec![0.0; order + 1];
    let mut bc_series: Vec<Vec<f64>> = vec![Vec::new(); order + 1];
    let mut max_residual = 0.0f64;
    let mut snapshots = Vec::new();

    for n in 0..=grid.steps {
        for k in 0..=order {
            if n > 0 {
                let src_new = AtomCache::new(grid.h, &ucur).eval_grid(&outer_model.source[k])?;
                states[k].advance(grid.dt, &src_old[k], &src_new);
                src_old[k] = src_new;
            }
            // known part of B (Ū_k + Û_k + Ũ_k)(0)
            let s = &solves[k];
            let mut trace = DVector::zeros(sys.dim());
            trace.rows_mut(0, b).copy_from(&states[k].known_trace());
            let vb = eval_point(grid.h, &ucur, &outer_model.vbar[k], 0)?;
            trace.rows_mut(b, sys.dim() - b).copy_from(&vb);
            let mut known = &boundary.rows * trace;
            if let Some(g) = &heat_grid {
                known += eval_point(g.dz, &heat, &s.viscous_known, 0)?;
            }
            if let Some(km) = &kinetic {
                if s.forced_columns.ncols() > 0 {
                    let c = DVector::from_vec(km.forced_coeffs(k, n, 0, grid.dt, true));
                    known += &s.forced_columns * c;
                }
            }
            let (x, res) = s.solver.solve(&(-&known));
            let scale = 1.0 + known.norm();
            max_residual = max_residual.max(res / scale);
            if res > 1e-8 * scale {
                return Err(Error::numerical(format!(
                    "{} order-{k} boundary system inconsistent at t = {:.6} (residual {res:.3e})",
                    case.tag(),
                    n as f64 * grid.dt
                )));
            }
            states[k].set_incoming(x[0]);
            ucur[k] = Some(states[k].u());
            let mut next = 1;
            if let Some((_, j)) = s.heat {
                let value = x[next];
                next += 1;
                bc_series[k].push(value);
                if n > 0 {
                    let vm = viscous.as_ref().expect("viscous model");
                    let g = heat_grid.as_ref().expect("heat grid");
                    let forcing = vm.forcing[j].as_ref().expect("profile forcing");
                    let f_new = AtomCache::new(g.dz, &heat).eval_grid(forcing)?.remove(0);
                    let mut h = heat[j].take().expect("profile").remove(0);
                    heat_solvers[j]
                        .as_mut()
                        .expect("profile solver")
                        .step(&mut h, &f_old[j], &f_new, bc_old[j], value);
                    heat[j] = Some(vec![h]);
                    f_old[j] = f_new;
                }
                bc_old[j] = value;
            }
            if let Some(km) = kinetic.as_mut() {
                km.gamma[k].push(x.as_slice()[next..next + kinetic_modes].to_vec());
            }
        }
        if snap_steps.contains(&n) {
            snapshots.push(Snapshot {
                time: n as f64 * grid.dt,
                step: n,
                outer: ucur
                    .iter()
                    .map(|u| u.clone().expect("outer term"))
                    .collect(),
                heat: heat
                    .iter()
                    .map(|h| h.as_ref().map(|v| v[0].clone()))
                    .collect(),
            });
        }
    }

    Ok(AsymptoticExpansion {
        case,
        epsilon: cfg.epsilon,
        order,
        sys: sys.clone(),
        chars,
        boundary,
        outer_grid: grid,
        heat_grid,
        snapshots,
        diagnostics: Diagnostics {
            boundary_condition: conditions,
            max_solve_residual: max_residual,
            heat_boundary_data: bc_series,
        },
        outer_model,
        viscous,
        kinetic,
    })
}

fn snapshot_steps(times: &[f64], dt: f64, final_time: f64) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for &t in times {
        if !(t >= 0.0) || t > final_time * (1.0 + 1e-12) {
            return Err(Error::config(format!("snapshot time {t} outside [0, T]")));
        }
        let s = t / dt;
        let n = s.round();
        if (s - n).abs() > 1e-6 {
            return Err(Error::config(format!(
                "snapshot time {t} is not a multiple of T/{TIME_QUANTUM}"
            )));
        }
        out.push(n as usize);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
