#![allow(dead_code, clippy::needless_range_loop)]

use kinetic_net::coupling::BoundaryKind;
use kinetic_net::hermite::build_quadrature;
use kinetic_net::solver::{
    solve_halfline, solve_network, Grid, IbvpProblem, InitialData, NetworkProblem, Scheme,
};
use kinetic_net::spectral::{build_system, Collision, MomentSystem};
use kinetic_net::Field;

/// Independent whole-line solver on `[−L, L]` with outflow at both ends.
pub fn whole_line(
    sys: &MomentSystem,
    eps: f64,
    grid: &Grid,
    init: &[Vec<f64>],
    scheme: Scheme,
) -> Vec<Vec<f64>> {
    let m = sys.dim();
    let cells = init[0].len();
    let w = sys.full_weights();
    let b = sys.block;
    let lam = grid.dt / grid.dx;
    // to velocity space
    let mut f: Vec<Vec<f64>> = vec![vec![0.0; cells]; m];
    for j in 0..cells {
        let g: Vec<f64> = (0..m).map(|i| init[i][j]).collect();
        let fv = sys.dvm_from_moments(&g);
        for k in 0..m {
            f[k][j] = fv[k];
        }
    }
    let relax = |f: &mut Vec<Vec<f64>>, upd: &dyn Fn(f64, f64) -> f64| {
        for j in 0..cells {
            let g: Vec<f64> = (0..b)
                .map(|i| (0..m).map(|k| sys.v[(i, k)] * w[k] * f[k][j]).sum())
                .collect();
            for k in 0..m {
                let mk: f64 = (0..b).map(|i| sys.v[(i, k)] * g[i]).sum();
                f[k][j] = upd(f[k][j], mk);
            }
        }
    };
    let transport = |f: &mut Vec<Vec<f64>>| {
        for k in 0..m {
            let v = sys.quadrature.nodes[k];
            let nu = v.abs() * lam;
            let at = |j: isize| -> f64 { f[k][j.clamp(0, cells as isize - 1) as usize] };
            let flux: Vec<f64> = (0..=cells as isize)
                .map(|i| match (scheme, v > 0.0) {
                    (Scheme::Upwind, true) => v * at(i - 1),
                    (Scheme::Upwind, false) => v * at(i),
                    (Scheme::Fromm, true) => {
                        v * (at(i - 1) + 0.25 * (1.0 - nu) * (at(i) - at(i - 2)))
                    }
                    (Scheme::Fromm, false) => {
                        v * (at(i) - 0.25 * (1.0 - nu) * (at(i + 1) - at(i - 1)))
                    }
                })
                .collect();
            for j in 0..cells {
                f[k][j] -= lam * (flux[j + 1] - flux[j]);
            }
        }
    };
    for _ in 0..grid.steps {
        match scheme {
            Scheme::Upwind => {
                transport(&mut f);
                let th = grid.dt / eps;
                relax(&mut f, &|a, mk| (a + th * mk) / (1.0 + th));
            }
            Scheme::Fromm => {
                let d = (-0.5 * grid.dt / eps).exp();
                relax(&mut f, &|a, mk| mk + d * (a - mk));
                transport(&mut f);
                relax(&mut f, &|a, mk| mk + d * (a - mk));
            }
        }
    }
    let mut g = vec![vec![0.0; cells]; m];
    for j in 0..cells {
        let fv: Vec<f64> = (0..m).map(|k| f[k][j]).collect();
        let gv = sys.moments_from_dvm(&fv);
        for i in 0..m {
            g[i][j] = gv[i];
        }
    }
    g
}

fn system(n: usize, c: Collision) -> MomentSystem {
    build_system(build_quadrature(n).unwrap(), c).unwrap()
}

/// Worst deviation of an even, spatially constant state from the closed-form
/// relaxation `g_m(0) (1 + dt/ε)^{-k}`.
pub fn relaxation_error() -> f64 {
    let sys = system(3, Collision::Q1);
    let eps = 0.05;
    let grid = Grid::new(2.0, 40, 0.2, 0.9, sys.quadrature.vmax()).unwrap();
    // even-in-velocity state: unaffected by transport and by specular reflection
    let g0 = [1.0, 0.0, 0.3, 0.0, -0.2, 0.0];
    let mut init = Field::zeros(sys.dim(), grid.cells);
    for j in 0..grid.cells {
        init.set_column(j, &g0);
    }
    let p = IbvpProblem {
        sys: &sys,
        boundary: BoundaryKind::B1,
        epsilon: eps,
        grid: grid.clone(),
        scheme: Scheme::Upwind,
        initial: init,
        snapshot_times: vec![grid.final_time],
    };
    let tr = solve_halfline(&p).unwrap();
    let factor = (1.0 + grid.dt / eps).powi(grid.steps as i32).recip();
    let g = &tr.last()[0];
    let mut worst = 0.0f64;
    for j in 0..grid.cells {
        for (i, &g0i) in g0.iter().enumerate() {
            let want = if i < sys.block { g0i } else { g0i * factor };
            worst = worst.max((g.get(i, j) - want).abs());
        }
    }
    worst
}

/// Two-edge network against the whole-line solver folded at `x = 0`.
pub fn fold_mismatch(scheme: Scheme) -> f64 {
    let sys = system(2, Collision::Q1);
    let eps = 0.1;
    let grid = Grid::new(4.0, 160, 0.8, 0.9, sys.quadrature.vmax()).unwrap();
    let m = sys.dim();
    let x = grid.centers();
    // whole-line data: bump on the right, another bump (with flux) on the left
    let right = InitialData::single(1.2, 0.8, vec![1.0, 0.3]);
    let left = InitialData::single(1.0, 0.6, vec![0.5, -0.4]);
    let mut whole = vec![vec![0.0; 2 * grid.cells]; m];
    for j in 0..grid.cells {
        let gr = right.moments(&sys, eps, x[j]);
        // left half at −x: mirror the odd moments
        let gl = left.moments(&sys, eps, x[j]);
        for i in 0..m {
            whole[i][grid.cells + j] = gr[i];
            let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
            whole[i][grid.cells - 1 - j] = sign * gl[i];
        }
    }
    let p = NetworkProblem {
        sys: &sys,
        epsilon: eps,
        grid: grid.clone(),
        scheme,
        initial: vec![
            right.moment_field(&sys, eps, &x),
            left.moment_field(&sys, eps, &x),
        ],
        snapshot_times: vec![grid.final_time],
    };
    let tr = solve_network(&p).unwrap();
    let oracle = whole_line(&sys, eps, &grid, &whole, scheme);
    let mut worst = 0.0f64;
    for j in 0..grid.cells {
        for i in 0..m {
            let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
            worst = worst.max((tr.last()[0].get(i, j) - oracle[i][grid.cells + j]).abs());
            worst =
                worst.max((tr.last()[1].get(i, j) - sign * oracle[i][grid.cells - 1 - j]).abs());
        }
    }
    worst
}

pub fn three_edge_problem(sys: &MomentSystem, scheme: Scheme, eps: f64) -> NetworkProblem<'_> {
    let b = sys.block;
    let grid = Grid::new(4.0, 200, 2.0, 0.9, sys.quadrature.vmax()).unwrap();
    let x = grid.centers();
    let mut amps = vec![vec![0.0; b]; 3];
    amps[0][0] = 1.0;
    amps[1][0] = 0.4;
    amps[1][1] = -0.3;
    amps[2][b - 1] = 0.6;
    let initial = (0..3)
        .map(|e| {
            InitialData::single(1.2 + 0.2 * e as f64, 0.9, amps[e].clone())
                .moment_field(sys, eps, &x)
        })
        .collect();
    NetworkProblem {
        sys,
        epsilon: eps,
        grid,
        scheme,
        initial,
        snapshot_times: vec![0.0, 1.0, 2.0],
    }
}

/// Largest relative mass-audit defect over both collisions and schemes, and
/// the smallest far-end outflow seen (to confirm the audit is not vacuous).
pub fn mass_audit() -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut outflow = f64::INFINITY;
    for c in [Collision::Q1, Collision::Q2] {
        let sys = system(3, c);
        for scheme in [Scheme::Upwind, Scheme::Fromm] {
            let p = three_edge_problem(&sys, scheme, 0.05);
            let tr = solve_network(&p).unwrap();
            worst = worst.max(tr.mass_audit());
            outflow = outflow.min(tr.far_outflow.abs());
        }
    }
    (worst, outflow)
}

/// `‖S(a U + b W) − a S(U) − b S(W)‖_max` relative to the solution size.
pub fn linearity_error() -> f64 {
    let sys = system(3, Collision::Q2);
    let p = three_edge_problem(&sys, Scheme::Upwind, 0.05);
    let mut q = p.clone();
    q.initial.reverse();
    let (a, b) = (0.7, -1.9);
    let mut r = p.clone();
    r.initial = p
        .initial
        .iter()
        .zip(&q.initial)
        .map(|(x, y)| {
            let mut s = x.scaled(a);
            s.axpy(b, y);
            s
        })
        .collect();
    let (tp, tq, tr) = (
        solve_network(&p).unwrap(),
        solve_network(&q).unwrap(),
        solve_network(&r).unwrap(),
    );
    let scale = tr
        .last()
        .iter()
        .map(Field::max_abs)
        .fold(0.0, f64::max)
        .max(1.0);
    let mut worst = 0.0f64;
    for e in 0..3 {
        let mut comb = tp.last()[e].scaled(a);
        comb.axpy(b, &tq.last()[e]);
        worst = worst.max(comb.max_abs_diff(&tr.last()[e]) / scale);
    }
    worst
}
