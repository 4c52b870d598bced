use kinetic_net::analysis::{
    convergence_study, network_study, residual_sweep, SlopeFit, StudyConfig,
};
use kinetic_net::asymptotic::{
    build_expansion, kinetic_boundary_condition, stretched_grid, Case, ExpansionConfig,
};
use kinetic_net::coupling::{build_boundary_matrix, dissipativity_report, BoundaryKind};
use kinetic_net::hermite::build_quadrature;
use kinetic_net::solver::{
    solve_halfline, solve_network, Grid, IbvpProblem, InitialData, NetworkProblem, Trajectory,
};
use kinetic_net::spectral::build_system;
use kinetic_net::{Collision, MomentSystem, Result};

use crate::config::{
    initial_data, AsymptoticConfig, BoundaryChoice, RunConfig, SimulateConfig, SweepConfig,
};
use crate::output::{gnuplot_script, num, Outputs, Table};

pub fn execute(cfg: &RunConfig) -> Result<Outputs> {
    match cfg {
        RunConfig::Quadrature { n_half } => quadrature(*n_half),
        RunConfig::Check { n_half, edges } => check(*n_half, *edges),
        RunConfig::Simulate(s) => simulate(s),
        RunConfig::Asymptotic(a) => asymptotic(a),
        RunConfig::Converge(s) => converge(s),
        RunConfig::Residual(s) => residual(s),
    }
}

fn system(n: usize, c: Collision) -> Result<MomentSystem> {
    build_system(build_quadrature(n)?, c)
}

fn quadrature(n: usize) -> Result<Outputs> {
    let q = build_quadrature(n)?;
    let res = q.orthonormality_residual();
    let w = q.full_weights();
    let mut t = Table::new(&["index", "node", "weight", "orthonormality_residual"]);
    for (k, (&v, &wk)) in q.nodes.iter().zip(&w).enumerate() {
        t.row(&[k.to_string(), num(v), num(wk), num(res)]);
    }
    let mut out = Outputs::default();
    out.table("quadrature.csv", t);
    Ok(out)
}

fn check(n: usize, edges: Option<usize>) -> Result<Outputs> {
    let s = system(n, Collision::Q1)?;
    let mut t = Table::new(&["check", "variant", "N", "n", "value", "strict"]);
    let mut row =
        |check: &str, variant: &str, n_edges: Option<usize>, value: f64, strict: Option<bool>| {
            t.row(&[
                check.into(),
                variant.into(),
                n.to_string(),
                n_edges.map_or(String::new(), |e| e.to_string()),
                num(value),
                strict.map_or(String::new(), |b| b.to_string()),
            ]);
        };
    row(
        "orthonormality",
        "",
        None,
        s.quadrature.orthonormality_residual(),
        None,
    );
    row("orthogonality", "", None, s.orthogonality_residual(), None);
    row("spectral", "", None, s.spectral_residual(), None);
    if let Some(r) = s.q1_block_identity_residual() {
        row("block_identity", "Q1", None, r, None);
    }
    let b1 = dissipativity_report(&build_boundary_matrix(BoundaryKind::B1, &s), &s)?;
    row(
        "dissipativity",
        "B1",
        None,
        b1.max_quad_form,
        Some(b1.strict),
    );
    if let Some(e) = edges {
        let kind = BoundaryKind::b2(e)?;
        let r = dissipativity_report(&build_boundary_matrix(kind, &s), &s)?;
        row(
            "dissipativity",
            "B2",
            Some(e),
            r.max_quad_form,
            Some(r.strict),
        );
        if e >= 3 && n >= 2 {
            row(
                "boundary_condition",
                "Q1",
                Some(e),
                kinetic_boundary_condition(&s, e)?,
                None,
            );
        }
        if n >= 2 {
            let q2 = system(n, Collision::Q2)?;
            row(
                "boundary_condition",
                "Q2",
                Some(e),
                kinetic_boundary_condition(&q2, e)?,
                None,
            );
        }
    }
    let mut out = Outputs::default();
    out.table("check.csv", t);
    Ok(out)
}

fn simulate(c: &SimulateConfig) -> Result<Outputs> {
    let sys = system(c.n_half, c.collision()?)?;
    let vmax = sys.quadrature.vmax();
    let edges = c.edge_count();
    let data: Vec<InitialData> = (0..edges).map(|e| c.edge_data(e, sys.block)).collect();
    let support = data
        .iter()
        .map(InitialData::support_end)
        .fold(0.0, f64::max);
    let length = c
        .length
        .unwrap_or_else(|| Grid::default_length(support, vmax, c.final_time));
    let grid = match c.cells {
        Some(cells) => Grid::new(length, cells, c.final_time, c.cfl, vmax)?,
        None => Grid::for_epsilon(
            c.epsilon,
            c.cells_per_eps,
            length,
            c.final_time,
            c.cfl,
            vmax,
        )?,
    };
    let xs = grid.centers();
    let initial: Vec<_> = data
        .iter()
        .map(|d| d.moment_field(&sys, c.epsilon, &xs))
        .collect();
    let scheme = c.scheme()?;
    let tr = if c.boundary == BoundaryChoice::Network {
        solve_network(&NetworkProblem {
            sys: &sys,
            epsilon: c.epsilon,
            grid: grid.clone(),
            scheme,
            initial,
            snapshot_times: c.snapshots.clone(),
        })?
    } else {
        solve_halfline(&IbvpProblem {
            sys: &sys,
            boundary: c.boundary_kind()?,
            epsilon: c.epsilon,
            grid: grid.clone(),
            scheme,
            initial: initial.into_iter().next().expect("one edge"),
            snapshot_times: c.snapshots.clone(),
        })?
    };
    let mut out = Outputs::default();
    let m = sys.dim();
    let mut header = vec!["x".to_string()];
    for e in 0..edges {
        header.extend((0..m).map(|i| format!("e{e}_g{i}")));
    }
    let mut index = Table::new(&["snapshot", "time", "file"]);
    for (k, (time, fields)) in tr.times.iter().zip(&tr.snapshots).enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        let mut t = Table::new(&header);
        for (j, &x) in xs.iter().enumerate() {
            let mut row = vec![x];
            for f in fields {
                row.extend((0..m).map(|i| f.get(i, j)));
            }
            t.numeric_row(&row);
        }
        index.row(&[k.to_string(), num(*time), name.clone()]);
        out.table(name, t);
    }
    out.table("snapshots.csv", index);
    out.table("summary.csv", trajectory_summary(&tr, &grid));
    Ok(out)
}

fn trajectory_summary(tr: &Trajectory, grid: &Grid) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    t.row(&["steps".into(), grid.steps.to_string()]);
    for (k, v) in [
        ("dx", grid.dx),
        ("dt", grid.dt),
        ("initial_mass", tr.initial_mass),
        ("final_mass", tr.final_mass),
        ("far_outflow", tr.far_outflow),
        ("junction_inflow", tr.junction_inflow),
        ("mass_audit", tr.mass_audit()),
        ("max_boundary_residual", tr.max_boundary_residual),
    ] {
        t.row(&[k.into(), num(v)]);
    }
    t
}

fn asymptotic(a: &AsymptoticConfig) -> Result<Outputs> {
    let case: Case = a.case.parse()?;
    let sys = system(a.n_half, case.collision())?;
    let init = initial_data(&a.initial).unwrap_or_else(|| InitialData::default_for(sys.block));
    let cfg = ExpansionConfig {
        epsilon: a.epsilon,
        final_time: a.final_time,
        outer_spacing: a.outer_spacing,
        outer_length: None,
        z_max: a.z_max,
        dz: a.dz,
        snapshot_times: a.snapshots.clone(),
        edges: a.edges,
        order: a.order,
    };
    let exp = build_expansion(&sys, case, &init, &cfg)?;
    let m = sys.dim();
    let xs = exp.outer_grid.nodes();
    let mut out = Outputs::default();
    let mut diag = Table::new(&["snapshot", "time", "boundary_residual", "far_end_layer"]);
    for (k, &time) in exp.snapshot_times().iter().enumerate() {
        let u = exp.evaluate(&xs, time)?;
        let mut header = vec!["x".to_string()];
        header.extend((0..m).map(|i| format!("g{i}")));
        let mut t = Table::new(&header);
        for (j, &x) in xs.iter().enumerate() {
            let mut row = vec![x];
            row.extend((0..m).map(|i| u.get(i, j)));
            t.numeric_row(&row);
        }
        out.table(format!("expansion_{k:03}.csv"), t);

        let viscous: Vec<_> = exp
            .viscous_terms(time)?
            .into_iter()
            .filter(|v| v.profile.is_some())
            .collect();
        if let (Some(g), false) = (&exp.heat_grid, viscous.is_empty()) {
            let mut header = vec!["z".to_string()];
            header.extend(viscous.iter().map(|v| format!("h{}", v.index)));
            let mut t = Table::new(&header);
            for (i, z) in g.nodes().into_iter().enumerate() {
                let mut row = vec![z];
                row.extend(
                    viscous
                        .iter()
                        .map(|v| v.profile.as_ref().expect("filtered")[i]),
                );
                t.numeric_row(&row);
            }
            out.table(format!("viscous_{k:03}.csv"), t);
        }

        let kinetic = exp.kinetic_terms(time)?;
        if !kinetic.is_empty() {
            let reach = kinetic.iter().map(|t| t.decay_length()).fold(0.0, f64::max);
            let ys = stretched_grid((20.0 * reach).max(1.0), 201, 1.0);
            let mut header = vec!["y".to_string()];
            for term in &kinetic {
                header.extend((0..m).map(|i| format!("k{}_g{i}", term.index)));
            }
            let samples: Vec<_> = kinetic.iter().map(|t| t.sample(&ys)).collect();
            let mut t = Table::new(&header);
            for (j, &y) in ys.iter().enumerate() {
                let mut row = vec![y];
                for s in &samples {
                    row.extend((0..m).map(|i| s.get(i, j)));
                }
                t.numeric_row(&row);
            }
            out.table(format!("kinetic_{k:03}.csv"), t);
        }
        diag.row(&[
            k.to_string(),
            num(time),
            num(exp.boundary_residual(time)?),
            num(exp.far_end_layer(time)?),
        ]);
    }
    out.table("diagnostics.csv", diag);
    Ok(out)
}

fn study_config(s: &SweepConfig) -> Result<StudyConfig> {
    Ok(StudyConfig {
        n_half: s.n_half,
        edges: s.edges,
        final_time: s.final_time,
        cells_per_eps: s.cells_per_eps,
        cfl: s.cfl,
        scheme: s.scheme.parse()?,
        initial: initial_data(&s.initial),
        order: s.order,
        residual_times: s.residual_times,
        richardson: s.richardson,
        ..StudyConfig::default()
    })
}

fn fit_row(t: &mut Table, quantity: &str, range: &str, f: &SlopeFit) {
    t.row(&[
        quantity.into(),
        range.into(),
        num(f.slope),
        num(f.intercept),
        num(f.residual),
    ]);
}

fn converge(s: &SweepConfig) -> Result<Outputs> {
    let case: Case = s.case.parse()?;
    let cfg = study_config(s)?;
    let report = convergence_study(case, &s.eps_list, &cfg)?;
    let network = if s.network {
        Some(network_study(case.collision(), &s.eps_list, &cfg)?)
    } else {
        None
    };

    let mut header: Vec<String> = ["epsilon", "dx", "cells", "l2", "linf", "h1"]
        .map(String::from)
        .to_vec();
    if let Some(n) = &network {
        header.extend((0..n.edges).map(|e| format!("edge{e}_linf")));
    }
    let mut rates = Table::new(&header);
    for (i, e) in report.entries.iter().enumerate() {
        let mut row = vec![num(e.epsilon), num(e.dx), e.cells.to_string()];
        row.extend([e.norms.l2, e.norms.linf, e.norms.h1].map(num));
        if let Some(n) = &network {
            row.extend(n.entries[i].edge_linf.iter().map(|&v| num(v)));
        }
        rates.row(&row);
    }

    let mut fits = Table::new(&["quantity", "range", "slope", "intercept", "residual"]);
    fit_row(&mut fits, "h1", "smallest3", &report.fit);
    fit_row(&mut fits, "h1", "full", &report.fit_full);
    fit_row(&mut fits, "l2", "smallest3", &report.fit_l2);
    fit_row(&mut fits, "linf", "smallest3", &report.fit_linf);

    let mut checks = Table::new(&["check", "value"]);
    checks.row(&["h1_monotone".into(), report.monotone.to_string()]);
    if let Some(r) = report.richardson_ratio {
        checks.row(&["richardson_ratio".into(), num(r)]);
    }
    if let Some(n) = &network {
        checks.row(&["network_monotone".into(), n.monotone.to_string()]);
        checks.row(&[
            "network_bounds".into(),
            n.entries.iter().all(|e| e.bound_holds).to_string(),
        ]);
    }

    let mut out = Outputs::default();
    out.table("rates.csv", rates);
    out.table("fits.csv", fits);
    out.table("checks.csv", checks);
    if s.plot {
        let title = format!("{case}: reconstruction error");
        out.add(
            "rates.gp",
            gnuplot_script(
                "rates.csv",
                &title,
                &[(4, "L2"), (5, "Linf"), (6, "H1")],
                "error",
            ),
        );
    }
    Ok(out)
}

fn residual(s: &SweepConfig) -> Result<Outputs> {
    let case: Case = s.case.parse()?;
    let sweep = residual_sweep(case, &s.eps_list, &study_config(s)?)?;
    let mut t = Table::new(&[
        "epsilon",
        "e1",
        "e1_t",
        "e2",
        "e2_t",
        "e1_viscous",
        "e1_max",
        "e2_max",
        "e1_viscous_max",
        "kappa1",
        "kappa2",
    ]);
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    for r in &sweep.reports {
        t.row(&[
            num(r.epsilon),
            num(r.e1),
            num(r.e1_t),
            num(r.e2),
            num(r.e2_t),
            num(r.e1_viscous),
            num(r.e1_max),
            num(r.e2_max),
            num(r.e1_viscous_max),
            opt(r.kappa1),
            opt(r.kappa2),
        ]);
    }
    let mut fits = Table::new(&["quantity", "range", "slope", "intercept", "residual"]);
    for (name, f) in [
        ("e1", &sweep.e1_fit),
        ("e2", &sweep.e2_fit),
        ("e1_viscous", &sweep.e1_viscous_fit),
    ] {
        if let Some(f) = f {
            fit_row(&mut fits, name, "full", f);
        }
    }
    let mut out = Outputs::default();
    out.table("residuals.csv", t);
    out.table("fits.csv", fits);
    if s.plot {
        let title = format!("{case}: residual norms");
        out.add(
            "residuals.gp",
            gnuplot_script(
                "residuals.csv",
                &title,
                &[(2, "E1"), (4, "E2"), (6, "E1 viscous")],
                "residual",
            ),
        );
    }
    Ok(out)
}
