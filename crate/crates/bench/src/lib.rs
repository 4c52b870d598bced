//! Fixtures shared by the benchmarks.

use kinetic_net::hermite::build_quadrature;
use kinetic_net::solver::{Grid, InitialData, NetworkProblem, Scheme};
use kinetic_net::spectral::build_system;
use kinetic_net::{Collision, MomentSystem};

pub fn system(n: usize, c: Collision) -> MomentSystem {
    build_system(build_quadrature(n).expect("valid N"), c).expect("valid system")
}

/// Star network with the default bump on every edge.
pub fn network(
    sys: &MomentSystem,
    edges: usize,
    eps: f64,
    cells: usize,
    scheme: Scheme,
) -> NetworkProblem<'_> {
    let grid = Grid::new(4.0, cells, 0.5, 0.9, sys.quadrature.vmax()).expect("valid grid");
    let data = InitialData::default_for(sys.block);
    let xs = grid.centers();
    NetworkProblem {
        sys,
        epsilon: eps,
        grid: grid.clone(),
        scheme,
        initial: (0..edges)
            .map(|_| data.moment_field(sys, eps, &xs))
            .collect(),
        snapshot_times: vec![grid.final_time],
    }
}
