//! Junction coupling conditions, boundary matrices and the edge-variable change
//! of coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::hermite::eval_phi_all;
use crate::linalg;
use crate::spectral::MomentSystem;

/// Boundary condition family for a single half-line problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `(I, −I) V^T U = 0`
    B1,
    /// `(I, (n−1) I) V^T U = 0`
    B2 { edges: usize },
}

impl BoundaryKind {
    pub fn b2(edges: usize) -> Result<Self> {
        if edges < 2 {
            return Err(Error::config(format!(
                "B2 needs at least 2 edges, got {edges}"
            )));
        }
        Ok(BoundaryKind::B2 { edges })
    }

    /// Factor `r` with incoming = `r` · outgoing in velocity space.
    pub fn reflection_factor(self) -> f64 {
        match self {
            BoundaryKind::B1 => 1.0,
            BoundaryKind::B2 { edges } => -1.0 / (edges as f64 - 1.0),
        }
    }

    pub fn label(self) -> String {
        match self {
            BoundaryKind::B1 => "B1".to_string(),
            BoundaryKind::B2 { edges } => format!("B2(n={edges})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    pub kind: BoundaryKind,
    /// `N × 2N`
    pub rows: DMatrix<f64>,
}

pub fn build_boundary_matrix(kind: BoundaryKind, sys: &MomentSystem) -> BoundaryMatrix {
    let n = sys.n_half();
    let second = match kind {
        BoundaryKind::B1 => -1.0,
        BoundaryKind::B2 { edges } => edges as f64 - 1.0,
    };
    let mut sel = DMatrix::zeros(n, 2 * n);
    for k in 0..n {
        sel[(k, k)] = 1.0;
        sel[(k, n + k)] = second;
    }
    BoundaryMatrix {
        kind,
        rows: sel * sys.v.transpose(),
    }
}

/// Same matrix assembled column-wise from `Φ_i = (φ_i(z_1), .., φ_i(z_N))`.
pub fn boundary_matrix_phi_form(kind: BoundaryKind, sys: &MomentSystem) -> BoundaryMatrix {
    let n = sys.n_half();
    let m = 2 * n;
    let z = sys.quadrature.positive_nodes();
    let phis: Vec<Vec<f64>> = z.iter().map(|&zk| eval_phi_all(m - 1, zk)).collect();
    let mut rows = DMatrix::zeros(n, m);
    for i in 0..m {
        // φ_i(−z) = (−1)^i φ_i(z)
        let odd = i % 2 == 1;
        let coef = match kind {
            BoundaryKind::B1 => {
                if odd {
                    -2.0
                } else {
                    0.0
                }
            }
            BoundaryKind::B2 { edges } => {
                let n1 = edges as f64 - 1.0;
                if odd {
                    n1 - 1.0
                } else {
                    1.0 + n1
                }
            }
        };
        for k in 0..n {
            rows[(k, i)] = coef * phis[k][i];
        }
    }
    BoundaryMatrix { kind, rows }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityReport {
    pub max_quad_form: f64,
    pub strict: bool,
}

/// Largest eigenvalue of `K^T A K` over an orthonormal kernel basis `K` of `B`.
pub fn dissipativity_report(b: &BoundaryMatrix, sys: &MomentSystem) -> Result<DissipativityReport> {
    let k = linalg::null_space(&b.rows, 1e-12);
    if k.ncols() != sys.n_half() {
        return Err(Error::numerical(format!(
            "kernel of {} has dimension {}, expected {}",
            b.kind.label(),
            k.ncols(),
            sys.n_half()
        )));
    }
    let form = k.transpose() * &sys.a * &k;
    let sym = (&form + form.transpose()) * 0.5;
    let eig = linalg::symmetric_eigen(&sym)?;
    let max_quad_form = *eig.values.last().expect("non-empty");
    Ok(DissipativityReport {
        max_quad_form,
        strict: max_quad_form < -1e-12,
    })
}

/// Fields `U^{(1)} = Σ_i G^{(i)}`, `U^{(k)} = G^{(k)} − G^{(1)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkVariables {
    pub u: Vec<Field>,
}

impl NetworkVariables {
    pub fn edges(&self) -> usize {
        self.u.len()
    }

    /// Boundary kind each `U^{(k)}` satisfies.
    pub fn boundary_kinds(&self) -> Vec<BoundaryKind> {
        let n = self.edges();
        (0..n)
            .map(|k| {
                if k == 0 {
                    BoundaryKind::B1
                } else {
                    BoundaryKind::B2 { edges: n }
                }
            })
            .collect()
    }
}

pub fn to_network_vars(g: &[Field]) -> Result<NetworkVariables> {
    check_edges(g)?;
    let mut u1 = Field::zeros(g[0].comps(), g[0].cells());
    for gi in g {
        u1.axpy(1.0, gi);
    }
    let mut u = vec![u1];
    for gk in &g[1..] {
        let mut d = gk.clone();
        d.axpy(-1.0, &g[0]);
        u.push(d);
    }
    Ok(NetworkVariables { u })
}

pub fn from_network_vars(vars: &NetworkVariables) -> Result<Vec<Field>> {
    let u = &vars.u;
    check_edges(u)?;
    let n = u.len() as f64;
    let mut g1 = u[0].clone();
    for uk in &u[1..] {
        g1.axpy(-1.0, uk);
    }
    let g1 = g1.scaled(1.0 / n);
    let mut out = vec![g1.clone()];
    for uk in &u[1..] {
        let mut gi = uk.clone();
        gi.axpy(1.0, &g1);
        out.push(gi);
    }
    Ok(out)
}

fn check_edges(fields: &[Field]) -> Result<()> {
    if fields.len() < 2 {
        return Err(Error::config("a network needs at least 2 edges"));
    }
    if fields.iter().any(|f| !f.same_shape(&fields[0])) {
        return Err(Error::config("edge fields do not share grid and dimension"));
    }
    Ok(())
}

/// Incoming junction values at the positive nodes for every edge.
///
/// `traces[i]` holds the `2N` velocity values of edge `i` at the junction in
/// node order; the result for edge `i` at `z_k` is the mean over the other
/// edges of their value at `−z_k`.
pub fn junction_exchange(traces: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = traces.len();
    if n < 2 {
        return Err(Error::config("junction needs at least 2 edges"));
    }
    let m = traces[0].len();
    let nh = m / 2;
    let total: Vec<f64> = (0..nh).map(|k| traces.iter().map(|t| t[k]).sum()).collect();
    Ok(traces
        .iter()
        .map(|t| {
            (0..nh)
                .map(|k| (total[k] - t[k]) / (n as f64 - 1.0))
                .collect()
        })
        .collect())
}

/// Incoming values at `z_k` that make `B U(0) = 0` given the outgoing values at `−z_k`.
pub fn dvm_reflection(kind: BoundaryKind, outgoing: &[f64]) -> Vec<f64> {
    let r = kind.reflection_factor();
    outgoing.iter().map(|x| r * x).collect()
}

/// `B · U` for a single moment vector.
pub fn boundary_residual(b: &BoundaryMatrix, u: &[f64]) -> f64 {
    (&b.rows * DVector::from_column_slice(u)).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::build_quadrature;
    use crate::spectral::{build_system, Collision};

    fn sys(n: usize) -> MomentSystem {
        build_system(build_quadrature(n).unwrap(), Collision::Q1).unwrap()
    }

    #[test]
    fn n1_matrices() {
        let s = sys(1);
        let b1 = build_boundary_matrix(BoundaryKind::B1, &s);
        assert!(b1.rows[(0, 0)].abs() < 1e-14 && (b1.rows[(0, 1)] + 2.0).abs() < 1e-14);
        let b2 = build_boundary_matrix(BoundaryKind::B2 { edges: 2 }, &s);
        assert!((b2.rows[(0, 0)] - 2.0).abs() < 1e-14 && b2.rows[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn exchange_three_edges() {
        let mut t = vec![vec![0.0; 4]; 3];
        t[0][0] = 1.0;
        let inc = junction_exchange(&t).unwrap();
        assert_eq!(inc[0][0], 0.0);
        assert_eq!(inc[1][0], 0.5);
        assert_eq!(inc[2][0], 0.5);
        assert!(junction_exchange(&t[..1]).is_err());
    }

    #[test]
    fn reflections() {
        assert_eq!(
            dvm_reflection(BoundaryKind::B1, &[1.0, 2.0]),
            vec![1.0, 2.0]
        );
        assert_eq!(
            dvm_reflection(BoundaryKind::B2 { edges: 3 }, &[1.0, 0.0]),
            vec![-0.5, 0.0]
        );
        assert_eq!(
            dvm_reflection(BoundaryKind::B2 { edges: 2 }, &[1.0, -3.0]),
            vec![-1.0, 3.0]
        );
    }

    #[test]
    fn strict_for_three_edges() {
        let s = build_system(build_quadrature(2).unwrap(), Collision::Q1).unwrap();
        let r = dissipativity_report(
            &build_boundary_matrix(BoundaryKind::B2 { edges: 3 }, &s),
            &s,
        )
        .unwrap();
        assert!(r.strict);
        let r = dissipativity_report(&build_boundary_matrix(BoundaryKind::B1, &s), &s).unwrap();
        assert!(r.max_quad_form.abs() < 1e-10 && !r.strict);
    }
}
