use approx::assert_abs_diff_eq;
use kinetic_net::coupling::{
    boundary_matrix_phi_form, boundary_residual, build_boundary_matrix, dissipativity_report,
    dvm_reflection, from_network_vars, junction_exchange, to_network_vars, BoundaryKind,
};
use kinetic_net::hermite::build_quadrature;
use kinetic_net::linalg::rank;
use kinetic_net::spectral::{build_system, Collision, MomentSystem};
use kinetic_net::{DVector, Field};
use proptest::prelude::*;

fn sys(n: usize) -> MomentSystem {
    build_system(build_quadrature(n).unwrap(), Collision::Q1).unwrap()
}

#[test]
fn single_pair_matrices() {
    let s = sys(1);
    let b1 = build_boundary_matrix(BoundaryKind::B1, &s);
    assert_abs_diff_eq!(b1.rows[(0, 0)], 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(b1.rows[(0, 1)], -2.0, epsilon = 1e-15);
    let b2 = build_boundary_matrix(BoundaryKind::B2 { edges: 2 }, &s);
    assert_abs_diff_eq!(b2.rows[(0, 0)], 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(b2.rows[(0, 1)], 0.0, epsilon = 1e-15);
    assert!(BoundaryKind::b2(1).is_err());
}

#[test]
fn two_construction_routes_agree() {
    for n in 1..=6 {
        let s = sys(n);
        let mut kinds = vec![BoundaryKind::B1];
        kinds.extend((2..=6).map(|e| BoundaryKind::B2 { edges: e }));
        for kind in kinds {
            let a = build_boundary_matrix(kind, &s);
            let b = boundary_matrix_phi_form(kind, &s);
            assert!(
                (&a.rows - &b.rows).amax() <= 1e-12,
                "N = {n}, {}",
                kind.label()
            );
        }
        let b1 = build_boundary_matrix(BoundaryKind::B1, &s);
        assert_eq!(rank(&b1.rows, 1e-10), n);
        // even columns of B1 vanish
        for i in (0..2 * n).step_by(2) {
            assert!(b1.rows.column(i).amax() < 1e-12);
        }
    }
}

#[test]
fn dissipativity_suite() {
    for n in 1..=6 {
        let s = sys(n);
        let r = dissipativity_report(&build_boundary_matrix(BoundaryKind::B1, &s), &s).unwrap();
        assert!(r.max_quad_form.abs() <= 1e-10 && !r.strict, "B1, N = {n}");
        for e in 2..=6 {
            let r = dissipativity_report(
                &build_boundary_matrix(BoundaryKind::B2 { edges: e }, &s),
                &s,
            )
            .unwrap();
            if e == 2 {
                assert!(r.max_quad_form.abs() <= 1e-10 && !r.strict, "N = {n}");
            } else {
                assert!(r.strict && r.max_quad_form < 0.0, "N = {n}, n = {e}");
            }
        }
    }
}

#[test]
fn exchange_examples() {
    // n = 2 swaps
    let t = vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]];
    let inc = junction_exchange(&t).unwrap();
    assert_eq!(inc, vec![vec![5.0, 6.0], vec![1.0, 2.0]]);

    // identical even traces stay put
    let even = vec![0.3, 0.7, 0.3, 0.7];
    let inc = junction_exchange(&vec![even.clone(); 4]).unwrap();
    for i in &inc {
        assert_abs_diff_eq!(i[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(i[1], 0.7, epsilon = 1e-15);
    }

    let mut t = vec![vec![0.0; 4]; 3];
    t[0][0] = 1.0;
    let inc = junction_exchange(&t).unwrap();
    assert_eq!(inc[0][0], 0.0);
    assert_eq!(inc[1][0], 0.5);
    assert_eq!(inc[2][0], 0.5);
    assert!(junction_exchange(&t[..1]).is_err());
}

#[test]
fn reflection_examples() {
    assert_eq!(
        dvm_reflection(BoundaryKind::B1, &[1.5, -2.0]),
        vec![1.5, -2.0]
    );
    assert_eq!(
        dvm_reflection(BoundaryKind::B2 { edges: 3 }, &[1.0, 0.0]),
        vec![-0.5, 0.0]
    );
    assert_eq!(
        dvm_reflection(BoundaryKind::B2 { edges: 2 }, &[0.25, -3.0]),
        vec![-0.25, 3.0]
    );
}

#[test]
fn equilibrium_on_all_edges_has_zero_residual() {
    let s = sys(3);
    let g = [0.8, 0.0, 0.0, 0.0, 0.0, 0.0];
    let fields: Vec<Field> = (0..4)
        .map(|_| Field::from_components(g.iter().map(|&x| vec![x; 5]).collect()).unwrap())
        .collect();
    let vars = to_network_vars(&fields).unwrap();
    for (u, kind) in vars.u.iter().zip(vars.boundary_kinds()) {
        let b = build_boundary_matrix(kind, &s);
        assert!(boundary_residual(&b, &u.column(0)) < 1e-14);
    }
}

#[test]
fn two_equal_edges() {
    let g = Field::from_components(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let vars = to_network_vars(&[g.clone(), g.clone()]).unwrap();
    assert_eq!(vars.u[0], g.scaled(2.0));
    assert_eq!(vars.u[1].max_abs(), 0.0);
    let short = Field::zeros(2, 3);
    assert!(to_network_vars(&[g, short]).is_err());
}

fn random_traces(seed: &[f64], edges: usize, m: usize) -> Vec<Vec<f64>> {
    (0..edges)
        .map(|i| seed[i * m..(i + 1) * m].to_vec())
        .collect()
}

proptest! {
    #[test]
    fn network_roundtrip(seed in prop::collection::vec(-3.0f64..3.0, 4 * 2 * 6)) {
        let edges: Vec<Field> = (0..4)
            .map(|i| {
                let comps = (0..2).map(|c| seed[(i * 2 + c) * 6..(i * 2 + c + 1) * 6].to_vec()).collect();
                Field::from_components(comps).unwrap()
            })
            .collect();
        let back = from_network_vars(&to_network_vars(&edges).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&edges) {
            prop_assert!(a.max_abs_diff(b) <= 1e-12);
        }
    }

    #[test]
    fn exchange_satisfies_junction_identities(edges in 2usize..6, seed in prop::collection::vec(-2.0f64..2.0, 6 * 8)) {
        let nh = 4;
        let m = 2 * nh;
        let mut traces = random_traces(&seed, edges, m);
        let inc = junction_exchange(&traces).unwrap();
        for (t, i) in traces.iter_mut().zip(&inc) {
            t[nh..].copy_from_slice(i);
        }
        let n1 = edges as f64 - 1.0;
        for k in 0..nh {
            // mass balance: Σ f(v) = Σ f(−v)
            let plus: f64 = traces.iter().map(|t| t[nh + k]).sum();
            let minus: f64 = traces.iter().map(|t| t[k]).sum();
            prop_assert!((plus - minus).abs() <= 1e-12);
            // (n−1) f(v) + f(−v) is the same on every edge
            let c0 = n1 * traces[0][nh + k] + traces[0][k];
            for t in &traces[1..] {
                prop_assert!((n1 * t[nh + k] + t[k] - c0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reflection_completes_kernel(n in 1usize..6, edges in 2usize..6, seed in prop::collection::vec(-2.0f64..2.0, 6)) {
        let s = sys(n);
        for kind in [BoundaryKind::B1, BoundaryKind::B2 { edges }] {
            let out = &seed[..n];
            let mut f = out.to_vec();
            f.extend(dvm_reflection(kind, out));
            let u = s.moments_from_dvm(&f);
            let b = build_boundary_matrix(kind, &s);
            let scale = b.rows.amax() * f.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            prop_assert!(boundary_residual(&b, &u) <= 1e-12 * scale);
        }
        let twice = dvm_reflection(BoundaryKind::B1, &dvm_reflection(BoundaryKind::B1, &seed[..n]));
        prop_assert_eq!(&twice[..], &seed[..n]);
        let k2 = BoundaryKind::B2 { edges: 2 };
        let twice = dvm_reflection(k2, &dvm_reflection(k2, &seed[..n]));
        prop_assert_eq!(&twice[..], &seed[..n]);
    }

    /// On ker B2, with `x = W F+` and `F− = −(n−1) F+`, the form is `−(n²−2n) x^T W^{-1} Λ x`.
    #[test]
    fn kernel_quadratic_form(n in 1usize..7, edges in 2usize..7, seed in prop::collection::vec(-1.0f64..1.0, 6)) {
        let s = sys(n);
        let x = &seed[..n];
        let w = &s.w;
        let z = s.quadrature.positive_nodes();
        let fp: Vec<f64> = x.iter().zip(w).map(|(x, w)| x / w).collect();
        let mut f: Vec<f64> = fp.iter().map(|p| -(edges as f64 - 1.0) * p).collect();
        f.extend(&fp);
        let u = DVector::from_vec(s.moments_from_dvm(&f));
        let b = build_boundary_matrix(BoundaryKind::B2 { edges }, &s);
        prop_assert!((&b.rows * &u).amax() <= 1e-12 * b.rows.amax() * (1.0 + f.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        let form = (u.transpose() * &s.a * &u)[(0, 0)];
        let nn = edges as f64;
        let sum: f64 = (0..n).map(|k| x[k] * x[k] * z[k] / w[k]).sum();
        let want = -(nn * nn - 2.0 * nn) * sum;
        // each side is a difference of terms of size (n−1)² Σ x² z / w
        let scale = 1.0 + (nn - 1.0).powi(2) * sum;
        prop_assert!((form - want).abs() <= 1e-10 * scale);
    }
}
