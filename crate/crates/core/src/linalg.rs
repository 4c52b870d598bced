//! Small dense linear algebra helpers.
//!
//! Symmetric eigenproblems use Householder tridiagonalisation followed by the
//! implicit QL iteration. Everything else leans on nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector of `values[j]`.
    pub vectors: DMatrix<f64>,
}

const MAX_QL_SWEEPS: usize = 60;

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal `diag`
/// and sub-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<SymEigen> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::config("tridiagonal eigen: inconsistent lengths"));
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = DMatrix::identity(n, n);
    tql2(&mut d, &mut e, &mut z)?;
    Ok(finish(d, z))
}

/// Eigen-decomposition of a dense symmetric matrix.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::config("symmetric eigen: matrix must be square"));
    }
    let mut z = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, &mut d, &mut e);
    // tred2 leaves the sub-diagonal in e[1..]; tql2 expects it in e[..n-1]
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    tql2(&mut d, &mut e, &mut z)?;
    Ok(finish(d, z))
}

fn finish(d: Vec<f64>, mut z: DMatrix<f64>) -> SymEigen {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        let mut col = z.column(i).into_owned();
        fix_sign(col.as_mut_slice());
        vectors.set_column(j, &col);
    }
    z.fill(0.0);
    SymEigen { values, vectors }
}

/// Flip `v` so that its first entry of non-negligible size is positive.
pub fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v
        .iter()
        .find(|x| x.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE))
    {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

// Householder reduction to tridiagonal form (accumulating transformations).
fn tred2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on a symmetric tridiagonal matrix; `e[..n-1]` holds the
// sub-diagonal, `z` accumulates the rotations.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    e[n - 1] = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(Error::numerical("QL iteration did not converge"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = z[(k, i + 1)];
                        z[(k, i + 1)] = s * z[(k, i)] + c * h;
                        z[(k, i)] = c * z[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Householder QR with column pivoting: `A P = Q R`, `Q` square orthogonal.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub perm: Vec<usize>,
}

pub fn pivoted_qr(a: &DMatrix<f64>) -> PivotedQr {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(m, m);
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n.min(m) {
        // pivot: largest remaining column norm, ties broken by lowest index
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..n {
            let nrm: f64 = (k..m).map(|i| r[(i, j)] * r[(i, j)]).sum();
            if nrm > best_norm * (1.0 + 1e-13) {
                best_norm = nrm;
                best = j;
            }
        }
        if best != k {
            r.swap_columns(k, best);
            perm.swap(k, best);
        }
        let x: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x.clone();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|a| a * a).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..m {
                r[(i, j)] -= s * v[i - k];
            }
        }
        for row in 0..m {
            let dot: f64 = (k..m).map(|i| q[(row, i)] * v[i - k]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..m {
                q[(row, i)] -= s * v[i - k];
            }
        }
    }
    PivotedQr { q, r, perm }
}

/// Orthonormal basis of the null space of `b` (columns), from a pivoted QR of `b^T`.
pub fn null_space(b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let bt = b.transpose();
    let qr = pivoted_qr(&bt);
    let scale =
        qr.r.iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
    let kmax = bt.ncols().min(bt.nrows());
    let rank = (0..kmax)
        .filter(|&i| qr.r[(i, i)].abs() > tol * scale)
        .count();
    let m = bt.nrows();
    let mut k = qr.q.columns(rank, m - rank).into_owned();
    for j in 0..k.ncols() {
        let mut col = k.column(j).into_owned();
        fix_sign(col.as_mut_slice());
        k.set_column(j, &col);
    }
    k
}

/// Numerical rank from the singular values.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |m, x| m.max(*x));
    sv.iter().filter(|s| **s > tol * smax).count()
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |m, x| m.max(*x));
    let smin = sv.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Smallest singular value.
pub fn min_singular_value(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |m, x| m.min(*x))
}

/// Factorised linear system, square or tall (least squares).
#[derive(Debug, Clone)]
pub struct LinearSolver {
    matrix: DMatrix<f64>,
    pinv: DMatrix<f64>,
    pub condition: f64,
}

impl LinearSolver {
    /// Factorise `a` (rows ≥ cols). Fails when the columns are numerically dependent.
    pub fn new(a: DMatrix<f64>, what: &str) -> Result<Self> {
        if a.nrows() < a.ncols() {
            return Err(Error::config(format!("{what}: underdetermined system")));
        }
        if a.ncols() == 0 {
            return Ok(Self {
                pinv: DMatrix::zeros(0, a.nrows()),
                matrix: a,
                condition: 1.0,
            });
        }
        let svd = a.clone().svd(true, true);
        let sv = &svd.singular_values;
        let smax = sv.iter().fold(0.0f64, |m, x| m.max(*x));
        let smin = sv.iter().fold(f64::INFINITY, |m, x| m.min(*x));
        let condition = if smin == 0.0 {
            f64::INFINITY
        } else {
            smax / smin
        };
        if !condition.is_finite() || condition > 1e12 {
            return Err(Error::numerical(format!(
                "{what}: singular boundary system (condition number {condition:.3e})"
            )));
        }
        let u = svd.u.as_ref().expect("u requested");
        let vt = svd.v_t.as_ref().expect("v_t requested");
        let mut sinv = DMatrix::zeros(sv.len(), sv.len());
        for i in 0..sv.len() {
            sinv[(i, i)] = 1.0 / sv[i];
        }
        let pinv = vt.transpose() * sinv * u.transpose();
        Ok(Self {
            matrix: a,
            pinv,
            condition,
        })
    }

    /// Solve in the least-squares sense; returns the solution and the residual norm.
    pub fn solve(&self, rhs: &DVector<f64>) -> (DVector<f64>, f64) {
        let x = &self.pinv * rhs;
        let res = (&self.matrix * &x - rhs).norm();
        (x, res)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_tridiagonal() {
        let e = tridiagonal_eigen(&[0.0, 0.0], &[1.0]).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        assert!((e.vectors[(0, 1)] - s).abs() < 1e-14);
        assert!((e.vectors[(1, 1)] - s).abs() < 1e-14);
    }

    #[test]
    fn dense_matches_reconstruction() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, -2.0, 2.0, 1.0, 2.0, 0.0, 1.0, -2.0, 0.0, 3.0, -2.0, 2.0, 1.0, -2.0, -1.0,
            ],
        );
        let e = symmetric_eigen(&a).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let rec = &e.vectors * d * e.vectors.transpose();
        assert!((rec - &a).amax() < 1e-12);
        let orth = e.vectors.transpose() * &e.vectors - DMatrix::identity(4, 4);
        assert!(orth.amax() < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn null_space_of_rank_one_row() {
        let b = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = null_space(&b, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!((&b * &k).amax() < 1e-14);
        assert!((k.transpose() * &k - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn least_squares_consistent_tall() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let s = LinearSolver::new(a, "t").unwrap();
        let (x, r) = s.solve(&DVector::from_vec(vec![2.0, 0.0, 0.0]));
        assert!((x[0] - 2.0).abs() < 1e-15 && r < 1e-15);
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            LinearSolver::new(a, "t"),
            Err(Error::Numerical(_))
        ));
    }
}
