//! Small dense/banded linear-algebra kernels: the Thomas algorithm for
//! tridiagonal systems, the Sherman-Morrison corrected solve for
//! periodic (tridiagonal-with-corners) systems, and a Sturm-sequence
//! bisection eigensolver for symmetric tridiagonal matrices.

use crate::error::{Error, Result};

/// Solves a tridiagonal system in place. `sub` and `sup` have length
/// `n - 1`, `diag` and `rhs` length `n`. Returns the solution vector.
pub fn solve_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut gamma = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Linear("tridiagonal pivot is zero".into()));
    }
    x[0] = rhs[0] / beta;
    for j in 1..n {
        gamma[j] = sup[j - 1] / beta;
        beta = diag[j] - sub[j - 1] * gamma[j];
        if beta == 0.0 {
            return Err(Error::Linear("tridiagonal pivot is zero".into()));
        }
        x[j] = (rhs[j] - sub[j - 1] * x[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        x[j] -= gamma[j + 1] * x[j + 1];
    }
    Ok(x)
}

/// Prefactored periodic tridiagonal system with constant coefficients
/// on each diagonal: `diag[j]` on the main diagonal, `off` on both
/// neighbours, and `off` in the two wraparound corners. This is the
/// shape of `I - dt * delta * D2` on a periodic grid, and of the
/// stationary Newton Jacobians.
///
/// Solved with the Sherman-Morrison formula: the corners are written
/// as a rank-one update of a plain tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct CyclicTridiag {
    n: usize,
    off: f64,
    modified_diag: Vec<f64>,
    gamma_corner: f64,
    /// Solution of the modified tridiagonal system for the rank-one
    /// carrier vector; reused across right-hand sides.
    z: Vec<f64>,
    zfactor: f64,
}

impl CyclicTridiag {
    /// Factors the system `(diag, off)` with periodic corners `off`.
    pub fn factor(diag: &[f64], off: f64) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return Err(Error::Linear("cyclic solve needs n >= 3".into()));
        }
        let gamma_corner = -diag[0];
        let mut modified = diag.to_vec();
        modified[0] -= gamma_corner;
        modified[n - 1] -= off * off / gamma_corner;

        let sub = vec![off; n - 1];
        let sup = vec![off; n - 1];
        let mut u = vec![0.0; n];
        u[0] = gamma_corner;
        u[n - 1] = off;
        let z = solve_tridiag(&sub, &modified, &sup, &u)?;
        let zfactor = 1.0 + z[0] + (off / gamma_corner) * z[n - 1];
        if zfactor == 0.0 {
            return Err(Error::Linear("cyclic correction factor vanished".into()));
        }
        Ok(Self {
            n,
            off,
            modified_diag: modified,
            gamma_corner,
            z,
            zfactor,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        debug_assert_eq!(rhs.len(), self.n);
        let sub = vec![self.off; self.n - 1];
        let sup = vec![self.off; self.n - 1];
        let mut x = solve_tridiag(&sub, &self.modified_diag, &sup, rhs)?;
        let corr = (x[0] + (self.off / self.gamma_corner) * x[self.n - 1]) / self.zfactor;
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi -= corr * zi;
        }
        Ok(x)
    }
}

/// Applies the periodic matrix `(diag, off, corners off)` to `x`.
pub fn apply_cyclic(diag: &[f64], off: f64, x: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut y = vec![0.0; n];
    for j in 0..n {
        let left = x[(j + n - 1) % n];
        let right = x[(j + 1) % n];
        y[j] = diag[j] * x[j] + off * (left + right);
    }
    y
}

/// Number of eigenvalues of the symmetric tridiagonal matrix
/// `(diag, off)` that are strictly below `shift`, counted by the
/// inertia of the shifted LDL^T factorization (Sturm sequence).
fn count_below(diag: &[f64], off: &[f64], shift: f64) -> usize {
    let n = diag.len();
    let mut count = 0;
    let mut d = diag[0] - shift;
    if d < 0.0 {
        count += 1;
    }
    for j in 1..n {
        let denom = if d == 0.0 { f64::MIN_POSITIVE } else { d };
        d = (diag[j] - shift) - off[j - 1] * off[j - 1] / denom;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm
/// bisection, refined to near machine precision.
pub fn smallest_eig_sym_tridiag(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    assert!(n >= 1 && off.len() == n - 1);
    // Gershgorin bracket.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..n {
        let r = if j > 0 { off[j - 1].abs() } else { 0.0 }
            + if j < n - 1 { off[j].abs() } else { 0.0 };
        lo = lo.min(diag[j] - r);
        hi = hi.max(diag[j] + r);
    }
    let scale = (hi - lo).max(1.0);
    let mut a = lo - 1e-12 * scale;
    let mut b = hi + 1e-12 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if count_below(diag, off, mid) >= 1 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

/// Eigenvector of a symmetric tridiagonal matrix for an isolated
/// eigenvalue `lambda`, by inverse iteration with a Thomas solve.
pub fn eigvec_sym_tridiag(diag: &[f64], off: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let scale: f64 = diag.iter().fold(1.0_f64, |m, d| m.max(d.abs()));
    // Tiny shift off the exact eigenvalue keeps the solve nonsingular.
    let shifted: Vec<f64> = diag.iter().map(|d| d - lambda + 1e-13 * scale).collect();
    let mut v = vec![1.0; n];
    for _ in 0..3 {
        let w = solve_tridiag(off, &shifted, off, &v)?;
        let norm = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Degeneracy("inverse iteration produced zero vector".into()));
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thomas_reproduces_known_solution() {
        // A = tridiag(-1, 2, -1), x = [1, 2, 3] -> r = A x.
        let sub = [-1.0, -1.0];
        let sup = [-1.0, -1.0];
        let diag = [2.0, 2.0, 2.0];
        let rhs = [0.0, 0.0, 4.0];
        let x = solve_tridiag(&sub, &diag, &sup, &rhs).unwrap();
        for (xi, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((xi - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_matches_direct_application() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|j| 3.0 + 0.1 * (j as f64).sin()).collect();
        let off = -0.7;
        let x_exact: Vec<f64> = (0..n).map(|j| (0.3 * j as f64).cos()).collect();
        let rhs = apply_cyclic(&diag, off, &x_exact);
        let solver = CyclicTridiag::factor(&diag, off).unwrap();
        let x = solver.solve(&rhs).unwrap();
        for (a, b) in x.iter().zip(&x_exact) {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn sturm_smallest_eig_matches_dirichlet_laplacian_formula() {
        // -u'' on (0, 1) with m interior nodes, h = 1/(m+1):
        // lambda_min = (4/h^2) sin^2(pi h / 2).
        let m = 200;
        let h = 1.0 / (m as f64 + 1.0);
        let diag = vec![2.0 / (h * h); m];
        let off = vec![-1.0 / (h * h); m - 1];
        let lambda = smallest_eig_sym_tridiag(&diag, &off);
        let exact = (4.0 / (h * h)) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        assert!((lambda - exact).abs() < 1e-8 * exact, "{lambda} vs {exact}");
    }

    #[test]
    fn sturm_eigvec_is_discrete_sine() {
        let m = 64;
        let h = 1.0 / (m as f64 + 1.0);
        let diag = vec![2.0 / (h * h); m];
        let off = vec![-1.0 / (h * h); m - 1];
        let lambda = smallest_eig_sym_tridiag(&diag, &off);
        let v = eigvec_sym_tridiag(&diag, &off, lambda).unwrap();
        // Match scales at a reference node; the discrete grid need not
        // contain the continuum maximum.
        let j_ref = m / 3;
        let x_ref = (j_ref as f64 + 1.0) * h;
        let scale = (std::f64::consts::PI * x_ref).sin() / v[j_ref];
        for (j, vj) in v.iter().enumerate() {
            let x = (j as f64 + 1.0) * h;
            let want = (std::f64::consts::PI * x).sin();
            assert!((scale * vj - want).abs() < 1e-6, "node {j}");
        }
    }

    proptest! {
        /// Sherman-Morrison cyclic solve agrees with re-application of
        /// the matrix on random diagonally dominant systems.
        #[test]
        fn cyclic_solve_roundtrip(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(4..60);
            let off: f64 = rng.gen_range(-2.0..2.0);
            let diag: Vec<f64> = (0..n)
                .map(|_| 2.0 * off.abs() + 0.5 + rng.gen_range(0.0..3.0))
                .collect();
            let x_exact: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let rhs = apply_cyclic(&diag, off, &x_exact);
            let solver = CyclicTridiag::factor(&diag, off).unwrap();
            let x = solver.solve(&rhs).unwrap();
            for (a, b) in x.iter().zip(&x_exact) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
