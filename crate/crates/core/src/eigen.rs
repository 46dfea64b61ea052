//! Principal eigenvalues of the scalar operators `-delta d2/dx2 - f`
//! under periodic and Dirichlet conditions, the radius map `R(x, f, delta)`
//! defined by a vanishing Dirichlet eigenvalue, and the principal
//! eigenvalue of the coupled linearized (cooperative) operator.
//!
//! Conventions follow the usual periodic principal eigenvalue: the
//! unique `lambda` admitting a positive periodic eigenfunction `phi`
//! with `(-L) phi = lambda phi`, normalized to `sup |phi| = 1`.
//!
//! Solvers:
//! * scalar periodic: dense symmetric eigendecomposition of the
//!   tridiagonal-with-corners matrix (desk scale, n <= 2048);
//! * scalar Dirichlet: Sturm-sequence bisection on the symmetric
//!   tridiagonal matrix plus inverse iteration for the eigenfunction
//!   (the standard direct tridiagonal eigensolver; the radius map
//!   evaluates thousands of these);
//! * coupled 2n x 2n system: shifted inverse power iteration with an
//!   adaptive shift, valid because the transformed system has
//!   nonnegative couplings.

use crate::error::{Error, Result};
use crate::grid::{Field, Interval, PeriodicGrid};
use crate::linalg;
use crate::model::{ReactionSpec, Species, SystemParams};
use crate::stationary::StatePair;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest scalar problem size accepted by the dense path.
pub const DENSE_LIMIT: usize = 2048;

/// Tolerance on the residual invariant `|(-L)phi - lambda phi|`.
pub const RESIDUAL_FACTOR: f64 = 1e-8;

/// Principal eigenpair. `phi` has one entry per node (2n entries for
/// the coupled system: species 1 block first).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub phi: Vec<f64>,
    /// `sup |(-L) phi - lambda phi|` on the build grid.
    pub residual: f64,
}

impl EigenResult {
    fn normalized(lambda: f64, mut phi: Vec<f64>, residual: f64) -> Self {
        let sup = phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if sup > 0.0 {
            for v in &mut phi {
                *v /= sup;
            }
        }
        Self {
            lambda,
            phi,
            residual: residual / sup.max(f64::MIN_POSITIVE),
        }
    }
}

fn sign_fix(phi: &mut [f64]) {
    let sum: f64 = phi.iter().sum();
    if sum < 0.0 {
        for v in phi.iter_mut() {
            *v = -*v;
        }
    }
}

/// `lambda_1,per(-delta d2/dx2 - f)` with positive normalized
/// eigenfunction, by dense symmetric eigendecomposition. The dense
/// eigenpair is polished with one round of inverse iteration on the
/// periodic tridiagonal matrix, which brings the residual down to the
/// roundoff floor of a stencil application.
pub fn principal_eigen_periodic(delta: f64, f: &Field) -> Result<EigenResult> {
    if !(delta > 0.0) {
        return Err(Error::Usage(format!("diffusivity must be positive, got {delta}")));
    }
    let n = f.len();
    if n > DENSE_LIMIT {
        return Err(Error::Config(format!(
            "dense scalar eigensolve capped at n = {DENSE_LIMIT}, got {n}"
        )));
    }
    let dx = f.grid().dx();
    let w = delta / (dx * dx);
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = 2.0 * w - f.values()[j];
        m[(j, (j + 1) % n)] = -w;
        m[(j, (j + n - 1) % n)] = -w;
    }
    let eig = m.symmetric_eigen();
    let mut best = 0;
    for j in 1..n {
        if eig.eigenvalues[j] < eig.eigenvalues[best] {
            best = j;
        }
    }
    let mut lambda = eig.eigenvalues[best];
    let mut phi: Vec<f64> = eig.eigenvectors.column(best).iter().copied().collect();

    // Inverse-iteration polish with the shift anchored just below the
    // dense eigenvalue (which is accurate even when the dense
    // eigenvector is polluted by the degenerate non-principal pairs):
    // each pass amplifies the principal mode by the spectral gap over
    // the shift offset, so a few passes recover the eigenvector to
    // machine precision. Lambda is Rayleigh-updated at the end.
    let row_apply = |v: &[f64], j: usize| {
        -w * (v[(j + n - 1) % n] + v[(j + 1) % n]) + (2.0 * w - f.values()[j]) * v[j]
    };
    let shift = lambda - 1e-8 * (1.0 + lambda.abs());
    let diag: Vec<f64> = (0..n).map(|j| 2.0 * w - f.values()[j] - shift).collect();
    if let Ok(solver) = linalg::CyclicTridiag::factor(&diag, -w) {
        for _ in 0..3 {
            let Ok(refined) = solver.solve(&phi) else {
                break;
            };
            let norm = refined.iter().fold(0.0_f64, |mx, x| mx.max(x.abs()));
            if !(norm > 0.0) || !norm.is_finite() {
                break;
            }
            phi = refined.into_iter().map(|x| x / norm).collect();
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n {
            num += row_apply(&phi, j) * phi[j];
            den += phi[j] * phi[j];
        }
        lambda = num / den;
    }

    sign_fix(&mut phi);
    if phi.iter().any(|&v| v <= 0.0) {
        return Err(Error::Degeneracy(
            "periodic principal eigenvector has a non-positive entry".into(),
        ));
    }
    let mut residual = 0.0_f64;
    for j in 0..n {
        residual = residual.max((row_apply(&phi, j) - lambda * phi[j]).abs());
    }
    let result = EigenResult::normalized(lambda, phi, residual);
    if result.residual > RESIDUAL_FACTOR * (1.0 + lambda.abs()) {
        return Err(Error::Degeneracy(format!(
            "periodic eigen residual {:.3e} exceeds tolerance",
            result.residual
        )));
    }
    Ok(result)
}

fn dirichlet_tridiag(delta: f64, f: &[f64], interval: &Interval) -> (Vec<f64>, Vec<f64>) {
    let m = interval.resolution;
    let h = interval.dx();
    let w = delta / (h * h);
    let diag: Vec<f64> = (0..m).map(|j| 2.0 * w - f[j]).collect();
    let off = vec![-w; m - 1];
    (diag, off)
}

/// Smallest eigenvalue of `-delta d2/dx2 - f` on the interval with
/// zero boundary values, plus the positive normalized eigenfunction.
pub fn principal_eigen_dirichlet(delta: f64, f: &[f64], interval: &Interval) -> Result<EigenResult> {
    if !(delta > 0.0) {
        return Err(Error::Usage(format!("diffusivity must be positive, got {delta}")));
    }
    if f.len() != interval.resolution {
        return Err(Error::Usage(format!(
            "coefficient count {} does not match interval resolution {}",
            f.len(),
            interval.resolution
        )));
    }
    let (diag, off) = dirichlet_tridiag(delta, f, interval);
    let lambda = linalg::smallest_eig_sym_tridiag(&diag, &off);
    let mut phi = linalg::eigvec_sym_tridiag(&diag, &off, lambda)?;
    sign_fix(&mut phi);
    if phi.iter().any(|&v| v <= 0.0) {
        return Err(Error::Degeneracy(
            "Dirichlet principal eigenvector has a non-positive entry".into(),
        ));
    }
    let m = interval.resolution;
    let h = interval.dx();
    let w = delta / (h * h);
    let mut residual = 0.0_f64;
    for j in 0..m {
        let left = if j == 0 { 0.0 } else { phi[j - 1] };
        let right = if j + 1 == m { 0.0 } else { phi[j + 1] };
        let lphi = -w * (left - 2.0 * phi[j] + right) - f[j] * phi[j];
        residual = residual.max((lphi - lambda * phi[j]).abs());
    }
    Ok(EigenResult::normalized(lambda, phi, residual))
}

/// Outcome of the radius map: the radius at which the Dirichlet
/// eigenvalue vanishes, or `Infinite` when the periodic eigenvalue is
/// already nonnegative (so no finite ball reaches zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Radius {
    Finite(f64),
    Infinite,
}

impl Radius {
    pub fn finite(self) -> Option<f64> {
        match self {
            Radius::Finite(r) => Some(r),
            Radius::Infinite => None,
        }
    }
}

/// Richardson-extrapolated Dirichlet eigenvalue for the radius
/// bisection: second-order bias of the stencil is cancelled with a
/// two-resolution evaluation, leaving O(h^4).
fn dirichlet_lambda_extrapolated(
    x0: f64,
    radius: f64,
    f: &impl Fn(f64) -> f64,
    delta: f64,
) -> f64 {
    let base = ((64.0 * 2.0 * radius).ceil() as usize).max(1024);
    let mut lams = [0.0; 2];
    for (slot, m) in [(0, base), (1, 2 * base)] {
        let interval = Interval::new(x0, radius, m).expect("radius bisection builds valid intervals");
        let fv: Vec<f64> = interval.nodes().map(f).collect();
        let (diag, off) = dirichlet_tridiag(delta, &fv, &interval);
        lams[slot] = linalg::smallest_eig_sym_tridiag(&diag, &off);
    }
    (4.0 * lams[1] - lams[0]) / 3.0
}

/// `R(x0, f, delta)`: the radius at which the Dirichlet principal
/// eigenvalue of `-delta d2/dx2 - f` on `B(x0, R)` crosses zero,
/// located by bisection. `f` must be `period`-periodic.
pub fn radius(x0: f64, f: impl Fn(f64) -> f64, period: f64, delta: f64) -> Result<Radius> {
    if !(delta > 0.0) || !(period > 0.0) {
        return Err(Error::Usage("radius map needs positive delta and period".into()));
    }
    // Coefficient range over one period, on the audit resolution.
    let samples = 2048;
    let mut fmin = f64::INFINITY;
    let mut fmax = f64::NEG_INFINITY;
    for j in 0..samples {
        let v = f(x0 + period * j as f64 / samples as f64);
        fmin = fmin.min(v);
        fmax = fmax.max(v);
    }
    // Periodic principal eigenvalue >= -max f; a nonnegative value
    // means the Dirichlet eigenvalue never reaches zero.
    if fmax <= 0.0 {
        return Ok(Radius::Infinite);
    }
    let grid = PeriodicGrid::new(period, 256)?;
    let f_field = Field::from_fn(grid, &f);
    let per = principal_eigen_periodic(delta, &f_field)?;
    if per.lambda >= 0.0 {
        return Ok(Radius::Infinite);
    }

    // Bracket from the constant-coefficient formula with f replaced by
    // its extrema: R is non-increasing in f.
    let mut lo = 0.9 * (PI / 2.0) * (delta / fmax).sqrt();
    let mut hi = if fmin > 0.0 {
        (PI / 2.0) * (delta / fmin).sqrt()
    } else {
        2.0 * lo
    };
    let eval = |r: f64| dirichlet_lambda_extrapolated(x0, r, &f, delta);
    for _ in 0..80 {
        if eval(hi) < 0.0 {
            break;
        }
        hi *= 2.0;
        if hi > 1e6 * period {
            return Err(Error::Degeneracy(
                "radius bisection failed to bracket a sign change".into(),
            ));
        }
    }
    while eval(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-9 * period {
            return Err(Error::Degeneracy("radius bracket collapsed at zero".into()));
        }
    }
    let tol_lambda = 1e-10;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let lam = eval(mid);
        if lam.abs() <= tol_lambda || (hi - lo) <= 1e-14 * hi {
            return Ok(Radius::Finite(mid));
        }
        if lam > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Radius::Finite(mid))
}

/// The linearization of the cooperative form at a state `(u1, u2)`:
///
/// ```text
/// A = [ d2/dx2 + g1[u1] - k u2,    k u1                        ]
///     [ a k u2,                    d d2/dx2 + g2[u2] - a k u1  ]
/// ```
///
/// Off-diagonal couplings are nonnegative, which is what makes the
/// shifted-inverse iteration below converge to a positive eigenvector.
#[derive(Debug, Clone)]
pub struct CoopOperator {
    pub grid: PeriodicGrid,
    pub delta1: f64,
    pub delta2: f64,
    pub zeroth1: Vec<f64>,
    pub zeroth2: Vec<f64>,
    /// `k u1`, coupling of species 2 perturbations into species 1.
    pub coupling12: Vec<f64>,
    /// `alpha k u2`, coupling of species 1 perturbations into species 2.
    pub coupling21: Vec<f64>,
}

impl CoopOperator {
    pub fn linearized_at(state: &StatePair, params: &SystemParams, spec: &ReactionSpec) -> Result<Self> {
        let grid = state.u1.grid();
        let fields = spec.sample(&grid)?;
        let n = grid.len();
        let k = params.k;
        let a = params.alpha;
        let mut zeroth1 = vec![0.0; n];
        let mut zeroth2 = vec![0.0; n];
        let mut coupling12 = vec![0.0; n];
        let mut coupling21 = vec![0.0; n];
        for j in 0..n {
            let u1 = state.u1.values()[j];
            let u2 = state.u2.values()[j];
            let g1 = fields.mu1[j] - 2.0 * fields.nu1[j] * u1;
            let g2 = fields.mu2[j] - 2.0 * fields.nu2[j] * u2;
            zeroth1[j] = g1 - k * u2;
            zeroth2[j] = g2 - a * k * u1;
            coupling12[j] = k * u1;
            coupling21[j] = a * k * u2;
        }
        let op = Self {
            grid,
            delta1: 1.0,
            delta2: params.d,
            zeroth1,
            zeroth2,
            coupling12,
            coupling21,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coupling12.iter().chain(&self.coupling21).any(|&c| c < 0.0) {
            return Err(Error::Usage(
                "cooperative operator requires nonnegative couplings".into(),
            ));
        }
        Ok(())
    }

    /// Same operator with constants added to the zeroth-order terms,
    /// used for the momentum family `A + mu^2 diag(1, d)`.
    pub fn with_zeroth_shift(&self, c1: f64, c2: f64) -> Self {
        let mut op = self.clone();
        for v in &mut op.zeroth1 {
            *v += c1;
        }
        for v in &mut op.zeroth2 {
            *v += c2;
        }
        op
    }

    pub fn is_decoupled(&self) -> bool {
        self.coupling12.iter().all(|&c| c == 0.0) && self.coupling21.iter().all(|&c| c == 0.0)
    }

    /// Dense `2n x 2n` matrix of `A`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.grid.len();
        let dx = self.grid.dx();
        let w1 = self.delta1 / (dx * dx);
        let w2 = self.delta2 / (dx * dx);
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            m[(j, j)] = -2.0 * w1 + self.zeroth1[j];
            m[(j, (j + 1) % n)] = w1;
            m[(j, (j + n - 1) % n)] = w1;
            m[(j, n + j)] = self.coupling12[j];

            let r = n + j;
            m[(r, r)] = -2.0 * w2 + self.zeroth2[j];
            m[(r, n + (j + 1) % n)] = w2;
            m[(r, n + (j + n - 1) % n)] = w2;
            m[(r, j)] = self.coupling21[j];
        }
        m
    }

    /// `A v` without materializing the matrix.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let dx = self.grid.dx();
        let w1 = self.delta1 / (dx * dx);
        let w2 = self.delta2 / (dx * dx);
        let mut out = vec![0.0; 2 * n];
        for j in 0..n {
            let lap1 = v[(j + n - 1) % n] - 2.0 * v[j] + v[(j + 1) % n];
            out[j] = w1 * lap1 + self.zeroth1[j] * v[j] + self.coupling12[j] * v[n + j];
            let lap2 = v[n + (j + n - 1) % n] - 2.0 * v[n + j] + v[n + (j + 1) % n];
            out[n + j] = w2 * lap2 + self.zeroth2[j] * v[n + j] + self.coupling21[j] * v[j];
        }
        out
    }

    fn row_sum_bounds(&self) -> (f64, f64) {
        // Diffusion terms cancel in row sums, leaving the zeroth-order
        // and coupling entries; these bracket the spectral bound.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..self.grid.len() {
            let r1 = self.zeroth1[j] + self.coupling12[j];
            let r2 = self.zeroth2[j] + self.coupling21[j];
            lo = lo.min(r1.min(r2));
            hi = hi.max(r1.max(r2));
        }
        (lo, hi)
    }
}

/// `lambda_1,per(-A)` for the coupled operator: the negated spectral
/// bound of `A`, computed by shifted inverse power iteration. The
/// eigenvector is positive in both components whenever the couplings
/// do not vanish identically; in the exactly decoupled case the
/// problem is block-diagonal and the smaller scalar eigenvalue is
/// returned with the eigenvector supported on its own block.
pub fn principal_eigen_system(op: &CoopOperator) -> Result<EigenResult> {
    op.validate()?;
    let n = op.grid.len();
    if 2 * n > 2 * DENSE_LIMIT {
        return Err(Error::Config(format!(
            "system eigensolve capped at n = {DENSE_LIMIT} per species, got {n}"
        )));
    }

    if op.is_decoupled() {
        let f1 = Field::new(op.grid, op.zeroth1.clone())?;
        let f2 = Field::new(op.grid, op.zeroth2.clone())?;
        let e1 = principal_eigen_periodic(op.delta1, &f1)?;
        let e2 = principal_eigen_periodic(op.delta2, &f2)?;
        let (lam, phi_block, first) = if e1.lambda <= e2.lambda {
            (e1.lambda, e1.phi, true)
        } else {
            (e2.lambda, e2.phi, false)
        };
        let mut phi = vec![0.0; 2 * n];
        let offset = if first { 0 } else { n };
        phi[offset..offset + n].copy_from_slice(&phi_block);
        let av = op.apply(&phi);
        let residual = phi
            .iter()
            .zip(&av)
            .fold(0.0_f64, |m, (p, a)| m.max((-a - lam * p).abs()));
        return Ok(EigenResult {
            lambda: lam,
            phi,
            residual,
        });
    }

    let a = op.matrix();
    let (rs_lo, rs_hi) = op.row_sum_bounds();
    let scale = (rs_hi - rs_lo).max(1.0);
    let mut sigma = rs_hi + 1.0;
    let dim = 2 * n;
    let mut v = DVector::from_element(dim, 1.0);
    let mut s_estimate = rs_lo;
    let max_iterations = 10_000;
    let mut iterations = 0;
    let mut refactors = 0;
    // The evaluated residual bottoms out at the roundoff of a row
    // application, dominated by the stiff diffusion entries.
    let dx = op.grid.dx();
    let row_magnitude = {
        let w = op.delta1.max(op.delta2) / (dx * dx);
        let zmax = op
            .zeroth1
            .iter()
            .chain(&op.zeroth2)
            .chain(&op.coupling12)
            .chain(&op.coupling21)
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        4.0 * w + 2.0 * zmax
    };
    let matvec_floor = 16.0 * f64::EPSILON * row_magnitude;
    let target = |s: f64| (1e-11 * (1.0 + s.abs())).max(matvec_floor);

    'outer: loop {
        let shifted = DMatrix::identity(dim, dim) * sigma - &a;
        let lu = shifted.lu();
        for _ in 0..40 {
            iterations += 1;
            let w = lu
                .solve(&v)
                .ok_or_else(|| Error::Linear("singular shift in inverse iteration".into()))?;
            let norm = w.amax();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::Degeneracy("inverse iteration collapsed".into()));
            }
            v = w / norm;
            let av = &a * &v;
            let prev = s_estimate;
            s_estimate = v.dot(&av) / v.dot(&v);
            let residual = (&av - s_estimate * &v).amax();
            if residual <= target(s_estimate) {
                break 'outer;
            }
            if iterations >= max_iterations {
                let rel_change = ((s_estimate - prev) / (1.0 + s_estimate.abs())).abs();
                if rel_change > 1e-10 {
                    return Err(Error::EigenConvergence {
                        iterations,
                        rel_change,
                    });
                }
                break 'outer;
            }
        }
        // Tighten the shift toward the current estimate, keeping a
        // safety margin above it so the resolvent stays positive.
        refactors += 1;
        if refactors > 12 {
            return Err(Error::EigenConvergence {
                iterations,
                rel_change: f64::NAN,
            });
        }
        let margin = (0.25 * (sigma - s_estimate)).max(1e-3 * scale);
        sigma = s_estimate + margin;
    }

    let mut phi: Vec<f64> = v.iter().copied().collect();
    sign_fix(&mut phi);
    if phi.iter().any(|&x| x <= 0.0) {
        return Err(Error::Degeneracy(
            "system principal eigenvector has a non-positive entry".into(),
        ));
    }
    let av = op.apply(&phi);
    let lambda = -s_estimate;
    let residual = phi
        .iter()
        .zip(&av)
        .fold(0.0_f64, |m, (p, av)| m.max((-av - lambda * p).abs()));
    let result = EigenResult::normalized(lambda, phi, residual);
    if result.residual > RESIDUAL_FACTOR * (1.0 + lambda.abs()) {
        return Err(Error::Degeneracy(format!(
            "system eigen residual {:.3e} exceeds tolerance",
            result.residual
        )));
    }
    Ok(result)
}

/// Scalar periodic eigenvalue of `-delta d2/dx2 - f` where `f` is a
/// reaction coefficient `f_i(0, .)`, on a fresh grid of `n` nodes.
pub fn reaction_eigen(spec: &ReactionSpec, i: Species, params: &SystemParams, n: usize) -> Result<EigenResult> {
    let grid = PeriodicGrid::new(spec.period(), n)?;
    let fields = spec.sample(&grid)?;
    principal_eigen_periodic(i.diffusivity(params), &fields.f_at_zero(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrigSeries;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn constant_coefficient_eigenvalue_is_minus_m() {
        for (delta, m) in [(1.0, 1.0), (2.0, 0.7), (0.5, 3.0)] {
            let f = Field::constant(grid(128), m);
            let e = principal_eigen_periodic(delta, &f).unwrap();
            assert!((e.lambda + m).abs() < 1e-10, "lambda {} vs {}", e.lambda, -m);
            // Eigenfunction is the constant 1.
            assert!(e.phi.iter().all(|&p| (p - 1.0).abs() < 1e-8));
        }
    }

    #[test]
    fn eigenvalue_bounded_by_coefficient_range() {
        let f = Field::from_fn(grid(256), |x| 1.0 + 0.3 * (2.0 * PI * x).sin());
        let e = principal_eigen_periodic(1.0, &f).unwrap();
        assert!(e.lambda > -1.3 && e.lambda < -0.7, "lambda {}", e.lambda);
    }

    #[test]
    fn heterogeneous_eigenvalue_pinned_by_refinement() {
        let lam = |n: usize| {
            let f = Field::from_fn(grid(n), |x| 1.0 + 0.3 * (2.0 * PI * x).sin());
            principal_eigen_periodic(1.0, &f).unwrap().lambda
        };
        let (l512, l1024) = (lam(512), lam(1024));
        let extrapolated = (4.0 * l1024 - l512) / 3.0;
        assert!((l512 - l1024).abs() < 1e-6);
        assert!(extrapolated > -1.3 && extrapolated < -0.7);
        // Frozen from the two refinement levels above; second-order
        // perturbation theory for the sin mode gives the same value,
        // -1 - (0.3^2/2) / (2 pi)^2 = -1.001140.
        assert!((extrapolated - (-1.0011398)).abs() < 1e-4, "{extrapolated}");
    }

    #[test]
    fn rayleigh_quotient_matches_for_returned_pair() {
        let f = Field::from_fn(grid(128), |x| 1.0 + 0.3 * (2.0 * PI * x).sin());
        let e = principal_eigen_periodic(1.5, &f).unwrap();
        let phi = Field::new(grid(128), e.phi.clone()).unwrap();
        let lphi: Vec<f64> = phi
            .second_derivative(1.5)
            .unwrap()
            .values()
            .iter()
            .zip(f.values())
            .zip(phi.values())
            .map(|((d2, fv), p)| -(d2 + fv * p))
            .collect();
        let num: f64 = lphi.iter().zip(phi.values()).map(|(a, b)| a * b).sum();
        let den: f64 = phi.values().iter().map(|p| p * p).sum();
        assert!(e.lambda <= num / den + 1e-8);
    }

    #[test]
    fn dirichlet_free_laplacian_mode() {
        let r = 0.8;
        let iv = Interval::new(0.0, r, 1024).unwrap();
        let e = principal_eigen_dirichlet(1.0, &vec![0.0; 1024], &iv).unwrap();
        let exact = (PI / (2.0 * r)).powi(2);
        assert!((e.lambda - exact).abs() < 1e-4 * exact);
        assert!(e.phi.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn dirichlet_constant_shift() {
        let r = 1.1;
        let iv = Interval::new(0.3, r, 800).unwrap();
        let base = principal_eigen_dirichlet(2.0, &vec![0.0; 800], &iv).unwrap();
        let shifted = principal_eigen_dirichlet(2.0, &vec![0.9; 800], &iv).unwrap();
        assert!((shifted.lambda - (base.lambda - 0.9)).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_zero_crossing_after_refinement() {
        // delta = 1, f = 1, R = pi/2 puts the eigenvalue at zero; a
        // two-resolution Richardson step reaches 1e-6.
        let r = PI / 2.0;
        let lam = |m: usize| {
            let iv = Interval::new(0.0, r, m).unwrap();
            principal_eigen_dirichlet(1.0, &vec![1.0; m], &iv).unwrap().lambda
        };
        let extrapolated = (4.0 * lam(2048) - lam(1024)) / 3.0;
        assert!(extrapolated.abs() < 1e-6, "{extrapolated}");
    }

    #[test]
    fn radius_constant_formula() {
        let r = radius(0.0, |_| 1.0, 1.0, 1.0).unwrap().finite().unwrap();
        assert!((r - PI / 2.0).abs() < 1e-5 * (PI / 2.0), "{r}");
        let r4 = radius(0.0, |_| 1.0, 1.0, 4.0).unwrap().finite().unwrap();
        assert!((r4 - PI).abs() < 1e-5 * PI, "{r4}");
    }

    #[test]
    fn radius_nonincreasing_in_coefficient() {
        let f_small = |x: f64| 1.0 + 0.2 * (2.0 * PI * x).sin();
        let f_big = |x: f64| 1.5 + 0.2 * (2.0 * PI * x).sin();
        let r_small = radius(0.3, f_small, 1.0, 1.0).unwrap().finite().unwrap();
        let r_big = radius(0.3, f_big, 1.0, 1.0).unwrap().finite().unwrap();
        assert!(r_big <= r_small);
    }

    #[test]
    fn radius_infinite_when_periodic_eigenvalue_nonnegative() {
        // f < 0 everywhere: the operator is positive on every ball.
        match radius(0.0, |_| -0.5, 1.0, 1.0).unwrap() {
            Radius::Infinite => {}
            Radius::Finite(r) => panic!("expected infinite radius, got {r}"),
        }
    }

    #[test]
    fn hfreq_restatement_matches_model_margin() {
        // L < 2 (R(0, M1, 1) + R(0, M2, d)) restates the frequency
        // condition; both margins must agree to 1e-9.
        let spec = ReactionSpec::new(
            1.0,
            TrigSeries {
                constant: 1.0,
                harmonics: vec![(0.0, 0.3)],
            },
            TrigSeries::constant(1.0),
            TrigSeries::constant(1.0),
            TrigSeries::constant(1.0),
        )
        .unwrap();
        let params = SystemParams {
            d: 2.0,
            k: 1.0,
            alpha: 1.0,
            period: 1.0,
        };
        let report = spec.check_hypotheses(&params).unwrap();
        let r1 = radius(0.0, |_| report.big_m1, 1.0, 1.0).unwrap().finite().unwrap();
        let r2 = radius(0.0, |_| report.big_m2, 1.0, params.d).unwrap().finite().unwrap();
        let margin_eigen = 2.0 * (r1 + r2) - spec.period();
        assert!(
            (margin_eigen - report.hfreq_margin).abs() < 1e-9,
            "{} vs {}",
            margin_eigen,
            report.hfreq_margin
        );
    }

    #[test]
    fn decoupled_system_takes_smaller_scalar_eigenvalue() {
        let g = grid(64);
        let op = CoopOperator {
            grid: g,
            delta1: 1.0,
            delta2: 2.0,
            zeroth1: vec![0.8; 64],
            zeroth2: vec![0.3; 64],
            coupling12: vec![0.0; 64],
            coupling21: vec![0.0; 64],
        };
        let e = principal_eigen_system(&op).unwrap();
        // Scalar eigenvalues are -0.8 and -0.3.
        assert!((e.lambda + 0.8).abs() < 1e-10);
    }

    #[test]
    fn coupled_constant_system_matches_matrix_eigenvalue() {
        // Constant coefficients: the principal block is the 2x2 matrix
        // [[p, b], [c, q]] acting on constants; its larger eigenvalue
        // root is the spectral bound.
        let (p, q, b, c) = (-0.4, -0.9, 0.35, 0.5);
        let g = grid(48);
        let op = CoopOperator {
            grid: g,
            delta1: 1.0,
            delta2: 1.7,
            zeroth1: vec![p; 48],
            zeroth2: vec![q; 48],
            coupling12: vec![b; 48],
            coupling21: vec![c; 48],
        };
        let e = principal_eigen_system(&op).unwrap();
        let s = 0.5 * (p + q) + (0.25 * (p - q) * (p - q) + b * c).sqrt();
        assert!((e.lambda + s).abs() < 1e-8, "{} vs {}", e.lambda, -s);
        assert!(e.phi.iter().all(|&x| x > 0.0));
        assert!((e.phi.iter().fold(0.0_f64, |m, v| m.max(*v)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn momentum_shift_reduces_to_kpp_dispersion() {
        // Decoupled single species with constant f = m: the shifted
        // family gives s(A + mu^2) = mu^2 + m for the species-1 block.
        let g = grid(32);
        let op = CoopOperator {
            grid: g,
            delta1: 1.0,
            delta2: 1.0,
            zeroth1: vec![1.0; 32],
            zeroth2: vec![-5.0; 32],
            coupling12: vec![0.0; 32],
            coupling21: vec![0.0; 32],
        };
        let mu = 0.7;
        let shifted = op.with_zeroth_shift(mu * mu, mu * mu);
        let e = principal_eigen_system(&shifted).unwrap();
        assert!((-e.lambda - (mu * mu + 1.0)).abs() < 1e-9);
    }
}
