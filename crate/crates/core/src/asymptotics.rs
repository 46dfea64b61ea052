//! The strong-competition segregation study: solutions of the scalar
//! limit equations `-z'' = eta[z]` and `-z'' = gamma[z]` for the
//! signed density `z ~ alpha u1 - d u2`, k-sweeps tracking the decay
//! of coexistence states, and the nodal-structure measurement that
//! quantifies why sign-changing limit profiles cannot fit in a short
//! period.
//!
//! The kinked nonlinearities are only Lipschitz at `z = 0`; Newton
//! runs on a smoothed version (width 1e-7) first and the result is
//! polished with the exact kink afterwards.

use crate::eigen::{self, Radius};
use crate::error::{Error, Result};
use crate::grid::{Field, PeriodicGrid};
use crate::linalg::CyclicTridiag;
use crate::model::{ReactionSpec, Species, SystemParams};
use crate::stationary::{self, default_seed_bank, extinction_states, instability_certificate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegregatedKind {
    Eta,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegregatedClass {
    Trivial,
    PlusState,
    MinusState,
    SignChanging,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegregatedSolution {
    pub z: Field,
    pub kind: SegregatedKind,
    pub classification: SegregatedClass,
    pub residual: f64,
}

/// Value and z-derivative of the chosen kinked reaction, with optional
/// smoothing of the positive/negative parts.
fn term_and_derivative(
    kind: SegregatedKind,
    spec: &ReactionSpec,
    params: &SystemParams,
    z: f64,
    x: f64,
    smoothing: f64,
) -> (f64, f64) {
    let (zp, zm, dzp) = if smoothing > 0.0 {
        let root = (z * z + smoothing * smoothing).sqrt();
        ((z + root) / 2.0, (root - z) / 2.0, (1.0 + z / root) / 2.0)
    } else {
        let h = if z > 0.0 {
            1.0
        } else if z < 0.0 {
            0.0
        } else {
            0.5
        };
        (z.max(0.0), (-z).max(0.0), h)
    };
    let dzm = dzp - 1.0;
    let (d, a) = (params.d, params.alpha);
    match kind {
        SegregatedKind::Eta => {
            let f1 = spec.f(Species::One, z / a, x);
            let f2 = spec.f(Species::Two, -z / d, x);
            let nu1 = spec.nu(Species::One).eval(x, spec.period());
            let nu2 = spec.nu(Species::Two).eval(x, spec.period());
            let value = f1 * zp - f2 * zm / d;
            let deriv = -(nu1 / a) * zp + f1 * dzp - (nu2 / d / d) * zm - (f2 / d) * dzm;
            (value, deriv)
        }
        SegregatedKind::Gamma => {
            let f1 = spec.f(Species::One, 0.0, x);
            let f2 = spec.f(Species::Two, 0.0, x);
            (f1 * zp - f2 * zm / d, f1 * dzp - (f2 / d) * dzm)
        }
    }
}

fn segregated_residual(
    z: &[f64],
    kind: SegregatedKind,
    spec: &ReactionSpec,
    params: &SystemParams,
    grid: &PeriodicGrid,
    smoothing: f64,
) -> Vec<f64> {
    let n = z.len();
    let w = 1.0 / (grid.dx() * grid.dx());
    (0..n)
        .map(|j| {
            let lap = z[(j + n - 1) % n] - 2.0 * z[j] + z[(j + 1) % n];
            let (value, _) = term_and_derivative(kind, spec, params, z[j], grid.node(j), smoothing);
            w * lap + value
        })
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn segregated_newton(
    mut z: Vec<f64>,
    kind: SegregatedKind,
    spec: &ReactionSpec,
    params: &SystemParams,
    grid: &PeriodicGrid,
    smoothing: f64,
    tol: f64,
    accept: f64,
    max_iter: usize,
) -> Option<(Vec<f64>, f64)> {
    let n = z.len();
    let w = 1.0 / (grid.dx() * grid.dx());
    let mut res = segregated_residual(&z, kind, spec, params, grid, smoothing);
    let mut res_norm = sup(&res);
    for _ in 0..max_iter {
        if res_norm <= tol {
            return Some((z, res_norm));
        }
        let diag: Vec<f64> = (0..n)
            .map(|j| {
                let (_, deriv) = term_and_derivative(kind, spec, params, z[j], grid.node(j), smoothing);
                -2.0 * w + deriv
            })
            .collect();
        let solver = CyclicTridiag::factor(&diag, w).ok()?;
        let neg: Vec<f64> = res.iter().map(|r| -r).collect();
        let step = solver.solve(&neg).ok()?;
        let mut damping = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> = z.iter().zip(&step).map(|(zi, si)| zi + damping * si).collect();
            let cres = segregated_residual(&cand, kind, spec, params, grid, smoothing);
            let cnorm = sup(&cres);
            if cnorm < res_norm {
                z = cand;
                res = cres;
                res_norm = cnorm;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !improved {
            return (res_norm <= accept).then_some((z, res_norm));
        }
    }
    (res_norm <= accept).then_some((z, res_norm))
}

fn classify(z: &Field, tol: f64) -> SegregatedClass {
    let max = z.max();
    let min = z.min();
    if max <= tol && min >= -tol {
        SegregatedClass::Trivial
    } else if min >= -tol {
        SegregatedClass::PlusState
    } else if max <= tol {
        SegregatedClass::MinusState
    } else {
        SegregatedClass::SignChanging
    }
}

/// Newton search over the seed bank for periodic solutions of
/// `-z'' = eta[z]` or `-z'' = gamma[z]`, deduplicated and classified.
/// Which classifications appear is the interesting outcome; an empty
/// or trivial-only list is a valid result.
pub fn solve_segregated(
    kind: SegregatedKind,
    spec: &ReactionSpec,
    params: &SystemParams,
    grid: &PeriodicGrid,
    n_random: usize,
    rng_seed: u64,
) -> Result<Vec<SegregatedSolution>> {
    params.validate()?;
    let (u1t, u2t) = extinction_states(params, spec, grid)?;
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for scale in [0.5, 1.0, 2.0] {
        seeds.push(u1t.values().iter().map(|v| scale * params.alpha * v).collect());
        seeds.push(u2t.values().iter().map(|v| -scale * params.d * v).collect());
    }
    seeds.push(vec![0.0; grid.len()]);
    let amplitude = (params.alpha * u1t.sup_norm()).max(params.d * u2t.sup_norm());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..n_random {
        let harmonics: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.3..1.5),
                )
            })
            .collect();
        let len = grid.length();
        let z: Vec<f64> = grid
            .nodes()
            .map(|x| {
                let mut v = 0.0;
                for (q, &(ac, asn, amp)) in harmonics.iter().enumerate() {
                    let phase = 2.0 * std::f64::consts::PI * (q as f64 + 1.0) * x / len;
                    v += amp * (ac * phase.cos() + asn * phase.sin());
                }
                v * amplitude / 2.0
            })
            .collect();
        seeds.push(z);
    }

    let w_max = 1.0 / (grid.dx() * grid.dx());
    let (tol, accept) = crate::stationary::newton_tolerances(w_max, amplitude, 1e-9);
    let converged: Vec<(Vec<f64>, f64)> = seeds
        .par_iter()
        .filter_map(|seed| {
            // Smoothed kinks first, then polish with the exact kink.
            let (rough, _) =
                segregated_newton(seed.clone(), kind, spec, params, grid, 1e-7, 1e-8, 1e-7, 60)?;
            segregated_newton(rough, kind, spec, params, grid, 0.0, tol, accept, 20)
        })
        .collect();

    let mut solutions: Vec<SegregatedSolution> = Vec::new();
    'next: for (z, residual) in converged {
        let field = Field::new(*grid, z)?;
        for existing in &solutions {
            if existing.z.sup_distance(&field) < 1e-6 {
                continue 'next;
            }
        }
        let classification = classify(&field, 1e-7);
        solutions.push(SegregatedSolution {
            z: field,
            kind,
            classification,
            residual,
        });
    }
    solutions.sort_by(|a, b| a.z.max().partial_cmp(&b.z.max()).unwrap());
    Ok(solutions)
}

/// Per-state quantities tracked along a k-sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateStats {
    pub sup_u1: f64,
    pub sup_u2: f64,
    /// `|u2| / (alpha |u1|)` in sup norms.
    pub ratio: f64,
    pub max_k_u1u2: f64,
    pub min_ku1: f64,
    pub max_ku1: f64,
    pub min_ku2: f64,
    pub max_ku2: f64,
    /// Segregation indicator, the overlap integral of `u1 u2`.
    pub overlap_integral: f64,
    pub lambda_principal: f64,
    pub certificate_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub k: f64,
    pub states: Vec<StateStats>,
}

impl SweepRecord {
    pub fn max_sup_norm(&self) -> Option<f64> {
        self.states
            .iter()
            .map(|s| s.sup_u1.max(s.sup_u2))
            .fold(None, |m, v| Some(m.map_or(v, |mm: f64| mm.max(v))))
    }

    pub fn all_unstable(&self) -> bool {
        self.states.iter().all(|s| s.lambda_principal < 0.0)
    }

    pub fn all_certified(&self) -> bool {
        !self.states.is_empty() && self.states.iter().all(|s| s.certificate_ok)
    }
}

/// Runs the coexistence search for each k and aggregates the decay
/// quantities. k values must be increasing and positive.
pub fn sweep_k(
    spec: &ReactionSpec,
    params_base: &SystemParams,
    k_values: &[f64],
    grid: &PeriodicGrid,
    n_random_seeds: usize,
    rng_seed: u64,
) -> Result<Vec<SweepRecord>> {
    if k_values.windows(2).any(|w| w[0] >= w[1]) || k_values.iter().any(|&k| k <= 0.0) {
        return Err(Error::Usage("k values must be increasing and positive".into()));
    }
    k_values
        .par_iter()
        .map(|&k| {
            let params = params_base.with_k(k);
            let fields = spec.sample(grid)?;
            let (u1t, u2t) = extinction_states(&params, spec, grid)?;
            let seeds = default_seed_bank(&params, &fields, &u1t, &u2t, n_random_seeds, rng_seed);
            let reports = stationary::find_coexistence_states(&params, spec, grid, &seeds)?;
            let states = reports
                .iter()
                .map(|r| {
                    let cert = instability_certificate(&r.state, &params, spec)?;
                    let u1 = &r.state.u1;
                    let u2 = &r.state.u2;
                    let n = u1.len();
                    let mut max_prod = 0.0_f64;
                    let mut overlap = 0.0;
                    for j in 0..n {
                        let p = u1.values()[j] * u2.values()[j];
                        max_prod = max_prod.max(k * p);
                        overlap += p;
                    }
                    overlap *= grid.dx();
                    Ok(StateStats {
                        sup_u1: u1.sup_norm(),
                        sup_u2: u2.sup_norm(),
                        ratio: u2.sup_norm() / (params.alpha * u1.sup_norm()),
                        max_k_u1u2: max_prod,
                        min_ku1: k * u1.min(),
                        max_ku1: k * u1.max(),
                        min_ku2: k * u2.min(),
                        max_ku2: k * u2.max(),
                        overlap_integral: overlap,
                        lambda_principal: r.lambda_principal,
                        certificate_ok: cert.ok,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRecord { k, states })
        })
        .collect()
}

/// Smallest k in the sweep at which states were found and every one of
/// them carries a passing instability certificate.
pub fn empirical_kstar(records: &[SweepRecord]) -> Option<f64> {
    records.iter().find(|r| r.all_certified()).map(|r| r.k)
}

/// Sign structure of a sign-changing profile: zero count, connected
/// components of the positive and negative sets with their measures,
/// and the radius-map lower bounds they are compared against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodalReport {
    pub zeros: usize,
    pub plus_components: usize,
    pub minus_components: usize,
    pub plus_measure: f64,
    pub minus_measure: f64,
    /// `2 (p + 1) R(0, M1, 1)` with `p + 1` the positive components.
    pub plus_lower_bound: f64,
    /// `2 (p + 1) R(0, M2, d)`.
    pub minus_lower_bound: f64,
    /// Whether the measured sets violate the lower bounds that a true
    /// solution would have to satisfy (the quantitative contradiction
    /// under the high-frequency condition).
    pub bound_violated: bool,
}

/// Measures the sign structure of `z` on one period.
pub fn nodal_structure(
    solution: &SegregatedSolution,
    spec: &ReactionSpec,
    params: &SystemParams,
) -> Result<NodalReport> {
    if solution.classification != SegregatedClass::SignChanging {
        return Err(Error::Usage(
            "nodal structure applies to sign-changing profiles only".into(),
        ));
    }
    let z = &solution.z;
    let grid = z.grid();
    let n = grid.len();
    let dx = grid.dx();

    // Node signs in cyclic order, exact zeros skipped: a sign flip in
    // the reduced sequence is one crossing, and each minus-to-plus
    // flip opens one positive component.
    let mut plus_measure = 0.0;
    let mut minus_measure = 0.0;
    let mut signs: Vec<i8> = Vec::with_capacity(n);
    for j in 0..n {
        let v = z.values()[j];
        if v > 0.0 {
            plus_measure += dx;
            signs.push(1);
        } else if v < 0.0 {
            minus_measure += dx;
            signs.push(-1);
        }
    }
    let mut zeros = 0;
    let mut plus_components = 0;
    let mut minus_components = 0;
    let m = signs.len();
    for i in 0..m {
        let (a, b) = (signs[i], signs[(i + 1) % m]);
        if a != b {
            zeros += 1;
            if b > 0 {
                plus_components += 1;
            } else {
                minus_components += 1;
            }
        }
    }
    if plus_components == 0 && signs.contains(&1) {
        plus_components = 1;
    }
    if minus_components == 0 && signs.contains(&-1) {
        minus_components = 1;
    }

    let report = spec.check_hypotheses(params)?;
    let r1 = match eigen::radius(0.0, |_| report.big_m1, spec.period(), 1.0)? {
        Radius::Finite(r) => r,
        Radius::Infinite => f64::INFINITY,
    };
    let r2 = match eigen::radius(0.0, |_| report.big_m2, spec.period(), params.d)? {
        Radius::Finite(r) => r,
        Radius::Infinite => f64::INFINITY,
    };
    let p_plus = plus_components as f64;
    let p_minus = minus_components as f64;
    let plus_lower_bound = 2.0 * p_plus * r1;
    let minus_lower_bound = 2.0 * p_minus * r2;
    Ok(NodalReport {
        zeros,
        plus_components,
        minus_components,
        plus_measure,
        minus_measure,
        plus_lower_bound,
        minus_lower_bound,
        bound_violated: plus_measure < plus_lower_bound - 1e-9
            || minus_measure < minus_lower_bound - 1e-9,
    })
}
