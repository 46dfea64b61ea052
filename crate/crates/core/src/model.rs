//! The reaction pair `(f1, f2)`, its derivatives, the segregated limit
//! terms `eta` and `gamma`, and the hypothesis checks.
//!
//! Reactions are affine in the density, `f_i(u, x) = mu_i(x) - nu_i(x) u`,
//! with trigonometric-polynomial coefficients of one common period.
//! This class is logistic by construction: `f_i(0, .) >= min mu_i > 0`
//! and `f_i` is strictly decreasing in `u` wherever `nu_i > 0`, with
//! `f_i(u, .) < 0` for `u > a_i = max(mu_i) / min(nu_i)`.

use crate::error::{Error, Result};
use crate::grid::{Field, PeriodicGrid};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default nodes per period used when a scenario does not override it.
pub const DEFAULT_GRID_N: usize = 256;

/// Hypothesis audits run on a grid this many times finer than default.
pub const AUDIT_FACTOR: usize = 8;

/// Species label; index 1 diffuses at rate 1, index 2 at rate `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Species {
    One,
    Two,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::One, Species::Two];

    /// 1-based index as used in file formats and reports.
    pub fn index(self) -> usize {
        match self {
            Species::One => 1,
            Species::Two => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Species::One),
            2 => Ok(Species::Two),
            _ => Err(Error::Usage(format!("species index must be 1 or 2, got {i}"))),
        }
    }

    pub fn diffusivity(self, params: &SystemParams) -> f64 {
        match self {
            Species::One => 1.0,
            Species::Two => params.d,
        }
    }
}

/// Truncated Fourier series: constant term plus `(cos, sin)` amplitude
/// pairs for harmonics `q = 1, 2, ...` of the base period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    pub constant: f64,
    #[serde(default)]
    pub harmonics: Vec<(f64, f64)>,
}

impl TrigSeries {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            harmonics: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64, period: f64) -> f64 {
        let w = 2.0 * PI / period;
        let mut v = self.constant;
        for (q, (a, b)) in self.harmonics.iter().enumerate() {
            let phase = w * (q as f64 + 1.0) * x;
            v += a * phase.cos() + b * phase.sin();
        }
        v
    }
}

/// Global scalar parameters of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Diffusivity of species 2 (species 1 diffuses at rate 1).
    pub d: f64,
    /// Interspecific competition rate.
    pub k: f64,
    /// Competition asymmetry.
    pub alpha: f64,
    /// Period length of the medium.
    pub period: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d", self.d),
            ("k", self.k),
            ("alpha", self.alpha),
            ("period", self.period),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }
}

/// The pair `(f1, f2)` with periodic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionSpec {
    period: f64,
    mu: [TrigSeries; 2],
    nu: [TrigSeries; 2],
}

/// Reaction bounds and hypothesis verdicts computed on the audit grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub m1: f64,
    pub m2: f64,
    pub big_m1: f64,
    pub big_m2: f64,
    pub h2_ok: bool,
    pub h3_ok: bool,
    pub hfreq_ok: bool,
    /// `pi (1/sqrt(M1) + sqrt(d/M2)) - L`; positive iff the
    /// high-frequency condition holds.
    pub hfreq_margin: f64,
    /// Node count of the audit grid the extrema were taken on.
    pub audit_n: usize,
}

impl ReactionSpec {
    pub fn new(period: f64, mu1: TrigSeries, nu1: TrigSeries, mu2: TrigSeries, nu2: TrigSeries) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        let spec = Self {
            period,
            mu: [mu1, mu2],
            nu: [nu1, nu2],
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Homogeneous coefficients `mu_i = const`, `nu_i = const`.
    pub fn homogeneous(period: f64, mu: [f64; 2], nu: [f64; 2]) -> Result<Self> {
        Self::new(
            period,
            TrigSeries::constant(mu[0]),
            TrigSeries::constant(nu[0]),
            TrigSeries::constant(mu[1]),
            TrigSeries::constant(nu[1]),
        )
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mu(&self, i: Species) -> &TrigSeries {
        &self.mu[i.index() - 1]
    }

    pub fn nu(&self, i: Species) -> &TrigSeries {
        &self.nu[i.index() - 1]
    }

    fn audit_grid(&self) -> PeriodicGrid {
        let n = AUDIT_FACTOR * DEFAULT_GRID_N;
        PeriodicGrid::new(self.period, n).expect("audit grid is valid by construction")
    }

    /// Positivity of `mu_i` and `nu_i` on the audit grid; named after
    /// the hypothesis each guards.
    fn validate(&self) -> Result<()> {
        let grid = self.audit_grid();
        for i in Species::BOTH {
            for x in grid.nodes() {
                if self.mu(i).eval(x, self.period) <= 0.0 {
                    return Err(Error::ModelInvalid {
                        hypothesis: "H2".into(),
                        detail: format!("mu_{} is non-positive at x = {x:.6}", i.index()),
                    });
                }
                if self.nu(i).eval(x, self.period) <= 0.0 {
                    return Err(Error::ModelInvalid {
                        hypothesis: "H3".into(),
                        detail: format!("nu_{} is non-positive at x = {x:.6}", i.index()),
                    });
                }
            }
        }
        Ok(())
    }

    /// `f_i(u, x) = mu_i(x) - nu_i(x) u`.
    pub fn f(&self, i: Species, u: f64, x: f64) -> f64 {
        self.mu(i).eval(x, self.period) - self.nu(i).eval(x, self.period) * u
    }

    /// `g_i = f_i + u d_u f_i`, the density derivative of `u f_i(u, x)`;
    /// for the affine class `g_i(u, x) = mu_i(x) - 2 nu_i(x) u`.
    pub fn g(&self, i: Species, u: f64, x: f64) -> f64 {
        self.mu(i).eval(x, self.period) - 2.0 * self.nu(i).eval(x, self.period) * u
    }

    /// Segregated reaction `eta(z, x) = f1(z/a, x) z+ - (1/d) f2(-z/d, x) z-`.
    pub fn eta(&self, params: &SystemParams, z: f64, x: f64) -> f64 {
        let zp = z.max(0.0);
        let zm = -z.min(0.0);
        self.f(Species::One, z / params.alpha, x) * zp
            - self.f(Species::Two, -z / params.d, x) * zm / params.d
    }

    /// Frozen-coefficient variant `gamma(z, x) = f1(0, x) z+ - (1/d) f2(0, x) z-`.
    pub fn gamma(&self, params: &SystemParams, z: f64, x: f64) -> f64 {
        let zp = z.max(0.0);
        let zm = -z.min(0.0);
        self.f(Species::One, 0.0, x) * zp - self.f(Species::Two, 0.0, x) * zm / params.d
    }

    /// Capacity bound `a_i = max(mu_i) / min(nu_i)`: the smallest
    /// constant with `f_i(u, .) < 0` for `u > a_i` in the affine class.
    pub fn capacity_bound(&self, i: Species) -> f64 {
        let grid = self.audit_grid();
        let mu_max = grid
            .nodes()
            .map(|x| self.mu(i).eval(x, self.period))
            .fold(f64::NEG_INFINITY, f64::max);
        let nu_min = grid
            .nodes()
            .map(|x| self.nu(i).eval(x, self.period))
            .fold(f64::INFINITY, f64::min);
        mu_max / nu_min
    }

    /// Largest `nu_i` value on the audit grid: the slope constant used
    /// by the instability certificate.
    pub fn max_nu(&self) -> f64 {
        let grid = self.audit_grid();
        Species::BOTH
            .iter()
            .flat_map(|&i| grid.nodes().map(move |x| self.nu(i).eval(x, self.period)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Reaction bounds `m_i = min f_i(0, .)`, `M_i = max f_i(0, .)` and
    /// the hypothesis verdicts, all on the audit grid.
    pub fn check_hypotheses(&self, params: &SystemParams) -> Result<HypothesisReport> {
        params.validate()?;
        if (params.period - self.period).abs() > 1e-12 * self.period {
            return Err(Error::Usage(format!(
                "params period {} does not match reaction period {}",
                params.period, self.period
            )));
        }
        self.validate()?;
        let grid = self.audit_grid();
        let mut m = [f64::INFINITY; 2];
        let mut big_m = [f64::NEG_INFINITY; 2];
        let mut nu_pos = true;
        for (idx, &i) in Species::BOTH.iter().enumerate() {
            for x in grid.nodes() {
                let f0 = self.f(i, 0.0, x);
                m[idx] = m[idx].min(f0);
                big_m[idx] = big_m[idx].max(f0);
                nu_pos &= self.nu(i).eval(x, self.period) > 0.0;
            }
        }
        let hfreq_margin = PI * (1.0 / big_m[0].sqrt() + (params.d / big_m[1]).sqrt()) - self.period;
        Ok(HypothesisReport {
            m1: m[0],
            m2: m[1],
            big_m1: big_m[0],
            big_m2: big_m[1],
            h2_ok: m[0] > 0.0 && m[1] > 0.0,
            h3_ok: nu_pos,
            hfreq_ok: hfreq_margin > 0.0,
            hfreq_margin,
            audit_n: grid.len(),
        })
    }

    /// Coefficient fields sampled on `grid`. When the grid spans an
    /// integer number of periods the samples are tiled bit-identically
    /// from one period, so a one-period index roll is an exact symmetry.
    pub fn sample(&self, grid: &PeriodicGrid) -> Result<ReactionFields> {
        let ratio = grid.length() / self.period;
        let periods = ratio.round();
        if (ratio - periods).abs() > 1e-9 || periods < 1.0 {
            return Err(Error::Usage(format!(
                "grid length {} is not an integer multiple of the period {}",
                grid.length(),
                self.period
            )));
        }
        let periods = periods as usize;
        if grid.len() % periods != 0 {
            return Err(Error::Usage(format!(
                "node count {} is not divisible by the period count {periods}",
                grid.len()
            )));
        }
        let n_per = grid.len() / periods;
        let sample_one = |s: &TrigSeries| -> Vec<f64> {
            let base: Vec<f64> = (0..n_per)
                .map(|j| s.eval(j as f64 * grid.dx(), self.period))
                .collect();
            base.iter().cycle().take(grid.len()).copied().collect()
        };
        Ok(ReactionFields {
            grid: *grid,
            mu1: sample_one(self.mu(Species::One)),
            nu1: sample_one(self.nu(Species::One)),
            mu2: sample_one(self.mu(Species::Two)),
            nu2: sample_one(self.nu(Species::Two)),
        })
    }
}

/// Node samples of the four coefficient functions on one grid.
#[derive(Debug, Clone)]
pub struct ReactionFields {
    pub grid: PeriodicGrid,
    pub mu1: Vec<f64>,
    pub nu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub nu2: Vec<f64>,
}

impl ReactionFields {
    pub fn mu(&self, i: Species) -> &[f64] {
        match i {
            Species::One => &self.mu1,
            Species::Two => &self.mu2,
        }
    }

    pub fn nu(&self, i: Species) -> &[f64] {
        match i {
            Species::One => &self.nu1,
            Species::Two => &self.nu2,
        }
    }

    /// `f_i(0, .)` as a field.
    pub fn f_at_zero(&self, i: Species) -> Field {
        Field::new(self.grid, self.mu(i).to_vec()).expect("sampled coefficients are finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sin_spec() -> ReactionSpec {
        // mu1 = 1 + 0.3 sin(2 pi x), everything else 1, period 1.
        ReactionSpec::new(
            1.0,
            TrigSeries {
                constant: 1.0,
                harmonics: vec![(0.0, 0.3)],
            },
            TrigSeries::constant(1.0),
            TrigSeries::constant(1.0),
            TrigSeries::constant(1.0),
        )
        .unwrap()
    }

    fn params(d: f64, k: f64) -> SystemParams {
        SystemParams {
            d,
            k,
            alpha: 1.0,
            period: 1.0,
        }
    }

    #[test]
    fn f_constant_coefficients() {
        let spec = ReactionSpec::homogeneous(1.0, [1.0, 1.0], [1.0, 1.0]).unwrap();
        assert_eq!(spec.f(Species::One, 0.0, 0.37), 1.0);
        assert_eq!(spec.f(Species::One, 1.0, 0.81), 0.0);
    }

    #[test]
    fn f_series_evaluation() {
        let spec = sin_spec();
        // sin(2 pi / 4) = 1 at x = 0.25.
        assert!((spec.f(Species::One, 0.0, 0.25) - 1.3).abs() < 1e-14);
    }

    #[test]
    fn g_examples() {
        let spec = ReactionSpec::homogeneous(1.0, [1.0, 1.0], [1.0, 1.0]).unwrap();
        assert_eq!(spec.g(Species::One, 0.0, 0.2), spec.f(Species::One, 0.0, 0.2));
        assert_eq!(spec.g(Species::One, 0.5, 0.9), 0.0);
        assert_eq!(spec.g(Species::One, 1.0, 0.1), -1.0);
    }

    #[test]
    fn eta_substitution_values() {
        let spec = ReactionSpec::homogeneous(1.0, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let p = params(1.0, 1.0);
        assert_eq!(spec.eta(&p, 0.0, 0.4), 0.0);
        // alpha = 1: f1(0.5) * 0.5 = 0.25.
        assert!((spec.eta(&p, 0.5, 0.0) - 0.25).abs() < 1e-15);
        // d = 2: -(1/2) f2(0.5) * 1 = -0.25.
        let p2 = params(2.0, 1.0);
        assert!((spec.eta(&p2, -1.0, 0.0) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn gamma_substitution_values() {
        let spec = ReactionSpec::homogeneous(1.0, [1.0, 1.0], [1.0, 1.0]).unwrap();
        let p = params(2.0, 1.0);
        assert_eq!(spec.gamma(&p, 0.0, 0.1), 0.0);
        assert!((spec.gamma(&p, 2.0, 0.3) - 2.0).abs() < 1e-15);
        assert!((spec.gamma(&p, -2.0, 0.3) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn eta_gamma_continuous_across_zero() {
        let spec = sin_spec();
        let p = params(2.0, 1.0);
        for x in [0.0, 0.13, 0.77] {
            for eps in [1e-6, 1e-9] {
                assert!((spec.eta(&p, eps, x) - spec.eta(&p, -eps, x)).abs() < 1e-5 * eps.max(1e-9) / 1e-9);
                assert!((spec.gamma(&p, eps, x) - spec.gamma(&p, -eps, x)).abs() < 4.0 * eps);
            }
        }
    }

    #[test]
    fn hfreq_margin_matches_formula() {
        let spec = sin_spec();
        let report = spec.check_hypotheses(&params(2.0, 1.0)).unwrap();
        // Audit-grid extrema of 1 + 0.3 sin approach 1.3 within O(dx^2).
        assert!((report.big_m1 - 1.3).abs() < 1e-5);
        assert!((report.big_m2 - 1.0).abs() < 1e-14);
        let expected = PI * (1.0 / 1.3_f64.sqrt() + 2.0_f64.sqrt()) - 1.0;
        assert!((expected - 6.198).abs() < 1e-3);
        assert!((report.hfreq_margin - expected).abs() < 1e-4);
        assert!(report.hfreq_ok && report.h2_ok && report.h3_ok);
    }

    #[test]
    fn constant_mu_gives_equal_bounds() {
        let spec = ReactionSpec::homogeneous(1.0, [2.5, 2.5], [1.0, 1.0]).unwrap();
        let report = spec.check_hypotheses(&params(1.0, 1.0)).unwrap();
        assert_eq!(report.m1, report.big_m1);
        assert_eq!(report.m1, 2.5);
    }

    #[test]
    fn hfreq_fails_for_long_period() {
        // L = 10, d = 1, mu = 4: pi (1/2 + 1/2) = pi < 10.
        let spec = ReactionSpec::homogeneous(10.0, [4.0, 4.0], [1.0, 1.0]).unwrap();
        let p = SystemParams {
            d: 1.0,
            k: 1.0,
            alpha: 1.0,
            period: 10.0,
        };
        let report = spec.check_hypotheses(&p).unwrap();
        assert!(!report.hfreq_ok);
        assert!((report.hfreq_margin - (PI - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn negative_nu_rejected_naming_h3() {
        let err = ReactionSpec::homogeneous(1.0, [1.0, 1.0], [-1.0, 1.0]).unwrap_err();
        match err {
            Error::ModelInvalid { hypothesis, .. } => assert_eq!(hypothesis, "H3"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn gamma_bounded_by_reaction_extrema() {
        let spec = sin_spec();
        let p = params(2.0, 1.0);
        let report = spec.check_hypotheses(&p).unwrap();
        for x in (0..64).map(|j| j as f64 / 64.0) {
            for z in [0.1, 0.7, 2.3] {
                let g = spec.gamma(&p, z, x);
                assert!(g >= report.m1 * z - 1e-12 && g <= report.big_m1 * z + 1e-12);
                let gm = spec.gamma(&p, -z, x);
                assert!(gm <= -report.m2 / p.d * z + 1e-12 && gm >= -report.big_m2 / p.d * z - 1e-12);
            }
        }
    }

    #[test]
    fn g_below_f_for_positive_density() {
        let spec = sin_spec();
        for x in (0..32).map(|j| j as f64 / 32.0) {
            for u in [0.1, 1.0, 3.0] {
                assert!(spec.g(Species::One, u, x) < spec.f(Species::One, u, x));
            }
        }
    }

    #[test]
    fn tiled_sampling_is_bit_identical_per_period() {
        let spec = sin_spec();
        let grid = PeriodicGrid::new(4.0, 4 * 64).unwrap();
        let fields = spec.sample(&grid).unwrap();
        for j in 0..64 {
            for p in 1..4 {
                assert_eq!(fields.mu1[j], fields.mu1[j + 64 * p]);
            }
        }
    }

    proptest! {
        /// Raising mu pointwise never increases the hfreq margin.
        #[test]
        fn margin_monotone_in_mu(bump in 0.01..3.0f64, base in 0.5..2.0f64) {
            let spec_lo = ReactionSpec::homogeneous(1.0, [base, 1.0], [1.0, 1.0]).unwrap();
            let spec_hi = ReactionSpec::homogeneous(1.0, [base + bump, 1.0], [1.0, 1.0]).unwrap();
            let p = params(1.5, 1.0);
            let lo = spec_lo.check_hypotheses(&p).unwrap().hfreq_margin;
            let hi = spec_hi.check_hypotheses(&p).unwrap().hfreq_margin;
            prop_assert!(hi <= lo + 1e-12);
        }
    }
}
