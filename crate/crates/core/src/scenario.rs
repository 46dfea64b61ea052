//! Scenario files: a human-editable sectioned key/value format (TOML)
//! describing the medium, parameters, grid defaults, solver tolerance
//! overrides and the random seed. Loading validates eagerly; emission
//! is canonical, so reloading an emitted dump reproduces the scenario
//! byte for byte.

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::model::{ReactionSpec, SystemParams, TrigSeries, DEFAULT_GRID_N};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Solver tolerance knobs recorded with every run. The defaults are
/// the contract values used throughout the toolkit; the CLI `--tol`
/// flag scales them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Sup-norm residual target of the logistic steady solver.
    pub newton_logistic: f64,
    /// Residual target of the coexistence Newton solver, per (1 + k).
    pub newton_coexistence: f64,
    /// Residual target of the segregated-equation solver.
    pub segregated: f64,
    /// Sup-distance below which two states are the same solution.
    pub dedup: f64,
    /// Eigenpair residual factor, per (1 + |lambda|).
    pub eigen_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            newton_logistic: 1e-11,
            newton_coexistence: 1e-10,
            segregated: 1e-11,
            dedup: 1e-6,
            eigen_residual: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            newton_logistic: self.newton_logistic * factor,
            newton_coexistence: self.newton_coexistence * factor,
            segregated: self.segregated * factor,
            dedup: self.dedup * factor,
            eigen_residual: self.eigen_residual * factor,
        }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub params: SystemParams,
    pub reactions: ReactionSpec,
    pub grid_n: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: MetaSection,
    params: ParamsSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    tolerances: Tolerances,
    reaction1: ReactionSection,
    reaction2: ReactionSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaSection {
    name: String,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    period: f64,
    d: f64,
    alpha: f64,
    k: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GridSection {
    resolution: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_GRID_N,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionSection {
    mu: TrigSeries,
    nu: TrigSeries,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        seed: u64,
        params: SystemParams,
        reactions: ReactionSpec,
        grid_n: usize,
    ) -> Result<Self> {
        let scenario = Self {
            name: name.into(),
            seed,
            params,
            reactions,
            grid_n,
            tolerances: Tolerances::default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if (self.params.period - self.reactions.period()).abs() > 1e-12 {
            return Err(Error::Config("period mismatch between params and reactions".into()));
        }
        // Eager hypothesis audit: positivity violations are hard
        // errors; a failing frequency condition is a property of the
        // scenario, not an error.
        self.reactions.check_hypotheses(&self.params)?;
        let _ = self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.params.period, self.grid_n)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let reactions = ReactionSpec::new(
            file.params.period,
            file.reaction1.mu,
            file.reaction1.nu,
            file.reaction2.mu,
            file.reaction2.nu,
        )?;
        let scenario = Self {
            name: file.scenario.name,
            seed: file.scenario.seed,
            params: SystemParams {
                d: file.params.d,
                alpha: file.params.alpha,
                k: file.params.k,
                period: file.params.period,
            },
            reactions,
            grid_n: file.grid.resolution,
            tolerances: file.tolerances,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Canonical emission: every field explicit, fixed order.
    pub fn to_canonical_toml(&self) -> String {
        use crate::model::Species;
        let file = ScenarioFile {
            scenario: MetaSection {
                name: self.name.clone(),
                seed: self.seed,
            },
            params: ParamsSection {
                period: self.params.period,
                d: self.params.d,
                alpha: self.params.alpha,
                k: self.params.k,
            },
            grid: GridSection {
                resolution: self.grid_n,
            },
            tolerances: self.tolerances,
            reaction1: ReactionSection {
                mu: self.reactions.mu(Species::One).clone(),
                nu: self.reactions.nu(Species::One).clone(),
            },
            reaction2: ReactionSection {
                mu: self.reactions.mu(Species::Two).clone(),
                nu: self.reactions.nu(Species::Two).clone(),
            },
        };
        toml::to_string(&file).expect("scenario serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_canonical_toml())?;
        Ok(())
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.params.k = k;
        self
    }

    pub fn with_grid_n(mut self, n: usize) -> Self {
        self.grid_n = n;
        self
    }

    // Built-in scenarios used by the test suites and available to the
    // CLI by name.

    /// Heterogeneous default: period 1, d = 2, mu1 = 1 + 0.3 sin(2 pi x),
    /// everything else 1. Satisfies the high-frequency condition with a
    /// wide margin.
    pub fn default_heterogeneous(k: f64) -> Self {
        let reactions = ReactionSpec::new(
            1.0,
            TrigSeries {
                constant: 1.0,
                harmonics: vec![(0.0, 0.3)],
            },
            TrigSeries::constant(1.0),
            TrigSeries::constant(1.0),
            TrigSeries::constant(1.0),
        )
        .expect("default scenario is valid");
        Self::new(
            "default-heterogeneous",
            42,
            SystemParams {
                d: 2.0,
                alpha: 1.0,
                k,
                period: 1.0,
            },
            reactions,
            DEFAULT_GRID_N,
        )
        .expect("default scenario is valid")
    }

    /// Fully symmetric homogeneous medium (front speed zero by
    /// exchange symmetry).
    pub fn homogeneous_symmetric(k: f64) -> Self {
        Self::new(
            "homogeneous-symmetric",
            42,
            SystemParams {
                d: 1.0,
                alpha: 1.0,
                k,
                period: 1.0,
            },
            ReactionSpec::homogeneous(1.0, [1.0, 1.0], [1.0, 1.0]).expect("valid"),
            DEFAULT_GRID_N,
        )
        .expect("valid scenario")
    }

    /// Long-period homogeneous medium violating the high-frequency
    /// condition: period 10, mu = 4, d = 1.
    pub fn wide_homogeneous(k: f64) -> Self {
        Self::new(
            "wide-homogeneous",
            42,
            SystemParams {
                d: 1.0,
                alpha: 1.0,
                k,
                period: 10.0,
            },
            ReactionSpec::homogeneous(10.0, [4.0, 4.0], [1.0, 1.0]).expect("valid"),
            DEFAULT_GRID_N,
        )
        .expect("valid scenario")
    }

    /// Homogeneous medium for single-species spreading-speed checks:
    /// growth rates high enough that the logarithmic front delay fits
    /// inside a 100-period domain.
    pub fn kpp_homogeneous(k: f64, mu1: f64, mu2: f64, d: f64) -> Self {
        Self::new(
            "kpp-homogeneous",
            42,
            SystemParams {
                d,
                alpha: 1.0,
                k,
                period: 1.0,
            },
            ReactionSpec::homogeneous(1.0, [mu1, mu2], [1.0, 1.0]).expect("valid"),
            DEFAULT_GRID_N,
        )
        .expect("valid scenario")
    }

    pub fn builtin(name: &str, k: f64) -> Result<Self> {
        match name {
            "default" | "default-heterogeneous" => Ok(Self::default_heterogeneous(k)),
            "homogeneous" | "homogeneous-symmetric" => Ok(Self::homogeneous_symmetric(k)),
            "wide" | "wide-homogeneous" => Ok(Self::wide_homogeneous(k)),
            other => Err(Error::Usage(format!(
                "unknown built-in scenario {other:?}; available: default, homogeneous, wide"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[scenario]
name = "minimal"

[params]
period = 1.0
d = 1.0
alpha = 1.0
k = 2.0

[reaction1.mu]
constant = 1.0

[reaction1.nu]
constant = 1.0

[reaction2.mu]
constant = 1.0

[reaction2.nu]
constant = 1.0
"#;

    #[test]
    fn minimal_file_fills_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.grid_n, DEFAULT_GRID_N);
        assert_eq!(s.seed, 42);
        assert_eq!(s.tolerances, Tolerances::default());
        assert_eq!(s.name, "minimal");
    }

    #[test]
    fn negative_nu_rejected_with_hypothesis_name() {
        let text = MINIMAL.replace(
            "[reaction1.nu]\nconstant = 1.0",
            "[reaction1.nu]\nconstant = -1.0",
        );
        match Scenario::from_toml_str(&text).unwrap_err() {
            Error::ModelInvalid { hypothesis, .. } => assert_eq!(hypothesis, "H3"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("k = 2.0", "k = 2.0\nbogus = 1.0");
        match Scenario::from_toml_str(&text).unwrap_err() {
            Error::Parse(msg) => assert!(msg.contains("bogus") || msg.contains("unknown")),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn canonical_roundtrip_is_byte_exact() {
        let s = Scenario::default_heterogeneous(100.0);
        let dump = s.to_canonical_toml();
        let reloaded = Scenario::from_toml_str(&dump).unwrap();
        assert_eq!(reloaded, s);
        assert_eq!(reloaded.to_canonical_toml(), dump);
    }

    #[test]
    fn builtin_names_resolve() {
        assert!(Scenario::builtin("default", 10.0).is_ok());
        assert!(Scenario::builtin("homogeneous", 10.0).is_ok());
        assert!(Scenario::builtin("wide", 10.0).is_ok());
        assert!(Scenario::builtin("nope", 10.0).is_err());
    }

    #[test]
    fn parse_error_carries_location() {
        let err = Scenario::from_toml_str("[scenario\nname=3").unwrap_err();
        match err {
            Error::Parse(msg) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("unexpected: {other}"),
        }
    }
}
