//! Run configuration: TOML (or JSON) ingestion with defaults, validation
//! with field-path diagnostics, round-trip emission, and the shipped presets.

use crate::atomic::{GridSpec, PotentialClass, PotentialSpec};
use crate::error::{Error, Result};
use crate::field::{Profile, Spacing};
use crate::model::ModelConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_grid() -> GridSpec {
    GridSpec {
        dimension: 1,
        half_extent: 8.0,
        points: 81,
    }
}
fn default_levels() -> usize {
    2
}
fn default_lambda() -> f64 {
    1.0
}
fn default_shells_per_decade() -> usize {
    12
}
fn default_directions() -> usize {
    1
}
fn default_spacing() -> Spacing {
    Spacing::Log
}
fn default_profile() -> Profile {
    Profile::Nelson
}
fn default_cap() -> usize {
    5
}
fn default_eig_tol() -> f64 {
    1e-9
}
fn default_solve_tol() -> f64 {
    1e-9
}
fn default_max_matvecs() -> usize {
    4_000_000
}
fn default_tail_gate() -> f64 {
    1e-4
}
fn default_true() -> bool {
    true
}
fn default_n0() -> f64 {
    1.0
}

/// Which diagnostic suites to run beyond the core sweep record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default = "default_true")]
    pub pull_through: bool,
    #[serde(default = "default_true")]
    pub ine1: bool,
    #[serde(default)]
    pub binding: bool,
    #[serde(default)]
    pub localization: bool,
    #[serde(default)]
    pub constants: bool,
    /// exponential decay rate for the localization check (0 = moments only)
    #[serde(default)]
    pub c0: f64,
    /// radius beyond which sup |V| is taken for the decay feasibility margin
    #[serde(default = "default_n0")]
    pub n0: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            pull_through: true,
            ine1: true,
            binding: false,
            localization: false,
            constants: false,
            c0: 0.0,
            n0: 1.0,
        }
    }
}

/// Full run description. Units: momenta in the natural units of the
/// dispersion (omega(k) = |k|), lengths in the particle grid units
/// (hbar = m = 1), energies accordingly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// coupling constant
    pub q: f64,
    pub potential: PotentialSpec,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    /// atomic levels kept in the coupled basis
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// ultraviolet cutoff
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// infrared cutoffs, strictly decreasing
    pub kappas: Vec<f64>,
    #[serde(default = "default_shells_per_decade")]
    pub shells_per_decade: usize,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    /// per-mode occupancy cap
    #[serde(default = "default_cap")]
    pub n_max: usize,
    /// total boson number cap
    #[serde(default = "default_cap")]
    pub total_max: usize,
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    #[serde(default = "default_solve_tol")]
    pub solve_tol: f64,
    #[serde(default = "default_max_matvecs")]
    pub max_matvecs: usize,
    /// run the frozen-particle (van Hove) oracle instead of the coupled model
    #[serde(default)]
    pub frozen: bool,
    /// records with larger truncation tail weight are rejected
    #[serde(default = "default_tail_gate")]
    pub tail_gate: f64,
    #[serde(default = "default_true")]
    pub cache: bool,
    #[serde(default)]
    pub checks: Checks,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, message: String| {
            Err(Error::Config {
                field: field.to_string(),
                message,
            })
        };
        if !self.q.is_finite() {
            return fail("q", format!("must be finite, got {}", self.q));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return fail("lambda", format!("must be positive, got {}", self.lambda));
        }
        if self.kappas.is_empty() {
            return fail("kappas", "at least one infrared cutoff is required".into());
        }
        for (i, &k) in self.kappas.iter().enumerate() {
            if !(k > 0.0 && k < self.lambda) {
                return fail(
                    &format!("kappas[{i}]"),
                    format!("kappa = {k} must lie in (0, lambda = {})", self.lambda),
                );
            }
        }
        for (i, pair) in self.kappas.windows(2).enumerate() {
            if pair[1] >= pair[0] {
                return fail(
                    &format!("kappas[{}]", i + 1),
                    "kappa list must be strictly decreasing".into(),
                );
            }
        }
        if self.levels == 0 {
            return fail("levels", "at least one atomic level is required".into());
        }
        if self.shells_per_decade == 0 {
            return fail("shells_per_decade", "must be at least 1".into());
        }
        if !matches!(self.directions, 1 | 6 | 12) {
            return fail(
                "directions",
                format!("must be 1, 6 or 12, got {}", self.directions),
            );
        }
        if self.n_max == 0 || self.total_max == 0 {
            return fail("n_max", "occupancy caps must be at least 1".into());
        }
        for (name, v) in [
            ("eig_tol", self.eig_tol),
            ("solve_tol", self.solve_tol),
            ("tail_gate", self.tail_gate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(name, format!("must be positive and finite, got {v}"));
            }
        }
        if self.checks.c0 < 0.0 || !self.checks.c0.is_finite() {
            return fail("checks.c0", "must be a finite non-negative rate".into());
        }
        if self.checks.constants
            && self.potential.declared_class == PotentialClass::C1
            && (self.potential.c1.is_none() || self.potential.c2.is_none())
        {
            return fail(
                "potential.c1",
                "constants check on a C1 potential needs the (c1, c2) pair".into(),
            );
        }
        self.grid.validate()
    }

    /// Shell count at one kappa: fixed shells-per-decade resolution.
    pub fn shells_at(&self, kappa: f64) -> usize {
        let decades = (self.lambda / kappa).log10();
        ((self.shells_per_decade as f64 * decades).ceil() as usize).max(1)
    }

    /// The per-point model configuration at one kappa.
    pub fn model_config(&self, kappa: f64) -> ModelConfig {
        ModelConfig {
            q: self.q,
            potential: self.potential.clone(),
            grid: self.grid,
            levels: self.levels,
            kappa,
            lambda: self.lambda,
            shells: self.shells_at(kappa),
            directions: self.directions,
            spacing: self.spacing,
            profile: self.profile,
            n_max: self.n_max,
            total_max: self.total_max,
            eig_tol: self.eig_tol,
            solve_tol: self.solve_tol,
            max_matvecs: self.max_matvecs,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Parse a config from TOML (default) or JSON (by file extension).
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = if path.extension().and_then(|e| e.to_str()) == Some("json") {
        serde_json::from_str(&text).map_err(|e| Error::Config {
            field: path.display().to_string(),
            message: e.to_string(),
        })?
    } else {
        toml::from_str(&text).map_err(|e| Error::Config {
            field: path.display().to_string(),
            message: e.to_string(),
        })?
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Shipped presets, embedded so `--preset NAME` needs no files on disk.
pub const PRESETS: &[(&str, &str)] = &[
    ("vanhove", include_str!("../presets/vanhove.toml")),
    ("harmonic_c1", include_str!("../presets/harmonic_c1.toml")),
    ("gaussian_c2", include_str!("../presets/gaussian_c2.toml")),
];

pub fn load_preset(name: &str) -> Result<RunConfig> {
    let Some((_, text)) = PRESETS.iter().find(|(n, _)| *n == name) else {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        return Err(Error::Config {
            field: "--preset".into(),
            message: format!("unknown preset `{name}`; available: {}", names.join(", ")),
        });
    };
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
        field: format!("preset {name}"),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> &'static str {
        r#"
q = 1.0
kappas = [0.2, 0.1]

[potential]
kind = "harmonic"
omega0 = 1.0
declared_class = "C1"
c1 = 2.0
c2 = 0.0
"#
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: RunConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.shells_per_decade, 12);
        assert_eq!(cfg.total_max, 5);
        assert_eq!(cfg.directions, 1);
        assert!(cfg.cache);
        assert!(cfg.checks.pull_through && cfg.checks.ine1);
        assert!(!cfg.checks.binding);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg: RunConfig = toml::from_str(minimal_toml()).unwrap();
        let emitted = cfg.to_toml();
        let again: RunConfig = toml::from_str(&emitted).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn bad_kappa_entry_is_named() {
        let mut cfg: RunConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.kappas = vec![0.2, 1.5];
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "kappas[1]"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn non_decreasing_kappas_rejected() {
        let mut cfg: RunConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.kappas = vec![0.1, 0.2];
        assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn json_alternative_is_accepted() {
        let cfg: RunConfig = toml::from_str(minimal_toml()).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, json).unwrap();
        let loaded = load_config(&path).unwrap();
        assert_eq!(cfg, loaded);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = format!("not_a_field = 3\n{}", minimal_toml());
        assert!(toml::from_str::<RunConfig>(&text).is_err());
    }

    #[test]
    fn shells_scale_with_decades() {
        let cfg: RunConfig = toml::from_str(minimal_toml()).unwrap();
        assert_eq!(cfg.shells_at(0.1), 12);
        assert_eq!(cfg.shells_at(0.01), 24);
        assert_eq!(cfg.shells_at(0.05), 16); // ceil(12 * log10(20))
    }

    #[test]
    fn all_presets_parse_and_validate() {
        for (name, _) in PRESETS {
            let cfg = load_preset(name).unwrap();
            cfg.validate().unwrap();
        }
        assert!(matches!(
            load_preset("nope"),
            Err(Error::Config { .. })
        ));
    }
}
