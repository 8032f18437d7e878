//! Scenario configuration files (TOML).
//!
//! Every field is optional; omitted fields take the default ensemble of
//! eight molecules at 4.3 eV with `g_c sqrt(N) = 0.5` eV, `kappa = 1/50`
//! fs^-1 and `Gamma = 1/1000` fs^-1, propagated for 1 ps.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::MoleculeLevel;
use crate::dynamics::{Method, PropagationOptions, StepControl};
use crate::error::{Error, Result};
use crate::operators::ModelParameters;
use crate::spectrum::Tolerances;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    TwoLevel,
    ThreeLevel,
}

impl ModelKind {
    pub fn levels(self) -> u8 {
        match self {
            ModelKind::TwoLevel => 2,
            ModelKind::ThreeLevel => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    #[default]
    Pure,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Ladder,
    Trajectory,
    Counting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetLevel {
    E,
    T,
}

impl From<TargetLevel> for MoleculeLevel {
    fn from(t: TargetLevel) -> Self {
        match t {
            TargetLevel::E => MoleculeLevel::E,
            TargetLevel::T => MoleculeLevel::T,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParameterConfig {
    pub omega_eg: f64,
    pub omega_c: f64,
    /// Single-molecule coupling; defaults to `0.5 / sqrt(N)` eV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_c: Option<f64>,
    pub omega_tg: f64,
    pub c_et: f64,
}

impl Default for ParameterConfig {
    fn default() -> Self {
        Self {
            omega_eg: 4.3,
            omega_c: 4.3,
            g_c: None,
            omega_tg: 3.9,
            c_et: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    /// Cavity decay rate (fs^-1).
    pub kappa: f64,
    /// Spontaneous emission rate (fs^-1).
    pub gamma: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
    pub positivity_stride: usize,
    pub max_steps: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let control = StepControl::default();
        Self {
            kappa: 0.02,
            gamma: 0.001,
            t_end: 1000.0,
            sample_dt: 5.0,
            rtol: control.rtol,
            atol: control.atol,
            method: control.method,
            positivity_stride: 1,
            max_steps: control.max_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountingConfig {
    /// Ensemble size for the exact ratio curves.
    pub n: u64,
    /// Sector indices `i` (levels above the manifold's dark states).
    pub sectors: Vec<u32>,
    /// Largest relative excitation on the grid.
    pub c_max: f64,
}

impl Default for CountingConfig {
    fn default() -> Self {
        Self {
            n: 400,
            sectors: vec![1, 2, 3],
            c_max: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelKind,
    pub n_molecules: usize,
    pub n_exc_initial: u32,
    pub initial: InitialKind,
    /// Level holding the initial excitations; `E` for two-level and `T`
    /// for three-level models unless given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_target: Option<TargetLevel>,
    /// Split population groups by cooperation number (two-level only).
    pub resolve_spin: bool,
    pub outputs: Vec<OutputKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub parameters: ParameterConfig,
    pub dynamics: DynamicsConfig,
    pub counting: CountingConfig,
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: None,
            model: ModelKind::TwoLevel,
            n_molecules: 8,
            n_exc_initial: 3,
            initial: InitialKind::Pure,
            initial_target: None,
            resolve_spin: false,
            outputs: vec![OutputKind::Ladder, OutputKind::Trajectory],
            output_dir: None,
            parameters: ParameterConfig::default(),
            dynamics: DynamicsConfig::default(),
            counting: CountingConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("field `{field}`: {msg}")));
        if self.n_molecules == 0 || self.n_molecules > 16 {
            return fail(
                "n_molecules",
                format!("must lie in 1..=16, got {}", self.n_molecules),
            );
        }
        if self.n_exc_initial as usize > self.n_molecules {
            return fail(
                "n_exc_initial",
                format!(
                    "{} excitations exceed n_molecules = {}",
                    self.n_exc_initial, self.n_molecules
                ),
            );
        }
        if self.model == ModelKind::TwoLevel && self.initial_target == Some(TargetLevel::T) {
            return fail(
                "initial_target",
                "T is only available in the three_level model".into(),
            );
        }
        let p = &self.parameters;
        for (name, v) in [
            ("parameters.omega_eg", p.omega_eg),
            ("parameters.omega_c", p.omega_c),
            ("parameters.omega_tg", p.omega_tg),
            ("parameters.c_et", p.c_et),
        ] {
            if !v.is_finite() {
                return fail(name, format!("must be finite, got {v}"));
            }
        }
        if let Some(g) = p.g_c {
            if !(g.is_finite() && g >= 0.0) {
                return fail("parameters.g_c", format!("must be finite and >= 0, got {g}"));
            }
        }
        let d = &self.dynamics;
        for (name, v) in [("dynamics.kappa", d.kappa), ("dynamics.gamma", d.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(name, format!("must be a finite rate >= 0, got {v}"));
            }
        }
        for (name, v) in [
            ("dynamics.t_end", d.t_end),
            ("dynamics.sample_dt", d.sample_dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(name, format!("must be positive, got {v}"));
            }
        }
        for (name, v) in [("dynamics.rtol", d.rtol), ("dynamics.atol", d.atol)] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(name, format!("must be >= 0, got {v}"));
            }
        }
        if d.rtol == 0.0 && d.atol == 0.0 {
            return fail("dynamics.rtol", "rtol and atol cannot both be zero".into());
        }
        let c = &self.counting;
        if c.n == 0 {
            return fail("counting.n", "must be positive".into());
        }
        if !(c.c_max > 0.0 && c.c_max <= 0.5) {
            return fail("counting.c_max", format!("must lie in (0, 0.5], got {}", c.c_max));
        }
        if c.sectors.contains(&0) {
            return fail("counting.sectors", "sector indices start at 1".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.degeneracy", t.degeneracy),
            ("tolerances.dark", t.dark),
            ("tolerances.spin", t.spin),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(name, format!("must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn levels(&self) -> u8 {
        self.model.levels()
    }

    pub fn target(&self) -> MoleculeLevel {
        match (self.initial_target, self.model) {
            (Some(t), _) => t.into(),
            (None, ModelKind::TwoLevel) => MoleculeLevel::E,
            (None, ModelKind::ThreeLevel) => MoleculeLevel::T,
        }
    }

    pub fn model_parameters(&self) -> ModelParameters {
        let p = &self.parameters;
        let two_level = self.model == ModelKind::TwoLevel;
        ModelParameters {
            n_molecules: self.n_molecules,
            omega_eg: p.omega_eg,
            omega_c: p.omega_c,
            g_c: p
                .g_c
                .unwrap_or_else(|| 0.5 / (self.n_molecules as f64).sqrt()),
            omega_tg: if two_level { 0.0 } else { p.omega_tg },
            c_et: if two_level { 0.0 } else { p.c_et },
        }
    }

    pub fn propagation_options(&self) -> PropagationOptions {
        let d = &self.dynamics;
        PropagationOptions {
            t_end: d.t_end,
            sample_dt: d.sample_dt,
            control: StepControl {
                rtol: d.rtol,
                atol: d.atol,
                method: d.method,
                max_steps: d.max_steps,
            },
            positivity_stride: d.positivity_stride,
        }
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        let p = c.model_parameters();
        assert!((p.collective_coupling() - 0.5).abs() < 1e-15);
        assert_eq!(c.dynamics.kappa, 0.02);
        assert_eq!(c.dynamics.gamma, 0.001);
        assert_eq!(c.target(), MoleculeLevel::E);
    }

    #[test]
    fn three_level_defaults_to_t() {
        let c = ScenarioConfig::from_toml("model = \"three_level\"\ninitial = \"mixed\"").unwrap();
        assert_eq!(c.target(), MoleculeLevel::T);
        assert_eq!(c.model_parameters().c_et, 0.05);
    }

    #[test]
    fn unknown_field_is_located() {
        let err = ScenarioConfig::from_toml("n_molecules = 8\n[dynamics]\nkapa = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kapa"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = ScenarioConfig::from_toml("[dynamics]\nkappa = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("dynamics.kappa"));
        let err = ScenarioConfig::from_toml("n_molecules = 4\nn_exc_initial = 5\n").unwrap_err();
        assert!(err.to_string().contains("n_exc_initial"));
        let err = ScenarioConfig::from_toml("initial_target = \"T\"\n").unwrap_err();
        assert!(err.to_string().contains("initial_target"));
    }

    #[test]
    fn round_trip() {
        let mut c = ScenarioConfig {
            name: Some("x".into()),
            model: ModelKind::ThreeLevel,
            initial_target: Some(TargetLevel::E),
            output_dir: Some("out/x".into()),
            ..Default::default()
        };
        c.parameters.g_c = Some(0.1);
        c.dynamics.method = Method::Dopri5;
        let text = c.to_toml();
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), c);
    }
}
