//! End-to-end scenario runs: spectrum, dynamics and counting outputs for one
//! configuration, and parameter sweeps over several.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::enumerate_basis;
use crate::combinatorics::{
    dark_polariton_ratio_approx, dark_polariton_ratio_exact, ratio_to_f64, relative_rabi,
};
use crate::config::{OutputKind, ScenarioConfig};
use crate::dynamics::{
    mixed_initial_state, propagate, pure_initial_state, Diagnostics, GroupProjectors,
    LindbladModel, PopulationTrajectory,
};
use crate::config::InitialKind;
use crate::error::{Error, Result};
use crate::operators::{build_hamiltonian, build_observables};
use crate::spectrum::{
    classify_eigenstates, diagonalize_manifolds, ladder_export, ClassifiedSpectrum, LadderDiagram,
};
use crate::spin::Spin;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Runtimes {
    pub spectrum_s: f64,
    pub dynamics_s: f64,
    pub counting_s: f64,
    pub total_s: f64,
}

/// Machine-readable record of a run, written as `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub config_sha256: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<String>,
    pub runtimes: Runtimes,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

/// Everything a run produced, for callers that want the data rather than
/// the files.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub manifest: Manifest,
    pub spectrum: Option<ClassifiedSpectrum>,
    pub ladder: Option<LadderDiagram>,
    pub trajectory: Option<PopulationTrajectory>,
}

/// SHA-256 of the canonical TOML serialization.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs every output requested by `config`. Files go to `out_dir` (created
/// if missing); with `None` nothing is written.
pub fn run_scenario(config: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ScenarioOutcome> {
    config.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut manifest = Manifest {
        name: config.display_name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(config),
        status: "ok".into(),
        error: None,
        outputs: Vec::new(),
        runtimes: Runtimes::default(),
        diagnostics: None,
    };
    let start = Instant::now();
    let result = run_outputs(config, out_dir, &mut manifest);
    manifest.runtimes.total_s = start.elapsed().as_secs_f64();
    if let Err(e) = &result {
        manifest.status = "failed".into();
        manifest.error = Some(e.to_string());
    }
    if let Some(dir) = out_dir {
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(dir.join("manifest.json"), text + "\n")?;
    }
    let (spectrum, ladder, trajectory) = result?;
    Ok(ScenarioOutcome {
        manifest,
        spectrum,
        ladder,
        trajectory,
    })
}

type Products = (
    Option<ClassifiedSpectrum>,
    Option<LadderDiagram>,
    Option<PopulationTrajectory>,
);

fn run_outputs(
    config: &ScenarioConfig,
    out_dir: Option<&Path>,
    manifest: &mut Manifest,
) -> Result<Products> {
    let mut spectrum = None;
    let mut ladder = None;
    let mut trajectory = None;
    let needs_model = config.wants(OutputKind::Ladder) || config.wants(OutputKind::Trajectory);

    if needs_model {
        let t0 = Instant::now();
        let basis = enumerate_basis(config.n_molecules, config.levels(), config.n_exc_initial)?;
        let params = config.model_parameters();
        let h = build_hamiltonian(&params, &basis)?;
        let obs = build_observables(&basis)?;
        let eig = diagonalize_manifolds(&h, &basis)?;
        let classified = classify_eigenstates(eig, &obs, params.omega_eg, &config.tolerances)?;
        manifest.runtimes.spectrum_s = t0.elapsed().as_secs_f64();

        if config.wants(OutputKind::Ladder) {
            let diagram = ladder_export(&classified.records);
            if let Some(dir) = out_dir {
                diagram.write_csv(create(&dir.join("ladder.csv"))?)?;
                fs::write(dir.join("ladder.json"), diagram.to_json() + "\n")?;
                manifest.outputs.push("ladder.csv".into());
                manifest.outputs.push("ladder.json".into());
            }
            ladder = Some(diagram);
        }

        if config.wants(OutputKind::Trajectory) {
            let t0 = Instant::now();
            let resolve_spin = config.resolve_spin && config.levels() == 2;
            let projectors = GroupProjectors::new(&classified, resolve_spin)?;
            let k = config.n_exc_initial as usize;
            let rho0 = match config.initial {
                InitialKind::Pure => pure_initial_state(&basis, config.target(), k)?,
                InitialKind::Mixed => mixed_initial_state(&basis, config.target(), k)?,
            };
            let model = LindbladModel::new(
                &basis,
                h,
                config.dynamics.kappa,
                config.dynamics.gamma,
            )?;
            let traj = propagate(&rho0, &model, &projectors, &config.propagation_options())?;
            manifest.runtimes.dynamics_s = t0.elapsed().as_secs_f64();
            manifest.diagnostics = Some(traj.diagnostics);
            if let Some(dir) = out_dir {
                traj.write_csv(create(&dir.join("trajectory.csv"))?)?;
                manifest.outputs.push("trajectory.csv".into());
            }
            trajectory = Some(traj);
        }
        spectrum = Some(classified);
    }

    if config.wants(OutputKind::Counting) {
        let t0 = Instant::now();
        if let Some(dir) = out_dir {
            write_counting_csv(config, create(&dir.join("counting.csv"))?)?;
            manifest.outputs.push("counting.csv".into());
        }
        manifest.runtimes.counting_s = t0.elapsed().as_secs_f64();
    }
    Ok((spectrum, ladder, trajectory))
}

/// Ratio of dark polaritons to dark states (exact at `counting.n` and
/// approximate) per sector, plus the relative Rabi splitting, on the grid
/// `c = N_x / N`.
pub fn write_counting_csv<W: Write>(config: &ScenarioConfig, mut w: W) -> Result<()> {
    let n = config.counting.n;
    let sectors = &config.counting.sectors;
    write!(w, "c,n_x")?;
    for i in sectors {
        write!(w, ",ratio_exact_i{i},ratio_approx_i{i}")?;
    }
    writeln!(w, ",relative_rabi")?;
    let max_x = (config.counting.c_max * n as f64).floor() as u64;
    for n_x in 1..=max_x {
        let c = n_x as f64 / n as f64;
        write!(w, "{c},{n_x}")?;
        for &i in sectors {
            // S = N/2 - N_x + i, stored doubled
            let doubled = n as i64 - 2 * n_x as i64 + 2 * i as i64;
            let exact = if doubled >= 0 && (doubled as u64) < n {
                dark_polariton_ratio_exact(n, n_x, Spin::from_doubled(doubled as u32))
                    .ok()
                    .map(|r| ratio_to_f64(&r))
            } else {
                None
            };
            let approx = dark_polariton_ratio_approx(c, i).ok();
            let fmt = |x: Option<f64>| x.map(|v| format!("{v:.12e}")).unwrap_or_default();
            write!(w, ",{},{}", fmt(exact), fmt(approx))?;
        }
        writeln!(w, ",{:.12e}", relative_rabi(c)?)?;
    }
    Ok(())
}

/// Parameters that [`sweep`] can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    CEt,
    Kappa,
    GC,
    NExcInitial,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "c_et" => Ok(SweepParameter::CEt),
            "kappa" => Ok(SweepParameter::Kappa),
            "g_c" => Ok(SweepParameter::GC),
            "n_exc_initial" | "N_exc_initial" => Ok(SweepParameter::NExcInitial),
            other => Err(Error::Config(format!(
                "unknown sweep parameter `{other}` (expected c_et, kappa, g_c or n_exc_initial)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::CEt => "c_et",
            SweepParameter::Kappa => "kappa",
            SweepParameter::GC => "g_c",
            SweepParameter::NExcInitial => "n_exc_initial",
        }
    }

    pub fn apply(self, config: &mut ScenarioConfig, value: f64) -> Result<()> {
        match self {
            SweepParameter::CEt => config.parameters.c_et = value,
            SweepParameter::Kappa => config.dynamics.kappa = value,
            SweepParameter::GC => config.parameters.g_c = Some(value),
            SweepParameter::NExcInitial => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!(
                        "n_exc_initial must be a non-negative integer, got {value}"
                    )));
                }
                config.n_exc_initial = value as u32;
            }
        }
        config.validate()
    }
}

/// End-of-run populations of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub directory: PathBuf,
    pub ground_end: f64,
    pub dark_end: f64,
    pub bright_end: f64,
    pub n_t_end: f64,
}

/// Runs one scenario per value (concurrently) and writes `sweep.csv` with
/// the populations at `t_end`.
pub fn sweep(
    config: &ScenarioConfig,
    parameter: SweepParameter,
    values: &[f64],
    out_dir: Option<&Path>,
) -> Result<Vec<SweepPoint>> {
    let mut configs = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = config.clone();
        parameter.apply(&mut c, v)?;
        if !c.wants(OutputKind::Trajectory) {
            c.outputs.push(OutputKind::Trajectory);
        }
        c.name = Some(format!("{}_{}_{}", config.display_name(), parameter.name(), v));
        configs.push((v, c));
    }
    let points: Vec<Result<SweepPoint>> = configs
        .par_iter()
        .map(|(v, c)| {
            let sub = PathBuf::from(format!("{}_{}", parameter.name(), v));
            let dir = out_dir.map(|d| d.join(&sub));
            let outcome = run_scenario(c, dir.as_deref())?;
            let traj = outcome.trajectory.expect("sweeps always propagate");
            let last = traj.times.len() - 1;
            Ok(SweepPoint {
                value: *v,
                directory: sub,
                ground_end: traj.ground()[last],
                dark_end: traj.excited_dark()[last],
                bright_end: traj
                    .sum_where(|k| k.character == crate::dynamics::Character::Bright)[last],
                n_t_end: traj.n_t[last],
            })
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out_dir {
        let mut w = create(&dir.join("sweep.csv"))?;
        writeln!(w, "{},ground_end,dark_end,bright_end,n_t_end,directory", parameter.name())?;
        for p in &points {
            writeln!(
                w,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                p.value,
                p.ground_end,
                p.dark_end,
                p.bright_end,
                p.n_t_end,
                p.directory.display()
            )?;
        }
        w.flush()?;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.dynamics.kappa = 0.03;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn unknown_sweep_parameter() {
        assert!(matches!(SweepParameter::parse("omega"), Err(Error::Config(_))));
        assert_eq!(SweepParameter::parse("N_exc_initial").unwrap(), SweepParameter::NExcInitial);
    }

    #[test]
    fn counting_csv_shape() {
        let mut config = ScenarioConfig::default();
        config.counting.n = 20;
        config.counting.sectors = vec![1];
        let mut out = Vec::new();
        write_counting_csv(&config, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "c,n_x,ratio_exact_i1,ratio_approx_i1,relative_rabi");
        assert_eq!(lines.len(), 11);
        // N = 20, N_x = 2, i = 1: N_DS(20, 1) / N_DS(20, 2) = 19 / 170
        let row: Vec<&str> = lines[2].split(',').collect();
        let exact: f64 = row[2].parse().unwrap();
        assert!((exact - 19.0 / 170.0).abs() < 1e-12);
    }
}
