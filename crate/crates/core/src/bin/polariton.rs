use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polariton::config::{OutputKind, ScenarioConfig};
use polariton::plot::{emit_plot, PlotStyle};
use polariton::scenario::{run_scenario, sweep, ScenarioOutcome, SweepParameter};
use polariton::Error;

#[derive(Parser, Debug)]
#[command(name = "polariton", version, about = "Cavity-coupled molecular ensembles: spectra, state counting and Lindblad dynamics")]
struct Cli {
    /// Scenario configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output_dir` from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for diagonalization and sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Reserved; every pipeline is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diagonalize and classify; writes ladder.csv and ladder.json.
    Spectrum,
    /// Propagate the master equation; writes trajectory.csv.
    Dynamics,
    /// Dark-polariton ratios and relative Rabi splitting over c = N_x / N.
    Count {
        /// Ensemble size for the exact ratios.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Repeat the dynamics for several values of one parameter.
    Sweep {
        /// c_et, kappa, g_c or n_exc_initial
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Render a trajectory, ladder or counting CSV as SVG.
    Plot {
        /// CSV file written by another verb.
        input: PathBuf,
        /// Destination; defaults to the input path with an .svg extension.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Logarithmic population axis.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        title: Option<String>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else if matches!(e, Error::Io(_)) {
        1
    } else {
        2
    }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, Error> {
    match &cli.config {
        Some(path) => ScenarioConfig::load(path),
        None => Ok(ScenarioConfig::default()),
    }
}

fn out_dir(cli: &Cli, config: &ScenarioConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(config.display_name()))
}

fn report(outcome: &ScenarioOutcome, dir: &Path) {
    for f in &outcome.manifest.outputs {
        println!("wrote {}", dir.join(f).display());
    }
    if let Some(traj) = &outcome.trajectory {
        let last = traj.times.len() - 1;
        println!(
            "t = {} fs: ground {:.4}, excited dark {:.4}, <N_t> {:.4}, purity {:.4}",
            traj.times[last],
            traj.ground()[last],
            traj.excited_dark()[last],
            traj.n_t[last],
            traj.purity[last]
        );
    }
    println!("total runtime {:.2} s", outcome.manifest.runtimes.total_s);
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Spectrum | Command::Dynamics => {
            let mut config = load_config(&cli)?;
            config.outputs = vec![match cli.command {
                Command::Spectrum => OutputKind::Ladder,
                _ => OutputKind::Trajectory,
            }];
            let dir = out_dir(&cli, &config);
            let outcome = run_scenario(&config, Some(&dir))?;
            report(&outcome, &dir);
        }
        Command::Count { n } => {
            let mut config = load_config(&cli)?;
            if let Some(n) = n {
                config.counting.n = *n;
            }
            config.outputs = vec![OutputKind::Counting];
            let dir = out_dir(&cli, &config);
            let outcome = run_scenario(&config, Some(&dir))?;
            report(&outcome, &dir);
        }
        Command::Sweep { param, values } => {
            let config = load_config(&cli)?;
            let parameter = SweepParameter::parse(param)?;
            let dir = out_dir(&cli, &config);
            std::fs::create_dir_all(&dir)?;
            let points = sweep(&config, parameter, values, Some(&dir))?;
            println!("{:>12} {:>10} {:>10} {:>10}", parameter.name(), "ground", "dark", "bright");
            for p in &points {
                println!(
                    "{:>12} {:>10.4} {:>10.4} {:>10.4}",
                    p.value, p.ground_end, p.dark_end, p.bright_end
                );
            }
            println!("wrote {}", dir.join("sweep.csv").display());
        }
        Command::Plot {
            input,
            output,
            log,
            title,
        } => {
            let text = std::fs::read_to_string(input)?;
            let style = PlotStyle {
                log_y: *log,
                title: title.clone().unwrap_or_default(),
                ..Default::default()
            };
            let svg = emit_plot(&text, &style)?;
            let target = output.clone().unwrap_or_else(|| input.with_extension("svg"));
            std::fs::write(&target, svg)?;
            println!("wrote {}", target.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
