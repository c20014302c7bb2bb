use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use onoff_harness::{
    load_document, presets, run_experiment_with, run_sweep_with, write_report, ConfigDocument,
    ExperimentConfig, HarnessError, OutputFormat, RunOptions, RunReport, SweepAxis, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "onoff",
    version,
    about = "Simulate and reconstruct on/off photodetection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a config once per value of a swept parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// n | zeta | shots | eta_max | iterations | seed (overrides [sweep])
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// Comma-separated values (overrides [sweep])
        #[arg(long, value_delimiter = ',', requires = "axis")]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Built-in experiments.
    Preset {
        #[command(subcommand)]
        command: PresetCommand,
    },
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List preset names.
    List,
    /// Print a preset as a config document.
    Show { name: String },
    /// Run a preset (as a sweep if it defines one).
    Run {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; without it the structured report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    override_budget: bool,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            override_budget: self.override_budget,
        }
    }
}

fn read_config(path: &Path) -> Result<ConfigDocument, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_document(&text)
}

fn emit(report: &RunReport, dir: Option<&Path>, format: OutputFormat) -> anyhow::Result<()> {
    match dir {
        Some(dir) => {
            let files = write_report(report, dir, format)?;
            log::info!("wrote {} files to {}", files.len(), dir.display());
        }
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

fn summary_line(r: &RunReport) -> String {
    let name = r.config.name.as_deref().unwrap_or("run");
    let fid = r
        .final_fidelity()
        .map(|g| format!("{g:.6}"))
        .unwrap_or_else(|| "-".into());
    format!("{name}\tseed={}\tfidelity={fid}", r.seed)
}

fn run_single(cfg: ExperimentConfig, common: &Common) -> anyhow::Result<()> {
    let mut cfg = cfg;
    common.apply(&mut cfg);
    let report = run_experiment_with(&cfg, common.options())?;
    eprintln!("{}", summary_line(&report));
    emit(&report, cfg.output.dir.as_deref(), cfg.output.format)
}

fn run_sweep_cmd(
    mut cfg: ExperimentConfig,
    sweep: SweepSpec,
    common: &Common,
) -> anyhow::Result<()> {
    common.apply(&mut cfg);
    let reports = run_sweep_with(&cfg, sweep.axis, &sweep.values, common.options())?;
    let dir = cfg.output.dir.clone();
    for (value, report) in sweep.values.iter().zip(&reports) {
        eprintln!("{}", summary_line(report));
        let sub = dir
            .as_ref()
            .map(|d| d.join(format!("{}={value}", sweep.axis)));
        emit(report, sub.as_deref(), cfg.output.format)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, common } => {
            let doc = read_config(&config)?;
            run_single(doc.experiment, &common)
        }
        Command::Sweep {
            config,
            axis,
            values,
            common,
        } => {
            let doc = read_config(&config)?;
            let sweep = match (axis, values, doc.sweep) {
                (Some(axis), Some(values), _) => SweepSpec { axis, values },
                (Some(axis), None, Some(s)) => SweepSpec {
                    axis,
                    values: s.values,
                },
                (None, _, Some(s)) => s,
                _ => {
                    return Err(HarnessError::Validation(
                        "sweep needs --axis and --values or a [sweep] section".into(),
                    )
                    .into())
                }
            };
            run_sweep_cmd(doc.experiment, sweep, &common)
        }
        Command::Preset { command } => match command {
            PresetCommand::List => {
                for p in presets::all() {
                    println!("{:<14}{}", p.name, p.description);
                }
                Ok(())
            }
            PresetCommand::Show { name } => {
                let p = find_preset(&name)?;
                print!("{}", p.config.to_toml());
                if let Some(s) = p.sweep {
                    let text = toml::to_string(&std::collections::BTreeMap::from([("sweep", s)]))
                        .context("serializing sweep")?;
                    print!("\n{text}");
                }
                Ok(())
            }
            PresetCommand::Run { name, common } => {
                let p = find_preset(&name)?;
                match p.sweep {
                    Some(s) => run_sweep_cmd(p.config, s, &common),
                    None => run_single(p.config, &common),
                }
            }
        },
    }
}

fn find_preset(name: &str) -> Result<presets::Preset, HarnessError> {
    presets::preset(name).ok_or_else(|| {
        HarnessError::Validation(format!(
            "unknown preset {name:?} (known: {})",
            presets::names().join(", ")
        ))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<HarnessError>()
                .map(HarnessError::exit_code)
                .unwrap_or(2);
            ExitCode::from(code)
        }
    }
}
