//! Command-line entry point: `run`, `compare`, `sweep` and `validate`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, Protocol, ScenarioConfig};
use crate::metrics::{run_parallel, summarize, sweep, MetricsError, TimeSeries};
use crate::sim::{run_scenario, RunOutput};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "wsnsim", version, about = "Round-based wireless sensor network simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured protocol once.
    Run(RunManifest),
    /// Run both protocols on the same deployment.
    Compare(RunManifest),
    /// Vary one config key over the sweep section's values and seeds.
    Sweep(RunManifest),
    /// Run and check the energy, power and flow constraints.
    Validate(RunManifest),
}

#[derive(Debug, Clone, Args)]
pub struct RunManifest {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Override a config key, e.g. `--set radio.rho=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl RunManifest {
    /// Output file prefix: the config file stem.
    pub fn label(&self) -> String {
        self.config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".to_string())
    }

    fn load(&self) -> Result<ScenarioConfig, Error> {
        let config = parse_config(&self.config, &self.overrides)?;
        fs::create_dir_all(&self.out).map_err(|e| Error::Io(self.out.display().to_string(), e))?;
        Ok(config)
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Error> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::Io(path.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io(path.display().to_string(), e))
}

fn write_series(m: &RunManifest, out: &RunOutput) -> Result<TimeSeries, Error> {
    let series = TimeSeries::from_run(&m.label(), out);
    series.write_csv(create(&m.out.join(series.file_name()))?)?;
    Ok(series)
}

pub fn cmd_run(m: &RunManifest) -> Result<i32, Error> {
    let config = m.load()?;
    let out = run_scenario(&config)?;
    write_series(m, &out)?;
    Ok(0)
}

pub fn cmd_compare(m: &RunManifest) -> Result<i32, Error> {
    let config = m.load()?;
    let configs: Vec<ScenarioConfig> =
        [Protocol::Proposed, Protocol::Leach].into_iter().map(|p| config.clone().with_protocol(p)).collect();
    let outs = run_parallel(&configs, m.jobs, |c| run_scenario(c).map_err(MetricsError::from))?;
    let mut text = String::new();
    for out in &outs {
        let series = write_series(m, out)?;
        text += &summarize(&series, &out.config, out.violations.len()).to_lines();
    }
    write_text(&m.out.join(format!("{}_compare.txt", m.label())), &text)?;
    print!("{text}");
    Ok(0)
}

pub fn cmd_sweep(m: &RunManifest) -> Result<i32, Error> {
    let config = m.load()?;
    let s = &config.sweep;
    for &protocol in &s.protocols {
        let result = sweep(&config, protocol, &s.knob, &s.values, &s.seeds, m.jobs)?;
        let stem = format!("{}_{}_sweep", m.label(), protocol);
        result.write_csv(create(&m.out.join(format!("{stem}.csv")))?)?;
        result.write_raw_csv(create(&m.out.join(format!("{stem}_raw.csv")))?)?;
    }
    Ok(0)
}

pub fn cmd_validate(m: &RunManifest) -> Result<i32, Error> {
    let config = m.load()?;
    let out = run_scenario(&config)?;
    let series = write_series(m, &out)?;
    let mut text = format!("rounds={}\nviolations={}\n", out.reports.len(), out.violations.len());
    for v in &out.violations {
        text += &format!("{v:?}\n");
    }
    let name = format!("{}_{}_{}_validate.txt", series.label, series.protocol, series.seed);
    write_text(&m.out.join(name), &text)?;
    if out.violations.is_empty() {
        println!("ok: {} rounds, no constraint violations", out.reports.len());
        Ok(0)
    } else {
        eprintln!("{} constraint violations", out.violations.len());
        for v in out.violations.iter().take(10) {
            eprintln!("  {v:?}");
        }
        Ok(2)
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(m) => cmd_run(m),
        Command::Compare(m) => cmd_compare(m),
        Command::Sweep(m) => cmd_sweep(m),
        Command::Validate(m) => cmd_validate(m),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
