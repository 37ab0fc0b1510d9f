use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use phasebath::cli::{format_state_list, list_states, parse_pairs, run, RunConfig};
use phasebath::Error;

/// Evolve a bosonic mode in a thermal bath through its P function.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a state and write grids, observables and oracle comparisons.
    Run(RunArgs),
    /// Print the state catalog.
    ListStates {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Key-value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// State family (see `list-states`).
    #[arg(long)]
    state: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mbar: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta_re: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta_im: Option<String>,
    /// Squeezing parameter s = e^{2r}.
    #[arg(long)]
    squeeze: Option<String>,
    #[arg(long)]
    nbar_eff: Option<String>,
    /// Decay rate.
    #[arg(long)]
    gamma: Option<String>,
    /// Bath occupation.
    #[arg(long)]
    nbar: Option<String>,
    /// `t1,t2,...` or `start:stop:count`.
    #[arg(long)]
    times: Option<String>,
    /// `min:max:n` for both axes or `xmin:xmax:nx,ymin:ymax:ny`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Comma-separated artifacts: p-grid, q-grid, w-grid, moments, mandel-q,
    /// variances, oracle-compare.
    #[arg(long)]
    outputs: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    oracle_cutoff: Option<String>,
    #[arg(long)]
    oracle_step: Option<String>,
    /// Add the oracle comparison; the exit status is 1 if it fails.
    #[arg(long)]
    compare: bool,
    #[arg(long)]
    compare_tolerance: Option<String>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut map = match &self.config {
            Some(path) => parse_pairs(&std::fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("state", self.state),
            ("mbar", self.mbar),
            ("beta_re", self.beta_re),
            ("beta_im", self.beta_im),
            ("squeeze", self.squeeze),
            ("nbar_eff", self.nbar_eff),
            ("gamma", self.gamma),
            ("nbar", self.nbar),
            ("times", self.times),
            ("grid", self.grid),
            ("outputs", self.outputs),
            ("out", self.out),
            ("format", self.format),
            ("oracle_cutoff", self.oracle_cutoff),
            ("oracle_step", self.oracle_step),
            ("compare_tolerance", self.compare_tolerance),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        }
        if self.compare {
            let outs = map.entry("outputs".to_string()).or_insert_with(|| "p-grid, moments".to_string());
            outs.push_str(", oracle-compare");
        }
        RunConfig::from_pairs(map)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListStates { json } => {
            let list = list_states();
            if json {
                match serde_json::to_string_pretty(&list) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(3);
                    }
                }
            } else {
                print!("{}", format_state_list(&list));
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => {
            let config = match args.into_config() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match run(&config) {
                Ok(report) => {
                    let m = &report.manifest;
                    println!("wrote {} files to {}", m.files.len(), config.output_dir.display());
                    for s in &m.skipped {
                        println!("skipped {} at t = {}: {}", s.artifact.name(), s.time, s.reason);
                    }
                    if let Some(c) = &m.compare {
                        for d in &c.deviations {
                            let flag = if d.max_abs_deviation <= c.tolerance { "ok" } else { "FAIL" };
                            println!("{:<18} {:.3e}  {flag}", d.observable, d.max_abs_deviation);
                        }
                    }
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("oracle comparison exceeded tolerance");
                        ExitCode::from(1)
                    }
                }
                Err(e @ (Error::Config { .. } | Error::InvalidParameter { .. })) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(3)
                }
            }
        }
    }
}
