use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use slidingblocks::estimators::{
    ansjb_diagnostic, dh_diagnostic, estimate_sliding_pseudo, estimate_sliding_quasi, s_condition_diagnostic,
};
use slidingblocks::experiment::{emit_report, run_experiment, ExperimentConfig, ReportFormat, WORKERS_ENV};
use slidingblocks::functionals::parse_functional_list;
use slidingblocks::oracle::{oracle_report, TailProcessModel};
use slidingblocks::{estimate, generate, validate_scheme, EstimatorMode, Functional, NormKind, ProcessKind, ProcessSpec, Result, Series};

#[derive(Parser)]
#[command(name = "slidingblocks", version, about = "Blocks estimators of cluster indices for heavy-tailed time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a cluster index from a CSV series (one point per row); prints JSON.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// e.g. `extremal`, `cluster-size:m=2`, `stop-loss:eta=1.5`.
        #[arg(long)]
        functional: String,
        #[arg(long)]
        r_n: usize,
        /// Number of upper order statistics (disjoint and sliding modes).
        #[arg(long)]
        k: Option<usize>,
        /// Fixed threshold (sliding-pseudo and sliding-quasi modes).
        #[arg(long)]
        c: Option<f64>,
        /// Known tail probability `P(|X_0| > c)` (sliding-pseudo mode).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value = "sliding")]
        mode: EstimatorMode,
        #[arg(long, default_value = "euclidean")]
        norm: NormKind,
    },
    /// Condition diagnostics as CSV tables.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        condition: Condition,
        #[arg(long)]
        r_n: usize,
        /// Threshold `c`.
        #[arg(long)]
        c: f64,
        /// Lags (dh, s) as a comma list; defaults to 1, r_n/10, r_n/2, r_n.
        #[arg(long, value_delimiter = ',')]
        lags: Vec<usize>,
        /// `x,y` for dh or `s,t` for s.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.25, 0.5, 1.0])]
        epsilons: Vec<f64>,
        #[arg(long, default_value = "euclidean")]
        norm: NormKind,
    },
    /// Tail-process oracle values for a model such as `ar1:rho=0.5,alpha=1`; prints JSON.
    Oracle {
        #[arg(long)]
        model: ProcessKind,
        #[arg(long, default_value = "exc,extremal,cluster-size:m=1,cluster-size:m=2")]
        functionals: String,
        #[arg(long, default_value_t = 5)]
        m_max: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Simulate a process and print it as CSV.
    Simulate {
        #[arg(long)]
        process: ProcessKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment from a flat key = value config file.
    Experiment {
        config: PathBuf,
        /// Overrides `out` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<ReportFormat>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Condition {
    Dh,
    S,
    Ansjb,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_csv<T: Serialize>(rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate {
            input,
            functional,
            r_n,
            k,
            c,
            p,
            mode,
            norm,
        } => {
            let series = Series::from_csv_path(&input, norm)?;
            let f: Functional = functional.parse()?;
            let missing = |what: &str| slidingblocks::Error::Parameter(format!("mode `{mode}` needs --{what}"));
            let result = match mode {
                EstimatorMode::Disjoint | EstimatorMode::Sliding => {
                    let (scheme, warnings) = validate_scheme(series.len(), r_n, k.ok_or_else(|| missing("k"))?)?;
                    for w in warnings {
                        warn!("{w}");
                    }
                    estimate(&series, &f, &scheme, mode)?
                }
                EstimatorMode::SlidingPseudo => estimate_sliding_pseudo(
                    &series,
                    &f,
                    r_n,
                    c.ok_or_else(|| missing("c"))?,
                    p.ok_or_else(|| missing("p"))?,
                )?,
                EstimatorMode::SlidingQuasi => estimate_sliding_quasi(&series, &f, r_n, c.ok_or_else(|| missing("c"))?)?,
            };
            if let Some(k) = result.k {
                if result.exceedance_count_observed < k {
                    warn!("ties at the threshold: {} exceedances for k = {k}", result.exceedance_count_observed);
                }
            }
            print_json(&result)
        }
        Command::Diagnose {
            input,
            condition,
            r_n,
            c,
            lags,
            levels,
            eta,
            epsilons,
            norm,
        } => {
            let series = Series::from_csv_path(&input, norm)?;
            let lags = if lags.is_empty() {
                let mut l = vec![1, (r_n / 10).max(1), (r_n / 2).max(1), r_n.max(1)];
                l.dedup();
                l
            } else {
                lags
            };
            if levels.len() != 2 {
                return Err(slidingblocks::Error::Parameter("--levels takes two values".into()));
            }
            match condition {
                Condition::Dh => write_csv(&dh_diagnostic(&series, c, levels[0], levels[1], &lags, r_n)?),
                Condition::S => write_csv(&s_condition_diagnostic(&series, c, levels[0], levels[1], &lags, r_n)?),
                Condition::Ansjb => write_csv(&ansjb_diagnostic(&series, c, eta, &epsilons, r_n)?),
            }
        }
        Command::Oracle {
            model,
            functionals,
            m_max,
            samples,
            seed,
        } => {
            let model = TailProcessModel::new(model)?;
            let functionals = parse_functional_list(&functionals)?;
            print_json(&oracle_report(&model, &functionals, m_max, samples, seed)?)
        }
        Command::Simulate {
            process,
            n,
            seed,
            burn_in,
            out,
        } => {
            let mut spec = ProcessSpec::new(process, n, seed);
            if let Some(b) = burn_in {
                spec.burn_in = b;
            }
            let series = generate(&spec)?;
            match out {
                Some(path) => series.write_csv(std::fs::File::create(path)?),
                None => series.write_csv(io::stdout().lock()),
            }
        }
        Command::Experiment { config, out, format } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(o) = out {
                cfg.out = Some(o);
            }
            if let Ok(w) = std::env::var(WORKERS_ENV) {
                let w: usize = w
                    .parse()
                    .map_err(|_| slidingblocks::Error::Parse(format!("{WORKERS_ENV} must be a positive integer, got `{w}`")))?;
                cfg.workers = Some(w);
            }
            let (_, warnings) = validate_scheme(cfg.n, cfg.r_n, cfg.k)?;
            for w in warnings {
                warn!("{w}");
            }
            let report = run_experiment(&cfg)?;
            if report.degenerate > 0 {
                warn!("{} degenerate replications excluded", report.degenerate);
            }
            match cfg.out {
                Some(path) => {
                    let fmt = format.unwrap_or_else(|| ReportFormat::from_path(&path));
                    emit_report(&report, fmt, &path)?;
                    info!("report written to {}", path.display());
                    Ok(())
                }
                None => {
                    let fmt = format.unwrap_or(ReportFormat::Json);
                    let text = slidingblocks::experiment::render_report(&report, fmt)?;
                    io::stdout().lock().write_all(text.as_bytes())?;
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
