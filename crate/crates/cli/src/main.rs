//! `rfresp`: synthesize traces, estimate respiratory rate, derive ground
//! truth, evaluate and compare.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 missing or unreadable file,
//! 4 invalid configuration, 5 malformed input data, 6 inputs that do not fit
//! together (wrong technology, too few samples, ...).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rfresp::config::{parse_motion, RunConfig};
use rfresp::estimate::{ground_truth_rr, run_pipeline, RateMethod, RateSeries};
use rfresp::evaluate::{evaluate_pairs, mann_whitney_u, slice_by_intervals, Alternative};
use rfresp::io;
use rfresp::select::SelectMode;
use rfresp::synth::synth_trace;
use rfresp::trace::{align_nearest, Technology, TechnologyProfile};
use rfresp::Error;

#[derive(Parser)]
#[command(name = "rfresp", version, about = "Respiratory-rate estimation from RF channel traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Psd,
    Ibi,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlternativeArg {
    TwoSided,
    Less,
    Greater,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace with ground truth from a scenario file.
    Synth {
        /// Scenario TOML file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (trace/, gt.csv, motion.csv, poly/).
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate the respiratory rate of a trace.
    Estimate {
        /// Trace directory.
        #[arg(long)]
        trace: PathBuf,
        /// Run configuration TOML (overrides of the shipped defaults).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Technology; defaults to the configuration, then the trace manifest.
        #[arg(long)]
        tech: Option<String>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long, value_enum)]
        stream_select: Option<OnOff>,
        /// none, mabd, mvbd, ave, fsd or mavbd.
        #[arg(long)]
        motion: Option<String>,
        /// Output rate-series CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ground-truth rate from a four-channel polysomnograph trace.
    Gt {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score an estimate series against ground truth.
    Eval {
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Only evaluate ticks inside these `[t_start, t_end)` intervals.
        #[arg(long)]
        intervals: Option<PathBuf>,
        /// Output report JSON; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mann-Whitney U test between the errors of two reports.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "two-sided")]
        alternative: AlternativeArg,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::Config(_) => 4,
        Error::Parse { .. } | Error::Schema(_) | Error::Format(_) => 5,
        Error::Usage(_) | Error::Range(_) | Error::Design(_) => 6,
    }
}

fn usage(msg: String) -> Error {
    Error::Usage(msg)
}

fn emit_series(series: &RateSeries, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => io::write_rate_series(series, path),
        None => {
            print!("{}", io::format_rate_series(series)?);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synth { scenario, out, seed } => {
            let mut file = io::read_scenario(&scenario)?;
            if let Some(seed) = seed {
                file.scenario.seed = seed;
            }
            let profile = TechnologyProfile::canonical(file.technology);
            let generated = synth_trace(&profile, &file.scenario)?;
            let paths = io::SynthPaths::under(&out);
            io::write_trace(&generated.trace, &paths.trace)?;
            io::write_rate_series(&generated.ground_truth, &paths.ground_truth)?;
            io::write_intervals(&generated.motion_intervals, &paths.motion)?;
            if file.polysomnograph {
                let mut poly_scenario = file.scenario.clone();
                poly_scenario.seed = poly_scenario.seed.wrapping_add(1);
                poly_scenario.noise_stream_fraction = 0.0;
                poly_scenario.gains = None;
                poly_scenario.phases = None;
                let poly = synth_trace(&TechnologyProfile::canonical(Technology::Poly), &poly_scenario)?;
                io::write_trace(&poly.trace, &paths.polysomnograph)?;
            }
            eprintln!(
                "wrote {} samples of {} to {}",
                generated.trace.len(),
                file.technology,
                out.display()
            );
            Ok(())
        }
        Command::Estimate {
            trace,
            config,
            tech,
            method,
            stream_select,
            motion,
            out,
        } => {
            let run_config = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::shipped(),
            };
            let raw = io::read_trace(&trace)?;
            let tech = match tech {
                Some(t) => Some(t.parse::<Technology>()?),
                None => run_config.pipeline.technology.or(Some(raw.profile().tech)),
            };
            let mut cfg = run_config.pipeline_config(tech)?;
            if let Some(m) = method {
                cfg.method = match m {
                    MethodArg::Psd => RateMethod::Psd,
                    MethodArg::Ibi => RateMethod::Ibi,
                };
            }
            if let Some(s) = stream_select {
                cfg.stream_select = match s {
                    OnOff::On => SelectMode::Enabled,
                    OnOff::Off => SelectMode::Bypassed,
                };
            }
            if let Some(m) = motion {
                let m = parse_motion(&m)?;
                cfg.motion = m.map(|m| run_config.motion_config(cfg.technology, m));
            }
            let series = run_pipeline(&raw, &cfg)?;
            emit_series(&series, out.as_deref())
        }
        Command::Gt { poly, out } => {
            let raw = io::read_trace(&poly)?;
            let series = ground_truth_rr(&raw)?;
            emit_series(&series, out.as_deref())
        }
        Command::Eval {
            estimate,
            gt,
            intervals,
            out,
        } => {
            let est = io::read_rate_series(&estimate)?;
            let truth = io::read_rate_series(&gt)?;
            if truth.present().next().is_none() {
                return Err(usage(format!("{} holds no ground-truth values", gt.display())));
            }
            let mut pairs = align_nearest(&est, &truth);
            if let Some(path) = intervals {
                pairs = slice_by_intervals(&pairs, &io::read_intervals(&path)?);
            }
            let report = evaluate_pairs(&pairs)?;
            match out {
                Some(path) => io::write_report(&report, &path)?,
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?
                ),
            }
            if let Some(median) = report.median_bpm {
                eprintln!(
                    "median {median:.3} bpm, p95 {:.3} bpm, {} samples, {:.1}% removed",
                    report.p95_bpm.unwrap_or(f64::NAN),
                    report.n_samples,
                    100.0 * report.pct_removed
                );
            }
            Ok(())
        }
        Command::Compare { a, b, alternative } => {
            let ra = io::read_report(&a)?;
            let rb = io::read_report(&b)?;
            let alternative = match alternative {
                AlternativeArg::TwoSided => Alternative::TwoSided,
                AlternativeArg::Less => Alternative::Less,
                AlternativeArg::Greater => Alternative::Greater,
            };
            let result = mann_whitney_u(&ra.errors, &rb.errors, alternative)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&result).map_err(|e| Error::Format(e.to_string()))?
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rfresp: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
