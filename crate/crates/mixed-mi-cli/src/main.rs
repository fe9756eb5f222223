//! Command-line front end: oracle ground truth, Monte Carlo simulation,
//! one-shot estimation from a data file, and comparison reports.
//!
//! Exit codes: 0 success, 2 configuration error, 3 degenerate-class failure,
//! 4 quadrature non-convergence, 1 anything else.

use clap::{Parser, Subcommand};
use mixed_mi::config::OutputKind;
use mixed_mi::harness::{
    render_estimates_csv, render_hist_csv, render_qq_csv, sturges_bins, ExperimentSummary,
};
use mixed_mi::oracle::OracleError;
use mixed_mi::{
    hat_estimate, mutual_information, run_experiment, Bandwidth, ExperimentConfig, HarnessError,
    KernelSpec, QuadratureSpec, Sample,
};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mixed-mi",
    version,
    about = "Mutual information between a discrete label and a continuous variable: \
             quadrature ground truth and leave-one-out kernel estimates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute ground-truth MI, entropies and CLT variance for a model.
    Oracle {
        /// Experiment config (JSON); only the model section is used.
        #[arg(long)]
        config: PathBuf,
        /// Emit raw JSON instead of the human-readable block.
        #[arg(long)]
        json: bool,
    },
    /// Run the configured Monte Carlo experiment and write its artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// One estimate from a CSV data file with rows `label,y1[,y2]`.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        /// Kernel, e.g. `t3` for a Student-t kernel with 3 degrees of freedom.
        #[arg(long, default_value = "t3")]
        kernel: String,
        /// Bandwidth rule: a number (`0.115`) or a power law (`n^-0.2`,
        /// `0.0417*n^-0.2`).
        #[arg(long)]
        bandwidth: String,
    },
    /// Collect summary.json files under a directory into a comparison table.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

/// summary.json written by `simulate`: run metadata plus the summary fields.
#[derive(Serialize, Deserialize)]
struct SummaryFile {
    label: String,
    n: usize,
    m_reps: usize,
    bandwidth: f64,
    seed: u64,
    #[serde(flatten)]
    summary: ExperimentSummary,
}

enum CliError {
    Config(String),
    DegenerateClass(String),
    Quadrature(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::DegenerateClass(_) => 3,
            CliError::Quadrature(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::DegenerateClass(m)
            | CliError::Quadrature(m)
            | CliError::Other(m) => m,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => CliError::Config(c.to_string()),
            HarnessError::Replicate { .. } => CliError::DegenerateClass(e.to_string()),
            HarnessError::Oracle(o) => CliError::from(o),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::NonConvergence { .. } => CliError::Quadrature(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Oracle { config, json } => cmd_oracle(&config, json),
        Cmd::Simulate { config, out } => cmd_simulate(&config, &out),
        Cmd::Estimate {
            data,
            kernel,
            bandwidth,
        } => cmd_estimate(&data, &kernel, &bandwidth),
        Cmd::Report { out } => cmd_report(&out),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))
}

fn cmd_oracle(config: &Path, json: bool) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let model = cfg
        .build_model()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let result = mutual_information(&model, &QuadratureSpec::default())?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&result).expect("serializable")
        );
    } else {
        let label = cfg.label.as_deref().unwrap_or("(unlabelled)");
        println!("case: {label}");
        println!(
            "mi            = {:.9}  (quad err {:.2e})",
            result.mi, result.quad_error.mi
        );
        println!("h_y           = {:.9}", result.h_y);
        for (i, h) in result.h_cond.iter().enumerate() {
            println!("h_cond[{i}]     = {h:.9}");
        }
        println!("h_x           = {:.9}", result.h_x);
        println!("h_z           = {:.9}", result.h_z);
        println!(
            "var_clt       = {:.9}  (quad err {:.2e})",
            result.var_clt, result.quad_error.var_clt
        );
        println!(
            "sd at n={}: {:.9}",
            cfg.n,
            (result.var_clt.max(0.0) / cfg.n as f64).sqrt()
        );
    }
    Ok(())
}

fn cmd_simulate(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let (results, summary) = run_experiment(&cfg)?;
    fs::create_dir_all(out)?;

    let estimates: Vec<f64> = results.iter().map(|r| r.mi_hat).collect();
    for kind in &cfg.outputs {
        match kind {
            OutputKind::EstimatesCsv => {
                fs::write(out.join("estimates.csv"), render_estimates_csv(&results))?;
            }
            OutputKind::SummaryJson => {
                let file = SummaryFile {
                    label: cfg.label.clone().unwrap_or_else(|| "(unlabelled)".into()),
                    n: cfg.n,
                    m_reps: cfg.m_reps,
                    bandwidth: cfg.bandwidth.resolve(cfg.n),
                    seed: cfg.seed,
                    summary: summary.clone(),
                };
                let mut text = serde_json::to_string_pretty(&file).expect("serializable");
                text.push('\n');
                fs::write(out.join("summary.json"), text)?;
            }
            OutputKind::HistCsv => {
                if estimates.len() >= 2 {
                    let bins = sturges_bins(estimates.len());
                    fs::write(out.join("hist.csv"), render_hist_csv(&estimates, bins))?;
                }
            }
            OutputKind::QqCsv => {
                if estimates.len() >= 2 {
                    fs::write(out.join("qq.csv"), render_qq_csv(&estimates))?;
                }
            }
        }
    }
    println!(
        "{}: mean {:.7}, sample sd {:.7}, oracle mi {:.7}, asymptotic sd {:.7}",
        cfg.label.as_deref().unwrap_or("experiment"),
        summary.mean_estimate,
        summary.sample_sd,
        summary.oracle_mi,
        summary.asymptotic_sd
    );
    Ok(())
}

/// Parse `t3`-style kernel names.
fn parse_kernel(text: &str, dim: usize) -> Result<KernelSpec, CliError> {
    let rest = text
        .strip_prefix('t')
        .ok_or_else(|| CliError::Config(format!("unknown kernel {text:?}; expected t<nu>")))?;
    let nu: f64 = rest
        .parse()
        .map_err(|_| CliError::Config(format!("unknown kernel {text:?}; expected t<nu>")))?;
    if nu <= 0.0 {
        return Err(CliError::Config(
            "kernel degrees of freedom must be positive".into(),
        ));
    }
    Ok(KernelSpec::student_t(nu, dim))
}

/// Parse a bandwidth rule: `0.115`, `n^-0.2`, or `0.0417*n^-0.2`.
fn parse_bandwidth(text: &str) -> Result<Bandwidth, CliError> {
    let t = text.trim();
    if let Ok(h) = t.parse::<f64>() {
        return Bandwidth::explicit(h).map_err(|e| CliError::Config(e.to_string()));
    }
    let lower = t.to_ascii_lowercase();
    let (scale_part, exp_part) = match lower.split_once("n^") {
        Some((s, e)) => (s.trim().trim_end_matches('*').trim(), e.trim()),
        None => {
            return Err(CliError::Config(format!(
                "cannot parse bandwidth {text:?}; expected a number or [scale*]n^exponent"
            )))
        }
    };
    let scale: f64 = if scale_part.is_empty() {
        1.0
    } else {
        scale_part
            .parse()
            .map_err(|_| CliError::Config(format!("bad bandwidth scale in {text:?}")))?
    };
    let exponent: f64 = exp_part
        .parse()
        .map_err(|_| CliError::Config(format!("bad bandwidth exponent in {text:?}")))?;
    Bandwidth::power(scale, exponent).map_err(|e| CliError::Config(e.to_string()))
}

/// Read `label,y1[,y2]` rows into a sample.
fn read_data_csv(path: &Path) -> Result<Sample, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut labels = Vec::new();
    let mut points = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields[0].parse::<usize>().is_err() {
            continue; // header row
        }
        let bad =
            |what: &str| CliError::Config(format!("{}:{}: {what}", path.display(), lineno + 1));
        if fields.len() < 2 {
            return Err(bad("expected label,y1[,y2]"));
        }
        let d = fields.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(prev) if prev != d => return Err(bad("inconsistent number of coordinates")),
            _ => {}
        }
        labels.push(fields[0].parse::<usize>().map_err(|_| bad("bad label"))?);
        for f in &fields[1..] {
            points.push(f.parse::<f64>().map_err(|_| bad("bad coordinate"))?);
        }
    }
    let dim = dim.ok_or_else(|| CliError::Config(format!("{}: no data rows", path.display())))?;
    Sample::new(dim, labels, points).map_err(|e| CliError::Config(e.to_string()))
}

fn cmd_estimate(data: &Path, kernel: &str, bandwidth: &str) -> Result<(), CliError> {
    let sample = read_data_csv(data)?;
    let kernel = parse_kernel(kernel, sample.dim())?;
    let bandwidth = parse_bandwidth(bandwidth)?;
    let result = hat_estimate(&sample, &kernel, &bandwidth)
        .map_err(|e| CliError::DegenerateClass(e.to_string()))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&result).expect("serializable")
    );
    Ok(())
}

fn cmd_report(out: &Path) -> Result<(), CliError> {
    let mut summaries: Vec<SummaryFile> = Vec::new();
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let path = dir.join("summary.json");
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let s: SummaryFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        summaries.push(s);
    }
    if summaries.is_empty() {
        return Err(CliError::Other(format!(
            "no summary.json files found under {}",
            out.display()
        )));
    }
    print!("{}", render_report(&summaries));
    Ok(())
}

fn render_report(summaries: &[SummaryFile]) -> String {
    let mut out = String::new();
    let label_width = summaries
        .iter()
        .map(|s| s.label.len())
        .max()
        .unwrap_or(8)
        .max("mixture".len());
    let _ = writeln!(
        out,
        "{:<label_width$}  {:>12} {:>14} {:>14} {:>12} {:>8} {:>8}",
        "mixture", "oracle MI", "mean estimate", "asymptotic sd", "sample sd", "n", "reps"
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{:<label_width$}  {:>12.7} {:>14.7} {:>14.7} {:>12.7} {:>8} {:>8}",
            s.label,
            s.summary.oracle_mi,
            s.summary.mean_estimate,
            s.summary.asymptotic_sd,
            s.summary.sample_sd,
            s.n,
            s.m_reps
        );
    }
    for s in summaries {
        for f in &s.summary.condition_flags {
            let _ = writeln!(out, "note [{}]: {f}", s.label);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_parsing() {
        assert_eq!(parse_bandwidth("0.25").ok(), Bandwidth::explicit(0.25).ok());
        assert_eq!(
            parse_bandwidth("n^-0.2").ok(),
            Bandwidth::power(1.0, -0.2).ok()
        );
        assert_eq!(
            parse_bandwidth("0.5*n^-0.2").ok(),
            Bandwidth::power(0.5, -0.2).ok()
        );
        assert_eq!(
            parse_bandwidth("0.5 * N^-0.125").ok(),
            Bandwidth::power(0.5, -0.125).ok()
        );
        assert!(parse_bandwidth("junk").is_err());
        assert!(parse_bandwidth("n^0.2").is_err());
        assert!(parse_bandwidth("-1").is_err());
    }

    #[test]
    fn kernel_parsing() {
        assert_eq!(
            parse_kernel("t3", 1).ok(),
            Some(KernelSpec::student_t(3.0, 1))
        );
        assert_eq!(
            parse_kernel("t2.5", 2).ok(),
            Some(KernelSpec::student_t(2.5, 2))
        );
        assert!(parse_kernel("gaussian", 1).is_err());
        assert!(parse_kernel("t-3", 1).is_err());
    }
}
