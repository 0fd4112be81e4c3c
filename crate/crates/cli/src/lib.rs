//! Command-line front end for `gaussbook`: source moments, exponent curves,
//! second-order rates, ensemble simulations and an end-to-end invariant check.
//!
//! Every subcommand is a plain function returning CSV text so it can be driven
//! from tests without spawning a process.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gaussbook::asymptotics::{exponent_curve, md_constant, rd_function, second_order_log_m};
use gaussbook::ensemble::{pe_conditional, pe_direct, pe_quadrature, EnsembleEstimate, SimPlan};
use gaussbook::sources::source_from_json;
use gaussbook::{CodebookKind, DistortionSetup, Error, SourceModel};

mod output;
pub mod validate;

pub use output::{fmt_num, Table};

#[derive(Debug, Clone, Parser)]
#[command(name = "gaussbook", version, about = "Refined asymptotics of lossy compression with Gaussian codebooks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Source configuration (JSON).
    #[arg(long, global = true)]
    pub source: Option<PathBuf>,
    /// Distortion level D, 0 < D < E[X²].
    #[arg(long, global = true)]
    pub distortion: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report rates and exponents in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Moments, dispersion and moderate-deviations constant of the source.
    Moments,
    /// Excess-distortion exponents of both codebooks over a rate grid.
    Exponents(ExponentsArgs),
    /// Second-order approximation of ln M over a blocklength grid.
    SecondOrder(SecondOrderArgs),
    /// Estimate the ensemble excess-distortion probability.
    Simulate(SimulateArgs),
    /// Run the invariant suites on the shipped sources.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExponentsArgs {
    /// Smallest rate (nats); defaults to the rate-distortion function.
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Largest rate (nats); defaults to R(D) + 1.
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub r_steps: usize,
    /// Also write a gnuplot script that plots the CSV.
    #[arg(long)]
    pub emit_plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SecondOrderArgs {
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Comma-separated blocklengths.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800,1600")]
    pub n_grid: Vec<usize>,
    /// Multiplier of the ln n term.
    #[arg(long, default_value_t = 0.0)]
    pub third_order_coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Conditional,
    Quadrature,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Spherical,
    Iid,
}

impl From<KindArg> for CodebookKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Spherical => CodebookKind::Spherical,
            KindArg::Iid => CodebookKind::IidGaussian,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Conditional)]
    pub method: MethodArg,
    #[arg(long)]
    pub n: usize,
    /// ln M in nats.
    #[arg(long, conflicts_with = "rate")]
    pub log_m: Option<f64>,
    /// Rate in nats per symbol; ln M = n · rate.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, value_enum, default_value_t = KindArg::Spherical)]
    pub kind: KindArg,
    #[arg(long, default_value_t = gaussbook::ensemble::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Codebook size for --method direct (defaults to round(e^{log_m})).
    #[arg(long)]
    pub m_count: Option<usize>,
    /// Trials for --method direct.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Independent random streams the work is split across.
    #[arg(long, default_value_t = gaussbook::ensemble::DEFAULT_STREAMS)]
    pub streams: usize,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ValidateArgs {
    /// Reduced grids.
    #[arg(long)]
    pub quick: bool,
    /// Test hook: halve the upper bound on the spherical shell probability.
    #[arg(long, hide = true)]
    pub corrupt_gupper: bool,
}

/// Result of a subcommand: CSV text plus an optional side file.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub csv: String,
    pub extra: Option<(PathBuf, String)>,
    /// Names of invariants that did not hold; empty for non-validating commands.
    pub failed: Vec<&'static str>,
}

impl Report {
    fn ok(csv: String) -> Self {
        Report { csv, extra: None, failed: Vec::new() }
    }
}

pub fn load_source(path: &Path) -> Result<SourceModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading source file {}", path.display()))?;
    source_from_json(&text).with_context(|| format!("in source file {}", path.display()))
}

fn source(common: &Common) -> Result<SourceModel> {
    let path = common.source.as_ref().ok_or_else(|| anyhow!("--source <path> is required"))?;
    load_source(path)
}

fn setup_for(common: &Common, model: &SourceModel, what: &str) -> Result<DistortionSetup> {
    let d = common
        .distortion
        .ok_or_else(|| anyhow!("--distortion is required for {what}"))?;
    let s2 = model.sigma2()?;
    if !(d > 0.0 && d < s2) {
        bail!("--distortion must satisfy 0 < D < E[X^2] = {s2}, got {d}");
    }
    Ok(DistortionSetup::new(s2, d)?)
}

fn unit(common: &Common) -> (f64, &'static str) {
    if common.bits {
        (std::f64::consts::LN_2, "bits")
    } else {
        (1.0, "nats")
    }
}

pub fn cmd_moments(common: &Common) -> Result<Report> {
    let model = source(common)?;
    let m = model.moments()?;
    let nu = match md_constant(m.sigma2, m.zeta) {
        Ok(v) => v,
        Err(Error::DegenerateSource(_)) => f64::INFINITY,
        Err(e) => return Err(e.into()),
    };
    let mut t = Table::new(&["sigma2", "zeta", "var_x2", "dispersion", "md_constant"]);
    t.row_nums(&[m.sigma2, m.zeta, m.var_x2, m.dispersion, nu]);
    Ok(Report::ok(t.finish()?))
}

pub fn cmd_exponents(common: &Common, args: &ExponentsArgs) -> Result<Report> {
    let model = source(common)?;
    let setup = setup_for(common, &model, "exponents")?;
    let rd = rd_function(setup.sigma2(), setup.distortion())?;
    let r_min = args.r_min.unwrap_or(rd);
    let r_max = args.r_max.unwrap_or(rd + 1.0);
    if !(r_min >= 0.0 && r_max >= r_min) {
        bail!("need 0 <= --r-min <= --r-max, got {r_min} and {r_max}");
    }
    if args.r_steps == 0 {
        bail!("--r-steps must be >= 1");
    }
    let rates: Vec<f64> = if args.r_steps == 1 {
        vec![r_min]
    } else {
        (0..args.r_steps)
            .map(|k| r_min + (r_max - r_min) * k as f64 / (args.r_steps - 1) as f64)
            .collect()
    };
    let sp = exponent_curve(&model, &setup, &rates, CodebookKind::Spherical)?;
    let iid = exponent_curve(&model, &setup, &rates, CodebookKind::IidGaussian)?;
    let (scale, u) = unit(common);
    let cols = [format!("R_{u}"), "alpha_sp".into(), format!("E_sp_{u}"), "alpha_iid".into(), format!("E_iid_{u}")];
    let mut t = Table::new(&cols.each_ref().map(String::as_str));
    for (a, b) in sp.iter().zip(&iid) {
        t.row_nums(&[
            a.rate / scale,
            a.alpha.unwrap_or(f64::NAN),
            a.exponent.to_f64() / scale,
            b.alpha.unwrap_or(f64::NAN),
            b.exponent.to_f64() / scale,
        ]);
    }
    let extra = match &args.emit_plot {
        None => None,
        Some(path) => {
            let csv = common
                .out
                .as_ref()
                .ok_or_else(|| anyhow!("--emit-plot needs --out so the script can reference the CSV"))?;
            Some((path.clone(), gnuplot_script(csv, u)))
        }
    };
    Ok(Report { csv: t.finish()?, extra, failed: Vec::new() })
}

fn gnuplot_script(csv: &Path, unit: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set datafile missing 'inf'\n\
         set key top left\n\
         set xlabel 'R ({unit}/symbol)'\n\
         set ylabel 'excess-distortion exponent ({unit}/symbol)'\n\
         set grid\n\
         plot '{csv}' using 1:3 skip 1 with lines lw 2 title 'spherical', \\\n     \
         '{csv}' using 1:5 skip 1 with lines lw 2 dt 2 title 'i.i.d. Gaussian'\n",
        csv = csv.display()
    )
}

pub fn cmd_second_order(common: &Common, args: &SecondOrderArgs) -> Result<Report> {
    let model = source(common)?;
    let setup = setup_for(common, &model, "second-order")?;
    let m = model.moments()?;
    let (scale, u) = unit(common);
    let log_col = format!("log_m_{u}");
    let rate_col = format!("rate_{u}_per_symbol");
    let mut t = Table::new(&["n", &log_col, &rate_col]);
    for &n in &args.n_grid {
        let p = second_order_log_m(
            n,
            args.epsilon,
            m.sigma2,
            m.zeta,
            setup.distortion(),
            args.third_order_coeff,
        )?;
        t.row(vec![n.to_string(), fmt_num(p.log_m / scale), fmt_num(p.rate() / scale)]);
    }
    Ok(Report::ok(t.finish()?))
}

pub fn cmd_simulate(common: &Common, args: &SimulateArgs) -> Result<Report> {
    let model = source(common)?;
    let setup = setup_for(common, &model, "simulate")?;
    let kind = CodebookKind::from(args.kind);
    let log_m = match (args.log_m, args.rate, args.m_count) {
        (Some(l), None, None) => l,
        (None, Some(r), None) => r * args.n as f64,
        (None, None, Some(m)) => (m as f64).ln(),
        (None, None, None) => bail!("one of --log-m, --rate or --m-count is required"),
        _ => bail!("--log-m, --rate and --m-count are mutually exclusive"),
    };
    let plan = SimPlan::new(args.n, log_m, kind)
        .with_samples(args.samples)
        .with_seed(common.seed)
        .with_streams(args.streams);
    let est = match args.method {
        MethodArg::Conditional => pe_conditional(&model, &setup, &plan)?,
        MethodArg::Quadrature => pe_quadrature(&model, &setup, &plan).map_err(|e| match e {
            Error::Capability(_) => anyhow!("analytic f_Z unavailable; use --method conditional"),
            other => other.into(),
        })?,
        MethodArg::Direct => {
            let m_count = match args.m_count {
                Some(m) => m,
                None => {
                    let m = log_m.exp().round();
                    if !(m < 1e18) {
                        bail!("ln M = {log_m} is far too large for --method direct; pass a small --m-count");
                    }
                    m as usize
                }
            };
            pe_direct(&model, &setup, args.n, m_count, args.trials, common.seed, kind)?
        }
    };
    Ok(Report::ok(estimate_table(&[est], common)?))
}

pub fn estimate_table(rows: &[EnsembleEstimate], common: &Common) -> Result<String> {
    let (scale, u) = unit(common);
    let log_col = format!("log_m_{u}");
    let mut t =
        Table::new(&["method", "kind", "n", &log_col, "value", "ln_value", "std_error", "seed"]);
    for e in rows {
        t.row(vec![
            e.method.name().to_string(),
            e.kind.name().to_string(),
            e.n.to_string(),
            fmt_num(e.log_m / scale),
            fmt_num(e.value.value()),
            fmt_num(e.ln_value),
            fmt_num(e.std_error),
            e.seed.to_string(),
        ]);
    }
    t.finish()
}

pub fn cmd_validate(common: &Common, args: &ValidateArgs) -> Result<Report> {
    let outcomes = validate::run_all(args, common.seed)?;
    let failed = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    let mut t = Table::new(&["invariant", "grid", "worst_slack", "status"]);
    for o in &outcomes {
        t.row(vec![
            o.name.to_string(),
            o.grid.clone(),
            fmt_num(o.worst_slack),
            if o.passed { "pass" } else { "fail" }.to_string(),
        ]);
    }
    Ok(Report { csv: t.finish()?, extra: None, failed })
}

pub fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Moments => cmd_moments(&cli.common),
        Command::Exponents(a) => cmd_exponents(&cli.common, a),
        Command::SecondOrder(a) => cmd_second_order(&cli.common, a),
        Command::Simulate(a) => cmd_simulate(&cli.common, a),
        Command::Validate(a) => cmd_validate(&cli.common, a),
    }
}
