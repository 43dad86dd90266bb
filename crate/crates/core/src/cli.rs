//! Command-line surface: intervals, e-values/p-values, confidence
//! sequences, exact type-I errors, and the simulation drivers.
//!
//! Payload goes to stdout as JSON or CSV; diagnostics go to stderr. Exit
//! codes: 0 on success, 1 on domain errors (with the library error name),
//! 2 on flag errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evalues::{
    e_iwr, e_mix_iwr, e_mix_reg, e_reg, e_rws, e_sn, e_to_pvalue, IwrParams, MixParams,
    RegParams, RwsParams, SnSchedule,
};
use crate::intervals::{anchor_lambda, CiMethod, ConfSeqHandle, Interval};
use crate::risk::{type1_iwr, type1_mix_iwr, type1_reg, type1_rws, AlphaSearchConfig};
use crate::sim::{
    anchor_ratio_grid, default_ratio_grids, ratio_to_csv, risk_experiment, risk_to_csv,
    width_experiment, widths_to_csv, Family, Generator, RiskExperimentConfig, WidthCurve,
};
use crate::summary::{parse_samples_path, InputFormat, SampleSummary};

#[derive(Parser)]
#[command(name = "posthoc", version, about = "Post-hoc confidence intervals and e-values")]
struct Cli {
    /// Worker threads for the simulation subcommands (default: rayon's choice)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Confidence interval from data or a summary
    Ci(CiArgs),
    /// E-value at a hypothesized mean
    Evalue(EvalueArgs),
    /// P-value (reciprocal e-value) at a hypothesized mean
    Pvalue(EvalueArgs),
    /// Running confidence sequence over a data stream
    Confseq(ConfseqArgs),
    /// Exact asymptotic type-I error of a method
    Type1(Type1Args),
    /// Width curves of several methods along one stream (CSV)
    SimWidths(SimWidthsArgs),
    /// Empirical post-hoc risk table (CSV)
    SimRisk(SimRiskArgs),
    /// Anchor-ratio grid (CSV)
    SimRatio(SimRatioArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodName {
    Wald,
    Iwr,
    MixIwr,
    Rws,
    Reg,
    MixReg,
    Sn,
}

#[derive(Args)]
struct DataInput {
    /// Input file: newline-delimited floats, or CSV with --csv-column
    #[arg(long)]
    data: Option<PathBuf>,
    /// Summary statistics as n,mean,ssd (bypasses --data)
    #[arg(long, value_name = "N,MEAN,SSD", conflicts_with = "data")]
    summary: Option<String>,
    /// Treat the input as CSV and take this 0-based column
    #[arg(long)]
    csv_column: Option<usize>,
    /// Skip the first row of a CSV file
    #[arg(long, default_value_t = false)]
    has_header: bool,
}

impl DataInput {
    fn format(&self) -> InputFormat {
        match self.csv_column {
            Some(column) => InputFormat::Csv { column, has_header: self.has_header },
            None => InputFormat::Plain,
        }
    }

    fn load(&self) -> Result<(SampleSummary, Option<Vec<f64>>)> {
        if let Some(spec) = &self.summary {
            let parts: Vec<&str> = spec.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("--summary expects n,mean,ssd, got {spec:?}"),
                });
            }
            let n: u64 = parts[0].trim().parse().map_err(|_| Error::Parse {
                line: 0,
                message: format!("bad n in --summary: {:?}", parts[0]),
            })?;
            let mean: f64 = parts[1].trim().parse().map_err(|_| Error::Parse {
                line: 0,
                message: format!("bad mean in --summary: {:?}", parts[1]),
            })?;
            let ssd: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
                line: 0,
                message: format!("bad ssd in --summary: {:?}", parts[2]),
            })?;
            Ok((SampleSummary::from_parts(n, mean, ssd)?, None))
        } else if let Some(path) = &self.data {
            let xs = parse_samples_path(path, self.format())?;
            Ok((SampleSummary::summarize(xs.iter().copied()), Some(xs)))
        } else {
            Err(Error::Parse { line: 0, message: "one of --data or --summary is required".into() })
        }
    }
}

#[derive(Args)]
struct MethodParams {
    /// Lambda for iwr/reg (overrides --anchor)
    #[arg(long)]
    lambda: Option<f64>,
    /// Anchor level alpha_0; sets lambda = sqrt(2 log(2/alpha_0)) [default 0.05]
    #[arg(long)]
    anchor: Option<f64>,
    /// Truncation radius of the mixing Gaussian
    #[arg(long, default_value_t = 20.0)]
    r: f64,
    /// Standard deviation of the mixing Gaussian
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Mixture variance of the supermartingale method
    #[arg(long, default_value_t = 2.0)]
    rho: f64,
    /// Moment surplus delta
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Truncation constant C
    #[arg(long, default_value_t = 100.0)]
    c: f64,
    /// Regularization strength
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    /// Self-normalized schedule scale (lambda_i = sn_c / i^sn_p)
    #[arg(long, default_value_t = 1.0)]
    sn_c: f64,
    /// Self-normalized schedule exponent
    #[arg(long, default_value_t = 1.0)]
    sn_p: f64,
    /// First betting index of the self-normalized schedule
    #[arg(long, default_value_t = 1)]
    sn_start: u64,
}

/// Resolved lambda plus the anchor metadata recorded in the output.
struct ResolvedLambda {
    lambda: f64,
    anchor: Option<f64>,
}

impl MethodParams {
    fn resolve_lambda(&self) -> Result<ResolvedLambda> {
        if let Some(lambda) = self.lambda {
            return Ok(ResolvedLambda { lambda, anchor: None });
        }
        let alpha0 = self.anchor.unwrap_or(0.05);
        Ok(ResolvedLambda { lambda: anchor_lambda(alpha0)?, anchor: Some(alpha0) })
    }

    fn mix(&self) -> MixParams {
        MixParams { r: self.r, kappa: self.kappa }
    }

    fn rws(&self) -> RwsParams {
        RwsParams { rho: self.rho, delta: self.delta, c: self.c }
    }
}

#[derive(Args)]
struct CiArgs {
    #[arg(long, value_enum)]
    method: MethodName,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    input: DataInput,
    #[command(flatten)]
    params: MethodParams,
}

#[derive(Args)]
struct EvalueArgs {
    #[arg(long, value_enum)]
    method: MethodName,
    #[arg(long)]
    theta: f64,
    #[command(flatten)]
    input: DataInput,
    #[command(flatten)]
    params: MethodParams,
}

#[derive(Args)]
struct ConfseqArgs {
    /// Burn-in sample count m >= 2
    #[arg(long = "burn-in")]
    burn_in: u64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    csv_column: Option<usize>,
    #[arg(long, default_value_t = false)]
    has_header: bool,
    #[command(flatten)]
    params: MethodParams,
}

#[derive(Args)]
struct Type1Args {
    #[arg(long, value_enum)]
    method: MethodName,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    params: MethodParams,
}

#[derive(Args)]
struct SimCommon {
    /// Master seed (env fallback POSTHOC_SEED)
    #[arg(long, env = "POSTHOC_SEED", default_value_t = 1)]
    seed: u64,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimWidthsArgs {
    #[command(flatten)]
    common: SimCommon,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// gaussian | student-t | bernoulli
    #[arg(long, default_value = "gaussian")]
    family: String,
    #[arg(long, default_value_t = 0.0)]
    mean: f64,
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    #[arg(long, default_value_t = 3)]
    df: u32,
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    /// Comma-separated prefix checkpoints
    #[arg(long, default_value = "100,200,500,1000,2000,3000,5000,10000,20000")]
    checkpoints: String,
    /// Comma-separated subset of wald,iwr,mix-iwr,rws,reg,mix-reg
    #[arg(long, default_value = "wald,iwr,mix-iwr,rws")]
    methods: String,
    #[command(flatten)]
    params: MethodParams,
}

#[derive(Args)]
struct SimRiskArgs {
    #[command(flatten)]
    common: SimCommon,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 1000)]
    n: u64,
    #[arg(long, default_value_t = 0.0)]
    mean: f64,
    #[arg(long, default_value_t = 2.0)]
    sd: f64,
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,
    #[arg(long = "anchor-alpha0", default_value_t = 0.01)]
    anchor_alpha0: f64,
    #[arg(long, default_value_t = 1e-5)]
    alpha_min: f64,
    #[arg(long, default_value_t = 500.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[command(flatten)]
    params: MethodParams,
}

#[derive(Args)]
struct SimRatioArgs {
    #[command(flatten)]
    common: SimCommon,
    /// Comma-separated anchor levels (default 0.001,0.01,0.05,0.1)
    #[arg(long)]
    alpha0s: Option<String>,
}

/// Parse argv and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage/help text; keep its exit code (2 on
            // flag errors, 0 for --help/--version)
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let pool = cli.threads.map(|t| {
        rayon::ThreadPoolBuilder::new().num_threads(t).build().expect("thread pool")
    });
    let dispatch = || match &cli.command {
        Command::Ci(args) => cmd_ci(args),
        Command::Evalue(args) => cmd_evalue(args, false),
        Command::Pvalue(args) => cmd_evalue(args, true),
        Command::Confseq(args) => cmd_confseq(args),
        Command::Type1(args) => cmd_type1(args),
        Command::SimWidths(args) => cmd_sim_widths(args),
        Command::SimRisk(args) => cmd_sim_risk(args),
        Command::SimRatio(args) => cmd_sim_ratio(args),
    };
    let outcome = match &pool {
        Some(p) => p.install(dispatch),
        None => dispatch(),
    };
    match outcome {
        Ok(payload) => {
            let mut stdout = std::io::stdout();
            let _ = stdout.write_all(payload.as_bytes());
            if !payload.ends_with('\n') {
                let _ = stdout.write_all(b"\n");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            1
        }
    }
}

fn interval_json(
    interval: &Interval,
    method: &CiMethod,
    summary: &SampleSummary,
    alpha: f64,
    anchor: Option<f64>,
) -> serde_json::Value {
    let (lo, hi) = match interval.endpoints() {
        Some((lo, hi)) => (json!(lo), json!(hi)),
        None => (serde_json::Value::Null, serde_json::Value::Null),
    };
    let mut value = json!({
        "method": method.name(),
        "alpha": alpha,
        "n": summary.n(),
        "lo": lo,
        "hi": hi,
        "vacuous": interval.is_vacuous(),
        "empty": interval.is_empty(),
        "summary": summary,
        "params": method,
    });
    if let Some(alpha0) = anchor {
        value["anchor"] = json!({ "alpha0": alpha0 });
    }
    value
}

fn cmd_ci(args: &CiArgs) -> Result<String> {
    let (summary, _) = args.input.load()?;
    let mut anchor = None;
    let method = match args.method {
        MethodName::Wald => CiMethod::Wald,
        MethodName::Iwr => {
            let resolved = args.params.resolve_lambda()?;
            anchor = resolved.anchor;
            CiMethod::Iwr { lambda: resolved.lambda }
        }
        MethodName::MixIwr => CiMethod::MixIwr(args.params.mix()),
        MethodName::Rws => CiMethod::Rws(args.params.rws()),
        MethodName::Reg => {
            let resolved = args.params.resolve_lambda()?;
            anchor = resolved.anchor;
            CiMethod::Reg { lambda: resolved.lambda, eta: args.params.eta }
        }
        MethodName::MixReg => {
            CiMethod::MixReg { mix: args.params.mix(), eta: args.params.eta }
        }
        MethodName::Sn => {
            return Err(Error::InvalidParameter {
                name: "method",
                value: f64::NAN,
                constraint: "sn has no interval form",
            })
        }
    };
    let interval = method.interval(&summary, args.alpha)?;
    let payload = interval_json(&interval, &method, &summary, args.alpha, anchor);
    Ok(serde_json::to_string_pretty(&payload).expect("json"))
}

fn cmd_evalue(args: &EvalueArgs, as_pvalue: bool) -> Result<String> {
    let (summary, stream) = args.input.load()?;
    let e = match args.method {
        MethodName::Wald => {
            return Err(Error::InvalidParameter {
                name: "method",
                value: f64::NAN,
                constraint: "wald is not an e-variable",
            })
        }
        MethodName::Iwr => {
            let lambda = args.params.resolve_lambda()?.lambda;
            e_iwr(&summary, args.theta, &IwrParams { lambda })?
        }
        MethodName::MixIwr => e_mix_iwr(&summary, args.theta, &args.params.mix())?,
        MethodName::Rws => e_rws(&summary, args.theta, &args.params.rws())?,
        MethodName::Reg => {
            let lambda = args.params.resolve_lambda()?.lambda;
            e_reg(&summary, args.theta, &RegParams { lambda, eta: args.params.eta })?
        }
        MethodName::MixReg => {
            e_mix_reg(&summary, args.theta, &args.params.mix(), args.params.eta)?
        }
        MethodName::Sn => {
            let stream = stream.ok_or(Error::Parse {
                line: 0,
                message: "sn needs ordered data; pass --data, not --summary".into(),
            })?;
            let sched = SnSchedule {
                c: args.params.sn_c,
                p: args.params.sn_p,
                start: args.params.sn_start,
            };
            e_sn(&stream, args.theta, &sched)?
        }
    };
    let value = if as_pvalue { e_to_pvalue(e) } else { e };
    let payload = json!({ "value": value, "theta": args.theta, "n": summary.n() });
    Ok(serde_json::to_string_pretty(&payload).expect("json"))
}

fn cmd_confseq(args: &ConfseqArgs) -> Result<String> {
    let format = match args.csv_column {
        Some(column) => InputFormat::Csv { column, has_header: args.has_header },
        None => InputFormat::Plain,
    };
    let xs = parse_samples_path(&args.data, format)?;
    if (xs.len() as u64) < args.burn_in {
        return Err(Error::InsufficientSamples { required: args.burn_in, got: xs.len() as u64 });
    }
    let warmup = SampleSummary::summarize(xs[..args.burn_in as usize].iter().copied());
    let mut handle = ConfSeqHandle::new(args.burn_in, args.params.rws(), warmup)?;
    let mut rows = Vec::new();
    let mut push_row = |handle: &ConfSeqHandle| -> Result<()> {
        let cs = handle.interval(args.alpha)?;
        let (lo, hi) = match cs.interval.endpoints() {
            Some((lo, hi)) => (json!(lo), json!(hi)),
            None => (serde_json::Value::Null, serde_json::Value::Null),
        };
        rows.push(json!({
            "k": handle.k(),
            "lo": lo,
            "hi": hi,
            "vacuous": cs.interval.is_vacuous(),
            "empty": cs.interval.is_empty(),
            "out_of_range": cs.out_of_range,
        }));
        Ok(())
    };
    push_row(&handle)?;
    for &x in &xs[args.burn_in as usize..] {
        handle = handle.advance(x);
        push_row(&handle)?;
    }
    let payload = json!({
        "burn_in": args.burn_in,
        "alpha": args.alpha,
        "range_growth": handle.range_growth(),
        "intervals": rows,
    });
    Ok(serde_json::to_string_pretty(&payload).expect("json"))
}

fn cmd_type1(args: &Type1Args) -> Result<String> {
    let error = match args.method {
        MethodName::Iwr => type1_iwr(args.alpha, args.params.resolve_lambda()?.lambda)?,
        MethodName::MixIwr => type1_mix_iwr(args.alpha, &args.params.mix())?,
        MethodName::Reg => {
            type1_reg(args.alpha, args.params.resolve_lambda()?.lambda, args.params.eta)?
        }
        MethodName::Rws => type1_rws(),
        _ => {
            return Err(Error::InvalidParameter {
                name: "method",
                value: f64::NAN,
                constraint: "type1 supports iwr, mix-iwr, reg, rws",
            })
        }
    };
    Ok(serde_json::to_string_pretty(&json!({ "error": error })).expect("json"))
}

fn parse_method_list(spec: &str, params: &MethodParams) -> Result<Vec<CiMethod>> {
    spec.split(',')
        .map(|name| match name.trim() {
            "wald" => Ok(CiMethod::Wald),
            "iwr" => Ok(CiMethod::Iwr { lambda: params.resolve_lambda()?.lambda }),
            "mix-iwr" => Ok(CiMethod::MixIwr(params.mix())),
            "rws" => Ok(CiMethod::Rws(params.rws())),
            "reg" => {
                Ok(CiMethod::Reg { lambda: params.resolve_lambda()?.lambda, eta: params.eta })
            }
            "mix-reg" => Ok(CiMethod::MixReg { mix: params.mix(), eta: params.eta }),
            other => Err(Error::Parse { line: 0, message: format!("unknown method {other:?}") }),
        })
        .collect()
}

fn emit_csv(common: &SimCommon, csv: String) -> Result<String> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            Ok(format!("{{\"written\": \"{}\"}}", path.display()))
        }
        None => Ok(csv),
    }
}

fn cmd_sim_widths(args: &SimWidthsArgs) -> Result<String> {
    let family = match args.family.as_str() {
        "gaussian" => Family::Gaussian { mean: args.mean, sd: args.sd },
        "student-t" => Family::StudentT { df: args.df, loc: args.mean, scale: args.sd },
        "bernoulli" => Family::Bernoulli { p: args.p },
        other => {
            return Err(Error::Parse { line: 0, message: format!("unknown family {other:?}") })
        }
    };
    let generator = Generator { family, seed: args.common.seed };
    let checkpoints: Vec<u64> = args
        .checkpoints
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| Error::Parse {
                line: 0,
                message: format!("bad checkpoint {s:?}"),
            })
        })
        .collect::<Result<_>>()?;
    let methods = parse_method_list(&args.methods, &args.params)?;
    let curves: Vec<WidthCurve> =
        width_experiment(&methods, &generator, &checkpoints, args.alpha)?;
    emit_csv(&args.common, widths_to_csv(&curves))
}

fn cmd_sim_risk(args: &SimRiskArgs) -> Result<String> {
    let cfg = RiskExperimentConfig {
        seed: args.common.seed,
        trials: args.trials,
        n: args.n,
        mean: args.mean,
        sd: args.sd,
        theta0: args.theta0,
        anchor_alpha0: args.anchor_alpha0,
        mix: args.params.mix(),
        rws: args.params.rws(),
        search: AlphaSearchConfig {
            alpha_min: args.alpha_min,
            alpha_max: args.alpha_max,
            tol: args.tol,
        },
    };
    let reports = risk_experiment(&cfg)?;
    emit_csv(&args.common, risk_to_csv(&reports))
}

fn cmd_sim_ratio(args: &SimRatioArgs) -> Result<String> {
    let (alphas, mut alpha0s) = default_ratio_grids();
    if let Some(spec) = &args.alpha0s {
        alpha0s = spec
            .split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| Error::Parse {
                    line: 0,
                    message: format!("bad alpha0 {s:?}"),
                })
            })
            .collect::<Result<_>>()?;
    }
    let grid = anchor_ratio_grid(&alphas, &alpha0s)?;
    emit_csv(&args.common, ratio_to_csv(&grid))
}
