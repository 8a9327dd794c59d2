//! Command-line front end for the `svcal` calibration toolkit.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure or a
//! calibration that did not converge (the report is still written).

// NaN must fail validity checks, so comparisons are written negated.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod quotes;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use svcal::calibration::{TargetSpace, ThetaRule, VarswapMode};
use svcal::fx::{AtmKind, DeltaKind};
use svcal::param_store::{ParamRecord, StoredParams};
use svcal::varswap::QuadratureRule;
use svcal::{MarketSlice, MixingCurve, Model, ModelKind, OptionKind, ParamName, ParamStore, ReplicationConfig};

use crate::commands::{cmd_calibrate, cmd_markdown, cmd_price, cmd_varswap};
use crate::config::{parse_atm, parse_delta, parse_fix, Overrides, Resolved, RunConfig, Strategy};
use crate::error::{CliError, CliResult, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK};
use crate::quotes::{parse_curve, QuoteFile};
use crate::report::to_json;

pub const STORE_ENV: &str = "SVCAL_STORE";

#[derive(Debug, Parser)]
#[command(name = "svcal", version, about = "Stochastic-volatility calibration for FX smiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate a model to a quote file and print a JSON report.
    Calibrate(CalibrateArgs),
    /// Price vanillas from stored or file parameters.
    Price(PriceArgs),
    /// Replicated (or quoted) variance-swap curve with an optional fit.
    Varswap(VarswapArgs),
    /// Scale strangles and risk reversals by a mixing weight.
    Markdown(MarkdownArgs),
    /// Inspect the parameter store.
    Store(StoreArgs),
}

fn text<T>(r: CliResult<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn model_arg(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: svcal::Error| e.to_string())
}

fn fix_arg(s: &str) -> Result<(ParamName, f64), String> {
    text(parse_fix(s))
}

fn delta_arg(s: &str) -> Result<DeltaKind, String> {
    text(parse_delta(s))
}

fn atm_arg(s: &str) -> Result<AtmKind, String> {
    text(parse_atm(s))
}

fn mixing_arg(s: &str) -> Result<MixingCurve, String> {
    s.parse().map_err(|e: svcal::Error| e.to_string())
}

fn kind_arg(s: &str) -> Result<OptionKind, String> {
    s.parse().map_err(|e: svcal::Error| e.to_string())
}

fn time_arg(s: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc())
        .map_err(|_| format!("expected RFC 3339 time or YYYY-MM-DD, got `{s}`"))
}

fn serde_arg<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct StoreFlag {
    /// Parameter store directory.
    #[arg(long, env = STORE_ENV)]
    store: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Quote CSV file.
    quotes: PathBuf,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    strategy: Option<Strategy>,
    /// heston | bates | schobel_zhu
    #[arg(long, value_parser = model_arg)]
    model: Option<ModelKind>,
    /// Hold a parameter fixed, e.g. `--fix kappa=2`. Repeatable.
    #[arg(long, value_parser = fix_arg)]
    fix: Vec<(ParamName, f64)>,
    /// Fix v0 from the ATM vol of the `1M` row.
    #[arg(long)]
    v0_from_atm_1m: bool,
    /// Calibrate theta and v0 as one parameter.
    #[arg(long)]
    tie_theta: bool,
    /// `c` in kappa = c / T for the tenor strategy.
    #[arg(long)]
    kappa_constant: Option<f64>,
    /// equals_v0 | atm_variance
    #[arg(long, value_parser = serde_arg::<ThetaRule>)]
    theta_rule: Option<ThetaRule>,
    /// vol | price
    #[arg(long, value_parser = serde_arg::<TargetSpace>)]
    space: Option<TargetSpace>,
    /// forward | spot:<foreign discount factor>
    #[arg(long, value_parser = delta_arg)]
    delta: Option<DeltaKind>,
    /// dns | forward
    #[arg(long, value_parser = atm_arg)]
    atm: Option<AtmKind>,
    /// Mark quotes down first: a weight, or `T:lambda` pairs like `1:0.5,5:0.8`.
    #[arg(long, value_parser = mixing_arg)]
    mixing: Option<MixingCurve>,
    /// Previous parameters for the penalized strategy (JSON).
    #[arg(long, conflicts_with = "prev_latest")]
    prev: Option<PathBuf>,
    /// Take previous parameters from the latest store record (at or before --as-of).
    #[arg(long)]
    prev_latest: bool,
    /// fix | initial_guess
    #[arg(long, value_parser = serde_arg::<VarswapMode>)]
    varswap_mode: Option<VarswapMode>,
    /// Quoted variance-swap curve CSV for the varswap strategy.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[command(flatten)]
    store: StoreFlag,
    /// Append the result to the store.
    #[arg(long)]
    save: bool,
    /// Record timestamp (default: now); also bounds --prev-latest.
    #[arg(long, value_parser = time_arg)]
    as_of: Option<DateTime<Utc>>,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PriceArgs {
    /// Parameters as JSON: a model, a store record or a calibrate report.
    #[arg(long, required_unless_present = "latest", conflicts_with = "latest")]
    params: Option<PathBuf>,
    /// Use the latest store record of --model.
    #[arg(long)]
    latest: bool,
    #[arg(long, value_parser = model_arg, default_value = "heston")]
    model: ModelKind,
    #[arg(long, value_parser = time_arg)]
    as_of: Option<DateTime<Utc>>,
    /// Tenor to take from per-tenor parameters.
    #[arg(long)]
    tenor: Option<String>,
    /// Expiry in years; defaults to the selected tenor's.
    #[arg(long)]
    expiry: Option<f64>,
    /// Repeatable.
    #[arg(long, required = true)]
    strike: Vec<f64>,
    /// call | put; both when omitted.
    #[arg(long, value_parser = kind_arg)]
    kind: Option<OptionKind>,
    #[arg(long, default_value_t = 1.0)]
    forward: f64,
    #[arg(long, default_value_t = 1.0)]
    discount: f64,
    #[command(flatten)]
    store: StoreFlag,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VarswapArgs {
    /// Quote CSV file.
    #[arg(required_unless_present = "curve")]
    quotes: Option<PathBuf>,
    /// Quoted curve CSV (`expiry,variance`) instead of replication.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Fit (v0, theta, kappa) to the curve.
    #[arg(long)]
    fit: bool,
    /// Fit rmse (variance units) above which the fit is flagged as a misfit.
    #[arg(long, default_value_t = 5e-4)]
    misfit_threshold: f64,
    #[arg(long, value_parser = delta_arg)]
    delta: Option<DeltaKind>,
    #[arg(long, value_parser = atm_arg)]
    atm: Option<AtmKind>,
    /// Strike range [F/m, F m].
    #[arg(long, default_value_t = 10.0)]
    multiplier: f64,
    #[arg(long, default_value_t = 2048)]
    grid_size: usize,
    /// trapezoid | simpson
    #[arg(long, value_parser = serde_arg::<QuadratureRule>, default_value = "trapezoid")]
    rule: QuadratureRule,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MarkdownArgs {
    quotes: PathBuf,
    /// Constant weight in [0, 1].
    #[arg(long, required_unless_present = "curve", conflicts_with = "curve")]
    lambda: Option<f64>,
    /// Weights by expiry bucket, e.g. `1:0.5,5:0.8`.
    #[arg(long, value_parser = mixing_arg)]
    curve: Option<MixingCurve>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StoreArgs {
    #[command(subcommand)]
    action: StoreAction,
    /// Parameter store directory.
    #[arg(long, env = STORE_ENV, global = true)]
    store: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum StoreAction {
    /// One line per record: id, timestamp, model, strategy, digest.
    List,
    /// Print one record as JSON.
    Show { id: u64 },
}

/// Runs the command line with `args` (program name first) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                CliError::Core(svcal::Error::Numerical { .. }) => EXIT_NOT_CONVERGED,
                _ => EXIT_INPUT,
            }
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    match cmd {
        Command::Calibrate(a) => calibrate(a, out, err),
        Command::Price(a) => price(a, out),
        Command::Varswap(a) => varswap(a, out),
        Command::Markdown(a) => markdown(a, out),
        Command::Store(a) => store(a, out),
    }
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(format!("cannot write {}", p.display()), e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("cannot write output", e)),
    }
}

fn open_store(dir: Option<&PathBuf>) -> CliResult<ParamStore> {
    let dir = dir.ok_or_else(|| CliError::input(format!("no store directory (--store or {STORE_ENV})")))?;
    Ok(ParamStore::open(dir)?)
}

fn read_quotes(path: &Path) -> CliResult<QuoteFile> {
    QuoteFile::read(path).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn read_curve(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    parse_curve(&bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Parameters and an optional expiry picked out of a model, store record or
/// calibrate report.
fn select_params(v: Value, tenor: Option<&str>) -> CliResult<(Model, Option<f64>)> {
    let bad = |e: serde_json::Error| CliError::input(format!("unrecognized parameter file: {e}"));
    if v.get("model").is_some_and(Value::is_string) {
        return Ok((serde_json::from_value(v).map_err(bad)?, None));
    }
    if v.get("model_kind").is_some() {
        let rec: ParamRecord = serde_json::from_value(v).map_err(bad)?;
        return select_stored(&rec.params, tenor);
    }
    if let Some(results) = v.get("results").and_then(Value::as_array) {
        let pick = match tenor {
            Some(t) => results
                .iter()
                .find(|r| r.get("label").and_then(Value::as_str) == Some(t)),
            None if results.len() == 1 => results.first(),
            None => return Err(CliError::input("report has several results; pass --tenor")),
        };
        let r = pick.ok_or_else(|| CliError::input(format!("no result for tenor `{}`", tenor.unwrap_or(""))))?;
        let model: Model = serde_json::from_value(r["params"].clone()).map_err(bad)?;
        return Ok((model, r.get("expiry").and_then(Value::as_f64)));
    }
    Err(CliError::input(
        "unrecognized parameter file: expected a model, a store record or a report",
    ))
}

fn select_stored(p: &StoredParams, tenor: Option<&str>) -> CliResult<(Model, Option<f64>)> {
    match (p, tenor) {
        (StoredParams::Single(m), _) => Ok((*m, None)),
        (StoredParams::PerTenor(v), Some(t)) => v
            .iter()
            .find(|x| x.tenor == t)
            .map(|x| (x.params, Some(x.expiry)))
            .ok_or_else(|| CliError::input(format!("no parameters for tenor `{t}`"))),
        (StoredParams::PerTenor(v), None) if v.len() == 1 => Ok((v[0].params, Some(v[0].expiry))),
        (StoredParams::PerTenor(_), None) => Err(CliError::input("per-tenor parameters; pass --tenor")),
    }
}

fn read_params(path: &Path, tenor: Option<&str>) -> CliResult<(Model, Option<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    select_params(v, tenor)
}

fn calibrate(a: CalibrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let file = match &a.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    let flags = Overrides {
        model: a.model,
        strategy: a.strategy,
        space: a.space,
        delta: a.delta,
        atm: a.atm,
        kappa_constant: a.kappa_constant,
        theta_rule: a.theta_rule,
        mixing: a.mixing,
        fix: a.fix,
        v0_from_atm_1m: a.v0_from_atm_1m,
        tie_theta_to_v0: a.tie_theta,
        varswap_mode: a.varswap_mode,
        max_iterations: a.max_iterations,
        prev: a.prev,
        store: a.store.store,
    };
    let cfg = Resolved::merge(&file, &flags)?;
    let quotes = read_quotes(&a.quotes)?;
    let curve = a.curve.as_deref().map(read_curve).transpose()?;

    let store = if a.save || a.prev_latest {
        Some(open_store(cfg.store.as_ref())?)
    } else {
        None
    };
    let prev = if a.prev_latest {
        let rec = store.as_ref().expect("opened above").latest(cfg.model, a.as_of)?;
        Some(select_stored(&rec.params, None)?.0)
    } else if let Some(p) = &cfg.prev {
        Some(read_params(p, None)?.0)
    } else {
        None
    };

    let done = cmd_calibrate(&quotes, &cfg, prev.as_ref(), curve.as_deref())?;
    emit(&to_json(&done.report), a.output.as_deref(), out)?;
    if let Some(store) = &store {
        if a.save {
            let record = ParamRecord {
                id: 0,
                model_kind: cfg.model,
                params: done.params,
                timestamp: a.as_of.unwrap_or_else(Utc::now),
                quote_digest: quotes.digest.clone(),
                strategy: cfg.strategy.as_str().to_string(),
                diagnostics: done.diagnostics,
                digest_mismatch: false,
            };
            let id = store.save(&record, Some(&quotes.digest))?;
            let _ = writeln!(err, "saved record {id} to {}", store.dir().display());
        }
    }
    if done.report.converged {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(err, "calibration did not converge");
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn price(a: PriceArgs, out: &mut dyn Write) -> CliResult<i32> {
    let (params, expiry, record) = if a.latest {
        let store = open_store(a.store.store.as_ref())?;
        let rec = store.latest(a.model, a.as_of)?;
        let (m, t) = select_stored(&rec.params, a.tenor.as_deref())?;
        (m, t, Some(rec.id))
    } else {
        let path = a.params.as_ref().expect("clap requires --params without --latest");
        let (m, t) = read_params(path, a.tenor.as_deref())?;
        (m, t, None)
    };
    let expiry = a
        .expiry
        .or(expiry)
        .ok_or_else(|| CliError::input("--expiry is required for these parameters"))?;
    let slice = MarketSlice::new(a.forward, a.discount, expiry)?;
    let kinds = match a.kind {
        Some(k) => vec![k],
        None => vec![OptionKind::Call, OptionKind::Put],
    };
    let quad = svcal::QuadratureConfig::default();
    let report = cmd_price(&params, record, &slice, &a.strike, &kinds, &quad)?;
    emit(&to_json(&report), a.output.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn varswap(a: VarswapArgs, out: &mut dyn Write) -> CliResult<i32> {
    let quotes = a.quotes.as_deref().map(read_quotes).transpose()?;
    let curve = a.curve.as_deref().map(read_curve).transpose()?;
    let mut conv = svcal::Conventions::default();
    if let Some(d) = a.delta {
        conv.delta_kind = d;
    }
    if let Some(m) = a.atm {
        conv.atm_kind = m;
    }
    let replication = ReplicationConfig {
        multiplier: a.multiplier,
        grid_size: a.grid_size,
        rule: a.rule,
    };
    let report = cmd_varswap(
        quotes.as_ref(),
        curve.as_deref(),
        &conv,
        &replication,
        a.fit,
        a.misfit_threshold,
    )?;
    emit(&to_json(&report), a.output.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn markdown(a: MarkdownArgs, out: &mut dyn Write) -> CliResult<i32> {
    let quotes = read_quotes(&a.quotes)?;
    let curve = match (a.curve, a.lambda) {
        (Some(c), _) => c,
        (None, Some(l)) => MixingCurve::constant(l)?,
        (None, None) => unreachable!("clap requires --lambda or --curve"),
    };
    emit(&cmd_markdown(&quotes, &curve)?, a.output.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn store(a: StoreArgs, out: &mut dyn Write) -> CliResult<i32> {
    let store = open_store(a.store.as_ref())?;
    let text = match a.action {
        StoreAction::List => {
            let mut s = String::new();
            for r in store.list()? {
                let flag = if r.digest_mismatch { " digest-mismatch" } else { "" };
                s.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}{flag}\n",
                    r.id,
                    r.timestamp.to_rfc3339(),
                    r.model_kind,
                    r.strategy,
                    r.quote_digest
                ));
            }
            s
        }
        StoreAction::Show { id } => to_json(&store.load(id)?),
    };
    emit(&text, None, out)?;
    Ok(EXIT_OK)
}
