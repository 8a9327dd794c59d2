//! Subcommand bodies. They take parsed inputs and return reports; file and
//! store access stay in the caller.

use svcal::calibration::{
    calibrate, calibrate_penalized, calibrate_tenor, calibrate_varswap, calibrate_with_varswap, point_price,
    tenor_target, TargetSpace,
};
use svcal::param_store::{Diagnostic, StoredParams, TenorParams};
use svcal::pricing::{bs_implied_vol, cf_vanilla_prices};
use svcal::varswap::implied_varswap_curve;
use svcal::{
    CalibrationTarget, Conventions, MarketSlice, MixingCurve, Model, OptionKind, OptionSpec, ReplicationConfig,
};

use crate::config::{Resolved, Strategy};
use crate::error::{CliError, CliResult};
use crate::quotes::QuoteFile;
use crate::report::{
    CalibrationReport, CurvePoint, FitReport, PenaltyReport, PriceReport, PriceRow, VarswapReport, VarswapSection,
    SCHEMA,
};

/// Label of the row whose ATM vol seeds `v0` under `--v0-from-atm-1m`.
pub const ONE_MONTH: &str = "1M";

pub struct Calibrated {
    pub report: CalibrationReport,
    /// What a store record would hold.
    pub params: StoredParams,
    pub diagnostics: Vec<Diagnostic>,
}

fn surface_target(quotes: &QuoteFile, conv: &Conventions, space: TargetSpace) -> CliResult<CalibrationTarget> {
    let mut target = CalibrationTarget::from_quotes(&quotes.pairs(), conv)?;
    if space == TargetSpace::Price {
        for p in &mut target.points {
            p.value = point_price(p, p.value);
        }
        target.space = TargetSpace::Price;
    }
    Ok(target)
}

/// Runs the configured strategy on `quotes` (marked down first when a mixing
/// curve is set). `prev` is required by the penalized strategy; `quoted_curve`
/// replaces the replicated variance-swap curve.
pub fn cmd_calibrate(
    quotes: &QuoteFile,
    cfg: &Resolved,
    prev: Option<&Model>,
    quoted_curve: Option<&[(f64, f64)]>,
) -> CliResult<Calibrated> {
    let marked;
    let quotes = match &cfg.mixing {
        Some(curve) => {
            marked = quotes.marked_down(curve)?;
            &marked
        }
        None => quotes,
    };
    let mut fix = cfg.fix.clone();
    if cfg.v0_from_atm_1m {
        let row = quotes
            .find(ONE_MONTH)
            .ok_or_else(|| CliError::input(format!("--v0-from-atm-1m needs a `{ONE_MONTH}` row")))?;
        fix.v0_from_atm_1m = Some(row.quote.atm_vol);
    }
    let opts = &cfg.options;
    let quad = &opts.quadrature;
    let conv = &cfg.conventions;

    let mut results = Vec::new();
    let mut penalty = None;
    let mut varswap = None;
    let params = match cfg.strategy {
        Strategy::Full | Strategy::Fixed => {
            let target = surface_target(quotes, conv, cfg.space)?;
            let res = calibrate(&target, cfg.model, &fix, None, opts)?;
            results.push((FitReport::new("surface", None, &target, &res, quad)?, res.clone()));
            StoredParams::Single(res.params)
        }
        Strategy::Penalized => {
            let prev = prev.ok_or_else(|| CliError::input("strategy `penalized` needs --prev or --prev-latest"))?;
            if prev.kind() != cfg.model {
                return Err(CliError::input(format!(
                    "previous parameters are {} but the model is {}",
                    prev.kind(),
                    cfg.model
                )));
            }
            let target = surface_target(quotes, conv, cfg.space)?;
            let p = calibrate_penalized(&target, prev, &fix, opts)?;
            results.push((
                FitReport::new("surface", None, &target, &p.result, quad)?,
                p.result.clone(),
            ));
            penalty = Some(PenaltyReport::new(prev, &p));
            StoredParams::Single(p.result.params)
        }
        Strategy::Tenor => {
            let fits: Vec<CliResult<_>> = std::thread::scope(|s| {
                let handles: Vec<_> = quotes
                    .rows
                    .iter()
                    .map(|row| {
                        s.spawn(move || -> CliResult<_> {
                            let target = tenor_target(&row.quote, &row.slice, conv)?;
                            let res = calibrate_tenor(&row.quote, &row.slice, &cfg.tenor_rules, conv, opts)?;
                            let label = &row.quote.tenor_label;
                            let rep = FitReport::new(label.clone(), Some(row.slice.expiry), &target, &res, quad)?;
                            Ok((rep, res))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("tenor calibration thread panicked"))
                    .collect()
            });
            let mut per = Vec::new();
            for (row, fit) in quotes.rows.iter().zip(fits) {
                let (rep, res) = fit?;
                per.push(TenorParams {
                    tenor: row.quote.tenor_label.clone(),
                    expiry: row.slice.expiry,
                    params: res.params,
                });
                results.push((rep, res));
            }
            StoredParams::PerTenor(per)
        }
        Strategy::Varswap => {
            let (source, curve) = match quoted_curve {
                Some(c) => ("quoted", c.to_vec()),
                None => (
                    "implied",
                    implied_varswap_curve(&quotes.pairs(), conv, &ReplicationConfig::default())?,
                ),
            };
            let target = surface_target(quotes, conv, cfg.space)?;
            let (fit, res) = calibrate_with_varswap(&target, cfg.model, &curve, cfg.varswap_mode, opts)?;
            results.push((FitReport::new("surface", None, &target, &res, quad)?, res.clone()));
            varswap = Some(VarswapSection {
                source,
                curve: CurvePoint::from_pairs(&curve),
                fit: Some(fit),
                misfit: None,
            });
            StoredParams::Single(res.params)
        }
    };

    let converged = results.iter().all(|(_, r)| r.converged);
    let diagnostics = results
        .iter()
        .map(|(rep, res)| Diagnostic::from_result(rep.label.clone(), res))
        .collect();
    let report = CalibrationReport {
        schema: SCHEMA,
        command: "calibrate",
        strategy: cfg.strategy.as_str(),
        model: cfg.model,
        quote_digest: quotes.digest.clone(),
        mixing: cfg.mixing.as_ref().map(MixingCurve::to_string),
        converged,
        results: results.into_iter().map(|(rep, _)| rep).collect(),
        penalty,
        varswap,
    };
    Ok(Calibrated {
        report,
        params,
        diagnostics,
    })
}

/// Discounted prices and Black implied vols of `kinds` at each strike.
pub fn cmd_price(
    params: &Model,
    record: Option<u64>,
    slice: &MarketSlice,
    strikes: &[f64],
    kinds: &[OptionKind],
    quad: &svcal::QuadratureConfig,
) -> CliResult<PriceReport> {
    params.validate()?;
    if strikes.is_empty() {
        return Err(CliError::input("no strikes"));
    }
    let options = strikes
        .iter()
        .flat_map(|&k| kinds.iter().map(move |&kind| OptionSpec::new(k, slice.expiry, kind)))
        .collect::<svcal::Result<Vec<_>>>()?;
    let prices = cf_vanilla_prices(params, slice, &options, quad)?;
    let rows = options
        .iter()
        .zip(prices)
        .map(|(o, price)| {
            Ok(PriceRow {
                strike: o.strike,
                kind: o.kind,
                price,
                implied_vol: bs_implied_vol(slice, o, price)?,
            })
        })
        .collect::<CliResult<_>>()?;
    Ok(PriceReport {
        schema: SCHEMA,
        command: "price",
        record,
        params: *params,
        expiry: slice.expiry,
        forward: slice.forward,
        discount: slice.discount,
        prices: rows,
    })
}

/// Replicated curve from `quotes`, or the `quoted` curve, with an optional
/// `(v0, theta, kappa)` fit flagged as a misfit above `threshold` rmse.
pub fn cmd_varswap(
    quotes: Option<&QuoteFile>,
    quoted: Option<&[(f64, f64)]>,
    conv: &Conventions,
    replication: &ReplicationConfig,
    fit: bool,
    threshold: f64,
) -> CliResult<VarswapReport> {
    let (source, curve) = match (quoted, quotes) {
        (Some(c), _) => ("quoted", c.to_vec()),
        (None, Some(q)) => ("implied", implied_varswap_curve(&q.pairs(), conv, replication)?),
        (None, None) => return Err(CliError::input("need a quote file or --curve")),
    };
    let fit = if fit { Some(calibrate_varswap(&curve)?) } else { None };
    let misfit = fit.as_ref().map(|f| !(f.rmse <= threshold));
    Ok(VarswapReport {
        schema: SCHEMA,
        command: "varswap",
        quote_digest: if quoted.is_some() {
            None
        } else {
            quotes.map(|q| q.digest.clone())
        },
        section: VarswapSection {
            source,
            curve: CurvePoint::from_pairs(&curve),
            fit,
            misfit,
        },
    })
}

/// Marked-down quote file as CSV text.
pub fn cmd_markdown(quotes: &QuoteFile, curve: &MixingCurve) -> CliResult<String> {
    Ok(quotes.marked_down(curve)?.to_csv())
}
