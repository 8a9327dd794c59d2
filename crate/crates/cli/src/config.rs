//! Run configuration: a TOML file overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use svcal::calibration::{CalibrationOptions, FixSet, TargetSpace, TenorRules, ThetaRule, VarswapMode};
use svcal::fx::{AtmKind, Conventions, DeltaKind};
use svcal::mixing::MixingCurve;
use svcal::{ModelKind, ParamName};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// All parameters free, fitted to every quote.
    #[default]
    Full,
    /// Full-surface fit with a fix set.
    Fixed,
    /// Full-surface fit penalized towards previous parameters.
    Penalized,
    /// Independent fit per tenor with `kappa = c / T`.
    Tenor,
    /// `(v0, theta, kappa)` from the replicated variance-swap curve.
    Varswap,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Fixed => "fixed",
            Strategy::Penalized => "penalized",
            Strategy::Tenor => "tenor",
            Strategy::Varswap => "varswap",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_iterations: Option<usize>,
    pub restarts: Option<usize>,
    pub quadrature_tolerance: Option<f64>,
    pub truncation: Option<f64>,
}

/// Mixing curve as `"1:0.5,5:0.8"` text or as a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MixingSpec {
    Text(String),
    Table(MixingCurve),
}

impl MixingSpec {
    pub fn curve(&self) -> CliResult<MixingCurve> {
        match self {
            MixingSpec::Text(s) => Ok(s.parse()?),
            MixingSpec::Table(c) => Ok(c.clone()),
        }
    }
}

/// Contents of a `--config` TOML file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    pub strategy: Option<Strategy>,
    pub space: Option<TargetSpace>,
    pub conventions: Option<Conventions>,
    pub tenor_rules: Option<TenorRules>,
    pub mixing: Option<MixingSpec>,
    #[serde(default)]
    pub fix: BTreeMap<String, f64>,
    pub v0_from_atm_1m: Option<bool>,
    pub tie_theta_to_v0: Option<bool>,
    pub varswap_mode: Option<VarswapMode>,
    pub optimizer: Option<OptimizerSettings>,
    pub prev: Option<PathBuf>,
    pub store: Option<PathBuf>,
}

impl RunConfig {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }
}

/// `--delta forward` or `--delta spot:<foreign discount factor>`.
pub fn parse_delta(s: &str) -> CliResult<DeltaKind> {
    match s.split_once(':') {
        None if s == "forward" => Ok(DeltaKind::Forward),
        Some(("spot", df)) => {
            let foreign_discount = df
                .parse()
                .map_err(|_| CliError::input(format!("invalid foreign discount factor `{df}`")))?;
            Ok(DeltaKind::Spot { foreign_discount })
        }
        _ => Err(CliError::input(format!(
            "invalid delta convention `{s}` (forward | spot:<df>)"
        ))),
    }
}

pub fn parse_atm(s: &str) -> CliResult<AtmKind> {
    match s {
        "dns" | "delta_neutral_straddle" => Ok(AtmKind::DeltaNeutralStraddle),
        "forward" | "atmf" => Ok(AtmKind::Forward),
        _ => Err(CliError::input(format!("invalid ATM convention `{s}` (dns | forward)"))),
    }
}

/// `name=value`, e.g. `kappa=2`.
pub fn parse_fix(s: &str) -> CliResult<(ParamName, f64)> {
    let (n, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::input(format!("expected name=value, got `{s}`")))?;
    let name: ParamName = n.trim().parse()?;
    let value = v
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::input(format!("invalid value in `{s}`")))?;
    Ok((name, value))
}

/// Settings after merging file and flags, validated per strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: ModelKind,
    pub strategy: Strategy,
    pub space: TargetSpace,
    pub conventions: Conventions,
    pub tenor_rules: TenorRules,
    pub mixing: Option<MixingCurve>,
    pub fix: FixSet,
    /// Take `v0` from the `1M` row's ATM vol.
    pub v0_from_atm_1m: bool,
    pub varswap_mode: VarswapMode,
    pub options: CalibrationOptions,
    pub prev: Option<PathBuf>,
    pub store: Option<PathBuf>,
}

impl Default for Resolved {
    fn default() -> Self {
        Self {
            model: ModelKind::Heston,
            strategy: Strategy::Full,
            space: TargetSpace::Vol,
            conventions: Conventions::default(),
            tenor_rules: TenorRules::default(),
            mixing: None,
            fix: FixSet::none(),
            v0_from_atm_1m: false,
            varswap_mode: VarswapMode::InitialGuess,
            options: CalibrationOptions::default(),
            prev: None,
            store: None,
        }
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<ModelKind>,
    pub strategy: Option<Strategy>,
    pub space: Option<TargetSpace>,
    pub delta: Option<DeltaKind>,
    pub atm: Option<AtmKind>,
    pub kappa_constant: Option<f64>,
    pub theta_rule: Option<ThetaRule>,
    pub mixing: Option<MixingCurve>,
    pub fix: Vec<(ParamName, f64)>,
    pub v0_from_atm_1m: bool,
    pub tie_theta_to_v0: bool,
    pub varswap_mode: Option<VarswapMode>,
    pub max_iterations: Option<usize>,
    pub prev: Option<PathBuf>,
    pub store: Option<PathBuf>,
}

impl Resolved {
    pub fn merge(file: &RunConfig, flags: &Overrides) -> CliResult<Self> {
        let d = Resolved::default();
        let mut conventions = file.conventions.unwrap_or_default();
        if let Some(k) = flags.delta {
            conventions.delta_kind = k;
        }
        if let Some(a) = flags.atm {
            conventions.atm_kind = a;
        }
        let mut tenor_rules = file.tenor_rules.unwrap_or_default();
        if let Some(c) = flags.kappa_constant {
            tenor_rules.kappa_constant = c;
        }
        if let Some(r) = flags.theta_rule {
            tenor_rules.theta_rule = r;
        }
        tenor_rules.validate()?;

        let mixing = match (&flags.mixing, &file.mixing) {
            (Some(c), _) => Some(c.clone()),
            (None, Some(spec)) => Some(spec.curve()?),
            (None, None) => None,
        };

        let mut fix = FixSet::none();
        for (n, v) in &file.fix {
            fix.fixed.insert(n.parse()?, *v);
        }
        for &(n, v) in &flags.fix {
            fix.fixed.insert(n, v);
        }
        fix.tie_theta_to_v0 = flags.tie_theta_to_v0 || file.tie_theta_to_v0.unwrap_or(false);

        let mut options = d.options;
        if let Some(o) = &file.optimizer {
            if let Some(v) = o.max_iterations {
                options.lm.max_iterations = v;
            }
            if let Some(v) = o.restarts {
                options.restarts = v;
            }
            if let Some(v) = o.quadrature_tolerance {
                options.quadrature.tolerance = v;
            }
            if let Some(v) = o.truncation {
                options.quadrature.truncation = v;
            }
        }
        if let Some(v) = flags.max_iterations {
            options.lm.max_iterations = v;
        }
        options.quadrature.validate()?;

        let r = Resolved {
            model: flags.model.or(file.model).unwrap_or(d.model),
            strategy: flags.strategy.or(file.strategy).unwrap_or(d.strategy),
            space: flags.space.or(file.space).unwrap_or(d.space),
            conventions,
            tenor_rules,
            mixing,
            fix,
            v0_from_atm_1m: flags.v0_from_atm_1m || file.v0_from_atm_1m.unwrap_or(false),
            varswap_mode: flags.varswap_mode.or(file.varswap_mode).unwrap_or(d.varswap_mode),
            options,
            prev: flags.prev.clone().or_else(|| file.prev.clone()),
            store: flags.store.clone().or_else(|| file.store.clone()),
        };
        r.check()?;
        Ok(r)
    }

    fn check(&self) -> CliResult<()> {
        let has_fix = !self.fix.fixed.is_empty() || self.v0_from_atm_1m || self.fix.tie_theta_to_v0;
        match self.strategy {
            Strategy::Fixed if !has_fix => Err(CliError::input(
                "strategy `fixed` needs at least one --fix name=value, --v0-from-atm-1m or --tie-theta",
            )),
            Strategy::Tenor if self.model != ModelKind::Heston => {
                Err(CliError::input("strategy `tenor` calibrates the heston model only"))
            }
            Strategy::Tenor if self.space != TargetSpace::Vol => {
                Err(CliError::input("strategy `tenor` fits in vol space only"))
            }
            Strategy::Varswap if !self.model.variance_state() => Err(CliError::input(format!(
                "strategy `varswap` does not apply to {}",
                self.model
            ))),
            _ => Ok(()),
        }
    }
}
