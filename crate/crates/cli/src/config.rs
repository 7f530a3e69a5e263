//! Scenario configuration files.

use std::path::{Path, PathBuf};

use fiscal_tiebout::policy::UncappedMode;
use fiscal_tiebout::{Economy, SolverSettings};
use fiscal_tiebout_rdd::{DgpParams, Field, IkConstants, OutcomeSpec, Spec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// A complete run configuration; every block rejects unknown keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Root seed for randomised audits and simulations.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub economy: Option<Economy>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub audit: AuditBlock,
    /// Fixed school levels; when present the equilibrium commands study the
    /// housing market alone and skip the spending game.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketBlock>,
    #[serde(default)]
    pub policy: PolicyBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rdd: Option<RddBlock>,
}

/// Settings of `equilibrium audit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditBlock {
    /// Types on which market clearing and monotone sorting are checked.
    pub grid: usize,
    /// Sampled deviations of the incentive-compatibility audit.
    pub ic_samples: usize,
    /// Common school-level shift of the gap-invariance check.
    pub gap_shift: f64,
    /// Level shift of the tax bill in the price comparative static.
    pub price_shift: f64,
    /// Spending increments of the comparative-statics audit.
    pub statics_steps: Vec<f64>,
    /// Homes per district in the comparative-statics audit.
    pub statics_grid: usize,
}

impl Default for AuditBlock {
    fn default() -> Self {
        Self {
            grid: 1000,
            ic_samples: 10_000,
            gap_shift: 0.1,
            price_shift: 0.01,
            statics_steps: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            statics_grid: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketBlock {
    /// One school level per district.
    pub school_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caps: Option<CapsBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fees: Option<FeesBlock>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapsBlock {
    /// Capped districts; all districts when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub districts: Option<Vec<usize>>,
    pub uncapped: UncappedMode,
}

/// How fee thresholds are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thresholds {
    /// One spending threshold per district.
    Levels(Vec<f64>),
    Rule(ThresholdRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// The gap-preserving Pareto cap levels of the paying districts.
    ParetoCaps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeesBlock {
    pub threshold: Thresholds,
    pub fee_rate: f64,
    pub transfer_weights: Vec<f64>,
    /// Districts that never pay.
    #[serde(default)]
    pub exempt: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RddBlock {
    #[serde(default)]
    pub dgp: DgpParams,
    #[serde(default)]
    pub estimate: EstimateBlock,
    #[serde(default)]
    pub montecarlo: MonteCarloBlock,
}

/// A fuzzy design: the effect of `treatment` on `outcome`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzyBlock {
    pub outcome: OutcomeSpec,
    pub treatment: OutcomeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateBlock {
    /// Panel CSV; defaults to `panel.csv` in the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel: Option<PathBuf>,
    /// Adjacency CSV; defaults to `adjacency.csv` in the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<PathBuf>,
    pub outcomes: Vec<OutcomeSpec>,
    pub lags: Vec<u32>,
    pub specs: Vec<Spec>,
    pub fuzzy: Vec<FuzzyBlock>,
    /// Bins per side of the cutoff in the scatter CSVs.
    pub bins: usize,
    pub ik: IkConstants,
}

impl Default for EstimateBlock {
    fn default() -> Self {
        let tax = OutcomeSpec::growth(Field::AvgTax);
        Self {
            panel: None,
            adjacency: None,
            outcomes: vec![tax, OutcomeSpec::growth(Field::HomeValue), OutcomeSpec::growth(Field::IncomePc)],
            lags: vec![1, 2, 3],
            specs: vec![Spec::Poly3, Spec::LocalLinear],
            fuzzy: vec![FuzzyBlock { outcome: OutcomeSpec::growth(Field::HomeValue), treatment: tax }],
            bins: 20,
            ik: IkConstants::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloBlock {
    pub reps: usize,
    pub lag: u32,
}

impl Default for MonteCarloBlock {
    fn default() -> Self {
        Self { reps: 200, lag: 1 }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Canonical TOML form; parsing it yields an equal configuration.
    pub fn normalized(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn economy(&self) -> Result<&Economy> {
        self.economy.as_ref().ok_or_else(|| CliError::Validation("missing [economy] block".into()))
    }

    pub fn rdd(&self) -> Result<&RddBlock> {
        self.rdd.as_ref().ok_or_else(|| CliError::Validation("missing [rdd] block".into()))
    }

    /// Checks every block against its module's invariants.
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(CliError::Validation(m));
        self.solver.validate().map_err(|e| CliError::Validation(format!("[solver] {e}")))?;
        if let Some(econ) = &self.economy {
            econ.validate().map_err(|e| CliError::Validation(format!("[economy] {e}")))?;
            let n = econ.n();
            if let Some(m) = &self.market {
                if m.school_levels.len() != n || m.school_levels.iter().any(|s| !s.is_finite()) {
                    return invalid(format!("[market] school_levels needs {n} finite values"));
                }
            }
            if let Some(caps) = &self.policy.caps {
                if let Some(z) = &caps.districts {
                    if z.is_empty() || z.iter().any(|&j| j >= n) {
                        return invalid(format!("[policy.caps] districts must be nonempty indices below {n}"));
                    }
                }
            }
            if let Some(fees) = &self.policy.fees {
                if fees.exempt.iter().any(|&j| j >= n) {
                    return invalid(format!("[policy.fees] exempt indices must lie below {n}"));
                }
                if let Thresholds::Levels(t) = &fees.threshold {
                    let policy = fiscal_tiebout::policy::FeePolicy {
                        threshold: t.clone(),
                        fee_rate: fees.fee_rate,
                        transfer_weights: fees.transfer_weights.clone(),
                    };
                    policy.validate(n).map_err(|e| CliError::Validation(format!("[policy.fees] {e}")))?;
                }
            }
        }
        if self.market.is_some() && self.economy.is_none() {
            return invalid("[market] requires an [economy] block".into());
        }
        let a = &self.audit;
        if a.grid < 2 || a.ic_samples == 0 || a.statics_grid == 0 || a.statics_steps.iter().any(|&s| !(s > 0.0)) {
            return invalid("[audit] grids and samples must be positive, steps strictly positive".into());
        }
        if let Some(rdd) = &self.rdd {
            rdd.dgp.validate().map_err(|e| CliError::Validation(format!("[rdd.dgp] {e}")))?;
            let est = &rdd.estimate;
            if est.lags.is_empty() || est.outcomes.is_empty() || est.specs.is_empty() {
                return invalid("[rdd.estimate] outcomes, lags and specs must be nonempty".into());
            }
            if rdd.montecarlo.reps == 0 || rdd.montecarlo.lag == 0 {
                return invalid("[rdd.montecarlo] reps and lag must be positive".into());
            }
        }
        Ok(())
    }
}
