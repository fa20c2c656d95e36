//! Scenario configuration: the serializable description of one run.
//!
//! A scenario aggregates the interaction mode, initial state, credit limits,
//! graph schedule, pair-selection and mixing distributions, step budget and
//! seed. Configurations are validated as a whole — every violation is
//! reported, not just the first — and unknown keys are rejected so typos in
//! hypothesis-critical fields cannot pass silently.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::{EdgeSet, SocialGraphSchedule};
use crate::stochastic::{MixingDistribution, MixingKind, PairSelectionDistribution, Regime};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Violations(Vec<String>),
}

impl ConfigError {
    pub fn violations(&self) -> &[String] {
        match self {
            ConfigError::Violations(v) => v,
        }
    }
}

fn default_consensus_epsilon() -> f64 {
    1e-6
}

fn default_record_every() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

/// Complete description of one run; a pure function of this plus nothing
/// else determines the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    /// Agent count.
    pub n: usize,
    pub mode: ModeConfig,
    pub initial_money: InitialMoneyConfig,
    /// Required in money mode; opinion mode carries an unused default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credit_limits: Option<CreditLimitsConfig>,
    pub graph: GraphConfig,
    pub pairs: PairsConfig,
    pub mu: MuConfig,
    /// Maximum number of steps.
    pub steps: u64,
    pub seed: u64,
    #[serde(default = "default_consensus_epsilon")]
    pub consensus_epsilon: f64,
    #[serde(default)]
    pub stop_on_consensus: bool,
    /// Cadence for recording full sorted-money snapshots.
    #[serde(default = "default_record_every")]
    pub record_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum ModeConfig {
    /// Credit-floor-gated money transfer.
    Money,
    /// Bounded-confidence opinion averaging.
    Opinion { confidence_threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum InitialMoneyConfig {
    Explicit { values: Vec<f64> },
    IidUniform { lo: f64, hi: f64 },
    IidNormal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum CreditLimitsConfig {
    Explicit { values: Vec<f64> },
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SwitchPhaseConfig {
    pub edges: Vec<[usize; 2]>,
    pub duration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum GraphConfig {
    /// Complete graph, constant over time.
    Complete,
    /// Fixed explicit edge set.
    Static { edges: Vec<[usize; 2]> },
    /// Cycles through explicit edge sets, one step each.
    Periodic { phases: Vec<Vec<[usize; 2]>> },
    /// Cycles through (edge set, duration) phases.
    Switching { phases: Vec<SwitchPhaseConfig> },
    /// Fresh Erdős–Rényi draw every step.
    RandomErdosRenyi { p: f64 },
    /// One Erdős–Rényi draw at start-up, optionally resampled until
    /// connected, then static.
    StaticErdosRenyi {
        p: f64,
        #[serde(default = "default_true")]
        require_connected: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum PairsConfig {
    /// Uniform over every unordered pair.
    AllPairs,
    Explicit {
        support: Vec<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeConfig {
    Contractive,
    Expansive,
    #[default]
    Unclassified,
}

impl From<RegimeConfig> for Regime {
    fn from(r: RegimeConfig) -> Regime {
        match r {
            RegimeConfig::Contractive => Regime::Contractive,
            RegimeConfig::Expansive => Regime::Expansive,
            RegimeConfig::Unclassified => Regime::Unclassified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MuConfig {
    #[serde(default)]
    pub declared_regime: RegimeConfig,
    pub dist: MuDistConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum MuDistConfig {
    Constant {
        value: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Mixture {
        components: Vec<MixtureComponentConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MixtureComponentConfig {
    pub weight: f64,
    pub dist: MuDistConfig,
}

impl MuDistConfig {
    pub fn to_kind(&self) -> MixingKind {
        match self {
            MuDistConfig::Constant { value } => MixingKind::Constant(*value),
            MuDistConfig::Uniform { lo, hi } => MixingKind::Uniform { lo: *lo, hi: *hi },
            MuDistConfig::Mixture { components } => MixingKind::Mixture(
                components
                    .iter()
                    .map(|c| (c.weight, c.dist.to_kind()))
                    .collect(),
            ),
        }
    }
}

impl ScenarioConfig {
    /// Checks every invariant, returning the full violation list on failure.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut violations = Vec::new();

        if self.n < 2 {
            violations.push(format!("n must be at least 2, got {}", self.n));
        }
        if self.steps == 0 {
            violations.push("steps must be at least 1".into());
        }
        if self.record_every == 0 {
            violations.push("record-every must be at least 1".into());
        }
        if !self.consensus_epsilon.is_finite() || self.consensus_epsilon < 0.0 {
            violations.push(format!(
                "consensus-epsilon must be finite and nonnegative, got {}",
                self.consensus_epsilon
            ));
        }

        if let ModeConfig::Opinion {
            confidence_threshold,
        } = &self.mode
        {
            if !confidence_threshold.is_finite() || *confidence_threshold < 0.0 {
                violations.push(format!(
                    "confidence-threshold must be finite and nonnegative, got {confidence_threshold}"
                ));
            }
        }

        self.validate_initial_money(&mut violations);
        self.validate_credit_limits(&mut violations);
        self.validate_graph(&mut violations);
        self.validate_pairs(&mut violations);
        self.validate_mu(&mut violations);

        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Violations(violations))
        }
    }

    fn validate_initial_money(&self, violations: &mut Vec<String>) {
        let opinion = matches!(self.mode, ModeConfig::Opinion { .. });
        match &self.initial_money {
            InitialMoneyConfig::Explicit { values } => {
                if values.len() != self.n {
                    violations.push(format!(
                        "initial-money has {} values but n = {}",
                        values.len(),
                        self.n
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    violations.push("initial-money values must be finite".into());
                }
                if opinion && values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    violations.push("opinion mode requires initial values inside [0, 1]".into());
                }
            }
            InitialMoneyConfig::IidUniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    violations.push(format!(
                        "initial-money uniform bounds must be finite with lo < hi, got [{lo}, {hi}]"
                    ));
                } else if opinion && (*lo < 0.0 || *hi > 1.0) {
                    violations
                        .push("opinion mode requires initial uniform bounds inside [0, 1]".into());
                }
            }
            InitialMoneyConfig::IidNormal { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() || *sd < 0.0 {
                    violations.push(format!(
                        "initial-money normal parameters must be finite with sd >= 0, got mean {mean}, sd {sd}"
                    ));
                }
                if opinion {
                    violations.push(
                        "opinion mode cannot use a normal initial law: its support escapes [0, 1]"
                            .into(),
                    );
                }
            }
        }
    }

    fn validate_credit_limits(&self, violations: &mut Vec<String>) {
        match (&self.mode, &self.credit_limits) {
            (ModeConfig::Money, None) => {
                violations.push("money mode requires credit-limits".into());
            }
            (_, Some(CreditLimitsConfig::Constant { value })) => {
                if !value.is_finite() || *value <= 0.0 {
                    violations.push(format!(
                        "credit limit must be positive and finite, got {value}"
                    ));
                }
            }
            (_, Some(CreditLimitsConfig::Explicit { values })) => {
                if values.len() != self.n {
                    violations.push(format!(
                        "credit-limits has {} values but n = {}",
                        values.len(),
                        self.n
                    ));
                }
                for (i, d) in values.iter().enumerate() {
                    if !d.is_finite() || *d <= 0.0 {
                        violations.push(format!(
                            "credit limit of agent {i} must be positive and finite, got {d}"
                        ));
                    }
                }
            }
            (ModeConfig::Opinion { .. }, None) => {}
        }

        // Reject-not-clamp: an explicit initial vector below its floor is a
        // configuration error. Skipped when the limits themselves are
        // invalid; those already reported above.
        if let (InitialMoneyConfig::Explicit { values }, Some(limits), ModeConfig::Money) =
            (&self.initial_money, &self.credit_limits, &self.mode)
        {
            if values.len() == self.n {
                for i in 0..self.n {
                    let d = match limits {
                        CreditLimitsConfig::Constant { value } => *value,
                        CreditLimitsConfig::Explicit { values: ds } => {
                            if ds.len() == self.n {
                                ds[i]
                            } else {
                                continue;
                            }
                        }
                    };
                    if !(d.is_finite() && d > 0.0) {
                        continue;
                    }
                    if values[i] < -d {
                        violations.push(format!(
                            "initial money of agent {i} ({}) is below its credit floor -{d}",
                            values[i]
                        ));
                    }
                }
            }
        }
    }

    fn validate_graph(&self, violations: &mut Vec<String>) {
        match self.build_schedule_static_part() {
            Ok(Some(schedule)) => {
                if let Err(e) = schedule.validate() {
                    violations.push(format!("graph: {e}"));
                }
            }
            Ok(None) => {
                // Random families: validate parameters directly.
                match &self.graph {
                    GraphConfig::RandomErdosRenyi { p }
                    | GraphConfig::StaticErdosRenyi { p, .. } => {
                        if !(0.0..=1.0).contains(p) || p.is_nan() {
                            violations
                                .push(format!("graph: edge probability {p} must lie in [0, 1]"));
                        }
                    }
                    _ => unreachable!(),
                }
            }
            Err(e) => violations.push(format!("graph: {e}")),
        }
    }

    fn validate_pairs(&self, violations: &mut Vec<String>) {
        if let Err(e) = self.build_pairs() {
            violations.push(format!("pairs: {e}"));
        }
    }

    fn validate_mu(&self, violations: &mut Vec<String>) {
        match self.build_mu() {
            Err(e) => violations.push(format!("mu: {e}")),
            Ok(dist) => {
                if matches!(self.mode, ModeConfig::Opinion { .. }) {
                    let (lo, hi) = dist.kind.support_bounds();
                    if lo <= 0.0 || hi > 0.5 {
                        violations.push(format!(
                            "opinion mode requires the mixing support inside (0, 1/2], got [{lo}, {hi}]"
                        ));
                    }
                }
            }
        }
    }

    /// Deterministic part of the schedule; `None` for the random families
    /// that need a stream to materialize.
    fn build_schedule_static_part(&self) -> Result<Option<SocialGraphSchedule>, String> {
        let build_set = |edges: &[[usize; 2]]| -> Result<EdgeSet, String> {
            EdgeSet::new(self.n, edges.iter().map(|e| (e[0], e[1]))).map_err(|e| e.to_string())
        };
        match &self.graph {
            GraphConfig::Complete => {
                if self.n < 2 {
                    return Err("complete graph needs n >= 2".into());
                }
                Ok(Some(SocialGraphSchedule::Static(EdgeSet::complete(self.n))))
            }
            GraphConfig::Static { edges } => {
                Ok(Some(SocialGraphSchedule::Static(build_set(edges)?)))
            }
            GraphConfig::Periodic { phases } => {
                let sets = phases
                    .iter()
                    .map(|p| build_set(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Some(SocialGraphSchedule::Periodic(sets)))
            }
            GraphConfig::Switching { phases } => {
                let sets = phases
                    .iter()
                    .map(|p| Ok((build_set(&p.edges)?, p.duration)))
                    .collect::<Result<Vec<_>, String>>()?;
                Ok(Some(SocialGraphSchedule::Switching(sets)))
            }
            GraphConfig::RandomErdosRenyi { .. } | GraphConfig::StaticErdosRenyi { .. } => Ok(None),
        }
    }

    /// The compiled pair-selection distribution.
    pub fn build_pairs(&self) -> Result<PairSelectionDistribution, String> {
        match &self.pairs {
            PairsConfig::AllPairs => {
                if self.n < 2 {
                    return Err("all-pairs support needs n >= 2".into());
                }
                Ok(PairSelectionDistribution::uniform_all_pairs(self.n))
            }
            PairsConfig::Explicit { support, weights } => PairSelectionDistribution::new(
                self.n,
                support.iter().map(|e| (e[0], e[1])).collect(),
                weights.clone(),
            )
            .map_err(|e| e.to_string()),
        }
    }

    /// The compiled mixing distribution.
    pub fn build_mu(&self) -> Result<MixingDistribution, String> {
        MixingDistribution::new(self.mu.dist.to_kind(), self.mu.declared_regime.into())
            .map_err(|e| e.to_string())
    }

    /// The schedule, for families that need no randomness to materialize.
    pub fn deterministic_schedule(&self) -> Option<SocialGraphSchedule> {
        self.build_schedule_static_part().ok().flatten()
    }
}
