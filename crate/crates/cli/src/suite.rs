//! Suite files: a scenario config plus seeds, acceptance thresholds, and a
//! suite name that pins which hypotheses the validator enforces.
//!
//! Named suites are contracts. An `equal-wealth` suite must satisfy the
//! consensus hypotheses (contractive mixing, full pair support, a schedule
//! that is connected infinitely often); a `frozen-order` suite must satisfy
//! the order-stability hypotheses (expansive mixing, full pair support, a
//! schedule complete infinitely often, finite credit). `custom` suites get
//! the same checks as warnings only, so hypothesis-violating experiments
//! stay expressible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use moneta_core::config::{GraphConfig, ModeConfig, ScenarioConfig};
use moneta_core::graphs::{is_complete, is_connected, SocialGraphSchedule};
use moneta_core::stochastic::Regime;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("invalid suite:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    EqualWealth,
    FrozenOrder,
    DeffuantOpinion,
    Custom,
}

impl SuiteName {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::EqualWealth => "equal-wealth",
            SuiteName::FrozenOrder => "frozen-order",
            SuiteName::DeffuantOpinion => "deffuant-opinion",
            SuiteName::Custom => "custom",
        }
    }
}

fn default_residual_tolerance() -> f64 {
    1e-9
}

fn default_tail_fraction() -> f64 {
    0.5
}

fn default_rank_tolerance() -> f64 {
    1e-12
}

/// Thresholds the verify audit asserts against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct AcceptanceThresholds {
    /// Bound on identity residual / max(1, Z before).
    #[serde(default = "default_residual_tolerance")]
    pub residual_tolerance: f64,
    /// Fraction of the run treated as the stability tail.
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    /// Order-statistic movement below this does not count as a rank change.
    #[serde(default = "default_rank_tolerance")]
    pub rank_tolerance: f64,
    /// Consensus spread target; defaults to the scenario's epsilon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus_epsilon: Option<f64>,
    /// Seeds that must pass the tail-stability check; defaults to 90%.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_passing_seeds: Option<usize>,
}

impl Default for AcceptanceThresholds {
    fn default() -> Self {
        AcceptanceThresholds {
            residual_tolerance: default_residual_tolerance(),
            tail_fraction: default_tail_fraction(),
            rank_tolerance: default_rank_tolerance(),
            consensus_epsilon: None,
            min_passing_seeds: None,
        }
    }
}

/// On-disk shape of a suite document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SuiteFile {
    name: SuiteName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    acceptance: AcceptanceThresholds,
    config: ScenarioConfig,
}

/// A validated suite, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSuite {
    pub name: SuiteName,
    pub config: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub acceptance: AcceptanceThresholds,
    /// Hypothesis findings that were downgraded because the suite is custom.
    pub warnings: Vec<String>,
}

impl ScenarioSuite {
    pub fn consensus_epsilon(&self) -> f64 {
        self.acceptance
            .consensus_epsilon
            .unwrap_or(self.config.consensus_epsilon)
    }

    /// Seeds that must pass statistical tail checks.
    pub fn min_passing_seeds(&self) -> usize {
        self.acceptance
            .min_passing_seeds
            .unwrap_or_else(|| ((self.seeds.len() as f64) * 0.9).ceil() as usize)
            .min(self.seeds.len())
    }

    /// Serializes back to the suite document format; parsing the result
    /// yields an equivalent suite.
    pub fn to_toml(&self) -> String {
        let file = SuiteFile {
            name: self.name,
            seeds: Some(self.seeds.clone()),
            acceptance: self.acceptance.clone(),
            config: self.config.clone(),
        };
        toml::to_string_pretty(&file).expect("suite serialization cannot fail")
    }
}

/// Parses a suite document and enforces scenario plus suite-level rules.
/// All violations are reported together; custom suites downgrade the
/// hypothesis rules to warnings.
pub fn parse_and_validate(text: &str) -> Result<ScenarioSuite, SuiteError> {
    let file: SuiteFile = toml::from_str(text).map_err(|e| SuiteError::Syntax(e.to_string()))?;
    suite_from_file(file)
}

fn suite_from_file(file: SuiteFile) -> Result<ScenarioSuite, SuiteError> {
    let mut violations = Vec::new();
    if let Err(e) = file.config.validate() {
        violations.extend(e.violations().iter().cloned());
    }

    let seeds = file.seeds.clone().unwrap_or_else(|| vec![file.config.seed]);
    if seeds.is_empty() {
        violations.push("seeds list must be nonempty".into());
    }
    if !(file.acceptance.tail_fraction > 0.0 && file.acceptance.tail_fraction < 1.0) {
        violations.push(format!(
            "acceptance tail-fraction must lie in (0, 1), got {}",
            file.acceptance.tail_fraction
        ));
    }

    let hypothesis = hypothesis_findings(file.name, &file.config);
    let mut warnings = Vec::new();
    if file.name == SuiteName::Custom {
        warnings = hypothesis;
    } else {
        violations.extend(hypothesis);
    }

    if violations.is_empty() {
        Ok(ScenarioSuite {
            name: file.name,
            config: file.config,
            seeds,
            acceptance: file.acceptance,
            warnings,
        })
    } else {
        Err(SuiteError::Invalid(violations))
    }
}

/// Checks the named-suite hypotheses; findings read as requirements.
fn hypothesis_findings(name: SuiteName, config: &ScenarioConfig) -> Vec<String> {
    let mut findings = Vec::new();
    // Only meaningful on a config that compiles.
    let Ok(mu) = config.build_mu() else {
        return findings;
    };
    let Ok(pairs) = config.build_pairs() else {
        return findings;
    };
    let regime = mu.computed_regime();
    let covers = pairs.covers_all_pairs(config.n);

    match name {
        SuiteName::EqualWealth => {
            if !matches!(config.mode, ModeConfig::Money) {
                findings.push("equal-wealth runs the money-transfer mode".into());
            }
            if regime != Regime::Contractive {
                findings.push(
                    "equal-wealth requires contractive mixing: sup |mu - 1/2| < 1/2 \
                     (support strictly inside (0, 1))"
                        .into(),
                );
            }
            if !covers {
                findings.push(
                    "equal-wealth requires the pair support to cover every unordered pair".into(),
                );
            }
            if let Some(finding) = connectivity_finding(config) {
                findings.push(finding);
            }
        }
        SuiteName::FrozenOrder => {
            if !matches!(config.mode, ModeConfig::Money) {
                findings.push("frozen-order runs the money-transfer mode".into());
            }
            if regime != Regime::Expansive {
                findings.push(
                    "frozen-order requires expansive mixing: inf |mu - 1/2| >= 1/2 \
                     (support outside (0, 1))"
                        .into(),
                );
            }
            if !covers {
                findings.push(
                    "frozen-order requires the pair support to cover every unordered pair".into(),
                );
            }
            if let Some(finding) = completeness_finding(config) {
                findings.push(finding);
            }
            if config.stop_on_consensus {
                findings.push(
                    "frozen-order runs never stop early: order stability is a tail property".into(),
                );
            }
        }
        SuiteName::DeffuantOpinion => {
            if !matches!(config.mode, ModeConfig::Opinion { .. }) {
                findings.push("deffuant-opinion runs the bounded-confidence mode".into());
            }
            // Mixing inside (0, 1/2] is already a hard scenario rule for
            // opinion mode; nothing further to pin here.
        }
        SuiteName::Custom => {
            // Informational only: report which named hypotheses this config
            // would satisfy or break. Reuse the stricter checks.
            if regime == Regime::Unclassified {
                findings.push(
                    "mixing support straddles (0, 1): neither contractive nor expansive \
                     guarantees apply"
                        .into(),
                );
            }
            if !covers {
                findings.push("pair support does not cover every unordered pair".into());
            }
        }
    }
    findings
}

/// Checks that the schedule family guarantees connectivity infinitely often.
/// Random families with positive edge probability qualify (flagged, not
/// proven); deterministic families must exhibit a connected member.
fn connectivity_finding(config: &ScenarioConfig) -> Option<String> {
    let ok = match &config.graph {
        GraphConfig::Complete => true,
        GraphConfig::RandomErdosRenyi { p } => *p > 0.0,
        GraphConfig::StaticErdosRenyi {
            require_connected,
            p,
        } => *require_connected && *p > 0.0,
        _ => match config.deterministic_schedule() {
            Some(SocialGraphSchedule::Static(edges)) => is_connected(&edges),
            Some(SocialGraphSchedule::Periodic(phases)) => phases.iter().any(is_connected),
            Some(SocialGraphSchedule::Switching(phases)) => {
                phases.iter().any(|(e, _)| is_connected(e))
            }
            _ => false,
        },
    };
    (!ok).then(|| {
        "equal-wealth requires a schedule that is connected infinitely often \
         (static connected graph, a connected periodic/switching member, or a \
         positive-probability random graph)"
            .to_string()
    })
}

/// Checks that the schedule is complete infinitely often.
fn completeness_finding(config: &ScenarioConfig) -> Option<String> {
    let ok = match &config.graph {
        GraphConfig::Complete => true,
        GraphConfig::RandomErdosRenyi { p } => *p >= 1.0,
        GraphConfig::StaticErdosRenyi { p, .. } => *p >= 1.0,
        _ => match config.deterministic_schedule() {
            Some(SocialGraphSchedule::Static(edges)) => is_complete(&edges),
            Some(SocialGraphSchedule::Periodic(phases)) => phases.iter().any(is_complete),
            Some(SocialGraphSchedule::Switching(phases)) => {
                phases.iter().any(|(e, _)| is_complete(e))
            }
            _ => false,
        },
    };
    (!ok).then(|| "frozen-order requires a schedule that is complete infinitely often".to_string())
}

pub mod presets {
    //! Canonical suite constructors; the shipped config files mirror these.

    use moneta_core::config::{
        CreditLimitsConfig, InitialMoneyConfig, MixtureComponentConfig, ModeConfig, MuConfig,
        MuDistConfig, PairsConfig, RegimeConfig,
    };

    use super::*;

    /// Consensus scenario: 50 agents on a connected random graph,
    /// contractive mixing, generous credit.
    pub fn equal_wealth(seeds: Vec<u64>) -> ScenarioSuite {
        let config = ScenarioConfig {
            n: 50,
            mode: ModeConfig::Money,
            initial_money: InitialMoneyConfig::IidUniform { lo: -1.0, hi: 1.0 },
            credit_limits: Some(CreditLimitsConfig::Constant { value: 1e6 }),
            graph: GraphConfig::StaticErdosRenyi {
                p: 0.2,
                require_connected: true,
            },
            pairs: PairsConfig::AllPairs,
            mu: MuConfig {
                declared_regime: RegimeConfig::Contractive,
                dist: MuDistConfig::Uniform { lo: 0.1, hi: 0.9 },
            },
            steps: 500_000,
            seed: seeds.first().copied().unwrap_or(1),
            consensus_epsilon: 1e-6,
            stop_on_consensus: true,
            record_every: 100,
        };
        ScenarioSuite {
            name: SuiteName::EqualWealth,
            config,
            seeds,
            acceptance: AcceptanceThresholds::default(),
            warnings: Vec::new(),
        }
    }

    /// Order-stability scenario: 10 agents, complete graph, expansive
    /// mixing, tight credit floors that eventually freeze the ranking.
    pub fn frozen_order(seeds: Vec<u64>) -> ScenarioSuite {
        let config = ScenarioConfig {
            n: 10,
            mode: ModeConfig::Money,
            initial_money: InitialMoneyConfig::IidUniform { lo: -1.0, hi: 1.0 },
            credit_limits: Some(CreditLimitsConfig::Constant { value: 10.0 }),
            graph: GraphConfig::Complete,
            pairs: PairsConfig::AllPairs,
            mu: MuConfig {
                declared_regime: RegimeConfig::Expansive,
                dist: MuDistConfig::Mixture {
                    components: vec![
                        MixtureComponentConfig {
                            weight: 0.5,
                            dist: MuDistConfig::Uniform { lo: 1.0, hi: 1.5 },
                        },
                        MixtureComponentConfig {
                            weight: 0.5,
                            dist: MuDistConfig::Uniform {
                                lo: -0.5,
                                hi: -0.01,
                            },
                        },
                    ],
                },
            },
            steps: 100_000,
            seed: seeds.first().copied().unwrap_or(1),
            consensus_epsilon: 1e-6,
            stop_on_consensus: false,
            record_every: 100,
        };
        ScenarioSuite {
            name: SuiteName::FrozenOrder,
            config,
            seeds,
            acceptance: AcceptanceThresholds {
                min_passing_seeds: Some(18),
                ..AcceptanceThresholds::default()
            },
            warnings: Vec::new(),
        }
    }

    /// Bounded-confidence scenario: everyone inside one confidence band
    /// converges to the initial mean.
    pub fn deffuant_opinion(seeds: Vec<u64>) -> ScenarioSuite {
        let config = ScenarioConfig {
            n: 20,
            mode: ModeConfig::Opinion {
                confidence_threshold: 1.0,
            },
            initial_money: InitialMoneyConfig::IidUniform { lo: 0.0, hi: 1.0 },
            credit_limits: None,
            graph: GraphConfig::Complete,
            pairs: PairsConfig::AllPairs,
            mu: MuConfig {
                declared_regime: RegimeConfig::Contractive,
                dist: MuDistConfig::Uniform { lo: 0.1, hi: 0.5 },
            },
            steps: 20_000,
            seed: seeds.first().copied().unwrap_or(1),
            consensus_epsilon: 1e-6,
            stop_on_consensus: true,
            record_every: 10,
        };
        ScenarioSuite {
            name: SuiteName::DeffuantOpinion,
            config,
            seeds,
            acceptance: AcceptanceThresholds::default(),
            warnings: Vec::new(),
        }
    }
}
