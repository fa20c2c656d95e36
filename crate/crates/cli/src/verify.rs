//! The `verify` audit: re-runs every seed of a suite while hard-checking
//! per-step invariants (conservation, credit floors, the potential-drop
//! identity and its sign law) plus the suite-specific outcome checks
//! (consensus for equal-wealth and deffuant-opinion, gap growth factors and
//! tail rank stability for frozen-order).

use moneta_core::config::ModeConfig;
use moneta_core::engine::Simulation;
use moneta_core::metrics::{potential, rank_change_events, RankSnapshot};
use moneta_core::scalar::SimScalar;
use moneta_core::Rational;

use crate::suite::{ScenarioSuite, SuiteName};
use crate::CliError;

/// One named check aggregated over all seeds.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome facts for one seed.
#[derive(Debug, Clone)]
pub struct SeedReport {
    pub seed: u64,
    pub steps_run: u64,
    pub total_applied: u64,
    pub consensus_time: Option<u64>,
    pub final_max_gap: f64,
    /// Spread over agents strictly above their credit floor.
    pub final_above_floor_gap: f64,
    /// max_i |m_i - total/n| at the end of the run.
    pub final_mean_deviation: f64,
    pub tail_applied: u64,
    pub tail_rank_events: usize,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suite: SuiteName,
    pub checks: Vec<CheckResult>,
    pub seeds: Vec<SeedReport>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("suite: {}\n", self.suite.as_str()));
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        for seed in &self.seeds {
            out.push_str(&format!(
                "seed {:>4}: steps {:>8}  applied {:>8}  consensus {}  final gap {:.3e}  tail applied {:>6}  tail rank events {}\n",
                seed.seed,
                seed.steps_run,
                seed.total_applied,
                match seed.consensus_time {
                    Some(t) => format!("@{t}"),
                    None => "never".to_string(),
                },
                seed.final_max_gap,
                seed.tail_applied,
                seed.tail_rank_events,
            ));
        }
        for check in &self.checks {
            out.push_str(&format!(
                "{}: {} — {}\n",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.detail
            ));
        }
        out.push_str(if self.passed() {
            "verify: all checks passed\n"
        } else {
            "verify: FAILED\n"
        });
        out
    }
}

/// Worst cases and violation counts accumulated across seeds.
#[derive(Debug, Default)]
struct Accumulator {
    steps: u64,
    applied: u64,
    conservation_worst: f64,
    conservation_violations: u64,
    floor_violations: u64,
    residual_worst: f64,
    residual_violations: u64,
    sign_violations: u64,
    growth_worst: f64,
    growth_violations: u64,
    gap_monotone_violations: u64,
    gap_monotone_worst: f64,
}

pub fn verify(suite: &ScenarioSuite, exact: bool) -> Result<VerifyReport, CliError> {
    if exact {
        verify_generic::<Rational>(suite)
    } else {
        verify_generic::<f64>(suite)
    }
}

fn verify_generic<S: SimScalar>(suite: &ScenarioSuite) -> Result<VerifyReport, CliError> {
    let mut acc = Accumulator::default();
    let mut seed_reports = Vec::with_capacity(suite.seeds.len());
    let tol = suite.acceptance.residual_tolerance;

    for &seed in &suite.seeds {
        let mut config = suite.config.clone();
        config.seed = seed;
        let tail_start =
            config.steps - (config.steps as f64 * suite.acceptance.tail_fraction) as u64;

        let mut sim: Simulation<S> = Simulation::new(&config)?;
        let total = sim.state().total().clone();
        let total_f = total.approx_f64();
        let money_mode = matches!(config.mode, ModeConfig::Money);
        let frozen_order = suite.name == SuiteName::FrozenOrder;
        let equal_wealth = suite.name == SuiteName::EqualWealth;

        let mut tail_snapshots: Vec<RankSnapshot<S>> = Vec::new();
        let mut tail_applied = 0u64;
        let mut steps_run = 0u64;

        for _ in 0..config.steps {
            let z_before = potential(sim.state().money());
            let gap_before = sim.state().max_gap(false);
            let (rec, before) = sim.step_with_before();
            acc.steps += 1;
            steps_run += 1;

            // Conservation against the constructed total.
            let sum = sim
                .state()
                .money()
                .iter()
                .fold(S::zero(), |a, m| a + m.clone());
            let drift = (sum - total.clone()).abs().approx_f64();
            let rel = drift / total_f.abs().max(1.0);
            acc.conservation_worst = acc.conservation_worst.max(rel);
            let conserved = if S::EXACT { drift == 0.0 } else { rel <= tol };
            if !conserved {
                acc.conservation_violations += 1;
            }

            // Credit floors.
            if money_mode {
                let below = sim
                    .state()
                    .money()
                    .iter()
                    .zip(sim.state().credit_limits())
                    .any(|(m, d)| *m < -d.clone());
                if below {
                    acc.floor_violations += 1;
                }
            }

            if rec.outcome.accepted() {
                acc.applied += 1;
                let z_scale = z_before.approx_f64().max(1.0);
                let res_rel = rec.z_drop_residual.approx_f64() / z_scale;
                acc.residual_worst = acc.residual_worst.max(res_rel);
                let residual_ok = if S::EXACT {
                    rec.z_drop_residual.is_zero()
                } else {
                    res_rel <= tol
                };
                if !residual_ok {
                    acc.residual_violations += 1;
                }

                // Sign law on the audited drop.
                let drop = (z_before - rec.z.clone()).approx_f64();
                let guard = if S::EXACT { 0.0 } else { 1e-12 * z_scale };
                let mu_f = rec.mu.approx_f64();
                let sign_ok = if mu_f > 0.0 && mu_f < 1.0 {
                    drop >= -guard
                } else if !(0.0..=1.0).contains(&mu_f) {
                    drop <= guard
                } else {
                    drop.abs() <= guard.max(f64::EPSILON)
                };
                if !sign_ok {
                    acc.sign_violations += 1;
                }

                // Transacting pair's gap scales by exactly |1 - 2 mu|.
                if frozen_order {
                    let (i, j) = rec.pair;
                    let after = sim.state().money();
                    if S::EXACT {
                        let one = S::one();
                        let two = S::from_config(2.0);
                        let factor = (one - two * rec.mu.clone()).abs();
                        let expected = factor * (before[i].clone() - before[j].clone()).abs();
                        let got = (after[i].clone() - after[j].clone()).abs();
                        if got != expected {
                            acc.growth_violations += 1;
                        }
                    } else {
                        let gap_b = (before[i].approx_f64() - before[j].approx_f64()).abs();
                        let gap_a = (after[i].approx_f64() - after[j].approx_f64()).abs();
                        let expected = (1.0 - 2.0 * mu_f).abs() * gap_b;
                        // Hybrid bound: a stored float state resolves a gap
                        // only to ~ulp of the money scale, so tiny gaps get
                        // the absolute floor.
                        let err = (gap_a - expected).abs() / expected.max(1.0);
                        acc.growth_worst = acc.growth_worst.max(err);
                        if err > tol {
                            acc.growth_violations += 1;
                        }
                    }
                }

                // In the contractive consensus scenario the overall spread
                // never grows through an applied step (float slack only).
                if equal_wealth {
                    let gap_after = rec.max_gap.clone();
                    let slack = if S::EXACT {
                        0.0
                    } else {
                        let scale = gap_before.approx_f64().abs().max(1.0);
                        8.0 * f64::EPSILON * scale
                    };
                    let increase = gap_after.approx_f64() - gap_before.approx_f64();
                    acc.gap_monotone_worst = acc.gap_monotone_worst.max(increase);
                    if increase > slack {
                        acc.gap_monotone_violations += 1;
                    }
                }
            }

            if rec.t >= tail_start {
                if rec.outcome.accepted() {
                    tail_applied += 1;
                }
                if let Some(snap) = rec.sorted_money {
                    tail_snapshots.push(snap);
                }
            }

            if config.stop_on_consensus && sim.consensus_time().is_some() {
                break;
            }
        }

        let rank_tol = S::from_config(suite.acceptance.rank_tolerance);
        let tail_rank_events = rank_change_events(&tail_snapshots, &rank_tol).len();
        let mean = total_f / config.n as f64;
        let final_mean_deviation = sim
            .state()
            .money()
            .iter()
            .map(|m| (m.approx_f64() - mean).abs())
            .fold(0.0f64, f64::max);
        seed_reports.push(SeedReport {
            seed,
            steps_run,
            total_applied: sim.total_applied(),
            consensus_time: sim.consensus_time(),
            final_max_gap: sim.state().max_gap(false).approx_f64(),
            final_above_floor_gap: sim.state().max_gap(true).approx_f64(),
            final_mean_deviation,
            tail_applied,
            tail_rank_events,
        });
    }

    let checks = build_checks::<S>(suite, &acc, &seed_reports);
    Ok(VerifyReport {
        suite: suite.name,
        checks,
        seeds: seed_reports,
        warnings: suite.warnings.clone(),
    })
}

fn build_checks<S: SimScalar>(
    suite: &ScenarioSuite,
    acc: &Accumulator,
    seeds: &[SeedReport],
) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let money_mode = matches!(suite.config.mode, ModeConfig::Money);

    checks.push(CheckResult {
        name: "conservation".into(),
        passed: acc.conservation_violations == 0,
        detail: format!(
            "{} violations over {} steps, worst |sum - C| / max(1, |C|) = {:.3e}",
            acc.conservation_violations, acc.steps, acc.conservation_worst
        ),
    });
    if money_mode {
        checks.push(CheckResult {
            name: "credit-floors".into(),
            passed: acc.floor_violations == 0,
            detail: format!(
                "{} violations over {} steps",
                acc.floor_violations, acc.steps
            ),
        });
    }
    checks.push(CheckResult {
        name: "drop-identity-residual".into(),
        passed: acc.residual_violations == 0,
        detail: format!(
            "{} violations over {} applied steps, worst residual / max(1, Z) = {:.3e}{}",
            acc.residual_violations,
            acc.applied,
            acc.residual_worst,
            if S::EXACT {
                " (exact: residuals must be identically zero)"
            } else {
                ""
            }
        ),
    });
    checks.push(CheckResult {
        name: "drop-sign-law".into(),
        passed: acc.sign_violations == 0,
        detail: format!(
            "{} violations over {} applied steps",
            acc.sign_violations, acc.applied
        ),
    });

    match suite.name {
        SuiteName::EqualWealth | SuiteName::DeffuantOpinion => {
            let eps = suite.consensus_epsilon();
            let mut failed = Vec::new();
            for (k, seed) in seeds.iter().enumerate() {
                let reached = seed.consensus_time.is_some() && seed.final_max_gap <= eps;
                if !reached {
                    failed.push(suite.seeds[k]);
                }
            }
            checks.push(CheckResult {
                name: "consensus".into(),
                passed: failed.is_empty(),
                detail: if failed.is_empty() {
                    format!(
                        "all {} seeds reached spread <= {eps:.1e} within {} steps",
                        seeds.len(),
                        suite.config.steps
                    )
                } else {
                    format!("seeds without consensus: {failed:?}")
                },
            });
            // Conservation forces the consensus value to the mean.
            checks.push(check_final_mean(suite, seeds));
            if suite.name == SuiteName::EqualWealth {
                checks.push(CheckResult {
                    name: "max-gap-monotone".into(),
                    passed: acc.gap_monotone_violations == 0,
                    detail: format!(
                        "{} increases over applied steps, worst increase {:.3e}",
                        acc.gap_monotone_violations, acc.gap_monotone_worst
                    ),
                });
            }
        }
        SuiteName::FrozenOrder => {
            checks.push(CheckResult {
                name: "growth-factor".into(),
                passed: acc.growth_violations == 0,
                detail: format!(
                    "{} violations over {} applied steps, worst |gap' - |1-2mu| gap| / max(1, expected) = {:.3e}",
                    acc.growth_violations, acc.applied, acc.growth_worst
                ),
            });
            let stable = seeds.iter().filter(|s| s.tail_rank_events == 0).count();
            let need = suite.min_passing_seeds();
            checks.push(CheckResult {
                name: "tail-rank-stability".into(),
                passed: stable >= need,
                detail: format!(
                    "{stable}/{} seeds with zero rank changes in the final {:.0}% of steps (need {need}); tail applied counts {:?}",
                    seeds.len(),
                    suite.acceptance.tail_fraction * 100.0,
                    seeds.iter().map(|s| s.tail_applied).collect::<Vec<_>>()
                ),
            });
        }
        SuiteName::Custom => {}
    }
    checks
}

/// Every final entry must sit within epsilon of total / n.
fn check_final_mean(suite: &ScenarioSuite, seeds: &[SeedReport]) -> CheckResult {
    let eps = suite.consensus_epsilon();
    let worst = seeds
        .iter()
        .map(|s| s.final_mean_deviation)
        .fold(0.0f64, f64::max);
    CheckResult {
        name: "consensus-at-mean".into(),
        passed: worst <= eps,
        detail: format!(
            "conserved sum pins the consensus value to total/n; worst |entry - total/n| = {worst:.3e} vs epsilon {eps:.1e}"
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{presets, AcceptanceThresholds, SuiteName};

    fn small_equal_wealth() -> ScenarioSuite {
        let mut suite = presets::equal_wealth(vec![1, 2, 3]);
        suite.config.n = 8;
        suite.config.steps = 30_000;
        suite
    }

    #[test]
    fn equal_wealth_suite_verifies() {
        let report = verify(&small_equal_wealth(), false).unwrap();
        assert!(report.passed(), "{}", report.render());
        assert!(report.checks.iter().any(|c| c.name == "consensus"));
        assert!(report.checks.iter().any(|c| c.name == "max-gap-monotone"));
        assert_eq!(report.seeds.len(), 3);
        for seed in &report.seeds {
            assert!(seed.consensus_time.is_some());
        }
        let rendered = report.render();
        assert!(rendered.contains("PASS: conservation"));
        assert!(rendered.contains("all checks passed"));
    }

    #[test]
    fn starved_step_budget_fails_consensus_check() {
        let mut suite = small_equal_wealth();
        suite.config.steps = 25;
        let report = verify(&suite, false).unwrap();
        assert!(!report.passed());
        let consensus = report
            .checks
            .iter()
            .find(|c| c.name == "consensus")
            .unwrap();
        assert!(!consensus.passed);
        assert!(report.render().contains("verify: FAILED"));
    }

    #[test]
    fn frozen_order_mechanics_with_coarse_rank_tolerance() {
        // Physics note: the deep rank freeze at 1e-12 needs millions of
        // steps; this exercises the frozen-order checks (growth factor,
        // tail counting) at a tolerance the short horizon does satisfy.
        let mut suite = presets::frozen_order(vec![1, 2]);
        suite.config.steps = 20_000;
        suite.acceptance = AcceptanceThresholds {
            rank_tolerance: 1.0,
            min_passing_seeds: Some(2),
            ..AcceptanceThresholds::default()
        };
        let report = verify(&suite, false).unwrap();
        assert!(report.passed(), "{}", report.render());
        let growth = report
            .checks
            .iter()
            .find(|c| c.name == "growth-factor")
            .unwrap();
        assert!(growth.passed);
        let tail = report
            .checks
            .iter()
            .find(|c| c.name == "tail-rank-stability")
            .unwrap();
        assert!(tail.passed);
        for seed in &report.seeds {
            assert!(seed.total_applied > 0);
        }
    }

    #[test]
    fn exact_backend_verifies_with_zero_residuals() {
        let mut suite = presets::equal_wealth(vec![5]);
        suite.name = SuiteName::Custom;
        suite.config.n = 4;
        suite.config.steps = 300;
        suite.config.stop_on_consensus = false;
        // Dyadic mixing bounds keep the exact run cheap.
        suite.config.mu = moneta_core::config::MuConfig {
            declared_regime: moneta_core::config::RegimeConfig::Contractive,
            dist: moneta_core::config::MuDistConfig::Uniform {
                lo: 0.125,
                hi: 0.875,
            },
        };
        suite.config.graph = moneta_core::config::GraphConfig::Complete;
        let report = verify(&suite, true).unwrap();
        assert!(report.passed(), "{}", report.render());
        let residual = report
            .checks
            .iter()
            .find(|c| c.name == "drop-identity-residual")
            .unwrap();
        assert!(residual.detail.contains("exact"));
    }

    #[test]
    fn custom_suite_reports_warnings_and_core_checks_only() {
        let mut suite = presets::equal_wealth(vec![9]);
        suite.name = SuiteName::Custom;
        suite.config.steps = 500;
        suite.config.stop_on_consensus = false;
        suite.warnings = vec!["synthetic warning".into()];
        let report = verify(&suite, false).unwrap();
        assert!(report.passed(), "{}", report.render());
        assert!(report.checks.iter().all(|c| c.name != "consensus"));
        assert!(report.render().contains("synthetic warning"));
    }
}
