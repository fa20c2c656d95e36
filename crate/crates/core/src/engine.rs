//! The step loop and replica orchestration.
//!
//! Per step `t`: draw the candidate pair, test social connection at `t`,
//! draw the mixing value, run the gated transaction, then audit the step
//! (potential, drop-identity residual, spread) into a [`StepRecord`]. Time
//! advances on every step — rejected transactions and absent edges consume
//! the step like applied ones.
//!
//! A trajectory is a pure function of `(config, seed)`. Replicas only differ
//! in seed and never share state, so sweeps fan out freely.

use thiserror::Error;

use crate::config::{
    ConfigError, CreditLimitsConfig, GraphConfig, InitialMoneyConfig, ModeConfig, ScenarioConfig,
};
use crate::graphs::{sample_static_erdos_renyi, SocialGraphSchedule};
use crate::metrics::{drop_identity_with, potential, rank_snapshot, RankSnapshot};
use crate::model::{InteractionMode, ModelError, TransactionOutcome, WealthState};
use crate::rng::{RunRng, StreamTag};
use crate::scalar::SimScalar;
use crate::stochastic::{MixingDistribution, PairSelectionDistribution};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model error during run: {0}")]
    Model(#[from] ModelError),
}

/// Audit log of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<S> {
    pub t: u64,
    /// The drawn candidate pair, canonical (low, high).
    pub pair: (usize, usize),
    /// Whether the pair was socially connected at `t`.
    pub edge_present: bool,
    pub mu: S,
    pub outcome: TransactionOutcome<S>,
    /// Potential after the step.
    pub z: S,
    /// Drop-identity residual for this step (zero for rejected steps).
    pub z_drop_residual: S,
    /// Plain spread max - min after the step.
    pub max_gap: S,
    /// Sorted-money snapshot, present every `record_every` steps.
    pub sorted_money: Option<RankSnapshot<S>>,
}

/// A finished run: configuration, per-step records, final state, and
/// headline outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub config: ScenarioConfig,
    pub records: Vec<StepRecord<S>>,
    pub final_state: WealthState<S>,
    /// First step index whose post-step spread was at most the configured
    /// consensus epsilon.
    pub consensus_time: Option<u64>,
    pub total_applied: u64,
}

/// Per-step hard-check tolerances used by audited runs.
#[derive(Debug, Clone)]
pub struct AuditTolerances {
    /// Bound on residual / max(1, Z_before).
    pub residual_rel: f64,
    /// Bound on |sum - C| / max(1, |C|).
    pub conservation_rel: f64,
    /// Allowance for the drop sign check in float mode; the drop is a
    /// difference of two float potentials and carries evaluation noise.
    /// Exact backends use zero regardless.
    pub sign_guard_rel: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        AuditTolerances {
            residual_rel: 1e-9,
            conservation_rel: 1e-9,
            sign_guard_rel: 1e-12,
        }
    }
}

/// Worst-case audit statistics over a run; `violations` counts hard-check
/// failures (zero means the run passed).
#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub steps: u64,
    pub applied: u64,
    /// max residual / max(1, Z_before) over applied steps.
    pub worst_residual_rel: f64,
    /// max |sum - C| / max(1, |C|) over all steps.
    pub worst_conservation_rel: f64,
    pub residual_violations: u64,
    pub conservation_violations: u64,
    pub floor_violations: u64,
    pub sign_violations: u64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.residual_violations == 0
            && self.conservation_violations == 0
            && self.floor_violations == 0
            && self.sign_violations == 0
    }
}

/// One live run stepping a state through its schedule.
pub struct Simulation<S> {
    config: ScenarioConfig,
    state: WealthState<S>,
    mode: InteractionMode<S>,
    schedule: SocialGraphSchedule,
    pairs: PairSelectionDistribution,
    mu_dist: MixingDistribution,
    pair_stream: RunRng,
    mu_stream: RunRng,
    graph_stream: RunRng,
    consensus_epsilon: S,
    t: u64,
    consensus_time: Option<u64>,
    total_applied: u64,
}

impl<S: SimScalar> Simulation<S> {
    /// Validates the configuration, materializes the schedule, and samples
    /// the initial state. Fails without stepping on any violation.
    pub fn new(config: &ScenarioConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let run = RunRng::from_seed(config.seed);
        let graph_stream = run.substream(StreamTag::GraphDraw);

        let schedule = match (&config.graph, config.deterministic_schedule()) {
            (_, Some(schedule)) => schedule,
            (GraphConfig::RandomErdosRenyi { p }, None) => {
                SocialGraphSchedule::RandomErdosRenyi { n: config.n, p: *p }
            }
            (
                GraphConfig::StaticErdosRenyi {
                    p,
                    require_connected,
                },
                None,
            ) => {
                let set = sample_static_erdos_renyi(
                    config.n,
                    *p,
                    *require_connected,
                    &graph_stream,
                    10_000,
                )
                .ok_or_else(|| {
                    ConfigError::Violations(vec![format!(
                        "graph: no connected sample found for p = {p} within 10000 attempts"
                    )])
                })?;
                SocialGraphSchedule::Static(set)
            }
            _ => unreachable!("validated configs always yield a schedule"),
        };

        let pairs = config
            .build_pairs()
            .map_err(|e| ConfigError::Violations(vec![format!("pairs: {e}")]))?;
        let mu_dist = config
            .build_mu()
            .map_err(|e| ConfigError::Violations(vec![format!("mu: {e}")]))?;

        let money = sample_initial_money::<S>(config, &run);
        let limits = credit_limits::<S>(config);
        let state = WealthState::new(money, limits).map_err(|e| match e {
            ModelError::BelowCreditFloor(i) => EngineError::Config(ConfigError::Violations(vec![
                format!("initial money sample of agent {i} violates its credit floor; transactions are never clamped, adjust the law or the limits"),
            ])),
            other => EngineError::Model(other),
        })?;

        let mode = match &config.mode {
            ModeConfig::Money => InteractionMode::MoneyTransfer,
            ModeConfig::Opinion {
                confidence_threshold,
            } => InteractionMode::BoundedConfidence {
                confidence_threshold: S::from_config(*confidence_threshold),
            },
        };

        Ok(Simulation {
            state,
            mode,
            schedule,
            pairs,
            mu_dist,
            pair_stream: run.substream(StreamTag::PairDraw),
            mu_stream: run.substream(StreamTag::MixingDraw),
            graph_stream,
            consensus_epsilon: S::from_config(config.consensus_epsilon),
            t: 0,
            consensus_time: None,
            total_applied: 0,
            config: config.clone(),
        })
    }

    pub fn state(&self) -> &WealthState<S> {
        &self.state
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn consensus_time(&self) -> Option<u64> {
        self.consensus_time
    }

    pub fn total_applied(&self) -> u64 {
        self.total_applied
    }

    /// Runs one step and returns its record. Also hands back the pre-step
    /// money vector so audits can recheck the step without cloning twice.
    pub fn step_with_before(&mut self) -> (StepRecord<S>, Vec<S>) {
        let t = self.t;
        let pair = self.pairs.sample_pair(&mut self.pair_stream.at_step(t));
        let edge_present = self.schedule.edge_present(t, pair, &self.graph_stream);
        let mu: S = self.mu_dist.sample(&mut self.mu_stream.at_step(t));

        let before = self.state.money().to_vec();
        let z_before = potential(&before);

        let outcome = self
            .state
            .apply_transaction(pair.0, pair.1, &mu, edge_present, &self.mode)
            .expect("validated config cannot produce model usage errors");
        if outcome.accepted() {
            self.total_applied += 1;
        }

        let z_after = potential(self.state.money());
        let report = drop_identity_with(
            z_before,
            z_after.clone(),
            &before,
            self.state.money(),
            &mu,
            outcome.accepted(),
        );

        let max_gap = self.state.max_gap(false);
        if self.consensus_time.is_none() && max_gap <= self.consensus_epsilon {
            self.consensus_time = Some(t);
        }

        let sorted_money = if t.is_multiple_of(self.config.record_every) {
            Some(rank_snapshot(self.state.money()))
        } else {
            None
        };

        let record = StepRecord {
            t,
            pair,
            edge_present,
            mu,
            outcome,
            z: z_after,
            z_drop_residual: report.residual,
            max_gap,
            sorted_money,
        };
        self.t += 1;
        (record, before)
    }

    pub fn step(&mut self) -> StepRecord<S> {
        self.step_with_before().0
    }

    fn should_stop(&self) -> bool {
        self.config.stop_on_consensus && self.consensus_time.is_some()
    }

    fn into_trajectory(self, records: Vec<StepRecord<S>>) -> Trajectory<S> {
        Trajectory {
            config: self.config,
            records,
            final_state: self.state,
            consensus_time: self.consensus_time,
            total_applied: self.total_applied,
        }
    }
}

/// Executes up to `config.steps` steps (early exit on consensus when
/// configured). Deterministic in `(config, seed)`.
pub fn run<S: SimScalar>(config: &ScenarioConfig) -> Result<Trajectory<S>, EngineError> {
    let mut sim = Simulation::new(config)?;
    let mut records = Vec::with_capacity(config.steps.min(1 << 20) as usize);
    for _ in 0..config.steps {
        records.push(sim.step());
        if sim.should_stop() {
            break;
        }
    }
    Ok(sim.into_trajectory(records))
}

/// Like [`run`] but hard-checks conservation, credit floors, the identity
/// residual, and the drop sign law at every step.
pub fn run_audited<S: SimScalar>(
    config: &ScenarioConfig,
    tol: &AuditTolerances,
) -> Result<(Trajectory<S>, AuditReport), EngineError> {
    let mut sim: Simulation<S> = Simulation::new(config)?;
    let total = sim.state.total().clone();
    let money_mode = matches!(config.mode, ModeConfig::Money);
    let mut report = AuditReport::default();
    let mut records = Vec::new();

    for _ in 0..config.steps {
        let z_before = potential(sim.state.money());
        let (record, _) = sim.step_with_before();
        report.steps += 1;

        // Conservation against the constructed total.
        let sum = sim
            .state
            .money()
            .iter()
            .fold(S::zero(), |a, m| a + m.clone());
        let drift = (sum - total.clone()).abs().approx_f64();
        let scale = total.approx_f64().abs().max(1.0);
        let rel = drift / scale;
        report.worst_conservation_rel = report.worst_conservation_rel.max(rel);
        let conserved = if S::EXACT {
            drift == 0.0
        } else {
            rel <= tol.conservation_rel
        };
        if !conserved {
            report.conservation_violations += 1;
        }

        // Credit floors (money mode only; opinion mode never consults them).
        if money_mode {
            let below = sim
                .state
                .money()
                .iter()
                .zip(sim.state.credit_limits())
                .any(|(m, d)| *m < -d.clone());
            if below {
                report.floor_violations += 1;
            }
        }

        if record.outcome.accepted() {
            report.applied += 1;
            let z_scale = z_before.approx_f64().max(1.0);
            let res_rel = record.z_drop_residual.approx_f64() / z_scale;
            report.worst_residual_rel = report.worst_residual_rel.max(res_rel);
            let residual_ok = if S::EXACT {
                record.z_drop_residual.is_zero()
            } else {
                res_rel <= tol.residual_rel
            };
            if !residual_ok {
                report.residual_violations += 1;
            }

            // Sign law: drop >= 0 for mu in (0, 1), <= 0 for mu > 1 or mu < 0.
            let drop = z_before - record.z.clone();
            let guard = if S::EXACT {
                0.0
            } else {
                tol.sign_guard_rel * z_scale
            };
            let mu_f = record.mu.approx_f64();
            let drop_f = drop.approx_f64();
            let sign_ok = if mu_f > 0.0 && mu_f < 1.0 {
                drop_f >= -guard
            } else if !(0.0..=1.0).contains(&mu_f) {
                drop_f <= guard
            } else {
                // mu == 1 leaves the potential unchanged up to noise.
                drop_f.abs() <= guard.max(f64::EPSILON)
            };
            if !sign_ok {
                report.sign_violations += 1;
            }
        }

        records.push(record);
        if sim.should_stop() {
            break;
        }
    }

    Ok((sim.into_trajectory(records), report))
}

/// Runs one trajectory per seed (config's own seed is replaced). Results are
/// in seed order and identical to running each seed alone; replicas share
/// nothing but the immutable configuration.
pub fn run_replicas<S: SimScalar>(
    config: &ScenarioConfig,
    seeds: &[u64],
) -> Result<Vec<Trajectory<S>>, EngineError> {
    // Validate once up front so a bad config fails before any work.
    config.validate()?;
    let parallelism = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1);
    if seeds.len() <= 1 || parallelism == 1 {
        return seeds
            .iter()
            .map(|&seed| {
                let mut cfg = config.clone();
                cfg.seed = seed;
                run::<S>(&cfg)
            })
            .collect();
    }

    let mut slots: Vec<Option<Result<Trajectory<S>, EngineError>>> =
        (0..seeds.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = seeds.len().div_ceil(parallelism);
        for (seed_chunk, slot_chunk) in seeds.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (&seed, slot) in seed_chunk.iter().zip(slot_chunk.iter_mut()) {
                    let mut cfg = config.clone();
                    cfg.seed = seed;
                    *slot = Some(run::<S>(&cfg));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect()
}

fn sample_initial_money<S: SimScalar>(config: &ScenarioConfig, run: &RunRng) -> Vec<S> {
    let mut cell = run.substream(StreamTag::InitDraw).at_step(0);
    match &config.initial_money {
        InitialMoneyConfig::Explicit { values } => {
            values.iter().map(|&v| S::from_config(v)).collect()
        }
        InitialMoneyConfig::IidUniform { lo, hi } => (0..config.n)
            .map(|_| {
                let u = cell.next_unit(S::unit_draw_bits());
                let lo_s = S::from_config(*lo);
                let hi_s = S::from_config(*hi);
                lo_s.clone() + (hi_s - lo_s) * S::from_config(u)
            })
            .collect(),
        InitialMoneyConfig::IidNormal { mean, sd } => (0..config.n)
            .map(|_| {
                // Box-Muller in f64, then embedded into the backend; the
                // exact backend sees the float's dyadic value losslessly.
                let u1 = 1.0 - cell.next_unit(53);
                let u2 = cell.next_unit(53);
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                S::from_config(mean + sd * z)
            })
            .collect(),
    }
}

fn credit_limits<S: SimScalar>(config: &ScenarioConfig) -> Vec<S> {
    match &config.credit_limits {
        Some(CreditLimitsConfig::Constant { value }) => {
            vec![S::from_config(*value); config.n]
        }
        Some(CreditLimitsConfig::Explicit { values }) => {
            values.iter().map(|&v| S::from_config(v)).collect()
        }
        // Opinion mode: carried but never consulted.
        None => vec![S::one(); config.n],
    }
}
