//! Agent state and the two pairwise interaction rules.
//!
//! Money mode: a selected pair `(i, j)` moves fraction `mu` of their wealth
//! gap toward (or past, or away from) each other, gated by per-agent credit
//! floors `money[i] >= -credit_limits[i]` and conserving the total exactly.
//! Opinion mode: the same update gated instead by a confidence threshold on
//! the pair's distance.
//!
//! A transaction that would breach a credit floor is rejected whole — never
//! clamped — because clamping destroys the exact potential-drop identity the
//! audits rely on.

use thiserror::Error;

use crate::scalar::SimScalar;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("need at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("money vector has length {money} but credit limits have length {limits}")]
    LengthMismatch { money: usize, limits: usize },
    #[error("credit limit of agent {0} must be positive and finite")]
    InvalidCreditLimit(usize),
    #[error("agent {0} starts below its credit floor")]
    BelowCreditFloor(usize),
    #[error("non-finite money value for agent {0}")]
    NonFiniteMoney(usize),
    #[error("agent index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("transaction needs two distinct agents, got {0} twice")]
    IdenticalAgents(usize),
    #[error("mixing value must be finite")]
    NonFiniteMixing,
    #[error("proposed update overflows the numeric backend")]
    NonFiniteProposal,
}

/// Which interaction rule gates a transaction.
#[derive(Debug, Clone, PartialEq)]
pub enum InteractionMode<S> {
    /// Credit-floor-gated wealth exchange.
    MoneyTransfer,
    /// Bounded-confidence averaging: interact only if the pair's distance
    /// is at most the threshold.
    BoundedConfidence { confidence_threshold: S },
}

/// Why a transaction did or did not change the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeReason {
    Applied,
    NotSociallyConnected,
    CreditFloorViolated,
    ConfidenceExceeded,
    ZeroMu,
}

impl OutcomeReason {
    /// Stable lowercase name used in trajectory files.
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeReason::Applied => "applied",
            OutcomeReason::NotSociallyConnected => "not-socially-connected",
            OutcomeReason::CreditFloorViolated => "credit-floor-violated",
            OutcomeReason::ConfidenceExceeded => "confidence-exceeded",
            OutcomeReason::ZeroMu => "zero-mu",
        }
    }
}

/// Audit record of one transaction attempt.
///
/// `delta` is the signed amount that moved to agent `i` (and away from `j`);
/// zero whenever the transaction was not applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionOutcome<S> {
    pub reason: OutcomeReason,
    pub delta: S,
}

impl<S: SimScalar> TransactionOutcome<S> {
    pub fn accepted(&self) -> bool {
        self.reason == OutcomeReason::Applied
    }

    fn rejected(reason: OutcomeReason) -> Self {
        TransactionOutcome {
            reason,
            delta: S::zero(),
        }
    }
}

/// The money vector, per-agent credit floors, and the conserved total.
///
/// In opinion mode the same struct holds opinions; credit limits are then
/// carried but never consulted.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthState<S> {
    money: Vec<S>,
    credit_limits: Vec<S>,
    total: S,
}

impl<S: SimScalar> WealthState<S> {
    /// Validates and freezes the conserved total.
    pub fn new(money: Vec<S>, credit_limits: Vec<S>) -> Result<Self, ModelError> {
        if money.len() < 2 {
            return Err(ModelError::TooFewAgents(money.len()));
        }
        if money.len() != credit_limits.len() {
            return Err(ModelError::LengthMismatch {
                money: money.len(),
                limits: credit_limits.len(),
            });
        }
        for (i, m) in money.iter().enumerate() {
            if !m.is_finite_scalar() {
                return Err(ModelError::NonFiniteMoney(i));
            }
        }
        for (i, d) in credit_limits.iter().enumerate() {
            if !d.is_finite_scalar() || *d <= S::zero() {
                return Err(ModelError::InvalidCreditLimit(i));
            }
        }
        for (i, (m, d)) in money.iter().zip(&credit_limits).enumerate() {
            if *m < -d.clone() {
                return Err(ModelError::BelowCreditFloor(i));
            }
        }
        let total = money.iter().fold(S::zero(), |acc, m| acc + m.clone());
        Ok(WealthState {
            money,
            credit_limits,
            total,
        })
    }

    pub fn n(&self) -> usize {
        self.money.len()
    }

    pub fn money(&self) -> &[S] {
        &self.money
    }

    pub fn credit_limits(&self) -> &[S] {
        &self.credit_limits
    }

    /// The conserved sum, recorded at construction.
    pub fn total(&self) -> &S {
        &self.total
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), ModelError> {
        let n = self.n();
        if i >= n {
            return Err(ModelError::IndexOutOfRange { index: i, n });
        }
        if j >= n {
            return Err(ModelError::IndexOutOfRange { index: j, n });
        }
        if i == j {
            return Err(ModelError::IdenticalAgents(i));
        }
        Ok(())
    }

    /// Raw exchange-rule values for the pair, edge indicator assumed true:
    /// `(m_i + mu*(m_j - m_i), m_j + mu*(m_i - m_j))`. Does not modify state.
    pub fn propose_update(&self, i: usize, j: usize, mu: &S) -> Result<(S, S), ModelError> {
        self.check_pair(i, j)?;
        if !mu.is_finite_scalar() {
            return Err(ModelError::NonFiniteMixing);
        }
        let mi = self.money[i].clone();
        let mj = self.money[j].clone();
        let delta_i = mu.clone() * (mj.clone() - mi.clone());
        let delta_j = mu.clone() * (mi.clone() - mj.clone());
        Ok((mi + delta_i, mj + delta_j))
    }

    /// Runs one gated transaction, mutating the pair's entries only when the
    /// outcome is `Applied`.
    ///
    /// Gate order: social connection, zero mixing value, then the
    /// mode-specific gate (confidence threshold in opinion mode, credit
    /// floors in money mode).
    pub fn apply_transaction(
        &mut self,
        i: usize,
        j: usize,
        mu: &S,
        edge_present: bool,
        mode: &InteractionMode<S>,
    ) -> Result<TransactionOutcome<S>, ModelError> {
        self.check_pair(i, j)?;
        if !mu.is_finite_scalar() {
            return Err(ModelError::NonFiniteMixing);
        }
        if !edge_present {
            return Ok(TransactionOutcome::rejected(
                OutcomeReason::NotSociallyConnected,
            ));
        }
        if mu.is_zero() {
            return Ok(TransactionOutcome::rejected(OutcomeReason::ZeroMu));
        }
        if let InteractionMode::BoundedConfidence {
            confidence_threshold,
        } = mode
        {
            let gap = (self.money[i].clone() - self.money[j].clone()).abs();
            if gap > *confidence_threshold {
                return Ok(TransactionOutcome::rejected(
                    OutcomeReason::ConfidenceExceeded,
                ));
            }
        }
        let (new_i, new_j) = self.propose_update(i, j, mu)?;
        match mode {
            InteractionMode::MoneyTransfer => {
                // A -inf proposal (float overflow under extreme mu) compares
                // below any floor and is rejected here like any other breach.
                if new_i < -self.credit_limits[i].clone() || new_j < -self.credit_limits[j].clone()
                {
                    return Ok(TransactionOutcome::rejected(
                        OutcomeReason::CreditFloorViolated,
                    ));
                }
            }
            InteractionMode::BoundedConfidence { .. } => {
                if !new_i.is_finite_scalar() || !new_j.is_finite_scalar() {
                    return Err(ModelError::NonFiniteProposal);
                }
            }
        }
        let delta = new_i.clone() - self.money[i].clone();
        self.money[i] = new_i;
        self.money[j] = new_j;
        Ok(TransactionOutcome {
            reason: OutcomeReason::Applied,
            delta,
        })
    }

    /// Largest pairwise money distance.
    ///
    /// With `above_floor_only` the supremum runs over agents strictly above
    /// their credit floor; agents sitting exactly at `-d_i` are excluded.
    /// Returns zero when fewer than two agents qualify.
    pub fn max_gap(&self, above_floor_only: bool) -> S {
        let mut lo: Option<S> = None;
        let mut hi: Option<S> = None;
        for (m, d) in self.money.iter().zip(&self.credit_limits) {
            if above_floor_only && *m <= -d.clone() {
                continue;
            }
            match &mut lo {
                Some(v) if *m >= *v => {}
                _ => lo = Some(m.clone()),
            }
            match &mut hi {
                Some(v) if *m <= *v => {}
                _ => hi = Some(m.clone()),
            }
        }
        match (lo, hi) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => S::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_traits::Signed;

    fn state(money: &[f64], limits: &[f64]) -> WealthState<f64> {
        WealthState::new(money.to_vec(), limits.to_vec()).unwrap()
    }

    fn exact(values: &[f64]) -> Vec<Rational> {
        values.iter().map(|&v| Rational::from_config(v)).collect()
    }

    #[test]
    fn propose_midpoint() {
        let s = state(&[0.0, 1.0], &[10.0, 10.0]);
        assert_eq!(s.propose_update(0, 1, &0.5).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn propose_quarter() {
        let s = state(&[0.0, 1.0], &[10.0, 10.0]);
        assert_eq!(s.propose_update(0, 1, &0.25).unwrap(), (0.25, 0.75));
    }

    #[test]
    fn propose_overshoot_swaps_order() {
        // mu = 2 pushes past: the richer agent becomes poorer.
        let s = state(&[0.0, 1.0], &[10.0, 10.0]);
        assert_eq!(s.propose_update(0, 1, &2.0).unwrap(), (2.0, -1.0));
    }

    #[test]
    fn propose_rejects_bad_indices() {
        let s = state(&[0.0, 1.0], &[10.0, 10.0]);
        assert_eq!(
            s.propose_update(0, 2, &0.5),
            Err(ModelError::IndexOutOfRange { index: 2, n: 2 })
        );
        assert_eq!(
            s.propose_update(1, 1, &0.5),
            Err(ModelError::IdenticalAgents(1))
        );
    }

    #[test]
    fn apply_simple_transfer() {
        let mut s = state(&[0.0, 1.0], &[10.0, 10.0]);
        let out = s
            .apply_transaction(0, 1, &0.25, true, &InteractionMode::MoneyTransfer)
            .unwrap();
        assert!(out.accepted());
        assert_eq!(out.delta, 0.25);
        assert_eq!(s.money(), &[0.25, 0.75]);
        assert_eq!(s.money().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn apply_rejects_credit_floor_breach() {
        // Proposal (2, -1) with floors at -0.5 must be rejected whole.
        let mut s = state(&[0.0, 1.0], &[0.5, 0.5]);
        let out = s
            .apply_transaction(0, 1, &2.0, true, &InteractionMode::MoneyTransfer)
            .unwrap();
        assert_eq!(out.reason, OutcomeReason::CreditFloorViolated);
        assert_eq!(out.delta, 0.0);
        assert_eq!(s.money(), &[0.0, 1.0]);
    }

    #[test]
    fn apply_rejects_outside_confidence() {
        let mut s = state(&[0.0, 0.9], &[1.0, 1.0]);
        let mode = InteractionMode::BoundedConfidence {
            confidence_threshold: 0.5,
        };
        let out = s.apply_transaction(0, 1, &0.3, true, &mode).unwrap();
        assert_eq!(out.reason, OutcomeReason::ConfidenceExceeded);
        assert_eq!(s.money(), &[0.0, 0.9]);
    }

    #[test]
    fn apply_respects_missing_edge_and_zero_mu() {
        let mut s = state(&[0.0, 1.0], &[10.0, 10.0]);
        let out = s
            .apply_transaction(0, 1, &0.5, false, &InteractionMode::MoneyTransfer)
            .unwrap();
        assert_eq!(out.reason, OutcomeReason::NotSociallyConnected);
        let out = s
            .apply_transaction(0, 1, &0.0, true, &InteractionMode::MoneyTransfer)
            .unwrap();
        assert_eq!(out.reason, OutcomeReason::ZeroMu);
        assert_eq!(s.money(), &[0.0, 1.0]);
    }

    #[test]
    fn apply_rejects_non_finite_mu() {
        let mut s = state(&[0.0, 1.0], &[10.0, 10.0]);
        assert_eq!(
            s.apply_transaction(0, 1, &f64::NAN, true, &InteractionMode::MoneyTransfer),
            Err(ModelError::NonFiniteMixing)
        );
    }

    #[test]
    fn agent_at_floor_may_still_transact() {
        // Agent 0 sits exactly at -d_0; the proposal keeps both above their
        // floors, so the constraint "money >= -d" (not ">") admits it.
        let mut s = state(&[-1.0, 1.0], &[1.0, 1.0]);
        let out = s
            .apply_transaction(0, 1, &0.25, true, &InteractionMode::MoneyTransfer)
            .unwrap();
        assert!(out.accepted());
        assert_eq!(s.money(), &[-0.5, 0.5]);
    }

    #[test]
    fn max_gap_examples() {
        let s = state(&[0.0, 1.0, 2.0], &[10.0, 10.0, 10.0]);
        assert_eq!(s.max_gap(true), 2.0);
        assert_eq!(s.max_gap(false), 2.0);

        let s = state(&[3.0, 3.0, 3.0], &[1.0, 1.0, 1.0]);
        assert_eq!(s.max_gap(true), 0.0);
        assert_eq!(s.max_gap(false), 0.0);

        // Agent 0 sits at its floor -1 and is excluded from the supremum.
        let s = state(&[-1.0, 0.0, 5.0], &[1.0, 10.0, 10.0]);
        assert_eq!(s.max_gap(true), 5.0);
        assert_eq!(s.max_gap(false), 6.0);
    }

    #[test]
    fn max_gap_with_fewer_than_two_qualifying() {
        let s = state(&[-1.0, -2.0, 7.0], &[1.0, 2.0, 1.0]);
        // Only agent 2 is strictly above its floor.
        assert_eq!(s.max_gap(true), 0.0);
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        assert_eq!(
            WealthState::new(vec![1.0], vec![1.0]).unwrap_err(),
            ModelError::TooFewAgents(1)
        );
        assert_eq!(
            WealthState::new(vec![1.0, 2.0], vec![1.0]).unwrap_err(),
            ModelError::LengthMismatch {
                money: 2,
                limits: 1
            }
        );
        assert_eq!(
            WealthState::new(vec![1.0, 2.0], vec![1.0, 0.0]).unwrap_err(),
            ModelError::InvalidCreditLimit(1)
        );
        assert_eq!(
            WealthState::new(vec![-2.0, 2.0], vec![1.0, 1.0]).unwrap_err(),
            ModelError::BelowCreditFloor(0)
        );
        assert_eq!(
            WealthState::new(vec![f64::NAN, 2.0], vec![1.0, 1.0]).unwrap_err(),
            ModelError::NonFiniteMoney(0)
        );
        assert_eq!(
            WealthState::new(vec![1.0, 2.0], vec![f64::INFINITY, 1.0]).unwrap_err(),
            ModelError::InvalidCreditLimit(0)
        );
    }

    #[test]
    fn fixed_point_when_equal() {
        let s = state(&[0.7, 0.7], &[1.0, 1.0]);
        for mu in [-3.0, 0.0, 0.25, 1.0, 17.5] {
            let (a, b) = s.propose_update(0, 1, &mu).unwrap();
            assert_eq!(a, 0.7);
            assert_eq!(b, 0.7);
        }
    }

    #[test]
    fn proposal_is_symmetric_under_pair_swap() {
        // The two deltas are exact negatives (IEEE negation is exact), so
        // swapping the roles of i and j mirrors the result bit-for-bit.
        let s = state(&[0.3, 1.9], &[10.0, 10.0]);
        for mu in [0.1, 0.37, 0.5, 1.25, -0.8] {
            let (a, b) = s.propose_update(0, 1, &mu).unwrap();
            let (b2, a2) = s.propose_update(1, 0, &mu).unwrap();
            assert_eq!(a.to_bits(), a2.to_bits());
            assert_eq!(b.to_bits(), b2.to_bits());
        }
    }

    #[test]
    fn deltas_negate_exactly_in_rational_mode() {
        let money = exact(&[0.3, 1.9]);
        let s = WealthState::new(money.clone(), exact(&[10.0, 10.0])).unwrap();
        for mu_f in [0.1, 0.37, 1.25, -0.8] {
            let mu = Rational::from_config(mu_f);
            let (a, b) = s.propose_update(0, 1, &mu).unwrap();
            let delta_i = a - money[0].clone();
            let delta_j = b - money[1].clone();
            assert_eq!(delta_i, -delta_j);
        }
    }

    #[test]
    fn conservation_is_exact_in_rational_mode() {
        let mut s = WealthState::new(exact(&[0.1, 0.7, -0.3]), exact(&[10.0, 10.0, 10.0])).unwrap();
        let total = s.total().clone();
        let mu = Rational::from_config(0.3);
        for (i, j) in [(0, 1), (1, 2), (0, 2), (2, 1)] {
            s.apply_transaction(i, j, &mu, true, &InteractionMode::MoneyTransfer)
                .unwrap();
            let sum = s
                .money()
                .iter()
                .fold(Rational::from_config(0.0), |a, m| a + m.clone());
            assert_eq!(sum, total);
        }
    }

    #[test]
    fn order_preservation_depends_on_mu() {
        // Exact backend: mu in (0, 1/2] keeps the richer agent richer;
        // mu > 1/2 reverses the order.
        let s = WealthState::new(exact(&[0.25, 0.75]), exact(&[10.0, 10.0])).unwrap();
        for num in 1..=16i32 {
            let mu = Rational::new(num.into(), 32.into());
            let (lo, hi) = s.propose_update(0, 1, &mu).unwrap();
            assert!(lo <= hi, "mu = {num}/32");
        }
        for num in 17..=64i32 {
            let mu = Rational::new(num.into(), 32.into());
            let (lo, hi) = s.propose_update(0, 1, &mu).unwrap();
            assert!(lo >= hi, "mu = {num}/32");
        }
    }

    #[test]
    fn gap_scaling_is_exact_in_rational_mode() {
        let money = exact(&[0.25, 0.875]);
        let s = WealthState::new(money.clone(), exact(&[100.0, 100.0])).unwrap();
        for mu_f in [0.125, 0.5, 0.75, 1.5, -0.25] {
            let mu = Rational::from_config(mu_f);
            let (a, b) = s.propose_update(0, 1, &mu).unwrap();
            let one = Rational::from_config(1.0);
            let two = Rational::from_config(2.0);
            let factor = (one - two * mu).abs();
            let before = (money[1].clone() - money[0].clone()).abs();
            assert_eq!((b - a).abs(), factor * before);
        }
    }
}
