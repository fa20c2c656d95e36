//! Run instrumentation: the quadratic potential, its exact per-step drop
//! identity, spread predicates, and order-statistic tracking.
//!
//! The potential is `Z = sum over ordered pairs (i, j) of (m_i - m_j)^2`
//! (diagonal included, contributing zero). For one applied transaction on a
//! pair with mixing value `mu != 0` the drop obeys, exactly,
//!
//! ```text
//! Z(before) - Z(after) = 2 n (1/mu - 1) * sum_i (m_i - m_i')^2
//! ```
//!
//! so `Z` is monotone per step: nonincreasing for `mu` in (0, 1),
//! nondecreasing for `mu > 1` or `mu < 0`. The audit recomputes both sides
//! from state; in exact arithmetic the residual is identically zero.

use crate::scalar::SimScalar;
use crate::Rational;

/// O(n) potential via the centered form `2 n * sum_i (m_i - mean)^2`.
///
/// Algebraically identical to `2 n sum m^2 - 2 (sum m)^2` and to the ordered
/// double sum, but immune to cancellation when the mean dwarfs the spread.
pub fn potential<S: SimScalar>(money: &[S]) -> S {
    let n = S::from_config(money.len() as f64);
    let sum = money.iter().fold(S::zero(), |acc, m| acc + m.clone());
    let mean = sum / n.clone();
    let centered = money.iter().fold(S::zero(), |acc, m| {
        let d = m.clone() - mean.clone();
        acc + d.clone() * d
    });
    S::from_config(2.0) * n * centered
}

/// O(n^2) oracle: the ordered-pair double sum, evaluated literally.
pub fn potential_direct<S: SimScalar>(money: &[S]) -> S {
    let mut acc = S::zero();
    for a in money {
        for b in money {
            let d = a.clone() - b.clone();
            acc += d.clone() * d;
        }
    }
    acc
}

/// Potential indexed by the step it was read at.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialReading<S> {
    pub z: S,
    pub t: u64,
}

pub fn potential_reading<S: SimScalar>(money: &[S], t: u64) -> PotentialReading<S> {
    PotentialReading {
        z: potential(money),
        t,
    }
}

/// Both sides of the drop identity plus their absolute difference.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport<S> {
    /// `Z(before) - Z(after)`.
    pub lhs: S,
    /// `2 n (1/mu - 1) sum_i (m_i - m_i')^2` for an applied step, else zero.
    pub rhs: S,
    pub residual: S,
}

/// Audits one step against the drop identity. The caller decides what
/// residual to tolerate; exact backends owe exactly zero.
pub fn check_drop_identity<S: SimScalar>(
    before: &[S],
    after: &[S],
    mu: &S,
    applied: bool,
) -> IdentityReport<S> {
    drop_identity_with(
        potential(before),
        potential(after),
        before,
        after,
        mu,
        applied,
    )
}

/// Same audit with the two potentials supplied by the caller (the engine
/// already has them; recomputing would double the per-step cost).
pub fn drop_identity_with<S: SimScalar>(
    z_before: S,
    z_after: S,
    before: &[S],
    after: &[S],
    mu: &S,
    applied: bool,
) -> IdentityReport<S> {
    debug_assert_eq!(before.len(), after.len());
    let lhs = z_before - z_after;
    let rhs = if applied && !mu.is_zero() {
        let n = S::from_config(before.len() as f64);
        let moved: S = before.iter().zip(after).fold(S::zero(), |acc, (b, a)| {
            let d = b.clone() - a.clone();
            acc + d.clone() * d
        });
        S::from_config(2.0) * n * (S::one() / mu.clone() - S::one()) * moved
    } else {
        S::zero()
    };
    let residual = (lhs.clone() - rhs.clone()).abs();
    IdentityReport { lhs, rhs, residual }
}

/// Exact audit of a float step: states and `mu` embed losslessly into
/// rationals, so the report's `lhs` sign carries no evaluation noise — only
/// whatever rounding the float update itself committed.
pub fn exact_identity_from_f64(
    before: &[f64],
    after: &[f64],
    mu: f64,
    applied: bool,
) -> IdentityReport<Rational> {
    let before: Vec<Rational> = before.iter().map(|&v| Rational::from_config(v)).collect();
    let after: Vec<Rational> = after.iter().map(|&v| Rational::from_config(v)).collect();
    check_drop_identity(&before, &after, &Rational::from_config(mu), applied)
}

/// The potential drop for a step that changed only the entries in `pair`,
/// evaluated over the affected pairs only.
///
/// Every ordered pair not touching the transacting pair contributes
/// identically to both potentials and cancels term by term, so in exact
/// arithmetic this equals `potential(before) - potential(after)` while
/// costing O(n) instead of O(n) big-number sums over a common denominator.
/// The untouched entries of `before` and `after` must be equal.
pub fn exact_pair_drop_from_f64(before: &[f64], after: &[f64], pair: (usize, usize)) -> Rational {
    let (p, q) = pair;
    debug_assert_eq!(before.len(), after.len());
    debug_assert!(before
        .iter()
        .zip(after)
        .enumerate()
        .all(|(i, (b, a))| i == p || i == q || a == b));
    let sq = |x: Rational| x.clone() * x;
    let r = Rational::from_config;
    let bp = r(before[p]);
    let bq = r(before[q]);
    let ap = r(after[p]);
    let aq = r(after[q]);
    let mut acc = sq(bp.clone() - bq.clone()) - sq(ap.clone() - aq.clone());
    for (i, &m) in before.iter().enumerate() {
        if i == p || i == q {
            continue;
        }
        let m = r(m);
        acc = acc + sq(bp.clone() - m.clone()) - sq(ap.clone() - m.clone())
            + sq(bq.clone() - m.clone())
            - sq(aq.clone() - m);
    }
    r(2.0) * acc
}

/// True iff all member values lie within `delta` of each other.
pub fn is_delta_trivial<S: SimScalar>(values: &[S], members: &[usize], delta: &S) -> bool {
    assert!(!members.is_empty(), "member set must be nonempty");
    let mut lo = values[members[0]].clone();
    let mut hi = lo.clone();
    for &k in &members[1..] {
        let v = &values[k];
        if *v < lo {
            lo = v.clone();
        }
        if *v > hi {
            hi = v.clone();
        }
    }
    hi - lo <= *delta
}

/// Money values in nondecreasing order plus the agent permutation that
/// produces them (ties broken by agent index).
#[derive(Debug, Clone, PartialEq)]
pub struct RankSnapshot<S> {
    pub sorted_money: Vec<S>,
    pub permutation: Vec<usize>,
}

pub fn rank_snapshot<S: SimScalar>(money: &[S]) -> RankSnapshot<S> {
    let mut permutation: Vec<usize> = (0..money.len()).collect();
    permutation.sort_by(|&a, &b| {
        money[a]
            .partial_cmp(&money[b])
            .expect("money values are comparable")
            .then(a.cmp(&b))
    });
    let sorted_money = permutation.iter().map(|&k| money[k].clone()).collect();
    RankSnapshot {
        sorted_money,
        permutation,
    }
}

/// Indices `k >= 1` into the snapshot sequence where some order statistic
/// moved by more than `tolerance` since snapshot `k - 1`.
///
/// Snapshots are assumed equally spaced; map indices to absolute steps by
/// multiplying with the recording cadence.
pub fn rank_change_events<S: SimScalar>(
    snapshots: &[RankSnapshot<S>],
    tolerance: &S,
) -> Vec<usize> {
    let mut events = Vec::new();
    for k in 1..snapshots.len() {
        let prev = &snapshots[k - 1].sorted_money;
        let cur = &snapshots[k].sorted_money;
        debug_assert_eq!(prev.len(), cur.len());
        let moved = prev
            .iter()
            .zip(cur)
            .any(|(p, c)| (p.clone() - c.clone()).abs() > *tolerance);
        if moved {
            events.push(k);
        }
    }
    events
}

/// True iff the spread `max - min` is at most `epsilon`.
pub fn consensus_reached<S: SimScalar>(money: &[S], epsilon: &S) -> bool {
    if money.len() < 2 {
        return true;
    }
    let mut lo = money[0].clone();
    let mut hi = lo.clone();
    for m in &money[1..] {
        if *m < lo {
            lo = m.clone();
        }
        if *m > hi {
            hi = m.clone();
        }
    }
    hi - lo <= *epsilon
}
