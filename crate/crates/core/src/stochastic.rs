//! Pair-selection and mixing-value distributions.
//!
//! The pair process draws i.i.d. from a weighted support of unordered agent
//! pairs. The mixing value `mu` is drawn per step from a declared
//! distribution whose support bounds classify the run's regime:
//!
//! * contractive — closure of the support inside (0, 1), i.e.
//!   `sup |mu - 1/2| < 1/2`: every applied transaction shrinks the pair's gap;
//! * expansive — support outside (0, 1), i.e. `inf |mu - 1/2| >= 1/2`: every
//!   applied transaction scales the pair's gap by `|1 - 2 mu| >= 1`.
//!
//! Mixing draws are performed in the target scalar backend so exact runs see
//! exact dyadic values.

use thiserror::Error;

use crate::rng::StepRng;
use crate::scalar::SimScalar;

#[derive(Debug, Error, PartialEq)]
pub enum DistributionError {
    #[error("pair support must be nonempty")]
    EmptySupport,
    #[error("pair ({0}, {1}) appears twice in the support")]
    DuplicatePair(usize, usize),
    #[error("pair ({0}, {0}) is a self-loop")]
    SelfPair(usize),
    #[error("pair endpoint {index} out of range for {n} agents")]
    AgentOutOfRange { index: usize, n: usize },
    #[error("weight for pair {0} must be positive and finite")]
    InvalidWeight(usize),
    #[error("support and weights have different lengths")]
    WeightLengthMismatch,
    #[error("uniform mixing bounds must satisfy lo < hi, got [{lo}, {hi}]")]
    BadUniformBounds { lo: f64, hi: f64 },
    #[error("mixing bound {0} must be finite")]
    NonFiniteBound(f64),
    #[error("constant mixing value must be nonzero")]
    ZeroConstant,
    #[error("mixture must have at least one component")]
    EmptyMixture,
    #[error("mixture weight {0} must be positive and finite")]
    InvalidMixtureWeight(usize),
    #[error("declared regime {declared:?} but support classifies as {computed:?}")]
    RegimeMismatch { declared: Regime, computed: Regime },
}

/// The law of the candidate-pair process: support plus normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSelectionDistribution {
    support: Vec<(usize, usize)>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl PairSelectionDistribution {
    /// `weights = None` means uniform over the support.
    pub fn new(
        n: usize,
        support: Vec<(usize, usize)>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, DistributionError> {
        if support.is_empty() {
            return Err(DistributionError::EmptySupport);
        }
        let mut canonical = Vec::with_capacity(support.len());
        for &(a, b) in &support {
            if a == b {
                return Err(DistributionError::SelfPair(a));
            }
            if a >= n {
                return Err(DistributionError::AgentOutOfRange { index: a, n });
            }
            if b >= n {
                return Err(DistributionError::AgentOutOfRange { index: b, n });
            }
            canonical.push((a.min(b), a.max(b)));
        }
        let mut seen = canonical.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(DistributionError::DuplicatePair(w[0].0, w[0].1));
            }
        }
        let raw = match weights {
            Some(w) => {
                if w.len() != canonical.len() {
                    return Err(DistributionError::WeightLengthMismatch);
                }
                for (k, &x) in w.iter().enumerate() {
                    if !x.is_finite() || x <= 0.0 {
                        return Err(DistributionError::InvalidWeight(k));
                    }
                }
                w
            }
            None => vec![1.0; canonical.len()],
        };
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        // Guard the tail against rounding so a unit draw of 0.999... always lands.
        *cumulative.last_mut().expect("nonempty") = 1.0;
        Ok(PairSelectionDistribution {
            support: canonical,
            weights,
            cumulative,
        })
    }

    /// Uniform distribution over every unordered pair of `0..n`.
    pub fn uniform_all_pairs(n: usize) -> Self {
        let mut support = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                support.push((i, j));
            }
        }
        Self::new(n, support, None).expect("all-pairs support is valid")
    }

    pub fn support(&self) -> &[(usize, usize)] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True iff every unordered pair of `0..n` appears in the support.
    pub fn covers_all_pairs(&self, n: usize) -> bool {
        self.support.len() == n * (n - 1) / 2 && self.support.iter().all(|&(_, b)| b < n)
    }

    pub fn sample_pair(&self, rng: &mut StepRng) -> (usize, usize) {
        let u = rng.next_unit(53);
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.support[k.min(self.support.len() - 1)]
    }
}

/// Where a mixing distribution's support sits relative to (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Contractive,
    Expansive,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MixingKind {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
    Mixture(Vec<(f64, MixingKind)>),
}

impl MixingKind {
    fn validate(&self) -> Result<(), DistributionError> {
        match self {
            MixingKind::Constant(c) => {
                if !c.is_finite() {
                    return Err(DistributionError::NonFiniteBound(*c));
                }
                if *c == 0.0 {
                    // The pair process excludes zero mixing values by
                    // definition; a sampler that always yields 0 is a config
                    // mistake, while continuous samplers hit it with
                    // probability zero.
                    return Err(DistributionError::ZeroConstant);
                }
                Ok(())
            }
            MixingKind::Uniform { lo, hi } => {
                if !lo.is_finite() {
                    return Err(DistributionError::NonFiniteBound(*lo));
                }
                if !hi.is_finite() {
                    return Err(DistributionError::NonFiniteBound(*hi));
                }
                if lo >= hi {
                    return Err(DistributionError::BadUniformBounds { lo: *lo, hi: *hi });
                }
                Ok(())
            }
            MixingKind::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(DistributionError::EmptyMixture);
                }
                for (k, (w, kind)) in parts.iter().enumerate() {
                    if !w.is_finite() || *w <= 0.0 {
                        return Err(DistributionError::InvalidMixtureWeight(k));
                    }
                    kind.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Closure of the support: `[min, max]`.
    pub fn support_bounds(&self) -> (f64, f64) {
        match self {
            MixingKind::Constant(c) => (*c, *c),
            MixingKind::Uniform { lo, hi } => (*lo, *hi),
            MixingKind::Mixture(parts) => {
                parts
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, kind)| {
                        let (l, h) = kind.support_bounds();
                        (lo.min(l), hi.max(h))
                    })
            }
        }
    }

    fn sample<S: SimScalar>(&self, rng: &mut StepRng) -> S {
        match self {
            MixingKind::Constant(c) => S::from_config(*c),
            MixingKind::Uniform { lo, hi } => {
                let u = rng.next_unit(S::unit_draw_bits());
                let lo_s = S::from_config(*lo);
                let hi_s = S::from_config(*hi);
                lo_s.clone() + (hi_s - lo_s) * S::from_config(u)
            }
            MixingKind::Mixture(parts) => {
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                let u = rng.next_unit(53) * total;
                let mut acc = 0.0;
                for (w, kind) in parts {
                    acc += w;
                    if u < acc {
                        return kind.sample(rng);
                    }
                }
                parts.last().expect("nonempty mixture").1.sample(rng)
            }
        }
    }
}

/// The law of the mixing value, with its declared regime.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingDistribution {
    pub kind: MixingKind,
    pub declared_regime: Regime,
}

impl MixingDistribution {
    pub fn new(kind: MixingKind, declared_regime: Regime) -> Result<Self, DistributionError> {
        let dist = MixingDistribution {
            kind,
            declared_regime,
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn validate(&self) -> Result<(), DistributionError> {
        self.kind.validate()?;
        let computed = self.computed_regime();
        match self.declared_regime {
            Regime::Unclassified => Ok(()),
            declared if declared == computed => Ok(()),
            declared => Err(DistributionError::RegimeMismatch { declared, computed }),
        }
    }

    /// Regime from the support's closure: contractive needs the closure
    /// inside (0, 1); expansive needs the support disjoint from (0, 1).
    pub fn computed_regime(&self) -> Regime {
        let (lo, hi) = self.kind.support_bounds();
        if lo > 0.0 && hi < 1.0 {
            Regime::Contractive
        } else if hi <= 0.0 || lo >= 1.0 || self.all_components_expansive() {
            Regime::Expansive
        } else {
            Regime::Unclassified
        }
    }

    fn all_components_expansive(&self) -> bool {
        fn expansive(kind: &MixingKind) -> bool {
            match kind {
                MixingKind::Constant(c) => *c <= 0.0 || *c >= 1.0,
                MixingKind::Uniform { lo, hi } => *hi <= 0.0 || *lo >= 1.0,
                MixingKind::Mixture(parts) => parts.iter().all(|(_, k)| expansive(k)),
            }
        }
        expansive(&self.kind)
    }

    pub fn sample<S: SimScalar>(&self, rng: &mut StepRng) -> S {
        self.kind.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RunRng, StreamTag};

    fn mu_rng(seed: u64) -> RunRng {
        RunRng::from_seed(seed).substream(StreamTag::MixingDraw)
    }

    fn pair_rng(seed: u64) -> RunRng {
        RunRng::from_seed(seed).substream(StreamTag::PairDraw)
    }

    #[test]
    fn singleton_support_always_returns_it() {
        let d = PairSelectionDistribution::new(2, vec![(0, 1)], None).unwrap();
        let stream = pair_rng(1);
        for t in 0..100 {
            assert_eq!(d.sample_pair(&mut stream.at_step(t)), (0, 1));
        }
    }

    #[test]
    fn uniform_pair_frequencies_converge() {
        let d = PairSelectionDistribution::uniform_all_pairs(3);
        assert_eq!(d.support(), &[(0, 1), (0, 2), (1, 2)]);
        let stream = pair_rng(2);
        let mut counts = [0usize; 3];
        let draws = 30_000;
        for t in 0..draws {
            let pair = d.sample_pair(&mut stream.at_step(t));
            let k = d.support().iter().position(|&p| p == pair).unwrap();
            counts[k] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "freq {freq}");
        }
    }

    #[test]
    fn weighted_pair_frequencies_converge() {
        let d =
            PairSelectionDistribution::new(3, vec![(0, 1), (1, 2)], Some(vec![0.9, 0.1])).unwrap();
        let stream = pair_rng(3);
        let draws = 10_000;
        let mut heavy = 0usize;
        for t in 0..draws {
            if d.sample_pair(&mut stream.at_step(t)) == (0, 1) {
                heavy += 1;
            }
        }
        let freq = heavy as f64 / draws as f64;
        assert!((freq - 0.9).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn covers_all_pairs_examples() {
        assert!(PairSelectionDistribution::uniform_all_pairs(3).covers_all_pairs(3));
        let d = PairSelectionDistribution::new(3, vec![(0, 1)], None).unwrap();
        assert!(!d.covers_all_pairs(3));
        let d = PairSelectionDistribution::new(2, vec![(0, 1)], None).unwrap();
        assert!(d.covers_all_pairs(2));
    }

    #[test]
    fn support_validation_errors() {
        assert_eq!(
            PairSelectionDistribution::new(3, vec![], None).unwrap_err(),
            DistributionError::EmptySupport
        );
        assert_eq!(
            PairSelectionDistribution::new(3, vec![(0, 1), (1, 0)], None).unwrap_err(),
            DistributionError::DuplicatePair(0, 1)
        );
        assert_eq!(
            PairSelectionDistribution::new(3, vec![(2, 2)], None).unwrap_err(),
            DistributionError::SelfPair(2)
        );
        assert_eq!(
            PairSelectionDistribution::new(3, vec![(0, 3)], None).unwrap_err(),
            DistributionError::AgentOutOfRange { index: 3, n: 3 }
        );
        assert_eq!(
            PairSelectionDistribution::new(3, vec![(0, 1)], Some(vec![0.0])).unwrap_err(),
            DistributionError::InvalidWeight(0)
        );
    }

    #[test]
    fn constant_mixing_returns_constant() {
        let d = MixingDistribution::new(MixingKind::Constant(0.5), Regime::Contractive).unwrap();
        let stream = mu_rng(4);
        for t in 0..10 {
            let mu: f64 = d.sample(&mut stream.at_step(t));
            assert_eq!(mu, 0.5);
        }
    }

    #[test]
    fn uniform_mixing_mean_converges() {
        let d = MixingDistribution::new(
            MixingKind::Uniform { lo: 0.1, hi: 0.9 },
            Regime::Contractive,
        )
        .unwrap();
        let stream = mu_rng(5);
        let draws = 10_000;
        let mut sum = 0.0;
        for t in 0..draws {
            let mu: f64 = d.sample(&mut stream.at_step(t));
            assert!((0.1..0.9).contains(&mu));
            sum += mu;
        }
        let mean = sum / draws as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn mixture_stays_outside_unit_interval() {
        let d = MixingDistribution::new(
            MixingKind::Mixture(vec![
                (0.5, MixingKind::Uniform { lo: 1.0, hi: 1.5 }),
                (0.5, MixingKind::Uniform { lo: -0.5, hi: 0.0 }),
            ]),
            Regime::Expansive,
        )
        .unwrap();
        let stream = mu_rng(6);
        for t in 0..5_000 {
            let mu: f64 = d.sample(&mut stream.at_step(t));
            assert!((mu - 0.5).abs() >= 0.5, "mu {mu} entered (0, 1)");
        }
    }

    #[test]
    fn regime_classification_examples() {
        let contractive = MixingDistribution::new(
            MixingKind::Uniform { lo: 0.1, hi: 0.9 },
            Regime::Unclassified,
        )
        .unwrap();
        assert_eq!(contractive.computed_regime(), Regime::Contractive);

        let expansive = MixingDistribution::new(
            MixingKind::Uniform { lo: 1.0, hi: 1.5 },
            Regime::Unclassified,
        )
        .unwrap();
        assert_eq!(expansive.computed_regime(), Regime::Expansive);

        let straddling = MixingDistribution::new(
            MixingKind::Uniform { lo: 0.5, hi: 1.5 },
            Regime::Unclassified,
        )
        .unwrap();
        assert_eq!(straddling.computed_regime(), Regime::Unclassified);
    }

    #[test]
    fn mixture_of_expansive_branches_is_expansive() {
        // Bounds straddle (0,1) but no branch enters it.
        let d = MixingDistribution::new(
            MixingKind::Mixture(vec![
                (1.0, MixingKind::Uniform { lo: 1.0, hi: 2.0 }),
                (1.0, MixingKind::Uniform { lo: -1.0, hi: -0.5 }),
            ]),
            Regime::Unclassified,
        )
        .unwrap();
        assert_eq!(d.computed_regime(), Regime::Expansive);
    }

    #[test]
    fn declared_regime_mismatch_is_an_error() {
        let err = MixingDistribution::new(
            MixingKind::Uniform { lo: 1.0, hi: 1.5 },
            Regime::Contractive,
        )
        .unwrap_err();
        assert_eq!(
            err,
            DistributionError::RegimeMismatch {
                declared: Regime::Contractive,
                computed: Regime::Expansive
            }
        );
    }

    #[test]
    fn zero_constant_rejected() {
        assert_eq!(
            MixingDistribution::new(MixingKind::Constant(0.0), Regime::Unclassified).unwrap_err(),
            DistributionError::ZeroConstant
        );
    }

    #[test]
    fn bad_uniform_bounds_rejected() {
        assert!(MixingDistribution::new(
            MixingKind::Uniform { lo: 0.9, hi: 0.1 },
            Regime::Unclassified
        )
        .is_err());
    }

    #[test]
    fn exact_backend_sees_dyadic_mixing_values() {
        use crate::Rational;
        let d = MixingDistribution::new(
            MixingKind::Uniform {
                lo: 0.125,
                hi: 0.875,
            },
            Regime::Contractive,
        )
        .unwrap();
        let stream = mu_rng(7);
        for t in 0..50 {
            let mu: Rational = d.sample(&mut stream.at_step(t));
            // lo/hi and the 16-bit unit draw are dyadic, so mu is too.
            let denom = mu.denom().clone();
            let mask = &denom - num_bigint::BigInt::from(1);
            assert_eq!(&denom & &mask, num_bigint::BigInt::from(0));
        }
    }

    #[test]
    fn draws_at_same_step_are_stable_across_evaluation_order() {
        let d = MixingDistribution::new(
            MixingKind::Uniform { lo: 0.1, hi: 0.9 },
            Regime::Contractive,
        )
        .unwrap();
        let stream = mu_rng(8);
        let a: f64 = d.sample(&mut stream.at_step(40));
        let _: f64 = d.sample(&mut stream.at_step(3));
        let b: f64 = d.sample(&mut stream.at_step(40));
        assert_eq!(a, b);
    }
}
