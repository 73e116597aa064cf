//! Schmidt spectra: normalized, sorted probability vectors.
//!
//! A spectrum is stored as a list of distinct *levels* (weight, multiplicity)
//! sorted by decreasing weight. Tensor powers of few-level spectra have
//! exponentially many entries but only polynomially many distinct values,
//! so the level form keeps `Powers(λ)^{⊗k}` tractable for k in the thousands.
//! Multiplicities are counts held as `f64`; they are exact below 2^53.
//!
//! Truncation is tracked: `mass_deficit` is the probability removed by
//! pruning, and every derived quantity reports a bound derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default probability mass that a single pruning step may discard.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-12;
/// Default maximum number of stored levels.
pub const DEFAULT_LEVEL_CAP: usize = 1 << 20;
/// Absolute tolerance for floating-point comparisons of probabilities.
pub const ABS_TOL: f64 = 1e-12;
/// Largest expanded length returned by [`Spectrum::expand`].
pub const EXPAND_CAP: usize = 1 << 24;

const MERGE_REL_TOL: f64 = 1e-12;
const COUNT_EPS: f64 = 1e-9;

/// One distinct value of a spectrum and how many times it occurs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub weight: f64,
    pub multiplicity: f64,
}

impl Level {
    pub fn new(weight: f64, multiplicity: f64) -> Self {
        Level {
            weight,
            multiplicity,
        }
    }

    pub fn mass(&self) -> f64 {
        self.weight * self.multiplicity
    }
}

/// Pruning rule applied after tensor products.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prune {
    /// Mass that may be dropped from the tail (smallest levels first).
    pub threshold: f64,
    /// Maximum number of levels kept; excess levels are dropped regardless of mass.
    pub level_cap: usize,
}

impl Prune {
    /// Keep everything.
    pub const EXACT: Prune = Prune {
        threshold: 0.0,
        level_cap: usize::MAX,
    };
}

impl Default for Prune {
    fn default() -> Self {
        Prune {
            threshold: DEFAULT_PRUNE_THRESHOLD,
            level_cap: DEFAULT_LEVEL_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    Nats,
    Bits,
}

impl LogBase {
    fn scale(self) -> f64 {
        match self {
            LogBase::Nats => 1.0,
            LogBase::Bits => std::f64::consts::LN_2,
        }
    }
}

/// Fidelity value together with the bound implied by truncated mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    pub value: f64,
    pub error_bound: f64,
}

impl Fidelity {
    /// Vector distance `sqrt(2 - 2F)` between optimally aligned states.
    pub fn distance(&self) -> f64 {
        fidelity_distance(self.value)
    }
}

/// `sqrt(2 - 2F)`, clamped at zero.
pub fn fidelity_distance(f: f64) -> f64 {
    (2.0 - 2.0 * f).max(0.0).sqrt()
}

/// Trace distance `2 sqrt(1 - F^2)` between two pure states with overlap `F`.
pub fn trace_distance(f: f64) -> f64 {
    2.0 * (1.0 - f * f).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entropy {
    pub value: f64,
    /// Upper bound on the entropy carried by the truncated tail.
    pub truncation_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    levels: Vec<Level>,
    mass_deficit: f64,
    /// Number of entries of the untruncated spectrum (kept plus dropped).
    full_rank: f64,
}

impl Spectrum {
    /// Builds a normalized spectrum from non-negative weights. Zeros are dropped.
    pub fn new(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!(
                "weights must be finite and non-negative, got {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("at least one weight must be positive"));
        }
        let levels = weights
            .iter()
            .filter(|w| **w > 0.0)
            .map(|w| Level::new(w / total, 1.0))
            .collect::<Vec<_>>();
        let rank = levels.len() as f64;
        Ok(Self::canonical(levels, 0.0, rank))
    }

    /// Builds a spectrum from (unnormalized) levels. Multiplicities must be positive.
    pub fn from_levels(levels: &[Level]) -> Result<Self> {
        for l in levels {
            if !l.weight.is_finite() || l.weight < 0.0 {
                return Err(Error::invalid(format!("bad level weight {}", l.weight)));
            }
            if !l.multiplicity.is_finite() || l.multiplicity <= 0.0 {
                return Err(Error::invalid(format!(
                    "bad level multiplicity {}",
                    l.multiplicity
                )));
            }
        }
        let total: f64 = levels.iter().map(Level::mass).sum();
        if total <= 0.0 {
            return Err(Error::invalid("at least one weight must be positive"));
        }
        let kept = levels
            .iter()
            .filter(|l| l.weight > 0.0)
            .map(|l| Level::new(l.weight / total, l.multiplicity))
            .collect::<Vec<_>>();
        let rank = kept.iter().map(|l| l.multiplicity).sum();
        Ok(Self::canonical(kept, 0.0, rank))
    }

    /// Levels already normalized against the untruncated mass, of which
    /// `mass_deficit` is missing.
    pub(crate) fn from_normalized(levels: Vec<Level>, mass_deficit: f64, full_rank: f64) -> Self {
        Self::canonical(levels, mass_deficit, full_rank)
    }

    /// The product state `[1]`.
    pub fn pure() -> Self {
        Spectrum {
            levels: vec![Level::new(1.0, 1.0)],
            mass_deficit: 0.0,
            full_rank: 1.0,
        }
    }

    /// Uniform spectrum over `count` entries. `count` may exceed 2^53 (it is a float count).
    pub fn uniform(count: f64) -> Result<Self> {
        if !(count >= 1.0) || !count.is_finite() || count.fract() != 0.0 {
            return Err(Error::invalid(format!(
                "uniform spectrum needs a positive integer count, got {count}"
            )));
        }
        Ok(Spectrum {
            levels: vec![Level::new(1.0 / count, count)],
            mass_deficit: 0.0,
            full_rank: count,
        })
    }

    /// Powers spectrum `[1, λ] / (1 + λ)` for `λ ∈ (0, 1]`.
    pub fn powers(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::invalid(format!("λ must lie in (0, 1], got {lambda}")));
        }
        Self::new(&[1.0, lambda])
    }

    fn canonical(mut levels: Vec<Level>, mass_deficit: f64, full_rank: f64) -> Self {
        levels.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        let mut merged: Vec<Level> = Vec::with_capacity(levels.len());
        for l in levels {
            match merged.last_mut() {
                Some(last) if (last.weight - l.weight).abs() <= MERGE_REL_TOL * last.weight => {
                    let m = last.multiplicity + l.multiplicity;
                    last.weight = (last.mass() + l.mass()) / m;
                    last.multiplicity = m;
                }
                _ => merged.push(l),
            }
        }
        Spectrum {
            levels: merged,
            mass_deficit,
            full_rank,
        }
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn mass_deficit(&self) -> f64 {
        self.mass_deficit
    }

    pub fn is_exact(&self) -> bool {
        self.mass_deficit == 0.0
    }

    /// Number of retained entries (sum of multiplicities).
    pub fn rank(&self) -> f64 {
        self.levels.iter().map(|l| l.multiplicity).sum()
    }

    /// Number of entries before truncation.
    pub fn full_rank(&self) -> f64 {
        self.full_rank
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn retained_mass(&self) -> f64 {
        self.levels.iter().map(Level::mass).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.levels[0].weight
    }

    pub fn min_weight(&self) -> f64 {
        self.levels[self.levels.len() - 1].weight
    }

    pub fn is_pure(&self) -> bool {
        self.is_exact() && self.levels.len() == 1 && self.levels[0].multiplicity == 1.0
    }

    /// Uniform over at least two entries.
    pub fn is_uniform(&self) -> bool {
        self.is_exact() && self.levels.len() == 1 && self.levels[0].multiplicity > 1.0
    }

    /// Expanded weight list, largest first.
    pub fn expand(&self) -> Result<Vec<f64>> {
        let rank = self.rank();
        if rank > EXPAND_CAP as f64 {
            return Err(Error::CapExceeded {
                what: "expanded spectrum length",
                requested: rank as u128,
                cap: EXPAND_CAP as u128,
            });
        }
        Ok(self
            .levels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.weight, l.multiplicity.round() as usize))
            .collect())
    }

    /// Drops the smallest levels while the cumulative dropped mass stays within
    /// `prune.threshold`, then enforces the level cap.
    pub fn pruned(mut self, prune: Prune) -> Spectrum {
        let mut dropped = 0.0;
        while self.levels.len() > 1 {
            let last = self.levels[self.levels.len() - 1];
            if dropped + last.mass() > prune.threshold {
                break;
            }
            dropped += last.mass();
            self.levels.pop();
        }
        if self.levels.len() > prune.level_cap {
            for l in self.levels.drain(prune.level_cap.max(1)..) {
                dropped += l.mass();
            }
        }
        self.mass_deficit += dropped;
        self
    }

    /// Tensor product with pruning. Deficits combine as `d1 + d2 - d1 d2` plus
    /// whatever the pruning step drops.
    pub fn tensor(&self, other: &Spectrum, prune: Prune) -> Spectrum {
        let mut levels = Vec::with_capacity(self.levels.len() * other.levels.len());
        // one sorted run per level of `other`, which the run-adaptive sort merges cheaply
        for b in &other.levels {
            for a in &self.levels {
                levels.push(Level::new(a.weight * b.weight, a.multiplicity * b.multiplicity));
            }
        }
        let (d1, d2) = (self.mass_deficit, other.mass_deficit);
        let out = Self::canonical(levels, d1 + d2 - d1 * d2, self.full_rank * other.full_rank);
        out.pruned(prune)
    }

    /// `k`-fold tensor power; `k = 0` gives the pure spectrum.
    pub fn tensor_power(&self, k: usize, prune: Prune) -> Spectrum {
        let mut acc = Spectrum::pure();
        for _ in 0..k {
            acc = acc.tensor(self, prune);
        }
        acc
    }

    /// Entrywise comparison of the sorted (zero-padded) lists and of the deficits.
    pub fn approx_eq(&self, other: &Spectrum, tol: f64) -> bool {
        (self.mass_deficit - other.mass_deficit).abs() <= tol
            && segments(&self.levels, &other.levels)
                .iter()
                .all(|s| (s.a - s.b).abs() <= tol)
    }

    /// Largest entrywise deviation between the sorted, zero-padded lists.
    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        segments(&self.levels, &other.levels)
            .iter()
            .map(|s| (s.a - s.b).abs())
            .fold(0.0, f64::max)
    }
}

/// Maximal overlap `Σ_i sqrt(p↓_i q↓_i)` of two bipartite pure states with the
/// given Schmidt spectra, maximized over local unitaries.
pub fn sorted_fidelity(p: &Spectrum, q: &Spectrum) -> Fidelity {
    let value: f64 = segments(&p.levels, &q.levels)
        .iter()
        // sqrt before multiplying: deep tensor powers carry near-subnormal weights
        .map(|s| s.len * s.a.sqrt() * s.b.sqrt())
        .sum();
    Fidelity {
        value: value.min(1.0),
        error_bound: p.mass_deficit.sqrt() + q.mass_deficit.sqrt(),
    }
}

/// Shannon entropy of the retained weights.
pub fn entropy(s: &Spectrum, base: LogBase) -> Entropy {
    let nats: f64 = s
        .levels
        .iter()
        .map(|l| -l.multiplicity * l.weight * l.weight.ln())
        .sum();
    let d = s.mass_deficit;
    let tail = s.full_rank - s.rank();
    let truncation_bound = if d > 0.0 && tail >= 1.0 {
        (d * (tail / d).ln()).max(0.0)
    } else {
        0.0
    };
    Entropy {
        value: nats.max(0.0) / base.scale(),
        truncation_bound: truncation_bound / base.scale(),
    }
}

/// `true` iff `p` majorizes `q`: every partial sum of `p↓` dominates that of `q↓`.
pub fn majorizes(p: &Spectrum, q: &Spectrum) -> Result<bool> {
    if !p.is_exact() || !q.is_exact() {
        return Err(Error::unsupported(
            "majorization requires spectra without truncated mass",
        ));
    }
    let (mut sp, mut sq) = (0.0, 0.0);
    for s in segments(&p.levels, &q.levels) {
        sp += s.len * s.a;
        sq += s.len * s.b;
        if sp < sq - ABS_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A run of indices on which two sorted, zero-padded spectra are both constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Segment {
    pub len: f64,
    pub a: f64,
    pub b: f64,
}

pub(crate) fn segments(a: &[Level], b: &[Level]) -> Vec<Segment> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut ra = a.first().map_or(0.0, |l| l.multiplicity);
    let mut rb = b.first().map_or(0.0, |l| l.multiplicity);
    while i < a.len() || j < b.len() {
        let wa = a.get(i).map_or(0.0, |l| l.weight);
        let wb = b.get(j).map_or(0.0, |l| l.weight);
        let len = if i >= a.len() {
            rb
        } else if j >= b.len() {
            ra
        } else {
            ra.min(rb)
        };
        out.push(Segment { len, a: wa, b: wb });
        if i < a.len() {
            ra -= len;
            if ra <= COUNT_EPS * a[i].multiplicity {
                i += 1;
                ra = a.get(i).map_or(0.0, |l| l.multiplicity);
            }
        }
        if j < b.len() {
            rb -= len;
            if rb <= COUNT_EPS * b[j].multiplicity {
                j += 1;
                rb = b.get(j).map_or(0.0, |l| l.multiplicity);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &Spectrum) -> Vec<f64> {
        s.expand().unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn self_fidelity_survives_tiny_weights() {
        let s = Spectrum::powers(0.5).unwrap().tensor_power(1024, Prune::default());
        assert!(s.levels().last().unwrap().weight < 1e-300);
        let f = sorted_fidelity(&s, &s).value;
        assert!((f - (1.0 - s.mass_deficit())).abs() < 1e-9, "{f}");
    }

    #[test]
    fn construction_examples() {
        assert!(close(&w(&Spectrum::new(&[2.0, 2.0]).unwrap()), &[0.5, 0.5]));
        assert!(close(&w(&Spectrum::new(&[1.0]).unwrap()), &[1.0]));
        assert!(close(
            &w(&Spectrum::new(&[1.0, 0.5]).unwrap()),
            &[2.0 / 3.0, 1.0 / 3.0]
        ));
        assert!(close(&w(&Spectrum::new(&[0.0, 3.0, 0.0, 1.0]).unwrap()), &[0.75, 0.25]));
    }

    #[test]
    fn construction_rejects_bad_weights() {
        assert!(matches!(Spectrum::new(&[0.0, 0.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(Spectrum::new(&[1.0, -0.1]), Err(Error::InvalidInput(_))));
        assert!(matches!(Spectrum::new(&[]), Err(Error::InvalidInput(_))));
        assert!(matches!(Spectrum::new(&[f64::NAN]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tensor_examples() {
        let half = Spectrum::new(&[1.0, 1.0]).unwrap();
        let pw = Spectrum::powers(0.5).unwrap();
        let id = Spectrum::pure();
        assert!(id.tensor(&pw, Prune::EXACT).approx_eq(&pw, 1e-15));
        assert!(close(&w(&half.tensor(&half, Prune::EXACT)), &[0.25; 4]));
        assert!(close(
            &w(&pw.tensor(&pw, Prune::EXACT)),
            &[4.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0]
        ));
    }

    #[test]
    fn tensor_pruning_tracks_deficit() {
        let s = Spectrum::new(&[1.0, 1e-7]).unwrap();
        let sq = s.tensor(&s, Prune { threshold: 1e-12, level_cap: 10 });
        // the 1e-14 corner is dropped, the 1e-7 cross terms are kept
        assert_eq!(sq.num_levels(), 2);
        let dropped = (1e-7f64 / (1.0 + 1e-7)).powi(2);
        assert!((sq.mass_deficit() - dropped).abs() < 1e-20);
        assert!((sq.retained_mass() + sq.mass_deficit() - 1.0).abs() < 1e-12);

        let capped = s.tensor(&s, Prune { threshold: 0.0, level_cap: 1 });
        assert_eq!(capped.num_levels(), 1);
        assert!(capped.mass_deficit() > 1e-7);
    }

    #[test]
    fn powers_tensor_power_has_binomial_levels() {
        let pw = Spectrum::powers(0.5).unwrap();
        let p60 = pw.tensor_power(60, Prune::EXACT);
        assert_eq!(p60.num_levels(), 61);
        assert_eq!(p60.rank(), 2f64.powi(60));
        assert!((p60.retained_mass() - 1.0).abs() < 1e-12);
        assert_eq!(p60.levels()[30].multiplicity, 118264581564861424.0);
    }

    #[test]
    fn fidelity_examples() {
        let s = Spectrum::new(&[0.6, 0.3, 0.1]).unwrap();
        assert!((sorted_fidelity(&s, &s).value - 1.0).abs() < 1e-15);
        let f = sorted_fidelity(&Spectrum::pure(), &Spectrum::new(&[0.5, 0.5]).unwrap());
        assert!((f.value - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.error_bound, 0.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Spectrum::pure(), LogBase::Nats).value, 0.0);
        let bell = Spectrum::new(&[0.5, 0.5]).unwrap();
        assert!((entropy(&bell, LogBase::Nats).value - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((entropy(&bell, LogBase::Bits).value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn majorization_examples() {
        let p = Spectrum::new(&[0.7, 0.3]).unwrap();
        let q = Spectrum::new(&[0.6, 0.4]).unwrap();
        assert!(majorizes(&p, &p).unwrap());
        assert!(majorizes(&p, &q).unwrap());
        assert!(!majorizes(&q, &p).unwrap());
        let u = Spectrum::uniform(3.0).unwrap();
        let r = Spectrum::new(&[0.5, 0.3, 0.2]).unwrap();
        assert!(majorizes(&r, &u).unwrap());
        assert!(!majorizes(&u, &r).unwrap());
    }

    #[test]
    fn majorization_rejects_truncated_input() {
        let s = Spectrum::new(&[1.0, 1e-7]).unwrap();
        let t = s.tensor(&s, Prune::default());
        assert!(matches!(majorizes(&t, &s), Err(Error::Unsupported(_))));
    }

    #[test]
    fn uniform_rejects_fractional_count() {
        assert!(Spectrum::uniform(2.5).is_err());
        assert!(Spectrum::uniform(0.0).is_err());
    }

    fn arb_spectrum() -> impl Strategy<Value = Spectrum> {
        prop::collection::vec(0.0f64..1.0, 1..6)
            .prop_filter("positive", |v| v.iter().sum::<f64>() > 1e-3)
            .prop_map(|v| Spectrum::new(&v).unwrap())
    }

    fn check_invariants(s: &Spectrum) -> bool {
        let sorted = s.levels().windows(2).all(|p| p[0].weight > p[1].weight);
        let positive = s.levels().iter().all(|l| l.weight > 0.0);
        let mass = (s.retained_mass() + s.mass_deficit() - 1.0).abs() < 1e-12;
        sorted && positive && mass
    }

    proptest! {
        #[test]
        fn outputs_satisfy_invariants(a in arb_spectrum(), b in arb_spectrum(), k in 1usize..4) {
            prop_assert!(check_invariants(&a));
            prop_assert!(check_invariants(&a.tensor(&b, Prune::default())));
            prop_assert!(check_invariants(&a.tensor_power(k, Prune::default())));
            let pr = Prune { threshold: 1e-3, level_cap: 4 };
            prop_assert!(check_invariants(&a.tensor(&b, pr)));
        }

        #[test]
        fn fidelity_symmetric_and_bounded(a in arb_spectrum(), b in arb_spectrum(), r in arb_spectrum()) {
            let f_ab = sorted_fidelity(&a, &b).value;
            prop_assert!((f_ab - sorted_fidelity(&b, &a).value).abs() < 1e-14);
            prop_assert!(f_ab <= 1.0);
            let ar = a.tensor(&r, Prune::EXACT);
            let br = b.tensor(&r, Prune::EXACT);
            prop_assert!(sorted_fidelity(&ar, &br).value >= f_ab - 1e-12);
            if (f_ab - 1.0).abs() < 1e-15 {
                prop_assert!(a.max_abs_diff(&b) < 1e-6);
            }
        }

        #[test]
        fn entropy_additive_and_prune_monotone(a in arb_spectrum(), b in arb_spectrum()) {
            let ab = a.tensor(&b, Prune::EXACT);
            let lhs = entropy(&ab, LogBase::Nats).value;
            let rhs = entropy(&a, LogBase::Nats).value + entropy(&b, LogBase::Nats).value;
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let pruned = a.tensor(&b, Prune { threshold: 0.05, level_cap: usize::MAX });
            let e = entropy(&pruned, LogBase::Nats);
            prop_assert!(e.value <= lhs + 1e-12);
            prop_assert!(e.value + e.truncation_bound >= lhs - 1e-12);
        }

        #[test]
        fn majorization_is_a_partial_order(a in arb_spectrum(), b in arb_spectrum(), c in arb_spectrum()) {
            prop_assert!(majorizes(&a, &a).unwrap());
            if majorizes(&a, &b).unwrap() && majorizes(&b, &a).unwrap() {
                prop_assert!(a.max_abs_diff(&b) < 1e-9);
            }
            if majorizes(&a, &b).unwrap() && majorizes(&b, &c).unwrap() {
                prop_assert!(majorizes(&a, &c).unwrap());
            }
        }
    }
}
