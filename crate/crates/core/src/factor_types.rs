//! Factor-type labels for infinite tensor products of a constant Schmidt
//! spectrum, and their composition under tensoring ("stacking").
//!
//! For a constant sequence the type is read off the group generated by the
//! log-ratios of the spectrum: trivial group means type I (pure) or II
//! (maximally mixed), a cyclic group `step·Z` means III_λ with
//! `λ = exp(-step)`, and a dense group means III_1.
//!
//! Irrationality of a float ratio is undecidable, so "dense" is decided by a
//! continued-fraction test with a fixed depth, tolerance and denominator
//! bound. The criterion used travels with every classification.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{Spectrum, ABS_TOL};

/// Tolerance for real-valued GCD reduction and generator deduplication.
pub const GCD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorType {
    #[serde(rename = "i_finite")]
    IFinite { n: u64 },
    #[serde(rename = "i_infinite")]
    IInfinite,
    #[serde(rename = "ii_1")]
    II1,
    #[serde(rename = "ii_infinite")]
    IIInfinite,
    /// Representable for completeness; never produced by the classifier.
    #[serde(rename = "iii_0")]
    III0,
    #[serde(rename = "iii_lambda")]
    IIILambda { lambda: f64 },
    #[serde(rename = "iii_1")]
    III1,
    Undetermined { reason: String },
}

impl FactorType {
    pub fn undetermined(reason: impl Into<String>) -> Self {
        FactorType::Undetermined {
            reason: reason.into(),
        }
    }

    /// Coarse family: "I", "II", "III" or "Undetermined".
    pub fn family(&self) -> &'static str {
        match self {
            FactorType::IFinite { .. } | FactorType::IInfinite => "I",
            FactorType::II1 | FactorType::IIInfinite => "II",
            FactorType::III0 | FactorType::IIILambda { .. } | FactorType::III1 => "III",
            FactorType::Undetermined { .. } => "Undetermined",
        }
    }

    pub fn is_undetermined(&self) -> bool {
        matches!(self, FactorType::Undetermined { .. })
    }

    pub fn is_properly_infinite(&self) -> bool {
        !matches!(
            self,
            FactorType::IFinite { .. } | FactorType::II1 | FactorType::Undetermined { .. }
        )
    }

    /// Position in the chain I_n < I_∞ < II_1 < II_∞ < III_0 < III_λ < III_1.
    fn order_key(&self) -> Option<(u8, f64)> {
        Some(match self {
            FactorType::IFinite { n } => (0, *n as f64),
            FactorType::IInfinite => (1, 0.0),
            FactorType::II1 => (2, 0.0),
            FactorType::IIInfinite => (3, 0.0),
            FactorType::III0 => (4, 0.0),
            FactorType::IIILambda { lambda } => (5, *lambda),
            FactorType::III1 => (6, 0.0),
            FactorType::Undetermined { .. } => return None,
        })
    }

    /// Same type up to `tol` on λ.
    pub fn approx_eq(&self, other: &FactorType, tol: f64) -> bool {
        match (self, other) {
            (FactorType::IIILambda { lambda: a }, FactorType::IIILambda { lambda: b }) => {
                (a - b).abs() <= tol
            }
            (FactorType::Undetermined { .. }, FactorType::Undetermined { .. }) => true,
            _ => self == other,
        }
    }
}

/// Ordering by LOCC resourcefulness; `None` when either side is undetermined.
impl PartialOrd for FactorType {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (a, b) = (self.order_key()?, other.order_key()?);
        Some(a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
    }
}

impl fmt::Display for FactorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorType::IFinite { n } => write!(f, "I_{n}"),
            FactorType::IInfinite => write!(f, "I_inf"),
            FactorType::II1 => write!(f, "II_1"),
            FactorType::IIInfinite => write!(f, "II_inf"),
            FactorType::III0 => write!(f, "III_0"),
            FactorType::IIILambda { lambda } => write!(f, "III_{lambda}"),
            FactorType::III1 => write!(f, "III_1"),
            FactorType::Undetermined { reason } => write!(f, "Undetermined ({reason})"),
        }
    }
}

/// Parameters of the continued-fraction rationality test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalityCriterion {
    pub depth: usize,
    pub tol: f64,
    pub max_denominator: u64,
}

impl Default for RationalityCriterion {
    fn default() -> Self {
        RationalityCriterion {
            depth: 20,
            tol: 1e-12,
            max_denominator: 1_000_000,
        }
    }
}

/// Continued-fraction expansion of `x / y`. Returns the first convergent
/// `p / q` (coprime, `q <= max_denominator`) whose integer relation
/// `|q·x - p·y| / max(x, y)` falls below `tol`.
///
/// Measuring the relation rather than `|x/y - p/q|` keeps the denominator
/// bound meaningful: a convergent with `q` near `10^6` approximates almost
/// any ratio to `10^-12`, but leaves a residual relation near `10^-6`.
pub fn rationality_test(x: f64, y: f64, criterion: &RationalityCriterion) -> Option<(u64, u64)> {
    if !(x > 0.0 && y > 0.0) {
        return None;
    }
    let r = x / y;
    if !r.is_finite() {
        return None;
    }
    // convergents h_n / k_n
    let (mut h_prev, mut h) = (1u128, r.floor() as u128);
    let (mut k_prev, mut k) = (0u128, 1u128);
    let mut frac = r - r.floor();
    for _ in 0..=criterion.depth {
        if k > criterion.max_denominator as u128 {
            return None;
        }
        if (k as f64 * x - h as f64 * y).abs() < criterion.tol * x.max(y) {
            return Some((h as u64, k as u64));
        }
        if frac < f64::EPSILON {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as u128;
        (h_prev, h) = (h, a.checked_mul(h)?.checked_add(h_prev)?);
        (k_prev, k) = (k, a.checked_mul(k)?.checked_add(k_prev)?);
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case")]
pub enum GroupStructure {
    Trivial,
    Cyclic { step: f64 },
    Dense,
}

/// The additive group generated by the log-ratios of a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioGroup {
    /// Distinct positive log-ratios `ln(p_i / p_j)`, ascending.
    pub generators: Vec<f64>,
    pub structure: GroupStructure,
}

/// Real GCD of two positive numbers by Euclidean reduction.
fn real_gcd(mut a: f64, mut b: f64, tol: f64) -> f64 {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while b > tol {
        let r = a % b;
        let r = if b - r <= tol { 0.0 } else { r };
        a = b;
        b = r;
    }
    a
}

/// Structure of the group generated by `generators` (positive, ascending).
fn group_structure(generators: &[f64], criterion: &RationalityCriterion) -> GroupStructure {
    let Some(&base) = generators.first() else {
        return GroupStructure::Trivial;
    };
    let mut lcm = 1u64;
    for &g in &generators[1..] {
        let Some((_, q)) = rationality_test(g, base, criterion) else {
            return GroupStructure::Dense;
        };
        lcm = lcm.lcm(&q);
        if lcm > criterion.max_denominator {
            return GroupStructure::Dense;
        }
    }
    let gcd = generators[1..]
        .iter()
        .fold(base, |acc, &g| real_gcd(acc, g, GCD_TOL * base));
    // snap to an exact divisor of the smallest generator
    let step = base / (base / gcd).round();
    let all_multiples = generators.iter().all(|g| {
        let n = (g / step).round();
        n >= 1.0 && (g - n * step).abs() <= GCD_TOL * g.max(1.0)
    });
    if all_multiples {
        GroupStructure::Cyclic { step }
    } else {
        GroupStructure::Dense
    }
}

pub fn ratio_group(s: &Spectrum, criterion: &RationalityCriterion) -> Result<RatioGroup> {
    if !s.is_exact() {
        return Err(Error::unsupported(
            "ratio group needs a spectrum without truncated mass",
        ));
    }
    let logs: Vec<f64> = s.levels().iter().map(|l| l.weight.ln()).collect();
    let mut generators = Vec::new();
    for i in 0..logs.len() {
        for j in i + 1..logs.len() {
            generators.push(logs[i] - logs[j]);
        }
    }
    generators.sort_by(f64::total_cmp);
    generators.dedup_by(|a, b| (*a - *b).abs() <= GCD_TOL * b.max(1.0));
    generators.retain(|g| *g > ABS_TOL);
    let structure = group_structure(&generators, criterion);
    Ok(RatioGroup {
        generators,
        structure,
    })
}

/// Result of classifying a constant ITPFI sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub factor_type: FactorType,
    pub group: RatioGroup,
    pub criterion: RationalityCriterion,
}

/// Type of the infinite tensor product of copies of `s`. With
/// `ambient_properly_infinite`, the result is tensored with I_∞
/// (I_n becomes I_∞ and II_1 becomes II_∞).
pub fn classify_itpfi(s: &Spectrum, ambient_properly_infinite: bool) -> Result<Classification> {
    classify_itpfi_with(s, ambient_properly_infinite, &RationalityCriterion::default())
}

pub fn classify_itpfi_with(
    s: &Spectrum,
    ambient_properly_infinite: bool,
    criterion: &RationalityCriterion,
) -> Result<Classification> {
    let group = ratio_group(s, criterion)?;
    let factor_type = match group.structure {
        GroupStructure::Trivial if s.is_pure() => match ambient_properly_infinite {
            true => FactorType::IInfinite,
            false => FactorType::IFinite { n: 1 },
        },
        GroupStructure::Trivial => match ambient_properly_infinite {
            true => FactorType::IIInfinite,
            false => FactorType::II1,
        },
        GroupStructure::Cyclic { step } => FactorType::IIILambda {
            lambda: (-step).exp(),
        },
        GroupStructure::Dense => FactorType::III1,
    };
    Ok(Classification {
        factor_type,
        group,
        criterion: *criterion,
    })
}

/// Type of a sequence given by a finite prefix followed by a tail window that
/// is expected to be constant. Only the tail determines the subtype; the
/// prefix contributes a finite type-I factor of dimension equal to the
/// product of the prefix ranks.
pub fn classify_sequence(
    prefix: &[Spectrum],
    tail: &[Spectrum],
    ambient_properly_infinite: bool,
) -> Result<FactorType> {
    let Some(first) = tail.first() else {
        return Ok(FactorType::undetermined("empty tail"));
    };
    if tail.iter().any(|t| !t.approx_eq(first, ABS_TOL)) {
        return Ok(FactorType::undetermined("non-constant tail out of scope"));
    }
    let tail_type = classify_itpfi(first, ambient_properly_infinite)?.factor_type;
    let mut prefix_dim = 1u64;
    for s in prefix {
        let r = s.rank();
        if r > u64::MAX as f64 {
            return Ok(compose(&FactorType::IInfinite, &tail_type));
        }
        prefix_dim = prefix_dim.saturating_mul(r as u64);
    }
    Ok(compose(&FactorType::IFinite { n: prefix_dim }, &tail_type))
}

/// Type of the tensor product of two factors.
pub fn compose(t1: &FactorType, t2: &FactorType) -> FactorType {
    compose_with(t1, t2, &RationalityCriterion::default())
}

pub fn compose_with(t1: &FactorType, t2: &FactorType, criterion: &RationalityCriterion) -> FactorType {
    use FactorType::*;
    match (t1, t2) {
        (Undetermined { reason }, _) | (_, Undetermined { reason }) => Undetermined {
            reason: reason.clone(),
        },
        (III0, _) | (_, III0) => FactorType::undetermined("III_0 composition not supported"),
        (III1, _) | (_, III1) => III1,
        (IIILambda { lambda: a }, IIILambda { lambda: b }) => {
            let (la, lb) = (-a.ln(), -b.ln());
            match rationality_test(la, lb, criterion) {
                // la / lb = p / q with p, q coprime: both are multiples of la / p
                Some((p, _)) => IIILambda {
                    lambda: (-la / p as f64).exp(),
                },
                None => III1,
            }
        }
        (IIILambda { lambda }, _) | (_, IIILambda { lambda }) => IIILambda { lambda: *lambda },
        (IIInfinite, _) | (_, IIInfinite) => IIInfinite,
        (II1, IInfinite) | (IInfinite, II1) => IIInfinite,
        (II1, _) | (_, II1) => II1,
        (IInfinite, _) | (_, IInfinite) => IInfinite,
        (IFinite { n }, IFinite { n: m }) => IFinite {
            n: n.saturating_mul(*m),
        },
    }
}

/// Closed-form worst embezzlement capability of a III_λ factor,
/// `2(1 - sqrt λ)/(1 + sqrt λ)`; `λ = 1` gives 0.
pub fn kappa_max_formula(lambda: f64) -> f64 {
    let r = lambda.sqrt();
    2.0 * (1.0 - r) / (1.0 + r)
}
