//! One-dimensional entanglement diagnostics: the half-filled XX chain and
//! colored Motzkin chains, plus the scaling fits used to read off their
//! entropy growth.

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{Level, Prune, Spectrum};

/// Largest XX interval accepted by default.
pub const XX_CAP: usize = 512;
/// Largest Motzkin chain length accepted by default.
pub const MOTZKIN_CAP: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainKind {
    XxHalfFilled,
    ColoredMotzkin { s: u32 },
}

/// A chain and the length of the cut interval (`ℓ` for XX, `L` for Motzkin).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSpectrumRequest {
    pub chain: ChainKind,
    pub length: usize,
}

impl IntervalSpectrumRequest {
    pub fn spectrum(&self, prune: Prune) -> Result<Spectrum> {
        match self.chain {
            ChainKind::XxHalfFilled => xx_interval_spectrum(self.length, prune),
            ChainKind::ColoredMotzkin { s } => motzkin_spectrum(self.length, s, prune),
        }
    }

    /// Entanglement entropy in nats, computed without truncation.
    pub fn entropy(&self) -> Result<f64> {
        match self.chain {
            ChainKind::XxHalfFilled => xx_entropy(self.length),
            ChainKind::ColoredMotzkin { s } => motzkin_entropy(self.length, s),
        }
    }
}

fn xx_check(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::invalid("interval length must be at least 1"));
    }
    if l > XX_CAP {
        return Err(Error::CapExceeded {
            what: "XX interval length",
            requested: l as u128,
            cap: XX_CAP as u128,
        });
    }
    Ok(())
}

/// Occupations `ν_k ∈ [0, 1]` of the interval's correlation matrix,
/// ascending.
pub fn xx_modes(l: usize) -> Result<Vec<f64>> {
    xx_check(l)?;
    let c = DMatrix::from_fn(l, l, |j, k| {
        if j == k {
            0.5
        } else {
            let d = (j as f64 - k as f64) * std::f64::consts::PI;
            (d / 2.0).sin() / d
        }
    });
    let mut nu: Vec<f64> = SymmetricEigen::new(c)
        .eigenvalues
        .iter()
        .map(|x| x.clamp(0.0, 1.0))
        .collect();
    nu.sort_by(f64::total_cmp);
    Ok(nu)
}

fn binary_entropy(nu: f64) -> f64 {
    [nu, 1.0 - nu]
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Entropy of the interval in nats, summed over modes.
pub fn xx_entropy(l: usize) -> Result<f64> {
    Ok(xx_modes(l)?.into_iter().map(binary_entropy).sum())
}

/// Schmidt spectrum `⊗_k [ν_k, 1 - ν_k]` of an interval of `l` sites.
pub fn xx_interval_spectrum(l: usize, prune: Prune) -> Result<Spectrum> {
    let mut modes = xx_modes(l)?;
    // most mixed first, so pruning sees the small tails last
    modes.sort_by(|a, b| (a - 0.5).abs().total_cmp(&(b - 0.5).abs()));
    let mut acc = Spectrum::pure();
    for nu in modes {
        if nu == 0.0 || nu == 1.0 {
            continue;
        }
        acc = acc.tensor(&Spectrum::new(&[nu, 1.0 - nu])?, prune);
    }
    Ok(acc)
}

/// How densely the log-ratios `ln(p_i / p_j)` of the leading levels cover a
/// window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioDensity {
    pub window: (f64, f64),
    /// Log-ratios found inside the window.
    pub count: usize,
    /// Largest gap between consecutive log-ratios, window ends included.
    pub max_gap: f64,
}

/// Log-ratio coverage of `window` using the `max_levels` largest levels.
pub fn ratio_density(s: &Spectrum, window: (f64, f64), max_levels: usize) -> Result<RatioDensity> {
    let (lo, hi) = window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("window must be a finite interval lo < hi"));
    }
    let logs: Vec<f64> = s.levels().iter().take(max_levels).map(|l| l.weight.ln()).collect();
    let mut r: Vec<f64> = Vec::new();
    for (i, a) in logs.iter().enumerate() {
        for b in &logs[i..] {
            let d = a - b;
            if d >= lo && d <= hi {
                r.push(d);
            }
        }
    }
    let count = r.len();
    r.push(lo);
    r.push(hi);
    r.sort_by(f64::total_cmp);
    let max_gap = r.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(RatioDensity {
        window,
        count,
        max_gap,
    })
}

/// Left-prefix counts of colored Motzkin walks.
#[derive(Clone, Debug, PartialEq)]
pub struct MotzkinCounts {
    pub half: usize,
    pub s: u32,
    /// `n[h]`: prefixes of length `half` ending at height `h` with a fixed
    /// color word on their unmatched up steps.
    pub n: Vec<BigUint>,
    /// Number of colored Motzkin walks of length `2 half`, `Σ_h s^h n[h]^2`.
    pub total: BigUint,
}

/// `n(t+1, h) = n(t, h) + n(t, h-1) + s n(t, h+1)`: a flat step, an
/// unmatched up step whose color the word fixes, or a down step closing a
/// pair whose color is free.
pub fn motzkin_counts(half: usize, s: u32) -> Result<MotzkinCounts> {
    if s == 0 {
        return Err(Error::invalid("color count must be at least 1"));
    }
    if 2 * half > MOTZKIN_CAP {
        return Err(Error::CapExceeded {
            what: "Motzkin chain length",
            requested: 2 * half as u128,
            cap: MOTZKIN_CAP as u128,
        });
    }
    let sb = BigUint::from(s);
    let mut n = vec![BigUint::from(1u32)];
    for _ in 0..half {
        let mut next = vec![BigUint::zero(); n.len() + 1];
        for (h, c) in n.iter().enumerate() {
            next[h] += c;
            next[h + 1] += c;
            if h > 0 {
                next[h - 1] += &sb * c;
            }
        }
        n = next;
    }
    let mut total = BigUint::zero();
    let mut colors = BigUint::from(1u32);
    for c in &n {
        total += &colors * c * c;
        colors *= &sb;
    }
    Ok(MotzkinCounts { half, s, n, total })
}

fn half_length(l: usize) -> Result<usize> {
    if l == 0 || !l.is_multiple_of(2) {
        return Err(Error::invalid(format!("Motzkin length must be even and positive, got {l}")));
    }
    Ok(l / 2)
}

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
        .to_f64()
        .unwrap_or(0.0)
}

fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Midpoint Schmidt spectrum of the uniform superposition of colored
/// Motzkin walks: level `h` has weight `n[h]^2 / total` and multiplicity
/// `s^h`. Levels too small to represent go straight into the deficit.
pub fn motzkin_spectrum(l: usize, s: u32, prune: Prune) -> Result<Spectrum> {
    let c = motzkin_counts(half_length(l)?, s)?;
    let sb = BigUint::from(s);
    let mut colors = BigUint::from(1u32);
    let mut levels = Vec::new();
    let mut deficit = 0.0;
    let mut full_rank = 0.0f64;
    for n in &c.n {
        let sq = n * n;
        let mult = colors.to_f64().unwrap_or(f64::INFINITY);
        let weight = ratio_f64(&sq, &c.total);
        full_rank += mult;
        if weight > 0.0 && mult.is_finite() {
            levels.push(Level::new(weight, mult));
        } else {
            deficit += ratio_f64(&(&colors * &sq), &c.total);
        }
        colors *= &sb;
    }
    Ok(Spectrum::from_normalized(levels, deficit, full_rank.min(f64::MAX)).pruned(prune))
}

/// Entropy in nats of the Motzkin midpoint cut, from the exact counts.
pub fn motzkin_entropy(l: usize, s: u32) -> Result<f64> {
    let c = motzkin_counts(half_length(l)?, s)?;
    let ln_total = big_ln(&c.total);
    let sb = BigUint::from(s);
    let mut colors = BigUint::from(1u32);
    let mut out = 0.0;
    for n in &c.n {
        let sq = n * n;
        let mass = ratio_f64(&(&colors * &sq), &c.total);
        if mass > 0.0 {
            out += mass * (ln_total - big_ln(&sq));
        }
        colors *= &sb;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    /// `S = a ln ℓ + b`
    Log,
    /// `S = a sqrt(L) + b`
    Sqrt,
    /// `ln S = a ln L + b`; `a` is the growth exponent.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub a: f64,
    pub b: f64,
    /// Root-mean-square residual in the fitted variable.
    pub residual: f64,
}

/// Least-squares fit of `(length, entropy)` samples.
pub fn entropy_scaling_fit(samples: &[(f64, f64)], model: FitModel) -> Result<ScalingFit> {
    if samples.len() < 3 {
        return Err(Error::invalid("need at least 3 samples"));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) || samples[0].0 <= 0.0 {
        return Err(Error::invalid("lengths must be positive and strictly increasing"));
    }
    if model == FitModel::Power && samples.iter().any(|s| s.1 <= 0.0) {
        return Err(Error::invalid("power-law fit needs positive entropies"));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(l, s)| match model {
            FitModel::Log => (l.ln(), s),
            FitModel::Sqrt => (l.sqrt(), s),
            FitModel::Power => (l.ln(), s.ln()),
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > f64::EPSILON * n * mx.abs().max(1.0)) {
        return Err(Error::invalid("degenerate design matrix"));
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let residual = (pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ScalingFit {
        model,
        a,
        b,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{entropy, LogBase};
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn xx_examples() {
        let s1 = xx_interval_spectrum(1, Prune::default()).unwrap();
        assert!(s1.approx_eq(&Spectrum::new(&[0.5, 0.5]).unwrap(), 1e-15));
        assert!((xx_entropy(1).unwrap() - LN_2).abs() < 1e-15);
        let m = xx_modes(2).unwrap();
        assert!((m[0] - (0.5 - 1.0 / PI)).abs() < 1e-14);
        assert!((m[1] - (0.5 + 1.0 / PI)).abs() < 1e-14);
        let e2 = xx_entropy(2).unwrap();
        assert!((e2 - 0.948).abs() < 5e-4, "{e2}");
        let from_spec = entropy(&xx_interval_spectrum(2, Prune::default()).unwrap(), LogBase::Nats).value;
        assert!((from_spec - e2).abs() < 1e-12);
        assert!(xx_modes(0).is_err());
        assert!(matches!(xx_modes(XX_CAP + 1), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn xx_doubling_approaches_third_ln2() {
        let d = xx_entropy(256).unwrap() - xx_entropy(128).unwrap();
        assert!((d - LN_2 / 3.0).abs() < 5e-3, "{d}");
    }

    #[test]
    fn xx_log_fit_slope() {
        let samples: Vec<(f64, f64)> = [32, 48, 64, 96, 128, 192, 256]
            .iter()
            .map(|&l| (l as f64, xx_entropy(l).unwrap()))
            .collect();
        let f = entropy_scaling_fit(&samples, FitModel::Log).unwrap();
        assert!((f.a - 1.0 / 3.0).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn xx_modes_are_particle_hole_symmetric() {
        for l in [3, 10, 33] {
            let m = xx_modes(l).unwrap();
            for (a, b) in m.iter().zip(m.iter().rev()) {
                assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn xx_entropy_nondecreasing() {
        let e: Vec<f64> = (1..=64).map(|l| xx_entropy(l).unwrap()).collect();
        assert!(e.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn xx_ratios_fill_in() {
        let pr = Prune {
            threshold: 1e-10,
            level_cap: 1 << 14,
        };
        let gaps: Vec<f64> = [4, 16, 64]
            .iter()
            .map(|&l| {
                ratio_density(&xx_interval_spectrum(l, pr).unwrap(), (0.0, 4.0), 400)
                    .unwrap()
                    .max_gap
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn fit_recovery() {
        let synth: Vec<(f64, f64)> = (1..=6).map(|i| {
            let l = (4 * i) as f64;
            (l, 0.5 * l.ln() + 1.0)
        }).collect();
        let f = entropy_scaling_fit(&synth, FitModel::Log).unwrap();
        assert!((f.a - 0.5).abs() < 1e-12 && (f.b - 1.0).abs() < 1e-12 && f.residual < 1e-12);
        let synth: Vec<(f64, f64)> = (1..=6).map(|i| ((i * i) as f64, 2.0 * i as f64 - 3.0)).collect();
        let f = entropy_scaling_fit(&synth, FitModel::Sqrt).unwrap();
        assert!((f.a - 2.0).abs() < 1e-12 && (f.b + 3.0).abs() < 1e-12 && f.residual < 1e-12);
        assert!(entropy_scaling_fit(&synth[..2], FitModel::Log).is_err());
        assert!(entropy_scaling_fit(&[(2.0, 1.0), (1.0, 1.0), (3.0, 1.0)], FitModel::Log).is_err());
    }

    #[test]
    fn motzkin_small() {
        let s = motzkin_spectrum(2, 1, Prune::default()).unwrap();
        assert!(s.approx_eq(&Spectrum::new(&[0.5, 0.5]).unwrap(), 1e-15));
        assert!((motzkin_entropy(2, 1).unwrap() - LN_2).abs() < 1e-15);
        // Motzkin numbers 1, 2, 4, 9, 21, 51, 127
        let m: Vec<u64> = (0..=6)
            .map(|t| motzkin_counts(t, 1).unwrap().total.to_u64().unwrap())
            .collect();
        assert_eq!(m, vec![1, 2, 9, 51, 323, 2188, 15511]);
        assert!(motzkin_spectrum(3, 1, Prune::default()).is_err());
        assert!(motzkin_spectrum(2, 0, Prune::default()).is_err());
        assert!(matches!(motzkin_counts(1025, 2), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn motzkin_spectrum_and_entropy_agree() {
        for (l, s) in [(8, 1), (12, 2), (20, 3)] {
            let spec = motzkin_spectrum(l, s, Prune::EXACT).unwrap();
            assert!(spec.is_exact());
            let e = entropy(&spec, LogBase::Nats).value;
            assert!((e - motzkin_entropy(l, s).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn motzkin_large_is_finite() {
        let spec = motzkin_spectrum(MOTZKIN_CAP, 2, Prune::default()).unwrap();
        assert!(spec.mass_deficit() <= 1e-12 + 1e-15);
        let e = motzkin_entropy(MOTZKIN_CAP, 2).unwrap();
        assert!(e.is_finite() && e > 10.0);
    }

    #[test]
    fn motzkin_sqrt_growth() {
        let samples: Vec<(f64, f64)> = [16, 24, 32, 48, 64, 96, 128, 192, 256]
            .iter()
            .map(|&l| (l as f64, motzkin_entropy(l, 2).unwrap()))
            .collect();
        let sq = entropy_scaling_fit(&samples, FitModel::Sqrt).unwrap();
        let lg = entropy_scaling_fit(&samples, FitModel::Log).unwrap();
        assert!(sq.residual < lg.residual, "{sq:?} {lg:?}");
        let p = entropy_scaling_fit(&samples, FitModel::Power).unwrap();
        assert!((0.4..=0.6).contains(&p.a), "{p:?}");
    }

    proptest! {
        #[test]
        fn occupations_in_unit_interval(l in 1usize..40) {
            let m = xx_modes(l).unwrap();
            prop_assert!(m.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert!((m.iter().sum::<f64>() - l as f64 / 2.0).abs() < 1e-10);
        }
    }
}
