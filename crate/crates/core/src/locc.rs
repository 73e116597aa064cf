//! Pure-state LOCC conversion between Schmidt spectra.
//!
//! Direction convention: a source `p` converts exactly into a target `q` iff
//! `p` is majorized by `q` (the target is "more ordered"). When exact
//! conversion is impossible, the best achievable overlap is attained by
//! converting into the reachable spectrum closest to `q`, built by the
//! tail-ratio construction in [`max_conversion_fidelity`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embezzlement::first_index_of_persistent;
use crate::error::{Error, Result};
use crate::spectra::{majorizes, segments, Spectrum};

/// Largest Bell-pair count probed by [`distillable_bells`].
pub const MAX_BELL_PAIRS: u32 = 1000;

fn require_exact(p: &Spectrum, q: &Spectrum) -> Result<()> {
    if !p.is_exact() || !q.is_exact() {
        return Err(Error::unsupported(
            "LOCC conversion requires spectra without truncated mass",
        ));
    }
    Ok(())
}

/// `true` iff the source converts exactly into the target by LOCC.
pub fn convertible(source: &Spectrum, target: &Spectrum) -> Result<bool> {
    majorizes(target, source)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    /// Overlap `Σ sqrt(γ_i q_i)` with the best reachable spectrum `γ`.
    pub fidelity: f64,
    /// 1-based index where the construction first cuts the tail.
    pub witness: Option<u64>,
}

/// Best overlap with `target` over all pure states reachable from `source`.
pub fn max_conversion_fidelity(source: &Spectrum, target: &Spectrum) -> Result<Conversion> {
    require_exact(source, target)?;
    let segs = segments(source.levels(), target.levels());
    let n = segs.len();
    let mut ep = vec![0.0; n + 1];
    let mut eq = vec![0.0; n + 1];
    for s in (0..n).rev() {
        ep[s] = ep[s + 1] + segs[s].len * segs[s].a;
        eq[s] = eq[s + 1] + segs[s].len * segs[s].b;
    }

    // Cut the tail where the ratio of remaining source mass to remaining
    // target mass is smallest, scale the target there, repeat on the head.
    let mut ratio = vec![0.0; n];
    let mut upper = n;
    let mut witness = None;
    while upper > 0 {
        let mut best: Option<(usize, f64)> = None;
        for s in 0..upper {
            let dq = eq[s] - eq[upper];
            if dq <= 0.0 {
                continue;
            }
            let r = (ep[s] - ep[upper]).max(0.0) / dq;
            if best.is_none_or(|(_, b)| r <= b) {
                best = Some((s, r));
            }
        }
        let Some((cut, r)) = best else {
            break;
        };
        if witness.is_none() {
            let pos: f64 = segs[..cut].iter().map(|s| s.len).sum();
            witness = Some(pos as u64 + 1);
        }
        ratio[cut..upper].iter_mut().for_each(|x| *x = r);
        upper = cut;
    }
    let fidelity: f64 = segs
        .iter()
        .zip(&ratio)
        .map(|(s, r)| s.len * s.b * r.sqrt())
        .sum();
    let fidelity = if convertible(source, target)? {
        1.0
    } else {
        fidelity.min(1.0)
    };
    Ok(Conversion { fidelity, witness })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub feasible_exact: bool,
    pub max_fidelity: f64,
    /// Bell pairs distillable from the source at the queried ε.
    pub bell_count: u32,
    pub witness: Option<u64>,
}

pub fn conversion_report(source: &Spectrum, target: &Spectrum, eps: f64) -> Result<ConversionReport> {
    let conv = max_conversion_fidelity(source, target)?;
    Ok(ConversionReport {
        feasible_exact: convertible(source, target)?,
        max_fidelity: conv.fidelity,
        bell_count: distillable_bells(source, eps)?,
        witness: conv.witness,
    })
}

/// Largest `k` such that `k` Bell pairs (uniform over `2^k`) are reachable
/// with overlap at least `1 - eps`.
pub fn distillable_bells(source: &Spectrum, eps: f64) -> Result<u32> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("ε must lie in (0, 1), got {eps}")));
    }
    if !source.is_exact() {
        return Err(Error::unsupported(
            "LOCC conversion requires spectra without truncated mass",
        ));
    }
    // reachable states keep Schmidt rank <= rank(source), so the overlap with
    // 2^k Bell pairs is at most sqrt(rank / 2^k)
    let limit = source.rank() / (1.0 - eps).powi(2);
    let mut best = 0;
    let mut k = 1u32;
    while k <= MAX_BELL_PAIRS && 2f64.powi(k as i32 - 1) <= limit {
        let bells = Spectrum::uniform(2f64.powi(k as i32))?;
        if max_conversion_fidelity(source, &bells)?.fidelity >= 1.0 - eps {
            best = k;
        }
        k += 1;
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillationCheck {
    pub fidelities: Vec<f64>,
    /// First family index from which every member reaches `1 - eps`.
    pub l0: Option<usize>,
}

/// Smallest family index `L_0` with conversion overlap `>= 1 - eps` for
/// every tested member at index `>= L_0`.
pub fn finite_size_distillation_check(
    family: &[Spectrum],
    target: &Spectrum,
    eps: f64,
) -> Result<DistillationCheck> {
    if !(eps > 0.0) {
        return Err(Error::invalid("ε must be positive"));
    }
    let fidelities = family
        .par_iter()
        .map(|s| max_conversion_fidelity(s, target).map(|c| c.fidelity))
        .collect::<Result<Vec<_>>>()?;
    Ok(DistillationCheck {
        l0: first_index_of_persistent(&fidelities, |f| f >= 1.0 - eps),
        fidelities,
    })
}
