//! Finite-truncation probes of embezzlement of entanglement.
//!
//! A resource with Schmidt spectrum `r` embezzles a target `t` to the extent
//! that `r` and `r ⊗ t` are close up to local unitaries. The probe measures
//! the worst such distance over all targets of a fixed dimension.
//!
//! Two distances are reported for the same optimal overlap `F`:
//! `sqrt(2 - 2F)` (vector distance, at most `sqrt 2`) and `2 sqrt(1 - F^2)`
//! (trace distance of the pure states, at most 2). The closed-form κ_max of
//! a III_λ factor lives on the trace-distance scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{fidelity_distance, sorted_fidelity, trace_distance, Prune, Spectrum};

/// Truncated mass above which a probe is flagged unreliable.
pub const DEFICIT_BOUND: f64 = 1e-9;

/// Van Dam-Hayden family member: weights proportional to `1/j`, `j = 1..=n`.
pub fn vdh_spectrum(n: usize) -> Result<Spectrum> {
    if n == 0 {
        return Err(Error::invalid("van Dam-Hayden spectrum needs N >= 1"));
    }
    let weights: Vec<f64> = (1..=n).map(|j| 1.0 / j as f64).collect();
    Spectrum::new(&weights)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbezzleProbe {
    pub resource: Spectrum,
    pub copies: usize,
    pub target_dim: usize,
}

impl EmbezzleProbe {
    pub fn new(resource: Spectrum, copies: usize, target_dim: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::invalid("probe needs at least one copy"));
        }
        if target_dim < 2 {
            return Err(Error::invalid("target dimension must be at least 2"));
        }
        Ok(EmbezzleProbe {
            resource,
            copies,
            target_dim,
        })
    }

    /// `copies`-fold tensor power of the resource.
    pub fn effective_resource(&self, prune: Prune) -> Spectrum {
        self.resource.tensor_power(self.copies, prune)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbezzlementError {
    /// `sqrt(2 - 2F)`.
    pub error: f64,
    /// `2 sqrt(1 - F^2)`.
    pub norm_error: f64,
    pub fidelity: f64,
    /// Bound on `error` from truncated mass.
    pub error_bound: f64,
}

impl EmbezzlementError {
    fn from_fidelity(f: f64, f_bound: f64) -> Self {
        EmbezzlementError {
            error: fidelity_distance(f),
            norm_error: trace_distance(f),
            fidelity: f,
            error_bound: (2.0 * f_bound).sqrt(),
        }
    }
}

/// Distance between `resource ⊗ |0⟩` and `resource ⊗ target` after optimal
/// local unitaries.
pub fn embezzlement_error(resource: &Spectrum, target: &Spectrum) -> EmbezzlementError {
    if target.is_pure() {
        // nothing to embezzle; skip the summation roundoff that sqrt(1 - F) amplifies
        return EmbezzlementError::from_fidelity(1.0, 0.0);
    }
    let shifted = resource.tensor(target, Prune::EXACT);
    let f = sorted_fidelity(resource, &shifted);
    EmbezzlementError::from_fidelity(f.value, f.error_bound)
}

/// Resolution of the worst-case search over target spectra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetGrid {
    /// Grid intervals on `q ∈ [1/2, 1]` for two-dimensional targets; lattice
    /// resolution and number of seeded Dirichlet samples for larger targets.
    pub points: usize,
    /// Bracket width at which golden-section refinement stops.
    pub refine_tol: f64,
    pub seed: u64,
}

impl Default for TargetGrid {
    fn default() -> Self {
        TargetGrid {
            points: 64,
            refine_tol: 1e-6,
            seed: 0,
        }
    }
}

/// Worst embezzlement error over targets of one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub error: EmbezzlementError,
    pub target: Vec<f64>,
}

/// Maximizes the embezzlement error over `n`-dimensional targets.
pub fn worst_case_error(resource: &Spectrum, n: usize, grid: &TargetGrid) -> Result<WorstCase> {
    if n < 2 {
        return Err(Error::invalid("target dimension must be at least 2"));
    }
    if grid.points < 2 {
        return Err(Error::invalid("target grid needs at least 2 points"));
    }
    let eval = |t: &[f64]| -> Result<EmbezzlementError> {
        Ok(embezzlement_error(resource, &Spectrum::new(t)?))
    };
    if n == 2 {
        worst_qubit_target(&|q| eval(&[q, 1.0 - q]), grid)
    } else {
        worst_simplex_target(&eval, n, grid)
    }
}

fn better(a: &WorstCase, b: &WorstCase) -> bool {
    a.error.fidelity < b.error.fidelity
}

fn worst_qubit_target(
    eval: &(dyn Fn(f64) -> Result<EmbezzlementError> + Sync),
    grid: &TargetGrid,
) -> Result<WorstCase> {
    let h = 0.5 / grid.points as f64;
    let qs: Vec<f64> = (0..=grid.points).map(|i| 0.5 + i as f64 * h).collect();
    let values = qs
        .par_iter()
        .map(|&q| eval(q).map(|e| e.fidelity))
        .collect::<Result<Vec<_>>>()?;

    // refine around every grid local minimum of the fidelity
    let minima: Vec<usize> = (0..values.len())
        .filter(|&i| {
            let left = i == 0 || values[i] <= values[i - 1];
            let right = i + 1 == values.len() || values[i] <= values[i + 1];
            left && right
        })
        .collect();
    let refined = minima
        .par_iter()
        .map(|&i| {
            let lo = qs[i.saturating_sub(1)];
            let hi = qs[(i + 1).min(qs.len() - 1)];
            let (q, f) = golden_min(|q| eval(q).map(|e| e.fidelity), lo, hi, grid.refine_tol)?;
            // keep the grid point if refinement landed somewhere worse
            Ok(if f <= values[i] { (q, f) } else { (qs[i], values[i]) })
        })
        .collect::<Result<Vec<_>>>()?;
    let (q, _) = refined
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("grid has at least one local minimum");
    Ok(WorstCase {
        error: eval(q)?,
        target: vec![q, 1.0 - q],
    })
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
fn golden_min<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Sorted compositions of `total` into at most `n` parts.
fn sorted_compositions(total: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, max: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for part in (0..=rem.min(max)).rev() {
            if part * left < rem {
                break;
            }
            cur.push(part);
            rec(rem - part, part, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, total, n, &mut Vec::with_capacity(n), &mut out);
    out
}

fn worst_simplex_target(
    eval: &(dyn Fn(&[f64]) -> Result<EmbezzlementError> + Sync),
    n: usize,
    grid: &TargetGrid,
) -> Result<WorstCase> {
    let r = grid.points as f64;
    let mut targets: Vec<Vec<f64>> = sorted_compositions(grid.points, n)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / r).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    for _ in 0..grid.points {
        let mut t: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let s: f64 = t.iter().sum();
        t.iter_mut().for_each(|x| *x /= s);
        t.sort_by(|a, b| b.total_cmp(a));
        targets.push(t);
    }
    let scored = targets
        .into_par_iter()
        .map(|t| eval(&t).map(|e| WorstCase { error: e, target: t }))
        .collect::<Result<Vec<_>>>()?;
    let mut best = scored
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("non-empty target set");

    // pattern search: move mass between pairs of entries, halving the step
    let mut step = 1.0 / r;
    while step > grid.refine_tol {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || best.target[j] < step {
                    continue;
                }
                let mut t = best.target.clone();
                t[i] += step;
                t[j] -= step;
                let cand = WorstCase {
                    error: eval(&t)?,
                    target: t,
                };
                if better(&cand, &best) {
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best.target.sort_by(|a, b| b.total_cmp(a));
    Ok(best)
}

/// κ of the product-state probe at one tensor power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub copies: usize,
    /// Worst `sqrt(2 - 2F)` over targets.
    pub kappa: f64,
    /// Worst `2 sqrt(1 - F^2)` over targets; compare with the closed form.
    pub kappa_norm: f64,
    pub fidelity: f64,
    pub worst_target: Vec<f64>,
    pub resource_levels: usize,
    pub resource_deficit: f64,
    /// `false` when the truncated mass exceeds [`DEFICIT_BOUND`].
    pub reliable: bool,
}

pub fn kappa_estimate(rho: &Spectrum, k: usize, n: usize, grid: &TargetGrid) -> Result<KappaEstimate> {
    let probe = EmbezzleProbe::new(rho.clone(), k, n)?;
    let resource = probe.effective_resource(Prune::default());
    kappa_for_resource(&resource, k, n, grid)
}

fn kappa_for_resource(
    resource: &Spectrum,
    k: usize,
    n: usize,
    grid: &TargetGrid,
) -> Result<KappaEstimate> {
    let worst = worst_case_error(resource, n, grid)?;
    Ok(KappaEstimate {
        copies: k,
        kappa: worst.error.error,
        kappa_norm: worst.error.norm_error,
        fidelity: worst.error.fidelity,
        worst_target: worst.target,
        resource_levels: resource.num_levels(),
        resource_deficit: resource.mass_deficit(),
        reliable: resource.mass_deficit() <= DEFICIT_BOUND,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaSeries {
    pub estimates: Vec<KappaEstimate>,
    /// Absolute differences between successive `kappa_norm` values.
    pub successive_diffs: Vec<f64>,
}

impl KappaSeries {
    pub fn last(&self) -> &KappaEstimate {
        self.estimates.last().expect("non-empty schedule")
    }

    pub fn reliable(&self) -> bool {
        self.estimates.iter().all(|e| e.reliable)
    }
}

/// κ estimates along an increasing schedule of tensor powers.
pub fn kappa_series(rho: &Spectrum, schedule: &[usize], n: usize, grid: &TargetGrid) -> Result<KappaSeries> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) || schedule[0] == 0 {
        return Err(Error::invalid(
            "schedule must be non-empty, positive and strictly increasing",
        ));
    }
    let mut resources = Vec::with_capacity(schedule.len());
    let mut acc = Spectrum::pure();
    let mut done = 0;
    for &k in schedule {
        for _ in done..k {
            acc = acc.tensor(rho, Prune::default());
        }
        done = k;
        resources.push(acc.clone());
    }
    let estimates = resources
        .par_iter()
        .zip(schedule.par_iter())
        .map(|(r, &k)| kappa_for_resource(r, k, n, grid))
        .collect::<Result<Vec<_>>>()?;
    let successive_diffs = estimates
        .windows(2)
        .map(|w| (w[1].kappa_norm - w[0].kappa_norm).abs())
        .collect();
    Ok(KappaSeries {
        estimates,
        successive_diffs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    /// Worst `sqrt(2 - 2F)` error at each family index.
    pub worst_errors: Vec<f64>,
    /// First index from which every tested member stays within ε.
    pub l_star: Option<usize>,
}

/// Embezzling-family test: the smallest index `L` such that every member at
/// index `>= L` embezzles every `n`-dimensional target within `eps`.
pub fn embezzling_family_check(
    family: &[Spectrum],
    n: usize,
    eps: f64,
    grid: &TargetGrid,
) -> Result<FamilyCheck> {
    if family.is_empty() {
        return Err(Error::invalid("family must be non-empty"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("ε must be positive"));
    }
    let worst_errors = family
        .par_iter()
        .map(|s| worst_case_error(s, n, grid).map(|w| w.error.error))
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyCheck {
        l_star: first_index_of_persistent(&worst_errors, |e| e <= eps),
        worst_errors,
    })
}

/// Smallest index from which `ok` holds for every later entry.
pub(crate) fn first_index_of_persistent(values: &[f64], ok: impl Fn(f64) -> bool) -> Option<usize> {
    let mut start = None;
    for (i, &v) in values.iter().enumerate() {
        if ok(v) {
            start.get_or_insert(i);
        } else {
            start = None;
        }
    }
    start
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_types::kappa_max_formula;

    const BELL_ERR: f64 = 0.765_366_864_730_179_8; // sqrt(2 - sqrt 2)

    #[test]
    fn vdh_examples() {
        assert_eq!(vdh_spectrum(1).unwrap().expand().unwrap(), vec![1.0]);
        let two = vdh_spectrum(2).unwrap().expand().unwrap();
        assert!((two[0] - 2.0 / 3.0).abs() < 1e-15 && (two[1] - 1.0 / 3.0).abs() < 1e-15);
        let three = vdh_spectrum(3).unwrap().expand().unwrap();
        for (a, b) in three.iter().zip([6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(vdh_spectrum(0).is_err());
    }

    #[test]
    fn error_examples() {
        let bell = Spectrum::new(&[0.5, 0.5]).unwrap();
        let r = vdh_spectrum(17).unwrap();
        assert_eq!(embezzlement_error(&r, &Spectrum::pure()).error, 0.0);
        let e = embezzlement_error(&Spectrum::pure(), &bell);
        assert!((e.error - BELL_ERR).abs() < 1e-12);
        for k in 1..8 {
            let u = Spectrum::uniform(2f64.powi(k)).unwrap();
            assert!((embezzlement_error(&u, &bell).error - BELL_ERR).abs() < 1e-12);
        }
    }

    #[test]
    fn error_stays_below_sqrt2() {
        let r = Spectrum::new(&[0.6, 0.3, 0.1]).unwrap();
        let t = Spectrum::new(&[0.2, 0.2, 0.2, 0.2, 0.2]).unwrap();
        let e = embezzlement_error(&r, &t);
        assert!(e.error <= 2f64.sqrt() && e.norm_error <= 2.0);
    }

    #[test]
    fn uniform_resource_worst_case_is_bell() {
        let u = Spectrum::uniform(8.0).unwrap();
        let w = worst_case_error(&u, 2, &TargetGrid::default()).unwrap();
        assert!((w.error.error - BELL_ERR).abs() < 1e-9);
        assert!((w.target[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn finer_grids_never_lower_the_worst_case() {
        let rho = Spectrum::powers(0.5).unwrap();
        let coarse = TargetGrid { points: 8, ..Default::default() };
        let fine = TargetGrid { points: 64, ..Default::default() };
        for k in [3, 9, 20] {
            let a = kappa_estimate(&rho, k, 2, &coarse).unwrap();
            let b = kappa_estimate(&rho, k, 2, &fine).unwrap();
            assert!(b.kappa >= a.kappa - 1e-12, "k={k}: {} < {}", b.kappa, a.kappa);
        }
    }

    #[test]
    fn higher_dimensional_targets() {
        // a pure resource cannot embezzle: worst target is maximally entangled
        let w = worst_case_error(&Spectrum::pure(), 3, &TargetGrid { points: 12, ..Default::default() })
            .unwrap();
        let expected = (2.0 - 2.0 * (1.0f64 / 3.0).sqrt()).sqrt();
        assert!((w.error.error - expected).abs() < 1e-9);
        assert!(w.target.iter().all(|t| (t - 1.0 / 3.0).abs() < 1e-6));
    }

    #[test]
    fn kappa_series_rejects_bad_schedule() {
        let rho = Spectrum::powers(0.5).unwrap();
        let g = TargetGrid::default();
        assert!(kappa_series(&rho, &[], 2, &g).is_err());
        assert!(kappa_series(&rho, &[4, 4], 2, &g).is_err());
        assert!(kappa_series(&rho, &[0, 4], 2, &g).is_err());
        assert!(kappa_estimate(&rho, 0, 2, &g).is_err());
        assert!(kappa_estimate(&rho, 3, 1, &g).is_err());
    }

    #[test]
    fn powers_probe_moves_toward_closed_form() {
        let rho = Spectrum::powers(0.25).unwrap();
        let s = kappa_series(&rho, &[8, 64, 256], 2, &TargetGrid::default()).unwrap();
        let target = kappa_max_formula(0.25);
        let devs: Vec<f64> = s.estimates.iter().map(|e| (e.kappa_norm - target).abs()).collect();
        assert!(devs[2] < devs[0]);
        assert!(devs[2] < 0.05);
        assert!(s.reliable());
    }

    #[test]
    fn family_check_examples() {
        let g = TargetGrid { points: 16, ..Default::default() };
        let fam: Vec<Spectrum> = (1..=10).map(|l| vdh_spectrum(1 << l).unwrap()).collect();
        let c = embezzling_family_check(&fam, 2, 0.5, &g).unwrap();
        assert!(c.l_star.is_some());
        assert!(c.worst_errors.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(embezzling_family_check(&fam, 2, 2.0, &g).unwrap().l_star, Some(0));

        let uni = vec![Spectrum::uniform(2.0).unwrap(); 5];
        let c = embezzling_family_check(&uni, 2, 0.1, &g).unwrap();
        assert_eq!(c.l_star, None);
        assert!(c.worst_errors.iter().all(|e| (e - BELL_ERR).abs() < 1e-9));
    }

    #[test]
    fn persistent_index() {
        assert_eq!(first_index_of_persistent(&[0.5, 0.1, 0.5, 0.1, 0.1], |v| v < 0.2), Some(3));
        assert_eq!(first_index_of_persistent(&[0.1, 0.5], |v| v < 0.2), None);
        assert_eq!(first_index_of_persistent(&[0.1, 0.1], |v| v < 0.2), Some(0));
    }
}
