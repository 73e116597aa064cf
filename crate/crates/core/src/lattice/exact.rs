//! Exact rational arithmetic for the commutation and spectrum claims.
//!
//! The projectors need `sqrt(ρ_i)`, so exact mode works with rational
//! amplitudes `a_i` (`ρ_i = a_i^2`), drawn from rational points on the unit
//! sphere.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::terms::{check_cap, commuting_check_terms, components, embed, local_dim, support_of, Term};
use super::LatticeModel;
use crate::error::{Error, Result};
use crate::spectra::Spectrum;

/// Nonnegative rational amplitudes with `Σ a_i^2 = 1`, descending.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalAmplitudes(Vec<BigRational>);

impl RationalAmplitudes {
    pub fn new(mut amps: Vec<BigRational>) -> Result<Self> {
        if amps.is_empty() || amps.iter().any(|a| a.is_negative()) {
            return Err(Error::invalid("amplitudes must be nonnegative and nonempty"));
        }
        let norm: BigRational = amps.iter().map(|a| a * a).sum();
        if !norm.is_one() {
            return Err(Error::invalid(format!("squared amplitudes sum to {norm}, not 1")));
        }
        amps.sort_by(|a, b| b.cmp(a));
        Ok(RationalAmplitudes(amps))
    }

    /// Inverse stereographic image of `t ∈ Q^{n-1}` on the unit sphere in `Q^n`.
    pub fn from_point(t: &[BigRational]) -> Self {
        let s: BigRational = t.iter().map(|x| x * x).sum();
        let den = BigRational::one() + &s;
        let mut amps = vec![((BigRational::one() - &s) / &den).abs()];
        let two = BigRational::from_integer(BigInt::from(2));
        amps.extend(t.iter().map(|x| (&two * x / &den).abs()));
        RationalAmplitudes::new(amps).expect("stereographic points lie on the sphere")
    }

    /// Random sphere point with parameters `p / q`, `|p| <= 20`, `1 <= q <= 20`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one amplitude"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<BigRational> = (1..n)
            .map(|_| {
                BigRational::new(
                    BigInt::from(rng.random_range(-20i64..=20)),
                    BigInt::from(rng.random_range(1i64..=20)),
                )
            })
            .collect();
        Ok(RationalAmplitudes::from_point(&t))
    }

    pub fn amplitudes(&self) -> &[BigRational] {
        &self.0
    }

    /// `ρ_i = a_i^2` in floating point.
    pub fn to_spectrum(&self) -> Result<Spectrum> {
        let w: Vec<f64> = self
            .0
            .iter()
            .map(|a| (a * a).to_f64().unwrap_or(f64::NAN))
            .collect();
        Spectrum::new(&w)
    }

    fn padded(&self, model: &LatticeModel) -> Result<Vec<BigRational>> {
        let nonzero = self.0.iter().filter(|a| !a.is_zero()).count();
        if nonzero > model.m() {
            return Err(Error::invalid("more nonzero amplitudes than m"));
        }
        if !self.to_spectrum()?.approx_eq(model.rho(), 1e-12) {
            return Err(Error::invalid("amplitudes do not match the model's edge spectrum"));
        }
        let mut a: Vec<BigRational> = self.0.iter().take(model.m()).cloned().collect();
        a.resize(model.m(), BigRational::zero());
        Ok(a)
    }
}

fn exact_terms(model: &LatticeModel, amps: &RationalAmplitudes) -> Result<Vec<Term<BigRational>>> {
    let a = amps.padded(model)?;
    Ok(model
        .edges()
        .iter()
        .map(|e| Term::pair_projector(model.edge_spins(e), &a))
        .collect())
}

/// `[P_e, P_e'] = 0` for all edge pairs, in exact arithmetic.
pub fn exact_commuting_check(model: &LatticeModel, amps: &RationalAmplitudes) -> Result<bool> {
    check_cap(model)?;
    commuting_check_terms(&exact_terms(model, amps)?, model.m(), |x| x.is_zero())
}

fn rank(mut a: DMatrix<BigRational>) -> usize {
    let (rows, cols) = a.shape();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        a.swap_rows(r, p);
        let pivot = a[(r, c)].clone();
        for i in r + 1..rows {
            if a[(i, c)].is_zero() {
                continue;
            }
            let f = &a[(i, c)] / &pivot;
            for j in c..cols {
                let d = &f * &a[(r, j)];
                a[(i, j)] -= d;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactSpectrum {
    /// `(energy, multiplicity)`, ascending. Complete iff `integer_spectrum`.
    pub levels: Vec<(i64, u128)>,
    /// The integer levels exhaust the dimension.
    pub integer_spectrum: bool,
    pub ground_energy: i64,
    pub ground_degeneracy: u128,
    pub gap: Option<i64>,
}

/// Integer spectrum of `H` from exact kernel dimensions of `H + k` per
/// component. A symmetric matrix whose integer eigenspaces fill the space
/// has no other eigenvalues.
pub fn exact_hamiltonian_spectrum(model: &LatticeModel, amps: &RationalAmplitudes) -> Result<ExactSpectrum> {
    check_cap(model)?;
    let terms = exact_terms(model, amps)?;
    let m = model.m();
    let mut acc: Vec<(i64, u128)> = vec![(0, 1)];
    let mut integer_spectrum = true;
    for comp in components(&terms) {
        let support = support_of(&terms, &comp);
        let dim = local_dim(m, support.len())?;
        if dim > super::DENSE_CAP {
            return Err(Error::CapExceeded {
                what: "exact component dimension",
                requested: dim as u128,
                cap: super::DENSE_CAP as u128,
            });
        }
        let mut h = DMatrix::<BigRational>::zeros(dim, dim);
        for &i in &comp {
            h -= embed(&terms[i], &support, m)?;
        }
        let mut local = Vec::new();
        let mut found = 0;
        for k in 0..=comp.len() as i64 {
            let mut shifted = h.clone();
            let kk = BigRational::from_integer(BigInt::from(k));
            for i in 0..dim {
                shifted[(i, i)] += kk.clone();
            }
            let kernel = dim - rank(shifted);
            if kernel > 0 {
                local.push((-k, kernel as u128));
                found += kernel;
            }
        }
        integer_spectrum &= found == dim;
        let mut next: Vec<(i64, u128)> = Vec::new();
        for &(e1, n1) in &acc {
            for &(e2, n2) in &local {
                match next.iter_mut().find(|(e, _)| *e == e1 + e2) {
                    Some((_, n)) => *n += n1 * n2,
                    None => next.push((e1 + e2, n1 * n2)),
                }
            }
        }
        next.sort_unstable();
        acc = next;
    }
    Ok(ExactSpectrum {
        ground_energy: acc[0].0,
        ground_degeneracy: acc[0].1,
        gap: acc.get(1).map(|l| l.0 - acc[0].0),
        levels: acc,
        integer_spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_model, Boundary};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn model_for(amps: &RationalAmplitudes, d: usize, ext: &[usize], b: Boundary) -> LatticeModel {
        build_model(d, ext, b, amps.amplitudes().len().max(2), &amps.to_spectrum().unwrap()).unwrap()
    }

    #[test]
    fn pythagorean_amplitudes() {
        let a = RationalAmplitudes::from_point(&[q(1, 2)]);
        assert_eq!(a.amplitudes(), &[q(4, 5), q(3, 5)]);
        assert!(RationalAmplitudes::new(vec![q(1, 2), q(1, 2)]).is_err());
        let r = RationalAmplitudes::random(3, 7).unwrap();
        let s: BigRational = r.amplitudes().iter().map(|x| x * x).sum();
        assert!(s.is_one());
    }

    #[test]
    fn exact_chain() {
        let a = RationalAmplitudes::from_point(&[q(1, 2)]);
        let m = model_for(&a, 1, &[3], Boundary::Open);
        assert!(exact_commuting_check(&m, &a).unwrap());
        let s = exact_hamiltonian_spectrum(&m, &a).unwrap();
        assert!(s.integer_spectrum);
        assert_eq!(s.levels, vec![(-2, 1), (-1, 6), (0, 9)]);
        assert_eq!(s.gap, Some(1));
    }

    #[test]
    fn exact_random_square() {
        for seed in 0..5 {
            let a = RationalAmplitudes::random(2, seed).unwrap();
            let m = model_for(&a, 2, &[2, 2], Boundary::Periodic);
            assert!(exact_commuting_check(&m, &a).unwrap());
            let s = exact_hamiltonian_spectrum(&m, &a).unwrap();
            assert!(s.integer_spectrum);
            assert_eq!((s.ground_energy, s.ground_degeneracy, s.gap), (-8, 1, Some(1)));
        }
    }

    #[test]
    fn mismatched_amplitudes_rejected() {
        let a = RationalAmplitudes::from_point(&[q(1, 2)]);
        let m = build_model(1, &[3], Boundary::Open, 2, &Spectrum::new(&[0.5, 0.5]).unwrap()).unwrap();
        assert!(exact_commuting_check(&m, &a).is_err());
    }

    #[test]
    fn rank_of_projector() {
        let a = RationalAmplitudes::from_point(&[q(1, 3)]);
        let t = Term::pair_projector([0, 1], a.amplitudes());
        assert_eq!(rank(t.matrix), 1);
    }
}
