//! Local operators on sets of virtual spins, generic over the scalar field so
//! the same code runs in floating point and in exact rationals.

use nalgebra::{ClosedAddAssign, ClosedMulAssign, ClosedSubAssign, DMatrix, Scalar};
use num_traits::{One, Zero};

use super::{LatticeModel, ED_CAP};
use crate::error::{Error, Result};

/// Scalars usable as matrix entries.
pub trait Entry: Scalar + Zero + One + ClosedAddAssign + ClosedMulAssign + ClosedSubAssign {}

impl<T: Scalar + Zero + One + ClosedAddAssign + ClosedMulAssign + ClosedSubAssign> Entry for T {}

/// An operator on the virtual spins `spins`, listed most significant first.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T: Scalar = f64> {
    pub spins: Vec<usize>,
    pub matrix: DMatrix<T>,
}

impl<T: Entry> Term<T> {
    pub fn new(spins: Vec<usize>, matrix: DMatrix<T>, m: usize) -> Result<Self> {
        let mut sorted = spins.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != spins.len() || spins.is_empty() {
            return Err(Error::invalid("term spins must be distinct and nonempty"));
        }
        let dim = local_dim(m, spins.len())?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::invalid(format!(
                "term on {} spins needs a {dim}x{dim} matrix",
                spins.len()
            )));
        }
        Ok(Term { spins, matrix })
    }

    /// `|ψ⟩⟨ψ|` with `ψ = Σ_i a_i |i i⟩` on the two given spins.
    pub fn pair_projector(spins: [usize; 2], amplitudes: &[T]) -> Self {
        let m = amplitudes.len();
        let mut psi = vec![T::zero(); m * m];
        for (i, a) in amplitudes.iter().enumerate() {
            psi[i * m + i] = a.clone();
        }
        let matrix = DMatrix::from_fn(m * m, m * m, |r, c| psi[r].clone() * psi[c].clone());
        Term {
            spins: spins.to_vec(),
            matrix,
        }
    }

    fn overlaps(&self, other: &Term<T>) -> bool {
        self.spins.iter().any(|s| other.spins.contains(s))
    }
}

pub(crate) fn local_dim(m: usize, spins: usize) -> Result<usize> {
    u32::try_from(spins)
        .ok()
        .and_then(|k| m.checked_pow(k))
        .ok_or(Error::CapExceeded {
            what: "local dimension",
            requested: u128::MAX,
            cap: usize::MAX as u128,
        })
}

/// Digits of `index` in base `m`, most significant first.
pub(crate) fn digits(mut index: usize, m: usize, out: &mut [usize]) {
    for d in out.iter_mut().rev() {
        *d = index % m;
        index /= m;
    }
}

pub(crate) fn undigits(d: &[usize], m: usize) -> usize {
    d.iter().fold(0, |acc, &x| acc * m + x)
}

/// `term ⊗ 1` on the ordered spin list `support`, which must contain the
/// term's spins.
pub(crate) fn embed<T: Entry>(term: &Term<T>, support: &[usize], m: usize) -> Result<DMatrix<T>> {
    let pos: Vec<usize> = term
        .spins
        .iter()
        .map(|s| {
            support
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| Error::invalid(format!("spin {s} outside the support")))
        })
        .collect::<Result<_>>()?;
    let dim = local_dim(m, support.len())?;
    let k = term.spins.len();
    let ldim = local_dim(m, k)?;
    let mut out = DMatrix::zeros(dim, dim);
    let mut dg = vec![0; support.len()];
    let mut local = vec![0; k];
    for col in 0..dim {
        digits(col, m, &mut dg);
        let l: Vec<usize> = pos.iter().map(|&p| dg[p]).collect();
        let lcol = undigits(&l, m);
        for lrow in 0..ldim {
            let v = &term.matrix[(lrow, lcol)];
            if v.is_zero() {
                continue;
            }
            digits(lrow, m, &mut local);
            for (&p, &x) in pos.iter().zip(&local) {
                dg[p] = x;
            }
            out[(undigits(&dg, m), col)] += v.clone();
        }
    }
    Ok(out)
}

/// `true` iff every pair of terms commutes. Each commutator is evaluated on
/// the union of the two supports, where it vanishes iff it vanishes on the
/// whole space.
pub fn commuting_check_terms<T: Entry>(terms: &[Term<T>], m: usize, is_zero: impl Fn(&T) -> bool) -> Result<bool> {
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            let mut support = a.spins.clone();
            support.extend(b.spins.iter().filter(|s| !a.spins.contains(s)));
            let (ea, eb) = (embed(a, &support, m)?, embed(b, &support, m)?);
            let comm = &ea * &eb - &eb * &ea;
            if !comm.iter().all(&is_zero) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub(crate) fn check_cap(model: &LatticeModel) -> Result<u128> {
    match model.total_dim() {
        Some(d) if d <= ED_CAP => Ok(d),
        d => Err(Error::CapExceeded {
            what: "Hilbert dimension",
            requested: d.unwrap_or(u128::MAX),
            cap: ED_CAP,
        }),
    }
}

impl LatticeModel {
    /// One projector per edge, in edge order.
    pub fn terms(&self) -> Result<Vec<Term<f64>>> {
        let a = self.amplitudes()?;
        Ok(self
            .edges
            .iter()
            .map(|e| Term::pair_projector(self.edge_spins(e), &a))
            .collect())
    }
}

/// Checks `[P_e, P_e'] = 0` for all edge pairs, to `1e-12` per entry.
pub fn commuting_check(model: &LatticeModel) -> Result<bool> {
    check_cap(model)?;
    commuting_check_terms(&model.terms()?, model.m, |x| x.abs() <= 1e-12)
}

/// Groups terms into connected components of the support-overlap graph.
pub(crate) fn components<T: Entry>(terms: &[Term<T>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..terms.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            if terms[i].overlaps(&terms[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; terms.len()];
    for i in 0..terms.len() {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Ordered union of the supports of `terms[idx]`.
pub(crate) fn support_of<T: Entry>(terms: &[Term<T>], idx: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = idx.iter().flat_map(|&i| terms[i].spins.iter().copied()).collect();
    s.sort_unstable();
    s.dedup();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_model, Boundary};
    use crate::spectra::Spectrum;

    fn chain3(w: &[f64]) -> LatticeModel {
        build_model(1, &[3], Boundary::Open, 2, &Spectrum::new(w).unwrap()).unwrap()
    }

    #[test]
    fn projector_is_idempotent() {
        let t = Term::pair_projector([0, 1], &[0.8f64.sqrt(), 0.2f64.sqrt()]);
        let sq = &t.matrix * &t.matrix;
        assert!((sq - &t.matrix).amax() < 1e-15);
        assert!((t.matrix.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embedding_respects_order() {
        // X on spin 1 of (0, 1): flips the least significant digit
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let t = Term::new(vec![1], x, 2).unwrap();
        let e = embed(&t, &[0, 1], 2).unwrap();
        assert_eq!(e[(1, 0)], 1.0);
        assert_eq!(e[(3, 2)], 1.0);
        assert_eq!(e[(2, 0)], 0.0);
        assert!(embed(&t, &[0, 2], 2).is_err());
    }

    #[test]
    fn valid_models_commute() {
        for w in [[0.5, 0.5], [0.9, 0.1], [1.0, 0.0]] {
            assert!(commuting_check(&chain3(&w)).unwrap());
        }
        let sq = build_model(2, &[2, 2], Boundary::Periodic, 2, &Spectrum::new(&[0.7, 0.3]).unwrap()).unwrap();
        assert!(commuting_check(&sq).unwrap());
    }

    #[test]
    fn overlapping_fixture_fails() {
        let model = chain3(&[0.7, 0.3]);
        let mut terms = model.terms().unwrap();
        // second projector moved onto a spin the first one already uses
        terms[1].spins = vec![3, 2];
        assert!(!commuting_check_terms(&terms, 2, |x| x.abs() <= 1e-12).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        let big = build_model(1, &[9], Boundary::Open, 2, &Spectrum::new(&[0.5, 0.5]).unwrap()).unwrap();
        assert!(matches!(commuting_check(&big), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn components_are_edges() {
        let sq = build_model(2, &[2, 2], Boundary::Open, 2, &Spectrum::new(&[0.7, 0.3]).unwrap()).unwrap();
        let terms = sq.terms().unwrap();
        assert_eq!(components(&terms).len(), 4);
        let mut bad = terms.clone();
        bad[1].spins = vec![bad[0].spins[0], bad[1].spins[1]];
        assert_eq!(components(&bad).len(), 3);
    }
}
