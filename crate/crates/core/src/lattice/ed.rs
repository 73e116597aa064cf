//! Exact diagonalization on the bond space: the paired virtual spins, with
//! the frozen boundary slots factored out.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::terms::{check_cap, components, digits, embed, local_dim, support_of, undigits, Term};
use super::{LatticeModel, Region};
use crate::error::{Error, Result};

/// Largest bond-space (or component) dimension handed to the dense solver.
pub const DENSE_CAP: usize = 1 << 10;

/// Eigenvalues closer than this are reported as one level.
const LEVEL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdMethod {
    /// One dense diagonalization of the whole bond space.
    Dense,
    /// Dense diagonalization per group of overlapping terms, spectra convolved.
    Factorized,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    pub energy: f64,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpectrum {
    /// Ascending in energy.
    pub levels: Vec<EnergyLevel>,
    pub ground_energy: f64,
    pub ground_degeneracy: u64,
    pub gap: Option<f64>,
    /// Largest distance of any eigenvalue from the nearest integer.
    pub integer_deviation: f64,
    pub method: EdMethod,
    pub bond_dim: u64,
}

fn group(mut eigs: Vec<f64>) -> Vec<EnergyLevel> {
    eigs.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, u64)> = Vec::new();
    for e in eigs {
        match out.last_mut() {
            Some((sum, n)) if (e - *sum / *n as f64).abs() <= LEVEL_TOL => {
                *sum += e;
                *n += 1;
            }
            _ => out.push((e, 1)),
        }
    }
    out.into_iter()
        .map(|(sum, n)| EnergyLevel {
            energy: sum / n as f64,
            multiplicity: n,
        })
        .collect()
}

fn merge_levels(mut levels: Vec<EnergyLevel>) -> Vec<EnergyLevel> {
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let mut out: Vec<EnergyLevel> = Vec::new();
    for l in levels {
        match out.last_mut() {
            Some(last) if (l.energy - last.energy).abs() <= LEVEL_TOL => last.multiplicity += l.multiplicity,
            _ => out.push(l),
        }
    }
    out
}

fn convolve(a: &[EnergyLevel], b: &[EnergyLevel]) -> Vec<EnergyLevel> {
    let sums = a
        .iter()
        .flat_map(|x| {
            b.iter().map(move |y| EnergyLevel {
                energy: x.energy + y.energy,
                multiplicity: x.multiplicity * y.multiplicity,
            })
        })
        .collect();
    merge_levels(sums)
}

fn hamiltonian(terms: &[Term], idx: &[usize], support: &[usize], m: usize) -> Result<DMatrix<f64>> {
    let dim = local_dim(m, support.len())?;
    let mut h = DMatrix::zeros(dim, dim);
    for &i in idx {
        h -= embed(&terms[i], support, m)?;
    }
    Ok(h)
}

fn dense_cap(dim: usize) -> Result<()> {
    if dim > DENSE_CAP {
        return Err(Error::CapExceeded {
            what: "dense diagonalization dimension",
            requested: dim as u128,
            cap: DENSE_CAP as u128,
        });
    }
    Ok(())
}

fn bond_dim(model: &LatticeModel) -> Result<usize> {
    local_dim(model.m, model.bond_spins().len())
}

/// Spectrum of `H = -Σ_e P_e` on the bond space.
pub fn hamiltonian_spectrum_small(model: &LatticeModel) -> Result<HamiltonianSpectrum> {
    check_cap(model)?;
    let terms = model.terms()?;
    let bond = model.bond_spins();
    let dim = bond_dim(model)?;
    let all: Vec<usize> = (0..terms.len()).collect();

    let (levels, method) = if dim <= DENSE_CAP {
        let h = hamiltonian(&terms, &all, &bond, model.m)?;
        (group(SymmetricEigen::new(h).eigenvalues.as_slice().to_vec()), EdMethod::Dense)
    } else {
        let mut acc = vec![EnergyLevel {
            energy: 0.0,
            multiplicity: 1,
        }];
        for comp in components(&terms) {
            let support = support_of(&terms, &comp);
            dense_cap(local_dim(model.m, support.len())?)?;
            let h = hamiltonian(&terms, &comp, &support, model.m)?;
            let local = group(SymmetricEigen::new(h).eigenvalues.as_slice().to_vec());
            acc = convolve(&acc, &local);
        }
        (acc, EdMethod::Factorized)
    };
    let integer_deviation = levels
        .iter()
        .map(|l| (l.energy - l.energy.round()).abs())
        .fold(0.0, f64::max);
    Ok(HamiltonianSpectrum {
        ground_energy: levels[0].energy,
        ground_degeneracy: levels[0].multiplicity,
        gap: levels.get(1).map(|l| l.energy - levels[0].energy),
        integer_deviation,
        method,
        bond_dim: dim as u64,
        levels,
    })
}

/// The unique ground state on the bond space.
#[derive(Clone, Debug)]
pub struct GroundState {
    spins: Vec<usize>,
    m: usize,
    pub energy: f64,
    pub vector: DVector<f64>,
}

/// Dense ground state; refuses degenerate ground spaces.
pub fn ground_state(model: &LatticeModel) -> Result<GroundState> {
    check_cap(model)?;
    let dim = bond_dim(model)?;
    dense_cap(dim)?;
    let terms = model.terms()?;
    let bond = model.bond_spins();
    let all: Vec<usize> = (0..terms.len()).collect();
    let eig = SymmetricEigen::new(hamiltonian(&terms, &all, &bond, model.m)?);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if dim > 1 && eig.eigenvalues[order[1]] - eig.eigenvalues[order[0]] <= LEVEL_TOL {
        return Err(Error::unsupported("ground space is degenerate"));
    }
    Ok(GroundState {
        spins: bond,
        m: model.m,
        energy: eig.eigenvalues[order[0]],
        vector: eig.eigenvectors.column(order[0]).into_owned(),
    })
}

impl GroundState {
    /// `max_e |P_e g - g|_∞`; zero iff every projector fixes the state.
    pub fn frustration_defect(&self, model: &LatticeModel) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in model.terms()? {
            let p = embed(&t, &self.spins, self.m)?;
            worst = worst.max((&p * &self.vector - &self.vector).amax());
        }
        Ok(worst)
    }

    /// Eigenvalues of the reduced state on the virtual spins `a`, descending.
    /// Frozen spins in `a` are product states and drop out.
    pub fn schmidt_spectrum(&self, a: &[usize]) -> Result<Vec<f64>> {
        let (pos_a, pos_b): (Vec<usize>, Vec<usize>) =
            (0..self.spins.len()).partition(|&i| a.contains(&self.spins[i]));
        let rows = local_dim(self.m, pos_a.len())?;
        let cols = local_dim(self.m, pos_b.len())?;
        let mut mat = DMatrix::zeros(rows, cols);
        let mut dg = vec![0; self.spins.len()];
        let pick = |dg: &[usize], pos: &[usize]| undigits(&pos.iter().map(|&p| dg[p]).collect::<Vec<_>>(), self.m);
        for (i, &amp) in self.vector.iter().enumerate() {
            digits(i, self.m, &mut dg);
            mat[(pick(&dg, &pos_a), pick(&dg, &pos_b))] = amp;
        }
        let small = if rows <= cols {
            &mat * mat.transpose()
        } else {
            mat.transpose() * &mat
        };
        let mut ev: Vec<f64> = SymmetricEigen::new(small)
            .eigenvalues
            .iter()
            .map(|x| x.max(0.0))
            .collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        Ok(ev)
    }
}

/// Spectrum of one site's reduced ground state, by partial trace.
pub fn ed_site_reduced_state(model: &LatticeModel, site: usize) -> Result<Vec<f64>> {
    if site >= model.num_sites() {
        return Err(Error::invalid(format!("site {site} outside the lattice")));
    }
    let spins: Vec<usize> = (0..model.degree()).map(|s| model.spin(site, s)).collect();
    ground_state(model)?.schmidt_spectrum(&spins)
}

/// Schmidt spectrum of the ground state across the boundary of `region`.
pub fn ed_boundary_spectrum(model: &LatticeModel, region: &Region) -> Result<Vec<f64>> {
    if !region.is_proper(model) {
        return Err(Error::invalid("improper region: must be nonempty and miss at least one site"));
    }
    let spins: Vec<usize> = region
        .sites()
        .iter()
        .flat_map(|&v| (0..model.degree()).map(move |s| (v, s)))
        .map(|(v, s)| model.spin(v, s))
        .collect();
    ground_state(model)?.schmidt_spectrum(&spins)
}
