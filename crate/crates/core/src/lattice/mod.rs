//! Commuting-projector models on small hypercubic lattices.
//!
//! Every site carries `d = 2D` virtual spins of dimension `m`. Slot `2k`
//! points along `+e_k` and slot `2k + 1` along `-e_k`; the edge from `v` to
//! `v + e_k` pairs slot `2k` of `v` with slot `2k + 1` of the neighbour. Each
//! edge carries the projector onto `Σ_i sqrt(ρ_i) |i i⟩`, and the Hamiltonian
//! is minus their sum. Slots left unpaired at an open boundary are frozen to
//! the first basis state `|1⟩`.

mod ed;
pub mod exact;
mod terms;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor_types::{classify_itpfi, Classification};
use crate::spectra::{Prune, Spectrum};

pub use ed::{
    ed_boundary_spectrum, ed_site_reduced_state, ground_state, hamiltonian_spectrum_small,
    EdMethod, EnergyLevel, GroundState, HamiltonianSpectrum, DENSE_CAP,
};
pub use terms::{commuting_check, commuting_check_terms, Term};

/// Largest full virtual-spin Hilbert dimension accepted by exact checks.
pub const ED_CAP: u128 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// A pair of virtual spins `(site, slot)` joined by one projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub axis: usize,
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub fn from_slot(&self) -> usize {
        2 * self.axis
    }

    pub fn to_slot(&self) -> usize {
        2 * self.axis + 1
    }

    pub fn touches(&self, site: usize) -> bool {
        self.from == site || self.to == site
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeModel {
    dimension: usize,
    extent: Vec<usize>,
    boundary: Boundary,
    m: usize,
    rho: Spectrum,
    edges: Vec<Edge>,
}

/// Builds the model, validating geometry and `rho` against `m`.
pub fn build_model(
    dimension: usize,
    extent: &[usize],
    boundary: Boundary,
    m: usize,
    rho: &Spectrum,
) -> Result<LatticeModel> {
    if dimension == 0 || extent.len() != dimension {
        return Err(Error::invalid(format!(
            "extent must list {dimension} positive axis lengths, got {extent:?}"
        )));
    }
    if extent.contains(&0) {
        return Err(Error::invalid("axis lengths must be positive"));
    }
    if boundary == Boundary::Periodic && extent.contains(&1) {
        return Err(Error::invalid(
            "periodic axes need at least 2 sites (length 1 would pair a site with itself)",
        ));
    }
    if m < 2 {
        return Err(Error::invalid(format!("virtual-spin dimension must be >= 2, got {m}")));
    }
    if !rho.is_exact() {
        return Err(Error::invalid("edge spectrum must not carry truncated mass"));
    }
    if rho.rank() > m as f64 {
        return Err(Error::invalid(format!(
            "edge spectrum has rank {} > m = {m}",
            rho.rank()
        )));
    }
    let num_sites = extent
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::invalid("lattice too large"))?;

    let mut edges = Vec::new();
    let mut coords = vec![0; dimension];
    for site in 0..num_sites {
        decode(site, extent, &mut coords);
        for axis in 0..dimension {
            let c = coords[axis];
            if c + 1 < extent[axis] || boundary == Boundary::Periodic {
                coords[axis] = (c + 1) % extent[axis];
                edges.push(Edge {
                    axis,
                    from: site,
                    to: encode(&coords, extent),
                });
                coords[axis] = c;
            }
        }
    }
    if edges.is_empty() {
        return Err(Error::invalid(format!("extent {extent:?} contains no edge")));
    }
    Ok(LatticeModel {
        dimension,
        extent: extent.to_vec(),
        boundary,
        m,
        rho: rho.clone(),
        edges,
    })
}

// row-major, last axis fastest
fn decode(mut site: usize, extent: &[usize], coords: &mut [usize]) {
    for (c, &n) in coords.iter_mut().zip(extent).rev() {
        *c = site % n;
        site /= n;
    }
}

fn encode(coords: &[usize], extent: &[usize]) -> usize {
    coords.iter().zip(extent).fold(0, |acc, (&c, &n)| acc * n + c)
}

impl LatticeModel {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rho(&self) -> &Spectrum {
        &self.rho
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_sites(&self) -> usize {
        self.extent.iter().product()
    }

    /// Virtual spins per site, `2D`.
    pub fn degree(&self) -> usize {
        2 * self.dimension
    }

    /// Number of edges incident to `site` (counting a doubled periodic edge twice).
    pub fn site_degree(&self, site: usize) -> usize {
        self.edges.iter().filter(|e| e.touches(site)).count()
    }

    pub fn is_interior(&self, site: usize) -> bool {
        self.site_degree(site) == self.degree()
    }

    pub fn site_dim(&self) -> Option<u128> {
        (self.m as u128).checked_pow(self.degree() as u32)
    }

    pub fn num_virtual_spins(&self) -> usize {
        self.num_sites() * self.degree()
    }

    /// Dimension of the full virtual-spin space, `m^(N d)`.
    pub fn total_dim(&self) -> Option<u128> {
        (self.m as u128).checked_pow(u32::try_from(self.num_virtual_spins()).ok()?)
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut c = vec![0; self.dimension];
        decode(site, &self.extent, &mut c);
        c
    }

    pub fn site_index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dimension || coords.iter().zip(&self.extent).any(|(c, n)| c >= n) {
            return Err(Error::invalid(format!("coordinates {coords:?} outside the lattice")));
        }
        Ok(encode(coords, &self.extent))
    }

    /// Global index of virtual spin `slot` at `site`.
    pub fn spin(&self, site: usize, slot: usize) -> usize {
        site * self.degree() + slot
    }

    /// The two virtual spins joined by `edge`.
    pub fn edge_spins(&self, edge: &Edge) -> [usize; 2] {
        [
            self.spin(edge.from, edge.from_slot()),
            self.spin(edge.to, edge.to_slot()),
        ]
    }

    /// Paired virtual spins, ascending; the space the Hamiltonian acts on.
    pub fn bond_spins(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.edges.iter().flat_map(|e| self.edge_spins(e)).collect();
        s.sort_unstable();
        s
    }

    /// `sqrt(ρ)` padded with zeros to length `m`.
    pub fn amplitudes(&self) -> Result<Vec<f64>> {
        let mut a: Vec<f64> = self.rho.expand()?.into_iter().map(f64::sqrt).collect();
        a.resize(self.m, 0.0);
        Ok(a)
    }

    pub fn descriptor(&self) -> Result<ModelDescriptor> {
        Ok(ModelDescriptor {
            dimension: self.dimension,
            extent: self.extent.clone(),
            boundary: self.boundary,
            m: self.m,
            rho: self.rho.expand()?,
        })
    }
}

/// Plain-data record of a model, as stored in configs and results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub dimension: usize,
    pub extent: Vec<usize>,
    pub boundary: Boundary,
    pub m: usize,
    /// Eigenvalues of the edge density matrix; normalized on load.
    pub rho: Vec<f64>,
}

impl ModelDescriptor {
    pub fn build(&self) -> Result<LatticeModel> {
        build_model(
            self.dimension,
            &self.extent,
            self.boundary,
            self.m,
            &Spectrum::new(&self.rho)?,
        )
    }
}

/// A set of sites together with the edges leaving it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    sites: Vec<usize>,
    boundary_edges: Vec<usize>,
}

impl Region {
    pub fn new(model: &LatticeModel, sites: impl IntoIterator<Item = usize>) -> Result<Region> {
        let sites: BTreeSet<usize> = sites.into_iter().collect();
        if let Some(&s) = sites.iter().find(|&&s| s >= model.num_sites()) {
            return Err(Error::invalid(format!("site {s} outside the lattice")));
        }
        let boundary_edges = model
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| sites.contains(&e.from) != sites.contains(&e.to))
            .map(|(i, _)| i)
            .collect();
        Ok(Region {
            sites: sites.into_iter().collect(),
            boundary_edges,
        })
    }

    /// Sites whose coordinate along `axis` is below `cut`.
    pub fn half_space(model: &LatticeModel, axis: usize, cut: usize) -> Result<Region> {
        if axis >= model.dimension {
            return Err(Error::invalid(format!("axis {axis} out of range")));
        }
        Region::new(
            model,
            (0..model.num_sites()).filter(|&s| model.coords(s)[axis] < cut),
        )
    }

    pub fn complement(&self, model: &LatticeModel) -> Region {
        let rest = (0..model.num_sites()).filter(|s| self.sites.binary_search(s).is_err());
        Region::new(model, rest).expect("complement sites are in range")
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// Indices into [`LatticeModel::edges`] with exactly one endpoint inside.
    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn is_proper(&self, model: &LatticeModel) -> bool {
        !self.sites.is_empty() && self.sites.len() < model.num_sites()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }
}

/// Reduced state of one site: `ρ` once per incident edge, the frozen slots
/// contributing nothing. Interior sites give `ρ^{⊗2D}`.
pub fn site_reduced_state(model: &LatticeModel, site: usize) -> Result<Spectrum> {
    if site >= model.num_sites() {
        return Err(Error::invalid(format!("site {site} outside the lattice")));
    }
    Ok(model.rho.tensor_power(model.site_degree(site), Prune::default()))
}

/// First interior site, if any.
pub fn interior_site(model: &LatticeModel) -> Option<usize> {
    (0..model.num_sites()).find(|&s| model.is_interior(s))
}

/// `(spec ρ, |∂A|)`: the cut state is a product of `|∂A|` edge pairs, so its
/// Schmidt spectrum is `spec(ρ)^{⊗|∂A|}`.
pub fn boundary_spectrum(model: &LatticeModel, region: &Region) -> Result<(Spectrum, usize)> {
    if !region.is_proper(model) {
        return Err(Error::invalid(
            "improper region: must be nonempty and miss at least one site",
        ));
    }
    Ok((model.rho.clone(), region.boundary_edges.len()))
}

/// Schmidt spectrum across the region boundary, pruned with `prune`.
pub fn cut_spectrum(model: &LatticeModel, region: &Region, prune: Prune) -> Result<Spectrum> {
    let (rho, n) = boundary_spectrum(model, region)?;
    Ok(rho.tensor_power(n, prune))
}

/// Type of the region algebra: finitely many interior degrees of freedom
/// tensored with the infinite product of boundary spectra.
pub fn classify_region(model: &LatticeModel, region_is_properly_infinite: bool) -> Result<Classification> {
    classify_itpfi(&model.rho, region_is_properly_infinite)
}

/// Stacks two models on the same geometry: `m = m1 m2`, `ρ = ρ1 ⊗ ρ2`.
pub fn stack(a: &LatticeModel, b: &LatticeModel) -> Result<LatticeModel> {
    if a.dimension != b.dimension || a.extent != b.extent || a.boundary != b.boundary {
        return Err(Error::invalid("stacked models must share dimension, extent and boundary"));
    }
    let m = a
        .m
        .checked_mul(b.m)
        .ok_or_else(|| Error::invalid("stacked spin dimension overflows"))?;
    build_model(
        a.dimension,
        &a.extent,
        a.boundary,
        m,
        &a.rho.tensor(&b.rho, Prune::EXACT),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_types::{classify_sequence, compose, FactorType};
    use proptest::prelude::*;

    fn rho(w: &[f64]) -> Spectrum {
        Spectrum::new(w).unwrap()
    }

    fn chain3(w: &[f64]) -> LatticeModel {
        build_model(1, &[3], Boundary::Open, 2, &rho(w)).unwrap()
    }

    #[test]
    fn counting_examples() {
        let m = chain3(&[0.5, 0.5]);
        assert_eq!((m.num_sites(), m.edges().len(), m.site_dim()), (3, 2, Some(4)));
        let sq = build_model(2, &[2, 2], Boundary::Open, 2, &rho(&[0.5, 0.5])).unwrap();
        assert_eq!((sq.num_sites(), sq.edges().len(), sq.site_dim()), (4, 4, Some(16)));
        let pe = build_model(2, &[2, 2], Boundary::Periodic, 2, &rho(&[0.5, 0.5])).unwrap();
        assert_eq!(pe.edges().len(), 8);
        assert!((0..4).all(|s| pe.site_degree(s) == 4));
    }

    #[test]
    fn geometry_errors() {
        let r = rho(&[0.5, 0.5]);
        assert!(build_model(1, &[1], Boundary::Open, 2, &r).is_err());
        assert!(build_model(2, &[1, 1], Boundary::Open, 2, &r).is_err());
        assert!(build_model(1, &[1], Boundary::Periodic, 2, &r).is_err());
        assert!(build_model(1, &[3], Boundary::Open, 1, &r).is_err());
        assert!(build_model(2, &[3], Boundary::Open, 2, &r).is_err());
        assert!(build_model(1, &[3], Boundary::Open, 2, &rho(&[0.4, 0.3, 0.3])).is_err());
    }

    #[test]
    fn pairing_rule() {
        let m = chain3(&[0.5, 0.5]);
        assert_eq!(m.edge_spins(&m.edges()[0]), [0, 3]);
        assert_eq!(m.edge_spins(&m.edges()[1]), [2, 5]);
        assert_eq!(m.bond_spins(), vec![0, 2, 3, 5]);
        // every virtual spin paired at most once
        let pe = build_model(2, &[3, 2], Boundary::Periodic, 2, &rho(&[1.0])).unwrap();
        let spins = pe.bond_spins();
        assert_eq!(spins.len(), pe.num_virtual_spins());
        assert!(spins.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn site_state_examples() {
        let m = chain3(&[0.5, 0.5]);
        let s = site_reduced_state(&m, 1).unwrap();
        assert!(s.approx_eq(&Spectrum::uniform(4.0).unwrap(), 1e-15));
        let big = build_model(2, &[3, 3], Boundary::Open, 2, &rho(&[0.7, 0.3])).unwrap();
        let v = interior_site(&big).unwrap();
        assert_eq!(big.coords(v), vec![1, 1]);
        let s = site_reduced_state(&big, v).unwrap();
        assert!((s.max_weight() - 0.2401).abs() < 1e-15);
        assert_eq!(s.rank(), 16.0);
    }

    #[test]
    fn boundary_examples() {
        let sq = build_model(2, &[2, 2], Boundary::Open, 2, &rho(&[0.6, 0.4])).unwrap();
        let left = Region::half_space(&sq, 1, 1).unwrap();
        assert_eq!(left.sites(), &[0, 2]);
        let (r, n) = boundary_spectrum(&sq, &left).unwrap();
        assert_eq!(n, 2);
        assert!(r.approx_eq(sq.rho(), 0.0));
        let all = Region::new(&sq, 0..4).unwrap();
        assert!(boundary_spectrum(&sq, &all).is_err());
        assert!(boundary_spectrum(&sq, &Region::new(&sq, []).unwrap()).is_err());
    }

    #[test]
    fn classify_examples() {
        let mk = |r: Spectrum| build_model(1, &[3], Boundary::Open, 2, &r).unwrap();
        let t = |m: &LatticeModel| classify_region(m, true).unwrap().factor_type;
        assert_eq!(t(&mk(rho(&[0.5, 0.5]))), FactorType::IIInfinite);
        assert!(t(&mk(Spectrum::powers(0.5).unwrap().pruned(Prune::EXACT)))
            .approx_eq(&FactorType::IIILambda { lambda: 0.5 }, 1e-12));
        assert_eq!(t(&mk(rho(&[1.0]))), FactorType::IInfinite);
    }

    fn powers_model(lambda: f64, m: usize) -> LatticeModel {
        // m-level truncation of the geometric spectrum keeps its ratio group
        let w: Vec<f64> = (0..m).map(|i| lambda.powi(i as i32)).collect();
        build_model(2, &[2, 2], Boundary::Open, m, &rho(&w)).unwrap()
    }

    #[test]
    fn stacking_examples() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let t = |m: &LatticeModel| classify_region(m, true).unwrap().factor_type;
        let fib = powers_model(1.0 / phi, 2);
        let ising = powers_model(0.5, 2);
        let st = stack(&fib, &ising).unwrap();
        assert_eq!(st.m(), 4);
        assert_eq!(t(&st), FactorType::III1);
        assert_eq!(t(&st), compose(&t(&fib), &t(&ising)));

        let trivial = build_model(2, &[2, 2], Boundary::Open, 2, &rho(&[1.0])).unwrap();
        assert!(t(&stack(&trivial, &ising).unwrap()).approx_eq(&t(&ising), 1e-12));

        let quarter = powers_model(0.25, 2);
        assert!(t(&stack(&ising, &quarter).unwrap())
            .approx_eq(&FactorType::IIILambda { lambda: 0.5 }, 1e-12));

        let chain = build_model(1, &[4], Boundary::Open, 2, &rho(&[1.0])).unwrap();
        assert!(stack(&chain, &ising).is_err());
    }

    #[test]
    fn descriptor_roundtrip() {
        let sq = build_model(2, &[2, 3], Boundary::Periodic, 3, &rho(&[0.5, 0.3, 0.2])).unwrap();
        let d = sq.descriptor().unwrap();
        let text = toml::to_string(&d).unwrap();
        let back: ModelDescriptor = toml::from_str(&text).unwrap();
        assert_eq!(back.build().unwrap(), sq);
    }

    fn arb_model() -> impl Strategy<Value = LatticeModel> {
        (1usize..=2, prop::collection::vec(1usize..=4, 2), any::<bool>()).prop_filter_map(
            "needs an edge",
            |(d, ext, periodic)| {
                let b = if periodic { Boundary::Periodic } else { Boundary::Open };
                build_model(d, &ext[..d], b, 2, &Spectrum::new(&[0.8, 0.2]).unwrap()).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn boundary_is_symmetric(model in arb_model(), mask in any::<u16>()) {
            let sites = (0..model.num_sites()).filter(|s| mask >> s & 1 == 1);
            let a = Region::new(&model, sites).unwrap();
            let c = a.complement(&model);
            prop_assert_eq!(a.boundary_edges(), c.boundary_edges());
            // every virtual spin lies on at most one edge, degrees bounded by 2D
            let spins = model.bond_spins();
            prop_assert!(spins.windows(2).all(|w| w[0] < w[1]));
            prop_assert!((0..model.num_sites()).all(|s| model.site_degree(s) <= model.degree()));
        }

        #[test]
        fn finite_modifications_keep_the_type(k in 0usize..4, w in prop::collection::vec(0.05f64..1.0, 2)) {
            let model = build_model(1, &[3], Boundary::Open, 2, &Spectrum::new(&w).unwrap()).unwrap();
            let base = classify_region(&model, true).unwrap().factor_type;
            let prefix = vec![model.rho().clone(); k];
            let moved = classify_sequence(&prefix, std::slice::from_ref(model.rho()), true).unwrap();
            prop_assert!(moved.approx_eq(&base, 1e-9), "{moved} vs {base}");
        }
    }
}
