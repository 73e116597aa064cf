//! Library routines against brute-force references.

use factorlab::lattice::{build_model, commuting_check, Boundary};
use factorlab::locc::{convertible, max_conversion_fidelity};
use factorlab::oracle::{
    full_space_commutator_norm, lu_overlap_2x2, motzkin_enumeration, qubit_protocol_fidelity,
};
use factorlab::spectra::sorted_fidelity;
use factorlab::{chains, Prune, Spectrum};
use proptest::prelude::*;

fn qubit(a: f64) -> Spectrum {
    Spectrum::new(&[a, 1.0 - a]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sorted_fidelity_is_the_best_local_unitary_overlap(a in 0.5f64..1.0, b in 0.5f64..1.0) {
        let brute = lu_overlap_2x2([a, 1.0 - a], [b, 1.0 - b]).unwrap();
        let ours = sorted_fidelity(&qubit(a), &qubit(b)).value;
        prop_assert!((brute - ours).abs() < 1e-9, "{brute} vs {ours}");
    }

    #[test]
    fn conversion_matches_protocol_search(a in 0.5f64..1.0, b in 0.5f64..1.0) {
        let oracle = qubit_protocol_fidelity([a, 1.0 - a], [b, 1.0 - b]).unwrap();
        let conv = max_conversion_fidelity(&qubit(a), &qubit(b)).unwrap().fidelity;
        prop_assert!((oracle - conv).abs() < 1e-3, "{oracle} vs {conv}");
        // skip the measure-zero band where the oracle's search tolerance decides
        if (a - b).abs() > 1e-6 {
            prop_assert_eq!(convertible(&qubit(a), &qubit(b)).unwrap(), oracle >= 1.0 - 1e-9);
        }
    }
}

#[test]
fn motzkin_spectrum_matches_enumeration() {
    for s in 1..=3u32 {
        for l in (2..=12).step_by(2) {
            let brute = motzkin_enumeration(l, s).unwrap();
            let total = brute.walks as f64;
            let expected: Vec<f64> = brute.block_weights.iter().map(|&w| w as f64 / total).collect();
            let ours = chains::motzkin_spectrum(l, s, Prune::EXACT).unwrap().expand().unwrap();
            assert_eq!(ours.len(), expected.len(), "L={l}, s={s}");
            for (x, y) in ours.iter().zip(&expected) {
                assert!((x - y).abs() < 1e-14, "L={l}, s={s}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn full_space_commutators_agree_with_support_check() {
    let rho = Spectrum::new(&[0.7, 0.3]).unwrap();
    for (d, ext, b) in [
        (1, vec![3], Boundary::Open),
        (1, vec![2], Boundary::Periodic),
        (2, vec![2, 1], Boundary::Open),
    ] {
        let model = build_model(d, &ext, b, 2, &rho).unwrap();
        let norm = full_space_commutator_norm(&model).unwrap();
        assert!(norm < 1e-12, "{ext:?}: {norm}");
        assert!(commuting_check(&model).unwrap());
    }
}
