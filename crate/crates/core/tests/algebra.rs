use std::sync::Arc;

use approx::assert_abs_diff_eq;

use cavity_chain::basis::{ModeLayout, ProjectedBasis, QuantaWindow};
use cavity_chain::model::{build_basis, build_hamiltonian, build_lindblad_terms, ChainConfig, Dephasing, DephasingTarget, SinkCoupling};
use cavity_chain::operator::{ladder_lower, ladder_raise, number_op, op_mul, quanta_op, CMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn single_mode_raise(levels: usize) -> CMatrix {
    let mut m = CMatrix::zeros(levels, levels);
    for n in 0..levels - 1 {
        m[(n + 1, n)] = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    m
}

/// `I ⊗ … ⊗ a† ⊗ … ⊗ I` with the first mode as the leftmost factor.
fn tensor_raise(levels: &[usize], mode: usize) -> CMatrix {
    levels.iter().enumerate().fold(DMatrix::identity(1, 1), |acc: CMatrix, (m, &d)| {
        let factor = if m == mode { single_mode_raise(d) } else { CMatrix::identity(d, d) };
        acc.kronecker(&factor)
    })
}

/// Every occupation vector admitted: the projected basis is the full product space.
fn full_basis(layout: ModeLayout) -> Arc<ProjectedBasis> {
    let max_quanta = layout.modes().iter().filter(|m| m.kind.carries_quanta()).map(|m| m.levels - 1).sum();
    let phonon_cap = layout.modes().iter().map(|m| m.levels - 1).max().unwrap();
    Arc::new(ProjectedBasis::enumerate(layout, QuantaWindow::new(0, max_quanta, phonon_cap).unwrap()).unwrap())
}

#[test]
fn projection_matches_tensor_product_on_full_window() {
    let layouts = [
        ModeLayout::chain(1, 2, None).unwrap(),
        ModeLayout::chain(1, 3, None).unwrap(),
        ModeLayout::chain(1, 2, Some(3)).unwrap(),
        ModeLayout::chain(1, 3, Some(2)).unwrap(),
    ];
    for layout in layouts {
        assert!(layout.len() <= 4);
        let levels: Vec<usize> = layout.modes().iter().map(|m| m.levels).collect();
        let basis = full_basis(layout);
        assert_eq!(basis.dim(), levels.iter().product::<usize>());
        for mode in 0..levels.len() {
            let expected = tensor_raise(&levels, mode);
            assert_eq!(ladder_raise(&basis, mode).unwrap().elements(), &expected, "raise, mode {mode}");
            assert_eq!(ladder_lower(&basis, mode).unwrap().elements(), &expected.adjoint(), "lower, mode {mode}");
        }
    }
}

#[test]
fn number_operator_is_raise_times_lower() {
    let basis = full_basis(ModeLayout::chain(1, 2, Some(3)).unwrap());
    for mode in 0..basis.layout().len() {
        let product = op_mul(&ladder_raise(&basis, mode).unwrap(), &ladder_lower(&basis, mode).unwrap()).unwrap();
        let diff = (product.elements() - number_op(&basis, mode).unwrap().elements()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_abs_diff_eq!(diff, 0.0, epsilon = 1e-12);
    }
}

#[test]
fn two_level_anticommutator_is_identity_where_unprojected() {
    let basis = full_basis(ModeLayout::chain(2, 2, None).unwrap());
    let id = CMatrix::identity(basis.dim(), basis.dim());
    for mode in 0..basis.layout().len() {
        let up = ladder_raise(&basis, mode).unwrap();
        let down = ladder_lower(&basis, mode).unwrap();
        let anti = op_mul(&down, &up).unwrap().elements() + op_mul(&up, &down).unwrap().elements();
        assert_eq!(anti, id);
    }
}

#[test]
fn enumeration_is_deterministic() {
    let make = || ProjectedBasis::enumerate(ModeLayout::chain(3, 2, Some(2)).unwrap(), QuantaWindow::new(0, 2, 1).unwrap()).unwrap();
    assert_eq!(make().states(), make().states());
}

fn dephasing() -> impl Strategy<Value = Dephasing> {
    prop_oneof![Just(Dephasing::None), Just(Dephasing::LindbladLike), Just(Dephasing::UnitaryPhonon)]
}

fn chain_config() -> impl Strategy<Value = ChainConfig> {
    (1usize..=3, -2.0..2.0f64, -2.0..2.0f64, 0.0..2.0f64, dephasing(), 1usize..=2, 0usize..=2, any::<bool>(), any::<bool>())
        .prop_map(|(n, k, mu, g, dephasing, max_quanta, phonon_cap, photon_sink, exciton_target)| {
            let mut c = ChainConfig::new(n);
            c.k = k;
            c.mu = mu;
            c.g = g;
            c.dephasing = dephasing;
            c.rate_in = 0.7;
            c.rate_out = 1.3;
            c.cavity_loss = 0.2;
            c.window = QuantaWindow { min_quanta: 0, max_quanta, phonon_cap };
            if photon_sink {
                c.sink_coupling = SinkCoupling::PhotonOfLastCavity;
            }
            if exciton_target {
                c.dephasing_target = DephasingTarget::ExcitonNumber;
            }
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_quanta(config in chain_config()) {
        let basis = build_basis(&config).unwrap();
        let h = build_hamiltonian(&config, &basis).unwrap();
        prop_assert!(h.is_hermitian());
        prop_assert!(h.hermitian_deviation() <= 1e-12);
        let comm = h.commutator(&quanta_op(&basis)).unwrap();
        prop_assert!(comm.max_abs() <= 1e-12);
    }

    #[test]
    fn every_term_shares_the_model_basis(config in chain_config()) {
        let basis = build_basis(&config).unwrap();
        for term in build_lindblad_terms(&config, &basis).unwrap() {
            prop_assert!(Arc::ptr_eq(term.operator.basis(), &basis), "{}", term.label);
        }
    }

    #[test]
    fn lower_is_adjoint_of_raise(n in 1usize..=3, phonons in proptest::option::of(2usize..=3), max_quanta in 0usize..=3, cap in 0usize..=2) {
        let layout = ModeLayout::chain(n, 2, phonons).unwrap();
        let basis = Arc::new(ProjectedBasis::enumerate(layout, QuantaWindow::new(0, max_quanta, cap).unwrap()).unwrap());
        for mode in 0..basis.layout().len() {
            let up = ladder_raise(&basis, mode).unwrap();
            let down = ladder_lower(&basis, mode).unwrap();
            let diff = (up.elements().adjoint() - down.elements()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12);
        }
    }
}
