use blockade::analysis::wigner_point;
use blockade::fock::CMatrix;
use blockade::liouville::{lindblad_rhs, steady_state_general, DissipationRates};
use blockade::model::{ModelKind, ModelSpec};
use blockade::states::{closed_form_parity, parity_split, StateFamily};
use blockade::{DensityOperator, FockSpace, C64};
use proptest::prelude::*;

fn density(dim: usize, re: &[f64], im: &[f64]) -> DensityOperator {
    let g = CMatrix::from_fn(dim, dim, |i, j| C64::new(re[i * dim + j], im[i * dim + j]));
    DensityOperator::normalized(FockSpace::new(dim).unwrap(), &g * g.adjoint()).unwrap()
}

fn arb_rho() -> impl Strategy<Value = DensityOperator> {
    (2usize..7).prop_flat_map(|d| {
        (prop::collection::vec(-1.0..1.0f64, d * d), prop::collection::vec(-1.0..1.0f64, d * d))
            .prop_map(move |(re, im)| density(d, &re, &im))
    })
}

fn arb_kind() -> impl Strategy<Value = ModelKind> {
    prop_oneof![
        (0usize..3, 0usize..4).prop_map(|(k, l)| ModelKind::Kl { k, l }),
        Just(ModelKind::Usual),
        Just(ModelKind::UsualPrime),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generator_is_traceless_and_hermiticity_preserving(
        rho in arb_rho(),
        kind in arb_kind(),
        chi in 0.5..40.0f64,
        eps in 0.0..10.0f64,
        g in (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64),
    ) {
        let spec = ModelSpec::new(kind, chi, eps).unwrap();
        let rates = DissipationRates::new(g.0, g.1, g.2).unwrap();
        let l = lindblad_rhs(&spec, &rates, &rho).unwrap();
        prop_assert!(l.trace().norm() < 1e-9);
        prop_assert!((&l - l.adjoint()).camax() < 1e-9);
    }

    #[test]
    fn parity_weights_sum_to_one(rho in arb_rho()) {
        let s = parity_split(&rho);
        prop_assert!((s.p_even + s.p_odd - 1.0).abs() < 1e-12);
        prop_assert!(s.p_even >= 0.0 && s.p_odd >= 0.0);
    }

    #[test]
    fn coherent_closed_form_matches_expansion(r in 0.0..3.0f64, theta in 0.0..6.3f64) {
        let f = StateFamily::Coherent { alpha: C64::from_polar(r, theta) };
        let numeric = parity_split(&f.density(FockSpace::new(120).unwrap()).unwrap());
        let closed = closed_form_parity(&f).unwrap();
        prop_assert!((numeric.p_even - closed.p_even).abs() < 1e-10);
    }

    #[test]
    fn wigner_is_bounded(rho in arb_rho(), q in -3.0..3.0f64, p in -3.0..3.0f64) {
        let w = wigner_point(&rho, q, p);
        prop_assert!(w.abs() <= 1.0 / std::f64::consts::PI + 1e-9);
    }

    #[test]
    fn two_photon_steady_state_keeps_parity_weights(r in 0.1..2.0f64, phi in 0.0..3.14f64) {
        let space = FockSpace::new(16).unwrap();
        let rho0 = StateFamily::Cat { alpha: C64::new(r, 0.0), phi }.density(space).unwrap();
        let spec = ModelSpec::new(ModelKind::MODEL_1, 30.0, 5.0).unwrap();
        let ss = steady_state_general(&spec, &DissipationRates::two_photon(0.2), &rho0).unwrap();
        let (a, b) = (parity_split(&rho0), parity_split(&ss));
        prop_assert!((a.p_even - b.p_even).abs() < 1e-9);
        prop_assert!(ss.min_eigenvalue() > -1e-9);
    }
}
