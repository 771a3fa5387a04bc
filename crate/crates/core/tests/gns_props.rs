use opalg::cstar::{CStarValue, Codomain, MapKind, PositiveMap};
use opalg::gns::{build_gns, verify_representation};
use opalg::linalg::{operator_norm, ComplexMatrix, HermitianMatrix};
use opalg::models::{random_psd, AlgebraModel, NcL2Model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn trace_map(w: HermitianMatrix<f64>) -> PositiveMap<f64, ComplexMatrix<f64>> {
    let m = w.as_matrix().clone();
    let bound = operator_norm(&m);
    PositiveMap::new("tr(.W)", Codomain::Scalar, move |a: &ComplexMatrix<f64>| CStarValue::Scalar(a.trace_product(&m)))
        .with_bound(bound)
        .with_kind(MapKind::TraceWeighted(w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn representation_is_contractive(seed in any::<u64>(), n in 2usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let model = NcL2Model::<f64>::new(n).unwrap();
        let omega = trace_map(random_psd(&mut r, n));
        let form = omega.induced_form(&model);
        let g = build_gns(&model, &form, &mut r).unwrap();
        let rep = verify_representation(&g, 20, &mut r);
        prop_assert!(rep.pass, "{rep:?}");
        for _ in 0..10 {
            let a = model.sample_core(&mut r);
            prop_assert!(g.pi_operator_norm(&a) <= operator_norm(&a) + 1e-8);
        }
    }

    #[test]
    fn bounds_add(seed in any::<u64>(), n in 2usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let model = NcL2Model::<f64>::new(n).unwrap();
        let w1 = trace_map(random_psd(&mut r, n));
        let w2 = trace_map(random_psd(&mut r, n));
        let sum = w1.sum(&w2);
        let m1 = w1.declared_bound().unwrap();
        let m2 = w2.declared_bound().unwrap();
        prop_assert!((sum.declared_bound().unwrap() - (m1 + m2)).abs() <= 1e-12 * (m1 + m2));
        for _ in 0..50 {
            let c = model.sample_core(&mut r);
            let d = model.sample_core(&mut r);
            prop_assert!(w1.bound_ratio(&model, &c, &d) <= m1 * (1.0 + 1e-10));
            prop_assert!(w2.bound_ratio(&model, &c, &d) <= m2 * (1.0 + 1e-10));
            prop_assert!(sum.bound_ratio(&model, &c, &d) <= (m1 + m2) * (1.0 + 1e-10));
        }
    }
}
