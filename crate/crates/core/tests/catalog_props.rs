use opalg::catalog::{genint_consistency, standard_catalog, CatalogSizes, KernelSpec};
use opalg::cstar::Grid;
use opalg::element::GridFn;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_form_is_positive_and_schwarz() {
    let cat = standard_catalog::<f64>(&CatalogSizes::default()).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(11);
    assert!(cat.forms.len() >= 9);
    for probe in &cat.forms {
        for _ in 0..200 {
            assert!(probe.positivity(&mut r), "{}", probe.name());
            let s = probe.schwarz(&mut r, 1e-9);
            assert!(s.pass_general, "{}: {s:?}", probe.name());
            if probe.commutative() {
                assert_eq!(s.pass_cs, Some(true), "{}", probe.name());
            }
            let t = probe.triangle(&mut r, 1e-9);
            assert!(t.pass_quasi, "{}: {t:?}", probe.name());
            assert!(probe.homogeneity(&mut r) <= 1e-12, "{}", probe.name());
        }
    }
}

#[test]
fn every_map_is_invariant_and_bounded() {
    let cat = standard_catalog::<f64>(&CatalogSizes::default()).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(12);
    for m in &cat.maps {
        let inv = m.invariance(100, &mut r).unwrap();
        assert!(inv.pass, "{}: {inv:?}", m.name());
        let bound = m.declared_bound().expect("catalog maps declare a bound");
        let ratio = m.max_bound_ratio(1000, &mut r);
        assert!(ratio <= bound * (1.0 + 1e-10), "{}: {ratio} > {bound}", m.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn genint_reproduces_kernel_form(seed in any::<u64>(), points in 5usize..30, a in 0.1f64..3.0) {
        let g = Grid::new(0.0, 1.0, points).unwrap();
        let k = KernelSpec::scalar_from_fn(g, g, move |x, t| (-a * (x - t) * (x - t)).exp());
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let f = GridFn(opalg::catalog::random_gridfn(&mut r, points).0);
        let h = opalg::catalog::random_gridfn(&mut r, points);
        prop_assert!(genint_consistency(&k, &f, &h).unwrap() <= 1e-10);
    }
}
