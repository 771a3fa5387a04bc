use opalg::cstar::{CStarValue, Grid, MapKind, PositiveMap, Codomain};
use opalg::element::lin_comb;
use opalg::linalg::{ComplexMatrix, HermitianMatrix};
use opalg::models::{random_complex, random_matrix, AlgebraModel, NcL2Model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn value(seed: u64, variant: u8, n: usize) -> CStarValue<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid::new(0.0, 1.0, 9).unwrap();
    match variant % 4 {
        0 => CStarValue::Scalar(random_complex(&mut r)),
        1 => CStarValue::func(grid, (0..9).map(|_| random_complex(&mut r)).collect()),
        2 => CStarValue::Mat(random_matrix(&mut r, n, n)),
        _ => CStarValue::MatFunc { grid, samples: (0..9).map(|_| random_matrix(&mut r, n, n)).collect() },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn star_preserves_norm(seed in any::<u64>(), variant in 0u8..4, n in 1usize..5) {
        let v = value(seed, variant, n);
        let a = v.cnorm();
        prop_assert!((v.star().cnorm() - a).abs() <= 1e-12 * a.max(1.0));
        prop_assert_eq!(v.star().star(), v);
    }

    #[test]
    fn cstar_identity(seed in any::<u64>(), variant in 0u8..4, n in 1usize..5) {
        let v = value(seed, variant, n);
        let a = v.cnorm();
        let vv = v.star().mul(&v);
        prop_assert!((vv.cnorm() - a * a).abs() <= 1e-10 * (a * a).max(1.0));
        prop_assert!(vv.is_positive(1e-10));
    }

    #[test]
    fn trace_form_null_space_is_pointwise(seed in any::<u64>(), n in 2usize..5, rank in 0usize..4) {
        let rank = rank.min(n - 1);
        let mut d = vec![0.0; n];
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        for x in d.iter_mut().take(rank) {
            *x = 0.1 + random_complex::<f64, _>(&mut r).norm();
        }
        let wm = ComplexMatrix::from_real_diag(&d);
        let model = NcL2Model::<f64>::new(n).unwrap();
        let omega = PositiveMap::new("tr(.W)", Codomain::Scalar, move |a: &ComplexMatrix<f64>| {
            CStarValue::Scalar(a.trace_product(&wm))
        })
        .with_kind(MapKind::TraceWeighted(HermitianMatrix::from_real_diag(&d)));
        let form = omega.induced_form(&model);
        let basis = model.basis();
        let ns = form.null_space(&basis).unwrap();
        prop_assert_eq!(ns.dim(), n * (n - rank));
        for v in &ns.coords {
            let e = lin_comb(v, &basis);
            prop_assert!(form.eval(&e, &e).cnorm() <= 1e-8);
        }
    }
}
