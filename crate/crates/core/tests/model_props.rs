use opalg::cstar::Grid;
use opalg::element::Element;
use opalg::linalg::operator_norm;
use opalg::models::{
    projector_sequence, default_cutoffs, random_psd, AlgebraModel, GridL2Model, NcL2Model, SchattenModel, SeqFunModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn axioms<M: AlgebraModel<f64>>(model: &M, seed: u64) -> Result<(), TestCaseError> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let a = model.sample(&mut r);
    let x = model.sample_core(&mut r);
    let y = model.sample_core(&mut r);
    let na = model.norm(&a);
    prop_assert!((model.norm(&a.star()) - na).abs() <= 1e-12 * na.max(1.0), "{}: star changes the norm", model.name());
    let ax = model.left_mul(&a, &x).expect("x is in the core");
    let lhs = ax.star();
    let rhs = model.right_mul(&x.star(), &a.star()).expect("x* is in the core");
    prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12 * lhs.max_abs().max(1.0), "{}: (ax)* != x*a*", model.name());
    let l = model.product_unchecked(&model.product_unchecked(&a, &x), &y);
    let rr = model.product_unchecked(&a, &model.product_unchecked(&x, &y));
    prop_assert!(l.sub(&rr).max_abs() <= 1e-10 * l.max_abs().max(1.0), "{}: not associative", model.name());
    let id = model.identity();
    for m in 0..id.len() {
        for n in m..id.len() {
            let p = model.product_unchecked(&id[m], &id[n]);
            prop_assert!(p.sub(&id[m]).max_abs() == 0.0, "{}: e_m e_n != e_m", model.name());
        }
        let ae = model.product_unchecked(&a, &id[m]);
        prop_assert!(model.norm(&ae) <= na * (1.0 + 1e-12), "{}: ||a e_m|| > ||a||", model.name());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn schatten_axioms(seed in any::<u64>(), n in 2usize..6, p in 1.0f64..6.0) {
        axioms(&SchattenModel::new(n, p).unwrap(), seed)?;
    }

    #[test]
    fn ncl2_axioms(seed in any::<u64>(), n in 2usize..6) {
        axioms(&NcL2Model::<f64>::new(n).unwrap(), seed)?;
    }

    #[test]
    fn grid_l2_axioms(seed in any::<u64>(), points in 5usize..41) {
        axioms(&GridL2Model::new(2.0, points).unwrap(), seed)?;
    }

    #[test]
    fn seq_fun_axioms(seed in any::<u64>(), len in 1usize..5) {
        axioms(&SeqFunModel::new(Grid::new(0.0, 1.0, 11).unwrap(), len).unwrap(), seed)?;
    }

    #[test]
    fn projector_residuals_monotone(seed in any::<u64>(), n in 2usize..9, p in 1.0f64..4.0) {
        let w = random_psd::<f64, _>(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let top = operator_norm(w.as_matrix());
        let cutoffs: Vec<f64> = default_cutoffs::<f64>(8).iter().map(|c| c * top).collect();
        let seq = projector_sequence(&w, p, &cutoffs).unwrap();
        prop_assert!(seq.monotone);
        prop_assert!(seq.residuals.windows(2).all(|r| r[1] <= r[0] * (1.0 + 1e-12) + 1e-14));
        for (proj, &rank) in seq.projections.iter().zip(&seq.ranks) {
            let comm = &w.as_matrix().matmul(proj) - &proj.matmul(w.as_matrix());
            prop_assert!(comm.max_abs() <= 1e-10);
            prop_assert!((proj.trace().re - rank as f64).abs() <= 1e-9);
        }
    }
}
