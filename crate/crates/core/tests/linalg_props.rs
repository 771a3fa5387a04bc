use opalg::linalg::{
    hermitian_fun, mat_fun, operator_norm, schatten_norm, singular_values, spectral_projection, ComplexMatrix, HermitianMatrix,
};
use opalg::models::{random_matrix, random_psd};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn hermitian(seed: u64, n: usize) -> HermitianMatrix<f64> {
    let a = random_matrix::<f64, _>(&mut rng(seed), n, n);
    HermitianMatrix::new((&a + &a.adjoint()).scale_real(0.5)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn schatten_norms_decrease_in_p(seed in any::<u64>(), n in 1usize..6, m in 1usize..6, p in 1.0f64..8.0, dq in 0.0f64..4.0) {
        let a = random_matrix::<f64, _>(&mut rng(seed), n, m);
        let q = p + dq;
        let np = schatten_norm(&a, p).unwrap();
        let nq = schatten_norm(&a, q).unwrap();
        prop_assert!(nq <= np * (1.0 + 1e-12), "p={p} q={q}: {nq} > {np}");
        let ninf = schatten_norm(&a, f64::INFINITY).unwrap();
        prop_assert!(ninf <= nq * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn schatten_two_is_frobenius(seed in any::<u64>(), n in 1usize..7, m in 1usize..7) {
        let a = random_matrix::<f64, _>(&mut rng(seed), n, m);
        let direct: f64 = a.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((schatten_norm(&a, 2.0).unwrap() - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn schatten_one_of_psd_is_trace(seed in any::<u64>(), n in 1usize..7) {
        let h = random_psd::<f64, _>(&mut rng(seed), n);
        let tr = h.as_matrix().trace().re;
        prop_assert!((schatten_norm(h.as_matrix(), 1.0).unwrap() - tr).abs() <= 1e-10 * tr.max(1.0));
    }

    #[test]
    fn singular_values_of_diagonal(d in prop::collection::vec(-5.0f64..5.0, 1..7)) {
        let a = ComplexMatrix::from_real_diag(&d);
        let mut expect: Vec<f64> = d.iter().map(|x| x.abs()).collect();
        expect.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let got = singular_values(&a);
        for (g, e) in got.iter().zip(&expect) {
            prop_assert!((g - e).abs() <= 1e-12);
        }
    }

    #[test]
    fn module_bounds(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let a = random_matrix::<f64, _>(&mut r, n, n);
        let b = random_matrix::<f64, _>(&mut r, n, n);
        let ab = a.matmul(&b).frobenius_norm();
        prop_assert!(ab <= a.frobenius_norm() * operator_norm(&b) * (1.0 + 1e-12));
        prop_assert!(ab <= operator_norm(&a) * b.frobenius_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_projection_commutes(seed in any::<u64>(), n in 1usize..7, cut in -2.0f64..2.0) {
        let h = hermitian(seed, n);
        let sp = spectral_projection(&h, cut);
        let p = &sp.projection;
        let comm = &h.as_matrix().matmul(p) - &p.matmul(h.as_matrix());
        prop_assert!(comm.max_abs() <= 1e-10);
        prop_assert!((&p.matmul(p) - p).max_abs() <= 1e-10);
        let rank = p.trace().re.round() as usize;
        prop_assert_eq!(rank, sp.rank);
    }

    #[test]
    fn mat_fun_square_is_product(seed in any::<u64>(), n in 1usize..7) {
        let h = random_psd::<f64, _>(&mut rng(seed), n);
        let sq = mat_fun(&h, |t| t * t).unwrap();
        let hh = h.as_matrix().matmul(h.as_matrix());
        prop_assert!(sq.as_matrix().max_abs_diff(&hh) <= 1e-10 * hh.max_abs().max(1.0));
        let g = hermitian(seed, n);
        let gg = g.as_matrix().matmul(g.as_matrix());
        prop_assert!(hermitian_fun(&g, |t| t * t).as_matrix().max_abs_diff(&gg) <= 1e-10 * gg.max_abs().max(1.0));
    }

    #[test]
    fn eigh_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let h = hermitian(seed, n);
        let e = h.eigh();
        let back = e.compose(|t| t);
        prop_assert!(back.max_abs_diff(h.as_matrix()) <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn singular_values_match_gram_spectrum(seed in any::<u64>(), n in 1usize..7, m in 1usize..7) {
        let a = random_matrix::<f64, _>(&mut rng(seed), n, m);
        let sv = singular_values(&a);
        prop_assert_eq!(sv.len(), n.min(m));
        prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        // Nonzero spectrum of the smaller Gram matrix.
        let g = if n <= m { a.matmul(&a.adjoint()) } else { a.adjoint().matmul(&a) };
        let mut eig = HermitianMatrix::with_tol(g, 1e-9).unwrap().eigh().values;
        eig.reverse();
        let scale = sv[0].max(1.0);
        for (s, l) in sv.iter().zip(&eig) {
            prop_assert!((s * s - l).abs() <= 1e-10 * scale * scale, "{s}^2 vs {l}");
        }
    }
}
