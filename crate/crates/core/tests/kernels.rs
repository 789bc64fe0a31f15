use gpargmax::kernels::{check_self_similarity, check_shift_equivariance, eval_cov, eval_mean, gram};
use gpargmax::{CovSpec, Matrix, MeanSpec, MixtureAtom};
use proptest::prelude::*;

fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-8.0f64..8.0, d)
}

fn atoms(d: usize) -> impl Strategy<Value = Vec<MixtureAtom>> {
    prop::collection::vec((0.1f64..1.0, coords(d), 0.05f64..3.0, 0.1f64..2.0), 1..4).prop_map(|raw| {
        let total: f64 = raw.iter().map(|r| r.0).sum();
        let mut atoms: Vec<MixtureAtom> =
            raw.into_iter().map(|(w, x, f, a)| MixtureAtom::new(w / total, x, f).with_a(a)).collect();
        let rest: f64 = atoms[1..].iter().map(|a| a.w).sum();
        atoms[0].w = 1.0 - rest;
        atoms
    })
}

fn spd(d: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |a| {
        // A Aᵀ + I
        let rows = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Matrix::from_rows(rows).unwrap()
    })
}

fn cov_spec() -> impl Strategy<Value = CovSpec> {
    prop_oneof![
        (0.05f64..5.0).prop_map(|sigma2| CovSpec::ScaledBm1d { sigma2 }),
        (1usize..=3).prop_flat_map(spd).prop_map(|sigma| CovSpec::Bilinear { sigma }),
        (1usize..=3).prop_flat_map(atoms).prop_map(|atoms| CovSpec::MixtureBm { atoms }),
        prop::collection::vec(0.0f64..3.0, 1..=3).prop_map(|f| CovSpec::SeparableBm { f }),
    ]
}

fn with_points(n: usize) -> impl Strategy<Value = (CovSpec, Vec<Vec<f64>>)> {
    cov_spec().prop_flat_map(move |k| {
        let d = k.dim();
        (Just(k), prop::collection::vec(coords(d), n))
    })
}

proptest! {
    #[test]
    fn shift_identity_holds((k, pts) in with_points(3)) {
        let h = &pts[0];
        prop_assume!(eval_cov(&k, h, h).unwrap() > 1e-6);
        let r = check_shift_equivariance(&k, h, &pts[1], &pts[2], 1e-10).unwrap();
        prop_assert!(r.pass, "residual {}", r.residual);
    }

    #[test]
    fn self_similarity_holds((k, pts) in with_points(2), tau in 0.01f64..20.0) {
        let r = check_self_similarity(&k, tau, &pts[0], &pts[1], k.hurst(), 1e-9).unwrap();
        prop_assert!(r.pass, "residual {}", r.residual);
    }

    #[test]
    fn kernels_are_symmetric_and_pinned((k, pts) in with_points(2)) {
        let d = k.dim();
        let (s, t) = (&pts[0], &pts[1]);
        let (a, b) = (eval_cov(&k, s, t).unwrap(), eval_cov(&k, t, s).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert_eq!(eval_cov(&k, &vec![0.0; d], t).unwrap(), 0.0);
    }

    #[test]
    fn gram_is_positive_semidefinite((k, pts) in with_points(6)) {
        let g = gram(&k, &pts).unwrap();
        let scale = g.diagonal().amax().max(1.0);
        let min = g.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-10 * scale, "min eigenvalue {min}");
    }

    #[test]
    fn specs_roundtrip_through_json(k in cov_spec()) {
        let text = serde_json::to_string(&k).unwrap();
        prop_assert_eq!(serde_json::from_str::<CovSpec>(&text).unwrap(), k);
    }

    #[test]
    fn quadratic_means_are_nonpositive(v in (1usize..=3).prop_flat_map(spd), s in coords(3)) {
        let d = v.dim();
        let m = MeanSpec::Quadratic { v };
        prop_assert!(eval_mean(&m, &s[..d]).unwrap() <= 0.0);
        prop_assert_eq!(eval_mean(&m, &vec![0.0; d]).unwrap(), 0.0);
    }
}
