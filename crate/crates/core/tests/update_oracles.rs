use mfpc::baselines::flats::{kfc_objective, kfc_update, lkfc_objective, lkfc_update};
use mfpc::baselines::planes::{kpc_update, kppc_update, proximal_objective};
use mfpc::linalg::column_mean;
use mfpc::metrics::{ari, nmi};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn points(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.random_range(-2.0..2.0))
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let norm = v.norm();
    v / norm
}

fn no_worse(ours: f64, probe: f64) -> bool {
    ours <= probe + 1e-9 * probe.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plane_updates_beat_random_probes(seed in 0u64..100_000, n in 2usize..6, c in 0.0f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = points(&mut rng, n, 30);
        let members: Vec<usize> = (0..18).collect();
        let others: Vec<usize> = (18..30).collect();
        let mean = column_mean(&x, &members).unwrap();
        let kpc = kpc_update(&x, &members).unwrap();
        let kppc = kppc_update(&x, &members, &others, c).unwrap();
        prop_assert!((kpc.w.norm() - 1.0).abs() < 1e-10);
        prop_assert!((kppc.w.norm() - 1.0).abs() < 1e-10);
        let ours_kpc = proximal_objective(&x, &members, &[], 0.0, &kpc.w, kpc.b);
        let ours_kppc = proximal_objective(&x, &members, &others, c, &kppc.w, kppc.b);
        for _ in 0..200 {
            let w = unit(&mut rng, n);
            let b = -w.dot(&mean) + rng.random_range(-1.0..1.0);
            prop_assert!(no_worse(ours_kpc, proximal_objective(&x, &members, &[], 0.0, &w, -w.dot(&mean))));
            prop_assert!(no_worse(ours_kppc, proximal_objective(&x, &members, &others, c, &w, b)));
        }
    }

    #[test]
    fn flat_updates_beat_random_probes(seed in 0u64..100_000, n in 3usize..7, c in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = points(&mut rng, n, 25);
        let members: Vec<usize> = (0..25).collect();
        let p = rng.random_range(1..n);
        let mean = column_mean(&x, &members).unwrap();
        let kfc = kfc_update(&x, &members, p).unwrap();
        let lkfc = lkfc_update(&x, &members, p).unwrap();
        prop_assert!((kfc.w.tr_mul(&kfc.w) - DMatrix::identity(p, p)).amax() < 1e-8);
        let ours_kfc = kfc_objective(&x, &members, &kfc.w, &kfc.gamma);
        let ours_lkfc = lkfc_objective(&x, &members, &lkfc.w, &lkfc.gamma, c);
        for _ in 0..200 {
            let w = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0)).qr().q();
            let shift = DVector::from_fn(p, |_, _| rng.random_range(-0.3..0.3));
            let nu = &mean + DVector::from_fn(n, |_, _| rng.random_range(-0.3..0.3));
            prop_assert!(no_worse(ours_kfc, kfc_objective(&x, &members, &w, &(w.tr_mul(&mean) + shift))));
            prop_assert!(no_worse(ours_lkfc, lkfc_objective(&x, &members, &w, &nu, c)));
        }
    }

    #[test]
    fn scores_ignore_cluster_names(labels in prop::collection::vec((0usize..4, 0usize..4), 2..40), shift in 1usize..4) {
        let t: Vec<usize> = labels.iter().map(|l| l.0).collect();
        let p: Vec<usize> = labels.iter().map(|l| l.1).collect();
        let renamed: Vec<usize> = p.iter().map(|l| (l + shift) % 4).collect();
        prop_assert_eq!(ari(&t, &p).unwrap(), ari(&t, &renamed).unwrap());
        prop_assert_eq!(nmi(&t, &p).unwrap(), nmi(&t, &renamed).unwrap());
        let a = ari(&t, &p).unwrap();
        let n = nmi(&t, &p).unwrap();
        prop_assert!((-1.0..=1.0).contains(&a));
        prop_assert!((0.0..=1.0).contains(&n));
    }
}
