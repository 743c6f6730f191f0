use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use curvlab::conditions::{isotropic_u, lambda_mu_q};
use curvlab::frames::{lift_frame, random_unitary, unitary_action, Frame, Weights};
use curvlab::models::complex_projective;
use curvlab::{project_curvature, CurvatureTensor};

fn raw_array(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n.pow(4)).map(|_| rng.sample(StandardNormal)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), n in 4usize..=8) {
        let once = project_curvature(&raw_array(seed, n), n).unwrap();
        let twice = project_curvature(once.components(), n).unwrap();
        prop_assert!(once.max_diff(&twice).unwrap() <= 1e-13);
        prop_assert!(once.residuals().max() <= 1e-13);
    }

    #[test]
    fn sectional_curvature_depends_only_on_the_plane(
        seed in any::<u64>(),
        n in 4usize..=8,
        angle in 0.0..std::f64::consts::TAU,
        a in 0.2f64..3.0,
        b in -2.0f64..2.0,
        c in 0.2f64..3.0,
    ) {
        let r = CurvatureTensor::random(seed, n).unwrap();
        let f = Frame::random(seed ^ 0x5eed, n, 2).unwrap();
        let (x, y) = (f.row(0), f.row(1));
        let k = r.sectional(x, y).unwrap();
        let (s, co) = angle.sin_cos();
        let rot_x: Vec<f64> = x.iter().zip(y).map(|(p, q)| co * p + s * q).collect();
        let rot_y: Vec<f64> = x.iter().zip(y).map(|(p, q)| -s * p + co * q).collect();
        prop_assert!((r.sectional(&rot_x, &rot_y).unwrap() - k).abs() <= 1e-12 * (1.0 + k.abs()));
        // any basis of the same plane, not necessarily orthonormal
        let sx: Vec<f64> = x.iter().map(|p| a * p).collect();
        let sy: Vec<f64> = x.iter().zip(y).map(|(p, q)| b * p + c * q).collect();
        prop_assert!((r.sectional(&sx, &sy).unwrap() - k).abs() <= 1e-12 * (1.0 + k.abs()));
    }

    #[test]
    fn lifted_frames_are_orthonormal(seed in any::<u64>(), n in 4usize..=8, i in 0usize..21, j in 0usize..21) {
        let w = Weights::grid(21)[i * 21 + j];
        let lifted = lift_frame(&Frame::random4(seed, n).unwrap(), w).unwrap();
        prop_assert_eq!(lifted.dim(), n + 2);
        prop_assert!(lifted.gram_residual() <= 1e-14);
    }

    #[test]
    fn unitary_action_preserves_complex_projective_functionals(seed in any::<u64>(), m in 2usize..=4, lambda in 0.0f64..=1.0, mu in 0.0f64..=1.0) {
        let cp = complex_projective(m, 4.0).unwrap();
        let f = Frame::random4(seed, 2 * m).unwrap();
        let g = unitary_action(&f, &random_unitary(seed.wrapping_add(1), m).unwrap()).unwrap();
        prop_assert!(g.gram_residual() <= 1e-13);
        let u0 = isotropic_u(&cp, &f).unwrap();
        prop_assert!((isotropic_u(&cp, &g).unwrap() - u0).abs() <= 1e-12);
        let w = Weights::new(lambda, mu).unwrap();
        prop_assert!((lambda_mu_q(&cp, &g, w).unwrap() - lambda_mu_q(&cp, &f, w).unwrap()).abs() <= 1e-12);
    }
}
