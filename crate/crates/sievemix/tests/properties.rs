//! Property tests for the structural invariants: location-scale closure,
//! sub-density domination, supremum domination, distance symmetry, the
//! closed-form identities of the derived constants, and binomial
//! concentration.

use proptest::prelude::*;

use sievemix::bounds::{self, ContextSpec};
use sievemix::mixture::{MixtureComponent, MixtureParams, SubMixtureSelector};
use sievemix::{l1_distance, param_set_distance, ComponentFamily};

fn normal() -> ComponentFamily {
    ComponentFamily::normal(2.0).unwrap()
}

fn two_normal(w: f64, mu1: f64, s1: f64, mu2: f64, s2: f64) -> MixtureParams {
    MixtureParams::mixture(vec![
        MixtureComponent::new(w, normal(), mu1, s1).unwrap(),
        MixtureComponent::new(1.0 - w, normal(), mu2, s2).unwrap(),
    ])
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn location_scale_closure(
        mu in -50.0f64..50.0,
        sigma in 1e-3f64..1e3,
        x in -100.0f64..100.0,
    ) {
        for family in [normal(), ComponentFamily::uniform(2.0).unwrap()] {
            let direct = family.density(mu, sigma, x).unwrap();
            let standardized = family.standardized_density((x - mu) / sigma) / sigma;
            let scale = direct.abs().max(1e-300);
            prop_assert!((direct - standardized).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn sub_density_dominated_by_mixture(
        w in 0.05f64..0.95,
        mu2 in -5.0f64..5.0,
        s2 in 0.2f64..3.0,
        x in -10.0f64..10.0,
    ) {
        let theta = two_normal(w, 0.0, 1.0, mu2, s2);
        for sel in [vec![0], vec![1]] {
            let sel = SubMixtureSelector::new(sel).unwrap();
            let sub = theta.sub_density(&sel, x).unwrap();
            prop_assert!(sub <= theta.density(x) + 1e-15);
        }
    }

    #[test]
    fn local_sup_dominates_density(
        w in 0.1f64..0.9,
        mu2 in -4.0f64..4.0,
        s2 in 0.3f64..2.0,
        rho in 1e-4f64..0.5,
        x in -8.0f64..8.0,
    ) {
        let theta = two_normal(w, 0.0, 1.0, mu2, s2);
        let sup = theta.local_sup_density(rho, x).unwrap();
        prop_assert!(sup >= theta.density(x));
    }

    #[test]
    fn l1_symmetric_and_in_range(
        w in 0.1f64..0.9,
        mu2 in -4.0f64..4.0,
        s2 in 0.5f64..2.0,
        mu3 in -4.0f64..4.0,
        s3 in 0.5f64..2.0,
    ) {
        let a = two_normal(w, 0.0, 1.0, mu2, s2);
        let b = two_normal(1.0 - w, 1.0, 1.5, mu3, s3);
        let ab = l1_distance(&a, &b).unwrap();
        let ba = l1_distance(&b, &a).unwrap();
        prop_assert!((ab.value - ba.value).abs() < 1e-12);
        prop_assert!(ab.value >= -1e-12 && ab.value <= 2.0 + 1e-9);
    }

    #[test]
    fn param_set_distance_permutation_invariant(
        w in 0.1f64..0.9,
        mu2 in -4.0f64..4.0,
        s2 in 0.3f64..2.0,
    ) {
        let theta = two_normal(w, 0.0, 1.0, mu2, s2);
        let swapped = MixtureParams::mixture(vec![
            theta.components()[1].clone(),
            theta.components()[0].clone(),
        ])
        .unwrap();
        prop_assert_eq!(param_set_distance(&swapped, &[theta]).unwrap(), 0.0);
    }

    #[test]
    fn okamoto_exact_never_exceeds_bound(
        n in 1usize..150,
        p in 0.0f64..1.0,
        eps in 0.01f64..0.8,
    ) {
        let r = bounds::okamoto_bound(n, p, eps).unwrap();
        prop_assert!(r.exact_tail <= r.bound + 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.exact_tail));
    }

    #[test]
    fn radius_and_width_identities(
        kappa0 in 0.01f64..0.5,
        y in 1e-6f64..1e6,
    ) {
        let c0 = 0.05;
        let spec = ContextSpec { kappa0, c0, a0: 1.0, zeta: 1.0, lambda0: None };
        let (ctx, _) = bounds::derive_context(&spec, &[normal()], None).unwrap();
        // v1·nu(y)^-beta = kappa0/y.
        let lhs = ctx.v1 * ctx.nu(y).powf(-ctx.beta);
        let rhs = ctx.kappa0 / y;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        // xi(y)·y^beta_tilde = v2.
        let prod = ctx.xi(y) * y.powf(ctx.beta_tilde);
        prop_assert!((prod - ctx.v2).abs() <= 1e-12 * ctx.v2);
    }
}
