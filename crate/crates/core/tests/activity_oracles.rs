use proptest::prelude::*;
use realized_laplace::activity::{
    activity_from_power_variations, bootstrap_se, estimate_activity, power_variation,
    DEFAULT_K_FRAC, DEFAULT_P0,
};
use realized_laplace::sim::{sample_stable_increments, StableSpec};
use realized_laplace::{PathGrid, RngStream};

const DN: f64 = 1.0 / 78.0;

fn self_similar_path(beta: f64, n: usize, id: u64) -> PathGrid {
    // Δn^{1/β}·S_1 draws, the exact scaling of the increments
    let unit = sample_stable_increments(
        &StableSpec::new(beta).unwrap(),
        n,
        1.0,
        RngStream::new(31, id),
    )
    .unwrap();
    let incs: Vec<f64> = unit.iter().map(|x| DN.powf(1.0 / beta) * x).collect();
    PathGrid::from_increments(0.0, &incs, DN).unwrap()
}

#[test]
fn mean_estimate_on_self_similar_paths() {
    for (k, beta) in [1.3, 1.5, 1.7, 1.9].into_iter().enumerate() {
        let est: Vec<f64> = (0..500)
            .map(|r| {
                let p = self_similar_path(beta, 100 * 78, (k * 1000 + r) as u64);
                estimate_activity(&p, DEFAULT_P0, DEFAULT_K_FRAC)
                    .unwrap()
                    .beta_hat
            })
            .collect();
        let m = est.iter().sum::<f64>() / est.len() as f64;
        assert!((m - beta).abs() < 0.03, "beta {beta}: mean {m}");
    }
}

#[test]
fn stored_power_variations_reproduce_the_estimate() {
    let p = self_similar_path(1.7, 252 * 78, 7);
    let e = estimate_activity(&p, DEFAULT_P0, DEFAULT_K_FRAC).unwrap();
    assert_eq!(e.p_star, DEFAULT_K_FRAC * e.beta_pilot);
    assert_eq!(e.phi_fine, power_variation(&p, e.p_star, 1).unwrap());
    assert_eq!(e.phi_coarse, power_variation(&p, e.p_star, 2).unwrap());
    assert_eq!(
        activity_from_power_variations(e.p_star, e.phi_fine, e.phi_coarse).unwrap(),
        e.beta_hat
    );
    let ratio = e.phi_coarse / e.phi_fine;
    let implied = 2f64.powf(e.p_star / e.beta_hat - 1.0);
    assert!((ratio / implied - 1.0).abs() < 1e-12);
}

#[test]
fn bootstrap_is_reproducible_and_positive() {
    let p = self_similar_path(1.7, 60 * 78, 8);
    let e = estimate_activity(&p, DEFAULT_P0, DEFAULT_K_FRAC).unwrap();
    let a = bootstrap_se(&p, &e, 200, RngStream::new(9, 0)).unwrap();
    let b = bootstrap_se(&p, &e, 200, RngStream::new(9, 0)).unwrap();
    assert_eq!(a, b);
    assert!(a > 0.0 && a < 0.2, "{a}");
}

#[test]
fn odd_increment_count_drops_the_unpaired_tail() {
    let p = PathGrid::from_increments(0.0, &[1.0, -2.0, 0.5], 0.5).unwrap();
    assert_eq!(power_variation(&p, 1.0, 2).unwrap(), 1.0);
    assert_eq!(power_variation(&p, 1.0, 1).unwrap(), 3.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invariant_to_scale_and_level(id in 0u64..1000, c in 1e-3f64..1e3, a in -1e3f64..1e3) {
        let p = self_similar_path(1.6, 20 * 78, id);
        let base = estimate_activity(&p, DEFAULT_P0, DEFAULT_K_FRAC).unwrap().beta_hat;
        let scaled = estimate_activity(&p.scaled(c), DEFAULT_P0, DEFAULT_K_FRAC).unwrap().beta_hat;
        prop_assert!((scaled - base).abs() <= 1e-10 * base, "{} vs {}", scaled, base);
        let shifted = estimate_activity(&p.shifted(a), DEFAULT_P0, DEFAULT_K_FRAC).unwrap().beta_hat;
        prop_assert!((shifted - base).abs() <= 1e-8 * base, "{} vs {}", shifted, base);
    }
}
