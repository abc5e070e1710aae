use num_complex::Complex64;
use tipping_core::delay::{self, SectionSpec};

#[test]
fn contraction_rate_matches_integrated_attraction() {
    let section = SectionSpec::default();
    let samples: Vec<_> = [0.1, 0.05, 0.04, 0.03, 0.025]
        .iter()
        .map(|&e| delay::contraction_estimate(e, section, 0.1).unwrap())
        .collect();
    assert!(samples.windows(2).all(|w| w[1].separation < w[0].separation));
    // Attraction 2√(-y) integrated over the entry interval gives (4/3)ρ³.
    let k = delay::fit_contraction_rate(&samples).unwrap();
    let expected = 4.0 / 3.0 * section.rho.powi(3);
    assert!(k > 0.0);
    assert!((k - expected).abs() < 0.1 * expected, "{k} vs {expected}");
}

#[test]
fn fold_exit_fit_is_near_two_thirds() {
    let fit = delay::fit_delay_exponent(&[0.05, 0.02, 0.01, 0.005, 0.002], SectionSpec::default()).unwrap();
    assert!((fit.exponent - 2.0 / 3.0).abs() < 0.1, "{}", fit.exponent);
    assert!(fit.values.iter().all(|&y| y > 0.0));
}

#[test]
fn fold_exit_from_another_entry_point_agrees() {
    // Trajectories entering on the attracting side collapse onto the same
    // slow manifold.
    let a = delay::fold_crossing(0.01, 0.5, -0.25, -0.5, 0.01).unwrap();
    let b = delay::fold_crossing(0.01, 0.8, -0.25, -0.5, 0.01).unwrap();
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn way_in_way_out_is_an_involution() {
    let lambda = |y: f64| Complex64::new(y + 0.5 * y * y, 1.0);
    for y_a in [-0.6, -0.4, -0.2] {
        let p = delay::hopf_delay_predict(y_a, lambda).unwrap();
        // Mirror the eigenvalue so the exit becomes an entry.
        let back = delay::hopf_delay_predict(-p.y_exit_predicted, |y: f64| lambda(-y) * -1.0).unwrap();
        assert!((back.y_exit_predicted + y_a).abs() < 1e-8, "{y_a}: {back:?}");
    }
}

#[test]
fn hopf_entry_moves_toward_zero_with_a_wider_tube() {
    let narrow = delay::hopf_delay_measure(0.01, 1.0, [0.3, 0.3], -0.5, 0.01).unwrap();
    let wide = delay::hopf_delay_measure(0.05, 1.0, [0.3, 0.3], -0.5, 0.05).unwrap();
    assert!(wide.y_a > narrow.y_a);
    assert!(wide.y_r > 0.0 && narrow.y_r > 0.0);
}
