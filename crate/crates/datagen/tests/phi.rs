use compol_datagen::phi_coefficients;
use num_complex::Complex64;
use proptest::prelude::*;

fn real(z: f64) -> [f64; 4] {
    let p = phi_coefficients(&[Complex64::new(z, 0.0)], 32);
    [p.phi0[0].re, p.phi1[0].re, p.phi2[0].re, p.phi3[0].re]
}

/// `phi_j(z) = sum_n z^n / (n + j)!`.
fn series(z: Complex64, j: u32) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    for i in 1..=j {
        term /= i as f64;
    }
    let mut sum = term;
    for n in 1..60 {
        term = term * z / (n + j) as f64;
        sum += term;
    }
    sum
}

#[test]
fn limits_at_zero() {
    let [p0, p1, p2, p3] = real(0.0);
    assert_eq!(p0, 1.0);
    assert!((p1 - 1.0).abs() < 1e-14, "{p1}");
    assert!((p2 - 0.5).abs() < 1e-14, "{p2}");
    assert!((p3 - 1.0 / 6.0).abs() < 1e-14, "{p3}");
}

#[test]
fn values_at_one_match_series() {
    let [_, p1, p2, p3] = real(1.0);
    assert!((p1 - (std::f64::consts::E - 1.0)).abs() < 1e-10);
    let one = Complex64::new(1.0, 0.0);
    assert!((p1 - series(one, 1).re).abs() < 1e-10);
    assert!((p2 - series(one, 2).re).abs() < 1e-10);
    assert!((p3 - series(one, 3).re).abs() < 1e-10);
}

#[test]
fn complex_arguments_match_series() {
    for z in [
        Complex64::new(0.3, -1.2),
        Complex64::new(-2.0, 0.5),
        Complex64::new(1e-9, 1e-9),
    ] {
        let p = phi_coefficients(&[z], 32);
        assert!((p.phi0[0] - z.exp()).norm() < 1e-14);
        assert!((p.phi1[0] - series(z, 1)).norm() < 1e-10);
        assert!((p.phi2[0] - series(z, 2)).norm() < 1e-10);
        assert!((p.phi3[0] - series(z, 3)).norm() < 1e-10);
    }
}

#[test]
#[should_panic(expected = "contour points")]
fn too_few_contour_points() {
    phi_coefficients(&[Complex64::new(0.0, 0.0)], 8);
}

proptest! {
    #[test]
    fn real_inputs_give_real_outputs(z in -200.0f64..20.0) {
        let p = phi_coefficients(&[Complex64::new(z, 0.0)], 32);
        for v in [p.phi1[0], p.phi2[0], p.phi3[0]] {
            prop_assert!(v.im.abs() <= 1e-12 * v.re.abs().max(1.0), "{v}");
        }
    }

    #[test]
    fn agrees_with_closed_form_away_from_zero(z in prop_oneof![-200.0f64..-2.0, 2.0f64..20.0]) {
        let [_, p1, p2, p3] = real(z);
        let e = z.exp();
        let d1 = (e - 1.0) / z;
        let d2 = (e - 1.0 - z) / (z * z);
        let d3 = (e - 1.0 - z - z * z / 2.0) / (z * z * z);
        for (a, b) in [(p1, d1), (p2, d2), (p3, d3)] {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-3), "{z}: {a} vs {b}");
        }
    }
}
