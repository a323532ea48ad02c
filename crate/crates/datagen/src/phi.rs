use num_complex::Complex64;

/// `phi_0 .. phi_3` evaluated per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    pub phi0: Vec<Complex64>,
    pub phi1: Vec<Complex64>,
    pub phi2: Vec<Complex64>,
    pub phi3: Vec<Complex64>,
}

pub const DEFAULT_CONTOUR_POINTS: usize = 32;

/// Exponential-integrator weights `phi_0(z) = e^z`, `phi_1 = (e^z - 1)/z`,
/// `phi_2 = (e^z - 1 - z)/z^2`, `phi_3 = (e^z - 1 - z - z^2/2)/z^3`.
///
/// `phi_1..phi_3` are averaged over `contour_points` points on the unit circle around
/// each `z`, which removes the cancellation near `z = 0`.
///
/// # Panics
/// If `contour_points < 16`.
pub fn phi_coefficients(z: &[Complex64], contour_points: usize) -> Phi {
    assert!(
        contour_points >= 16,
        "at least 16 contour points are required, got {contour_points}"
    );
    let m = contour_points as f64;
    let roots: Vec<Complex64> = (0..contour_points)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::PI * (2.0 * j as f64 + 1.0) / m))
        .collect();
    let mut phi = Phi {
        phi0: Vec::with_capacity(z.len()),
        phi1: Vec::with_capacity(z.len()),
        phi2: Vec::with_capacity(z.len()),
        phi3: Vec::with_capacity(z.len()),
    };
    for &zk in z {
        let (mut p1, mut p2, mut p3) = (
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
        );
        for &r in &roots {
            let w = zk + r;
            let e = w.exp();
            let w2 = w * w;
            p1 += (e - 1.0) / w;
            p2 += (e - 1.0 - w) / w2;
            p3 += (e - 1.0 - w - w2 * 0.5) / (w2 * w);
        }
        phi.phi0.push(zk.exp());
        phi.phi1.push(p1 / m);
        phi.phi2.push(p2 / m);
        phi.phi3.push(p3 / m);
    }
    phi
}
