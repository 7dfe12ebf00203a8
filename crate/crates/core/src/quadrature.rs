//! Gauss-Hermite quadrature for Gaussian expectations.

pub const MAX_NODES: usize = 198;

/// Nodes and weights for `int f(x) exp(-x^2) dx`, by Newton iteration on the
/// orthonormal Hermite recurrence. Valid for 1 <= n <= 198; beyond that the
/// recurrence overflows and the weights collapse to zero.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!((1..=MAX_NODES).contains(&n), "Gauss-Hermite needs 1..={MAX_NODES} nodes, got {n}");
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// E[f(mean + sd Z)] for standard normal Z with an `n`-point rule.
pub fn normal_expectation(f: impl Fn(f64) -> f64, mean: f64, sd: f64, n: usize) -> f64 {
    let (x, w) = gauss_hermite(n);
    let s2 = std::f64::consts::SQRT_2;
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| wi * f(mean + sd * s2 * xi))
        .sum::<f64>()
        / std::f64::consts::PI.sqrt()
}
