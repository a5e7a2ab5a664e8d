//! Five-point Gauss-Legendre rule on a cell.

const NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// ∫_a^b f, exact for polynomials of degree ≤ 9.
pub fn gauss_legendre<F, E>(a: f64, b: f64, mut f: F) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gl(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        gauss_legendre::<_, ()>(a, b, |x| Ok(f(x))).unwrap()
    }

    #[test]
    fn exact_on_polynomials() {
        assert!((gl(0.0, 1.0, |x| x.powi(9)) - 0.1).abs() < 1e-15);
        assert!((gl(-1.0, 3.0, |x| 3.0 * x * x - 2.0) - 20.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_integrand() {
        let exact = 1.0 - (-2f64).exp();
        assert!((gl(0.0, 2.0, |x| (-x).exp()) - exact).abs() < 1e-6);
        let fine: f64 = (0..64).map(|i| gl(i as f64 / 32.0, (i + 1) as f64 / 32.0, |x| (-x).exp())).sum();
        assert!((fine - exact).abs() < 1e-15);
    }
}
