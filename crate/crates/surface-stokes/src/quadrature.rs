//! Quadrature rules: a degree-5 symmetric triangle rule for face integrals
//! and Gauss-Legendre rules for edge integrals.

/// Barycentric points and weights; weights sum to one, so
/// integral over T of f = |T| * sum_i w_i f(p_i). Exact through degree 5.
pub fn face_rule() -> (Vec<[f64; 3]>, Vec<f64>) {
    let s15 = 15.0f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let a2 = (6.0 + s15) / 21.0;
    let w2 = (155.0 + s15) / 1200.0;
    let mut pts = vec![[1.0 / 3.0; 3]];
    let mut wts = vec![9.0 / 40.0];
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        pts.push([a, a, b]);
        pts.push([a, b, a]);
        pts.push([b, a, a]);
        wts.extend_from_slice(&[w, w, w]);
    }
    (pts, wts)
}

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton on the Legendre
/// recurrence. Exact through degree 2n - 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss points mapped to the unit interval [0, 1].
pub fn gauss_unit_interval(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    (
        xs.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        ws.iter().map(|w| 0.5 * w).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
    }

    #[test]
    fn face_rule_exact_through_degree_five() {
        let (pts, wts) = face_rule();
        assert!((wts.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(wts.iter().all(|&w| w > 0.0));
        // reference triangle (0,0), (1,0), (0,1): int x^p y^q = p! q! / (p+q+2)!
        for p in 0..=5usize {
            for q in 0..=(5 - p) {
                let exact = factorial(p) * factorial(q) / factorial(p + q + 2);
                let approx: f64 = pts
                    .iter()
                    .zip(&wts)
                    .map(|(b, w)| {
                        let (x, y) = (b[1], b[2]);
                        w * x.powi(p as i32) * y.powi(q as i32)
                    })
                    .sum::<f64>()
                    * 0.5;
                assert!(
                    (approx - exact).abs() < 1e-15,
                    "monomial x^{p} y^{q}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gauss_legendre_matches_closed_forms() {
        let (xs, ws) = gauss_legendre(4);
        let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
        let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
        let wa = (18.0 + 30.0f64.sqrt()) / 36.0;
        let wb = (18.0 - 30.0f64.sqrt()) / 36.0;
        let mut expect: Vec<(f64, f64)> = vec![(-b, wb), (-a, wa), (a, wa), (b, wb)];
        expect.sort_by(|p, q| p.0.total_cmp(&q.0));
        for ((x, w), (ex, ew)) in xs.iter().zip(&ws).zip(expect) {
            assert!((x - ex).abs() < 1e-14 && (w - ew).abs() < 1e-14);
        }
        // degree 2n-1 exactness
        for n in 1..=12usize {
            let (xs, ws) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                let got: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }
}
