//! Small one-dimensional quadrature helpers used off the assembly path
//! (kernel masses, exponential moments, coefficient antiderivatives).

/// Five-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Composite five-point Gauss-Legendre rule with `panels` equal panels.
///
/// Nodes are interior to every panel, so integrands with a jump or kink at panel
/// boundaries (band kernels cut at their radius) are handled without evaluating
/// them on the discontinuity.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    assert!(panels > 0);
    if hi <= lo {
        return 0.0;
    }
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        let mut s = 0.0;
        for (t, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            s += w * f(mid + half * t);
        }
        total += s * half;
    }
    total
}

/// Composite Simpson rule; `panels` is rounded up to an even count.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    if hi == lo {
        return 0.0;
    }
    let m = panels.max(2).div_ceil(2) * 2;
    let h = (hi - lo) / m as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..m {
        let x = lo + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Running trapezoid integral of nodal values over (possibly non-uniform) nodes;
/// `out[0] = 0`.
pub fn cumulative_trapezoid(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(nodes.len(), values.len());
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..nodes.len() {
        acc += 0.5 * (values[k] + values[k - 1]) * (nodes[k] - nodes[k - 1]);
        out.push(acc);
    }
    out
}
