#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use driftev::{validate, Coefficient, Interval, Kernel, KernelSpec, MetzlerMatrix, ProblemSpec};

/// A validated bounded problem together with a grid size.
#[derive(Debug, Clone)]
pub struct Case {
    pub problem: ProblemSpec,
    pub n: usize,
    /// `q(x) = intercept + slope x`.
    pub q_slope: f64,
}

fn kernel(rng: &mut ChaCha8Rng, max_radius: f64) -> KernelSpec {
    let r = rng.random_range(0.2..max_radius);
    let v = rng.random_range(0.5..2.0);
    if rng.random_bool(0.5) {
        KernelSpec::constant_band(v, r)
    } else {
        KernelSpec::new(
            Kernel::TentBand {
                height: v,
                radius: r,
            },
            v / 2.0,
            v,
            r / 2.0,
            r,
        )
    }
}

/// `q` of random sign with `|q| >= 0.3` on the domain.
fn drift(rng: &mut ChaCha8Rng, lower: f64, len: f64) -> (Coefficient, f64) {
    let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let c0 = rng.random_range(0.3..2.0);
    let c1 = if rng.random_bool(0.2) {
        0.0
    } else {
        rng.random_range(-0.25..1.0)
    };
    let slope = s * c1 / len;
    (
        Coefficient::Affine {
            intercept: s * c0 - slope * lower,
            slope,
        },
        slope,
    )
}

fn reaction(rng: &mut ChaCha8Rng, lower: f64, len: f64) -> Coefficient {
    if rng.random_bool(0.25) {
        return Coefficient::Constant(rng.random_range(-1.0..1.0));
    }
    Coefficient::Tent {
        center: lower + rng.random_range(0.0..len),
        radius: rng.random_range(0.1..len),
        height: rng.random_range(-2.0..2.0),
        base: rng.random_range(-1.0..1.0),
    }
}

/// Random problems on intervals of length in `[len_lo, len_hi)`; ones that fail
/// validation are skipped.
pub fn random_cases(
    seed: u64,
    count: usize,
    len_lo: f64,
    len_hi: f64,
    max_radius: f64,
    n_range: (usize, usize),
) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let lower = rng.random_range(-1.0..1.0);
        let len = rng.random_range(len_lo..len_hi);
        let domain = Interval::new(lower, lower + len).unwrap();
        let k = kernel(&mut rng, max_radius);
        let (q, q_slope) = drift(&mut rng, lower, len);
        let a = reaction(&mut rng, lower, len);
        let n = rng.random_range(n_range.0..=n_range.1);
        // the grid must resolve the kernel
        if len / (n - 1) as f64 > 0.5 * k.delta0 {
            continue;
        }
        let Ok(problem) = ProblemSpec::new(domain, k, q, a) else {
            continue;
        };
        if validate(&problem, problem.validation_mesh).passed() {
            out.push(Case {
                problem,
                n,
                q_slope,
            });
        }
    }
    out
}

pub fn dense(m: &MetzlerMatrix) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

/// Dense reference for the Perron value of a Metzler matrix.
#[derive(Debug, Clone, Copy)]
pub struct DenseOracle {
    /// Eigenvalue of largest real part (of `A`, not `lambda`).
    pub value: f64,
    pub imag: f64,
    /// Eigenvalue condition number `1 / |u^T v|` with unit left/right vectors.
    pub cond: f64,
    /// First-order error bar of the dense value: `4 cond eps ||A||_F`, plus round-off.
    pub error_bar: f64,
}

/// Parlett-Reinsch balancing, then the real Schur form; the condition number comes
/// from the singular vectors of `A - mu I` for the smallest singular value.
pub fn dense_oracle(m: &MetzlerMatrix) -> DenseOracle {
    let a = dense(m);
    let mut b = a.clone();
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut b);
    let ev = b.complex_eigenvalues();
    let top = ev
        .iter()
        .max_by(|x, y| x.re.total_cmp(&y.re))
        .expect("non-empty matrix");
    let n = a.nrows();
    let shifted = &a - DMatrix::identity(n, n) * top.re;
    let svd = shifted.svd(true, true);
    let k = svd.singular_values.imin();
    let u = svd.u.as_ref().unwrap().column(k).clone_owned();
    let v = svd.v_t.as_ref().unwrap().row(k).transpose();
    let cond = 1.0 / u.dot(&v).abs().max(f64::MIN_POSITIVE);
    let norm = a.norm();
    DenseOracle {
        value: top.re,
        imag: top.im,
        cond,
        error_bar: 4.0 * cond * f64::EPSILON * norm + 1e-12 * (1.0 + norm),
    }
}

/// `max |A_ij|`, the scale for round-off allowances.
pub fn scale(m: &MetzlerMatrix) -> f64 {
    m.as_slice().iter().fold(0.0f64, |s, v| s.max(v.abs()))
}
