//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex,
//! vector-valued integrands on finite intervals and on the real line.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-10, abs_tol: 1e-14, max_intervals: 20_000 }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<C64>,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64, &mut [C64])>(f: &F, a: f64, b: f64, dim: usize, buf: &mut [C64]) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![C64::new(0.0, 0.0); dim];
    let mut gauss = vec![C64::new(0.0, 0.0); dim];
    f(center, buf);
    for k in 0..dim {
        kron[k] += buf[k] * WGK[7];
        gauss[k] += buf[k] * WG[3];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        for &x in &[center - dx, center + dx] {
            f(x, buf);
            for k in 0..dim {
                kron[k] += buf[k] * WGK[j];
                if j % 2 == 1 {
                    gauss[k] += buf[k] * WG[j / 2];
                }
            }
        }
    }
    let mut error = 0.0f64;
    for k in 0..dim {
        kron[k] *= half;
        gauss[k] *= half;
        error = error.max((kron[k] - gauss[k]).norm());
    }
    Piece { a, b, value: kron, error }
}

/// Integrate a vector-valued function over [a, b] with initial breakpoints.
///
/// `f(x, out)` writes the integrand at x into `out` (length `dim`).
pub fn integrate_vec<F>(f: F, breakpoints: &[f64], dim: usize, opts: QuadOptions) -> Result<Vec<C64>>
where
    F: Fn(f64, &mut [C64]),
{
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1], dim, &mut buf));
        }
    }
    let mut value = vec![C64::new(0.0, 0.0); dim];
    let mut error = 0.0;
    for p in heap.iter() {
        for k in 0..dim {
            value[k] += p.value[k];
        }
        error += p.error;
    }
    loop {
        let scale = value.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if error <= opts.abs_tol.max(opts.rel_tol * scale) {
            let mut exact = vec![C64::new(0.0, 0.0); dim];
            for p in heap.iter() {
                for k in 0..dim {
                    exact[k] += p.value[k];
                }
            }
            return Ok(exact);
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence { error });
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::QuadratureNonConvergence { error });
        }
        let left = gk15(&f, worst.a, mid, dim, &mut buf);
        let right = gk15(&f, mid, worst.b, dim, &mut buf);
        for k in 0..dim {
            value[k] += left.value[k] + right.value[k] - worst.value[k];
        }
        error = (error - worst.error + left.error + right.error).max(0.0);
        heap.push(left);
        heap.push(right);
    }
}

/// Scalar complex integral over [a, b].
pub fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<C64> {
    integrate_vec(|x, out: &mut [C64]| out[0] = f(x), &[a, b], 1, opts).map(|v| v[0])
}

/// Integral over the whole real line through x = center + scale·tan(θ).
///
/// Integrands must decay at least like 1/x² for the mapped integrand to
/// stay bounded at the endpoints.
pub fn integrate_real_line_vec<F>(f: F, center: f64, scale: f64, dim: usize, opts: QuadOptions) -> Result<Vec<C64>>
where
    F: Fn(f64, &mut [C64]),
{
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mapped = |theta: f64, out: &mut [C64]| {
        let (s, c) = theta.sin_cos();
        if c <= 0.0 {
            out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            return;
        }
        let x = center + scale * s / c;
        let jac = scale / (c * c);
        f(x, out);
        out.iter_mut().for_each(|z| *z *= jac);
    };
    let cuts: Vec<f64> = (0..=16).map(|i| -half_pi + std::f64::consts::PI * i as f64 / 16.0).collect();
    integrate_vec(mapped, &cuts, dim, opts)
}

/// Real-line integral with extra breakpoints at the given abscissae (and a
/// small neighbourhood of width `halo` around each), for integrands with
/// narrow features away from `center`.
pub fn integrate_real_line_marked<F>(
    f: F,
    center: f64,
    scale: f64,
    marks: &[f64],
    halo: f64,
    dim: usize,
    opts: QuadOptions,
) -> Result<Vec<C64>>
where
    F: Fn(f64, &mut [C64]),
{
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mapped = |theta: f64, out: &mut [C64]| {
        let (s, c) = theta.sin_cos();
        if c <= 0.0 {
            out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            return;
        }
        let x = center + scale * s / c;
        let jac = scale / (c * c);
        f(x, out);
        out.iter_mut().for_each(|z| *z *= jac);
    };
    let mut cuts: Vec<f64> = (0..=16).map(|i| -half_pi + std::f64::consts::PI * i as f64 / 16.0).collect();
    for &m in marks {
        for x in [m - halo, m, m + halo] {
            cuts.push(((x - center) / scale).atan());
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    integrate_vec(mapped, &cuts, dim, opts)
}

pub fn integrate_real_line<F: Fn(f64) -> C64>(f: F, center: f64, scale: f64, opts: QuadOptions) -> Result<C64> {
    integrate_real_line_vec(|x, out: &mut [C64]| out[0] = f(x), center, scale, 1, opts).map(|v| v[0])
}
