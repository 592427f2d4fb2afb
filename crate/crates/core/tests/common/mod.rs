//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;
use wgqed::config::{Mode, SystemConfig, Wavepacket};
use wgqed::greens::{PairCoupling, Scatterer};
use wgqed::quad::{integrate_real_line_marked, QuadOptions};
use wgqed::single_photon::rt_two_level;
use wgqed::two_photon::{s2_with_tmatrix, PairChannel, PairProblem};

/// Nodes and weights of the midpoint rule on x = center + scale·tan(u).
pub fn tan_grid(n: usize, center: f64, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let du = PI / n as f64;
    (0..n)
        .map(|i| {
            let u = -FRAC_PI_2 + (i as f64 + 0.5) * du;
            let c = u.cos();
            (center + scale * u.tan(), scale * du / (c * c))
        })
        .unzip()
}

/// Outgoing two-photon norm for two identical Lorentzian photons on a single
/// emitter: ¼ Σ_channels ∫∫dp1 dp2 |2 f f s s + ∫dq f f K|².
pub fn two_photon_norm(gamma: f64, width: f64, n: usize) -> f64 {
    let cfg = SystemConfig::two_level(gamma);
    let f = Wavepacket::right(width, 0.0);
    let problem = Arc::new(PairProblem::new(&cfg, Mode::Markov).unwrap());
    let (ps, ws) = tan_grid(n, 0.0, width.max(gamma));
    let opts = QuadOptions { rel_tol: 1e-8, abs_tol: 1e-13, max_intervals: 4000 };
    let s = |k: f64| {
        let p = rt_two_level(k, gamma);
        (p.r, p.t)
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in i..n {
            let (p1, p2) = (ps[i], ps[j]);
            let e = p1 + p2;
            let t = problem.tmatrix(C64::new(e, 0.0)).unwrap();
            let integrand = |q: f64, out: &mut [C64]| {
                let (k1, k2) = (0.5 * e + q, 0.5 * e - q);
                let ff = f.amplitude(k1) * f.amplitude(k2);
                let chans = [PairChannel::Reflected, PairChannel::Transmitted, PairChannel::Mixed];
                for (c, ch) in chans.iter().enumerate() {
                    let kern = s2_with_tmatrix(&problem, &t, *ch, k1, k2).unwrap();
                    out[c] = ff * kern.connected(p1, p2).unwrap();
                    if *ch == PairChannel::Mixed {
                        out[3] = ff * kern.connected(p2, p1).unwrap();
                    }
                }
            };
            let conn = integrate_real_line_marked(integrand, 0.0, width.max(gamma), &[-0.5 * e, 0.5 * e], width, 4, opts)
                .unwrap();
            let ((r1, t1), (r2, t2)) = (s(p1), s(p2));
            let ff = 2.0 * f.amplitude(p1) * f.amplitude(p2);
            // RR, TT, RT at (p1,p2) and RT at (p2,p1), which is TR at (p1,p2)
            let disc = [ff * r1 * r2, ff * t1 * t2, ff * r1 * t2, ff * r2 * t1];
            let mut v: f64 = (0..4).map(|c| (disc[c] + conn[c]).norm_sqr()).sum();
            if i != j {
                // the mirrored grid point contributes the same sum
                v *= 2.0;
            }
            total += 0.25 * ws[i] * ws[j] * v;
        }
    }
    total
}

/// Delay-differential oracle for the retarded single-excitation dynamics of
/// an emitter array: i ċ_a = h_aa c_a(t) + Σ_b h_ab c_b(t − |x_a − x_b|),
/// emitter 0 excited at t = 0. RK4 with step `h`; every spacing must be a
/// multiple of `h`. Delayed values at half steps are linearly interpolated.
pub fn dde_array(config: &SystemConfig, t_end: f64, h: f64) -> Vec<C64> {
    let s = Scatterer::new(config).unwrap();
    let n = s.dim();
    let hm = s.h0(C64::new(0.0, 0.0), Mode::Exact);
    let xs: Vec<f64> = s.ports().iter().map(|p| p.x).collect();
    let lag: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let r = (xs[a] - xs[b]).abs() / h;
                    assert!((r - r.round()).abs() < 1e-9, "spacing not commensurate with the step");
                    r.round()
                })
                .collect()
        })
        .collect();
    let steps = (t_end / h).round() as usize;
    assert!((steps as f64 * h - t_end).abs() < 1e-9 * t_end.max(1.0), "end time not a multiple of the step");
    let mut hist = vec![vec![C64::new(0.0, 0.0); steps + 1]; n];
    hist[0][0] = C64::new(1.0, 0.0);
    let delayed = |v: &Vec<C64>, idx: f64, end: bool| -> C64 {
        if idx < 0.0 || (idx == 0.0 && end) {
            return C64::new(0.0, 0.0);
        }
        let i = idx.floor() as usize;
        let f = idx - i as f64;
        if f == 0.0 {
            v[i]
        } else {
            v[i] * (1.0 - f) + v[i + 1] * f
        }
    };
    let mi = C64::new(0.0, -1.0);
    for i in 0..steps {
        let rhs = |hist: &Vec<Vec<C64>>, cur: &[C64], s: f64| -> Vec<C64> {
            (0..n)
                .map(|a| {
                    let mut acc = hm[(a, a)] * cur[a];
                    for b in 0..n {
                        if b != a {
                            acc += hm[(a, b)] * delayed(&hist[b], i as f64 + s - lag[a][b], s == 1.0);
                        }
                    }
                    mi * acc
                })
                .collect()
        };
        let c0: Vec<C64> = (0..n).map(|a| hist[a][i]).collect();
        let k1 = rhs(&hist, &c0, 0.0);
        let c1: Vec<C64> = (0..n).map(|a| c0[a] + 0.5 * h * k1[a]).collect();
        let k2 = rhs(&hist, &c1, 0.5);
        let c2: Vec<C64> = (0..n).map(|a| c0[a] + 0.5 * h * k2[a]).collect();
        let k3 = rhs(&hist, &c2, 0.5);
        let c3: Vec<C64> = (0..n).map(|a| c0[a] + h * k3[a]).collect();
        let k4 = rhs(&hist, &c3, 1.0);
        for a in 0..n {
            hist[a][i + 1] = c0[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
    }
    (0..n).map(|a| hist[a][steps]).collect()
}

/// Port drive β_a(t) of a wavepacket on the Markov single-excitation space.
/// `bias` picks the one-sided limit at the pulse front.
pub fn port_drive(s: &Scatterer, wp: &Wavepacket, t: f64, bias: f64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); s.dim()];
    let sigma = wp.sigma();
    for p in s.ports() {
        let phase = C64::from_polar(p.rate.sqrt(), sigma * p.carrier);
        out[p.state] += phase * wp.envelope(p.x - sigma * (t + bias));
    }
    out
}

fn rk4_step<F: Fn(f64, &[C64], f64) -> Vec<C64>>(f: &F, t: f64, y: &[C64], h: f64) -> Vec<C64> {
    let eps = 1e-9 * h;
    let k1 = f(t, y, eps);
    let y1: Vec<C64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = f(t + 0.5 * h, &y1, 0.0);
    let y2: Vec<C64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = f(t + 0.5 * h, &y2, 0.0);
    let y3: Vec<C64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = f(t + h, &y3, -eps);
    y.iter()
        .zip(k1.iter().zip(k2.iter().zip(k3.iter().zip(&k4))))
        .map(|(a, (b, (c, (d, e))))| a + h / 6.0 * (b + 2.0 * c + 2.0 * d + e))
        .collect()
}

/// RK4 oracle for i dA/dt = H0^M A + β(t), A(0) = 0.
pub fn driven_single_rk4(config: &SystemConfig, wp: &Wavepacket, t_end: f64, h: f64) -> Vec<C64> {
    let s = Scatterer::new(config).unwrap();
    let hm = s.h0(C64::new(0.0, 0.0), Mode::Markov);
    let n = s.dim();
    let f = |t: f64, y: &[C64], bias: f64| -> Vec<C64> {
        let beta = port_drive(&s, wp, t, bias);
        (0..n)
            .map(|a| {
                let mut acc = beta[a];
                for b in 0..n {
                    acc += hm[(a, b)] * y[b];
                }
                C64::new(0.0, -1.0) * acc
            })
            .collect()
    };
    let steps = (t_end / h).round() as usize;
    let mut y = vec![C64::new(0.0, 0.0); n];
    for i in 0..steps {
        y = rk4_step(&f, i as f64 * h, &y, h);
    }
    y
}

/// RK4 oracle for the ordered two-photon amplitude z_ab (photon 1 on a,
/// photon 2 on b): i ż = (H0⊗1 + 1⊗H0 + U) z + β¹⊗A² + A¹⊗β², projected
/// onto pairs without a hardcore contact. Returns z as a row-major n×n list.
pub fn pair_rk4(config: &SystemConfig, wp1: &Wavepacket, wp2: &Wavepacket, t_end: f64, h: f64) -> Vec<C64> {
    let s = Scatterer::new(config).unwrap();
    let hm = s.h0(C64::new(0.0, 0.0), Mode::Markov);
    let n = s.dim();
    let mut allowed = vec![false; n * n];
    let mut u = vec![0.0; n * n];
    let regularized = match &config.rydberg {
        Some(r) if !r.u0.is_infinite() && !r.exact_limit() => Some(r.u0.value()),
        _ => None,
    };
    for a in 0..n {
        for b in 0..n {
            match s.pair_coupling(a, b) {
                PairCoupling::Hardcore => {
                    if let Some(v) = regularized {
                        allowed[a * n + b] = true;
                        u[a * n + b] = v;
                    }
                }
                PairCoupling::None => allowed[a * n + b] = true,
                PairCoupling::Finite(v) => {
                    allowed[a * n + b] = true;
                    u[a * n + b] = v;
                }
            }
        }
    }
    let mi = C64::new(0.0, -1.0);
    // state layout: A1 (n), A2 (n), z (n²)
    let f = |t: f64, y: &[C64], bias: f64| -> Vec<C64> {
        let b1 = port_drive(&s, wp1, t, bias);
        let b2 = port_drive(&s, wp2, t, bias);
        let (a1, rest) = y.split_at(n);
        let (a2, z) = rest.split_at(n);
        let mut out = vec![C64::new(0.0, 0.0); 2 * n + n * n];
        for a in 0..n {
            let mut s1 = b1[a];
            let mut s2 = b2[a];
            for c in 0..n {
                s1 += hm[(a, c)] * a1[c];
                s2 += hm[(a, c)] * a2[c];
            }
            out[a] = mi * s1;
            out[n + a] = mi * s2;
        }
        for a in 0..n {
            for b in 0..n {
                if !allowed[a * n + b] {
                    continue;
                }
                let mut acc = u[a * n + b] * z[a * n + b] + b1[a] * a2[b] + a1[a] * b2[b];
                for c in 0..n {
                    acc += hm[(a, c)] * z[c * n + b] + hm[(b, c)] * z[a * n + c];
                }
                out[2 * n + a * n + b] = mi * acc;
            }
        }
        out
    };
    let steps = (t_end / h).round() as usize;
    let mut y = vec![C64::new(0.0, 0.0); 2 * n + n * n];
    for i in 0..steps {
        y = rk4_step(&f, i as f64 * h, &y, h);
    }
    y[2 * n..].to_vec()
}
