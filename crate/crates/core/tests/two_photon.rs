use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;
use wgqed::config::{Extended, Interaction, InteractionLaw, Mode, RydbergBlock, SystemConfig, Wavepacket};
use wgqed::linalg::CMat;
mod common;

use wgqed::two_photon::*;
use wgqed::Error;

const I: C64 = C64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Midpoint rule on ω = center + scale·tan(u).
fn tan_quad(n: usize, center: f64, scale: f64, mut f: impl FnMut(f64) -> C64) -> C64 {
    let du = PI / n as f64;
    let mut s = c(0.0, 0.0);
    for i in 0..n {
        let u = -FRAC_PI_2 + (i as f64 + 0.5) * du;
        let cu = u.cos();
        s += f(center + scale * u.tan()) * (scale * du / (cu * cu));
    }
    s
}

fn inv2(m: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

/// Green's function of two emitters at 0 and d, built by hand.
fn green_pair(w: C64, gamma: f64, d: f64, k0d: f64, markov: bool) -> [[C64; 2]; 2] {
    let prop = if markov { C64::from_polar(1.0, k0d) } else { C64::from_polar(1.0, k0d) * (I * w * d).exp() };
    let diag = w + I * gamma;
    let off = I * gamma * prop;
    inv2([[diag, off], [off, diag]])
}

#[test]
fn single_emitter_bubble_both_modes() {
    let cfg = SystemConfig::two_level(1.0);
    for e in [c(0.0, 0.0), c(0.7, 0.0), c(-2.5, 0.0), c(0.3, 0.2)] {
        let oracle = 1.0 / (e + 2.0 * I);
        let quadr = tan_quad(200_000, 0.5 * e.re, 1.0, |w| I / (2.0 * PI) / (c(w, 1.0) * (e - w + I)));
        assert!((oracle - quadr).norm() < 1e-8);
        for mode in [Mode::Markov, Mode::Exact] {
            let pi = bubble(&cfg, e, mode).unwrap();
            assert!((pi.matrix[(0, 0)] - oracle).norm() < 1e-10, "{mode:?} {e}");
        }
        let t = tmatrix(&cfg, e, Mode::Markov).unwrap();
        assert!((t.matrix[(0, 0)] + e + 2.0 * I).norm() < 1e-10);
    }
}

#[test]
fn two_emitter_bubble_against_quadrature() {
    let (gamma, d, k0d) = (1.0, 0.5, 1.2);
    let cfg = SystemConfig::array(2, gamma, 0.0, d, k0d);
    let e = 0.4;
    for (mode, markov, tol) in [(Mode::Markov, true, 1e-8), (Mode::Exact, false, 1e-5)] {
        let pi = bubble(&cfg, c(e, 0.0), mode).unwrap();
        for (r, &(a, b)) in pi.pairs.iter().enumerate() {
            for (col, &(x, y)) in pi.pairs.iter().enumerate() {
                let oracle = tan_quad(400_000, 0.5 * e, 1.0, |w| {
                    let g1 = green_pair(c(w, 0.0), gamma, d, k0d, markov);
                    let g2 = green_pair(c(e - w, 0.0), gamma, d, k0d, markov);
                    I / (2.0 * PI) * g1[a][x] * g2[b][y]
                });
                let v = pi.matrix[(r, col)];
                assert!((v - oracle).norm() < tol, "{mode:?} ({a}{b},{x}{y}) {v} vs {oracle}");
            }
        }
        assert!(pi.exchange_asymmetry() < 1e-10);
    }
}

#[test]
fn generic_kernel_matches_two_level_closed_form() {
    let cfg = SystemConfig::two_level(1.0);
    for (k1, k2) in [(0.0, 0.0), (0.3, -0.5), (1.2, 0.7)] {
        let closed = s2_two_level(k1, k2, 1.0);
        for mode in [Mode::Markov, Mode::Exact] {
            let generic = s2_array(&cfg, k1, k2, mode).unwrap();
            assert!((generic.disconnected.0 - closed.disconnected.0).norm() < 1e-12);
            for q in [-3.0, -0.4, 0.0, 0.9] {
                let a = generic.connected_relative(q).unwrap();
                let b = closed.connected_relative(q).unwrap();
                assert!((a - b).norm() < 1e-9 * b.norm().max(1e-3), "{mode:?} {a} vs {b}");
            }
        }
    }
}

#[test]
fn generic_kernel_matches_jc_closed_form() {
    let (g, gamma) = (0.8, 1.0);
    let cfg = SystemConfig::jaynes_cummings(gamma, g);
    let p = Arc::new(PairProblem::new(&cfg, Mode::Markov).unwrap());
    for (k1, k2) in [(0.1, 0.2), (0.5, -0.3), (1.5, 0.4)] {
        let closed = s2_jc(k1, k2, g, gamma);
        let generic = s2_generic(&p, PairChannel::Reflected, k1, k2).unwrap();
        for q in [-2.0, -0.3, 0.0, 0.7] {
            let a = generic.connected_relative(q).unwrap();
            let b = closed.connected_relative(q).unwrap();
            assert!((a - b).norm() < 1e-9 * b.norm().max(1e-6), "{a} vs {b}");
        }
    }
}

/// Printed mirror kernel with the library's T(E), assembled from sines.
fn mirror_closed(gamma: f64, x0: f64, k0: f64, k: [f64; 2], p: [f64; 2], t: C64) -> C64 {
    let ax = x0.abs();
    let factor = |q: f64| (((q + k0) * ax).sin()) / (q + I * gamma - I * gamma * (2.0 * I * (k0 + q) * ax).exp());
    -I * 16.0 / PI * gamma * gamma * t * factor(k[0]) * factor(k[1]) * factor(p[0]) * factor(p[1])
}

#[test]
fn mirror_kernel_matches_printed_form() {
    let (gamma, x0, k0) = (1.0, -0.3, 4.0);
    let cfg = SystemConfig::mirror(gamma, x0, k0, Extended::Infinite);
    for mode in [Mode::Markov, Mode::Exact] {
        let p = Arc::new(PairProblem::new(&cfg, mode).unwrap());
        let (k1, k2) = (0.3, -0.2);
        let t = p.tmatrix(c(k1 + k2, 0.0)).unwrap().matrix[(0, 0)];
        let kern = s2_mirror(&cfg, k1, k2, mode).unwrap();
        for q in [-1.0, 0.2, 2.0] {
            let (p1, p2) = (0.05 + q, 0.05 - q);
            let (k_eval, p_eval) = match mode {
                Mode::Exact => ([k1, k2], [p1, p2]),
                // Markov freezes the propagation phase at k = 0
                Mode::Markov => ([0.0, 0.0], [0.0, 0.0]),
            };
            let oracle = match mode {
                Mode::Exact => mirror_closed(gamma, x0, k0, k_eval, p_eval, t),
                Mode::Markov => {
                    let s = (k0 * x0.abs()).sin();
                    let den = |q: f64| q + I * gamma - I * gamma * (2.0 * I * k0 * x0.abs()).exp();
                    -I * 16.0 / PI * gamma * gamma * t * s.powi(4) / (den(k1) * den(k2) * den(p1) * den(p2))
                }
            };
            let v = kern.connected(p1, p2).unwrap();
            assert!((v - oracle).norm() < 1e-10 * oracle.norm().max(1e-8), "{mode:?} {v} vs {oracle}");
        }
    }
}

#[test]
fn markov_mirror_bubble_closed_form() {
    // single mode with ε = Δ − iΓ_eff, Π = 1/(E − 2ε)
    let (gamma, x0, k0) = (1.0, -0.3, 4.0);
    let cfg = SystemConfig::mirror(gamma, x0, k0, Extended::Infinite);
    let theta = k0 * x0.abs();
    let eps = -I * gamma + I * gamma * (2.0 * I * theta).exp();
    let e = c(0.6, 0.0);
    let pi = bubble(&cfg, e, Mode::Markov).unwrap().matrix[(0, 0)];
    assert!((pi - 1.0 / (e - 2.0 * eps)).norm() < 1e-12);
}

#[test]
fn two_level_wavefunction_paths_agree() {
    let gamma = 1.0;
    let (k1, k2) = (0.0, 0.0);
    let closed = psi2_two_level(k1, k2, gamma);
    let residue = psi2_residue(&s2_array(&SystemConfig::two_level(gamma), k1, k2, Mode::Markov).unwrap()).unwrap();
    let fft = psi2_fft(&s2_two_level(k1, k2, gamma), FftGrid::default(), gamma).unwrap();
    for x in [-7.0, -1.0, 0.0, 0.5, 3.3] {
        assert!((closed.connected(x) - residue.connected(x)).norm() < 1e-12);
        let oracle = (1.0 - (-gamma * f64::abs(x)).exp()).powi(2);
        let g = g2(&closed, closed.product, &[x]).unwrap()[0];
        assert!((g - oracle).abs() < 1e-10);
    }
    for (x, v) in fft.x.iter().zip(fft.values()) {
        if x.abs() <= 10.0 {
            let oracle = (1.0 - (-gamma * x.abs()).exp()).powi(2);
            assert!((v.norm_sqr() - oracle).abs() < 1e-4, "x={x}");
        }
    }
}

#[test]
fn jc_wavefunction_paths_agree() {
    let (g, gamma) = (0.8, 1.0);
    let cfg = SystemConfig::jaynes_cummings(gamma, g);
    for (k1, k2) in [(0.2, 0.2), (0.5, -0.1)] {
        let closed = psi2_jc(k1, k2, g, gamma);
        let p = Arc::new(PairProblem::new(&cfg, Mode::Markov).unwrap());
        let residue = psi2_residue(&s2_generic(&p, PairChannel::Reflected, k1, k2).unwrap()).unwrap();
        let fft = psi2_fft(&s2_jc(k1, k2, g, gamma), FftGrid::default(), gamma).unwrap();
        for x in [-4.0, 0.0, 0.7, 6.0] {
            let (a, b) = (closed.connected(x), residue.connected(x));
            assert!((a - b).norm() < 1e-11, "{a} vs {b}");
        }
        for (x, v) in fft.x.iter().zip(&fft.connected) {
            if x.abs() <= 10.0 {
                assert!((closed.connected(*x) - v).norm() < 1e-4, "x={x}");
            }
        }
    }
}

#[test]
fn jc_zero_reflection_needs_explicit_normalization() {
    let psi = psi2_jc(0.0, 0.0, 1.0, 1.0);
    assert!(psi.product.norm() < 1e-15);
    assert!(matches!(g2(&psi, psi.product, &[0.0]), Err(Error::ZeroNormalization)));
    assert!(g2(&psi, c(1.0, 0.0), &[0.0, 1.0]).is_ok());
}

fn rydberg(n: usize, law: InteractionLaw, coef: f64, delta_s: f64) -> SystemConfig {
    let block = RydbergBlock {
        omega: 1.0,
        delta_e: 0.0,
        delta_s: Some(delta_s),
        u0: Extended::Infinite,
        interaction: Interaction { law, coefficient: coef },
        exact_limit: None,
    };
    SystemConfig::rydberg(n, 1.0, 1.0, 1e-4, FRAC_PI_2, block)
}

#[test]
fn rydberg_tmatrix_contract() {
    let cfg = rydberg(4, InteractionLaw::VanDerWaals, 1.0, 0.0);
    let p = PairProblem::new(&cfg, Mode::Markov).unwrap();
    assert!(p.pairs.contains(&(0, 0)));
    let t = p.tmatrix(c(0.0, 0.0)).unwrap();
    assert!(t.exchange_asymmetry() < 1e-10);
    assert!(matches!(PairProblem::new(&cfg, Mode::Exact), Err(Error::UnsupportedMode { .. })));
}

#[test]
fn rydberg_residue_matches_fft() {
    let cfg = rydberg(3, InteractionLaw::Dipolar, 1.0, 0.0);
    let kern = s2_rydberg(&cfg, 0.1, 0.1).unwrap();
    let res = psi2_residue(&kern).unwrap();
    let fft = psi2_fft(&kern, FftGrid::default(), 1.0).unwrap();
    for (x, v) in fft.x.iter().zip(&fft.connected) {
        if x.abs() <= 8.0 {
            assert!((res.connected(*x) - v).norm() < 1e-3, "x={x}: {} vs {v}", res.connected(*x));
        }
    }
}

#[test]
fn regularized_hardcore_approaches_exact() {
    let cfg = SystemConfig::two_level(1.0);
    let s = wgqed::greens::Scatterer::new(&cfg).unwrap();
    let exact = PairProblem::with_hardcore(s.clone(), Mode::Markov, Hardcore::Exact).unwrap();
    let reg = PairProblem::with_hardcore(s, Mode::Markov, Hardcore::Regularized(1e9)).unwrap();
    let e = c(0.3, 0.0);
    let a = exact.tmatrix(e).unwrap().matrix[(0, 0)];
    let b = reg.tmatrix(e).unwrap().matrix[(0, 0)];
    assert!((a - b).norm() < 1e-7);
}

#[test]
fn entropy_of_product_and_bell_states() {
    let n = 6;
    let v: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sqrt()).collect();
    let norm: f64 = v.iter().map(|x| x * x).sum();
    let prod = CMat::from_fn(n, n, |i, j| c(v[i] * v[j] / norm, 0.0));
    assert!(von_neumann_entropy(&prod).unwrap().abs() < 1e-10);
    let bell = CMat::from_fn(n, n, |i, j| if i == j && i < 2 { c(0.5f64.sqrt(), 0.0) } else { c(0.0, 0.0) });
    assert!((von_neumann_entropy(&bell).unwrap() - 2f64.ln()).abs() < 1e-9);
    let bad = CMat::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
    assert!(matches!(von_neumann_entropy(&bad), Err(Error::NotNormalized { .. })));
}

#[test]
fn entangled_pair_keeps_unit_norm() {
    // lossless mirror geometry: everything is reflected
    let cfg = SystemConfig::mirror(1.0, -1e-4, FRAC_PI_2 / 1e-4, Extended::Infinite);
    let f = Wavepacket::right(0.5, 0.0);
    // wide window: the Lorentzian tails beyond ±100 carry about 6e-3
    let wide = MomentumGrid::uniform(800, -100.0, 100.0);
    let pair = entangled_pair(&cfg, &f, &wide, Mode::Markov).unwrap();
    assert!((pair.raw_norm - 1.0).abs() < 1e-2, "{}", pair.raw_norm);
    for i in (0..800).step_by(97) {
        for j in (0..800).step_by(89) {
            assert!((pair.amplitude[(i, j)] - pair.amplitude[(j, i)]).norm() < 1e-12);
        }
    }
    let grid = MomentumGrid::uniform(40, -10.0, 10.0);
    let pair = entangled_pair(&cfg, &f, &grid, Mode::Markov).unwrap();
    let s = von_neumann_entropy(&pair.weighted_normalized()).unwrap();
    assert!(s > 0.01 && s < 40f64.ln(), "{s}");
    assert!(entangled_pair(&cfg, &Wavepacket::left(0.5, 0.0), &grid, Mode::Markov).is_err());
}

#[test]
fn two_photon_norm_is_conserved() {
    let n = common::two_photon_norm(1.0, 1.0, 48);
    assert!((n - 1.0).abs() < 1e-3, "norm {n}");
}
