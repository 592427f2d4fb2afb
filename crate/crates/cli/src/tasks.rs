//! Dispatch from a scenario task to the engine, producing a table.

use crate::error::CliError;
use crate::scenario::{Scenario, Task};
use crate::table::{Cell, Headline, Table};
use num_complex::Complex64 as C64;
use std::sync::Arc;
use wgqed::config::{Direction, Mode, Model, SystemConfig, Wavepacket};
use wgqed::gme::{evolve_hierarchy, mode_population, reduced_density, GmeDrive};
use wgqed::greens::{BasisLabel, Species};
use wgqed::single_photon::rt_grid;
use wgqed::transient::{
    absorption_amplitude, excitation_amplitudes, field_amplitude, spontaneous_emitted_norm, spontaneous_field,
    stimulated_optimum, DrivenSingle, PolaritonPair, StimulatedOptimum,
};
use wgqed::two_photon::{
    entangled_pair, g2, psi2_fft, psi2_residue, psi2_rydberg, s2_array, s2_generic, s2_mirror, von_neumann_entropy,
    FftGrid, MomentumGrid, PairChannel, PairProblem, TwoPhotonKernel,
};

pub struct Artifact {
    pub table: Table,
    pub headline: Headline,
}

fn label(b: &BasisLabel) -> String {
    let tag = match b.species {
        Species::Excited => "e",
        Species::Rydberg => "s",
        Species::Cavity => "c",
        Species::MirrorMode => "m",
    };
    format!("{tag}{}", b.site)
}

fn require(sc: &Scenario, sys: &SystemConfig, models: &[Model]) -> Result<(), CliError> {
    if models.contains(&sys.model) {
        Ok(())
    } else {
        Err(CliError::InvalidScenario(format!("task {} does not support model {}", sc.task.name(), sys.model.name())))
    }
}

fn nearest(values: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if (v - target).abs() < (values[best] - target).abs() {
            best = i;
        }
    }
    best
}

fn complex(z: C64) -> [Cell; 2] {
    [Cell::Num(z.re), Cell::Num(z.im)]
}

/// Exact-mode kernels have no pole expansion; sample ψ by FFT and keep the
/// native points that fall inside the requested x range.
fn g2_sampled(kernel: &TwoPhotonKernel, xs: &[f64], kappa: f64) -> wgqed::Result<Artifact> {
    let s = psi2_fft(kernel, FftGrid::default(), kappa)?;
    let n2 = s.product.norm_sqr();
    if n2 == 0.0 {
        return Err(wgqed::Error::ZeroNormalization);
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let mut t = Table::new(["x", "g2", "psi_re", "psi_im"]);
    let mut g0 = f64::NAN;
    for (x, v) in s.x.iter().zip(s.values()) {
        if *x == 0.0 {
            g0 = v.norm_sqr() / n2;
        }
        if (lo..=hi).contains(x) {
            let [re, im] = complex(v);
            t.push(vec![(*x).into(), (v.norm_sqr() / n2).into(), re, im]);
        }
    }
    Ok(Artifact { table: t, headline: Headline::new("g2_at_0", g0) })
}

pub fn run_task(sc: &Scenario) -> Result<Artifact, CliError> {
    let sys = sc.system()?;
    let compute = |e: wgqed::Error| CliError::Compute { scenario: sc.name.clone(), source: e };
    match &sc.task {
        Task::Spectrum { mode } => {
            let ks = sc.grid("k")?;
            let points = rt_grid(&sys, &ks, *mode).map_err(compute)?;
            let mut t = Table::new(["k", "r_re", "r_im", "t_re", "t_im", "R", "T", "phase_r"]);
            for p in &points {
                let [rr, ri] = complex(p.r);
                let [tr, ti] = complex(p.t);
                t.push(vec![
                    p.k.into(),
                    rr,
                    ri,
                    tr,
                    ti,
                    p.r.norm_sqr().into(),
                    p.t.norm_sqr().into(),
                    p.r.arg().into(),
                ]);
            }
            let at = &points[nearest(&ks, 0.0)];
            let headline = if sys.model == Model::MirrorTwoLevel {
                Headline::new("phase_r_at_k0", at.r.arg())
            } else {
                Headline::new("T_at_k0", at.t.norm_sqr())
            };
            Ok(Artifact { table: t, headline })
        }
        Task::G2 { k1, k2, mode } => {
            let xs = sc.grid("x")?;
            let exact_kernel = match (sys.model, mode) {
                (Model::TwoLevel | Model::TwoLevelArray, Mode::Exact) => Some(s2_array(&sys, *k1, *k2, *mode)),
                (Model::MirrorTwoLevel, Mode::Exact) => Some(s2_mirror(&sys, *k1, *k2, *mode)),
                _ => None,
            };
            if let Some(kernel) = exact_kernel {
                return g2_sampled(&kernel.map_err(compute)?, &xs, sys.gamma0()).map_err(compute);
            }
            let psi = match sys.model {
                Model::TwoLevel | Model::TwoLevelArray => psi2_residue(&s2_array(&sys, *k1, *k2, *mode).map_err(compute)?),
                Model::MirrorTwoLevel => psi2_residue(&s2_mirror(&sys, *k1, *k2, *mode).map_err(compute)?),
                Model::JaynesCummings => {
                    let p = Arc::new(PairProblem::new(&sys, *mode).map_err(compute)?);
                    psi2_residue(&s2_generic(&p, PairChannel::Reflected, *k1, *k2).map_err(compute)?)
                }
                Model::RydbergEitArray => psi2_rydberg(&sys, *k1, *k2),
            }
            .map_err(compute)?;
            let values = g2(&psi, psi.product, &xs).map_err(compute)?;
            let mut t = Table::new(["x", "g2", "psi_re", "psi_im"]);
            for (x, g) in xs.iter().zip(&values) {
                let [re, im] = complex(psi.value(0.0, *x));
                t.push(vec![(*x).into(), (*g).into(), re, im]);
            }
            let g0 = g2(&psi, psi.product, &[0.0]).map_err(compute)?[0];
            Ok(Artifact { table: t, headline: Headline::new("g2_at_0", g0) })
        }
        Task::TransientSpontaneous { time } => {
            require(sc, &sys, &[Model::TwoLevel])?;
            let gamma = sys.gamma0();
            let mut t = Table::new(["x", "right_re", "right_im", "left_re", "left_im", "density"]);
            for x in sc.grid("x")? {
                let r = spontaneous_field(gamma, *time, x, Direction::Right);
                let l = spontaneous_field(gamma, *time, x, Direction::Left);
                let [rr, ri] = complex(r);
                let [lr, li] = complex(l);
                t.push(vec![x.into(), rr, ri, lr, li, (r.norm_sqr() + l.norm_sqr()).into()]);
            }
            Ok(Artifact { table: t, headline: Headline::new("emitted_norm", spontaneous_emitted_norm(gamma, *time)) })
        }
        Task::TransientAbsorption { width_rate, x0 } => {
            let closed = sys.model == Model::TwoLevel && sys.gamma_f_i(0) == 0.0;
            let driven = if closed {
                None
            } else {
                Some(DrivenSingle::new(&sys, &Wavepacket::right(*width_rate, *x0)).map_err(compute)?)
            };
            let mut t = Table::new(["t", "a_re", "a_im", "p_e"]);
            let mut peak: f64 = 0.0;
            for time in sc.grid("t")? {
                let a = match &driven {
                    None => absorption_amplitude(sys.gamma0(), *width_rate, *x0, time).map_err(compute)?,
                    Some(d) => d.amplitudes(time)[0],
                };
                let [re, im] = complex(a);
                peak = peak.max(a.norm_sqr());
                t.push(vec![time.into(), re, im, a.norm_sqr().into()]);
            }
            Ok(Artifact { table: t, headline: Headline::new("max_p_e", peak) })
        }
        Task::StimulatedOptimum {} => {
            require(sc, &sys, &[Model::TwoLevel])?;
            let gamma = sys.gamma0();
            let opt = stimulated_optimum(gamma).map_err(compute)?;
            let mut t = Table::new(["x", "f", "f_analytic"]);
            for (x, f) in opt.grid.iter().zip(&opt.f_grid) {
                t.push(vec![(*x).into(), (*f).into(), StimulatedOptimum::analytic(gamma, *x).into()]);
            }
            Ok(Artifact { table: t, headline: Headline::new("lambda_max", opt.lambda_max) })
        }
        Task::ArrayRetardation { field_time: None } => {
            require(sc, &sys, &[Model::TwoLevel, Model::TwoLevelArray])?;
            let n = sys.n_sites();
            let mut cols = vec!["t".to_string()];
            for j in 0..n {
                for suffix in ["re", "im", "markov_re", "markov_im", "p", "markov_p"] {
                    cols.push(format!("a{j}_{suffix}"));
                }
            }
            let mut t = Table::new(cols);
            let mut worst: f64 = 0.0;
            for time in sc.grid("t")? {
                let e = excitation_amplitudes(&sys, time, Mode::Exact).map_err(compute)?;
                let m = excitation_amplitudes(&sys, time, Mode::Markov).map_err(compute)?;
                let mut row = vec![Cell::Num(time)];
                for j in 0..n {
                    worst = worst.max((e[j] - m[j]).norm());
                    row.extend(complex(e[j]));
                    row.extend(complex(m[j]));
                    row.push(e[j].norm_sqr().into());
                    row.push(m[j].norm_sqr().into());
                }
                t.push(row);
            }
            Ok(Artifact { table: t, headline: Headline::new("max_markov_deviation", worst) })
        }
        Task::ArrayRetardation { field_time: Some(time) } => {
            require(sc, &sys, &[Model::TwoLevel, Model::TwoLevelArray])?;
            let xs = sc.grid("x")?;
            let mut t = Table::new([
                "x",
                "right_re",
                "right_im",
                "left_re",
                "left_im",
                "right_markov_re",
                "right_markov_im",
                "left_markov_re",
                "left_markov_im",
                "density",
            ]);
            let mut dens = Vec::with_capacity(xs.len());
            for &x in &xs {
                let mut row = vec![Cell::Num(x)];
                let mut d = 0.0;
                for mode in [Mode::Exact, Mode::Markov] {
                    for dir in [Direction::Right, Direction::Left] {
                        let z = field_amplitude(&sys, x, *time, dir, mode).map_err(compute)?;
                        if mode == Mode::Exact {
                            d += z.norm_sqr();
                        }
                        row.extend(complex(z));
                    }
                }
                row.push(d.into());
                dens.push(d);
                t.push(row);
            }
            let norm: f64 = xs.windows(2).zip(dens.windows(2)).map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1])).sum();
            Ok(Artifact { table: t, headline: Headline::new("field_norm_on_grid", norm) })
        }
        Task::MirrorEntanglement { width_rate, points, window, mode } => {
            require(sc, &sys, &[Model::MirrorTwoLevel])?;
            if *points == 0 || !(*window > 0.0) {
                return Err(CliError::InvalidScenario("MirrorEntanglement needs points > 0 and window > 0".into()));
            }
            let grid = MomentumGrid::uniform(*points, -window, *window);
            let pair = entangled_pair(&sys, &Wavepacket::right(*width_rate, 0.0), &grid, *mode).map_err(compute)?;
            let psi = pair.weighted_normalized();
            let s = von_neumann_entropy(&psi).map_err(compute)?;
            let sv = wgqed::linalg::singular_values(&psi).map_err(compute)?;
            let mut t = Table::new(["index", "schmidt_weight"]);
            for (i, v) in sv.iter().enumerate() {
                t.push(vec![i.into(), (v * v).into()]);
            }
            Ok(Artifact { table: t, headline: Headline::new("entropy", s) })
        }
        Task::PolaritonSingle { wavepacket } => {
            let driven = DrivenSingle::new(&sys, wavepacket).map_err(compute)?;
            let basis = driven.scatterer().basis.clone();
            let mut cols = vec!["t".to_string()];
            cols.extend(basis.iter().map(|b| format!("p_{}", label(b))));
            let mut t = Table::new(cols);
            let mut peak: f64 = 0.0;
            for time in sc.grid("t")? {
                let a = driven.amplitudes(time);
                let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                peak = peak.max(total);
                let mut row = vec![Cell::Num(time)];
                row.extend(a.iter().map(|z| Cell::Num(z.norm_sqr())));
                t.push(row);
            }
            Ok(Artifact { table: t, headline: Headline::new("max_total_population", peak) })
        }
        Task::PolaritonPair { first, second, time } => {
            let pair = PolaritonPair::new(&sys, first, second).map_err(compute)?;
            let basis = pair.scatterer().basis.clone();
            let amps = pair.fock(*time);
            let mut t = Table::new(["first", "second", "amp_re", "amp_im", "probability"]);
            let mut total = 0.0;
            for (&(a, b), z) in pair.pairs().iter().zip(&amps) {
                let [re, im] = complex(*z);
                total += z.norm_sqr();
                t.push(vec![
                    Cell::Text(label(&basis[a])),
                    Cell::Text(label(&basis[b])),
                    re,
                    im,
                    z.norm_sqr().into(),
                ]);
            }
            Ok(Artifact { table: t, headline: Headline::new("total_pair_probability", total) })
        }
        Task::GmeEvolve { wavepacket, photons, dt } => {
            if !(1..=2).contains(photons) {
                return Err(CliError::InvalidScenario("GmeEvolve supports 1 or 2 photons".into()));
            }
            let ts = sc.grid("t")?;
            let samples = ts.len() - 1;
            let t_end = ts[samples];
            let uniform = ts[0] == 0.0
                && samples > 0
                && ts.iter().enumerate().all(|(i, &v)| (v - t_end * i as f64 / samples as f64).abs() <= 1e-9 * t_end);
            if !uniform {
                return Err(CliError::InvalidScenario("GmeEvolve needs a uniform t grid starting at 0".into()));
            }
            let h = evolve_hierarchy(&sys, &GmeDrive::pulse(*wavepacket), 2 * photons, t_end, *dt, samples)
                .map_err(compute)?;
            let basis = wgqed::greens::Scatterer::new(&sys).map_err(compute)?.basis;
            let mut cols = vec!["t".to_string()];
            cols.extend(basis.iter().map(|b| format!("p_{}", label(b))));
            cols.push("trace".into());
            let mut t = Table::new(cols);
            let mut peak: f64 = 0.0;
            for (step, &time) in h.times.iter().enumerate() {
                let rho = reduced_density(&h, *photons, step).map_err(compute)?;
                let mut row = vec![Cell::Num(time)];
                for m in 0..basis.len() {
                    let p = mode_population(&h.space, &rho, m);
                    if m == 0 {
                        peak = peak.max(p);
                    }
                    row.push(p.into());
                }
                let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
                row.push(tr.into());
                t.push(row);
            }
            let name = format!("max_p_{}", label(&basis[0]));
            Ok(Artifact { table: t, headline: Headline::new(&name, peak) })
        }
    }
}
