//! Generalized master equation for emitters driven by few-photon pulses.
//!
//! A photon pulse is replaced by a classical source ξ·f. The emitter state
//! ρ_J obeys an ordinary Lindblad equation with a time-dependent drive, and
//! is expanded in powers ξ^m ξ*^n. The n-photon reduced density matrix is
//! n! times the ξⁿξ*ⁿ coefficient of e^{|ξ|²} ρ_J, which gives
//! ρ⁽⁰⁰⁾ + ρ⁽¹¹⁾ for one photon and ρ⁽⁰⁰⁾ + 2ρ⁽¹¹⁾ + 2ρ⁽²²⁾ for two.
//!
//! The emitter Hamiltonian and the collective decay are read off the Markov
//! single-excitation Hamiltonian H0 = H − iD: H gives the coherent part
//! (including waveguide-mediated exchange), D the jump structure.

use crate::config::{Mode, SystemConfig, Wavepacket};
use crate::error::{Error, Result};
use crate::greens::{PairCoupling, Scatterer, Species};
use crate::linalg::{self, cis, CMat, I, ONE, ZERO};
use faer::Scale;
use num_complex::Complex64 as C64;
use std::collections::{BTreeMap, HashMap};

/// Largest many-body dimension handled with dense matrices.
pub const MAX_GME_DIM: usize = 400;

/// Occupation-number basis on the modes of the single-excitation space,
/// truncated at a total number of excitations.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    modes: usize,
    bosonic: Vec<bool>,
}

impl FockSpace {
    fn new(s: &Scatterer, max_excitations: usize) -> Result<Self> {
        let modes = s.dim();
        let bosonic: Vec<bool> = s
            .basis
            .iter()
            .map(|b| matches!(b.species, Species::Cavity | Species::MirrorMode))
            .collect();
        let exclusive: Vec<Vec<bool>> = (0..modes)
            .map(|a| (0..modes).map(|b| a != b && s.pair_coupling(a, b) == PairCoupling::Hardcore).collect())
            .collect();
        let mut states = vec![vec![0u8; modes]];
        let mut frontier = states.clone();
        for _ in 0..max_excitations {
            let mut next = Vec::new();
            for st in &frontier {
                // add one quantum to a mode at or after the last occupied one
                let start = st.iter().rposition(|&n| n > 0).unwrap_or(0);
                for a in start..modes {
                    let mut up = st.clone();
                    up[a] += 1;
                    if Self::allowed(&up, &bosonic, &exclusive) {
                        next.push(up);
                    }
                }
            }
            states.extend(next.iter().cloned());
            frontier = next;
            if states.len() > MAX_GME_DIM {
                return Err(Error::BasisTooLarge { dim: states.len(), max: MAX_GME_DIM });
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockSpace { states, index, modes, bosonic })
    }

    fn allowed(st: &[u8], bosonic: &[bool], exclusive: &[Vec<bool>]) -> bool {
        for (a, &n) in st.iter().enumerate() {
            if n > 1 && !bosonic[a] {
                return false;
            }
            if n > 0 {
                for (b, &m) in st.iter().enumerate() {
                    if m > 0 && exclusive[a][b] {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Number of excitations in basis state i.
    pub fn excitations(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Index of the state with one quantum in `mode`.
    pub fn single(&self, mode: usize) -> Option<usize> {
        let mut st = vec![0u8; self.modes];
        st[mode] = 1;
        self.index.get(&st).copied()
    }

    /// Lowering operator O_a.
    pub fn lowering(&self, a: usize) -> CMat {
        let d = self.dim();
        let mut m = linalg::zeros(d, d);
        for (i, st) in self.states.iter().enumerate() {
            if st[a] == 0 {
                continue;
            }
            let mut down = st.clone();
            down[a] -= 1;
            if let Some(&j) = self.index.get(&down) {
                let amp = if self.bosonic[a] { (st[a] as f64).sqrt() } else { 1.0 };
                m[(j, i)] = C64::new(amp, 0.0);
            }
        }
        m
    }
}

/// The classical drive standing in for the photon pulse; `None` is vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmeDrive {
    pub wavepacket: Option<Wavepacket>,
}

impl GmeDrive {
    pub fn vacuum() -> Self {
        GmeDrive { wavepacket: None }
    }

    pub fn pulse(wp: Wavepacket) -> Self {
        GmeDrive { wavepacket: Some(wp) }
    }
}

/// Lindblad generator of the emitters coupled to the waveguide.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    pub space: FockSpace,
    /// Coherent emitter Hamiltonian, including waveguide exchange terms.
    pub hamiltonian: CMat,
    /// Collective decay matrix 2D on the single-excitation modes, with
    /// entries 2√(Γ_iΓ_j)cos k0(x_i − x_j) + 2Γ_f,i δ_ij for emitter arrays.
    pub decay: CMat,
    /// Jump operators C_k with their rates: Σ_k r_k (C_k ρ C_k† − ½{C_k†C_k, ρ}).
    pub jumps: Vec<(f64, CMat)>,
    /// Non-Hermitian H − (i/2)Σ r_k C_k†C_k.
    effective: CMat,
    lowering: Vec<CMat>,
}

impl Lindbladian {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// L ρ without the drive.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let heff = &self.effective;
        let mut out = Scale(-I) * (heff * rho - rho * heff.adjoint());
        for (rate, c) in &self.jumps {
            out += *rate * (c * rho * c.adjoint());
        }
        out
    }

    /// Superoperator matrix acting on column-stacked ρ.
    pub fn matrix(&self) -> CMat {
        let d = self.dim();
        let mut m = linalg::zeros(d * d, d * d);
        for col in 0..d * d {
            let mut e = linalg::zeros(d, d);
            e[(col % d, col / d)] = ONE;
            let img = self.apply(&e);
            for j in 0..d {
                for i in 0..d {
                    m[(i + j * d, col)] = img[(i, j)];
                }
            }
        }
        m
    }
}

fn build_lindbladian(config: &SystemConfig, max_excitations: usize) -> Result<(Scatterer, Lindbladian)> {
    let s = Scatterer::new(config)?;
    let space = FockSpace::new(&s, max_excitations)?;
    let h0 = s.h0(ZERO, Mode::Markov);
    let n = s.dim();
    let herm = CMat::from_fn(n, n, |a, b| 0.5 * (h0[(a, b)] + h0[(b, a)].conj()));
    let d = CMat::from_fn(n, n, |a, b| 0.5 * I * (h0[(a, b)] - h0[(b, a)].conj()));
    let lowering: Vec<CMat> = (0..n).map(|a| space.lowering(a)).collect();
    let dim = space.dim();
    let mut hamiltonian = linalg::zeros(dim, dim);
    for a in 0..n {
        for b in 0..n {
            if herm[(a, b)] != ZERO {
                hamiltonian += Scale(herm[(a, b)]) * (lowering[a].adjoint() * &lowering[b]);
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if let PairCoupling::Finite(u) = s.pair_coupling(a, b) {
                let na = lowering[a].adjoint() * &lowering[a];
                let nb = lowering[b].adjoint() * &lowering[b];
                hamiltonian += u * (na * nb);
            }
        }
    }
    let (rates, vecs) = linalg::hermitian_eigen(&d)?;
    let scale = rates.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut jumps = Vec::new();
    for (k, &r) in rates.iter().enumerate() {
        if r < -1e-12 * scale {
            return Err(Error::InvalidConfig("decay matrix is not positive semidefinite".into()));
        }
        if r <= 1e-14 * scale {
            continue;
        }
        let mut c = linalg::zeros(dim, dim);
        for b in 0..n {
            if vecs[(b, k)] != ZERO {
                c += Scale(vecs[(b, k)]) * &lowering[b];
            }
        }
        jumps.push((2.0 * r, c));
    }
    let mut effective = hamiltonian.clone();
    for (rate, c) in &jumps {
        effective -= Scale(C64::new(0.0, 0.5 * rate)) * (c.adjoint() * c);
    }
    let decay = CMat::from_fn(n, n, |a, b| 2.0 * d[(a, b)]);
    Ok((s, Lindbladian { space, hamiltonian, decay, jumps, effective, lowering }))
}

/// Lindblad generator of `config` on the sector with at most two excitations.
pub fn lindblad_generator(config: &SystemConfig) -> Result<Lindbladian> {
    build_lindbladian(config, 2).map(|(_, l)| l)
}

/// Drive coupling of each single-excitation mode: coefficient and arrival time
/// of the pulse front.
fn drive_terms(s: &Scatterer, wp: &Wavepacket) -> Result<Vec<(usize, C64, f64)>> {
    wp.validate(&s.config)?;
    let sigma = wp.sigma();
    if s.ports().is_empty() {
        // perfect mirror: a single emitter reachable from the left only
        if sigma < 0.0 {
            return Ok(Vec::new());
        }
        let v = s.vertex_in(0.0, Mode::Markov)[0];
        let x0 = s.config.mirror_block().x0;
        return Ok(vec![(0, v, wp.arrival(x0))]);
    }
    Ok(s
        .ports()
        .iter()
        .map(|p| (p.state, p.rate.sqrt() * cis(sigma * p.carrier), wp.arrival(p.x)))
        .collect())
}

struct DriveOps {
    terms: Vec<(C64, f64, CMat)>,
    wavepacket: Option<Wavepacket>,
}

impl DriveOps {
    /// V(t) = Σ_a β_a(t) O_a†.
    fn v(&self, t: f64) -> Option<CMat> {
        let wp = self.wavepacket?;
        let mut out: Option<CMat> = None;
        for (c, arrival, raise) in &self.terms {
            // envelope at the port: the front arrives at `arrival`
            let beta = c * wp.envelope(wp.center - wp.sigma() * (t - arrival));
            if beta == ZERO {
                continue;
            }
            match out.as_mut() {
                Some(m) => *m += Scale(beta) * raise,
                None => out = Some(Scale(beta) * raise),
            }
        }
        out
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.1).collect()
    }
}

fn drive_ops(s: &Scatterer, l: &Lindbladian, drive: &GmeDrive) -> Result<DriveOps> {
    let Some(wp) = drive.wavepacket else {
        return Ok(DriveOps { terms: Vec::new(), wavepacket: None });
    };
    let terms = drive_terms(s, &wp)?
        .into_iter()
        .map(|(a, c, t)| (c, t, l.lowering[a].adjoint().to_owned()))
        .collect();
    Ok(DriveOps { terms, wavepacket: Some(wp) })
}

/// H̃_sys(T) for a unit source: emitter Hamiltonian plus V(T) + V(T)†.
pub fn driven_hamiltonian(config: &SystemConfig, drive: &GmeDrive, t: f64) -> Result<CMat> {
    let (s, l) = build_lindbladian(config, 2)?;
    let ops = drive_ops(&s, &l, drive)?;
    let mut h = l.hamiltonian.clone();
    if let Some(v) = ops.v(t) {
        h += &v + v.adjoint();
    }
    Ok(h)
}

/// Source-order components ρ^{(m,n)} recorded on a time grid.
#[derive(Debug, Clone)]
pub struct DensityHierarchy {
    /// Largest order m + n evolved.
    pub order: usize,
    pub times: Vec<f64>,
    /// One map (m, n) → ρ^{(m,n)} per recorded time.
    pub components: Vec<BTreeMap<(usize, usize), CMat>>,
    pub space: FockSpace,
    /// Largest final-time change of any component when dt is halved.
    pub halving_error: f64,
    pub dt: f64,
}

impl DensityHierarchy {
    pub fn component(&self, step: usize, m: usize, n: usize) -> Option<&CMat> {
        self.components[step].get(&(m, n))
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

fn keys(order: usize) -> Vec<(usize, usize)> {
    let half = order / 2;
    let mut out = Vec::new();
    for m in 0..=half {
        for n in 0..=half {
            if m + n <= order {
                out.push((m, n));
            }
        }
    }
    out
}

type State = Vec<CMat>;

fn derivative(l: &Lindbladian, ops: &DriveOps, keys: &[(usize, usize)], rho: &State, t: f64) -> State {
    let v = ops.v(t);
    let pos: HashMap<(usize, usize), usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    keys.iter()
        .enumerate()
        .map(|(i, &(m, n))| {
            let mut out = l.apply(&rho[i]);
            if let Some(v) = &v {
                if m > 0 {
                    let lower = &rho[pos[&(m - 1, n)]];
                    out -= Scale(I) * (v * lower - lower * v);
                }
                if n > 0 {
                    let lower = &rho[pos[&(m, n - 1)]];
                    let vd = v.adjoint();
                    out -= Scale(I) * (vd * lower - lower * vd);
                }
            }
            out
        })
        .collect()
}

fn axpy(y: &State, a: f64, k: &State) -> State {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

/// RK4 over [t0, t1] in equal steps no longer than dt. Stage times are kept
/// strictly inside the interval so the drive is sampled on the correct side
/// of a front.
fn integrate_segment(
    l: &Lindbladian,
    ops: &DriveOps,
    keys: &[(usize, usize)],
    mut rho: State,
    t0: f64,
    t1: f64,
    dt: f64,
) -> State {
    let len = t1 - t0;
    if len <= 0.0 {
        return rho;
    }
    let steps = (len / dt).ceil().max(1.0) as usize;
    let h = len / steps as f64;
    let guard = 1e-12 * h;
    for i in 0..steps {
        let t = t0 + h * i as f64;
        let k1 = derivative(l, ops, keys, &rho, t + guard);
        let k2 = derivative(l, ops, keys, &axpy(&rho, 0.5 * h, &k1), t + 0.5 * h);
        let k3 = derivative(l, ops, keys, &axpy(&rho, 0.5 * h, &k2), t + 0.5 * h);
        let k4 = derivative(l, ops, keys, &axpy(&rho, h, &k3), t + h - guard);
        rho = rho
            .iter()
            .enumerate()
            .map(|(c, r)| r + (h / 6.0) * (&k1[c] + 2.0 * &k2[c] + 2.0 * &k3[c] + &k4[c]))
            .collect();
    }
    rho
}

fn run(
    l: &Lindbladian,
    ops: &DriveOps,
    order: usize,
    initial: &CMat,
    times: &[f64],
    dt: f64,
) -> Vec<BTreeMap<(usize, usize), CMat>> {
    let ks = keys(order);
    let d = l.dim();
    let mut rho: State = ks.iter().map(|&k| if k == (0, 0) { initial.clone() } else { linalg::zeros(d, d) }).collect();
    let mut cuts: Vec<f64> = ops.breakpoints();
    cuts.extend_from_slice(times);
    cuts.retain(|&c| c > 0.0 && c <= times[times.len() - 1]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut out = Vec::new();
    let mut now = 0.0;
    let mut next_out = 0;
    let record = |rho: &State, out: &mut Vec<BTreeMap<(usize, usize), CMat>>| {
        out.push(ks.iter().cloned().zip(rho.iter().cloned()).collect());
    };
    while next_out < times.len() && times[next_out] <= 0.0 {
        record(&rho, &mut out);
        next_out += 1;
    }
    for &c in &cuts {
        rho = integrate_segment(l, ops, &ks, rho, now, c, dt);
        now = c;
        while next_out < times.len() && (times[next_out] - now).abs() < 1e-14 {
            record(&rho, &mut out);
            next_out += 1;
        }
    }
    out
}

/// Evolve the source-order hierarchy up to total order `order` (2 for one
/// photon, 4 for two) from the emitter ground state, recording `samples`
/// equal intervals on [0, t_end].
pub fn evolve_hierarchy(
    config: &SystemConfig,
    drive: &GmeDrive,
    order: usize,
    t_end: f64,
    dt: f64,
    samples: usize,
) -> Result<DensityHierarchy> {
    if !(1..=4).contains(&order) && order != 0 {
        return Err(Error::InvalidConfig(format!("source order {order} outside 0..=4")));
    }
    let (s, l) = build_lindbladian(config, order / 2)?;
    let ops = drive_ops(&s, &l, drive)?;
    let gamma_wp = drive.wavepacket.map(|w| w.width_rate).unwrap_or(0.0);
    let fastest = s.rate_scale().max(gamma_wp);
    if !(dt > 0.0) || dt > 0.01 / fastest * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!("dt must lie in (0, {:e}]", 0.01 / fastest)));
    }
    let samples = samples.max(1);
    let times: Vec<f64> = (0..=samples).map(|i| t_end * i as f64 / samples as f64).collect();
    let d = l.dim();
    let mut ground = linalg::zeros(d, d);
    ground[(0, 0)] = ONE;
    let coarse = run(&l, &ops, order, &ground, &times, dt);
    let fine = run(&l, &ops, order, &ground, &[t_end], 0.5 * dt);
    let last = coarse.last().expect("at least one record");
    let mut estimate: f64 = 0.0;
    for (k, m) in last {
        let f = &fine[0][k];
        for j in 0..d {
            for i in 0..d {
                estimate = estimate.max((m[(i, j)] - f[(i, j)]).norm());
            }
        }
    }
    if estimate > 1e-4 {
        return Err(Error::StepTooLarge { dt, estimate });
    }
    Ok(DensityHierarchy { order, times, components: coarse, space: l.space, halving_error: estimate, dt })
}

/// Physical emitter density matrix for an input of `photons` photons in the
/// drive's wavepacket, at recorded step `step`.
pub fn reduced_density(h: &DensityHierarchy, photons: usize, step: usize) -> Result<CMat> {
    let need = 2 * photons;
    if h.order < need {
        return Err(Error::InsufficientOrder { have: h.order, need });
    }
    let comps = &h.components[step];
    // n! Σ_k ρ^{(n−k,n−k)}/k!
    let mut out = linalg::zeros(h.dim(), h.dim());
    let mut n_fact = 1.0;
    for j in 1..=photons {
        n_fact *= j as f64;
    }
    let mut k_fact = 1.0;
    for k in 0..=photons {
        if k > 0 {
            k_fact *= k as f64;
        }
        let m = photons - k;
        out += (n_fact / k_fact) * &comps[&(m, m)];
    }
    Ok(out)
}

/// Largest |ρ^{(m,n)}† − ρ^{(n,m)}| over a hierarchy.
pub fn hermitian_pairing_error(h: &DensityHierarchy) -> f64 {
    let mut worst: f64 = 0.0;
    for comps in &h.components {
        for (&(m, n), a) in comps {
            if let Some(b) = comps.get(&(n, m)) {
                let d = a.adjoint() - b;
                worst = worst.max(linalg::norm_max(&d.to_owned()));
            }
        }
    }
    worst
}

/// Largest deviation of Tr ρ^{(m,n)} from δ_{(m,n),(0,0)}.
pub fn trace_error(h: &DensityHierarchy) -> f64 {
    let mut worst: f64 = 0.0;
    for comps in &h.components {
        for (&(m, n), a) in comps {
            let tr: C64 = (0..a.nrows()).map(|i| a[(i, i)]).sum();
            let target = if (m, n) == (0, 0) { ONE } else { ZERO };
            worst = worst.max((tr - target).norm());
        }
    }
    worst
}

/// Population of single-excitation mode `mode` in a density matrix.
pub fn mode_population(space: &FockSpace, rho: &CMat, mode: usize) -> f64 {
    let mut p = 0.0;
    for (i, st) in space.states.iter().enumerate() {
        if st[mode] > 0 {
            p += st[mode] as f64 * rho[(i, i)].re;
        }
    }
    p
}
