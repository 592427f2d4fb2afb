//! Effective Hamiltonians on the single-excitation space, their resolvents
//! and bi-orthogonal spectra, and the two-emitter retardation series.

use crate::config::{validate, Mode, Model, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, cis, CMat, KahanSum, I, ONE, ZERO};
use num_complex::Complex64 as C64;

/// Internal state carried by a single-excitation basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    /// Optically excited state |e⟩ of a two-level or three-level emitter.
    Excited,
    /// Rydberg state |s⟩.
    Rydberg,
    /// Cavity photon of the Jaynes–Cummings model.
    Cavity,
    /// Bosonic mode representing a mirror with finite rate Γ_b.
    MirrorMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub site: usize,
    pub species: Species,
}

/// A basis state that couples directly to the waveguide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Port {
    pub state: usize,
    pub x: f64,
    pub rate: f64,
    /// k0·x reduced mod 2π.
    pub carrier: f64,
}

/// Outgoing waveguide channel of a single photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outgoing {
    Transmitted,
    Reflected,
}

#[derive(Debug, Clone, PartialEq)]
enum Coupling {
    Ports(Vec<Port>),
    /// Perfect mirror at the origin in the closed Γ_b → ∞ form; the
    /// emitter sits at distance `distance` in front of it.
    MirrorLimit { gamma: f64, distance: f64, theta0: f64 },
}

/// Two-body contact structure used by the two-photon machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairCoupling {
    None,
    Hardcore,
    Finite(f64),
}

/// Everything needed to build H0(ω) and the waveguide vertices of one of the
/// five models.
#[derive(Debug, Clone, PartialEq)]
pub struct Scatterer {
    pub config: SystemConfig,
    pub basis: Vec<BasisLabel>,
    diag: Vec<C64>,
    coherent: Vec<(usize, usize, f64)>,
    coupling: Coupling,
}

impl Scatterer {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        let config = validate(config)?;
        let n = config.n_sites();
        let mut basis = Vec::new();
        let mut diag = Vec::new();
        let mut coherent = Vec::new();
        let mut ports = Vec::new();
        let port = |state: usize, site: usize, config: &SystemConfig| Port {
            state,
            x: config.positions[site],
            rate: config.gamma_i(site),
            carrier: config.position_phase(site),
        };
        let coupling = match config.model {
            Model::TwoLevel | Model::TwoLevelArray => {
                for i in 0..n {
                    basis.push(BasisLabel { site: i, species: Species::Excited });
                    diag.push(C64::new(0.0, -config.gamma_f_i(i)));
                    ports.push(port(i, i, &config));
                }
                Coupling::Ports(ports)
            }
            Model::JaynesCummings => {
                let jc = config.jc_block();
                basis.push(BasisLabel { site: 0, species: Species::Cavity });
                basis.push(BasisLabel { site: 0, species: Species::Excited });
                diag.push(C64::new(jc.delta_c, -config.gamma_f_i(0)));
                diag.push(C64::new(jc.delta_e, -config.gamma_f_i(0)));
                coherent.push((0, 1, jc.g));
                ports.push(port(0, 0, &config));
                Coupling::Ports(ports)
            }
            Model::RydbergEitArray => {
                let r = config.rydberg_block();
                for i in 0..n {
                    basis.push(BasisLabel { site: i, species: Species::Excited });
                    diag.push(C64::new(r.delta_e, -config.gamma_f_i(i)));
                    ports.push(port(i, i, &config));
                }
                for i in 0..n {
                    basis.push(BasisLabel { site: i, species: Species::Rydberg });
                    diag.push(C64::new(r.delta_s(), 0.0));
                    coherent.push((i, n + i, r.omega));
                }
                Coupling::Ports(ports)
            }
            Model::MirrorTwoLevel => {
                let m = config.mirror_block();
                let distance = -m.x0;
                let theta0 = config.carrier_phase(distance);
                basis.push(BasisLabel { site: 0, species: Species::Excited });
                diag.push(C64::new(0.0, -config.gamma_f_i(0)));
                if m.exact_limit() {
                    Coupling::MirrorLimit { gamma: config.gamma_i(0), distance, theta0 }
                } else {
                    basis.push(BasisLabel { site: 1, species: Species::MirrorMode });
                    diag.push(ZERO);
                    ports.push(Port { state: 0, x: m.x0, rate: config.gamma_i(0), carrier: -theta0 });
                    ports.push(Port { state: 1, x: 0.0, rate: m.gamma_b.value(), carrier: 0.0 });
                    Coupling::Ports(ports)
                }
            }
        };
        Ok(Scatterer { config, basis, diag, coherent, coupling })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn model(&self) -> Model {
        self.config.model
    }

    pub fn ports(&self) -> &[Port] {
        match &self.coupling {
            Coupling::Ports(p) => p,
            Coupling::MirrorLimit { .. } => &[],
        }
    }

    /// Largest decay or coupling scale, used to size grids and quadratures.
    pub fn rate_scale(&self) -> f64 {
        let mut s: f64 = 0.0;
        for d in &self.diag {
            s = s.max(d.norm());
        }
        for p in self.ports() {
            s = s.max(p.rate);
        }
        if let Coupling::MirrorLimit { gamma, .. } = self.coupling {
            s = s.max(2.0 * gamma);
        }
        for &(_, _, g) in &self.coherent {
            s = s.max(g.abs());
        }
        s.max(1e-3)
    }

    /// H0(ω) in Exact mode, H0^M in Markov mode (ω ignored).
    pub fn h0(&self, omega: C64, mode: Mode) -> CMat {
        let w = match mode {
            Mode::Exact => omega,
            Mode::Markov => ZERO,
        };
        let n = self.dim();
        let mut h = linalg::zeros(n, n);
        for a in 0..n {
            h[(a, a)] = self.diag[a];
        }
        for &(a, b, g) in &self.coherent {
            h[(a, b)] += g;
            h[(b, a)] += g;
        }
        match &self.coupling {
            Coupling::Ports(ports) => {
                for p in ports {
                    for q in ports {
                        let dx = (p.x - q.x).abs();
                        let phase = self.config.carrier_phase(dx);
                        let amp = (p.rate * q.rate).sqrt();
                        h[(p.state, q.state)] += -I * amp * cis(phase) * (I * w * dx).exp();
                    }
                }
            }
            Coupling::MirrorLimit { gamma, distance, theta0 } => {
                let e = cis(2.0 * theta0) * (2.0 * I * w * *distance).exp();
                h[(0, 0)] += -I * *gamma + I * *gamma * e;
            }
        }
        h
    }

    /// Resolvent G(ω) = [ω − H0(ω)]⁻¹.
    pub fn green(&self, omega: C64, mode: Mode) -> Result<CMat> {
        let n = self.dim();
        let mut m = self.h0(omega, mode);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = -m[(i, j)];
            }
            m[(i, i)] += omega;
        }
        let singular = Error::SingularResolvent { re: omega.re, im: omega.im };
        let g = linalg::inverse(&m).ok_or(singular.clone())?;
        if linalg::norm_max(&g) > 1e12 {
            return Err(singular);
        }
        Ok(g)
    }

    /// Incoming right-moving photon of momentum k: coupling vector φ_in(k).
    pub fn vertex_in(&self, k: f64, mode: Mode) -> Vec<C64> {
        self.vertex(k, mode, 1.0)
    }

    /// Outgoing photon of momentum p in the given channel: φ_out(p).
    pub fn vertex_out(&self, channel: Outgoing, p: f64, mode: Mode) -> Vec<C64> {
        match (channel, &self.coupling) {
            (Outgoing::Transmitted, Coupling::MirrorLimit { .. }) => vec![ZERO; self.dim()],
            (Outgoing::Transmitted, _) => self.vertex(p, mode, -1.0),
            (Outgoing::Reflected, _) => self.vertex(p, mode, 1.0),
        }
    }

    fn vertex(&self, k: f64, mode: Mode, sign: f64) -> Vec<C64> {
        let kk = match mode {
            Mode::Exact => k,
            Mode::Markov => 0.0,
        };
        let mut v = vec![ZERO; self.dim()];
        match &self.coupling {
            Coupling::Ports(ports) => {
                for p in ports {
                    v[p.state] += p.rate.sqrt() * cis(sign * (p.carrier + kk * p.x));
                }
            }
            Coupling::MirrorLimit { gamma, distance, theta0 } => {
                v[0] = -2.0 * I * gamma.sqrt() * (theta0 + kk * distance).sin();
            }
        }
        v
    }

    /// Amplitude of the channel in the absence of the emitters.
    pub fn background(&self, channel: Outgoing) -> C64 {
        match (channel, &self.coupling) {
            (Outgoing::Transmitted, Coupling::Ports(_)) => ONE,
            (Outgoing::Reflected, Coupling::Ports(_)) => ZERO,
            (Outgoing::Transmitted, Coupling::MirrorLimit { .. }) => ZERO,
            (Outgoing::Reflected, Coupling::MirrorLimit { .. }) => -ONE,
        }
    }

    /// Two-body contact between basis states a and b.
    pub fn pair_coupling(&self, a: usize, b: usize) -> PairCoupling {
        let (la, lb) = (self.basis[a], self.basis[b]);
        match self.config.model {
            Model::RydbergEitArray => {
                if la.site == lb.site {
                    PairCoupling::Hardcore
                } else if la.species == Species::Rydberg && lb.species == Species::Rydberg {
                    let u = self.config.rydberg_block().interaction.energy(la.site, lb.site);
                    if u == 0.0 {
                        PairCoupling::None
                    } else {
                        PairCoupling::Finite(u)
                    }
                } else {
                    PairCoupling::None
                }
            }
            _ => {
                if a == b && la.species == Species::Excited {
                    PairCoupling::Hardcore
                } else {
                    PairCoupling::None
                }
            }
        }
    }
}

/// H0 together with its basis and evaluation mode.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub basis: Vec<BasisLabel>,
    pub matrix: CMat,
    pub mode: Mode,
}

pub fn build_h0(config: &SystemConfig, omega: C64, mode: Mode) -> Result<EffectiveHamiltonian> {
    let s = Scatterer::new(config)?;
    Ok(EffectiveHamiltonian { matrix: s.h0(omega, mode), basis: s.basis, mode })
}

pub fn green(config: &SystemConfig, omega: C64, mode: Mode) -> Result<CMat> {
    Scatterer::new(config)?.green(omega, mode)
}

/// Bi-orthogonal eigen-system: H χ_l = ε_l χ_l, χ̃_l† χ_m = δ_lm.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as columns, unit 2-norm.
    pub right: CMat,
    /// Left eigenvectors as columns, scaled for bi-orthonormality.
    pub left: CMat,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Entry χ_l(a).
    pub fn chi(&self, a: usize, l: usize) -> C64 {
        self.right[(a, l)]
    }

    /// Entry χ̃_l(a)*.
    pub fn chi_tilde_conj(&self, a: usize, l: usize) -> C64 {
        self.left[(a, l)].conj()
    }

    /// Resolvent (ω − H)⁻¹ rebuilt from the spectrum.
    pub fn resolvent(&self, omega: C64) -> CMat {
        let n = self.len();
        CMat::from_fn(n, n, |a, b| {
            (0..n).map(|l| self.chi(a, l) * self.chi_tilde_conj(b, l) / (omega - self.eigenvalues[l])).sum()
        })
    }
}

/// Bi-orthogonal eigendecomposition of a Markov effective Hamiltonian.
///
/// Right vectors have unit norm and their largest component (lowest index
/// among ties) real and positive. Eigenvalues are sorted by real part, then
/// imaginary part.
pub fn eigendecompose(h: &EffectiveHamiltonian) -> Result<Spectrum> {
    if h.mode != Mode::Markov {
        return Err(Error::UnsupportedMode { op: "eigendecompose", required: "Markov" });
    }
    spectrum_of(&h.matrix)
}

pub fn spectrum_of(m: &CMat) -> Result<Spectrum> {
    let n = m.nrows();
    let (values, vectors) = linalg::eigen(m)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a].re.total_cmp(&values[b].re).then(values[a].im.total_cmp(&values[b].im))
    });
    let mut right = linalg::zeros(n, n);
    let eigenvalues: Vec<C64> = order.iter().map(|&l| values[l]).collect();
    for (col, &l) in order.iter().enumerate() {
        let norm: f64 = (0..n).map(|i| vectors[(i, l)].norm_sqr()).sum::<f64>().sqrt();
        let biggest = (0..n).map(|i| vectors[(i, l)].norm()).fold(0.0, f64::max);
        let pivot = (0..n)
            .find(|&i| vectors[(i, l)].norm() >= biggest * (1.0 - 1e-10))
            .unwrap_or(0);
        let p = vectors[(pivot, l)];
        let fix = p.conj() / p.norm() / norm;
        for i in 0..n {
            right[(i, col)] = vectors[(i, l)] * fix;
        }
        right[(pivot, col)] = C64::new(right[(pivot, col)].norm(), 0.0);
    }
    let condition = linalg::condition_number(&right);
    if !(condition <= 1e12) {
        return Err(Error::DefectiveMatrix { condition });
    }
    let inv = linalg::inverse(&right).ok_or(Error::DefectiveMatrix { condition })?;
    let left = inv.adjoint().to_owned();
    Ok(Spectrum { eigenvalues, right, left })
}

/// Scaled series e^{−(Γ_f+Γ)T} C_±(T) for two emitters a distance d apart.
///
/// Terms are summed in log form so that long series (T/d up to 1e6) do
/// not overflow; the sum is compensated.
pub fn retardation_scaled(gamma: f64, gamma_f: f64, k0d: f64, d: f64, t: f64, plus: bool) -> Result<C64> {
    let a = gamma + gamma_f;
    if t < 0.0 {
        return Ok(ZERO);
    }
    let steps = (t / d).floor();
    if steps > 1e6 {
        return Err(Error::SeriesOverflow { terms: steps });
    }
    let n_max = steps as usize;
    let mut sum = KahanSum::default();
    sum.add(C64::new((-a * t).exp(), 0.0));
    let mut ln_fact = 0.0;
    let tail_start = 2.0 * gamma * t * (a * d).exp() + 2.0;
    for n in 1..=n_max {
        let nf = n as f64;
        ln_fact += nf.ln();
        let lag = t - nf * d;
        if lag <= 0.0 {
            break;
        }
        let ln_mag = nf * (gamma.ln() + a * d + lag.ln()) - ln_fact - a * t;
        let sign = if plus || n % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * ln_mag.exp() * cis((nf * k0d) % std::f64::consts::TAU);
        sum.add(term);
        if nf > tail_start && ln_mag < -60.0 {
            break;
        }
    }
    Ok(sum.value())
}

/// C_±(T) for a two-emitter configuration (unscaled).
pub fn retardation_series(config: &SystemConfig, t: f64, plus: bool) -> Result<C64> {
    let c = validate(config)?;
    if c.n_sites() != 2 {
        return Err(Error::InvalidConfig("retardation series needs exactly two emitters".into()));
    }
    let d = c.spacing().expect("two emitters");
    let k0d = c.carrier_phase(d);
    let (g, gf) = (c.gamma_i(0), c.gamma_f_i(0));
    let scaled = retardation_scaled(g, gf, k0d, d, t, plus)?;
    Ok(scaled * ((g + gf) * t).exp())
}
