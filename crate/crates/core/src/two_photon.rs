//! Two-photon scattering: vacuum bubbles, T-matrices, S-matrix kernels,
//! coordinate-space pair wavefunctions, g² and pair entanglement.
//!
//! S-matrices are never discretized. A kernel stores the two disconnected
//! coefficients (multiplying δ(p1−k1)δ(p2−k2) and δ(p1−k2)δ(p2−k1)) and a
//! smooth connected part that multiplies δ(p1+p2−k1−k2).

use crate::config::{Mode, Model, SystemConfig, Wavepacket};
use crate::error::{Error, Result};
use crate::greens::{spectrum_of, Outgoing, PairCoupling, Scatterer, Spectrum};
use crate::linalg::{self, CMat, I, ONE, ZERO};
use crate::quad::{self, QuadOptions};
use crate::single_photon::{rt_jc, rt_two_level};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Arc;

/// Largest pair basis handled by the dense T-matrix solver.
pub const MAX_PAIR_DIM: usize = 3600;

/// Treatment of infinite on-site repulsion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hardcore {
    /// U⁻¹ = 0 on hardcore channels.
    Exact,
    /// Finite U0 on hardcore channels.
    Regularized(f64),
}

/// An operator on ordered emitter pairs |a, b⟩ of the single-excitation basis.
#[derive(Debug, Clone)]
pub struct PairBasisOperator {
    pub pairs: Vec<(usize, usize)>,
    pub matrix: CMat,
}

impl PairBasisOperator {
    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn index_of(&self, pair: (usize, usize)) -> Option<usize> {
        self.pairs.iter().position(|&p| p == pair)
    }

    /// Element between two ordered pairs, zero outside the stored support.
    pub fn get(&self, row: (usize, usize), col: (usize, usize)) -> C64 {
        match (self.index_of(row), self.index_of(col)) {
            (Some(r), Some(c)) => self.matrix[(r, c)],
            _ => ZERO,
        }
    }

    /// Largest violation of the exchange symmetry (a,b)↔(b,a) applied to
    /// rows and columns simultaneously.
    pub fn exchange_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, &(a, b)) in self.pairs.iter().enumerate() {
            for (c, &(x, y)) in self.pairs.iter().enumerate() {
                let v = self.matrix[(r, c)];
                worst = worst.max((v - self.get((b, a), (y, x))).norm());
            }
        }
        worst
    }
}

/// Shared two-body data of one scatterer: pair support, inverse interaction
/// and (in Markov mode) the single-excitation spectrum.
#[derive(Debug, Clone)]
pub struct PairProblem {
    pub scatterer: Scatterer,
    pub mode: Mode,
    pub hardcore: Hardcore,
    pub pairs: Vec<(usize, usize)>,
    dinv: Vec<C64>,
    spectrum: Option<Spectrum>,
}

impl PairProblem {
    pub fn new(config: &SystemConfig, mode: Mode) -> Result<Self> {
        let scatterer = Scatterer::new(config)?;
        let hardcore = default_hardcore(&scatterer.config);
        Self::with_hardcore(scatterer, mode, hardcore)
    }

    pub fn with_hardcore(scatterer: Scatterer, mode: Mode, hardcore: Hardcore) -> Result<Self> {
        if mode == Mode::Exact && scatterer.model() == Model::RydbergEitArray {
            return Err(Error::UnsupportedMode { op: "Rydberg two-photon kernel", required: "Markov" });
        }
        let n = scatterer.dim();
        let mut pairs = Vec::new();
        let mut dinv = Vec::new();
        for a in 0..n {
            for b in 0..n {
                match scatterer.pair_coupling(a, b) {
                    PairCoupling::None => {}
                    PairCoupling::Hardcore => {
                        pairs.push((a, b));
                        dinv.push(match hardcore {
                            Hardcore::Exact => ZERO,
                            Hardcore::Regularized(u0) => C64::new(1.0 / u0, 0.0),
                        });
                    }
                    PairCoupling::Finite(u) => {
                        pairs.push((a, b));
                        dinv.push(C64::new(1.0 / u, 0.0));
                    }
                }
            }
        }
        if pairs.len() > MAX_PAIR_DIM {
            return Err(Error::BasisTooLarge { dim: pairs.len(), max: MAX_PAIR_DIM });
        }
        let spectrum = match mode {
            Mode::Markov => Some(spectrum_of(&scatterer.h0(ZERO, Mode::Markov))?),
            Mode::Exact => None,
        };
        Ok(PairProblem { scatterer, mode, hardcore, pairs, dinv, spectrum })
    }

    pub fn spectrum(&self) -> Option<&Spectrum> {
        self.spectrum.as_ref()
    }

    /// Π(E) between the given pair lists.
    pub fn bubble_on(&self, e: C64, rows: &[(usize, usize)], cols: &[(usize, usize)]) -> Result<CMat> {
        match &self.spectrum {
            Some(sp) => markov_bubble(sp, e, rows, cols),
            None => exact_bubble(&self.scatterer, e, rows, cols),
        }
    }

    /// T(E) on the interaction support.
    pub fn tmatrix(&self, e: C64) -> Result<PairBasisOperator> {
        let m = self.pairs.len();
        let pi = self.bubble_on(e, &self.pairs, &self.pairs)?;
        let mut a = linalg::zeros(m, m);
        for r in 0..m {
            for c in 0..m {
                a[(r, c)] = -pi[(r, c)];
            }
            a[(r, r)] += self.dinv[r];
        }
        let condition = linalg::condition_number(&a);
        if !(condition <= 1e14) {
            return Err(Error::IllConditioned { condition });
        }
        let t = linalg::inverse(&a).ok_or(Error::IllConditioned { condition })?;
        let residual = ls_residual(&a, &t);
        if residual > 1e-10 {
            return Err(Error::ResidualTooLarge { residual });
        }
        Ok(PairBasisOperator { pairs: self.pairs.clone(), matrix: t })
    }

    /// Vector u(k) ⊗ u(k') restricted to the interaction support.
    fn pair_vector(&self, u1: &[C64], u2: &[C64]) -> Vec<C64> {
        self.pairs.iter().map(|&(a, b)| u1[a] * u2[b]).collect()
    }

    /// u_in(k) = G(k) φ_in(k).
    fn u_in(&self, k: f64) -> Result<Vec<C64>> {
        let g = self.scatterer.green(C64::new(k, 0.0), self.mode)?;
        Ok(linalg::matvec(&g, &self.scatterer.vertex_in(k, self.mode)))
    }

    /// u_out(p) = G(p)ᵀ φ_out(p).
    fn u_out(&self, channel: Outgoing, p: f64) -> Result<Vec<C64>> {
        let g = self.scatterer.green(C64::new(p, 0.0), self.mode)?;
        Ok(linalg::matvec_t(&g, &self.scatterer.vertex_out(channel, p, self.mode)))
    }
}

pub(crate) fn default_hardcore(config: &SystemConfig) -> Hardcore {
    match config.model {
        Model::RydbergEitArray => {
            let r = config.rydberg_block();
            if r.exact_limit() {
                Hardcore::Exact
            } else {
                Hardcore::Regularized(r.u0.value())
            }
        }
        _ => Hardcore::Exact,
    }
}

/// max |(A T − I)_ij| / (‖A‖_max ‖T‖_max), the backward error of T = A⁻¹
/// with A = U⁻¹ − Π.
fn ls_residual(a: &CMat, t: &CMat) -> f64 {
    let n = a.nrows();
    let prod = a * t;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    let scale = (linalg::norm_max(a) * linalg::norm_max(t)).max(1.0);
    worst / scale
}

fn markov_bubble(sp: &Spectrum, e: C64, rows: &[(usize, usize)], cols: &[(usize, usize)]) -> Result<CMat> {
    let n = sp.len();
    let mut denom = Vec::with_capacity(n * n);
    for l in 0..n {
        for m in 0..n {
            let d = e - sp.eigenvalues[l] - sp.eigenvalues[m];
            if d.norm() < 1e-12 {
                return Err(Error::SingularBubble { re: e.re, im: e.im });
            }
            denom.push(ONE / d);
        }
    }
    let left = CMat::from_fn(rows.len(), n * n, |r, lm| {
        let (a, b) = rows[r];
        sp.chi(a, lm / n) * sp.chi(b, lm % n)
    });
    let right = CMat::from_fn(n * n, cols.len(), |lm, c| {
        let (x, y) = cols[c];
        sp.chi_tilde_conj(x, lm / n) * sp.chi_tilde_conj(y, lm % n) * denom[lm]
    });
    Ok(&left * &right)
}

fn exact_bubble(s: &Scatterer, e: C64, rows: &[(usize, usize)], cols: &[(usize, usize)]) -> Result<CMat> {
    let kappa = s.rate_scale();
    let (nr, nc) = (rows.len(), cols.len());
    let f = |w: f64, out: &mut [C64]| {
        let g1 = s.green(C64::new(w, 0.0), Mode::Exact);
        let g2 = s.green(e - w, Mode::Exact);
        let (g1, g2) = match (g1, g2) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                out.iter_mut().for_each(|z| *z = C64::new(f64::NAN, f64::NAN));
                return;
            }
        };
        let g0 = ONE / C64::new(w, kappa) / (e - w + I * kappa);
        for (r, &(a, b)) in rows.iter().enumerate() {
            for (c, &(x, y)) in cols.iter().enumerate() {
                let mut v = g1[(a, x)] * g2[(b, y)];
                if a == x && b == y {
                    v -= g0;
                }
                out[r * nc + c] = I * v / (2.0 * PI);
            }
        }
    };
    let opts = QuadOptions { rel_tol: 1e-11, abs_tol: 1e-15, max_intervals: 40_000 };
    let v = quad::integrate_real_line_vec(f, 0.5 * e.re, kappa, nr * nc, opts)?;
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularBubble { re: e.re, im: e.im });
    }
    let closed = ONE / (e + 2.0 * I * kappa);
    Ok(CMat::from_fn(nr, nc, |r, c| {
        let (a, b) = rows[r];
        let (x, y) = cols[c];
        let base = v[r * nc + c];
        if a == x && b == y {
            base + closed
        } else {
            base
        }
    }))
}

/// Vacuum bubble Π(E) on the full ordered-pair basis.
pub fn bubble(config: &SystemConfig, e: C64, mode: Mode) -> Result<PairBasisOperator> {
    let p = PairProblem::new(config, mode)?;
    let n = p.scatterer.dim();
    if n * n > MAX_PAIR_DIM {
        return Err(Error::BasisTooLarge { dim: n * n, max: MAX_PAIR_DIM });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let matrix = p.bubble_on(e, &pairs, &pairs)?;
    Ok(PairBasisOperator { pairs, matrix })
}

/// T(E) = (U⁻¹ − Π(E))⁻¹ on the interaction support.
pub fn tmatrix(config: &SystemConfig, e: C64, mode: Mode) -> Result<PairBasisOperator> {
    PairProblem::new(config, mode)?.tmatrix(e)
}

/// Outgoing channels of the two photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairChannel {
    Reflected,
    Transmitted,
    /// Photon 1 reflected, photon 2 transmitted.
    Mixed,
}

impl PairChannel {
    fn legs(self) -> (Outgoing, Outgoing) {
        match self {
            PairChannel::Reflected => (Outgoing::Reflected, Outgoing::Reflected),
            PairChannel::Transmitted => (Outgoing::Transmitted, Outgoing::Transmitted),
            PairChannel::Mixed => (Outgoing::Reflected, Outgoing::Transmitted),
        }
    }
}

#[derive(Debug, Clone)]
struct GenericKernel {
    problem: Arc<PairProblem>,
    /// T(E) (u_in(k1) ⊗ u_in(k2)) on the interaction support.
    tw: Vec<C64>,
}

#[derive(Debug, Clone)]
enum KernelEval {
    TwoLevel { gamma: f64 },
    Jc { g: f64, gamma: f64 },
    Generic(GenericKernel),
}

/// Two-photon S-matrix for two incoming right-moving photons k1, k2.
#[derive(Debug, Clone)]
pub struct TwoPhotonKernel {
    pub channel: PairChannel,
    pub k1: f64,
    pub k2: f64,
    /// Coefficients of δ(p1−k1)δ(p2−k2) and δ(p1−k2)δ(p2−k1).
    pub disconnected: (C64, C64),
    eval: KernelEval,
}

impl TwoPhotonKernel {
    pub fn energy(&self) -> f64 {
        self.k1 + self.k2
    }

    /// Connected kernel K(p1, p2; k1, k2) multiplying δ(p1+p2−E).
    pub fn connected(&self, p1: f64, p2: f64) -> Result<C64> {
        let (k1, k2) = (self.k1, self.k2);
        match &self.eval {
            KernelEval::TwoLevel { gamma } => {
                let g = *gamma;
                let e = k1 + k2;
                let den = C64::new(p1, g) * C64::new(p2, g) * C64::new(k1, g) * C64::new(k2, g);
                Ok(I * g * g / PI * C64::new(e, 2.0 * g) / den)
            }
            KernelEval::Jc { g, gamma } => {
                let e = C64::new(k1 + k2, 0.0);
                let (g2, gi) = (g * g, I * gamma);
                let d = |k: f64| C64::new(k, *gamma) * k - g2;
                let num = (e + gi) * (e * (e + 2.0 * gi) - 4.0 * g2);
                let den = ((e + gi) * (e + 2.0 * gi) - 2.0 * g2) * d(k1) * d(k2) * d(p1) * d(p2);
                Ok(I * gamma * gamma / PI * g2 * g2 * num / den)
            }
            KernelEval::Generic(k) => {
                let (c1, c2) = self.channel.legs();
                let p = &k.problem;
                let a1 = p.u_out(c1, p1)?;
                let a2 = p.u_out(c2, p2)?;
                let mut sum = ZERO;
                for (i, &(a, b)) in p.pairs.iter().enumerate() {
                    sum += (a1[a] * a2[b] + a2[a] * a1[b]) * k.tw[i];
                }
                Ok(-I / (2.0 * PI) * sum)
            }
        }
    }

    /// Connected kernel on the energy shell, p1 = E/2 + q, p2 = E/2 − q.
    pub fn connected_relative(&self, q: f64) -> Result<C64> {
        let h = 0.5 * self.energy();
        self.connected(h + q, h - q)
    }
}

pub fn s2_two_level(k1: f64, k2: f64, gamma: f64) -> TwoPhotonKernel {
    let (r1, r2) = (rt_two_level(k1, gamma).r, rt_two_level(k2, gamma).r);
    TwoPhotonKernel {
        channel: PairChannel::Reflected,
        k1,
        k2,
        disconnected: (r1 * r2, r1 * r2),
        eval: KernelEval::TwoLevel { gamma },
    }
}

pub fn s2_jc(k1: f64, k2: f64, g: f64, gamma: f64) -> TwoPhotonKernel {
    let (r1, r2) = (rt_jc(k1, g, gamma).r, rt_jc(k2, g, gamma).r);
    TwoPhotonKernel {
        channel: PairChannel::Reflected,
        k1,
        k2,
        disconnected: (r1 * r2, r1 * r2),
        eval: KernelEval::Jc { g, gamma },
    }
}

/// Kernel assembled from bubble → T-matrix → vertices, for any model.
pub fn s2_generic(problem: &Arc<PairProblem>, channel: PairChannel, k1: f64, k2: f64) -> Result<TwoPhotonKernel> {
    let t = problem.tmatrix(C64::new(k1 + k2, 0.0))?;
    s2_with_tmatrix(problem, &t, channel, k1, k2)
}

/// Same as [`s2_generic`] with a precomputed T(k1 + k2).
pub fn s2_with_tmatrix(
    problem: &Arc<PairProblem>,
    t: &PairBasisOperator,
    channel: PairChannel,
    k1: f64,
    k2: f64,
) -> Result<TwoPhotonKernel> {
    let u1 = problem.u_in(k1)?;
    let u2 = problem.u_in(k2)?;
    let w = problem.pair_vector(&u1, &u2);
    let tw = linalg::matvec(&t.matrix, &w);
    let s = &problem.scatterer;
    let (c1, c2) = channel.legs();
    let amp = |c: Outgoing, k: f64| s.amplitude(c, k, problem.mode);
    let disconnected = (amp(c1, k1)? * amp(c2, k2)?, amp(c1, k2)? * amp(c2, k1)?);
    Ok(TwoPhotonKernel {
        channel,
        k1,
        k2,
        disconnected,
        eval: KernelEval::Generic(GenericKernel { problem: problem.clone(), tw }),
    })
}

fn require(config: &SystemConfig, models: &[Model], op: &'static str) -> Result<()> {
    if models.contains(&config.model) {
        Ok(())
    } else {
        Err(Error::UnsupportedModel { op, model: config.model.name() })
    }
}

/// Reflected pair from an array of two-level emitters.
pub fn s2_array(config: &SystemConfig, k1: f64, k2: f64, mode: Mode) -> Result<TwoPhotonKernel> {
    require(config, &[Model::TwoLevel, Model::TwoLevelArray], "s2_array")?;
    let p = Arc::new(PairProblem::new(config, mode)?);
    s2_generic(&p, PairChannel::Reflected, k1, k2)
}

/// Reflected pair from an emitter in front of a mirror.
pub fn s2_mirror(config: &SystemConfig, k1: f64, k2: f64, mode: Mode) -> Result<TwoPhotonKernel> {
    require(config, &[Model::MirrorTwoLevel], "s2_mirror")?;
    let p = Arc::new(PairProblem::new(config, mode)?);
    s2_generic(&p, PairChannel::Reflected, k1, k2)
}

/// Transmitted pair through a Rydberg-EIT array (Markov mode).
pub fn s2_rydberg(config: &SystemConfig, k1: f64, k2: f64) -> Result<TwoPhotonKernel> {
    require(config, &[Model::RydbergEitArray], "s2_rydberg")?;
    let p = Arc::new(PairProblem::new(config, Mode::Markov)?);
    s2_generic(&p, PairChannel::Transmitted, k1, k2)
}

#[derive(Debug, Clone)]
enum WfEval {
    TwoLevel { gamma: f64, coef: C64 },
    Jc { lp: C64, lm: C64, pref: C64 },
    Residue { eps: Vec<C64>, weights: CMat },
}

/// ψ(x_c, x) = e^{iE x_c} [s1 s2 cos(k x) + ψ_c(x)] for one outgoing channel
/// pair, with k the relative momentum of the incoming photons.
#[derive(Debug, Clone)]
pub struct PairWavefunction {
    pub channel: PairChannel,
    pub energy: f64,
    pub relative_momentum: f64,
    /// s_α(k1) s_α(k2).
    pub product: C64,
    eval: WfEval,
}

impl PairWavefunction {
    /// Connected part ψ_c(x).
    pub fn connected(&self, x: f64) -> C64 {
        let ax = x.abs();
        let half = 0.5 * self.energy;
        match &self.eval {
            WfEval::TwoLevel { gamma, coef } => coef * C64::new(-gamma * ax, half * ax).exp(),
            WfEval::Jc { lp, lm, pref } => {
                let e = C64::new(self.energy, 0.0);
                let term = |s: f64, ls: C64, lms: C64| s * (e - 2.0 * ls) * (I * (half - lms) * ax).exp();
                pref * (term(1.0, *lp, *lm) + term(-1.0, *lm, *lp))
            }
            WfEval::Residue { eps, weights } => {
                let n = eps.len();
                let mut sum = ZERO;
                for m in 0..n {
                    let phase = (I * (half - eps[m]) * ax).exp();
                    let mut col = ZERO;
                    for l in 0..n {
                        col += weights[(l, m)];
                    }
                    sum += col * phase;
                }
                sum
            }
        }
    }

    pub fn value(&self, xc: f64, x: f64) -> C64 {
        let k = self.relative_momentum;
        let phase = C64::from_polar(1.0, self.energy * xc);
        phase * (self.product * (k * x).cos() + self.connected(x))
    }
}

pub fn psi2_two_level(k1: f64, k2: f64, gamma: f64) -> PairWavefunction {
    let (r1, r2) = (rt_two_level(k1, gamma).r, rt_two_level(k2, gamma).r);
    PairWavefunction {
        channel: PairChannel::Reflected,
        energy: k1 + k2,
        relative_momentum: 0.5 * (k1 - k2),
        product: r1 * r2,
        eval: WfEval::TwoLevel { gamma, coef: -r1 * r2 },
    }
}

/// Roots λ± of λ² + iΓλ − g² = 0.
pub fn jc_lambdas(g: f64, gamma: f64) -> (C64, C64) {
    let disc = (C64::new(4.0 * g * g - gamma * gamma, 0.0)).sqrt();
    let lp = 0.5 * (-I * gamma + disc);
    let lm = 0.5 * (-I * gamma - disc);
    (lp, lm)
}

pub fn psi2_jc(k1: f64, k2: f64, g: f64, gamma: f64) -> PairWavefunction {
    let (r1, r2) = (rt_jc(k1, g, gamma).r, rt_jc(k2, g, gamma).r);
    let (lp, lm) = jc_lambdas(g, gamma);
    let e = C64::new(k1 + k2, 0.0);
    let gi = I * gamma;
    let g2 = g * g;
    let d = |k: f64| C64::new(k, gamma) * k - g2;
    let den = (lp - lm) * ((e + gi) * (e + 2.0 * gi) - 2.0 * g2) * d(k1) * d(k2);
    PairWavefunction {
        channel: PairChannel::Reflected,
        energy: k1 + k2,
        relative_momentum: 0.5 * (k1 - k2),
        product: r1 * r2,
        eval: WfEval::Jc { lp, lm, pref: -gamma * gamma * g2 * g2 / den },
    }
}

/// Closed-form residue sum over the Markov spectrum for a generic kernel.
pub fn psi2_residue(kernel: &TwoPhotonKernel) -> Result<PairWavefunction> {
    let gk = match &kernel.eval {
        KernelEval::Generic(k) => k,
        _ => return Err(Error::UnsupportedModel { op: "psi2_residue", model: "closed-form kernel" }),
    };
    let p = &gk.problem;
    let sp = p.spectrum().ok_or(Error::UnsupportedMode { op: "psi2_residue", required: "Markov" })?;
    let (c1, c2) = kernel.channel.legs();
    if c1 != c2 {
        return Err(Error::InvalidConfig("coordinate wavefunctions need both photons in one channel".into()));
    }
    let n = sp.len();
    let phi = p.scatterer.vertex_out(c1, 0.0, Mode::Markov);
    let c: Vec<C64> = (0..n).map(|l| (0..n).map(|b| phi[b] * sp.chi(b, l)).sum()).collect();
    let mut v = linalg::zeros(n, n);
    for (i, &(a, b)) in p.pairs.iter().enumerate() {
        v[(a, b)] += gk.tw[i];
    }
    let winv = sp.left.adjoint().to_owned();
    let m = &winv * &v * winv.transpose();
    let e = C64::new(kernel.energy(), 0.0);
    let eps = sp.eigenvalues.clone();
    let mut weights = linalg::zeros(n, n);
    for l in 0..n {
        for mm in 0..n {
            let d = e - eps[l] - eps[mm];
            if d.norm() < 1e-10 {
                return Err(Error::DegenerateSpectrum { value: d.norm() });
            }
            weights[(l, mm)] = -0.5 * c[l] * c[mm] * (m[(l, mm)] + m[(mm, l)]) / d;
        }
    }
    let (k1, k2) = (kernel.k1, kernel.k2);
    Ok(PairWavefunction {
        channel: kernel.channel,
        energy: k1 + k2,
        relative_momentum: 0.5 * (k1 - k2),
        product: kernel.disconnected.0,
        eval: WfEval::Residue { eps, weights },
    })
}

/// Transmitted-pair wavefunction of a Rydberg-EIT array.
pub fn psi2_rydberg(config: &SystemConfig, k1: f64, k2: f64) -> Result<PairWavefunction> {
    psi2_residue(&s2_rydberg(config, k1, k2)?)
}

/// Momentum grid for the Fourier path.
#[derive(Debug, Clone, Copy)]
pub struct FftGrid {
    /// Relative momenta q ∈ [−Q, Q).
    pub half_width: f64,
    pub points: usize,
}

impl Default for FftGrid {
    fn default() -> Self {
        FftGrid { half_width: 40.0, points: 4096 }
    }
}

/// ψ sampled on x_m = mπ/Q.
#[derive(Debug, Clone)]
pub struct SampledWavefunction {
    pub energy: f64,
    pub relative_momentum: f64,
    pub product: C64,
    pub x: Vec<f64>,
    pub connected: Vec<C64>,
}

impl SampledWavefunction {
    /// ψ(0, x_m) at every grid point.
    pub fn values(&self) -> Vec<C64> {
        let k = self.relative_momentum;
        self.x.iter().zip(&self.connected).map(|(&x, &c)| self.product * (k * x).cos() + c).collect()
    }
}

/// ψ_c(x) = ½ ∫dq K(E/2+q, E/2−q) e^{iqx} by FFT, with the 1/q² tail of
/// the kernel removed analytically.
pub fn psi2_fft(kernel: &TwoPhotonKernel, grid: FftGrid, kappa: f64) -> Result<SampledWavefunction> {
    let n = grid.points;
    let q_max = grid.half_width;
    let dq = 2.0 * q_max / n as f64;
    let qs: Vec<f64> = (0..n).map(|j| -q_max + j as f64 * dq).collect();
    let values: Vec<C64> = qs.par_iter().map(|&q| kernel.connected_relative(q)).collect::<Result<_>>()?;
    let tail = 0.5 * (kernel.connected_relative(q_max)? + kernel.connected_relative(-q_max)?) * q_max * q_max;
    let mut buf: Vec<C64> = qs.iter().zip(&values).map(|(&q, &v)| v - tail / (q * q + kappa * kappa)).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let half = (n / 2) as i64;
    let mut x = Vec::with_capacity(n);
    let mut connected = Vec::with_capacity(n);
    for m in -half..half {
        let xm = PI * m as f64 / q_max;
        let idx = m.rem_euclid(n as i64) as usize;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let smooth = buf[idx] * dq * sign;
        let analytic = tail * PI / kappa * (-kappa * xm.abs()).exp();
        x.push(xm);
        connected.push(0.5 * (smooth + analytic));
    }
    let (k1, k2) = (kernel.k1, kernel.k2);
    Ok(SampledWavefunction {
        energy: k1 + k2,
        relative_momentum: 0.5 * (k1 - k2),
        product: kernel.disconnected.0,
        x,
        connected,
    })
}

/// g²(x) = |ψ(x_c, x)|² / |normalization|² on the caller grid.
pub fn g2(psi: &PairWavefunction, normalization: C64, xs: &[f64]) -> Result<Vec<f64>> {
    let n2 = normalization.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::ZeroNormalization);
    }
    Ok(xs.iter().map(|&x| psi.value(0.0, x).norm_sqr() / n2).collect())
}

/// Quadrature grid in momentum with weights.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MomentumGrid {
    /// p = center + scale·tan(u) on n midpoints of (−π/2, π/2).
    pub fn tan_mapped(n: usize, center: f64, scale: f64) -> Self {
        let du = PI / n as f64;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let u = -0.5 * PI + (i as f64 + 0.5) * du;
            let c = u.cos();
            points.push(center + scale * u.tan());
            weights.push(scale * du / (c * c));
        }
        MomentumGrid { points, weights }
    }

    pub fn uniform(n: usize, lo: f64, hi: f64) -> Self {
        let h = (hi - lo) / n as f64;
        let points = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
        MomentumGrid { points, weights: vec![h; n] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Outgoing reflected two-photon amplitude on a momentum grid.
#[derive(Debug, Clone)]
pub struct EntangledPair {
    pub grid: MomentumGrid,
    /// ψ_out(p_i, p_j).
    pub amplitude: CMat,
    /// Σ w_i w_j |ψ_out|² before renormalization.
    pub raw_norm: f64,
}

impl EntangledPair {
    /// √w_i ψ_out(p_i, p_j) √w_j scaled to unit Frobenius norm.
    pub fn weighted_normalized(&self) -> CMat {
        let s = self.raw_norm.sqrt();
        let w = &self.grid.weights;
        CMat::from_fn(self.grid.len(), self.grid.len(), |i, j| {
            self.amplitude[(i, j)] * (w[i] * w[j]).sqrt() / s
        })
    }
}

/// Two identical photons f(k1) f(k2) reflected by the mirror geometry.
///
/// ψ_out(p1,p2) = f(p1)f(p2)R(p1)R(p2) − (i/2)[u(p1)⊗u(p2) + u(p2)⊗u(p1)]ᵀ T(E) F2(E),
/// with F2(E) = ∫dq/2π f(E/2+q)f(E/2−q) u_in(E/2+q)⊗u_in(E/2−q) by adaptive
/// quadrature.
pub fn entangled_pair(config: &SystemConfig, f: &Wavepacket, grid: &MomentumGrid, mode: Mode) -> Result<EntangledPair> {
    require(config, &[Model::MirrorTwoLevel], "entangled_pair")?;
    if f.direction != crate::config::Direction::Right || !(f.width_rate > 0.0) {
        return Err(Error::InvalidConfig("the mirror is probed by a right-moving packet of positive width".into()));
    }
    let problem = Arc::new(PairProblem::new(config, mode)?);
    let n = grid.len();
    let s = &problem.scatterer;
    let mut refl = Vec::with_capacity(n);
    let mut uout = Vec::with_capacity(n);
    for &p in &grid.points {
        refl.push(s.amplitude(Outgoing::Reflected, p, mode)?);
        uout.push(problem.u_out(Outgoing::Reflected, p)?);
    }
    let mut pairs_e: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i..n {
            pairs_e.push((i, j));
        }
    }
    let scale = s.rate_scale().max(f.width_rate);
    // pair energies repeat on regular grids; solve once per distinct E
    let mut energies: Vec<f64> = pairs_e.iter().map(|&(i, j)| grid.points[i] + grid.points[j]).collect();
    energies.sort_by(f64::total_cmp);
    let tol = 1e-12 * energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    energies.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let solved: Vec<Vec<C64>> = energies
        .par_iter()
        .map(|&e| {
            let t = problem.tmatrix(C64::new(e, 0.0))?;
            let f2 = pair_overlap(&problem, f, e, scale)?;
            Ok(linalg::matvec(&t.matrix, &f2))
        })
        .collect::<Result<_>>()?;
    let lookup = |e: f64| {
        let k = energies.partition_point(|&x| x < e - tol);
        &solved[k.min(energies.len() - 1)]
    };
    let connected: Vec<C64> = pairs_e
        .iter()
        .map(|&(i, j)| {
            let tf = lookup(grid.points[i] + grid.points[j]);
            let mut sum = ZERO;
            for (r, &(a, b)) in problem.pairs.iter().enumerate() {
                sum += (uout[i][a] * uout[j][b] + uout[j][a] * uout[i][b]) * tf[r];
            }
            -0.5 * I * sum
        })
        .collect();
    let mut amplitude = linalg::zeros(n, n);
    for (idx, &(i, j)) in pairs_e.iter().enumerate() {
        let (pi, pj) = (grid.points[i], grid.points[j]);
        let v = f.amplitude(pi) * f.amplitude(pj) * refl[i] * refl[j] + connected[idx];
        amplitude[(i, j)] = v;
        amplitude[(j, i)] = v;
    }
    let mut raw_norm = 0.0;
    for i in 0..n {
        for j in 0..n {
            raw_norm += grid.weights[i] * grid.weights[j] * amplitude[(i, j)].norm_sqr();
        }
    }
    Ok(EntangledPair { grid: grid.clone(), amplitude, raw_norm })
}

/// F2(E) on the interaction support.
fn pair_overlap(problem: &PairProblem, f: &Wavepacket, e: f64, scale: f64) -> Result<Vec<C64>> {
    let m = problem.pairs.len();
    let h = 0.5 * e;
    let integrand = |q: f64, out: &mut [C64]| {
        let (ka, kb) = (h + q, h - q);
        let ff = f.amplitude(ka) * f.amplitude(kb) / (2.0 * PI);
        match (problem.u_in(ka), problem.u_in(kb)) {
            (Ok(ua), Ok(ub)) => {
                for (r, &(a, b)) in problem.pairs.iter().enumerate() {
                    out[r] = ff * ua[a] * ub[b];
                }
            }
            _ => out.iter_mut().for_each(|z| *z = C64::new(f64::NAN, f64::NAN)),
        }
    };
    let marks = [-h, h];
    let opts = QuadOptions { rel_tol: 1e-8, abs_tol: 1e-16, max_intervals: 20_000 };
    let v = quad::integrate_real_line_marked(integrand, 0.0, scale, &marks, f.width_rate, m, opts)?;
    if v.iter().any(|z| !z.re.is_finite()) {
        return Err(Error::SingularResolvent { re: h, im: 0.0 });
    }
    Ok(v)
}

/// S = −Σ λ² ln λ² from the singular values of a weighted, normalized
/// two-photon amplitude matrix.
pub fn von_neumann_entropy(psi: &CMat) -> Result<f64> {
    let mut norm = 0.0;
    for j in 0..psi.ncols() {
        for i in 0..psi.nrows() {
            norm += psi[(i, j)].norm_sqr();
        }
    }
    if (norm.sqrt() - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { norm: norm.sqrt() });
    }
    let sv = linalg::singular_values(psi)?;
    let mut s = 0.0;
    for l in sv {
        let p = l * l;
        if p > 0.0 {
            s -= p * p.ln();
        }
    }
    Ok(s.max(0.0))
}
