//! System configuration, wavepackets and channels.
//!
//! Units: c = 1, hbar = 1, rates in units of the waveguide decay rate
//! unless stated otherwise. Momenta are detunings from the carrier k0, so
//! the carrier only ever appears through phases k0 |x_i - x_j|.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Value substituted for infinite rates and hardcore scales.
pub const REGULARIZATION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    TwoLevel,
    JaynesCummings,
    TwoLevelArray,
    MirrorTwoLevel,
    RydbergEitArray,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::TwoLevel => "TwoLevel",
            Model::JaynesCummings => "JaynesCummings",
            Model::TwoLevelArray => "TwoLevelArray",
            Model::MirrorTwoLevel => "MirrorTwoLevel",
            Model::RydbergEitArray => "RydbergEitArray",
        }
    }
}

/// Exact keeps the frequency dependence of the propagation phases,
/// Markov freezes them at the carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Exact,
    Markov,
}

/// A scalar shared by all emitters or one value per emitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEmitter {
    Uniform(f64),
    List(Vec<f64>),
}

impl PerEmitter {
    pub fn get(&self, i: usize) -> f64 {
        match self {
            PerEmitter::Uniform(v) => *v,
            PerEmitter::List(v) => v[i],
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            PerEmitter::Uniform(v) => vec![*v],
            PerEmitter::List(v) => v.clone(),
        }
    }
}

impl Default for PerEmitter {
    fn default() -> Self {
        PerEmitter::Uniform(0.0)
    }
}

/// A non-negative number that may also be written as the string "inf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn value(self) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_infinite() && v > 0.0 => Ok(Extended::Infinite),
            Raw::Num(v) => Ok(Extended::Finite(v)),
            Raw::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(Extended::Infinite),
                other => other
                    .parse::<f64>()
                    .map(Extended::Finite)
                    .map_err(|_| serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcBlock {
    pub g: f64,
    #[serde(default)]
    pub delta_c: f64,
    #[serde(default)]
    pub delta_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorBlock {
    pub x0: f64,
    pub gamma_b: Extended,
    /// Use the closed Γ_b → ∞ algebra instead of the regularized rate.
    /// Defaults to true exactly when `gamma_b` was given as "inf".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_limit: Option<bool>,
}

impl MirrorBlock {
    pub fn exact_limit(&self) -> bool {
        self.exact_limit.unwrap_or(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InteractionLaw {
    /// U_ij = C for every pair.
    Uniform,
    /// U_ij = C3 / |i - j|^3.
    Dipolar,
    /// U_ij = C6 / |i - j|^6.
    VanDerWaals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub law: InteractionLaw,
    pub coefficient: f64,
}

impl Interaction {
    /// Interaction energy between Rydberg excitations on sites i != j.
    /// Distances are measured in lattice sites.
    pub fn energy(&self, i: usize, j: usize) -> f64 {
        let r = i.abs_diff(j) as f64;
        match self.law {
            InteractionLaw::Uniform => self.coefficient,
            InteractionLaw::Dipolar => self.coefficient / r.powi(3),
            InteractionLaw::VanDerWaals => self.coefficient / r.powi(6),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RydbergBlock {
    pub omega: f64,
    #[serde(default)]
    pub delta_e: f64,
    #[serde(default)]
    pub delta_s: Option<f64>,
    pub u0: Extended,
    pub interaction: Interaction,
    /// Use the exact hardcore algebra instead of the regularized U0.
    /// Defaults to true exactly when `u0` was given as "inf".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_limit: Option<bool>,
}

impl RydbergBlock {
    pub fn delta_s(&self) -> f64 {
        self.delta_s.unwrap_or(0.0)
    }

    pub fn exact_limit(&self) -> bool {
        self.exact_limit.unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub model: Model,
    pub gamma: PerEmitter,
    #[serde(default)]
    pub gamma_f: PerEmitter,
    /// Carrier wavenumber. May be omitted for lattices when `k0d` is given.
    #[serde(default)]
    pub k0: Option<f64>,
    /// Carrier phase per lattice spacing, k0 d mod 2π. Phases are built
    /// from this value when present so they stay exact for large k0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0d: Option<f64>,
    #[serde(default)]
    pub positions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jc: Option<JcBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror: Option<MirrorBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rydberg: Option<RydbergBlock>,
}

impl SystemConfig {
    pub fn two_level(gamma: f64) -> Self {
        SystemConfig {
            model: Model::TwoLevel,
            gamma: PerEmitter::Uniform(gamma),
            gamma_f: PerEmitter::Uniform(0.0),
            k0: Some(0.0),
            k0d: None,
            positions: vec![0.0],
            jc: None,
            mirror: None,
            rydberg: None,
        }
    }

    /// Uniform array of `n` two-level emitters with spacing `d` and carrier
    /// phase `k0d` per spacing.
    pub fn array(n: usize, gamma: f64, gamma_f: f64, d: f64, k0d: f64) -> Self {
        SystemConfig {
            model: Model::TwoLevelArray,
            gamma: PerEmitter::Uniform(gamma),
            gamma_f: PerEmitter::Uniform(gamma_f),
            k0: None,
            k0d: Some(k0d),
            positions: (0..n).map(|i| i as f64 * d).collect(),
            jc: None,
            mirror: None,
            rydberg: None,
        }
    }

    pub fn jaynes_cummings(gamma: f64, g: f64) -> Self {
        SystemConfig {
            model: Model::JaynesCummings,
            jc: Some(JcBlock { g, delta_c: 0.0, delta_e: 0.0 }),
            ..Self::two_level(gamma)
        }
    }

    pub fn mirror(gamma: f64, x0: f64, k0: f64, gamma_b: Extended) -> Self {
        SystemConfig {
            model: Model::MirrorTwoLevel,
            k0: Some(k0),
            positions: vec![],
            mirror: Some(MirrorBlock { x0, gamma_b, exact_limit: None }),
            ..Self::two_level(gamma)
        }
    }

    pub fn rydberg(n: usize, gamma: f64, gamma_f: f64, d: f64, k0d: f64, block: RydbergBlock) -> Self {
        SystemConfig {
            model: Model::RydbergEitArray,
            rydberg: Some(block),
            ..Self::array(n, gamma, gamma_f, d, k0d)
        }
    }

    /// Number of emitters (sites). The mirror model has one.
    pub fn n_sites(&self) -> usize {
        match self.model {
            Model::MirrorTwoLevel => 1,
            _ => self.positions.len(),
        }
    }

    pub fn gamma_i(&self, i: usize) -> f64 {
        self.gamma.get(i)
    }

    pub fn gamma_f_i(&self, i: usize) -> f64 {
        self.gamma_f.get(i)
    }

    /// Uniform waveguide rate, or the first one for per-emitter lists.
    pub fn gamma0(&self) -> f64 {
        self.gamma.get(0)
    }

    pub fn spacing(&self) -> Option<f64> {
        if self.positions.len() >= 2 {
            Some(self.positions[1] - self.positions[0])
        } else {
            None
        }
    }

    pub fn k0(&self) -> f64 {
        match (self.k0, self.k0d, self.spacing()) {
            (Some(k0), _, _) => k0,
            (None, Some(k0d), Some(d)) => k0d / d,
            _ => 0.0,
        }
    }

    /// Carrier phase k0 |x| reduced to [0, 2π) for a separation between two
    /// sites of a uniform lattice, or a general separation `dx`.
    pub fn carrier_phase(&self, dx: f64) -> f64 {
        if let (Some(k0d), Some(d)) = (self.k0d, self.spacing()) {
            let steps = dx / d;
            let n = steps.round();
            if (steps - n).abs() < 1e-9 {
                return (k0d * n).rem_euclid(TAU);
            }
        }
        (self.k0() * dx).rem_euclid(TAU)
    }

    /// Carrier phase k0 (x_i - x_j) between sites i and j, signed.
    pub fn site_phase(&self, i: usize, j: usize) -> f64 {
        if let Some(k0d) = self.k0d {
            return (k0d * (i as f64 - j as f64)).rem_euclid(TAU);
        }
        (self.k0() * (self.positions[i] - self.positions[j])).rem_euclid(TAU)
    }

    /// Carrier phase k0 x_i of site i measured from the origin.
    pub fn position_phase(&self, i: usize) -> f64 {
        if self.k0d.is_some() {
            return self.site_phase(i, 0);
        }
        (self.k0() * self.positions[i]).rem_euclid(TAU)
    }

    pub fn jc_block(&self) -> &JcBlock {
        self.jc.as_ref().expect("validated config carries its model block")
    }

    pub fn mirror_block(&self) -> &MirrorBlock {
        self.mirror.as_ref().expect("validated config carries its model block")
    }

    pub fn rydberg_block(&self) -> &RydbergBlock {
        self.rydberg.as_ref().expect("validated config carries its model block")
    }
}

fn check_rates(field: &'static str, rates: &PerEmitter, n: usize, strictly_positive: bool) -> Result<()> {
    if let PerEmitter::List(v) = rates {
        if v.len() != n {
            return Err(Error::InvalidConfig(format!("{field} has {} entries for {n} emitters", v.len())));
        }
    }
    for v in rates.values() {
        if !v.is_finite() {
            return Err(Error::InvalidConfig(format!("{field} must be finite")));
        }
        if v < 0.0 {
            return Err(Error::NegativeRate { field, value: v });
        }
        if strictly_positive && v == 0.0 {
            return Err(Error::InvalidConfig(format!("{field} must be positive")));
        }
    }
    Ok(())
}

fn resolve(x: Extended) -> (Extended, Option<bool>) {
    match x {
        Extended::Infinite => (Extended::Finite(REGULARIZATION), Some(true)),
        finite => (finite, None),
    }
}

/// Validate a raw configuration and return its normalized form.
///
/// Infinite Γ_b and U0 are replaced by [`REGULARIZATION`] and the block's
/// `exact_limit` flag is switched on. Calling this twice is a no-op.
pub fn validate(config: &SystemConfig) -> Result<SystemConfig> {
    let mut c = config.clone();
    if c.model == Model::TwoLevel || c.model == Model::JaynesCummings {
        if c.positions.is_empty() {
            c.positions = vec![0.0];
        }
        if c.positions.len() != 1 {
            return Err(Error::InvalidConfig(format!("{} has exactly one emitter", c.model.name())));
        }
    }
    if c.model == Model::MirrorTwoLevel {
        c.positions.clear();
    }
    let n = c.n_sites();
    if n == 0 {
        return Err(Error::InvalidConfig("no emitter positions given".into()));
    }
    check_rates("gamma", &c.gamma, n, true)?;
    check_rates("gamma_f", &c.gamma_f, n, false)?;

    for (i, w) in c.positions.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotonePositions { index: i + 1 });
        }
    }
    if let Some(&x1) = c.positions.first() {
        if x1 != 0.0 {
            return Err(Error::InvalidConfig("the first emitter sits at x = 0".into()));
        }
    }
    if let Some(d) = c.spacing() {
        for (i, w) in c.positions.windows(2).enumerate() {
            if ((w[1] - w[0]) - d).abs() > 1e-9 * d.abs().max(1e-300) {
                return Err(Error::InvalidConfig(format!("non-uniform lattice spacing at index {}", i + 1)));
            }
        }
    }
    match (c.k0, c.k0d) {
        (Some(k0), _) if !k0.is_finite() => return Err(Error::InvalidConfig("k0 must be finite".into())),
        (None, Some(_)) if c.spacing().is_none() => {
            return Err(Error::InvalidConfig("k0d needs at least two emitters".into()))
        }
        (None, None) => c.k0 = Some(0.0),
        _ => {}
    }
    if let Some(k0d) = c.k0d {
        if !k0d.is_finite() {
            return Err(Error::InvalidConfig("k0d must be finite".into()));
        }
        c.k0d = Some(k0d.rem_euclid(TAU));
        if let (Some(k0), Some(d)) = (c.k0, c.spacing()) {
            let implied = (k0 * d).rem_euclid(TAU);
            let gap = (implied - c.k0d.unwrap()).abs();
            if gap.min(TAU - gap) > 1e-6 {
                return Err(Error::InvalidConfig("k0 and k0d disagree".into()));
            }
        }
    }

    match c.model {
        Model::JaynesCummings => {
            let jc = c.jc.as_ref().ok_or(Error::MissingModelBlock { model: "JaynesCummings", block: "jc" })?;
            if !(jc.g.is_finite() && jc.delta_c.is_finite() && jc.delta_e.is_finite()) {
                return Err(Error::InvalidConfig("jc parameters must be finite".into()));
            }
        }
        Model::MirrorTwoLevel => {
            let m = c
                .mirror
                .as_mut()
                .ok_or(Error::MissingModelBlock { model: "MirrorTwoLevel", block: "mirror" })?;
            if !(m.x0 < 0.0) {
                return Err(Error::InvalidConfig("mirror.x0 must be strictly negative".into()));
            }
            if m.gamma_b.value() < 0.0 {
                return Err(Error::NegativeRate { field: "gamma_b", value: m.gamma_b.value() });
            }
            let (gb, flag) = resolve(m.gamma_b);
            m.gamma_b = gb;
            if m.exact_limit.is_none() {
                m.exact_limit = flag;
            }
        }
        Model::RydbergEitArray => {
            let r = c
                .rydberg
                .as_mut()
                .ok_or(Error::MissingModelBlock { model: "RydbergEitArray", block: "rydberg" })?;
            if r.delta_s.is_none() {
                return Err(Error::MissingModelBlock { model: "RydbergEitArray", block: "rydberg.delta_s" });
            }
            if r.u0.value() < 0.0 {
                return Err(Error::NegativeRate { field: "u0", value: r.u0.value() });
            }
            let (u0, flag) = resolve(r.u0);
            r.u0 = u0;
            if r.exact_limit.is_none() {
                r.exact_limit = flag;
            }
        }
        _ => {}
    }
    Ok(c)
}

/// Propagation direction of a photon, σ = +1 (right) or −1 (left).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn sigma(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }
}

/// An outgoing or incoming waveguide mode with momentum `k` (detuning).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub direction: Direction,
    pub k: f64,
}

impl Channel {
    /// Dispersion ε = σ k.
    pub fn energy(&self) -> f64 {
        self.direction.sigma() * self.k
    }
}

/// Single-photon Lorentzian wavepacket.
///
/// Right-moving: f(k) = √(γ/π) e^{-ik x0}/(k + iγ), a pulse whose front sits
/// at x0 at T = 0 and whose tail extends to x < x0. Left-moving packets use
/// (k − iγ) and extend to x > x0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavepacket {
    pub direction: Direction,
    pub width_rate: f64,
    pub center: f64,
}

impl Wavepacket {
    pub fn right(width_rate: f64, center: f64) -> Self {
        Wavepacket { direction: Direction::Right, width_rate, center }
    }

    pub fn left(width_rate: f64, center: f64) -> Self {
        Wavepacket { direction: Direction::Left, width_rate, center }
    }

    pub fn sigma(&self) -> f64 {
        self.direction.sigma()
    }

    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        if !(self.width_rate > 0.0 && self.width_rate.is_finite()) {
            return Err(Error::InvalidConfig("wavepacket width_rate must be positive".into()));
        }
        let first = config.positions.first().copied().unwrap_or(0.0);
        let last = config.positions.last().copied().unwrap_or(0.0);
        match self.direction {
            Direction::Right if self.center > first => {
                Err(Error::InvalidConfig("right-moving packet must start at or before the first emitter".into()))
            }
            Direction::Left if self.center < last => {
                Err(Error::InvalidConfig("left-moving packet must start at or beyond the last emitter".into()))
            }
            _ => Ok(()),
        }
    }

    /// Momentum amplitude f(k).
    pub fn amplitude(&self, k: f64) -> C64 {
        let g = self.width_rate;
        let norm = (g / PI).sqrt();
        let phase = C64::from_polar(1.0, -k * self.center);
        norm * phase / C64::new(k, self.sigma() * g)
    }

    /// Coordinate-space amplitude at T = 0, ∫dk/√(2π) f(k) e^{ikx}.
    pub fn envelope(&self, x: f64) -> C64 {
        let g = self.width_rate;
        let s = self.sigma();
        let u = s * (x - self.center);
        if u >= 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::new(0.0, -s * (2.0 * g).sqrt()) * (g * u).exp()
    }

    /// Time at which the front reaches position x.
    pub fn arrival(&self, x: f64) -> f64 {
        self.sigma() * (x - self.center)
    }
}
