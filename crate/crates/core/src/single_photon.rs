//! Single-photon reflection and transmission amplitudes.

use crate::config::{Mode, Model, SystemConfig};
use crate::error::{Error, Result};
use crate::greens::{Outgoing, Scatterer};
use crate::linalg::{self, cis, I};
use num_complex::Complex64 as C64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RTPoint {
    pub k: f64,
    pub r: C64,
    pub t: C64,
}

impl RTPoint {
    /// |r|² + |t|² − 1; zero for lossless exact scattering.
    pub fn flux_deviation(&self) -> f64 {
        self.r.norm_sqr() + self.t.norm_sqr() - 1.0
    }
}

pub fn rt_two_level(k: f64, gamma: f64) -> RTPoint {
    let den = C64::new(k, gamma);
    RTPoint { k, r: -I * gamma / den, t: C64::new(k, 0.0) / den }
}

pub fn rt_jc(k: f64, g: f64, gamma: f64) -> RTPoint {
    let den = C64::new(k, gamma) * k - g * g;
    RTPoint { k, r: -I * gamma * k / den, t: C64::new(k * k - g * g, 0.0) / den }
}

impl Scatterer {
    /// Amplitude bg − i φ_out(k)ᵀ G(k) φ_in(k) of one outgoing channel.
    pub fn amplitude(&self, channel: Outgoing, k: f64, mode: Mode) -> Result<C64> {
        let g = self.green(C64::new(k, 0.0), mode)?;
        Ok(self.amplitude_with(&g, channel, k, mode))
    }

    pub(crate) fn amplitude_with(&self, g: &linalg::CMat, channel: Outgoing, k: f64, mode: Mode) -> C64 {
        let vin = self.vertex_in(k, mode);
        let vout = self.vertex_out(channel, k, mode);
        self.background(channel) - I * linalg::dot(&vout, &linalg::matvec(g, &vin))
    }

    pub fn rt(&self, k: f64, mode: Mode) -> Result<RTPoint> {
        let g = self.green(C64::new(k, 0.0), mode)?;
        Ok(RTPoint {
            k,
            r: self.amplitude_with(&g, Outgoing::Reflected, k, mode),
            t: self.amplitude_with(&g, Outgoing::Transmitted, k, mode),
        })
    }
}

/// Generic single-photon amplitudes for any model.
pub fn rt(config: &SystemConfig, k: f64, mode: Mode) -> Result<RTPoint> {
    Scatterer::new(config)?.rt(k, mode)
}

fn require(config: &SystemConfig, models: &[Model], op: &'static str) -> Result<()> {
    if models.contains(&config.model) {
        Ok(())
    } else {
        Err(Error::UnsupportedModel { op, model: config.model.name() })
    }
}

/// Two-level array (a single emitter counts as N = 1).
pub fn rt_array(config: &SystemConfig, k: f64, mode: Mode) -> Result<RTPoint> {
    require(config, &[Model::TwoLevel, Model::TwoLevelArray], "rt_array")?;
    rt(config, k, mode)
}

/// Reflection amplitude of the emitter–mirror system at momentum k.
///
/// In the exact-limit mode the closed form of a perfect mirror is used;
/// otherwise the two-port Green function with finite Γ_b.
pub fn rt_mirror(config: &SystemConfig, k: f64) -> Result<C64> {
    require(config, &[Model::MirrorTwoLevel], "rt_mirror")?;
    let s = Scatterer::new(config)?;
    let m = s.config.mirror_block();
    if m.exact_limit() {
        let gamma = s.config.gamma0();
        let gf = s.config.gamma_f_i(0);
        let dist = -m.x0;
        let theta = s.config.carrier_phase(dist) + k * dist;
        let num = C64::new(k, -gamma + gf) + I * gamma * cis(-2.0 * theta);
        let den = C64::new(k, gamma + gf) - I * gamma * cis(2.0 * theta);
        if gf == 0.0 {
            return Ok(-num / den);
        }
        return s.amplitude(Outgoing::Reflected, k, Mode::Exact);
    }
    s.amplitude(Outgoing::Reflected, k, Mode::Exact)
}

pub fn rt_eit_array(config: &SystemConfig, k: f64, mode: Mode) -> Result<RTPoint> {
    require(config, &[Model::RydbergEitArray], "rt_eit_array")?;
    rt(config, k, mode)
}

/// `rt` on a caller-supplied momentum grid.
pub fn rt_grid(config: &SystemConfig, ks: &[f64], mode: Mode) -> Result<Vec<RTPoint>> {
    let s = Scatterer::new(config)?;
    ks.iter().map(|&k| s.rt(k, mode)).collect()
}
