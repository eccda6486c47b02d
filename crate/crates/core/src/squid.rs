//! Physics model of the SQUID-terminated transmission line.
//!
//! The SQUID is treated as a flux-tunable Josephson inductance
//! `L_J = Φ0/(2π I_c |cos(πΦ/Φ0)|)` terminating a line of impedance `Z0`,
//! i.e. a lossless movable mirror with reflection phase
//! `θ = −2 arctan(ω L_J/Z0)` and effective position `L_eff = L_J v_line/Z0`.
//! Pumping the flux sinusoidally modulates the mirror; the harmonic content
//! of the modulated boundary quantifies how much pair production leaks into
//! unentangled photons from higher effective pump tones.
//!
//! Two constants in [`SquidParams`] are calibrated to the measured operating
//! point rather than derived: `np_scale` (absolute photon spectral density
//! per unit mirror modulation) and `harmonic_pollution_weight` (photon yield
//! of harmonics k ≥ 2 relative to the fundamental).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{FLUX_QUANTUM, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Flux values whose cosine falls below this are treated as singular.
const COS_TOL: f64 = 1e-6;

/// Static SQUID and line parameters. Defaults are the measured device values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SquidParams {
    /// Critical current (A).
    pub i_c_amps: f64,
    /// Flux quantum (Wb).
    pub phi0_wb: f64,
    /// Line impedance (Ω).
    pub z0_ohm: f64,
    /// Phase velocity of the line (m/s).
    pub v_line_m_per_s: f64,
    /// Normal-state (high-bias) resistance (Ω).
    pub r_ohm: f64,
    /// Superconducting gap voltage (V).
    pub v_gap_v: f64,
    /// Calibrated scale on the peak photon spectral density.
    #[serde(default = "default_np_scale")]
    pub np_scale: f64,
    /// Calibrated photon-yield weight of harmonics k ≥ 2 in the purity ratio.
    #[serde(default = "default_pollution_weight")]
    pub harmonic_pollution_weight: f64,
    /// Central-difference step for flux derivatives (units of Φ0).
    #[serde(default = "default_derivative_step")]
    pub derivative_step_phi0: f64,
    /// Samples per pump period for the harmonic decomposition.
    #[serde(default = "default_period_samples")]
    pub period_samples: usize,
}

fn default_np_scale() -> f64 {
    NP_SCALE_CALIBRATED
}
fn default_pollution_weight() -> f64 {
    POLLUTION_WEIGHT_CALIBRATED
}
fn default_derivative_step() -> f64 {
    1e-4
}
fn default_period_samples() -> usize {
    4096
}

/// Calibrated so the simulated squeezing/amplification at the
/// Φ_AC = 15 mΦ0, Φ_DC = −0.41 Φ0 operating point reproduce the measured
/// −0.09 dB / +0.25 dB with the measured chain losses and noise.
pub const NP_SCALE_CALIBRATED: f64 = 8.2837;
/// See [`NP_SCALE_CALIBRATED`]; fixed jointly with it.
pub const POLLUTION_WEIGHT_CALIBRATED: f64 = 6.165e5;

impl Default for SquidParams {
    fn default() -> Self {
        SquidParams {
            i_c_amps: 3.4e-6,
            phi0_wb: FLUX_QUANTUM,
            z0_ohm: 50.0,
            v_line_m_per_s: 1.2e8,
            r_ohm: 69.7,
            v_gap_v: 360e-6,
            np_scale: NP_SCALE_CALIBRATED,
            harmonic_pollution_weight: POLLUTION_WEIGHT_CALIBRATED,
            derivative_step_phi0: 1e-4,
            period_samples: 4096,
        }
    }
}

impl SquidParams {
    pub fn validate(&self) -> Result<()> {
        if self.i_c_amps <= 0.0
            || self.z0_ohm <= 0.0
            || self.r_ohm <= 0.0
            || self.phi0_wb <= 0.0
        {
            return Err(Error::Config("SQUID parameters must be positive".into()));
        }
        if self.v_line_m_per_s <= 0.0 || self.v_line_m_per_s > SPEED_OF_LIGHT {
            return Err(Error::Config(format!(
                "v_line = {} m/s outside (0, c]",
                self.v_line_m_per_s
            )));
        }
        Ok(())
    }
}

/// Flux-pump working point: static flux, pump amplitude (both in units of
/// Φ0), pump frequency and the detection frequency pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PumpConfig {
    pub phi_dc_phi0: f64,
    pub phi_ac_phi0: f64,
    pub f_p_hz: f64,
    pub f_minus_hz: f64,
    pub f_plus_hz: f64,
}

impl PumpConfig {
    /// Measured working point: Φ_DC = −0.41 Φ0, f_p = 8.9 GHz, detection at
    /// 4.1 and 4.8 GHz.
    pub fn paper_point(phi_ac_phi0: f64) -> Self {
        PumpConfig {
            phi_dc_phi0: -0.41,
            phi_ac_phi0,
            f_p_hz: 8.9e9,
            f_minus_hz: 4.1e9,
            f_plus_hz: 4.8e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.f_plus_hz + self.f_minus_hz - self.f_p_hz).abs() > 1.0 {
            return Err(Error::Config(format!(
                "f+ + f- = {} does not match f_p = {} within 1 Hz",
                self.f_plus_hz + self.f_minus_hz,
                self.f_p_hz
            )));
        }
        if !(0.0 < self.f_minus_hz && self.f_minus_hz < self.f_plus_hz && self.f_plus_hz < self.f_p_hz)
        {
            return Err(Error::Config(
                "detection frequencies must satisfy 0 < f- < f+ < f_p".into(),
            ));
        }
        if self.phi_dc_phi0.abs() >= 0.5 {
            return Err(Error::Config(format!(
                "|Phi_DC| = {} must be < 0.5 Phi0",
                self.phi_dc_phi0.abs()
            )));
        }
        if self.phi_ac_phi0 < 0.0 {
            return Err(Error::Config("Phi_AC must be >= 0".into()));
        }
        Ok(())
    }
}

/// Fourier coefficients of the time-dependent inverse inductance at
/// harmonics 0..K of the pump frequency.
#[derive(Clone, Debug)]
pub struct HarmonicSpectrum {
    /// Coefficient at harmonic 0.
    pub dc_term: f64,
    /// Complex coefficients at harmonics 1..K.
    pub amplitudes: Vec<Complex64>,
}

impl HarmonicSpectrum {
    pub fn magnitude(&self, k: usize) -> f64 {
        if k == 0 {
            self.dc_term.abs()
        } else {
            self.amplitudes[k - 1].norm()
        }
    }
}

/// Josephson inductance `L_J = Φ0/(2π I_c |cos(πΦ)|)` (H); Φ in units of Φ0.
pub fn josephson_inductance(phi: f64, p: &SquidParams) -> Result<f64> {
    let c = (std::f64::consts::PI * phi).cos().abs();
    if c <= COS_TOL {
        return Err(Error::SingularInductance { phi });
    }
    Ok(p.phi0_wb / (2.0 * std::f64::consts::PI * p.i_c_amps * c))
}

/// Reflection phase of the lossless mirror, `θ = −2 arctan(2π f L_J/Z0)`
/// (rad). The reflection magnitude is identically 1 in this model.
pub fn reflection_phase(f_hz: f64, phi: f64, p: &SquidParams) -> Result<f64> {
    let lj = josephson_inductance(phi, p)?;
    Ok(-2.0 * (2.0 * std::f64::consts::PI * f_hz * lj / p.z0_ohm).atan())
}

/// Effective mirror position `L_eff = L_J v_line/Z0` (m).
fn effective_length(phi: f64, p: &SquidParams) -> Result<f64> {
    Ok(josephson_inductance(phi, p)? * p.v_line_m_per_s / p.z0_ohm)
}

/// Central-difference derivative of L_eff with respect to flux (m per Φ0).
fn d_leff_d_phi(phi: f64, p: &SquidParams) -> Result<f64> {
    let h = p.derivative_step_phi0;
    let up = effective_length(phi + h, p)?;
    let down = effective_length(phi - h, p)?;
    Ok((up - down) / (2.0 * h))
}

/// Peak effective speed of the boundary condition relative to the speed of
/// light: `v = 2π f_p Φ_AC |dL_eff/dΦ|` evaluated at Φ_DC.
pub fn effective_mirror_speed(cfg: &PumpConfig, p: &SquidParams) -> Result<f64> {
    cfg.validate()?;
    check_modulation_range(cfg)?;
    let slope = d_leff_d_phi(cfg.phi_dc_phi0, p)?.abs();
    let v = 2.0 * std::f64::consts::PI * cfg.f_p_hz * cfg.phi_ac_phi0 * slope;
    Ok(v / SPEED_OF_LIGHT)
}

fn check_modulation_range(cfg: &PumpConfig) -> Result<()> {
    let lo = cfg.phi_dc_phi0 - cfg.phi_ac_phi0;
    let hi = cfg.phi_dc_phi0 + cfg.phi_ac_phi0;
    for phi in [lo, hi] {
        if (std::f64::consts::PI * phi).cos().abs() <= COS_TOL {
            return Err(Error::SingularInductance { phi });
        }
    }
    // L_J diverges at every half-integer flux; reject a modulation whose
    // swept interval contains one, not just singular endpoints
    let first = (lo - 0.5).ceil();
    if first + 0.5 <= hi {
        return Err(Error::SingularInductance { phi: first + 0.5 });
    }
    Ok(())
}

/// Fourier coefficients of `1/L_J(Φ_DC + Φ_AC sin(2π f_p t))` over one pump
/// period, harmonics 0..K (trapezoidal quadrature on a uniform grid).
pub fn harmonic_decomposition(
    cfg: &PumpConfig,
    p: &SquidParams,
    harmonics: usize,
) -> Result<HarmonicSpectrum> {
    if harmonics < 2 {
        return Err(Error::Domain(format!(
            "harmonic count {harmonics} must be >= 2"
        )));
    }
    cfg.validate()?;
    let n = p.period_samples;
    let mut signal = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / n as f64;
        let phi = cfg.phi_dc_phi0
            + cfg.phi_ac_phi0 * (2.0 * std::f64::consts::PI * t).sin();
        signal.push(1.0 / josephson_inductance(phi, p)?);
    }
    // uniform grid over a full period: the trapezoid rule reduces to the mean
    let dc_term = signal.iter().sum::<f64>() / n as f64;
    let mut amplitudes = Vec::with_capacity(harmonics);
    for k in 1..=harmonics {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, s) in signal.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * k as f64 * i as f64 / n as f64;
            acc += s * Complex64::new(angle.cos(), angle.sin());
        }
        amplitudes.push(acc / n as f64);
    }
    Ok(HarmonicSpectrum { dc_term, amplitudes })
}

/// Fraction of pair production attributable to the fundamental pump tone:
/// `|a1|² / (|a1|² + w Σ_{k≥2} |a_k|²)` with `w` the calibrated
/// harmonic-pollution weight.
pub fn dce_purity(cfg: &PumpConfig, p: &SquidParams) -> Result<f64> {
    dce_purity_k(cfg, p, 8)
}

/// [`dce_purity`] with an explicit harmonic count (must be ≥ 4).
pub fn dce_purity_k(cfg: &PumpConfig, p: &SquidParams, harmonics: usize) -> Result<f64> {
    if harmonics < 4 {
        return Err(Error::Domain(format!(
            "dce_purity needs >= 4 harmonics, got {harmonics}"
        )));
    }
    let spec = harmonic_decomposition(cfg, p, harmonics)?;
    let fundamental = spec.magnitude(1).powi(2);
    let higher: f64 = (2..=harmonics).map(|k| spec.magnitude(k).powi(2)).sum();
    let total = fundamental + p.harmonic_pollution_weight * higher;
    if total == 0.0 {
        // no modulation at all: a perfectly linear (empty) response
        return Ok(1.0);
    }
    Ok(fundamental / total)
}

/// Peak photon spectral density `n_p = s (δL_eff ω_p / (2 v_line))²`
/// (photons s⁻¹ Hz⁻¹), with `δL_eff = Φ_AC |dL_eff/dΦ|` at Φ_DC and `s` the
/// calibrated scale. Quadratic in Φ_AC in the linear regime.
pub fn dce_peak_density(cfg: &PumpConfig, p: &SquidParams) -> Result<f64> {
    cfg.validate()?;
    check_modulation_range(cfg)?;
    let delta_l = cfg.phi_ac_phi0 * d_leff_d_phi(cfg.phi_dc_phi0, p)?.abs();
    let omega = 2.0 * std::f64::consts::PI * cfg.f_p_hz;
    let raw = (delta_l * omega / (2.0 * p.v_line_m_per_s)).powi(2);
    Ok(p.np_scale * raw)
}

/// Stewart-McCumber damping parameter `β_C ≈ 4 I_c/(π I_r)` from the
/// critical and retrapping currents.
pub fn beta_c(i_c: f64, i_r: f64) -> Result<f64> {
    if i_r <= 0.0 {
        return Err(Error::Domain(format!("retrapping current {i_r} <= 0")));
    }
    Ok(4.0 * i_c / (std::f64::consts::PI * i_r))
}

/// Result of the DC current-voltage characterization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IvFit {
    /// High-bias (normal) resistance (Ω).
    pub r_ohm: f64,
    /// Gap voltage: largest |V| below the resistive branch (V).
    pub v_gap_v: f64,
    /// Critical current: largest |I| with V at zero (A).
    pub i_c_amps: f64,
}

/// Default gap threshold separating the resistive branch (V).
pub const IV_GAP_THRESHOLD: f64 = 360e-6;
/// Voltages below this count as the supercurrent branch (V).
pub const IV_ZERO_TOL: f64 = 1e-6;

/// Fit the high-bias resistive branch of an IV curve.
///
/// Points with |V| above `gap_threshold` are fit with a least-squares line
/// per bias sign; the slope is the normal resistance. The gap voltage is the
/// largest |V| that stays below the resistive branch, and the critical
/// current the largest |I| with |V| within [`IV_ZERO_TOL`] of zero.
pub fn iv_fit(points: &[(f64, f64)], gap_threshold: f64) -> Result<IvFit> {
    let resistive: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(_, v)| v.abs() > gap_threshold)
        .collect();
    if resistive.len() < 2 {
        return Err(Error::Fit(format!(
            "only {} points on the resistive branch (need >= 2)",
            resistive.len()
        )));
    }

    let mut slopes = Vec::new();
    for sign in [1.0, -1.0] {
        let branch: Vec<(f64, f64)> = resistive
            .iter()
            .copied()
            .filter(|&(_, v)| v * sign > 0.0)
            .collect();
        if branch.len() >= 2 {
            slopes.push((branch.len() as f64, line_slope(&branch)?));
        }
    }
    if slopes.is_empty() {
        return Err(Error::Fit("no bias branch with >= 2 resistive points".into()));
    }
    let total: f64 = slopes.iter().map(|(w, _)| w).sum();
    let r = slopes.iter().map(|(w, s)| w * s).sum::<f64>() / total;

    let v_gap = points
        .iter()
        .filter(|&&(_, v)| v.abs() <= gap_threshold)
        .map(|&(_, v)| v.abs())
        .fold(0.0, f64::max);
    let i_c = points
        .iter()
        .filter(|&&(_, v)| v.abs() <= IV_ZERO_TOL)
        .map(|&(i, _)| i.abs())
        .fold(0.0, f64::max);

    Ok(IvFit {
        r_ohm: r,
        v_gap_v: v_gap,
        i_c_amps: i_c,
    })
}

fn line_slope(points: &[(f64, f64)]) -> Result<f64> {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::Fit("degenerate current values in IV fit".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}
