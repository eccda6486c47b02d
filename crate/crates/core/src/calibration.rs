//! Shot-noise calibration of the amplifier chain.
//!
//! A DC current through the SQUID generates shot noise with a known absolute
//! spectral density, which calibrates the gain `G` and system noise
//! temperature `T_n` of the full detection chain. The model accounts for the
//! impedance mismatch between the SQUID normal resistance `R` and the line
//! impedance `Z0`:
//!
//! ```text
//! E1 = (Vs² + Vz²)/VT²,   E2 = (Vs² − Vz²)/VT²
//! S_p = G·Bw·[ VT²/(2 Z0) · (E1/tanh E1 + E2/tanh E2) + kB·T_n ]
//! ```
//!
//! with `Vs² = 2e|I|R²·Z0²/(Z0+R)²`, `VT² = 4 kB T·Z0²/(Z0+R)` and
//! `Vz² = Z0·hf/2`. The fit exploits that the model is linear in `G`: for a
//! trial `T_n` the optimal gain is closed-form, and `T_n` is found by a
//! bounded one-dimensional search.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, PLANCK};
use crate::io;
use crate::{Error, Result};

/// Fixed environment of a shot-noise sweep: device temperature, impedances
/// and the detection frequency.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShotNoiseEnv {
    /// Device temperature (K); the sample is thermalised with the fridge.
    pub t_k: f64,
    /// SQUID normal-state resistance (Ω).
    pub r_ohm: f64,
    /// Line impedance (Ω).
    pub z0_ohm: f64,
    /// Detection frequency (Hz).
    pub f_hz: f64,
}

impl ShotNoiseEnv {
    /// Measured environment at the lower detection band.
    pub fn paper_4p1_ghz() -> Self {
        ShotNoiseEnv {
            t_k: 0.01,
            r_ohm: 69.7,
            z0_ohm: 50.0,
            f_hz: 4.1e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_k <= 0.0 {
            return Err(Error::Domain(format!(
                "device temperature {} K must be > 0",
                self.t_k
            )));
        }
        if self.r_ohm <= 0.0 || self.z0_ohm <= 0.0 || self.f_hz <= 0.0 {
            return Err(Error::Domain(
                "R, Z0 and f must all be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of fitting the shot-noise model to a current sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationFit {
    /// Power gain of the chain.
    #[serde(rename = "G")]
    pub g: f64,
    /// System noise temperature referred to the device (K).
    #[serde(rename = "T_n")]
    pub t_n: f64,
    /// One-σ gain uncertainty.
    #[serde(rename = "dG")]
    pub dg: f64,
    /// One-σ noise-temperature uncertainty (K).
    #[serde(rename = "dT_n")]
    pub dt_n: f64,
    /// Detection frequency (Hz).
    #[serde(rename = "f")]
    pub f_hz: f64,
    /// Detection bandwidth (Hz).
    #[serde(rename = "Bw")]
    pub bw_hz: f64,
    /// Root-mean-square fit residual (detected units).
    pub residual_rms: f64,
    /// True when the T_n optimizer stopped at a search bound.
    #[serde(default)]
    pub at_bound: bool,
}

impl CalibrationFit {
    /// A unit-gain, noiseless chain: useful as a neutral calibration when
    /// analyzing data that is already input-referred.
    pub fn identity(f_hz: f64, bw_hz: f64) -> Self {
        CalibrationFit {
            g: 1.0,
            t_n: 0.0,
            dg: 0.0,
            dt_n: 0.0,
            f_hz,
            bw_hz,
            residual_rms: 0.0,
            at_bound: false,
        }
    }
}

/// Combined gain error budget following the drift-plus-fit decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Gain fit uncertainty (max of the start/end fit errors).
    pub dg_fit: f64,
    /// Gain drift over the run: |G_start − G_end|.
    pub dg_drift: f64,
    /// Quadrature total √(dg_fit² + dg_drift²).
    pub dg_total: f64,
    /// Midpoint gain (G_start + G_end)/2.
    pub g_mid: f64,
    /// Off-state power standard deviation (photon units).
    pub dp_off: f64,
    /// Photon-number uncertainty.
    pub dn: f64,
}

/// T_n search interval for [`fit_calibration`] (K).
const TN_BOUNDS: (f64, f64) = (0.1, 30.0);
/// Absolute T_n convergence tolerance (K).
const TN_TOL: f64 = 1e-4;

/// `x/tanh(x)` continued to 1 at `x = 0`.
fn x_over_tanh(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x / x.tanh()
    }
}

/// Eq.-1 bracket without the gain factor: `Bw·[VT²/(2Z0)(E1/tanh E1 +
/// E2/tanh E2) + kB·T_n]`.
fn model_per_gain(i_amps: f64, t_n_k: f64, bw_hz: f64, env: &ShotNoiseEnv) -> f64 {
    let z0 = env.z0_ohm;
    let r = env.r_ohm;
    let vs2 = 2.0 * ELEMENTARY_CHARGE * i_amps.abs() * r * r * z0 * z0 / ((z0 + r) * (z0 + r));
    let vt2 = 4.0 * BOLTZMANN * env.t_k * z0 * z0 / (z0 + r);
    let vz2 = z0 * 0.5 * PLANCK * env.f_hz;
    let e1 = (vs2 + vz2) / vt2;
    let e2 = (vs2 - vz2) / vt2;
    let bracket = vt2 / (2.0 * z0) * (x_over_tanh(e1) + x_over_tanh(e2));
    bw_hz * (bracket + BOLTZMANN * t_n_k)
}

/// Detected shot-noise power spectral density at bias current `i_amps`.
pub fn shot_noise_psd(
    i_amps: f64,
    g: f64,
    t_n_k: f64,
    bw_hz: f64,
    env: &ShotNoiseEnv,
) -> Result<f64> {
    env.validate()?;
    Ok(g * model_per_gain(i_amps, t_n_k, bw_hz, env))
}

/// Closed-form least-squares gain for a fixed trial T_n, plus the resulting
/// sum of squared residuals.
fn gain_for_tn(data: &[(f64, f64)], t_n: f64, bw: f64, env: &ShotNoiseEnv) -> (f64, f64) {
    let mut mm = 0.0;
    let mut ms = 0.0;
    for &(i, s) in data {
        let m = model_per_gain(i, t_n, bw, env);
        mm += m * m;
        ms += m * s;
    }
    let g = ms / mm;
    let sse: f64 = data
        .iter()
        .map(|&(i, s)| {
            let r = s - g * model_per_gain(i, t_n, bw, env);
            r * r
        })
        .sum();
    (g, sse)
}

/// Fit `(G, T_n)` to a shot-noise current sweep.
///
/// For each trial T_n the optimal gain is the closed-form linear solution;
/// T_n itself is located by golden-section search on [0.1, 30] K to 1e-4 K.
/// Uncertainties come from the residual-based covariance of the model
/// linearized at the optimum.
pub fn fit_calibration(
    data: &[(f64, f64)],
    env: &ShotNoiseEnv,
    bw_hz: f64,
) -> Result<CalibrationFit> {
    env.validate()?;
    if data.len() < 8 {
        return Err(Error::Fit(format!(
            "need >= 8 sweep points, got {}",
            data.len()
        )));
    }
    let first = data[0].0;
    if data.iter().all(|&(i, _)| (i - first).abs() < 1e-15) {
        return Err(Error::Fit("degenerate sweep: all currents equal".into()));
    }

    // golden-section search for the T_n minimizing the profiled SSE
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = TN_BOUNDS;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = gain_for_tn(data, x1, bw_hz, env).1;
    let mut f2 = gain_for_tn(data, x2, bw_hz, env).1;
    while hi - lo > TN_TOL {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = gain_for_tn(data, x1, bw_hz, env).1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = gain_for_tn(data, x2, bw_hz, env).1;
        }
    }
    let t_n = 0.5 * (lo + hi);
    let (g, sse) = gain_for_tn(data, t_n, bw_hz, env);
    let at_bound = t_n - TN_BOUNDS.0 < 10.0 * TN_TOL || TN_BOUNDS.1 - t_n < 10.0 * TN_TOL;

    // covariance of (G, T_n) from the linearized model:
    //   dS/dG = model_per_gain, dS/dT_n = G·Bw·kB
    let n = data.len() as f64;
    let sigma2 = sse / (n - 2.0).max(1.0);
    let (mut jgg, mut jgt, mut jtt) = (0.0, 0.0, 0.0);
    let dt = g * bw_hz * BOLTZMANN;
    for &(i, _) in data {
        let jg = model_per_gain(i, t_n, bw_hz, env);
        jgg += jg * jg;
        jgt += jg * dt;
        jtt += dt * dt;
    }
    let det = jgg * jtt - jgt * jgt;
    let (dg, dt_n) = if det > 1e-300 * jgg.max(jtt) {
        ((sigma2 * jtt / det).sqrt(), (sigma2 * jgg / det).sqrt())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };

    Ok(CalibrationFit {
        g,
        t_n,
        dg,
        dt_n,
        f_hz: env.f_hz,
        bw_hz,
        residual_rms: (sse / n).sqrt(),
        at_bound,
    })
}

/// Combine start/end calibration gains into a drift-plus-fit error budget.
pub fn combine_gain_uncertainty(gs: f64, ge: f64, dgs: f64, dge: f64) -> Result<ErrorBudget> {
    if gs <= 0.0 || ge <= 0.0 {
        return Err(Error::Domain("gains must be positive".into()));
    }
    let dg_drift = (gs - ge).abs();
    let dg_fit = dgs.max(dge);
    Ok(ErrorBudget {
        dg_fit,
        dg_drift,
        dg_total: (dg_fit * dg_fit + dg_drift * dg_drift).sqrt(),
        g_mid: 0.5 * (gs + ge),
        dp_off: 0.0,
        dn: 0.0,
    })
}

/// Input-referred photon spectral density from detected on/off powers:
/// `n = (P_on − P_off)/(Bw·G·h·f)`. Not clamped — may be negative for noisy
/// inputs, which keeps vacuum-level statistics unbiased.
pub fn photon_number(p_on: f64, p_off: f64, g: f64, bw_hz: f64, f_hz: f64) -> Result<f64> {
    if g <= 0.0 || bw_hz <= 0.0 || f_hz <= 0.0 {
        return Err(Error::Domain("G, Bw and f must be positive".into()));
    }
    Ok((p_on - p_off) / (bw_hz * g * PLANCK * f_hz))
}

/// Photon-number uncertainty `dn = √((n·dG/G)² + 2·dP_off²)`.
pub fn photon_number_error(n: f64, dg_over_g: f64, dp_off: f64) -> Result<f64> {
    if n < 0.0 || dg_over_g < 0.0 || dp_off < 0.0 {
        return Err(Error::Domain("photon-number error inputs must be >= 0".into()));
    }
    Ok(((n * dg_over_g).powi(2) + 2.0 * dp_off * dp_off).sqrt())
}

/// Photon loss between device and amplifier inferred from noise
/// temperatures: `10·log10(T_amp/T_sys)` (dB, ≤ 0).
pub fn loss_from_noise(t_amp_k: f64, t_sys_k: f64) -> Result<f64> {
    if t_amp_k <= 0.0 {
        return Err(Error::Domain(format!(
            "amplifier noise temperature {t_amp_k} K must be > 0"
        )));
    }
    if t_amp_k > t_sys_k {
        return Err(Error::Domain(format!(
            "T_amp = {t_amp_k} K exceeds T_sys = {t_sys_k} K: that is gain, not loss"
        )));
    }
    Ok(10.0 * (t_amp_k / t_sys_k).log10())
}

/// Bose-Einstein thermal occupation `1/(exp(hf/kBT) − 1)`.
pub fn thermal_occupation(f_hz: f64, t_k: f64) -> Result<f64> {
    if f_hz <= 0.0 || t_k <= 0.0 {
        return Err(Error::Domain("thermal occupation needs f > 0 and T > 0".into()));
    }
    Ok(1.0 / ((PLANCK * f_hz / (BOLTZMANN * t_k)).exp() - 1.0))
}

/// Measured pump-power calibration map: detected power on a grid of pump
/// drive voltage × static flux.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PumpMap {
    /// Pump drive voltages (V), one per row of `power`.
    pub v_pump: Vec<f64>,
    /// Static flux values (Φ0), one per column of `power`.
    pub phi_dc: Vec<f64>,
    /// Detected power, `power[i][j]` at `(v_pump[i], phi_dc[j])`.
    pub power: Vec<Vec<f64>>,
}

/// Onset threshold in units of the background standard deviation.
const ONSET_KAPPA: f64 = 5.0;

/// Extract the flux-pump amplitude calibration slope (Φ0 per volt).
///
/// Photon generation turns on where the modulation reaches the half-flux
/// point, `Φ_DC + Φ_AC = 0.5 Φ0`. For each drive voltage the onset flux is
/// the first Φ_DC where power exceeds the column background by
/// [`ONSET_KAPPA`] σ (background estimated from the lowest-quartile powers);
/// a least-squares line through `(V, 0.5 − Φ_onset)` gives the slope.
pub fn flux_pump_slope(map: &PumpMap) -> Result<(f64, f64)> {
    if map.v_pump.len() != map.power.len() {
        return Err(Error::Format("v_pump length does not match power rows".into()));
    }
    let mut onsets = Vec::new();
    for (row, &v) in map.power.iter().zip(&map.v_pump) {
        if row.len() != map.phi_dc.len() {
            return Err(Error::Format("power row length does not match phi_dc".into()));
        }
        // background statistics from the lowest-quartile powers
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = (sorted.len() / 4).max(2).min(sorted.len());
        let bg = &sorted[..q];
        let mean: f64 = bg.iter().sum::<f64>() / q as f64;
        let var: f64 = bg.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / q as f64;
        let sigma = var.sqrt().max(1e-300);
        let threshold = mean + ONSET_KAPPA * sigma;
        // persistence requirement: the onset is the first flux from which
        // the power stays above threshold, so isolated background
        // fluctuations over the (quartile-biased) threshold are ignored
        let mut onset = None;
        for (j, &p) in row.iter().enumerate().rev() {
            if p > threshold {
                onset = Some(j);
            } else {
                break;
            }
        }
        if let Some(j) = onset {
            onsets.push((v, 0.5 - map.phi_dc[j]));
        }
    }
    if onsets.is_empty() {
        return Err(Error::OnsetNotFound);
    }
    // least-squares line through the onset points
    let n = onsets.len() as f64;
    let sx: f64 = onsets.iter().map(|p| p.0).sum();
    let sy: f64 = onsets.iter().map(|p| p.1).sum();
    let sxx: f64 = onsets.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = onsets.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::Fit("degenerate drive voltages in pump map".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Ok((slope, intercept))
}

/// Read a shot-noise sweep CSV: `# key=value` headers (T, R, Z0, f, Bw) then
/// `I_amps,S_p_detected` rows. Returns the sweep, environment and bandwidth.
pub fn read_shot_noise_csv(path: &Path) -> Result<(Vec<(f64, f64)>, ShotNoiseEnv, f64)> {
    let text = io::read_text(path)?;
    let (meta, body) = io::split_header(&text);
    let env = ShotNoiseEnv {
        t_k: io::header_f64(&meta, "T")?,
        r_ohm: io::header_f64(&meta, "R")?,
        z0_ohm: io::header_f64(&meta, "Z0")?,
        f_hz: io::header_f64(&meta, "f")?,
    };
    let bw = io::header_f64(&meta, "Bw")?;
    let mut data = Vec::new();
    for line in body {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::Format(format!("expected 2 columns, got: {line}")));
        }
        // tolerate a single column-name row
        if cols[0].parse::<f64>().is_err() && data.is_empty() {
            continue;
        }
        let i: f64 = cols[0]
            .parse()
            .map_err(|_| Error::Format(format!("bad current value: {}", cols[0])))?;
        let s: f64 = cols[1]
            .parse()
            .map_err(|_| Error::Format(format!("bad power value: {}", cols[1])))?;
        data.push((i, s));
    }
    Ok((data, env, bw))
}

/// Write a shot-noise sweep in the format read by [`read_shot_noise_csv`].
pub fn write_shot_noise_csv(
    path: &Path,
    data: &[(f64, f64)],
    env: &ShotNoiseEnv,
    bw_hz: f64,
) -> Result<()> {
    let mut meta = BTreeMap::new();
    meta.insert("T".to_string(), format!("{}", env.t_k));
    meta.insert("R".to_string(), format!("{}", env.r_ohm));
    meta.insert("Z0".to_string(), format!("{}", env.z0_ohm));
    meta.insert("f".to_string(), format!("{}", env.f_hz));
    meta.insert("Bw".to_string(), format!("{}", bw_hz));
    let mut out = io::format_header(&meta);
    out.push_str("I_amps,S_p_detected\n");
    for &(i, s) in data {
        out.push_str(&format!("{i},{s}\n"));
    }
    io::atomic_write(path, out.as_bytes())
}

/// Write a [`CalibrationFit`] as a flat JSON object.
pub fn write_calibration_json(path: &Path, fit: &CalibrationFit) -> Result<()> {
    let mut value = serde_json::to_value(fit).expect("fit serializes");
    value
        .as_object_mut()
        .expect("fit is an object")
        .insert("schema_version".to_string(), serde_json::json!(1));
    let text = serde_json::to_string_pretty(&value).expect("fit serializes");
    io::atomic_write(path, text.as_bytes())
}

/// Read a [`CalibrationFit`] JSON written by [`write_calibration_json`].
pub fn read_calibration_json(path: &Path) -> Result<CalibrationFit> {
    let text = io::read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("calibration JSON: {e}")))
}
