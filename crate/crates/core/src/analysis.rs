//! Analysis pipeline: quadrature records → covariance → entanglement.
//!
//! Detected records are reduced to per-cycle second-moment matrices, divided
//! by the calibrated chain gain, and averaged. Pump ON/OFF differencing
//! removes amplifier noise; re-adding the vacuum matrix yields the
//! input-referred state, from which log-negativity, the Duan criterion and
//! the entropy of formation follow. Error bars come from a bootstrap over
//! cycles (B = 200, percentile method), and the log-negativity point
//! estimate is significance-clamped: the plug-in estimator is biased upward
//! at the separability boundary, so values below 3 bootstrap σ are
//! reported as zero (the raw value is kept alongside).

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationFit;
use crate::chain::{QuadratureRecord, RecordSet};
use crate::gaussian::{
    duan_quantities, entropy_of_formation, purity, CovMat4, EntanglementReport, ReportErrors,
};
use crate::io;
use crate::{Error, Result};

/// Bootstrap resample count.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Significance threshold (bootstrap σ) for a nonzero log-negativity.
pub const LOGNEG_SIGNIFICANCE_SIGMA: f64 = 3.0;

/// Full output of [`analyze`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisResult {
    /// Input-referred covariance matrix (vacuum-half units).
    pub covariance: CovMat4,
    /// Entanglement measures with bootstrap errors. The log-negativity is
    /// significance-clamped; see [`LOGNEG_SIGNIFICANCE_SIGMA`].
    pub report: EntanglementReport,
    /// Unclamped log-negativity point estimate.
    pub log_negativity_raw: f64,
    /// Extracted photon spectral density, lower band.
    pub n_minus: f64,
    /// Extracted photon spectral density, upper band.
    pub n_plus: f64,
    pub dn_minus: f64,
    pub dn_plus: f64,
    /// `10·log10(δ_IQ−)` (dB; negative means squeezing below vacuum).
    pub squeezing_db: f64,
    pub d_squeezing_db: f64,
    /// `10·log10(δ_IQ+)` (dB).
    pub amplification_db: f64,
    pub d_amplification_db: f64,
    /// Cycles entering the estimate.
    pub cycles: usize,
}

/// Quadrature pair selectable for a 2D histogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pair {
    IminusIplus,
    QminusQplus,
    IminusQplus,
    QminusIplus,
}

impl Pair {
    fn extract(self, r: &QuadratureRecord) -> (f64, f64) {
        match self {
            Pair::IminusIplus => (r.i_minus, r.i_plus),
            Pair::QminusQplus => (r.q_minus, r.q_plus),
            Pair::IminusQplus => (r.i_minus, r.q_plus),
            Pair::QminusIplus => (r.q_minus, r.i_plus),
        }
    }
}

/// Signed ON-minus-OFF 2D histogram of one quadrature pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Histogram2D {
    pub pair: Pair,
    /// Common axis range applied to both quadratures.
    pub range: (f64, f64),
    /// Bins per axis.
    pub bins: usize,
    /// `counts[row][col]`, row = first quadrature, signed ON − OFF.
    pub counts: Vec<Vec<i64>>,
}

/// Default bins per histogram axis.
pub const DEFAULT_HISTOGRAM_BINS: usize = 101;

/// `10·log10(ratio)`.
pub fn to_db(ratio: f64) -> Result<f64> {
    if ratio <= 0.0 {
        return Err(Error::Domain(format!("dB of non-positive ratio {ratio}")));
    }
    Ok(10.0 * ratio.log10())
}

/// Per-cycle gain-normalized second-moment matrices, one per (cycle, pump
/// state), in cycle order.
struct CycleMoments {
    on: Vec<CovMat4>,
    off: Vec<CovMat4>,
}

fn gain_factor(i: usize, j: usize, g_minus: f64, g_plus: f64) -> f64 {
    match (i < 2, j < 2) {
        (true, true) => g_minus,
        (false, false) => g_plus,
        _ => (g_minus * g_plus).sqrt(),
    }
}

fn check_calibration_bands(
    rs: &RecordSet,
    calib_minus: &CalibrationFit,
    calib_plus: &CalibrationFit,
) -> Result<()> {
    if (calib_minus.f_hz - rs.meta.pump.f_minus_hz).abs() > 1.0
        || (calib_plus.f_hz - rs.meta.pump.f_plus_hz).abs() > 1.0
    {
        return Err(Error::Config(format!(
            "calibration frequencies ({}, {}) do not match dataset bands ({}, {})",
            calib_minus.f_hz, calib_plus.f_hz, rs.meta.pump.f_minus_hz, rs.meta.pump.f_plus_hz
        )));
    }
    Ok(())
}

/// Raw (detected-unit) per-cycle second-moment matrices of a record set.
fn raw_cycle_moments(rs: &RecordSet) -> CycleMoments {
    let mut on = Vec::new();
    let mut off = Vec::new();
    let mut idx = 0;
    while idx < rs.records.len() {
        let cycle = rs.records[idx].cycle;
        let pump_on = rs.records[idx].pump_on;
        let mut end = idx;
        while end < rs.records.len()
            && rs.records[end].cycle == cycle
            && rs.records[end].pump_on == pump_on
        {
            end += 1;
        }
        let block = &rs.records[idx..end];
        let n = block.len() as f64;
        let mut m = CovMat4::zero();
        for r in block {
            let x = [r.i_minus, r.q_minus, r.i_plus, r.q_plus];
            for i in 0..4 {
                for j in 0..=i {
                    m.set(i, j, m.get(i, j) + x[i] * x[j]);
                }
            }
        }
        for i in 0..4 {
            for j in 0..=i {
                m.set(i, j, m.get(i, j) / n);
            }
        }
        if pump_on {
            on.push(m);
        } else {
            off.push(m);
        }
        idx = end;
    }
    CycleMoments { on, off }
}

/// Divide detected-unit moments by the calibrated gain in place.
fn normalize_by_gain(ms: &mut [CovMat4], g_minus: f64, g_plus: f64) {
    for m in ms {
        for i in 0..4 {
            for j in 0..=i {
                let g = gain_factor(i, j, g_minus, g_plus);
                m.set(i, j, m.get(i, j) / g);
            }
        }
    }
}

fn normalized_moments(
    on_raw: &[CovMat4],
    off_raw: &[CovMat4],
    calib_minus: &CalibrationFit,
    calib_plus: &CalibrationFit,
) -> Result<CycleMoments> {
    if on_raw.len() < 2 || off_raw.len() < 2 {
        return Err(Error::Config(format!(
            "need >= 2 cycles per pump state for error bars, got {} on / {} off",
            on_raw.len(),
            off_raw.len()
        )));
    }
    let mut cm = CycleMoments {
        on: on_raw.to_vec(),
        off: off_raw.to_vec(),
    };
    normalize_by_gain(&mut cm.on, calib_minus.g, calib_plus.g);
    normalize_by_gain(&mut cm.off, calib_minus.g, calib_plus.g);
    Ok(cm)
}

/// Mean and standard-error matrix across a set of per-cycle matrices.
fn average_matrices(ms: &[CovMat4]) -> CovMat4 {
    let n = ms.len() as f64;
    let mut mean = CovMat4::zero();
    for m in ms {
        for i in 0..4 {
            for j in 0..=i {
                mean.set(i, j, mean.get(i, j) + m.get(i, j) / n);
            }
        }
    }
    for i in 0..4 {
        for j in 0..=i {
            let mu = mean.get(i, j);
            let var: f64 = ms.iter().map(|m| (m.get(i, j) - mu).powi(2)).sum::<f64>() / n;
            mean.set_err(i, j, (var / n).sqrt());
        }
    }
    mean
}

/// Gain-normalized pump-ON and pump-OFF covariance estimates with
/// cycle-scatter standard errors.
pub fn estimate_covariance(
    rs: &RecordSet,
    calib_minus: &CalibrationFit,
    calib_plus: &CalibrationFit,
) -> Result<(CovMat4, CovMat4)> {
    check_calibration_bands(rs, calib_minus, calib_plus)?;
    let raw = raw_cycle_moments(rs);
    let cm = normalized_moments(&raw.on, &raw.off, calib_minus, calib_plus)?;
    Ok((average_matrices(&cm.on), average_matrices(&cm.off)))
}

/// Input-referred state `V_on − V_off + V_vac`: ON/OFF differencing removes
/// amplifier noise, and the vacuum is re-added so the result is an absolute
/// covariance matrix. Element errors combine in quadrature.
pub fn input_referred_state(v_on: &CovMat4, v_off: &CovMat4) -> CovMat4 {
    let mut v = CovMat4::zero();
    for i in 0..4 {
        for j in 0..=i {
            let vac = if i == j { 0.5 } else { 0.0 };
            v.set(i, j, v_on.get(i, j) - v_off.get(i, j) + vac);
            v.set_err(i, j, v_on.err(i, j).hypot(v_off.err(i, j)));
        }
    }
    v
}

/// Derived scalar metrics of one input-referred covariance matrix.
#[derive(Clone, Copy)]
struct Metrics {
    nu_minus: f64,
    log_negativity: f64,
    duan_plus: f64,
    duan_minus: f64,
    entropy_of_formation: f64,
    purity: f64,
    n_minus: f64,
    n_plus: f64,
}

/// Statistical estimator of ν− and the log-negativity. Unlike the analytic
/// path, radicands pushed negative by sampling noise are clamped at zero
/// regardless of magnitude: noisy estimates can violate physicality by more
/// than any fixed analytic tolerance.
fn robust_nu_minus(v: &CovMat4) -> f64 {
    let zeta = v.det_a() + v.det_b() - 2.0 * v.det_c();
    let inner = (zeta * zeta - 4.0 * v.det()).max(0.0);
    (zeta / 2.0 - inner.sqrt() / 2.0).max(0.0).sqrt()
}

fn metrics_of(v: &CovMat4) -> Metrics {
    let nu = robust_nu_minus(v);
    let logneg = if nu > 0.0 {
        (-(2.0 * nu).log2()).max(0.0)
    } else {
        // ν− = 0 after clamping: report the (infinite-negativity) limit as a
        // large finite value; bootstrap percentiles are robust to it
        f64::INFINITY
    };
    let (duan_plus, duan_minus) = duan_quantities(v);
    Metrics {
        nu_minus: nu,
        log_negativity: logneg,
        duan_plus,
        duan_minus,
        entropy_of_formation: entropy_of_formation(logneg.min(1e6)).unwrap_or(f64::NAN),
        purity: purity(v).unwrap_or(f64::NAN),
        n_minus: (v.get(0, 0) + v.get(1, 1)) / 2.0 - 0.5,
        n_plus: (v.get(2, 2) + v.get(3, 3)) / 2.0 - 0.5,
    }
}

/// Percentile of a sorted slice (linear interpolation).
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// One-σ spread from the 16th/84th bootstrap percentiles.
fn percentile_sigma(values: &mut Vec<f64>) -> f64 {
    values.retain(|x| x.is_finite());
    if values.len() < 8 {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (percentile(values, 0.84) - percentile(values, 0.16)) / 2.0
}

/// Full analysis of a dataset: covariance estimation, ON/OFF differencing,
/// entanglement measures, and bootstrap error bars over cycles.
pub fn analyze(
    rs: &RecordSet,
    calib_minus: &CalibrationFit,
    calib_plus: &CalibrationFit,
) -> Result<AnalysisResult> {
    check_calibration_bands(rs, calib_minus, calib_plus)?;
    let raw = raw_cycle_moments(rs);
    analyze_raw_moments(
        &raw.on,
        &raw.off,
        calib_minus,
        calib_plus,
        rs.meta.chain.seed,
    )
}

/// [`analyze`] on per-cycle detected-unit second-moment matrices, as
/// produced either by record reduction or by the streaming simulator path
/// (`chain::pump_cycle_moments`). `bootstrap_seed` fixes the resampling RNG.
pub fn analyze_raw_moments(
    on_raw: &[CovMat4],
    off_raw: &[CovMat4],
    calib_minus: &CalibrationFit,
    calib_plus: &CalibrationFit,
    bootstrap_seed: u64,
) -> Result<AnalysisResult> {
    let cm = normalized_moments(on_raw, off_raw, calib_minus, calib_plus)?;
    let v_on = average_matrices(&cm.on);
    let v_off = average_matrices(&cm.off);
    let v = input_referred_state(&v_on, &v_off);
    let point = metrics_of(&v);

    // bootstrap over cycles; ON and OFF are paired through the gain drift,
    // so resample cycle indices jointly
    let n_cycles = cm.on.len().min(cm.off.len());
    let mut rng = ChaCha8Rng::seed_from_u64(bootstrap_seed ^ 0xb005_75a9);
    let mut boot: Vec<Metrics> = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let picks: Vec<usize> = (0..n_cycles).map(|_| rng.gen_range(0..n_cycles)).collect();
        let on: Vec<CovMat4> = picks.iter().map(|&k| cm.on[k].clone()).collect();
        let off: Vec<CovMat4> = picks.iter().map(|&k| cm.off[k].clone()).collect();
        let vb = input_referred_state(&average_matrices(&on), &average_matrices(&off));
        boot.push(metrics_of(&vb));
    }
    let sigma = |f: &dyn Fn(&Metrics) -> f64| -> f64 {
        let mut vals: Vec<f64> = boot.iter().map(f).collect();
        percentile_sigma(&mut vals)
    };
    let d_logneg = sigma(&|m| m.log_negativity);
    let d_nu = sigma(&|m| m.nu_minus);
    let d_duan_plus = sigma(&|m| m.duan_plus);
    let d_duan_minus = sigma(&|m| m.duan_minus);
    let d_ef = sigma(&|m| m.entropy_of_formation);
    let d_purity = sigma(&|m| m.purity);
    let dn_minus = sigma(&|m| m.n_minus);
    let dn_plus = sigma(&|m| m.n_plus);
    let d_sq_db = sigma(&|m| 10.0 * m.duan_minus.log10());
    let d_amp_db = sigma(&|m| 10.0 * m.duan_plus.log10());

    // significance clamp on the boundary-biased log-negativity estimator
    let raw = point.log_negativity.min(1e6);
    let clamped = if d_logneg.is_finite() && raw > LOGNEG_SIGNIFICANCE_SIGMA * d_logneg {
        raw
    } else {
        0.0
    };

    let report = EntanglementReport {
        nu_minus: point.nu_minus,
        log_negativity: clamped,
        duan_plus: point.duan_plus,
        duan_minus: point.duan_minus,
        entropy_of_formation: entropy_of_formation(clamped)?,
        purity: point.purity,
        errors: ReportErrors {
            nu_minus: d_nu,
            log_negativity: d_logneg,
            duan_plus: d_duan_plus,
            duan_minus: d_duan_minus,
            entropy_of_formation: d_ef,
            purity: d_purity,
        },
    };

    Ok(AnalysisResult {
        covariance: v,
        report,
        log_negativity_raw: raw,
        n_minus: point.n_minus,
        n_plus: point.n_plus,
        dn_minus,
        dn_plus,
        squeezing_db: to_db(point.duan_minus)?,
        d_squeezing_db: d_sq_db,
        amplification_db: to_db(point.duan_plus)?,
        d_amplification_db: d_amp_db,
        cycles: n_cycles,
    })
}

/// Signed ON-minus-OFF 2D histogram of one quadrature pair.
pub fn histogram2d(
    rs: &RecordSet,
    pair: Pair,
    bins: usize,
    range: (f64, f64),
) -> Result<Histogram2D> {
    if rs.records.is_empty() {
        return Err(Error::Domain("empty record set".into()));
    }
    if !(range.0.is_finite() && range.1.is_finite() && range.0 < range.1) {
        return Err(Error::Domain(format!("bad histogram range {range:?}")));
    }
    if bins == 0 {
        return Err(Error::Domain("bins must be >= 1".into()));
    }
    let mut counts = vec![vec![0i64; bins]; bins];
    let width = range.1 - range.0;
    let bin_of = |x: f64| -> Option<usize> {
        if x < range.0 || x >= range.1 {
            return None;
        }
        Some(((x - range.0) / width * bins as f64) as usize)
    };
    for r in &rs.records {
        let (a, b) = pair.extract(r);
        if let (Some(i), Some(j)) = (bin_of(a), bin_of(b)) {
            counts[i][j] += if r.pump_on { 1 } else { -1 };
        }
    }
    Ok(Histogram2D {
        pair,
        range,
        bins,
        counts,
    })
}

/// Rotate the upper-band quadratures by `angle_rad` (LO phase robustness
/// testing): `I+ ← I+ cos θ − Q+ sin θ`, `Q+ ← I+ sin θ + Q+ cos θ`.
pub fn rotate_mode_plus(rs: &mut RecordSet, angle_rad: f64) {
    let (s, c) = angle_rad.sin_cos();
    for r in &mut rs.records {
        let (i, q) = (r.i_plus, r.q_plus);
        r.i_plus = c * i - s * q;
        r.q_plus = s * i + c * q;
    }
}

/// Write an [`AnalysisResult`] as JSON with the matrices expanded row-major.
pub fn write_analysis_json(path: &Path, a: &AnalysisResult) -> Result<()> {
    let value = serde_json::json!({
        "schema_version": 1,
        "covariance": a.covariance.to_rows(),
        "covariance_errors": a.covariance.errors_to_rows(),
        "nu_minus": a.report.nu_minus,
        "log_negativity": a.report.log_negativity,
        "log_negativity_raw": a.log_negativity_raw,
        "duan_plus": a.report.duan_plus,
        "duan_minus": a.report.duan_minus,
        "entropy_of_formation": a.report.entropy_of_formation,
        "purity": a.report.purity,
        "errors": a.report.errors,
        "n_minus": a.n_minus,
        "n_plus": a.n_plus,
        "dn_minus": a.dn_minus,
        "dn_plus": a.dn_plus,
        "squeezing_db": a.squeezing_db,
        "d_squeezing_db": a.d_squeezing_db,
        "amplification_db": a.amplification_db,
        "d_amplification_db": a.d_amplification_db,
        "cycles": a.cycles,
    });
    io::atomic_write(
        path,
        serde_json::to_string_pretty(&value).expect("result serializes").as_bytes(),
    )
}

/// Write a [`Histogram2D`] as a CSV grid with axis metadata in the header.
pub fn write_histogram_csv(path: &Path, h: &Histogram2D) -> Result<()> {
    let mut meta = std::collections::BTreeMap::new();
    meta.insert("pair".to_string(), format!("{:?}", h.pair));
    meta.insert("range_lo".to_string(), format!("{}", h.range.0));
    meta.insert("range_hi".to_string(), format!("{}", h.range.1));
    meta.insert("bins".to_string(), format!("{}", h.bins));
    let mut out = io::format_header(&meta);
    for row in &h.counts {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    io::atomic_write(path, out.as_bytes())
}
