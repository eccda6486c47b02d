//! Band-integrated entanglement rates.
//!
//! The generated radiation has the parabolic spectral photon density
//! `n(f) = n_p·f(f_p − f)/(f_p/2)²`, peaking at half the pump frequency.
//! The log-negativity spectrum follows as `𝒩(f) = 2√n(f)` in the small-n
//! limit, and the distillable-entanglement rate over a detection band is the
//! integral of the entropy of formation over frequency:
//! `R = ∫ E_F(𝒩(f)) df` (ebit/s).

use serde::{Deserialize, Serialize};

use crate::gaussian::entropy_of_formation;
use crate::{Error, Result};

/// Parabolic output spectrum: peak photon spectral density and pump
/// frequency.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SpectralModel {
    /// Peak photon spectral density (s⁻¹ Hz⁻¹), reached at f_p/2.
    pub n_p: f64,
    /// Pump frequency (Hz).
    pub f_p_hz: f64,
}

impl SpectralModel {
    pub fn new(n_p: f64, f_p_hz: f64) -> Result<Self> {
        if n_p < 0.0 {
            return Err(Error::Domain(format!("n_p = {n_p} < 0")));
        }
        if f_p_hz <= 0.0 {
            return Err(Error::Domain(format!("f_p = {f_p_hz} Hz must be > 0")));
        }
        Ok(SpectralModel { n_p, f_p_hz })
    }

    /// Model whose peak log-negativity `2√n_p` equals `target`.
    pub fn with_peak_logneg(target: f64, f_p_hz: f64) -> Result<Self> {
        if target < 0.0 {
            return Err(Error::Domain(format!("peak log-negativity {target} < 0")));
        }
        SpectralModel::new((target / 2.0) * (target / 2.0), f_p_hz)
    }
}

/// Result of a band-integrated rate computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateResult {
    /// Entanglement rate (ebit/s).
    pub rate_ebit_per_s: f64,
    /// Integration band (Hz).
    pub band_hz: (f64, f64),
    /// Composite-Simpson panel count used.
    pub panels: usize,
    /// Entropy of formation at the band maximum of 𝒩(f).
    pub peak_ef: f64,
}

/// Photon spectral density `n(f) = n_p·f(f_p − f)/(f_p/2)²`.
pub fn n_of_f(f_hz: f64, m: &SpectralModel) -> Result<f64> {
    if !(0.0..=m.f_p_hz).contains(&f_hz) {
        return Err(Error::Domain(format!(
            "frequency {f_hz} Hz outside [0, {}]",
            m.f_p_hz
        )));
    }
    let half = m.f_p_hz / 2.0;
    Ok(m.n_p * f_hz * (m.f_p_hz - f_hz) / (half * half))
}

/// Log-negativity spectrum `𝒩(f) = 2√n(f)`.
pub fn logneg_of_f(f_hz: f64, m: &SpectralModel) -> Result<f64> {
    Ok(2.0 * n_of_f(f_hz, m)?.sqrt())
}

/// Default panel count for [`ebit_rate`].
pub const DEFAULT_PANELS: usize = 4096;

/// Integrate `E_F(𝒩(f))` over `[f_lo, f_hi]` with composite Simpson.
///
/// `panels` must be even and at least 64. Panel sums use pairwise reduction
/// in a fixed order, so results are bit-reproducible.
pub fn ebit_rate(m: &SpectralModel, f_lo_hz: f64, f_hi_hz: f64, panels: usize) -> Result<RateResult> {
    if !(0.0 <= f_lo_hz && f_lo_hz < f_hi_hz && f_hi_hz <= m.f_p_hz) {
        return Err(Error::Domain(format!(
            "band [{f_lo_hz}, {f_hi_hz}] not inside [0, {}]",
            m.f_p_hz
        )));
    }
    if panels < 64 || panels % 2 != 0 {
        return Err(Error::Domain(format!(
            "panel count {panels} must be even and >= 64"
        )));
    }
    let h = (f_hi_hz - f_lo_hz) / panels as f64;
    let integrand = |k: usize| -> Result<f64> {
        let f = f_lo_hz + k as f64 * h;
        entropy_of_formation(logneg_of_f(f, m)?)
    };
    // Simpson weights 1,4,2,4,...,2,4,1 collected into two pairwise sums
    let mut odd = Vec::with_capacity(panels / 2);
    let mut even = Vec::with_capacity(panels / 2);
    for k in 1..panels {
        let v = integrand(k)?;
        if k % 2 == 1 {
            odd.push(v);
        } else {
            even.push(v);
        }
    }
    let rate = h / 3.0
        * (integrand(0)? + integrand(panels)? + 4.0 * pairwise_sum(&odd) + 2.0 * pairwise_sum(&even));

    // 𝒩(f) is unimodal with the peak at f_p/2; the band maximum is at the
    // point of the band closest to it
    let f_peak = (m.f_p_hz / 2.0).clamp(f_lo_hz, f_hi_hz);
    let peak_ef = entropy_of_formation(logneg_of_f(f_peak, m)?)?;

    Ok(RateResult {
        rate_ebit_per_s: rate,
        band_hz: (f_lo_hz, f_hi_hz),
        panels,
        peak_ef,
    })
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// One row of the published entanglement-rate comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Citation key or "This work".
    pub reference: &'static str,
    /// Rate measured including noise and losses (Mebit/s), where reported.
    pub measured_mebit_per_s: Option<f64>,
    /// Rate at the sample (Mebit/s).
    pub at_sample_mebit_per_s: f64,
}

/// The stored reference comparison of broadband/parametric entanglement
/// sources (rates in Mebit/s).
pub fn comparison_table() -> Vec<ComparisonRow> {
    vec![
        ComparisonRow {
            reference: "Eichler2011",
            measured_mebit_per_s: None,
            at_sample_mebit_per_s: 5.14,
        },
        ComparisonRow {
            reference: "Flurin2012",
            measured_mebit_per_s: None,
            at_sample_mebit_per_s: 6.0,
        },
        ComparisonRow {
            reference: "Menzel2012",
            measured_mebit_per_s: None,
            at_sample_mebit_per_s: 5.7,
        },
        ComparisonRow {
            reference: "Ku2015",
            measured_mebit_per_s: Some(0.07),
            at_sample_mebit_per_s: 2.7,
        },
        ComparisonRow {
            reference: "Fedorov2018",
            measured_mebit_per_s: None,
            at_sample_mebit_per_s: 4.3,
        },
        ComparisonRow {
            reference: "This work",
            measured_mebit_per_s: Some(5.2),
            at_sample_mebit_per_s: 90.0,
        },
    ]
}

/// Render the comparison table as aligned plain text.
pub fn render_comparison_table(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>18} {:>16}\n",
        "reference", "measured (Mebit/s)", "sample (Mebit/s)"
    ));
    for row in rows {
        let measured = row
            .measured_mebit_per_s
            .map(|r| format!("{r}"))
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{:<14} {:>18} {:>16}\n",
            row.reference, measured, row.at_sample_mebit_per_s
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn spectrum_values() {
        let m = SpectralModel::new(0.01, 8.9e9).unwrap();
        assert_relative_eq!(n_of_f(4.45e9, &m).unwrap(), 0.01, max_relative = 1e-12);
        assert_eq!(n_of_f(0.0, &m).unwrap(), 0.0);
        assert_eq!(n_of_f(8.9e9, &m).unwrap(), 0.0);
        let n41 = n_of_f(4.1e9, &m).unwrap();
        assert_relative_eq!(n41, 0.01 * (4.1 * 4.8) / (4.45 * 4.45), max_relative = 1e-12);
        assert!((n41 - 0.009937).abs() < 1e-5);
        assert!(n_of_f(-1.0, &m).is_err());
        assert!(n_of_f(9e9, &m).is_err());
    }

    #[test]
    fn logneg_spectrum_values() {
        let m = SpectralModel::new(0.01, 8.9e9).unwrap();
        assert_relative_eq!(logneg_of_f(4.45e9, &m).unwrap(), 0.2, max_relative = 1e-12);
        assert_eq!(logneg_of_f(0.0, &m).unwrap(), 0.0);
        let unit = SpectralModel::new(1.0, 8.9e9).unwrap();
        assert_relative_eq!(logneg_of_f(4.45e9, &unit).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn published_rates_within_ten_percent() {
        let full = SpectralModel::new(0.01, 8.9e9).unwrap();
        let r = ebit_rate(&full, 0.0, 8.9e9, DEFAULT_PANELS).unwrap();
        assert!(
            (r.rate_ebit_per_s / 261e6 - 1.0).abs() < 0.10,
            "full band: {:.4e}",
            r.rate_ebit_per_s
        );

        let avail = SpectralModel::with_peak_logneg(0.03, 8.9e9).unwrap();
        let r = ebit_rate(&avail, 4.0e9, 8.0e9, DEFAULT_PANELS).unwrap();
        assert!(
            (r.rate_ebit_per_s / 5.2e6 - 1.0).abs() < 0.10,
            "available band: {:.4e}",
            r.rate_ebit_per_s
        );

        let sample = SpectralModel::with_peak_logneg(0.1, 8.9e9).unwrap();
        let r = ebit_rate(&sample, 0.0, 8.9e9, DEFAULT_PANELS).unwrap();
        assert!(
            (r.rate_ebit_per_s / 90e6 - 1.0).abs() < 0.10,
            "sample full band: {:.4e}",
            r.rate_ebit_per_s
        );
    }

    #[test]
    fn simpson_agrees_with_rectangle_rule() {
        // brute-force midpoint rectangles as an independent check
        let m = SpectralModel::new(0.01, 8.9e9).unwrap();
        let n = 100_000;
        let h = 8.9e9 / n as f64;
        let mut brute = 0.0;
        for k in 0..n {
            let f = (k as f64 + 0.5) * h;
            brute += entropy_of_formation(logneg_of_f(f, &m).unwrap()).unwrap();
        }
        brute *= h;
        let r = ebit_rate(&m, 0.0, 8.9e9, DEFAULT_PANELS).unwrap();
        assert_relative_eq!(r.rate_ebit_per_s, brute, max_relative = 1e-4);
    }

    #[test]
    fn simpson_richardson_convergence() {
        let m = SpectralModel::new(0.01, 8.9e9).unwrap();
        let fine = ebit_rate(&m, 0.0, 8.9e9, DEFAULT_PANELS).unwrap().rate_ebit_per_s;
        let coarse = ebit_rate(&m, 0.0, 8.9e9, DEFAULT_PANELS / 2)
            .unwrap()
            .rate_ebit_per_s;
        assert!(
            ((fine - coarse) / fine).abs() < 1e-6,
            "relative panel-halving difference {:.3e}",
            ((fine - coarse) / fine).abs()
        );
    }

    #[test]
    fn rate_monotonicity() {
        let m = SpectralModel::new(0.01, 8.9e9).unwrap();
        // band-width monotonicity
        let narrow = ebit_rate(&m, 3.0e9, 6.0e9, 1024).unwrap().rate_ebit_per_s;
        let wide = ebit_rate(&m, 2.0e9, 7.0e9, 1024).unwrap().rate_ebit_per_s;
        assert!(narrow <= wide);
        // n_p monotonicity
        let mut prev = 0.0;
        for k in 1..=10 {
            let m = SpectralModel::new(0.002 * k as f64, 8.9e9).unwrap();
            let r = ebit_rate(&m, 0.0, 8.9e9, 256).unwrap().rate_ebit_per_s;
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn half_band_symmetry() {
        let m = SpectralModel::new(0.01, 8.9e9).unwrap();
        let left = ebit_rate(&m, 0.0, 4.45e9, 2048).unwrap().rate_ebit_per_s;
        let right = ebit_rate(&m, 4.45e9, 8.9e9, 2048).unwrap().rate_ebit_per_s;
        assert_abs_diff_eq!(left, right, epsilon = 1e-12 * left);
    }

    #[test]
    fn panel_validation() {
        let m = SpectralModel::new(0.01, 8.9e9).unwrap();
        assert!(ebit_rate(&m, 0.0, 8.9e9, 63).is_err());
        assert!(ebit_rate(&m, 0.0, 8.9e9, 65).is_err());
        assert!(ebit_rate(&m, 5.0e9, 4.0e9, 128).is_err());
        assert!(ebit_rate(&m, 0.0, 9.0e9, 128).is_err());
    }

    #[test]
    fn comparison_table_contents() {
        let rows = comparison_table();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.at_sample_mebit_per_s > 0.0));
        let this_work = rows.iter().find(|r| r.reference == "This work").unwrap();
        assert_eq!(this_work.measured_mebit_per_s, Some(5.2));
        assert_eq!(this_work.at_sample_mebit_per_s, 90.0);
        let text = render_comparison_table(&rows);
        assert!(text.contains("This work"));
        assert_eq!(text.lines().count(), 7);
    }
}
