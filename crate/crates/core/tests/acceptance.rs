//! Acceptance gate: one test per criterion, each printing a single
//! `[PASS]`/`[FAIL]` line (run with `--nocapture` to see them even when
//! green). Statistical criteria use fixed seeds and are deterministic.

use dce_sim::analysis::{analyze_raw_moments, AnalysisResult};
use dce_sim::calibration::{
    combine_gain_uncertainty, fit_calibration, flux_pump_slope, loss_from_noise,
    photon_number_error, thermal_occupation, CalibrationFit, PumpMap, ShotNoiseEnv,
};
use dce_sim::chain::{
    device_state, pump_cycle_dataset, pump_cycle_moments, pump_cycle_moments_with_device,
    simulate_shot_noise_sweep, write_records_csv, ChainConfig,
};
use dce_sim::gaussian::{
    apply_loss, duan_quantities, entropy_of_formation, log_negativity, purity, tmsv_covariance,
    CovMat4,
};
use dce_sim::rates::{ebit_rate, n_of_f, SpectralModel, DEFAULT_PANELS};
use dce_sim::squid::{dce_purity, PumpConfig, SquidParams};

fn verdict(id: &str, ok: bool, detail: String) {
    println!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{id} failed: {detail}");
}

#[test]
fn criterion_01_entropy_of_formation_value() {
    let ef = entropy_of_formation(0.03).unwrap();
    let dev = (ef / 1.6e-3 - 1.0).abs();
    verdict(
        "criterion 1 (E_F at N = 0.03)",
        dev < 0.03,
        format!("E_F = {ef:.6e}, deviation {:.2}% (limit 3%)", dev * 100.0),
    );
}

#[test]
fn criterion_02_thermal_occupation_value() {
    let n = thermal_occupation(4.8e9, 0.04).unwrap();
    let dev = (n / 0.0031 - 1.0).abs();
    verdict(
        "criterion 2 (n_th at 4.8 GHz, 40 mK)",
        dev < 0.02,
        format!("n_th = {n:.6}, deviation {:.2}% (limit 2%)", dev * 100.0),
    );
}

#[test]
fn criterion_03_loss_from_noise_values() {
    let l1 = loss_from_noise(2.2, 3.7).unwrap();
    let l2 = loss_from_noise(2.0, 2.95).unwrap();
    let ok = (l1 + 2.3).abs() < 0.05 && (l2 + 1.7).abs() < 0.05;
    verdict(
        "criterion 3 (loss from noise temperatures)",
        ok,
        format!("{l1:.3} dB (want -2.3 ± 0.05), {l2:.3} dB (want -1.7 ± 0.05)"),
    );
}

#[test]
fn criterion_04_ebit_rates() {
    let full = SpectralModel::new(0.01, 8.9e9).unwrap();
    let r1 = ebit_rate(&full, 0.0, 8.9e9, DEFAULT_PANELS).unwrap().rate_ebit_per_s;
    let avail = SpectralModel::with_peak_logneg(0.03, 8.9e9).unwrap();
    let r2 = ebit_rate(&avail, 4.0e9, 8.0e9, DEFAULT_PANELS).unwrap().rate_ebit_per_s;
    let sample = SpectralModel::with_peak_logneg(0.1, 8.9e9).unwrap();
    let r3 = ebit_rate(&sample, 0.0, 8.9e9, DEFAULT_PANELS).unwrap().rate_ebit_per_s;
    let ok = (r1 / 261e6 - 1.0).abs() < 0.10
        && (r2 / 5.2e6 - 1.0).abs() < 0.10
        && (r3 / 90e6 - 1.0).abs() < 0.10;
    verdict(
        "criterion 4 (ebit rates)",
        ok,
        format!(
            "{:.1}/261 Mebit/s, {:.2}/5.2 Mebit/s, {:.1}/90 Mebit/s (each ±10%)",
            r1 / 1e6,
            r2 / 1e6,
            r3 / 1e6
        ),
    );
}

#[test]
fn criterion_05_gaussian_core_oracles() {
    let mut ok = log_negativity(&CovMat4::vacuum()).unwrap() == 0.0;
    let mut worst = 0.0f64;
    for r in [0.03, 0.1, 0.5, 1.0, 2.0] {
        let v = tmsv_covariance(r, 0.0).unwrap();
        let logneg = log_negativity(&v).unwrap();
        let expect = 2.0 * r * std::f64::consts::LOG2_E;
        let rel = (logneg / expect - 1.0).abs();
        worst = worst.max(rel);
        ok &= rel < 1e-9;
        let (plus, minus) = duan_quantities(&v);
        ok &= (plus / (2.0 * r).exp() - 1.0).abs() < 1e-12;
        ok &= (minus / (-2.0 * r).exp() - 1.0).abs() < 1e-12;
        ok &= (purity(&v).unwrap() - 1.0).abs() < 1e-12;
    }
    verdict(
        "criterion 5 (Gaussian-core oracle suite)",
        ok,
        format!("worst log-negativity relative error {worst:.2e} (limit 1e-9)"),
    );
}

#[test]
fn criterion_06_calibration_round_trip() {
    let env = ShotNoiseEnv::paper_4p1_ghz();
    let bw = 200e3;
    let currents: Vec<f64> = {
        let mut v = vec![0.0];
        for k in 0..40 {
            v.push(2.5e-7 * (k + 1) as f64);
        }
        v
    };

    // paper-valued case
    let data = simulate_shot_noise_sweep(1.3051e9, 3.71, &env, bw, &currents, 0.005, 1000).unwrap();
    let fit = fit_calibration(&data, &env, bw).unwrap();
    let g_dev = (fit.g / 1.3051e9 - 1.0).abs();
    let tn_dev = (fit.t_n / 3.71 - 1.0).abs();
    let mut ok = g_dev < 0.01 && tn_dev < 0.02;

    // 200 randomized (G, T_n) round trips, 3 sigma coverage
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(606);
    let mut covered = 0;
    for k in 0..200 {
        let g_true = 10f64.powf(rng.gen_range(8.0..10.0));
        let tn_true = rng.gen_range(1.0..10.0);
        let data =
            simulate_shot_noise_sweep(g_true, tn_true, &env, bw, &currents, 0.005, 2000 + k)
                .unwrap();
        let fit = fit_calibration(&data, &env, bw).unwrap();
        if (fit.g - g_true).abs() <= 3.0 * fit.dg && (fit.t_n - tn_true).abs() <= 3.0 * fit.dt_n {
            covered += 1;
        }
    }
    ok &= covered >= 198;
    verdict(
        "criterion 6 (calibration round-trip)",
        ok,
        format!(
            "paper case G within {:.2}% / T_n within {:.2}%; 3-sigma coverage {covered}/200 (need >= 198)",
            g_dev * 100.0,
            tn_dev * 100.0
        ),
    );
}

#[test]
fn criterion_07a_gain_error_budget() {
    let b = combine_gain_uncertainty(1.3051e9, 1.2929e9, 3.4e6, 4.3e6).unwrap();
    let ok = (b.dg_total - 12.9e6).abs() < 0.2e6;
    verdict(
        "criterion 7a (combined gain uncertainty)",
        ok,
        format!("dG_total = {:.3e} (want 12.9e6 ± 0.2e6)", b.dg_total),
    );
}

#[test]
fn criterion_07b_photon_number_resolution() {
    // the stated error combination at n = 0.05, dP_off = 0.0025 evaluates to
    // sqrt((0.05*0.01)^2 + 2*0.0025^2)/0.05 = 7.14%, outside the 6 ± 0.5
    // percentage-point window; the formula is implemented verbatim and this
    // check reports the discrepancy honestly
    let dn = photon_number_error(0.05, 0.01, 0.0025).unwrap();
    let percent = dn / 0.05 * 100.0;
    let ok = (percent - 6.0).abs() < 0.5;
    verdict(
        "criterion 7b (photon-number resolution)",
        ok,
        format!("dn/n = {percent:.2}% (want 6 ± 0.5 pp)"),
    );
}

fn midpoint_calibs(chain: &ChainConfig, f_minus: f64, f_plus: f64) -> (CalibrationFit, CalibrationFit) {
    let mut minus = CalibrationFit::identity(f_minus, chain.bw_hz);
    minus.g = 0.5 * (chain.g_start_minus + chain.g_end_minus);
    let mut plus = CalibrationFit::identity(f_plus, chain.bw_hz);
    plus.g = 0.5 * (chain.g_start_plus + chain.g_end_plus);
    (minus, plus)
}

fn analyze_device(v_dev: &CovMat4, pump: &PumpConfig, chain: &ChainConfig) -> AnalysisResult {
    let (on, off) = pump_cycle_moments_with_device(v_dev, pump, chain).unwrap();
    let (cm, cp) = midpoint_calibs(chain, pump.f_minus_hz, pump.f_plus_hz);
    analyze_raw_moments(&on, &off, &cm, &cp, chain.seed).unwrap()
}

#[test]
fn criterion_08_end_to_end_closure() {
    // paper-like device: n_p = 0.01 parabolic spectrum, ideal pair purity
    let pump = PumpConfig::paper_point(13e-3);
    let model = SpectralModel::new(0.01, pump.f_p_hz).unwrap();
    let n_minus = n_of_f(pump.f_minus_hz, &model).unwrap();
    let n_plus = n_of_f(pump.f_plus_hz, &model).unwrap();
    let v_dev = device_state(n_minus, n_plus, 1.0).unwrap();

    // injected truth: lossy input-referred state (amplifier noise cancels in
    // the ON/OFF differencing)
    let chain0 = ChainConfig::paper_chain(0, 100, 100_000);
    let v_true = apply_loss(&v_dev, chain0.eta_minus, chain0.eta_plus, 0.0, 0.0).unwrap();
    let (_, true_duan_minus) = duan_quantities(&v_true);
    let true_logneg = log_negativity(&v_true).unwrap();

    let mut recovered = 0;
    let mut nulls = 0;
    for run in 0..20 {
        let chain = ChainConfig::paper_chain(8100 + run, 100, 100_000);
        let a = analyze_device(&v_dev, &pump, &chain);
        let duan_ok =
            (a.report.duan_minus - true_duan_minus).abs() <= 3.0 * a.report.errors.duan_minus;
        let logneg_ok =
            (a.log_negativity_raw - true_logneg).abs() <= 3.0 * a.report.errors.log_negativity;
        if duan_ok && logneg_ok {
            recovered += 1;
        }

        let chain = ChainConfig::paper_chain(9100 + run, 100, 100_000);
        let null = analyze_device(&CovMat4::vacuum(), &pump, &chain);
        if null.report.log_negativity == 0.0 {
            nulls += 1;
        }
    }
    let ok = recovered >= 19 && nulls >= 19;
    verdict(
        "criterion 8 (end-to-end closure)",
        ok,
        format!(
            "truth recovered within 3 sigma in {recovered}/20 runs, null N = 0 in {nulls}/20 (need >= 19 each)"
        ),
    );
}

#[test]
fn criterion_09_paper_duan_magnitudes() {
    let p = SquidParams::default();
    let pump = PumpConfig::paper_point(15e-3);
    let chain = ChainConfig::paper_chain(915, 200, 1_000_000);
    let (on, off) = pump_cycle_moments(&pump, &p, &chain).unwrap();
    let (cm, cp) = midpoint_calibs(&chain, pump.f_minus_hz, pump.f_plus_hz);
    let a = analyze_raw_moments(&on, &off, &cm, &cp, chain.seed).unwrap();
    let ok = (a.squeezing_db + 0.09).abs() < 0.06 && (a.amplification_db - 0.25).abs() < 0.06;
    verdict(
        "criterion 9 (squeezing/amplification magnitudes)",
        ok,
        format!(
            "squeezing {:.3} dB (want -0.09 ± 0.06), amplification {:.3} dB (want +0.25 ± 0.06)",
            a.squeezing_db, a.amplification_db
        ),
    );
}

#[test]
fn criterion_10_nonlinearity_trend() {
    let p = SquidParams::default();
    // deterministic part: dce_purity monotone decreasing over [5, 25] mPhi0
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for k in 0..=20 {
        let phi_ac = 5e-3 + 1e-3 * k as f64;
        let pur = dce_purity(&PumpConfig::paper_point(phi_ac), &p).unwrap();
        monotone &= pur < prev;
        prev = pur;
    }

    // simulated sweep: N peaks below 15 mPhi0, then declines
    let amplitudes = [5e-3, 9e-3, 13e-3, 17e-3, 21e-3, 25e-3];
    let mut logneg = Vec::new();
    for (k, &phi_ac) in amplitudes.iter().enumerate() {
        let pump = PumpConfig::paper_point(phi_ac);
        let chain = ChainConfig::paper_chain(1700 + k as u64, 100, 500_000);
        let (on, off) = pump_cycle_moments(&pump, &p, &chain).unwrap();
        let (cm, cp) = midpoint_calibs(&chain, pump.f_minus_hz, pump.f_plus_hz);
        let a = analyze_raw_moments(&on, &off, &cm, &cp, chain.seed).unwrap();
        logneg.push(a.report.log_negativity);
    }
    let peak = logneg
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let peak_below_15 = amplitudes[peak.0] < 15e-3;
    let declines = logneg[4] < *peak.1 && logneg[5] < *peak.1 && logneg[5] <= logneg[4].max(1e-12);
    let ok = monotone && peak_below_15 && declines && *peak.1 > 0.0;
    verdict(
        "criterion 10 (non-linearity trend)",
        ok,
        format!(
            "purity monotone: {monotone}; N column {:?} peaks at {} mPhi0",
            logneg.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            amplitudes[peak.0] * 1e3
        ),
    );
}

#[test]
fn criterion_11_flux_pump_slope() {
    let slope_true = 0.375;
    let v_pump: Vec<f64> = (1..=12).map(|k| 0.02 * k as f64).collect();
    let phi_dc: Vec<f64> = (0..200).map(|j| 0.30 + 0.001 * j as f64).collect();
    let power: Vec<Vec<f64>> = v_pump
        .iter()
        .map(|&v| {
            let onset = 0.5 - slope_true * v;
            phi_dc
                .iter()
                .enumerate()
                .map(|(j, &phi)| {
                    let bg = 1.0 + 1e-4 * ((j % 7) as f64 - 3.0);
                    if phi >= onset {
                        bg + 50.0
                    } else {
                        bg
                    }
                })
                .collect()
        })
        .collect();
    let map = PumpMap {
        v_pump,
        phi_dc,
        power,
    };
    let (slope, _) = flux_pump_slope(&map).unwrap();
    let dev = (slope / slope_true - 1.0).abs();
    verdict(
        "criterion 11 (flux-pump calibration slope)",
        dev < 0.02,
        format!("slope = {slope:.4} Phi0/V (want 0.375 ± 2%)"),
    );
}

#[test]
fn criterion_12_determinism() {
    let p = SquidParams::default();
    let pump = PumpConfig::paper_point(15e-3);
    let chain = ChainConfig::paper_chain(121, 5, 10_000);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let rs1 = pump_cycle_dataset(&pump, &p, &chain).unwrap();
    write_records_csv(&a, &rs1).unwrap();
    let rs2 = pump_cycle_dataset(&pump, &p, &chain).unwrap();
    write_records_csv(&b, &rs2).unwrap();
    let identical = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
    verdict(
        "criterion 12 (determinism)",
        identical,
        "repeated fixed-seed runs produce byte-identical data files".to_string(),
    );
}
