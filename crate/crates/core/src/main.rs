//! `dce` — command-line front end for the simulator and analysis toolkit.
//!
//! Subcommands wire the library into the experiment's workflows:
//! `simulate` produces quadrature datasets plus an injected-truth JSON,
//! `calibrate` fits the shot-noise model to a current sweep, `analyze` turns
//! records into an entanglement report, `sweep` scans pump amplitude, and
//! `rate` integrates ebit rates over a detection band. All output files are
//! written atomically and carry a schema-version key.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dce_sim::analysis::{self, Pair};
use dce_sim::calibration;
use dce_sim::chain::{self, RecordSet};
use dce_sim::config::RunConfig;
use dce_sim::gaussian;
use dce_sim::rates;
use dce_sim::squid;
use dce_sim::Error;

#[derive(Parser)]
#[command(name = "dce", version, about = "Broadband two-mode squeezing simulator and analysis toolkit")]
struct Cli {
    /// Run configuration JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: current directory or config paths.out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pump-cycled quadrature dataset and its injected truth.
    Simulate {
        /// Records file format.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Fit gain and noise temperature to a shot-noise sweep CSV.
    Calibrate {
        /// Input sweep CSV with `# key=value` metadata (T, R, Z0, f, Bw).
        input: PathBuf,
    },
    /// Analyze a records file into an entanglement report and histograms.
    Analyze {
        /// Records file (CSV or binary, auto-detected by extension).
        records: PathBuf,
        /// Lower-band calibration JSON (default: identity at the band gains
        /// from the dataset metadata).
        #[arg(long)]
        calib_minus: Option<PathBuf>,
        /// Upper-band calibration JSON.
        #[arg(long)]
        calib_plus: Option<PathBuf>,
    },
    /// Simulate and analyze across a list of pump amplitudes.
    Sweep {
        /// Pump amplitudes in units of Phi0, comma-separated (e.g.
        /// "0.005,0.010,0.015").
        #[arg(long, value_delimiter = ',', required = true)]
        amplitudes: Vec<f64>,
    },
    /// Integrate the ebit rate of the parabolic spectrum over a band.
    Rate {
        /// Peak photon spectral density n_p.
        #[arg(long, conflicts_with = "peak_logneg")]
        n_p: Option<f64>,
        /// Alternatively: n_p chosen so the peak log-negativity equals this.
        #[arg(long)]
        peak_logneg: Option<f64>,
        /// Pump frequency (Hz).
        #[arg(long, default_value_t = 8.9e9)]
        f_p: f64,
        /// Band lower edge (Hz).
        #[arg(long, default_value_t = 0.0)]
        f_lo: f64,
        /// Band upper edge (Hz); defaults to the pump frequency.
        #[arg(long)]
        f_hi: Option<f64>,
        /// Simpson panel count (even, >= 64).
        #[arg(long, default_value_t = rates::DEFAULT_PANELS)]
        panels: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Format(_) => 2,
        Error::Io(_) => 3,
        Error::Numerical { .. }
        | Error::SingularInductance { .. }
        | Error::Fit(_)
        | Error::Sampling(_)
        | Error::OnsetNotFound => 4,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => return Err(Error::Config("--config is required for this subcommand".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.chain.seed = seed;
    } else {
        cfg.chain.seed = cfg.seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.paths.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Simulate { format } => cmd_simulate(cli, *format),
        Command::Calibrate { input } => cmd_calibrate(cli, input),
        Command::Analyze {
            records,
            calib_minus,
            calib_plus,
        } => cmd_analyze(cli, records, calib_minus.as_deref(), calib_plus.as_deref()),
        Command::Sweep { amplitudes } => cmd_sweep(cli, amplitudes),
        Command::Rate {
            n_p,
            peak_logneg,
            f_p,
            f_lo,
            f_hi,
            panels,
        } => cmd_rate(cli, *n_p, *peak_logneg, *f_p, *f_lo, *f_hi, *panels),
    }
}

fn cmd_simulate(cli: &Cli, format: Format) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, Some(&cfg));
    ensure_dir(&dir)?;

    let rs = chain::pump_cycle_dataset(&cfg.pump, &cfg.squid, &cfg.chain)?;
    match format {
        Format::Csv => chain::write_records_csv(&dir.join("records.csv"), &rs)?,
        Format::Bin => chain::write_records_binary(&dir.join("records.bin"), &rs)?,
    }

    // injected truth for closure testing
    let n_p = squid::dce_peak_density(&cfg.pump, &cfg.squid)?;
    let pair_purity = squid::dce_purity(&cfg.pump, &cfg.squid)?;
    let v_dev = chain::device_covariance(&cfg.pump, &cfg.squid)?;
    let (n_minus, n_plus) = if n_p > 0.0 {
        let model = rates::SpectralModel::new(n_p, cfg.pump.f_p_hz)?;
        (
            rates::n_of_f(cfg.pump.f_minus_hz, &model)?,
            rates::n_of_f(cfg.pump.f_plus_hz, &model)?,
        )
    } else {
        (0.0, 0.0)
    };
    let sinh2r = (n_minus * n_plus).sqrt();
    // expected input-referred state: the lossy device state without
    // amplifier noise (noise cancels in ON/OFF differencing)
    let v_expected = gaussian::apply_loss(
        &v_dev,
        cfg.chain.eta_minus,
        cfg.chain.eta_plus,
        0.0,
        0.0,
    )?;
    let report = gaussian::entanglement_report(&v_expected)?;
    let truth = serde_json::json!({
        "schema_version": 1,
        "n_p": n_p,
        "n_minus": n_minus,
        "n_plus": n_plus,
        "r": sinh2r.sqrt().asinh(),
        "purity": pair_purity,
        "gains": {
            "g_start_minus": cfg.chain.g_start_minus,
            "g_end_minus": cfg.chain.g_end_minus,
            "g_start_plus": cfg.chain.g_start_plus,
            "g_end_plus": cfg.chain.g_end_plus,
        },
        "device_covariance": v_dev.to_rows(),
        "expected_input_referred": {
            "covariance": v_expected.to_rows(),
            "log_negativity": report.log_negativity,
            "duan_minus": report.duan_minus,
            "duan_plus": report.duan_plus,
        },
    });
    dce_sim::io::atomic_write(
        &dir.join("truth.json"),
        serde_json::to_string_pretty(&truth).expect("truth serializes").as_bytes(),
    )?;
    println!("wrote {} records to {}", rs.records.len(), dir.display());
    Ok(())
}

fn cmd_calibrate(cli: &Cli, input: &Path) -> Result<(), Error> {
    let (data, env, bw) = calibration::read_shot_noise_csv(input)?;
    let fit = calibration::fit_calibration(&data, &env, bw)?;
    let dir = out_dir(cli, None);
    ensure_dir(&dir)?;
    let path = dir.join("calibration.json");
    calibration::write_calibration_json(&path, &fit)?;
    println!(
        "G = {:.4e} ± {:.2e}, T_n = {:.3} ± {:.3} K -> {}",
        fit.g,
        fit.dg,
        fit.t_n,
        fit.dt_n,
        path.display()
    );
    if fit.at_bound {
        eprintln!("warning: T_n optimizer stopped at a search bound");
    }
    Ok(())
}

fn read_records_auto(path: &Path) -> Result<RecordSet, Error> {
    if path.extension().and_then(|e| e.to_str()) == Some("bin") {
        chain::read_records_binary(path)
    } else {
        chain::read_records_csv(path)
    }
}

fn cmd_analyze(
    cli: &Cli,
    records: &Path,
    calib_minus: Option<&Path>,
    calib_plus: Option<&Path>,
) -> Result<(), Error> {
    let rs = read_records_auto(records)?;
    // fall back to the drift-midpoint gains recorded in the dataset metadata
    let c = &rs.meta.chain;
    let fit_minus = match calib_minus {
        Some(p) => calibration::read_calibration_json(p)?,
        None => {
            let mut f = calibration::CalibrationFit::identity(rs.meta.pump.f_minus_hz, c.bw_hz);
            f.g = 0.5 * (c.g_start_minus + c.g_end_minus);
            f
        }
    };
    let fit_plus = match calib_plus {
        Some(p) => calibration::read_calibration_json(p)?,
        None => {
            let mut f = calibration::CalibrationFit::identity(rs.meta.pump.f_plus_hz, c.bw_hz);
            f.g = 0.5 * (c.g_start_plus + c.g_end_plus);
            f
        }
    };

    let result = analysis::analyze(&rs, &fit_minus, &fit_plus)?;
    let dir = out_dir(cli, None);
    ensure_dir(&dir)?;
    analysis::write_analysis_json(&dir.join("analysis.json"), &result)?;

    // plot-ready signed histograms of all four quadrature pairs, ranged at
    // six sigma of the detected-record spread
    let probe = rs.records.len().min(100_000);
    let spread = (rs.records[..probe]
        .iter()
        .map(|r| r.i_minus * r.i_minus + r.q_minus * r.q_minus + r.i_plus * r.i_plus + r.q_plus * r.q_plus)
        .sum::<f64>()
        / (4 * probe) as f64)
        .sqrt();
    let half = 6.0 * spread;
    for (pair, name) in [
        (Pair::IminusIplus, "hist_im_ip.csv"),
        (Pair::QminusQplus, "hist_qm_qp.csv"),
        (Pair::IminusQplus, "hist_im_qp.csv"),
        (Pair::QminusIplus, "hist_qm_ip.csv"),
    ] {
        let h = analysis::histogram2d(&rs, pair, analysis::DEFAULT_HISTOGRAM_BINS, (-half, half))?;
        analysis::write_histogram_csv(&dir.join(name), &h)?;
    }

    println!(
        "N = {:.4} (raw {:.4} ± {:.4}), duan- = {:.4} ± {:.4} ({:+.3} dB), duan+ = {:.4} ± {:.4} ({:+.3} dB)",
        result.report.log_negativity,
        result.log_negativity_raw,
        result.report.errors.log_negativity,
        result.report.duan_minus,
        result.report.errors.duan_minus,
        result.squeezing_db,
        result.report.duan_plus,
        result.report.errors.duan_plus,
        result.amplification_db,
    );
    Ok(())
}

fn cmd_sweep(cli: &Cli, amplitudes: &[f64]) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, Some(&cfg));
    ensure_dir(&dir)?;

    fn splitmix64(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9e3779b97f4a7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
        x ^ (x >> 31)
    }

    let rows: Vec<(f64, Result<(f64, analysis::AnalysisResult, f64), Error>)> = amplitudes
        .par_iter()
        .enumerate()
        .map(|(k, &phi_ac)| {
            let point = (|| {
                let mut pump = cfg.pump.clone();
                pump.phi_ac_phi0 = phi_ac;
                let mut chain_cfg = cfg.chain.clone();
                chain_cfg.seed = splitmix64(cfg.seed ^ k as u64);
                let rs = chain::pump_cycle_dataset(&pump, &cfg.squid, &chain_cfg)?;
                let mut fit_minus =
                    calibration::CalibrationFit::identity(pump.f_minus_hz, chain_cfg.bw_hz);
                fit_minus.g = 0.5 * (chain_cfg.g_start_minus + chain_cfg.g_end_minus);
                let mut fit_plus =
                    calibration::CalibrationFit::identity(pump.f_plus_hz, chain_cfg.bw_hz);
                fit_plus.g = 0.5 * (chain_cfg.g_start_plus + chain_cfg.g_end_plus);
                let result = analysis::analyze(&rs, &fit_minus, &fit_plus)?;
                let pair_purity = squid::dce_purity(&pump, &cfg.squid)?;
                let n = (result.n_minus + result.n_plus) / 2.0;
                Ok((n, result, pair_purity))
            })();
            (phi_ac, point)
        })
        .collect();

    let mut out = String::from("# schema_version=1\n");
    out.push_str("phi_ac_phi0,n,log_negativity,duan_minus,duan_plus,dce_purity\n");
    let mut failures = 0;
    for (phi_ac, row) in &rows {
        match row {
            Ok((n, a, purity)) => out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                phi_ac, n, a.report.log_negativity, a.report.duan_minus, a.report.duan_plus, purity
            )),
            Err(e) => {
                eprintln!("sweep point {phi_ac}: {e}");
                failures += 1;
                out.push_str(&format!("{phi_ac},NaN,NaN,NaN,NaN,NaN\n"));
            }
        }
    }
    let path = dir.join("sweep.csv");
    dce_sim::io::atomic_write(&path, out.as_bytes())?;
    println!("wrote {} sweep points to {}", rows.len(), path.display());
    if failures > 0 {
        return Err(Error::Numerical {
            context: "sweep points failed; NaN rows emitted",
            value: failures as f64,
        });
    }
    Ok(())
}

fn cmd_rate(
    cli: &Cli,
    n_p: Option<f64>,
    peak_logneg: Option<f64>,
    f_p: f64,
    f_lo: f64,
    f_hi: Option<f64>,
    panels: usize,
) -> Result<(), Error> {
    let model = match (n_p, peak_logneg) {
        (Some(n), None) => rates::SpectralModel::new(n, f_p)?,
        (None, Some(t)) => rates::SpectralModel::with_peak_logneg(t, f_p)?,
        (None, None) => rates::SpectralModel::new(0.01, f_p)?,
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let f_hi = f_hi.unwrap_or(f_p);
    let result = rates::ebit_rate(&model, f_lo, f_hi, panels)?;
    let dir = out_dir(cli, None);
    ensure_dir(&dir)?;
    let value = serde_json::json!({
        "schema_version": 1,
        "model": model,
        "rate_ebit_per_s": result.rate_ebit_per_s,
        "band_hz": result.band_hz,
        "panels": result.panels,
        "peak_ef": result.peak_ef,
    });
    dce_sim::io::atomic_write(
        &dir.join("rate.json"),
        serde_json::to_string_pretty(&value).expect("rate serializes").as_bytes(),
    )?;
    println!(
        "rate = {:.4} Mebit/s over [{:.3}, {:.3}] GHz (n_p = {:.4e})",
        result.rate_ebit_per_s / 1e6,
        f_lo / 1e9,
        f_hi / 1e9,
        model.n_p
    );
    println!("{}", rates::render_comparison_table(&rates::comparison_table()));
    Ok(())
}
