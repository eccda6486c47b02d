//! Synthetic measurement-chain simulator.
//!
//! Builds the device-level two-mode squeezed state from the SQUID model,
//! propagates it through loss and amplifier noise, and draws finite
//! heterodyne quadrature records with pump on/off cycling and linear gain
//! drift — the ground-truth factory for exercising the analysis pipeline.
//!
//! Record layout follows the measurement: each cycle contributes
//! `samples_per_cycle` pump-ON records followed by the same count of pump-OFF
//! records; OFF records see the chain with vacuum at its input. Detected
//! records carry the gain factor so the analysis must divide it back out
//! through the shot-noise calibration.

use std::collections::BTreeMap;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::ShotNoiseEnv;
use crate::constants::{BOLTZMANN, PLANCK};
use crate::gaussian::{apply_loss, CovMat4};
use crate::io;
use crate::rates::{n_of_f, SpectralModel};
use crate::squid::{dce_peak_density, dce_purity, PumpConfig, SquidParams};
use crate::{Error, Result};

/// Loss, noise, gain-drift and sampling parameters of the detection chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Power transmissivity device → amplifier, lower band.
    pub eta_minus: f64,
    /// Power transmissivity device → amplifier, upper band.
    pub eta_plus: f64,
    /// System noise temperature referred to the device, lower band (K).
    pub t_n_minus_k: f64,
    /// System noise temperature referred to the device, upper band (K).
    pub t_n_plus_k: f64,
    /// Lower-band power gain at the start of the run.
    pub g_start_minus: f64,
    /// Lower-band power gain at the end of the run.
    pub g_end_minus: f64,
    /// Upper-band power gain at the start of the run.
    pub g_start_plus: f64,
    /// Upper-band power gain at the end of the run.
    pub g_end_plus: f64,
    /// Detection bandwidth (Hz).
    pub bw_hz: f64,
    /// RNG seed; streams derive deterministically from (seed, cycle, flag).
    pub seed: u64,
    /// Number of pump on/off cycle pairs.
    pub cycles: usize,
    /// Quadrature records per pump state per cycle.
    pub samples_per_cycle: usize,
}

impl ChainConfig {
    /// Measured chain: losses −2.3/−1.7 dB, noise 3.71/2.95 K, gains from
    /// the start/end shot-noise calibrations.
    pub fn paper_chain(seed: u64, cycles: usize, samples_per_cycle: usize) -> Self {
        ChainConfig {
            eta_minus: 10f64.powf(-0.23),
            eta_plus: 10f64.powf(-0.17),
            t_n_minus_k: 3.71,
            t_n_plus_k: 2.95,
            g_start_minus: 1.3051e9,
            g_end_minus: 1.2929e9,
            g_start_plus: 1.4906e9,
            g_end_plus: 1.4817e9,
            bw_hz: 200e3,
            seed,
            cycles,
            samples_per_cycle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [("eta_minus", self.eta_minus), ("eta_plus", self.eta_plus)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::Config(format!("{name} = {eta} outside [0, 1]")));
            }
        }
        for (name, g) in [
            ("g_start_minus", self.g_start_minus),
            ("g_end_minus", self.g_end_minus),
            ("g_start_plus", self.g_start_plus),
            ("g_end_plus", self.g_end_plus),
        ] {
            if g <= 0.0 {
                return Err(Error::Config(format!("{name} = {g} must be > 0")));
            }
        }
        if self.t_n_minus_k < 0.0 || self.t_n_plus_k < 0.0 {
            return Err(Error::Config("noise temperatures must be >= 0".into()));
        }
        if self.bw_hz <= 0.0 {
            return Err(Error::Config("bandwidth must be > 0".into()));
        }
        if self.cycles < 1 || self.samples_per_cycle < 1 {
            return Err(Error::Config("cycles and samples_per_cycle must be >= 1".into()));
        }
        Ok(())
    }

    /// Linearly interpolated (G−, G+) for cycle `c` of `cycles`.
    pub fn gains_at_cycle(&self, c: usize) -> (f64, f64) {
        let frac = if self.cycles > 1 {
            c as f64 / (self.cycles - 1) as f64
        } else {
            0.0
        };
        (
            self.g_start_minus + frac * (self.g_end_minus - self.g_start_minus),
            self.g_start_plus + frac * (self.g_end_plus - self.g_start_plus),
        )
    }
}

/// One detected four-quadrature sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub cycle: u32,
    pub pump_on: bool,
    pub i_minus: f64,
    pub q_minus: f64,
    pub i_plus: f64,
    pub q_plus: f64,
}

/// Configuration snapshot stored alongside a dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordMeta {
    pub pump: PumpConfig,
    pub chain: ChainConfig,
}

/// A full simulated (or loaded) dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordSet {
    pub records: Vec<QuadratureRecord>,
    pub meta: RecordMeta,
}

/// Device-level covariance from explicit spectral densities and pair purity:
/// squeezing from `sinh²r = √(n− n+)`, pair correlations scaled by `√purity`
/// and the complementary `(1 − purity)·n±` added as uncorrelated thermal
/// occupation.
pub fn device_state(n_minus: f64, n_plus: f64, pair_purity: f64) -> Result<CovMat4> {
    if n_minus < 0.0 || n_plus < 0.0 {
        return Err(Error::Domain("photon densities must be >= 0".into()));
    }
    if !(0.0..=1.0).contains(&pair_purity) {
        return Err(Error::Domain(format!(
            "pair purity {pair_purity} outside [0, 1]"
        )));
    }
    let s = (n_minus * n_plus).sqrt();
    let c = pair_purity.sqrt() * (s * (s + 1.0)).sqrt();
    let mut v = CovMat4::zero();
    let diag_minus = 0.5 + s + (1.0 - pair_purity) * n_minus;
    let diag_plus = 0.5 + s + (1.0 - pair_purity) * n_plus;
    v.set(0, 0, diag_minus);
    v.set(1, 1, diag_minus);
    v.set(2, 2, diag_plus);
    v.set(3, 3, diag_plus);
    v.set(2, 0, c);
    v.set(3, 1, -c);
    Ok(v)
}

/// Device-level covariance at a pump working point, with the photon spectral
/// densities taken from the parabolic spectrum at (f−, f+) and the pair
/// purity from the harmonic decomposition.
pub fn device_covariance(cfg: &PumpConfig, p: &SquidParams) -> Result<CovMat4> {
    cfg.validate()?;
    let n_p = dce_peak_density(cfg, p)?;
    if n_p == 0.0 {
        return Ok(CovMat4::vacuum());
    }
    let model = SpectralModel::new(n_p, cfg.f_p_hz)?;
    let n_minus = n_of_f(cfg.f_minus_hz, &model)?;
    let n_plus = n_of_f(cfg.f_plus_hz, &model)?;
    device_state(n_minus, n_plus, dce_purity(cfg, p)?)
}

/// Detected covariance: loss, then amplifier noise occupation
/// `n_amp± = kB T_n±/(h f±)` on the diagonal blocks, then the current power
/// gains (per band on diagonal blocks, `√(G− G+)` on the cross block).
pub fn detected_covariance(
    v_dev: &CovMat4,
    chain: &ChainConfig,
    f_minus_hz: f64,
    f_plus_hz: f64,
    g_minus: f64,
    g_plus: f64,
) -> Result<CovMat4> {
    chain.validate()?;
    if f_minus_hz <= 0.0 || f_plus_hz <= 0.0 {
        return Err(Error::Domain("detection frequencies must be > 0".into()));
    }
    if g_minus <= 0.0 || g_plus <= 0.0 {
        return Err(Error::Domain("gains must be > 0".into()));
    }
    let mut v = apply_loss(v_dev, chain.eta_minus, chain.eta_plus, 0.0, 0.0)?;
    let n_amp_minus = BOLTZMANN * chain.t_n_minus_k / (PLANCK * f_minus_hz);
    let n_amp_plus = BOLTZMANN * chain.t_n_plus_k / (PLANCK * f_plus_hz);
    for i in 0..4 {
        let n_amp = if i < 2 { n_amp_minus } else { n_amp_plus };
        v.set(i, i, v.get(i, i) + n_amp);
    }
    let cross = (g_minus * g_plus).sqrt();
    for i in 0..4 {
        for j in 0..=i {
            let scale = match (i < 2, j < 2) {
                (true, true) => g_minus,
                (false, false) => g_plus,
                _ => cross,
            };
            v.set(i, j, scale * v.get(i, j));
        }
    }
    Ok(v)
}

/// Lower-triangular Cholesky factor of a 4×4 covariance, tolerating tiny
/// negative eigen-directions: pivots below −1e−10 are an error, pivots in
/// (−1e−10, 1e−12] are floored at the 1e−12 jitter level.
fn cholesky4(v: &CovMat4) -> Result<[[f64; 4]; 4]> {
    const INDEFINITE_TOL: f64 = 1e-10;
    const JITTER: f64 = 1e-12;
    let m = v.to_rows();
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum < -INDEFINITE_TOL {
                    return Err(Error::Sampling(format!(
                        "covariance indefinite: pivot {sum:e} at index {i}"
                    )));
                }
                l[i][j] = sum.max(JITTER).sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Derive an independent RNG for a (seed, cycle, pump flag) triple via a
/// splitmix64 chain, so cycles can be generated in parallel and in any order.
fn stream_rng(seed: u64, cycle: u64, pump_on: bool) -> ChaCha8Rng {
    fn splitmix64(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9e3779b97f4a7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
        x ^ (x >> 31)
    }
    let s = splitmix64(splitmix64(splitmix64(seed) ^ cycle) ^ pump_on as u64);
    ChaCha8Rng::seed_from_u64(s)
}

/// Draw `count` zero-mean Gaussian records with covariance `v`.
pub fn sample_records(
    v: &CovMat4,
    count: usize,
    cycle: u32,
    pump_on: bool,
    seed: u64,
) -> Result<Vec<QuadratureRecord>> {
    let l = cholesky4(v)?;
    let mut rng = stream_rng(seed, cycle as u64, pump_on);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let z: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let mut x = [0.0; 4];
        for i in 0..4 {
            for k in 0..=i {
                x[i] += l[i][k] * z[k];
            }
        }
        out.push(QuadratureRecord {
            cycle,
            pump_on,
            i_minus: x[0],
            q_minus: x[1],
            i_plus: x[2],
            q_plus: x[3],
        });
    }
    Ok(out)
}

/// Generate a full pump-cycled dataset: per cycle, `samples_per_cycle` ON
/// records (device state through the chain) then the same count OFF (vacuum
/// through the chain), with gains drifting linearly across cycles. Cycles
/// are generated in parallel and merged in deterministic order.
pub fn pump_cycle_dataset(
    cfg: &PumpConfig,
    p: &SquidParams,
    chain: &ChainConfig,
) -> Result<RecordSet> {
    let v_dev = device_covariance(cfg, p)?;
    pump_cycle_dataset_with_device(&v_dev, cfg, chain)
}

/// [`pump_cycle_dataset`] with an explicitly injected device state, for
/// closure tests that pin the input rather than deriving it from the SQUID
/// model.
pub fn pump_cycle_dataset_with_device(
    v_dev: &CovMat4,
    cfg: &PumpConfig,
    chain: &ChainConfig,
) -> Result<RecordSet> {
    cfg.validate()?;
    chain.validate()?;
    let vacuum = CovMat4::vacuum();
    let per_cycle: Vec<Result<Vec<QuadratureRecord>>> = (0..chain.cycles)
        .into_par_iter()
        .map(|c| {
            let (g_minus, g_plus) = chain.gains_at_cycle(c);
            let v_on =
                detected_covariance(v_dev, chain, cfg.f_minus_hz, cfg.f_plus_hz, g_minus, g_plus)?;
            let v_off =
                detected_covariance(&vacuum, chain, cfg.f_minus_hz, cfg.f_plus_hz, g_minus, g_plus)?;
            let mut recs =
                sample_records(&v_on, chain.samples_per_cycle, c as u32, true, chain.seed)?;
            recs.extend(sample_records(
                &v_off,
                chain.samples_per_cycle,
                c as u32,
                false,
                chain.seed,
            )?);
            Ok(recs)
        })
        .collect();
    let mut records = Vec::with_capacity(chain.cycles * chain.samples_per_cycle * 2);
    for r in per_cycle {
        records.extend(r?);
    }
    Ok(RecordSet {
        records,
        meta: RecordMeta {
            pump: cfg.clone(),
            chain: chain.clone(),
        },
    })
}

/// Per-cycle detected second-moment matrices of a pump-cycled run, computed
/// in a streaming fashion without materializing the records.
///
/// Uses the same RNG stream per (seed, cycle, flag) as
/// [`pump_cycle_dataset`], so the returned ON/OFF moment lists are exactly
/// those of the materialized dataset — but in O(cycles) memory, which makes
/// 1e8-sample runs feasible.
pub fn pump_cycle_moments(
    cfg: &PumpConfig,
    p: &SquidParams,
    chain: &ChainConfig,
) -> Result<(Vec<CovMat4>, Vec<CovMat4>)> {
    let v_dev = device_covariance(cfg, p)?;
    pump_cycle_moments_with_device(&v_dev, cfg, chain)
}

/// [`pump_cycle_moments`] with an explicitly injected device state.
pub fn pump_cycle_moments_with_device(
    v_dev: &CovMat4,
    cfg: &PumpConfig,
    chain: &ChainConfig,
) -> Result<(Vec<CovMat4>, Vec<CovMat4>)> {
    cfg.validate()?;
    chain.validate()?;
    let vacuum = CovMat4::vacuum();
    let per_cycle: Vec<Result<(CovMat4, CovMat4)>> = (0..chain.cycles)
        .into_par_iter()
        .map(|c| {
            let (g_minus, g_plus) = chain.gains_at_cycle(c);
            let v_on =
                detected_covariance(v_dev, chain, cfg.f_minus_hz, cfg.f_plus_hz, g_minus, g_plus)?;
            let v_off =
                detected_covariance(&vacuum, chain, cfg.f_minus_hz, cfg.f_plus_hz, g_minus, g_plus)?;
            Ok((
                stream_moment(&v_on, chain.samples_per_cycle, c as u32, true, chain.seed)?,
                stream_moment(&v_off, chain.samples_per_cycle, c as u32, false, chain.seed)?,
            ))
        })
        .collect();
    let mut on = Vec::with_capacity(chain.cycles);
    let mut off = Vec::with_capacity(chain.cycles);
    for r in per_cycle {
        let (a, b) = r?;
        on.push(a);
        off.push(b);
    }
    Ok((on, off))
}

/// Mean outer-product matrix of `count` draws from N(0, v), streaming.
fn stream_moment(
    v: &CovMat4,
    count: usize,
    cycle: u32,
    pump_on: bool,
    seed: u64,
) -> Result<CovMat4> {
    let l = cholesky4(v)?;
    let mut rng = stream_rng(seed, cycle as u64, pump_on);
    let mut acc = [[0.0f64; 4]; 4];
    for _ in 0..count {
        let z: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let mut x = [0.0; 4];
        for i in 0..4 {
            for k in 0..=i {
                x[i] += l[i][k] * z[k];
            }
        }
        for i in 0..4 {
            for j in 0..=i {
                acc[i][j] += x[i] * x[j];
            }
        }
    }
    let mut m = CovMat4::zero();
    for i in 0..4 {
        for j in 0..=i {
            m.set(i, j, acc[i][j] / count as f64);
        }
    }
    Ok(m)
}

/// Synthetic shot-noise sweep: model values multiplied by
/// `(1 + noise_frac·gaussian)`, deterministic per seed.
pub fn simulate_shot_noise_sweep(
    g: f64,
    t_n_k: f64,
    env: &ShotNoiseEnv,
    bw_hz: f64,
    currents: &[f64],
    noise_frac: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if noise_frac < 0.0 {
        return Err(Error::Domain(format!("noise_frac = {noise_frac} < 0")));
    }
    let mut rng = stream_rng(seed, u64::MAX, false);
    currents
        .iter()
        .map(|&i| {
            let s = crate::calibration::shot_noise_psd(i, g, t_n_k, bw_hz, env)?;
            let noise: f64 = rng.sample(StandardNormal);
            Ok((i, s * (1.0 + noise_frac * noise)))
        })
        .collect()
}

fn meta_header(meta: &RecordMeta) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("schema_version".to_string(), "1".to_string());
    map.insert(
        "pump_config".to_string(),
        serde_json::to_string(&meta.pump).expect("pump serializes"),
    );
    map.insert(
        "chain_config".to_string(),
        serde_json::to_string(&meta.chain).expect("chain serializes"),
    );
    map
}

fn meta_from_header(map: &BTreeMap<String, String>) -> Result<RecordMeta> {
    let pump = map
        .get("pump_config")
        .ok_or_else(|| Error::Format("missing pump_config header".into()))?;
    let chain = map
        .get("chain_config")
        .ok_or_else(|| Error::Format("missing chain_config header".into()))?;
    Ok(RecordMeta {
        pump: serde_json::from_str(pump)
            .map_err(|e| Error::Format(format!("pump_config: {e}")))?,
        chain: serde_json::from_str(chain)
            .map_err(|e| Error::Format(format!("chain_config: {e}")))?,
    })
}

/// Write a dataset as CSV: `# key=value` metadata, a column-name row, then
/// one row per record. Floats use the shortest representation that parses
/// back to the identical value.
pub fn write_records_csv(path: &Path, rs: &RecordSet) -> Result<()> {
    let mut out = io::format_header(&meta_header(&rs.meta));
    out.push_str("cycle,pump_on,i_minus,q_minus,i_plus,q_plus\n");
    for r in &rs.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.cycle, r.pump_on as u8, r.i_minus, r.q_minus, r.i_plus, r.q_plus
        ));
    }
    io::atomic_write(path, out.as_bytes())
}

/// Read a dataset written by [`write_records_csv`].
pub fn read_records_csv(path: &Path) -> Result<RecordSet> {
    let text = io::read_text(path)?;
    let (meta_map, body) = io::split_header(&text);
    let meta = meta_from_header(&meta_map)?;
    let mut records = Vec::new();
    for line in body {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(Error::Format(format!("expected 6 columns, got: {line}")));
        }
        if cols[0] == "cycle" {
            continue;
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Format(format!("bad float: {s}")))
        };
        records.push(QuadratureRecord {
            cycle: cols[0]
                .parse()
                .map_err(|_| Error::Format(format!("bad cycle index: {}", cols[0])))?,
            pump_on: match cols[1] {
                "1" => true,
                "0" => false,
                other => return Err(Error::Format(format!("bad pump flag: {other}"))),
            },
            i_minus: parse(cols[2])?,
            q_minus: parse(cols[3])?,
            i_plus: parse(cols[4])?,
            q_plus: parse(cols[5])?,
        });
    }
    Ok(RecordSet { records, meta })
}

/// Write a dataset as little-endian binary: six f64 per record
/// (cycle, pump flag, I−, Q−, I+, Q+) plus a JSON sidecar `<path>.json`
/// holding the metadata and record count.
pub fn write_records_binary(path: &Path, rs: &RecordSet) -> Result<()> {
    let mut bytes = Vec::with_capacity(rs.records.len() * 48);
    for r in &rs.records {
        for v in [
            r.cycle as f64,
            r.pump_on as u8 as f64,
            r.i_minus,
            r.q_minus,
            r.i_plus,
            r.q_plus,
        ] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    io::atomic_write(path, &bytes)?;
    let sidecar = serde_json::json!({
        "schema_version": 1,
        "record_count": rs.records.len(),
        "pump": rs.meta.pump,
        "chain": rs.meta.chain,
    });
    io::atomic_write(
        &sidecar_path(path),
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes").as_bytes(),
    )
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".json");
    name.into()
}

/// Read a dataset written by [`write_records_binary`].
pub fn read_records_binary(path: &Path) -> Result<RecordSet> {
    let sidecar_text = io::read_text(&sidecar_path(path))?;
    let sidecar: serde_json::Value = serde_json::from_str(&sidecar_text)
        .map_err(|e| Error::Format(format!("binary sidecar: {e}")))?;
    let count = sidecar["record_count"]
        .as_u64()
        .ok_or_else(|| Error::Format("sidecar missing record_count".into()))? as usize;
    let meta = RecordMeta {
        pump: serde_json::from_value(sidecar["pump"].clone())
            .map_err(|e| Error::Format(format!("sidecar pump: {e}")))?,
        chain: serde_json::from_value(sidecar["chain"].clone())
            .map_err(|e| Error::Format(format!("sidecar chain: {e}")))?,
    };
    let bytes = std::fs::read(path)?;
    if bytes.len() != count * 48 {
        return Err(Error::Format(format!(
            "binary length {} does not match {count} records × 48 bytes",
            bytes.len()
        )));
    }
    let mut records = Vec::with_capacity(count);
    for chunk in bytes.chunks_exact(48) {
        let f = |k: usize| f64::from_le_bytes(chunk[8 * k..8 * k + 8].try_into().unwrap());
        records.push(QuadratureRecord {
            cycle: f(0) as u32,
            pump_on: f(1) != 0.0,
            i_minus: f(2),
            q_minus: f(3),
            i_plus: f(4),
            q_plus: f(5),
        });
    }
    Ok(RecordSet { records, meta })
}
