//! Two-mode Gaussian state algebra.
//!
//! Covariance matrices are 4×4, mode ordered (I−, Q−, I+, Q+), in
//! dimensionless quadrature units with vacuum variance 1/2 per quadrature.
//! Entanglement measures follow the closed two-mode forms: the smallest
//! symplectic eigenvalue of the partial transpose from the 2×2 block
//! determinants, the log-negativity `max[0, −log2(2ν−)]`, the Duan combined
//! quadrature variances normalized so vacuum sits at 1, and the entropy of
//! formation built from `c± = (δ^{−1/2} ± δ^{1/2})²/4` with `δ = 2^{−N}`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance for clamping slightly negative radicands produced by
/// statistical noise in measured covariance matrices.
pub const RADICAND_TOL: f64 = 1e-10;

fn tri_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

/// 4×4 symmetric covariance matrix of (I−, Q−, I+, Q+) with per-element
/// one-standard-deviation errors.
///
/// Only the lower triangle is stored, so symmetry holds exactly by
/// construction. Analytic states carry zero errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovMat4 {
    tri: [f64; 10],
    err_tri: [f64; 10],
}

impl CovMat4 {
    /// Vacuum covariance diag(1/2, 1/2, 1/2, 1/2).
    pub fn vacuum() -> Self {
        let mut v = Self::zero();
        for i in 0..4 {
            v.set(i, i, 0.5);
        }
        v
    }

    pub fn zero() -> Self {
        CovMat4 {
            tri: [0.0; 10],
            err_tri: [0.0; 10],
        }
    }

    /// Build from a full matrix; off-diagonal pairs are averaged into the
    /// stored triangle, which makes sample second-moment matrices exactly
    /// symmetric.
    pub fn from_rows(m: [[f64; 4]; 4]) -> Self {
        let mut v = Self::zero();
        for i in 0..4 {
            for j in 0..=i {
                v.set(i, j, 0.5 * (m[i][j] + m[j][i]));
            }
        }
        v
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tri[tri_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.tri[tri_index(i, j)] = value;
    }

    pub fn err(&self, i: usize, j: usize) -> f64 {
        self.err_tri[tri_index(i, j)]
    }

    pub fn set_err(&mut self, i: usize, j: usize, value: f64) {
        self.err_tri[tri_index(i, j)] = value.abs();
    }

    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = self.get(i, j);
            }
        }
        m
    }

    pub fn errors_to_rows(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = self.err(i, j);
            }
        }
        m
    }

    /// Determinant of the upper-left 2×2 block A (mode −).
    pub fn det_a(&self) -> f64 {
        self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0)
    }

    /// Determinant of the lower-right 2×2 block B (mode +).
    pub fn det_b(&self) -> f64 {
        self.get(2, 2) * self.get(3, 3) - self.get(2, 3) * self.get(3, 2)
    }

    /// Determinant of the off-diagonal 2×2 block C.
    pub fn det_c(&self) -> f64 {
        self.get(0, 2) * self.get(1, 3) - self.get(0, 3) * self.get(1, 2)
    }

    /// Full 4×4 determinant (LU with partial pivoting).
    pub fn det(&self) -> f64 {
        let mut m = self.to_rows();
        let mut det = 1.0;
        for k in 0..4 {
            let mut piv = k;
            for r in (k + 1)..4 {
                if m[r][k].abs() > m[piv][k].abs() {
                    piv = r;
                }
            }
            if piv != k {
                m.swap(k, piv);
                det = -det;
            }
            if m[k][k] == 0.0 {
                return 0.0;
            }
            det *= m[k][k];
            for r in (k + 1)..4 {
                let factor = m[r][k] / m[k][k];
                for c in k..4 {
                    m[r][c] -= factor * m[k][c];
                }
            }
        }
        det
    }

    /// Exchange the two modes: A↔B, C↔Cᵀ.
    pub fn swap_modes(&self) -> Self {
        let m = self.to_rows();
        let e = self.errors_to_rows();
        let perm = [2usize, 3, 0, 1];
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..=i {
                out.set(i, j, m[perm[i]][perm[j]]);
                out.set_err(i, j, e[perm[i]][perm[j]]);
            }
        }
        out
    }
}

/// Zero-mean two-mode Gaussian state.
///
/// Every source in this crate is zero mean, so the mean vector is fixed at
/// zero; the tag documents the `⟨q²⟩_vac = 1/2` normalization carried by the
/// covariance matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoModeState {
    pub covariance: CovMat4,
    pub mean: [f64; 4],
    pub convention: &'static str,
}

impl TwoModeState {
    pub fn new(covariance: CovMat4) -> Self {
        TwoModeState {
            covariance,
            mean: [0.0; 4],
            convention: "vacuum-half",
        }
    }
}

/// One-standard-deviation uncertainties attached to an [`EntanglementReport`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ReportErrors {
    pub nu_minus: f64,
    pub log_negativity: f64,
    pub duan_plus: f64,
    pub duan_minus: f64,
    pub entropy_of_formation: f64,
    pub purity: f64,
}

/// Entanglement measures of a two-mode Gaussian state.
///
/// The log-negativity and the Duan criterion are distinct tests; no
/// cross-field constraint is enforced between them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub nu_minus: f64,
    pub log_negativity: f64,
    pub duan_plus: f64,
    pub duan_minus: f64,
    pub entropy_of_formation: f64,
    pub purity: f64,
    pub errors: ReportErrors,
}

/// Covariance matrix of a two-mode squeezed thermal state with squeezing `r`
/// and symmetric thermal occupation `n_th`:
/// A = B = (2n_th+1) cosh(2r)/2 · I and C = (2n_th+1) sinh(2r)/2 · diag(1, −1).
pub fn tmsv_covariance(r: f64, n_th: f64) -> Result<CovMat4> {
    if r < 0.0 {
        return Err(Error::Domain(format!("squeezing parameter r = {r} < 0")));
    }
    if n_th < 0.0 {
        return Err(Error::Domain(format!("thermal occupation n_th = {n_th} < 0")));
    }
    let scale = 2.0 * n_th + 1.0;
    let diag = scale * (2.0 * r).cosh() / 2.0;
    let off = scale * (2.0 * r).sinh() / 2.0;
    let mut v = CovMat4::zero();
    for i in 0..4 {
        v.set(i, i, diag);
    }
    v.set(2, 0, off);
    v.set(3, 1, -off);
    Ok(v)
}

/// Smallest symplectic eigenvalue of the partially transposed state,
/// `ν− = [ζ/2 − (ζ² − 4 det V)^{1/2}/2]^{1/2}` with
/// `ζ = det A + det B − 2 det C`.
///
/// Radicands pushed slightly negative by statistical noise are clamped to
/// zero within [`RADICAND_TOL`]; larger violations are an error carrying the
/// offending value.
pub fn symplectic_nu_minus(v: &CovMat4) -> Result<f64> {
    let zeta = v.det_a() + v.det_b() - 2.0 * v.det_c();
    let inner = zeta * zeta - 4.0 * v.det();
    let inner = clamp_radicand(inner, "symplectic_nu_minus inner radicand")?;
    let outer = zeta / 2.0 - inner.sqrt() / 2.0;
    let outer = clamp_radicand(outer, "symplectic_nu_minus outer radicand")?;
    Ok(outer.sqrt())
}

fn clamp_radicand(x: f64, context: &'static str) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x >= -RADICAND_TOL {
        Ok(0.0)
    } else {
        Err(Error::Numerical { context, value: x })
    }
}

/// Logarithmic negativity `max[0, −log2(2ν−)]`.
pub fn log_negativity(v: &CovMat4) -> Result<f64> {
    let nu = symplectic_nu_minus(v)?;
    Ok((-(2.0 * nu).log2()).max(0.0))
}

/// Duan combined quadrature variances
/// `δ_IQ+ = ⟨(I+ + I−)²⟩ + ⟨(Q+ − Q−)²⟩` and
/// `δ_IQ− = ⟨(I+ − I−)²⟩ + ⟨(Q+ + Q−)²⟩`, divided by 2 so the vacuum gives
/// exactly 1 and the inseparability threshold `δ_IQ− < 1` applies verbatim.
pub fn duan_quantities(v: &CovMat4) -> (f64, f64) {
    let ii = v.get(0, 0);
    let qq = v.get(1, 1);
    let pii = v.get(2, 2);
    let pqq = v.get(3, 3);
    let c_ii = v.get(0, 2);
    let c_qq = v.get(1, 3);
    let plus = (pii + ii + 2.0 * c_ii) + (pqq + qq - 2.0 * c_qq);
    let minus = (pii + ii - 2.0 * c_ii) + (pqq + qq + 2.0 * c_qq);
    (plus / 2.0, minus / 2.0)
}

/// Entropy of formation `E_F = c+ log2(c+) − c− log2(c−)` with
/// `c± = (δ^{−1/2} ± δ^{1/2})²/4` and `δ = 2^{−N}`.
///
/// `E_F(0) = 0` exactly: `c− = 0` there and `0·log2(0)` is taken as 0.
pub fn entropy_of_formation(logneg: f64) -> Result<f64> {
    if logneg < 0.0 {
        return Err(Error::Domain(format!("log-negativity {logneg} < 0")));
    }
    if logneg == 0.0 {
        return Ok(0.0);
    }
    let delta = 2f64.powf(-logneg);
    let half = delta.sqrt();
    let inv_half = 1.0 / half;
    let c_plus = (inv_half + half).powi(2) / 4.0;
    let c_minus = (inv_half - half).powi(2) / 4.0;
    let mut ef = c_plus * c_plus.log2();
    if c_minus > 0.0 {
        ef -= c_minus * c_minus.log2();
    }
    Ok(ef)
}

/// Beam-splitter loss channel with independent transmissivity and added
/// thermal occupation per mode:
/// A → η− A + (1−η−)(2 n_add− + 1)/2 · I (same for B with η+) and
/// C → √(η− η+) C.
pub fn apply_loss(
    v: &CovMat4,
    eta_minus: f64,
    eta_plus: f64,
    n_add_minus: f64,
    n_add_plus: f64,
) -> Result<CovMat4> {
    for (name, eta) in [("eta_minus", eta_minus), ("eta_plus", eta_plus)] {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain(format!("{name} = {eta} outside [0, 1]")));
        }
    }
    for (name, n) in [("n_add_minus", n_add_minus), ("n_add_plus", n_add_plus)] {
        if n < 0.0 {
            return Err(Error::Domain(format!("{name} = {n} < 0")));
        }
    }
    let mut out = v.clone();
    let cross = (eta_minus * eta_plus).sqrt();
    for i in 0..4 {
        for j in 0..=i {
            let (scale, floor) = match (i < 2, j < 2) {
                (true, true) => (eta_minus, (1.0 - eta_minus) * (2.0 * n_add_minus + 1.0) / 2.0),
                (false, false) => (eta_plus, (1.0 - eta_plus) * (2.0 * n_add_plus + 1.0) / 2.0),
                _ => (cross, 0.0),
            };
            let vac = if i == j { floor } else { 0.0 };
            out.set(i, j, scale * v.get(i, j) + vac);
            out.set_err(i, j, scale * v.err(i, j));
        }
    }
    Ok(out)
}

/// Gaussian purity `μ = 1/(4 √det V)`; equals 1 iff the state is pure in the
/// vacuum-half convention.
pub fn purity(v: &CovMat4) -> Result<f64> {
    let det = v.det();
    if det <= 0.0 {
        return Err(Error::Numerical {
            context: "purity determinant",
            value: det,
        });
    }
    Ok(1.0 / (4.0 * det.sqrt()))
}

/// All entanglement measures of an analytic state (errors zero).
pub fn entanglement_report(v: &CovMat4) -> Result<EntanglementReport> {
    let nu_minus = symplectic_nu_minus(v)?;
    let logneg = (-(2.0 * nu_minus).log2()).max(0.0);
    let (duan_plus, duan_minus) = duan_quantities(v);
    Ok(EntanglementReport {
        nu_minus,
        log_negativity: logneg,
        duan_plus,
        duan_minus,
        entropy_of_formation: entropy_of_formation(logneg)?,
        purity: purity(v)?,
        errors: ReportErrors::default(),
    })
}
