//! Desk-scale simulator and analysis toolkit for broadband microwave
//! entanglement generated by a flux-pumped SQUID boundary condition.
//!
//! The crate models the full measurement chain of a dynamical-Casimir-effect
//! style experiment: a SQUID-terminated transmission line acts as a rapidly
//! movable mirror ([`squid`]), emitting two-mode squeezed radiation at a
//! frequency pair (f−, f+) summing to the pump frequency. That radiation is
//! propagated through a lossy, noisy amplifier chain and sampled as heterodyne
//! quadrature records ([`chain`]). The analysis side recovers the input-referred
//! covariance matrix via pump on/off differencing and shot-noise calibration
//! ([`calibration`], [`analysis`]), and quantifies entanglement with the
//! log-negativity, the Duan inseparability criterion, the entropy of formation
//! and band-integrated ebit rates ([`gaussian`], [`rates`]).
//!
//! Unit convention: dimensionless quadratures with vacuum variance 1/2 per
//! quadrature (`⟨q²⟩_vac = 1/2`), so the vacuum covariance matrix is I/2.

pub mod analysis;
pub mod calibration;
pub mod chain;
pub mod config;
pub mod constants;
pub mod gaussian;
pub mod io;
pub mod rates;
pub mod squid;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerically computed quantity left its valid range beyond tolerance.
    #[error("numerical failure in {context}: offending value {value:e}")]
    Numerical { context: &'static str, value: f64 },

    /// Flux bias at (or numerically indistinguishable from) an odd
    /// half-integer flux quantum, where the Josephson inductance diverges.
    #[error("singular SQUID inductance at {phi} Phi0")]
    SingularInductance { phi: f64 },

    /// A least-squares or scalar fit could not be performed.
    #[error("fit error: {0}")]
    Fit(String),

    /// Covariance matrix not positive semidefinite within tolerance.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// No column of the pump-calibration map crossed the onset threshold.
    #[error("onset not found in flux-pump calibration map")]
    OnsetNotFound,

    /// Invalid configuration or metadata.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed data file.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
