//! Physical constants (SI).

/// Planck constant h (J s).
pub const PLANCK: f64 = 6.626e-34;

/// Boltzmann constant k_B (J/K).
pub const BOLTZMANN: f64 = 1.38e-23;

/// Elementary charge e (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602e-19;

/// Magnetic flux quantum Phi0 = h/2e (Wb).
pub const FLUX_QUANTUM: f64 = 2.0678e-15;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 2.998e8;
