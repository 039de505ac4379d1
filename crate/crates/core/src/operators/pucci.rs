use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use super::SymMatrix;
use crate::error::{Error, Result};

/// Ellipticity constants `0 < lambda <= Lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityPair {
    lower: f64,
    upper: f64,
}

impl EllipticityPair {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(Error::Ellipticity { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    /// `(lambda, lambda (1 + aperture))`.
    pub fn with_aperture(lower: f64, aperture: f64) -> Result<Self> {
        if !(aperture >= 0.0) {
            return Err(Error::Ellipticity { lower, upper: lower * (1.0 + aperture) });
        }
        Self::new(lower, lower * (1.0 + aperture))
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

/// `Lambda / lambda - 1`.
pub fn ellipticity_aperture(pair: EllipticityPair) -> f64 {
    pair.upper / pair.lower - 1.0
}

static MINUS_SIGN_FAULT: AtomicBool = AtomicBool::new(false);

/// Deliberately corrupts `pucci_minus` (flips its sign) so that the
/// verification suites can demonstrate they catch a broken build.
#[doc(hidden)]
pub fn set_pucci_minus_fault(enabled: bool) {
    MINUS_SIGN_FAULT.store(enabled, Ordering::SeqCst);
}

/// `lambda * sum(e_i < 0) + Lambda * sum(e_i > 0)`.
#[inline]
pub fn pucci_plus(m: &SymMatrix, pair: EllipticityPair) -> f64 {
    let e = m.eigenvalues_array();
    let (mut pos, mut neg) = (0.0, 0.0);
    for v in &e[..m.dim()] {
        if *v > 0.0 {
            pos += v;
        } else {
            neg += v;
        }
    }
    pair.lower * neg + pair.upper * pos
}

/// `lambda * sum(e_i > 0) + Lambda * sum(e_i < 0)`.
#[inline]
pub fn pucci_minus(m: &SymMatrix, pair: EllipticityPair) -> f64 {
    let e = m.eigenvalues_array();
    let (mut pos, mut neg) = (0.0, 0.0);
    for v in &e[..m.dim()] {
        if *v > 0.0 {
            pos += v;
        } else {
            neg += v;
        }
    }
    let value = pair.lower * pos + pair.upper * neg;
    if MINUS_SIGN_FAULT.load(Ordering::Relaxed) {
        -value
    } else {
        value
    }
}
