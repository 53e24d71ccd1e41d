//! Closed-form proportionality and PJR degree bounds.

use crate::error::{Error, Result};

/// Proportionality-degree curves `d(α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `(α − u_max)/2` for budget constraints.
    PbHalf,
    /// `α·(γ−1)(γ·ln(γ/(γ−1)) − 1) − u_max` for arbitrary constraints.
    GeneralGamma,
    /// `(α − u_max)/2` under strong cohesiveness for matroids.
    MatroidWeak,
}

/// Coefficient of α in the general curve; tends to 1/2 as γ grows.
pub fn general_gamma_coefficient(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::contract("the general bound needs gamma > 1"));
    }
    Ok(gamma_coefficient(gamma))
}

fn gamma_coefficient(gamma: f64) -> f64 {
    if gamma <= 1.0 {
        return 0.0;
    }
    let g1 = gamma - 1.0;
    // ln(γ/(γ−1)) = ln_1p(1/(γ−1)) keeps precision for large γ
    g1 * (gamma * (1.0 / g1).ln_1p() - 1.0)
}

/// Evaluates the curve of the given kind.
pub fn prop_degree_bound(alpha: f64, gamma: f64, u_max: f64, kind: BoundKind) -> Result<f64> {
    match kind {
        BoundKind::PbHalf | BoundKind::MatroidWeak => Ok((alpha - u_max) / 2.0),
        BoundKind::GeneralGamma => Ok(alpha * general_gamma_coefficient(gamma)? - u_max),
    }
}

/// A degree requirement used by the brute-force checkers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeBound {
    /// `d ≡ 0`.
    Zero,
    /// `(α − u_max)/2`.
    Half,
    /// The γ-dependent general curve, with coefficient 0 at γ = 1.
    GeneralGamma,
    /// `(α − u_max)/(κ + 1)`.
    Pjr { kappa: f64 },
}

impl DegreeBound {
    /// `(slope, intercept)` with `d(α) = slope·α + intercept`.
    pub fn affine(&self, gamma: f64, u_max: f64) -> (f64, f64) {
        match *self {
            DegreeBound::Zero => (0.0, 0.0),
            DegreeBound::Half => (0.5, -u_max / 2.0),
            DegreeBound::GeneralGamma => (gamma_coefficient(gamma), -u_max),
            DegreeBound::Pjr { kappa } => (1.0 / (kappa + 1.0), -u_max / (kappa + 1.0)),
        }
    }

    pub fn evaluate(&self, alpha: f64, gamma: f64, u_max: f64) -> f64 {
        let (a, b) = self.affine(gamma, u_max);
        a * alpha + b
    }

    /// Smallest α above which the bound exceeds `value`; `None` if it never does.
    pub fn alpha_threshold(&self, value: f64, gamma: f64, u_max: f64) -> Option<f64> {
        let (a, b) = self.affine(gamma, u_max);
        if a > 0.0 {
            Some((value - b) / a)
        } else if b > value {
            Some(f64::NEG_INFINITY)
        } else {
            None
        }
    }
}
