//! Exponent bookkeeping for the two-component system and the pair type.
//!
//! Each component carries its own fractional order `s_i ∈ (0, 1)` and hence
//! its own critical exponent `2(1 + s_i)/(1 − s_i)`. The coupling exponents
//! must satisfy `α, β > 1` and `α + β ≤ min` of the two critical exponents;
//! where the sum sits relative to those exponents classifies the regime.

use crate::error::{Error, Result};
use crate::grid::Field;

/// Critical Sobolev exponent `2(1 + s)/(1 − s)` of the anisotropic embedding
/// for fractional order `s ∈ (0, 1)`.
pub fn critical_exponent(s: f64) -> f64 {
    2.0 * (1.0 + s) / (1.0 - s)
}

/// Where the coupling exponent sum sits relative to the critical exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Regime {
    /// `α + β` strictly below both critical exponents.
    Subcritical,
    /// `α + β` equals the smaller critical exponent, orders differ.
    SumCritical,
    /// Equal orders and `α + β` equal to the common critical exponent; the
    /// scaling identities of [`crate::pohozaev`] live here.
    Critical,
}

/// Validated parameters of the coupled system.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ModelParams {
    s1: f64,
    s2: f64,
    alpha: f64,
    beta: f64,
    kappa: f64,
    crit1: f64,
    crit2: f64,
    regime: Regime,
}

impl ModelParams {
    /// Validates and classifies a parameter set. Rules: `0 < s_i < 1`;
    /// `α, β > 1`; `α + β ≤ min(crit1, crit2)`; `κ ≥ 0`.
    pub fn new(s1: f64, s2: f64, alpha: f64, beta: f64, kappa: f64) -> Result<Self> {
        for (name, s) in [("s1", s1), ("s2", s2)] {
            if !(s.is_finite() && 0.0 < s && s < 1.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} = {s}; fractional orders must satisfy 0 < s < 1"
                )));
            }
        }
        for (name, e) in [("alpha", alpha), ("beta", beta)] {
            if !(e.is_finite() && e > 1.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} = {e}; coupling exponents must satisfy alpha, beta > 1"
                )));
            }
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "kappa = {kappa}; the coupling strength must be finite and ≥ 0"
            )));
        }
        let crit1 = critical_exponent(s1);
        let crit2 = critical_exponent(s2);
        let min_crit = crit1.min(crit2);
        let sum = alpha + beta;
        let rel = 1e-9 * min_crit;
        if sum > min_crit + rel {
            return Err(Error::InvalidParam(format!(
                "alpha + beta = {sum} exceeds the smaller critical exponent {min_crit}; \
                 required alpha + beta ≤ min(2(1+s1)/(1-s1), 2(1+s2)/(1-s2))"
            )));
        }
        let at_min = (sum - min_crit).abs() <= rel;
        let regime = if !at_min {
            Regime::Subcritical
        } else if (crit1 - crit2).abs() <= rel {
            Regime::Critical
        } else {
            Regime::SumCritical
        };
        Ok(Self {
            s1,
            s2,
            alpha,
            beta,
            kappa,
            crit1,
            crit2,
            regime,
        })
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }
    pub fn s2(&self) -> f64 {
        self.s2
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    /// Critical exponent of the first component.
    pub fn crit1(&self) -> f64 {
        self.crit1
    }
    /// Critical exponent of the second component.
    pub fn crit2(&self) -> f64 {
        self.crit2
    }
    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Same parameters with a different coupling strength.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.s1, self.s2, self.alpha, self.beta, kappa)
    }
}

/// A two-component state `(u, v)` sampled on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub u: Field,
    pub v: Field,
}

impl Pair {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        if u.nx() != v.nx() || u.ny() != v.ny() {
            return Err(Error::DimensionMismatch(format!(
                "pair components are {}x{} and {}x{}",
                u.nx(),
                u.ny(),
                v.nx(),
                v.ny()
            )));
        }
        Ok(Self { u, v })
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// `(c·u, c·v)`.
    pub fn scaled(&self, c: f64) -> Pair {
        Pair {
            u: self.u.scaled(c),
            v: self.v.scaled(c),
        }
    }

    /// In-place `self += c·other`.
    pub fn axpy(&mut self, c: f64, other: &Pair) -> Result<()> {
        self.u.axpy(c, &other.u)?;
        self.v.axpy(c, &other.v)
    }
}
