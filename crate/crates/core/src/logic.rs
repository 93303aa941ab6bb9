//! Scalar primitives of nilpotent logic: the cutting function, the logistic
//! sigmoid, the squashing function with its analytic partial derivatives, and
//! normalized generator functions with their strong negation.

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// Clamps `x` to `[0, 1]` without validation. NaN propagates.
#[inline]
pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// The cutting function `[x]`: 0 below zero, 1 above one, identity between.
pub fn cut(x: f64) -> Result<f64, DomainError> {
    if !x.is_finite() {
        return Err(DomainError::NonFinite(x));
    }
    Ok(clamp_unit(x))
}

/// Generalized cutting function: a linear ramp from 0 to 1 over
/// `[a - lambda/2, a + lambda/2]`.
pub fn cut_ramp(x: f64, a: f64, lambda: f64) -> f64 {
    clamp_unit((x - a) / lambda + 0.5)
}

#[inline]
fn logistic(u: f64) -> f64 {
    let e = (-u.abs()).exp();
    let r = 1.0 / (1.0 + e);
    if u >= 0.0 {
        r
    } else {
        e * r
    }
}

/// `ln(1 + e^u)` without overflow.
#[inline]
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^{-beta (x - d)})`.
#[inline]
pub fn sigmoid(x: f64, d: f64, beta: f64) -> f64 {
    logistic(beta * (x - d))
}

/// Center `a`, width `lambda` and sharpness `beta` of the squashing function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquashingParams {
    pub a: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl Default for SquashingParams {
    fn default() -> Self {
        Self {
            a: 0.5,
            lambda: 1.0,
            beta: 50.0,
        }
    }
}

/// Partial derivatives of the squashing function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquashPartials {
    pub dx: f64,
    pub da: f64,
    pub dlambda: f64,
}

impl SquashingParams {
    pub fn new(a: f64, lambda: f64, beta: f64) -> Result<Self, DomainError> {
        let p = Self { a, lambda, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !self.a.is_finite() {
            return Err(DomainError::InvalidParameter(format!("center a = {}", self.a)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(DomainError::InvalidParameter(format!(
                "width lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(DomainError::InvalidParameter(format!(
                "sharpness beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    // Arguments of the two shifted sigmoids; lo >= hi always.
    #[inline]
    fn shifted(&self, x: f64) -> (f64, f64) {
        let half = 0.5 * self.lambda;
        (self.beta * (x - (self.a - half)), self.beta * (x - (self.a + half)))
    }

    /// Evaluates the squashing function, assuming `x` is finite and the
    /// parameters are valid.
    ///
    /// Uses a difference of two softplus terms, so it never overflows.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.shifted(x);
        let scale = self.lambda * self.beta;
        // Above the ramp, softplus(u) = u + softplus(-u) and lo - hi = scale
        // give a form that approaches 1 without cancellation.
        let s = if hi > 0.0 {
            1.0 + (softplus(-lo) - softplus(-hi)) / scale
        } else {
            (softplus(lo) - softplus(hi)) / scale
        };
        clamp_unit(s)
    }

    /// Analytic partials with respect to `x`, `a` and `lambda`.
    pub fn partials(&self, x: f64) -> SquashPartials {
        let (lo, hi) = self.shifted(x);
        let s_lo = logistic(lo);
        let s_hi = logistic(hi);
        // s_lo - s_hi, rewritten through 1 - sigma(u) = sigma(-u) when both
        // sigmoids sit near 1.
        let diff = if hi > 0.0 {
            logistic(-hi) - logistic(-lo)
        } else {
            s_lo - s_hi
        };
        let dx = diff / self.lambda;
        let s = self.eval(x);
        SquashPartials {
            dx,
            da: -dx,
            dlambda: -s / self.lambda + (s_lo + s_hi) / (2.0 * self.lambda),
        }
    }
}

/// Squashing function `S_{a,lambda}^{(beta)}(x)`.
pub fn squash(x: f64, p: &SquashingParams) -> Result<f64, DomainError> {
    if !x.is_finite() {
        return Err(DomainError::NonFinite(x));
    }
    p.validate()?;
    Ok(p.eval(x))
}

/// `(dS/dx, dS/da, dS/dlambda)` at `x`.
pub fn squash_partials(x: f64, p: &SquashingParams) -> Result<SquashPartials, DomainError> {
    if !x.is_finite() {
        return Err(DomainError::NonFinite(x));
    }
    p.validate()?;
    Ok(p.partials(x))
}

/// Normalized generator of the disjunction, `f = f_d`; the conjunctive
/// generator is `1 - f`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    #[default]
    Identity,
    /// `f(x) = x^exponent`, exponent > 0.
    Power { exponent: f64 },
}

fn check_unit(what: &'static str, value: f64) -> Result<(), DomainError> {
    if !value.is_finite() {
        return Err(DomainError::NonFinite(value));
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(DomainError::OutOfUnitInterval { what, value });
    }
    Ok(())
}

impl Generator {
    pub fn power(exponent: f64) -> Result<Self, DomainError> {
        let g = Generator::Power { exponent };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        match *self {
            Generator::Identity => Ok(()),
            Generator::Power { exponent } if exponent.is_finite() && exponent > 0.0 => Ok(()),
            Generator::Power { exponent } => Err(DomainError::InvalidParameter(format!(
                "power generator exponent must be positive, got {exponent}"
            ))),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Generator::Identity)
    }

    /// `f(x)` without range checks.
    #[inline]
    pub(crate) fn f(&self, x: f64) -> f64 {
        match *self {
            Generator::Identity => x,
            Generator::Power { exponent } => x.powf(exponent),
        }
    }

    /// `f^{-1}(y)` without range checks.
    #[inline]
    pub(crate) fn f_inv(&self, y: f64) -> f64 {
        match *self {
            Generator::Identity => y,
            Generator::Power { exponent } => y.powf(1.0 / exponent),
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64, DomainError> {
        check_unit("generator argument", x)?;
        Ok(self.f(x))
    }

    pub fn invert(&self, y: f64) -> Result<f64, DomainError> {
        check_unit("generator inverse argument", y)?;
        Ok(self.f_inv(y))
    }

    /// Strong negation `n(x) = f^{-1}(1 - f(x))`.
    pub fn negate(&self, x: f64) -> Result<f64, DomainError> {
        check_unit("negation argument", x)?;
        Ok(self.f_inv(1.0 - self.f(x)))
    }

    /// Fixed point of the negation, `nu* = f^{-1}(1/2)`.
    pub fn neutral(&self) -> f64 {
        self.f_inv(0.5)
    }
}

pub fn apply_generator(g: &Generator, x: f64) -> Result<f64, DomainError> {
    g.apply(x)
}

pub fn invert_generator(g: &Generator, y: f64) -> Result<f64, DomainError> {
    g.invert(y)
}

pub fn negate(g: &Generator, x: f64) -> Result<f64, DomainError> {
    g.negate(x)
}

pub(crate) fn check_unit_input(value: f64) -> Result<(), DomainError> {
    check_unit("operator input", value)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAY: SquashingParams = SquashingParams {
        a: 0.5,
        lambda: 1.0,
        beta: 50.0,
    };

    #[test]
    fn cut_regions() {
        assert_eq!(cut(0.5).unwrap(), 0.5);
        assert_eq!(cut(-0.3).unwrap(), 0.0);
        assert_eq!(cut(1.7).unwrap(), 1.0);
        assert!(matches!(cut(f64::NAN), Err(DomainError::NonFinite(_))));
        assert!(cut(f64::INFINITY).is_err());
    }

    #[test]
    fn sigmoid_center_and_symmetry() {
        assert_eq!(sigmoid(0.3, 0.3, 7.0), 0.5);
        for t in [0.01, 0.2, 1.5, 30.0] {
            let s = sigmoid(0.3 + t, 0.3, 4.0) + sigmoid(0.3 - t, 0.3, 4.0);
            assert!((s - 1.0).abs() < 1e-15);
        }
        let expected = 1.0 - (-50f64).exp() / (1.0 + (-50f64).exp());
        assert!((sigmoid(1.0, 0.0, 50.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn squash_center_is_half() {
        for p in [
            PLAY,
            SquashingParams::new(-2.0, 0.3, 7.0).unwrap(),
            SquashingParams::new(10.0, 4.0, 0.5).unwrap(),
        ] {
            assert!((squash(p.a, &p).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn squash_at_zero_playground_params() {
        // (1/50) ln(2 / (1 + e^-50)), evaluated independently.
        let expected = (2.0f64 / (1.0 + (-50f64).exp())).ln() / 50.0;
        let got = squash(0.0, &PLAY).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.013_862_943_6).abs() < 1e-9);
    }

    #[test]
    fn squash_limits_and_overflow() {
        assert!((squash(1e4 / 50.0, &PLAY).unwrap() - 1.0).abs() < 1e-15);
        assert!(squash(-1e4 / 50.0, &PLAY).unwrap().abs() < 1e-15);
        let sharp = SquashingParams::new(0.5, 1.0, 1e4).unwrap();
        for x in [-1e4, -1.0, 0.5, 2.0, 1e4] {
            assert!(squash(x, &sharp).unwrap().is_finite());
        }
        assert!(squash(f64::NAN, &PLAY).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SquashingParams::new(0.5, 0.0, 1.0).is_err());
        assert!(SquashingParams::new(0.5, 1.0, -1.0).is_err());
        assert!(squash(
            0.0,
            &SquashingParams {
                a: 0.0,
                lambda: -1.0,
                beta: 1.0
            }
        )
        .is_err());
    }

    #[test]
    fn slope_at_center() {
        let d = squash_partials(0.5, &PLAY).unwrap();
        let expected = 2.0 * sigmoid(25.0, 0.0, 1.0) - 1.0;
        assert!((d.dx - expected).abs() < 1e-15);
        assert!((d.dx - (1.0 - 2.0 * (-25f64).exp())).abs() < 1e-15);
        assert_eq!(d.da, -d.dx);
    }

    #[test]
    fn slope_far_right_is_tiny_but_positive() {
        let d = PLAY.partials(2.0);
        assert!(d.dx > 0.0 && d.dx < 1e-21);
    }

    #[test]
    fn generator_basics() {
        let id = Generator::Identity;
        let sq = Generator::power(2.0).unwrap();
        assert_eq!(id.apply(0.37).unwrap(), 0.37);
        assert_eq!(sq.apply(0.5).unwrap(), 0.25);
        assert_eq!(id.invert(0.8).unwrap(), 0.8);
        assert_eq!(sq.invert(0.25).unwrap(), 0.5);
        for g in [id, sq, Generator::power(0.3).unwrap()] {
            assert_eq!(g.apply(0.0).unwrap(), 0.0);
            assert_eq!(g.apply(1.0).unwrap(), 1.0);
        }
        assert!(id.apply(1.2).is_err());
        assert!(sq.invert(-0.1).is_err());
        assert!(Generator::power(0.0).is_err());
    }

    #[test]
    fn negation() {
        let id = Generator::Identity;
        assert!((id.negate(0.3).unwrap() - 0.7).abs() < 1e-15);
        let sq = Generator::power(2.0).unwrap();
        let nu = sq.neutral();
        assert!((sq.negate(nu).unwrap() - nu).abs() < 1e-15);
        assert_eq!(id.neutral(), 0.5);
        assert!(id.negate(2.0).is_err());
    }
}
