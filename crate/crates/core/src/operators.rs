//! Nilpotent logical and multicriteria decision operators.
//!
//! Every operator here has the threshold form `f^{-1}[sum_i w_i f(x_i) + C]`,
//! which for the identity generator is a perceptron with a cutting
//! activation. [`operator_to_perceptron`] emits those weights.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DomainError};
use crate::logic::{check_unit_input, clamp_unit, Generator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Conjunction,
    Disjunction,
    Implication,
    ArithmeticMean,
    Preference,
    Aggregation,
    Min,
    Max,
    Negation,
    Identity,
    /// Unary modifier `f^{-1}[alpha f(x) + gamma]`.
    Modifier,
}

impl OperatorKind {
    /// Short label used in network reports.
    pub fn label(&self) -> &'static str {
        match self {
            OperatorKind::Conjunction => "AND",
            OperatorKind::Disjunction => "OR",
            OperatorKind::Implication => "IMPL",
            OperatorKind::ArithmeticMean => "MEAN",
            OperatorKind::Preference => "PREF",
            OperatorKind::Aggregation => "AGG",
            OperatorKind::Min => "MIN",
            OperatorKind::Max => "MAX",
            OperatorKind::Negation => "NOT",
            OperatorKind::Identity => "ID",
            OperatorKind::Modifier => "UNARY",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Operators of the general family `o_nu`, differing only in the bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaryKind {
    Conjunction,
    Disjunction,
    Aggregation,
}

/// Two-variable rows of the operator table that have no n-ary form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryKind {
    Implication,
    Preference,
    ArithmeticMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

impl From<NaryKind> for OperatorKind {
    fn from(k: NaryKind) -> Self {
        match k {
            NaryKind::Conjunction => OperatorKind::Conjunction,
            NaryKind::Disjunction => OperatorKind::Disjunction,
            NaryKind::Aggregation => OperatorKind::Aggregation,
        }
    }
}

impl From<BinaryKind> for OperatorKind {
    fn from(k: BinaryKind) -> Self {
        match k {
            BinaryKind::Implication => OperatorKind::Implication,
            BinaryKind::Preference => OperatorKind::Preference,
            BinaryKind::ArithmeticMean => OperatorKind::ArithmeticMean,
        }
    }
}

impl From<Extremum> for OperatorKind {
    fn from(k: Extremum) -> Self {
        match k {
            Extremum::Min => OperatorKind::Min,
            Extremum::Max => OperatorKind::Max,
        }
    }
}

impl BinaryKind {
    /// `(w1, w2, C)`.
    pub fn table_row(&self) -> (f64, f64, f64) {
        match self {
            BinaryKind::Implication => (-1.0, 1.0, 1.0),
            BinaryKind::ArithmeticMean => (0.5, 0.5, 0.0),
            BinaryKind::Preference => (-0.5, 0.5, 0.5),
        }
    }
}

/// Perceptron form of an operator: `f^{-1}[cut(sum w_i f(x_i) + constant)]`.
///
/// `nu` is the expectation level where one is defined; evaluation never
/// reads it. Min and Max carry a `hidden` stage computing
/// `h = f^{-1}[cut(-f(x) + f(y) + c_h)]`; the outer weights then apply to
/// `(x, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub arity: usize,
    pub weights: Vec<f64>,
    pub constant: f64,
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Box<OperatorSpec>>,
}

impl OperatorSpec {
    /// Evaluates the perceptron form on `xs` under generator `g`.
    pub fn evaluate(&self, xs: &[f64], g: &Generator) -> Result<f64, DomainError> {
        if xs.len() != self.arity {
            return Err(DomainError::LengthMismatch {
                expected: self.arity,
                actual: xs.len(),
            });
        }
        for &x in xs {
            check_unit_input(x)?;
        }
        match &self.hidden {
            None => Ok(threshold_form(&self.weights, self.constant, xs, g)),
            Some(inner) => {
                let h = threshold_form(&inner.weights, inner.constant, xs, g);
                Ok(threshold_form(&self.weights, self.constant, &[xs[0], h], g))
            }
        }
    }
}

#[inline]
fn threshold_form(weights: &[f64], constant: f64, xs: &[f64], g: &Generator) -> f64 {
    let z: f64 = weights.iter().zip(xs).map(|(w, &x)| w * g.f(x)).sum::<f64>() + constant;
    g.f_inv(clamp_unit(z))
}

fn check_inputs(xs: &[f64]) -> Result<(), DomainError> {
    if xs.is_empty() {
        return Err(DomainError::Empty);
    }
    xs.iter().try_for_each(|&x| check_unit_input(x))
}

fn check_nu(nu: f64) -> Result<(), DomainError> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(DomainError::OutOfUnitInterval {
            what: "expectation level",
            value: nu,
        });
    }
    Ok(())
}

/// General operator `o_nu(x) = f^{-1}[sum f(x_i) - (n-1) f(nu)]`.
pub fn general_op(nu: f64, xs: &[f64], g: &Generator) -> Result<f64, DomainError> {
    check_nu(nu)?;
    check_inputs(xs)?;
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().map(|&x| g.f(x)).sum();
    Ok(g.f_inv(clamp_unit(sum - (n - 1.0) * g.f(nu))))
}

/// Weighted general operator `f^{-1}[sum w_i (f(x_i) - f(nu)) + f(nu)]`.
pub fn weighted_general_op(nu: f64, weights: &[f64], xs: &[f64], g: &Generator) -> Result<f64, DomainError> {
    check_nu(nu)?;
    check_inputs(xs)?;
    if weights.len() != xs.len() {
        return Err(DomainError::LengthMismatch {
            expected: weights.len(),
            actual: xs.len(),
        });
    }
    let f_nu = g.f(nu);
    let z: f64 = weights.iter().zip(xs).map(|(w, &x)| w * (g.f(x) - f_nu)).sum::<f64>() + f_nu;
    Ok(g.f_inv(clamp_unit(z)))
}

/// Threshold-based operator: per-input thresholds `nu_i` and an overall
/// expectation level `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub nu: f64,
}

impl ThresholdSpec {
    /// `C = f(nu) - sum w_i f(nu_i)`.
    pub fn constant(&self, g: &Generator) -> f64 {
        g.f(self.nu)
            - self
                .weights
                .iter()
                .zip(&self.thresholds)
                .map(|(w, &t)| w * g.f(t))
                .sum::<f64>()
    }
}

pub fn threshold_op(spec: &ThresholdSpec, xs: &[f64], g: &Generator) -> Result<f64, DomainError> {
    check_inputs(xs)?;
    if spec.weights.len() != xs.len() || spec.thresholds.len() != xs.len() {
        return Err(DomainError::LengthMismatch {
            expected: spec.weights.len().max(spec.thresholds.len()),
            actual: xs.len(),
        });
    }
    check_nu(spec.nu)?;
    for &t in &spec.thresholds {
        check_nu(t)?;
    }
    Ok(threshold_form(&spec.weights, spec.constant(g), xs, g))
}

/// n-ary conjunction, disjunction or aggregation.
pub fn nary_logical(kind: NaryKind, xs: &[f64], g: &Generator) -> Result<f64, DomainError> {
    check_inputs(xs)?;
    let n = xs.len() as f64;
    let shift = match kind {
        NaryKind::Conjunction => n - 1.0,
        NaryKind::Disjunction => 0.0,
        NaryKind::Aggregation => (n - 1.0) / 2.0,
    };
    let sum: f64 = xs.iter().map(|&x| g.f(x)).sum();
    Ok(g.f_inv(clamp_unit(sum - shift)))
}

pub fn binary_table_op(kind: BinaryKind, x: f64, y: f64, g: &Generator) -> Result<f64, DomainError> {
    check_inputs(&[x, y])?;
    let (w1, w2, c) = kind.table_row();
    Ok(threshold_form(&[w1, w2], c, &[x, y], g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnaryKind {
    Possibility,
    Necessity,
    Sharpness,
    Custom,
}

/// Unary operator `o_{alpha,gamma}(x) = f^{-1}[alpha f(x) + gamma]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnaryOpSpec {
    pub alpha: f64,
    pub gamma: f64,
    pub kind: UnaryKind,
}

impl UnaryOpSpec {
    pub fn possibility(alpha: f64) -> Self {
        Self {
            alpha,
            gamma: 0.0,
            kind: UnaryKind::Possibility,
        }
    }

    pub fn necessity(alpha: f64) -> Self {
        Self {
            alpha,
            gamma: 1.0 - alpha,
            kind: UnaryKind::Necessity,
        }
    }

    /// `f^{-1}[alpha f(x) - (alpha - 1)/2]`, which keeps `f^{-1}(1/2)` fixed.
    pub fn sharpness(alpha: f64) -> Self {
        Self {
            alpha,
            gamma: (1.0 - alpha) / 2.0,
            kind: UnaryKind::Sharpness,
        }
    }

    pub fn custom(alpha: f64, gamma: f64) -> Self {
        Self {
            alpha,
            gamma,
            kind: UnaryKind::Custom,
        }
    }
}

pub fn unary_modifier(spec: &UnaryOpSpec, x: f64, g: &Generator) -> Result<f64, DomainError> {
    check_unit_input(x)?;
    Ok(g.f_inv(clamp_unit(spec.alpha * g.f(x) + spec.gamma)))
}

/// Min and max written with nested cutting functions only.
pub fn min_max_via_cut(kind: Extremum, x: f64, y: f64) -> Result<f64, DomainError> {
    check_inputs(&[x, y])?;
    Ok(match kind {
        Extremum::Min => clamp_unit(x + (clamp_unit(y - x + 1.0) - 1.0)),
        Extremum::Max => clamp_unit(x + clamp_unit(y - x)),
    })
}

/// Weights and bias that make a threshold perceptron reproduce `kind`.
///
/// Implication and preference exist only for two inputs; the arithmetic mean
/// generalizes to weights `1/n`.
pub fn operator_to_perceptron(kind: OperatorKind, arity: usize, g: &Generator) -> Result<OperatorSpec, ConfigError> {
    let unsupported = || ConfigError::UnsupportedArity {
        kind: kind.label().to_string(),
        arity,
    };
    let n = arity as f64;
    let (weights, constant, nu, hidden) = match kind {
        _ if arity == 0 => return Err(unsupported()),
        OperatorKind::Conjunction => (vec![1.0; arity], -(n - 1.0), Some(1.0), None),
        OperatorKind::Disjunction => (vec![1.0; arity], 0.0, Some(0.0), None),
        OperatorKind::Aggregation => (vec![1.0; arity], -(n - 1.0) / 2.0, Some(g.neutral()), None),
        OperatorKind::ArithmeticMean => (vec![1.0 / n; arity], 0.0, None, None),
        OperatorKind::Implication | OperatorKind::Preference => {
            if arity != 2 {
                return Err(unsupported());
            }
            let row = if kind == OperatorKind::Implication {
                BinaryKind::Implication.table_row()
            } else {
                BinaryKind::Preference.table_row()
            };
            (vec![row.0, row.1], row.2, None, None)
        }
        OperatorKind::Negation if arity == 1 => (vec![-1.0], 1.0, None, None),
        OperatorKind::Identity if arity == 1 => (vec![1.0], 0.0, None, None),
        OperatorKind::Min | OperatorKind::Max if arity == 2 => {
            let (inner_c, outer_c) = if kind == OperatorKind::Min {
                (1.0, -1.0)
            } else {
                (0.0, 0.0)
            };
            let inner = OperatorSpec {
                kind,
                arity: 2,
                weights: vec![-1.0, 1.0],
                constant: inner_c,
                nu: None,
                hidden: None,
            };
            (vec![1.0, 1.0], outer_c, None, Some(Box::new(inner)))
        }
        OperatorKind::Negation
        | OperatorKind::Identity
        | OperatorKind::Min
        | OperatorKind::Max
        | OperatorKind::Modifier => return Err(unsupported()),
    };
    Ok(OperatorSpec {
        kind,
        arity,
        weights,
        constant,
        nu,
        hidden,
    })
}

impl From<&UnaryOpSpec> for OperatorSpec {
    fn from(u: &UnaryOpSpec) -> Self {
        OperatorSpec {
            kind: OperatorKind::Modifier,
            arity: 1,
            weights: vec![u.alpha],
            constant: u.gamma,
            nu: None,
            hidden: None,
        }
    }
}
