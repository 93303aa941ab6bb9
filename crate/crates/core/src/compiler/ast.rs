use std::collections::BTreeMap;
use std::fmt;

use crate::logic::{clamp_unit, Generator};
use crate::operators::{
    binary_table_op, min_max_via_cut, nary_logical, threshold_op, unary_modifier, BinaryKind, Extremum, NaryKind,
    ThresholdSpec, UnaryKind, UnaryOpSpec,
};

pub const VARIABLES: [&str; 2] = ["x", "y"];

/// `sum_i raw[i] * v_i + sum_i squared[i] * v_i^2 + constant`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearForm {
    pub raw: [f64; 2],
    pub squared: [f64; 2],
    pub constant: f64,
}

impl LinearForm {
    pub fn has_variables(&self) -> bool {
        self.raw.iter().chain(&self.squared).any(|&c| c != 0.0)
    }

    pub fn has_squares(&self) -> bool {
        self.squared.iter().any(|&c| c != 0.0)
    }

    fn sub(&self, other: &LinearForm) -> LinearForm {
        LinearForm {
            raw: [self.raw[0] - other.raw[0], self.raw[1] - other.raw[1]],
            squared: [self.squared[0] - other.squared[0], self.squared[1] - other.squared[1]],
            constant: self.constant - other.constant,
        }
    }

    fn max_coefficient(&self) -> f64 {
        self.raw
            .iter()
            .chain(&self.squared)
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(f64, String)> = Vec::new();
        for (i, v) in VARIABLES.iter().enumerate() {
            if self.raw[i] != 0.0 {
                terms.push((self.raw[i], (*v).to_string()));
            }
            if self.squared[i] != 0.0 {
                terms.push((self.squared[i], format!("{v}^2")));
            }
        }
        if self.constant != 0.0 || terms.is_empty() {
            terms.push((self.constant, String::new()));
        }
        for (k, (c, var)) in terms.iter().enumerate() {
            let mag = c.abs();
            let sign = if *c < 0.0 { "-" } else { "+" };
            match (k, *c < 0.0) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                _ => write!(f, " {sign} ")?,
            }
            match (var.is_empty(), mag == 1.0) {
                (true, _) => write!(f, "{mag}")?,
                (false, true) => f.write_str(var)?,
                (false, false) => write!(f, "{mag}*{var}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Greater,
    Less,
}

impl Comparison {
    pub fn symbol(&self) -> &'static str {
        match self {
            Comparison::Greater => ">",
            Comparison::Less => "<",
        }
    }

    pub fn flipped(&self) -> Self {
        match self {
            Comparison::Greater => Comparison::Less,
            Comparison::Less => Comparison::Greater,
        }
    }
}

/// A linear (or squared-input) inequality between two sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub lhs: LinearForm,
    pub cmp: Comparison,
    pub rhs: LinearForm,
}

/// How an atom turns into a first-layer perceptron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomForm {
    /// Variables on both sides: the preference `[(D + 1) / 2]` of the
    /// difference, true at level 0.5 on the boundary.
    Preference,
    /// Variables against a constant: the membership `[D]`, where `<`
    /// becomes the negation of the matching `>` atom.
    Membership,
    /// Squared inputs: `[D + 1/2]`, true at level 0.5 on the boundary.
    Quadratic,
}

/// Perceptron of an atom over the features `x, y, x^2, y^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomUnit {
    pub weights: [f64; 4],
    pub bias: f64,
    /// The atom is the negation of this unit.
    pub negated: bool,
    /// Factor applied to the difference so that every `|w| <= 1`.
    pub scale: f64,
    pub form: AtomForm,
}

impl AtomUnit {
    pub fn membership(&self, features: &[f64; 4]) -> f64 {
        let z: f64 = self.weights.iter().zip(features).map(|(w, f)| w * f).sum::<f64>() + self.bias;
        let v = clamp_unit(z);
        if self.negated {
            1.0 - v
        } else {
            v
        }
    }
}

impl Atom {
    pub fn unit(&self) -> AtomUnit {
        let l = self.lhs.has_variables();
        let r = self.rhs.has_variables();
        // Oriented so that `d > 0` is the atom.
        let d = match self.cmp {
            Comparison::Greater => self.lhs.sub(&self.rhs),
            Comparison::Less => self.rhs.sub(&self.lhs),
        };
        if d.has_squares() {
            let scale = 1.0 / d.max_coefficient().max(1.0);
            return Self::scaled(&d, scale, 0.5, false, AtomForm::Quadratic);
        }
        if l && r {
            let scale = 1.0 / d.max_coefficient().max(1.0);
            let mut u = Self::scaled(&d, scale * 0.5, 0.0, false, AtomForm::Preference);
            u.bias += 0.5;
            u.scale = scale;
            return u;
        }
        // Membership: keep the variable side on the left and `>` as the unit.
        let (var_side, negated) = match (l, self.cmp) {
            (true, Comparison::Greater) => (self.lhs.sub(&self.rhs), false),
            (true, Comparison::Less) => (self.lhs.sub(&self.rhs), true),
            (false, Comparison::Greater) => (self.rhs.sub(&self.lhs), true),
            (false, Comparison::Less) => (self.rhs.sub(&self.lhs), false),
        };
        let scale = 1.0 / var_side.max_coefficient().max(1.0);
        Self::scaled(&var_side, scale, 0.0, negated, AtomForm::Membership)
    }

    fn scaled(d: &LinearForm, scale: f64, offset: f64, negated: bool, form: AtomForm) -> AtomUnit {
        AtomUnit {
            weights: [
                d.raw[0] * scale,
                d.raw[1] * scale,
                d.squared[0] * scale,
                d.squared[1] * scale,
            ],
            bias: d.constant * scale + offset,
            negated,
            scale,
            form,
        }
    }

    /// The same inequality with the comparison reversed.
    pub fn negation(&self) -> Atom {
        Atom {
            cmp: self.cmp.flipped(),
            ..*self
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.cmp.symbol(), self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Atom(Atom),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Impl(Box<Expr>, Box<Expr>),
    Pref(Box<Expr>, Box<Expr>),
    /// Uniform weights `1/n` when `weights` is `None`.
    Mean {
        weights: Option<Vec<f64>>,
        args: Vec<Expr>,
    },
    Agg(Vec<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Unary {
        spec: UnaryOpSpec,
        arg: Box<Expr>,
    },
}

/// Features `x, y, x^2, y^2` of a point in network coordinates.
pub fn features(x: f64, y: f64) -> [f64; 4] {
    [x, y, x * x, y * y]
}

impl Expr {
    /// Operator label used in network reports, `None` for atoms.
    pub fn label(&self) -> Option<&'static str> {
        Some(match self {
            Expr::Atom(_) => return None,
            Expr::Not(_) => "NOT",
            Expr::And(_) => "AND",
            Expr::Or(_) => "OR",
            Expr::Impl(..) => "IMPL",
            Expr::Pref(..) => "PREF",
            Expr::Mean { .. } => "MEAN",
            Expr::Agg(_) => "AGG",
            Expr::Min(..) => "MIN",
            Expr::Max(..) => "MAX",
            Expr::Unary { .. } => "UNARY",
        })
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Atom(_) => vec![],
            Expr::Not(e) | Expr::Unary { arg: e, .. } => vec![e],
            Expr::And(v) | Expr::Or(v) | Expr::Agg(v) | Expr::Mean { args: v, .. } => v.iter().collect(),
            Expr::Impl(a, b) | Expr::Pref(a, b) | Expr::Min(a, b) | Expr::Max(a, b) => vec![a, b],
        }
    }

    /// Number of occurrences of each operator label.
    pub fn operator_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut counts = BTreeMap::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if let Some(l) = e.label() {
                *counts.entry(l).or_insert(0) += 1;
            }
            stack.extend(e.children());
        }
        counts
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if let Expr::Atom(a) = e {
                out.push(a);
            }
            let mut ch = e.children();
            ch.reverse();
            stack.extend(ch);
        }
        out
    }

    /// Truth value at network-space features, computed directly with the
    /// operator library and hard cutting.
    pub fn evaluate(&self, feats: &[f64; 4]) -> f64 {
        let id = Generator::Identity;
        let eval_all = |v: &[Expr]| v.iter().map(|e| e.evaluate(feats)).collect::<Vec<_>>();
        // Operands are truth values in [0, 1], so the checked operators cannot fail.
        let r = match self {
            Expr::Atom(a) => return a.unit().membership(feats),
            Expr::Not(e) => id.negate(e.evaluate(feats)),
            Expr::And(v) => nary_logical(NaryKind::Conjunction, &eval_all(v), &id),
            Expr::Or(v) => nary_logical(NaryKind::Disjunction, &eval_all(v), &id),
            Expr::Agg(v) => nary_logical(NaryKind::Aggregation, &eval_all(v), &id),
            Expr::Impl(a, b) => binary_table_op(BinaryKind::Implication, a.evaluate(feats), b.evaluate(feats), &id),
            Expr::Pref(a, b) => binary_table_op(BinaryKind::Preference, a.evaluate(feats), b.evaluate(feats), &id),
            Expr::Mean { weights, args } => {
                let n = args.len();
                let spec = ThresholdSpec {
                    weights: weights.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]),
                    thresholds: vec![0.0; n],
                    nu: 0.0,
                };
                threshold_op(&spec, &eval_all(args), &id)
            }
            Expr::Min(a, b) => min_max_via_cut(Extremum::Min, a.evaluate(feats), b.evaluate(feats)),
            Expr::Max(a, b) => min_max_via_cut(Extremum::Max, a.evaluate(feats), b.evaluate(feats)),
            Expr::Unary { spec, arg } => unary_modifier(spec, arg.evaluate(feats), &id),
        };
        r.expect("operands are truth values")
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, v: &[Expr]) -> fmt::Result {
    for (i, e) in v.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

fn write_joined(f: &mut fmt::Formatter<'_>, v: &[Expr], sep: &str) -> fmt::Result {
    for (i, e) in v.iter().enumerate() {
        if i > 0 {
            write!(f, " {sep} ")?;
        }
        write!(f, "({e})")?;
    }
    Ok(())
}

/// Prints in the input syntax, fully parenthesized, so that the output
/// parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Atom(a) => write!(f, "{a}"),
            Expr::Not(e) => write!(f, "NOT ({e})"),
            Expr::And(v) => write_joined(f, v, "AND"),
            Expr::Or(v) => write_joined(f, v, "OR"),
            Expr::Impl(a, b) => write!(f, "IMPL({a}, {b})"),
            Expr::Pref(a, b) => write!(f, "PREF({a}, {b})"),
            Expr::Min(a, b) => write!(f, "MIN({a}, {b})"),
            Expr::Max(a, b) => write!(f, "MAX({a}, {b})"),
            Expr::Agg(v) => {
                f.write_str("AGG(")?;
                write_list(f, v)?;
                f.write_str(")")
            }
            Expr::Mean { weights, args } => {
                f.write_str("MEAN")?;
                if let Some(w) = weights {
                    let w: Vec<String> = w.iter().map(f64::to_string).collect();
                    write!(f, "[{}]", w.join(", "))?;
                }
                f.write_str("(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
            Expr::Unary { spec, arg } => match spec.kind {
                UnaryKind::Possibility => write!(f, "POS({}, {arg})", spec.alpha),
                UnaryKind::Necessity => write!(f, "NEC({}, {arg})", spec.alpha),
                UnaryKind::Sharpness => write!(f, "SHARP({}, {arg})", spec.alpha),
                UnaryKind::Custom => write!(f, "UNARY({}, {}, {arg})", spec.alpha, spec.gamma),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lf(raw: [f64; 2], constant: f64) -> LinearForm {
        LinearForm {
            raw,
            squared: [0.0; 2],
            constant,
        }
    }

    fn atom(lhs: LinearForm, cmp: Comparison, rhs: LinearForm) -> Atom {
        Atom { lhs, cmp, rhs }
    }

    #[test]
    fn membership_atoms_share_a_unit_with_their_negation() {
        let gt = atom(lf([1.0, 0.0], 0.0), Comparison::Greater, lf([0.0; 2], 0.0));
        let lt = gt.negation();
        let (u, v) = (gt.unit(), lt.unit());
        assert_eq!((u.weights, u.bias), (v.weights, v.bias));
        assert!(!u.negated && v.negated);
        assert_eq!(u.weights, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(u.bias, 0.0);
    }

    #[test]
    fn constant_on_the_left_is_reoriented() {
        // 2 < x is x > 2
        let a = atom(lf([0.0; 2], 2.0), Comparison::Less, lf([1.0, 0.0], 0.0));
        let u = a.unit();
        assert!(!u.negated);
        assert_eq!((u.weights[0], u.bias), (1.0, -2.0));
    }

    #[test]
    fn preference_atoms() {
        let x_gt_y = atom(lf([1.0, 0.0], 0.0), Comparison::Greater, lf([0.0, 1.0], 0.0));
        let u = x_gt_y.unit();
        assert_eq!((u.weights[..2].to_vec(), u.bias), (vec![0.5, -0.5], 0.5));
        let y_lt_negx = atom(lf([0.0, 1.0], 0.0), Comparison::Less, lf([-1.0, 0.0], 0.0));
        let u = y_lt_negx.unit();
        assert_eq!((u.weights[..2].to_vec(), u.bias), (vec![-0.5, -0.5], 0.5));
    }

    #[test]
    fn large_coefficients_are_scaled() {
        let a = atom(lf([4.0, 0.0], 0.0), Comparison::Greater, lf([0.0; 2], 2.0));
        let u = a.unit();
        assert_eq!(u.scale, 0.25);
        assert_eq!((u.weights[0], u.bias), (1.0, -0.5));
    }

    #[test]
    fn circle_is_half_true_on_its_boundary() {
        let lhs = LinearForm {
            raw: [0.0; 2],
            squared: [1.0, 1.0],
            constant: 0.0,
        };
        let a = atom(lhs, Comparison::Less, lf([0.0; 2], 25.0));
        let u = a.unit();
        assert_eq!(u.weights, [0.0, 0.0, -1.0, -1.0]);
        assert_eq!(u.bias, 25.5);
        assert_eq!(u.membership(&features(3.0, 4.0)), 0.5);
    }

    #[test]
    fn display_linear_forms() {
        assert_eq!(lf([1.0, -0.5], 0.0).to_string(), "x - 0.5*y");
        assert_eq!(lf([0.0, 0.0], -3.0).to_string(), "-3");
        assert_eq!(lf([-1.0, 0.0], 2.0).to_string(), "-x + 2");
    }
}
