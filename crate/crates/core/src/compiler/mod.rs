//! Logical expressions over linear inequalities, compiled to networks whose
//! hidden layers are frozen operator perceptrons.

mod ast;
mod compile;
mod explain;
mod parser;

pub use ast::{features, Atom, AtomForm, AtomUnit, Comparison, Expr, LinearForm, VARIABLES};
pub use compile::{compile_to_network, compile_with, CompileOptions};
pub use explain::explain_network;
pub use parser::parse_expression;

/// `((x>0) AND (y>0)) OR ((x<0) AND (y<0))`
pub const XOR_EXPRESSION: &str = "((x>0) AND (y>0)) OR ((x<0) AND (y<0))";

/// `((x>y) AND (y>-x)) OR ((x<y) AND (y<-x))`
pub const PREFERENCE_EXPRESSION: &str = "((x>y) AND (y>-x)) OR ((x<y) AND (y<-x))";

use crate::data::{DatasetKind, CONCAVE_HALF_WIDTH, TRIANGLE};

fn round9(v: f64) -> f64 {
    (v * 1e9).round() / 1e9 + 0.0
}

fn num(v: f64) -> String {
    round9(v).to_string()
}

/// An expression whose truth region matches the dataset's positive class,
/// written in network coordinates (data coordinates times `input_scale`).
pub fn preset_expression(kind: DatasetKind, input_scale: f64) -> String {
    let k = input_scale;
    match kind {
        DatasetKind::XorQuadrants => XOR_EXPRESSION.to_string(),
        DatasetKind::Preference => PREFERENCE_EXPRESSION.to_string(),
        DatasetKind::Circle { radius } => format!("x^2 + y^2 < {}", num((k * radius).powi(2))),
        DatasetKind::Triangle => {
            let sides: Vec<String> = (0..3)
                .map(|i| {
                    let (ax, ay) = TRIANGLE[i];
                    let (bx, by) = TRIANGLE[(i + 1) % 3];
                    let (dx, dy) = (bx - ax, by - ay);
                    // Left of the counter-clockwise edge a -> b.
                    let c = k * (dx * ay - dy * ax);
                    let side = LinearForm {
                        raw: [round9(-dy), round9(dx)],
                        ..LinearForm::default()
                    };
                    format!("({side} > {})", num(c))
                })
                .collect();
            sides.join(" AND ")
        }
        DatasetKind::Concave => {
            let h = num(k * CONCAVE_HALF_WIDTH);
            format!("(x > -{h}) AND (x < {h}) AND (y > -{h}) AND (y < {h}) AND NOT ((x > 0) AND (y > 0))")
        }
    }
}

/// Compiles [`preset_expression`] for `kind` at the options' input scale.
pub fn compile_preset(kind: DatasetKind, opts: &CompileOptions) -> crate::network::NetworkSpec {
    let expr = parse_expression(&preset_expression(kind, opts.input_scale)).expect("preset expressions parse");
    compile_with(&expr, opts).expect("preset expressions compile")
}
