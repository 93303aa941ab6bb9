use std::fmt::Write;

use crate::network::{Activation, InputFeature, NetworkSpec};

use super::ast::VARIABLES;

fn activation_text(a: &Activation) -> String {
    match a {
        Activation::Squash { a, lambda, beta } => format!("squash(a={a}, lambda={lambda}, beta={beta})"),
        Activation::HardCut => "cut".into(),
        Activation::Linear => "linear".into(),
    }
}

fn feature_text(f: &InputFeature) -> String {
    match *f {
        InputFeature::Raw(i) => VARIABLES.get(i).map_or(format!("in{i}"), |v| (*v).to_string()),
        InputFeature::Squared(i) => VARIABLES.get(i).map_or(format!("in{i}^2"), |v| format!("{v}^2")),
    }
}

fn tuple(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{}", v + 0.0)).collect();
    format!("({})", parts.join(","))
}

/// Per-layer report of what each unit computes.
///
/// First-layer rows show every input weight; deeper rows list only the
/// inputs a unit is connected to.
pub fn explain_network(spec: &NetworkSpec) -> String {
    let mut out = String::new();
    let feats: Vec<String> = spec.input_features.iter().map(feature_text).collect();
    let _ = writeln!(
        out,
        "inputs: {} (data coordinates scaled by {})",
        feats.join(", "),
        spec.input_scale
    );
    for (l, layer) in spec.layers.iter().enumerate() {
        let role = match (&layer.label, layer.frozen) {
            (Some(label), true) => format!("frozen {label}"),
            (Some(label), false) => format!("learnable {label}"),
            (None, _) if l == 0 => "learnable membership layer".to_string(),
            (None, _) => "learnable layer".to_string(),
        };
        let _ = writeln!(
            out,
            "layer {l}: {role}, activation {}",
            activation_text(&layer.activation)
        );
        for (u, (row, b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let info = layer.units.get(u);
            let label = info
                .map(|i| i.label.as_str())
                .filter(|s| !s.is_empty())
                .unwrap_or("unit");
            let (weights, wired): (Vec<f64>, Vec<String>) = if l == 0 {
                (row.clone(), Vec::new())
            } else {
                row.iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(j, w)| (*w, format!("u{}.{j}", l - 1)))
                    .unzip()
            };
            let _ = write!(out, "  u{l}.{u}  {label}: w={}, b={}", tuple(&weights), b + 0.0);
            if !wired.is_empty() {
                let _ = write!(out, "  from {}", wired.join(", "));
            }
            match info.map(|i| i.detail.as_str()).filter(|s| !s.is_empty()) {
                Some(detail) => {
                    let _ = writeln!(out, "  [{detail}]");
                }
                None => out.push('\n'),
            }
        }
    }
    if let Some(last) = spec.layers.len().checked_sub(1) {
        let _ = writeln!(out, "output: u{last}.0");
    }
    out
}
