use std::collections::HashMap;

use crate::error::CompileError;
use crate::logic::{Generator, SquashingParams};
use crate::network::{Activation, InputFeature, LayerSpec, NetworkSpec, UnitInfo, DEFAULT_INPUT_SCALE};
use crate::operators::{operator_to_perceptron, OperatorKind, OperatorSpec};

use super::ast::{AtomForm, AtomUnit, Expr};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    /// Activation placed on every layer.
    pub activation: Activation,
    /// Freeze the membership layer too, giving a network with nothing to learn.
    pub freeze_atoms: bool,
    pub input_scale: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            activation: Activation::squash(SquashingParams::default()),
            freeze_atoms: false,
            input_scale: DEFAULT_INPUT_SCALE,
        }
    }
}

impl CompileOptions {
    pub fn hard() -> Self {
        Self {
            activation: Activation::HardCut,
            ..Self::default()
        }
    }

    pub fn frozen(mut self) -> Self {
        self.freeze_atoms = true;
        self
    }
}

/// Compiles with squashing activations everywhere and a learnable first layer.
pub fn compile_to_network(expr: &Expr, squash: SquashingParams) -> Result<NetworkSpec, CompileError> {
    squash
        .validate()
        .map_err(|e| CompileError::Unsupported(e.to_string()))?;
    compile_with(
        expr,
        &CompileOptions {
            activation: Activation::squash(squash),
            ..CompileOptions::default()
        },
    )
}

/// Lays the expression out as a layered network.
///
/// Layer 0 holds one unit per distinct atom. Every operator sits one layer
/// above its deepest operand (two for `MIN`/`MAX`), shallower operands are
/// carried up by identity units, and negations are folded into the weights
/// of whichever unit consumes them.
pub fn compile_with(expr: &Expr, opts: &CompileOptions) -> Result<NetworkSpec, CompileError> {
    if !(opts.input_scale.is_finite() && opts.input_scale > 0.0) {
        return Err(CompileError::Unsupported(format!("input scale {}", opts.input_scale)));
    }
    let mut b = Builder::default();
    let root = b.emit(expr)?;
    if root.negated {
        b.negate_in_place(&root);
    }
    Ok(b.finish(opts))
}

#[derive(Debug, Clone)]
struct Ref {
    layer: usize,
    unit: usize,
    negated: bool,
    desc: String,
}

#[derive(Debug)]
struct AtomEntry {
    weights: [f64; 4],
    bias: f64,
    info: UnitInfo,
}

#[derive(Debug)]
struct HiddenUnit {
    inputs: Vec<(usize, f64)>,
    bias: f64,
    info: UnitInfo,
}

#[derive(Debug, Default)]
struct Builder {
    atoms: Vec<AtomEntry>,
    atom_index: HashMap<[u64; 5], usize>,
    /// `hidden[l - 1]` is network layer `l`.
    hidden: Vec<Vec<HiddenUnit>>,
    lifted: HashMap<(usize, usize), usize>,
}

fn unit_name(layer: usize, unit: usize) -> String {
    format!("u{layer}.{unit}")
}

fn form_name(form: AtomForm) -> &'static str {
    match form {
        AtomForm::Preference => "preference",
        AtomForm::Membership => "membership",
        AtomForm::Quadratic => "quadratic",
    }
}

impl Builder {
    fn emit(&mut self, e: &Expr) -> Result<Ref, CompileError> {
        let id = Generator::Identity;
        let perceptron = |kind: OperatorKind, n: usize| {
            operator_to_perceptron(kind, n, &id).map_err(|err| CompileError::Unsupported(err.to_string()))
        };
        match e {
            Expr::Atom(a) => {
                let u = a.unit();
                let positive = if u.negated { a.negation() } else { *a };
                let idx = self.atom(u, positive.to_string());
                Ok(Ref {
                    layer: 0,
                    unit: idx,
                    negated: u.negated,
                    desc: a.to_string(),
                })
            }
            Expr::Not(inner) => {
                let mut r = self.emit(inner)?;
                r.negated = !r.negated;
                r.desc = format!("NOT({})", r.desc);
                Ok(r)
            }
            Expr::And(v) => self.operator(v.iter().collect(), perceptron(OperatorKind::Conjunction, v.len())?),
            Expr::Or(v) => self.operator(v.iter().collect(), perceptron(OperatorKind::Disjunction, v.len())?),
            Expr::Agg(v) => self.operator(v.iter().collect(), perceptron(OperatorKind::Aggregation, v.len())?),
            Expr::Mean { weights, args } => {
                let mut spec = perceptron(OperatorKind::ArithmeticMean, args.len())?;
                if let Some(w) = weights {
                    spec.weights.clone_from(w);
                }
                self.operator(args.iter().collect(), spec)
            }
            Expr::Impl(a, b) => self.operator(vec![a, b], perceptron(OperatorKind::Implication, 2)?),
            Expr::Pref(a, b) => self.operator(vec![a, b], perceptron(OperatorKind::Preference, 2)?),
            Expr::Unary { spec, arg } => self.operator(vec![arg], OperatorSpec::from(spec)),
            Expr::Min(a, b) => self.extremum(a, b, perceptron(OperatorKind::Min, 2)?),
            Expr::Max(a, b) => self.extremum(a, b, perceptron(OperatorKind::Max, 2)?),
        }
    }

    fn atom(&mut self, u: AtomUnit, label: String) -> usize {
        let mut key = [0u64; 5];
        for (k, w) in key.iter_mut().zip(&u.weights) {
            // Normalize -0.0 so that it dedups with 0.0.
            *k = (w + 0.0).to_bits();
        }
        key[4] = (u.bias + 0.0).to_bits();
        if let Some(&idx) = self.atom_index.get(&key) {
            return idx;
        }
        let idx = self.atoms.len();
        self.atoms.push(AtomEntry {
            weights: u.weights,
            bias: u.bias,
            info: UnitInfo {
                label,
                detail: format!("{} form, scale {}", form_name(u.form), u.scale),
            },
        });
        self.atom_index.insert(key, idx);
        idx
    }

    fn layer_mut(&mut self, layer: usize) -> &mut Vec<HiddenUnit> {
        while self.hidden.len() < layer {
            self.hidden.push(Vec::new());
        }
        &mut self.hidden[layer - 1]
    }

    fn push(&mut self, layer: usize, unit: HiddenUnit) -> usize {
        let units = self.layer_mut(layer);
        units.push(unit);
        units.len() - 1
    }

    /// Carries `r` up to `layer` through identity units, reusing any that
    /// already exist.
    fn lift(&mut self, mut r: Ref, layer: usize) -> Ref {
        while r.layer < layer {
            let key = (r.layer, r.unit);
            let idx = match self.lifted.get(&key) {
                Some(&idx) => idx,
                None => {
                    let idx = self.push(
                        r.layer + 1,
                        HiddenUnit {
                            inputs: vec![(r.unit, 1.0)],
                            bias: 0.0,
                            info: UnitInfo {
                                label: OperatorKind::Identity.label().into(),
                                detail: format!("inputs: {}", unit_name(r.layer, r.unit)),
                            },
                        },
                    );
                    self.lifted.insert(key, idx);
                    idx
                }
            };
            r.layer += 1;
            r.unit = idx;
        }
        r
    }

    /// Adds a unit at `layer` reading `refs` (all on `layer - 1`).
    fn unit(&mut self, layer: usize, label: String, refs: &[Ref], weights: &[f64], constant: f64) -> Ref {
        let mut bias = constant;
        let mut inputs = Vec::with_capacity(refs.len());
        for (r, &w) in refs.iter().zip(weights) {
            debug_assert_eq!(r.layer + 1, layer);
            // w * (1 - v) = -w * v + w
            if r.negated {
                inputs.push((r.unit, -w));
                bias += w;
            } else {
                inputs.push((r.unit, w));
            }
        }
        let descs: Vec<&str> = refs.iter().map(|r| r.desc.as_str()).collect();
        // Negations folded into the weights still show up in the label.
        let label = if refs.iter().any(|r| r.negated) {
            let marks: Vec<&str> = refs.iter().map(|r| if r.negated { "NOT" } else { "id" }).collect();
            format!("{label}({})", marks.join(","))
        } else {
            label
        };
        let idx = self.push(
            layer,
            HiddenUnit {
                inputs,
                bias,
                info: UnitInfo {
                    label,
                    detail: format!("inputs: {}", descs.join(", ")),
                },
            },
        );
        Ref {
            layer,
            unit: idx,
            negated: false,
            desc: unit_name(layer, idx),
        }
    }

    fn operands(&mut self, children: Vec<&Expr>) -> Result<(Vec<Ref>, usize), CompileError> {
        let refs = children
            .into_iter()
            .map(|c| self.emit(c))
            .collect::<Result<Vec<_>, _>>()?;
        let base = refs.iter().map(|r| r.layer).max().unwrap_or(0);
        let refs = refs.into_iter().map(|r| self.lift(r, base)).collect();
        Ok((refs, base))
    }

    fn operator(&mut self, children: Vec<&Expr>, spec: OperatorSpec) -> Result<Ref, CompileError> {
        let (refs, base) = self.operands(children)?;
        Ok(self.unit(base + 1, spec.kind.label().into(), &refs, &spec.weights, spec.constant))
    }

    fn extremum(&mut self, a: &Expr, b: &Expr, spec: OperatorSpec) -> Result<Ref, CompileError> {
        let (refs, base) = self.operands(vec![a, b])?;
        let inner = spec.hidden.as_deref().expect("min/max carry a hidden stage");
        let label = spec.kind.label();
        let h = self.unit(base + 1, format!("{label}.h"), &refs, &inner.weights, inner.constant);
        let x = self.lift(refs[0].clone(), base + 1);
        Ok(self.unit(base + 2, label.into(), &[x, h], &spec.weights, spec.constant))
    }

    /// Turns the root unit into its own negation. Nothing else reads the
    /// root, so no consumer is affected.
    fn negate_in_place(&mut self, root: &Ref) {
        if root.layer == 0 {
            let a = &mut self.atoms[root.unit];
            a.weights.iter_mut().for_each(|w| *w = -*w);
            a.bias = 1.0 - a.bias;
            a.info.label.clone_from(&root.desc);
        } else {
            let u = &mut self.hidden[root.layer - 1][root.unit];
            u.inputs.iter_mut().for_each(|(_, w)| *w = -*w);
            u.bias = 1.0 - u.bias;
            u.info.detail = format!("{}; output {}", u.info.detail, root.desc);
        }
    }

    fn finish(self, opts: &CompileOptions) -> NetworkSpec {
        let mut features = vec![InputFeature::Raw(0), InputFeature::Raw(1)];
        let mut columns = vec![0usize, 1];
        for i in 0..2 {
            if self.atoms.iter().any(|a| a.weights[2 + i] != 0.0) {
                features.push(InputFeature::Squared(i));
                columns.push(2 + i);
            }
        }
        let mut layers = Vec::with_capacity(self.hidden.len() + 1);
        let mut first = LayerSpec::new(
            self.atoms
                .iter()
                .map(|a| columns.iter().map(|&c| a.weights[c]).collect())
                .collect(),
            self.atoms.iter().map(|a| a.bias).collect(),
            opts.activation,
        );
        first.units = self.atoms.into_iter().map(|a| a.info).collect();
        if opts.freeze_atoms {
            first.frozen = true;
            first.label = Some("membership".into());
        }
        let mut prev_width = first.out_dim();
        layers.push(first);
        for units in self.hidden {
            let weights = units
                .iter()
                .map(|u| {
                    let mut row = vec![0.0; prev_width];
                    for &(j, w) in &u.inputs {
                        row[j] += w;
                    }
                    row
                })
                .collect();
            let bias = units.iter().map(|u| u.bias).collect();
            let labels: Vec<&str> = units.iter().map(|u| u.info.label.as_str()).collect();
            let mut layer = LayerSpec::new(weights, bias, opts.activation).frozen(labels.join(" | "));
            prev_width = units.len();
            layer.units = units.into_iter().map(|u| u.info).collect();
            layers.push(layer);
        }
        NetworkSpec {
            generator: Generator::Identity,
            inputs: 2,
            input_scale: opts.input_scale,
            input_features: features,
            layers,
        }
    }
}
