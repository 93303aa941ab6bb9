//! JSON model files.
//!
//! Numbers are written in shortest round-trip form, so saving a loaded model
//! reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelFileError;
use crate::logic::Generator;
use crate::network::{InputFeature, LayerSpec, Network, NetworkSpec};

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub generator: Generator,
    pub inputs: usize,
    pub input_scale: f64,
    pub input_features: Vec<InputFeature>,
    pub layers: Vec<LayerSpec>,
}

impl From<&NetworkSpec> for ModelFile {
    fn from(spec: &NetworkSpec) -> Self {
        Self {
            version: MODEL_FILE_VERSION,
            generator: spec.generator,
            inputs: spec.inputs,
            input_scale: spec.input_scale,
            input_features: spec.input_features.clone(),
            layers: spec.layers.clone(),
        }
    }
}

impl ModelFile {
    pub fn into_spec(self) -> NetworkSpec {
        NetworkSpec {
            generator: self.generator,
            inputs: self.inputs,
            input_scale: self.input_scale,
            input_features: self.input_features,
            layers: self.layers,
        }
    }
}

pub fn model_to_string(net: &Network) -> String {
    let mut s =
        serde_json::to_string_pretty(&ModelFile::from(net.spec())).expect("model files contain only finite numbers");
    s.push('\n');
    s
}

/// Parses and validates a model; nothing is returned unless every check
/// passes.
pub fn model_from_str(text: &str) -> Result<Network, ModelFileError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ModelFileError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match value.get("version").map(serde_json::Value::as_u64) {
        Some(Some(v)) if v == u64::from(MODEL_FILE_VERSION) => {}
        Some(Some(v)) => return Err(ModelFileError::UnsupportedVersion(v.try_into().unwrap_or(u32::MAX))),
        Some(None) => {
            return Err(ModelFileError::Field {
                path: "version".into(),
                message: "expected a non-negative integer".into(),
            })
        }
        None => {
            return Err(ModelFileError::Field {
                path: "version".into(),
                message: "missing".into(),
            })
        }
    }
    let file: ModelFile = serde_path_to_error::deserialize(value).map_err(|e| ModelFileError::Field {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    Ok(Network::assemble(file.into_spec())?)
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<(), ModelFileError> {
    fs::write(path, model_to_string(net))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Network, ModelFileError> {
    model_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile_with, parse_expression, CompileOptions, XOR_EXPRESSION};

    fn xor() -> Network {
        let spec = compile_with(&parse_expression(XOR_EXPRESSION).unwrap(), &CompileOptions::default()).unwrap();
        Network::assemble(spec).unwrap()
    }

    #[test]
    fn text_round_trip_is_byte_identical() {
        let text = model_to_string(&xor());
        let again = model_to_string(&model_from_str(&text).unwrap());
        assert_eq!(text, again);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let text = model_to_string(&xor());
        let cut = &text[..text.len() / 2];
        assert!(matches!(model_from_str(cut), Err(ModelFileError::Parse { .. })));
    }

    #[test]
    fn unknown_version() {
        let text = model_to_string(&xor()).replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            model_from_str(&text),
            Err(ModelFileError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn field_errors_carry_a_path() {
        let text = model_to_string(&xor()).replacen("\"frozen\": true", "\"frozen\": 3", 1);
        match model_from_str(&text) {
            Err(ModelFileError::Field { path, .. }) => assert!(path.starts_with("layers[1]"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_network_is_rejected() {
        let mut file = ModelFile::from(xor().spec());
        file.layers[2].weights[0].push(1.0);
        let text = serde_json::to_string(&file).unwrap();
        assert!(matches!(model_from_str(&text), Err(ModelFileError::Network(_))));
    }
}
