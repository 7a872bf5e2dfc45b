//! Text formats: lossless number formatting and the model document.
//!
//! Model documents are TOML. Numbers are written with 17 significant digits
//! so every `f64` round-trips bit for bit.

use std::fmt::Write as _;

use toml::Value;

use crate::error::{Error, Result};
use crate::nn::{Activation, Layer, MlpModel};

pub const MODEL_FORMAT: &str = "u2v-model";
pub const MODEL_VERSION: i64 = 1;

/// Formats a float with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", items.join(", "))
}

/// Writes the header lines shared by every model document.
pub fn write_header(out: &mut String, kind: &str) {
    let _ = writeln!(out, "format = \"{MODEL_FORMAT}\"");
    let _ = writeln!(out, "version = {MODEL_VERSION}");
    let _ = writeln!(out, "kind = \"{kind}\"");
}

/// Writes `model` under the table `prefix` (empty for the document root).
pub fn write_mlp(out: &mut String, prefix: &str, model: &MlpModel) {
    let dims: Vec<String> = model.layer_dims().iter().map(usize::to_string).collect();
    if prefix.is_empty() {
        let _ = writeln!(out, "layer_dims = [{}]", dims.join(", "));
    } else {
        let _ = writeln!(out, "\n[{prefix}]");
        let _ = writeln!(out, "layer_dims = [{}]", dims.join(", "));
    }
    let table = if prefix.is_empty() {
        "layers".to_string()
    } else {
        format!("{prefix}.layers")
    };
    for l in model.layers() {
        let _ = writeln!(out, "\n[[{table}]]");
        let _ = writeln!(out, "activation = \"{}\"", l.activation.tag());
        let _ = writeln!(out, "weights = {}", fmt_list(&l.weights));
        let _ = writeln!(out, "biases = {}", fmt_list(&l.biases));
    }
}

/// Parses a document and checks its format tag, version and kind.
pub fn parse_document(text: &str, kind: &str) -> Result<toml::Table> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    match doc.get("format").and_then(Value::as_str) {
        Some(MODEL_FORMAT) => {}
        _ => return Err(Error::Parse(format!("missing `format = \"{MODEL_FORMAT}\"`"))),
    }
    match doc.get("version").and_then(Value::as_integer) {
        Some(MODEL_VERSION) => {}
        other => return Err(Error::Parse(format!("unsupported model version {other:?}"))),
    }
    match doc.get("kind").and_then(Value::as_str) {
        Some(k) if k == kind => Ok(doc),
        other => Err(Error::Parse(format!("expected model kind `{kind}`, found {other:?}"))),
    }
}

pub fn get_f64(table: &toml::Table, key: &str) -> Result<f64> {
    match table.get(key) {
        Some(Value::Float(x)) => Ok(*x),
        Some(Value::Integer(i)) => Ok(*i as f64),
        _ => Err(Error::Parse(format!("missing numeric field `{key}`"))),
    }
}

pub fn get_str<'a>(table: &'a toml::Table, key: &str) -> Result<&'a str> {
    table
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Parse(format!("missing string field `{key}`")))
}

pub fn get_table<'a>(table: &'a toml::Table, key: &str) -> Result<&'a toml::Table> {
    table
        .get(key)
        .and_then(Value::as_table)
        .ok_or_else(|| Error::Parse(format!("missing table `{key}`")))
}

fn float_list(v: Option<&Value>, key: &str) -> Result<Vec<f64>> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("missing array `{key}`")))?;
    arr.iter()
        .map(|x| match x {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(Error::Parse(format!("non-numeric entry in `{key}`"))),
        })
        .collect()
}

/// Reads an MLP from a table holding `layer_dims` and `[[layers]]`.
pub fn read_mlp(table: &toml::Table) -> Result<MlpModel> {
    let dims: Vec<usize> = table
        .get("layer_dims")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing `layer_dims`".into()))?
        .iter()
        .map(|v| {
            v.as_integer()
                .filter(|&i| i > 0)
                .map(|i| i as usize)
                .ok_or_else(|| Error::Parse("`layer_dims` entries must be positive integers".into()))
        })
        .collect::<Result<_>>()?;
    let layers = table
        .get("layers")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing `[[layers]]`".into()))?;
    if dims.len() != layers.len() + 1 {
        return Err(Error::Shape(format!(
            "`layer_dims` has {} entries for {} layers",
            dims.len(),
            layers.len()
        )));
    }
    let mut out = Vec::with_capacity(layers.len());
    for (i, l) in layers.iter().enumerate() {
        let t = l
            .as_table()
            .ok_or_else(|| Error::Parse(format!("layer {i} is not a table")))?;
        out.push(Layer {
            inputs: dims[i],
            outputs: dims[i + 1],
            weights: float_list(t.get("weights"), "weights")?,
            biases: float_list(t.get("biases"), "biases")?,
            activation: Activation::from_tag(get_str(t, "activation")?)?,
        });
    }
    MlpModel::from_layers(out)
}

/// Serializes a standalone regressor document.
pub fn mlp_to_string(model: &MlpModel) -> String {
    let mut out = String::new();
    write_header(&mut out, "bpnn");
    write_mlp(&mut out, "", model);
    out
}

pub fn mlp_from_str(text: &str) -> Result<MlpModel> {
    read_mlp(&parse_document(text, "bpnn")?)
}
