//! Metadata for the tunable parameters: names, ranges, defaults, groups.

use coshrem::pipeline::DetectorConfig;
use coshrem::MeasureKind;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    System,
    Detection,
    Postprocess,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParamSpec {
    pub name: &'static str,
    /// `number`, `integer`, `integer[]` or `enum`.
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub group: Group,
    pub min: Option<f64>,
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<&'static str>>,
    /// Edge-mode default.
    pub default: Value,
    /// Defaults per detection mode.
    pub defaults: Value,
    pub description: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Schema {
    pub version: u32,
    pub modes: Vec<MeasureKind>,
    pub params: Vec<ParamSpec>,
}

struct Row {
    name: &'static str,
    kind: &'static str,
    group: Group,
    range: Option<(f64, f64)>,
    step: Option<f64>,
    options: Option<Vec<&'static str>>,
    description: &'static str,
}

fn rows() -> Vec<Row> {
    let num = |name, group, lo, hi, step, description| Row {
        name,
        kind: "number",
        group,
        range: Some((lo, hi)),
        step: Some(step),
        options: None,
        description,
    };
    let int = |name, group, lo, hi, description| Row {
        name,
        kind: "integer",
        group,
        range: Some((lo, hi)),
        step: Some(1.0),
        options: None,
        description,
    };
    vec![
        num("waveletSupport", Group::System, 8.0, 256.0, 1.0, "support of the coarsest Mexican hat in pixels"),
        num("gaussianSupport", Group::System, 8.0, 256.0, 1.0, "support of the coarsest transverse Gaussian in pixels"),
        int("scalesPerOctave", Group::System, 1.0, 8.0, "scales per halving of the support"),
        num("octaves", Group::System, 0.25, 6.0, 0.25, "number of octaves covered by the scales"),
        int("shearLevel", Group::System, 0.0, 5.0, "shears per cone are -2^L..2^L"),
        num("alpha", Group::System, 0.0, 1.0, 0.05, "anisotropy; 1 keeps the filter aspect fixed across scales"),
        num("minContrast", Group::Detection, 0.1, 1000.0, 1.0, "weakest primary response (intensity units) that can score"),
        num("epsilonFactor", Group::Detection, 0.01, 10.0, 0.01, "regularizer as a multiple of minContrast"),
        Row {
            name: "pivotScales",
            kind: "integer[]",
            group: Group::Detection,
            range: Some((0.0, 47.0)),
            step: Some(1.0),
            options: None,
            description: "scale indices that choose the orientation",
        },
        Row {
            name: "polarity",
            kind: "enum",
            group: Group::Detection,
            range: None,
            step: None,
            options: Some(vec!["positive", "negative", "both"]),
            description: "rising edges and bright ridges are positive",
        },
        num("low", Group::Postprocess, 0.0, 1.0, 0.01, "hysteresis low threshold"),
        num("high", Group::Postprocess, 0.0, 1.0, 0.01, "hysteresis high threshold"),
    ]
}

fn section(group: Group) -> &'static str {
    match group {
        Group::System => "system",
        Group::Detection => "detection",
        Group::Postprocess => "thresholds",
    }
}

/// The value of `name` in a config serialized to JSON.
fn lookup(config: &Value, group: Group, name: &str) -> Value {
    config[section(group)][name].clone()
}

pub fn schema() -> Schema {
    let edge = serde_json::to_value(DetectorConfig::edge_default()).expect("serializable");
    let ridge = serde_json::to_value(DetectorConfig::ridge_default()).expect("serializable");
    let params = rows()
        .into_iter()
        .map(|r| ParamSpec {
            name: r.name,
            kind: r.kind,
            group: r.group,
            min: r.range.map(|x| x.0),
            max: r.range.map(|x| x.1),
            step: r.step,
            options: r.options,
            default: lookup(&edge, r.group, r.name),
            defaults: json!({
                "edge": lookup(&edge, r.group, r.name),
                "ridge": lookup(&ridge, r.group, r.name),
            }),
            description: r.description,
        })
        .collect();
    Schema {
        version: 1,
        modes: vec![MeasureKind::Edge, MeasureKind::Ridge],
        params,
    }
}

/// A parameter outside its schema range.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeError {
    pub field: &'static str,
    pub message: String,
}

/// Checks every parameter of `config` against the schema ranges.
pub fn check_ranges(config: &DetectorConfig) -> Result<(), RangeError> {
    let value = serde_json::to_value(config).expect("serializable");
    for r in rows() {
        let Some((lo, hi)) = r.range else { continue };
        let v = lookup(&value, r.group, r.name);
        let numbers: Vec<f64> = match &v {
            Value::Array(items) => items.iter().filter_map(Value::as_f64).collect(),
            other => other.as_f64().into_iter().collect(),
        };
        if let Some(bad) = numbers.iter().find(|x| !(lo..=hi).contains(*x)) {
            return Err(RangeError {
                field: r.name,
                message: format!("{bad} is outside [{lo}, {hi}]"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_inside_their_ranges() {
        assert!(check_ranges(&DetectorConfig::edge_default()).is_ok());
        assert!(check_ranges(&DetectorConfig::ridge_default()).is_ok());
        for p in schema().params {
            assert!(!p.default.is_null(), "{} has no default", p.name);
            assert!(!p.defaults["ridge"].is_null(), "{} has no ridge default", p.name);
        }
    }

    #[test]
    fn out_of_range_value_names_its_field() {
        let mut cfg = DetectorConfig::edge_default();
        cfg.system.alpha = 1.5;
        assert_eq!(check_ranges(&cfg).unwrap_err().field, "alpha");
        let mut cfg = DetectorConfig::ridge_default();
        cfg.detection.pivot_scales = vec![0, 99];
        assert_eq!(check_ranges(&cfg).unwrap_err().field, "pivotScales");
    }
}
