use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::artifacts::ArtifactKind;
use super::pool::Handle;
use super::tools::ToolFn;
use crate::exprlang::SourceExpr;

#[derive(Debug, Clone, PartialEq)]
pub enum ParamType {
    Real,
    Int,
    Text,
    Expr,
    Enum(Vec<&'static str>),
    Handle(ArtifactKind),
    HandleList(ArtifactKind),
    /// Query points: numbers (1-D) or `[x, y]` pairs.
    PointList,
}

impl ParamType {
    fn json_schema(&self) -> Value {
        let handle = |k: ArtifactKind| json!({"type": "string", "pattern": format!("^{k}:[1-9][0-9]*$"), "artifact_kind": k.as_str()});
        match self {
            ParamType::Real => json!({"type": "number"}),
            ParamType::Int => json!({"type": "integer"}),
            ParamType::Text => json!({"type": "string"}),
            ParamType::Expr => json!({"type": "string", "format": "expr"}),
            ParamType::Enum(values) => json!({"type": "string", "enum": values}),
            ParamType::Handle(k) => handle(*k),
            ParamType::HandleList(k) => json!({"type": "array", "items": handle(*k)}),
            ParamType::PointList => json!({
                "type": "array",
                "items": {"anyOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2}]}
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub ty: ParamType,
    pub required: bool,
    pub description: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub params: Vec<ParamSpec>,
    pub returns: ArtifactKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("schema violation in {tool}.{field}: {message}")]
pub struct SchemaViolation {
    pub tool: String,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Real(f64),
    Int(i64),
    Text(String),
    Expr(SourceExpr),
    Handle(Handle),
    HandleList(Vec<Handle>),
    Points(Vec<Vec<f64>>),
}

impl Serialize for ParamValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ParamValue::Real(v) => s.serialize_f64(*v),
            ParamValue::Int(v) => s.serialize_i64(*v),
            ParamValue::Text(v) => s.serialize_str(v),
            ParamValue::Expr(e) => e.serialize(s),
            ParamValue::Handle(h) => h.serialize(s),
            ParamValue::HandleList(hs) => hs.serialize(s),
            ParamValue::Points(ps) => ps.serialize(s),
        }
    }
}

/// Parameters that passed schema validation for one tool.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet(BTreeMap<String, ParamValue>);

impl Serialize for ParamSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl ParamSet {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.get(name)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("params serialize")
    }

    pub fn real(&self, name: &str) -> Option<f64> {
        match self.0.get(name)? {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.0.get(name)? {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        match self.0.get(name)? {
            ParamValue::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn expr(&self, name: &str) -> Option<&SourceExpr> {
        match self.0.get(name)? {
            ParamValue::Expr(v) => Some(v),
            _ => None,
        }
    }

    pub fn handle(&self, name: &str) -> Option<Handle> {
        match self.0.get(name)? {
            ParamValue::Handle(v) => Some(*v),
            _ => None,
        }
    }

    pub fn handles(&self, name: &str) -> Option<&[Handle]> {
        match self.0.get(name)? {
            ParamValue::HandleList(v) => Some(v),
            _ => None,
        }
    }

    pub fn points(&self, name: &str) -> Option<&[Vec<f64>]> {
        match self.0.get(name)? {
            ParamValue::Points(v) => Some(v),
            _ => None,
        }
    }

    /// Every handle referenced by the parameters, in parameter-name order.
    pub fn all_handles(&self) -> Vec<Handle> {
        let mut out = Vec::new();
        for v in self.0.values() {
            match v {
                ParamValue::Handle(h) => out.push(*h),
                ParamValue::HandleList(hs) => out.extend(hs.iter().copied()),
                _ => {}
            }
        }
        out
    }

    /// Rewrites handle references through `map`; unmapped handles are kept.
    pub fn remap_handles(&mut self, map: &BTreeMap<Handle, Handle>) {
        for v in self.0.values_mut() {
            match v {
                ParamValue::Handle(h) => *h = map.get(h).copied().unwrap_or(*h),
                ParamValue::HandleList(hs) => hs.iter_mut().for_each(|h| *h = map.get(h).copied().unwrap_or(*h)),
                _ => {}
            }
        }
    }
}

impl ToolSpec {
    fn violation(&self, field: &str, message: impl Into<String>) -> SchemaViolation {
        SchemaViolation { tool: self.name.to_string(), field: field.to_string(), message: message.into() }
    }

    /// Checks `params` against the schema and converts it to typed values.
    /// Unknown fields, missing required fields, wrong JSON types, bad
    /// expressions and handles of the wrong kind are all violations.
    pub fn validate(&self, params: &Value) -> Result<ParamSet, SchemaViolation> {
        let empty = Map::new();
        let obj = match params {
            Value::Object(m) => m,
            Value::Null => &empty,
            other => return Err(self.violation("$", format!("expected an object, got {}", json_type(other)))),
        };
        if let Some(k) = obj.keys().find(|k| !self.params.iter().any(|p| p.name == k.as_str())) {
            return Err(self.violation(k, "unknown parameter"));
        }
        let mut out = BTreeMap::new();
        for spec in &self.params {
            match obj.get(spec.name) {
                None | Some(Value::Null) => {
                    if spec.required {
                        return Err(self.violation(spec.name, "required parameter is missing"));
                    }
                }
                Some(v) => {
                    let typed = self.convert(spec, v)?;
                    out.insert(spec.name.to_string(), typed);
                }
            }
        }
        Ok(ParamSet(out))
    }

    fn convert(&self, spec: &ParamSpec, v: &Value) -> Result<ParamValue, SchemaViolation> {
        let field = spec.name;
        let wrong = |what: &str| self.violation(field, format!("expected {what}, got {}", json_type(v)));
        let handle = |s: &Value, kind: ArtifactKind| -> Result<Handle, SchemaViolation> {
            let text = s.as_str().ok_or_else(|| self.violation(field, format!("expected a {kind} handle, got {}", json_type(s))))?;
            let h: Handle = text.parse().map_err(|e: String| self.violation(field, e))?;
            if h.kind() != kind {
                return Err(self.violation(field, format!("expected a {kind} handle, got `{h}`")));
            }
            Ok(h)
        };
        Ok(match &spec.ty {
            ParamType::Real => {
                let x = v.as_f64().ok_or_else(|| wrong("a number"))?;
                if !x.is_finite() {
                    return Err(self.violation(field, "number must be finite"));
                }
                ParamValue::Real(x)
            }
            ParamType::Int => match v.as_i64() {
                Some(i) => ParamValue::Int(i),
                None => match v.as_f64() {
                    Some(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => ParamValue::Int(x as i64),
                    _ => return Err(wrong("an integer")),
                },
            },
            ParamType::Text => ParamValue::Text(v.as_str().ok_or_else(|| wrong("a string"))?.to_string()),
            ParamType::Expr => {
                let text = v.as_str().ok_or_else(|| wrong("an expression string"))?;
                let e = SourceExpr::parse(text).map_err(|e| self.violation(field, e.to_string()))?;
                ParamValue::Expr(e)
            }
            ParamType::Enum(values) => {
                let text = v.as_str().ok_or_else(|| wrong("a string"))?;
                if !values.contains(&text) {
                    return Err(self.violation(field, format!("`{text}` is not one of {}", values.join(", "))));
                }
                ParamValue::Text(text.to_string())
            }
            ParamType::Handle(kind) => ParamValue::Handle(handle(v, *kind)?),
            ParamType::HandleList(kind) => {
                let items = v.as_array().ok_or_else(|| wrong("an array of handles"))?;
                ParamValue::HandleList(items.iter().map(|s| handle(s, *kind)).collect::<Result<_, _>>()?)
            }
            ParamType::PointList => {
                let items = v.as_array().ok_or_else(|| wrong("an array of points"))?;
                let mut points = Vec::with_capacity(items.len());
                for item in items {
                    let p: Option<Vec<f64>> = match item {
                        Value::Number(n) => n.as_f64().map(|x| vec![x]),
                        Value::Array(xs) if (1..=2).contains(&xs.len()) => xs.iter().map(Value::as_f64).collect(),
                        _ => None,
                    };
                    points.push(p.ok_or_else(|| self.violation(field, "points must be numbers or [x, y] pairs"))?);
                }
                ParamValue::Points(points)
            }
        })
    }

    pub fn json_schema(&self) -> Value {
        let mut props = Map::new();
        for p in &self.params {
            let mut s = p.ty.json_schema();
            s["description"] = Value::from(p.description);
            props.insert(p.name.to_string(), s);
        }
        let required: Vec<&str> = self.params.iter().filter(|p| p.required).map(|p| p.name).collect();
        json!({
            "name": self.name,
            "description": self.description,
            "parameters": {"type": "object", "properties": props, "required": required, "additionalProperties": false},
            "returns": self.returns.as_str(),
        })
    }
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Registered tools in registration order.
pub struct ToolRegistry {
    pub(super) tools: Vec<(ToolSpec, ToolFn)>,
}

impl ToolRegistry {
    pub(super) fn from_tools(tools: Vec<(ToolSpec, ToolFn)>) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        for (spec, _) in &tools {
            assert!(seen.insert(spec.name), "duplicate tool name {}", spec.name);
        }
        ToolRegistry { tools }
    }

    pub fn specs(&self) -> impl Iterator<Item = &ToolSpec> {
        self.tools.iter().map(|(s, _)| s)
    }

    pub fn spec(&self, name: &str) -> Option<&ToolSpec> {
        self.specs().find(|s| s.name == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.specs().map(|s| s.name).collect()
    }

    /// The whole registry as one JSON document, as handed to providers.
    pub fn schema_document(&self) -> Value {
        json!({ "tools": self.specs().map(ToolSpec::json_schema).collect::<Vec<_>>() })
    }
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolRegistry").field("tools", &self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ToolSpec {
        ToolSpec {
            name: "t",
            description: "",
            params: vec![
                ParamSpec { name: "x", ty: ParamType::Real, required: true, description: "" },
                ParamSpec { name: "n", ty: ParamType::Int, required: false, description: "" },
                ParamSpec { name: "mode", ty: ParamType::Enum(vec!["a", "b"]), required: false, description: "" },
                ParamSpec { name: "f", ty: ParamType::Expr, required: false, description: "" },
                ParamSpec { name: "d", ty: ParamType::Handle(ArtifactKind::Domain), required: false, description: "" },
                ParamSpec { name: "bcs", ty: ParamType::HandleList(ArtifactKind::Bc), required: false, description: "" },
                ParamSpec { name: "pts", ty: ParamType::PointList, required: false, description: "" },
            ],
            returns: ArtifactKind::Scalar,
        }
    }

    fn field_of(v: Value) -> String {
        spec().validate(&v).unwrap_err().field
    }

    #[test]
    fn accepts_well_typed_params() {
        let p = spec()
            .validate(&json!({"x": 1, "n": 4.0, "mode": "b", "f": "sin(x)", "d": "domain:2", "bcs": ["bc:1", "bc:3"], "pts": [0.5, [0.1, 0.2]]}))
            .unwrap();
        assert_eq!(p.real("x"), Some(1.0));
        assert_eq!(p.int("n"), Some(4));
        assert_eq!(p.text("mode"), Some("b"));
        assert_eq!(p.handle("d").unwrap().to_string(), "domain:2");
        assert_eq!(p.handles("bcs").unwrap().len(), 2);
        assert_eq!(p.points("pts").unwrap(), &[vec![0.5], vec![0.1, 0.2]]);
        assert_eq!(p.all_handles().len(), 3);
    }

    #[test]
    fn violations_name_the_field() {
        assert_eq!(field_of(json!({})), "x");
        assert_eq!(field_of(json!({"x": "one"})), "x");
        assert_eq!(field_of(json!({"x": 1, "y": 2})), "y");
        assert_eq!(field_of(json!({"x": 1, "n": 1.5})), "n");
        assert_eq!(field_of(json!({"x": 1, "mode": "c"})), "mode");
        assert_eq!(field_of(json!({"x": 1, "f": "sin("})), "f");
        assert_eq!(field_of(json!({"x": 1, "d": "problem:1"})), "d");
        assert_eq!(field_of(json!({"x": 1, "bcs": ["bc:1", "ic:1"]})), "bcs");
        assert_eq!(field_of(json!({"x": 1, "pts": [[1, 2, 3]]})), "pts");
        assert_eq!(field_of(json!([1])), "$");
    }

    #[test]
    fn null_optional_is_absent() {
        let p = spec().validate(&json!({"x": 0, "n": null})).unwrap();
        assert_eq!(p.int("n"), None);
    }

    #[test]
    fn round_trips_through_json() {
        let raw = json!({"x": 2.5, "f": "x^2", "d": "domain:1"});
        let p = spec().validate(&raw).unwrap();
        assert_eq!(p.to_json(), raw);
        assert_eq!(spec().validate(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn remap_rewrites_handles() {
        let mut p = spec().validate(&json!({"x": 0, "d": "domain:1", "bcs": ["bc:1", "bc:2"]})).unwrap();
        let map = BTreeMap::from([
            ("domain:1".parse().unwrap(), "domain:4".parse().unwrap()),
            ("bc:2".parse().unwrap(), "bc:7".parse().unwrap()),
        ]);
        p.remap_handles(&map);
        assert_eq!(p.to_json(), json!({"x": 0.0, "d": "domain:4", "bcs": ["bc:1", "bc:7"]}));
    }
}
