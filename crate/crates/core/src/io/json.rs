//! Canonical JSON form of an instance.
//!
//! One object with fields in fixed order
//! `{name, n, m, c, A, b, integrality, lb, ub}`, `A` as `[row, col, value]`
//! triplets, UTF-8, terminated by a newline. Infinite bounds are written as
//! `null`. Floats use the shortest representation that round-trips.

use serde::Serialize;
use serde_json::Value;

use crate::error::SchemaError;
use crate::mip::MipInstance;

#[derive(Serialize)]
struct Canonical<'a> {
    name: &'a str,
    n: usize,
    m: usize,
    c: &'a [f64],
    #[serde(rename = "A")]
    a: Vec<(usize, usize, f64)>,
    b: &'a [f64],
    integrality: &'a [bool],
    lb: Vec<Option<f64>>,
    ub: Vec<Option<f64>>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn write_instance(inst: &MipInstance) -> String {
    let doc = Canonical {
        name: inst.name(),
        n: inst.num_vars(),
        m: inst.num_cons(),
        c: inst.objective_coeffs(),
        a: inst.triplets().to_vec(),
        b: inst.rhs(),
        integrality: inst.integrality(),
        lb: inst.lower().iter().map(|&v| finite(v)).collect(),
        ub: inst.upper().iter().map(|&v| finite(v)).collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("instance serializes");
    out.push('\n');
    out
}

pub fn read_instance(text: &str) -> Result<MipInstance, SchemaError> {
    let root: Value = serde_json::from_str(text).map_err(|e| SchemaError::new("$", e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| SchemaError::new("$", "expected an object"))?;
    let field = |key: &str| obj.get(key).ok_or_else(|| SchemaError::new(format!("$.{key}"), "missing field"));

    let name = field("name")?
        .as_str()
        .ok_or_else(|| SchemaError::new("$.name", "expected a string"))?
        .to_string();
    let n = as_count(field("n")?, "$.n")?;
    let m = as_count(field("m")?, "$.m")?;
    let c = number_array(field("c")?, "$.c")?;
    let a = field("A")?.as_array().ok_or_else(|| SchemaError::new("$.A", "expected an array"))?;
    let mut triplets = Vec::with_capacity(a.len());
    for (k, entry) in a.iter().enumerate() {
        let path = format!("$.A[{k}]");
        let parts = entry
            .as_array()
            .filter(|p| p.len() == 3)
            .ok_or_else(|| SchemaError::new(&path, "expected [row, col, value]"))?;
        let row = as_count(&parts[0], &format!("{path}[0]"))?;
        let col = as_count(&parts[1], &format!("{path}[1]"))?;
        let val = as_number(&parts[2], &format!("{path}[2]"))?;
        triplets.push((row, col, val));
    }
    let b = number_array(field("b")?, "$.b")?;
    let integrality = field("integrality")?
        .as_array()
        .ok_or_else(|| SchemaError::new("$.integrality", "expected an array"))?
        .iter()
        .enumerate()
        .map(|(k, v)| v.as_bool().ok_or_else(|| SchemaError::new(format!("$.integrality[{k}]"), "expected a boolean")))
        .collect::<Result<Vec<_>, _>>()?;
    let lb = bound_array(field("lb")?, "$.lb", f64::NEG_INFINITY)?;
    let ub = bound_array(field("ub")?, "$.ub", f64::INFINITY)?;

    MipInstance::new(name, n, m, c, triplets, b, integrality, lb, ub)
        .map_err(|e| SchemaError::new("$", e.to_string()))
}

fn as_count(v: &Value, path: &str) -> Result<usize, SchemaError> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| SchemaError::new(path, "expected a nonnegative integer"))
}

fn as_number(v: &Value, path: &str) -> Result<f64, SchemaError> {
    v.as_f64().ok_or_else(|| SchemaError::new(path, "expected a number"))
}

fn number_array(v: &Value, path: &str) -> Result<Vec<f64>, SchemaError> {
    v.as_array()
        .ok_or_else(|| SchemaError::new(path, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(k, x)| as_number(x, &format!("{path}[{k}]")))
        .collect()
}

fn bound_array(v: &Value, path: &str, missing: f64) -> Result<Vec<f64>, SchemaError> {
    v.as_array()
        .ok_or_else(|| SchemaError::new(path, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(k, x)| if x.is_null() { Ok(missing) } else { as_number(x, &format!("{path}[{k}]")) })
        .collect()
}
