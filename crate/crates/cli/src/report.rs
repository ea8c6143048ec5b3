//! JSON assembly. Numbers go through `fmt_f64` so every float carries 17
//! significant digits; keys keep insertion order.

use eqtorus::functional::{FunctionalValue, ScanRow, ScanValues};
use eqtorus::map_builder::fmt_f64;
use eqtorus::spectral::SpectrumReport;
use eqtorus::{MapParams, ModuliPoint, TauTriple, Tolerances};
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "1";

/// A float as a JSON number with 17 significant digits; non-finite values
/// become `null`.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    serde_json::from_str(&fmt_f64(v)).expect("formatted float is a JSON number")
}

pub fn nums(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|&v| num(v)).collect())
}

/// `{"schema": "1", "command": ..}` followed by `fields`.
pub fn document(command: &str, fields: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.insert("command".into(), json!(command));
    if let Value::Object(rest) = fields {
        out.extend(rest);
    }
    Value::Object(out)
}

pub fn point(pt: &ModuliPoint) -> Value {
    json!({
        "a": num(pt.a),
        "a_exact": pt.a_exact().map(|r| r.to_string()),
        "b": num(pt.b),
    })
}

pub fn map_input(pt: &ModuliPoint, params: &MapParams) -> Value {
    let mut v = point(pt);
    let obj = v.as_object_mut().expect("object");
    obj.insert("p".into(), json!(params.p));
    obj.insert("q".into(), json!(params.q));
    obj.insert("r".into(), json!(params.r));
    obj.insert("regime".into(), json!(params.regime().name()));
    v
}

pub fn tolerances(t: &Tolerances) -> Value {
    json!({ "solver": num(t.solver), "quadrature": num(t.quadrature), "ode": num(t.ode) })
}

pub fn tau(t: &TauTriple) -> Value {
    json!({ "tau1": num(t.tau1), "tau2": num(t.tau2), "tau3": num(t.tau3), "m": num(t.m) })
}

pub fn functional(v: &FunctionalValue) -> Value {
    json!({
        "lambda_bar": num(v.lambda_bar),
        "lambda_bar_quadrature": num(v.lambda_bar_quadrature),
        "relative_gap": num(v.relative_gap()),
        "flat_value": num(v.flat_value),
        "eight_pi": num(v.petrides_floor),
        "margin": num(v.margin()),
        "exceeds_bounds": v.exceeds_bounds(),
        "n2": v.n2,
    })
}

pub fn spectrum(r: &SpectrumReport) -> Value {
    let modes: Vec<Value> = r
        .counts_below_2
        .iter()
        .map(|m| {
            json!({
                "l": m.l,
                "bc": m.bc.name(),
                "count": m.count,
                "eigenvalues": nums(&m.eigenvalues),
                "at_two": m.at_two,
            })
        })
        .collect();
    json!({
        "n2": r.n2,
        "bound_rhs": r.bound_rhs,
        "equality": r.equality,
        "sufficient_condition_met": r.sufficient_condition_met,
        "l_max": r.l_max,
        "modes": modes,
        "certificates": nums(&r.certificates),
        "warnings": r.warnings,
    })
}

fn scan_values(v: &ScanValues) -> Value {
    json!({
        "tau1": num(v.tau1),
        "tau2": num(v.tau2),
        "tau3": num(v.tau3),
        "m": num(v.m),
        "lambda_bar": num(v.lambda_bar),
        "flat_value": num(v.flat_value),
        "n2": v.n2,
        "h_re": num(v.hopf.h_re),
        "h_im": num(v.hopf.h_im),
    })
}

pub fn scan_row(row: &ScanRow) -> Value {
    let mut v = json!({ "index": row.index, "a": num(row.a), "b": num(row.b) });
    let obj = v.as_object_mut().expect("object");
    match &row.outcome {
        Ok(values) => obj.insert("values".into(), scan_values(values)),
        Err(e) => obj.insert("error".into(), json!(e.to_string())),
    };
    v
}
