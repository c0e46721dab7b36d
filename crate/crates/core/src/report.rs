//! Canonical report documents: JSON with sorted keys, reals printed with 17
//! significant digits, complex numbers as `[re, im]`, and a CSV form for
//! sampled curves.

use serde_json::{json, Map, Value};

use crate::bergman::{GridSpec, NormResult, SupNormResult};
use crate::comparison::{BoundParams, EnvelopeReport, OdeOutcome, OdeStatus};
use crate::maps::format::{complex_to_json, to_document};
use crate::maps::MapExpr;
use crate::order::{
    CoveringEstimate, DilationReport, GradJacobianCheck, LocalCovering, MoebiusOrder, OrderReport,
};
use crate::scalar::{to_f64, Cx, Real};
use crate::schwarzian::SchwarzianTensor;
use crate::verify::{Subject, SuiteReport, Violation};

/// Conversion of a result into its report object.
pub trait ToReport {
    fn to_report(&self) -> Value;
}

fn real<T: Real>(x: T) -> Value {
    num(to_f64(x))
}

fn num(x: f64) -> Value {
    // non-finite values have no JSON number form
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt_real<T: Real>(x: Option<T>) -> Value {
    x.map_or(Value::Null, real)
}

fn cvec<T: Real>(v: &[Cx<T>]) -> Value {
    Value::Array(v.iter().map(|z| complex_to_json(*z)).collect())
}

fn cmat<T: Real>(m: &[Vec<Cx<T>>]) -> Value {
    Value::Array(m.iter().map(|r| cvec(r)).collect())
}

fn grid_json(g: &GridSpec) -> Value {
    json!({"radius": num(g.radius), "radii": g.radii, "phases": g.phases, "refine": g.refine})
}

impl<T: Real> ToReport for SchwarzianTensor<T> {
    fn to_report(&self) -> Value {
        json!({
            "n": self.n,
            "z": cvec(&self.point),
            "s": Value::Array(self.s.iter().map(|m| cmat(m)).collect()),
            "s0": cmat(&self.s0),
            "jacobian": cmat(&self.jacobian),
            "grad_log_jacobian": cvec(&self.log_j_grad),
            "max_abs": real(self.max_abs()),
        })
    }
}

impl<T: Real> ToReport for NormResult<T> {
    fn to_report(&self) -> Value {
        json!({
            "value": real(self.value),
            "argmax_v": cvec(&self.argmax_v),
            "converged": self.converged,
            "restarts_used": self.restarts_used,
        })
    }
}

impl<T: Real> ToReport for SupNormResult<T> {
    fn to_report(&self) -> Value {
        json!({
            "value": real(self.value),
            "witness_z": cvec(&self.witness_z),
            "argmax_v": cvec(&self.argmax_v),
            "grid": grid_json(&self.grid_spec),
            "lower_bound_only": self.lower_bound_only,
            "points_evaluated": self.points_evaluated,
            "failures": self.failures.iter().map(|f| json!({"z": cvec(&f.z), "message": f.message})).collect::<Vec<_>>(),
        })
    }
}

impl<T: Real> ToReport for OdeStatus<T> {
    fn to_report(&self) -> Value {
        match *self {
            OdeStatus::CompletedTo { t_end } => json!({"completed_to": real(t_end)}),
            OdeStatus::FirstZeroAt { t0, lo, hi } => {
                json!({"first_zero_at": real(t0), "bracket": [real(lo), real(hi)]})
            }
            OdeStatus::BlowupAt {
                x1,
                lo,
                hi,
                log_lo,
                log_hi,
            } => json!({
                "blowup_at": real(x1),
                "bracket": [real(lo), real(hi)],
                "log_bracket": [real(log_lo), real(log_hi)],
            }),
        }
    }
}

impl<T: Real> ToReport for OdeOutcome<T> {
    fn to_report(&self) -> Value {
        json!({
            "abscissa": self.abscissa,
            "labels": self.labels,
            "samples": self.samples.iter().map(|(t, v)| {
                let mut row = vec![real(*t)];
                row.extend(v.iter().map(|x| real(*x)));
                Value::Array(row)
            }).collect::<Vec<_>>(),
            "status": self.status.to_report(),
            "envelope_ok": self.envelope_ok,
            "worst_margin": opt_real(self.worst_margin),
            "warning": self.warning,
        })
    }
}

impl<T: Real> ToReport for BoundParams<T> {
    fn to_report(&self) -> Value {
        json!({
            "n": self.n,
            "alpha": real(self.alpha),
            "a": real(self.a),
            "b": real(self.b),
            "gamma": real(self.gamma),
            "gamma_variant": format!("{:?}", self.gamma_variant).to_lowercase(),
            "tau": real(self.tau),
            "c1": real(self.c1),
            "c2": real(self.c2),
            "eps": real(self.eps),
            "delta": real(self.delta),
            "smallness": real(self.smallness()),
        })
    }
}

impl<T: Real> ToReport for EnvelopeReport<T> {
    fn to_report(&self) -> Value {
        json!({
            "applicable": self.applicable,
            "params": self.params.to_report(),
            "smallness": real(self.smallness),
            "rays": self.rays,
            "t_end": real(self.t_end),
            "zero_found": self.zero_found,
            "margins": {
                "ratio": real(self.ratio_margin),
                "lower": real(self.lower_margin),
                "upper": real(self.upper_margin),
                "u_bound": real(self.u_bound_margin),
                "grad_bound": real(self.grad_bound_margin),
                "jacobian": real(self.jacobian_margin),
            },
            "consistency": real(self.consistency),
            "worst_margin": real(self.worst_margin),
            "violations": self.violations.iter().map(|v| json!({
                "zeta": cvec(&v.zeta),
                "t": real(v.t),
                "check": v.check,
                "margin": real(v.margin),
            })).collect::<Vec<_>>(),
            "status": if self.ok { "pass" } else { "fail" },
        })
    }
}

impl ToReport for MoebiusOrder {
    fn to_report(&self) -> Value {
        json!({
            "n": self.n,
            "value": num(self.value),
            "numeric": num(self.numeric),
            "extremal_moduli": self.extremal.iter().map(|x| num(*x)).collect::<Vec<_>>(),
        })
    }
}

impl<T: Real> ToReport for DilationReport<T> {
    fn to_report(&self) -> Value {
        json!({
            "r": real(self.r),
            "s": real(self.s),
            "factor": real(self.factor),
            "sup_f": real(self.sup_f),
            "sup_g": real(self.sup_g),
            "ratio": real(self.ratio),
            "ratio_ok": self.ratio_ok,
            "grad_f": real(self.grad_f),
            "grad_g": real(self.grad_g),
            "grad_residual": real(self.grad_residual),
            "grad_ok": self.grad_ok,
            "status": if self.ok { "pass" } else { "fail" },
        })
    }
}

impl<T: Real> ToReport for OrderReport<T> {
    fn to_report(&self) -> Value {
        json!({
            "n": self.n,
            "alpha": real(self.alpha),
            "r": real(self.r),
            "lambda_lower": real(self.lambda_lower),
            "witness": to_document(&self.witness),
            "witness_sup": real(self.witness_sup),
            "c_r": opt_real(self.c_r),
            "growth_bound_at": self.growth_bound_at.iter().map(|(a, b)| json!([real(*a), real(*b)])).collect::<Vec<_>>(),
            "candidates": self.candidates,
            "lower_bound_only": self.lower_bound_only,
        })
    }
}

impl<T: Real> ToReport for CoveringEstimate<T> {
    fn to_report(&self) -> Value {
        json!({
            "center": cvec(&self.center),
            "radius_lower": real(self.radius_lower),
            "topological_radius": real(self.topological_radius),
            "s0_proxy": real(self.s0_proxy),
            "boundary_samples": self.boundary_samples,
            "half_radius_min": real(self.half_radius_min),
            "half_radius_ok": self.half_radius_ok,
            "failures": self.failures,
        })
    }
}

impl<T: Real> ToReport for LocalCovering<T> {
    fn to_report(&self) -> Value {
        json!({"eta": real(self.eta), "beta": real(self.beta), "s0": real(self.s0), "radius": real(self.radius)})
    }
}

impl<T: Real> ToReport for GradJacobianCheck<T> {
    fn to_report(&self) -> Value {
        json!({"lhs": real(self.lhs), "rhs": real(self.rhs), "margin": real(self.margin), "ok": self.ok})
    }
}

impl<T: Real> ToReport for MapExpr<T> {
    fn to_report(&self) -> Value {
        to_document(self)
    }
}

fn subject_json<T: Real>(s: &Subject<T>) -> Value {
    match s {
        Subject::Map(f) => json!({"map": to_document(f)}),
        Subject::Pair(g, f) => json!({"outer": to_document(g), "inner": to_document(f)}),
        Subject::Disk { sample, c, kind } => {
            json!({"disk_sample": sample.name(), "c": real(*c), "kind": kind.as_str()})
        }
        Subject::Riccati(c) => json!({"riccati_c": real(*c)}),
        Subject::Dilation { map, r, s } => json!({"map": to_document(map), "r": real(*r), "s": real(*s)}),
    }
}

impl<T: Real> ToReport for Violation<T> {
    fn to_report(&self) -> Value {
        json!({
            "check": self.check,
            "input": self.input,
            "subject": subject_json(&self.subject),
            "z": cvec(&self.z),
            "v": cvec(&self.v),
            "zeta": cvec(&self.zeta),
            "alpha": real(self.alpha),
            "lhs": real(self.lhs),
            "rhs": real(self.rhs),
            "margin": real(self.margin),
        })
    }
}

impl<T: Real> ToReport for SuiteReport<T> {
    fn to_report(&self) -> Value {
        json!({
            "name": self.name,
            "cases": self.cases,
            "skipped": self.skipped,
            "violations": self.violations.iter().map(ToReport::to_report).collect::<Vec<_>>(),
            "worst_margin": opt_real(self.worst_margin),
            "status": self.status.as_str(),
            "parts": self.parts.iter().map(ToReport::to_report).collect::<Vec<_>>(),
        })
    }
}

/// Wraps a result with the command line, seed and library version.
pub fn envelope(command: &[String], seed: Option<u64>, result: Value) -> Value {
    json!({
        "command": command,
        "seed": seed,
        "version": crate::VERSION,
        "result": result,
    })
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (k, x) in a.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_value(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for (k, key) in keys.into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_value(&m[key], out);
            }
            out.push('}');
        }
    }
}

/// Canonical JSON text: sorted keys, no whitespace, reals as `{:.16e}`.
pub fn to_canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

/// CSV of sampled curves: header `abscissa,labels…`, one row per sample.
pub fn samples_csv<T: Real>(out: &OdeOutcome<T>) -> String {
    let mut s = String::new();
    s.push_str(out.abscissa);
    for l in &out.labels {
        s.push(',');
        s.push_str(l);
    }
    s.push('\n');
    for (t, v) in &out.samples {
        s.push_str(&format!("{:.16e}", to_f64(*t)));
        for x in v {
            s.push_str(&format!(",{:.16e}", to_f64(*x)));
        }
        s.push('\n');
    }
    s
}

/// Keys of a JSON object, for schema checks.
pub fn keys(v: &Value) -> Vec<String> {
    v.as_object().map(Map::keys).into_iter().flatten().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::riccati_solve;
    use crate::maps::MapExpr;
    use crate::scalar::czero;

    #[test]
    fn canonical_reals_and_order() {
        let v = json!({"b": 0.1, "a": [1, 2.5], "c": {"z": null, "y": true}});
        assert_eq!(
            to_canonical_json(&v),
            r#"{"a":[1,2.5000000000000000e0],"b":1.0000000000000001e-1,"c":{"y":true,"z":null}}"#
        );
        let back: Value = serde_json::from_str(&to_canonical_json(&v)).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn ode_outcome_schema() {
        let out = riccati_solve(0.2f64, 0.999).unwrap();
        let r = out.to_report();
        assert!(r["status"]["blowup_at"].as_f64().unwrap() < 1.0);
        assert_eq!(r["samples"][0].as_array().unwrap().len(), 3);
        let csv = samples_csv(&out);
        assert_eq!(csv.lines().next(), Some("x,h,phi"));
        assert_eq!(csv.lines().count(), out.samples.len() + 1);
    }

    #[test]
    fn sup_norm_schema() {
        let f = MapExpr::<f64>::identity(2).unwrap();
        let grid = GridSpec::with_resolution(0.5, 2, 2, 0);
        let r = crate::bergman::sup_norm_with(&f, &grid, &crate::bergman::sweep_options()).unwrap();
        let v = r.to_report();
        assert_eq!(v["lower_bound_only"], Value::Bool(true));
        assert_eq!(v["witness_z"].as_array().unwrap().len(), 2);
        assert_eq!(v["witness_z"][0].as_array().unwrap().len(), 2);
    }

    #[test]
    fn suite_schema() {
        let r = crate::verify::run_suite::<f64>(&crate::verify::SuiteConfig::empty()).unwrap();
        let v = r.to_report();
        assert_eq!(v["status"], "pass");
        assert_eq!(v["violations"], json!([]));
        let e = envelope(&["verify".into()], Some(7), v);
        assert_eq!(keys(&e), vec!["command", "result", "seed", "version"]);
        let t = crate::schwarzian::schwarzian_tensor(&MapExpr::<f64>::identity(2).unwrap(), &[czero(), czero()]).unwrap();
        assert_eq!(t.to_report()["max_abs"].as_f64(), Some(0.0));
    }
}
