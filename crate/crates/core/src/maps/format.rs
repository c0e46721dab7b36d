//! JSON map-description documents.
//!
//! ```text
//! {"n": 2, "expr": {"kind": "compose",
//!                   "outer": {"kind": "normalizer", "a": [[0.5, 0], [0, 0]]},
//!                   "inner": {"kind": "identity"}}}
//! ```
//!
//! Complex numbers are `[re, im]`. Node kinds: `identity`, `moebius`
//! (`matrix`), `automorphism` (`a`), `normalizer` (`a`), `dilation` (`s`,
//! `inner`), `compose` (`outer`, `inner`), `polynomial` (`terms`, each with
//! `target`, `exponents`, `coeff`). Unknown top-level keys (such as `meta`)
//! are ignored.

use serde_json::{json, Map, Value};

use super::{MapExpr, MapKind, PolyTerm};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Cx, Real};

fn perr(location: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.to_string(),
        message: message.into(),
    }
}

pub fn complex_to_json<T: Real>(z: Cx<T>) -> Value {
    json!([to_f64(z.re), to_f64(z.im)])
}

fn cvec_to_json<T: Real>(v: &[Cx<T>]) -> Value {
    Value::Array(v.iter().map(|z| complex_to_json(*z)).collect())
}

/// Expression node as JSON.
pub fn node_to_json<T: Real>(expr: &MapExpr<T>) -> Value {
    match expr.kind() {
        MapKind::Identity => json!({"kind": "identity"}),
        MapKind::Moebius { matrix } => json!({
            "kind": "moebius",
            "matrix": Value::Array(matrix.iter().map(|r| cvec_to_json(r)).collect()),
        }),
        MapKind::Automorphism { a } => json!({"kind": "automorphism", "a": cvec_to_json(a)}),
        MapKind::Normalizer { a } => json!({"kind": "normalizer", "a": cvec_to_json(a)}),
        MapKind::Dilation { s, inner } => json!({
            "kind": "dilation",
            "s": to_f64(*s),
            "inner": node_to_json(inner),
        }),
        MapKind::Compose { outer, inner } => json!({
            "kind": "compose",
            "outer": node_to_json(outer),
            "inner": node_to_json(inner),
        }),
        MapKind::Polynomial { terms } => json!({
            "kind": "polynomial",
            "terms": terms.iter().map(|t| json!({
                "target": t.target,
                "exponents": t.exponents,
                "coeff": complex_to_json(t.coeff),
            })).collect::<Vec<_>>(),
        }),
    }
}

/// Full document `{"n": …, "expr": …}`.
pub fn to_document<T: Real>(expr: &MapExpr<T>) -> Value {
    json!({"n": expr.n(), "expr": node_to_json(expr)})
}

pub fn parse_complex<T: Real>(v: &Value, loc: &str) -> Result<Cx<T>> {
    let arr = v
        .as_array()
        .ok_or_else(|| perr(loc, "expected a complex number [re, im]"))?;
    if arr.len() != 2 {
        return Err(perr(loc, format!("expected [re, im], found {} entries", arr.len())));
    }
    let part = |i: usize| {
        arr[i]
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| perr(&format!("{loc}[{i}]"), "expected a finite number"))
    };
    Ok(Cx::new(lit(part(0)?), lit(part(1)?)))
}

fn parse_cvec<T: Real>(v: &Value, loc: &str, len: usize) -> Result<Vec<Cx<T>>> {
    let arr = v.as_array().ok_or_else(|| perr(loc, "expected an array"))?;
    if arr.len() != len {
        return Err(perr(loc, format!("expected {len} entries, found {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| parse_complex(x, &format!("{loc}[{i}]")))
        .collect()
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, loc: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| perr(loc, format!("missing field \"{key}\"")))
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], loc: &str) -> Result<()> {
    for k in obj.keys() {
        if k != "kind" && !allowed.contains(&k.as_str()) {
            return Err(perr(loc, format!("unknown field \"{k}\"")));
        }
    }
    Ok(())
}

fn at(loc: &str, e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => perr(loc, other.to_string()),
    }
}

/// Parses an expression node for dimension `n`.
pub fn node_from_json<T: Real>(v: &Value, n: usize, loc: &str) -> Result<MapExpr<T>> {
    let obj = v
        .as_object()
        .ok_or_else(|| perr(loc, "expected an object node"))?;
    let kind = field(obj, "kind", loc)?
        .as_str()
        .ok_or_else(|| perr(&format!("{loc}.kind"), "expected a string"))?;
    match kind {
        "identity" => {
            check_keys(obj, &[], loc)?;
            MapExpr::identity(n).map_err(|e| at(loc, e))
        }
        "moebius" => {
            check_keys(obj, &["matrix"], loc)?;
            let mloc = format!("{loc}.matrix");
            let rows = field(obj, "matrix", loc)?
                .as_array()
                .ok_or_else(|| perr(&mloc, "expected an array of rows"))?;
            if rows.len() != n + 1 {
                return Err(perr(&mloc, format!("expected {} rows, found {}", n + 1, rows.len())));
            }
            let matrix = rows
                .iter()
                .enumerate()
                .map(|(i, r)| parse_cvec(r, &format!("{mloc}[{i}]"), n + 1))
                .collect::<Result<Vec<_>>>()?;
            MapExpr::moebius(matrix).map_err(|e| at(loc, e))
        }
        "automorphism" | "normalizer" => {
            check_keys(obj, &["a"], loc)?;
            let a = parse_cvec(field(obj, "a", loc)?, &format!("{loc}.a"), n)?;
            if kind == "automorphism" {
                MapExpr::automorphism(a)
            } else {
                MapExpr::normalizer(a)
            }
            .map_err(|e| at(loc, e))
        }
        "dilation" => {
            check_keys(obj, &["s", "inner"], loc)?;
            let s = field(obj, "s", loc)?
                .as_f64()
                .ok_or_else(|| perr(&format!("{loc}.s"), "expected a number"))?;
            let inner = node_from_json(field(obj, "inner", loc)?, n, &format!("{loc}.inner"))?;
            MapExpr::dilation(lit(s), inner).map_err(|e| at(loc, e))
        }
        "compose" => {
            check_keys(obj, &["outer", "inner"], loc)?;
            let outer = node_from_json(field(obj, "outer", loc)?, n, &format!("{loc}.outer"))?;
            let inner = node_from_json(field(obj, "inner", loc)?, n, &format!("{loc}.inner"))?;
            MapExpr::compose(outer, inner).map_err(|e| at(loc, e))
        }
        "polynomial" => {
            check_keys(obj, &["terms"], loc)?;
            let tloc = format!("{loc}.terms");
            let terms = field(obj, "terms", loc)?
                .as_array()
                .ok_or_else(|| perr(&tloc, "expected an array"))?;
            let mut parsed = Vec::with_capacity(terms.len());
            for (i, t) in terms.iter().enumerate() {
                let l = format!("{tloc}[{i}]");
                let to = t.as_object().ok_or_else(|| perr(&l, "expected an object"))?;
                check_keys(to, &["target", "exponents", "coeff"], &l)?;
                let target = field(to, "target", &l)?
                    .as_u64()
                    .ok_or_else(|| perr(&format!("{l}.target"), "expected a nonnegative integer"))?
                    as usize;
                let el = format!("{l}.exponents");
                let exps = field(to, "exponents", &l)?
                    .as_array()
                    .ok_or_else(|| perr(&el, "expected an array"))?
                    .iter()
                    .enumerate()
                    .map(|(k, e)| {
                        e.as_u64()
                            .map(|x| x as u32)
                            .ok_or_else(|| perr(&format!("{el}[{k}]"), "expected a nonnegative integer"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let coeff = parse_complex(field(to, "coeff", &l)?, &format!("{l}.coeff"))?;
                parsed.push(PolyTerm::new(target, exps, coeff));
            }
            MapExpr::polynomial(n, parsed).map_err(|e| at(loc, e))
        }
        other => Err(perr(&format!("{loc}.kind"), format!("unknown kind \"{other}\""))),
    }
}

/// Parses a full document value.
pub fn from_document<T: Real>(v: &Value) -> Result<MapExpr<T>> {
    let obj = v
        .as_object()
        .ok_or_else(|| perr("$", "expected a JSON object"))?;
    let n = field(obj, "n", "$")?
        .as_u64()
        .ok_or_else(|| perr("$.n", "expected a positive integer"))? as usize;
    if n < 2 {
        return Err(perr("$.n", format!("dimension must be at least 2, got {n}")));
    }
    node_from_json(field(obj, "expr", "$")?, n, "$.expr")
}

/// Parses document text.
pub fn parse_document<T: Real>(text: &str) -> Result<MapExpr<T>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    from_document(&v)
}
