//! JSON documents for meshes, forms and weight systems.
//!
//! Rationals are always strings `"p/q"` in lowest terms. Simplices are keyed
//! by comma-joined vertex lists, `""` for ∅.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::chains::{Chain, PairFamily, SolveBranch, ValuedChain};
use crate::error::{Error, Result};
use crate::form::{mask_indices, mask_of, Form};
use crate::mesh::Mesh;
use crate::poly::{Mono, Poly};
use crate::polyform::PiecewiseForm;
use crate::rational::{fmt_q, parse_q, Q};
use crate::simplex::Simplex;
use crate::weights::{LinkWeights, WeightSystem};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MeshDoc {
    pub dim: usize,
    pub vertices: Vec<Vec<String>>,
    pub cells: Vec<Vec<usize>>,
}

pub fn mesh_from_doc(doc: &MeshDoc) -> Result<Mesh> {
    let coords = doc
        .vertices
        .iter()
        .map(|v| v.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>>>())
        .collect::<Result<Vec<_>>>()?;
    Mesh::build(doc.dim, coords, doc.cells.clone())
}

pub fn mesh_to_doc(mesh: &Mesh) -> MeshDoc {
    MeshDoc {
        dim: mesh.dim(),
        vertices: mesh.all_coords().iter().map(|v| v.iter().map(fmt_q).collect()).collect(),
        cells: mesh.cells().iter().map(|c| c.verts().iter().map(|&v| v as usize).collect()).collect(),
    }
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let doc: MeshDoc = serde_json::from_str(text)?;
    mesh_from_doc(&doc)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(path: impl AsRef<Path>, mesh: &Mesh) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&mesh_to_doc(mesh))?)?;
    Ok(())
}

fn mono_key(m: Mono, n: usize) -> String {
    m.exps(n).iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_mono(s: &str, n: usize) -> Result<Mono> {
    let exps: Vec<u32> = if s.trim().is_empty() {
        vec![0; n]
    } else {
        s.split(',').map(|t| t.trim().parse::<u32>()).collect::<std::result::Result<_, _>>().map_err(|_| Error::Parse(format!("bad multi-index {s:?}")))?
    };
    if exps.len() != n {
        return Err(Error::Parse(format!("multi-index {s:?} needs {n} entries")));
    }
    Ok(Mono::from_exps(&exps))
}

fn form_to_value(f: &Form) -> Value {
    let n = f.nvars();
    let mut basis = Map::new();
    for (mask, p) in f.terms() {
        let key = mask_indices(*mask).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let mut coeffs = Map::new();
        for (m, c) in p.terms() {
            coeffs.insert(mono_key(*m, n), Value::String(fmt_q(c)));
        }
        basis.insert(key, Value::Object(coeffs));
    }
    Value::Object(basis)
}

fn form_from_value(v: &Value, n: usize, k: usize) -> Result<Form> {
    let obj = v.as_object().ok_or_else(|| Error::Parse("cell entry must be an object".into()))?;
    let mut out = Form::zero(n, k);
    for (bkey, coeffs) in obj {
        let idx: Vec<usize> = if bkey.trim().is_empty() {
            Vec::new()
        } else {
            bkey.split(',').map(|t| t.trim().parse::<usize>()).collect::<std::result::Result<_, _>>().map_err(|_| Error::Parse(format!("bad basis key {bkey:?}")))?
        };
        if idx.len() != k || idx.iter().any(|&i| i >= n) || idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse(format!("basis key {bkey:?} is not an increasing {k}-subset of 0..{n}")));
        }
        let mut p = Poly::zero(n);
        let cobj = coeffs.as_object().ok_or_else(|| Error::Parse("coefficient table must be an object".into()))?;
        for (mkey, c) in cobj {
            let c = c.as_str().ok_or_else(|| Error::Parse("coefficients must be rational strings".into()))?;
            p.add_term(parse_mono(mkey, n)?, parse_q(c)?);
        }
        out.add_term(mask_of(&idx), p);
    }
    Ok(out)
}

pub fn form_to_json(mesh: &Mesh, u: &PiecewiseForm) -> Value {
    let mut cells = Map::new();
    for (ci, t) in mesh.cells().iter().enumerate() {
        cells.insert(t.key(), form_to_value(u.cell(ci)));
    }
    json!({
        "k": u.degree(),
        "degree": u.max_poly_degree().unwrap_or(0),
        "dim": u.dim(),
        "cells": Value::Object(cells),
    })
}

pub fn form_from_json(mesh: &Mesh, v: &Value) -> Result<PiecewiseForm> {
    let k = v.get("k").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing k".into()))? as usize;
    let n = mesh.dim();
    if let Some(d) = v.get("dim").and_then(Value::as_u64) {
        if d as usize != n {
            return Err(Error::MeshMismatch(format!("form dimension {d} on a {n}-dimensional mesh")));
        }
    }
    if k > n {
        return Err(Error::DegreeOverflow(format!("{k}-form in dimension {n}")));
    }
    let cells = v.get("cells").and_then(Value::as_object).ok_or_else(|| Error::Parse("missing cells".into()))?;
    let mut u = PiecewiseForm::zero(mesh, k);
    for (key, cv) in cells {
        let t = Simplex::parse_key(key)?;
        let ci = mesh.cell_index(&t).ok_or_else(|| Error::MeshMismatch(format!("cell {key} is not in the mesh")))?;
        u.set_cell(ci, form_from_value(cv, n, k)?);
    }
    Ok(u)
}

pub fn read_form(mesh: &Mesh, path: impl AsRef<Path>) -> Result<PiecewiseForm> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    form_from_json(mesh, &v)
}

pub fn write_form(path: impl AsRef<Path>, mesh: &Mesh, u: &PiecewiseForm) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&form_to_json(mesh, u))?)?;
    Ok(())
}

pub fn chain_to_json(c: &Chain) -> Value {
    let coeffs: Map<String, Value> = c.iter().map(|(s, x)| (s.key(), Value::String(fmt_q(x)))).collect();
    json!({ "degree": c.degree(), "coeffs": Value::Object(coeffs) })
}

pub fn chain_from_json(v: &Value) -> Result<Chain> {
    let degree = v.get("degree").and_then(Value::as_i64).ok_or_else(|| Error::Parse("chain without degree".into()))? as isize;
    let mut c = Chain::new(degree);
    if let Some(obj) = v.get("coeffs").and_then(Value::as_object) {
        for (k, x) in obj {
            let s = Simplex::parse_key(k)?;
            if s.dim() != degree {
                return Err(Error::Parse(format!("simplex {k} in a {degree}-chain")));
            }
            let x = x.as_str().ok_or_else(|| Error::Parse("chain coefficient must be a string".into()))?;
            c.set(s, parse_q(x)?);
        }
    }
    Ok(c)
}

fn nested_to_json(c: &ValuedChain<Chain>) -> Value {
    let rows: Map<String, Value> = c.iter().map(|(s, x)| (s.key(), chain_to_json(x))).collect();
    json!({ "degree": c.degree(), "rows": Value::Object(rows) })
}

fn nested_from_json(v: &Value) -> Result<ValuedChain<Chain>> {
    let degree = v.get("degree").and_then(Value::as_i64).ok_or_else(|| Error::Parse("missing degree".into()))? as isize;
    let mut c = ValuedChain::new(degree);
    if let Some(obj) = v.get("rows").and_then(Value::as_object) {
        for (k, x) in obj {
            c.set(Simplex::parse_key(k)?, chain_from_json(x)?);
        }
    }
    Ok(c)
}

fn family_to_json(fam: &PairFamily<Chain>) -> Value {
    Value::Array(
        fam.iter().map(|((e, f), c)| json!({ "e": e.key(), "f": f.key(), "chain": chain_to_json(c) })).collect(),
    )
}

fn family_from_json(v: &Value) -> Result<PairFamily<Chain>> {
    let mut fam = PairFamily::new();
    for item in v.as_array().ok_or_else(|| Error::Parse("pair family must be an array".into()))? {
        let key = |name: &str| -> Result<Simplex> {
            Simplex::parse_key(item.get(name).and_then(Value::as_str).ok_or_else(|| Error::Parse(format!("missing {name}")))?)
        };
        let chain = chain_from_json(item.get("chain").ok_or_else(|| Error::Parse("missing chain".into()))?)?;
        fam.insert(key("e")?, key("f")?, chain);
    }
    Ok(fam)
}

fn branch_name(b: &SolveBranch) -> &'static str {
    match b {
        SolveBranch::Gauged => "gauged",
        SolveBranch::UniqueGaugeHolds => "unique_gauge_holds",
        SolveBranch::GaugeDropped => "gauge_dropped",
    }
}

fn parse_branch(s: &str) -> Result<SolveBranch> {
    match s {
        "gauged" => Ok(SolveBranch::Gauged),
        "unique_gauge_holds" => Ok(SolveBranch::UniqueGaugeHolds),
        "gauge_dropped" => Ok(SolveBranch::GaugeDropped),
        _ => Err(Error::Parse(format!("unknown branch {s:?}"))),
    }
}

fn weights_body(ws: &WeightSystem) -> Value {
    let mut links = Map::new();
    for (f, lw) in ws.links() {
        links.insert(
            f.key(),
            json!({
                "mu": lw.mu.iter().map(nested_to_json).collect::<Vec<_>>(),
                "beta": lw.beta.iter().map(nested_to_json).collect::<Vec<_>>(),
                "branches": lw.branches.iter().map(branch_name).collect::<Vec<_>>(),
            }),
        );
    }
    let z_avg: Map<String, Value> = ws.z_averages().iter().map(|(f, c)| (f.key(), chain_to_json(c))).collect();
    json!({
        "dim": ws.dim(),
        "links": Value::Object(links),
        "w": family_to_json(ws.w()),
        "z": family_to_json(ws.z()),
        "z_avg": Value::Object(z_avg),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Content hash over the canonical compact serialization.
pub fn weights_hash(ws: &WeightSystem) -> String {
    sha256_hex(weights_body(ws).to_string().as_bytes())
}

pub fn mesh_hash(mesh: &Mesh) -> String {
    sha256_hex(serde_json::to_string(&mesh_to_doc(mesh)).unwrap_or_default().as_bytes())
}

pub fn weights_to_json(ws: &WeightSystem) -> Value {
    let body = weights_body(ws);
    let hash = sha256_hex(body.to_string().as_bytes());
    json!({ "hash": hash, "weights": body })
}

pub fn weights_from_json(v: &Value) -> Result<WeightSystem> {
    let body = v.get("weights").ok_or_else(|| Error::Parse("missing weights".into()))?;
    if let Some(h) = v.get("hash").and_then(Value::as_str) {
        if h != sha256_hex(body.to_string().as_bytes()) {
            return Err(Error::Parse("weight system hash does not match its content".into()));
        }
    }
    let n = body.get("dim").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing dim".into()))? as usize;
    let mut links = BTreeMap::new();
    for (k, lv) in body.get("links").and_then(Value::as_object).ok_or_else(|| Error::Parse("missing links".into()))? {
        let f = Simplex::parse_key(k)?;
        let arr = |name: &str| -> Result<Vec<ValuedChain<Chain>>> {
            lv.get(name).and_then(Value::as_array).ok_or_else(|| Error::Parse(format!("missing {name}")))?.iter().map(nested_from_json).collect()
        };
        let branches = lv
            .get("branches")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing branches".into()))?
            .iter()
            .map(|b| parse_branch(b.as_str().unwrap_or("")))
            .collect::<Result<Vec<_>>>()?;
        links.insert(f.clone(), LinkWeights { anchor: f, mu: arr("mu")?, beta: arr("beta")?, branches });
    }
    let w = family_from_json(body.get("w").ok_or_else(|| Error::Parse("missing w".into()))?)?;
    let z = family_from_json(body.get("z").ok_or_else(|| Error::Parse("missing z".into()))?)?;
    let mut z_avg = BTreeMap::new();
    for (k, c) in body.get("z_avg").and_then(Value::as_object).ok_or_else(|| Error::Parse("missing z_avg".into()))? {
        z_avg.insert(Simplex::parse_key(k)?, chain_from_json(c)?);
    }
    Ok(WeightSystem::from_parts(n, links, w, z, z_avg))
}

pub fn write_weights(path: impl AsRef<Path>, ws: &WeightSystem) -> Result<String> {
    let v = weights_to_json(ws);
    std::fs::write(path, serde_json::to_string_pretty(&v)?)?;
    Ok(v["hash"].as_str().unwrap_or_default().to_string())
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<WeightSystem> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    weights_from_json(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_form;
    use crate::rational::qf;
    use crate::testutil::{d2, d2_weights, d3};

    #[test]
    fn mesh_documents_round_trip() {
        for m in [d2(), d3()] {
            let doc = mesh_to_doc(m);
            let text = serde_json::to_string(&doc).unwrap();
            let back = parse_mesh(&text).unwrap();
            assert_eq!(mesh_to_doc(&back), doc);
            assert_eq!(mesh_hash(&back), mesh_hash(m));
        }
    }

    #[test]
    fn rationals_are_canonical() {
        let m = parse_mesh(r#"{"dim":2,"vertices":[["0","0"],["2/4","0"],["0","-3/-6"]],"cells":[[0,1,2]]}"#).unwrap();
        assert_eq!(mesh_to_doc(&m).vertices, vec![vec!["0", "0"], vec!["1/2", "0"], vec!["0", "1/2"]]);
        assert_eq!(m.coords(1)[0], qf(1, 2));
    }

    #[test]
    fn malformed_documents_are_parse_errors() {
        assert!(matches!(parse_mesh("{"), Err(Error::Parse(_))));
        assert!(matches!(parse_mesh(r#"{"dim":2,"vertices":[["0","x"]],"cells":[]}"#), Err(Error::Parse(_))));
        let m = d2();
        assert!(form_from_json(m, &json!({"k": 1, "cells": {"0,1,2": {"0,1": {}}}})).is_err());
        assert!(matches!(form_from_json(m, &json!({"k": 0, "cells": {"0,1,3": {}}})), Err(Error::MeshMismatch(_))));
        assert!(matches!(form_from_json(m, &json!({"k": 3, "cells": {}})), Err(Error::DegreeOverflow(_))));
    }

    #[test]
    fn forms_round_trip() {
        for m in [d2(), d3()] {
            for k in 0..=m.dim() {
                let u = random_form(m, k, 2, false, 31 + k as u64);
                let v = form_to_json(m, &u);
                let text = serde_json::to_string(&v).unwrap();
                let back = form_from_json(m, &serde_json::from_str(&text).unwrap()).unwrap();
                assert_eq!(back, u);
            }
        }
    }

    #[test]
    fn weights_round_trip_and_hash_is_checked() {
        let ws = d2_weights();
        let v = weights_to_json(ws);
        let back = weights_from_json(&v).unwrap();
        assert_eq!(&back, ws);
        assert!(crate::weights::certify_weight_system(d2(), &back).all_passed());
        let mut tampered = v.clone();
        tampered["weights"]["dim"] = json!(3);
        assert!(matches!(weights_from_json(&tampered), Err(Error::Parse(_))));
    }

    #[test]
    fn files_round_trip() {
        let dir = std::env::temp_dir().join(format!("bubblex-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let m = d2();
        write_mesh(dir.join("m.json"), m).unwrap();
        let back = read_mesh(dir.join("m.json")).unwrap();
        let u = random_form(&back, 1, 1, true, 2);
        write_form(dir.join("u.form"), &back, &u).unwrap();
        assert_eq!(read_form(&back, dir.join("u.form")).unwrap(), u);
        let h = write_weights(dir.join("w.json"), d2_weights()).unwrap();
        assert_eq!(weights_hash(&read_weights(dir.join("w.json")).unwrap()), h);
        assert!(matches!(read_mesh(dir.join("missing.json")), Err(Error::Io(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
