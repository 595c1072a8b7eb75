//! Fixture loading for unit tests.

use std::sync::OnceLock;

use crate::mesh::Mesh;
use crate::weights::WeightSystem;

pub fn fixture(name: &str) -> Mesh {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    crate::io::read_mesh(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn d2() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| fixture("diamond2d.json"))
}

pub fn d3() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| fixture("twotet3d.json"))
}

pub fn d2_weights() -> &'static WeightSystem {
    static W: OnceLock<WeightSystem> = OnceLock::new();
    W.get_or_init(|| WeightSystem::build(d2()).expect("D2 weights"))
}

pub fn d3_weights() -> &'static WeightSystem {
    static W: OnceLock<WeightSystem> = OnceLock::new();
    W.get_or_init(|| WeightSystem::build(d3()).expect("D3 weights"))
}

pub fn s(v: &[u32]) -> crate::simplex::Simplex {
    crate::simplex::Simplex::new(v).unwrap()
}
