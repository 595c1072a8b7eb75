//! The invariant suite behind `bubblex verify`: one named check per property.
//!
//! Every name in [`CHECKS`] (plus the weight certificates) appears exactly
//! once in the returned list. Checks that cannot run because an earlier
//! stage failed are recorded as failures with a "not run" witness.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::error::Error;
use crate::exec::Exec;
use crate::form::Form;
use crate::mesh::Mesh;
use crate::operators::{certify_relations, relation};
use crate::polyform::{hat, whitney, PiecewiseForm, Space};
use crate::random::Sampler;
use crate::rational::{one, Q};
use crate::report::Checklist;
use crate::simplex::Simplex;
use crate::transform::{Decomposition, Transform};
use crate::weights::{certify_weight_system, WeightSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Everything except the pointwise oracles.
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Level, String> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(format!("unknown level {s:?} (expected quick or full)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    /// Random points per (m, k) for the oracle checks.
    pub points: usize,
}

impl Default for VerifyOptions {
    fn default() -> VerifyOptions {
        VerifyOptions { level: Level::Full, seed: 0, points: 10 }
    }
}

pub const INPUT: &str = "input.conforming";
pub const IDENTITY: &str = "decomposition.identity";
pub const TRACE: &str = "decomposition.trace";
pub const COMMUTATION: &str = "commutation";
pub const LOCALITY: &str = "locality";
pub const DEPENDENCE: &str = "dependence";
pub const MEMBERSHIP: &str = "membership";
pub const ORACLE: &str = "oracle.telescoping";
pub const K_RATIONAL: &str = "oracle.k_rational";

/// Transform checks in report order; the oracle pair is skipped at `Level::Quick`.
pub const CHECKS: [&str; 9] = [INPUT, IDENTITY, TRACE, COMMUTATION, LOCALITY, DEPENDENCE, MEMBERSHIP, ORACLE, K_RATIONAL];

/// Transform check names at a level; the full level adds the operator relations.
pub fn check_names(level: Level) -> Vec<&'static str> {
    let mut names: Vec<&str> = CHECKS.iter().copied().filter(|c| level == Level::Full || !c.starts_with("oracle.")).collect();
    if level == Level::Full {
        names.extend(relation::ALL);
    }
    names
}

/// Runs the weight certificates and every transform invariant on `u`.
pub fn verify(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, opts: &VerifyOptions, exec: &Exec) -> Checklist {
    let mut ck = certify_weight_system(mesh, ws).checks;
    ck.merge(verify_transform(mesh, ws, u, opts, exec));
    ck
}

/// The transform checks alone.
pub fn verify_transform(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, opts: &VerifyOptions, exec: &Exec) -> Checklist {
    let mut ck = Checklist::new();
    let names = check_names(opts.level);
    let not_run = |ck: &mut Checklist, from: usize, why: &str| {
        for name in &names[from..] {
            ck.fail(name, format!("not run: {why}"));
        }
    };
    let conf = u.conformity_check(mesh);
    ck.record(INPUT, conf.conforming, || format!("traces disagree on face {}", conf.witness.clone().unwrap()));
    if !conf.conforming {
        not_run(&mut ck, 1, "input is not conforming");
        return ck;
    }
    let t = Transform::with_exec(mesh, ws, exec.clone());
    let d = match t.decompose(u) {
        Ok(d) => d,
        Err(e) => {
            match &e {
                Error::ConstructionFailed(msg) if msg.contains("trace") => {
                    ck.fail(IDENTITY, "not run: trace gate failed".into());
                    ck.fail(TRACE, msg.clone());
                }
                _ => ck.fail(IDENTITY, e.to_string()),
            }
            let from = names.iter().position(|n| *n == COMMUTATION).unwrap();
            for name in &names[1..from] {
                ck.touch(name);
            }
            not_run(&mut ck, from, "decomposition failed");
            return ck;
        }
    };
    ck.record(IDENTITY, d.residual_is_zero(), || "u − W − Σ B_f is nonzero".into());
    ck.touch(TRACE);
    commutation(&t, &d, &mut ck);
    let sv = d.support_violation(mesh);
    ck.record(LOCALITY, sv.is_none(), || format!("B_{} is nonzero outside its star", sv.clone().unwrap()));
    dependence(&t, &d, opts.seed, &mut ck);
    membership(&d, &mut ck);
    if opts.level == Level::Full {
        oracles(&t, &d, opts, &mut ck);
        ck.merge(certify_relations(mesh, ws, u, input_space(u)));
    }
    ck
}

/// The smallest P_r containing u, refined to P_r⁻ when u lies there.
pub fn input_space(u: &PiecewiseForm) -> Option<Space> {
    let r = u.max_poly_degree()?.max(1);
    Some(if u.membership(Space::Trimmed(r)) { Space::Trimmed(r) } else { Space::Full(r) })
}

pub fn commutation(t: &Transform, d: &Decomposition, ck: &mut Checklist) {
    ck.touch(COMMUTATION);
    if d.k >= t.mesh().dim() {
        return;
    }
    let dd = match t.decompose(&d.input.d()) {
        Ok(dd) => dd,
        Err(e) => return ck.fail(COMMUTATION, format!("decomposing du failed: {e}")),
    };
    ck.record(COMMUTATION, dd.w_part == d.w_part.d(), || "dW u ≠ W du".into());
    for (f, b) in &d.bubbles {
        ck.record(COMMUTATION, dd.bubbles[f] == b.d(), || format!("d B_{f} u ≠ B_{f} du"));
    }
}

/// Cells a bubble may depend on: Ω_f, or Ω_f^E for top cells.
pub fn dependence_set(mesh: &Mesh, f: &Simplex) -> BTreeSet<usize> {
    if f.dim() == mesh.dim() as isize {
        mesh.extended_star(f).into_iter().collect()
    } else {
        mesh.star(f).iter().copied().collect()
    }
}

/// Perturbs u by c·λ_v·φ_g, supported on star(g), once per k-simplex g, and
/// compares every bubble whose dependence set misses star(g).
pub fn dependence(t: &Transform, d: &Decomposition, seed: u64, ck: &mut Checklist) {
    ck.touch(DEPENDENCE);
    let mesh = t.mesh();
    let mut smp = Sampler::new(seed.wrapping_add(1));
    let deps: Vec<(&Simplex, BTreeSet<usize>)> = d.bubbles.keys().map(|f| (f, dependence_set(mesh, f))).collect();
    for g in mesh.simplices(d.k as isize) {
        let star: Vec<usize> = mesh.star(g).to_vec();
        let targets: Vec<&Simplex> =
            deps.iter().filter(|(_, dep)| star.iter().all(|c| !dep.contains(c))).map(|(f, _)| *f).collect();
        if targets.is_empty() {
            continue;
        }
        let v = g.verts()[smp.index(g.len())];
        let mut c = smp.coeff();
        if c.is_zero() {
            c = one();
        }
        let bump = whitney(mesh, g).and_then(|w| w.wedge(&hat(mesh, v)?)).map(|p| p.scale(&c));
        let perturbed = match bump.and_then(|b| t.decompose(&d.input.add(&b))) {
            Ok(p) => p,
            Err(e) => return ck.fail(DEPENDENCE, format!("perturbation at {g} failed: {e}")),
        };
        for f in targets {
            ck.record(DEPENDENCE, perturbed.bubbles[f] == d.bubbles[f], || format!("B_{f} changed when u was perturbed on star({g})"));
        }
    }
}

/// Every bubble and W lie in the smallest P_r (and P_r⁻) space containing u.
pub fn membership(d: &Decomposition, ck: &mut Checklist) {
    ck.touch(MEMBERSHIP);
    let Some(r) = d.input.max_poly_degree() else { return };
    let r = r.max(1);
    let mut spaces = vec![Space::Full(r)];
    if d.input.membership(Space::Trimmed(r)) {
        spaces.push(Space::Trimmed(r));
    }
    for space in spaces {
        ck.record(MEMBERSHIP, d.w_part.membership(space), || format!("W u ∉ {space:?}"));
        for (f, b) in &d.bubbles {
            ck.record(MEMBERSHIP, b.membership(space), || format!("B_{f} u ∉ {space:?}"));
        }
    }
}

/// Telescoping of the rational C_m against Σ K_m, and the rational K against
/// its polynomial form, at seeded interior points.
pub fn oracles(t: &Transform, d: &Decomposition, opts: &VerifyOptions, ck: &mut Checklist) {
    ck.touch(ORACLE);
    ck.touch(K_RATIONAL);
    let mesh = t.mesh();
    let n = mesh.dim();
    let tu = match t.table(&d.input) {
        Ok(tu) => tu,
        Err(e) => {
            ck.fail(ORACLE, e.to_string());
            return ck.fail(K_RATIONAL, e.to_string());
        }
    };
    let mut smp = Sampler::new(opts.seed);
    let level_sum = |m: usize, cell: usize, x: &[Q]| {
        let mut s = Form::zero(n, d.k);
        for ((mm, _), kf) in &d.k_table {
            if *mm == m {
                s.add_assign(&kf.eval(cell, x));
            }
        }
        s
    };
    for m in 0..n {
        for _ in 0..opts.points {
            let cell = smp.index(mesh.num_cells());
            let x = smp.interior_point(mesh, cell);
            let c_m = t.c_m_at(&tu, m, cell, &x);
            let prev = if m == 0 { Ok(d.w_part.eval(cell, &x)) } else { t.c_m_at(&tu, m - 1, cell, &x) };
            match (c_m, prev) {
                (Ok(c), Ok(p)) => {
                    ck.record(ORACLE, c.sub(&p) == level_sum(m, cell, &x), || format!("m={m} cell={cell} x={}", show(&x)));
                    if m == n - 1 {
                        let mut top = Form::zero(n, d.k);
                        for f in mesh.simplices(n as isize) {
                            top.add_assign(&d.bubbles[f].eval(cell, &x));
                        }
                        ck.record(ORACLE, d.input.eval(cell, &x).sub(&c) == top, || format!("u − C_{m} ≠ Σ top bubbles at cell={cell}"));
                    }
                }
                (Err(e), _) | (_, Err(e)) => ck.fail(ORACLE, format!("m={m} cell={cell}: {e}")),
            }
        }
    }
    for m in 1..n {
        let anchors = mesh.simplices(m as isize - 1);
        for _ in 0..opts.points {
            let f = &anchors[smp.index(anchors.len())];
            let cell = smp.index(mesh.num_cells());
            let x = smp.interior_point(mesh, cell);
            let poly = d.k_table[&(m, f.clone())].eval(cell, &x);
            match t.k_rational_at(&tu, m, f, cell, &x) {
                Ok(r) => ck.record(K_RATIONAL, r == poly, || format!("K_{m},{f} at cell={cell} x={}", show(&x))),
                Err(e) => ck.fail(K_RATIONAL, format!("K_{m},{f} at cell={cell}: {e}")),
            }
        }
    }
}

fn show(x: &[Q]) -> String {
    let parts: Vec<String> = x.iter().map(|q| q.to_string()).collect();
    format!("({})", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_form;
    use crate::rational::one;
    use crate::testutil::{d2, d2_weights, d3, d3_weights};

    fn names(ck: &Checklist) -> Vec<&str> {
        ck.checks.iter().map(|c| c.name.as_str()).collect()
    }

    #[test]
    fn random_inputs_pass_everything() {
        for (mesh, ws) in [(d2(), d2_weights()), (d3(), d3_weights())] {
            for k in 0..=mesh.dim() {
                let u = random_form(mesh, k, 2, k % 2 == 1, 50 + k as u64);
                let ck = verify_transform(mesh, ws, &u, &VerifyOptions::default(), &Exec::sequential());
                assert!(ck.all_passed(), "k={k}: {:?}", ck.failures().collect::<Vec<_>>());
                assert_eq!(names(&ck), check_names(Level::Full));
            }
        }
    }

    #[test]
    fn quick_level_skips_oracles() {
        let u = random_form(d2(), 1, 2, false, 3);
        let opts = VerifyOptions { level: Level::Quick, ..Default::default() };
        let ck = verify_transform(d2(), d2_weights(), &u, &opts, &Exec::sequential());
        assert!(ck.all_passed());
        assert!(ck.get(ORACLE).is_none() && ck.get(K_RATIONAL).is_none());
        assert_eq!(names(&ck), check_names(Level::Quick));
    }

    #[test]
    fn nonconforming_input_reports_the_face() {
        let mesh = d2();
        let mut u = random_form(mesh, 0, 1, false, 4);
        u.cell_mut(0).add_assign(&Form::constant(2, one()));
        let ck = verify_transform(mesh, d2_weights(), &u, &VerifyOptions::default(), &Exec::sequential());
        let c = ck.get(INPUT).unwrap();
        assert!(!c.passed);
        assert!(c.witness.as_ref().unwrap().contains("face ["));
        assert_eq!(names(&ck), check_names(Level::Full));
        assert!(ck.checks.iter().all(|c| !c.passed));
    }

    // On D2 and D3 every Ω_T^E is the whole mesh, so top bubbles are only
    // exercised on the refined diamond.
    #[test]
    fn top_bubbles_ignore_cells_outside_the_extended_star() {
        let mesh = crate::testutil::fixture("diamond2d_r1.json");
        let ws = WeightSystem::build(&mesh).unwrap();
        let t = Transform::new(&mesh, &ws);
        let n = mesh.dim() as isize;
        for k in [1, 2] {
            let reachable = mesh.simplices(n).iter().any(|f| {
                let dep = dependence_set(&mesh, f);
                mesh.simplices(k).iter().any(|g| mesh.star(g).iter().all(|c| !dep.contains(c)))
            });
            assert!(reachable, "k={k}: no perturbation misses a top extended star");
            let d = t.decompose(&random_form(&mesh, k as usize, 1, false, 60)).unwrap();
            let mut ck = Checklist::new();
            dependence(&t, &d, 7, &mut ck);
            assert!(ck.all_passed(), "k={k}: {:?}", ck.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn full_suite_includes_weight_certificates() {
        let u = random_form(d2(), 0, 1, false, 5);
        let opts = VerifyOptions { level: Level::Quick, ..Default::default() };
        let ck = verify(d2(), d2_weights(), &u, &opts, &Exec::sequential());
        assert!(ck.all_passed());
        assert!(ck.checks.len() > check_names(Level::Quick).len());
    }
}
