//! Weight system: link functions μ, β, ψ and the weight families w, z.
//!
//! Everything is kept as Whitney coefficient chains. A mesh k-chain `c`
//! stands for Σ c_g φ_g, and a link chain of chains `a` stands for
//! μ_e = Σ a_{e,e'} φ_{e'}.
//!
//! Construction order: link data for every f first, then levels
//! Δ_{n-1}, …, Δ_0 with simplices in lexicographic order, then z_{e,∅}.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::chains::{
    self, co_plus_at, pair_delta_at, solve_potential, solve_trimmed_local, Chain, PairFamily, SolveBranch, ValuedChain,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::form::Form;
use crate::mesh::Mesh;
use crate::polyform::{dhat_on_cell, rho_on_cell, whitney_on_cell, whitney_sum_on_cell};
use crate::rational::{sign_pow, Q};
use crate::report::Checklist;
use crate::simplex::{alt, Simplex};

/// μ and β data for one anchor f.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkWeights {
    pub anchor: Simplex,
    /// `mu[j]`: e ∈ Δ_j(f*) ↦ a_{e,·} ∈ C_{j-1}(f*).
    pub mu: Vec<ValuedChain<Chain>>,
    /// `beta[j]`: e ∈ Δ_j(f*) ↦ b_{e,·} ∈ C_j(f*).
    pub beta: Vec<ValuedChain<Chain>>,
    /// Gauge branch taken when solving for `mu[j + 1]`.
    pub branches: Vec<SolveBranch>,
}

impl LinkWeights {
    pub fn a(&self, e: &Simplex, e2: &Simplex) -> Q {
        let j = e.dim();
        self.mu.get(j as usize).and_then(|c| c.get(e)).map(|row| row.coeff(e2)).unwrap_or_else(Q::zero)
    }

    pub fn b(&self, e: &Simplex, e2: &Simplex) -> Q {
        let j = e.dim();
        self.beta.get(j as usize).and_then(|c| c.get(e)).map(|row| row.coeff(e2)).unwrap_or_else(Q::zero)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSystem {
    n: usize,
    links: BTreeMap<Simplex, LinkWeights>,
    w: PairFamily<Chain>,
    z: PairFamily<Chain>,
    z_avg: BTreeMap<Simplex, Chain>,
}

fn scaled_sum(n_deg: isize, parts: impl Iterator<Item = (Q, Chain)>) -> Chain {
    let mut out = Chain::new(n_deg);
    for (c, ch) in parts {
        out.add_scaled(&c, &ch);
    }
    out
}

/// μ_e(f), β_e(f) for every e ∈ Δ_j(f*), 0 ≤ j ≤ dim f*.
pub fn build_mu_beta(mesh: &Mesh, f: &Simplex) -> Result<LinkWeights> {
    let link = mesh.link(f)?;
    if f.is_empty() {
        return Err(Error::IndexMismatch("μ is not defined for the empty anchor".into()));
    }
    let top = link.dim;
    let size = link.size();
    if size == 0 {
        return Err(Error::NonExactLink(format!("link of {f} is empty")));
    }
    let mut mu0 = ValuedChain::new(0);
    for e in link.simplices(0) {
        mu0.set(e.clone(), Chain::single(Simplex::empty(), -Q::one() / Q::from_integer(size.into())));
    }
    let mut mu = vec![mu0];
    let mut beta = Vec::new();
    let mut branches = Vec::new();
    for j in 0..=top {
        let mut bj = ValuedChain::new(j);
        for e in link.simplices(j) {
            let row = mu[j as usize].get(e).cloned().unwrap_or_else(|| Chain::new(j - 1));
            let mut b = chains::coboundary(&row, link);
            b.add_at(e, &sign_pow(j as i64), &Q::one());
            bj.set(e.clone(), b);
        }
        if j < top {
            let (next, branch) = solve_potential(link, &bj, &Chain::new(j)).map_err(|err| match err {
                Error::NotClosed(d) => Error::NotClosed(format!("β for anchor {f}, degree {j}: {d}")),
                other => other,
            })?;
            mu.push(next);
            branches.push(branch);
        }
        beta.push(bj);
    }
    Ok(LinkWeights { anchor: f.clone(), mu, beta, branches })
}

impl WeightSystem {
    pub fn build(mesh: &Mesh) -> Result<WeightSystem> {
        WeightSystem::build_with(mesh, &Exec::sequential())
    }

    pub fn build_with(mesh: &Mesh, exec: &Exec) -> Result<WeightSystem> {
        let n = mesh.dim() as isize;
        let anchors: Vec<Simplex> = (0..n).flat_map(|d| mesh.simplices(d).iter().cloned()).collect();
        let lw = exec.try_map(&anchors, |f| build_mu_beta(mesh, f))?;
        let links: BTreeMap<Simplex, LinkWeights> = anchors.into_iter().zip(lw).collect();

        let mut w: PairFamily<Chain> = PairFamily::new();
        let mut z: PairFamily<Chain> = PairFamily::new();
        for (ci, t) in mesh.cells().iter().enumerate() {
            let o = mesh.geom(ci).orientation;
            w.insert(Simplex::empty(), t.clone(), Chain::single(t.clone(), Q::from_integer((-o).into())));
        }
        for p in (0..n).rev() {
            let fs = mesh.simplices(p);
            let level = exec.try_map(fs, |f| level_step(mesh, &links[f], &w))?;
            for (zs, ws) in level {
                z.extend(zs);
                w.extend(ws);
            }
        }
        let empty = Simplex::empty();
        for j in 0..=n {
            for e in mesh.simplices(j) {
                let v = co_plus_at(&w, e, &empty, &Chain::new(n - j))?;
                z.insert(e.clone(), empty.clone(), v);
            }
        }
        let z_avg = average_weights(mesh)?;
        Ok(WeightSystem { n: n as usize, links, w, z, z_avg })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn links(&self) -> &BTreeMap<Simplex, LinkWeights> {
        &self.links
    }

    pub fn link_weights(&self, f: &Simplex) -> Result<&LinkWeights> {
        self.links.get(f).ok_or_else(|| Error::IndexMismatch(format!("no μ data for {f}")))
    }

    pub fn w(&self) -> &PairFamily<Chain> {
        &self.w
    }

    pub fn z(&self) -> &PairFamily<Chain> {
        &self.z
    }

    pub fn w_pair(&self, e: &Simplex, f: &Simplex) -> Result<&Chain> {
        self.w.require(e, f)
    }

    pub fn z_pair(&self, e: &Simplex, f: &Simplex) -> Result<&Chain> {
        self.z.require(e, f)
    }

    /// z_f; ∅ included.
    pub fn z_avg(&self, f: &Simplex) -> Result<&Chain> {
        self.z_avg.get(f).ok_or_else(|| Error::UnknownSimplex(f.to_string()))
    }

    pub fn z_averages(&self) -> &BTreeMap<Simplex, Chain> {
        &self.z_avg
    }

    /// Replaces one stored z; meant for fault-injection tests.
    pub fn set_z(&mut self, e: Simplex, f: Simplex, c: Chain) {
        self.z.insert(e, f, c);
    }

    pub fn set_z_avg(&mut self, f: Simplex, c: Chain) {
        self.z_avg.insert(f, c);
    }

    pub fn set_w(&mut self, e: Simplex, f: Simplex, c: Chain) {
        self.w.insert(e, f, c);
    }

    /// Assembles from stored parts (used when reading a serialized system).
    pub fn from_parts(
        n: usize,
        links: BTreeMap<Simplex, LinkWeights>,
        w: PairFamily<Chain>,
        z: PairFamily<Chain>,
        z_avg: BTreeMap<Simplex, Chain>,
    ) -> WeightSystem {
        WeightSystem { n, links, w, z, z_avg }
    }

    /// ψ_{e,g}(f) as a Whitney chain of degree j = dim e.
    pub fn psi(&self, e: &Simplex, g: &Simplex, f: &Simplex) -> Result<Chain> {
        if !g.is_face_of(f) {
            return Err(Error::IndexMismatch(format!("{g} is not a face of {f}")));
        }
        let row = self.mu(e, f)?;
        let j = e.dim();
        let mut out = Chain::new(j);
        let outer = sign_pow(j as i64 - 1);
        for &x in f.minus(g).verts() {
            for (e2, a) in row.iter() {
                let s = e2.with_vertex(x);
                let sign = Q::from_integer(alt(s.position(x).unwrap()).into());
                out.add_at(&s, &(&outer * &sign), a);
            }
        }
        Ok(out)
    }

    fn row(&self, table: fn(&LinkWeights) -> &Vec<ValuedChain<Chain>>, shift: isize, e: &Simplex, f: &Simplex) -> Result<Chain> {
        let lw = self.link_weights(f)?;
        let j = e.dim();
        let level = table(lw).get(j.max(0) as usize).filter(|_| j >= 0 && e.is_disjoint(f));
        let level = level.ok_or_else(|| Error::IndexMismatch(format!("{e} is not in the link of {f}")))?;
        Ok(level.get(e).cloned().unwrap_or_else(|| Chain::new(j + shift)))
    }

    /// β_e(f) on Ω_f as a Whitney chain over Δ_j(f*).
    pub fn beta(&self, e: &Simplex, f: &Simplex) -> Result<Chain> {
        self.row(|lw| &lw.beta, 0, e, f)
    }

    /// μ_e(f) as a Whitney chain over Δ_{j-1}(f*).
    pub fn mu(&self, e: &Simplex, f: &Simplex) -> Result<Chain> {
        self.row(|lw| &lw.mu, -1, e, f)
    }

    /// Largest |coefficient| over all w and z.
    pub fn max_expansion(&self) -> (Q, Q) {
        let m = |fam: &PairFamily<Chain>| fam.iter().map(|(_, c)| c.max_abs()).max().unwrap_or_else(Q::zero);
        (m(&self.w), m(&self.z))
    }

    pub fn certify(&self, mesh: &Mesh) -> WeightReport {
        certify_weight_system(mesh, self)
    }
}

type LevelOut = (PairFamily<Chain>, PairFamily<Chain>);

fn level_step(mesh: &Mesh, lw: &LinkWeights, w: &PairFamily<Chain>) -> Result<LevelOut> {
    let n = mesh.dim() as isize;
    let f = &lw.anchor;
    let link = mesh.link(f)?;
    let top = link.dim;
    let mut zs = PairFamily::new();
    for j in 0..=top {
        for e in link.simplices(j) {
            zs.insert(e.clone(), f.clone(), co_plus_at(w, e, f, &Chain::new(n - j))?);
        }
    }
    let mut ws = PairFamily::new();
    for j in -1..top {
        for e in link.simplices(j) {
            let parts = link.simplices(j + 1).iter().map(|e2| {
                let a = lw.a(e2, e) * sign_pow(j as i64);
                (a, zs.get(e2, f).cloned().unwrap())
            });
            ws.insert(e.clone(), f.clone(), scaled_sum(n - j - 1, parts));
        }
    }
    for e in link.simplices(top) {
        let parts = link.simplices(top).iter().map(|e2| (lw.b(e2, e), zs.get(e2, f).cloned().unwrap()));
        let target = scaled_sum(n - top, parts);
        let c = solve_trimmed_local(mesh, f, f.dim(), &target).map_err(|err| match err {
            Error::Incompatible(d) => Error::Incompatible(format!("pair ({e}, {f}): {d}")),
            Error::NoSolution(d) => Error::NoSolution(format!("pair ({e}, {f}): {d}")),
            other => other,
        })?;
        ws.insert(e.clone(), f.clone(), c);
    }
    Ok((zs, ws))
}

/// z_f for every f, by the |f*|-average recursion from the cell weights.
pub fn average_weights(mesh: &Mesh) -> Result<BTreeMap<Simplex, Chain>> {
    let n = mesh.dim() as isize;
    let mut out = BTreeMap::new();
    for (ci, t) in mesh.cells().iter().enumerate() {
        out.insert(t.clone(), Chain::single(t.clone(), Q::from_integer(mesh.geom(ci).orientation.into())));
    }
    for p in (-1..n).rev() {
        for f in mesh.simplices(p) {
            let link = mesh.link(f)?;
            let inv = Q::one() / Q::from_integer(link.size().into());
            let mut acc = Chain::new(n);
            for x in link.simplices(0) {
                acc.add_scaled(&inv, &out[&f.join(x)]);
            }
            out.insert(f.clone(), acc);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct WeightReport {
    pub checks: Checklist,
    /// max |coefficient| of any w and of any z, as decimals.
    pub max_w_coeff: f64,
    pub max_z_coeff: f64,
    /// Counts of gauge branches taken across all link solves.
    pub branches: BTreeMap<String, usize>,
}

impl WeightReport {
    pub fn all_passed(&self) -> bool {
        self.checks.all_passed()
    }
}

fn tensor_add(t: &mut BTreeMap<(Simplex, Simplex), Q>, left: &Chain, right: &Chain, scale: &Q) {
    for (a, ca) in left.iter() {
        for (b, cb) in right.iter() {
            let key = (a.clone(), b.clone());
            let v = t.entry(key.clone()).or_insert_with(Q::zero);
            *v += scale * ca * cb;
            if v.is_zero() {
                t.remove(&key);
            }
        }
    }
}

/// All weight-system certificates, evaluated exactly.
pub fn certify_weight_system(mesh: &Mesh, ws: &WeightSystem) -> WeightReport {
    let mut ck = Checklist::new();
    let n = mesh.dim() as isize;
    let whole = mesh.link(&Simplex::empty()).expect("link of the empty simplex");
    let mut branches: BTreeMap<String, usize> = BTreeMap::new();

    // link complexes and μ/β relations
    for (f, lw) in &ws.links {
        let link = mesh.link(f).expect("anchor link");
        for k in 0..link.dim {
            ck.record("link-exactness", chains::cochain_exact_at(link, k), || format!("link of {f}, degree {k}"));
        }
        for b in &lw.branches {
            *branches.entry(format!("{b:?}")).or_default() += 1;
        }
        for (j, bj) in lw.beta.iter().enumerate() {
            ck.record("beta-closed", chains::boundary(bj).is_zero(), || format!("anchor {f}, degree {j}"));
            if j + 1 < lw.mu.len() {
                let lhs = chains::boundary(&lw.mu[j + 1]);
                ck.record("mu-relation", lhs == *bj, || format!("anchor {f}, degree {j}"));
            }
        }
        ck.record("beta-expansion", beta_matches_formula(mesh, ws, f), || format!("anchor {f}"));
    }

    // z properties
    for ((e, f), zc) in ws.z.iter() {
        let j = e.dim();
        if j >= 1 {
            let dz = chains::coboundary(zc, whole);
            let dz_expected = pair_delta_at(&ws.z, e, f, &Chain::new(n - j + 1)).map(|c| c.scale(&sign_pow(j as i64 + 1)));
            ck.record("dz-relation", dz_expected.as_ref().map(|c| *c == dz).unwrap_or(false), || format!("pair ({e}, {f})"));
            let cp = co_plus_at(&ws.z, e, f, &Chain::new(n - j + 1));
            ck.record("z-co-plus", cp.as_ref().map(|c| c.is_zero()).unwrap_or(false), || format!("pair ({e}, {f})"));
        }
        let fstar = mesh.star(f);
        let ext = mesh.extended_star(e);
        let supp_ok = zc.iter().all(|(g, _)| mesh.star(g).iter().all(|c| fstar.contains(c) && ext.contains(c)));
        ck.record("z-support", supp_ok, || format!("pair ({e}, {f})"));
        let trace_ok = zc.iter().all(|(g, _)| !mesh.on_boundary(g));
        ck.record("z-boundary-trace", trace_ok, || format!("pair ({e}, {f})"));
        if j == 0 {
            let joined = ws.z_avg.get(&f.join(e)).map(|c| c.scale(&-Q::one()));
            ck.record("z-vertex-pairs", joined.as_ref() == Some(zc), || format!("pair ({e}, {f})"));
        }
    }

    // w properties
    for ((e, f), wc) in ws.w.iter() {
        let fstar = mesh.star(f);
        let supp_ok = wc.iter().all(|(g, _)| mesh.star(g).iter().all(|c| fstar.contains(c)));
        ck.record("w-support", supp_ok, || format!("pair ({e}, {f})"));
        let trace_ok = wc.iter().all(|(g, _)| !mesh.on_macro_boundary(f, g));
        ck.record("w-macro-boundary-trace", trace_ok, || format!("pair ({e}, {f})"));
        let j = e.dim();
        if j >= 0 && f.dim() < n {
            let dw = chains::coboundary(wc, whole);
            let zero = Chain::new(n - j);
            let rhs = pair_delta_at(&ws.w, e, f, &zero)
                .and_then(|dw2| ws.z_pair(e, f).map(|zz| dw2.sub(zz).scale(&sign_pow(j as i64 + 1))));
            ck.record("dw-relation", rhs.as_ref().map(|r| *r == dw).unwrap_or(false), || format!("pair ({e}, {f})"));
        }
        if j == -1 {
            let expect = ws.z_avg.get(f).map(|c| c.scale(&-Q::one()));
            ck.record("w-empty-is-minus-z", expect.as_ref() == Some(wc), || format!("anchor {f}"));
        }
    }

    // averages
    for (f, c) in &ws.z_avg {
        let total = c.iter().fold(Q::zero(), |s, (t, v)| {
            let ci = mesh.cell_index(t).expect("cell");
            s + v * Q::from_integer(mesh.geom(ci).orientation.into())
        });
        ck.record("z-average-integral", total.is_one(), || format!("anchor {f}: ∫ = {total}"));
        let fstar = mesh.star(f);
        let supp_ok = c.iter().all(|(t, _)| fstar.contains(&mesh.cell_index(t).unwrap()));
        ck.record("z-average-support", supp_ok, || format!("anchor {f}"));
    }

    // residual identity for ψ ⊗ z against φ ⊗ z
    for m in 0..n {
        for j in 0..n - m {
            for s in -1..m {
                for g in mesh.simplices(s) {
                    let (ok, why) = residual_identity(mesh, ws, g, j, m);
                    ck.record("residual-identity", ok, || format!("g={g}, j={j}, m={m}: {why}"));
                }
            }
        }
    }

    // ψ identity on macroelements
    for f in ws.links.keys() {
        let link = mesh.link(f).unwrap();
        for j in 0..=link.dim {
            for e in link.simplices(j) {
                for g in f.all_faces() {
                    ck.record("psi-identity", psi_identity_holds(mesh, ws, e, &g, f), || format!("e={e}, g={g}, f={f}"));
                }
            }
        }
    }

    let (mw, mz) = ws.max_expansion();
    WeightReport { checks: ck, max_w_coeff: crate::rational::to_f64(&mw), max_z_coeff: crate::rational::to_f64(&mz), branches }
}

fn residual_identity(mesh: &Mesh, ws: &WeightSystem, g: &Simplex, j: isize, m: isize) -> (bool, String) {
    let mut lhs = BTreeMap::new();
    for (e, f) in mesh.pairs(j, m) {
        if !g.is_face_of(&f) {
            continue;
        }
        let (psi, zc) = match (ws.psi(&e, g, &f), ws.z_pair(&e, &f)) {
            (Ok(p), Ok(z)) => (p, z),
            (Err(err), _) | (_, Err(err)) => return (false, err.to_string()),
        };
        tensor_add(&mut lhs, &psi, zc, &Q::one());
    }
    let mut rhs = BTreeMap::new();
    for (e, f) in mesh.pairs(j, m - 1) {
        if !g.is_face_of(&f) {
            continue;
        }
        match ws.z_pair(&e, &f) {
            Ok(zc) => tensor_add(&mut rhs, &Chain::single(e.clone(), Q::one()), zc, &Q::one()),
            Err(err) => return (false, err.to_string()),
        }
    }
    if lhs == rhs {
        (true, String::new())
    } else {
        let diff = lhs.keys().chain(rhs.keys()).find(|k| lhs.get(*k) != rhs.get(*k)).cloned();
        (false, format!("first differing term {diff:?}"))
    }
}

/// (λ_i d − j dλ_i∧) applied to μ as a polynomial form on one cell; j = 0 uses d_{-1} = inclusion.
fn lambda_d_minus(mesh: &Mesh, cell: usize, x: u32, mu: &Form, j: isize) -> Form {
    let lam = mesh.hat(cell, x);
    if j == 0 {
        return Form::scalar(lam).scale(&mu.coeff(0).constant_term());
    }
    let first = mu.d().mul_poly(&lam);
    let second = dhat_on_cell(mesh, cell, x).wedge(mu).scale(&Q::from_integer(j.into()));
    first.sub(&second)
}

fn mu_form(mesh: &Mesh, cell: usize, row: &Chain) -> Form {
    if row.degree() < 0 {
        return Form::constant(mesh.dim(), row.coeff(&Simplex::empty()));
    }
    whitney_sum_on_cell(mesh, cell, row)
}

/// β_e = Σ_{i∈I(f*)} (λ_i d − j dλ_i∧) μ_e + (−1)^j φ_e against Σ b_{e,e'} φ_{e'} on Ω_f.
fn beta_matches_formula(mesh: &Mesh, ws: &WeightSystem, f: &Simplex) -> bool {
    let Ok(lw) = ws.link_weights(f) else { return false };
    let link = mesh.link(f).unwrap();
    for j in 0..=link.dim {
        for e in link.simplices(j) {
            let row = lw.mu[j as usize].get(e).cloned().unwrap_or_else(|| Chain::new(j - 1));
            let b = lw.beta[j as usize].get(e).cloned().unwrap_or_else(|| Chain::new(j));
            for &cell in mesh.star(f) {
                let mu = mu_form(mesh, cell, &row);
                let mut lhs = whitney_on_cell(mesh, cell, e).scale(&sign_pow(j as i64));
                for x in link.simplices(0) {
                    lhs.add_assign(&lambda_d_minus(mesh, cell, x.verts()[0], &mu, j));
                }
                if lhs != whitney_sum_on_cell(mesh, cell, &b) {
                    return false;
                }
            }
        }
    }
    true
}

/// ρ_g^{j+1} d(μ_e/ρ_g^j) + (−1)^j [φ_e + ψ_{e,g}(f)] = β_e(f) on every cell of Ω_f.
pub fn psi_identity_holds(mesh: &Mesh, ws: &WeightSystem, e: &Simplex, g: &Simplex, f: &Simplex) -> bool {
    let (Ok(row), Ok(b), Ok(psi)) = (ws.mu(e, f), ws.beta(e, f), ws.psi(e, g, f)) else {
        return false;
    };
    let j = e.dim();
    for &cell in mesh.star(f) {
        let rho = rho_on_cell(mesh, cell, g);
        let mu = mu_form(mesh, cell, &row);
        // ρ^{j+1} d(μ ρ^{-j}) = ρ dμ − j dρ∧μ, and ρ·μ when j = 0
        let mut lhs = if j == 0 {
            Form::scalar(rho.clone()).scale(&mu.coeff(0).constant_term())
        } else {
            let drho = Form::scalar(rho.clone()).d();
            mu.d().mul_poly(&rho).sub(&drho.wedge(&mu).scale(&Q::from_integer(j.into())))
        };
        let mut bracket = whitney_on_cell(mesh, cell, e);
        bracket.add_assign(&whitney_sum_on_cell(mesh, cell, &psi));
        lhs.add_scaled(&sign_pow(j as i64), &bracket);
        if lhs != whitney_sum_on_cell(mesh, cell, &b) {
            return false;
        }
    }
    true
}

/// ψ_{e,g}(f) = (ρ_g − ρ_f)/|f*| for a vertex e, as a chain identity.
pub fn psi_vertex_formula(mesh: &Mesh, ws: &WeightSystem, e: &Simplex, g: &Simplex, f: &Simplex) -> Result<bool> {
    let size = mesh.link(f)?.size();
    let mut expect = Chain::new(0);
    let inv = Q::one() / Q::from_integer(size.into());
    for &x in f.minus(g).verts() {
        expect.add_at(&Simplex::vertex(x), &inv, &Q::one());
    }
    Ok(ws.psi(e, g, f)? == expect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;
    use crate::testutil::{d2, d2_weights, d3, d3_weights, s};

    fn assert_report(r: &WeightReport) {
        for c in r.checks.failures() {
            eprintln!("failed {}: {:?}", c.name, c.witness);
        }
        assert!(r.all_passed());
    }

    #[test]
    fn diamond_certificates() {
        assert_report(&d2_weights().certify(d2()));
    }

    #[test]
    fn twotet_certificates() {
        assert_report(&d3_weights().certify(d3()));
    }

    #[test]
    fn edge_anchor_mu_and_beta() {
        let ws = d2_weights();
        let f = s(&[0, 1]);
        assert_eq!(ws.mu(&s(&[2]), &f).unwrap().coeff(&Simplex::empty()), qf(-1, 2));
        // β_{x2} = (λ_2 − λ_4)/2 on Ω_f
        let b = ws.beta(&s(&[2]), &f).unwrap();
        assert_eq!(b.coeff(&s(&[2])), qf(1, 2));
        assert_eq!(b.coeff(&s(&[4])), qf(-1, 2));
        let b4 = ws.beta(&s(&[4]), &f).unwrap();
        assert!(b.add(&b4).is_zero());
    }

    #[test]
    fn psi_special_cases() {
        let (mesh, ws) = (d2(), d2_weights());
        let f = s(&[0, 1]);
        assert!(ws.psi(&s(&[2]), &f, &f).unwrap().is_zero());
        let psi = ws.psi(&s(&[2]), &s(&[0]), &f).unwrap();
        assert_eq!(psi, Chain::single(s(&[1]), qf(1, 2)));
        assert!(psi_vertex_formula(mesh, ws, &s(&[2]), &Simplex::empty(), &f).unwrap());
        assert!(ws.psi(&s(&[2]), &s(&[3]), &f).is_err());
    }

    #[test]
    fn averages() {
        let ws = d2_weights();
        let t = s(&[0, 1, 2]);
        assert_eq!(ws.z_avg(&t).unwrap(), &Chain::single(t.clone(), Q::one()));
        let z01 = ws.z_avg(&s(&[0, 1])).unwrap();
        assert_eq!(z01.len(), 2);
        // vertex pairs reproduce −z_{⟨e,f⟩}
        let z = ws.z_pair(&s(&[2]), &s(&[0, 1])).unwrap();
        assert_eq!(*z, ws.z_avg(&t).unwrap().scale(&-Q::one()));
    }

    #[test]
    fn fault_injection_names_the_pair() {
        let mut ws = d2_weights().clone();
        let (e, f) = (s(&[0, 1, 2]), Simplex::empty());
        let mut bad = ws.z_pair(&e, &f).unwrap().clone();
        bad.add_at(&s(&[3]), &Q::one(), &Q::one());
        ws.set_z(e, f, bad);
        let r = ws.certify(d2());
        let c = r.checks.get("dz-relation").unwrap();
        assert!(!c.passed);
        assert_eq!(c.witness.as_deref(), Some("pair ([0,1,2], ∅)"));
    }

    #[test]
    fn deterministic_and_parallel_agree() {
        let a = WeightSystem::build(d2()).unwrap();
        let b = WeightSystem::build_with(d2(), &Exec::with_jobs(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(crate::io::weights_hash(&a), crate::io::weights_hash(&b));
    }
}
