//! The bubble transform u = W^k u + Σ_f B_f^k u.
//!
//! All operator values A_f u, R_{e,f} u and Q_{e,f} u for one input are
//! computed once into an [`OperatorTable`]. The local operators K_{m,f}
//! are then assembled cell by cell on Ω_f. For f ∈ Δ_{m-1} the manifestly
//! polynomial form is used, with μ_e, φ_e and the quotients b^{-j}R,
//! b^{-(j+1)}Q. The rational form with ρ_g denominators is only evaluated
//! pointwise, as an oracle.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::form::Form;
use crate::mesh::Mesh;
use crate::operators::Contraction;
use crate::poly::Poly;
use crate::polyform::{pullback_corner_on_cell, rho_on_cell, whitney_on_cell, whitney_sum_on_cell, PiecewiseForm, RefForm};
use crate::rational::{sign_pow, to_f64, Q};
use crate::simplex::Simplex;
use crate::weights::WeightSystem;

/// Operator values for one anchor f.
#[derive(Debug, Clone)]
pub struct AnchorOps {
    pub average: RefForm,
    /// R_{e,f}u for e ∈ Δ_j(f*), j ≤ k; only kept for anchors of dimension ≤ n − 2 and ∅.
    pub reductions: BTreeMap<Simplex, RefForm>,
    /// b^{-j} R_{e,f}u.
    pub reductions_div: BTreeMap<Simplex, RefForm>,
    /// Q_{e,f}u for top-dimensional e ∈ Δ_{dim f*}(f*) when dim e + 1 ≤ k.
    pub top_q: BTreeMap<Simplex, RefForm>,
    /// b^{-(j+1)} Q_{e,f}u.
    pub top_q_div: BTreeMap<Simplex, RefForm>,
}

/// A_f, R_{e,f}, Q_{e,f} applied to a single input form.
#[derive(Debug, Clone)]
pub struct OperatorTable {
    k: usize,
    anchors: BTreeMap<Simplex, AnchorOps>,
}

impl OperatorTable {
    pub fn build(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, exec: &Exec) -> Result<OperatorTable> {
        let n = mesh.dim() as isize;
        let anchors: Vec<Simplex> = (-1..n).flat_map(|d| mesh.simplices(d).to_vec()).collect();
        let ops = exec.try_map(&anchors, |f| anchor_ops(mesh, ws, u, f))?;
        Ok(OperatorTable { k: u.degree(), anchors: anchors.into_iter().zip(ops).collect() })
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn anchor(&self, f: &Simplex) -> Result<&AnchorOps> {
        self.anchors.get(f).ok_or_else(|| Error::IndexMismatch(format!("no operator data for anchor {f}")))
    }
}

fn anchor_ops(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, f: &Simplex) -> Result<AnchorOps> {
    let n = mesh.dim() as isize;
    let c = Contraction::new(mesh, u, f)?;
    let average = c.average(mesh, ws)?;
    let mut ops = AnchorOps {
        average,
        reductions: BTreeMap::new(),
        reductions_div: BTreeMap::new(),
        top_q: BTreeMap::new(),
        top_q_div: BTreeMap::new(),
    };
    if f.dim() > n - 2 {
        return Ok(ops);
    }
    let link = mesh.link(f)?;
    let top = n - 1 - f.dim();
    for j in 0..=top.min(u.degree() as isize) {
        for e in link.simplices(j) {
            if let Some(r) = c.reduce(mesh, ws, e)? {
                ops.reductions_div.insert(e.clone(), r.divide_by_b(j as usize)?);
                ops.reductions.insert(e.clone(), r);
            }
        }
    }
    if !f.is_empty() {
        for e in link.simplices(top) {
            if let Some(q) = c.reduce_q(mesh, ws, e)? {
                ops.top_q_div.insert(e.clone(), q.divide_by_b(top as usize + 1)?);
                ops.top_q.insert(e.clone(), q);
            }
        }
    }
    Ok(ops)
}

/// Constant form (L_g^* w)(x) on a cell, without expanding the pullback.
pub fn pullback_corner_point(mesh: &Mesh, cell: usize, g: &Simplex, w: &RefForm, x: &[Q]) -> Form {
    let n = mesh.dim();
    let hats: Vec<Poly> =
        w.anchor().verts().iter().map(|&v| if g.contains(v) { mesh.hat(cell, v) } else { Poly::zero(n) }).collect();
    let lam: Vec<Q> = hats.iter().map(|h| h.eval(x)).collect();
    w.form().eval(&lam).pullback(&hats, n).eval(x)
}

/// The output of [`Transform::decompose`].
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub k: usize,
    pub input: PiecewiseForm,
    pub w_part: PiecewiseForm,
    /// (m, f) ↦ K_{m,f}u, for f ∈ Δ_m and f ∈ Δ_{m-1}.
    pub k_table: BTreeMap<(usize, Simplex), PiecewiseForm>,
    pub bubbles: BTreeMap<Simplex, PiecewiseForm>,
    /// u − W − Σ B_f; zero by construction once the trace gate passes.
    pub residual: PiecewiseForm,
}

impl Decomposition {
    pub fn residual_is_zero(&self) -> bool {
        self.residual.is_zero()
    }

    /// First f whose bubble is nonzero on a cell outside Ω_f.
    pub fn support_violation(&self, mesh: &Mesh) -> Option<Simplex> {
        self.bubbles.iter().find_map(|(f, b)| {
            let star: BTreeSet<usize> = mesh.star(f).iter().copied().collect();
            b.support().iter().any(|c| !star.contains(c)).then(|| f.clone())
        })
    }
}

/// First face of Δ_{n-1} on which some adjacent cell sees a nonzero trace.
pub fn nonzero_trace_face(mesh: &Mesh, r: &PiecewiseForm) -> Option<Simplex> {
    let n = mesh.dim() as isize;
    if r.degree() as isize > n - 1 {
        return None;
    }
    mesh.simplices(n - 1).iter().find(|g| mesh.star(g).iter().any(|&c| !r.trace_from(mesh, c, g).is_zero())).cloned()
}

/// The transform for one mesh and weight system.
pub struct Transform<'a> {
    mesh: &'a Mesh,
    ws: &'a WeightSystem,
    exec: Exec,
}

impl<'a> Transform<'a> {
    pub fn new(mesh: &'a Mesh, ws: &'a WeightSystem) -> Transform<'a> {
        Transform { mesh, ws, exec: Exec::sequential() }
    }

    pub fn with_exec(mesh: &'a Mesh, ws: &'a WeightSystem, exec: Exec) -> Transform<'a> {
        Transform { mesh, ws, exec }
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn exec(&self) -> &Exec {
        &self.exec
    }

    pub fn table(&self, u: &PiecewiseForm) -> Result<OperatorTable> {
        OperatorTable::build(self.mesh, self.ws, u, &self.exec)
    }

    /// Tables for u and, when k < n, for du.
    pub fn tables(&self, u: &PiecewiseForm) -> Result<(OperatorTable, Option<OperatorTable>)> {
        let tu = self.table(u)?;
        let tdu = if u.degree() < self.mesh.dim() { Some(self.table(&u.d())?) } else { None };
        Ok((tu, tdu))
    }

    /// W^k u = (−1)^{k−1} Σ_{e∈Δ_k} φ_e ∫ u ∧ z_{e,∅}.
    pub fn w_part(&self, tu: &OperatorTable) -> Result<PiecewiseForm> {
        let mesh = self.mesh;
        let k = tu.degree();
        let ops = tu.anchor(&Simplex::empty())?;
        let sign = sign_pow(k as i64 - 1);
        let mut coeffs = crate::chains::Chain::new(k as isize);
        for e in mesh.simplices(k as isize) {
            let r = ops.reductions.get(e).ok_or_else(|| Error::IndexMismatch(format!("R_({e},∅) missing")))?;
            let val = r.form().coeff(0).constant_term();
            coeffs.add_at(e, &sign, &val);
        }
        Ok(crate::polyform::whitney_sum(mesh, &coeffs))
    }

    /// K_{m,f}^k u. `tdu` is the table of du (absent when k = n).
    pub fn k_op(&self, m: usize, f: &Simplex, tu: &OperatorTable, tdu: Option<&OperatorTable>) -> Result<PiecewiseForm> {
        let n = self.mesh.dim();
        let fd = f.dim();
        if f.is_empty() || m >= n || !(fd == m as isize || fd + 1 == m as isize) {
            return Err(Error::IndexMismatch(format!("K_({m},{f}) is not defined for n = {n}")));
        }
        self.mesh.check(f)?;
        if m == 0 {
            let a = &tu.anchor(f)?.average;
            let lf = self.lg_all(f, a);
            return Ok(lf.sub(&self.lg_all(&Simplex::empty(), a)));
        }
        if fd == m as isize {
            let a = &tu.anchor(f)?.average;
            let mut out = PiecewiseForm::zero(self.mesh, tu.degree());
            for g in f.all_faces() {
                out.add_scaled(&sign_pow((f.len() - g.len()) as i64), &self.lg_all(&g, a));
            }
            return Ok(out);
        }
        self.k_link_branch(m, f, tu, tdu)
    }

    fn lg_all(&self, g: &Simplex, w: &RefForm) -> PiecewiseForm {
        let cells = (0..self.mesh.num_cells()).map(|c| pullback_corner_on_cell(self.mesh, c, g, w)).collect();
        PiecewiseForm::from_cells(self.mesh.dim(), w.degree(), cells)
    }

    /// f ∈ Δ_{m-1}: Σ_g (−1)^{|f|−|g|} K_{m,f,g}, in the polynomial representation, on Ω_f.
    fn k_link_branch(&self, m: usize, f: &Simplex, tu: &OperatorTable, tdu: Option<&OperatorTable>) -> Result<PiecewiseForm> {
        let mesh = self.mesh;
        let n = mesh.dim();
        let k = tu.degree();
        let top = (n - m) as isize;
        let ou = tu.anchor(f)?;
        let odu = tdu.map(|t| t.anchor(f)).transpose()?;
        let link = mesh.link(f)?;
        let faces = f.all_faces();
        let mut mus = Vec::new();
        for j in 1..=top {
            for e in link.simplices(j) {
                mus.push((e.clone(), self.ws.mu(e, f)?));
            }
        }
        let mut cells = vec![Form::zero(n, k); mesh.num_cells()];
        for &c in mesh.star(f) {
            let mut acc = Form::zero(n, k);
            let mu_forms: Vec<(Simplex, Form)> =
                mus.iter().map(|(e, row)| (e.clone(), whitney_sum_on_cell(mesh, c, row))).collect();
            for g in &faces {
                let mut kg = Form::zero(n, k);
                let lg = |w: &RefForm| pullback_corner_on_cell(mesh, c, g, w);
                for (e, mu) in &mu_forms {
                    if let Some(r) = ou.reductions_div.get(e) {
                        kg.add_assign(&mu.wedge(&lg(r)).d());
                    }
                    if let Some(r) = odu.and_then(|o| o.reductions_div.get(e)) {
                        kg.add_assign(&mu.wedge(&lg(r)));
                    }
                }
                let s = sign_pow(top as i64);
                for e in link.simplices(top) {
                    let phi = whitney_on_cell(mesh, c, e);
                    if let Some(q) = ou.top_q_div.get(e) {
                        kg.add_scaled(&s, &phi.wedge(&lg(q)).d());
                    }
                    if let Some(q) = odu.and_then(|o| o.top_q_div.get(e)) {
                        kg.add_scaled(&s, &phi.wedge(&lg(q)));
                    }
                }
                acc.add_scaled(&sign_pow((f.len() - g.len()) as i64), &kg);
            }
            cells[c] = acc;
        }
        Ok(PiecewiseForm::from_cells(n, k, cells))
    }

    /// Every K_{m,f} for 0 ≤ m ≤ n−1.
    pub fn k_table(&self, tu: &OperatorTable, tdu: Option<&OperatorTable>) -> Result<BTreeMap<(usize, Simplex), PiecewiseForm>> {
        let n = self.mesh.dim();
        let mut jobs: Vec<(usize, Simplex)> = Vec::new();
        for m in 0..n {
            for f in self.mesh.simplices(m as isize) {
                jobs.push((m, f.clone()));
            }
            if m >= 1 {
                for f in self.mesh.simplices(m as isize - 1) {
                    jobs.push((m, f.clone()));
                }
            }
        }
        let forms = self.exec.try_map(&jobs, |(m, f)| self.k_op(*m, f, tu, tdu))?;
        Ok(jobs.into_iter().zip(forms).collect())
    }

    /// u = W^k u + Σ_f B_f^k u, with the zero-trace gate on Δ_{n-1}.
    pub fn decompose(&self, u: &PiecewiseForm) -> Result<Decomposition> {
        let mesh = self.mesh;
        let n = mesh.dim();
        u.require_conforming(mesh)?;
        let (tu, tdu) = self.tables(u)?;
        let w_part = self.w_part(&tu)?;
        let k_table = self.k_table(&tu, tdu.as_ref())?;
        let mut bubbles = BTreeMap::new();
        let mut remainder = u.sub(&w_part);
        for m in 0..n {
            for f in mesh.simplices(m as isize) {
                let mut b = k_table[&(m, f.clone())].clone();
                if let Some(next) = k_table.get(&(m + 1, f.clone())) {
                    b.add_assign(next);
                }
                remainder = remainder.sub(&b);
                bubbles.insert(f.clone(), b);
            }
        }
        if let Some(face) = nonzero_trace_face(mesh, &remainder) {
            return Err(Error::ConstructionFailed(format!("u − W − Σ lower bubbles has nonzero trace on {face}")));
        }
        let mut residual = remainder.clone();
        for (c, cell) in mesh.cells().iter().enumerate() {
            let b = remainder.restrict_to(&[c]);
            residual = residual.sub(&b);
            bubbles.insert(cell.clone(), b);
        }
        if !residual.is_zero() {
            return Err(Error::ConstructionFailed("nonzero residual".into()));
        }
        Ok(Decomposition { k: u.degree(), input: u.clone(), w_part, k_table, bubbles, residual })
    }

    /// C_m^k u at a point x of a cell, from the rational representation.
    pub fn c_m_at(&self, tu: &OperatorTable, m: usize, cell: usize, x: &[Q]) -> Result<Form> {
        let mesh = self.mesh;
        let n = mesh.dim();
        if m >= n {
            return Err(Error::IndexMismatch(format!("C_{m} needs m < {n}")));
        }
        let mut out = Form::zero(n, tu.degree());
        for f in mesh.simplices(m as isize) {
            let a = &tu.anchor(f)?.average;
            for g in f.all_faces() {
                out.add_scaled(&sign_pow((f.len() - g.len()) as i64), &pullback_corner_point(mesh, cell, &g, a, x));
            }
        }
        for f in mesh.simplices(m as isize - 1) {
            let ops = tu.anchor(f)?;
            let link = mesh.link(f)?;
            for j in 0..=(n - m) as isize {
                for e in link.simplices(j) {
                    let Some(r) = ops.reductions.get(e) else { continue };
                    let phi = whitney_on_cell(mesh, cell, e).eval(x);
                    if phi.is_zero() {
                        continue;
                    }
                    for g in f.all_faces() {
                        let rho = self.rho_at(cell, &g, x)?;
                        let coef = sign_pow(j as i64 - 1 + (f.len() - g.len()) as i64) / rho.pow(j as i32 + 1);
                        out.add_scaled(&coef, &phi.wedge(&pullback_corner_point(mesh, cell, &g, r, x)));
                    }
                }
            }
        }
        Ok(out)
    }

    fn rho_at(&self, cell: usize, g: &Simplex, x: &[Q]) -> Result<Q> {
        let rho = rho_on_cell(self.mesh, cell, g).eval(x);
        if rho.is_zero() {
            return Err(Error::SingularPoint(format!("ρ_{g} vanishes at the evaluation point")));
        }
        Ok(rho)
    }

    /// K_{m,f}^k u at a point for f ∈ Δ_{m-1}, from the rational definition with ψ and ρ_g.
    pub fn k_rational_at(&self, tu: &OperatorTable, m: usize, f: &Simplex, cell: usize, x: &[Q]) -> Result<Form> {
        let mesh = self.mesh;
        let n = mesh.dim();
        if m == 0 || m >= n || f.dim() + 1 != m as isize {
            return Err(Error::IndexMismatch(format!("rational K_({m},{f}) needs f ∈ Δ_(m-1), 1 ≤ m ≤ n−1")));
        }
        let ops = tu.anchor(f)?;
        let link = mesh.link(f)?;
        let top = (n - m) as isize;
        let mut out = Form::zero(n, tu.degree());
        for g in f.all_faces() {
            let rho = self.rho_at(cell, &g, x)?;
            let rho_poly = rho_on_cell(mesh, cell, &g);
            let drho = Form::scalar(rho_poly).d().eval(x);
            let mut kg = pullback_corner_point(mesh, cell, &g, &ops.average, x).neg();
            for j in 0..=top {
                for e in link.simplices(j) {
                    let Some(r) = ops.reductions.get(e) else { continue };
                    let mut lead = whitney_on_cell(mesh, cell, e);
                    lead.add_assign(&whitney_sum_on_cell(mesh, cell, &self.ws.psi(e, &g, f)?));
                    let coef = sign_pow(j as i64 - 1) / rho.pow(j as i32 + 1);
                    kg.add_scaled(&coef, &lead.eval(x).wedge(&pullback_corner_point(mesh, cell, &g, r, x)));
                }
            }
            for e in link.simplices(top) {
                let Some(q) = ops.top_q.get(e) else { continue };
                let phi = whitney_on_cell(mesh, cell, e);
                // d(φ/ρ^{j+1}) = dφ/ρ^{j+1} − (j+1) dρ∧φ/ρ^{j+2}
                let mut dquot = phi.d().eval(x).scale(&(Q::one() / rho.pow(top as i32 + 1)));
                let c2 = Q::from_integer((top + 1).into()) / rho.pow(top as i32 + 2);
                dquot.add_scaled(&-c2, &drho.wedge(&phi.eval(x)));
                kg.add_scaled(&sign_pow(top as i64), &dquot.wedge(&pullback_corner_point(mesh, cell, &g, q, x)));
            }
            out.add_scaled(&sign_pow((f.len() - g.len()) as i64), &kg);
        }
        Ok(out)
    }
}

/// W^k u for a single input.
pub fn w_part(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm) -> Result<PiecewiseForm> {
    let t = Transform::new(mesh, ws);
    t.w_part(&t.table(u)?)
}

/// K_{m,f}^k u for a single input.
pub fn k_op(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, m: usize, f: &Simplex) -> Result<PiecewiseForm> {
    let t = Transform::new(mesh, ws);
    let (tu, tdu) = t.tables(u)?;
    t.k_op(m, f, &tu, tdu.as_ref())
}

pub fn decompose(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm) -> Result<Decomposition> {
    Transform::new(mesh, ws).decompose(u)
}

/// C_m^k u(x) at a point x interior to some cell.
pub fn c_m_point_eval(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, m: usize, x: &[Q]) -> Result<Form> {
    let cell = interior_cell(mesh, x)?;
    let t = Transform::new(mesh, ws);
    t.c_m_at(&t.table(u)?, m, cell, x)
}

/// The cell having x in its interior.
pub fn interior_cell(mesh: &Mesh, x: &[Q]) -> Result<usize> {
    (0..mesh.num_cells())
        .find(|&c| mesh.barycentric(c, x).iter().all(|l| l.is_positive()))
        .ok_or_else(|| Error::SingularPoint("point is not interior to a cell".into()))
}

/// Summary statistics of a ratio sample.
#[derive(Debug, Clone, Serialize)]
pub struct RatioSummary {
    pub max: f64,
    pub median: f64,
}

impl RatioSummary {
    fn of(v: &[f64]) -> RatioSummary {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.total_cmp(b));
        let median = if s.is_empty() {
            0.0
        } else if s.len() % 2 == 1 {
            s[s.len() / 2]
        } else {
            (s[s.len() / 2 - 1] + s[s.len() / 2]) / 2.0
        };
        RatioSummary { max: s.last().copied().unwrap_or(0.0), median }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub k: usize,
    pub degree: u32,
    pub trials: usize,
    pub seed: u64,
    /// Σ_f ‖B_f u‖²_{L²(Ω_f)} / ‖u‖² per trial.
    pub bubble_ratios: Vec<f64>,
    /// ‖W u‖² / ‖u‖² per trial.
    pub w_ratios: Vec<f64>,
    pub bubble: RatioSummary,
    pub w: RatioSummary,
}

/// Squared-norm ratios of one decomposition.
pub fn norm_ratios(mesh: &Mesh, d: &Decomposition) -> Result<(Q, Q)> {
    let all: Vec<usize> = (0..mesh.num_cells()).collect();
    let unorm = d.input.l2_norm_sq_on(mesh, &all);
    if unorm.is_zero() {
        return Err(Error::DegreeMismatch("zero input has no norm ratio".into()));
    }
    let mut bsum = Q::zero();
    for (f, b) in &d.bubbles {
        bsum += b.l2_norm_sq_on(mesh, mesh.star(f));
    }
    let wnorm = d.w_part.l2_norm_sq_on(mesh, &all);
    Ok((bsum / &unorm, wnorm / unorm))
}

/// Measured L² ratios over seeded random inputs in P_rΛ^k.
pub fn stability_report(
    mesh: &Mesh,
    ws: &WeightSystem,
    k: usize,
    degree: u32,
    trials: usize,
    seed: u64,
    exec: &Exec,
) -> Result<StabilityReport> {
    let t = Transform::with_exec(mesh, ws, exec.clone());
    let mut sampler = crate::random::Sampler::new(seed);
    let mut bubble_ratios = Vec::with_capacity(trials);
    let mut w_ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let u = sampler.form(mesh, k, degree, false);
        let d = t.decompose(&u)?;
        let (b, w) = norm_ratios(mesh, &d)?;
        bubble_ratios.push(to_f64(&b));
        w_ratios.push(to_f64(&w));
    }
    Ok(StabilityReport {
        k,
        degree,
        trials,
        seed,
        bubble: RatioSummary::of(&bubble_ratios),
        w: RatioSummary::of(&w_ratios),
        bubble_ratios,
        w_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyform::{hat, pullback_corner_at, Space};
    use crate::random::{random_form, Sampler};
    use crate::rational::{one, q};
    use crate::testutil::{d2, d2_weights, d3, d3_weights, s};

    fn fixtures() -> [(&'static Mesh, &'static WeightSystem); 2] {
        [(d2(), d2_weights()), (d3(), d3_weights())]
    }

    #[test]
    fn point_pullback_matches_expanded_pullback() {
        let (mesh, ws) = (d2(), d2_weights());
        let u = random_form(mesh, 1, 2, false, 3);
        let a = crate::operators::average(mesh, ws, &u, &s(&[0, 1])).unwrap();
        let mut smp = Sampler::new(1);
        for cell in 0..mesh.num_cells() {
            let x = smp.interior_point(mesh, cell);
            for g in s(&[0, 1]).all_faces() {
                assert_eq!(pullback_corner_point(mesh, cell, &g, &a, &x), pullback_corner_at(mesh, cell, &g, &a, &x));
            }
        }
    }

    #[test]
    fn constants_go_to_w() {
        for (mesh, ws) in fixtures() {
            let u = PiecewiseForm::constant(mesh, one());
            let w = w_part(mesh, ws, &u).unwrap();
            assert_eq!(w, u);
            let d = decompose(mesh, ws, &u).unwrap();
            assert!(d.bubbles.values().all(|b| b.is_zero()));
            let (b, wr) = norm_ratios(mesh, &d).unwrap();
            assert_eq!((b, wr), (Q::zero(), one()));
            let x = Sampler::new(5).interior_point(mesh, 0);
            assert_eq!(c_m_point_eval(mesh, ws, &u, 0, &x).unwrap(), Form::constant(mesh.dim(), one()));
        }
    }

    #[test]
    fn scalar_w_is_hat_weighted_averages() {
        let (mesh, ws) = (d2(), d2_weights());
        let u = random_form(mesh, 0, 2, false, 8);
        let mut expect = PiecewiseForm::zero(mesh, 0);
        for v in mesh.simplices(0) {
            let zf = crate::polyform::whitney_sum(mesh, ws.z_avg(v).unwrap());
            let avg = u.wedge(&zf).unwrap().integrate(mesh).unwrap();
            expect.add_scaled(&avg, &hat(mesh, v.verts()[0]).unwrap());
        }
        assert_eq!(w_part(mesh, ws, &u).unwrap(), expect);
    }

    #[test]
    fn w_commutes_with_d() {
        for (mesh, ws) in fixtures() {
            for k in 0..mesh.dim() {
                let u = random_form(mesh, k, 2, false, 90 + k as u64);
                let w = w_part(mesh, ws, &u).unwrap();
                assert!(w.membership(Space::Trimmed(1)));
                assert_eq!(w.d(), w_part(mesh, ws, &u.d()).unwrap(), "k={k}");
            }
        }
    }

    #[test]
    fn constant_scalar_has_no_primal_local_part() {
        let (mesh, ws) = (d3(), d3_weights());
        let u = PiecewiseForm::constant(mesh, q(2));
        for m in 1..mesh.dim() {
            for f in mesh.simplices(m as isize) {
                assert!(k_op(mesh, ws, &u, m, f).unwrap().is_zero(), "m={m} f={f}");
            }
        }
    }

    #[test]
    fn primal_local_operator_vanishes_off_its_star() {
        let (mesh, ws) = (d2(), d2_weights());
        let u = random_form(mesh, 1, 2, false, 17);
        let k = k_op(mesh, ws, &u, 1, &s(&[0, 1])).unwrap();
        for cell in [s(&[0, 2, 3]), s(&[0, 3, 4])] {
            assert!(k.cell(mesh.cell_index(&cell).unwrap()).is_zero());
        }
        assert!(!k.is_zero());
    }

    /// K^0_{m,f}u = Σ_g (−1)^{|f|−|g|} ρ_g^{-1} Σ_{i∈I(f*)} (λ_i − ρ_f/|f*|) L_g^*A^0_{⟨x_i,f⟩}u.
    #[test]
    fn scalar_link_operator_matches_the_scalar_formula() {
        for (mesh, ws) in fixtures() {
            let t = Transform::new(mesh, ws);
            let u = random_form(mesh, 0, 2, false, 23);
            let (tu, tdu) = t.tables(&u).unwrap();
            let mut smp = Sampler::new(2);
            for m in 1..mesh.dim() {
                for f in mesh.simplices(m as isize - 1) {
                    let kf = t.k_op(m, f, &tu, tdu.as_ref()).unwrap();
                    let link_verts: Vec<u32> = mesh.link(f).unwrap().simplices(0).iter().map(|e| e.verts()[0]).collect();
                    let nstar = Q::from_integer((link_verts.len() as i64).into());
                    for &cell in mesh.star(f) {
                        let x = smp.interior_point(mesh, cell);
                        let mut expect = Q::zero();
                        let rho_f = rho_on_cell(mesh, cell, f).eval(&x);
                        for g in f.all_faces() {
                            let rho_g = rho_on_cell(mesh, cell, &g).eval(&x);
                            let mut inner = Q::zero();
                            for &v in &link_verts {
                                let lam = mesh.hat(cell, v).eval(&x);
                                let a = &tu.anchor(&f.with_vertex(v)).unwrap().average;
                                let lg = pullback_corner_point(mesh, cell, &g, a, &x).coeff(0).constant_term();
                                inner += (lam - &rho_f / &nstar) * lg;
                            }
                            expect += sign_pow((f.len() - g.len()) as i64) * inner / rho_g;
                        }
                        assert_eq!(kf.eval(cell, &x), Form::constant(mesh.dim(), expect), "m={m} f={f}");
                    }
                }
            }
        }
    }

    #[test]
    fn rational_and_polynomial_forms_of_k_agree() {
        for (mesh, ws) in fixtures() {
            let t = Transform::new(mesh, ws);
            for k in 0..=mesh.dim() {
                let u = random_form(mesh, k, 2, false, 100 + k as u64);
                let (tu, tdu) = t.tables(&u).unwrap();
                let mut smp = Sampler::new(k as u64);
                for m in 1..mesh.dim() {
                    for f in mesh.simplices(m as isize - 1) {
                        let kf = t.k_op(m, f, &tu, tdu.as_ref()).unwrap();
                        for cell in 0..mesh.num_cells() {
                            let x = smp.interior_point(mesh, cell);
                            let rational = t.k_rational_at(&tu, m, f, cell, &x).unwrap();
                            assert_eq!(rational, kf.eval(cell, &x), "k={k} m={m} f={f} cell={cell}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn decomposition_properties_on_the_diamond() {
        let (mesh, ws) = (d2(), d2_weights());
        let t = Transform::new(mesh, ws);
        for k in 0..=2 {
            for (r, trimmed) in [(1, false), (2, false), (2, true)] {
                let u = random_form(mesh, k, r, trimmed, 200 + k as u64);
                let d = t.decompose(&u).unwrap();
                assert!(d.residual_is_zero());
                assert_eq!(d.support_violation(mesh), None);
                let space = if trimmed { Space::Trimmed(r) } else { Space::Full(r) };
                for (f, b) in &d.bubbles {
                    assert!(b.membership(space), "k={k} r={r} f={f}");
                    assert!(b.conformity_check(mesh).conforming);
                }
                if k < 2 {
                    let dd = t.decompose(&u.d()).unwrap();
                    assert_eq!(dd.w_part, d.w_part.d());
                    for (f, b) in &d.bubbles {
                        assert_eq!(dd.bubbles[f], b.d(), "k={k} f={f}");
                    }
                }
            }
        }
    }

    #[test]
    fn telescoping_matches_the_oracle() {
        for (mesh, ws) in fixtures() {
            let n = mesh.dim();
            let t = Transform::new(mesh, ws);
            for k in 0..=n {
                let u = random_form(mesh, k, 2, false, 300 + k as u64);
                let d = t.decompose(&u).unwrap();
                let tu = t.table(&u).unwrap();
                let mut smp = Sampler::new(9);
                for cell in 0..mesh.num_cells() {
                    let x = smp.interior_point(mesh, cell);
                    let c: Vec<Form> = (0..n).map(|m| t.c_m_at(&tu, m, cell, &x).unwrap()).collect();
                    let mut k0 = d.w_part.eval(cell, &x);
                    for f in mesh.simplices(0) {
                        k0.add_assign(&d.k_table[&(0, f.clone())].eval(cell, &x));
                    }
                    assert_eq!(c[0], k0, "C_0 k={k}");
                    for m in 1..n {
                        let mut sum = Form::zero(n, k);
                        for ((mm, _), kf) in d.k_table.iter().filter(|((mm, _), _)| *mm == m) {
                            let _ = mm;
                            sum.add_assign(&kf.eval(cell, &x));
                        }
                        assert_eq!(c[m].sub(&c[m - 1]), sum, "m={m} k={k}");
                    }
                    let mut top = Form::zero(n, k);
                    for f in mesh.simplices(n as isize) {
                        top.add_assign(&d.bubbles[f].eval(cell, &x));
                    }
                    assert_eq!(u.eval(cell, &x).sub(&c[n - 1]), top, "closure k={k}");
                }
            }
        }
    }

    #[test]
    fn bubbles_depend_only_on_their_stars() {
        let (mesh, ws) = (d2(), d2_weights());
        let t = Transform::new(mesh, ws);
        let k = 1;
        let u = random_form(mesh, k, 2, false, 400);
        let d = t.decompose(&u).unwrap();
        let mut checked = 0;
        for f in d.bubbles.keys() {
            let dep: BTreeSet<usize> =
                if f.dim() == 2 { mesh.extended_star(f).into_iter().collect() } else { mesh.star(f).iter().copied().collect() };
            for g in mesh.simplices(k as isize) {
                if mesh.star(g).iter().any(|c| dep.contains(c)) {
                    continue;
                }
                let v = crate::polyform::whitney(mesh, g).unwrap().scale(&q(5));
                let d2_ = t.decompose(&u.add(&v)).unwrap();
                assert_eq!(d2_.bubbles[f], d.bubbles[f], "f={f} perturbed at {g}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn broken_weights_fail_the_trace_gate() {
        let mesh = d2();
        let mut ws = d2_weights().clone();
        let f = s(&[0, 1]);
        let mut z = ws.z_avg(&f).unwrap().clone();
        z.add_at(&s(&[0, 1, 2]), &one(), &one());
        ws.set_z_avg(f, z);
        let u = random_form(mesh, 0, 2, false, 1);
        assert!(matches!(decompose(mesh, &ws, &u), Err(Error::ConstructionFailed(_))));
    }

    #[test]
    fn stability_report_is_seeded() {
        let (mesh, ws) = (d2(), d2_weights());
        let a = stability_report(mesh, ws, 1, 1, 3, 11, &Exec::sequential()).unwrap();
        let b = stability_report(mesh, ws, 1, 1, 3, 11, &Exec::with_jobs(2)).unwrap();
        assert_eq!(a.bubble_ratios, b.bubble_ratios);
        assert!(a.bubble.max.is_finite() && a.bubble.max >= a.bubble.median);
    }

    #[test]
    fn nonconforming_input_is_rejected() {
        let mesh = d2();
        let mut u = PiecewiseForm::zero(mesh, 0);
        u.set_cell(0, Form::constant(2, one()));
        assert!(matches!(decompose(mesh, d2_weights(), &u), Err(Error::Nonconforming(_))));
    }
}
