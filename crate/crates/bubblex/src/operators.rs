//! Integral operators built from the contraction G_f(y, λ) = Σ_i λ_i x_i + b(λ) y:
//! averages A_f, order reductions R_{e,f} and the auxiliary Q_{e,f}.
//!
//! The combined variable space lists y_0..y_{n-1} first and λ_0..λ_{|f|-1}
//! after. A mixed basis element dy_J ∧ dλ_L is read as dy_J ⊗ dλ_L: d_Ω acts
//! on the first factor, d_S on the second, and pairing with a weight wedges
//! only the y-part.

use std::collections::{BTreeMap, BTreeSet};

use crate::chains::Chain;
use crate::error::{Error, Result};
use crate::form::{wedge_sign, Form, Mask};
use crate::mesh::Mesh;
use crate::poly::{Mono, Poly};
use crate::polyform::{b_poly, whitney_sum_on_cell, PiecewiseForm, RefForm, Space};
use crate::rational::Q;
use crate::report::Checklist;
use crate::simplex::Simplex;
use crate::weights::WeightSystem;

/// Substitution x = G_f(y, λ) on one cell, as polynomials in the combined variables.
pub fn contraction_map(mesh: &Mesh, f: &Simplex) -> Vec<Poly> {
    let n = mesh.dim();
    let nv = n + f.len();
    let b = b_poly(f.len()).remap(nv, &(n..nv).collect::<Vec<_>>());
    (0..n)
        .map(|a| {
            let mut s = b.mul(&Poly::var(nv, a));
            for (i, &v) in f.verts().iter().enumerate() {
                s.add_scaled(&mesh.coords(v)[a], &Poly::var(nv, n + i));
            }
            s
        })
        .collect()
}

/// G_f^* of a cell form, in the combined variables.
pub fn contraction_pullback(mesh: &Mesh, form: &Form, f: &Simplex) -> Form {
    form.pullback(&contraction_map(mesh, f), mesh.dim() + f.len())
}

/// Π_j: the terms with exactly j of the first n differentials.
pub fn bidegree_part(form: &Form, n: usize, j: usize) -> Form {
    let ymask: Mask = (1 << n) - 1;
    let mut out = Form::zero(form.nvars(), form.degree());
    for (m, p) in form.terms() {
        if (m & ymask).count_ones() as usize == j {
            out.add_term(*m, p.clone());
        }
    }
    out
}

/// Exterior derivative in the y-variables only (acts on the dy_J factor).
pub fn d_omega(form: &Form, n: usize) -> Form {
    partial_d(form, 0..n, 0)
}

/// Exterior derivative in the λ-variables only, acting on the dλ_L factor.
pub fn d_s(form: &Form, n: usize) -> Form {
    partial_d(form, n..form.nvars(), n)
}

fn partial_d(form: &Form, vars: std::ops::Range<usize>, skip_below: usize) -> Form {
    let mut out = Form::zero(form.nvars(), form.degree() + 1);
    for (m, p) in form.terms() {
        for v in vars.clone() {
            if m & (1 << v) != 0 {
                continue;
            }
            let dp = p.derivative(v);
            if dp.is_zero() {
                continue;
            }
            // sign of moving dv past the basis factors between skip_below and v
            let between = (m & ((1 << v) - 1) & !((1u32 << skip_below) - 1)).count_ones();
            out.add_term(m | (1 << v), if between.is_multiple_of(2) { dp } else { dp.neg() });
        }
    }
    out
}

struct Split {
    ymask: Mask,
    lmask: Mask,
    coeff: Poly,
}

/// G_f^* u on every cell of Ω_f, grouped by y-degree, ready to pair with weights.
pub struct Contraction {
    anchor: Simplex,
    n: usize,
    k: usize,
    cells: BTreeMap<usize, Vec<Vec<Split>>>,
}

impl Contraction {
    pub fn new(mesh: &Mesh, u: &PiecewiseForm, f: &Simplex) -> Result<Contraction> {
        let n = mesh.dim();
        if u.dim() != n || u.cells().len() != mesh.num_cells() {
            return Err(Error::MeshMismatch(format!("form of dimension {} on mesh of dimension {n}", u.dim())));
        }
        let star = mesh.try_star(f)?;
        let k = u.degree();
        let subst = contraction_map(mesh, f);
        let nv = n + f.len();
        let ymask: Mask = (1 << n) - 1;
        let mut cells = BTreeMap::new();
        for &c in star {
            let pulled = u.cell(c).pullback(&subst, nv);
            let mut groups: Vec<Vec<Split>> = (0..=k).map(|_| Vec::new()).collect();
            for (m, p) in pulled.terms() {
                let j = (m & ymask).count_ones() as usize;
                groups[j].push(Split { ymask: m & ymask, lmask: m >> n, coeff: p.clone() });
            }
            cells.insert(c, groups);
        }
        Ok(Contraction { anchor: f.clone(), n, k, cells })
    }

    pub fn anchor(&self) -> &Simplex {
        &self.anchor
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// λ ↦ ∫_Ω (Π_j G_f^* u)_λ ∧ weight, with the weight given per cell.
    pub fn pair_with(&self, mesh: &Mesh, weight: impl Fn(usize) -> Form, support: &[usize], j: usize) -> Result<RefForm> {
        let n = self.n;
        if j > self.k || j > n {
            return Err(Error::DegreeMismatch(format!("bidegree {j} exceeds form degree {}", self.k)));
        }
        let nl = self.anchor.len();
        let mut out = Form::zero(nl, self.k - j);
        let full: Mask = (1 << n) - 1;
        for &c in support {
            let groups = self.cells.get(&c).ok_or_else(|| {
                Error::IndexMismatch(format!("weight is nonzero on cell {c} outside the star of {}", self.anchor))
            })?;
            let w = weight(c);
            if w.is_zero() {
                continue;
            }
            if w.degree() != n - j {
                return Err(Error::DegreeMismatch(format!("weight degree {} but expected {}", w.degree(), n - j)));
            }
            for split in &groups[j] {
                let comp = full ^ split.ymask;
                let wz = w.coeff(comp);
                if wz.is_zero() {
                    continue;
                }
                let mut integral = integrate_y(mesh, c, &split.coeff, &wz, n, nl);
                if wedge_sign(split.ymask, comp) < 0 {
                    integral = integral.neg();
                }
                out.add_term(split.lmask, integral);
            }
        }
        Ok(RefForm::new(self.anchor.clone(), out))
    }

    /// Pairing with a piecewise weight form; the weight must vanish outside Ω_f.
    pub fn pair_with_form(&self, mesh: &Mesh, weight: &PiecewiseForm, j: usize) -> Result<RefForm> {
        let support = weight.support();
        self.pair_with(mesh, |c| weight.cell(c).clone(), &support, j)
    }

    /// Pairing with Σ c_g φ_g.
    pub fn pair_with_chain(&self, mesh: &Mesh, weight: &Chain, j: usize) -> Result<RefForm> {
        let mut support = BTreeSet::new();
        for (g, _) in weight.iter() {
            support.extend(mesh.try_star(g)?.iter().copied());
        }
        let support: Vec<usize> = support.into_iter().collect();
        self.pair_with(mesh, |c| whitney_sum_on_cell(mesh, c, weight), &support, j)
    }

    /// A_f^k u.
    pub fn average(&self, mesh: &Mesh, ws: &WeightSystem) -> Result<RefForm> {
        self.pair_with_chain(mesh, ws.z_avg(&self.anchor)?, 0)
    }

    /// R_{e,f}^k u; `None` when j > k.
    pub fn reduce(&self, mesh: &Mesh, ws: &WeightSystem, e: &Simplex) -> Result<Option<RefForm>> {
        if e.is_empty() {
            return Err(Error::IndexMismatch(format!("R needs a nonempty e (anchor {})", self.anchor)));
        }
        let j = e.dim() as usize;
        let z = ws.z_pair(e, &self.anchor)?;
        if j > self.k {
            return Ok(None);
        }
        self.pair_with_chain(mesh, z, j).map(Some)
    }

    /// Q_{e,f}^k u; `None` when j + 1 > k.
    pub fn reduce_q(&self, mesh: &Mesh, ws: &WeightSystem, e: &Simplex) -> Result<Option<RefForm>> {
        let j = (e.dim() + 1) as usize;
        let w = ws.w_pair(e, &self.anchor)?;
        if j > self.k {
            return Ok(None);
        }
        self.pair_with_chain(mesh, w, j).map(Some)
    }
}

/// ∫_T c(y, λ) w(y) dy as a polynomial in λ.
fn integrate_y(mesh: &Mesh, cell: usize, c: &Poly, w: &Poly, n: usize, nl: usize) -> Poly {
    let nv = n + nl;
    let mut out = Poly::zero(nl);
    for (wm, wc) in w.terms() {
        for (cm, cc) in c.terms() {
            let exps = cm.exps(nv);
            let ymono = Mono::from_exps(&exps[..n]).mul(*wm);
            let lmono = Mono::from_exps(&exps[n..]);
            let mom = mesh.moment(cell, ymono);
            if mom == num_traits::Zero::zero() {
                continue;
            }
            out.add_term(lmono, mom * cc * wc);
        }
    }
    out
}

/// λ ↦ ∫_Ω (Π_j G_f^* u)_λ ∧ weight.
pub fn generic_reduce(mesh: &Mesh, u: &PiecewiseForm, weight: &PiecewiseForm, f: &Simplex, j: usize) -> Result<RefForm> {
    Contraction::new(mesh, u, f)?.pair_with_form(mesh, weight, j)
}

/// A_f^k u = ∫ G_f^* u ∧ z_f.
pub fn average(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, f: &Simplex) -> Result<RefForm> {
    Contraction::new(mesh, u, f)?.average(mesh, ws)
}

/// R_{e,f}^k u; `None` stands for the zero operator when dim e > k.
pub fn reduce(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, e: &Simplex, f: &Simplex) -> Result<Option<RefForm>> {
    Contraction::new(mesh, u, f)?.reduce(mesh, ws, e)
}

/// Q_{e,f}^k u; `None` when dim e + 1 > k.
pub fn reduce_q(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, e: &Simplex, f: &Simplex) -> Result<Option<RefForm>> {
    Contraction::new(mesh, u, f)?.reduce_q(mesh, ws, e)
}

/// Names of the operator-relation certificates.
pub mod relation {
    pub const REDUCTION_D: &str = "relations.reduction_d";
    pub const CO_PLUS: &str = "relations.reduction_co_plus";
    pub const Q_CO_PLUS: &str = "relations.q_co_plus";
    pub const DIVISIBLE: &str = "relations.divisibility";
    pub const SPLIT_D: &str = "relations.contraction_d";
    pub const PSI: &str = "relations.psi_reduction";
    pub const TOP_Q: &str = "relations.top_q";
    pub const ALL: [&str; 7] = [REDUCTION_D, CO_PLUS, Q_CO_PLUS, DIVISIBLE, SPLIT_D, PSI, TOP_Q];
}

type PairMap = BTreeMap<(Simplex, Simplex), RefForm>;

/// R and Q of one input over every admissible pair; absent keys are zero operators.
struct Reductions {
    r: PairMap,
    q: PairMap,
}

impl Reductions {
    fn build(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm) -> Result<(BTreeMap<Simplex, Contraction>, Reductions)> {
        let n = mesh.dim() as isize;
        let mut cs = BTreeMap::new();
        let mut red = Reductions { r: BTreeMap::new(), q: BTreeMap::new() };
        for m in -1..=n {
            for f in mesh.simplices(m) {
                let c = Contraction::new(mesh, u, f)?;
                // j = −1 only feeds Q_{∅,f}, which is needed up to the cells
                let top = if m == n { -1 } else { n - m - 1 };
                for j in -1..=top {
                    for (e, _) in mesh.pairs(j, m).into_iter().filter(|(_, g)| g == f) {
                        if j >= 0 {
                            if let Some(r) = c.reduce(mesh, ws, &e)? {
                                red.r.insert((e.clone(), f.clone()), r);
                            }
                        }
                        if !f.is_empty() {
                            if let Some(q) = c.reduce_q(mesh, ws, &e)? {
                                red.q.insert((e, f.clone()), q);
                            }
                        }
                    }
                }
                cs.insert(f.clone(), c);
            }
        }
        Ok((cs, red))
    }

    fn r(&self, e: &Simplex, f: &Simplex, deg: usize) -> RefForm {
        self.r.get(&(e.clone(), f.clone())).cloned().unwrap_or_else(|| RefForm::zero(f, deg))
    }

    fn q(&self, e: &Simplex, f: &Simplex, deg: usize) -> RefForm {
        self.q.get(&(e.clone(), f.clone())).cloned().unwrap_or_else(|| RefForm::zero(f, deg))
    }
}

fn wedge_cells(mesh: &Mesh, a: &PiecewiseForm, b: &PiecewiseForm) -> PiecewiseForm {
    let cells = (0..mesh.num_cells()).map(|c| a.cell(c).wedge(b.cell(c))).collect();
    PiecewiseForm::from_cells(mesh.dim(), a.degree() + b.degree(), cells)
}

/// Exact check of the relations between A, R and Q for one conforming input:
/// R du = (−1)^j dR u − δR u, δ⁺R = 0 (j ≥ 1), δ⁺Q = R, divisibility of R by
/// b^j and of Q by b^{j+1} with quotients in `space`, the splitting of d under
/// G_f^*, the ψ-identity and the top-level Q identity on each star.
pub fn certify_relations(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, space: Option<Space>) -> Checklist {
    let mut ck = Checklist::new();
    for name in relation::ALL {
        ck.touch(name);
    }
    if let Err(e) = relations_into(mesh, ws, u, space, &mut ck) {
        ck.fail(relation::REDUCTION_D, format!("could not evaluate: {e}"));
    }
    ck
}

fn relations_into(mesh: &Mesh, ws: &WeightSystem, u: &PiecewiseForm, space: Option<Space>, ck: &mut Checklist) -> Result<()> {
    use crate::rational::sign_pow;
    use crate::simplex::alt;
    let n = mesh.dim() as isize;
    let k = u.degree();
    let ki = k as isize;
    let sgn = |i: usize| Q::from_integer(alt(i).into());
    let (cs, ru) = Reductions::build(mesh, ws, u)?;
    let du = if k < mesh.dim() { Some(u.d()) } else { None };
    let rdu = match &du {
        Some(du) => Some(Reductions::build(mesh, ws, du)?.1),
        None => None,
    };

    if let Some(rdu) = &rdu {
        for m in -1..n {
            for j in 0..(n - m).min(ki + 2) {
                let ju = j as usize;
                for (e, f) in mesh.pairs(j, m) {
                    let lhs = rdu.r(&e, &f, k + 1 - ju);
                    let mut rhs = ru.r.get(&(e.clone(), f.clone())).map(|r| r.d().scale(&sign_pow(j as i64))).unwrap_or_else(|| RefForm::zero(&f, k + 1 - ju));
                    if j >= 1 {
                        for i in 0..e.len() {
                            rhs = rhs.sub(&ru.r(&e.without_index(i), &f, k + 1 - ju).scale(&sgn(i)))?;
                        }
                    }
                    ck.record(relation::REDUCTION_D, lhs == rhs, || format!("k={k} (e,f)=({e},{f})"));
                }
            }
        }
    }

    for m in -1..n {
        for j in 1..=(ki + 1).min(n - m - 1) {
            let deg = k + 1 - j as usize;
            for (e, f) in mesh.pairs(j, m) {
                let mut sum = Form::zero(f.len(), deg);
                for (i, &x) in e.verts().iter().enumerate() {
                    let r = ru.r(&e.without_index(i), &f.with_vertex(x), deg);
                    sum.add_scaled(&sgn(i), r.restrict_to_face(&f)?.form());
                }
                ck.record(relation::CO_PLUS, sum.is_zero(), || format!("k={k} (e,f)=({e},{f})"));
            }
        }
        for j in 0..=ki.min(n - m - 1) {
            let deg = k - j as usize;
            for (e, f) in mesh.pairs(j, m) {
                let mut sum = Form::zero(f.len(), deg);
                for (i, &x) in e.verts().iter().enumerate() {
                    let qv = ru.q(&e.without_index(i), &f.with_vertex(x), deg);
                    sum.add_scaled(&sgn(i), qv.restrict_to_face(&f)?.form());
                }
                ck.record(relation::Q_CO_PLUS, &sum == ru.r(&e, &f, deg).form(), || format!("k={k} (e,f)=({e},{f})"));
            }
        }
    }

    for ((e, f), r) in &ru.r {
        let ok = r.divide_by_b(e.dim() as usize).is_ok_and(|quot| space.is_none_or(|s| quot.membership(s)));
        ck.record(relation::DIVISIBLE, ok, || format!("R k={k} (e,f)=({e},{f})"));
    }
    for ((e, f), qv) in &ru.q {
        let j = (e.dim() + 1) as usize;
        let ok = qv.divide_by_b(j).is_ok_and(|quot| space.is_none_or(|s| quot.membership(s)));
        ck.record(relation::DIVISIBLE, ok, || format!("Q k={k} (e,f)=({e},{f})"));
    }

    if let Some(du) = &du {
        let nn = mesh.dim();
        for f in cs.keys().filter(|f| !f.is_empty()) {
            for &c in mesh.star(f) {
                let g = contraction_pullback(mesh, u.cell(c), f);
                let gd = contraction_pullback(mesh, du.cell(c), f);
                for j in 0..=k + 1 {
                    let mut lhs = if j >= 1 { d_omega(&bidegree_part(&g, nn, j - 1), nn) } else { Form::zero(g.nvars(), k + 1) };
                    lhs.add_scaled(&sign_pow(j as i64), &d_s(&bidegree_part(&g, nn, j), nn));
                    ck.record(relation::SPLIT_D, lhs == bidegree_part(&gd, nn, j), || format!("k={k} f={f} cell={c} j={j}"));
                }
            }
        }
    }

    let lg = |g: &Simplex, r: &RefForm| crate::polyform::pullback_corner(mesh, g, r);
    for m in 0..n {
        for j in 0..(n - m).min(ki + 1) {
            for s_dim in -1..m {
                for g in mesh.simplices(s_dim) {
                    let mut lhs = PiecewiseForm::zero(mesh, k);
                    for (e, f) in mesh.pairs(j, m).into_iter().filter(|(_, f)| g.is_face_of(f)) {
                        let psi = crate::polyform::whitney_sum(mesh, &ws.psi(&e, g, &f)?);
                        lhs.add_assign(&wedge_cells(mesh, &psi, &lg(g, &ru.r(&e, &f, k - j as usize))?));
                    }
                    let mut rhs = PiecewiseForm::zero(mesh, k);
                    for (e, f) in mesh.pairs(j, m - 1).into_iter().filter(|(_, f)| g.is_face_of(f)) {
                        let phi = crate::polyform::whitney(mesh, &e)?;
                        rhs.add_assign(&wedge_cells(mesh, &phi, &lg(g, &ru.r(&e, &f, k - j as usize))?));
                    }
                    ck.record(relation::PSI, lhs == rhs, || format!("k={k} m={m} j={j} g={g}"));
                }
            }
        }
    }

    if let Some(rdu) = &rdu {
        for m in 1..=n {
            let j = n - m;
            let ju = j as usize;
            if ju > k {
                continue;
            }
            for f in mesh.simplices(m - 1) {
                let link = mesh.link(f)?;
                let star = mesh.star(f).to_vec();
                for g in f.all_faces() {
                    let mut lhs = PiecewiseForm::zero(mesh, k);
                    let mut rhs = PiecewiseForm::zero(mesh, k);
                    for e in link.simplices(j) {
                        let deg = k - ju;
                        let mut inner = rdu.q(e, f, deg).scale(&sign_pow(j as i64 + 1));
                        if let Some(qv) = ru.q.get(&(e.clone(), f.clone())) {
                            inner = inner.sub(&qv.d())?;
                        }
                        let phi = crate::polyform::whitney(mesh, e)?;
                        lhs.add_assign(&wedge_cells(mesh, &phi, &lg(&g, &inner)?));
                        let beta = crate::polyform::whitney_sum(mesh, &ws.beta(e, f)?);
                        rhs.add_assign(&wedge_cells(mesh, &beta, &lg(&g, &ru.r(e, f, deg))?));
                    }
                    ck.record(relation::TOP_Q, lhs.restrict_to(&star) == rhs.restrict_to(&star), || format!("k={k} f={f} g={g}"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyform::{pullback_corner, Space};
    use crate::random::random_form;
    use crate::rational::{one, q, sign_pow};
    use crate::testutil::{d2, d2_weights, d3, d3_weights, s};

    fn fixtures() -> [(&'static Mesh, &'static WeightSystem); 2] {
        [(d2(), d2_weights()), (d3(), d3_weights())]
    }

    fn anchors(mesh: &Mesh) -> Vec<Simplex> {
        (-1..mesh.dim() as isize).flat_map(|m| mesh.simplices(m).to_vec()).collect()
    }

    #[test]
    fn averages_reproduce_constants() {
        for (mesh, ws) in fixtures() {
            let u = PiecewiseForm::constant(mesh, q(3));
            for f in anchors(mesh) {
                let a = average(mesh, ws, &u, &f).unwrap();
                assert_eq!(a.form(), &Form::constant(f.len(), q(3)), "anchor {f}");
            }
        }
    }

    #[test]
    fn diamond_dx1_average_vanishes_by_symmetry() {
        let mesh = d2();
        let dx1 = PiecewiseForm::global(mesh, &Form::basis(2, &[1], Poly::one(2)));
        let a = average(mesh, d2_weights(), &dx1, &s(&[0])).unwrap();
        assert_eq!(a.degree(), 1);
        assert!(a.is_zero());
        // bidegree (k, 0) gives a 0-form in λ
        let z = d2_weights().z_pair(&s(&[1, 2]), &s(&[0])).unwrap();
        let r = Contraction::new(mesh, &dx1, &s(&[0])).unwrap().pair_with_chain(mesh, z, 1).unwrap();
        assert_eq!(r.degree(), 0);
    }

    #[test]
    fn degree_mismatch_is_reported() {
        let mesh = d2();
        let u = PiecewiseForm::constant(mesh, one());
        let w = PiecewiseForm::constant(mesh, one());
        assert!(matches!(generic_reduce(mesh, &u, &w, &s(&[0]), 1), Err(Error::DegreeMismatch(_))));
        assert!(matches!(generic_reduce(mesh, &u, &w, &s(&[0]), 0), Err(Error::DegreeMismatch(_))));
    }

    #[test]
    fn averages_commute_with_d() {
        for (mesh, ws) in fixtures() {
            for k in 0..mesh.dim() {
                let u = random_form(mesh, k, 2, false, 11 + k as u64);
                let du = u.d();
                for f in anchors(mesh) {
                    let a = average(mesh, ws, &u, &f).unwrap();
                    let ad = average(mesh, ws, &du, &f).unwrap();
                    assert_eq!(a.d(), ad, "k={k} f={f}");
                }
            }
        }
    }

    #[test]
    fn averages_reproduce_traces() {
        let mesh = d2();
        let ws = d2_weights();
        let f = s(&[0, 1]);
        let u = crate::polyform::hat(mesh, 0).unwrap();
        let lf = pullback_corner(mesh, &f, &average(mesh, ws, &u, &f).unwrap()).unwrap();
        assert_eq!(lf.trace(mesh, &f).unwrap(), u.trace(mesh, &f).unwrap());
        for (mesh, ws) in fixtures() {
            for k in 0..=mesh.dim() {
                let u = random_form(mesh, k, 2, false, 5 + k as u64);
                for m in k..mesh.dim() {
                    for f in mesh.simplices(m as isize) {
                        let lf = pullback_corner(mesh, f, &average(mesh, ws, &u, f).unwrap()).unwrap();
                        for &c in mesh.star(f) {
                            assert_eq!(lf.trace_from(mesh, c, f), u.trace_from(mesh, c, f), "k={k} f={f}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn vertex_reduction_is_minus_average_on_the_face() {
        for (mesh, ws) in fixtures() {
            for k in 0..=mesh.dim() {
                let u = random_form(mesh, k, 2, false, 21 + k as u64);
                for m in -1..mesh.dim() as isize {
                    for (e, f) in mesh.pairs(0, m) {
                        let r = reduce(mesh, ws, &u, &e, &f).unwrap().unwrap();
                        let a = average(mesh, ws, &u, &e.join(&f)).unwrap().restrict_to_face(&f).unwrap();
                        assert_eq!(r, a.scale(&q(-1)), "k={k} ({e},{f})");
                    }
                }
            }
        }
    }

    /// d_Ω Π_{j−1}G^*u + (−1)^j d_S Π_j G^*u = Π_j G^* du on monomial inputs.
    #[test]
    fn contraction_splits_d() {
        for mesh in [d2(), d3()] {
            let n = mesh.dim();
            for f in anchors(mesh).into_iter().filter(|f| !f.is_empty()) {
                for k in 0..n {
                    for mask in crate::form::basis_masks(n, k) {
                        for exps in [[1u32, 0, 0], [0, 2, 0], [1, 1, 1]] {
                            let u = Form::basis(n, &crate::form::mask_indices(mask), Poly::monomial(n, Mono::from_exps(&exps[..n]), one()));
                            let g = contraction_pullback(mesh, &u, &f);
                            let gd = contraction_pullback(mesh, &u.d(), &f);
                            for j in 0..=k + 1 {
                                let mut lhs = if j >= 1 { d_omega(&bidegree_part(&g, n, j - 1), n) } else { Form::zero(g.nvars(), k + 1) };
                                lhs.add_scaled(&sign_pow(j as i64), &d_s(&bidegree_part(&g, n, j), n));
                                assert_eq!(lhs, bidegree_part(&gd, n, j), "f={f} k={k} j={j}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn relations_hold_on_random_inputs() {
        for (mesh, ws) in fixtures() {
            for k in 0..=mesh.dim() {
                for (r, trimmed) in [(1, false), (2, false), (2, true)] {
                    let u = random_form(mesh, k, r, trimmed, 31 + k as u64 + 7 * r as u64);
                    let space = if trimmed { Space::Trimmed(r) } else { Space::Full(r) };
                    let ck = certify_relations(mesh, ws, &u, Some(space));
                    assert!(ck.all_passed(), "k={k} r={r} trimmed={trimmed}: {:?}", ck.failures().collect::<Vec<_>>());
                    assert_eq!(ck.checks.len(), relation::ALL.len());
                }
            }
        }
    }

    #[test]
    fn corrupted_weights_break_a_relation() {
        let mesh = d2();
        let mut ws = d2_weights().clone();
        let (e, f) = (s(&[1, 2]), s(&[0]));
        let mut w = ws.w_pair(&e, &f).unwrap().clone();
        let target = mesh.simplices(w.degree())[0].clone();
        w.add_at(&target, &one(), &one());
        ws.set_w(e, f, w);
        let u = random_form(mesh, 1, 2, false, 3);
        assert!(!certify_relations(mesh, &ws, &u, Some(Space::Full(2))).all_passed());
    }
}
