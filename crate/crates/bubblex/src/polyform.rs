//! Piecewise polynomial forms on a mesh and polynomial forms on corner simplices.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::chains::Chain;
use crate::error::{Error, Result};
use crate::form::{basis_masks, Form};
use crate::linalg::Vector;
use crate::mesh::Mesh;
use crate::poly::Poly;
use crate::rational::{factorial, Q};
use crate::simplex::{alt, Simplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Conformity {
    Unchecked,
    Conforming,
    Nonconforming,
}

/// A k-form given per cell in Cartesian coordinates.
#[derive(Debug, Clone)]
pub struct PiecewiseForm {
    n: usize,
    k: usize,
    cells: Vec<Form>,
    pub conformity: Conformity,
}

impl PartialEq for PiecewiseForm {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.k == o.k && self.cells == o.cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Full(u32),
    Trimmed(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformityReport {
    pub conforming: bool,
    pub witness: Option<Simplex>,
}

impl PiecewiseForm {
    pub fn zero(mesh: &Mesh, k: usize) -> PiecewiseForm {
        let n = mesh.dim();
        PiecewiseForm { n, k, cells: vec![Form::zero(n, k); mesh.num_cells()], conformity: Conformity::Unchecked }
    }

    pub fn from_cells(n: usize, k: usize, cells: Vec<Form>) -> PiecewiseForm {
        assert!(cells.iter().all(|c| c.nvars() == n && c.degree() == k));
        PiecewiseForm { n, k, cells, conformity: Conformity::Unchecked }
    }

    /// The same polynomial form on every cell.
    pub fn global(mesh: &Mesh, f: &Form) -> PiecewiseForm {
        PiecewiseForm::from_cells(mesh.dim(), f.degree(), vec![f.clone(); mesh.num_cells()])
    }

    pub fn constant(mesh: &Mesh, c: Q) -> PiecewiseForm {
        PiecewiseForm::global(mesh, &Form::constant(mesh.dim(), c))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn cells(&self) -> &[Form] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &Form {
        &self.cells[c]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut Form {
        self.conformity = Conformity::Unchecked;
        &mut self.cells[c]
    }

    pub fn set_cell(&mut self, c: usize, f: Form) {
        assert_eq!(f.degree(), self.k);
        self.conformity = Conformity::Unchecked;
        self.cells[c] = f;
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|c| c.is_zero())
    }

    /// Cells on which the form does not vanish.
    pub fn support(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| !self.cells[c].is_zero()).collect()
    }

    pub fn max_poly_degree(&self) -> Option<u32> {
        self.cells.iter().filter_map(|c| c.poly_degree()).max()
    }

    fn zip(&self, o: &PiecewiseForm, f: impl Fn(&Form, &Form) -> Form) -> PiecewiseForm {
        assert_eq!(self.cells.len(), o.cells.len(), "forms on different meshes");
        let cells: Vec<Form> = self.cells.iter().zip(&o.cells).map(|(a, b)| f(a, b)).collect();
        let k = cells.first().map_or(self.k, |c| c.degree());
        PiecewiseForm { n: self.n, k, cells, conformity: Conformity::Unchecked }
    }

    pub fn add(&self, o: &PiecewiseForm) -> PiecewiseForm {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &PiecewiseForm) -> PiecewiseForm {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn add_assign(&mut self, o: &PiecewiseForm) {
        self.add_scaled(&Q::one(), o);
    }

    pub fn add_scaled(&mut self, s: &Q, o: &PiecewiseForm) {
        assert_eq!(self.cells.len(), o.cells.len());
        for (a, b) in self.cells.iter_mut().zip(&o.cells) {
            a.add_scaled(s, b);
        }
        self.conformity = Conformity::Unchecked;
    }

    pub fn scale(&self, s: &Q) -> PiecewiseForm {
        PiecewiseForm { n: self.n, k: self.k, cells: self.cells.iter().map(|c| c.scale(s)).collect(), conformity: self.conformity }
    }

    pub fn neg(&self) -> PiecewiseForm {
        self.scale(&-Q::one())
    }

    pub fn wedge(&self, o: &PiecewiseForm) -> Result<PiecewiseForm> {
        if self.cells.len() != o.cells.len() || self.n != o.n {
            return Err(Error::MeshMismatch("wedge operands".into()));
        }
        if self.k + o.k > self.n {
            return Err(Error::DegreeOverflow(format!("{} + {} > {}", self.k, o.k, self.n)));
        }
        Ok(self.zip(o, |a, b| a.wedge(b)))
    }

    pub fn d(&self) -> PiecewiseForm {
        PiecewiseForm {
            n: self.n,
            k: self.k + 1,
            cells: self.cells.iter().map(|c| c.d()).collect(),
            conformity: Conformity::Unchecked,
        }
    }

    pub fn koszul(&self) -> PiecewiseForm {
        PiecewiseForm {
            n: self.n,
            k: self.k.saturating_sub(1),
            cells: self.cells.iter().map(|c| c.koszul()).collect(),
            conformity: Conformity::Unchecked,
        }
    }

    /// Keeps the given cells and zeroes the others.
    pub fn restrict_to(&self, keep: &[usize]) -> PiecewiseForm {
        let keep: BTreeSet<usize> = keep.iter().copied().collect();
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| if keep.contains(&i) { c.clone() } else { Form::zero(self.n, self.k) })
            .collect();
        PiecewiseForm { n: self.n, k: self.k, cells, conformity: Conformity::Unchecked }
    }

    /// Trace onto the face `g` of `cell`, in the affine coordinates of g's ordered vertices.
    pub fn trace_from(&self, mesh: &Mesh, cell: usize, g: &Simplex) -> Form {
        trace_form(mesh, &self.cells[cell], g)
    }

    /// Trace onto `g` taken from the first cell of its star.
    pub fn trace(&self, mesh: &Mesh, g: &Simplex) -> Result<Form> {
        mesh.check(g)?;
        let c = *mesh.star(g).first().ok_or_else(|| Error::UnknownSimplex(g.to_string()))?;
        Ok(self.trace_from(mesh, c, g))
    }

    /// Compares traces from all adjacent cells on every shared face of dimension ≥ k.
    pub fn conformity_check(&self, mesh: &Mesh) -> ConformityReport {
        let n = mesh.dim() as isize;
        for d in (self.k as isize..n).rev() {
            for g in mesh.simplices(d) {
                let star = mesh.star(g);
                if star.len() < 2 {
                    continue;
                }
                let first = self.trace_from(mesh, star[0], g);
                for &c in &star[1..] {
                    if self.trace_from(mesh, c, g) != first {
                        return ConformityReport { conforming: false, witness: Some(g.clone()) };
                    }
                }
            }
        }
        ConformityReport { conforming: true, witness: None }
    }

    /// Runs the conformity check and records the result.
    pub fn certify_conformity(&mut self, mesh: &Mesh) -> ConformityReport {
        let r = self.conformity_check(mesh);
        self.conformity = if r.conforming { Conformity::Conforming } else { Conformity::Nonconforming };
        r
    }

    pub fn require_conforming(&self, mesh: &Mesh) -> Result<()> {
        match self.conformity {
            Conformity::Conforming => Ok(()),
            Conformity::Nonconforming => Err(Error::Nonconforming("previously recorded".into())),
            Conformity::Unchecked => {
                let r = self.conformity_check(mesh);
                match r.witness {
                    None => Ok(()),
                    Some(w) => Err(Error::Nonconforming(w.to_string())),
                }
            }
        }
    }

    /// ∫_Ω of an n-form with the standard orientation.
    pub fn integrate(&self, mesh: &Mesh) -> Result<Q> {
        if self.k != self.n {
            return Err(Error::DegreeMismatch(format!("integrating a {}-form over a {}-domain", self.k, self.n)));
        }
        let top = (1u32 << self.n) - 1;
        Ok((0..self.cells.len()).fold(Q::zero(), |s, c| s + mesh.integrate_poly(c, &self.cells[c].coeff(top))))
    }

    pub fn integrate_cell(&self, mesh: &Mesh, cell: usize) -> Result<Q> {
        if self.k != self.n {
            return Err(Error::DegreeMismatch(format!("integrating a {}-form over a {}-cell", self.k, self.n)));
        }
        Ok(mesh.integrate_poly(cell, &self.cells[cell].coeff((1u32 << self.n) - 1)))
    }

    pub fn l2_inner(&self, mesh: &Mesh, o: &PiecewiseForm) -> Result<Q> {
        if self.k != o.k {
            return Err(Error::DegreeMismatch(format!("{} vs {}", self.k, o.k)));
        }
        if self.cells.len() != o.cells.len() {
            return Err(Error::MeshMismatch("l2_inner operands".into()));
        }
        let mut total = Q::zero();
        for c in 0..self.cells.len() {
            total += l2_cell(mesh, c, &self.cells[c], &o.cells[c]);
        }
        Ok(total)
    }

    pub fn l2_norm_sq_on(&self, mesh: &Mesh, cells: &[usize]) -> Q {
        cells.iter().fold(Q::zero(), |s, &c| s + l2_cell(mesh, c, &self.cells[c], &self.cells[c]))
    }

    pub fn membership(&self, space: Space) -> bool {
        self.cells.iter().all(|c| form_in_space(c, space))
    }

    /// Value at a point of a given cell, as a constant form.
    pub fn eval(&self, cell: usize, x: &[Q]) -> Form {
        self.cells[cell].eval(x)
    }
}

pub fn l2_cell(mesh: &Mesh, cell: usize, a: &Form, b: &Form) -> Q {
    let mut p = Poly::zero(mesh.dim());
    for (m, pa) in a.terms() {
        let pb = b.coeff(*m);
        if !pb.is_zero() {
            p.add_assign(&pa.mul(&pb));
        }
    }
    mesh.integrate_poly(cell, &p)
}

/// Membership of one polynomial form in P_r or P_r⁻ (Koszul about the origin).
pub fn form_in_space(f: &Form, space: Space) -> bool {
    let (r, trimmed) = match space {
        Space::Full(r) => (r, false),
        Space::Trimmed(r) => (r, true),
    };
    match f.poly_degree() {
        None => true,
        Some(d) if d > r => false,
        Some(_) => !trimmed || f.homogeneous_part(r).koszul().is_zero(),
    }
}

pub fn trace_form(mesh: &Mesh, f: &Form, g: &Simplex) -> Form {
    let n = mesh.dim();
    let d = g.len().saturating_sub(1);
    let v0 = mesh.coords(g.verts()[0]);
    let subst: Vec<Poly> = (0..n)
        .map(|a| {
            let lin: Vec<Q> = (1..g.len()).map(|i| &mesh.coords(g.verts()[i])[a] - &v0[a]).collect();
            Poly::affine(v0[a].clone(), &lin)
        })
        .collect();
    f.pullback(&subst, d)
}

/// dλ_v on a cell as a constant 1-form.
pub fn dhat_on_cell(mesh: &Mesh, cell: usize, v: u32) -> Form {
    let n = mesh.dim();
    Form::one_form(mesh.hat_grad(cell, v).into_iter().map(|g| Poly::constant(n, g)).collect())
}

/// Whitney form φ_f on one cell (zero if f is not a face of it).
pub fn whitney_on_cell(mesh: &Mesh, cell: usize, f: &Simplex) -> Form {
    let n = mesh.dim();
    let m = f.dim();
    if m < 0 {
        return Form::constant(n, Q::one());
    }
    let m = m as usize;
    if !f.is_face_of(&mesh.cells()[cell]) {
        return Form::zero(n, m);
    }
    let d: Vec<Form> = f.verts().iter().map(|&v| dhat_on_cell(mesh, cell, v)).collect();
    let mut out = Form::zero(n, m);
    for i in 0..=m {
        let mut w = Form::scalar(mesh.hat(cell, f.verts()[i]));
        for (l, dl) in d.iter().enumerate() {
            if l != i {
                w = w.wedge(dl);
            }
        }
        out.add_scaled(&Q::from_integer(alt(i).into()), &w);
    }
    out.scale(&Q::from_integer(factorial(m)))
}

pub fn whitney(mesh: &Mesh, f: &Simplex) -> Result<PiecewiseForm> {
    mesh.check(f)?;
    if f.is_empty() {
        return Err(Error::UnknownSimplex("Whitney form of ∅".into()));
    }
    let cells = (0..mesh.num_cells()).map(|c| whitney_on_cell(mesh, c, f)).collect();
    Ok(PiecewiseForm::from_cells(mesh.dim(), f.len() - 1, cells))
}

pub fn hat(mesh: &Mesh, v: u32) -> Result<PiecewiseForm> {
    whitney(mesh, &Simplex::vertex(v))
}

/// ρ_f = 1 - Σ_{i∈I(f)} λ_i on one cell.
pub fn rho_on_cell(mesh: &Mesh, cell: usize, f: &Simplex) -> Poly {
    let mut p = Poly::one(mesh.dim());
    for &v in f.verts() {
        p.sub_assign(&mesh.hat(cell, v));
    }
    p
}

pub fn rho(mesh: &Mesh, f: &Simplex) -> Result<PiecewiseForm> {
    mesh.check(f)?;
    let cells = (0..mesh.num_cells()).map(|c| Form::scalar(rho_on_cell(mesh, c, f))).collect();
    Ok(PiecewiseForm::from_cells(mesh.dim(), 0, cells))
}

/// Σ c_g φ_g for a coefficient chain, on one cell.
pub fn whitney_sum_on_cell(mesh: &Mesh, cell: usize, c: &Chain) -> Form {
    let n = mesh.dim();
    let deg = c.degree();
    if deg < 0 {
        return Form::constant(n, c.get(&Simplex::empty()).cloned().unwrap_or_else(Q::zero));
    }
    let t = &mesh.cells()[cell];
    let mut out = Form::zero(n, deg as usize);
    for (g, a) in c.iter() {
        if g.is_face_of(t) {
            out.add_scaled(a, &whitney_on_cell(mesh, cell, g));
        }
    }
    out
}

/// Materializes a Whitney coefficient chain as a piecewise form.
pub fn whitney_sum(mesh: &Mesh, c: &Chain) -> PiecewiseForm {
    let deg = c.degree().max(0) as usize;
    let cells = (0..mesh.num_cells()).map(|cell| whitney_sum_on_cell(mesh, cell, c)).collect();
    PiecewiseForm::from_cells(mesh.dim(), deg, cells)
}

/// A polynomial form on the corner simplex S_f^c, in the variables λ_i, i ∈ I(f).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefForm {
    anchor: Simplex,
    form: Form,
}

impl RefForm {
    pub fn new(anchor: Simplex, form: Form) -> RefForm {
        assert_eq!(form.nvars(), anchor.len(), "RefForm variables must match the anchor");
        RefForm { anchor, form }
    }

    pub fn zero(anchor: &Simplex, k: usize) -> RefForm {
        RefForm { anchor: anchor.clone(), form: Form::zero(anchor.len(), k) }
    }

    /// b(λ) = 1 - Σ λ_i.
    pub fn b(anchor: &Simplex) -> RefForm {
        RefForm { anchor: anchor.clone(), form: Form::scalar(b_poly(anchor.len())) }
    }

    pub fn anchor(&self) -> &Simplex {
        &self.anchor
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn degree(&self) -> usize {
        self.form.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.form.is_zero()
    }

    fn same(&self, o: &RefForm) -> Result<()> {
        if self.anchor != o.anchor {
            return Err(Error::MeshMismatch(format!("anchors {} and {}", self.anchor, o.anchor)));
        }
        Ok(())
    }

    pub fn add(&self, o: &RefForm) -> Result<RefForm> {
        self.same(o)?;
        Ok(RefForm { anchor: self.anchor.clone(), form: self.form.add(&o.form) })
    }

    pub fn sub(&self, o: &RefForm) -> Result<RefForm> {
        self.same(o)?;
        Ok(RefForm { anchor: self.anchor.clone(), form: self.form.sub(&o.form) })
    }

    pub fn scale(&self, s: &Q) -> RefForm {
        RefForm { anchor: self.anchor.clone(), form: self.form.scale(s) }
    }

    pub fn wedge(&self, o: &RefForm) -> Result<RefForm> {
        self.same(o)?;
        if self.degree() + o.degree() > self.anchor.len() {
            return Err(Error::DegreeOverflow(format!("{} + {} > {}", self.degree(), o.degree(), self.anchor.len())));
        }
        Ok(RefForm { anchor: self.anchor.clone(), form: self.form.wedge(&o.form) })
    }

    pub fn d(&self) -> RefForm {
        RefForm { anchor: self.anchor.clone(), form: self.form.d() }
    }

    pub fn mul_b_pow(&self, j: usize) -> RefForm {
        let bj = b_poly(self.anchor.len()).pow(j as u32);
        RefForm { anchor: self.anchor.clone(), form: self.form.mul_poly(&bj) }
    }

    /// Exact division of every coefficient by b^j.
    pub fn divide_by_b(&self, j: usize) -> Result<RefForm> {
        let nv = self.anchor.len();
        if j == 0 {
            return Ok(self.clone());
        }
        if nv == 0 {
            // b ≡ 1 on S_∅^c
            return Ok(self.clone());
        }
        // b = c - λ_last with c = 1 - Σ_{i<last} λ_i
        let last = nv - 1;
        let c = b_poly(nv).add(&Poly::var(nv, last));
        let mut out = Form::zero(nv, self.degree());
        for (m, p) in self.form.terms() {
            let mut q = p.clone();
            for _ in 0..j {
                q = q.div_linear(last, &c).ok_or_else(|| Error::NotDivisible {
                    power: j,
                    detail: format!("coefficient of basis {m:#b} on S^c of {}", self.anchor),
                })?;
            }
            out.add_term(*m, q);
        }
        Ok(RefForm { anchor: self.anchor.clone(), form: out })
    }

    pub fn membership(&self, space: Space) -> bool {
        form_in_space(&self.form, space)
    }

    /// Value at a point of S_f^c as a constant form.
    pub fn eval(&self, lambda: &[Q]) -> Form {
        self.form.eval(lambda)
    }

    /// Pullback along the face embedding S_g^c ↪ S_f^c (λ_i = 0 for i ∉ g).
    pub fn restrict_to_face(&self, g: &Simplex) -> Result<RefForm> {
        if !g.is_face_of(&self.anchor) {
            return Err(Error::NotAFace(format!("{g} in {}", self.anchor)));
        }
        let nv = g.len();
        let subst: Vec<Poly> = self
            .anchor
            .verts()
            .iter()
            .map(|&v| match g.position(v) {
                Some(i) => Poly::var(nv, i),
                None => Poly::zero(nv),
            })
            .collect();
        Ok(RefForm { anchor: g.clone(), form: self.form.pullback(&subst, nv) })
    }
}

pub fn b_poly(nvars: usize) -> Poly {
    let mut p = Poly::one(nvars);
    for v in 0..nvars {
        p.sub_assign(&Poly::var(nvars, v));
    }
    p
}

/// L_g^* w on one cell.
pub fn pullback_corner_on_cell(mesh: &Mesh, cell: usize, g: &Simplex, w: &RefForm) -> Form {
    let n = mesh.dim();
    let subst: Vec<Poly> = w
        .anchor
        .verts()
        .iter()
        .map(|&v| if g.contains(v) { mesh.hat(cell, v) } else { Poly::zero(n) })
        .collect();
    w.form.pullback(&subst, n)
}

/// L_g^* w for g ∈ Δ̄(f), w anchored at f.
pub fn pullback_corner(mesh: &Mesh, g: &Simplex, w: &RefForm) -> Result<PiecewiseForm> {
    if !g.is_face_of(&w.anchor) {
        return Err(Error::NotAFace(format!("{g} in {}", w.anchor)));
    }
    let cells = (0..mesh.num_cells()).map(|c| pullback_corner_on_cell(mesh, c, g, w)).collect();
    Ok(PiecewiseForm::from_cells(mesh.dim(), w.degree(), cells))
}

/// The constant form `L_g(x)`-evaluation of w at a point of a given cell.
pub fn pullback_corner_at(mesh: &Mesh, cell: usize, g: &Simplex, w: &RefForm, x: &[Q]) -> Form {
    pullback_corner_on_cell(mesh, cell, g, w).eval(x)
}

/// All k-form Cartesian basis masks for dimension n.
pub fn cartesian_basis(n: usize, k: usize) -> Vec<u32> {
    basis_masks(n, k)
}

impl Vector for PiecewiseForm {
    fn is_zero_vec(&self) -> bool {
        self.is_zero()
    }
    fn add_scaled_vec(&mut self, s: &Q, other: &Self) {
        self.add_scaled(s, other);
    }
    fn scale_vec(&self, s: &Q) -> Self {
        self.scale(s)
    }
}

impl Vector for RefForm {
    fn is_zero_vec(&self) -> bool {
        self.is_zero()
    }
    fn add_scaled_vec(&mut self, s: &Q, other: &Self) {
        assert_eq!(self.anchor, other.anchor);
        self.form.add_scaled(s, &other.form);
    }
    fn scale_vec(&self, s: &Q) -> Self {
        self.scale(s)
    }
}

impl Vector for Form {
    fn is_zero_vec(&self) -> bool {
        self.is_zero()
    }
    fn add_scaled_vec(&mut self, s: &Q, other: &Self) {
        self.add_scaled(s, other);
    }
    fn scale_vec(&self, s: &Q) -> Self {
        self.scale(s)
    }
}
