//! Simplicial meshes: subsimplices, stars, links, cell geometry and exact moments.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::RwLock;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{Mono, Poly};
use crate::rational::{factorial, to_f64, Q};
use crate::simplex::{Simplex, Vertex};

/// Affine data of one n-cell.
#[derive(Debug, Clone)]
pub struct CellGeom {
    /// Barycentric coordinate of each local vertex as an affine polynomial in x.
    pub lambda: Vec<Poly>,
    /// Constant gradient of each barycentric coordinate.
    pub grad: Vec<Vec<Q>>,
    pub origin: Vec<Q>,
    /// Columns are the edge vectors `v_i - v_0`, i = 1..n.
    pub jac: Vec<Vec<Q>>,
    pub det: Q,
    pub volume: Q,
    pub orientation: i32,
}

/// The link f* of a simplex, with the induced orientation of its top simplices.
#[derive(Debug, Clone)]
pub struct Link {
    pub anchor: Simplex,
    pub dim: isize,
    simplices: Vec<Vec<Simplex>>,
    members: BTreeSet<Simplex>,
    top_sign: BTreeMap<Simplex, i32>,
}

impl Link {
    /// Δ_d(f*) for -1 ≤ d ≤ dim f*; Δ_{-1} = {∅}.
    pub fn simplices(&self, d: isize) -> &[Simplex] {
        if d < -1 || d > self.dim {
            return &[];
        }
        &self.simplices[(d + 1) as usize]
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.members.contains(s)
    }

    /// o(e, T_e) for a top simplex e of the link.
    pub fn top_sign(&self, e: &Simplex) -> i32 {
        self.top_sign.get(e).copied().unwrap_or(0)
    }

    /// Number of link vertices, |f*|.
    pub fn size(&self) -> usize {
        self.simplices(0).len()
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ShapeStats {
    pub shape_constant: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// h_f keyed by simplex label.
    pub h: BTreeMap<String, f64>,
    pub max_overlap: usize,
}

pub struct Mesh {
    n: usize,
    coords: Vec<Vec<Q>>,
    cells: Vec<Simplex>,
    simplices: Vec<Vec<Simplex>>,
    stars: HashMap<Simplex, Vec<usize>>,
    cell_index: HashMap<Simplex, usize>,
    geom: Vec<CellGeom>,
    boundary_faces: BTreeSet<Simplex>,
    links: HashMap<Simplex, Link>,
    moments: Vec<RwLock<HashMap<Mono, Q>>>,
}

impl std::fmt::Debug for Mesh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mesh(n={}, vertices={}, cells={})", self.n, self.coords.len(), self.cells.len())
    }
}

fn cell_geometry(pts: &[&Vec<Q>], n: usize) -> Option<CellGeom> {
    let origin = pts[0].clone();
    let jac: Vec<Vec<Q>> = (0..n).map(|a| (1..=n).map(|i| &pts[i][a] - &origin[a]).collect()).collect();
    let det = linalg::det(&jac);
    if det.is_zero() {
        return None;
    }
    let inv = linalg::inverse(&jac)?;
    // t_i = Σ_a inv[i][a] (x_a - o_a), λ_{i+1} = t_i, λ_0 = 1 - Σ t_i
    let mut grad = vec![vec![Q::zero(); n]; n + 1];
    let mut cst = vec![Q::zero(); n + 1];
    for i in 0..n {
        for a in 0..n {
            grad[i + 1][a] = inv[i][a].clone();
            cst[i + 1] -= &inv[i][a] * &origin[a];
        }
    }
    cst[0] = Q::one() - cst[1..].iter().fold(Q::zero(), |s, c| s + c);
    for a in 0..n {
        grad[0][a] = -(1..=n).fold(Q::zero(), |s, i| s + &grad[i][a]);
    }
    let lambda = (0..=n).map(|i| Poly::affine(cst[i].clone(), &grad[i])).collect();
    let volume = det.abs() / Q::from_integer(factorial(n));
    let orientation = if det.is_positive() { 1 } else { -1 };
    Some(CellGeom { lambda, grad, origin, jac, det, volume, orientation })
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |s, (x, y)| s + x * y)
}

impl Mesh {
    /// Validates and builds a mesh; global vertex numbering is the input order.
    pub fn build(dim: usize, coords: Vec<Vec<Q>>, cells: Vec<Vec<usize>>) -> Result<Mesh> {
        let n = dim;
        if n == 0 {
            return Err(Error::InconsistentDim("dimension must be positive".into()));
        }
        if n > 6 {
            return Err(Error::InconsistentDim(format!("dimension {n} is not supported")));
        }
        if coords.len() < n + 1 {
            return Err(Error::InconsistentDim(format!("need at least {} vertices", n + 1)));
        }
        if let Some(i) = coords.iter().position(|c| c.len() != n) {
            return Err(Error::InconsistentDim(format!("vertex {i} has {} coordinates", coords[i].len())));
        }
        if cells.is_empty() {
            return Err(Error::InconsistentDim("no cells".into()));
        }
        let mut simplex_cells = Vec::with_capacity(cells.len());
        for c in &cells {
            if c.len() != n + 1 {
                return Err(Error::InconsistentDim(format!("cell {c:?} needs {} vertices", n + 1)));
            }
            if let Some(&v) = c.iter().find(|&&v| v >= coords.len()) {
                return Err(Error::InconsistentDim(format!("cell {c:?} references missing vertex {v}")));
            }
            let verts: Vec<Vertex> = c.iter().map(|&v| v as Vertex).collect();
            simplex_cells.push(Simplex::new(&verts)?);
        }

        let mut cell_index = HashMap::new();
        for (i, c) in simplex_cells.iter().enumerate() {
            if cell_index.insert(c.clone(), i).is_some() {
                return Err(Error::NotADecomposition(format!("duplicate cell {c}")));
            }
        }

        let mut geom = Vec::with_capacity(cells.len());
        for c in &simplex_cells {
            let pts: Vec<&Vec<Q>> = c.verts().iter().map(|&v| &coords[v as usize]).collect();
            geom.push(cell_geometry(&pts, n).ok_or_else(|| Error::DegenerateCell(c.to_string()))?);
        }

        let mut by_dim: Vec<BTreeSet<Simplex>> = vec![BTreeSet::new(); n + 1];
        let mut stars: HashMap<Simplex, Vec<usize>> = HashMap::new();
        for (ci, c) in simplex_cells.iter().enumerate() {
            for d in 0..=n as isize {
                for f in c.faces(d) {
                    stars.entry(f.clone()).or_default().push(ci);
                    by_dim[d as usize].insert(f);
                }
            }
        }
        stars.insert(Simplex::empty(), (0..simplex_cells.len()).collect());
        let simplices: Vec<Vec<Simplex>> = by_dim.into_iter().map(|s| s.into_iter().collect()).collect();

        let mut boundary_faces = BTreeSet::new();
        for f in &simplices[n - 1] {
            match stars[f].len() {
                1 => {
                    boundary_faces.insert(f.clone());
                }
                2 => {}
                k => return Err(Error::NotADecomposition(format!("face {f} shared by {k} cells"))),
            }
        }

        let mut mesh = Mesh {
            n,
            coords,
            cells: simplex_cells,
            simplices,
            stars,
            cell_index,
            geom,
            boundary_faces,
            links: HashMap::new(),
            moments: Vec::new(),
        };
        mesh.check_geometry()?;
        mesh.moments = (0..mesh.cells.len()).map(|_| RwLock::new(HashMap::new())).collect();
        let mut links = HashMap::new();
        for d in -1..n as isize {
            for f in mesh.simplices(d).to_vec() {
                let l = mesh.compute_link(&f);
                links.insert(f, l);
            }
        }
        mesh.links = links;
        Ok(mesh)
    }

    /// Geometric face-to-face test: no vertex inside a foreign cell, and
    /// cell interiors pairwise disjoint (separating axes, n ≤ 3).
    fn check_geometry(&self) -> Result<()> {
        let n = self.n;
        for (ci, c) in self.cells.iter().enumerate() {
            for v in 0..self.coords.len() as Vertex {
                if c.contains(v) || !self.stars.contains_key(&Simplex::vertex(v)) {
                    continue;
                }
                let lam = self.barycentric(ci, &self.coords[v as usize]);
                if lam.iter().all(|l| !l.is_negative()) {
                    return Err(Error::NotADecomposition(format!("vertex {v} lies in cell {c}")));
                }
            }
        }
        if n > 3 {
            return Ok(());
        }
        for a in 0..self.cells.len() {
            for b in a + 1..self.cells.len() {
                if !self.separated(a, b) {
                    return Err(Error::NotADecomposition(format!(
                        "cells {} and {} overlap",
                        self.cells[a], self.cells[b]
                    )));
                }
            }
        }
        Ok(())
    }

    fn separated(&self, a: usize, b: usize) -> bool {
        let pa: Vec<&Vec<Q>> = self.cells[a].verts().iter().map(|&v| &self.coords[v as usize]).collect();
        let pb: Vec<&Vec<Q>> = self.cells[b].verts().iter().map(|&v| &self.coords[v as usize]).collect();
        let mut axes: Vec<Vec<Q>> = Vec::new();
        axes.extend(self.geom[a].grad.iter().cloned());
        axes.extend(self.geom[b].grad.iter().cloned());
        if self.n == 3 {
            let edges = |p: &[&Vec<Q>]| {
                let mut out = Vec::new();
                for i in 0..p.len() {
                    for j in i + 1..p.len() {
                        out.push((0..3).map(|k| &p[j][k] - &p[i][k]).collect::<Vec<Q>>());
                    }
                }
                out
            };
            for u in edges(&pa) {
                for w in edges(&pb) {
                    let c = vec![
                        &u[1] * &w[2] - &u[2] * &w[1],
                        &u[2] * &w[0] - &u[0] * &w[2],
                        &u[0] * &w[1] - &u[1] * &w[0],
                    ];
                    if c.iter().any(|x| !x.is_zero()) {
                        axes.push(c);
                    }
                }
            }
        }
        axes.iter().any(|ax| {
            let proj = |p: &[&Vec<Q>]| {
                let vals: Vec<Q> = p.iter().map(|x| dot(ax, x)).collect();
                let lo = vals.iter().min().unwrap().clone();
                let hi = vals.iter().max().unwrap().clone();
                (lo, hi)
            };
            let (alo, ahi) = proj(&pa);
            let (blo, bhi) = proj(&pb);
            ahi <= blo || bhi <= alo
        })
    }

    fn compute_link(&self, f: &Simplex) -> Link {
        let n = self.n as isize;
        let dim = n - f.len() as isize;
        let mut sets: Vec<BTreeSet<Simplex>> = vec![BTreeSet::new(); (dim + 2).max(1) as usize];
        sets[0].insert(Simplex::empty());
        let mut top_sign = BTreeMap::new();
        for &ci in self.star(f) {
            let t = &self.cells[ci];
            let opp = t.minus(f);
            for d in 0..=dim {
                for s in opp.faces(d) {
                    sets[(d + 1) as usize].insert(s);
                }
            }
            // o(f*(T),T) = o(T) Π_i (-1)^{σ_{T_i}(x_{j_i})}
            let mut sign = self.geom[ci].orientation;
            let mut cur = t.clone();
            for &x in f.verts() {
                if cur.position(x).unwrap() % 2 == 1 {
                    sign = -sign;
                }
                cur = cur.without(x);
            }
            top_sign.insert(opp, sign);
        }
        let simplices: Vec<Vec<Simplex>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let members = simplices.iter().flatten().cloned().collect();
        Link { anchor: f.clone(), dim, simplices, members, top_sign }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self, v: Vertex) -> &[Q] {
        &self.coords[v as usize]
    }

    pub fn all_coords(&self) -> &[Vec<Q>] {
        &self.coords
    }

    pub fn cells(&self) -> &[Simplex] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_index(&self, c: &Simplex) -> Option<usize> {
        self.cell_index.get(c).copied()
    }

    pub fn geom(&self, cell: usize) -> &CellGeom {
        &self.geom[cell]
    }

    /// Δ_d for -1 ≤ d ≤ n.
    pub fn simplices(&self, d: isize) -> &[Simplex] {
        static EMPTY: std::sync::OnceLock<Vec<Simplex>> = std::sync::OnceLock::new();
        if d == -1 {
            return EMPTY.get_or_init(|| vec![Simplex::empty()]);
        }
        if d < -1 || d > self.n as isize {
            return &[];
        }
        &self.simplices[d as usize]
    }

    pub fn contains(&self, f: &Simplex) -> bool {
        self.stars.contains_key(f)
    }

    pub fn check(&self, f: &Simplex) -> Result<()> {
        if self.contains(f) {
            Ok(())
        } else {
            Err(Error::UnknownSimplex(f.to_string()))
        }
    }

    /// Cells containing `f`; all cells for ∅.
    pub fn star(&self, f: &Simplex) -> &[usize] {
        self.stars.get(f).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn try_star(&self, f: &Simplex) -> Result<&[usize]> {
        self.check(f)?;
        Ok(self.star(f))
    }

    /// Union of the vertex stars of the vertices of `f`.
    pub fn extended_star(&self, f: &Simplex) -> Vec<usize> {
        let mut s = BTreeSet::new();
        for &v in f.verts() {
            s.extend(self.star(&Simplex::vertex(v)).iter().copied());
        }
        s.into_iter().collect()
    }

    pub fn link(&self, f: &Simplex) -> Result<&Link> {
        self.links.get(f).ok_or_else(|| Error::UnknownSimplex(format!("{f} has no link")))
    }

    pub fn boundary_faces(&self) -> &BTreeSet<Simplex> {
        &self.boundary_faces
    }

    /// Whether `g` lies on ∂Ω.
    pub fn on_boundary(&self, g: &Simplex) -> bool {
        if g.dim() >= self.n as isize {
            return false;
        }
        if g.is_empty() {
            return true;
        }
        self.star(g).iter().any(|&ci| {
            let c = &self.cells[ci];
            c.faces(self.n as isize - 1).iter().any(|face| g.is_face_of(face) && self.boundary_faces.contains(face))
        })
    }

    /// Whether `g` lies on the boundary of the macroelement Ω_f.
    pub fn on_macro_boundary(&self, f: &Simplex, g: &Simplex) -> bool {
        let star: BTreeSet<usize> = self.star(f).iter().copied().collect();
        let mut face_count: BTreeMap<Simplex, usize> = BTreeMap::new();
        for &ci in &star {
            for face in self.cells[ci].faces(self.n as isize - 1) {
                *face_count.entry(face).or_default() += 1;
            }
        }
        face_count.iter().any(|(face, &c)| c == 1 && g.is_face_of(face))
    }

    /// Local index of global vertex `v` in cell `cell`.
    pub fn local_index(&self, cell: usize, v: Vertex) -> Option<usize> {
        self.cells[cell].position(v)
    }

    /// λ_v restricted to a cell (zero if `v` is not a vertex of it).
    pub fn hat(&self, cell: usize, v: Vertex) -> Poly {
        match self.local_index(cell, v) {
            Some(i) => self.geom[cell].lambda[i].clone(),
            None => Poly::zero(self.n),
        }
    }

    pub fn hat_grad(&self, cell: usize, v: Vertex) -> Vec<Q> {
        match self.local_index(cell, v) {
            Some(i) => self.geom[cell].grad[i].clone(),
            None => vec![Q::zero(); self.n],
        }
    }

    pub fn barycentric(&self, cell: usize, x: &[Q]) -> Vec<Q> {
        self.geom[cell].lambda.iter().map(|l| l.eval(x)).collect()
    }

    /// First cell containing `x` (closed), if any.
    pub fn locate(&self, x: &[Q]) -> Option<usize> {
        (0..self.cells.len()).find(|&c| self.barycentric(c, x).iter().all(|l| !l.is_negative()))
    }

    /// ∫_T y^α dy, cached per cell.
    pub fn moment(&self, cell: usize, m: Mono) -> Q {
        if let Some(v) = self.moments[cell].read().unwrap().get(&m) {
            return v.clone();
        }
        let n = self.n;
        let g = &self.geom[cell];
        // y_a = o_a + Σ_i J[a][i] t_i
        let mut p = Poly::one(n);
        for a in 0..n {
            let ya = Poly::affine(g.origin[a].clone(), &g.jac[a]);
            p = p.mul(&ya.pow(m.exp(a)));
        }
        let mut total = Q::zero();
        for (t, c) in p.terms() {
            let mut num = num_bigint::BigInt::one();
            for a in 0..n {
                num *= factorial(t.exp(a) as usize);
            }
            let den = factorial(t.degree() as usize + n);
            total += c * Q::new(num, den);
        }
        total *= g.det.abs();
        self.moments[cell].write().unwrap().insert(m, total.clone());
        total
    }

    /// ∫_T p dvol for a polynomial in the n Cartesian coordinates.
    pub fn integrate_poly(&self, cell: usize, p: &Poly) -> Q {
        p.terms().fold(Q::zero(), |s, (m, c)| s + c * self.moment(cell, *m))
    }

    /// The pair set Δ_{j,m}: f ∈ Δ_m, e ∈ Δ_j(f*).
    pub fn pairs(&self, j: isize, m: isize) -> Vec<(Simplex, Simplex)> {
        let mut out = Vec::new();
        if j >= self.n as isize - m {
            return out;
        }
        for f in self.simplices(m) {
            if let Ok(l) = self.link(f) {
                for e in l.simplices(j) {
                    out.push((e.clone(), f.clone()));
                }
            } else if j == -1 {
                out.push((Simplex::empty(), f.clone()));
            }
        }
        out
    }

    pub fn shape_stats(&self) -> ShapeStats {
        let n = self.n;
        let pt = |v: Vertex| -> Vec<f64> { self.coords[v as usize].iter().map(to_f64).collect() };
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let mut diam = Vec::new();
        let mut shape = 0f64;
        for (ci, c) in self.cells.iter().enumerate() {
            let pts: Vec<Vec<f64>> = c.verts().iter().map(|&v| pt(v)).collect();
            let mut d = 0f64;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    d = d.max(dist(&pts[i], &pts[j]));
                }
            }
            let mut surface = 0f64;
            for skip in 0..pts.len() {
                let face: Vec<&Vec<f64>> = pts.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, p)| p).collect();
                surface += simplex_measure(&face);
            }
            let vol = to_f64(&self.geom[ci].volume);
            let r = n as f64 * vol / surface;
            shape = shape.max(d / (2.0 * r));
            diam.push(d);
        }
        let mut h = BTreeMap::new();
        let mut overlap = vec![0usize; self.cells.len()];
        for d in 0..=n as isize {
            for f in self.simplices(d) {
                let ext = self.extended_star(f);
                let hf = ext.iter().map(|&c| diam[c]).fold(0f64, f64::max);
                for &c in &ext {
                    overlap[c] += 1;
                }
                h.insert(f.label(), hf);
            }
        }
        let h_min = h.values().copied().fold(f64::INFINITY, f64::min);
        let h_max = h.values().copied().fold(0f64, f64::max);
        ShapeStats { shape_constant: shape, h_min, h_max, h, max_overlap: overlap.into_iter().max().unwrap_or(0) }
    }
}

/// k-dimensional measure of a simplex with k+1 points (floating point).
fn simplex_measure(pts: &[&Vec<f64>]) -> f64 {
    let k = pts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let e: Vec<Vec<f64>> = (1..=k).map(|i| pts[i].iter().zip(pts[0].iter()).map(|(a, b)| a - b).collect()).collect();
    let mut g = vec![vec![0f64; k]; k];
    for i in 0..k {
        for j in 0..k {
            g[i][j] = e[i].iter().zip(&e[j]).map(|(a, b)| a * b).sum();
        }
    }
    let det = det_f64(g);
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    det.max(0.0).sqrt() / fact
}

fn det_f64(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}
