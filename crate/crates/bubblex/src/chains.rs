//! Vector-valued chains on links and on the whole mesh.
//!
//! The mesh itself is the link of ∅, so every operator here takes a [`Link`].

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, SolveFailure, Vector};
use crate::mesh::{Link, Mesh};
use crate::rational::Q;
use crate::simplex::{alt, Simplex};

/// A `degree`-chain with values in a vector space; absent keys are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ValuedChain<X> {
    degree: isize,
    coeffs: BTreeMap<Simplex, X>,
}

pub type Chain = ValuedChain<Q>;

impl<X: Vector> ValuedChain<X> {
    pub fn new(degree: isize) -> Self {
        ValuedChain { degree, coeffs: BTreeMap::new() }
    }

    pub fn degree(&self) -> isize {
        self.degree
    }

    pub fn get(&self, s: &Simplex) -> Option<&X> {
        self.coeffs.get(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Simplex, &X)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|x| x.is_zero_vec())
    }

    pub fn set(&mut self, s: Simplex, x: X) {
        debug_assert_eq!(s.dim(), self.degree);
        if x.is_zero_vec() {
            self.coeffs.remove(&s);
        } else {
            self.coeffs.insert(s, x);
        }
    }

    /// `self[s] += c · x`.
    pub fn add_at(&mut self, s: &Simplex, c: &Q, x: &X) {
        debug_assert_eq!(s.dim(), self.degree);
        if c.is_zero() {
            return;
        }
        match self.coeffs.get_mut(s) {
            Some(v) => {
                v.add_scaled_vec(c, x);
                if v.is_zero_vec() {
                    self.coeffs.remove(s);
                }
            }
            None => {
                let v = x.scale_vec(c);
                if !v.is_zero_vec() {
                    self.coeffs.insert(s.clone(), v);
                }
            }
        }
    }

    pub fn add_scaled(&mut self, c: &Q, o: &ValuedChain<X>) {
        assert_eq!(self.degree, o.degree, "chain degrees differ");
        for (s, x) in &o.coeffs {
            self.add_at(s, c, x);
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut r = ValuedChain::new(self.degree);
        r.add_scaled(c, self);
        r
    }

    pub fn add(&self, o: &ValuedChain<X>) -> Self {
        let mut r = self.clone();
        r.add_scaled(&Q::one(), o);
        r
    }

    pub fn sub(&self, o: &ValuedChain<X>) -> Self {
        let mut r = self.clone();
        r.add_scaled(&-Q::one(), o);
        r
    }

    pub fn map<Y: Vector>(&self, f: impl Fn(&X) -> Y) -> ValuedChain<Y> {
        let mut r = ValuedChain::new(self.degree);
        for (s, x) in &self.coeffs {
            r.set(s.clone(), f(x));
        }
        r
    }
}

impl Chain {
    pub fn single(s: Simplex, c: Q) -> Chain {
        let mut r = Chain::new(s.dim());
        r.set(s, c);
        r
    }

    pub fn coeff(&self, s: &Simplex) -> Q {
        self.coeffs.get(s).cloned().unwrap_or_else(Q::zero)
    }

    pub fn max_abs(&self) -> Q {
        self.coeffs.values().map(|x| if x < &Q::zero() { -x.clone() } else { x.clone() }).max().unwrap_or_else(Q::zero)
    }
}

impl<X: Vector> Vector for ValuedChain<X> {
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

/// (∂c)_g = Σ_i (-1)^{σ_{⟨x_i,g⟩}(x_i)} c_{⟨x_i,g⟩}; ∂_0 sums vertex values into ∅.
pub fn boundary<X: Vector>(c: &ValuedChain<X>) -> ValuedChain<X> {
    assert!(c.degree >= 0, "boundary of a (-1)-chain");
    let mut r = ValuedChain::new(c.degree - 1);
    for (s, x) in &c.coeffs {
        for l in 0..s.len() {
            r.add_at(&s.without_index(l), &Q::from_integer(alt(l).into()), x);
        }
    }
    r
}

/// (δc)_s = Σ_l (-1)^l c_{s without its l-th vertex}, for s ∈ Δ_{j+1} of the carrier.
pub fn coboundary<X: Vector>(c: &ValuedChain<X>, carrier: &Link) -> ValuedChain<X> {
    let mut r = ValuedChain::new(c.degree + 1);
    for s in carrier.simplices(c.degree + 1) {
        for l in 0..s.len() {
            if let Some(x) = c.coeffs.get(&s.without_index(l)) {
                r.add_at(s, &Q::from_integer(alt(l).into()), x);
            }
        }
    }
    r
}

/// δ_{n-m}(f*) c = Σ_{e top} o(e, T_e) c_e.
pub fn top_coboundary<X: Vector>(c: &ValuedChain<X>, carrier: &Link, zero: &X) -> X {
    assert_eq!(c.degree, carrier.dim, "top coboundary needs a top-degree chain");
    let mut r = zero.clone();
    for (e, x) in &c.coeffs {
        r.add_scaled_vec(&Q::from_integer(carrier.top_sign(e).into()), x);
    }
    r
}

/// Values indexed by pairs (e,f).
#[derive(Clone, Debug, PartialEq)]
pub struct PairFamily<X> {
    map: BTreeMap<(Simplex, Simplex), X>,
}

impl<X: Vector> Default for PairFamily<X> {
    fn default() -> Self {
        PairFamily { map: BTreeMap::new() }
    }
}

impl<X: Vector> PairFamily<X> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: Simplex, f: Simplex, x: X) {
        self.map.insert((e, f), x);
    }

    pub fn get(&self, e: &Simplex, f: &Simplex) -> Option<&X> {
        self.map.get(&(e.clone(), f.clone()))
    }

    pub fn require(&self, e: &Simplex, f: &Simplex) -> Result<&X> {
        self.get(e, f).ok_or_else(|| Error::IndexMismatch(format!("missing pair ({e}, {f})")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Simplex, Simplex), &X)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn extend(&mut self, o: PairFamily<X>) {
        self.map.extend(o.map);
    }
}

/// (δ⁺w)_{e,f} = Σ_{i∈I(e)} (-1)^{σ_e(x_i)} w_{e(x̂_i), ⟨x_i,f⟩}.
pub fn co_plus_at<X: Vector>(w: &PairFamily<X>, e: &Simplex, f: &Simplex, zero: &X) -> Result<X> {
    let mut r = zero.clone();
    for (l, &x) in e.verts().iter().enumerate() {
        let v = w.require(&e.without_index(l), &f.with_vertex(x))?;
        r.add_scaled_vec(&Q::from_integer(alt(l).into()), v);
    }
    Ok(r)
}

/// (δw)_{e,f} = Σ_{i∈I(e)} (-1)^{σ_e(x_i)} w_{e(x̂_i), f}.
pub fn pair_delta_at<X: Vector>(w: &PairFamily<X>, e: &Simplex, f: &Simplex, zero: &X) -> Result<X> {
    let mut r = zero.clone();
    for l in 0..e.len() {
        let v = w.require(&e.without_index(l), f)?;
        r.add_scaled_vec(&Q::from_integer(alt(l).into()), v);
    }
    Ok(r)
}

/// δ⁺ over every pair of Δ_{j,m}.
pub fn co_plus<X: Vector>(mesh: &Mesh, w: &PairFamily<X>, j: isize, m: isize, zero: &X) -> Result<PairFamily<X>> {
    let mut out = PairFamily::new();
    for (e, f) in mesh.pairs(j, m) {
        let v = co_plus_at(w, &e, &f, zero)?;
        out.insert(e, f, v);
    }
    Ok(out)
}

/// δ on the e-slot over every pair of Δ_{j,m}.
pub fn pair_delta<X: Vector>(mesh: &Mesh, w: &PairFamily<X>, j: isize, m: isize, zero: &X) -> Result<PairFamily<X>> {
    let mut out = PairFamily::new();
    for (e, f) in mesh.pairs(j, m) {
        let v = pair_delta_at(w, &e, &f, zero)?;
        out.insert(e, f, v);
    }
    Ok(out)
}

/// Which gauge condition fixed the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveBranch {
    /// ∂c̃ = c together with δc̃ = 0.
    Gauged,
    /// ∂ alone was injective and δc̃ = 0 also holds.
    UniqueGaugeHolds,
    /// ∂ alone was injective; the redundant top condition is not satisfied and was dropped.
    GaugeDropped,
}

fn incidence(rows: &[Simplex], cols: &[Simplex]) -> Vec<Vec<Q>> {
    let idx: BTreeMap<&Simplex, usize> = rows.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut a = vec![vec![Q::zero(); cols.len()]; rows.len()];
    for (c, s) in cols.iter().enumerate() {
        for l in 0..s.len() {
            if let Some(&r) = idx.get(&s.without_index(l)) {
                a[r][c] = Q::from_integer(alt(l).into());
            }
        }
    }
    a
}

/// Gauged potential: c̃ with ∂c̃ = c and δc̃ = 0 on the link.
pub fn solve_potential<X: Vector>(link: &Link, c: &ValuedChain<X>, zero: &X) -> Result<(ValuedChain<X>, SolveBranch)> {
    let k = c.degree;
    if k < 0 || k >= link.dim {
        return Err(Error::IndexMismatch(format!("potential of a {k}-chain on a {}-dimensional link", link.dim)));
    }
    let bd = boundary(c);
    if !bd.is_zero() {
        return Err(Error::NotClosed(format!("degree {k} chain on the link of {}", link.anchor)));
    }
    let rows = link.simplices(k);
    let cols = link.simplices(k + 1);
    let a = incidence(rows, cols);
    let rhs: Vec<X> = rows.iter().map(|s| c.get(s).cloned().unwrap_or_else(|| zero.clone())).collect();
    let to_chain = |x: Vec<X>| {
        let mut r = ValuedChain::new(k + 1);
        for (s, v) in cols.iter().zip(x) {
            r.set(s.clone(), v);
        }
        r
    };
    let gauge_holds = |ct: &ValuedChain<X>| {
        if k + 1 == link.dim {
            top_coboundary(ct, link, zero).is_zero_vec()
        } else {
            coboundary(ct, link).is_zero()
        }
    };
    if linalg::rank(&a) == cols.len() {
        let x = linalg::solve(&a, rhs).map_err(|e| no_solution(link, k, e))?;
        let ct = to_chain(x);
        let branch = if gauge_holds(&ct) { SolveBranch::UniqueGaugeHolds } else { SolveBranch::GaugeDropped };
        return Ok((ct, branch));
    }
    let mut full = a;
    let mut full_rhs = rhs;
    if k + 1 == link.dim {
        full.push(cols.iter().map(|s| Q::from_integer(link.top_sign(s).into())).collect());
        full_rhs.push(zero.clone());
    } else {
        let gauge_rows = link.simplices(k + 2);
        let b = incidence(cols, gauge_rows);
        // δ is the transpose of the incidence between Δ_{k+1} and Δ_{k+2}
        for t in 0..gauge_rows.len() {
            full.push((0..cols.len()).map(|s| b[s][t].clone()).collect());
            full_rhs.push(zero.clone());
        }
    }
    let x = linalg::solve(&full, full_rhs).map_err(|e| no_solution(link, k, e))?;
    Ok((to_chain(x), SolveBranch::Gauged))
}

fn no_solution(link: &Link, k: isize, e: SolveFailure) -> Error {
    Error::NoSolution(format!("link of {} at degree {k}: {e:?}", link.anchor))
}

/// Unique c over {g ∈ Δ_q : g ⊇ f, g off ∂Ω_f} with δc = target and ∂c = 0 on faces containing f.
pub fn solve_trimmed_local(mesh: &Mesh, f: &Simplex, q: isize, target: &Chain) -> Result<Chain> {
    assert_eq!(target.degree(), q + 1);
    let n = mesh.dim() as isize;
    let containing = |d: isize| -> Vec<Simplex> {
        if d < 0 || d > n {
            return Vec::new();
        }
        mesh.simplices(d).iter().filter(|g| f.is_face_of(g)).cloned().collect()
    };
    let unknowns: Vec<Simplex> = containing(q).into_iter().filter(|g| !mesh.on_macro_boundary(f, g)).collect();
    let upper = containing(q + 1);
    if let Some((s, _)) = target.iter().find(|(s, _)| !f.is_face_of(s)) {
        return Err(Error::Incompatible(format!("target for {f} is supported on {s}, which does not contain it")));
    }
    if unknowns.is_empty() {
        if target.is_zero() {
            return Ok(Chain::new(q));
        }
        return Err(Error::Incompatible(format!("{f}: nonzero target but no interior unknowns")));
    }
    let lower = containing(q - 1);
    // δ rows: (δc)_h = Σ_l (-1)^l c_{h without l}
    let mut a = incidence(&unknowns, &upper);
    let mut rows: Vec<Vec<Q>> = (0..upper.len()).map(|h| (0..unknowns.len()).map(|g| a[g][h].clone()).collect()).collect();
    let mut rhs: Vec<Q> = upper.iter().map(|h| target.coeff(h)).collect();
    a = incidence(&lower, &unknowns);
    for r in a {
        rows.push(r);
        rhs.push(Q::zero());
    }
    let x = linalg::solve(&rows, rhs).map_err(|e| match e {
        SolveFailure::Inconsistent(_) => Error::Incompatible(format!("{f}: target not in the range of δ")),
        SolveFailure::Underdetermined { .. } => Error::NoSolution(format!("{f}: local trimmed system is singular")),
    })?;
    let mut out = Chain::new(q);
    for (g, v) in unknowns.into_iter().zip(x) {
        out.set(g, v);
    }
    Ok(out)
}

/// Exactness of the link cochain complex at C_k, 0 ≤ k < dim f* (ordinary coboundaries only).
pub fn cochain_exact_at(link: &Link, k: isize) -> bool {
    let dk = link.simplices(k).len();
    // rank of δ_{k-1}: C_{k-1} → C_k is the rank of the incidence Δ_{k-1} × Δ_k
    let rank_prev = linalg::rank(&incidence(link.simplices(k - 1), link.simplices(k)));
    let rank_next = if k < link.dim { linalg::rank(&incidence(link.simplices(k), link.simplices(k + 1))) } else { 0 };
    dk - rank_next == rank_prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};
    use crate::testutil::{d2, d3, s};
    use proptest::prelude::*;

    fn rationals(len: usize) -> impl Strategy<Value = Vec<Q>> {
        prop::collection::vec((-6i64..=6, 1i64..=4), len).prop_map(|v| v.into_iter().map(|(p, d)| qf(p, d)).collect())
    }

    fn chain_on(simplices: &[Simplex], degree: isize, vals: &[Q]) -> Chain {
        let mut c = Chain::new(degree);
        for (s, v) in simplices.iter().zip(vals) {
            c.set(s.clone(), v.clone());
        }
        c
    }

    fn family(mesh: &Mesh, j: isize, m: isize, vals: &[Q]) -> PairFamily<Q> {
        let mut w = PairFamily::new();
        for ((e, f), v) in mesh.pairs(j, m).into_iter().zip(vals.iter().cycle()) {
            w.insert(e, f, v.clone());
        }
        w
    }

    fn zero_family(w: &PairFamily<Q>) -> bool {
        w.iter().all(|(_, v)| v.is_zero())
    }

    fn whole(mesh: &Mesh) -> &Link {
        mesh.link(&Simplex::empty()).unwrap()
    }

    #[test]
    fn vertex_link_cycle_boundary() {
        let l = d2().link(&s(&[0])).unwrap();
        let c = Chain::single(s(&[1, 2]), q(1));
        let b = boundary(&c);
        assert_eq!(b.len(), 2);
        assert_eq!(b.coeff(&s(&[1])) + b.coeff(&s(&[2])), Q::zero());
        assert!(boundary(&b).is_zero());
        assert!(boundary(&Chain::new(1)).is_zero());
        // constants are closed on the cycle
        let ones = chain_on(l.simplices(0), 0, &[q(1), q(1), q(1), q(1)]);
        assert!(coboundary(&ones, l).is_zero());
    }

    #[test]
    fn edge_link_top_coboundary_uses_orientations() {
        let mesh = d2();
        let l = mesh.link(&s(&[0, 1])).unwrap();
        let c = chain_on(&[s(&[2]), s(&[4])], 0, &[q(1), q(1)]);
        let expect = l.top_sign(&s(&[2])) + l.top_sign(&s(&[4]));
        assert_eq!(top_coboundary(&c, l, &Q::zero()), q(expect as i64));
        // the two cells meet [0,1] from opposite sides
        assert_eq!(expect, 0);
    }

    #[test]
    fn potential_on_the_vertex_link() {
        let l = d2().link(&s(&[0])).unwrap();
        let c = chain_on(l.simplices(0), 0, &[q(1), q(-1), q(0), q(0)]);
        let (ct, branch) = solve_potential(l, &c, &Q::zero()).unwrap();
        assert_eq!(boundary(&ct), c);
        assert!(top_coboundary(&ct, l, &Q::zero()).is_zero());
        assert_eq!(branch, SolveBranch::Gauged);
        let (z, _) = solve_potential(l, &Chain::new(0), &Q::zero()).unwrap();
        assert!(z.is_zero());
        let open = chain_on(l.simplices(0), 0, &[q(1), q(0), q(0), q(0)]);
        assert!(matches!(solve_potential(l, &open, &Q::zero()), Err(Error::NotClosed(_))));
    }

    #[test]
    fn trimmed_local_round_trip_on_the_shared_face() {
        let mesh = d3();
        let f = s(&[1, 2, 3]);
        assert!(solve_trimmed_local(mesh, &f, 2, &Chain::new(3)).unwrap().is_zero());
        let c = Chain::single(f.clone(), q(3));
        let mut target = Chain::new(3);
        for h in mesh.simplices(3) {
            for l in 0..h.len() {
                if h.without_index(l) == f {
                    target.add_at(h, &q(alt(l) as i64), &q(3));
                }
            }
        }
        assert_eq!(solve_trimmed_local(mesh, &f, 2, &target).unwrap(), c);
        let mut bad = target.clone();
        bad.add_at(&s(&[0, 1, 2, 3]), &q(1), &q(1));
        assert!(matches!(solve_trimmed_local(mesh, &f, 2, &bad), Err(Error::Incompatible(_))));
    }

    #[test]
    fn link_complexes_are_exact() {
        for mesh in [d2(), d3()] {
            let n = mesh.dim() as isize;
            for m in 0..n {
                for f in mesh.simplices(m) {
                    let l = mesh.link(f).unwrap();
                    for k in 1..l.dim {
                        assert!(cochain_exact_at(l, k), "f={f} k={k}");
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn boundary_squares_to_zero(vals in rationals(16), top in 1isize..=3) {
            let mesh = if top <= 2 { d2() } else { d3() };
            let c = chain_on(mesh.simplices(top), top, &vals);
            prop_assert!(boundary(&boundary(&c)).is_zero());
        }

        #[test]
        fn coboundary_squares_to_zero(vals in rationals(16), k in 0isize..=1) {
            for mesh in [d2(), d3()] {
                let l = whole(mesh);
                let c = chain_on(mesh.simplices(k), k, &vals);
                prop_assert!(coboundary(&coboundary(&c, l), l).is_zero());
            }
        }

        /// Σ_g (∂c)_g b_g = Σ_s c_s (δb)_s on the whole mesh.
        #[test]
        fn boundary_and_coboundary_are_adjoint(a in rationals(16), b in rationals(16), k in 0isize..=2) {
            for mesh in [d2(), d3()] {
                let l = whole(mesh);
                let c = chain_on(mesh.simplices(k), k, &a);
                let e = chain_on(mesh.simplices(k - 1), k - 1, &b);
                let lhs: Q = boundary(&c).iter().map(|(g, x)| x * e.coeff(g)).sum();
                let rhs: Q = coboundary(&e, l).iter().map(|(g, x)| x * c.coeff(g)).sum();
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn co_plus_squares_to_zero(vals in rationals(24), j in 1isize..=2, m in -1isize..=0) {
            for mesh in [d2(), d3()] {
                let w = family(mesh, j - 2, m + 2, &vals);
                let once = co_plus(mesh, &w, j - 1, m + 1, &Q::zero()).unwrap();
                let twice = co_plus(mesh, &once, j, m, &Q::zero()).unwrap();
                prop_assert!(zero_family(&twice));
            }
        }

        #[test]
        fn delta_and_co_plus_anticommute(vals in rationals(24), j in 1isize..=2, m in -1isize..=1) {
            for mesh in [d2(), d3()] {
                let w = family(mesh, j - 2, m + 1, &vals);
                let a = pair_delta(mesh, &co_plus(mesh, &w, j - 1, m, &Q::zero()).unwrap(), j, m, &Q::zero()).unwrap();
                let b = co_plus(mesh, &pair_delta(mesh, &w, j - 1, m + 1, &Q::zero()).unwrap(), j, m, &Q::zero()).unwrap();
                for ((e, f), x) in a.iter() {
                    prop_assert_eq!(x + b.get(e, f).unwrap(), Q::zero());
                }
            }
        }

        #[test]
        fn potentials_satisfy_both_conditions(vals in rationals(8)) {
            for mesh in [d2(), d3()] {
                for f in mesh.simplices(0) {
                    let l = mesh.link(f).unwrap();
                    // a closed 0-chain: differences of vertex values
                    let verts = l.simplices(0);
                    let mut c = Chain::new(0);
                    for (i, v) in verts.iter().enumerate().skip(1) {
                        c.add_at(v, &Q::one(), &vals[i % vals.len()]);
                        c.add_at(&verts[0], &Q::one(), &-vals[i % vals.len()].clone());
                    }
                    let (ct, branch) = solve_potential(l, &c, &Q::zero()).unwrap();
                    prop_assert_eq!(boundary(&ct), c.clone());
                    if branch != SolveBranch::GaugeDropped {
                        if l.dim == 1 {
                            prop_assert!(top_coboundary(&ct, l, &Q::zero()).is_zero());
                        } else {
                            prop_assert!(coboundary(&ct, l).is_zero());
                        }
                    }
                    let (again, _) = solve_potential(l, &c, &Q::zero()).unwrap();
                    prop_assert_eq!(again, ct);
                }
            }
        }
    }
}
