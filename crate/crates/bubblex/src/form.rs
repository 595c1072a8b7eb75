//! Polynomial differential forms on a coordinate space.
//!
//! A basis element `dx_{i_1} ∧ … ∧ dx_{i_k}` (increasing indices) is encoded
//! as a bit mask. Coefficients are [`Poly`] over the same variables.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::poly::Poly;
use crate::rational::Q;

pub type Mask = u32;

pub fn mask_of(indices: &[usize]) -> Mask {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

pub fn mask_indices(m: Mask) -> Vec<usize> {
    (0..32).filter(|i| m & (1 << i) != 0).collect()
}

/// Sign of `dx_a ∧ dx_b` relative to the sorted basis element `dx_{a|b}`; 0 if they overlap.
pub fn wedge_sign(a: Mask, b: Mask) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        bb &= bb - 1;
        swaps += (a >> (j + 1)).count_ones();
    }
    if swaps.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// All k-subsets of `0..n` as masks, in increasing numeric order of the index tuples.
pub fn basis_masks(n: usize, k: usize) -> Vec<Mask> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: Mask, out: &mut Vec<Mask>) {
        if k == 0 {
            out.push(cur);
            return;
        }
        for i in start..n {
            rec(i + 1, n, k - 1, cur | (1 << i), out);
        }
    }
    rec(0, n, k, 0, &mut out);
    out
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Form {
    nvars: usize,
    degree: usize,
    terms: BTreeMap<Mask, Poly>,
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0[{}-form]", self.degree);
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(m, p)| format!("({p:?}) d{:?}", mask_indices(*m))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Form {
    pub fn zero(nvars: usize, degree: usize) -> Form {
        Form { nvars, degree, terms: BTreeMap::new() }
    }

    pub fn scalar(p: Poly) -> Form {
        let mut f = Form::zero(p.nvars(), 0);
        f.add_term(0, p);
        f
    }

    pub fn constant(nvars: usize, c: Q) -> Form {
        Form::scalar(Poly::constant(nvars, c))
    }

    pub fn basis(nvars: usize, indices: &[usize], coeff: Poly) -> Form {
        let mut f = Form::zero(nvars, indices.len());
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return f;
        }
        // sign of the permutation that sorts `indices`
        let mut sign = 1i32;
        for a in 0..indices.len() {
            for b in a + 1..indices.len() {
                if indices[a] > indices[b] {
                    sign = -sign;
                }
            }
        }
        let c = if sign < 0 { coeff.neg() } else { coeff };
        f.add_term(mask_of(&sorted), c);
        f
    }

    /// The 1-form `Σ c_v dx_v`.
    pub fn one_form(coeffs: Vec<Poly>) -> Form {
        let n = coeffs.len();
        let mut f = Form::zero(n, 1);
        for (v, c) in coeffs.into_iter().enumerate() {
            f.add_term(1 << v, c);
        }
        f
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mask, &Poly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: Mask) -> Poly {
        self.terms.get(&m).cloned().unwrap_or_else(|| Poly::zero(self.nvars))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree of the coefficients; `None` for the zero form.
    pub fn poly_degree(&self) -> Option<u32> {
        self.terms.values().filter_map(|p| p.degree()).max()
    }

    pub fn add_term(&mut self, m: Mask, p: Poly) {
        debug_assert_eq!(m.count_ones() as usize, self.degree);
        debug_assert_eq!(p.nvars(), self.nvars);
        if p.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(p);
            }
            Entry::Occupied(mut o) => {
                o.get_mut().add_assign(&p);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_shape(&self, o: &Form) {
        assert_eq!(self.nvars, o.nvars, "form variable spaces differ");
        assert_eq!(self.degree, o.degree, "form degrees differ");
    }

    pub fn add_assign(&mut self, o: &Form) {
        self.check_shape(o);
        for (m, p) in &o.terms {
            self.add_term(*m, p.clone());
        }
    }

    pub fn add_scaled(&mut self, s: &Q, o: &Form) {
        self.check_shape(o);
        if s.is_zero() {
            return;
        }
        for (m, p) in &o.terms {
            self.add_term(*m, p.scale(s));
        }
    }

    pub fn sub_assign(&mut self, o: &Form) {
        self.add_scaled(&-Q::one(), o);
    }

    pub fn add(&self, o: &Form) -> Form {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }

    pub fn sub(&self, o: &Form) -> Form {
        let mut r = self.clone();
        r.sub_assign(o);
        r
    }

    pub fn scale(&self, s: &Q) -> Form {
        let mut r = Form::zero(self.nvars, self.degree);
        if s.is_zero() {
            return r;
        }
        for (m, p) in &self.terms {
            r.terms.insert(*m, p.scale(s));
        }
        r
    }

    pub fn neg(&self) -> Form {
        self.scale(&-Q::one())
    }

    pub fn mul_poly(&self, p: &Poly) -> Form {
        let mut r = Form::zero(self.nvars, self.degree);
        for (m, c) in &self.terms {
            r.add_term(*m, c.mul(p));
        }
        r
    }

    pub fn wedge(&self, o: &Form) -> Form {
        assert_eq!(self.nvars, o.nvars, "form variable spaces differ");
        let mut r = Form::zero(self.nvars, self.degree + o.degree);
        if self.degree + o.degree > self.nvars {
            return r;
        }
        for (ma, pa) in &self.terms {
            for (mb, pb) in &o.terms {
                let s = wedge_sign(*ma, *mb);
                if s == 0 {
                    continue;
                }
                let prod = pa.mul(pb);
                r.add_term(ma | mb, if s < 0 { prod.neg() } else { prod });
            }
        }
        r
    }

    pub fn d(&self) -> Form {
        let mut r = Form::zero(self.nvars, self.degree + 1);
        for (m, p) in &self.terms {
            for v in 0..self.nvars {
                if m & (1 << v) != 0 {
                    continue;
                }
                let dp = p.derivative(v);
                if dp.is_zero() {
                    continue;
                }
                let below = (m & ((1 << v) - 1)).count_ones();
                r.add_term(m | (1 << v), if below % 2 == 0 { dp } else { dp.neg() });
            }
        }
        r
    }

    /// Pullback along `x_v = subst[v]`, each substitute a polynomial in `target_nvars` variables.
    pub fn pullback(&self, subst: &[Poly], target_nvars: usize) -> Form {
        assert_eq!(subst.len(), self.nvars);
        let diffs: Vec<Form> = subst.iter().map(|s| Form::scalar(s.clone()).d()).collect();
        let mut r = Form::zero(target_nvars, self.degree);
        for (m, p) in &self.terms {
            let mut w = Form::scalar(p.compose(subst, target_nvars));
            for i in mask_indices(*m) {
                w = w.wedge(&diffs[i]);
                if w.is_zero() {
                    break;
                }
            }
            if !w.is_zero() {
                r.add_assign(&w);
            }
        }
        r
    }

    /// Contraction with the position vector field `Σ x_v ∂_v` (origin at 0).
    pub fn koszul(&self) -> Form {
        if self.degree == 0 {
            return Form::zero(self.nvars, 0);
        }
        let mut r = Form::zero(self.nvars, self.degree - 1);
        for (m, p) in &self.terms {
            for (l, i) in mask_indices(*m).into_iter().enumerate() {
                let t = p.mul(&Poly::var(self.nvars, i));
                r.add_term(m & !(1 << i), if l % 2 == 0 { t } else { t.neg() });
            }
        }
        r
    }

    pub fn homogeneous_part(&self, d: u32) -> Form {
        let mut r = Form::zero(self.nvars, self.degree);
        for (m, p) in &self.terms {
            r.add_term(*m, p.homogeneous_part(d));
        }
        r
    }

    /// Coefficients evaluated at a point, as a constant form.
    pub fn eval(&self, x: &[Q]) -> Form {
        let mut r = Form::zero(self.nvars, self.degree);
        for (m, p) in &self.terms {
            r.add_term(*m, Poly::constant(self.nvars, p.eval(x)));
        }
        r
    }

    /// Constant coefficient of each basis element (the form must be constant).
    pub fn constant_coeffs(&self) -> BTreeMap<Mask, Q> {
        self.terms.iter().map(|(m, p)| (*m, p.constant_term())).collect()
    }

    /// Applies `f` to every coefficient polynomial.
    pub fn map_coeffs(&self, nvars: usize, f: impl Fn(&Poly) -> Poly) -> Form {
        let mut r = Form::zero(nvars, self.degree);
        for (m, p) in &self.terms {
            r.add_term(*m, f(p));
        }
        r
    }

    /// Reinterprets the form with a relabelled coordinate space; variable `i` becomes `map[i]`.
    pub fn remap(&self, target_nvars: usize, map: &[usize]) -> Form {
        let mut r = Form::zero(target_nvars, self.degree);
        for (m, p) in &self.terms {
            let idx: Vec<usize> = mask_indices(*m).into_iter().map(|i| map[i]).collect();
            r.add_assign(&Form::basis(target_nvars, &idx, p.remap(target_nvars, map)));
        }
        r
    }
}
