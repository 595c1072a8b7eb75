//! Multivariate polynomials with exact rational coefficients.
//!
//! Monomials pack up to eight exponents (one byte each) into a `u64`, so
//! monomial multiplication is integer addition.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::rational::Q;

pub const MAX_VARS: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Mono(pub u64);

impl Mono {
    pub const ONE: Mono = Mono(0);

    fn shift(v: usize) -> u32 {
        (8 * (MAX_VARS - 1 - v)) as u32
    }

    pub fn var(v: usize) -> Mono {
        Mono(1u64 << Self::shift(v))
    }

    pub fn from_exps(exps: &[u32]) -> Mono {
        assert!(exps.len() <= MAX_VARS);
        let mut m = 0u64;
        for (v, &e) in exps.iter().enumerate() {
            assert!(e < 256, "exponent overflow");
            m |= (e as u64) << Self::shift(v);
        }
        Mono(m)
    }

    pub fn exp(self, v: usize) -> u32 {
        ((self.0 >> Self::shift(v)) & 0xff) as u32
    }

    pub fn exps(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|v| self.exp(v)).collect()
    }

    pub fn degree(self) -> u32 {
        self.0.to_le_bytes().iter().map(|&b| b as u32).sum()
    }

    pub fn mul(self, o: Mono) -> Mono {
        Mono(self.0 + o.0)
    }

    /// Removes one power of `v`; caller guarantees the exponent is positive.
    pub fn lower(self, v: usize) -> Mono {
        Mono(self.0 - (1u64 << Self::shift(v)))
    }

    pub fn with_exp(self, v: usize, e: u32) -> Mono {
        let s = Self::shift(v);
        Mono((self.0 & !(0xffu64 << s)) | ((e as u64) << s))
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Mono, Q>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for v in 0..self.nvars {
                match m.exp(v) {
                    0 => {}
                    1 => write!(f, "*x{v}")?,
                    e => write!(f, "*x{v}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

impl Poly {
    pub fn zero(nvars: usize) -> Poly {
        assert!(nvars <= MAX_VARS, "too many polynomial variables");
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Q) -> Poly {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Mono::ONE, c);
        }
        p
    }

    pub fn one(nvars: usize) -> Poly {
        Poly::constant(nvars, Q::one())
    }

    pub fn var(nvars: usize, v: usize) -> Poly {
        assert!(v < nvars);
        let mut p = Poly::zero(nvars);
        p.terms.insert(Mono::var(v), Q::one());
        p
    }

    pub fn monomial(nvars: usize, m: Mono, c: Q) -> Poly {
        let mut p = Poly::zero(nvars);
        p.add_term(m, c);
        p
    }

    /// `c0 + Σ c_v x_v`.
    pub fn affine(c0: Q, lin: &[Q]) -> Poly {
        let mut p = Poly::constant(lin.len(), c0);
        for (v, c) in lin.iter().enumerate() {
            p.add_term(Mono::var(v), c.clone());
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> Q {
        self.terms.get(&Mono::ONE).cloned().unwrap_or_else(Q::zero)
    }

    pub fn coeff(&self, m: Mono) -> Q {
        self.terms.get(&m).cloned().unwrap_or_else(Q::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, s: &Q, other: &Poly) {
        debug_assert_eq!(self.nvars, other.nvars);
        if s.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(*m, s * c);
        }
    }

    pub fn add_assign(&mut self, other: &Poly) {
        debug_assert_eq!(self.nvars, other.nvars);
        for (m, c) in &other.terms {
            self.add_term(*m, c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Poly) {
        debug_assert_eq!(self.nvars, other.nvars);
        for (m, c) in &other.terms {
            self.add_term(*m, -c.clone());
        }
    }

    pub fn scale(&self, s: &Q) -> Poly {
        if s.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (*m, c * s)).collect() }
    }

    pub fn neg(&self) -> Poly {
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect() }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut r = self.clone();
        r.add_assign(other);
        r
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut r = self.clone();
        r.sub_assign(other);
        r
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut r = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                r.add_term(ma.mul(*mb), ca * cb);
            }
        }
        r
    }

    pub fn mul_mono(&self, m: Mono, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(k, v)| (k.mul(m), v * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut r = Poly::one(self.nvars);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    pub fn derivative(&self, v: usize) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e > 0 {
                r.add_term(m.lower(v), c * Q::from_integer(e.into()));
            }
        }
        r
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        assert_eq!(x.len(), self.nvars);
        let mut total = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, xv) in x.iter().enumerate() {
                for _ in 0..m.exp(v) {
                    t *= xv;
                }
            }
            total += t;
        }
        total
    }

    /// Homogeneous component of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    /// Substitutes `x_v -> subst[v]`, all substitutes living in `target_nvars` variables.
    pub fn compose(&self, subst: &[Poly], target_nvars: usize) -> Poly {
        assert_eq!(subst.len(), self.nvars);
        let mut powers: Vec<Vec<Poly>> = subst.iter().map(|s| vec![Poly::one(target_nvars), s.clone()]).collect();
        let mut r = Poly::zero(target_nvars);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(target_nvars, c.clone());
            for v in 0..self.nvars {
                let e = m.exp(v) as usize;
                if e == 0 {
                    continue;
                }
                while powers[v].len() <= e {
                    let next = powers[v].last().unwrap().mul(&subst[v]);
                    powers[v].push(next);
                }
                t = t.mul(&powers[v][e]);
            }
            r.add_assign(&t);
        }
        r
    }

    /// Reindexes variables: variable `i` becomes variable `map[i]` of a ring with `target_nvars`.
    pub fn remap(&self, target_nvars: usize, map: &[usize]) -> Poly {
        assert_eq!(map.len(), self.nvars);
        let mut r = Poly::zero(target_nvars);
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; target_nvars];
            for (i, &t) in map.iter().enumerate() {
                exps[t] += m.exp(i);
            }
            r.add_term(Mono::from_exps(&exps), c.clone());
        }
        r
    }

    /// Exact quotient by `c - x_v`, where `c` must not involve `x_v`.
    pub fn div_linear(&self, v: usize, c: &Poly) -> Option<Poly> {
        debug_assert!(c.terms.keys().all(|m| m.exp(v) == 0));
        // Collect coefficients of powers of x_v.
        let mut by_pow: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, coef) in &self.terms {
            by_pow
                .entry(m.exp(v))
                .or_insert_with(|| Poly::zero(self.nvars))
                .add_term(m.with_exp(v, 0), coef.clone());
        }
        let top = match by_pow.keys().next_back() {
            Some(&t) => t,
            None => return Some(Poly::zero(self.nvars)),
        };
        // Synthetic division by (x_v - c): q_{d-1} = p_d, q_{i-1} = p_i + c q_i.
        let mut quot: Vec<Poly> = vec![Poly::zero(self.nvars); top as usize];
        let mut carry = Poly::zero(self.nvars);
        for i in (1..=top).rev() {
            let mut qi = by_pow.get(&i).cloned().unwrap_or_else(|| Poly::zero(self.nvars));
            qi.add_assign(&carry);
            carry = c.mul(&qi);
            quot[(i - 1) as usize] = qi;
        }
        let mut rem = by_pow.get(&0).cloned().unwrap_or_else(|| Poly::zero(self.nvars));
        rem.add_assign(&carry);
        if !rem.is_zero() {
            return None;
        }
        let mut r = Poly::zero(self.nvars);
        for (i, qi) in quot.into_iter().enumerate() {
            let xv = Mono::var(v);
            let mut shift = Mono::ONE;
            for _ in 0..i {
                shift = shift.mul(xv);
            }
            // p / (c - x_v) = -q
            r.add_assign(&qi.mul_mono(shift, &-Q::one()));
        }
        Some(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    fn x(n: usize, v: usize) -> Poly {
        Poly::var(n, v)
    }

    #[test]
    fn mono_packing() {
        let m = Mono::from_exps(&[1, 0, 3]);
        assert_eq!(m.exp(0), 1);
        assert_eq!(m.exp(2), 3);
        assert_eq!(m.degree(), 4);
        assert_eq!(m.mul(Mono::var(1)).exps(3), vec![1, 1, 3]);
        assert_eq!(m.lower(2).exps(3), vec![1, 0, 2]);
    }

    #[test]
    fn arithmetic_and_eval() {
        let p = x(2, 0).add(&Poly::constant(2, q(2))); // x0 + 2
        let s = p.mul(&p); // x0^2 + 4x0 + 4
        assert_eq!(s.eval(&[q(1), q(5)]), q(9));
        assert_eq!(s.degree(), Some(2));
        assert_eq!(s.derivative(0).eval(&[q(3), q(0)]), q(10));
        assert!(s.sub(&s).is_zero());
    }

    #[test]
    fn compose_matches_eval() {
        let p = x(2, 0).mul(&x(2, 1)).add(&x(2, 1).pow(2));
        let sub = vec![x(1, 0).add(&Poly::one(1)), x(1, 0).scale(&q(2))];
        let c = p.compose(&sub, 1);
        // t -> (t+1)2t + 4t^2
        assert_eq!(c.eval(&[qf(1, 2)]), qf(3, 2) * q(1) + q(1));
    }

    #[test]
    fn linear_division() {
        // b = 1 - x0 - x1, divide b * (x0^2 + x1) by b.
        let n = 2;
        let c = Poly::one(n).sub(&x(n, 0));
        let b = c.sub(&x(n, 1));
        let f = x(n, 0).pow(2).add(&x(n, 1));
        let prod = b.mul(&f);
        assert_eq!(prod.div_linear(1, &c).unwrap(), f);
        assert!(f.div_linear(1, &c).is_none());
    }

    #[test]
    fn remap_moves_variables() {
        let p = x(2, 0).mul(&x(2, 1).pow(2));
        let r = p.remap(4, &[3, 1]);
        assert_eq!(r.eval(&[q(0), q(2), q(0), q(5)]), q(20));
    }
}
