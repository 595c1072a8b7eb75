//! Seeded random conforming forms in P_rΛ^k(T) and P_r⁻Λ^k(T).
//!
//! A sample is a global polynomial form plus Whitney elements multiplied by
//! products of hat functions. Both pieces are single valued across faces,
//! so the result is conforming by construction. For k = n no continuity is
//! required and independent per-cell terms are added as well.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::form::{basis_masks, Form};
use crate::mesh::Mesh;
use crate::poly::{Mono, Poly};
use crate::polyform::{whitney_on_cell, PiecewiseForm};
use crate::rational::{qf, Q};
use crate::simplex::Simplex;

/// Largest denominator of a sampled coefficient.
const DENOM: i64 = 6;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Sampler {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// A rational in [−1, 1] with denominator at most `DENOM`.
    pub fn coeff(&mut self) -> Q {
        let d = self.rng.gen_range(1..=DENOM);
        let p = self.rng.gen_range(-d..=d);
        qf(p, d)
    }

    fn nonzero_coeff(&mut self) -> Q {
        loop {
            let c = self.coeff();
            if c != qf(0, 1) {
                return c;
            }
        }
    }

    /// A sparse polynomial with a few monomials of total degree ≤ `deg`.
    pub fn poly(&mut self, n: usize, deg: u32, terms: usize) -> Poly {
        let mut p = Poly::zero(n);
        for _ in 0..terms {
            let total = self.rng.gen_range(0..=deg);
            let mut exps = vec![0u32; n];
            for _ in 0..total {
                exps[self.rng.gen_range(0..n)] += 1;
            }
            let c = self.coeff();
            p.add_term(Mono::from_exps(&exps), c);
        }
        p
    }

    /// A polynomial k-form in P_r (or P_r⁻ when `trimmed`) on R^n.
    pub fn global_form(&mut self, n: usize, k: usize, r: u32, trimmed: bool) -> Form {
        let mut f = Form::zero(n, k);
        let base_deg = if trimmed { r.saturating_sub(1) } else { r };
        for m in basis_masks(n, k) {
            f.add_term(m, self.poly(n, base_deg, 2));
        }
        if trimmed && r >= 1 && k < n {
            // κ of a homogeneous (k+1)-form of degree r−1 stays in P_r⁻
            let mut g = Form::zero(n, k + 1);
            for m in basis_masks(n, k + 1) {
                g.add_term(m, self.poly(n, r - 1, 1).homogeneous_part(r - 1));
            }
            f.add_assign(&g.koszul());
        }
        f
    }

    /// A random conforming form in P_rΛ^k(T), or P_r⁻Λ^k(T) when `trimmed`. Requires r ≥ 1.
    pub fn form(&mut self, mesh: &Mesh, k: usize, r: u32, trimmed: bool) -> PiecewiseForm {
        let n = mesh.dim();
        assert!(r >= 1, "polynomial degree must be at least 1");
        let mut u = PiecewiseForm::global(mesh, &self.global_form(n, k, r, trimmed));
        let simplices: Vec<Simplex> = mesh.simplices(k as isize).to_vec();
        for g in &simplices {
            let c = self.nonzero_coeff();
            // hat product of degree ≤ r−1 over vertices near g
            let near: Vec<u32> = {
                let mut v: Vec<u32> = mesh.star(g).iter().flat_map(|&c| mesh.cells()[c].verts().to_vec()).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let t = self.rng.gen_range(0..r) as usize;
            let factors: Vec<u32> = (0..t).map(|_| near[self.rng.gen_range(0..near.len())]).collect();
            for cell in 0..mesh.num_cells() {
                let phi = whitney_on_cell(mesh, cell, g);
                if phi.is_zero() {
                    continue;
                }
                let mut p = Poly::constant(n, c.clone());
                for &v in &factors {
                    p = p.mul(&mesh.hat(cell, v));
                }
                u.cell_mut(cell).add_assign(&phi.mul_poly(&p));
            }
        }
        if k == n {
            let top = (1u32 << n) - 1;
            let deg = if trimmed { r - 1 } else { r };
            for cell in 0..mesh.num_cells() {
                let p = self.poly(n, deg, 2);
                u.cell_mut(cell).add_term(top, p);
            }
        }
        u
    }
}

impl Sampler {
    /// A rational point strictly inside a cell, from positive integer barycentric weights.
    pub fn interior_point(&mut self, mesh: &Mesh, cell: usize) -> Vec<Q> {
        let verts = mesh.cells()[cell].verts().to_vec();
        let weights: Vec<i64> = verts.iter().map(|_| self.rng.gen_range(1..=9)).collect();
        let total: i64 = weights.iter().sum();
        (0..mesh.dim())
            .map(|a| verts.iter().zip(&weights).map(|(&v, &w)| qf(w, total) * &mesh.coords(v)[a]).sum())
            .collect()
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.rng.gen_range(0..len)
    }
}

/// One-shot helper: a seeded random conforming form.
pub fn random_form(mesh: &Mesh, k: usize, r: u32, trimmed: bool, seed: u64) -> PiecewiseForm {
    Sampler::new(seed).form(mesh, k, r, trimmed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyform::Space;
    use crate::testutil::{d2, d3};

    #[test]
    fn samples_are_conforming_members() {
        for mesh in [d2(), d3()] {
            for k in 0..=mesh.dim() {
                for r in 1..=3 {
                    for trimmed in [false, true] {
                        let u = random_form(mesh, k, r, trimmed, 7 + r as u64);
                        assert!(u.conformity_check(mesh).conforming, "k={k} r={r}");
                        let space = if trimmed { Space::Trimmed(r) } else { Space::Full(r) };
                        assert!(u.membership(space), "k={k} r={r} trimmed={trimmed}");
                        assert!(!u.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn seeded_and_reproducible() {
        let a = random_form(d2(), 1, 2, false, 42);
        let b = random_form(d2(), 1, 2, false, 42);
        let c = random_form(d2(), 1, 2, false, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
