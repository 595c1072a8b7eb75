//! Small dense exact linear algebra.
//!
//! Right-hand sides may live in any rational vector space, so one elimination
//! pass solves a chain equation for all components of its coefficient space.

use num_traits::{One, Zero};

use crate::rational::Q;

/// A rational vector space element usable as a right-hand side.
pub trait Vector: Clone {
    fn is_zero_vec(&self) -> bool;
    fn add_scaled_vec(&mut self, s: &Q, other: &Self);
    fn scale_vec(&self, s: &Q) -> Self;
}

impl Vector for Q {
    fn is_zero_vec(&self) -> bool {
        self.is_zero()
    }
    fn add_scaled_vec(&mut self, s: &Q, other: &Self) {
        *self += s * other;
    }
    fn scale_vec(&self, s: &Q) -> Self {
        self * s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveFailure {
    /// Some equation reduces to `0 = nonzero`; carries the original row index.
    Inconsistent(usize),
    /// The matrix has a nontrivial kernel.
    Underdetermined { rank: usize, cols: usize },
}

pub fn det(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        let piv = a[c][c].clone();
        d *= &piv;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &piv;
            for k in c..n {
                let t = &f * &a[c][k];
                a[r][k] -= t;
            }
        }
    }
    d
}

pub fn inverse(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let ident: Vec<Vec<Q>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
    let cols: Vec<Vec<Q>> = ident;
    // solve column by column using the generic solver with row-vector RHS
    let rhs: Vec<RowVec> = (0..n).map(|i| RowVec(cols[i].clone())).collect();
    let sol = solve(m, rhs).ok()?;
    Some(sol.into_iter().map(|r| r.0).collect())
}

#[derive(Clone, Debug, PartialEq)]
struct RowVec(Vec<Q>);

impl Vector for RowVec {
    fn is_zero_vec(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }
    fn add_scaled_vec(&mut self, s: &Q, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }
    fn scale_vec(&self, s: &Q) -> Self {
        RowVec(self.0.iter().map(|x| x * s).collect())
    }
}

pub fn rank(m: &[Vec<Q>]) -> usize {
    let cols = m.first().map_or(0, |r| r.len());
    let rhs: Vec<Q> = vec![Q::zero(); m.len()];
    eliminate(m, cols, rhs).pivots.len()
}

struct Elim<X> {
    rhs: Vec<X>,
    order: Vec<usize>,
    pivots: Vec<usize>,
}

/// Gauss-Jordan elimination with first-nonzero pivoting in row order.
fn eliminate<X: Vector>(m: &[Vec<Q>], cols: usize, rhs: Vec<X>) -> Elim<X> {
    let rows = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut rhs = rhs;
    let mut order: Vec<usize> = (0..rows).collect();
    let mut pivots = Vec::new();
    let mut r0 = 0;
    for c in 0..cols {
        if r0 >= rows {
            break;
        }
        let Some(p) = (r0..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(p, r0);
        rhs.swap(p, r0);
        order.swap(p, r0);
        let inv = Q::one() / &a[r0][c];
        for k in c..cols {
            a[r0][k] = &a[r0][k] * &inv;
        }
        rhs[r0] = rhs[r0].scale_vec(&inv);
        for r in 0..rows {
            if r == r0 || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for k in c..cols {
                let t = &f * &a[r0][k];
                a[r][k] -= t;
            }
            let pr = rhs[r0].clone();
            rhs[r].add_scaled_vec(&-f, &pr);
        }
        pivots.push(c);
        r0 += 1;
    }
    Elim { rhs, order, pivots }
}

/// Solves `A x = rhs` requiring a unique solution.
pub fn solve<X: Vector>(m: &[Vec<Q>], rhs: Vec<X>) -> Result<Vec<X>, SolveFailure> {
    let cols = m.first().map_or(0, |r| r.len());
    assert_eq!(m.len(), rhs.len());
    let Elim { rhs, order, pivots } = eliminate(m, cols, rhs);
    let rank = pivots.len();
    for r in rank..rhs.len() {
        if !rhs[r].is_zero_vec() {
            return Err(SolveFailure::Inconsistent(order[r]));
        }
    }
    if rank < cols {
        return Err(SolveFailure::Underdetermined { rank, cols });
    }
    Ok(rhs.into_iter().take(rank).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    fn mat(rows: &[&[i64]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
    }

    #[test]
    fn determinant_and_inverse() {
        let m = mat(&[&[2, 1], &[1, 3]]);
        assert_eq!(det(&m), q(5));
        let inv = inverse(&m).unwrap();
        assert_eq!(inv[0][0], qf(3, 5));
        assert_eq!(inv[0][1], qf(-1, 5));
        assert!(inverse(&mat(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn overdetermined_consistent_and_not() {
        let m = mat(&[&[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(solve(&m, vec![q(1), q(2), q(3)]).unwrap(), vec![q(1), q(2)]);
        assert_eq!(solve(&m, vec![q(1), q(2), q(4)]), Err(SolveFailure::Inconsistent(2)));
    }

    #[test]
    fn underdetermined_reports_rank() {
        let m = mat(&[&[1, 1]]);
        assert_eq!(solve(&m, vec![q(1)]), Err(SolveFailure::Underdetermined { rank: 1, cols: 2 }));
        assert_eq!(rank(&mat(&[&[1, 2], &[2, 4], &[0, 1]])), 2);
    }
}
