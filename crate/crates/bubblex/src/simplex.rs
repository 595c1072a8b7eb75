//! Simplices as increasing lists of global vertex indices.

use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Vertex = u32;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Simplex(SmallVec<[Vertex; 4]>);

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        let v: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", v.join(","))
    }
}

impl Simplex {
    pub fn empty() -> Simplex {
        Simplex(SmallVec::new())
    }

    pub fn vertex(v: Vertex) -> Simplex {
        Simplex(SmallVec::from_slice(&[v]))
    }

    /// Builds from arbitrary order; fails on repeated vertices.
    pub fn new(verts: &[Vertex]) -> Result<Simplex> {
        let mut v: SmallVec<[Vertex; 4]> = SmallVec::from_slice(verts);
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InconsistentDim(format!("repeated vertex in {verts:?}")));
        }
        Ok(Simplex(v))
    }

    pub fn from_sorted(verts: &[Vertex]) -> Simplex {
        debug_assert!(verts.windows(2).all(|w| w[0] < w[1]));
        Simplex(SmallVec::from_slice(verts))
    }

    pub fn verts(&self) -> &[Vertex] {
        &self.0
    }

    /// Number of vertices, `|f|`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> isize {
        self.0.len() as isize - 1
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Local position σ_f(v).
    pub fn position(&self, v: Vertex) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn is_face_of(&self, other: &Simplex) -> bool {
        self.0.iter().all(|v| other.contains(*v))
    }

    pub fn is_disjoint(&self, other: &Simplex) -> bool {
        self.0.iter().all(|v| !other.contains(*v))
    }

    /// Sorted union ⟨e,f⟩ of two disjoint simplices.
    pub fn join(&self, other: &Simplex) -> Simplex {
        let mut v: SmallVec<[Vertex; 4]> = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]), "join of overlapping simplices");
        Simplex(v)
    }

    pub fn with_vertex(&self, v: Vertex) -> Simplex {
        let mut s = self.0.clone();
        let pos = s.binary_search(&v).unwrap_err();
        s.insert(pos, v);
        Simplex(s)
    }

    /// Drops the vertex at local position `i`.
    pub fn without_index(&self, i: usize) -> Simplex {
        let mut s = self.0.clone();
        s.remove(i);
        Simplex(s)
    }

    pub fn without(&self, v: Vertex) -> Simplex {
        match self.position(v) {
            Some(i) => self.without_index(i),
            None => self.clone(),
        }
    }

    /// Set difference, kept sorted.
    pub fn minus(&self, other: &Simplex) -> Simplex {
        Simplex(self.0.iter().copied().filter(|v| !other.contains(*v)).collect())
    }

    /// All faces with `d + 1` vertices, lexicographically ordered (d = -1 gives ∅).
    pub fn faces(&self, d: isize) -> Vec<Simplex> {
        let k = (d + 1) as usize;
        if d < -1 || k > self.0.len() {
            return Vec::new();
        }
        let mut out = Vec::new();
        fn rec(src: &[Vertex], k: usize, cur: &mut SmallVec<[Vertex; 4]>, out: &mut Vec<Simplex>) {
            if cur.len() == k {
                out.push(Simplex(cur.clone()));
                return;
            }
            let need = k - cur.len();
            for i in 0..src.len() {
                if src.len() - i < need {
                    break;
                }
                cur.push(src[i]);
                rec(&src[i + 1..], k, cur, out);
                cur.pop();
            }
        }
        rec(&self.0, k, &mut SmallVec::new(), &mut out);
        out
    }

    /// Every face including ∅ and the simplex itself (Δ̄ of the simplex).
    pub fn all_faces(&self) -> Vec<Simplex> {
        (-1..=self.dim()).flat_map(|d| self.faces(d)).collect()
    }

    /// `"0-1-2"`, used in file names; `"empty"` for ∅.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "empty".into();
        }
        self.0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-")
    }

    /// `"0,1,2"`, used as a map key in documents.
    pub fn key(&self) -> String {
        self.0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn parse_key(s: &str) -> Result<Simplex> {
        if s.trim().is_empty() {
            return Ok(Simplex::empty());
        }
        let v: std::result::Result<Vec<Vertex>, _> =
            s.split([',', '-']).map(|t| t.trim().parse::<Vertex>()).collect();
        Simplex::new(&v.map_err(|_| Error::Parse(format!("bad simplex key {s:?}")))?)
    }
}

/// `(-1)^i` as an integer sign.
pub fn alt(i: usize) -> i32 {
    if i.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[Vertex]) -> Simplex {
        Simplex::new(v).unwrap()
    }

    #[test]
    fn faces_enumeration() {
        let t = s(&[0, 1, 2, 3]);
        assert_eq!(t.faces(1).len(), 6);
        assert_eq!(t.faces(0), vec![s(&[0]), s(&[1]), s(&[2]), s(&[3])]);
        assert_eq!(t.faces(-1), vec![Simplex::empty()]);
        assert_eq!(t.faces(3), vec![t.clone()]);
        assert_eq!(t.all_faces().len(), 16);
        assert_eq!(s(&[0, 2, 5]).faces(1), vec![s(&[0, 2]), s(&[0, 5]), s(&[2, 5])]);
    }

    #[test]
    fn join_and_position() {
        let e = s(&[3]);
        let f = s(&[1, 5]);
        let j = e.join(&f);
        assert_eq!(j, s(&[1, 3, 5]));
        assert_eq!(j.position(3), Some(1));
        assert_eq!(j.minus(&f), e);
        assert!(Simplex::new(&[1, 1]).is_err());
        assert_eq!(Simplex::parse_key("2,0").unwrap(), s(&[0, 2]));
        assert_eq!(s(&[0, 2]).label(), "0-2");
    }
}
