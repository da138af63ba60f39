use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Permutation of {0..q-1}; displayed one-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let q = images.len();
        let mut seen = vec![false; q];
        for &i in &images {
            if i >= q || seen[i] {
                return Err(Error::Domain(format!("not a bijection: {images:?}")));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    /// From one-based images as written in the literature.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::Domain("one-based images must be >= 1".into()));
        }
        Self::new(images.iter().map(|i| i - 1).collect())
    }

    pub fn identity(q: usize) -> Self {
        Self {
            images: (0..q).collect(),
        }
    }

    /// The transposition (i j) in 𝔖_q.
    pub fn transposition(q: usize, i: usize, j: usize) -> Self {
        let mut p = Self::identity(q);
        p.images.swap(i, j);
        p
    }

    pub(crate) fn from_images_unchecked(images: Vec<usize>) -> Self {
        Self { images }
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.size(), other.size(), "composition of different sizes");
        Permutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.size()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { images: inv }
    }

    /// Extends by one extra fixed point appended at index q.
    pub fn extend_fixed(&self) -> Permutation {
        let mut images = self.images.clone();
        images.push(self.size());
        Permutation { images }
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let q = self.size();
        let mut seen = vec![false; q];
        let mut out = Vec::new();
        for s in 0..q {
            if seen[s] {
                continue;
            }
            let mut c = Vec::new();
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                c.push(i);
                i = self.images[i];
            }
            out.push(c);
        }
        out
    }

    pub fn cycle_type(&self) -> CycleType {
        cycle_type_of(&self.images)
    }

    pub fn num_cycles(&self) -> usize {
        count_cycles(&self.images)
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// All of 𝔖_q in lexicographic order.
    pub fn all(q: usize) -> Vec<Permutation> {
        let mut cur: Vec<usize> = (0..q).collect();
        let mut out = vec![Permutation {
            images: cur.clone(),
        }];
        while next_permutation(&mut cur) {
            out.push(Permutation {
                images: cur.clone(),
            });
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.cycles() {
            write!(f, "(")?;
            for (n, i) in c.iter().enumerate() {
                if n > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", i + 1)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub(crate) fn count_cycles(images: &[usize]) -> usize {
    let q = images.len();
    let mut seen = vec![false; q];
    let mut c = 0;
    for s in 0..q {
        if !seen[s] {
            c += 1;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = images[i];
            }
        }
    }
    c
}

pub(crate) fn cycle_type_of(images: &[usize]) -> CycleType {
    let q = images.len();
    let mut seen = vec![false; q];
    let mut parts = Vec::new();
    for s in 0..q {
        if !seen[s] {
            let mut len = 0;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = images[i];
                len += 1;
            }
            parts.push(len);
        }
    }
    CycleType::from_sorted_parts(parts)
}

/// Multiset of cycle lengths, stored in non-increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CycleType {
    parts: Vec<usize>,
}

impl CycleType {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::Domain("cycle lengths must be positive".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    fn from_sorted_parts(mut parts: Vec<usize>) -> Self {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self { parts }
    }

    pub fn identity(q: usize) -> Self {
        Self { parts: vec![1; q] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// q = Σ C_i.
    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of cycles C(ω).
    pub fn num_cycles(&self) -> usize {
        self.parts.len()
    }

    /// A permutation with this cycle type (cycles on consecutive labels).
    pub fn representative(&self) -> Permutation {
        let mut images = Vec::with_capacity(self.size());
        let mut start = 0;
        for &c in &self.parts {
            for i in 0..c {
                images.push(start + (i + 1) % c);
            }
            start += c;
        }
        Permutation { images }
    }

    /// Removes `k` fixed points (parts equal to 1).
    pub fn remove_fixed_points(&self, k: usize) -> Result<CycleType> {
        let ones = self.parts.iter().filter(|&&c| c == 1).count();
        if ones < k {
            return Err(Error::Domain(format!("cycle type has only {ones} fixed points")));
        }
        let mut parts = self.parts.clone();
        parts.truncate(parts.len() - k);
        Ok(CycleType { parts })
    }

    /// All cycle types (integer partitions) of q.
    pub fn all(q: usize) -> Vec<CycleType> {
        fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<CycleType>) {
            if rem == 0 {
                out.push(CycleType { parts: cur.clone() });
                return;
            }
            for p in (1..=rem.min(max)).rev() {
                cur.push(p);
                rec(rem - p, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(q, q, &mut Vec::new(), &mut out);
        out
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_sizes_and_partitions() {
        assert_eq!(Permutation::all(4).len(), 24);
        assert_eq!(CycleType::all(8).len(), 22);
        assert_eq!(CycleType::all(0).len(), 1);
    }

    #[test]
    fn compose_and_inverse() {
        let s = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        assert!(s.compose(&s.inverse()).is_identity());
        assert_eq!(s.cycle_type().parts(), &[3]);
        assert_eq!(s.to_string(), "(1 2 3)");
    }

    #[test]
    fn representative_has_its_type() {
        for ct in CycleType::all(6) {
            assert_eq!(ct.representative().cycle_type(), ct);
        }
    }
}
