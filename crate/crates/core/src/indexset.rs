//! Hyperbolic cross index sets `Λ = {ν ∈ ℕ₀^d : Π_k (ν_k + 1) ≤ n}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Multi-indices stored flat, `d` entries each, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    d: usize,
    n: usize,
    flat: Vec<usize>,
}

impl IndexSet {
    /// Exact enumeration of the hyperbolic cross of order `n`.
    pub fn hyperbolic_cross(d: usize, n: usize) -> Result<Self> {
        if d < 1 || n < 1 {
            return invalid(format!("hyperbolic cross needs d >= 1 and n >= 1, got d={d}, n={n}"));
        }
        let mut flat = Vec::new();
        let mut prefix = Vec::with_capacity(d);
        enumerate(d, n, &mut prefix, &mut flat);
        Ok(IndexSet { d, n, flat })
    }

    /// Arbitrary set; sorted lexicographically and deduplicated. The stored
    /// order is the smallest `n` whose cross contains every index.
    pub fn from_indices(d: usize, indices: &[Vec<usize>]) -> Result<Self> {
        if d < 1 {
            return invalid("dimension must be at least 1");
        }
        let mut v: Vec<Vec<usize>> = Vec::with_capacity(indices.len());
        for nu in indices {
            if nu.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: nu.len() });
            }
            v.push(nu.clone());
        }
        if v.is_empty() {
            return invalid("index set must be nonempty");
        }
        v.sort();
        v.dedup();
        let n = v
            .iter()
            .map(|nu| nu.iter().map(|&k| k + 1).product::<usize>())
            .max()
            .unwrap_or(1);
        Ok(IndexSet { d, n, flat: v.concat() })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.flat[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.flat.chunks(self.d)
    }

    pub fn to_vecs(&self) -> Vec<Vec<usize>> {
        self.iter().map(|s| s.to_vec()).collect()
    }

    /// Position of `nu` in the ordering, if present.
    pub fn position(&self, nu: &[usize]) -> Option<usize> {
        if nu.len() != self.d {
            return None;
        }
        let mut lo = 0;
        let mut hi = self.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(nu) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, nu: &[usize]) -> bool {
        self.position(nu).is_some()
    }

    /// Largest single component over all indices.
    pub fn max_component(&self) -> usize {
        self.flat.iter().copied().max().unwrap_or(0)
    }

    /// `Λ_k = {(ν₂..ν_d) : (k, ν₂..ν_d) ∈ Λ}`.
    pub fn slice(&self, k: usize) -> Result<IndexSet> {
        if self.d < 2 {
            return invalid("slicing needs d >= 2");
        }
        if k >= self.n {
            return Err(Error::IndexOutOfRange { index: k, max: self.n - 1 });
        }
        let flat: Vec<usize> = self
            .iter()
            .filter(|nu| nu[0] == k)
            .flat_map(|nu| nu[1..].iter().copied())
            .collect();
        Ok(IndexSet { d: self.d - 1, n: self.n / (k + 1), flat })
    }

    /// Slice sizes `#Λ_0, …, #Λ_{n−1}`.
    pub fn slice_sizes(&self) -> Result<Vec<usize>> {
        if self.d < 2 {
            return invalid("slicing needs d >= 2");
        }
        let mut sizes = vec![0; self.n];
        for nu in self.iter() {
            if nu[0] < self.n {
                sizes[nu[0]] += 1;
            }
        }
        Ok(sizes)
    }

    /// True iff `#Λ_j ≤ #Λ_k` whenever `k ≤ j`.
    pub fn check_monotonicity(&self) -> bool {
        match self.slice_sizes() {
            Ok(s) => s.windows(2).all(|p| p[1] <= p[0]),
            Err(_) => false,
        }
    }
}

fn enumerate(d: usize, budget: usize, prefix: &mut Vec<usize>, out: &mut Vec<usize>) {
    if prefix.len() == d {
        out.extend_from_slice(prefix);
        return;
    }
    // ν_k + 1 ≤ budget for the remaining product to stay within n.
    for v in 0..budget {
        prefix.push(v);
        enumerate(d, budget / (v + 1), prefix, out);
        prefix.pop();
    }
}

/// Upper bound `n (ln n + d ln 2)^{d−1} / (d−1)!` on the cross cardinality.
pub fn cardinality_bound(d: usize, n: usize) -> f64 {
    let nf = n as f64;
    let base = nf.ln() + d as f64 * std::f64::consts::LN_2;
    let fact: f64 = (1..d).map(|k| k as f64).product();
    nf * base.powi(d as i32 - 1) / fact
}
