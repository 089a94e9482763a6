//! Random permutations and their cycle structure.
//!
//! Indices are 0-based throughout the crate; file exports convert to 1-based.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A permutation of `{0, .., n-1}` stored as its image array: `image[i] = pi(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    image: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Permutation {
        Permutation {
            image: (0..n as u32).collect(),
        }
    }

    /// Builds a permutation from an image array, checking bijectivity.
    pub fn from_image(image: Vec<u32>) -> Result<Permutation> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if (v as usize) >= n || seen[v as usize] {
                return Err(Error::invalid("image array is not a bijection"));
            }
            seen[v as usize] = true;
        }
        Ok(Permutation { image })
    }

    /// Uniform sample from S_n: in-place Fisher-Yates with exactly `n - 1`
    /// bounded-uniform draws (each by rejection, so exactly uniform).
    pub fn sample_uniform(n: usize, rng: &mut RngStream) -> Result<Permutation> {
        if n == 0 {
            return Err(Error::invalid("permutation size must be at least 1"));
        }
        let mut image: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            let j = rng.bounded_usize(i + 1);
            image.swap(i, j);
        }
        Ok(Permutation { image })
    }

    /// Ewens(theta) sample via the Chinese-restaurant insertion process:
    /// element i starts a new cycle with probability theta / (theta + i),
    /// otherwise it is inserted after a uniformly chosen earlier element.
    /// One pass, O(n); theta = 1 reduces to the uniform law.
    pub fn sample_ewens(n: usize, theta: f64, rng: &mut RngStream) -> Result<Permutation> {
        if n == 0 {
            return Err(Error::invalid("permutation size must be at least 1"));
        }
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::invalid("Ewens parameter theta must be positive"));
        }
        let mut image: Vec<u32> = vec![0; n];
        image[0] = 0;
        for i in 1..n {
            let new_cycle = rng.uniform_f64() * (theta + i as f64) < theta;
            if new_cycle {
                image[i] = i as u32;
            } else {
                let j = rng.bounded_usize(i);
                image[i] = image[j];
                image[j] = i as u32;
            }
        }
        Ok(Permutation { image })
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[u32] {
        &self.image
    }

    /// pi(i).
    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.image[i] as usize
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.n()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v as usize] = i as u32;
        }
        Permutation { image: inv }
    }

    /// self after other: `result(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.n() != other.n() {
            return Err(Error::invalid("compose requires equal sizes"));
        }
        let image = other
            .image
            .iter()
            .map(|&j| self.image[j as usize])
            .collect();
        Ok(Permutation { image })
    }

    pub fn count_fixed_points(&self) -> usize {
        self.image
            .iter()
            .enumerate()
            .filter(|(i, &v)| *i == v as usize)
            .count()
    }

    /// Cycle counts by marking and following orbits.
    pub fn cycle_type(&self) -> CycleType {
        let n = self.n();
        let mut counts = vec![0u64; n];
        let mut visited = vec![false; n];
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut len = 0usize;
            let mut i = start;
            while !visited[i] {
                visited[i] = true;
                i = self.image[i] as usize;
                len += 1;
            }
            counts[len - 1] += 1;
        }
        CycleType { counts }
    }

    /// Number of cycles in the cycle decomposition.
    pub fn cycle_count(&self) -> usize {
        self.cycle_type().counts.iter().map(|&c| c as usize).sum()
    }

    /// Sign of the permutation: +1 or -1.
    pub fn sign(&self) -> i8 {
        // Parity = n - #cycles mod 2.
        if (self.n() - self.cycle_count()) % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Cycle counts `counts[k-1]` = number of k-cycles; sum of k * counts[k-1] = n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleType {
    pub counts: Vec<u64>,
}

impl CycleType {
    /// Number of k-cycles (1-based k).
    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(k - 1).copied().unwrap_or(0)
    }

    pub fn total_size(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as u64 + 1) * c)
            .sum()
    }
}

/// Iterates over all n! permutations of `{0,..,n-1}` (Heap's algorithm).
/// Intended for exact enumeration at small n.
pub fn permutations(n: usize) -> PermutationIter {
    PermutationIter {
        state: (0..n as u32).collect(),
        stack: vec![0; n],
        depth: 0,
        first: true,
    }
}

pub struct PermutationIter {
    state: Vec<u32>,
    stack: Vec<usize>,
    depth: usize,
    first: bool,
}

impl Iterator for PermutationIter {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let n = self.state.len();
        if self.first {
            self.first = false;
            return Some(Permutation {
                image: self.state.clone(),
            });
        }
        while self.depth < n {
            if self.stack[self.depth] < self.depth {
                if self.depth % 2 == 0 {
                    self.state.swap(0, self.depth);
                } else {
                    self.state.swap(self.stack[self.depth], self.depth);
                }
                self.stack[self.depth] += 1;
                self.depth = 0;
                return Some(Permutation {
                    image: self.state.clone(),
                });
            } else {
                self.stack[self.depth] = 0;
                self.depth += 1;
            }
        }
        None
    }
}
