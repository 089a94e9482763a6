//! The implicit random matrix `A = P(1) + ... + P(d)` and its exact
//! combinatorial statistics: entries, matrix-vector products, trace powers,
//! simple-cycle counts, and the divisor-weighted trace decomposition.
//!
//! `A` is never stored densely by default; all row/column sums equal `d` by
//! construction, and `entry(i, j)` counts the permutations mapping `i` to `j`.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::RngStream;

/// Default cap on elementary steps for the exponential-in-k enumerations.
pub const DEFAULT_WORK_BUDGET: u64 = 1_000_000_000;

/// Default side length cap for dense materialization.
pub const DEFAULT_DENSE_LIMIT: usize = 4000;

/// Work budget for the enumeration-based operations; exceeding it is a loud
/// error, never a silent truncation.
#[derive(Debug, Clone, Copy)]
pub struct WorkBudget {
    pub elementary_steps: u64,
}

impl Default for WorkBudget {
    fn default() -> Self {
        WorkBudget {
            elementary_steps: DEFAULT_WORK_BUDGET,
        }
    }
}

impl WorkBudget {
    pub fn new(elementary_steps: u64) -> Self {
        WorkBudget { elementary_steps }
    }

    fn check(&self, cost: f64, what: &str) -> Result<()> {
        if cost > self.elementary_steps as f64 {
            return Err(Error::resource(format!(
                "{what} needs ~{cost:.3e} elementary steps, budget is {}",
                self.elementary_steps
            )));
        }
        Ok(())
    }
}

/// The sum of `d` permutation matrices on `n` points, kept implicit.
#[derive(Debug, Clone)]
pub struct PermSum {
    n: usize,
    perms: Vec<Permutation>,
}

/// Exact traces `tr(A^1) .. tr(A^k_max)` as arbitrary-precision integers.
#[derive(Debug, Clone)]
pub struct TraceVector {
    pub k_max: usize,
    pub values: Vec<BigInt>,
}

/// Counts `Q_l` of oriented simple l-cycles whose traversed entries all
/// equal 1 exactly, for l = 1 .. ell_max.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleCounts {
    pub counts: Vec<u64>,
}

impl CycleCounts {
    /// Q_l (1-based l).
    pub fn q(&self, ell: usize) -> u64 {
        self.counts[ell - 1]
    }

    pub fn ell_max(&self) -> usize {
        self.counts.len()
    }
}

/// `tr(A^k)` split into the divisor-weighted cycle part `T_k` and the
/// vanishing remainder. The remainder collects both the repeated-entry and
/// the non-simple-support walks; only its joint decay is a testable target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDecomposition {
    pub k: usize,
    pub trace: i128,
    pub t_k: i128,
    pub residual: i128,
}

impl PermSum {
    /// Wraps explicit permutations; they must share the same ground set size.
    pub fn new(perms: Vec<Permutation>) -> Result<PermSum> {
        if perms.is_empty() {
            return Err(Error::invalid("need at least one permutation"));
        }
        let n = perms[0].n();
        if n == 0 {
            return Err(Error::invalid("ground set must be nonempty"));
        }
        if perms.iter().any(|p| p.n() != n) {
            return Err(Error::invalid("permutations must have equal size"));
        }
        Ok(PermSum { n, perms })
    }

    /// `d` independent uniform permutations.
    pub fn sample_uniform(n: usize, d: usize, rng: &mut RngStream) -> Result<PermSum> {
        if d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        let perms = (0..d)
            .map(|_| Permutation::sample_uniform(n, rng))
            .collect::<Result<Vec<_>>>()?;
        PermSum::new(perms)
    }

    /// `d` independent Ewens(theta) permutations.
    pub fn sample_ewens(n: usize, d: usize, theta: f64, rng: &mut RngStream) -> Result<PermSum> {
        if d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        let perms = (0..d)
            .map(|_| Permutation::sample_ewens(n, theta, rng))
            .collect::<Result<Vec<_>>>()?;
        PermSum::new(perms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.perms.len()
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    /// `A[i][j]` = number of permutations mapping i to j; in `{0, .., d}`.
    pub fn entry(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.n || j >= self.n {
            return Err(Error::invalid(format!(
                "index ({i}, {j}) out of range for n = {}",
                self.n
            )));
        }
        Ok(self.perms.iter().filter(|p| p.apply(i) == j).count())
    }

    /// Dense matrix-vector product `(A v)_i = sum_q v[pi_q(i)]`, O(dn).
    /// Summation order over q is fixed left to right.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::invalid("vector length must equal n"));
        }
        let mut out = vec![0.0; self.n];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// Allocation-free form of [`apply`](Self::apply) for iteration loops.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        out.fill(0.0);
        for p in &self.perms {
            let image = p.image();
            for i in 0..self.n {
                out[i] += v[image[i] as usize];
            }
        }
    }

    /// True when every entry is 0 or 1, i.e. the digraph is simple
    /// (no multiple edges). Reported as a flag only; conditioning on it is
    /// out of scope.
    pub fn is_simple(&self) -> bool {
        let mut targets = Vec::with_capacity(self.d());
        for i in 0..self.n {
            targets.clear();
            targets.extend(self.perms.iter().map(|p| p.apply(i)));
            targets.sort_unstable();
            if targets.windows(2).any(|w| w[0] == w[1]) {
                return false;
            }
        }
        true
    }

    /// Exact `tr(A^k)` by depth-k enumeration over words in `[d]^k`,
    /// maintaining the running composite along the enumeration tree so each
    /// node costs O(n). Estimated cost `n * k * d^k` must fit the budget.
    pub fn trace_power(&self, k: usize, budget: &WorkBudget) -> Result<i128> {
        if k == 0 {
            return Ok(self.n as i128);
        }
        let d = self.d() as f64;
        budget.check(self.n as f64 * k as f64 * d.powi(k as i32), "trace_power")?;
        // Composite stack: stack[j] = pi(w_{j+1}) o ... o pi(w_1) for the
        // current word prefix, so each tree node costs O(n).
        let mut total: i128 = 0;
        let mut stack: Vec<Vec<u32>> = vec![vec![0u32; self.n]; k];
        self.trace_power_rec(k, 0, &mut stack, &mut total);
        Ok(total)
    }

    fn trace_power_rec(&self, k: usize, depth: usize, stack: &mut [Vec<u32>], total: &mut i128) {
        for q in 0..self.d() {
            let image = self.perms[q].image();
            {
                let (lo, hi) = stack.split_at_mut(depth);
                let cur = &mut hi[0];
                if depth == 0 {
                    cur.copy_from_slice(image);
                } else {
                    let prev = &lo[depth - 1];
                    for i in 0..self.n {
                        cur[i] = image[prev[i] as usize];
                    }
                }
            }
            if depth + 1 == k {
                *total += stack[depth]
                    .iter()
                    .enumerate()
                    .filter(|(i, &v)| *i == v as usize)
                    .count() as i128;
            } else {
                self.trace_power_rec(k, depth + 1, stack, total);
            }
        }
    }

    /// Exact traces `tr(A^1) .. tr(A^k_max)` by propagating the dense powers
    /// `A^j` column by column; cost O(k_max * d * n^2), memory O(n^2).
    /// Works for any k_max (no d^k blowup) but needs `n` within the dense
    /// limit. Values are exact integers of unbounded size.
    pub fn trace_powers_dense(&self, k_max: usize, dense_limit: usize) -> Result<TraceVector> {
        if self.n > dense_limit {
            return Err(Error::resource(format!(
                "trace_powers_dense requires n <= {dense_limit}, got n = {}",
                self.n
            )));
        }
        if self.d() == 1 {
            // Single permutation: tr(A^j) is the number of fixed points of pi^j.
            let p = &self.perms[0];
            let mut values = Vec::with_capacity(k_max);
            let mut power = p.clone();
            for j in 1..=k_max {
                values.push(BigInt::from(power.count_fixed_points()));
                if j < k_max {
                    power = p.compose(&power)?;
                }
            }
            return Ok(TraceVector {
                k_max,
                values,
            });
        }
        // Entries of A^j are bounded by d^j; stay in i128 while that fits.
        let bits_per_step = (self.d() as f64).log2();
        let i128_safe_k = ((120.0 - (self.n as f64).log2()) / bits_per_step).floor() as usize;
        if k_max <= i128_safe_k {
            let values = self.trace_powers_dense_i128(k_max);
            return Ok(TraceVector {
                k_max,
                values: values.into_iter().map(BigInt::from).collect(),
            });
        }
        let values = self.trace_powers_dense_big(k_max);
        Ok(TraceVector { k_max, values })
    }

    fn trace_powers_dense_i128(&self, k_max: usize) -> Vec<i128> {
        let n = self.n;
        let mut cur: Vec<i128> = vec![0; n * n];
        for i in 0..n {
            for q in &self.perms {
                cur[i * n + q.apply(i)] += 1;
            }
        }
        let mut next: Vec<i128> = vec![0; n * n];
        let mut values = Vec::with_capacity(k_max);
        for j in 1..=k_max {
            values.push((0..n).map(|i| cur[i * n + i]).sum());
            if j == k_max {
                break;
            }
            // next = A * cur: row i of the product is the sum of rows pi_q(i) of cur.
            next.fill(0);
            for i in 0..n {
                let dst = &mut next[i * n..(i + 1) * n];
                for q in &self.perms {
                    let src = q.apply(i);
                    let row = &cur[src * n..(src + 1) * n];
                    for (a, b) in dst.iter_mut().zip(row) {
                        *a += *b;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        values
    }

    fn trace_powers_dense_big(&self, k_max: usize) -> Vec<BigInt> {
        let n = self.n;
        let zero = BigInt::from(0);
        let mut cur: Vec<BigInt> = vec![zero.clone(); n * n];
        for i in 0..n {
            for q in &self.perms {
                cur[i * n + q.apply(i)] += 1;
            }
        }
        let mut values = Vec::with_capacity(k_max);
        for j in 1..=k_max {
            values.push((0..n).map(|i| cur[i * n + i].clone()).sum());
            if j == k_max {
                break;
            }
            let mut next: Vec<BigInt> = vec![zero.clone(); n * n];
            for i in 0..n {
                for q in &self.perms {
                    let src = q.apply(i);
                    for c in 0..n {
                        let add = cur[src * n + c].clone();
                        next[i * n + c] += add;
                    }
                }
            }
            cur = next;
        }
        values
    }

    /// Number of oriented simple `ell`-cycles all of whose traversed entries
    /// equal 1 exactly (a product of entries equals 1 iff each factor does).
    /// Each cyclic class is counted once, at its minimal-label vertex: the
    /// DFS starts from every vertex `s` and only visits vertices above `s`.
    pub fn cycle_count(&self, ell: usize, budget: &WorkBudget) -> Result<u64> {
        Ok(self.cycle_counts(ell, budget)?.q(ell))
    }

    /// All of `Q_1 .. Q_ell_max` in one DFS sweep.
    pub fn cycle_counts(&self, ell_max: usize, budget: &WorkBudget) -> Result<CycleCounts> {
        if ell_max == 0 {
            return Err(Error::invalid("ell_max must be at least 1"));
        }
        let d = self.d() as f64;
        budget.check(self.n as f64 * d.powi(ell_max as i32), "cycle_counts")?;
        // Adjacency restricted to entries that equal exactly 1: for each
        // vertex, the targets hit by exactly one permutation.
        let n = self.n;
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut targets: Vec<u32> = Vec::with_capacity(self.d());
        for i in 0..n {
            targets.clear();
            targets.extend(self.perms.iter().map(|p| p.apply(i) as u32));
            targets.sort_unstable();
            let list = &mut adj[i];
            let mut idx = 0;
            while idx < targets.len() {
                let mut run = 1;
                while idx + run < targets.len() && targets[idx + run] == targets[idx] {
                    run += 1;
                }
                if run == 1 {
                    list.push(targets[idx]);
                }
                idx += run;
            }
        }
        let mut counts = vec![0u64; ell_max];
        let mut path = Vec::with_capacity(ell_max);
        let mut on_path = vec![false; n];
        for s in 0..n {
            path.clear();
            path.push(s as u32);
            on_path[s] = true;
            dfs_cycles(&adj, s as u32, s as u32, &mut path, &mut on_path, ell_max, &mut counts);
            on_path[s] = false;
        }
        Ok(CycleCounts { counts })
    }

    /// The decomposition `tr(A^k) = T_k + remainder` with
    /// `T_k = sum over divisors l of k of l * Q_l`, remainder >= 0.
    pub fn trace_decomposition(&self, k: usize, budget: &WorkBudget) -> Result<TraceDecomposition> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let trace = self.trace_power(k, budget)?;
        let counts = self.cycle_counts(k, budget)?;
        let t_k: i128 = divisors(k)
            .into_iter()
            .map(|ell| ell as i128 * counts.q(ell) as i128)
            .sum();
        Ok(TraceDecomposition {
            k,
            trace,
            t_k,
            residual: trace - t_k,
        })
    }

    /// Row-major dense integer matrix `M[i][j] = entry(i, j)`.
    pub fn materialize_dense(&self, dense_limit: usize) -> Result<IntMatrix> {
        if self.n > dense_limit {
            return Err(Error::resource(format!(
                "materialize_dense requires n <= {dense_limit}, got n = {}",
                self.n
            )));
        }
        let n = self.n;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for p in &self.perms {
                data[i * n + p.apply(i)] += 1;
            }
        }
        Ok(IntMatrix { n, data })
    }
}

fn dfs_cycles(
    adj: &[Vec<u32>],
    start: u32,
    v: u32,
    path: &mut Vec<u32>,
    on_path: &mut [bool],
    ell_max: usize,
    counts: &mut [u64],
) {
    for &w in &adj[v as usize] {
        if w == start {
            counts[path.len() - 1] += 1;
        }
        if path.len() < ell_max && w > start && !on_path[w as usize] {
            path.push(w);
            on_path[w as usize] = true;
            dfs_cycles(adj, start, w, path, on_path, ell_max, counts);
            on_path[w as usize] = false;
            path.pop();
        }
    }
}

/// Divisors of k in increasing order.
pub fn divisors(k: usize) -> Vec<usize> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1;
    while i * i <= k {
        if k % i == 0 {
            small.push(i);
            if i != k / i {
                large.push(k / i);
            }
        }
        i += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Square dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub n: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Trace of the k-th matrix power, exact in i128. Oracle-grade: plain
    /// cubic multiplication, no reuse of the permutation structure.
    pub fn power_trace(&self, k: usize) -> i128 {
        let n = self.n;
        let base: Vec<i128> = self.data.iter().map(|&v| v as i128).collect();
        if k == 0 {
            return n as i128;
        }
        let mut cur = base.clone();
        for _ in 1..k {
            let mut next = vec![0i128; n * n];
            for i in 0..n {
                for l in 0..n {
                    let a = base[i * n + l];
                    if a == 0 {
                        continue;
                    }
                    for j in 0..n {
                        next[i * n + j] += a * cur[l * n + j];
                    }
                }
            }
            cur = next;
        }
        (0..n).map(|i| cur[i * n + i]).sum()
    }
}
