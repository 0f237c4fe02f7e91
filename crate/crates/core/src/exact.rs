//! Exact discrete optimal transport by the transportation simplex method,
//! plus a brute-force vertex enumerator used to validate it on tiny
//! instances.
//!
//! Degeneracy is handled symbolically: every supply is perturbed by `δ` and
//! the last demand by `nδ` for an infinitesimal `δ`, and flows are carried
//! as `value + coeff·δ` pairs compared lexicographically. The perturbed
//! problem is nondegenerate, so the leaving variable is always unique and
//! the method cannot cycle. Only the `value` part is reported.

use std::cmp::Ordering;
use std::collections::VecDeque;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::{CostMatrix, TransportPlan};

/// Flow comparisons treat values closer than this as equal and fall back to
/// the perturbation coefficient.
const FLOW_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ExactConfig {
    pub max_pivots: usize,
    /// Consecutive pivots without cost decrease before switching the
    /// entering rule from most-negative reduced cost to Bland's rule.
    /// `None` picks `10 (n + m)`.
    pub stall_threshold: Option<usize>,
    /// Recompute basic flows from the spanning tree every this many pivots
    /// to stop round-off drift.
    pub refresh_interval: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            max_pivots: 5_000_000,
            stall_threshold: None,
            refresh_interval: 256,
        }
    }
}

/// An optimal vertex `P⋆` of the transportation polytope.
#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub plan: TransportPlan,
    pub cost: f64,
    /// Simplex pivots performed.
    pub iterations: usize,
    /// Basic cells of the final spanning-tree basis.
    pub basis: Vec<(usize, usize)>,
    /// Row and column potentials, `C_ij = u_i + v_j` on the basis.
    pub row_potentials: Array1<f64>,
    pub col_potentials: Array1<f64>,
    /// A distinct vertex with the same cost was detected (P⋆ not unique).
    pub alternative_optimum: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Lex {
    value: f64,
    coeff: i64,
}

impl Lex {
    const ZERO: Lex = Lex {
        value: 0.0,
        coeff: 0,
    };

    fn sub(self, o: Lex) -> Lex {
        Lex {
            value: self.value - o.value,
            coeff: self.coeff - o.coeff,
        }
    }

    fn add(self, o: Lex) -> Lex {
        Lex {
            value: self.value + o.value,
            coeff: self.coeff + o.coeff,
        }
    }

    fn cmp(self, o: Lex) -> Ordering {
        let d = self.value - o.value;
        if d > FLOW_TOL {
            Ordering::Greater
        } else if d < -FLOW_TOL {
            Ordering::Less
        } else {
            self.coeff.cmp(&o.coeff)
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct BasicCell {
    row: usize,
    col: usize,
    flow: Lex,
}

/// Spanning-tree basis over `n` row nodes and `m` column nodes.
struct Basis {
    n: usize,
    m: usize,
    cells: Vec<BasicCell>,
    /// Basis-cell indices incident to each node; rows are `0..n`, columns `n..n+m`.
    adjacency: Vec<Vec<usize>>,
}

impl Basis {
    fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            cells: Vec::with_capacity(n + m - 1),
            adjacency: vec![Vec::new(); n + m],
        }
    }

    fn push(&mut self, row: usize, col: usize, flow: Lex) {
        let k = self.cells.len();
        self.cells.push(BasicCell { row, col, flow });
        self.adjacency[row].push(k);
        self.adjacency[self.n + col].push(k);
    }

    fn other_end(&self, k: usize, node: usize) -> usize {
        let c = self.cells[k];
        if node < self.n {
            self.n + c.col
        } else {
            c.row
        }
    }

    /// Replaces basis cell `k` by `(row, col)` with the given flow.
    fn replace(&mut self, k: usize, row: usize, col: usize, flow: Lex) {
        let old = self.cells[k];
        let n = self.n;
        self.adjacency[old.row].retain(|&e| e != k);
        self.adjacency[n + old.col].retain(|&e| e != k);
        self.cells[k] = BasicCell { row, col, flow };
        self.adjacency[row].push(k);
        self.adjacency[n + col].push(k);
    }

    fn potentials(&self, cost: ArrayView2<'_, f64>) -> (Array1<f64>, Array1<f64>) {
        let (n, m) = (self.n, self.m);
        let mut u = Array1::from_elem(n, f64::NAN);
        let mut v = Array1::from_elem(m, f64::NAN);
        let mut seen = vec![false; n + m];
        let mut queue = VecDeque::with_capacity(n + m);
        u[0] = 0.0;
        seen[0] = true;
        queue.push_back(0usize);
        while let Some(node) = queue.pop_front() {
            for &k in &self.adjacency[node] {
                let other = self.other_end(k, node);
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                let c = self.cells[k];
                if other < n {
                    u[other] = cost[[c.row, c.col]] - v[c.col];
                } else {
                    v[c.col] = cost[[c.row, c.col]] - u[c.row];
                }
                queue.push_back(other);
            }
        }
        (u, v)
    }

    /// Tree path from row node `row` to column node `col`, as basis-cell
    /// indices ordered from the row end.
    fn path(&self, row: usize, col: usize) -> Vec<usize> {
        let target = self.n + col;
        let mut parent_edge = vec![usize::MAX; self.n + self.m];
        let mut seen = vec![false; self.n + self.m];
        let mut queue = VecDeque::new();
        seen[row] = true;
        queue.push_back(row);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &k in &self.adjacency[node] {
                let other = self.other_end(k, node);
                if !seen[other] {
                    seen[other] = true;
                    parent_edge[other] = k;
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != row {
            let k = parent_edge[node];
            path.push(k);
            node = self.other_end(k, node);
        }
        path.reverse();
        path
    }

    /// Solves for the unique tree flows carrying the given node balances by
    /// repeatedly peeling leaves.
    fn solve_flows(&mut self, supply: &[Lex], demand: &[Lex]) {
        let n = self.n;
        let mut rest: Vec<Lex> = supply.iter().chain(demand.iter()).copied().collect();
        let mut degree: Vec<usize> = self.adjacency.iter().map(Vec::len).collect();
        let mut done = vec![false; self.cells.len()];
        let mut leaves: Vec<usize> = (0..n + self.m).filter(|&v| degree[v] == 1).collect();
        while let Some(node) = leaves.pop() {
            if degree[node] != 1 {
                continue;
            }
            let Some(&k) = self.adjacency[node].iter().find(|&&k| !done[k]) else {
                continue;
            };
            done[k] = true;
            let flow = rest[node];
            self.cells[k].flow = flow;
            let other = self.other_end(k, node);
            rest[node] = Lex::ZERO;
            rest[other] = rest[other].sub(flow);
            degree[node] -= 1;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push(other);
            }
        }
        let _ = n;
    }
}

fn validate(cost: &CostMatrix, source: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<()> {
    let expected = (source.len(), target.len());
    if cost.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: cost.shape(),
        });
    }
    Ok(())
}

/// Minimizes `⟨C, P⟩` over couplings of `source` and `target`.
pub fn solve_exact(
    cost: &CostMatrix,
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
) -> Result<ExactSolution> {
    solve_exact_with(cost, source, target, &ExactConfig::default())
}

pub fn solve_exact_with(
    cost: &CostMatrix,
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    config: &ExactConfig,
) -> Result<ExactSolution> {
    validate(cost, source, target)?;
    transportation_simplex(cost.entries(), source.weights(), target.weights(), config)
}

pub(crate) fn transportation_simplex(
    c: ArrayView2<'_, f64>,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    config: &ExactConfig,
) -> Result<ExactSolution> {
    let (n, m) = c.dim();
    let supply: Vec<Lex> = a.iter().map(|&value| Lex { value, coeff: 1 }).collect();
    let demand: Vec<Lex> = b
        .iter()
        .enumerate()
        .map(|(j, &value)| Lex {
            value,
            coeff: if j + 1 == m { n as i64 } else { 0 },
        })
        .collect();

    let mut basis = north_west_corner(c, &supply, &demand);
    let reduced_tol = 1e-12 * c.iter().copied().fold(1.0, f64::max);
    let stall_threshold = config.stall_threshold.unwrap_or(10 * (n + m));

    let mut pivots = 0usize;
    let mut stalled = 0usize;
    loop {
        let (u, v) = basis.potentials(c);
        let entering = if stalled >= stall_threshold {
            first_negative(c, &u, &v, reduced_tol)
        } else {
            most_negative(c, &u, &v, reduced_tol)
        };
        let Some((ei, ej)) = entering else {
            basis.solve_flows(&supply, &demand);
            let alternative = has_alternative_vertex(&basis, c, &u, &v, reduced_tol);
            return Ok(finish(basis, c, a, b, u, v, pivots, alternative));
        };
        if pivots >= config.max_pivots {
            basis.solve_flows(&supply, &demand);
            let best = finish(basis, c, a, b, u, v, pivots, false);
            return Err(Error::ExactNotConverged {
                pivots,
                best: Box::new(best),
            });
        }

        let path = basis.path(ei, ej);
        // Around the cycle the entering cell gains θ; the tree edges from
        // the column end alternate −θ, +θ, …, so the edge adjacent to the
        // entering row loses θ as well.
        let k = path.len();
        let mut leaving = usize::MAX;
        let mut theta = Lex::ZERO;
        for (t, &e) in path.iter().enumerate() {
            if (k - 1 - t).is_multiple_of(2) {
                let f = basis.cells[e].flow;
                if leaving == usize::MAX || f.cmp(theta) == Ordering::Less {
                    leaving = e;
                    theta = f;
                }
            }
        }
        for (t, &e) in path.iter().enumerate() {
            let f = basis.cells[e].flow;
            basis.cells[e].flow = if (k - 1 - t).is_multiple_of(2) {
                f.sub(theta)
            } else {
                f.add(theta)
            };
        }
        basis.replace(leaving, ei, ej, theta);
        pivots += 1;

        if theta.value > FLOW_TOL {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if pivots.is_multiple_of(config.refresh_interval) {
            basis.solve_flows(&supply, &demand);
        }
    }
}

fn north_west_corner(c: ArrayView2<'_, f64>, supply: &[Lex], demand: &[Lex]) -> Basis {
    let (n, m) = c.dim();
    let mut basis = Basis::new(n, m);
    let (mut i, mut j) = (0, 0);
    let mut s = supply[0];
    let mut d = demand[0];
    while i < n && j < m {
        match s.cmp(d) {
            Ordering::Less => {
                basis.push(i, j, s);
                d = d.sub(s);
                i += 1;
                if i < n {
                    s = supply[i];
                }
            }
            Ordering::Greater => {
                basis.push(i, j, d);
                s = s.sub(d);
                j += 1;
                if j < m {
                    d = demand[j];
                }
            }
            Ordering::Equal => {
                basis.push(i, j, s);
                i += 1;
                j += 1;
                if i < n {
                    s = supply[i];
                }
                if j < m {
                    d = demand[j];
                }
                // Keep the tree connected across a simultaneous exhaustion.
                if i < n && j < m {
                    basis.push(i, j - 1, Lex::ZERO);
                }
            }
        }
    }
    // Round-off can end the sweep early; connect any leftover nodes with
    // zero-flow cells so the basis is a spanning tree.
    while i < n {
        basis.push(i, m - 1, Lex::ZERO);
        i += 1;
    }
    while j < m {
        basis.push(n - 1, j, Lex::ZERO);
        j += 1;
    }
    basis.solve_flows(supply, demand);
    basis
}

fn most_negative(
    c: ArrayView2<'_, f64>,
    u: &Array1<f64>,
    v: &Array1<f64>,
    tol: f64,
) -> Option<(usize, usize)> {
    let mut best = -tol;
    let mut arg = None;
    for (i, row) in c.rows().into_iter().enumerate() {
        let ui = u[i];
        for (j, &cij) in row.iter().enumerate() {
            let r = cij - ui - v[j];
            if r < best {
                best = r;
                arg = Some((i, j));
            }
        }
    }
    arg
}

fn first_negative(
    c: ArrayView2<'_, f64>,
    u: &Array1<f64>,
    v: &Array1<f64>,
    tol: f64,
) -> Option<(usize, usize)> {
    c.indexed_iter()
        .find(|((i, j), cij)| **cij - u[*i] - v[*j] < -tol)
        .map(|(idx, _)| idx)
}

/// A nonbasic cell with zero reduced cost whose cycle can carry positive
/// flow leads to a different vertex of equal cost.
fn has_alternative_vertex(
    basis: &Basis,
    c: ArrayView2<'_, f64>,
    u: &Array1<f64>,
    v: &Array1<f64>,
    tol: f64,
) -> bool {
    let (n, m) = c.dim();
    let mut is_basic = Array2::from_elem((n, m), false);
    for cell in &basis.cells {
        is_basic[[cell.row, cell.col]] = true;
    }
    for ((i, j), &cij) in c.indexed_iter() {
        if is_basic[[i, j]] || (cij - u[i] - v[j]).abs() > tol {
            continue;
        }
        let path = basis.path(i, j);
        let k = path.len();
        let theta = path
            .iter()
            .enumerate()
            .filter(|(t, _)| (k - 1 - t).is_multiple_of(2))
            .map(|(_, &e)| basis.cells[e].flow.value)
            .fold(f64::INFINITY, f64::min);
        if theta > 1e-12 {
            return true;
        }
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn finish(
    basis: Basis,
    c: ArrayView2<'_, f64>,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    u: Array1<f64>,
    v: Array1<f64>,
    pivots: usize,
    alternative_optimum: bool,
) -> ExactSolution {
    let (n, m) = c.dim();
    let mut entries = Array2::zeros((n, m));
    for cell in &basis.cells {
        entries[[cell.row, cell.col]] += cell.flow.value.max(0.0);
    }
    let cost = crate::plan::frobenius(c, entries.view());
    let plan = TransportPlan::new(entries, a.to_owned(), b.to_owned())
        .expect("simplex flows are finite and clamped nonnegative");
    ExactSolution {
        plan,
        cost,
        iterations: pivots,
        basis: basis.cells.iter().map(|c| (c.row, c.col)).collect(),
        row_potentials: u,
        col_potentials: v,
        alternative_optimum,
    }
}

/// Largest `n = m` accepted for uniform-weight permutation enumeration.
pub const BRUTE_FORCE_MAX_UNIFORM: usize = 8;
/// Largest `n` or `m` accepted for general-weight vertex enumeration.
pub const BRUTE_FORCE_MAX_GENERAL: usize = 4;

/// Minimum transport cost by exhaustive enumeration.
///
/// Uniform weights with `n = m ≤ 8` enumerate all permutation plans
/// (Birkhoff–von Neumann). Otherwise, for `n, m ≤ 4`, every spanning tree
/// of the complete bipartite graph is built by recursive support search,
/// its unique tree flow is solved, and the cheapest nonnegative one wins.
pub fn brute_force_small(
    cost: &CostMatrix,
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
) -> Result<f64> {
    validate(cost, source, target)?;
    let (n, m) = cost.shape();
    let c = cost.entries();
    let uniform = n == m
        && source
            .weights()
            .iter()
            .chain(target.weights().iter())
            .all(|w| (w - 1.0 / n as f64).abs() <= 1e-15);
    if uniform && n <= BRUTE_FORCE_MAX_UNIFORM {
        return Ok(min_over_permutations(c));
    }
    if n > BRUTE_FORCE_MAX_GENERAL || m > BRUTE_FORCE_MAX_GENERAL {
        return Err(Error::TooLarge(format!(
            "{n}x{m}: general weights need n, m <= {BRUTE_FORCE_MAX_GENERAL}, uniform needs n = m <= {BRUTE_FORCE_MAX_UNIFORM}"
        )));
    }
    Ok(min_over_spanning_trees(
        c,
        source.weights().as_slice().expect("contiguous"),
        target.weights().as_slice().expect("contiguous"),
    ))
}

fn min_over_permutations(c: ArrayView2<'_, f64>) -> f64 {
    let n = c.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, c, &mut best);
    best / n as f64
}

fn permute(perm: &mut [usize], k: usize, c: ArrayView2<'_, f64>, best: &mut f64) {
    if k == perm.len() {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| c[[i, j]]).sum();
        if total < *best {
            *best = total;
        }
        return;
    }
    for t in k..perm.len() {
        perm.swap(k, t);
        permute(perm, k + 1, c, best);
        perm.swap(k, t);
    }
}

fn min_over_spanning_trees(c: ArrayView2<'_, f64>, a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = c.dim();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let mut chosen = Vec::with_capacity(n + m - 1);
    let mut best = f64::INFINITY;
    let mut parent: Vec<usize> = (0..n + m).collect();
    search_trees(
        &cells,
        0,
        &mut chosen,
        &mut parent,
        n,
        m,
        c,
        a,
        b,
        &mut best,
    );
    best
}

fn find(parent: &[usize], mut x: usize) -> usize {
    while parent[x] != x {
        x = parent[x];
    }
    x
}

#[allow(clippy::too_many_arguments)]
fn search_trees(
    cells: &[(usize, usize)],
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    parent: &mut Vec<usize>,
    n: usize,
    m: usize,
    c: ArrayView2<'_, f64>,
    a: &[f64],
    b: &[f64],
    best: &mut f64,
) {
    if chosen.len() == n + m - 1 {
        if let Some(value) = tree_flow_cost(chosen, n, m, c, a, b) {
            if value < *best {
                *best = value;
            }
        }
        return;
    }
    let needed = n + m - 1 - chosen.len();
    for k in start..cells.len() {
        if cells.len() - k < needed {
            break;
        }
        let (i, j) = cells[k];
        let (ri, rj) = (find(parent, i), find(parent, n + j));
        if ri == rj {
            continue;
        }
        // Union without path compression so it can be undone.
        parent[ri] = rj;
        chosen.push((i, j));
        search_trees(cells, k + 1, chosen, parent, n, m, c, a, b, best);
        chosen.pop();
        parent[ri] = ri;
    }
}

/// Cost of the unique flow on a spanning tree, or `None` if it is infeasible.
fn tree_flow_cost(
    tree: &[(usize, usize)],
    n: usize,
    m: usize,
    c: ArrayView2<'_, f64>,
    a: &[f64],
    b: &[f64],
) -> Option<f64> {
    let mut rest: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let mut degree = vec![0usize; n + m];
    for &(i, j) in tree {
        degree[i] += 1;
        degree[n + j] += 1;
    }
    let mut used = vec![false; tree.len()];
    let mut total = 0.0;
    for _ in 0..tree.len() {
        let (k, leaf) = tree.iter().enumerate().find_map(|(k, &(i, j))| {
            if used[k] {
                None
            } else if degree[i] == 1 {
                Some((k, i))
            } else if degree[n + j] == 1 {
                Some((k, n + j))
            } else {
                None
            }
        })?;
        let (i, j) = tree[k];
        let other = if leaf == i { n + j } else { i };
        let flow = rest[leaf];
        if flow < -1e-12 {
            return None;
        }
        used[k] = true;
        rest[leaf] = 0.0;
        rest[other] -= flow;
        degree[i] -= 1;
        degree[n + j] -= 1;
        total += flow * c[[i, j]];
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{marginal_violation, plan_cost};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn uniform(n: usize) -> DiscreteMeasure {
        DiscreteMeasure::uniform(Array2::zeros((n, 1))).unwrap()
    }

    #[test]
    fn zero_diagonal_instance() {
        let c = CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let s = solve_exact(&c, &uniform(2), &uniform(2)).unwrap();
        assert_eq!(s.cost, 0.0);
        assert_eq!(s.plan.entries(), array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn hand_instances() {
        let c = CostMatrix::new(array![[1.0, 3.0], [2.0, 1.0]]).unwrap();
        let s = solve_exact(&c, &uniform(2), &uniform(2)).unwrap();
        assert_abs_diff_eq!(s.cost, 1.0, epsilon = 1e-15);
        assert_eq!(
            brute_force_small(&c, &uniform(2), &uniform(2)).unwrap(),
            1.0
        );

        // Cost is constant over the polytope: both vertices give 2.5.
        let c = CostMatrix::new(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let s = solve_exact(&c, &uniform(2), &uniform(2)).unwrap();
        assert_abs_diff_eq!(s.cost, 2.5, epsilon = 1e-15);
        assert!(s.alternative_optimum);
    }

    #[test]
    fn zero_matrix_brute_force() {
        let c = CostMatrix::new(Array2::zeros((3, 3))).unwrap();
        assert_eq!(
            brute_force_small(&c, &uniform(3), &uniform(3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn brute_force_rejects_large() {
        let c = CostMatrix::new(Array2::zeros((9, 9))).unwrap();
        assert!(matches!(
            brute_force_small(&c, &uniform(9), &uniform(9)),
            Err(Error::TooLarge(_))
        ));
        let w =
            DiscreteMeasure::new(Array2::zeros((5, 1)), array![0.1, 0.2, 0.3, 0.2, 0.2]).unwrap();
        let c = CostMatrix::new(Array2::zeros((5, 5))).unwrap();
        assert!(brute_force_small(&c, &w, &w).is_err());
    }

    #[test]
    fn general_weights_rectangular() {
        let a = DiscreteMeasure::new(Array2::zeros((2, 1)), array![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::new(Array2::zeros((3, 1)), array![0.2, 0.3, 0.5]).unwrap();
        let c = CostMatrix::new(array![[0.0, 2.0, 1.0], [3.0, 0.0, 1.0]]).unwrap();
        let s = solve_exact(&c, &a, &b).unwrap();
        let bf = brute_force_small(&c, &a, &b).unwrap();
        assert_abs_diff_eq!(s.cost, bf, epsilon = 1e-12);
        // row 0 sends 0.2 at cost 0 and 0.3 at cost 1; row 1 sends 0.3 at 0 and 0.2 at 1.
        assert_abs_diff_eq!(bf, 0.5, epsilon = 1e-12);
        assert!(marginal_violation(&s.plan) <= 1e-12);
    }

    #[test]
    fn pivot_cap_returns_feasible_plan() {
        let c = CostMatrix::new(array![[3.0, 1.0], [1.0, 3.0]]).unwrap();
        let cfg = ExactConfig {
            max_pivots: 0,
            ..ExactConfig::default()
        };
        match solve_exact_with(&c, &uniform(2), &uniform(2), &cfg) {
            Err(Error::ExactNotConverged { best, .. }) => {
                assert!(marginal_violation(&best.plan) <= 1e-12);
                assert_abs_diff_eq!(
                    best.cost,
                    plan_cost(&c, &best.plan).unwrap(),
                    epsilon = 1e-15
                );
            }
            other => panic!("expected pivot-cap failure, got {other:?}"),
        }
    }

    #[test]
    fn vertex_support_bound() {
        let c = CostMatrix::new(Array2::from_shape_fn((5, 7), |(i, j)| {
            ((i * 7 + j * 3) % 5) as f64
        }))
        .unwrap();
        let a = DiscreteMeasure::uniform(Array2::zeros((5, 1))).unwrap();
        let b = DiscreteMeasure::uniform(Array2::zeros((7, 1))).unwrap();
        let s = solve_exact(&c, &a, &b).unwrap();
        assert!(s.plan.support_size(1e-12) < 5 + 7);
        assert_eq!(s.basis.len(), 5 + 7 - 1);
    }
}
