//! Linear assignment (maximisation) with a deterministic tie-break.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ris::SwitchMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    /// Row `i` is assigned column `assignment[i]`.
    pub assignment: Vec<usize>,
    /// The same assignment as a switch matrix (`S[i, assignment[i]] = 1`).
    pub switch: SwitchMatrix,
    pub objective: f64,
}

/// Maximises `sum_i cost[i, sigma(i)]` over permutations. Among optimal
/// permutations the lexicographically smallest `sigma` is returned.
pub fn solve_lap_max(cost: &DMatrix<f64>) -> Result<AssignmentResult> {
    let n = cost.nrows();
    if cost.ncols() != n {
        return Err(Error::Validation {
            position: 0,
            reason: format!("cost matrix is {}x{}, expected square", n, cost.ncols()),
        });
    }
    if let Some(pos) = cost.iter().position(|x| !x.is_finite()) {
        return Err(Error::Validation {
            position: pos,
            reason: "non-finite cost entry".into(),
        });
    }
    if n == 0 {
        return Ok(AssignmentResult {
            assignment: Vec::new(),
            switch: SwitchMatrix::identity(0),
            objective: 0.0,
        });
    }

    let (mut row_to_col, u, v) = hungarian_min(n, |i, j| -cost[(i, j)]);
    let scale = cost.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 1.0;
    let tol = 1e-9 * scale * n as f64;
    let tight = |i: usize, j: usize| (-cost[(i, j)] - u[i] - v[j]).abs() <= tol;
    lexicographic_refine(n, &mut row_to_col, tight);

    let objective = row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[(i, j)])
        .sum();
    let switch = SwitchMatrix::from_row_assignment(&row_to_col)?;
    Ok(AssignmentResult {
        assignment: row_to_col,
        switch,
        objective,
    })
}

/// Shortest augmenting path Hungarian method for square minimisation.
/// Returns the assignment and dual potentials with `u_i + v_j <= a_ij`.
fn hungarian_min(n: usize, a: impl Fn(usize, usize) -> f64) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // One-based arrays with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Every optimal assignment is a perfect matching on the tight edges of an
/// optimal dual. Starting from one such matching, rows are fixed in order to
/// the smallest column that still admits a perfect matching of the rest.
fn lexicographic_refine(n: usize, row_to_col: &mut [usize], tight: impl Fn(usize, usize) -> bool) {
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| tight(i, j)).collect())
        .collect();
    let mut col_to_row = vec![0; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    for i in 0..n {
        for &j in &adj[i] {
            if j == row_to_col[i] {
                break;
            }
            // Row i takes j; the row holding j must reach i's old column
            // through an alternating path over rows not yet fixed.
            let target = row_to_col[i];
            let start = col_to_row[j];
            if start < i {
                continue;
            }
            if let Some(path) = alternating_path(start, target, i, &adj, row_to_col) {
                // path: sequence of (row, new column)
                for &(r, c) in &path {
                    row_to_col[r] = c;
                    col_to_row[c] = r;
                }
                row_to_col[i] = j;
                col_to_row[j] = i;
                break;
            }
        }
    }
}

/// Depth-first search for an alternating path from `start` (a row that will
/// lose its column) to the free column `target`, using only rows `> fixed`.
fn alternating_path(
    start: usize,
    target: usize,
    fixed: usize,
    adj: &[Vec<usize>],
    row_to_col: &[usize],
) -> Option<Vec<(usize, usize)>> {
    let n = row_to_col.len();
    let mut col_to_row = vec![usize::MAX; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut visited = vec![false; n];
    visited[row_to_col[start]] = true;
    let mut path = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        r: usize,
        target: usize,
        fixed: usize,
        adj: &[Vec<usize>],
        row_to_col: &[usize],
        col_to_row: &[usize],
        visited: &mut [bool],
        path: &mut Vec<(usize, usize)>,
    ) -> bool {
        for &c in &adj[r] {
            if c == row_to_col[r] || visited[c] {
                continue;
            }
            visited[c] = true;
            if c == target {
                path.push((r, c));
                return true;
            }
            let next = col_to_row[c];
            if next <= fixed {
                continue;
            }
            path.push((r, c));
            if dfs(
                next, target, fixed, adj, row_to_col, col_to_row, visited, path,
            ) {
                return true;
            }
            path.pop();
        }
        false
    }
    dfs(
        start,
        target,
        fixed,
        adj,
        row_to_col,
        &col_to_row,
        &mut visited,
        &mut path,
    )
    .then_some(path)
}
