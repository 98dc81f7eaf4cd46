//! Exact balanced-transportation solver (transportation simplex).
//!
//! Minimizes `sum f_ij c_ij` subject to row sums = supplies, column sums =
//! demands, `f >= 0`. Used for the earth mover's distance between two
//! discrete mass distributions.

use crate::error::{Result, SamError};

const REDUCED_COST_TOL: f64 = 1e-12;

#[derive(Clone, Copy)]
struct BasicCell {
    row: usize,
    col: usize,
    flow: f64,
}

/// Solve the balanced transportation problem. `supply` and `demand` must be
/// strictly positive and have (numerically) equal totals; `cost(i, j)` gives
/// the unit shipping cost.
pub fn min_cost_transport(
    supply: &[f64],
    demand: &[f64],
    cost: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 {
        return Err(SamError::Degenerate("transport with empty marginals".into()));
    }
    if supply.iter().any(|&v| v <= 0.0) || demand.iter().any(|&v| v <= 0.0) {
        return Err(SamError::Degenerate("transport marginals must be positive".into()));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > 1e-9 * total_s.max(total_d) {
        return Err(SamError::Degenerate(format!(
            "unbalanced transport problem: {total_s} vs {total_d}"
        )));
    }

    // Northwest-corner initial basis; ties advance only the row so the basis
    // keeps exactly m + n - 1 cells (some with zero flow).
    let mut basis: Vec<BasicCell> = Vec::with_capacity(m + n - 1);
    {
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = a[i].min(b[j]);
            basis.push(BasicCell { row: i, col: j, flow: f });
            a[i] -= f;
            b[j] -= f;
            if basis.len() == m + n - 1 {
                break;
            }
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let max_iters = 1000 * (m + n);
    for _ in 0..max_iters {
        // Potentials from the basis tree: u_i + v_j = c_ij on basic cells.
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut settled = 1usize;
        while settled < m + n {
            let mut progressed = false;
            for cell in &basis {
                let (ku, kv) = (u[cell.row].is_nan(), v[cell.col].is_nan());
                if !ku && kv {
                    v[cell.col] = cost(cell.row, cell.col) - u[cell.row];
                    settled += 1;
                    progressed = true;
                } else if ku && !kv {
                    u[cell.row] = cost(cell.row, cell.col) - v[cell.col];
                    settled += 1;
                    progressed = true;
                }
            }
            if !progressed {
                return Err(SamError::Degenerate(
                    "transport basis lost its spanning-tree structure".into(),
                ));
            }
        }

        // Entering cell: most negative reduced cost.
        let mut entering: Option<(usize, usize, f64)> = None;
        for i in 0..m {
            for j in 0..n {
                let rc = cost(i, j) - u[i] - v[j];
                if rc < -REDUCED_COST_TOL && entering.map_or(true, |(_, _, best)| rc < best) {
                    entering = Some((i, j, rc));
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            let total = basis.iter().map(|c| c.flow * cost(c.row, c.col)).sum();
            return Ok(total);
        };

        // Unique cycle: path through the basis tree from row ei to col ej.
        let path = tree_path(&basis, m, n, ei, ej)?;
        // Alternate signs along [entering, path...]: entering is +.
        let mut theta = f64::INFINITY;
        let mut leave_pos = 0usize;
        for (k, &cell_idx) in path.iter().enumerate() {
            if k % 2 == 0 {
                // minus position
                if basis[cell_idx].flow < theta {
                    theta = basis[cell_idx].flow;
                    leave_pos = k;
                }
            }
        }
        for (k, &cell_idx) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis[cell_idx].flow -= theta;
            } else {
                basis[cell_idx].flow += theta;
            }
        }
        let leaving = path[leave_pos];
        basis[leaving] = BasicCell { row: ei, col: ej, flow: theta };
    }
    Err(SamError::Degenerate(
        "transportation simplex exceeded its iteration budget".into(),
    ))
}

/// Indices (into `basis`) of the tree path from row node `ei` to column node
/// `ej`, as a sequence of basic cells alternating row/column incidence.
fn tree_path(basis: &[BasicCell], m: usize, n: usize, ei: usize, ej: usize) -> Result<Vec<usize>> {
    // nodes: rows 0..m, cols m..m+n
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n]; // (neighbor, cell idx)
    for (idx, cell) in basis.iter().enumerate() {
        adj[cell.row].push((m + cell.col, idx));
        adj[m + cell.col].push((cell.row, idx));
    }
    let start = ei;
    let goal = m + ej;
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; m + n]; // (node, via cell)
    let mut stack = vec![start];
    let mut seen = vec![false; m + n];
    seen[start] = true;
    while let Some(node) = stack.pop() {
        if node == goal {
            break;
        }
        for &(next, via) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                prev[next] = Some((node, via));
                stack.push(next);
            }
        }
    }
    if !seen[goal] {
        return Err(SamError::Degenerate("transport basis is disconnected".into()));
    }
    let mut path = Vec::new();
    let mut node = goal;
    while node != start {
        let (parent, via) = prev[node].expect("path exists");
        path.push(via);
        node = parent;
    }
    // `path` runs from the goal-side edge back to the start-side edge; the
    // edge incident to the entering row must take the minus sign first.
    path.reverse();
    Ok(path)
}
