//! Minimum-cost assignment (Hungarian algorithm with potentials, O(n^3)).
//!
//! Used for global-nearest-neighbor association in tracking and fusion.
//! Gated pairs are passed as `FORBIDDEN_COST`; assignments at or above half
//! that cost are reported as unassigned.

use crate::scalar::{convert, Scalar};

/// Cost marking a forbidden (gated-out) pairing.
pub const FORBIDDEN_COST: f64 = 1e15;

/// Solve the rectangular min-cost assignment for a row-major cost matrix.
///
/// Returns, per row, the assigned column or `None`. Columns may stay
/// unassigned when there are fewer rows, and rows whose only options are
/// forbidden stay unassigned.
pub fn min_cost_assignment<T: Scalar>(cost: &[Vec<T>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    if cols == 0 {
        return vec![None; rows];
    }
    // Square the problem by padding with forbidden cells.
    let n = rows.max(cols);
    let forbidden: T = convert(FORBIDDEN_COST);
    let at = |r: usize, c: usize| -> T {
        if r < rows && c < cols {
            cost[r][c]
        } else {
            forbidden
        }
    };

    // Potentials-based Hungarian over the square matrix, 1-indexed internals.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut match_col = vec![0usize; n + 1]; // column -> row (0 = free)
    for row in 1..=n {
        let mut links = vec![0usize; n + 1];
        let mut mins = vec![forbidden * convert(2.0); n + 1];
        let mut visited = vec![false; n + 1];
        let mut marked_col = 0usize;
        match_col[0] = row;
        loop {
            visited[marked_col] = true;
            let marked_row = match_col[marked_col];
            let mut delta = forbidden * convert(2.0);
            let mut next_col = 0usize;
            for col in 1..=n {
                if visited[col] {
                    continue;
                }
                let reduced = at(marked_row - 1, col - 1) - u[marked_row] - v[col];
                if reduced < mins[col] {
                    mins[col] = reduced;
                    links[col] = marked_col;
                }
                if mins[col] < delta {
                    delta = mins[col];
                    next_col = col;
                }
            }
            for col in 0..=n {
                if visited[col] {
                    u[match_col[col]] += delta;
                    v[col] -= delta;
                } else {
                    mins[col] -= delta;
                }
            }
            marked_col = next_col;
            if match_col[marked_col] == 0 {
                break;
            }
        }
        // Augment along the alternating path.
        while marked_col != 0 {
            let prev = links[marked_col];
            match_col[marked_col] = match_col[prev];
            marked_col = prev;
        }
    }

    let cutoff: T = convert(FORBIDDEN_COST / 2.0);
    let mut result = vec![None; rows];
    for col in 1..=n {
        let row = match_col[col];
        if row >= 1 && row <= rows && col <= cols && cost[row - 1][col - 1] < cutoff {
            result[row - 1] = Some(col - 1);
        }
    }
    result
}
