//! Minimum-cost bipartite assignment (Hungarian algorithm, shortest
//! augmenting paths with potentials).

/// Solves the square assignment problem for `cost` (row-major `n x n`).
/// Returns the column assigned to each row.
pub fn solve_square(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    // 1-based; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] != 0 {
            col_of_row[row_of[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Rectangular assignment where `allowed(i, j)` is false for forbidden
/// pairs. Maximizes the number of matched pairs first, then minimizes the
/// summed cost of those pairs.
pub fn solve(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> Option<f64>) -> Vec<(usize, usize)> {
    let n = rows.max(cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut m = vec![0.0; n * n];
    let mut max_cost: f64 = 0.0;
    let mut allowed = vec![false; n * n];
    for i in 0..rows {
        for j in 0..cols {
            if let Some(c) = cost(i, j) {
                m[i * n + j] = c;
                allowed[i * n + j] = true;
                max_cost = max_cost.max(c);
            }
        }
    }
    // Any extra real match must outweigh every achievable cost difference.
    let big = (max_cost + 1.0) * (n as f64 + 1.0);
    for i in 0..rows {
        for j in 0..cols {
            if !allowed[i * n + j] {
                m[i * n + j] = big;
            }
        }
    }
    solve_square(&m, n)
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < rows && j < cols && allowed[i * n + j])
        .collect()
}
