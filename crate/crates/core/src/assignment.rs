//! Maximum-weight bipartite matching (Hungarian method).

use alloc::vec;
use alloc::vec::Vec;

/// Assigns each row to a distinct column maximizing the total weight.
/// With more rows than columns, surplus rows get `None`. Ties resolve
/// deterministically.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows <= cols {
        let cost: Vec<Vec<f64>> = weights.iter().map(|r| r.iter().map(|w| -w).collect()).collect();
        hungarian(&cost).into_iter().map(Some).collect()
    } else {
        let cost: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| -weights[r][c]).collect()).collect();
        let mut out = vec![None; rows];
        for (c, r) in hungarian(&cost).into_iter().enumerate() {
            out[r] = Some(c);
        }
        out
    }
}

/// Minimum-cost assignment for an n×m matrix with n ≤ m; returns the column
/// of each row. Potentials formulation, O(n²m).
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row (1-based) matched to column j; column 0 is the sentinel.
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(w: &[Vec<f64>], a: &[Option<usize>]) -> f64 {
        a.iter().enumerate().filter_map(|(r, c)| c.map(|c| w[r][c])).sum()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn picks_the_diagonal_when_it_dominates() {
        let w = vec![vec![5.0, 1.0, 0.0], vec![1.0, 5.0, 0.0], vec![0.0, 1.0, 5.0]];
        assert_eq!(max_weight_assignment(&w), [Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn greedy_is_not_enough() {
        // Greedy takes (0,0)=10 and then (1,1)=1; optimum is 9+9.
        let w = vec![vec![10.0, 9.0], vec![9.0, 1.0]];
        assert_eq!(max_weight_assignment(&w), [Some(1), Some(0)]);
    }

    #[test]
    fn rectangular_inputs() {
        let tall = vec![vec![1.0], vec![3.0], vec![2.0]];
        assert_eq!(max_weight_assignment(&tall), [None, Some(0), None]);
        let wide = vec![vec![1.0, 3.0, 2.0]];
        assert_eq!(max_weight_assignment(&wide), [Some(1)]);
        assert!(max_weight_assignment(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, cells in proptest::collection::vec(0u8..20, 36)) {
            let w: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| f64::from(cells[r * 6 + c])).collect()).collect();
            let got = max_weight_assignment(&w);
            let mut cols: Vec<usize> = got.iter().map(|c| c.unwrap()).collect();
            cols.sort_unstable();
            prop_assert_eq!(cols, (0..n).collect::<Vec<_>>());
            let best = permutations(n)
                .iter()
                .map(|p| p.iter().enumerate().map(|(r, &c)| w[r][c]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(total(&w, &got), best);
        }
    }
}
