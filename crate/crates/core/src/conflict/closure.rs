use alloc::vec;
use alloc::vec::Vec;

fn rows(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<u64>> {
    let mut rows = vec![vec![0u64; n.div_ceil(64)]; n];
    for &(i, j) in pairs {
        rows[i][j / 64] |= 1 << (j % 64);
    }
    rows
}

/// Pairs `(x, y, z)` with x R y R z but not x R z, at most one per `(x, y)`.
pub(crate) fn transitivity_failures(n: usize, pairs: &[(usize, usize)]) -> Vec<(usize, usize, usize)> {
    let rows = rows(n, pairs);
    let mut out = Vec::new();
    for &(x, y) in pairs {
        for (w, (above_y, above_x)) in rows[y].iter().zip(&rows[x]).enumerate() {
            let missing = above_y & !above_x;
            if missing != 0 {
                out.push((x, y, w * 64 + missing.trailing_zeros() as usize));
                break;
            }
        }
    }
    out
}

/// Transitive closure of a relation on `0..n`, as sorted pairs.
pub(crate) fn transitive_closure(n: usize, pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut rows = rows(n, pairs);
    // Warshall
    for k in 0..n {
        let row_k = rows[k].clone();
        for row in rows.iter_mut() {
            if row[k / 64] >> (k % 64) & 1 == 1 {
                for (w, bits) in row.iter_mut().zip(&row_k) {
                    *w |= bits;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for j in 0..n {
            if row[j / 64] >> (j % 64) & 1 == 1 {
                out.push((i, j));
            }
        }
    }
    out
}
