//! Exact rank of integer matrices by fraction-free (Bareiss) elimination.

use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Rank over the rationals of a dense integer matrix given row-major.
pub fn exact_rank(rows: usize, cols: usize, entries: &[i64]) -> usize {
    assert_eq!(entries.len(), rows * cols, "matrix data length");
    let mut m: Vec<Vec<BigInt>> = entries.chunks(cols.max(1)).take(rows).map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        for i in rank + 1..rows {
            for j in col + 1..cols {
                let v = (&m[i][j] * &m[rank][col] - &m[i][col] * &m[rank][j]) / &prev;
                m[i][j] = v;
            }
            m[i][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}
