//! Smith normal form over ℤ with arbitrary-precision entries.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

/// Dense integer matrix, row major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        Self {
            rows,
            cols,
            data: entries.iter().map(|&e| BigInt::from(e)).collect(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += f * row[src]
    fn add_row(&mut self, dst: usize, src: usize, f: &BigInt) {
        for j in 0..self.cols {
            let v = self.get(dst, j) + f * self.get(src, j);
            self.set(dst, j, v);
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, f: &BigInt) {
        for i in 0..self.rows {
            let v = self.get(i, dst) + f * self.get(i, src);
            self.set(i, dst, v);
        }
    }
}

/// Diagonal of the Smith normal form: d₁ | d₂ | …, all positive.
pub fn smith_diagonal(m: &IntMatrix) -> Vec<BigInt> {
    let mut a = m.clone();
    let n = a.rows.min(a.cols);
    let mut diag = Vec::with_capacity(n);

    'outer: for k in 0..n {
        loop {
            // pivot of least absolute value in the remaining block; |pivot|
            // is strictly decreasing across repair passes, so this ends
            let (pi, pj) = match find_pivot(&a, k) {
                None => break 'outer,
                Some(p) => p,
            };
            a.swap_rows(k, pi);
            a.swap_cols(k, pj);

            let mut dirty = false;
            for i in k + 1..a.rows {
                if !a.get(i, k).is_zero() {
                    let f = -(a.get(i, k) / a.get(k, k));
                    a.add_row(i, k, &f);
                    dirty |= !a.get(i, k).is_zero();
                }
            }
            for j in k + 1..a.cols {
                if !a.get(k, j).is_zero() {
                    let f = -(a.get(k, j) / a.get(k, k));
                    a.add_col(j, k, &f);
                    dirty |= !a.get(k, j).is_zero();
                }
            }
            if dirty {
                continue; // leftover remainders become the next, smaller pivot
            }

            // row/column k are clear; enforce divisibility of the block
            let mut offender = None;
            'scan: for i in k + 1..a.rows {
                for j in k + 1..a.cols {
                    if !(a.get(i, j) % a.get(k, k)).is_zero() {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => {
                    let one = BigInt::from(1);
                    a.add_row(k, i, &one); // reintroduces the offending row; next pass shrinks the pivot
                }
                None => break,
            }
        }
        diag.push(a.get(k, k).abs());
    }

    diag.retain(|d| !d.is_zero());
    diag
}

fn find_pivot(a: &IntMatrix, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in k..a.rows {
        for j in k..a.cols {
            let v = a.get(i, j);
            if v.is_zero() {
                continue;
            }
            match best {
                None => best = Some((i, j)),
                Some((bi, bj)) => {
                    if v.abs() < a.get(bi, bj).abs() {
                        best = Some((i, j));
                    }
                }
            }
        }
    }
    best
}

/// Rank over ℚ, from the Smith diagonal.
pub fn rank(m: &IntMatrix) -> usize {
    smith_diagonal(m).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_i64(m: &IntMatrix) -> Vec<i64> {
        smith_diagonal(m)
            .into_iter()
            .map(|d| i64::try_from(d).unwrap())
            .collect()
    }

    #[test]
    fn snf_simple() {
        let m = IntMatrix::from_i64(2, 2, &[2, 4, -2, 6]);
        assert_eq!(diag_i64(&m), vec![2, 10]);
    }

    #[test]
    fn snf_classic_example() {
        let m = IntMatrix::from_i64(3, 3, &[2, 4, 4, -6, 6, 12, 10, -4, -16]);
        // known Smith form diag(2, 6, 12); |det| = 144 = 2·6·12
        assert_eq!(diag_i64(&m), vec![2, 6, 12]);
    }

    #[test]
    fn snf_rectangular_and_rank() {
        let m = IntMatrix::from_i64(2, 3, &[1, 2, 3, 4, 5, 6]);
        let d = diag_i64(&m);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0], 1);
        assert_eq!(d[1], 3);
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn snf_zero_matrix() {
        let m = IntMatrix::zeros(3, 2);
        assert!(smith_diagonal(&m).is_empty());
        assert_eq!(rank(&m), 0);
    }

    #[test]
    fn snf_divisibility_chain_randomized() {
        // compare against a brute-force rational rank and check d_i | d_{i+1}
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed % 13) as i64 - 6
        };
        for _ in 0..50 {
            let (r, c) = (4, 5);
            let entries: Vec<i64> = (0..r * c).map(|_| next()).collect();
            let m = IntMatrix::from_i64(r, c, &entries);
            let d = smith_diagonal(&m);
            for w in d.windows(2) {
                assert!((w[1].clone() % w[0].clone()).is_zero(), "{:?}", d);
            }
            assert_eq!(d.len(), f64_rank(r, c, &entries), "entries {entries:?}");
        }
    }

    fn f64_rank(r: usize, c: usize, entries: &[i64]) -> usize {
        let mut m: Vec<Vec<f64>> = (0..r)
            .map(|i| (0..c).map(|j| entries[i * c + j] as f64).collect())
            .collect();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..c {
            let piv = (row..r).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap());
            let piv = match piv {
                Some(p) if m[p][col].abs() > 1e-9 => p,
                _ => continue,
            };
            m.swap(row, piv);
            for i in 0..r {
                if i != row && m[i][col].abs() > 1e-12 {
                    let f = m[i][col] / m[row][col];
                    for j in 0..c {
                        m[i][j] -= f * m[row][j];
                    }
                }
            }
            rank += 1;
            row += 1;
            if row == r {
                break;
            }
        }
        rank
    }
}
