//! Small dense row-major matrices: LU with partial pivoting.

use alloc::vec::Vec;

/// LU factorisation `P A = L U` of a square matrix, stored packed.
#[derive(Debug, Clone)]
pub struct Lu {
    dim: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    parity: f64,
    /// Smallest |pivot| divided by the largest |entry| of the input.
    pivot_ratio: f64,
}

impl Lu {
    /// Factorises the row-major `dim x dim` matrix `a`.
    pub fn new(dim: usize, mut a: Vec<f64>) -> Lu {
        assert_eq!(a.len(), dim * dim);
        let amax = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut parity = 1.0;
        let mut min_pivot = f64::INFINITY;
        for col in 0..dim {
            let (piv, pmax) =
                (col..dim)
                    .map(|r| (r, a[r * dim + col].abs()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if piv != col {
                for c in 0..dim {
                    a.swap(piv * dim + c, col * dim + c);
                }
                perm.swap(piv, col);
                parity = -parity;
            }
            min_pivot = min_pivot.min(pmax);
            let p = a[col * dim + col];
            if p == 0.0 {
                continue;
            }
            for r in col + 1..dim {
                let f = a[r * dim + col] / p;
                a[r * dim + col] = f;
                if f != 0.0 {
                    for c in col + 1..dim {
                        a[r * dim + c] -= f * a[col * dim + c];
                    }
                }
            }
        }
        let pivot_ratio = if dim == 0 {
            1.0
        } else if amax > 0.0 {
            min_pivot / amax
        } else {
            0.0
        };
        Lu {
            dim,
            lu: a,
            perm,
            parity,
            pivot_ratio,
        }
    }

    pub fn det(&self) -> f64 {
        (0..self.dim).fold(self.parity, |d, i| d * self.lu[i * self.dim + i])
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Solves `A x = b` in place. Returns `false` on an exactly zero pivot.
    pub fn solve(&self, b: &mut [f64]) -> bool {
        let n = self.dim;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            let d = self.lu[i * n + i];
            if d == 0.0 {
                return false;
            }
            x[i] = s / d;
        }
        b.copy_from_slice(&x);
        true
    }
}

/// Determinant of a row-major square matrix.
pub fn det(dim: usize, a: Vec<f64>) -> f64 {
    match dim {
        0 => 1.0,
        _ => Lu::new(dim, a).det(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cofactor_det(dim: usize, a: &[f64]) -> f64 {
        if dim == 1 {
            return a[0];
        }
        let mut total = 0.0;
        for c in 0..dim {
            let minor: Vec<f64> = (1..dim)
                .flat_map(|r| (0..dim).filter(move |&cc| cc != c).map(move |cc| (r, cc)))
                .map(|(r, cc)| a[r * dim + cc])
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * a[c] * cofactor_det(dim - 1, &minor);
        }
        total
    }

    #[test]
    fn det_matches_cofactor_expansion() {
        // xorshift so the test stays std-free
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for dim in 1..=4 {
            for _ in 0..200 {
                let a: Vec<f64> = (0..dim * dim).map(|_| next()).collect();
                let want = cofactor_det(dim, &a);
                let got = Lu::new(dim, a.clone()).det();
                let scale = a
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
                    .powi(dim as i32);
                assert!(
                    (got - want).abs() <= 1e-12 * scale.max(want.abs()),
                    "{dim}: {got} vs {want}"
                );
                assert!((det(dim, a) - want).abs() <= 1e-12 * scale.max(want.abs()));
            }
        }
    }

    #[test]
    fn solve_permuted_system() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = Lu::new(3, a.clone());
        let mut b = vec![5.0, 3.0, 7.0];
        assert!(lu.solve(&mut b));
        for r in 0..3 {
            let lhs: f64 = (0..3).map(|c| a[r * 3 + c] * b[c]).sum();
            assert!((lhs - [5.0, 3.0, 7.0][r]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_has_zero_pivot_ratio() {
        let lu = Lu::new(2, vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(lu.det(), 0.0);
        assert_eq!(lu.pivot_ratio(), 0.0);
    }
}
