//! Dense LU factorization with partial pivoting.
//!
//! Used to represent the simplex basis inverse: a factorization is computed
//! from scratch at refactorization points, and product-form updates layered
//! on top of it between refactorizations (see the simplex module).

/// LU factors of a square matrix `A` with row pivoting, `P A = L U`.
/// `L` is unit lower triangular, `U` upper triangular; both are stored packed
/// in a single row-major array.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    /// `ipiv[k]` is the row swapped with row `k` at elimination step `k`.
    ipiv: Vec<usize>,
}

/// The matrix is numerically singular: no pivot above the given threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub column: usize,
}

impl DenseLu {
    /// Factors a row-major `n x n` matrix. Pivots below `pivot_tol` in
    /// absolute value are treated as zero.
    pub fn factor(mut a: Vec<f64>, n: usize, pivot_tol: f64) -> Result<Self, Singular> {
        assert_eq!(a.len(), n * n);
        let mut ipiv = vec![0usize; n];
        for k in 0..n {
            // Largest remaining entry in column k; ties keep the lowest row
            // so factorization order is deterministic.
            let mut pivot_row = k;
            let mut pivot_abs = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > pivot_abs {
                    pivot_abs = v;
                    pivot_row = i;
                }
            }
            if pivot_abs < pivot_tol {
                return Err(Singular { column: k });
            }
            ipiv[k] = pivot_row;
            if pivot_row != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot_row * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= l * a[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, ipiv })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.ipiv[k]);
        }
        // Forward substitution with unit lower triangle.
        for i in 1..n {
            let mut sum = b[i];
            for j in 0..i {
                sum -= self.lu[i * n + j] * b[j];
            }
            b[i] = sum;
        }
        // Back substitution with the upper triangle.
        for i in (0..n).rev() {
            let mut sum = b[i];
            for j in i + 1..n {
                sum -= self.lu[i * n + j] * b[j];
            }
            b[i] = sum / self.lu[i * n + i];
        }
    }

    /// Solves `A' y = c` in place (`'` = transpose).
    pub fn solve_transposed(&self, c: &mut [f64]) {
        let n = self.n;
        assert_eq!(c.len(), n);
        // A = P' L U, so A' y = c  <=>  U' z = c, L' (P y) = z.
        for i in 0..n {
            let mut sum = c[i];
            for j in 0..i {
                sum -= self.lu[j * n + i] * c[j];
            }
            c[i] = sum / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut sum = c[i];
            for j in i + 1..n {
                sum -= self.lu[j * n + i] * c[j];
            }
            c[i] = sum;
        }
        for k in (0..n).rev() {
            c.swap(k, self.ipiv[k]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matmul_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    }

    fn matmul_tvec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
        (0..n)
            .map(|j| (0..n).map(|i| a[i * n + j] * x[i]).sum())
            .collect()
    }

    /// Deterministic pseudo-random doubles in [-1, 1).
    fn wobble(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn solves_a_fixed_3x3_system() {
        let a = vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let lu = DenseLu::factor(a.clone(), 3, 1e-12).unwrap();
        let mut b = vec![3.0, 5.0, 3.0];
        lu.solve(&mut b);
        for (lhs, rhs) in matmul_vec(&a, 3, &b).iter().zip([3.0, 5.0, 3.0]) {
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_and_transpose_match_on_random_systems() {
        let mut seed = 42;
        for n in [1, 2, 5, 17, 40] {
            let mut a = vec![0.0; n * n];
            for v in a.iter_mut() {
                *v = wobble(&mut seed);
            }
            // Diagonal dominance keeps the systems well conditioned.
            for i in 0..n {
                a[i * n + i] += n as f64;
            }
            let lu = DenseLu::factor(a.clone(), n, 1e-12).unwrap();

            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let mut x = b.clone();
            lu.solve(&mut x);
            for (lhs, rhs) in matmul_vec(&a, n, &x).iter().zip(&b) {
                assert!((lhs - rhs).abs() < 1e-9, "n = {n}");
            }

            let mut y = b.clone();
            lu.solve_transposed(&mut y);
            for (lhs, rhs) in matmul_tvec(&a, n, &y).iter().zip(&b) {
                assert!((lhs - rhs).abs() < 1e-9, "n = {n}");
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = vec![0.0, 1.0, 1.0, 0.0];
        let lu = DenseLu::factor(a, 2, 1e-12).unwrap();
        let mut b = vec![7.0, 9.0];
        lu.solve(&mut b);
        assert!((b[0] - 9.0).abs() < 1e-12);
        assert!((b[1] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert_eq!(DenseLu::factor(a, 2, 1e-10).unwrap_err(), Singular { column: 1 });
    }
}
