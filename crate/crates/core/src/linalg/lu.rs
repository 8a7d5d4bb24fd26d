use super::gemm::zgemm_raw;
use super::{ComplexMatrix, ComplexVector, C64};

const BLOCK: usize = 48;

/// LU factorization with partial pivoting, `P A = L U`, blocked so that the
/// trailing updates run through `zgemm`.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: ComplexMatrix,
    // row interchanged with row `j` at step `j`
    piv: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

impl LuFactor {
    pub fn new(mut a: ComplexMatrix) -> LuFactor {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.nrows();
        let mut piv = vec![0; n];
        let ld = n;
        let mut k0 = 0;
        while k0 < n {
            let kb = BLOCK.min(n - k0);
            let kend = k0 + kb;
            for j in k0..kend {
                let mut p = j;
                let mut best = a[(j, j)].norm();
                for i in j + 1..n {
                    let v = a[(i, j)].norm();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                piv[j] = p;
                if p != j {
                    a.swap_rows(j, p);
                }
                let d = a[(j, j)];
                if d.norm() == 0.0 {
                    continue;
                }
                let inv = d.inv();
                for i in j + 1..n {
                    a[(i, j)] *= inv;
                }
                for c in j + 1..kend {
                    let f = a[(j, c)];
                    if f.norm() != 0.0 {
                        for i in j + 1..n {
                            let l = a[(i, j)];
                            a[(i, c)] -= l * f;
                        }
                    }
                }
            }
            if kend < n {
                // A12 <- L11^{-1} A12
                for c in kend..n {
                    for j in k0..kend {
                        let f = a[(j, c)];
                        if f.norm() != 0.0 {
                            for i in j + 1..kend {
                                let l = a[(i, j)];
                                a[(i, c)] -= l * f;
                            }
                        }
                    }
                }
                // A22 <- A22 - A21 A12
                let rest = n - kend;
                let base = a.as_mut_ptr();
                // SAFETY: A21 = rows kend.., cols k0..kend; A12 = rows k0..kend,
                // cols kend..; A22 = rows kend.., cols kend..; A22 is disjoint from both.
                unsafe {
                    zgemm_raw(
                        rest,
                        kb,
                        rest,
                        C64::new(-1.0, 0.0),
                        base.add(k0 * ld + kend),
                        ld,
                        base.add(kend * ld + k0),
                        ld,
                        C64::new(1.0, 0.0),
                        base.add(kend * ld + kend),
                        ld,
                    );
                }
            }
            k0 = kend;
        }
        let pivots = (0..n).map(|j| a[(j, j)].norm());
        let (min_pivot, max_pivot) =
            pivots.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        LuFactor { lu: a, piv, min_pivot, max_pivot }
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Ratio of the smallest to the largest pivot magnitude; zero for an exactly
    /// singular factorization.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn is_singular(&self) -> bool {
        self.min_pivot == 0.0
    }

    pub fn solve(&self, b: &ComplexVector) -> ComplexVector {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.clone();
        for (j, &p) in self.piv.iter().enumerate() {
            if p != j {
                x.swap_rows(j, p);
            }
        }
        for j in 0..n {
            let xj = x[j];
            if xj.norm() != 0.0 {
                for i in j + 1..n {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            if xj.norm() != 0.0 {
                for i in 0..j {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        x
    }

    pub fn solve_matrix(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col = self.solve(&b.column(c).into_owned());
            out.set_column(c, &col);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |i, j| {
            C64::new(((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5, ((i * 3 + j * 5) % 11) as f64 / 11.0 - 0.5)
        }) + ComplexMatrix::identity(n, n).scale(0.3)
    }

    #[test]
    fn solves_small_and_blocked_systems() {
        for n in [1, 5, 47, 48, 49, 130] {
            let a = test_matrix(n);
            let x_true = ComplexVector::from_fn(n, |i, _| C64::new(i as f64, 1.0 - i as f64 * 0.5));
            let b = &a * &x_true;
            let lu = LuFactor::new(a.clone());
            let x = lu.solve(&b);
            let rel = (&x - &x_true).norm() / x_true.norm();
            assert!(rel < 1e-10, "n={n} rel={rel}");
        }
    }

    #[test]
    fn flags_singular_matrix() {
        let mut a = test_matrix(6);
        let row = a.row(2).into_owned();
        a.set_row(4, &row);
        let lu = LuFactor::new(a);
        assert!(lu.pivot_ratio() < 1e-12);
    }
}
