use super::{ComplexMatrix, C64};

/// Lower-triangular `L` with `X = L L^†`, or `None` when a pivot is not
/// strictly positive.
pub fn cholesky_lower(x: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = x.nrows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = x[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = x[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Diagonally pivoted Cholesky factor of a PSD matrix, stopped once the
/// largest remaining diagonal entry drops to `tol`.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    /// `n x rank` factor in the original row order, `X ≈ L L^†`.
    pub factor: ComplexMatrix,
    pub rank: usize,
    /// Pivot order: column `k` of `factor` was eliminated at original index `perm[k]`.
    pub perm: Vec<usize>,
}

pub fn pivoted_cholesky(x: &ComplexMatrix, tol: f64) -> PivotedCholesky {
    let n = x.nrows();
    let mut a = x.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = ComplexMatrix::zeros(n, n);
    let mut rank = 0;
    for k in 0..n {
        let (p, best) = (k..n)
            .map(|i| (i, a[(i, i)].re))
            .fold((k, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best <= tol {
            break;
        }
        if p != k {
            a.swap_rows(k, p);
            a.swap_columns(k, p);
            l.swap_rows(k, p);
            perm.swap(k, p);
        }
        let d = a[(k, k)].re.sqrt();
        l[(k, k)] = C64::new(d, 0.0);
        for i in k + 1..n {
            l[(i, k)] = a[(i, k)] / d;
        }
        for j in k + 1..n {
            for i in k + 1..n {
                let upd = l[(i, k)] * l[(j, k)].conj();
                a[(i, j)] -= upd;
            }
        }
        rank += 1;
    }
    let mut factor = ComplexMatrix::zeros(n, rank);
    for (row, &orig) in perm.iter().enumerate() {
        for c in 0..rank {
            factor[(orig, c)] = l[(row, c)];
        }
    }
    PivotedCholesky { factor, rank, perm }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psd(n: usize, rank: usize) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, rank, |i, j| C64::new(((i + 3 * j) % 5) as f64 - 2.0, ((2 * i + j) % 3) as f64 - 1.0));
        &g * g.adjoint()
    }

    #[test]
    fn cholesky_reconstructs_positive_definite() {
        let x = psd(4, 4) + ComplexMatrix::identity(4, 4);
        let l = cholesky_lower(&x).unwrap();
        assert!((&l * l.adjoint() - &x).norm() < 1e-12 * x.norm());
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(l[(i, j)], C64::new(0.0, 0.0));
            }
        }
        assert!(cholesky_lower(&psd(4, 2)).is_none());
    }

    #[test]
    fn pivoted_cholesky_finds_rank() {
        let x = psd(5, 2);
        let pc = pivoted_cholesky(&x, 1e-10 * x.norm());
        assert_eq!(pc.rank, 2);
        assert!((&pc.factor * pc.factor.adjoint() - &x).norm() < 1e-10 * x.norm());
    }
}
