use matrixmultiply::CGemmOption;

use super::{ComplexMatrix, C64};

// Below this many multiply-adds nalgebra's own product is as fast as the packed kernel.
const SMALL_PRODUCT: usize = 1 << 15;

/// Dense complex product `a * b`, routed through a packed `zgemm` kernel for
/// anything beyond small sizes.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    if m * k * n <= SMALL_PRODUCT {
        return a * b;
    }
    let mut c = ComplexMatrix::zeros(m, n);
    // SAFETY: all three buffers are contiguous column-major storage of the stated
    // shapes, `Complex64` is `repr(C)` with the same layout as `[f64; 2]`, and
    // `c` does not alias `a` or `b`.
    unsafe {
        zgemm_raw(m, k, n, C64::new(1.0, 0.0), a.as_ptr(), m, b.as_ptr(), k, C64::new(0.0, 0.0), c.as_mut_ptr(), m);
    }
    c
}

/// `C <- alpha * A * B + beta * C` on raw column-major panels with leading
/// dimensions `lda`, `ldb`, `ldc`.
///
/// # Safety
/// Pointers must address panels of the given shapes and the output panel must
/// not overlap either input panel.
#[allow(clippy::too_many_arguments)]
pub(super) unsafe fn zgemm_raw(
    m: usize,
    k: usize,
    n: usize,
    alpha: C64,
    a: *const C64,
    lda: usize,
    b: *const C64,
    ldb: usize,
    beta: C64,
    c: *mut C64,
    ldc: usize,
) {
    matrixmultiply::zgemm(
        CGemmOption::Standard,
        CGemmOption::Standard,
        m,
        k,
        n,
        [alpha.re, alpha.im],
        a as *const [f64; 2],
        1,
        lda as isize,
        b as *const [f64; 2],
        1,
        ldb as isize,
        [beta.re, beta.im],
        c as *mut [f64; 2],
        1,
        ldc as isize,
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agrees_with_naive_product() {
        let a = ComplexMatrix::from_fn(40, 37, |i, j| C64::new((i as f64 * 0.3).sin(), (j as f64 * 0.7).cos()));
        let b = ComplexMatrix::from_fn(37, 45, |i, j| C64::new((i * j) as f64 * 0.01, (i as f64) - (j as f64) * 0.5));
        let fast = matmul(&a, &b);
        let slow = &a * &b;
        assert!((fast - &slow).norm() <= 1e-12 * slow.norm());
    }
}
