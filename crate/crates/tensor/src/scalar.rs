use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Tensor element type. `f32` for training, `f64` for the gradient-check
/// suite; both route matrix products through `matrixmultiply`.
pub trait Scalar:
    num_traits::Float
    + num_traits::NumAssignOps
    + Sum
    + Send
    + Sync
    + Debug
    + Display
    + Default
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;

    /// C[m,n] = alpha * A · B + beta * C with explicit row/column strides.
    ///
    /// Strides are in elements and must be non-negative; the highest touched
    /// index of each slice is checked before dispatching to the unsafe gemm.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );
}

fn check_bounds(len: usize, rows: usize, cols: usize, rs: isize, cs: isize, what: &str) {
    assert!(rs >= 0 && cs >= 0, "{what}: negative gemm stride");
    if rows == 0 || cols == 0 {
        return;
    }
    let max = (rows - 1) * rs as usize + (cols - 1) * cs as usize;
    assert!(max < len, "{what}: gemm operand out of bounds ({max} >= {len})");
}

macro_rules! impl_scalar {
    ($ty:ty, $gemm:path) => {
        impl Scalar for $ty {
            #[inline]
            fn from_f64(x: f64) -> Self {
                x as $ty
            }
            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                check_bounds(a.len(), m, k, rsa, csa, "a");
                check_bounds(b.len(), k, n, rsb, csb, "b");
                check_bounds(c.len(), m, n, rsc, csc, "c");
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);
