//! Dense complex matrix helpers shared by every module.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Row-major real data.
pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    assert_eq!(data.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

/// Row-major complex data.
pub fn from_complex(rows: usize, cols: usize, data: &[C64]) -> CMat {
    assert_eq!(data.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| data[i * cols + j])
}

pub fn diag(values: &[C64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
}

pub fn diagonal(m: &CMat) -> Vec<C64> {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).collect()
}

/// Upper Jordan block `lambda I + N`.
pub fn jordan_block(lambda: C64, k: usize) -> CMat {
    CMat::from_fn(k, k, |i, j| {
        if i == j {
            lambda
        } else if j == i + 1 {
            ONE
        } else {
            ZERO
        }
    })
}

/// Direct sum of upper Jordan blocks of `lambda` with the given sizes.
pub fn jordan_matrix(lambda: C64, sizes: &[usize]) -> CMat {
    let blocks: Vec<CMat> = sizes.iter().map(|&k| jordan_block(lambda, k)).collect();
    block_diag(&blocks)
}

/// Exchange matrix with ones on the anti-diagonal.
pub fn flip(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i + j + 1 == n { ONE } else { ZERO })
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r, c0), b.shape()).copy_from(b);
        r += b.nrows();
        c0 += b.ncols();
    }
    out
}

pub fn hcat(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat row mismatch");
        out.view_mut((0, c0), b.shape()).copy_from(b);
        c0 += b.ncols();
    }
    out
}

pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn imag_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.im * z.im).sum::<f64>().sqrt()
}

pub fn real_part(m: &CMat) -> CMat {
    m.map(|z| c(z.re, 0.0))
}

pub fn is_real(m: &CMat, tol: f64) -> bool {
    imag_norm(m) <= tol * frob(m).max(1.0)
}

pub fn scale(m: &CMat, s: f64) -> CMat {
    m * c(s, 0.0)
}

pub fn to_real(m: &CMat) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn from_real_matrix(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// Scalars accepted by [`svd`].
pub trait SvdScalar: nalgebra::ComplexField<RealField = f64> + faer::traits::ComplexField + Copy {}

impl SvdScalar for f64 {}

impl SvdScalar for C64 {}

/// Full singular value decomposition `M = U diag(s) V^*`, singular values in
/// nonincreasing order. Backed by faer, whose SVD stays accurate on
/// rank-deficient inputs.
pub fn svd<T: SvdScalar>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    let (r, k) = m.shape();
    if r == 0 || k == 0 {
        return (DMatrix::identity(r, r), Vec::new(), DMatrix::identity(k, k));
    }
    let fm = faer::Mat::<T>::from_fn(r, k, |i, j| m[(i, j)]);
    let d = fm.svd().expect("SVD did not converge");
    let (u, v) = (d.U(), d.V());
    let s = d.S().column_vector();
    let sv: Vec<f64> = (0..r.min(k)).map(|i| nalgebra::ComplexField::modulus(s[i])).collect();
    (
        DMatrix::from_fn(r, r, |i, j| u[(i, j)]),
        sv,
        DMatrix::from_fn(k, k, |i, j| v[(i, j)]),
    )
}
