//! Unstructured eigenvalue and invariant-subspace updates.

use crate::algebra::{full_column_pinv, ToleranceProfile};
use crate::error::{Error, Result};
use crate::matrix::{c, frob, identity, CMat, C64};

/// An invariant pair `A X = X Lambda`.
#[derive(Clone, Debug)]
pub struct InvariantPair {
    pub x: CMat,
    pub lambda: CMat,
}

impl InvariantPair {
    pub fn new(x: CMat, lambda: CMat) -> Result<Self> {
        if lambda.nrows() != lambda.ncols() || lambda.nrows() != x.ncols() {
            return Err(Error::Dimension(format!(
                "X is {}x{} but Lambda is {}x{}",
                x.nrows(),
                x.ncols(),
                lambda.nrows(),
                lambda.ncols()
            )));
        }
        Ok(InvariantPair { x, lambda })
    }

    pub fn residual(&self, a: &CMat) -> f64 {
        invariant_residual(a, &self.x, &self.lambda)
    }
}

/// `||A X - X Lambda||_F` relative to `(||A||_F + ||Lambda||_F) ||X||_F`.
pub fn invariant_residual(a: &CMat, x: &CMat, lambda: &CMat) -> f64 {
    let r = frob(&(a * x - x * lambda));
    let scale = (frob(a) + frob(lambda)) * frob(x);
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

pub(crate) fn check_square(a: &CMat, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("{what} must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    Ok(a.nrows())
}

pub(crate) fn check_rows(x: &CMat, n: usize, what: &str) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::Dimension(format!("{what} has {} rows, expected {n}", x.nrows())));
    }
    Ok(())
}

pub(crate) fn check_invariant(a: &CMat, x: &CMat, lambda: &CMat, tol: f64, what: &'static str) -> Result<()> {
    if lambda.nrows() != x.ncols() || lambda.ncols() != x.ncols() {
        return Err(Error::Dimension(format!("{what}: Lambda must be {k}x{k}", k = x.ncols())));
    }
    let r = invariant_residual(a, x, lambda);
    if r > tol {
        return Err(Error::precondition(what, format!("relative residual {r:.3e} exceeds {tol:.1e}")));
    }
    Ok(())
}

fn check_eigpair(a: &CMat, x: &CMat, lambda: C64, tol: f64) -> Result<()> {
    if x.ncols() != 1 {
        return Err(Error::Dimension("eigenvector must be a column".into()));
    }
    let r = frob(&(a * x - x * lambda));
    let scale = (frob(a) + lambda.norm()) * frob(x);
    if frob(x) == 0.0 || r > tol * scale {
        return Err(Error::precondition(
            "eigenpair",
            format!("relative residual {:.3e} exceeds {tol:.1e}", r / scale.max(f64::MIN_POSITIVE)),
        ));
    }
    Ok(())
}

/// `A + x q^T`; the eigenvalue `lambda` moves to `lambda + x^T q` and the rest
/// of the spectrum is unchanged.
pub fn brauer_update(a: &CMat, x: &CMat, lambda: C64, q: &CMat, tol: &ToleranceProfile) -> Result<CMat> {
    let n = check_square(a, "A")?;
    check_rows(x, n, "x")?;
    check_rows(q, n, "q")?;
    if q.ncols() != 1 {
        return Err(Error::Dimension("q must be a column".into()));
    }
    check_eigpair(a, x, lambda, tol.eigpair_tol)?;
    Ok(a + x * q.transpose())
}

/// `A + (mu - lambda) v r^T` with `r^T v = 1`; `lambda` becomes `mu`.
pub fn brauer_shift(a: &CMat, lambda: C64, v: &CMat, r: &CMat, mu: C64, tol: &ToleranceProfile) -> Result<CMat> {
    let n = check_square(a, "A")?;
    check_rows(v, n, "v")?;
    check_rows(r, n, "r")?;
    if r.ncols() != 1 {
        return Err(Error::Dimension("r must be a column".into()));
    }
    check_eigpair(a, v, lambda, tol.eigpair_tol)?;
    let rv = (r.transpose() * v)[(0, 0)];
    if (rv - c(1.0, 0.0)).norm() > tol.residual_tol.max(1e-12) {
        return Err(Error::precondition("normalisation r^T v = 1", format!("r^T v = {rv}")));
    }
    Ok(a + v * r.transpose() * (mu - lambda))
}

/// `A + X C` for an invariant pair `(X, Omega)`; the eigenvalues of `Omega`
/// are replaced by those of `Omega + C X`.
pub fn rado_update(a: &CMat, x: &CMat, omega: &CMat, cm: &CMat, tol: &ToleranceProfile) -> Result<CMat> {
    let n = check_square(a, "A")?;
    check_rows(x, n, "X")?;
    if cm.nrows() != x.ncols() || cm.ncols() != n {
        return Err(Error::Dimension(format!("C must be {}x{n}", x.ncols())));
    }
    check_invariant(a, x, omega, tol.eigpair_tol, "invariant pair (X, Omega)")?;
    full_column_pinv(x, tol.rank_tol, "X")?;
    Ok(a + x * cm)
}

fn projector_term(z: Option<&CMat>, x: &CMat, xp: &CMat) -> Option<CMat> {
    z.map(|z| z * (identity(x.nrows()) - x * xp))
}

/// `Delta A = (X Lambda - A X) X^+ + Z (I - X X^+)` so that `(A + Delta A) X = X Lambda`.
pub fn make_invariant_unstructured(
    a: &CMat,
    x_a: &CMat,
    lambda_a: &CMat,
    z: Option<&CMat>,
    tol: &ToleranceProfile,
) -> Result<CMat> {
    let n = check_square(a, "A")?;
    check_rows(x_a, n, "X_a")?;
    if lambda_a.shape() != (x_a.ncols(), x_a.ncols()) {
        return Err(Error::Dimension("Lambda_a must be p x p".into()));
    }
    let xp = full_column_pinv(x_a, tol.rank_tol, "X_a")?;
    let mut d = (x_a * lambda_a - a * x_a) * &xp;
    if let Some(t) = projector_term(z, x_a, &xp) {
        d += t;
    }
    Ok(d)
}

/// Moves the eigenvalues of an invariant pair `(X_c, Lambda_c)` to those of
/// `Lambda_a` on the subspace spanned by `X_c R`.
pub fn preserve_invariant_unstructured(
    a: &CMat,
    x_c: &CMat,
    lambda_c: &CMat,
    r: &CMat,
    lambda_a: &CMat,
    z: Option<&CMat>,
    tol: &ToleranceProfile,
) -> Result<CMat> {
    let n = check_square(a, "A")?;
    check_rows(x_c, n, "X_c")?;
    check_invariant(a, x_c, lambda_c, tol.eigpair_tol, "invariant pair (X_c, Lambda_c)")?;
    if r.nrows() != x_c.ncols() || lambda_a.shape() != (r.ncols(), r.ncols()) {
        return Err(Error::Dimension("R must be p x q and Lambda_a q x q".into()));
    }
    let xr = x_c * r;
    let xp = full_column_pinv(&xr, tol.rank_tol, "X_c R")?;
    let rt = r * lambda_a - lambda_c * r;
    let mut d = x_c * rt * &xp;
    if let Some(t) = projector_term(z, &xr, &xp) {
        d += t;
    }
    Ok(d)
}

/// Square solve `B X^{-1}` through an LU factorisation of `X^T`, with the
/// 1-norm condition number checked against `1 / rank_tol`.
pub(crate) fn right_divide(b: &CMat, x: &CMat, rank_tol: f64, what: &'static str) -> Result<CMat> {
    let lu = x.transpose().lu();
    let cond = condition_1norm(x);
    if !lu.is_invertible() || !cond.is_finite() || cond * rank_tol > 1.0 {
        return Err(Error::Singular { what, condition: cond });
    }
    Ok(lu.solve(&b.transpose()).expect("checked invertible").transpose())
}

/// `||X||_1 ||X^{-1}||_1`, infinite when `X` is singular.
pub fn condition_1norm(x: &CMat) -> f64 {
    let norm1 = |m: &CMat| (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    match x.clone().try_inverse() {
        Some(inv) => norm1(x) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Moves `Lambda_a` onto `X_a` and `Lambda_f` onto `X_f` at once, with
/// `[X_a X_f]` square and nonsingular.
pub fn complementary_unstructured(
    a: &CMat,
    x_a: &CMat,
    x_f: &CMat,
    lambda_a_hat: &CMat,
    lambda_f_hat: &CMat,
    tol: &ToleranceProfile,
) -> Result<CMat> {
    let n = check_square(a, "A")?;
    check_rows(x_a, n, "X_a")?;
    check_rows(x_f, n, "X_f")?;
    if x_a.ncols() + x_f.ncols() != n {
        return Err(Error::Dimension("[X_a X_f] must be square".into()));
    }
    if lambda_a_hat.shape() != (x_a.ncols(), x_a.ncols()) || lambda_f_hat.shape() != (x_f.ncols(), x_f.ncols()) {
        return Err(Error::Dimension("Lambda blocks must match X_a and X_f".into()));
    }
    let x = crate::matrix::hcat(&[x_a, x_f]);
    let ba = x_a * lambda_a_hat - a * x_a;
    let bf = x_f * lambda_f_hat - a * x_f;
    let b = crate::matrix::hcat(&[&ba, &bf]);
    right_divide(&b, &x, tol.rank_tol, "[X_a X_f]")
}
