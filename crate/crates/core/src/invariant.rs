//! Structure-preserving updates that create or preserve invariant subspaces.

use serde::Serialize;

use crate::algebra::{full_column_pinv, is_member, numerical_rank, structure_residual, Field, ScalarProductSpace, StructureClass, ToleranceProfile};
use crate::classical::{check_invariant, check_rows, check_square, condition_1norm};
use crate::eigen::{eigenvalues, spectral_scale};
use crate::error::{Error, Result};
use crate::mapping::{solve_structured, structured_kernel};
use crate::matrix::{c, frob, hcat, imag_norm, real_part, CMat};

/// A perturbation together with the checks run on it.
#[derive(Clone, Debug)]
pub struct StructuredUpdate {
    pub delta: CMat,
    /// `||(A + Delta A) X - X Lambda||_F` for the pair the update targets.
    pub interpolation_residual: f64,
    pub structure_residual: f64,
    pub rank: usize,
    /// 1-norm condition number of the Gram matrix `X^* H X` when one is inverted.
    pub gram_condition: Option<f64>,
    /// Frobenius norm of the imaginary part before any cast to real.
    pub imag_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityReport {
    /// `||X^* H X Lambda - epsilon2 Lambda^* X^* H X||_F`.
    pub residual: f64,
    pub threshold: f64,
    pub compatible: bool,
}

pub fn lambda_compatibility(
    x: &CMat,
    lambda: &CMat,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<CompatibilityReport> {
    check_rows(x, space.dim(), "X")?;
    if lambda.shape() != (x.ncols(), x.ncols()) {
        return Err(Error::Dimension(format!("Lambda must be {k}x{k}", k = x.ncols())));
    }
    let g = space.st(x) * space.h() * x;
    let m = &g * lambda;
    let residual = frob(&(&m - space.st(lambda) * &g * c(class.epsilon2(), 0.0)));
    let threshold = tol.structure_tol * frob(x).powi(2) * frob(lambda) + 1e-14;
    Ok(CompatibilityReport { residual, threshold, compatible: residual <= threshold })
}

fn require_compatible(x: &CMat, lambda: &CMat, space: &ScalarProductSpace, class: StructureClass, tol: &ToleranceProfile, what: &str) -> Result<()> {
    let r = lambda_compatibility(x, lambda, space, class, tol)?;
    if !r.compatible {
        return Err(Error::precondition(
            "X^* H X Lambda = epsilon2 Lambda^* X^* H X",
            format!("{what}: residual {:.3e} exceeds {:.3e}", r.residual, r.threshold),
        ));
    }
    Ok(())
}

pub(crate) fn require_member(a: &CMat, space: &ScalarProductSpace, class: StructureClass, tol: &ToleranceProfile) -> Result<()> {
    space.check_dim(a, "A")?;
    if !is_member(a, space, class, tol)? {
        let r = structure_residual(a, space, class)?;
        return Err(Error::precondition(
            "A in the structured class",
            format!("structure residual {r:.3e} exceeds {:.1e} relative", tol.structure_tol),
        ));
    }
    Ok(())
}

/// Checks realness over the real field and casts; records the imaginary norm.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    delta: CMat,
    a: &CMat,
    x: &CMat,
    lambda: &CMat,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
    gram_condition: Option<f64>,
) -> Result<StructuredUpdate> {
    let im = imag_norm(&delta);
    let delta = if space.field() == Field::Real {
        if im > tol.structure_tol * frob(&delta).max(f64::MIN_POSITIVE) {
            return Err(Error::precondition(
                "real perturbation over the real field",
                format!("imaginary part {im:.3e} relative to norm {:.3e}", frob(&delta)),
            ));
        }
        real_part(&delta)
    } else {
        delta
    };
    let interpolation_residual = frob(&((a + &delta) * x - x * lambda));
    Ok(StructuredUpdate {
        structure_residual: structure_residual(&delta, space, class)?,
        rank: numerical_rank(&delta, tol.rank_tol),
        interpolation_residual,
        gram_condition,
        imag_norm: im,
        delta,
    })
}

/// Makes `span X_a` invariant with `(A + Delta A) X_a = X_a Lambda_a`.
pub fn make_invariant_structured(
    a: &CMat,
    x_a: &CMat,
    lambda_a: &CMat,
    z: Option<&CMat>,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<StructuredUpdate> {
    require_member(a, space, class, tol)?;
    check_rows(x_a, space.dim(), "X_a")?;
    full_column_pinv(x_a, tol.rank_tol, "X_a")?;
    require_compatible(x_a, lambda_a, space, class, tol, "(X_a, Lambda_a)")?;
    let b = x_a * lambda_a - a * x_a;
    let sol = solve_structured(x_a, &b, space, class, z, tol)?;
    finish(sol.a, a, x_a, lambda_a, space, class, tol, None)
}

/// Keeps `span X_c R` invariant while moving its eigenvalues to those of `Lambda_a`.
#[allow(clippy::too_many_arguments)]
pub fn preserve_invariant_structured(
    a: &CMat,
    x_c: &CMat,
    lambda_c: &CMat,
    r: &CMat,
    lambda_a: &CMat,
    z: Option<&CMat>,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<StructuredUpdate> {
    require_member(a, space, class, tol)?;
    check_rows(x_c, space.dim(), "X_c")?;
    check_invariant(a, x_c, lambda_c, tol.eigpair_tol, "invariant pair (X_c, Lambda_c)")?;
    if r.nrows() != x_c.ncols() || lambda_a.shape() != (r.ncols(), r.ncols()) {
        return Err(Error::Dimension("R must be p x q and Lambda_a q x q".into()));
    }
    let xr = x_c * r;
    full_column_pinv(&xr, tol.rank_tol, "X_c R")?;
    require_compatible(&xr, lambda_a, space, class, tol, "(X_c R, Lambda_a)")?;
    let b = x_c * (r * lambda_a - lambda_c * r);
    let sol = solve_structured(&xr, &b, space, class, z, tol)?;
    finish(sol.a, a, &xr, lambda_a, space, class, tol, None)
}

/// Moves the eigenvalues on `X_c` to `Lambda_a` while `(X_f, Lambda_f)` stays an
/// invariant pair; `[X_c X_f]` must be square.
#[allow(clippy::too_many_arguments)]
pub fn complementary_structured_known(
    a: &CMat,
    x_c: &CMat,
    lambda_a: &CMat,
    x_f: &CMat,
    lambda_f: &CMat,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<StructuredUpdate> {
    require_member(a, space, class, tol)?;
    let n = check_square(a, "A")?;
    check_rows(x_c, n, "X_c")?;
    check_rows(x_f, n, "X_f")?;
    if x_c.ncols() + x_f.ncols() != n {
        return Err(Error::Dimension("[X_c X_f] must be square".into()));
    }
    let xcp = full_column_pinv(x_c, tol.rank_tol, "X_c")?;
    let lambda_c = &xcp * a * x_c;
    check_invariant(a, x_c, &lambda_c, tol.eigpair_tol, "invariant pair (X_c, Lambda_c)")?;
    check_invariant(a, x_f, lambda_f, tol.eigpair_tol, "invariant pair (X_f, Lambda_f)")?;
    require_compatible(x_c, lambda_a, space, class, tol, "(X_c, Lambda_a)")?;

    let ec = eigenvalues(&lambda_c)?;
    let ef = eigenvalues(lambda_f)?;
    let mut all = ec.clone();
    all.extend(ef.iter().copied());
    let sep = tol.separation_tol * spectral_scale(&all);
    for &l in &ec {
        let p = space.st_scalar(l) * c(class.epsilon2(), 0.0);
        for &m in &ef {
            if (p - m).norm() <= sep {
                return Err(Error::precondition(
                    "partner spectrum of Lambda_c disjoint from Lambda_f",
                    format!("partner {p} of {l} is within {sep:.1e} of {m}"),
                ));
            }
        }
    }

    let x = hcat(&[x_c, x_f]);
    let cond = condition_1norm(&x);
    let xinv = match x.clone().try_inverse() {
        Some(inv) if cond * tol.rank_tol <= 1.0 => inv,
        _ => return Err(Error::Singular { what: "[X_c X_f]", condition: cond }),
    };
    let bc = x_c * lambda_a - a * x_c;
    let b = hcat(&[&bc, &CMat::zeros(n, x_f.ncols())]);
    let delta = structured_kernel(space, class, &x, &b, &xinv, None);
    let lam = crate::matrix::block_diag(&[lambda_a.clone(), lambda_f.clone()]);
    finish(delta, a, &x, &lam, space, class, tol, Some(cond))
}

/// `Delta A = X_c (Lambda_a - Lambda_c) (X_c^* H X_c)^{-1} X_c^* H`, which fixes
/// every invariant pair `H`-orthogonal to `X_c`.
pub fn no_spillover_invariant(
    a: &CMat,
    x_c: &CMat,
    lambda_c: &CMat,
    lambda_a: &CMat,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<StructuredUpdate> {
    require_member(a, space, class, tol)?;
    check_rows(x_c, space.dim(), "X_c")?;
    check_invariant(a, x_c, lambda_c, tol.eigpair_tol, "invariant pair (X_c, Lambda_c)")?;
    if lambda_a.shape() != lambda_c.shape() {
        return Err(Error::Dimension("Lambda_a and Lambda_c must have the same shape".into()));
    }
    require_compatible(x_c, lambda_a, space, class, tol, "(X_c, Lambda_a)")?;
    let (delta, cond) = no_spillover_delta(x_c, &(lambda_a - lambda_c), space, tol)?;
    finish(delta, a, x_c, lambda_a, space, class, tol, Some(cond))
}

/// `X D G^{-1} X^* H` with `G = X^* H X`, solved by LU with one step of
/// iterative refinement.
pub(crate) fn no_spillover_delta(x: &CMat, d: &CMat, space: &ScalarProductSpace, tol: &ToleranceProfile) -> Result<(CMat, f64)> {
    let xh = space.st(x) * space.h();
    let g = &xh * x;
    let cond = condition_1norm(&g);
    let lu = g.clone().lu();
    if !lu.is_invertible() || !cond.is_finite() || cond * tol.rank_tol > 1.0 {
        return Err(Error::Singular { what: "Gram matrix X^* H X", condition: cond });
    }
    let mut y = lu.solve(&xh).expect("checked invertible");
    let resid = &xh - &g * &y;
    y += lu.solve(&resid).expect("checked invertible");
    Ok((x * d * y, cond))
}
