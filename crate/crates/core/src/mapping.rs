//! Structured solutions of `A X = B` with `A` in a Jordan or Lie algebra.

use serde::Serialize;

use crate::algebra::{check_free_parameter, pseudoinverse, structure_residual, ScalarProductSpace, StructureClass, ToleranceProfile};
use crate::error::{Error, Result};
use crate::matrix::{c, frob, identity, CMat};

const ABS_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityReport {
    /// `||B X^+ X - B||_F`.
    pub consistency_residual: f64,
    /// `||X^* H B - epsilon1 epsilon2 (X^* H B)^*||_F`.
    pub symmetry_residual: f64,
    pub consistency_threshold: f64,
    pub symmetry_threshold: f64,
    pub rank_x: usize,
    pub feasible: bool,
}

#[derive(Clone, Debug)]
pub struct StructuredMapSolution {
    pub a: CMat,
    pub interpolation_residual: f64,
    pub structure_residual: f64,
    pub feasibility: FeasibilityReport,
}

fn check_shapes(x: &CMat, b: &CMat, space: &ScalarProductSpace) -> Result<()> {
    if x.nrows() != space.dim() || b.shape() != x.shape() {
        return Err(Error::Dimension(format!(
            "X is {}x{}, B is {}x{}, n = {}",
            x.nrows(),
            x.ncols(),
            b.nrows(),
            b.ncols(),
            space.dim()
        )));
    }
    Ok(())
}

pub fn feasibility_check(
    x: &CMat,
    b: &CMat,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<FeasibilityReport> {
    check_shapes(x, b, space)?;
    let (xp, rank_x) = pseudoinverse(x, tol.rank_tol)?;
    let consistency_residual = frob(&(b * &xp * x - b));
    let g = space.st(x) * space.h() * b;
    let e = space.epsilon1() * class.epsilon2();
    let symmetry_residual = frob(&(&g - space.st(&g) * c(e, 0.0)));
    let consistency_threshold = tol.residual_tol * frob(b) + ABS_FLOOR;
    let symmetry_threshold = tol.structure_tol * frob(x) * frob(b) + ABS_FLOOR;
    Ok(FeasibilityReport {
        consistency_residual,
        symmetry_residual,
        consistency_threshold,
        symmetry_threshold,
        rank_x,
        feasible: consistency_residual <= consistency_threshold && symmetry_residual <= symmetry_threshold,
    })
}

/// `B X^+ + e H^{-1}[(H B X^+)^* - (X^+)^* (X^* H B)^* X^+] + H^{-1} P^* Z P`
/// with `e = epsilon1 epsilon2` and `P = I - X X^+`.
pub(crate) fn structured_kernel(
    space: &ScalarProductSpace,
    class: StructureClass,
    x: &CMat,
    b: &CMat,
    xp: &CMat,
    z: Option<&CMat>,
) -> CMat {
    let e = c(space.epsilon1() * class.epsilon2(), 0.0);
    let h = space.h();
    let bxp = b * xp;
    let xhb = space.st(x) * h * b;
    let inner = space.st(&(h * &bxp)) - space.st(xp) * space.st(&xhb) * xp;
    let mut a = &bxp + space.solve_h(&inner) * e;
    if let Some(z) = z {
        let p = identity(x.nrows()) - x * xp;
        a += space.solve_h(&(space.st(&p) * z * &p));
    }
    a
}

/// General structured solution. `z = None` gives the minimal Frobenius-norm one.
pub fn solve_structured(
    x: &CMat,
    b: &CMat,
    space: &ScalarProductSpace,
    class: StructureClass,
    z: Option<&CMat>,
    tol: &ToleranceProfile,
) -> Result<StructuredMapSolution> {
    let feasibility = feasibility_check(x, b, space, class, tol)?;
    if !feasibility.feasible {
        return Err(Error::precondition(
            "structured mapping feasibility",
            format!(
                "B X^+ X = B residual {:.3e} (limit {:.3e}), X^* H B symmetry residual {:.3e} (limit {:.3e})",
                feasibility.consistency_residual,
                feasibility.consistency_threshold,
                feasibility.symmetry_residual,
                feasibility.symmetry_threshold
            ),
        ));
    }
    if let Some(z) = z {
        check_free_parameter(z, space, class, tol)?;
    }
    let (xp, _) = pseudoinverse(x, tol.rank_tol)?;
    let a = structured_kernel(space, class, x, b, &xp, z);
    let interpolation_residual = frob(&(&a * x - b));
    let structure_residual = structure_residual(&a, space, class)?;
    Ok(StructuredMapSolution { a, interpolation_residual, structure_residual, feasibility })
}

pub fn minimal_structured(
    x: &CMat,
    b: &CMat,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<StructuredMapSolution> {
    solve_structured(x, b, space, class, None, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{random_matrix, sample_structured, Field, SpacePreset, Star};
    use rand::SeedableRng;

    #[test]
    fn solution_interpolates_and_is_structured() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let space = SpacePreset::Random { epsilon1: 1, seed: 4 }.space(5, Star::ConjTranspose, Field::Complex).unwrap();
        let class = StructureClass::Lie;
        let a0 = sample_structured(&space, class, &mut rng);
        let a0 = space.solve_h(&a0);
        let x = random_matrix(5, 2, Field::Complex, &mut rng);
        let b = &a0 * &x;
        let z = sample_structured(&space, class, &mut rng);
        let s = solve_structured(&x, &b, &space, class, Some(&z), &Default::default()).unwrap();
        assert!(s.interpolation_residual < 1e-12);
        assert!(s.structure_residual < 1e-12);
    }

    #[test]
    fn infeasible_right_hand_side_is_rejected() {
        let space = SpacePreset::Identity.space(3, Star::Transpose, Field::Real).unwrap();
        let x = crate::matrix::from_real(3, 1, &[1.0, 0.0, 0.0]);
        // x^T b must vanish for a skew-symmetric A
        let b = crate::matrix::from_real(3, 1, &[1.0, 0.0, 0.0]);
        let err = minimal_structured(&x, &b, &space, StructureClass::Lie, &Default::default()).unwrap_err();
        assert!(err.is_mathematical());
    }
}
