//! Structure-preserving eigenvalue reassignment.

use crate::algebra::{check_free_parameter, full_column_pinv, Field, ScalarProductSpace, StructureClass, ToleranceProfile};
use crate::eigen::{cluster, eigenvalues, spectral_scale};
use crate::error::{Error, Result};
use crate::invariant::{finish, no_spillover_delta, require_member, StructuredUpdate};
use crate::matrix::{c, frob, identity, CMat, C64};
use crate::spectral::{
    assemble_complex, assemble_real_j, assemble_real_l, Arrangement, ReassignmentAssembly, ReassignmentGroup, ReassignmentSpec,
};

/// Residual of the certificate `X^* H X D = epsilon1 epsilon2 (X^* H X D)^*`
/// with `D = Lambda_a - Lambda_c`, and the threshold it is held to.
pub fn certificate_residual(asm: &ReassignmentAssembly, space: &ScalarProductSpace, class: StructureClass, tol: &ToleranceProfile) -> (f64, f64) {
    let x = &asm.x_c;
    let d = asm.delta_lambda();
    let m = space.st(x) * space.h() * x * &d;
    let e = c(space.epsilon1() * class.epsilon2(), 0.0);
    let r = frob(&(&m - space.st(&m) * e));
    (r, tol.structure_tol * frob(x).powi(2) * frob(&d) + 1e-14)
}

fn preflight(a: &CMat, asm: &ReassignmentAssembly, space: &ScalarProductSpace, class: StructureClass, tol: &ToleranceProfile) -> Result<()> {
    require_member(a, space, class, tol)?;
    let x = &asm.x_c;
    if x.nrows() != space.dim() {
        return Err(Error::Dimension("X_c has the wrong number of rows".into()));
    }
    crate::classical::check_invariant(a, x, &asm.lambda_c, tol.eigpair_tol, "invariant pair (X_c, Lambda_c)")?;
    if asm.is_real() && space.field() != Field::Real {
        return Err(Error::Input("real arrangement used with a complex-field space".into()));
    }
    let (r, thr) = certificate_residual(asm, space, class, tol);
    if r > thr {
        return Err(Error::precondition(
            "X_c^* H X_c (Lambda_a - Lambda_c) = epsilon1 epsilon2 (X_c^* H X_c (Lambda_a - Lambda_c))^*",
            format!("residual {r:.3e} exceeds {thr:.3e}"),
        ));
    }
    Ok(())
}

/// Full parametrised family of structured perturbations moving `Lambda_c` to
/// `Lambda_a`:
/// `X D X^+ + e2 H^{-1}(X^+)^* D^* X^* H - H^{-1}(X^+)^* X^* H X D X^+ + H^{-1} P^* Z P`,
/// with `D = Lambda_a - Lambda_c` and `P = I - X X^+`.
pub fn reassign_family(
    a: &CMat,
    asm: &ReassignmentAssembly,
    space: &ScalarProductSpace,
    class: StructureClass,
    z: Option<&CMat>,
    tol: &ToleranceProfile,
) -> Result<StructuredUpdate> {
    preflight(a, asm, space, class, tol)?;
    if let Some(z) = z {
        check_free_parameter(z, space, class, tol)?;
    }
    let x = &asm.x_c;
    let xp = full_column_pinv(x, tol.rank_tol, "X_c")?;
    let d = asm.delta_lambda();
    let h = space.h();
    let xh = space.st(x) * h;
    let xps = space.st(&xp);
    let mut delta = x * &d * &xp;
    delta += space.solve_h(&(&xps * space.st(&d) * &xh)) * c(class.epsilon2(), 0.0);
    delta -= space.solve_h(&(&xps * &xh * x * &d * &xp));
    if let Some(z) = z {
        let p = identity(x.nrows()) - x * &xp;
        delta += space.solve_h(&(space.st(&p) * z * &p));
    }
    finish(delta, a, x, &asm.lambda_a, space, class, tol, None)
}

/// Rank-at-most-`p` perturbation `X D (X^* H X)^{-1} X^* H` that leaves every
/// invariant subspace `H`-orthogonal to `X_c` untouched.
pub fn reassign_no_spillover(
    a: &CMat,
    asm: &ReassignmentAssembly,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<StructuredUpdate> {
    preflight(a, asm, space, class, tol)?;
    let (delta, cond) = no_spillover_delta(&asm.x_c, &asm.delta_lambda(), space, tol)?;
    finish(delta, a, &asm.x_c, &asm.lambda_a, space, class, tol, Some(cond))
}

#[derive(Clone, Debug)]
pub enum ReassignMode<'a> {
    Family(Option<&'a CMat>),
    NoSpillover,
}

/// One simple eigenpair and the eigenvalue it should move to.
#[derive(Clone, Debug)]
pub struct SimpleMove {
    pub lambda: C64,
    pub x: CMat,
    pub target: C64,
}

/// Reassignment from simple eigenpairs. Eigenvalues must be simple and
/// distinct; near-conjugate inputs over the real field are snapped into exact
/// conjugate pairs by averaging.
pub fn reassign_simple(
    a: &CMat,
    moves: &[SimpleMove],
    space: &ScalarProductSpace,
    class: StructureClass,
    mode: ReassignMode<'_>,
    tol: &ToleranceProfile,
) -> Result<(ReassignmentAssembly, StructuredUpdate)> {
    space.check_dim(a, "A")?;
    let ev = eigenvalues(a)?;
    let scale = spectral_scale(&ev);
    let radius = tol.cluster_tol * scale;
    for (i, m) in moves.iter().enumerate() {
        let close = ev.iter().filter(|z| (*z - m.lambda).norm() <= radius).count();
        if close > 1 {
            return Err(Error::precondition("simple eigenvalue", format!("{} has multiplicity {close}", m.lambda)));
        }
        if moves.iter().skip(i + 1).any(|o| (o.lambda - m.lambda).norm() <= radius) {
            return Err(Error::precondition("distinct eigenvalues", format!("{} is listed twice", m.lambda)));
        }
    }
    let mut moves: Vec<SimpleMove> = moves.to_vec();
    if space.field() == Field::Real {
        let values: Vec<C64> = moves.iter().map(|m| m.lambda).collect();
        for g in cluster(&values.iter().map(|z| c(z.re, z.im.abs())).collect::<Vec<_>>(), radius) {
            if g.len() == 2 {
                let (i, j) = (g[0], g[1]);
                let lam = (moves[i].lambda + moves[j].lambda.conj()) * c(0.5, 0.0);
                let tgt = (moves[i].target + moves[j].target.conj()) * c(0.5, 0.0);
                moves[i].lambda = lam;
                moves[i].target = tgt;
                moves[j].lambda = lam.conj();
                moves[j].target = tgt.conj();
            }
        }
        for m in moves.iter_mut() {
            if m.lambda.im.abs() <= tol.snap_tol * scale {
                m.lambda.im = 0.0;
            }
        }
    }
    let spec = ReassignmentSpec {
        groups: moves
            .iter()
            .map(|m| ReassignmentGroup { current: m.lambda, target: m.target, chains: vec![m.x.clone()] })
            .collect(),
    };
    let asm = match (space.field(), class) {
        (Field::Complex, _) => assemble_complex(a, &spec, space, class, tol)?,
        (Field::Real, StructureClass::Lie) => assemble_real_l(a, &spec, space, tol)?,
        (Field::Real, StructureClass::Jordan) => assemble_real_j(a, &spec, space, tol)?,
    };
    let upd = match mode {
        ReassignMode::Family(z) => reassign_family(a, &asm, space, class, z, tol)?,
        ReassignMode::NoSpillover => reassign_no_spillover(a, &asm, space, class, tol)?,
    };
    Ok((asm, upd))
}

/// Picks the arrangement that matches the space and class.
pub fn assemble(
    a: &CMat,
    spec: &ReassignmentSpec,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<ReassignmentAssembly> {
    match (space.field(), class) {
        (Field::Complex, _) => assemble_complex(a, spec, space, class, tol),
        (Field::Real, StructureClass::Lie) => assemble_real_l(a, spec, space, tol),
        (Field::Real, StructureClass::Jordan) => assemble_real_j(a, spec, space, tol),
    }
}

pub fn arrangement_for(field: Field, class: StructureClass) -> Arrangement {
    match (field, class) {
        (Field::Complex, _) => Arrangement::Complex,
        (Field::Real, StructureClass::Lie) => Arrangement::RealLie,
        (Field::Real, StructureClass::Jordan) => Arrangement::RealJordan,
    }
}
