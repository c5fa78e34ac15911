//! Scalar products, their adjoints and the Jordan/Lie algebras they define.

use nalgebra::linalg::LU;
use nalgebra::Dyn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, flip, frob, identity, imag_norm, CMat, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Star {
    /// Bilinear form, `M^T`.
    #[serde(alias = "t")]
    Transpose,
    /// Sesquilinear form, `M^*`.
    #[serde(alias = "ct")]
    ConjTranspose,
}

impl Star {
    pub fn apply(self, m: &CMat) -> CMat {
        match self {
            Star::Transpose => m.transpose(),
            Star::ConjTranspose => m.adjoint(),
        }
    }

    pub fn apply_scalar(self, z: C64) -> C64 {
        match self {
            Star::Transpose => z,
            Star::ConjTranspose => z.conj(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureClass {
    /// Self-adjoint matrices, `A^[*] = A`.
    Jordan,
    /// Skew-adjoint matrices, `A^[*] = -A`.
    Lie,
}

impl StructureClass {
    pub fn epsilon2(self) -> f64 {
        match self {
            StructureClass::Jordan => 1.0,
            StructureClass::Lie => -1.0,
        }
    }
}

/// Tolerances, all relative to the natural scale of the quantity tested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceProfile {
    pub structure_tol: f64,
    pub rank_tol: f64,
    pub residual_tol: f64,
    /// Relative eigenpair residual accepted on input pairs.
    pub eigpair_tol: f64,
    /// Eigenvalues closer than this (times the spectral scale) to their partner
    /// are treated as self-paired.
    pub snap_tol: f64,
    /// Minimum separation (times the spectral scale) between the reassigned
    /// spectrum and the rest.
    pub separation_tol: f64,
    /// Clustering radius (times the spectral scale) used to group computed
    /// eigenvalues of a defective eigenvalue.
    pub cluster_tol: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        ToleranceProfile {
            structure_tol: 1e-8,
            rank_tol: 1e-10,
            residual_tol: 1e-8,
            eigpair_tol: 1e-6,
            snap_tol: 1e-8,
            separation_tol: 1e-6,
            cluster_tol: 1e-3,
        }
    }
}

impl ToleranceProfile {
    /// Profile suited to data printed with five significant digits.
    pub fn loose() -> Self {
        ToleranceProfile {
            structure_tol: 1e-3,
            rank_tol: 1e-8,
            residual_tol: 1e-3,
            eigpair_tol: 1e-3,
            snap_tol: 1e-4,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("structure_tol", self.structure_tol),
            ("rank_tol", self.rank_tol),
            ("residual_tol", self.residual_tol),
            ("eigpair_tol", self.eigpair_tol),
            ("snap_tol", self.snap_tol),
            ("separation_tol", self.separation_tol),
            ("cluster_tol", self.cluster_tol),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Input(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// A unitary `H` with `H^* = epsilon1 H` defining `<x, y> = x^* H y`.
#[derive(Clone, Debug)]
pub struct ScalarProductSpace {
    h: CMat,
    lu: LU<C64, Dyn, Dyn>,
    star: Star,
    epsilon1: f64,
    field: Field,
}

impl ScalarProductSpace {
    /// Validates `H`; `epsilon1 = None` infers the sign from `H`.
    pub fn new(
        h: CMat,
        star: Star,
        field: Field,
        epsilon1: Option<f64>,
        tol: &ToleranceProfile,
    ) -> Result<Self> {
        let n = h.nrows();
        if n == 0 || h.ncols() != n {
            return Err(Error::InvalidSpace(format!("H must be square and nonempty, got {}x{}", h.nrows(), h.ncols())));
        }
        let scale = frob(&h).max(1.0);
        if field == Field::Real && imag_norm(&h) > tol.structure_tol * scale {
            return Err(Error::InvalidSpace("H must be real over the real field".into()));
        }
        let h = if field == Field::Real { h.map(|z| c(z.re, 0.0)) } else { h };
        let eff = effective_star(star, field);
        let hs = eff.apply(&h);
        let eps = match epsilon1 {
            Some(e) if e == 1.0 || e == -1.0 => e,
            Some(e) => return Err(Error::InvalidSpace(format!("epsilon1 must be +1 or -1, got {e}"))),
            None => {
                if frob(&(&hs - &h)) <= frob(&(&hs + &h)) {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        let sym = frob(&(&hs - &h * c(eps, 0.0)));
        if sym > tol.structure_tol * scale {
            return Err(Error::InvalidSpace(format!(
                "H^star = {eps:+} H violated: residual {sym:.3e}"
            )));
        }
        let unit = frob(&(h.adjoint() * &h - identity(n)));
        if unit > tol.structure_tol * (n as f64).sqrt() {
            return Err(Error::InvalidSpace(format!("H is not unitary: ||H^*H - I||_F = {unit:.3e}")));
        }
        let lu = h.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::InvalidSpace("H is singular".into()));
        }
        Ok(ScalarProductSpace { h, lu, star, epsilon1: eps, field })
    }

    pub fn identity(n: usize, star: Star, field: Field) -> Self {
        Self::new(identity(n), star, field, Some(1.0), &ToleranceProfile::default())
            .expect("identity is a valid scalar product")
    }

    pub fn h(&self) -> &CMat {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn star(&self) -> Star {
        self.star
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn epsilon1(&self) -> f64 {
        self.epsilon1
    }

    /// The involution used inside formulas. Over the real field this is the
    /// conjugate transpose, which agrees with the transpose on real data and
    /// is the right one for the complex Jordan chains of real matrices.
    pub fn formula_star(&self) -> Star {
        effective_star(self.star, self.field)
    }

    pub fn st(&self, m: &CMat) -> CMat {
        self.formula_star().apply(m)
    }

    pub fn st_scalar(&self, z: C64) -> C64 {
        self.formula_star().apply_scalar(z)
    }

    /// `H^{-1} M` by an LU solve against `H`.
    pub fn solve_h(&self, m: &CMat) -> CMat {
        self.lu.solve(m).expect("H was checked invertible")
    }

    pub fn check_dim(&self, m: &CMat, what: &str) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "{what} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols(),
                n = self.dim()
            )));
        }
        Ok(())
    }
}

fn effective_star(star: Star, field: Field) -> Star {
    match field {
        Field::Real => Star::ConjTranspose,
        Field::Complex => star,
    }
}

/// `A^[*] = H^{-1} A^* H`.
pub fn adjoint(a: &CMat, space: &ScalarProductSpace) -> Result<CMat> {
    space.check_dim(a, "A")?;
    Ok(space.solve_h(&(space.st(a) * space.h())))
}

/// `||A^[*] - epsilon2 A||_F`.
pub fn structure_residual(a: &CMat, space: &ScalarProductSpace, class: StructureClass) -> Result<f64> {
    let adj = adjoint(a, space)?;
    Ok(frob(&(adj - a * c(class.epsilon2(), 0.0))))
}

pub fn is_member(a: &CMat, space: &ScalarProductSpace, class: StructureClass, tol: &ToleranceProfile) -> Result<bool> {
    let scale = frob(a).max(1.0);
    if space.field() == Field::Real && imag_norm(a) > tol.structure_tol * scale {
        return Ok(false);
    }
    Ok(structure_residual(a, space, class)? <= tol.structure_tol * scale)
}

/// Moore-Penrose pseudoinverse with singular values below `rank_tol * sigma_max`
/// discarded. Returns the pseudoinverse and the numerical rank. Fails when a
/// singular value sits within a factor of ten of the cutoff.
pub fn pseudoinverse(x: &CMat, rank_tol: f64) -> Result<(CMat, usize)> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return Ok((CMat::zeros(n, m), 0));
    }
    let (u, sv, v) = crate::matrix::svd(x);
    let smax = sv[0];
    let cutoff = rank_tol * smax;
    let mut rank = 0;
    for &s in &sv {
        if smax > 0.0 && s > cutoff / 10.0 && s < cutoff * 10.0 {
            return Err(Error::precondition(
                "well-separated rank decision",
                format!("singular value {s:.3e} is within a factor 10 of the cutoff {cutoff:.3e}"),
            ));
        }
        if smax > 0.0 && s > cutoff {
            rank += 1;
        }
    }
    let mut out = CMat::zeros(n, m);
    for (k, s) in sv.iter().take(rank).enumerate() {
        out += v.column(k) * u.column(k).adjoint() * c(1.0 / s, 0.0);
    }
    Ok((out, rank))
}

/// Pseudoinverse of a matrix required to have full column rank.
pub fn full_column_pinv(x: &CMat, rank_tol: f64, what: &'static str) -> Result<CMat> {
    let (p, rank) = pseudoinverse(x, rank_tol)?;
    if rank != x.ncols() {
        return Err(Error::precondition(
            "full column rank",
            format!("{what} has numerical rank {rank}, expected {}", x.ncols()),
        ));
    }
    Ok(p)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    crate::matrix::svd(m).1
}

/// Number of singular values above `rank_tol * sigma_max`.
pub fn numerical_rank(m: &CMat, rank_tol: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rank_tol * smax).count()
}

/// Random matrix with entries uniform in the unit square (or interval when real).
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, field: Field, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re = rng.random_range(-1.0..1.0);
        let im = match field {
            Field::Real => 0.0,
            Field::Complex => rng.random_range(-1.0..1.0),
        };
        c(re, im)
    })
}

/// `(M + epsilon1 epsilon2 M^*)/2`, the admissible free parameters `Z`.
pub fn sample_structured<R: Rng + ?Sized>(space: &ScalarProductSpace, class: StructureClass, rng: &mut R) -> CMat {
    let n = space.dim();
    let m = random_matrix(n, n, space.field(), rng);
    let e = space.epsilon1() * class.epsilon2();
    (&m + space.st(&m) * c(e, 0.0)) * c(0.5, 0.0)
}

/// `||Z^* - epsilon1 epsilon2 Z||_F` checked against `structure_tol`.
pub fn check_free_parameter(z: &CMat, space: &ScalarProductSpace, class: StructureClass, tol: &ToleranceProfile) -> Result<()> {
    space.check_dim(z, "Z")?;
    let scale = frob(z).max(1.0);
    if space.field() == Field::Real && imag_norm(z) > tol.structure_tol * scale {
        return Err(Error::precondition("admissible Z", "Z must be real over the real field"));
    }
    let e = space.epsilon1() * class.epsilon2();
    let r = frob(&(space.st(z) - z * c(e, 0.0)));
    if r > tol.structure_tol * scale {
        return Err(Error::precondition(
            "admissible Z",
            format!("Z^star = epsilon1 epsilon2 Z violated: residual {r:.3e}"),
        ));
    }
    Ok(())
}

/// Random unitary (orthogonal when real) matrix from a QR factorisation.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, field: Field, rng: &mut R) -> CMat {
    let m = random_matrix(n, n, field, rng);
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    // fix column phases so the distribution does not depend on QR conventions
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / c(d.norm(), 0.0);
            let mut col = q.column_mut(j);
            col *= ph;
        }
    }
    q
}

/// Named Gram matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpacePreset {
    Identity,
    /// The exchange matrix.
    Flip,
    /// `diag(I_p, -I_{n-p})`.
    Signature { positive: usize },
    /// `[[0, I], [-I, 0]]`, `n` even.
    SkewJ,
    /// `U^* B U` for a random unitary `U` (orthogonal for bilinear forms) and
    /// base `B` equal to the exchange matrix or `SkewJ` depending on `epsilon1`.
    Random { epsilon1: i8, seed: u64 },
}

impl SpacePreset {
    pub fn gram(&self, n: usize, star: Star, field: Field) -> Result<CMat> {
        Ok(match *self {
            SpacePreset::Identity => identity(n),
            SpacePreset::Flip => flip(n),
            SpacePreset::Signature { positive } => {
                if positive > n {
                    return Err(Error::Input(format!("signature with {positive} > n = {n} positive entries")));
                }
                CMat::from_fn(n, n, |i, j| if i != j { ZERO } else if i < positive { ONE } else { -ONE })
            }
            SpacePreset::SkewJ => skew_j(n)?,
            SpacePreset::Random { epsilon1, seed } => {
                use rand::SeedableRng;
                let base = match epsilon1 {
                    1 => flip(n),
                    -1 => skew_j(n)?,
                    _ => return Err(Error::Input("epsilon1 must be +1 or -1".into())),
                };
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let ufield = if star == Star::Transpose || field == Field::Real { Field::Real } else { Field::Complex };
                let u = random_unitary(n, ufield, &mut rng);
                effective_star(star, field).apply(&u) * base * u
            }
        })
    }

    pub fn space(&self, n: usize, star: Star, field: Field) -> Result<ScalarProductSpace> {
        let h = self.gram(n, star, field)?;
        ScalarProductSpace::new(h, star, field, None, &ToleranceProfile::default())
    }
}

pub fn skew_j(n: usize) -> Result<CMat> {
    if !n.is_multiple_of(2) {
        return Err(Error::Input(format!("skew-J preset needs even n, got {n}")));
    }
    let m = n / 2;
    Ok(CMat::from_fn(n, n, |i, j| {
        if i < m && j == i + m {
            ONE
        } else if i >= m && j + m == i {
            -ONE
        } else {
            ZERO
        }
    }))
}
