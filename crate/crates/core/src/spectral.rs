//! Eigenvalue pairing, Jordan chains, Gram structure and the column
//! arrangements used by the reassignment formulas.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{full_column_pinv, Field, ScalarProductSpace, Star, StructureClass, ToleranceProfile};
use crate::eigen::{cluster, eigenvalues, spectral_scale};
use crate::error::{Error, Result};
use crate::matrix::{block_diag, c, conj, frob, hcat, identity, imag_norm, jordan_matrix, real_part, to_real, CMat, C64, ONE, ZERO};

/// Maximum dimension accepted by the dense eigen oracles, overridable through
/// the `SPECPRESERVE_ORACLE_NMAX` environment variable.
pub fn oracle_nmax() -> usize {
    std::env::var("SPECPRESERVE_ORACLE_NMAX").ok().and_then(|s| s.parse().ok()).unwrap_or(64)
}

/// `epsilon2 lambda^star`, the eigenvalue paired with `lambda`.
pub fn pairing_partner(lambda: C64, class: StructureClass, star: Star) -> C64 {
    star.apply_scalar(lambda) * class.epsilon2()
}

/// Every eigenvalue forced by `lambda`: the partner and, over the real field,
/// the complex conjugates of both.
pub fn pairing_orbit(lambda: C64, class: StructureClass, space: &ScalarProductSpace, snap: f64) -> Vec<C64> {
    let mut out = vec![lambda];
    let push = |z: C64, out: &mut Vec<C64>| {
        if out.iter().all(|w| (w - z).norm() > snap) {
            out.push(z);
        }
    };
    match space.field() {
        Field::Complex => push(pairing_partner(lambda, class, space.star()), &mut out),
        Field::Real => {
            let e = class.epsilon2();
            push(lambda.conj(), &mut out);
            push(lambda * e, &mut out);
            push(lambda.conj() * e, &mut out);
        }
    }
    out
}

/// `A X = X J(lambda)` with `J` a single upper Jordan block; the first column is
/// an eigenvector of unit 2-norm.
#[derive(Clone, Debug)]
pub struct JordanPair {
    pub lambda: C64,
    pub chain: CMat,
    /// `||A X - X J||_F / (||A||_F ||X||_F)`.
    pub residual: f64,
}

impl JordanPair {
    pub fn new(a: &CMat, lambda: C64, chain: CMat) -> Self {
        let residual = chain_residual(a, lambda, &chain);
        JordanPair { lambda, chain, residual }
    }

    pub fn len(&self) -> usize {
        self.chain.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.ncols() == 0
    }
}

pub fn chain_residual(a: &CMat, lambda: C64, chain: &CMat) -> f64 {
    let j = jordan_matrix(lambda, &[chain.ncols()]);
    let r = frob(&(a * chain - chain * j));
    r / ((frob(a) + lambda.norm()) * frob(chain)).max(f64::MIN_POSITIVE)
}

trait Lift: crate::matrix::SvdScalar {}

impl Lift for f64 {}

impl Lift for C64 {}

fn svd_sorted<T: Lift>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    crate::matrix::svd(m)
}

/// Orthonormal basis of the last `k` right singular vectors.
fn trailing_right<T: Lift>(m: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let (_, _, v) = svd_sorted(m);
    let n = m.ncols();
    // square inputs give a full V
    v.columns(n - k, k).into_owned()
}

fn nullity<T: Lift>(m: &DMatrix<T>, thr: f64) -> usize {
    let (_, s, _) = svd_sorted(m);
    m.ncols() - s.iter().filter(|&&x| x > thr).count()
}

fn orth<T: Lift>(m: &DMatrix<T>, thr: f64) -> DMatrix<T> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let (u, s, _) = svd_sorted(m);
    let r = s.iter().filter(|&&x| x > thr).count();
    u.columns(0, r).into_owned()
}

/// Jordan chains of a nilpotent matrix, longest first, as `(head, length)`.
fn nilpotent_chains<T: Lift>(m: &DMatrix<T>, thr: f64) -> Result<Vec<DMatrix<T>>> {
    let k = m.nrows();
    let mut powers = vec![DMatrix::<T>::identity(k, k)];
    let mut nullities = vec![0usize];
    while *nullities.last().unwrap() < k {
        if powers.len() > k {
            return Err(Error::Eigen("restricted matrix is not nilpotent at the rank tolerance".into()));
        }
        let p = powers.last().unwrap() * m;
        let scale = frob_t(m).max(1.0).powi(powers.len() as i32);
        nullities.push(nullity(&p, thr * scale));
        powers.push(p);
    }
    let index = nullities.len() - 1;
    let kernel = |l: usize| -> DMatrix<T> {
        if l == 0 {
            return DMatrix::zeros(k, 0);
        }
        trailing_right(&powers[l], nullities[l])
    };
    let mut heads: Vec<(DMatrix<T>, usize)> = Vec::new();
    for l in (1..=index).rev() {
        let at_level: Vec<DMatrix<T>> = heads.iter().map(|(v, s)| &powers[s - l] * v).collect();
        let below = kernel(l - 1);
        let mut cols: Vec<DMatrix<T>> = vec![below];
        cols.extend(at_level.iter().cloned());
        let stacked = hstack(&cols, k);
        let q = orth(&stacked, 1e-10);
        let new = (nullities[l] - nullities[l - 1]).checked_sub(at_level.len()).ok_or_else(|| {
            Error::Eigen("inconsistent Jordan staircase".into())
        })?;
        if new == 0 {
            continue;
        }
        let kl = kernel(l);
        let proj = &kl - &q * (q.adjoint() * &kl);
        let (u, s, _) = svd_sorted(&proj);
        if s.len() < new || s[new - 1] < 1e-8 {
            return Err(Error::Eigen("Jordan chain heads are not well separated".into()));
        }
        for j in 0..new {
            heads.push((u.columns(j, 1).into_owned(), l));
        }
    }
    let mut chains = Vec::new();
    for (v, s) in heads {
        let mut ch = DMatrix::<T>::zeros(k, s);
        for j in 0..s {
            ch.set_column(j, &(&powers[s - 1 - j] * &v).column(0));
        }
        let nrm = ch.column(0).norm();
        chains.push(ch.unscale(nrm));
    }
    Ok(chains)
}

fn frob_t<T: Lift>(m: &DMatrix<T>) -> f64 {
    m.norm()
}

fn hstack<T: Lift>(cols: &[DMatrix<T>], rows: usize) -> DMatrix<T> {
    let total: usize = cols.iter().map(|c| c.ncols()).sum();
    let mut out = DMatrix::<T>::zeros(rows, total);
    let mut at = 0;
    for c in cols {
        out.view_mut((0, at), c.shape()).copy_from(c);
        at += c.ncols();
    }
    out
}

fn chains_for_cluster<T: Lift>(a: &DMatrix<T>, mu: T, mult: usize, thr: f64) -> Result<Vec<DMatrix<T>>> {
    let n = a.nrows();
    let nmat = a - DMatrix::<T>::identity(n, n) * mu;
    let mut p = nmat.clone();
    for _ in 1..mult {
        p = &p * &nmat;
    }
    let v = trailing_right(&p, mult);
    let t = v.adjoint() * a * &v;
    let m = t - DMatrix::<T>::identity(mult, mult) * mu;
    let ys = nilpotent_chains(&m, thr)?;
    Ok(ys.into_iter().map(|y| &v * y).collect())
}

/// Jordan pairs of `A`, one per Jordan block, grouped by eigenvalue. For real
/// `A` the chains of real eigenvalues are real and the chains of `conj(lambda)`
/// are the conjugates of those of `lambda`.
pub fn extract_jordan_pairs(a: &CMat, tol: &ToleranceProfile) -> Result<Vec<JordanPair>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension("A must be square".into()));
    }
    if n > oracle_nmax() {
        return Err(Error::Input(format!("Jordan extraction is limited to n <= {} (got {n})", oracle_nmax())));
    }
    let ev = eigenvalues(a)?;
    let scale = spectral_scale(&ev);
    let radius = tol.cluster_tol * scale;
    let groups = cluster(&ev, radius);
    let means: Vec<C64> = groups
        .iter()
        .map(|g| g.iter().map(|&i| ev[i]).sum::<C64>() / c(g.len() as f64, 0.0))
        .collect();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let d = groups[i]
                .iter()
                .flat_map(|&p| groups[j].iter().map(move |&q| (p, q)))
                .map(|(p, q)| (ev[p] - ev[q]).norm())
                .fold(f64::INFINITY, f64::min);
            if d < 2.0 * radius {
                return Err(Error::Eigen(format!(
                    "ill-conditioned eigenvalue clustering: clusters at {} and {} are {d:.3e} apart with radius {radius:.3e}",
                    means[i], means[j]
                )));
            }
        }
    }
    let real = imag_norm(a) == 0.0;
    let thr = 1e-8;
    let mut out: Vec<JordanPair> = Vec::new();
    let mut done: Vec<Option<Vec<CMat>>> = vec![None; groups.len()];
    for (gi, g) in groups.iter().enumerate() {
        let mult = g.len();
        let mu = means[gi];
        let chains: Vec<CMat> = if real && mu.im.abs() <= radius {
            let ar = to_real(a);
            chains_for_cluster(&ar, mu.re, mult, thr)?
                .into_iter()
                .map(|ch| ch.map(|x| c(x, 0.0)))
                .collect()
        } else if real && mu.im < 0.0 {
            match (0..gi).find(|&h| (means[h] - mu.conj()).norm() <= 2.0 * radius && groups[h].len() == mult) {
                Some(h) => done[h].as_ref().unwrap().iter().map(conj).collect(),
                None => chains_for_cluster(a, mu, mult, thr)?,
            }
        } else {
            chains_for_cluster(a, mu, mult, thr)?
        };
        let mu = if real && mu.im.abs() <= radius { c(mu.re, 0.0) } else { mu };
        for ch in &chains {
            let p = JordanPair::new(a, mu, ch.clone());
            if p.residual > tol.eigpair_tol {
                return Err(Error::Eigen(format!("Jordan chain for {mu} has residual {:.3e}", p.residual)));
            }
            out.push(p);
        }
        done[gi] = Some(chains);
    }
    // conjugate clusters found before their partner: recompute for exact conjugacy
    if real {
        let pairs = out.clone();
        for p in out.iter_mut() {
            if p.lambda.im < -radius {
                if let Some(q) = pairs.iter().find(|q| (q.lambda - p.lambda.conj()).norm() <= 2.0 * radius && q.len() == p.len()) {
                    if q.lambda.im > 0.0 {
                        p.lambda = q.lambda.conj();
                        p.chain = conj(&q.chain);
                        p.residual = chain_residual(a, p.lambda, &p.chain);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Makes a chain of a real eigenvalue of a real matrix real, keeping the
/// Jordan relation.
pub fn realify_chain(a: &CMat, lambda: f64, chain: &CMat, tol: f64) -> Result<CMat> {
    if imag_norm(chain) == 0.0 {
        return Ok(chain.clone());
    }
    let (mut best, mut idx) = (0.0, 0);
    for i in 0..chain.nrows() {
        if chain[(i, 0)].norm() > best {
            best = chain[(i, 0)].norm();
            idx = i;
        }
    }
    let ph = chain[(idx, 0)] / c(best, 0.0);
    let rotated = chain * ph.conj();
    for cand in [real_part(&rotated), real_part(&(rotated * c(0.0, -1.0)))] {
        let nrm = cand.column(0).norm();
        if nrm == 0.0 {
            continue;
        }
        let cand = cand * c(1.0 / nrm, 0.0);
        if chain_residual(a, c(lambda, 0.0), &cand) <= tol && crate::algebra::numerical_rank(&cand, 1e-8) == cand.ncols() {
            return Ok(cand);
        }
    }
    Err(Error::precondition("real Jordan chain", format!("chain for {lambda} cannot be made real")))
}

/// One reassigned eigenvalue with all of its Jordan chains.
#[derive(Clone, Debug)]
pub struct ReassignmentGroup {
    pub current: C64,
    pub target: C64,
    pub chains: Vec<CMat>,
}

impl ReassignmentGroup {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.chains.iter().map(|c| c.ncols()).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }
}

#[derive(Clone, Debug, Default)]
pub struct ReassignmentSpec {
    pub groups: Vec<ReassignmentGroup>,
}

impl ReassignmentSpec {
    /// Groups the pairs whose eigenvalue lies within `radius` of each listed
    /// current eigenvalue.
    pub fn from_pairs(pairs: &[JordanPair], moves: &[(C64, C64)], radius: f64) -> Result<Self> {
        let mut groups = Vec::new();
        for &(current, target) in moves {
            let chains: Vec<CMat> = pairs
                .iter()
                .filter(|p| (p.lambda - current).norm() <= radius)
                .map(|p| p.chain.clone())
                .collect();
            if chains.is_empty() {
                return Err(Error::precondition("eigenvalue of A", format!("no Jordan chain found for {current}")));
            }
            groups.push(ReassignmentGroup { current, target, chains });
        }
        Ok(ReassignmentSpec { groups })
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PairingViolation {
    pub group: usize,
    pub eigenvalue: (f64, f64),
    pub reason: String,
}

fn violation(group: usize, z: C64, reason: impl Into<String>) -> PairingViolation {
    PairingViolation { group, eigenvalue: (z.re, z.im), reason: reason.into() }
}

fn spec_scale(spec: &ReassignmentSpec) -> f64 {
    let all: Vec<C64> = spec.groups.iter().flat_map(|g| [g.current, g.target]).collect();
    spectral_scale(&all)
}

/// Checks that the reassignment respects eigenvalue pairing. An empty result
/// means the specification is closed.
pub fn validate_pairing_closure(
    spec: &ReassignmentSpec,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Vec<PairingViolation> {
    let snap = tol.snap_tol * spec_scale(spec);
    let mut out = Vec::new();
    let find = |z: C64| spec.groups.iter().position(|g| (g.current - z).norm() <= snap);
    for (i, g) in spec.groups.iter().enumerate() {
        if g.chains.is_empty() {
            out.push(violation(i, g.current, "group has no Jordan chains"));
        }
        if spec.groups.iter().enumerate().any(|(j, h)| j != i && (h.current - g.current).norm() <= snap) {
            out.push(violation(i, g.current, "eigenvalue listed in more than one group"));
        }
    }
    match space.field() {
        Field::Complex => {
            let partner = |z: C64| pairing_partner(z, class, space.star());
            for (i, g) in spec.groups.iter().enumerate() {
                let self_c = (partner(g.current) - g.current).norm() <= snap;
                let self_t = (partner(g.target) - g.target).norm() <= snap;
                if self_c && !self_t {
                    out.push(violation(i, g.current, "self-paired eigenvalue mapped to a target that is not self-paired"));
                }
                if !self_c && self_t {
                    out.push(violation(i, g.current, "eigenvalue that is not self-paired mapped to a self-paired target"));
                }
                if !self_c {
                    check_partner(spec, i, partner(g.current), partner(g.target), snap, &find, "pairing partner", &mut out);
                }
            }
        }
        Field::Real => {
            let e = class.epsilon2();
            for (i, g) in spec.groups.iter().enumerate() {
                let (l, t) = (g.current, g.target);
                let kind = |z: C64| real_kind(z, class, snap);
                if class == StructureClass::Lie && l.norm() <= snap {
                    out.push(violation(i, l, "zero eigenvalue cannot be reassigned in the real Lie case"));
                    continue;
                }
                if class == StructureClass::Lie && t.norm() <= snap {
                    out.push(violation(i, l, "zero target is not allowed in the real Lie case"));
                    continue;
                }
                if kind(l) != kind(t) {
                    out.push(violation(i, l, format!("{} eigenvalue mapped to a {} target", kind(l), kind(t))));
                }
                if l.im.abs() > snap {
                    check_partner(spec, i, l.conj(), t.conj(), snap, &find, "complex conjugate", &mut out);
                }
                if (l * e - l).norm() > snap {
                    check_partner(spec, i, l * e, t * e, snap, &find, "pairing partner", &mut out);
                }
            }
        }
    }
    out
}

/// Adds the groups forced by pairing (and conjugation over the real field)
/// that `spec` leaves out, taking their chains from `pairs`. Existing groups
/// are kept as given, so conflicts still show up in validation.
pub fn complete_pairing(
    spec: &ReassignmentSpec,
    pairs: &[JordanPair],
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<ReassignmentSpec> {
    let snap = tol.snap_tol * spec_scale(spec);
    let ev: Vec<C64> = pairs.iter().map(|p| p.lambda).collect();
    let radius = tol.cluster_tol * spectral_scale(&ev);
    let e = c(class.epsilon2(), 0.0);
    let maps: Vec<fn(C64, C64) -> C64> = match space.field() {
        Field::Complex if space.star() == Star::ConjTranspose => vec![|z, e| z.conj() * e],
        Field::Complex => vec![|z, e| z * e],
        Field::Real => vec![|z, _| z.conj(), |z, e| z * e, |z, e| z.conj() * e],
    };
    let mut out = spec.clone();
    let mut k = 0;
    while k < out.groups.len() {
        let (cur, tgt) = (out.groups[k].current, out.groups[k].target);
        for f in &maps {
            let (pc, pt) = (f(cur, e), f(tgt, e));
            if out.groups.iter().any(|g| (g.current - pc).norm() <= snap.max(radius)) {
                continue;
            }
            let chains: Vec<CMat> = pairs.iter().filter(|p| (p.lambda - pc).norm() <= radius).map(|p| p.chain.clone()).collect();
            if chains.is_empty() {
                return Err(Error::precondition("eigenvalue pairing", format!("partner {pc} of {cur} is not an eigenvalue of A")));
            }
            out.groups.push(ReassignmentGroup { current: pc, target: pt, chains });
        }
        k += 1;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn check_partner(
    spec: &ReassignmentSpec,
    i: usize,
    want_current: C64,
    want_target: C64,
    snap: f64,
    find: &dyn Fn(C64) -> Option<usize>,
    what: &str,
    out: &mut Vec<PairingViolation>,
) {
    let g = &spec.groups[i];
    match find(want_current) {
        None => out.push(violation(i, g.current, format!("{what} {want_current} is not reassigned"))),
        Some(j) => {
            let h = &spec.groups[j];
            if (h.target - want_target).norm() > snap {
                out.push(violation(i, g.current, format!("{what} {} must move to {want_target}, not {}", h.current, h.target)));
            }
            if h.sizes() != g.sizes() {
                out.push(violation(i, g.current, format!("{what} {} has different Jordan block sizes", h.current)));
            }
        }
    }
}

fn real_kind(z: C64, class: StructureClass, snap: f64) -> &'static str {
    let re0 = z.re.abs() <= snap;
    let im0 = z.im.abs() <= snap;
    match class {
        StructureClass::Jordan => {
            if im0 {
                "real"
            } else {
                "non-real"
            }
        }
        StructureClass::Lie => {
            if im0 {
                "real"
            } else if re0 {
                "imaginary"
            } else {
                "generic complex"
            }
        }
    }
}

/// Gram blocks `X_i^* H X_j` between Jordan pairs, with the blocks predicted to
/// vanish because `lambda_j` differs from the partner of `lambda_i` by at least
/// `min_gap`.
#[derive(Clone, Debug)]
pub struct GramReport {
    pub blocks: Vec<Vec<CMat>>,
    pub predicted_zero: Vec<Vec<bool>>,
    /// Largest `||X_i^* H X_j||_F / (||X_i||_F ||X_j||_F)` over predicted zeros.
    pub max_zero_deviation: f64,
}

pub fn gram_blocks(pairs: &[JordanPair], space: &ScalarProductSpace, class: StructureClass, min_gap: f64) -> GramReport {
    let k = pairs.len();
    let mut blocks = vec![Vec::with_capacity(k); k];
    let mut predicted_zero = vec![vec![false; k]; k];
    let mut worst = 0.0f64;
    for i in 0..k {
        let left = space.st(&pairs[i].chain) * space.h();
        let partner = pairing_partner(pairs[i].lambda, class, space.formula_star());
        for j in 0..k {
            let b = &left * &pairs[j].chain;
            let zero = (pairs[j].lambda - partner).norm() >= min_gap;
            if zero {
                let rel = frob(&b) / (frob(&pairs[i].chain) * frob(&pairs[j].chain));
                worst = worst.max(rel);
            }
            predicted_zero[i][j] = zero;
            blocks[i].push(b);
        }
    }
    GramReport { blocks, predicted_zero, max_zero_deviation: worst }
}

/// For `X` and `X~` spanning the chains of a non-self-paired eigenvalue and its
/// partner, `[X X~]^* H [X X~]` has zero diagonal blocks and a nonsingular
/// off-diagonal block. Returns the relative size of the diagonal blocks and the
/// condition number of the off-diagonal block.
pub fn antidiagonal_form(x: &CMat, x_tilde: &CMat, space: &ScalarProductSpace) -> (f64, f64) {
    let d1 = frob(&(space.st(x) * space.h() * x)) / frob(x).powi(2);
    let d2 = frob(&(space.st(x_tilde) * space.h() * x_tilde)) / frob(x_tilde).powi(2);
    let off = space.st(x) * space.h() * x_tilde;
    (d1.max(d2), crate::classical::condition_1norm(&off))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrangement {
    Complex,
    RealLie,
    RealJordan,
}

/// Ordered block aggregation `(X_c, Lambda_c, Lambda_a)`.
#[derive(Clone, Debug)]
pub struct ReassignmentAssembly {
    pub x_c: CMat,
    pub lambda_c: CMat,
    pub lambda_a: CMat,
    pub block_sizes: Vec<usize>,
    pub arrangement: Arrangement,
    /// Permutation `R` with `conj(X_c) = X_c R` for the real arrangements.
    pub conjugation: Option<CMat>,
}

impl ReassignmentAssembly {
    /// Direct construction from explicit blocks, validated for shape.
    pub fn from_parts(x_c: CMat, lambda_c: CMat, lambda_a: CMat, arrangement: Arrangement) -> Result<Self> {
        let p = x_c.ncols();
        if lambda_c.shape() != (p, p) || lambda_a.shape() != (p, p) {
            return Err(Error::Dimension(format!("Lambda_c and Lambda_a must be {p}x{p}")));
        }
        let conjugation = match arrangement {
            Arrangement::Complex => None,
            _ => Some(conjugation_permutation(&x_c)?),
        };
        Ok(ReassignmentAssembly { x_c, lambda_c, lambda_a, block_sizes: vec![1; p], arrangement, conjugation })
    }

    pub fn delta_lambda(&self) -> CMat {
        &self.lambda_a - &self.lambda_c
    }

    pub fn is_real(&self) -> bool {
        self.arrangement != Arrangement::Complex
    }
}

/// Finds the permutation `R` with `conj(X) = X R` column by column.
fn conjugation_permutation(x: &CMat) -> Result<CMat> {
    let p = x.ncols();
    let mut r = CMat::zeros(p, p);
    let scale = frob(x).max(1.0);
    for j in 0..p {
        let target = x.column(j).map(|z| z.conj());
        let hit = (0..p).find(|&k| (x.column(k) - &target).norm() <= 1e-12 * scale);
        match hit {
            Some(k) => r[(k, j)] = ONE,
            None => {
                return Err(Error::precondition(
                    "conjugate-closed X_c",
                    format!("conjugate of column {j} is not a column of X_c"),
                ))
            }
        }
    }
    Ok(r)
}

struct Block {
    chains: Vec<CMat>,
    current: C64,
    target: C64,
}

fn build(blocks: Vec<Block>, arrangement: Arrangement, conjugation: Option<CMat>) -> ReassignmentAssembly {
    let mut cols: Vec<&CMat> = Vec::new();
    let mut lc = Vec::new();
    let mut la = Vec::new();
    let mut sizes = Vec::new();
    for b in &blocks {
        for ch in &b.chains {
            cols.push(ch);
            let k = ch.ncols();
            lc.push(jordan_matrix(b.current, &[k]));
            la.push(jordan_matrix(b.target, &[k]));
            sizes.push(k);
        }
    }
    ReassignmentAssembly {
        x_c: hcat(&cols),
        lambda_c: block_diag(&lc),
        lambda_a: block_diag(&la),
        block_sizes: sizes,
        arrangement,
        conjugation,
    }
}

fn check_spec(a: &CMat, spec: &ReassignmentSpec, space: &ScalarProductSpace, class: StructureClass, tol: &ToleranceProfile) -> Result<()> {
    space.check_dim(a, "A")?;
    let v = validate_pairing_closure(spec, space, class, tol);
    if !v.is_empty() {
        let msg: Vec<String> = v.iter().map(|v| format!("group {}: {}", v.group, v.reason)).collect();
        return Err(Error::precondition("pairing closure", msg.join("; ")));
    }
    for g in &spec.groups {
        for ch in &g.chains {
            if ch.nrows() != a.nrows() {
                return Err(Error::Dimension("chain has the wrong number of rows".into()));
            }
            let r = chain_residual(a, g.current, ch);
            if r > tol.eigpair_tol {
                return Err(Error::precondition(
                    "Jordan pair of A",
                    format!("chain for {} has relative residual {r:.3e}", g.current),
                ));
            }
        }
    }
    Ok(())
}

fn finish_rank(asm: ReassignmentAssembly, tol: &ToleranceProfile) -> Result<ReassignmentAssembly> {
    full_column_pinv(&asm.x_c, tol.rank_tol, "X_c")?;
    Ok(asm)
}

/// Complex-field arrangement: couples `(lambda, partner)` first, self-paired
/// eigenvalues last.
pub fn assemble_complex(
    a: &CMat,
    spec: &ReassignmentSpec,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<ReassignmentAssembly> {
    if space.field() != Field::Complex {
        return Err(Error::Input("assemble_complex needs a complex-field space".into()));
    }
    check_spec(a, spec, space, class, tol)?;
    let snap = tol.snap_tol * spec_scale(spec);
    let partner = |z: C64| pairing_partner(z, class, space.star());
    let mut used = vec![false; spec.groups.len()];
    let mut couples = Vec::new();
    let mut singles = Vec::new();
    for (i, g) in spec.groups.iter().enumerate() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let blk = Block { chains: g.chains.clone(), current: g.current, target: g.target };
        if (partner(g.current) - g.current).norm() <= snap {
            singles.push(blk);
        } else {
            let j = spec
                .groups
                .iter()
                .position(|h| (h.current - partner(g.current)).norm() <= snap)
                .expect("closure validated");
            used[j] = true;
            let h = &spec.groups[j];
            couples.push(blk);
            couples.push(Block { chains: h.chains.clone(), current: h.current, target: h.target });
        }
    }
    couples.extend(singles);
    finish_rank(build(couples, Arrangement::Complex, None), tol)
}

fn realified(a: &CMat, g: &ReassignmentGroup, tol: &ToleranceProfile) -> Result<Vec<CMat>> {
    g.chains.iter().map(|ch| realify_chain(a, g.current.re, ch, tol.eigpair_tol)).collect()
}

fn conj_block(b: &Block) -> Block {
    Block { chains: b.chains.iter().map(conj).collect(), current: b.current.conj(), target: b.target.conj() }
}

/// `[[0, I], [I, 0]]` swapping two halves of `k` columns each.
fn swap(k: usize) -> CMat {
    CMat::from_fn(2 * k, 2 * k, |i, j| if (i + k == j) || (j + k == i) { ONE } else { ZERO })
}

fn real_field_checks(a: &CMat, space: &ScalarProductSpace, tol: &ToleranceProfile) -> Result<()> {
    if space.field() != Field::Real {
        return Err(Error::Input("real arrangements need a real-field space".into()));
    }
    if imag_norm(a) > tol.structure_tol * frob(a).max(1.0) {
        return Err(Error::precondition("real A", "A has a nonzero imaginary part"));
    }
    Ok(())
}

fn cols(b: &Block) -> usize {
    b.chains.iter().map(|c| c.ncols()).sum()
}

/// Real Lie arrangement: quadruples `{l, conj l, -l, -conj l}`, then imaginary
/// pairs `{l, conj l}`, then real pairs `{l, -l}`.
pub fn assemble_real_l(
    a: &CMat,
    spec: &ReassignmentSpec,
    space: &ScalarProductSpace,
    tol: &ToleranceProfile,
) -> Result<ReassignmentAssembly> {
    let class = StructureClass::Lie;
    real_field_checks(a, space, tol)?;
    check_spec(a, spec, space, class, tol)?;
    let snap = tol.snap_tol * spec_scale(spec);
    let find = |z: C64| spec.groups.iter().find(|g| (g.current - z).norm() <= snap).expect("closure validated");
    let (mut quads, mut imag, mut reals) = (Vec::new(), Vec::new(), Vec::new());
    let (mut rq, mut ri, mut rr) = (Vec::new(), Vec::new(), Vec::new());
    for g in &spec.groups {
        let l = g.current;
        match real_kind(l, class, snap) {
            "generic complex" if l.re > 0.0 && l.im > 0.0 => {
                let hat = Block { chains: g.chains.clone(), current: l, target: g.target };
                let m = find(-l);
                let tilde = Block { chains: m.chains.clone(), current: -l, target: -g.target };
                let (hc, tc) = (conj_block(&hat), conj_block(&tilde));
                let s = cols(&hat);
                rq.push(block_diag(&[swap(s), swap(s)]));
                quads.extend([hat, hc, tilde, tc]);
            }
            "imaginary" if l.im > 0.0 => {
                let hat = Block { chains: g.chains.clone(), current: c(0.0, l.im), target: c(0.0, g.target.im) };
                ri.push(swap(cols(&hat)));
                let hc = conj_block(&hat);
                imag.extend([hat, hc]);
            }
            "real" if l.re > 0.0 => {
                let hat = Block { chains: realified(a, g, tol)?, current: c(l.re, 0.0), target: c(g.target.re, 0.0) };
                let m = find(-l);
                let mg = ReassignmentGroup { current: c(-l.re, 0.0), target: c(-g.target.re, 0.0), chains: m.chains.clone() };
                let tilde = Block { chains: realified(a, &mg, tol)?, current: mg.current, target: mg.target };
                rr.push(identity(cols(&hat) + cols(&tilde)));
                reals.extend([hat, tilde]);
            }
            _ => {}
        }
    }
    quads.extend(imag);
    quads.extend(reals);
    rq.extend(ri);
    rq.extend(rr);
    let r = block_diag(&rq);
    let asm = build(quads, Arrangement::RealLie, Some(r));
    check_conjugation(&asm)?;
    finish_rank(asm, tol)
}

/// Real Jordan arrangement: conjugate couples `{l, conj l}`, then real eigenvalues.
pub fn assemble_real_j(
    a: &CMat,
    spec: &ReassignmentSpec,
    space: &ScalarProductSpace,
    tol: &ToleranceProfile,
) -> Result<ReassignmentAssembly> {
    let class = StructureClass::Jordan;
    real_field_checks(a, space, tol)?;
    check_spec(a, spec, space, class, tol)?;
    let snap = tol.snap_tol * spec_scale(spec);
    let (mut couples, mut reals) = (Vec::new(), Vec::new());
    let (mut rc, mut rr) = (Vec::new(), Vec::new());
    for g in &spec.groups {
        let l = g.current;
        if l.im.abs() > snap {
            if l.im > 0.0 {
                let hat = Block { chains: g.chains.clone(), current: l, target: g.target };
                rc.push(swap(cols(&hat)));
                let hc = conj_block(&hat);
                couples.extend([hat, hc]);
            }
        } else {
            let blk = Block { chains: realified(a, g, tol)?, current: c(l.re, 0.0), target: c(g.target.re, 0.0) };
            rr.push(identity(cols(&blk)));
            reals.push(blk);
        }
    }
    couples.extend(reals);
    rc.extend(rr);
    let asm = build(couples, Arrangement::RealJordan, Some(block_diag(&rc)));
    check_conjugation(&asm)?;
    finish_rank(asm, tol)
}

fn check_conjugation(asm: &ReassignmentAssembly) -> Result<()> {
    let r = asm.conjugation.as_ref().expect("real arrangement");
    let dev = frob(&(conj(&asm.x_c) - &asm.x_c * r));
    if dev > 1e-12 * frob(&asm.x_c).max(1.0) {
        return Err(Error::precondition("conjugate-closed X_c", format!("||conj(X_c) - X_c R||_F = {dev:.3e}")));
    }
    Ok(())
}

