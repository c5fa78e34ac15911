//! Independent checks of reassignment results and a generator of structured
//! test instances with known Jordan structure.

use nalgebra::linalg::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{numerical_rank, random_matrix, skew_j, structure_residual, Field, ScalarProductSpace, Star, StructureClass, ToleranceProfile};
use crate::classical::{condition_1norm, InvariantPair};
use crate::eigen::{cluster_means, eigenvalues, spectral_scale};
use crate::error::{Error, Result};
use crate::io::MatrixData;
use crate::matrix::{block_diag, c, conj, diagonal, flip, frob, hcat, identity, imag_norm, jordan_matrix, real_part, CMat, C64, I, ONE, ZERO};
use crate::spectral::{extract_jordan_pairs, oracle_nmax, pairing_partner, JordanPair, ReassignmentAssembly};

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumComparison {
    /// Bottleneck distance of the optimal matching.
    pub max_distance: f64,
    /// `matching[i]` is the index in the second list matched to entry `i`.
    pub matching: Vec<usize>,
}

/// Matching of two multisets minimising the largest distance, found by a
/// threshold search over the sorted pairwise distances with augmenting paths.
pub fn spectrum_multiset_compare(a: &[C64], b: &[C64]) -> Result<SpectrumComparison> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::Dimension(format!("spectra of sizes {} and {}", n, b.len())));
    }
    if n == 0 {
        return Ok(SpectrumComparison { max_distance: 0.0, matching: Vec::new() });
    }
    let dist: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let mut levels: Vec<f64> = dist.iter().flatten().copied().collect();
    levels.sort_by(|x, y| x.partial_cmp(y).unwrap());
    levels.dedup();
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    let mut best = perfect_matching(&dist, levels[hi]).expect("complete graph has a perfect matching");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching(&dist, levels[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let max_distance = (0..n).map(|i| dist[i][best[i]]).fold(0.0, f64::max);
    Ok(SpectrumComparison { max_distance, matching: best })
}

fn perfect_matching(dist: &[Vec<f64>], limit: f64) -> Option<Vec<usize>> {
    let n = dist.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, dist: &[Vec<f64>], limit: f64, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..dist.len() {
            if dist[i][j] <= limit && !seen[j] {
                seen[j] = true;
                if owner[j].is_none() || augment(owner[j].unwrap(), dist, limit, seen, owner) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, dist, limit, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut m = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        m[o.unwrap()] = j;
    }
    Some(m)
}

/// `sigma(A)` with the eigenvalues of `Lambda_c` replaced by those of
/// `Lambda_a`, each removed value being the closest remaining one.
pub fn expected_spectrum(a: &CMat, asm: &ReassignmentAssembly, tol: &ToleranceProfile) -> Result<Vec<C64>> {
    let ev = eigenvalues(a)?;
    let mut ev = cluster_means(&ev, tol.cluster_tol * spectral_scale(&ev));
    for (lc, la) in diagonal(&asm.lambda_c).into_iter().zip(diagonal(&asm.lambda_a)) {
        let (k, _) = ev
            .iter()
            .enumerate()
            .map(|(k, z)| (k, (z - lc).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .ok_or_else(|| Error::Dimension("Lambda_c larger than A".into()))?;
        ev[k] = la;
    }
    Ok(ev)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumVerdict {
    pub max_distance: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationReport {
    pub delta_a: MatrixData,
    /// `||(A + Delta A) X_c - X_c Lambda_a||_F`.
    pub reassigned_residual: f64,
    /// `||(A + Delta A) X_f - X_f Lambda_f||_F` when fixed pairs are known.
    pub fixed_residual: Option<f64>,
    /// `||Delta A^[*] - epsilon2 Delta A||_F`.
    pub structure_residual: f64,
    /// Structure residual of `A + Delta A`.
    pub updated_structure_residual: f64,
    pub delta_rank: usize,
    pub delta_norm: f64,
    pub gram_condition_estimate: f64,
    pub spectrum_verdict: Option<SpectrumVerdict>,
    pub imag_norm: f64,
    pub real: bool,
}

/// Checks a perturbation against the assembly. Without explicit fixed pairs
/// they are recovered from `A` when its dimension is within the oracle bound.
pub fn verify_reassignment(
    a: &CMat,
    delta: &CMat,
    asm: &ReassignmentAssembly,
    fixed: Option<&InvariantPair>,
    space: &ScalarProductSpace,
    class: StructureClass,
    tol: &ToleranceProfile,
) -> Result<PerturbationReport> {
    space.check_dim(a, "A")?;
    space.check_dim(delta, "Delta A")?;
    let b = a + delta;
    let x = &asm.x_c;
    let reassigned_residual = frob(&(&b * x - x * &asm.lambda_a));
    let n = a.nrows();
    let recovered;
    let fixed = match fixed {
        Some(f) => Some(f),
        None if n <= oracle_nmax() => {
            recovered = recover_fixed(a, asm, tol);
            recovered.as_ref()
        }
        None => None,
    };
    let fixed_residual = fixed.map(|f| frob(&(&b * &f.x - &f.x * &f.lambda)));
    let gram = space.st(x) * space.h() * x;
    let spectrum_verdict = if n <= oracle_nmax() {
        let want = expected_spectrum(a, asm, tol)?;
        let got = eigenvalues(&b)?;
        let scale = spectral_scale(&got).max(spectral_scale(&want));
        let got = cluster_means(&got, tol.cluster_tol * scale);
        let cmp = spectrum_multiset_compare(&want, &got)?;
        let tolerance = tol.residual_tol.max(1e-6) * scale;
        Some(SpectrumVerdict { max_distance: cmp.max_distance, tolerance, passed: cmp.max_distance <= tolerance })
    } else {
        None
    };
    let field = space.field();
    Ok(PerturbationReport {
        delta_a: MatrixData::with_field(delta, if field == Field::Real { Field::Real } else { Field::Complex }),
        reassigned_residual,
        fixed_residual,
        structure_residual: structure_residual(delta, space, class)?,
        updated_structure_residual: structure_residual(&b, space, class)?,
        delta_rank: numerical_rank(delta, tol.rank_tol),
        delta_norm: frob(delta),
        gram_condition_estimate: condition_1norm(&gram),
        spectrum_verdict,
        imag_norm: imag_norm(delta),
        real: imag_norm(delta) <= 1e-10 * frob(delta).max(f64::MIN_POSITIVE),
    })
}

fn recover_fixed(a: &CMat, asm: &ReassignmentAssembly, tol: &ToleranceProfile) -> Option<InvariantPair> {
    let pairs = extract_jordan_pairs(a, tol).ok()?;
    let moved = diagonal(&asm.lambda_c);
    let ev: Vec<C64> = pairs.iter().map(|p| p.lambda).collect();
    let radius = tol.cluster_tol * spectral_scale(&ev);
    let keep: Vec<&JordanPair> = pairs.iter().filter(|p| moved.iter().all(|m| (m - p.lambda).norm() > radius)).collect();
    if keep.is_empty() || keep.iter().map(|p| p.len()).sum::<usize>() + moved.len() != a.nrows() {
        return None;
    }
    let cols: Vec<&CMat> = keep.iter().map(|p| &p.chain).collect();
    let lam: Vec<CMat> = keep.iter().map(|p| jordan_matrix(p.lambda, &[p.len()])).collect();
    Some(InvariantPair { x: hcat(&cols), lambda: block_diag(&lam) })
}

/// Gram matrices available to the generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenSpace {
    Identity,
    /// The exchange matrix.
    Flip,
    /// `diag(I_p, -I_q)` with the inertia the plan needs.
    Signature,
    SkewJ,
    /// Random unitary congruence of the exchange matrix (`epsilon1 = 1`) or of
    /// `SkewJ` (`epsilon1 = -1`).
    Random { epsilon1: i8 },
}

/// One eigenvalue of the plan with its Jordan block sizes. The eigenvalues
/// forced by pairing (and conjugation over the real field) are added
/// automatically.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanEntry {
    pub lambda: [f64; 2],
    pub sizes: Vec<usize>,
    /// Sign of the Gram block of a self-paired eigenvalue; chosen to match the
    /// inertia of `H` when absent.
    #[serde(default)]
    pub sign: Option<i8>,
}

impl PlanEntry {
    pub fn new(lambda: C64, sizes: &[usize]) -> Self {
        PlanEntry { lambda: [lambda.re, lambda.im], sizes: sizes.to_vec(), sign: None }
    }

    pub fn eigenvalue(&self) -> C64 {
        c(self.lambda[0], self.lambda[1])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceRecipe {
    pub space: GenSpace,
    pub star: Star,
    pub field: Field,
    pub class: StructureClass,
    pub plan: Vec<PlanEntry>,
    pub seed: u64,
    /// Frobenius norm of the Lie-algebra element fed to the Cayley transform.
    #[serde(default = "default_mixing")]
    pub mixing: f64,
    /// Largest accepted condition number of the final similarity.
    #[serde(default = "default_max_condition")]
    pub max_condition: f64,
}

fn default_mixing() -> f64 {
    0.8
}

fn default_max_condition() -> f64 {
    1e4
}

/// A generated instance with its ground-truth Jordan pairs.
#[derive(Clone, Debug)]
pub struct Instance {
    pub a: CMat,
    pub h: CMat,
    pub space: ScalarProductSpace,
    pub pairs: Vec<JordanPair>,
    /// Condition number of the similarity taking the canonical form to `A`.
    pub condition: f64,
}

impl Instance {
    /// Eigenvalues with algebraic multiplicity.
    pub fn spectrum(&self) -> Vec<C64> {
        self.pairs.iter().flat_map(|p| std::iter::repeat_n(p.lambda, p.len())).collect()
    }
}

/// Canonical block: `B^star G = epsilon2 G B` with the given chains.
struct Unit {
    b: CMat,
    g: CMat,
    chains: Vec<(C64, CMat)>,
    flexible: bool,
}

fn unit_vec(n: usize, i: usize, s: C64) -> CMat {
    let mut v = CMat::zeros(n, 1);
    v[(i, 0)] = s;
    v
}

fn pair_gram(k: usize, eps1: f64) -> CMat {
    CMat::from_fn(2 * k, 2 * k, |i, j| {
        if j == i + k {
            ONE
        } else if i == j + k {
            c(eps1, 0.0)
        } else {
            ZERO
        }
    })
}

/// `diag(J, e2 J^star)` on `[[0, I], [e1 I, 0]]`.
fn pair_unit(lambda: C64, sizes: &[usize], star: Star, e1: f64, e2: f64) -> Unit {
    let j = jordan_matrix(lambda, sizes);
    let k = j.nrows();
    let b = block_diag(&[j.clone(), star.apply(&j) * c(e2, 0.0)]);
    let mu = star.apply_scalar(lambda) * e2;
    let mut chains = Vec::new();
    let mut off = 0;
    for &s in sizes {
        let ch = hcat(&(0..s).map(|q| unit_vec(2 * k, off + q, ONE)).collect::<Vec<_>>().iter().collect::<Vec<_>>());
        chains.push((lambda, ch));
        off += s;
    }
    off = 0;
    for &s in sizes {
        let cols: Vec<CMat> = (1..=s).map(|q| unit_vec(2 * k, k + off + s - q, c(e2.powi(q as i32 - 1), 0.0))).collect();
        chains.push((mu, hcat(&cols.iter().collect::<Vec<_>>())));
        off += s;
    }
    Unit { b, g: pair_gram(k, e1), chains, flexible: false }
}

/// Blocks `lambda I + coef N` on `g F`.
fn self_unit(lambda: C64, sizes: &[usize], coef: C64, g: C64) -> Unit {
    let k: usize = sizes.iter().sum();
    let mut blocks = Vec::new();
    let mut grams = Vec::new();
    let mut chains = Vec::new();
    let mut off = 0;
    for &s in sizes {
        let mut blk = jordan_matrix(lambda, &[s]);
        for q in 0..s.saturating_sub(1) {
            blk[(q, q + 1)] = coef;
        }
        blocks.push(blk);
        grams.push(flip(s) * g);
        let cols: Vec<CMat> = (0..s).map(|q| unit_vec(k, off + q, ONE / coef.powi(q as i32))).collect();
        chains.push((lambda, hcat(&cols.iter().collect::<Vec<_>>())));
        off += s;
    }
    let flexible = sizes.iter().any(|s| s % 2 == 1);
    Unit { b: block_diag(&blocks), g: block_diag(&grams), chains, flexible }
}

/// `diag(J, conj J)` on `[[0, F], [F, 0]]`.
fn conj_pair_unit(lambda: C64, sizes: &[usize]) -> Unit {
    let j = jordan_matrix(lambda, sizes);
    let k = j.nrows();
    let f = block_diag(&sizes.iter().map(|&s| flip(s)).collect::<Vec<_>>());
    let mut g = CMat::zeros(2 * k, 2 * k);
    g.view_mut((0, k), (k, k)).copy_from(&f);
    g.view_mut((k, 0), (k, k)).copy_from(&f);
    let mut chains = Vec::new();
    let mut off = 0;
    for &s in sizes {
        let a: Vec<CMat> = (0..s).map(|q| unit_vec(2 * k, off + q, ONE)).collect();
        let b: Vec<CMat> = (0..s).map(|q| unit_vec(2 * k, k + off + q, ONE)).collect();
        chains.push((lambda, hcat(&a.iter().collect::<Vec<_>>())));
        chains.push((lambda.conj(), hcat(&b.iter().collect::<Vec<_>>())));
        off += s;
    }
    Unit { b: block_diag(&[j.clone(), conj(&j)]), g, chains, flexible: false }
}

/// `diag(B, conj B)` on `diag(G, conj G)`.
fn conj_double(u: Unit) -> Unit {
    let k = u.b.nrows();
    let mut chains = Vec::new();
    for (l, ch) in &u.chains {
        let mut top = CMat::zeros(2 * k, ch.ncols());
        top.view_mut((0, 0), ch.shape()).copy_from(ch);
        chains.push((*l, top));
    }
    for (l, ch) in &u.chains {
        let mut bot = CMat::zeros(2 * k, ch.ncols());
        bot.view_mut((k, 0), ch.shape()).copy_from(&conj(ch));
        chains.push((l.conj(), bot));
    }
    Unit { b: block_diag(&[u.b.clone(), conj(&u.b)]), g: block_diag(&[u.g.clone(), conj(&u.g)]), chains, flexible: u.flexible }
}

/// Unitary change of basis turning `diag(B, conj B)` into a real matrix.
fn realify(u: Unit) -> Unit {
    let k = u.b.nrows() / 2;
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut w = CMat::zeros(2 * k, 2 * k);
    for q in 0..k {
        w[(q, q)] = s;
        w[(q, k + q)] = I * s;
        w[(k + q, q)] = s;
        w[(k + q, k + q)] = -I * s;
    }
    let wa = w.adjoint();
    Unit {
        b: real_part(&(&wa * &u.b * &w)),
        g: real_part(&(&wa * &u.g * &w)),
        chains: u.chains.into_iter().map(|(l, ch)| (l, &wa * ch)).collect(),
        flexible: u.flexible,
    }
}

fn is_real_value(z: C64, scale: f64) -> bool {
    z.im.abs() <= 1e-12 * scale
}

fn build_unit(entry: &PlanEntry, recipe: &InstanceRecipe, e1: f64, sign: f64) -> Result<Unit> {
    let l = entry.eigenvalue();
    let s = &entry.sizes;
    if s.is_empty() || s.contains(&0) {
        return Err(Error::Input("plan entry needs positive block sizes".into()));
    }
    let e2 = recipe.class.epsilon2();
    let scale = l.norm().max(1.0);
    let lie = recipe.class == StructureClass::Lie;
    let gsign = if e1 > 0.0 { c(sign, 0.0) } else { I * sign };
    let infeasible = |why: &str| Err(Error::precondition("feasible spectral plan", format!("{l}: {why}")));
    let unit = match (recipe.field, recipe.star) {
        (Field::Complex, Star::ConjTranspose) => {
            let self_paired = (pairing_partner(l, recipe.class, Star::ConjTranspose) - l).norm() <= 1e-12 * scale;
            if self_paired {
                self_unit(l, s, if lie { I } else { ONE }, gsign)
            } else {
                pair_unit(l, s, Star::ConjTranspose, e1, e2)
            }
        }
        (Field::Complex, Star::Transpose) => {
            if lie && l.norm() <= 1e-12 {
                return infeasible("zero eigenvalue is not supported for bilinear Lie algebras");
            }
            if !lie && e1 > 0.0 {
                self_unit(l, s, ONE, c(sign, 0.0))
            } else {
                pair_unit(l, s, Star::Transpose, e1, e2)
            }
        }
        (Field::Real, _) => {
            if lie && l.norm() <= 1e-12 {
                return infeasible("zero eigenvalue cannot be reassigned in the real Lie case");
            }
            if is_real_value(l, scale) {
                let l = c(l.re, 0.0);
                if !lie && e1 > 0.0 {
                    self_unit(l, s, ONE, c(sign, 0.0))
                } else {
                    pair_unit(l, s, Star::Transpose, e1, e2)
                }
            } else if !lie && e1 > 0.0 {
                realify(conj_pair_unit(l, s))
            } else if lie && l.re.abs() <= 1e-12 * scale {
                realify(conj_double(self_unit(c(0.0, l.im), s, I, gsign)))
            } else {
                realify(conj_double(pair_unit(l, s, Star::ConjTranspose, e1, e2)))
            }
        }
    };
    // every canonical block is checked against the defining relation
    let st = match recipe.field {
        Field::Real => Star::ConjTranspose,
        Field::Complex => recipe.star,
    };
    let r = frob(&(st.apply(&unit.b) * &unit.g - &unit.g * &unit.b * c(e2, 0.0)));
    let h = frob(&(st.apply(&unit.g) - &unit.g * c(e1, 0.0)));
    if r > 1e-12 * frob(&unit.b).max(1.0) || h > 1e-12 {
        return infeasible("no canonical block exists for this eigenvalue, class and form");
    }
    Ok(unit)
}

/// Hermitian form whose inertia is invariant under congruence, when there is one.
fn hermitian_part(g: &CMat, field: Field, star: Star, e1: f64) -> Option<CMat> {
    match (field, star, e1 > 0.0) {
        (Field::Real, _, true) => Some(g.clone()),
        (Field::Complex, Star::ConjTranspose, true) => Some(g.clone()),
        (Field::Complex, Star::ConjTranspose, false) => Some(g * (-I)),
        _ => None,
    }
}

fn inertia(m: &CMat) -> (usize, usize) {
    let e = SymmetricEigen::new(m.clone()).eigenvalues;
    let p = e.iter().filter(|&&x| x > 0.0).count();
    (p, e.len() - p)
}

/// Eigen-decomposition `M = V S V^*` with `S = diag(+1.., -1..)`.
fn signed_factor(m: &CMat, real: bool) -> (CMat, usize) {
    let n = m.nrows();
    let (vals, vecs): (Vec<f64>, CMat) = if real {
        let e = SymmetricEigen::new(m.map(|z| z.re));
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| c(x, 0.0)))
    } else {
        let e = SymmetricEigen::new(m.clone());
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
    let p = vals.iter().filter(|&&x| x > 0.0).count();
    let v = CMat::from_fn(n, n, |i, k| vecs[(i, idx[k])] * vals[idx[k]].abs().sqrt());
    (v, p)
}

/// Basis `B` with `B^T M B = [[0, I], [-I, 0]]` for a skew form.
fn symplectic_basis(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let omega = |x: &CMat, y: &CMat| (x.transpose() * m * y)[(0, 0)];
    let mut pool: Vec<CMat> = (0..n).map(|i| identity(n).columns(i, 1).into_owned()).collect();
    let (mut es, mut fs) = (Vec::new(), Vec::new());
    while !pool.is_empty() {
        let mut best = (0, 0, 0.0);
        for i in 0..pool.len() {
            for j in i + 1..pool.len() {
                let w = omega(&pool[i], &pool[j]).norm();
                if w > best.2 {
                    best = (i, j, w);
                }
            }
        }
        if best.2 < 1e-10 {
            return Err(Error::InvalidSpace("skew form is degenerate".into()));
        }
        let (i, j, _) = best;
        let e = pool[i].clone();
        let f = &pool[j] / omega(&pool[i], &pool[j]);
        pool = pool
            .into_iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j)
            .map(|(_, w)| {
                let a = omega(&f, &w);
                let b = omega(&e, &w);
                &w + &e * a - &f * b
            })
            .collect();
        es.push(e);
        fs.push(f);
    }
    let mut cols: Vec<&CMat> = es.iter().collect();
    cols.extend(fs.iter());
    Ok(hcat(&cols))
}

/// `T` with `T^star H T = G`.
fn congruence(h: &CMat, g: &CMat, field: Field, star: Star, e1: f64) -> Result<CMat> {
    let n = h.nrows();
    match (field, star, e1 > 0.0) {
        (Field::Complex, Star::Transpose, true) => {
            // both are real symmetric here, so a complex square root of the
            // signs gives H = V V^T
            let takagi = |m: &CMat| {
                let (v, p) = signed_factor(m, true);
                CMat::from_fn(n, n, |i, k| if k < p { v[(i, k)] } else { v[(i, k)] * I })
            };
            if imag_norm(h) > 0.0 || imag_norm(g) > 0.0 {
                return Err(Error::Input("complex symmetric congruence needs real Gram matrices".into()));
            }
            let vh = takagi(h);
            let vg = takagi(g);
            let vht = vh.transpose().try_inverse().ok_or(Error::Singular { what: "Takagi factor", condition: f64::INFINITY })?;
            Ok(vht * vg.transpose())
        }
        (_, Star::Transpose, false) | (Field::Real, _, false) => {
            let bh = symplectic_basis(h)?;
            let bg = symplectic_basis(g)?;
            let inv = bg.try_inverse().ok_or(Error::Singular { what: "symplectic basis", condition: f64::INFINITY })?;
            Ok(bh * inv)
        }
        _ => {
            let hh = hermitian_part(h, field, star, e1).expect("hermitian case");
            let gg = hermitian_part(g, field, star, e1).expect("hermitian case");
            let real = field == Field::Real;
            let (vh, ph) = signed_factor(&hh, real);
            let (vg, pg) = signed_factor(&gg, real);
            if ph != pg {
                return Err(Error::precondition(
                    "feasible spectral plan",
                    format!("plan needs {pg} positive directions but H has {ph}"),
                ));
            }
            let inv = vh.adjoint().try_inverse().ok_or(Error::Singular { what: "congruence factor", condition: f64::INFINITY })?;
            Ok(inv * vg.adjoint())
        }
    }
}

/// Structured matrix with the planned Jordan structure: canonical blocks,
/// a congruence onto the requested `H`, then a Cayley-transform automorphism.
pub fn generate_instance(recipe: &InstanceRecipe) -> Result<Instance> {
    let e1 = match recipe.space {
        GenSpace::SkewJ => -1.0,
        GenSpace::Random { epsilon1 } if epsilon1 < 0 => -1.0,
        _ => 1.0,
    };
    let form_star = if recipe.field == Field::Real { Star::ConjTranspose } else { recipe.star };
    let mut signs: Vec<f64> = recipe.plan.iter().map(|e| e.sign.map(|s| s as f64).unwrap_or(1.0)).collect();
    let mut units: Vec<Unit> = recipe
        .plan
        .iter()
        .zip(&signs)
        .map(|(e, &s)| build_unit(e, recipe, e1, s))
        .collect::<Result<_>>()?;
    let n: usize = units.iter().map(|u| u.b.nrows()).sum();
    if n == 0 {
        return Err(Error::Input("empty spectral plan".into()));
    }

    let h = match recipe.space {
        GenSpace::Identity => identity(n),
        GenSpace::Flip => flip(n),
        GenSpace::SkewJ => skew_j(n)?,
        GenSpace::Signature => {
            let g0 = block_diag(&units.iter().map(|u| u.g.clone()).collect::<Vec<_>>());
            // complex symmetric forms have no inertia, any split is congruent
            let p = match hermitian_part(&g0, recipe.field, form_star, e1) {
                Some(herm) => inertia(&herm).0,
                None => n.div_ceil(2),
            };
            CMat::from_fn(n, n, |i, j| if i != j { ZERO } else if i < p { ONE } else { -ONE })
        }
        GenSpace::Random { epsilon1 } => crate::algebra::SpacePreset::Random { epsilon1, seed: recipe.seed ^ 0x5eed }
            .gram(n, recipe.star, recipe.field)?,
    };

    // choose free signs so the inertia of the canonical form matches H
    if let Some(herm_h) = hermitian_part(&h, recipe.field, form_star, e1) {
        let (ph, _) = inertia(&herm_h);
        let unit_inertia = |u: &Unit| inertia(&hermitian_part(&u.g, recipe.field, form_star, e1).unwrap());
        let mut p: usize = units.iter().map(|u| unit_inertia(u).0).sum();
        for (k, e) in recipe.plan.iter().enumerate() {
            if p == ph {
                break;
            }
            if e.sign.is_some() || !units[k].flexible {
                continue;
            }
            let (pu, qu) = unit_inertia(&units[k]);
            let flipped = p + qu - pu;
            if flipped.abs_diff(ph) < p.abs_diff(ph) {
                signs[k] = -signs[k];
                units[k] = build_unit(e, recipe, e1, signs[k])?;
                p = flipped;
            }
        }
    }

    let b0 = block_diag(&units.iter().map(|u| u.b.clone()).collect::<Vec<_>>());
    let g0 = block_diag(&units.iter().map(|u| u.g.clone()).collect::<Vec<_>>());
    let t = congruence(&h, &g0, recipe.field, form_star, e1)?;
    let tinv = t.clone().try_inverse().ok_or(Error::Singular { what: "congruence", condition: f64::INFINITY })?;

    let space = ScalarProductSpace::new(h.clone(), recipe.star, recipe.field, Some(e1), &ToleranceProfile::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let mut mixing = recipe.mixing;
    for _ in 0..30 {
        // Cayley transform of a Lie-algebra element W = H^{-1} K, K^star = -e1 K
        let m = random_matrix(n, n, recipe.field, &mut rng);
        let k = (&m - space.st(&m) * c(e1, 0.0)) * c(0.5, 0.0);
        let mut w = space.solve_h(&k);
        let wn = frob(&w);
        if wn > 0.0 {
            w *= c(mixing / wn, 0.0);
        }
        let ipw = identity(n) + &w;
        let Some(ipw_inv) = ipw.try_inverse() else { continue };
        let q = (identity(n) - &w) * ipw_inv;
        let Some(qinv) = q.clone().try_inverse() else { continue };
        let sim = &qinv * &t;
        let cond = condition_1norm(&sim);
        if !cond.is_finite() || cond > recipe.max_condition {
            mixing *= 0.7;
            continue;
        }
        let mut a = &sim * &b0 * &tinv * &q;
        if recipe.field == Field::Real {
            a = real_part(&a);
        }
        let mut pairs = Vec::new();
        let mut off = 0;
        for u in &units {
            let k = u.b.nrows();
            for (l, ch) in &u.chains {
                let mut full = CMat::zeros(n, ch.ncols());
                full.view_mut((off, 0), (k, ch.ncols())).copy_from(ch);
                let mut x = &sim * full;
                let nrm = x.column(0).norm();
                x *= c(1.0 / nrm, 0.0);
                pairs.push(JordanPair::new(&a, *l, x));
            }
            off += k;
        }
        return Ok(Instance { a, h, space, pairs, condition: cond });
    }
    Err(Error::precondition("well-conditioned instance", "rejection sampling exhausted"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::is_member;

    #[test]
    fn bottleneck_prefers_small_maximum() {
        let a = [c(0.0, 0.0), c(1.0, 0.0)];
        let b = [c(1.1, 0.0), c(0.2, 0.0)];
        let m = spectrum_multiset_compare(&a, &b).unwrap();
        assert!((m.max_distance - 0.2).abs() < 1e-15);
        assert_eq!(m.matching, vec![1, 0]);
    }

    fn recipe(space: GenSpace, star: Star, field: Field, class: StructureClass, plan: Vec<PlanEntry>) -> InstanceRecipe {
        InstanceRecipe { space, star, field, class, plan, seed: 3, mixing: 0.8, max_condition: 1e4 }
    }

    fn check(r: &InstanceRecipe) -> Instance {
        let inst = generate_instance(r).unwrap();
        let tol = ToleranceProfile::default();
        assert!(is_member(&inst.a, &inst.space, r.class, &tol).unwrap(), "not structured");
        for p in &inst.pairs {
            assert!(p.residual < 1e-12, "chain residual {}", p.residual);
        }
        inst
    }

    #[test]
    fn sesquilinear_lie_with_imaginary_block() {
        let r = recipe(
            GenSpace::Random { epsilon1: 1 },
            Star::ConjTranspose,
            Field::Complex,
            StructureClass::Lie,
            vec![PlanEntry::new(c(1.0, 2.0), &[2]), PlanEntry::new(c(0.0, -1.5), &[3])],
        );
        let inst = check(&r);
        assert_eq!(inst.a.nrows(), 7);
    }

    #[test]
    fn real_lie_quadruple_on_skew_j() {
        let r = recipe(
            GenSpace::SkewJ,
            Star::Transpose,
            Field::Real,
            StructureClass::Lie,
            vec![PlanEntry::new(c(1.0, 0.5), &[1]), PlanEntry::new(c(2.0, 0.0), &[2]), PlanEntry::new(c(0.0, 3.0), &[1])],
        );
        let inst = check(&r);
        assert_eq!(imag_norm(&inst.a), 0.0);
        assert_eq!(inst.a.nrows(), 4 + 4 + 2);
    }

    #[test]
    fn real_jordan_signature() {
        let r = recipe(
            GenSpace::Signature,
            Star::Transpose,
            Field::Real,
            StructureClass::Jordan,
            vec![PlanEntry::new(c(1.0, 0.5), &[2]), PlanEntry::new(c(-2.0, 0.0), &[3])],
        );
        check(&r);
    }

    #[test]
    fn bilinear_jordan_identity() {
        let r = recipe(
            GenSpace::Identity,
            Star::Transpose,
            Field::Complex,
            StructureClass::Jordan,
            vec![PlanEntry::new(c(1.0, 0.5), &[3, 1]), PlanEntry::new(c(-2.0, 0.0), &[2])],
        );
        check(&r);
    }

    #[test]
    fn hermitian_identity_rejects_complex_eigenvalue() {
        let r = recipe(
            GenSpace::Identity,
            Star::ConjTranspose,
            Field::Complex,
            StructureClass::Jordan,
            vec![PlanEntry::new(c(1.0, 0.5), &[1])],
        );
        assert!(generate_instance(&r).unwrap_err().is_mathematical());
    }
}
