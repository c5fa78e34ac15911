#![allow(dead_code)]

use specpreserve::matrix::{c, diag, from_complex, from_real};
use specpreserve::{CMat, C64};

pub fn z(re: f64, im: f64) -> C64 {
    c(re, im)
}

pub fn r(re: f64) -> C64 {
    c(re, 0.0)
}

/// Skew-adjoint 4x4 case with a Hermitian `H`.
pub struct LieHermitian {
    pub h: CMat,
    pub a: CMat,
    pub lambda_c: Vec<C64>,
    pub x_c: CMat,
    pub lambda_a: Vec<C64>,
    pub z: CMat,
    pub delta: CMat,
}

pub fn lie_hermitian() -> LieHermitian {
    let o = r(0.0);
    let h = from_complex(4, 4, &[o, o, o, r(1.0), o, o, z(0.0, 1.0), o, o, z(0.0, -1.0), o, o, r(1.0), o, o, o]);
    let a = from_complex(
        4,
        4,
        &[
            z(1.38328, 2.23663), z(-1.87526, 1.09675), z(0.28969, -1.61767), z(0.0, -0.38630),
            z(-0.30572, -0.81666), z(1.95327, -0.56098), r(0.70575), z(1.61767, -0.28969),
            z(1.70871, 0.60225), r(-3.36711), z(-1.95327, -0.56098), z(1.09675, -1.87526),
            z(0.0, -0.05281), z(0.60225, 1.70871), z(0.81666, 0.30572), z(-1.38328, 2.23663),
        ],
    );
    let x_c = from_complex(
        4,
        3,
        &[
            r(0.73457), z(-0.02152, 0.24956), r(0.71237),
            z(-0.27981, -0.31416), z(0.02238, -0.04538), z(0.06287, 0.47116),
            z(0.48270, 0.00893), r(0.81361), z(-0.05350, -0.17376),
            z(0.20304, -0.09549), z(-0.51181, 0.10382), z(-0.46244, -0.14026),
        ],
    );
    let zm = from_complex(
        4,
        4,
        &[
            z(0.0, -1.67851), z(0.13730, 1.92129), z(1.06091, 0.54389), z(-1.18529, -1.28875),
            z(-0.13730, 1.92129), z(0.0, 1.00253), z(-1.43471, 0.93643), z(0.21830, -1.51800),
            z(-1.06091, 0.54389), z(1.43471, 0.93643), z(0.0, 1.05381), z(-0.34779, -1.04181),
            z(1.18529, -1.28875), z(-0.21830, -1.51800), z(0.34779, -1.04181), z(0.0, -0.48090),
        ],
    );
    let delta = from_complex(
        4,
        4,
        &[
            z(-0.13762, -1.22005), z(-0.65838, 0.51555), z(-0.12923, 0.84764), z(0.0, 1.62647),
            z(0.72270, -0.48518), z(0.10142, -0.64947), r(-0.63261), z(-0.84764, 0.12923),
            z(0.02135, 0.28537), r(-0.72900), z(-0.10142, -0.64947), z(0.51555, -0.65838),
            z(0.0, 0.85994), z(0.28537, 0.02135), z(0.48518, -0.72270), z(0.13762, -1.22005),
        ],
    );
    LieHermitian {
        h,
        a,
        lambda_c: vec![z(2.72646, 1.45462), z(-2.72646, 1.45462), z(0.0, 1.39475)],
        x_c,
        lambda_a: vec![z(3.17634, 1.32477), z(-3.17634, 1.32477), z(0.0, -1.30322)],
        z: zm,
        delta,
    }
}

/// Real self-adjoint 5x5 case with a symmetric indefinite `H`.
pub struct JordanReal {
    pub h: CMat,
    pub a: CMat,
    pub lambda_c: Vec<C64>,
    pub x_c: CMat,
    pub lambda_a: Vec<C64>,
    pub delta: CMat,
    pub lambda_f: Vec<C64>,
    pub x_f: CMat,
}

pub fn jordan_real() -> JordanReal {
    let h = from_real(
        5,
        5,
        &[
            0.90770, 0.0, 0.0, 0.0, -0.41963,
            0.0, 0.99700, 0.0, 0.07742, 0.0,
            0.0, 0.0, -1.0, 0.0, 0.0,
            0.0, 0.07742, 0.0, -0.99700, 0.0,
            -0.41963, 0.0, 0.0, 0.0, -0.90770,
        ],
    );
    let a = from_real(
        5,
        5,
        &[
            0.865624, -1.723920, -0.349127, 1.693308, 0.330444,
            -1.766399, 2.575284, 0.927433, 0.347141, -0.037427,
            -0.779092, -0.886132, -4.893758, -0.567820, -2.517258,
            -1.118777, -0.275415, -0.497511, 1.651619, 1.921189,
            -1.458421, 0.674209, -2.611835, 1.330580, -1.574315,
        ],
    );
    let x_c = from_complex(
        5,
        3,
        &[
            z(-0.12653, -0.25223), z(-0.12653, 0.25223), r(0.52841),
            r(0.62285), r(0.62285), r(0.45037),
            z(-0.20533, 0.10979), z(-0.20533, -0.10979), r(-0.46451),
            z(0.47522, -0.30357), z(0.47522, 0.30357), r(-0.21212),
            z(0.37734, -0.13355), z(0.37734, 0.13355), r(0.50714),
        ],
    );
    let delta = from_real(
        5,
        5,
        &[
            -0.647698, -1.627577, -1.550473, -1.527484, 2.142323,
            -0.147615, -4.049645, -2.545965, 1.524353, 3.829506,
            0.432213, 2.545140, 1.893505, 0.109324, -2.759969,
            1.566449, -1.994170, -0.088048, 2.000580, 0.059502,
            -0.268251, -3.458913, -2.323848, 0.444879, 3.406128,
        ],
    );
    let x_f = from_real(5, 2, &[0.01522, -0.64955, -0.08140, -0.55276, 0.85330, 0.39494, -0.07067, -0.01486, 0.50993, -0.34108]);
    JordanReal {
        h,
        a,
        lambda_c: vec![z(2.87055, 0.71763), z(2.87055, -0.71763), r(-0.65938)],
        x_c,
        lambda_a: vec![z(3.17331, -1.23542), z(3.17331, 1.23542), r(1.33797)],
        delta,
        lambda_f: vec![r(-6.28040), r(-0.17686)],
        x_f,
    }
}

/// Symmetric 3x3 case with `H = I`.
pub struct Symmetric3 {
    pub a: CMat,
    pub lambda_c: Vec<C64>,
    pub x_c: CMat,
    pub lambda_a: Vec<C64>,
    pub delta: CMat,
}

pub fn symmetric3() -> Symmetric3 {
    Symmetric3 {
        a: from_real(3, 3, &[-0.69970, -1.43911, 0.76575, -1.43911, 1.46812, 2.08426, 0.76575, 2.08426, 2.10423]),
        lambda_c: vec![r(-2.1246), r(1.0711)],
        x_c: from_real(3, 2, &[-0.74904, 0.65664, -0.53038, -0.51457, 0.39704, 0.55141]),
        lambda_a: vec![r(2.1457), r(1.3342)],
        delta: from_real(3, 3, &[2.50934, 1.60757, -1.17472, 1.60757, 1.27089, -0.97390, -1.17472, -0.97390, 0.75318]),
    }
}

pub fn d(v: &[C64]) -> CMat {
    diag(v)
}
pub mod plans;

use specpreserve::diagnostics::{spectrum_multiset_compare, Instance};
use specpreserve::eigen::{cluster_means, eigenvalues, spectral_scale};
use specpreserve::reassign::{assemble, reassign_no_spillover};
use specpreserve::spectral::{extract_jordan_pairs, ReassignmentGroup, ReassignmentSpec};
use specpreserve::ToleranceProfile;

pub struct NoSpilloverOutcome {
    pub spectrum_distance: f64,
    pub chains_preserved: bool,
    pub rank: usize,
    pub expected_rank: usize,
    pub imag_ratio: f64,
}

/// Spec built from the ground-truth pairs of a generated instance.
pub fn spec_from_truth(inst: &Instance, moves: &[(C64, C64)]) -> ReassignmentSpec {
    ReassignmentSpec {
        groups: moves
            .iter()
            .map(|&(cur, tgt)| ReassignmentGroup {
                current: cur,
                target: tgt,
                chains: inst.pairs.iter().filter(|p| (p.lambda - cur).norm() < 1e-9).map(|p| p.chain.clone()).collect(),
            })
            .collect(),
    }
}

/// Sorted chain lengths per eigenvalue, eigenvalues matched within `radius`.
pub fn structure_of(pairs: &[(C64, usize)], radius: f64) -> Vec<(C64, Vec<usize>)> {
    let mut out: Vec<(C64, Vec<usize>)> = Vec::new();
    for &(l, k) in pairs {
        match out.iter_mut().find(|(m, _)| (m - l).norm() <= radius) {
            Some((_, v)) => v.push(k),
            None => out.push((l, vec![k])),
        }
    }
    for (_, v) in out.iter_mut() {
        v.sort_unstable();
    }
    out
}

pub fn same_structure(a: &[(C64, Vec<usize>)], b: &[(C64, Vec<usize>)], radius: f64) -> bool {
    a.len() == b.len() && a.iter().all(|(l, v)| b.iter().any(|(m, w)| (l - m).norm() <= radius && v == w))
}

pub fn run_no_spillover(plan: &plans::Plan, inst: &Instance) -> Result<NoSpilloverOutcome, String> {
    let tol = ToleranceProfile::default();
    let spec = spec_from_truth(inst, &plan.moves);
    let class = plan.recipe.class;
    let asm = assemble(&inst.a, &spec, &inst.space, class, &tol).map_err(|e| format!("assemble: {e}"))?;
    let upd = reassign_no_spillover(&inst.a, &asm, &inst.space, class, &tol).map_err(|e| format!("reassign: {e}"))?;
    let b = &inst.a + &upd.delta;

    let planned: Vec<(C64, usize)> = inst
        .pairs
        .iter()
        .map(|p| {
            let l = plan.moves.iter().find(|(c0, _)| (c0 - p.lambda).norm() < 1e-9).map(|m| m.1).unwrap_or(p.lambda);
            (l, p.len())
        })
        .collect();
    let want: Vec<C64> = planned.iter().flat_map(|&(l, k)| std::iter::repeat_n(l, k)).collect();
    let got = eigenvalues(&b).map_err(|e| e.to_string())?;
    let got = cluster_means(&got, tol.cluster_tol * spectral_scale(&got));
    let cmp = spectrum_multiset_compare(&want, &got).map_err(|e| e.to_string())?;

    let want_s = structure_of(&planned, 1e-9);
    let chains_preserved = match extract_jordan_pairs(&b, &tol) {
        Ok(extracted) => {
            let got_s = structure_of(&extracted.iter().map(|p| (p.lambda, p.len())).collect::<Vec<_>>(), 1e-3);
            same_structure(&want_s, &got_s, 1e-3)
        }
        Err(e) => {
            eprintln!("extract: {e}");
            false
        }
    };
    let d = asm.delta_lambda();
    Ok(NoSpilloverOutcome {
        spectrum_distance: cmp.max_distance,
        chains_preserved,
        rank: upd.rank,
        expected_rank: specpreserve::algebra::numerical_rank(&d, 1e-10),
        imag_ratio: upd.imag_norm / specpreserve::matrix::frob(&upd.delta),
    })
}
