use rand::Rng;
use rand_chacha::ChaCha8Rng;

use specpreserve::diagnostics::{generate_instance, GenSpace, Instance, InstanceRecipe, PlanEntry};
use specpreserve::matrix::c;
use specpreserve::{Field, Star, StructureClass, C64};

#[derive(Clone, Copy, Debug)]
pub struct Combo {
    pub field: Field,
    pub star: Star,
    pub class: StructureClass,
    pub space: GenSpace,
}

impl Combo {
    pub fn label(&self) -> String {
        format!("{:?}/{:?}/{:?}/{:?}", self.field, self.star, self.class, self.space)
    }

    fn definite(&self) -> bool {
        self.space == GenSpace::Identity && !(self.field == Field::Complex && self.star == Star::Transpose)
    }
}

/// Every field/form/class combination with every generator space.
pub fn all_combos() -> Vec<Combo> {
    let spaces = [
        GenSpace::Identity,
        GenSpace::Flip,
        GenSpace::Signature,
        GenSpace::SkewJ,
        GenSpace::Random { epsilon1: 1 },
        GenSpace::Random { epsilon1: -1 },
    ];
    let mut out = Vec::new();
    for (field, star) in [(Field::Complex, Star::ConjTranspose), (Field::Complex, Star::Transpose), (Field::Real, Star::Transpose)] {
        for class in [StructureClass::Jordan, StructureClass::Lie] {
            for space in spaces {
                out.push(Combo { field, star, class, space });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    SelfReal,
    SelfImag,
    Generic,
    Real,
}

/// Eigenvalue kinds the combination supports.
pub fn kinds(combo: &Combo) -> Vec<Kind> {
    use Kind::*;
    let lie = combo.class == StructureClass::Lie;
    match (combo.field, combo.star, combo.definite()) {
        (Field::Complex, Star::ConjTranspose, true) | (Field::Real, _, true) => vec![if lie { SelfImag } else { SelfReal }],
        (Field::Complex, Star::ConjTranspose, false) => vec![if lie { SelfImag } else { SelfReal }, Generic],
        (Field::Complex, Star::Transpose, _) => vec![Generic],
        (Field::Real, _, false) => {
            if lie {
                vec![Real, SelfImag, Generic]
            } else {
                vec![Real, Generic]
            }
        }
    }
}

pub fn draw(kind: Kind, rng: &mut ChaCha8Rng) -> C64 {
    let mut x = || {
        let v: f64 = rng.random_range(0.3..3.0);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    };
    match kind {
        Kind::SelfReal | Kind::Real => c(x(), 0.0),
        Kind::SelfImag => c(0.0, x()),
        Kind::Generic => c(x(), x()),
    }
}

/// Images of `lambda` under the maps that generate its pairing orbit.
pub fn orbit_maps(combo: &Combo) -> Vec<fn(C64, f64) -> C64> {
    match (combo.field, combo.star) {
        (Field::Complex, Star::ConjTranspose) => vec![|z, _| z, |z, e| z.conj() * e],
        (Field::Complex, Star::Transpose) => vec![|z, _| z, |z, e| z * e],
        (Field::Real, _) => vec![|z, _| z, |z, _| z.conj(), |z, e| z * e, |z, e| z.conj() * e],
    }
}

pub fn orbit(combo: &Combo, z: C64) -> Vec<C64> {
    let e = combo.class.epsilon2();
    let mut out: Vec<C64> = Vec::new();
    for f in orbit_maps(combo) {
        let w = f(z, e);
        if out.iter().all(|v| (v - w).norm() > 1e-9) {
            out.push(w);
        }
    }
    out
}

fn separated(new: &[C64], existing: &[C64], gap: f64) -> bool {
    for (i, a) in new.iter().enumerate() {
        for b in new.iter().skip(i + 1) {
            if (a - b).norm() < gap {
                return false;
            }
        }
        if existing.iter().any(|b| (a - b).norm() < gap) {
            return false;
        }
    }
    true
}

pub struct Plan {
    pub recipe: InstanceRecipe,
    /// `(current, target)` for every eigenvalue in the reassigned orbit.
    pub moves: Vec<(C64, C64)>,
}

/// Random plan with eigenvalues at least `gap` apart and one orbit moved to a
/// new orbit of the same kind.
pub fn random_plan(combo: &Combo, rng: &mut ChaCha8Rng, nmax: usize, gap: f64, seed: u64) -> Plan {
    let ks = kinds(combo);
    let definite = combo.definite();
    loop {
        let entries = rng.random_range(1..=3);
        let mut plan = Vec::new();
        let mut used: Vec<C64> = Vec::new();
        let mut first_kind = None;
        for _ in 0..entries {
            let kind = ks[rng.random_range(0..ks.len())];
            let mut tries = 0;
            let lambda = loop {
                let z = draw(kind, rng);
                let orb = orbit(combo, z);
                if separated(&orb, &used, gap) {
                    used.extend(orb);
                    break Some(z);
                }
                tries += 1;
                if tries > 50 {
                    break None;
                }
            };
            let Some(lambda) = lambda else { continue };
            let sizes: Vec<usize> = if definite {
                vec![1; rng.random_range(1..=2)]
            } else {
                let chains = if rng.random_bool(0.3) { 2 } else { 1 };
                (0..chains).map(|_| *[1, 1, 2, 2, 3].get(rng.random_range(0..5)).unwrap()).collect()
            };
            first_kind.get_or_insert(kind);
            // one entry per chain so each self-paired block gets its own sign
            for k in sizes {
                plan.push(PlanEntry::new(lambda, &[k]));
            }
        }
        if plan.is_empty() {
            continue;
        }
        let kind = first_kind.unwrap();
        let target = loop {
            let z = draw(kind, rng);
            if separated(&orbit(combo, z), &used, gap) {
                break z;
            }
        };
        let src = plan[0].eigenvalue();
        let e = combo.class.epsilon2();
        let mut moves: Vec<(C64, C64)> = Vec::new();
        for f in orbit_maps(combo) {
            let (cur, tgt) = (f(src, e), f(target, e));
            if moves.iter().all(|(m, _)| (m - cur).norm() > 1e-9) {
                moves.push((cur, tgt));
            }
        }
        let recipe = InstanceRecipe {
            space: combo.space,
            star: combo.star,
            field: combo.field,
            class: combo.class,
            plan,
            seed,
            mixing: 0.8,
            max_condition: 1e4,
        };
        let n = estimated_dim(combo, &recipe);
        if n == 0 || n > nmax || (matches!(combo.space, GenSpace::SkewJ | GenSpace::Random { epsilon1: -1 }) && n % 2 == 1) {
            continue;
        }
        return Plan { recipe, moves };
    }
}

/// Dimension the generator will produce for the recipe.
pub fn estimated_dim(combo: &Combo, r: &InstanceRecipe) -> usize {
    let e1 = if matches!(combo.space, GenSpace::SkewJ | GenSpace::Random { epsilon1: -1 }) { -1.0 } else { 1.0 };
    r.plan
        .iter()
        .map(|p| {
            let k: usize = p.sizes.iter().sum();
            let l = p.eigenvalue();
            let lie = combo.class == StructureClass::Lie;
            let mult = match (combo.field, combo.star) {
                (Field::Complex, Star::ConjTranspose) => {
                    let self_paired = (l.conj() * combo.class.epsilon2() - l).norm() < 1e-12;
                    if self_paired {
                        1
                    } else {
                        2
                    }
                }
                (Field::Complex, Star::Transpose) => {
                    if !lie && e1 > 0.0 {
                        1
                    } else {
                        2
                    }
                }
                (Field::Real, _) => {
                    if l.im == 0.0 {
                        if !lie && e1 > 0.0 {
                            1
                        } else {
                            2
                        }
                    } else if (!lie && e1 > 0.0) || (lie && l.re == 0.0) {
                        2
                    } else {
                        4
                    }
                }
            };
            k * mult
        })
        .sum()
}

/// Draws plans until one fits the inertia of the requested space. Plans whose
/// sign characteristic cannot match `H` are redrawn, other errors propagate.
pub fn feasible_instance(
    combo: &Combo,
    rng: &mut ChaCha8Rng,
    nmax: usize,
    gap: f64,
    seed: u64,
) -> Result<(Plan, Instance), specpreserve::Error> {
    loop {
        let plan = random_plan(combo, rng, nmax, gap, seed);
        match generate_instance(&plan.recipe) {
            Ok(inst) => return Ok((plan, inst)),
            Err(specpreserve::Error::Precondition { hypothesis: "feasible spectral plan", .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}
