//! Job files and their resolution against the command line.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use specpreserve::algebra::sample_structured;
use specpreserve::diagnostics::InstanceRecipe;
use specpreserve::io::{read_matrix, MatrixData};
use specpreserve::matrix::{c, diag, imag_norm};
use specpreserve::{CMat, Error, Field, Result, ScalarProductSpace, SpacePreset, Star, StructureClass, ToleranceProfile, C64};

use crate::Flags;

/// A matrix given by a path (relative to the job file) or inline.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixRef {
    Path(PathBuf),
    Inline(MatrixData),
}

/// `Lambda` blocks may also be given as a list of diagonal `[re, im]` entries.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum BlockRef {
    Matrix(MatrixRef),
    Diagonal(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Preset(SpacePreset),
    File { file: PathBuf },
    Inline { matrix: MatrixData },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ZSpec {
    Named(String),
    File { file: PathBuf },
    Inline { matrix: MatrixData },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    pub preset: Option<String>,
    pub structure_tol: Option<f64>,
    pub rank_tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub eigpair_tol: Option<f64>,
    pub snap_tol: Option<f64>,
    pub separation_tol: Option<f64>,
    pub cluster_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub a: Option<MatrixRef>,
    pub space: Option<SpaceSpec>,
    pub class: Option<StructureClass>,
    pub star: Option<Star>,
    pub field: Option<Field>,
    /// Ordered `(current, target)` couples.
    #[serde(default)]
    pub targets: Vec<[[f64; 2]; 2]>,
    pub x_a: Option<MatrixRef>,
    pub x_c: Option<MatrixRef>,
    pub lambda_c: Option<BlockRef>,
    pub lambda_a: Option<BlockRef>,
    pub r: Option<MatrixRef>,
    pub x_f: Option<MatrixRef>,
    pub lambda_f: Option<BlockRef>,
    pub mode: Option<String>,
    pub z: Option<ZSpec>,
    #[serde(default)]
    pub tolerances: TolSpec,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub recipe: Option<InstanceRecipe>,
}

/// A job with its file location, merged with the command-line flags.
pub struct Context {
    pub job: Job,
    pub dir: PathBuf,
    pub flags: Flags,
}

impl Context {
    pub fn load(path: &Path, flags: Flags) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let job: Job = serde_json::from_str(&text)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Context { job, dir, flags })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }

    pub fn matrix(&self, m: &MatrixRef) -> Result<CMat> {
        match m {
            MatrixRef::Path(p) => read_matrix(&self.resolve(p)),
            MatrixRef::Inline(d) => d.to_cmat(),
        }
    }

    pub fn block(&self, b: &BlockRef) -> Result<CMat> {
        match b {
            BlockRef::Matrix(m) => self.matrix(m),
            BlockRef::Diagonal(v) => Ok(diag(&v.iter().map(|&[re, im]| c(re, im)).collect::<Vec<_>>())),
        }
    }

    pub fn required(&self, m: &Option<MatrixRef>, name: &str) -> Result<CMat> {
        match m {
            Some(m) => self.matrix(m),
            None => Err(Error::Input(format!("job needs `{name}`"))),
        }
    }

    pub fn required_block(&self, b: &Option<BlockRef>, name: &str) -> Result<CMat> {
        match b {
            Some(b) => self.block(b),
            None => Err(Error::Input(format!("job needs `{name}`"))),
        }
    }

    pub fn a(&self) -> Result<CMat> {
        self.required(&self.job.a, "a")
    }

    pub fn class(&self) -> Option<StructureClass> {
        self.flags.class.or(self.job.class)
    }

    pub fn require_class(&self) -> Result<StructureClass> {
        self.class().ok_or_else(|| Error::Input("structure class not given (use `class` or --class)".into()))
    }

    pub fn seed(&self) -> u64 {
        self.flags.seed.or(self.job.seed).unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        match (&self.flags.out, &self.job.out) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => self.resolve(o),
            (None, None) => PathBuf::from("."),
        }
    }

    pub fn tolerances(&self) -> Result<ToleranceProfile> {
        let t = &self.job.tolerances;
        let mut p = match t.preset.as_deref() {
            None | Some("default") => ToleranceProfile::default(),
            Some("loose") => ToleranceProfile::loose(),
            Some(other) => return Err(Error::Input(format!("unknown tolerance preset `{other}`"))),
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.structure_tol, t.structure_tol);
        set(&mut p.rank_tol, t.rank_tol);
        set(&mut p.residual_tol, t.residual_tol);
        set(&mut p.eigpair_tol, t.eigpair_tol);
        set(&mut p.snap_tol, t.snap_tol);
        set(&mut p.separation_tol, t.separation_tol);
        set(&mut p.cluster_tol, t.cluster_tol);
        set(&mut p.structure_tol, self.flags.tol_structure);
        set(&mut p.residual_tol, self.flags.tol_residual);
        set(&mut p.rank_tol, self.flags.rank_tol);
        p.validate()?;
        Ok(p)
    }

    fn space_spec(&self) -> Result<SpaceSpec> {
        if let Some(s) = &self.flags.space {
            return parse_space_flag(s);
        }
        self.job.space.clone().ok_or_else(|| Error::Input("scalar product not given (use `space` or --space)".into()))
    }

    /// Builds the space for an `n x n` problem. The field defaults to real when
    /// the form is bilinear and every supplied matrix is real.
    pub fn space(&self, n: usize, data: &[&CMat], tol: &ToleranceProfile) -> Result<ScalarProductSpace> {
        let spec = self.space_spec()?;
        let h = match &spec {
            SpaceSpec::Preset(_) => None,
            SpaceSpec::File { file } => Some(read_matrix(&self.resolve(file))?),
            SpaceSpec::Inline { matrix } => Some(matrix.to_cmat()?),
        };
        let all_real = data.iter().chain(h.as_ref().iter()).all(|m| imag_norm(m) == 0.0);
        let star = self.flags.star.or(self.job.star).unwrap_or(if all_real { Star::Transpose } else { Star::ConjTranspose });
        let field = self.job.field.unwrap_or(if all_real && star == Star::Transpose { Field::Real } else { Field::Complex });
        match (spec, h) {
            (SpaceSpec::Preset(p), _) => p.space(n, star, field),
            (_, Some(h)) => {
                if h.nrows() != n {
                    return Err(Error::Dimension(format!("H is {}x{} but the problem is {n}x{n}", h.nrows(), h.ncols())));
                }
                ScalarProductSpace::new(h, star, field, None, tol)
            }
            _ => unreachable!(),
        }
    }

    /// The free structured parameter, or `None` for the minimal-norm choice.
    pub fn z(&self, space: &ScalarProductSpace, class: StructureClass) -> Result<Option<CMat>> {
        let spec = match &self.flags.z {
            Some(s) => Some(parse_z_flag(s)),
            None => self.job.z.clone(),
        };
        match spec {
            None => Ok(None),
            Some(ZSpec::Named(s)) if s == "zero" => Ok(None),
            Some(ZSpec::Named(s)) if s == "random" => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed());
                Ok(Some(sample_structured(space, class, &mut rng)))
            }
            Some(ZSpec::Named(s)) => Err(Error::Input(format!("unknown Z source `{s}`"))),
            Some(ZSpec::File { file }) => Ok(Some(read_matrix(&self.resolve(&file))?)),
            Some(ZSpec::Inline { matrix }) => Ok(Some(matrix.to_cmat()?)),
        }
    }

    pub fn targets(&self) -> Vec<(C64, C64)> {
        self.job.targets.iter().map(|[a, b]| (c(a[0], a[1]), c(b[0], b[1]))).collect()
    }
}

/// `identity`, `flip`, `skew_j`, `signature:P`, `random:E1[:SEED]` or `file:PATH`.
pub fn parse_space_flag(s: &str) -> Result<SpaceSpec> {
    let bad = || Error::Input(format!("cannot parse --space `{s}`"));
    let mut parts = s.splitn(2, ':');
    let head = parts.next().unwrap_or_default();
    let rest = parts.next();
    let preset = match (head, rest) {
        ("identity", None) => SpacePreset::Identity,
        ("flip", None) => SpacePreset::Flip,
        ("skew_j" | "skewj", None) => SpacePreset::SkewJ,
        ("signature", Some(p)) => SpacePreset::Signature { positive: p.parse().map_err(|_| bad())? },
        ("random", Some(r)) => {
            let mut it = r.split(':');
            let epsilon1 = it.next().and_then(|e| e.parse().ok()).ok_or_else(bad)?;
            let seed = match it.next() {
                Some(v) => v.parse().map_err(|_| bad())?,
                None => 0,
            };
            SpacePreset::Random { epsilon1, seed }
        }
        ("file", Some(p)) => return Ok(SpaceSpec::File { file: PathBuf::from(p) }),
        _ => return Err(bad()),
    };
    Ok(SpaceSpec::Preset(preset))
}

pub fn parse_z_flag(s: &str) -> ZSpec {
    match s.strip_prefix("file:") {
        Some(p) => ZSpec::File { file: PathBuf::from(p) },
        None => ZSpec::Named(s.to_string()),
    }
}
