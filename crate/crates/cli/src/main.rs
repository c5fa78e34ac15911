//! Batch front end: inspect structured matrices, run reassignment and
//! invariant-subspace jobs, and generate test instances.

mod job;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use specpreserve::algebra::{adjoint, is_member, structure_residual};
use specpreserve::classical::InvariantPair;
use specpreserve::diagnostics::{generate_instance, verify_reassignment};
use specpreserve::eigen::{cluster, eigenvalues, spectral_scale};
use specpreserve::invariant::{
    complementary_structured_known, lambda_compatibility, make_invariant_structured, no_spillover_invariant,
    preserve_invariant_structured, CompatibilityReport, StructuredUpdate,
};
use specpreserve::io::{to_json_17, MatrixData};
use specpreserve::matrix::{c, frob, identity, imag_norm};
use specpreserve::reassign::{arrangement_for, assemble, reassign_family, reassign_no_spillover};
use specpreserve::spectral::{
    complete_pairing, extract_jordan_pairs, oracle_nmax, pairing_partner, validate_pairing_closure, ReassignmentAssembly,
    ReassignmentSpec,
};
use specpreserve::{CMat, Error, Field, Result, ScalarProductSpace, Star, StructureClass, C64};

use job::Context;

#[derive(Parser)]
#[command(name = "specpreserve", version, about = "Structure-preserving eigenvalue reassignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report membership, adjoint residual, eigenvalue pairing and Jordan type.
    Inspect(JobArgs),
    /// Move eigenvalues and write Delta A, A + Delta A and a report.
    Reassign(JobArgs),
    /// Run an invariant-subspace workflow (reproduce, preserve, complementary, no-spillover).
    Invariant(JobArgs),
    /// Write a generated structured instance with its ground truth.
    Gen(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Job description (JSON).
    job: PathBuf,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// identity | flip | skew_j | signature:P | random:E1[:SEED] | file:PATH
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long, value_parser = parse_class)]
    pub class: Option<StructureClass>,
    #[arg(long, value_parser = parse_star)]
    pub star: Option<Star>,
    #[arg(long)]
    pub tol_structure: Option<f64>,
    #[arg(long)]
    pub tol_residual: Option<f64>,
    #[arg(long)]
    pub rank_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// zero | random | file:PATH
    #[arg(long)]
    pub z: Option<String>,
    /// Insert the eigenvalue moves forced by pairing instead of rejecting the job.
    #[arg(long)]
    pub complete_pairing: bool,
    /// Sub-mode: family | no-spillover for reassign; reproduce | preserve |
    /// complementary | no-spillover for invariant.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_class(s: &str) -> std::result::Result<StructureClass, String> {
    match s {
        "jordan" => Ok(StructureClass::Jordan),
        "lie" => Ok(StructureClass::Lie),
        _ => Err("expected `jordan` or `lie`".into()),
    }
}

fn parse_star(s: &str) -> std::result::Result<Star, String> {
    match s {
        "t" => Ok(Star::Transpose),
        "ct" => Ok(Star::ConjTranspose),
        _ => Err("expected `t` or `ct`".into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_mathematical() { 2 } else { 3 })
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Inspect(j) => inspect(&load(j)?),
        Command::Reassign(j) => reassign(&load(j)?),
        Command::Invariant(j) => invariant(&load(j)?),
        Command::Gen(j) => gen(&load(j)?),
    }
}

fn load(j: JobArgs) -> Result<Context> {
    let mut flags = j.flags;
    // paths on the command line are relative to the working directory
    for s in [&mut flags.space, &mut flags.z].into_iter().flatten() {
        if let Some(p) = s.strip_prefix("file:") {
            *s = format!("file:{}", std::path::absolute(p)?.display());
        }
    }
    Context::load(&j.job, flags)
}

fn zc(z: C64) -> Value {
    json!([z.re, z.im])
}

fn fmt_c(z: C64) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

fn fmt_e(x: f64) -> String {
    format!("{x:.6e}")
}

fn print_table(title: &str, rows: &[(String, String)]) {
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    println!("{title}");
    for (k, v) in rows {
        println!("  {k:<w$}  {v}");
    }
}

fn row(k: &str, v: impl Into<String>) -> (String, String) {
    (k.to_string(), v.into())
}

fn class_name(class: StructureClass) -> &'static str {
    match class {
        StructureClass::Jordan => "jordan",
        StructureClass::Lie => "lie",
    }
}

fn output_field(space: &ScalarProductSpace, m: &CMat) -> Field {
    if space.field() == Field::Real && imag_norm(m) == 0.0 {
        Field::Real
    } else {
        Field::Complex
    }
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), to_json_17(v))?;
    Ok(())
}

fn write_matrix(dir: &Path, name: &str, m: &CMat, field: Field) -> Result<()> {
    write_json(dir, name, &serde_json::to_value(MatrixData::with_field(m, field))?)
}

fn space_json(space: &ScalarProductSpace) -> Value {
    json!({
        "star": space.star(),
        "field": space.field(),
        "epsilon1": space.epsilon1(),
        "dim": space.dim(),
    })
}

fn inspect(ctx: &Context) -> Result<()> {
    let a = ctx.a()?;
    let tol = ctx.tolerances()?;
    let space = ctx.space(a.nrows(), &[&a], &tol)?;
    let scale = frob(&a).max(1.0);
    let adj = adjoint(&a, &space)?;
    let adjoint_residual = frob(&(adjoint(&adj, &space)? - &a)) / scale;
    let classes = match ctx.class() {
        Some(cl) => vec![cl],
        None => vec![StructureClass::Jordan, StructureClass::Lie],
    };
    let mut membership = Vec::new();
    let mut rows = vec![row("n", a.nrows().to_string()), row("adjoint involution residual", fmt_e(adjoint_residual))];
    let mut best = (f64::INFINITY, classes[0]);
    for &cl in &classes {
        let r = structure_residual(&a, &space, cl)?;
        let member = is_member(&a, &space, cl, &tol)?;
        if r < best.0 {
            best = (r, cl);
        }
        rows.push(row(&format!("structure residual ({})", class_name(cl)), fmt_e(r / scale)));
        rows.push(row(&format!("member of {}", class_name(cl)), member.to_string()));
        membership.push(json!({ "class": cl, "residual": r, "relative_residual": r / scale, "member": member }));
    }
    let class = best.1;
    print_table("inspect", &rows);

    // one row per distinct eigenvalue, with Jordan type when extraction succeeds
    let (values, jordan): (Vec<C64>, Option<Vec<Vec<usize>>>) = match a.nrows() <= oracle_nmax() {
        true => match extract_jordan_pairs(&a, &tol) {
            Ok(pairs) => {
                let ev: Vec<C64> = pairs.iter().map(|p| p.lambda).collect();
                let groups = cluster(&ev, tol.cluster_tol * spectral_scale(&ev));
                let vals = groups.iter().map(|g| ev[g[0]]).collect();
                let sizes = groups.iter().map(|g| g.iter().map(|&i| pairs[i].len()).collect()).collect();
                (vals, Some(sizes))
            }
            Err(_) => (distinct(&eigenvalues(&a)?, tol.cluster_tol), None),
        },
        false => (distinct(&eigenvalues(&a)?, tol.cluster_tol), None),
    };
    let snap = tol.snap_tol.max(tol.cluster_tol) * spectral_scale(&values);
    let mut table = Vec::new();
    println!("eigenvalue pairing ({})", class_name(class));
    println!("  {:<28}  {:<28}  {:>14}  jordan type", "eigenvalue", "partner", "distance");
    for (k, &l) in values.iter().enumerate() {
        let p = pairing_partner(l, class, space.star());
        let dist = values.iter().map(|v| (v - p).norm()).fold(f64::INFINITY, f64::min);
        let sizes = jordan.as_ref().map(|j| j[k].clone());
        let jt = sizes.as_ref().map(|s| format!("{s:?}")).unwrap_or_else(|| "-".into());
        println!("  {:<28}  {:<28}  {:>14}  {jt}", fmt_c(l), fmt_c(p), fmt_e(dist));
        table.push(json!({
            "eigenvalue": zc(l),
            "partner": zc(p),
            "partner_distance": dist,
            "self_paired": (l - p).norm() <= snap,
            "jordan_blocks": sizes,
        }));
    }
    let report = json!({
        "command": "inspect",
        "space": space_json(&space),
        "adjoint_involution_residual": adjoint_residual,
        "membership": membership,
        "pairing_class": class,
        "pairing": table,
    });
    if ctx.flags.out.is_some() || ctx.job.out.is_some() {
        write_json(&ctx.out_dir(), "report.json", &report)?;
    }
    Ok(())
}

fn distinct(ev: &[C64], cluster_tol: f64) -> Vec<C64> {
    cluster(ev, cluster_tol * spectral_scale(ev)).iter().map(|g| ev[g[0]]).collect()
}

enum ReassignKind {
    Family,
    NoSpillover,
}

fn reassign_kind(mode: Option<&str>) -> Result<ReassignKind> {
    match mode {
        None | Some("family") => Ok(ReassignKind::Family),
        Some("no-spillover" | "no_spillover") => Ok(ReassignKind::NoSpillover),
        Some(m) => Err(Error::Input(format!("unknown reassign mode `{m}`"))),
    }
}

fn reassign(ctx: &Context) -> Result<()> {
    let kind = reassign_kind(ctx.flags.mode.as_deref().or(ctx.job.mode.as_deref()))?;
    let a = ctx.a()?;
    let tol = ctx.tolerances()?;
    let class = ctx.require_class()?;
    let x_c = ctx.job.x_c.as_ref().map(|m| ctx.matrix(m)).transpose()?;
    let mut data = vec![&a];
    data.extend(x_c.iter());
    let space = ctx.space(a.nrows(), &data, &tol)?;

    let (asm, groups) = match x_c {
        Some(x_c) => {
            let lc = ctx.required_block(&ctx.job.lambda_c, "lambda_c")?;
            let la = ctx.required_block(&ctx.job.lambda_a, "lambda_a")?;
            (ReassignmentAssembly::from_parts(x_c, lc, la, arrangement_for(space.field(), class))?, Vec::new())
        }
        None => {
            let moves = ctx.targets();
            if moves.is_empty() {
                return Err(Error::Input("job needs `targets` or explicit `x_c`, `lambda_c`, `lambda_a`".into()));
            }
            let pairs = extract_jordan_pairs(&a, &tol)?;
            let ev: Vec<C64> = pairs.iter().map(|p| p.lambda).collect();
            let mut spec = ReassignmentSpec::from_pairs(&pairs, &moves, tol.cluster_tol * spectral_scale(&ev))?;
            if ctx.flags.complete_pairing {
                spec = complete_pairing(&spec, &pairs, &space, class, &tol)?;
            }
            let violations = validate_pairing_closure(&spec, &space, class, &tol);
            if !violations.is_empty() {
                let detail: Vec<String> = violations
                    .iter()
                    .map(|v| format!("group {} at {}: {}", v.group, fmt_c(c(v.eigenvalue.0, v.eigenvalue.1)), v.reason))
                    .collect();
                return Err(Error::precondition("eigenvalue pairing closure", detail.join("; ")));
            }
            let groups: Vec<Value> = spec
                .groups
                .iter()
                .map(|g| json!({ "current": zc(g.current), "target": zc(g.target), "chains": g.chains.iter().map(|x| x.ncols()).collect::<Vec<_>>() }))
                .collect();
            (assemble(&a, &spec, &space, class, &tol)?, groups)
        }
    };

    let (upd, mode) = match kind {
        ReassignKind::Family => (reassign_family(&a, &asm, &space, class, ctx.z(&space, class)?.as_ref(), &tol)?, "family"),
        ReassignKind::NoSpillover => {
            if ctx.flags.z.is_some() {
                return Err(Error::Input("--z only applies to family mode".into()));
            }
            (reassign_no_spillover(&a, &asm, &space, class, &tol)?, "no-spillover")
        }
    };
    let fixed = match (&ctx.job.x_f, &ctx.job.lambda_f) {
        (Some(x), Some(l)) => Some(InvariantPair::new(ctx.matrix(x)?, ctx.block(l)?)?),
        (None, None) => None,
        _ => return Err(Error::Input("`x_f` and `lambda_f` must be given together".into())),
    };
    let report = verify_reassignment(&a, &upd.delta, &asm, fixed.as_ref(), &space, class, &tol)?;

    let out = ctx.out_dir();
    let b = &a + &upd.delta;
    write_matrix(&out, "delta_a.json", &upd.delta, output_field(&space, &upd.delta))?;
    write_matrix(&out, "a_plus_delta.json", &b, output_field(&space, &b))?;
    write_json(
        &out,
        "report.json",
        &json!({
            "command": "reassign",
            "mode": mode,
            "class": class,
            "space": space_json(&space),
            "tolerances": tol,
            "groups": groups,
            "interpolation_residual": upd.interpolation_residual,
            "gram_condition": upd.gram_condition,
            "perturbation": report,
        }),
    )?;

    let mut rows = vec![
        row("mode", mode),
        row("class", class_name(class)),
        row("||Delta A||_F", fmt_e(report.delta_norm)),
        row("rank Delta A", report.delta_rank.to_string()),
        row("reassigned residual", fmt_e(report.reassigned_residual)),
        row("structure residual", fmt_e(report.structure_residual)),
        row("updated structure residual", fmt_e(report.updated_structure_residual)),
        row("Gram condition (1-norm)", fmt_e(report.gram_condition_estimate)),
    ];
    if let Some(f) = report.fixed_residual {
        rows.push(row("fixed-pair residual", fmt_e(f)));
    }
    if let Some(v) = &report.spectrum_verdict {
        let verdict = match (v.passed, mode) {
            (true, _) => "pass",
            (false, "family") => "moved; family updates need not fix the rest",
            (false, _) => "FAIL",
        };
        rows.push(row("spectrum distance", format!("{} (tol {}, {verdict})", fmt_e(v.max_distance), fmt_e(v.tolerance))));
    }
    rows.push(row("output", out.display().to_string()));
    print_table("reassign", &rows);
    Ok(())
}

fn compatibility_rows(r: &CompatibilityReport) -> Vec<(String, String)> {
    vec![
        row("condition residual", fmt_e(r.residual)),
        row("condition threshold", fmt_e(r.threshold)),
        row("compatible", r.compatible.to_string()),
    ]
}

fn invariant(ctx: &Context) -> Result<()> {
    let mode = ctx.flags.mode.clone().or(ctx.job.mode.clone()).ok_or_else(|| Error::Input("invariant job needs a `mode`".into()))?;
    let mode = mode.replace('_', "-");
    let a = ctx.a()?;
    let tol = ctx.tolerances()?;
    let class = ctx.require_class()?;
    let x = match mode.as_str() {
        "reproduce" => match &ctx.job.x_a {
            Some(m) => ctx.matrix(m)?,
            None => ctx.required(&ctx.job.x_c, "x_a")?,
        },
        "preserve" | "complementary" | "no-spillover" => ctx.required(&ctx.job.x_c, "x_c")?,
        m => return Err(Error::Input(format!("unknown invariant mode `{m}`"))),
    };
    let space = ctx.space(a.nrows(), &[&a, &x], &tol)?;
    let lambda_a = ctx.required_block(&ctx.job.lambda_a, "lambda_a")?;

    let run = |target: &CMat| -> Result<CompatibilityReport> {
        let r = lambda_compatibility(target, &lambda_a, &space, class, &tol)?;
        if !r.compatible {
            print_table(&format!("invariant ({mode})"), &compatibility_rows(&r));
            let report = json!({ "command": "invariant", "mode": mode, "class": class, "compatibility": r });
            write_json(&ctx.out_dir(), "report.json", &report)?;
        }
        Ok(r)
    };
    let (compat, upd): (CompatibilityReport, StructuredUpdate) = match mode.as_str() {
        "reproduce" => {
            let r = run(&x)?;
            (r, make_invariant_structured(&a, &x, &lambda_a, ctx.z(&space, class)?.as_ref(), &space, class, &tol)?)
        }
        "preserve" => {
            let lc = ctx.required_block(&ctx.job.lambda_c, "lambda_c")?;
            let rm = match &ctx.job.r {
                Some(m) => ctx.matrix(m)?,
                None => identity(x.ncols()),
            };
            let r = run(&(&x * &rm))?;
            (r, preserve_invariant_structured(&a, &x, &lc, &rm, &lambda_a, ctx.z(&space, class)?.as_ref(), &space, class, &tol)?)
        }
        "complementary" => {
            let xf = ctx.required(&ctx.job.x_f, "x_f")?;
            let lf = ctx.required_block(&ctx.job.lambda_f, "lambda_f")?;
            let r = run(&x)?;
            (r, complementary_structured_known(&a, &x, &lambda_a, &xf, &lf, &space, class, &tol)?)
        }
        _ => {
            let lc = ctx.required_block(&ctx.job.lambda_c, "lambda_c")?;
            let r = run(&x)?;
            (r, no_spillover_invariant(&a, &x, &lc, &lambda_a, &space, class, &tol)?)
        }
    };

    let out = ctx.out_dir();
    let b = &a + &upd.delta;
    let updated = structure_residual(&b, &space, class)?;
    write_matrix(&out, "delta_a.json", &upd.delta, output_field(&space, &upd.delta))?;
    write_matrix(&out, "a_plus_delta.json", &b, output_field(&space, &b))?;
    write_json(
        &out,
        "report.json",
        &json!({
            "command": "invariant",
            "mode": mode,
            "class": class,
            "space": space_json(&space),
            "tolerances": tol,
            "compatibility": compat,
            "delta_a": MatrixData::with_field(&upd.delta, output_field(&space, &upd.delta)),
            "delta_norm": frob(&upd.delta),
            "rank": upd.rank,
            "interpolation_residual": upd.interpolation_residual,
            "structure_residual": upd.structure_residual,
            "updated_structure_residual": updated,
            "gram_condition": upd.gram_condition,
            "imag_norm": upd.imag_norm,
        }),
    )?;
    let mut rows = compatibility_rows(&compat);
    rows.extend([
        row("class", class_name(class)),
        row("||Delta A||_F", fmt_e(frob(&upd.delta))),
        row("rank Delta A", upd.rank.to_string()),
        row("interpolation residual", fmt_e(upd.interpolation_residual)),
        row("structure residual", fmt_e(upd.structure_residual)),
        row("updated structure residual", fmt_e(updated)),
    ]);
    if let Some(g) = upd.gram_condition {
        rows.push(row("condition (1-norm)", fmt_e(g)));
    }
    rows.push(row("output", out.display().to_string()));
    print_table(&format!("invariant ({mode})"), &rows);
    Ok(())
}

fn gen(ctx: &Context) -> Result<()> {
    let mut recipe = ctx.job.recipe.clone().ok_or_else(|| Error::Input("gen job needs a `recipe`".into()))?;
    if let Some(s) = ctx.flags.seed {
        recipe.seed = s;
    }
    if let Some(cl) = ctx.flags.class {
        recipe.class = cl;
    }
    if let Some(st) = ctx.flags.star {
        recipe.star = st;
    }
    let inst = generate_instance(&recipe)?;
    let membership = structure_residual(&inst.a, &inst.space, recipe.class)?;
    let out = ctx.out_dir();
    write_matrix(&out, "a.json", &inst.a, output_field(&inst.space, &inst.a))?;
    write_matrix(&out, "h.json", &inst.h, output_field(&inst.space, &inst.h))?;
    let pairs: Vec<Value> = inst
        .pairs
        .iter()
        .map(|p| {
            json!({
                "lambda": zc(p.lambda),
                "length": p.len(),
                "residual": p.residual,
                "chain": MatrixData::from_cmat(&p.chain),
            })
        })
        .collect();
    write_json(
        &out,
        "truth.json",
        &json!({
            "recipe": recipe,
            "condition": inst.condition,
            "membership_residual": membership,
            "pairs": pairs,
        }),
    )?;
    let rows = vec![
        row("n", inst.a.nrows().to_string()),
        row("class", class_name(recipe.class)),
        row("Jordan blocks", inst.pairs.len().to_string()),
        row("similarity condition", fmt_e(inst.condition)),
        row("membership residual", fmt_e(membership)),
        row("output", out.display().to_string()),
    ];
    print_table("gen", &rows);
    Ok(())
}
