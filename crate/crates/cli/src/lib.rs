//! Command-line driver. `run` parses arguments, runs one subcommand and
//! returns the process exit code:
//!
//! * 0: every requested check passed
//! * 1: a mathematical verdict is negative
//! * 2: usage or input error
//! * 3: numerical degeneracy (internal cross-checks disagree)

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use accform::association::build_operator;
use accform::dynamics::{
    approx_experiment, default_grid, form_invariance_check, invariance_check, ApproxConfig, ApproxReport,
    FormInvarianceReport, InvarianceOptions, InvarianceReport, ProjectionSpec,
};
use accform::fov::{check_sectorial, field_of_values, FieldOfValues, SectorialityReport};
use accform::gallery::{self, CaseReport, Params};
use accform::generation::{cayley, generate_form, load_operator, CayleyData};
use accform::numerics::encoding::{from_raw, RawMatrix};
use accform::numerics::orthonormal_range;
use accform::report::{analyze, AnalysisReport, TOOL_VERSION};
use accform::{h_coordinates, load_problem, normalize, Error, FormSystem, RawProblem, ToleranceConfig};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "accform", version, about = "Analyse accretive sesquilinear forms and their operators")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Write the report here instead of stdout (atomically)
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Relative rank cutoff (default from ACCFORM_TOL_RANK)
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Principal angle below which subspaces count as equal
    #[arg(long, global = true)]
    tol_angle: Option<f64>,
    /// Residual tolerance for identities and sign tests
    #[arg(long, global = true)]
    tol_residual: Option<f64>,
    /// JSON output (default)
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// Human-readable output
    #[arg(long, global = true)]
    text: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full analysis of a problem file
    Analyze { problem: PathBuf },
    /// Approximation experiment with a family B_n
    Approx {
        problem: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Build a generating form for an operator
    Generate { operator: PathBuf },
    /// Invariance of a closed convex set under the semigroup
    Invariance {
        problem: PathBuf,
        /// `orthant` or `subspace:<file>`
        #[arg(long = "set")]
        set: String,
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Build and check a named example
    Gallery {
        name: String,
        /// `key=value`, value parsed as JSON when possible
        #[arg(long = "param")]
        params: Vec<String>,
        /// Restrict to the span of raw coordinate vectors, e.g. `e1,e3`
        #[arg(long)]
        restrict: Option<String>,
    },
    /// Field of values of T and of the operator
    Fov {
        problem: PathBuf,
        #[arg(long, default_value_t = 360)]
        angles: usize,
    },
}

/// Outcome of a subcommand that got far enough to produce a report.
struct Outcome {
    json: String,
    text: String,
    passed: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::InvalidInput(_) | Error::DimensionMismatch(_) | Error::Io(_) => 2,
        Error::ConditionViolated { .. } | Error::Precondition(_) => 1,
        Error::Degenerate(_) | Error::BoundViolation(_) => 3,
    }
}

fn digest(bytes: &[u8]) -> String {
    let h = Sha256::digest(bytes);
    let hex: String = h.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

/// Defaults, then `ACCFORM_TOL_RANK`, then the problem file, then flags.
fn tolerances(g: &GlobalOpts, from_file: Option<ToleranceConfig>) -> Result<ToleranceConfig, Error> {
    let mut t = match from_file {
        Some(t) => t,
        None => {
            let mut t = ToleranceConfig::default();
            if let Ok(v) = std::env::var("ACCFORM_TOL_RANK") {
                t.rank_rtol = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("ACCFORM_TOL_RANK={v:?} is not a number")))?;
            }
            t
        }
    };
    if let Some(r) = g.tol_rank {
        t.rank_rtol = r;
    }
    if let Some(a) = g.tol_angle {
        t.angle_tol = a;
    }
    if let Some(r) = g.tol_residual {
        t.residual_tol = r;
    }
    t.validate()?;
    Ok(t)
}

fn load(path: &Path, g: &GlobalOpts) -> Result<(RawProblem, FormSystem, String), Error> {
    let bytes = read(path)?;
    let mut raw = load_problem(&bytes)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let from_file = value.get("tolerances").is_some().then_some(raw.tolerances);
    raw.tolerances = tolerances(g, from_file)?;
    let (fs, _) = normalize(&raw)?;
    Ok((raw, fs, digest(&bytes)))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn analysis_text(r: &AnalysisReport) -> String {
    let c = &r.conditions;
    let mut out = String::new();
    let line = |out: &mut String, k: &str, v: String| out.push_str(&format!("{k:<22} {v}\n"));
    line(&mut out, "input", r.input_digest.clone());
    line(&mut out, "dim V / dim H", format!("{} / {}", r.dims.dim_v, r.dims.dim_h));
    line(&mut out, "condition I", format!("{:?} (margin {:.3e})", c.condition_i.verdict, c.condition_i.margin));
    line(&mut out, "condition II", format!("{:?} (margin {:.3e})", c.condition_ii.verdict, c.condition_ii.margin));
    line(&mut out, "condition III", format!("{:?} (mu {:.6e})", c.condition_iii.verdict, c.mu));
    match &c.j_elliptic {
        Some(je) => line(&mut out, "j-elliptic", format!("omega {} mu {:.6e}", je.omega, je.mu)),
        None => line(&mut out, "j-elliptic", "no".into()),
    }
    line(&mut out, "incomplete bound rho", format!("{:.6e}", c.incomplete_bound.rho));
    line(
        &mut out,
        "dims D V kerT kerJ rgJ*",
        format!("{} {} {} {} {}", r.dims.d_ja, r.dims.v_ja, r.dims.ker_t, r.dims.ker_j, r.dims.rg_j_adjoint),
    );
    line(&mut out, "associated", format!("{:?}", r.association.verdict));
    if let Some(w) = &r.association.witness {
        let parts: Vec<String> = w.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
        line(&mut out, "witness", format!("({})", parts.join(", ")));
    }
    if let Some(m) = &r.m_accretivity {
        line(&mut out, "m-accretive", format!("{:?} (margin {:.3e})", m.verdict, m.margin));
    }
    if let Some(op) = &r.operator {
        match &op.matrix {
            Some(a) => line(&mut out, "operator A", format_matrix(a)),
            None => line(&mut out, "operator domain dim", op.domain.dim().to_string()),
        }
    }
    out
}

fn format_matrix(m: &accform::ComplexMatrix) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let es: Vec<String> = (0..m.ncols())
                .map(|j| {
                    let z = m[(i, j)];
                    if z.im == 0.0 {
                        format!("{:.12}", z.re)
                    } else {
                        format!("{:.12}{:+.12}i", z.re, z.im)
                    }
                })
                .collect();
            format!("[{}]", es.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn cmd_analyze(path: &Path, g: &GlobalOpts) -> Result<Outcome, Error> {
    let (_, fs, d) = load(path, g)?;
    let r = analyze(&fs, &d, accform::fov::DEFAULT_ANGLES)?;
    Ok(Outcome { json: to_json(&r), text: analysis_text(&r), passed: r.all_hold() })
}

#[derive(Serialize, Deserialize)]
struct ApproxOutput {
    tool_version: String,
    input_digest: String,
    config: ApproxConfig,
    report: ApproxReport,
}

fn cmd_approx(path: &Path, config: &Path, g: &GlobalOpts) -> Result<Outcome, Error> {
    let (_, fs, d) = load(path, g)?;
    let cfg = ApproxConfig::from_json(&read(config)?)?;
    let report = approx_experiment(&fs, &cfg)?;
    let mut text = format!("{:>8} {:>14} {:>14}\n", "n", "error", "bound");
    for ((p, e), b) in report.schedule.iter().zip(&report.errors).zip(&report.bounds) {
        text.push_str(&format!("{:>8} {:>14.6e} {:>14.6e}\n", p.n, e, b));
    }
    for w in &report.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    let out = ApproxOutput { tool_version: TOOL_VERSION.into(), input_digest: d, config: cfg, report };
    Ok(Outcome { json: to_json(&out), text, passed: true })
}

#[derive(Serialize, Deserialize)]
struct GenerateOutput {
    tool_version: String,
    input_digest: String,
    cayley: CayleyData,
    /// A problem file whose associated operator is the input.
    problem: serde_json::Value,
}

fn cmd_generate(path: &Path, g: &GlobalOpts) -> Result<Outcome, Error> {
    let bytes = read(path)?;
    let tol = tolerances(g, None)?;
    let a = load_operator(&bytes)?;
    let op = accform::association::AssociatedOperator::from_matrix(&a, &tol)?;
    let c = cayley(&op, &tol)?;
    let fs = generate_form(&op, &tol)?;
    let problem: serde_json::Value =
        serde_json::from_str(&RawProblem::from_system(&fs).to_json()).expect("problem json parses");
    let text = format!("J (Cayley) = {}\nT0 = {}\nlink = {}\n", format_matrix(&c.j_matrix), format_matrix(fs.t0()), format_matrix(fs.j()));
    let out = GenerateOutput { tool_version: TOOL_VERSION.into(), input_digest: digest(&bytes), cayley: c, problem };
    Ok(Outcome { json: to_json(&out), text, passed: true })
}

/// `{"vectors": [[z, ...], ...]}`, one spanning vector per row in raw `H` coordinates.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubspaceFile {
    vectors: RawMatrix,
}

#[derive(Serialize, Deserialize)]
struct InvarianceOutput {
    tool_version: String,
    input_digest: String,
    set: String,
    options: InvarianceOptions,
    operator: InvarianceReport,
    form: FormInvarianceReport,
}

fn cmd_invariance(
    path: &Path,
    set: &str,
    lambdas: &[f64],
    times: &[f64],
    g: &GlobalOpts,
) -> Result<Outcome, Error> {
    let (raw, fs, d) = load(path, g)?;
    let tol = *fs.tolerances();
    let hc = h_coordinates(&raw)?;
    let spec = if set == "orthant" {
        let off_diag = (0..hc.nrows()).any(|i| (0..hc.ncols()).any(|j| i != j && hc[(i, j)].norm() > 0.0));
        if off_diag {
            return Err(Error::InvalidInput("the orthant needs a diagonal gram_H".into()));
        }
        ProjectionSpec::NonnegOrthant
    } else if let Some(file) = set.strip_prefix("subspace:") {
        let f: SubspaceFile =
            serde_json::from_slice(&read(Path::new(file))?).map_err(|e| Error::Parse(format!("{file}: {e}")))?;
        let rows = from_raw(&f.vectors, raw.dim_h).map_err(Error::Parse)?;
        if rows.ncols() != raw.dim_h {
            return Err(Error::DimensionMismatch(format!("subspace vectors must have length {}", raw.dim_h)));
        }
        ProjectionSpec::Subspace(orthonormal_range(&(&hc * rows.transpose()), &tol))
    } else {
        return Err(Error::InvalidInput(format!("unknown set {set:?}; use orthant or subspace:<file>")));
    };
    let opts = InvarianceOptions {
        lambdas: if lambdas.is_empty() { default_grid() } else { lambdas.to_vec() },
        times: if times.is_empty() { default_grid() } else { times.to_vec() },
        ..InvarianceOptions::default()
    };
    let op = build_operator(&fs)?;
    let operator = invariance_check(&op, &spec, &opts, &tol)?;
    let form = form_invariance_check(&fs, &spec, &opts)?;
    let passed = operator.semigroup.holds && operator.resolvent.holds && operator.operator.holds && form.holds;
    let text = format!(
        "semigroup   {} (margin {:.3e})\nresolvent   {} (margin {:.3e})\noperator    {} (margin {:.3e})\nform        {} (min {:.3e})\nequivalent  {}\n",
        operator.semigroup.holds,
        operator.semigroup.margin,
        operator.resolvent.holds,
        operator.resolvent.margin,
        operator.operator.holds,
        operator.operator.margin,
        form.holds,
        form.min_value,
        operator.equivalent,
    );
    let out = InvarianceOutput {
        tool_version: TOOL_VERSION.into(),
        input_digest: d,
        set: set.to_string(),
        options: opts,
        operator,
        form,
    };
    Ok(Outcome { json: to_json(&out), text, passed })
}

#[derive(Serialize, Deserialize)]
struct GalleryOutput {
    name: String,
    parameters: Params,
    restriction: Option<Vec<usize>>,
    case: Option<CaseReport>,
    analysis: AnalysisReport,
}

fn parse_params(items: &[String]) -> Result<Params, Error> {
    let mut p = Params::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("parameter {item:?} is not key=value")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
        p.insert(k.trim().to_string(), value);
    }
    Ok(p)
}

fn cmd_gallery(name: &str, params: &[String], restrict: Option<&str>, g: &GlobalOpts) -> Result<Outcome, Error> {
    let params = parse_params(params)?;
    let tol = tolerances(g, None)?;
    let mut case = gallery::example(name, &params)?;
    case.system = case.system.clone().with_tolerances(tol);
    let coords = restrict.map(gallery::parse_restrict).transpose()?;
    let id = format!(
        "gallery:{name}:{}:{}",
        serde_json::to_string(&case.parameters).expect("params serialize"),
        restrict.unwrap_or("")
    );
    let d = digest(id.as_bytes());
    let (system, report) = match &coords {
        Some(c) => (gallery::restrict_case(&case, c)?, None),
        None => (case.system.clone(), Some(gallery::run_case(&case))),
    };
    let analysis = analyze(&system, &d, accform::fov::DEFAULT_ANGLES)?;
    let mut text = String::new();
    if let Some(r) = &report {
        for f in &r.facts {
            text.push_str(&format!("{:<4} {:<36} {}\n", if f.passed { "ok" } else { "FAIL" }, f.id, f.detail));
        }
        for v in &r.recorded {
            let shown = v.value.map_or("unavailable".to_string(), |x| format!("{x:.6e}"));
            text.push_str(&format!("rec  {:<36} {shown}\n", v.name));
        }
        text.push('\n');
    }
    text.push_str(&analysis_text(&analysis));
    let passed = match &report {
        Some(r) => r.passed,
        None => analysis.all_hold(),
    };
    let out = GalleryOutput { name: name.to_string(), parameters: case.parameters, restriction: coords, case: report, analysis };
    Ok(Outcome { json: to_json(&out), text, passed })
}

#[derive(Serialize, Deserialize)]
struct FovOutput {
    tool_version: String,
    input_digest: String,
    n_angles: usize,
    t: FieldOfValues,
    operator: Option<FieldOfValues>,
    operator_sectoriality: Option<SectorialityReport>,
}

fn cmd_fov(path: &Path, angles: usize, g: &GlobalOpts) -> Result<Outcome, Error> {
    if angles < 8 {
        return Err(Error::InvalidInput("--angles must be at least 8".into()));
    }
    let (_, fs, d) = load(path, g)?;
    let t = field_of_values(&fs.derived_t(), angles)?;
    let a = build_operator(&fs).ok().and_then(|op| op.full_matrix());
    let (operator, operator_sectoriality) = match &a {
        Some(a) => (
            Some(field_of_values(a, angles)?),
            Some(check_sectorial(a, fs.tolerances().residual_tol)?),
        ),
        None => (None, None),
    };
    let mut text = String::from("# W(T) boundary, counterclockwise: re im\n");
    for z in &t.boundary_points {
        text.push_str(&format!("{:.12e} {:.12e}\n", z.re, z.im));
    }
    let out = FovOutput {
        tool_version: TOOL_VERSION.into(),
        input_digest: d,
        n_angles: angles,
        t,
        operator,
        operator_sectoriality,
    };
    Ok(Outcome { json: to_json(&out), text, passed: true })
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Runs the tool with the given arguments (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let g = &cli.global;
    let result = match &cli.command {
        Command::Analyze { problem } => cmd_analyze(problem, g),
        Command::Approx { problem, config } => cmd_approx(problem, config, g),
        Command::Generate { operator } => cmd_generate(operator, g),
        Command::Invariance { problem, set, lambdas, times } => cmd_invariance(problem, set, lambdas, times, g),
        Command::Gallery { name, params, restrict } => cmd_gallery(name, params, restrict.as_deref(), g),
        Command::Fov { problem, angles } => cmd_fov(problem, *angles, g),
    };
    match result {
        Ok(o) => {
            let body = if g.text { &o.text } else { &o.json };
            let written = match &g.report {
                Some(path) => write_atomic(path, body),
                None => out.write_all(body.as_bytes()).map_err(Error::from),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return 2;
            }
            if o.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
