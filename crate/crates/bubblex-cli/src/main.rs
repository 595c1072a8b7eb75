//! `bubblex`: command-line front end.
//!
//! Exit codes: 0 all checks pass, 1 a check failed (witness printed),
//! 2 bad arguments or unreadable input, 3 the mesh is not a simplicial
//! decomposition.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use bubblex::error::Error;
use bubblex::exec::Exec;
use bubblex::form::Form;
use bubblex::io;
use bubblex::mesh::Mesh;
use bubblex::polyform::{PiecewiseForm, Space};
use bubblex::random::Sampler;
use bubblex::rational::fmt_q;
use bubblex::report::Checklist;
use bubblex::transform::{nonzero_trace_face, stability_report, Transform};
use bubblex::verify::{self, Level, VerifyOptions};
use bubblex::weights::{certify_weight_system, WeightSystem};

const DEFAULT_SEED: u64 = 20240101;

#[derive(Parser)]
#[command(name = "bubblex", version, about = "Exact bubble transform for piecewise polynomial forms")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "BUBBLEX_JOBS")]
    jobs: Option<usize>,
    /// Print the run report as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WeightsArg {
    /// Precomputed weight system; built from the mesh when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simplex counts, links, shape constant, h_f range and overlap.
    Info { mesh: PathBuf },
    /// Build the weight system and write it with its content hash.
    Weights {
        mesh: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Run and print the weight certificates.
        #[arg(long)]
        certify: bool,
    },
    /// Write a random conforming form in P_r (or P_r⁻ with --trimmed).
    Gen {
        mesh: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        degree: u32,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        trimmed: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Split a form into W and bubbles; writes W.form, B_<f>.form and manifest.json.
    Decompose {
        mesh: PathBuf,
        form: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        weights: WeightsArg,
    },
    /// Run the weight certificates and every transform invariant.
    Verify {
        mesh: PathBuf,
        form: PathBuf,
        #[arg(long, default_value = "full")]
        level: Level,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Oracle points per (m, k).
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[command(flatten)]
        weights: WeightsArg,
    },
    /// Pointwise rational C_m against the telescoped K operators.
    Oracle {
        mesh: PathBuf,
        form: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        weights: WeightsArg,
    },
    /// Norm ratios of the decomposition over seeded random inputs.
    Stability {
        mesh: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        degree: u32,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        weights: WeightsArg,
    },
}

/// What a command produced: a report, the checks behind it, and text lines.
struct Outcome {
    report: Value,
    checks: Checklist,
    lines: Vec<String>,
}

enum Failure {
    Usage(String),
    NotADecomposition(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::NotADecomposition(_) => Failure::NotADecomposition(e.to_string()),
            Error::Parse(_)
            | Error::Io(_)
            | Error::DegenerateCell(_)
            | Error::InconsistentDim(_)
            | Error::MeshMismatch(_)
            | Error::DegreeOverflow(_)
            | Error::UnknownSimplex(_)
            | Error::IndexMismatch(_) => Failure::Usage(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<Outcome, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = Exec::with_jobs(cli.jobs.unwrap_or(0));
    let start = Instant::now();
    let (name, result) = run(&cli.command, &exec);
    match result {
        Ok(mut out) => {
            let passed = out.checks.all_passed();
            if let Value::Object(map) = &mut out.report {
                map.insert("command".into(), json!(name));
                map.insert("checks".into(), serde_json::to_value(&out.checks.checks).unwrap_or(Value::Null));
                map.insert("passed".into(), json!(passed));
                map.insert("seconds".into(), json!(start.elapsed().as_secs_f64()));
                map.insert("jobs".into(), json!(exec.jobs()));
            }
            // a closed pipe (e.g. `| head`) is not an error
            let mut stdout = std::io::stdout().lock();
            if cli.json {
                let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&out.report).unwrap_or_default());
            } else {
                for l in &out.lines {
                    let _ = writeln!(stdout, "{l}");
                }
                for c in &out.checks.checks {
                    let _ = writeln!(stdout, "{} {}", if c.passed { "pass" } else { "FAIL" }, c.name);
                }
            }
            for c in out.checks.failures() {
                eprintln!("check {} failed: {}", c.name, c.witness.as_deref().unwrap_or("no witness"));
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NotADecomposition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: &Command, exec: &Exec) -> (&'static str, CmdResult) {
    match cmd {
        Command::Info { mesh } => ("info", cmd_info(mesh)),
        Command::Weights { mesh, output, certify } => ("weights", cmd_weights(mesh, output.as_deref(), *certify, exec)),
        Command::Gen { mesh, k, degree, seed, trimmed, output } => ("gen", cmd_gen(mesh, *k, *degree, *seed, *trimmed, output)),
        Command::Decompose { mesh, form, output, weights } => ("decompose", cmd_decompose(mesh, form, output, weights, exec)),
        Command::Verify { mesh, form, level, seed, points, weights } => {
            let opts = VerifyOptions { level: *level, seed: *seed, points: *points };
            ("verify", cmd_verify(mesh, form, &opts, weights, exec))
        }
        Command::Oracle { mesh, form, m, points, seed, weights } => ("oracle", cmd_oracle(mesh, form, *m, *points, *seed, weights, exec)),
        Command::Stability { mesh, k, degree, trials, seed, weights } => {
            ("stability", cmd_stability(mesh, *k, *degree, *trials, *seed, weights, exec))
        }
    }
}

fn load_mesh(path: &Path) -> std::result::Result<Mesh, Failure> {
    io::read_mesh(path).map_err(|e| match e {
        Error::NotADecomposition(_) => Failure::NotADecomposition(format!("{}: {e}", path.display())),
        Error::Io(_) | Error::Parse(_) => Failure::Usage(format!("{}: {e}", path.display())),
        other => Failure::from(other),
    })
}

fn load_weights(mesh: &Mesh, arg: &WeightsArg, exec: &Exec) -> std::result::Result<WeightSystem, Failure> {
    match &arg.weights {
        Some(p) => {
            let ws = io::read_weights(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            if ws.dim() != mesh.dim() {
                return Err(Failure::Usage(format!("{}: weights for dimension {} on a {}-dimensional mesh", p.display(), ws.dim(), mesh.dim())));
            }
            Ok(ws)
        }
        None => Ok(WeightSystem::build_with(mesh, exec)?),
    }
}

fn load_form(mesh: &Mesh, path: &Path) -> std::result::Result<PiecewiseForm, Failure> {
    io::read_form(mesh, path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn base_report(mesh: &Mesh, ws: Option<&WeightSystem>) -> Value {
    json!({
        "mesh_hash": io::mesh_hash(mesh),
        "weights_hash": ws.map(io::weights_hash),
    })
}

fn cmd_info(path: &Path) -> CmdResult {
    let mesh = load_mesh(path)?;
    let n = mesh.dim() as isize;
    let counts: Vec<usize> = (0..=n).map(|d| mesh.simplices(d).len()).collect();
    let mut lines = vec![format!("dimension {n}, {} vertices, {} cells", mesh.num_vertices(), mesh.num_cells())];
    lines.push(counts.iter().enumerate().map(|(d, c)| format!("|Δ_{d}|={c}")).collect::<Vec<_>>().join(", "));
    let interior: Vec<String> = mesh.simplices(n - 1).iter().filter(|g| mesh.star(g).len() == 2).map(|g| g.to_string()).collect();
    lines.push(format!("interior faces: {}", interior.join(" ")));
    let mut links = Vec::new();
    for d in 0..n {
        for f in mesh.simplices(d) {
            let l = mesh.link(f)?;
            lines.push(format!("link {f}: dim {}, {} vertices, star of {} cells", l.dim, l.size(), mesh.star(f).len()));
            links.push(json!({ "simplex": f.to_string(), "link_dim": l.dim, "link_vertices": l.size(), "star": mesh.star(f).len() }));
        }
    }
    let st = mesh.shape_stats();
    lines.push(format!("shape constant {:.6}, h_f in [{:.6}, {:.6}], max overlap {}", st.shape_constant, st.h_min, st.h_max, st.max_overlap));
    let mut report = base_report(&mesh, None);
    report["counts"] = json!(counts);
    report["interior_faces"] = json!(interior);
    report["links"] = Value::Array(links);
    report["shape"] = serde_json::to_value(&st).unwrap_or(Value::Null);
    Ok(Outcome { report, checks: Checklist::new(), lines })
}

fn cmd_weights(path: &Path, output: Option<&Path>, certify: bool, exec: &Exec) -> CmdResult {
    let mesh = load_mesh(path)?;
    let t = Instant::now();
    let ws = WeightSystem::build_with(&mesh, exec)?;
    let build_secs = t.elapsed().as_secs_f64();
    let hash = match output {
        Some(o) => io::write_weights(o, &ws)?,
        None => io::weights_hash(&ws),
    };
    let mut lines = vec![format!("weights hash {hash} ({build_secs:.2} s)")];
    let mut report = base_report(&mesh, Some(&ws));
    report["build_seconds"] = json!(build_secs);
    let mut checks = Checklist::new();
    if certify {
        let wr = certify_weight_system(&mesh, &ws);
        lines.push(format!("max |w| {:.6}, max |z| {:.6}", wr.max_w_coeff, wr.max_z_coeff));
        for (b, c) in &wr.branches {
            lines.push(format!("solve branch {b}: {c}"));
        }
        report["max_w_coeff"] = json!(wr.max_w_coeff);
        report["max_z_coeff"] = json!(wr.max_z_coeff);
        report["branches"] = json!(wr.branches);
        checks = wr.checks;
    }
    Ok(Outcome { report, checks, lines })
}

fn cmd_gen(path: &Path, k: usize, degree: u32, seed: u64, trimmed: bool, output: &Path) -> CmdResult {
    let mesh = load_mesh(path)?;
    if k > mesh.dim() {
        return Err(Failure::Usage(format!("k = {k} exceeds the mesh dimension {}", mesh.dim())));
    }
    if degree == 0 {
        return Err(Failure::Usage("degree must be at least 1".into()));
    }
    let u = Sampler::new(seed).form(&mesh, k, degree, trimmed);
    let space = if trimmed { Space::Trimmed(degree) } else { Space::Full(degree) };
    let mut checks = Checklist::new();
    checks.record("membership", u.membership(space), || format!("sample is not in {space:?}"));
    let conf = u.conformity_check(&mesh);
    checks.record("conforming", conf.conforming, || format!("traces disagree on {}", conf.witness.clone().unwrap()));
    if checks.all_passed() {
        io::write_form(output, &mesh, &u)?;
    }
    let mut report = base_report(&mesh, None);
    report["k"] = json!(k);
    report["degree"] = json!(degree);
    report["trimmed"] = json!(trimmed);
    report["seed"] = json!(seed);
    report["output"] = json!(output.display().to_string());
    let lines = vec![format!("wrote {} (k={k}, degree {degree}, seed {seed})", output.display())];
    Ok(Outcome { report, checks, lines })
}

fn cmd_decompose(mesh_path: &Path, form_path: &Path, out: &Path, warg: &WeightsArg, exec: &Exec) -> CmdResult {
    let mesh = load_mesh(mesh_path)?;
    let u = load_form(&mesh, form_path)?;
    let ws = load_weights(&mesh, warg, exec)?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    let mut report = base_report(&mesh, Some(&ws));
    report["k"] = json!(u.degree());
    let mut checks = Checklist::new();
    let conf = u.conformity_check(&mesh);
    checks.record(verify::INPUT, conf.conforming, || format!("traces disagree on face {}", conf.witness.clone().unwrap()));
    let t = Transform::with_exec(&mesh, &ws, exec.clone());
    let mut lines = Vec::new();
    let (residual_zero, trace_zero, files) = if conf.conforming {
        match t.decompose(&u) {
            Ok(d) => {
                let mut files = Vec::new();
                io::write_form(out.join("W.form"), &mesh, &d.w_part)?;
                for (f, b) in &d.bubbles {
                    let name = format!("B_{}.form", f.label());
                    io::write_form(out.join(&name), &mesh, b)?;
                    files.push(json!({ "simplex": f.to_string(), "file": name, "zero": b.is_zero() }));
                }
                let n = mesh.dim() as isize;
                let mut lower = u.sub(&d.w_part);
                for (f, b) in &d.bubbles {
                    if f.dim() < n {
                        lower = lower.sub(b);
                    }
                }
                let face = nonzero_trace_face(&mesh, &lower);
                checks.record(verify::TRACE, face.is_none(), || format!("nonzero trace on {}", face.clone().unwrap()));
                checks.record(verify::IDENTITY, d.residual_is_zero(), || "u − W − Σ B_f is nonzero".into());
                lines.push(format!("wrote W.form and {} bubble files to {}", d.bubbles.len(), out.display()));
                (d.residual_is_zero(), face.is_none(), files)
            }
            Err(Error::ConstructionFailed(msg)) => {
                checks.fail(verify::TRACE, msg);
                (false, false, Vec::new())
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        (false, false, Vec::new())
    };
    report["residual_zero"] = json!(residual_zero);
    report["trace_zero"] = json!(trace_zero);
    report["W"] = json!(if files.is_empty() { Value::Null } else { json!("W.form") });
    report["bubbles"] = Value::Array(files);
    let manifest = serde_json::to_string_pretty(&report).map_err(|e| Failure::Check(e.to_string()))?;
    std::fs::write(out.join("manifest.json"), manifest).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(Outcome { report, checks, lines })
}

fn cmd_verify(mesh_path: &Path, form_path: &Path, opts: &VerifyOptions, warg: &WeightsArg, exec: &Exec) -> CmdResult {
    let mesh = load_mesh(mesh_path)?;
    let u = load_form(&mesh, form_path)?;
    let ws = load_weights(&mesh, warg, exec)?;
    let checks = verify::verify(&mesh, &ws, &u, opts, exec);
    let mut report = base_report(&mesh, Some(&ws));
    report["seed"] = json!(opts.seed);
    report["level"] = json!(if opts.level == Level::Quick { "quick" } else { "full" });
    report["k"] = json!(u.degree());
    Ok(Outcome { report, checks, lines: Vec::new() })
}

fn show_point(x: &[bubblex::rational::Q]) -> String {
    format!("({})", x.iter().map(fmt_q).collect::<Vec<_>>().join(", "))
}

fn show_form(f: &Form) -> Value {
    let mut map = serde_json::Map::new();
    for (mask, c) in f.constant_coeffs() {
        map.insert(bubblex::form::mask_indices(mask).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","), json!(fmt_q(&c)));
    }
    Value::Object(map)
}

fn cmd_oracle(mesh_path: &Path, form_path: &Path, m: usize, points: usize, seed: u64, warg: &WeightsArg, exec: &Exec) -> CmdResult {
    let mesh = load_mesh(mesh_path)?;
    let n = mesh.dim();
    if m >= n {
        return Err(Failure::Usage(format!("--m must be below the mesh dimension {n}")));
    }
    let u = load_form(&mesh, form_path)?;
    u.require_conforming(&mesh)?;
    let ws = load_weights(&mesh, warg, exec)?;
    let t = Transform::with_exec(&mesh, &ws, exec.clone());
    let (tu, tdu) = t.tables(&u)?;
    let mut ks = Vec::new();
    let anchors: Vec<_> = mesh.simplices(m as isize).iter().chain(if m >= 1 { mesh.simplices(m as isize - 1) } else { &[] }).cloned().collect();
    for f in &anchors {
        ks.push(t.k_op(m, f, &tu, tdu.as_ref())?);
    }
    let w = if m == 0 { Some(t.w_part(&tu)?) } else { None };
    let mut smp = Sampler::new(seed);
    let mut checks = Checklist::new();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for _ in 0..points {
        let cell = smp.index(mesh.num_cells());
        let x = smp.interior_point(&mesh, cell);
        let c_m = t.c_m_at(&tu, m, cell, &x)?;
        let prev = match &w {
            Some(w) => w.eval(cell, &x),
            None => t.c_m_at(&tu, m - 1, cell, &x)?,
        };
        let mut sum = Form::zero(n, u.degree());
        for k in &ks {
            sum.add_assign(&k.eval(cell, &x));
        }
        let diff = c_m.sub(&prev);
        let ok = diff == sum;
        checks.record("oracle.telescoping", ok, || format!("m={m} cell={cell} x={}", show_point(&x)));
        lines.push(format!("{} x={} cell {cell}", if ok { "match" } else { "MISMATCH" }, show_point(&x)));
        rows.push(json!({ "cell": cell, "x": x.iter().map(fmt_q).collect::<Vec<_>>(), "c_m": show_form(&c_m), "difference": show_form(&diff), "k_sum": show_form(&sum), "match": ok }));
    }
    let mut report = base_report(&mesh, Some(&ws));
    report["m"] = json!(m);
    report["seed"] = json!(seed);
    report["points"] = Value::Array(rows);
    Ok(Outcome { report, checks, lines })
}

fn cmd_stability(mesh_path: &Path, k: usize, degree: u32, trials: usize, seed: u64, warg: &WeightsArg, exec: &Exec) -> CmdResult {
    let mesh = load_mesh(mesh_path)?;
    if k > mesh.dim() || degree == 0 || trials == 0 {
        return Err(Failure::Usage("need k ≤ n, degree ≥ 1 and trials ≥ 1".into()));
    }
    let ws = load_weights(&mesh, warg, exec)?;
    let rep = stability_report(&mesh, &ws, k, degree, trials, seed, exec)?;
    let mut checks = Checklist::new();
    checks.record("finite", rep.bubble_ratios.iter().chain(&rep.w_ratios).all(|r| r.is_finite()), || "non-finite norm ratio".into());
    let lines = vec![
        format!("bubbles: max {:.6}, median {:.6}", rep.bubble.max, rep.bubble.median),
        format!("W: max {:.6}, median {:.6}", rep.w.max, rep.w.median),
    ];
    let mut report = base_report(&mesh, Some(&ws));
    report["seed"] = json!(seed);
    report["stability"] = serde_json::to_value(&rep).unwrap_or(Value::Null);
    Ok(Outcome { report, checks, lines })
}
