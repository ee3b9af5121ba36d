use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fifthflow_core::calculus::{euler, Flow};
use fifthflow_core::catalog::{self, CatalogEntry, Expected};
use fifthflow_core::hamiltonian::{
    flow_of, transform_dilate, transform_galilean, transform_point, transform_shift, Hamiltonian,
    PointTransformation, ShiftKind,
};
use fifthflow_core::integrability::{
    check_conditions, check_conditions_parametric, is_symmetry, CheckOptions, ConditionReport,
};
use fifthflow_core::parse::{line_col, parse_document, Document};
use fifthflow_core::{var, Error, Expr, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const DEFAULT_SEED: u64 = 20_240_229;

#[derive(Parser)]
#[command(
    name = "fifthflow",
    version,
    about = "Integrability checks for fifth-order Hamiltonian evolution equations"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the flow u_t = D_x(δH/δu) of a Hamiltonian file.
    Derive { file: PathBuf },
    /// Run the integrability conditions on a `.ham` or `.flow` file.
    Check {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Test whether two flows commute.
    Symmetry { f: PathBuf, g: PathBuf },
    /// Apply a transformation to a Hamiltonian, e.g. "galilean c=2",
    /// "dilate alpha=1 beta=2 gamma=3", "shift linear c=1",
    /// "shift quadratic c1=1 c2=0", "point phi=2*x psi=u/2".
    Transform { file: PathBuf, spec: String },
    /// Browse and verify the built-in catalog.
    Catalog {
        #[command(subcommand)]
        cmd: CatalogCmd,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// List entries with their slots and expected status.
    List,
    /// Check one entry, or every entry with --all.
    Check {
        id: Option<String>,
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Highest condition index to check (-1..=11).
    #[arg(long, default_value_t = 1, allow_negative_numbers = true, value_parser = clap::value_parser!(i32).range(-1..=11))]
    max_n: i32,
    /// Parameter bindings, e.g. `k=1 c0=1/2` or `k=1,c0=1/2`.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    params: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seconds after which remaining conditions are reported not-checked.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Worker threads for `catalog check --all`.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Seed for the bindings drawn for unbound catalog slots.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Include per-condition timings in the output.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

/// Error carrying the process exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail {
            code: 2,
            msg: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail {
        code: 2,
        msg: msg.into(),
    }
}

type Out = Result<(String, u8), Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Cmd) -> Out {
    match cmd {
        Cmd::Derive { file } => cmd_derive(&file),
        Cmd::Check { file, run } => cmd_check(&file, &run),
        Cmd::Symmetry { f, g } => cmd_symmetry(&f, &g),
        Cmd::Transform { file, spec } => cmd_transform(&file, &spec),
        Cmd::Catalog {
            cmd: CatalogCmd::List,
        } => Ok((cmd_catalog_list(), 0)),
        Cmd::Catalog {
            cmd: CatalogCmd::Check { id, all, run },
        } => match (id, all) {
            (None, true) => cmd_catalog_all(&run),
            (Some(id), false) => cmd_catalog_check(&id, &run),
            _ => Err(usage("give either an entry id or --all")),
        },
    }
}

fn read_document(path: &Path) -> Result<Document, Fail> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| {
        let pos = match &e {
            Error::Syntax { pos, .. } | Error::UnknownIdentifier { pos, .. } => Some(*pos),
            _ => None,
        };
        match pos {
            Some(p) => {
                let (l, c) = line_col(&text, p);
                usage(format!("{}:{l}:{c}: {e}", path.display()))
            }
            None => usage(format!("{}: {e}", path.display())),
        }
    })
}

fn parse_bindings(items: &[String]) -> Result<Vec<(String, Q)>, Fail> {
    let mut out = Vec::new();
    for it in items.iter().flat_map(|s| s.split_whitespace()) {
        let (k, v) = it
            .split_once('=')
            .ok_or_else(|| usage(format!("binding `{it}` is not of the form name=value")))?;
        let q: Q = v.parse().map_err(usage)?;
        out.push((k.trim().to_string(), q));
    }
    Ok(out)
}

fn is_flow_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "flow")
}

/// Binds what is given; the remaining parameters stay symbolic.
fn bind_document(doc: &Document, bindings: &[(String, Q)]) -> Result<(Expr, Vec<String>), Fail> {
    let mut vals = Vec::new();
    for (k, v) in bindings {
        if !doc.params.contains(k) {
            return Err(usage(format!("file declares no parameter `{k}`")));
        }
        vals.push((var::param(k)?, v.clone()));
    }
    let free = doc
        .params
        .iter()
        .filter(|p| !bindings.iter().any(|(k, _)| k == *p))
        .cloned()
        .collect();
    Ok((doc.expr.bind(&vals)?, free))
}

fn load_flow(path: &Path, bindings: &[(String, Q)]) -> Result<(Flow, Vec<String>), Fail> {
    let doc = read_document(path)?;
    let (e, free) = bind_document(&doc, bindings)?;
    let f = if is_flow_file(path) {
        Flow::new(e)?
    } else {
        flow_of(&Hamiltonian::new(e)?)?
    };
    Ok((f, free))
}

fn options(run: &RunArgs) -> CheckOptions {
    CheckOptions {
        time_budget: run.time_budget.map(Duration::from_secs_f64),
    }
}

fn render(rep: &ConditionReport, run: &RunArgs) -> String {
    match run.format {
        Format::Text => rep.render_text(run.timing),
        Format::Machine => rep.render_machine(run.timing),
    }
}

fn run_checks(id: &str, f: &Flow, free: &[String], run: &RunArgs) -> Result<ConditionReport, Fail> {
    if f.order != 5 {
        return Err(usage(format!(
            "conditions need a fifth-order flow, got order {}",
            f.order
        )));
    }
    let opts = options(run);
    Ok(if free.is_empty() {
        check_conditions(id, f, run.max_n, &opts)?
    } else {
        let params: Vec<_> = free
            .iter()
            .map(|p| var::param(p))
            .collect::<Result<_, _>>()?;
        check_conditions_parametric(id, f, &params, run.max_n, &opts)?
    })
}

fn exit_of(rep: &ConditionReport) -> u8 {
    if rep.all_pass() {
        0
    } else {
        1
    }
}

fn file_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_derive(path: &Path) -> Out {
    let doc = read_document(path)?;
    let h = Hamiltonian::new(doc.expr)?;
    let f = flow_of(&h)?;
    let e = euler(&h.h)?;
    Ok((format!("flow: {}\nconservative: D1({})\n", f.rhs, e), 0))
}

fn cmd_check(path: &Path, run: &RunArgs) -> Out {
    let bindings = parse_bindings(&run.params)?;
    let (f, free) = load_flow(path, &bindings)?;
    let rep = run_checks(&file_id(path), &f, &free, run)?;
    Ok((render(&rep, run), exit_of(&rep)))
}

fn cmd_symmetry(pf: &Path, pg: &Path) -> Out {
    let (f, _) = load_flow(pf, &[])?;
    let (g, _) = load_flow(pg, &[])?;
    let (yes, c) = is_symmetry(&f.rhs, &g.rhs)?;
    if yes {
        Ok(("commute: yes\n".into(), 0))
    } else {
        Ok((format!("commute: no\ncommutator: {c}\n"), 1))
    }
}

/// Splits `kind key=value key=value` where values may contain spaces.
fn parse_spec(spec: &str) -> Result<(Vec<String>, Vec<(String, String)>), Fail> {
    let mut words = Vec::new();
    let mut kv: Vec<(String, String)> = Vec::new();
    for tok in spec.split_whitespace() {
        match tok.split_once('=') {
            Some((k, v))
                if !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') =>
            {
                kv.push((k.to_string(), v.to_string()));
            }
            _ => match kv.last_mut() {
                Some((_, v)) => {
                    v.push(' ');
                    v.push_str(tok);
                }
                None => words.push(tok.to_string()),
            },
        }
    }
    Ok((words, kv))
}

fn take_q(kv: &[(String, String)], key: &str) -> Result<Q, Fail> {
    let v = kv
        .iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| usage(format!("missing `{key}=`")))?;
    v.1.parse().map_err(usage)
}

fn take_expr(kv: &[(String, String)], key: &str) -> Result<Expr, Fail> {
    let v = kv
        .iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| usage(format!("missing `{key}=`")))?;
    fifthflow_core::parse(&v.1).map_err(|e| usage(format!("{key}: {e}")))
}

fn cmd_transform(path: &Path, spec: &str) -> Out {
    let doc = read_document(path)?;
    let h = Hamiltonian::new(doc.expr)?;
    let (words, kv) = parse_spec(spec)?;
    let words: Vec<&str> = words.iter().map(String::as_str).collect();
    let ht = match words.as_slice() {
        ["galilean"] => transform_galilean(&h, &take_q(&kv, "c")?)?,
        ["dilate"] => transform_dilate(
            &h,
            &take_q(&kv, "alpha")?,
            &take_q(&kv, "beta")?,
            &take_q(&kv, "gamma")?,
        )?,
        ["shift", "linear"] => transform_shift(&h, &ShiftKind::Linear(take_q(&kv, "c")?))?,
        ["shift", "quadratic"] => transform_shift(
            &h,
            &ShiftKind::Quadratic(take_q(&kv, "c1")?, take_q(&kv, "c2")?),
        )?,
        ["point"] => {
            let t = PointTransformation::new(take_expr(&kv, "phi")?, take_expr(&kv, "psi")?)?;
            transform_point(&h, &t)?
        }
        _ => return Err(usage(format!("unknown transformation `{spec}`"))),
    };
    let mut out = format!("H: {}\n", ht.h);
    if let Some(f) = &ht.conformal {
        out.push_str(&format!("conformal factor: {f}\n"));
    }
    Ok((out, 0))
}

fn cmd_catalog_list() -> String {
    let mut s = String::new();
    for sp in catalog::specs() {
        let slots = if sp.slots.is_empty() {
            "-".to_string()
        } else {
            sp.slots.join(",")
        };
        let pair = sp.pairs_with.as_deref().unwrap_or("-");
        s.push_str(&format!(
            "{:<14} {:<18} {:<40} pairs={:<12} {}\n",
            sp.id,
            slots,
            sp.expected.describe(),
            pair,
            sp.note
        ));
    }
    s
}

fn cmd_catalog_check(id: &str, run: &RunArgs) -> Out {
    let bindings = parse_bindings(&run.params)?;
    let t = catalog::template(id)?;
    for (k, _) in &bindings {
        if !t.spec.slots.contains(k) {
            return Err(usage(format!("entry {id} has no slot `{k}`")));
        }
    }
    let e = catalog::bind(t, &bindings)?;
    let f = e.flow()?;
    let mut out = String::new();
    let mut code = 0;
    if f.order == 5 {
        let rep = run_checks(e.id(), &f, &e.free, run)?;
        out.push_str(&render(&rep, run));
        code = exit_of(&rep);
    } else {
        out.push_str(&format!("flow {} has order {}\n", e.id(), f.order));
    }
    if e.free.is_empty() {
        let verdict = match catalog::audit(&e, run.max_n, &options(run))? {
            None => "consistent".to_string(),
            Some(d) => format!("discrepancy: {}", d.observed),
        };
        out.push_str(&format!(
            "expected {}: {verdict}\n",
            e.expected().describe()
        ));
    }
    Ok((out, code))
}

fn draw(seed: u64, index: usize, slots: &[String]) -> Vec<(String, Q)> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    slots
        .iter()
        .map(|s| {
            let n = rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 };
            (s.clone(), Q::new(n, rng.gen_range(1..=3)))
        })
        .collect()
}

fn audit_line(
    e: &CatalogEntry,
    run: &RunArgs,
) -> Result<(String, Option<catalog::Discrepancy>), Error> {
    let d = catalog::audit(e, run.max_n, &options(run))?;
    let b: Vec<String> = e.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let status = if d.is_some() { "quarantine" } else { "ok" };
    Ok((
        format!(
            "{:<14} {:<10} [{}] {}\n",
            e.id(),
            status,
            b.join(" "),
            e.expected().describe()
        ),
        d,
    ))
}

fn cmd_catalog_all(run: &RunArgs) -> Out {
    let specs: Vec<_> = catalog::specs()
        .into_iter()
        .filter(|s| s.expected != Expected::Family)
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.threads.max(1))
        .build()
        .map_err(|e| usage(e.to_string()))?;
    let results: Vec<Result<(String, Option<catalog::Discrepancy>), Error>> = pool.install(|| {
        specs
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let e = catalog::get(&s.id, &draw(run.seed, i, &s.slots))?;
                audit_line(&e, run)
            })
            .collect()
    });
    let mut out = String::new();
    let mut found = Vec::new();
    for r in results {
        let (line, d) = r?;
        out.push_str(&line);
        found.extend(d);
    }
    out.push_str(&catalog::quarantine_report(&found));
    Ok((out, if found.is_empty() { 0 } else { 1 }))
}
