//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or input error.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cosets::{self, Coset};
use crate::error::{Error, Result};
use crate::finite_group::{resolve_group, Group};
use crate::fock;
use crate::report::{Check, Report};
use crate::sampling;
use crate::suites::{self, Tolerances};
use crate::thoma::{self, ThomaParams};
use crate::typeiii::{self, ProbMatrix};
use crate::wreath::{parse_element, Permutation, WreathElement};

pub const THREADS_ENV: &str = "WREATH_LAB_THREADS";
const MAX_SAMPLE_SUPPORT: usize = 6;

#[derive(Parser, Debug)]
#[command(name = "wreath-lab", version, about = "Characters of Γ≀S∞: evaluation, realization checks, coset diagrams")]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the character φ on elements.
    Eval(EvalArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
    /// Cross-check the closed formula against the tensor-product realization.
    Realize(RealizeArgs),
    /// Double-coset diagrams: θ, products, involution.
    Cosets(CosetArgs),
    /// The ℤ₂×ℤ₂ product-measure example and its modular operator.
    Type3(Type3Args),
    /// Write the DOT drawing of a diagram.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
pub struct ParamSource {
    /// Params file (JSON).
    #[arg(long, conflicts_with = "standard")]
    pub params: Option<PathBuf>,
    /// Use the built-in ℤ₂ parameters α = (0.5, sign), β = (0.25, trivial), regular tr₀.
    #[arg(long)]
    pub standard: bool,
    /// Group name or group file, overriding the params file's "group".
    #[arg(long)]
    pub group: Option<String>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: ParamSource,
    /// Element such as "(1 2 3)[1:g]"; repeatable.
    #[arg(long = "element", required = true)]
    pub elements: Vec<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// all, or one of characters, conjugacy, identities, okounkov, cosets, type3.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override NAME=VALUE; repeatable.
    #[arg(long = "tol")]
    pub tol: Vec<String>,
}

#[derive(Args, Debug)]
pub struct RealizeArgs {
    #[command(flatten)]
    pub source: ParamSource,
    /// Elements to check; if none are given, random elements are sampled.
    #[arg(long = "element")]
    pub elements: Vec<String>,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Support of sampled elements (at most 6).
    #[arg(long, default_value_t = 4)]
    pub support: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report Okounkov moments q = 1, 2 on this many sites.
    #[arg(long)]
    pub moments: Option<usize>,
    /// Tolerance override NAME=VALUE; repeatable.
    #[arg(long = "tol")]
    pub tol: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CosetOp {
    Theta,
    Mult,
    Involution,
}

#[derive(Args, Debug)]
pub struct CosetArgs {
    #[arg(long, value_enum, default_value_t = CosetOp::Theta)]
    pub op: CosetOp,
    #[arg(long)]
    pub n: usize,
    /// Base group name or file.
    #[arg(long, default_value = "s3")]
    pub group: String,
    /// Pair "a | b", or a single element g standing for (e, g).
    #[arg(long)]
    pub g: String,
    #[arg(long)]
    pub h: Option<String>,
    /// Also write the resulting diagram as DOT.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Type3Op {
    Lr,
    Cyclic,
    Modular,
    Kms,
    All,
}

#[derive(Args, Debug)]
pub struct Type3Args {
    /// p00 p01 p10 p11
    #[arg(long, num_args = 4, allow_negative_numbers = true, conflicts_with = "p_json")]
    pub p: Option<Vec<f64>>,
    /// {"p": [[p00, p01], [p10, p11]]}, inline or as a file path.
    #[arg(long)]
    pub p_json: Option<String>,
    #[arg(long, value_enum, default_value_t = Type3Op::All)]
    pub op: Type3Op,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Permutation s for the kms check.
    #[arg(long, default_value = "(1 2)")]
    pub s: String,
    /// ℤ₂ element g for the kms check.
    #[arg(long, default_value = "(2 3)[1:g]")]
    pub g: String,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "s3")]
    pub group: String,
    #[arg(long)]
    pub g: String,
    /// If given, render the product of the cosets of g and h.
    #[arg(long)]
    pub h: Option<String>,
}

/// Runs the CLI on `args` (program name first), writing to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(Output::Report(report)) => {
            let body = match cli.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json(),
            };
            if let Err(e) = emit(&cli, &body, out) {
                let _ = writeln!(err, "error: {e}");
                return 2;
            }
            if report.passed() { 0 } else { 1 }
        }
        Ok(Output::Raw(body)) => match emit(&cli, &body, out) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                2
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

enum Output {
    Report(Report),
    Raw(String),
}

fn emit(cli: &Cli, body: &str, out: &mut dyn Write) -> Result<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, body).map_err(|e| Error::Config(format!("output: {}: {e}", path.display()))),
        None => out.write_all(body.as_bytes()).map_err(|e| Error::Config(format!("output: {e}"))),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV}: expected a positive integer, got '{v}'")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("{THREADS_ENV}: {e}")))
}

fn execute(cli: &Cli) -> Result<Output> {
    let pool = thread_pool()?;
    pool.install(|| match &cli.command {
        Command::Eval(a) => eval(a).map(Output::Report),
        Command::Verify(a) => verify(a).map(Output::Report),
        Command::Realize(a) => realize(a).map(Output::Report),
        Command::Cosets(a) => coset_cmd(a).map(Output::Report),
        Command::Type3(a) => type3(a).map(Output::Report),
        Command::Render(a) => render(a).map(Output::Raw),
    })
}

fn load_params(src: &ParamSource) -> Result<ThomaParams> {
    let group = match &src.group {
        Some(r) => Some(Arc::new(resolve_group(r).map_err(|e| Error::Config(format!("group: {e}")))?)),
        None => None,
    };
    if src.standard {
        let p = thoma::standard_z2_params();
        if let Some(g) = group {
            if !crate::wreath::same_group(&g, p.group()) {
                return Err(Error::Config("group: --standard fixes Γ = ℤ₂".into()));
            }
        }
        return Ok(p);
    }
    let path = src.params.as_ref().ok_or_else(|| Error::Config("params: pass --params FILE or --standard".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("params: {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("params: {}: {e}", path.display())))?;
    thoma::params_from_json(&v, group)
}

fn element(text: &str, group: &Arc<Group>, field: &str) -> Result<WreathElement> {
    parse_element(text, group).map_err(|e| Error::Config(format!("{field}: '{text}': {e}")))
}

fn tolerances(items: &[String]) -> Result<Tolerances> {
    let mut t = Tolerances::default();
    for item in items {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::Config(format!("tol: expected NAME=VALUE, got '{item}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("tol: '{v}' is not a number")))?;
        t.set(k.trim(), v)?;
    }
    Ok(t)
}

fn complex_json(z: num_complex::Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn eval(a: &EvalArgs) -> Result<Report> {
    let p = load_params(&a.source)?;
    let mut r = Report::new("eval");
    r.result("params", p.to_json());
    let mut values = Vec::new();
    for text in &a.elements {
        let g = element(text, p.group(), "element")?;
        let v = thoma::evaluate(&p, &g)?;
        values.push(json!({"element": g.format(), "value": complex_json(v)}));
    }
    r.result("values", values);
    Ok(r)
}

fn verify(a: &VerifyArgs) -> Result<Report> {
    let tol = tolerances(&a.tol)?;
    let mut r = Report::new(format!("verify {}", a.suite)).with_seed(a.seed);
    for c in suites::run_suite(&a.suite, a.seed, &tol)? {
        r.push(c);
    }
    Ok(r)
}

fn realize(a: &RealizeArgs) -> Result<Report> {
    let p = load_params(&a.source)?;
    let tol = tolerances(&a.tol)?;
    if a.support == 0 || a.support > MAX_SAMPLE_SUPPORT {
        return Err(Error::Config(format!("support: must lie in 1..={MAX_SAMPLE_SUPPORT}, got {}", a.support)));
    }
    let mut r = Report::new("realize").with_seed(a.seed);
    let elems: Vec<WreathElement> = if a.elements.is_empty() {
        let mut rng = sampling::rng(a.seed);
        (0..a.samples)
            .map(|_| {
                let s = rng.gen_range(1..=a.support);
                sampling::random_element(&mut rng, p.group(), s)
            })
            .collect()
    } else {
        a.elements.iter().map(|t| element(t, p.group(), "element")).collect::<Result<_>>()?
    };
    let rows: Vec<Result<(f64, Value)>> = elems
        .par_iter()
        .map(|g| {
            let closed = thoma::evaluate(&p, g)?;
            let realized = fock::matrix_element(&p, g, g.max_support().max(1))?;
            let d = (closed - realized).norm();
            Ok((d, json!({"element": g.format(), "formula": complex_json(closed), "realization": complex_json(realized), "abs_diff": d})))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|(d, _)| *d).fold(0.0, f64::max);
    r.result("elements", rows.into_iter().map(|(_, v)| v).collect::<Vec<_>>());
    r.push(Check::at_most("max |formula - realization|", worst, tol.get("oracle")));
    if let Some(n) = a.moments {
        for q in 1..=2 {
            let m = fock::moment_check(&p, 1, q, n)?;
            r.result(&format!("moment_q{q}"), json!({"n": n, "measured": m.measured, "predicted": m.predicted}));
            r.push(Check::at_most(format!("moment q={q} gap at n={n}"), m.gap, tol.get("moment") / n as f64));
        }
    }
    Ok(r)
}

fn coset_inputs(group: &str, g: &str, h: Option<&String>) -> Result<(Arc<Group>, cosets::PairElement, Option<cosets::PairElement>)> {
    let grp = Arc::new(resolve_group(group).map_err(|e| Error::Config(format!("group: {e}")))?);
    let pg = cosets::parse_pair(g, &grp).map_err(|e| Error::Config(format!("g: '{g}': {e}")))?;
    let ph = h.map(|t| cosets::parse_pair(t, &grp).map_err(|e| Error::Config(format!("h: '{t}': {e}")))).transpose()?;
    Ok((grp, pg, ph))
}

fn coset_cmd(a: &CosetArgs) -> Result<Report> {
    let (grp, pg, ph) = coset_inputs(&a.group, &a.g, a.h.as_ref())?;
    let mut r = Report::new(format!("cosets {:?}", a.op).to_lowercase());
    let cg = Coset::new(pg, a.n)?;
    let diagram = match a.op {
        CosetOp::Theta => cg.diagram.clone(),
        CosetOp::Involution => {
            let inv = cosets::involution(&cg)?;
            r.result("representative", inv.rep.format());
            inv.diagram
        }
        CosetOp::Mult => {
            let ph = ph.ok_or_else(|| Error::Config("h: --op mult needs --h".into()))?;
            let ch = Coset::new(ph, a.n)?;
            let pasted = cosets::mult_diagram(&cg.diagram, &ch.diagram, &grp)?;
            let via_reps = cosets::mult_repr(&cg, &ch)?;
            r.result("representative", via_reps.rep.format());
            r.push(Check::holds("diagram product = representative product", pasted == via_reps.diagram));
            pasted
        }
    };
    r.push(Check::holds("diagram sectors admissible", diagram.sectors_ok()));
    r.result("diagram", diagram.to_json(&grp));
    if let Some(path) = &a.dot {
        std::fs::write(path, cosets::to_dot(&diagram, &grp)).map_err(|e| Error::Config(format!("dot: {}: {e}", path.display())))?;
    }
    Ok(r)
}

fn render(a: &RenderArgs) -> Result<String> {
    let (grp, pg, ph) = coset_inputs(&a.group, &a.g, a.h.as_ref())?;
    let cg = Coset::new(pg, a.n)?;
    let d = match ph {
        Some(h) => cosets::mult_diagram(&cg.diagram, &Coset::new(h, a.n)?.diagram, &grp)?,
        None => cg.diagram,
    };
    Ok(cosets::to_dot(&d, &grp))
}

fn prob_matrix(a: &Type3Args) -> Result<ProbMatrix> {
    let field = |e: Error| Error::Config(format!("p: {e}"));
    if let Some(v) = &a.p {
        return ProbMatrix::from_flat([v[0], v[1], v[2], v[3]]).map_err(field);
    }
    let src = a.p_json.as_ref().ok_or_else(|| Error::Config("p: pass --p P00 P01 P10 P11 or --p-json".into()))?;
    let text = if src.trim_start().starts_with('{') {
        src.clone()
    } else {
        std::fs::read_to_string(src).map_err(|e| Error::Config(format!("p-json: {src}: {e}")))?
    };
    ProbMatrix::from_json(&text).map_err(field)
}

fn type3(a: &Type3Args) -> Result<Report> {
    let p = prob_matrix(a)?;
    if a.n == 0 || a.n > 3 {
        return Err(Error::Config(format!("n: must lie in 1..=3, got {}", a.n)));
    }
    let tol = Tolerances::default();
    let mut r = Report::new("type3");
    r.result("p", json!(p.entries()));
    r.result("det", p.det());
    r.result("strictly_positive", p.strictly_positive());
    let all = a.op == Type3Op::All;
    if all || a.op == Type3Op::Lr {
        let lr = typeiii::iso_and_lr(&p)?;
        let m2 = |m: &nalgebra::Matrix2<f64>| json!([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]);
        r.result("xi_site", m2(&lr.j));
        r.result("l_form", m2(&lr.l_form));
        r.result("r_form", m2(&lr.r_form));
        r.push(Check::at_most("lr identities", lr.max_residual(), tol.get("lr")));
    }
    if all || a.op == Type3Op::Cyclic {
        let c = typeiii::cyclic_separating_check(&p, a.n)?;
        r.result("cyclic", json!({"n": c.n, "full_dim": c.full_dim, "left_dim": c.left_dim, "right_dim": c.right_dim, "cyclic": c.cyclic, "separating": c.separating}));
        r.push(Check::holds("cyclic/separating verdict matches det", c.verdict_matches_det()));
    }
    if all || a.op == Type3Op::Modular {
        if p.nonzero_det() {
            let m = typeiii::modular_operator(&p, a.n)?;
            r.result("modular_spectrum", json!({"min": m.min_eigenvalue, "max": m.max_eigenvalue}));
            r.push(
                Check::at_most("modular formula residual", m.formula_residual, tol.get("modular"))
                    .with_detail(format!("det p = {:.3e}; the residual grows as det p approaches 0", p.det())),
            );
            r.push(Check::at_most("modular fixes xi", m.fixed_residual, tol.get("modular")));
            r.push(Check::at_most("F = S* residual", m.adjoint_residual, tol.get("modular")));
        } else if a.op == Type3Op::Modular {
            return Err(Error::Config("p: det p = 0, so ξ is not separating and Δ is undefined".into()));
        }
    }
    if all || a.op == Type3Op::Kms {
        if !p.strictly_positive() {
            return Err(Error::Config("p: the kms check needs strictly positive entries".into()));
        }
        let z2 = Arc::new(crate::finite_group::build_group(&crate::finite_group::GroupDescriptor::Cyclic(2))?);
        let s = element(&a.s, &z2, "s")?;
        if !s.tuple.is_identity() {
            return Err(Error::Config(format!("s: '{}' must be a permutation", a.s)));
        }
        let g = element(&a.g, &z2, "g")?;
        let n = a.n.max(s.max_support()).max(g.max_support());
        if n > 6 {
            return Err(Error::Config(format!("g: support {n} too large for the kms check (max 6)")));
        }
        let s: Permutation = s.perm;
        let k = typeiii::kms_trace_check(&p, n, &s, &g)?;
        r.result("kms", json!({"n": n, "phi_sg": k.lhs, "phi_gs": k.rhs}));
        r.push(Check::at_most("phi(sg) = phi(gs)", k.residual, tol.get("kms")));
    }
    Ok(r)
}
