//! Command-line front end.  One subcommand per library operation, plus the
//! `verify` campaign; every command emits JSON (or DOT, for the graph
//! export) to stdout or `--out`.
//!
//! Exit codes: 0 success / all checks pass, 1 a check failed, 2 the request
//! could not be understood or sits outside the domain, 3 an internal error
//! (IO, serialization, thread pool).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use lseries_cli::config::Config;
use lseries_cli::render::{self, complex_json};
use lseries_cli::{cases, ingest, SCHEMA};
use lseries_core::arch;
use lseries_core::chars::{MultChar, PiValue};
use lseries_core::global::{self, CoeffTable, GlobalContext, Reduction};
use lseries_core::local::{factorization_sides, LocalRep, RepKind};
use lseries_core::padic::Field;

#[derive(Parser)]
#[command(
    name = "lseries",
    version,
    about = "Local integrals, lattice graphs, p-adic measures, and their verification campaign"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Gauss sum of a multiplicative character
    Gauss {
        /// Residue characteristic
        #[arg(long)]
        p: u64,
        /// Residue degree
        #[arg(long, default_value_t = 1)]
        f: u32,
        /// Conductor exponent
        #[arg(long, default_value_t = 1)]
        cond: u32,
        /// `legendre` for the quadratic character, or a tame index
        #[arg(long = "char", default_value = "legendre")]
        character: String,
        /// Wild digits, comma separated
        #[arg(long, value_delimiter = ',')]
        wild: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed character integral against the annulus-truncation oracle
    Lemma24 {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        f: u32,
        /// Conductor exponent of the character
        #[arg(long, default_value_t = 0)]
        level: u32,
        #[arg(long, default_value_t = 0)]
        tame: u64,
        #[arg(long, value_delimiter = ',')]
        wild: Vec<u64>,
        /// Value at the uniformizer: `a/b`, an integer, `x.y`, or `re,im`
        #[arg(long, default_value = "1/2")]
        pi: String,
        #[arg(long, default_value_t = 1e-12)]
        oracle_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correction factor of a twisted local integral
    Euler {
        #[arg(long)]
        q: u64,
        /// `spherical` or `special`
        #[arg(long)]
        kind: String,
        #[arg(long)]
        alpha1: String,
        #[arg(long)]
        alpha2: String,
        /// Character descriptor: `f=1;tame=1;wild=1:0;pi=1/2`
        #[arg(long, default_value = "f=0")]
        chi: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Factorization of the twisted integral into e * tau * L
    Prop27 {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        alpha1: String,
        #[arg(long)]
        alpha2: String,
        #[arg(long, default_value = "f=0")]
        chi: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a ball of the lattice graph
    Tree {
        /// Residue field size (prime power)
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 3)]
        radius: u32,
        /// `dot` or `json`
        #[arg(long, default_value = "dot")]
        emit: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Archimedean integral identities
    Arch {
        #[command(subcommand)]
        cmd: ArchCmd,
    },
    /// p-adic L report for a rational curve
    Lp {
        /// Built-in label (`11a`) or a Weierstrass coefficient file
        #[arg(long)]
        curve: Option<String>,
        /// Eigenvalue table as CSV (`n,a_n` with a `# N=.. w=..` header)
        #[arg(long)]
        coeffs: Option<PathBuf>,
        /// Conductor, when `--curve` is a file
        #[arg(long)]
        conductor: Option<u64>,
        /// Functional-equation sign, when `--curve` is a file
        #[arg(long)]
        root_number: Option<i8>,
        #[arg(long)]
        p: u64,
        /// Congruence level of the reported measure
        #[arg(long, default_value_t = 1)]
        level: u32,
        /// Integer evaluation point
        #[arg(long, default_value_t = 0)]
        s: i64,
        /// Series truncation
        #[arg(long, default_value_t = 5000)]
        trunc: usize,
        /// p-adic working window
        #[arg(long, default_value_t = 8)]
        prec: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification campaign, or one named check
    Verify {
        /// Single-check form: `prop27` with its flags below
        target: Option<String>,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        alpha1: Option<String>,
        #[arg(long)]
        alpha2: Option<String>,
        #[arg(long)]
        chi: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// Restrict the campaign to ids with this prefix, e.g. `local_dist.prop27`
        #[arg(long)]
        only: Option<String>,
        /// Key-value settings file
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = library default)
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ArchCmd {
    /// Check one identity on its grid and report every point
    Verify {
        /// `mellin` or `complex-zeta`
        #[arg(long)]
        identity: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failures that end the process: a misunderstood or out-of-domain request
/// (exit 2) or a genuine internal fault (exit 3).
enum Failure {
    Usage(String),
    Internal(String),
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn internal<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Internal(e.to_string())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.cmd {
        Cmd::Gauss { p, f, cond, character, wild, out } => {
            gauss(p, f, cond, &character, &wild, out.as_ref())
        }
        Cmd::Lemma24 { p, f, level, tame, wild, pi, oracle_tol, out } => {
            lemma24(p, f, level, tame, &wild, &pi, oracle_tol, out.as_ref())
        }
        Cmd::Euler { q, kind, alpha1, alpha2, chi, out } => {
            euler(q, &kind, &alpha1, &alpha2, &chi, out.as_ref())
        }
        Cmd::Prop27 { q, kind, alpha1, alpha2, chi, tol, out } => {
            prop27(q, &kind, &alpha1, &alpha2, &chi, tol, out.as_ref())
        }
        Cmd::Tree { q, radius, emit, out } => tree(q, radius, &emit, out.as_ref()),
        Cmd::Arch { cmd: ArchCmd::Verify { identity, tol, out } } => {
            arch_verify(&identity, tol, out.as_ref())
        }
        Cmd::Lp { curve, coeffs, conductor, root_number, p, level, s, trunc, prec, out } => {
            lp(curve, coeffs, conductor, root_number, p, level, s, trunc, prec, out.as_ref())
        }
        Cmd::Verify {
            target,
            q,
            kind,
            alpha1,
            alpha2,
            chi,
            tol,
            only,
            config,
            seed,
            parallelism,
            out,
        } => match target.as_deref() {
            Some("prop27") => {
                let q = q.ok_or_else(|| Failure::Usage("verify prop27 needs --q".into()))?;
                let kind =
                    kind.ok_or_else(|| Failure::Usage("verify prop27 needs --kind".into()))?;
                let a1 = alpha1
                    .ok_or_else(|| Failure::Usage("verify prop27 needs --alpha1".into()))?;
                let a2 = alpha2
                    .ok_or_else(|| Failure::Usage("verify prop27 needs --alpha2".into()))?;
                let chi = chi.unwrap_or_else(|| "f=0".into());
                prop27(q, &kind, &a1, &a2, &chi, tol.unwrap_or(1e-8), out.as_ref())
            }
            Some(other) => Err(Failure::Usage(format!(
                "unknown check `{other}`; use `verify prop27 ...` or the campaign form"
            ))),
            None => campaign(config, only, seed, parallelism, out.as_ref()),
        },
    }
}

// ------------------------------------------------------------ output plumbing

fn emit_text(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(v: &Value, out: Option<&PathBuf>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).map_err(internal)?;
    text.push('\n');
    emit_text(&text, out)
}

// ------------------------------------------------------------ value parsing

/// A number from the command line: exact when it reads as a rational,
/// numeric when it reads as a float or a `re,im` pair.
enum NumSpec {
    Exact(BigRational),
    Numeric(Complex64),
}

impl NumSpec {
    fn to_c64(&self) -> Complex64 {
        match self {
            NumSpec::Exact(r) => Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0),
            NumSpec::Numeric(z) => *z,
        }
    }

    fn to_pi_value(&self) -> PiValue {
        match self {
            NumSpec::Exact(r) => PiValue::Exact(r.clone()),
            NumSpec::Numeric(z) => PiValue::Numeric(*z),
        }
    }
}

fn parse_numspec(s: &str) -> Result<NumSpec, Failure> {
    let t = s.trim();
    if let Some((a, b)) = t.split_once(',') {
        let re: f64 = a.trim().parse().map_err(|_| bad_number(t))?;
        let im: f64 = b.trim().parse().map_err(|_| bad_number(t))?;
        return Ok(NumSpec::Numeric(Complex64::new(re, im)));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad_number(t))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad_number(t))?;
        if d.is_zero() {
            return Err(Failure::Usage(format!("`{t}` divides by zero")));
        }
        return Ok(NumSpec::Exact(BigRational::new(n, d)));
    }
    if let Ok(n) = t.parse::<BigInt>() {
        return Ok(NumSpec::Exact(BigRational::from_integer(n)));
    }
    t.parse::<f64>()
        .map(|x| NumSpec::Numeric(Complex64::new(x, 0.0)))
        .map_err(|_| bad_number(t))
}

fn bad_number(t: &str) -> Failure {
    Failure::Usage(format!("`{t}` is not a rational, a float, or a `re,im` pair"))
}

struct ChiSpec {
    level: u32,
    tame: u64,
    wild: Vec<u64>,
    pi: NumSpec,
}

/// Descriptor of a multiplicative character: semicolon-separated
/// `key=value` with keys `f` (conductor exponent), `tame`, `wild`
/// (colon-separated digits), and `pi`.
fn parse_chi_desc(s: &str) -> Result<ChiSpec, Failure> {
    let mut spec = ChiSpec {
        level: 0,
        tame: 0,
        wild: Vec::new(),
        pi: NumSpec::Exact(BigRational::from_integer(BigInt::from(1))),
    };
    for part in s.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("`{part}` is not `key=value`")))?;
        let v = v.trim();
        match k.trim() {
            "f" | "level" | "cond" => {
                spec.level = v.parse().map_err(|_| bad_number(v))?;
            }
            "tame" => spec.tame = v.parse().map_err(|_| bad_number(v))?,
            "wild" => {
                spec.wild = v
                    .split(':')
                    .map(|d| d.trim().parse::<u64>().map_err(|_| bad_number(d)))
                    .collect::<Result<_, _>>()?;
            }
            "pi" => spec.pi = parse_numspec(v)?,
            other => {
                return Err(Failure::Usage(format!(
                    "unknown character key `{other}` (use f, tame, wild, pi)"
                )))
            }
        }
    }
    Ok(spec)
}

fn parse_kind(s: &str) -> Result<RepKind, Failure> {
    match s {
        "spherical" => Ok(RepKind::Spherical),
        "special" => Ok(RepKind::Special),
        other => Err(Failure::Usage(format!(
            "`{other}` is not a representation kind (spherical, special)"
        ))),
    }
}

/// Build the local representation and character shared by `euler` and
/// `prop27`.  Exact inputs stay exact; any numeric part drops the pair to
/// the complex path.
fn build_rep_chi(
    q: u64,
    kind: &str,
    a1: &str,
    a2: &str,
    chi_desc: &str,
) -> Result<(LocalRep, MultChar), Failure> {
    let (p, f) = render::split_prime_power(q).map_err(Failure::Usage)?;
    let kind = parse_kind(kind)?;
    let chi_spec = parse_chi_desc(chi_desc)?;
    let fld = Field::new(p, f, chi_spec.level.max(1) + 2).map_err(usage)?;
    let a1 = parse_numspec(a1)?;
    let a2 = parse_numspec(a2)?;
    let rep = match (&a1, &a2) {
        (NumSpec::Exact(r1), NumSpec::Exact(r2)) => {
            LocalRep::from_exact(&fld, kind, r1.clone(), r2.clone()).map_err(usage)?
        }
        _ => LocalRep::from_complex(&fld, kind, a1.to_c64(), a2.to_c64()).map_err(usage)?,
    };
    let chi = MultChar::new(
        &fld,
        chi_spec.level,
        chi_spec.tame,
        &chi_spec.wild,
        chi_spec.pi.to_pi_value(),
    )
    .map_err(usage)?;
    Ok((rep, chi))
}

// ------------------------------------------------------------ subcommands

fn gauss(
    p: u64,
    f: u32,
    cond: u32,
    character: &str,
    wild: &[u64],
    out: Option<&PathBuf>,
) -> Result<ExitCode, Failure> {
    let fld = Field::new(p, f, cond.max(1) + 2).map_err(usage)?;
    let q = fld.q();
    let tame = match character {
        "legendre" => {
            if q % 2 == 0 {
                return Err(Failure::Usage(
                    "the quadratic character needs an odd residue field".into(),
                ));
            }
            (q - 1) / 2
        }
        s => s.parse::<u64>().map_err(|_| {
            Failure::Usage(format!("--char takes `legendre` or a tame index, got `{s}`"))
        })?,
    };
    let chi = MultChar::new(
        &fld,
        cond,
        tame,
        wild,
        PiValue::Exact(BigRational::from_integer(BigInt::from(1))),
    )
    .map_err(usage)?;
    let tau = chi.gauss_sum().map_err(usage)?;
    emit_json(
        &json!({
            "schema": SCHEMA,
            "p": p,
            "residue_degree": f,
            "cond": cond,
            "tame": tame,
            "wild": wild,
            "tau_re": tau.re,
            "tau_im": tau.im,
            "tau_abs": tau.norm(),
            "predicted_abs": (q as f64).powf(cond as f64 / 2.0),
        }),
        out,
    )?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn lemma24(
    p: u64,
    f: u32,
    level: u32,
    tame: u64,
    wild: &[u64],
    pi: &str,
    oracle_tol: f64,
    out: Option<&PathBuf>,
) -> Result<ExitCode, Failure> {
    let fld = Field::new(p, f, level.max(1) + 2).map_err(usage)?;
    let pi = parse_numspec(pi)?;
    let chi = MultChar::new(&fld, level, tame, wild, pi.to_pi_value()).map_err(usage)?;
    let value = chi.closed_integral().map_err(usage)?;
    let oracle = chi.integral_oracle(oracle_tol).map_err(usage)?;
    let rel_err = (value - oracle).norm() / value.norm().max(oracle.norm()).max(1e-30);
    emit_json(
        &json!({
            "schema": SCHEMA,
            "p": p,
            "residue_degree": f,
            "level": level,
            "tame": tame,
            "wild": wild,
            "chi_pi": complex_json(pi.to_c64()),
            "value": complex_json(value),
            "oracle": complex_json(oracle),
            "rel_err": rel_err,
        }),
        out,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn euler(
    q: u64,
    kind: &str,
    alpha1: &str,
    alpha2: &str,
    chi: &str,
    out: Option<&PathBuf>,
) -> Result<ExitCode, Failure> {
    let (rep, chi) = build_rep_chi(q, kind, alpha1, alpha2, chi)?;
    let value = lseries_core::local::euler_factor(&rep, &chi).map_err(usage)?;
    emit_json(
        &json!({
            "schema": SCHEMA,
            "q": q,
            "kind": kind,
            "alpha1": complex_json(rep.alpha1()),
            "alpha2": complex_json(rep.alpha2()),
            "value": complex_json(value),
        }),
        out,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn prop27(
    q: u64,
    kind: &str,
    alpha1: &str,
    alpha2: &str,
    chi: &str,
    tol: f64,
    out: Option<&PathBuf>,
) -> Result<ExitCode, Failure> {
    let (rep, chi) = build_rep_chi(q, kind, alpha1, alpha2, chi)?;
    let sides = factorization_sides(&rep, &chi, (tol * 1e-3).min(1e-11)).map_err(usage)?;
    let abs_err = (sides.lhs - sides.rhs).norm();
    let pass = abs_err <= tol + sides.tail_bound;
    emit_json(
        &json!({
            "schema": SCHEMA,
            "q": q,
            "kind": kind,
            "lhs": complex_json(sides.lhs),
            "rhs": complex_json(sides.rhs),
            "abs_err": abs_err,
            "tail_bound": sides.tail_bound,
            "tol": tol,
            "pass": pass,
        }),
        out,
    )?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn tree(q: u64, radius: u32, emit: &str, out: Option<&PathBuf>) -> Result<ExitCode, Failure> {
    match emit {
        "dot" => {
            let dot = render::ball_dot(q, radius).map_err(Failure::Usage)?;
            emit_text(&dot, out)?;
        }
        "json" => {
            let js = render::ball_json(q, radius).map_err(Failure::Usage)?;
            emit_json(&js, out)?;
        }
        other => {
            return Err(Failure::Usage(format!("`{other}` is not an export format (dot, json)")))
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn arch_verify(identity: &str, tol: f64, out: Option<&PathBuf>) -> Result<ExitCode, Failure> {
    let (grid, eval): (&[f64], fn(f64) -> Result<(f64, f64, f64), String>) = match identity {
        "mellin" => (&[0.25, 0.5, 1.0, 1.5, 2.0], |s| {
            let q = arch::mellin_k0(s).map_err(|e| e.to_string())?;
            Ok((q.value, arch::mellin_k0_closed(s), q.err_est))
        }),
        "complex-zeta" => (&[0.5, 1.0, 2.0], |s| {
            let q = arch::complex_zeta_integral(s).map_err(|e| e.to_string())?;
            let two_pi = std::f64::consts::TAU;
            Ok((q.value, two_pi * two_pi * arch::complex_l_factor(s), q.err_est))
        }),
        other => {
            return Err(Failure::Usage(format!(
                "`{other}` is not a known identity (mellin, complex-zeta)"
            )))
        }
    };
    let mut points = Vec::new();
    let mut max_abs_err: f64 = 0.0;
    for &s in grid {
        let (measured, reference, err_est) = eval(s).map_err(Failure::Usage)?;
        let abs_err = (measured - reference).abs();
        max_abs_err = max_abs_err.max(abs_err);
        points.push(json!({
            "s": s,
            "measured": measured,
            "reference": reference,
            "abs_err": abs_err,
            "err_est": err_est,
        }));
    }
    let pass = max_abs_err <= tol;
    emit_json(
        &json!({
            "schema": SCHEMA,
            "identity": identity,
            "tol": tol,
            "points": points,
            "max_abs_err": max_abs_err,
            "pass": pass,
        }),
        out,
    )?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn shrink_table(t: CoeffTable, trunc: usize) -> Result<CoeffTable, Failure> {
    if trunc >= t.n_max() {
        return Ok(t);
    }
    let mut a = vec![0i64];
    for n in 1..=trunc as u64 {
        a.push(t.coeff(n).map_err(usage)?);
    }
    CoeffTable::from_parts(t.level(), t.root_number(), a).map_err(usage)
}

#[allow(clippy::too_many_arguments)]
fn lp(
    curve: Option<String>,
    coeffs: Option<PathBuf>,
    conductor: Option<u64>,
    root_number: Option<i8>,
    p: u64,
    level: u32,
    s: i64,
    trunc: usize,
    prec: u32,
    out: Option<&PathBuf>,
) -> Result<ExitCode, Failure> {
    let (ctx, label) = if let Some(path) = coeffs {
        let text = fs::read_to_string(&path)
            .map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
        let table = ingest::parse_coeff_csv(&text).map_err(Failure::Usage)?;
        let table = shrink_table(table, trunc)?;
        let label = format!("N={}", table.level());
        (GlobalContext::from_coeffs(table, p, prec).map_err(usage)?, label)
    } else {
        let name = curve.ok_or_else(|| Failure::Usage("pass --curve or --coeffs".into()))?;
        let params = if let Some(builtin) = ingest::builtin_curve(&name) {
            builtin
        } else {
            let text = fs::read_to_string(&name).map_err(|e| {
                Failure::Usage(format!(
                    "`{name}` is neither a built-in curve nor a readable file: {e}"
                ))
            })?;
            let conductor = conductor
                .ok_or_else(|| Failure::Usage("a curve file needs --conductor".into()))?;
            let w = root_number
                .ok_or_else(|| Failure::Usage("a curve file needs --root-number".into()))?;
            ingest::parse_curve_file(&text, conductor, w).map_err(Failure::Usage)?
        };
        (GlobalContext::new(&params, p, trunc, prec).map_err(usage)?, name)
    };
    let reduction = match ctx.alpha().reduction {
        Reduction::Good => "good-ordinary",
        Reduction::SplitMult => "split-multiplicative",
        Reduction::NonSplitMult => "non-split-multiplicative",
        Reduction::Additive => "additive",
    };
    let e1 = global::euler_factor_at_one(&ctx).map_err(usage)?;
    let measure = global::finite_level_measure(&ctx, level).map_err(usage)?;
    let (lp_val, lp_err) = global::lp_value(&ctx, s, level).map_err(usage)?;
    let total: Complex64 = measure.values.iter().map(|(_, v)| v).sum();
    emit_json(
        &json!({
            "schema": SCHEMA,
            "curve": label,
            "p": p,
            "s": s,
            "trunc": trunc,
            "reduction": reduction,
            "exceptional": matches!(ctx.alpha().reduction, Reduction::SplitMult),
            "alpha": {
                "a_p": ctx.alpha().ap(),
                "alpha1": complex_json(ctx.alpha().alpha1),
                "alpha2": complex_json(ctx.alpha().alpha2),
            },
            "euler_factor_at_1": complex_json(e1),
            "measure": {
                "level": measure.level,
                "err_est": measure.err_est,
                "total": complex_json(total),
                "values": measure.values.iter().map(|(a, v)| {
                    json!({"a": a, "re": v.re, "im": v.im})
                }).collect::<Vec<_>>(),
            },
            "Lp0": lp_val.re,
            "Lp0_im": lp_val.im,
            "error_estimate": lp_err,
        }),
        out,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn campaign(
    config: Option<PathBuf>,
    only: Option<String>,
    seed: Option<u64>,
    parallelism: Option<usize>,
    out: Option<&PathBuf>,
) -> Result<ExitCode, Failure> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
            Config::parse(&text).map_err(usage)?
        }
        None => Config::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(par) = parallelism {
        cfg.parallelism = par;
    }
    let campaign = cases::run_campaign(&cfg, only.as_deref()).map_err(Failure::Internal)?;
    eprint!("{}", campaign.table());
    let mut text = serde_json::to_string_pretty(&campaign).map_err(internal)?;
    text.push('\n');
    emit_text(&text, out)?;
    Ok(if campaign.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
