use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use charspec::examples::{self, ExampleParams, Identity42, CURVE_TOL};
use charspec::jacobi::{descriptor_from_json, descriptor_from_value, JacobiDescriptor};
use charspec::specfun::bessel_j_via_f;
use charspec::spectral::{find_real_zeros, F_TOL};
use charspec::truncation::lambda_tracking;
use charspec::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

const RESIDUAL_TOL: f64 = 1e-10;
const ZERO_TOL: f64 = 1e-8;
const N_LIST: [usize; 4] = [50, 100, 200, 400];
const SEED: u64 = 20_241_016;

#[derive(Parser)]
#[command(name = "charspec", version, about = "Spectra of Jacobi matrices from their characteristic function")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zeros of the characteristic function in a window, with the truncation oracle.
    Spectrum(SpectrumArgs),
    /// Eigenvalue curves λ_s(w) of the linear-diagonal family as CSV.
    Curve(CurveArgs),
    /// Run a named check suite and report pass/fail per check.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Identities,
    Bounds,
    Oracle,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "CHARSPEC_THREADS", default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Family name, e.g. linear_diag, harmonic, qgeom, zero_diag_harm, zero_diag_q.
    #[arg(long, conflicts_with = "descriptor")]
    family: Option<String>,
    /// Family parameters as a JSON object.
    #[arg(long)]
    params: Option<String>,
    /// Descriptor JSON file.
    #[arg(long)]
    descriptor: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Search window a b.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, required = true)]
    window: Vec<f64>,
    /// Zero tolerance.
    #[arg(long, default_value_t = ZERO_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 5)]
    s_max: usize,
    #[arg(long, default_value_t = examples::DEFAULT_W_MAX)]
    w_max: f64,
    #[arg(long, default_value_t = examples::DEFAULT_STEP)]
    step: f64,
    #[arg(long, default_value_t = CURVE_TOL)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[command(flatten)]
    output: Output,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Descriptor(_) | Error::BadParams(_) => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Curve(a) => cmd_curve(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(out: &Output, text: &str) -> Result<(), Failure> {
    match &out.out {
        Some(p) => {
            fs::write(p, text).map_err(|e| Failure { code: 1, message: format!("cannot write {}: {e}", p.display()) })
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure { code: 1, message: e.to_string() }),
    }
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn positive(name: &str, x: f64) -> Result<(), Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Failure::input(format!("{name} must be positive and finite, got {x}")))
    }
}

// ---------------------------------------------------------------------------
// spectrum

fn load_descriptor(a: &SpectrumArgs) -> Result<(JacobiDescriptor, Value), Failure> {
    if let Some(path) = &a.descriptor {
        let text =
            fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        let d = descriptor_from_json(&text)?;
        let v: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
        return Ok((d, v));
    }
    let family = a.family.as_ref().ok_or_else(|| Failure::input("one of --family or --descriptor is required"))?;
    let mut params = match &a.params {
        Some(t) => match serde_json::from_str::<Value>(t) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(Failure::input("--params must be a JSON object")),
            Err(e) => return Err(Failure::input(format!("--params is not valid JSON: {e}"))),
        },
        None => Map::new(),
    };
    for (k, v) in [("alpha", a.alpha), ("w", a.w), ("beta", a.beta), ("q", a.q)] {
        if let Some(x) = v {
            params.insert(k.into(), json!(x));
        }
    }
    let v = json!({ "family": family, "params": params });
    Ok((descriptor_from_value(&v)?, v))
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<u8, Failure> {
    let (lo, hi) = (a.window[0], a.window[1]);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Failure::input("window must be finite"));
    }
    if lo > hi {
        return Err(Failure::input(format!("window [{lo}, {hi}] is reversed")));
    }
    positive("--tol", a.tol)?;
    let (desc, descriptor_json) = load_descriptor(a)?;
    if desc.der_lambda().meets_interval(lo, hi) {
        return Err(Error::WindowTouchesAccumulation { lo, hi }.into());
    }
    let zeros = if lo < hi { find_real_zeros(&desc, (lo, hi), a.tol)? } else { Vec::new() };
    let (oracle, note) = if lo < hi {
        match lambda_tracking(&desc, (lo, hi), &N_LIST, a.tol) {
            Ok((_, rows)) => (rows, None),
            Err(Error::HypothesisFailed(m)) => (Vec::new(), Some(m)),
            Err(e) => return Err(e.into()),
        }
    } else {
        (Vec::new(), None)
    };
    let max_discrepancy = oracle.last().map(|r| r.max_distance).filter(|d| d.is_finite());
    let metadata = json!({
        "descriptor": descriptor_json,
        "window": [lo, hi],
        "zero_tol": a.tol,
        "eval_tol": F_TOL,
        "n_list": N_LIST,
    });
    let text = match a.format {
        Format::Json => to_json_text(&json!({
            "metadata": metadata,
            "zeros": zeros.iter().map(|z| json!({ "z": z.z, "bracket": [z.bracket.0, z.bracket.1], "residual": z.residual })).collect::<Vec<_>>(),
            "oracle": oracle.iter().map(|r| json!({ "n": r.n, "eigenvalues": r.eigenvalues, "max_distance": finite_or_null(r.max_distance) })).collect::<Vec<_>>(),
            "oracle_note": note,
            "max_discrepancy": max_discrepancy,
        })),
        Format::Csv => {
            eprintln!(
                "{}",
                serde_json::to_string(&json!({ "metadata": metadata, "max_discrepancy": max_discrepancy })).unwrap()
            );
            let mut s = String::from("index,z,bracket_lo,bracket_hi,residual\n");
            for (i, z) in zeros.iter().enumerate() {
                s.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    i + 1,
                    z.z,
                    z.bracket.0,
                    z.bracket.1,
                    z.residual
                ));
            }
            s
        }
    };
    emit(&a.output, &text)?;
    Ok(0)
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

// ---------------------------------------------------------------------------
// curve

fn cmd_curve(a: &CurveArgs) -> Result<u8, Failure> {
    if a.s_max == 0 {
        return Err(Failure::input("--s-max must be at least 1"));
    }
    positive("--step", a.step)?;
    positive("--tol", a.tol)?;
    if !(a.w_max >= 0.0 && a.w_max.is_finite()) {
        return Err(Failure::input("--w-max must be finite and nonnegative"));
    }
    let t = examples::curve_table(a.s_max, a.w_max, a.step, a.tol, a.output.threads.max(1))?;
    eprintln!("{}", json!({ "s_max": a.s_max, "w_max": a.w_max, "step": a.step, "tol": a.tol, "rows": t.w.len() }));
    emit(&a.output, &t.to_csv())?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify

fn check(name: String, value: f64, tol: f64, detail: Value) -> Value {
    json!({ "name": name, "pass": value.is_finite() && value <= tol, "value": finite_or_null(value), "tol": tol, "detail": detail })
}

fn failed(name: String, e: Error) -> Value {
    json!({ "name": name, "pass": false, "value": null, "error": e.to_string() })
}

fn suite_identities() -> Vec<Value> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 0..20 {
        let mut nu: f64 = rng.gen_range(-0.9..0.9);
        if nu == 0.0 {
            nu = 0.5;
        }
        let w: f64 = 2.0 - rng.gen_range(0.0..2.0);
        let name = format!("bessel_cross_product_{i}");
        let j = |n: f64| bessel_j_via_f(n, w, 1e-15);
        match (|| -> charspec::Result<f64> {
            let lhs = j(nu + 1.0)? * j(-nu)? + j(nu)? * j(-nu - 1.0)?;
            Ok((lhs + (std::f64::consts::PI * nu).sin() / (std::f64::consts::PI * w)).abs())
        })() {
            Ok(r) => out.push(check(name, r, RESIDUAL_TOL, json!({ "nu": nu, "w": w }))),
            Err(e) => out.push(failed(name, e)),
        }
    }
    for which in 1..=5u8 {
        let name = format!("norm_series_item_{which}");
        let item = Identity42::sample(which).expect("sample parameters are valid");
        match item.evaluate() {
            Ok((l, r)) => {
                out.push(check(name, (l - r).abs() / l.abs(), 1e-9, json!({ "params": item, "lhs": l, "rhs": r })))
            }
            Err(e) => out.push(failed(name, e)),
        }
    }
    out
}

fn suite_bounds() -> Vec<Value> {
    let mut out = Vec::new();
    for s in 1..=6 {
        let b = examples::beta_s(s);
        let grid: Vec<f64> = (0..20).map(|i| b * i as f64 / 19.0).collect();
        let name = format!("closeness_bound_s{s}");
        match examples::prop45_bound_check(s, &grid, CURVE_TOL) {
            Ok(rows) => {
                let worst = rows.iter().filter(|r| r.bound > 0.0).map(|r| r.gap / r.bound).fold(0.0, f64::max);
                out.push(json!({ "name": name, "pass": true, "beta_s": b, "max_gap_over_bound": worst, "rows": rows }));
            }
            Err(e) => out.push(failed(name, e)),
        }
    }
    match examples::beta_vs_y1(10) {
        Ok(rows) => {
            for (s, b, y) in rows {
                out.push(
                    json!({ "name": format!("beta_below_half_y1_s{s}"), "pass": b < y, "beta_s": b, "half_y1": y }),
                );
            }
        }
        Err(e) => out.push(failed("beta_below_half_y1".into(), e)),
    }
    out
}

fn suite_oracle() -> Vec<Value> {
    let cases: Vec<(&str, u8, ExampleParams, (f64, f64))> = vec![
        ("linear_diag_w0.3", 1, ExampleParams { alpha: 1.0, w: 0.3, ..Default::default() }, (-2.7, 6.3)),
        ("linear_diag_w1", 1, ExampleParams { alpha: 1.0, w: 1.0, ..Default::default() }, (-2.7, 6.3)),
        ("linear_diag_w2", 1, ExampleParams { alpha: 1.0, w: 2.0, ..Default::default() }, (-4.7, 6.3)),
        ("harmonic_pos", 2, ExampleParams::default(), (0.1, 2.5)),
        ("harmonic_neg", 2, ExampleParams::default(), (-2.0, -0.1)),
        ("qgeom_pos", 3, ExampleParams::default(), (0.02, 3.0)),
        ("qgeom_neg", 3, ExampleParams::default(), (-3.0, -0.02)),
    ];
    let mut out = Vec::new();
    for (label, id, p, win) in cases {
        let name = format!("tracking_{label}");
        let run = || -> charspec::Result<(Vec<f64>, Vec<charspec::truncation::TrackingRow>)> {
            lambda_tracking(&examples::build_example(id, &p)?, win, &N_LIST, 1e-12)
        };
        match run() {
            Ok((zeros, rows)) => {
                let last = rows.last().map(|r| r.max_distance).unwrap_or(f64::NAN);
                let table: Vec<Value> = rows.iter().map(|r| json!({ "n": r.n, "count": r.eigenvalues.len(), "max_distance": finite_or_null(r.max_distance) })).collect();
                out.push(check(
                    name,
                    if zeros.is_empty() { f64::NAN } else { last },
                    1e-7,
                    json!({ "window": [win.0, win.1], "zeros": zeros, "rows": table }),
                ));
            }
            Err(e) => out.push(failed(name, e)),
        }
    }
    out
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8, Failure> {
    let (name, checks) = match a.suite {
        Suite::Identities => ("identities", suite_identities()),
        Suite::Bounds => ("bounds", suite_bounds()),
        Suite::Oracle => ("oracle", suite_oracle()),
    };
    let pass = checks.iter().all(|c| c["pass"] == json!(true));
    let report = json!({ "suite": name, "seed": SEED, "pass": pass, "checks": checks });
    emit(&a.output, &to_json_text(&report))?;
    Ok(if pass { 0 } else { 1 })
}
