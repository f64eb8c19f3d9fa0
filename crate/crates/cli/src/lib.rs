//! Command-line front end: `list`, `verify` and `classify`.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qkt_core::curvature_lab::Geometry;
use qkt_core::models::{builtin, resolve, validate, BuiltinModel};
use qkt_core::report::Report;
use qkt_core::suite::{run_suite, Options, Suite};
use qkt_core::twistor::{gray_hervella, sphere_grid, GrayClass, Structure, TwistorModel};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qktlab", version, about = "Verify QKT/HKT identities and twistor classes on left-invariant models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in models with their classification.
    List,
    /// Run a check suite and report.
    Verify {
        /// Built-in name (flat8, hopf8, solv8) or path to a model file.
        #[arg(long)]
        model: String,
        /// structure, curvature, hkt, twistor or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Fiber scale of the twistor metric.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gray-Hervella classes of I1 and I2 over the fiber grid.
    Classify {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// Result of one invocation: exit code, captured output and the report of `verify`.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub report: Option<Report>,
}

impl Outcome {
    fn usage(message: impl Into<String>) -> Self {
        Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: message.into(), report: None }
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            return if code == EXIT_PASS {
                Outcome { code, stdout: text, stderr: String::new(), report: None }
            } else {
                Outcome::usage(text)
            };
        }
    };
    match cli.command {
        Command::List => list(),
        Command::Verify { model, suite, tol, c, seed, out } => verify(&model, &suite, Options { tol, c, seed }, out),
        Command::Classify { model, c, seed, tol } => classify(&model, c, seed, tol),
    }
}

fn list() -> Outcome {
    let mut stdout = String::new();
    for b in BuiltinModel::ALL {
        let v = validate(&builtin(b), 1e-9);
        let instanton = match v.instanton {
            Some(true) => "instanton type",
            Some(false) => "not instanton type",
            None => "-",
        };
        let _ = writeln!(stdout, "{:<8} {:<20} {instanton}", b.name(), v.class.to_string());
    }
    Outcome { code: EXIT_PASS, stdout, stderr: String::new(), report: None }
}

fn verify(model: &str, suite: &str, opts: Options, out: Option<PathBuf>) -> Outcome {
    let model = match resolve(model) {
        Ok(m) => m,
        Err(e) => return Outcome::usage(format!("error: {e}\n")),
    };
    let suite: Suite = match suite.parse() {
        Ok(s) => s,
        Err(e) => return Outcome::usage(format!("error: {e}\n")),
    };
    let report = run_suite(&model, suite, &opts);
    let json = report.to_json(true);
    let mut stdout = String::new();
    let mut stderr = String::new();
    for c in report.failures() {
        let _ = writeln!(stderr, "FAIL {}: {} (lhs {:e}, rhs {:e}, err {:e})", c.id, c.description, c.lhs, c.rhs, c.abs_err);
    }
    match &out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, format!("{json}\n")) {
                return Outcome::usage(format!("error: cannot write {}: {e}\n", path.display()));
            }
            let failed = report.failures().count();
            let verdict = if report.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(
                stdout,
                "{} {}: {} checks, {failed} failed, {verdict} ({})",
                report.model,
                report.suite,
                report.checks.len(),
                path.display()
            );
        }
        None => {
            stdout.push_str(&json);
            stdout.push('\n');
        }
    }
    let code = if report.pass { EXIT_PASS } else { EXIT_FAIL };
    Outcome { code, stdout, stderr, report: Some(report) }
}

fn classify(model: &str, c: f64, seed: u64, tol: f64) -> Outcome {
    let model = match resolve(model) {
        Ok(m) => m,
        Err(e) => return Outcome::usage(format!("error: {e}\n")),
    };
    let g = match Geometry::new(&model.algebra, &model.triple) {
        Ok(g) => g,
        Err(e) => {
            return Outcome { code: EXIT_FAIL, stdout: String::new(), stderr: format!("error: {e}\n"), report: None }
        }
    };
    let tm = TwistorModel::new(&g);
    let gh = match gray_hervella(&tm, c, &sphere_grid(seed), tol) {
        Ok(gh) => gh,
        Err(e) => return Outcome::usage(format!("error: {e}\n")),
    };
    let mut s = String::new();
    let _ = writeln!(s, "model {} c = {c} grid points = {} tol = {tol:e}", model.name, gh.points.len());
    let _ = write!(s, "{:<16}", "class");
    for st in Structure::ALL {
        let _ = write!(s, " {:>14} {:>5}", format!("{} max res", st.name()), "");
    }
    s.push('\n');
    for class in GrayClass::ALL {
        let _ = write!(s, "{:<16}", class.name());
        for st in Structure::ALL {
            let verdict = if gh.holds(st, class) { "yes" } else { "no" };
            let _ = write!(s, " {:>14.3e} {:>5}", gh.max_residual(st, class), verdict);
        }
        s.push('\n');
    }
    Outcome { code: EXIT_PASS, stdout: s, stderr: String::new(), report: None }
}
