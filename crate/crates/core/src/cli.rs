//! Command-line driver: JSON specs in, JSON reports out.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::affine_hopf::{self, AffineConfig, HopfModuleSpec};
use crate::algebras::{self, AlgebraMap, AlgebraSpec, SampleConfig};
use crate::error::{Error, Result};
use crate::flows::{self, Rank1Spec, TimeFunction};
use crate::foliation::{self, LiftOptions};
use crate::jets::DomainBox;
use crate::kahler::{self, ComonadConfig, Poly};
use crate::monad::{self, LawConfig};
use crate::report::Report;
use crate::sampling::DEFAULT_SEED;
use crate::scalar::{parse_rational, Backend, Rational};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser, Serialize)]
#[command(name = "tangent-monad", version, about = "Verify algebras over the tangent functor monad")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Overrides every float tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub backend: Option<Backend>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "cmd")]
pub enum Command {
    /// Unit, associativity and naturality laws of (T, ζ, μ).
    VerifyMonad {
        /// Dimensions to check (default 1, 2, 3).
        #[arg(long, num_args = 1..)]
        dim: Vec<usize>,
    },
    /// Axioms and derived identities of an algebra given as JSON.
    CheckAlgebra { spec: PathBuf },
    /// Sample the accessible set through a point.
    TraceLeaf {
        spec: PathBuf,
        #[command(flatten)]
        at: Point,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Lift a path in the leaf to the fiber.
    LiftPath {
        spec: PathBuf,
        #[command(flatten)]
        at: Point,
        /// One coordinate of the path per flag, as an expression in `t ∈ [0, 1]`.
        #[arg(long, required = true, allow_hyphen_values = true)]
        path: Vec<String>,
    },
    /// Linear holonomy along a leaf loop.
    Holonomy {
        spec: PathBuf,
        #[command(flatten)]
        at: Point,
        /// One coordinate of the loop per flag, as an expression in `t ∈ [0, 1]`.
        #[arg(long = "loop", required = true, allow_hyphen_values = true)]
        lp: Vec<String>,
    },
    Hopf {
        #[command(subcommand)]
        command: HopfCommand,
    },
    Kahler {
        #[command(subcommand)]
        command: KahlerCommand,
    },
    /// Print the spec of a named example.
    Examples { name: ExampleName },
}

#[derive(Debug, Args, Serialize)]
pub struct Point {
    /// Base point, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub at: Vec<f64>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "cmd")]
pub enum HopfCommand {
    /// Hopf modules on K² for the entwining (a, b).
    Classify {
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        #[serde(with = "crate::scalar::serde_rational")]
        a: Rational,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        #[serde(with = "crate::scalar::serde_rational")]
        b: Rational,
        /// Also brute-force the integer lattice.
        #[arg(long)]
        scan: bool,
    },
    /// Check a Hopf-module candidate `{a, b, A, B, X0}`.
    Check { spec: PathBuf },
    /// Bimonad and antipode identities for (a, b).
    Laws {
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        #[serde(with = "crate::scalar::serde_rational")]
        a: Rational,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        #[serde(with = "crate::scalar::serde_rational")]
        b: Rational,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "cmd")]
pub enum KahlerCommand {
    /// Comonad laws on ℚ[X₁..X_n].
    Verify {
        #[arg(long, default_value_t = 3)]
        vars: usize,
    },
    /// Coalgebra conditions for `h(Xᵢ)` given as polynomials.
    Coalgebra {
        /// One image `h(Xᵢ)` per flag.
        #[arg(long, required = true, allow_hyphen_values = true)]
        h: Vec<String>,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        #[serde(with = "opt_rational")]
        b: Option<Rational>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleName {
    Cylinder,
    Torus,
    Radial,
    Rotation,
    Free,
    Trivial,
}

mod opt_rational {
    use super::Rational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&crate::scalar::format_rational(r)),
            None => s.serialize_none(),
        }
    }
}

fn rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("`{s}` is not a rational number"))
}

/// A spec file: either a closed-form chart or a rank-1 flow (`"X"` key).
pub fn load_algebra(path: &Path) -> Result<AlgebraMap> {
    let text = fs::read_to_string(path)?;
    parse_algebra(&text)
}

pub fn parse_algebra(text: &str) -> Result<AlgebraMap> {
    let raw: Value = serde_json::from_str(text)?;
    if raw.get("X").is_some() {
        let spec: Rank1Spec = serde_json::from_value(raw)?;
        spec.build()
    } else {
        let spec: AlgebraSpec = serde_json::from_value(raw)?;
        AlgebraMap::from_spec(&spec)
    }
}

impl std::str::FromStr for ExampleName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true).map_err(|_| format!("unknown example `{s}`"))
    }
}

pub fn example_spec(name: ExampleName) -> Result<Value> {
    let h = match name {
        ExampleName::Cylinder => algebras::examples::cylinder()?,
        ExampleName::Torus => algebras::examples::torus()?,
        ExampleName::Radial => flows::radial_example()?,
        ExampleName::Free => algebras::make_free(&DomainBox::cube(1, -2.0, 2.0))?,
        ExampleName::Trivial => algebras::make_trivial(2)?,
        ExampleName::Rotation => {
            let h = flows::rotation_example()?;
            let r = h.rank1().expect("rotation is a flow algebra");
            return Ok(serde_json::to_value(r.spec(h.name()))?);
        }
    };
    Ok(serde_json::to_value(h.to_spec()?)?)
}

fn sample_config(cli: &Cli, default_samples: usize) -> SampleConfig {
    SampleConfig {
        samples: cli.samples.unwrap_or(default_samples),
        seed: cli.seed,
        backend: cli.backend,
        tolerance: cli.tol,
        ..Default::default()
    }
}

/// Axioms, derived identities, Nijenhuis (when a field is attached) and,
/// for flow algebras, the time-function axioms.
pub fn check_algebra(h: &AlgebraMap, cfg: &SampleConfig) -> Result<Vec<Report>> {
    let mut reports = vec![algebras::check_axioms(h, cfg)?, algebras::check_identities(h, cfg)?];
    if h.field().is_some() {
        reports.push(Report::new("nijenhuis", vec![algebras::check_nijenhuis(h, cfg)?]));
    }
    if let Some(r) = h.rank1() {
        reports.push(flows::check_time_axioms(r.field(), r.alpha(), cfg)?);
        if matches!(r.alpha(), TimeFunction::OneForm(_)) {
            reports.push(flows::check_basic_form(r.field(), r.alpha(), cfg)?);
        }
    }
    Ok(reports)
}

struct Outcome {
    result: Value,
    passed: bool,
}

fn outcome(result: impl Serialize, passed: bool) -> Result<Outcome> {
    Ok(Outcome {
        result: serde_json::to_value(result)?,
        passed,
    })
}

fn all_passed(reports: &[Report]) -> bool {
    reports.iter().all(|r| r.passed)
}

fn parse_polys(srcs: &[String]) -> Result<Vec<Poly>> {
    srcs.iter().map(|s| Poly::parse(s).map_err(Error::from)).collect()
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::VerifyMonad { dim } => {
            let dims = if dim.is_empty() { vec![1, 2, 3] } else { dim.clone() };
            let backend = cli.backend.unwrap_or(Backend::Rational);
            let mut reports = Vec::new();
            for &n in &dims {
                let mut cfg = LawConfig::new(n, cli.samples.unwrap_or(200), cli.seed, backend);
                cfg.tolerance = cli.tol;
                reports.push(monad::verify_monad_laws(&cfg, &monad::default_panel(n, backend))?);
            }
            let passed = all_passed(&reports);
            outcome(reports, passed)
        }
        Command::CheckAlgebra { spec } => {
            let h = load_algebra(spec)?;
            let reports = check_algebra(&h, &sample_config(cli, 200))?;
            let passed = all_passed(&reports);
            outcome(json!({ "algebra": h.name(), "dim": h.dim(), "reports": reports }), passed)
        }
        Command::TraceLeaf { spec, at, count, radius, csv, svg } => {
            let h = load_algebra(spec)?;
            let radius = radius.unwrap_or(0.25 * h.domain().half_width());
            let cloud = foliation::sample_leaf(&h, &at.at, *count, radius, cli.seed)?;
            if let Some(path) = csv {
                cloud.write_csv(fs::File::create(path)?)?;
            }
            if let Some(path) = svg {
                fs::write(path, cloud.to_svg()?)?;
            }
            let tame = cloud.dimension == cloud.rank_at_base;
            outcome(
                json!({
                    "algebra": h.name(),
                    "base": cloud.base,
                    "samples": cloud.points.len(),
                    "rejected": cloud.rejected,
                    "leaf_dimension": cloud.dimension,
                    "rank_at_base": cloud.rank_at_base,
                    "csv": csv,
                    "svg": svg,
                }),
                tame,
            )
        }
        Command::LiftPath { spec, at, path } => {
            let h = load_algebra(spec)?;
            let refs: Vec<&str> = path.iter().map(String::as_str).collect();
            let gamma = foliation::path_from_exprs(&refs)?;
            let opts = LiftOptions::default();
            let lifted = foliation::lift_path(&h, &at.at, foliation::path_fn(&gamma), &opts)?;
            let tol = cli.tol.unwrap_or(foliation::PARTITION_TOL);
            let passed = lifted.endpoint_error() <= tol;
            outcome(
                json!({
                    "algebra": h.name(),
                    "endpoint": lifted.endpoint(),
                    "endpoint_error": lifted.endpoint_error(),
                    "max_residual": lifted.max_residual(),
                    "tolerance": tol,
                    "path": lifted,
                }),
                passed,
            )
        }
        Command::Holonomy { spec, at, lp } => {
            let h = load_algebra(spec)?;
            let refs: Vec<&str> = lp.iter().map(String::as_str).collect();
            let gamma = foliation::path_from_exprs(&refs)?;
            let hol = foliation::holonomy_linear_map(&h, &at.at, foliation::path_fn(&gamma), &LiftOptions::default())?;
            let tol = cli.tol.unwrap_or(foliation::PARTITION_TOL);
            let one = foliation::check_eigenvalue_one(&hol.matrix(), tol);
            outcome(json!({ "algebra": h.name(), "eigenvalue_one": one, "tolerance": tol, "holonomy": hol }), one)
        }
        Command::Hopf { command } => match command {
            HopfCommand::Classify { a, b, scan } => {
                let families = affine_hopf::classify_hopf_modules_2d(a, b);
                if *scan {
                    let s = affine_hopf::lattice_scan(a, b);
                    let passed = s.unmatched.is_empty();
                    outcome(json!({ "families": families, "lattice": s }), passed)
                } else {
                    outcome(json!({ "families": families }), true)
                }
            }
            HopfCommand::Check { spec } => {
                let s: HopfModuleSpec = serde_json::from_str(&fs::read_to_string(spec)?)?;
                let c = affine_hopf::hopf_module_identities(&s.a, &s.b, &s.matrix_a, &s.matrix_b, &s.x0)?;
                let family = affine_hopf::family_of(&s.a, &s.b, &s.matrix_a, &s.matrix_b, &s.x0);
                let holds = c.holds();
                outcome(json!({ "identities": c, "family": family }), holds)
            }
            HopfCommand::Laws { a, b, dim } => {
                let cfg = AffineConfig {
                    dim: *dim,
                    samples: cli.samples.unwrap_or(200),
                    seed: cli.seed,
                };
                let mut reports = vec![affine_hopf::verify_affine_laws(a, b, &cfg)?];
                let antipode = match affine_hopf::verify_antipode(a, b, &cfg) {
                    Ok(r) => {
                        reports.push(r);
                        Value::Null
                    }
                    Err(Error::NoAntipode) => json!("no antipode: 1 + ab = 0"),
                    Err(e) => return Err(e),
                };
                let passed = all_passed(&reports);
                outcome(json!({ "reports": reports, "antipode": antipode }), passed)
            }
        },
        Command::Kahler { command } => match command {
            KahlerCommand::Verify { vars } => {
                let mut cfg = ComonadConfig::new(*vars);
                cfg.seed = cli.seed;
                if let Some(s) = cli.samples {
                    cfg.samples = s;
                }
                let r = kahler::verify_comonad(&cfg)?;
                let passed = r.passed;
                outcome(r, passed)
            }
            KahlerCommand::Coalgebra { h, b } => {
                let r = kahler::coalgebra_check(&parse_polys(h)?, b.as_ref())?;
                let passed = r.passed;
                outcome(r, passed)
            }
        },
        Command::Examples { name } => outcome(example_spec(*name)?, true),
    }
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(o) => {
            let doc = if matches!(cli.command, Command::Examples { .. }) {
                o.result
            } else {
                json!({ "config": cli, "passed": o.passed, "result": o.result })
            };
            let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
            let written = match &cli.out {
                Some(path) => fs::write(path, text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) if o.passed => EXIT_PASS,
                Ok(()) => EXIT_FAIL,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_ERROR
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
        }
    };
    run(&cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("tangent-monad").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn examples_round_trip() {
        for name in [ExampleName::Cylinder, ExampleName::Torus, ExampleName::Radial, ExampleName::Rotation, ExampleName::Free, ExampleName::Trivial] {
            let spec = example_spec(name).unwrap();
            let h = parse_algebra(&spec.to_string()).unwrap();
            assert_eq!(h.dim(), 2);
        }
    }

    #[test]
    fn global_flags_parse() {
        let cli = parse(&["--seed", "7", "hopf", "classify", "--a", "0", "--b", "1", "--backend", "float"]);
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.backend, Some(Backend::Float));
        let cli = parse(&["trace-leaf", "s.json", "--at", "-0.5,1"]);
        match cli.command {
            Command::TraceLeaf { at, .. } => assert_eq!(at.at, vec![-0.5, 1.0]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn hopf_classify_nilpotent_family() {
        let cli = parse(&["hopf", "classify", "--a", "0", "--b", "1"]);
        let o = execute(&cli).unwrap();
        assert!(o.passed);
        assert_eq!(o.result["families"][0]["kind"], "nilpotent");
    }

    #[test]
    fn malformed_spec_is_an_error() {
        let bad = r#"{"dim": 1, "exprs": ["x1 + * v1"], "domain": {"min": [-1], "max": [1]}}"#;
        assert!(matches!(parse_algebra(bad), Err(Error::Parse(_))));
    }
}
