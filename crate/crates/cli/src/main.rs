use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use polyschwarz::bergman::{operator_norm_with, sup_norm_with, GridSpec, NormOptions};
use polyschwarz::comparison::{
    linear_comparison_check_with, riccati_solve_with, riccati_options, transport_ray, vanish_radius_with,
    RhsPower,
};
use polyschwarz::maps::format::{parse_document, to_document};
use polyschwarz::maps::{make_normalizer, normalize, MapKind};
use polyschwarz::ode::OdeOptions;
use polyschwarz::order::{dilation_contraction_check, moebius_order, mu_r_lower, covering_estimate, OrderSearch};
use polyschwarz::report::{envelope, samples_csv, to_canonical_json, ToReport};
use polyschwarz::schwarzian::schwarzian_tensor;
use polyschwarz::verify::{run_suite, SuiteConfig, SuiteKind};
use polyschwarz::{Error, MapExpr, OdeOutcome};

#[derive(Parser, Debug)]
#[command(name = "polyschwarz", version, about = "Schwarzian tensor and Bergman-norm experiments on the polydisk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format; csv is only available for sampled curves.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (default: hardware parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct MapArg {
    /// Map description file (JSON).
    #[arg(long)]
    map: PathBuf,
}

#[derive(Args, Debug)]
struct NormArgs {
    /// Random restarts on top of the fixed starts.
    #[arg(long, default_value_t = 8)]
    budget: usize,
    /// Convergence tolerance of each ascent.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Schwarzian tensor S^k_ij and S^0_ij at a point.
    Tensor {
        #[command(flatten)]
        map: MapArg,
        /// Point as a comma list of complex literals (e.g. 0.1,0.2-0.3i).
        #[arg(long)]
        z: String,
    },
    /// Pointwise Bergman operator norm of the tensor.
    Opnorm {
        #[command(flatten)]
        map: MapArg,
        #[arg(long)]
        z: String,
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Grid sup-norm (a lower bound) on the polydisk of the given radius.
    Supnorm {
        #[command(flatten)]
        map: MapArg,
        #[arg(long, default_value_t = 0.9)]
        radius: f64,
        /// Radial nodes per axis (default depends on the dimension).
        #[arg(long)]
        grid: Option<usize>,
        /// Phases per radius (default depends on the dimension).
        #[arg(long)]
        phases: Option<usize>,
        #[arg(long, default_value_t = 2)]
        refine: usize,
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Normalize the map at the origin and write its description.
    Normalize {
        #[command(flatten)]
        map: MapArg,
    },
    /// Transport the normalized solution along t ↦ tζ.
    Transport {
        #[command(flatten)]
        map: MapArg,
        /// Direction with |ζ|∞ = 1.
        #[arg(long)]
        zeta: String,
        /// Initial value u(0).
        #[arg(long, default_value = "1")]
        u0: String,
        /// Initial gradient ∇u(0) (default zero: the normalized solution).
        #[arg(long)]
        grad0: Option<String>,
        #[arg(long, default_value_t = 0.99)]
        t_end: f64,
        /// Relative tolerance of the integrator.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Riccati comparison equation with constant c.
    Riccati {
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 0.999)]
        x_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Linear comparison equation against its closed-form envelope.
    Compare {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 0.99)]
        x_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// First zero of the vanishing-radius equation.
    Vanish {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        gamma: f64,
        /// Power of 1/(1−t²) in the forcing term (1 or 2).
        #[arg(long, default_value_t = 2)]
        rhs_power: u32,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Order experiments: Möbius extremal, μ_r search, or dilation check with --map.
    Order {
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Run the μ_r search at this α.
        #[arg(long)]
        alpha: Option<f64>,
        /// Radius for the μ_r search or the dilation check.
        #[arg(long, default_value_t = 0.4)]
        r: f64,
        /// Dilation factor (with --map).
        #[arg(long, default_value_t = 0.9)]
        s: f64,
        /// Check dilation contraction for this map.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Empirical covering radius of the normalized map.
    Cover {
        #[command(flatten)]
        map: MapArg,
        #[arg(long, default_value_t = 0.9)]
        radius: f64,
        /// Number of torus samples.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
    },
    /// Batch inequality suites.
    Verify {
        /// Suites to run (comma list); default all.
        #[arg(long)]
        suite: Option<String>,
        /// Multiplies every measured α (values below 1 understate it).
        #[arg(long, default_value_t = 1.0)]
        alpha_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Truncation radius for the tensor and A/B suites.
        #[arg(long, default_value_t = 0.9)]
        radius: f64,
        /// Random cases per dimension in the property suites.
        #[arg(long, default_value_t = 10)]
        cases: usize,
        /// Dimensions (comma list).
        #[arg(long, default_value = "2,3")]
        dims: String,
    },
}

/// Failure kinds mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::InvalidMap(_)
            | Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::DimensionTooSmall(_)
            | Error::OutsidePolydisk { .. }
            | Error::NotNormalized(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

struct Output {
    result: Value,
    seed: Option<u64>,
    passed: bool,
    curve: Option<OdeOutcome>,
    /// Written verbatim instead of the report (normalize).
    document: Option<Value>,
}

impl Output {
    fn new(result: Value) -> Self {
        Output {
            result,
            seed: None,
            passed: true,
            curve: None,
            document: None,
        }
    }
}

fn parse_complex_list(s: &str, flag: &str) -> Result<Vec<Complex64>, Failure> {
    s.split(',')
        .map(|tok| {
            let t = tok.trim();
            Complex64::from_str(t).map_err(|_| Failure::Usage(format!("--{flag}: cannot parse '{t}' as a complex number")))
        })
        .collect()
}

fn load_map(path: &Path) -> Result<MapExpr, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn check_dim(f: &MapExpr, v: &[Complex64], flag: &str) -> Result<(), Failure> {
    if v.len() != f.n() {
        return Err(Failure::Usage(format!(
            "--{flag} has {} entries but the map has dimension {}",
            v.len(),
            f.n()
        )));
    }
    Ok(())
}

fn ode_opts(tol: f64) -> Result<OdeOptions, Failure> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {tol}")));
    }
    Ok(OdeOptions::toward_unit().with_tolerance(tol, tol * 1e-2))
}

// A blow-up or a zero is a result; only a completed run can fail its envelope.
fn curve(out: OdeOutcome) -> Output {
    let mut o = Output::new(out.to_report());
    o.passed = out.envelope_ok || !out.is_completed();
    o.curve = Some(out);
    o
}

fn run(cmd: Command) -> Result<Output, Failure> {
    Ok(match cmd {
        Command::Tensor { map, z } => {
            let f = load_map(&map.map)?;
            let z = parse_complex_list(&z, "z")?;
            check_dim(&f, &z, "z")?;
            Output::new(schwarzian_tensor(&f, &z)?.to_report())
        }
        Command::Opnorm { map, z, norm } => {
            let f = load_map(&map.map)?;
            let z = parse_complex_list(&z, "z")?;
            check_dim(&f, &z, "z")?;
            let opts = NormOptions {
                budget: norm.budget,
                tol: norm.tol,
                seed: norm.seed,
                ..NormOptions::default()
            };
            let mut o = Output::new(operator_norm_with(&f, &z, &opts)?.to_report());
            o.seed = Some(norm.seed);
            o
        }
        Command::Supnorm {
            map,
            radius,
            grid,
            phases,
            refine,
            norm,
        } => {
            let f = load_map(&map.map)?;
            let base = GridSpec::default_for(f.n(), radius);
            let spec = GridSpec::with_resolution(radius, grid.unwrap_or(base.radii), phases.unwrap_or(base.phases), refine);
            let opts = NormOptions {
                budget: norm.budget,
                tol: norm.tol,
                seed: norm.seed,
                ..NormOptions::default()
            };
            let r = sup_norm_with(&f, &spec, &opts)?;
            let mut o = Output::new(r.to_report());
            o.seed = Some(norm.seed);
            o
        }
        Command::Normalize { map } => {
            let f = load_map(&map.map)?;
            let g = normalize(&f)?;
            let a = match make_normalizer(&f)?.kind() {
                MapKind::Normalizer { a } => a.clone(),
                _ => unreachable!("make_normalizer builds a normalizer"),
            };
            let mut o = Output::new(json!({
                "normalizer_a": a.iter().map(|c| json!([c.re, c.im])).collect::<Vec<_>>(),
                "map": to_document(&g),
            }));
            o.document = Some(to_document(&g));
            o
        }
        Command::Transport {
            map,
            zeta,
            u0,
            grad0,
            t_end,
            tol,
        } => {
            let f = load_map(&map.map)?;
            let zeta = parse_complex_list(&zeta, "zeta")?;
            check_dim(&f, &zeta, "zeta")?;
            let u0 = parse_complex_list(&u0, "u0")?;
            if u0.len() != 1 {
                return Err(Failure::Usage("--u0 takes a single complex number".into()));
            }
            let grad0 = match grad0 {
                Some(g) => parse_complex_list(&g, "grad0")?,
                None => vec![Complex64::new(0.0, 0.0); f.n()],
            };
            check_dim(&f, &grad0, "grad0")?;
            let out = transport_ray(&f, &zeta, u0[0], &grad0, t_end, &ode_opts(tol)?)?;
            let mut o = curve(out);
            o.passed = true;
            o
        }
        Command::Riccati { c, x_end, tol } => {
            let opts = ode_opts(tol)?;
            let opts = OdeOptions {
                h_max: riccati_options().h_max,
                ..opts
            };
            curve(riccati_solve_with(c, x_end, &opts)?)
        }
        Command::Compare { a, b, x_end, tol } => curve(linear_comparison_check_with(a, b, x_end, &ode_opts(tol)?)?),
        Command::Vanish {
            eps,
            delta,
            gamma,
            rhs_power,
            tol,
        } => curve(vanish_radius_with(eps, delta, gamma, RhsPower::from_int(rhs_power)?, &ode_opts(tol)?)?),
        Command::Order {
            n,
            alpha,
            r,
            s,
            map,
            budget,
            seed,
        } => {
            let mut o = if let Some(path) = map {
                let f = load_map(&path)?;
                let grid = GridSpec::with_resolution(r, 6, 8, 1);
                let d = dilation_contraction_check(&f, r, s, &grid, &polyschwarz::bergman::sweep_options())?;
                let mut o = Output::new(json!({"dilation": d.to_report()}));
                o.passed = d.ok;
                o
            } else if let Some(alpha) = alpha {
                let search = OrderSearch {
                    budget,
                    seed,
                    ..OrderSearch::default()
                };
                let rep = mu_r_lower(n, alpha, r, &search)?;
                Output::new(json!({"moebius": moebius_order(n)?.to_report(), "mu_r": rep.to_report()}))
            } else {
                Output::new(json!({"moebius": moebius_order(n)?.to_report()}))
            };
            o.seed = Some(seed);
            o
        }
        Command::Cover { map, radius, samples } => {
            let f = load_map(&map.map)?;
            let a = match make_normalizer(&f)?.kind() {
                MapKind::Normalizer { a } => a.clone(),
                _ => unreachable!("make_normalizer builds a normalizer"),
            };
            let g = normalize(&f)?;
            let c = covering_estimate(&g, radius, samples, &a)?;
            let mut o = Output::new(c.to_report());
            o.passed = c.half_radius_ok;
            o
        }
        Command::Verify {
            suite,
            alpha_scale,
            seed,
            radius,
            cases,
            dims,
        } => {
            let dims = dims
                .split(',')
                .map(|d| d.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("--dims: cannot parse '{d}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            let suites = match suite {
                None => SuiteKind::ALL.to_vec(),
                Some(s) if s.trim().is_empty() => Vec::new(),
                Some(s) => s.split(',').map(|x| SuiteKind::parse(x.trim())).collect::<Result<_, _>>()?,
            };
            let config = SuiteConfig {
                suites,
                seed,
                alpha_scale,
                radius,
                random_cases: cases,
                dims,
                ..SuiteConfig::default()
            };
            let r = run_suite::<f64>(&config)?;
            let mut o = Output::new(r.to_report());
            o.passed = r.passed();
            o.seed = Some(seed);
            o
        }
    })
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            let nl = if text.ends_with('\n') { "" } else { "\n" };
            match write!(stdout, "{text}{nl}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Runtime(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 || rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("error: --threads must be a positive integer");
            return ExitCode::from(2);
        }
    }
    let command: Vec<String> = argv.into_iter().skip(1).collect();
    let is_curve = matches!(
        cli.command,
        Command::Transport { .. } | Command::Riccati { .. } | Command::Compare { .. } | Command::Vanish { .. }
    );
    if cli.format == Format::Csv && !is_curve {
        eprintln!("error: --format csv is only available for transport, riccati, compare and vanish");
        return ExitCode::from(2);
    }
    let result = run(cli.command).and_then(|o| {
        let text = match (&o.document, cli.format, &o.curve) {
            (Some(doc), _, _) if cli.out.is_some() => to_canonical_json(doc),
            (_, Format::Csv, Some(c)) => samples_csv(c),
            _ => to_canonical_json(&envelope(&command, o.seed, o.result.clone())),
        };
        emit(&text, &cli.out)?;
        Ok(o.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
