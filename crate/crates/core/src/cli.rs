//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed identity or precondition, 2 input error,
//! 3 enumeration budget exceeded, 4 contraction gate failed, 5 divergence.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::correq::{
    convergence_profile, solve_finite_volume, solve_finite_volume_direct, solve_infinite_volume,
    FiniteRoute, ProfileOptions, Reference, SolveOptions, SolveReport, SupportedFunction,
};
use crate::error::{Error, Result};
use crate::exact::{rho_exact, verify_correlation_equation};
use crate::io::{
    format_window, parse_probes, parse_window, write_check_report, write_correlations,
    write_profile, write_solve_report, Header,
};
use crate::lattice::{Configuration, Coord, Site, Window};
use crate::model::Model;
use crate::tef::checks::{
    check_enumeration_invariance, check_environment_condition, check_field_consistency,
    check_one_point_consistency, CheckReport, SamplePlan,
};
use crate::tef::{field_bounds, remark1_sufficiency, OnePointField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_GATE: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;

/// Largest window on which `solve` also enumerates the exact table.
const SOLVE_COMPARE_MAX_STATES: usize = 1 << 20;
/// Largest window on which `exact` also verifies the correlation equation.
const EXACT_VERIFY_MAX_SITES: usize = 12;

#[derive(Debug, Parser)]
#[command(
    name = "tefcorr",
    version,
    about = "Correlation equations for lattice spin systems"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the consistency identities and the environment condition.
    Verify(VerifyArgs),
    /// Exact correlation function by enumeration.
    Exact(ExactArgs),
    /// Solve the finite- or infinite-volume correlation equation.
    Solve(SolveArgs),
    /// Finite-volume deviations from a reference over growing windows.
    Converge(ConvergeArgs),
    /// Constants of the contraction condition.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct ModelArg {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Region the instances are drawn from (default: radius-2 box).
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Visit every instance on a region of at most four sites.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long, default_value_t = crate::tef::checks::DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, allow_hyphen_values = true)]
    pub window: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, allow_hyphen_values = true)]
    pub window: String,
    #[arg(long, default_value_t = crate::correq::solve::DEFAULT_TOL)]
    pub tol: f64,
    /// Largest support kept.
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Iterate even if the contraction bound is not below one.
    #[arg(long)]
    pub override_gate: bool,
    /// Solve the infinite-volume equation on the window.
    #[arg(long, conflicts_with = "direct")]
    pub infinite: bool,
    /// Dense LU solve instead of iteration.
    #[arg(long)]
    pub direct: bool,
    /// Solution table; the report goes to the same path with `.report` appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Increasing windows; give at least two.
    #[arg(long = "window", allow_hyphen_values = true, required = true)]
    pub windows: Vec<String>,
    /// Probe configurations, one per line (default: centre site of the
    /// smallest window, first non-vacuum spin).
    #[arg(long)]
    pub probes: Option<PathBuf>,
    /// Reference window (default: the largest window grown by two sites).
    #[arg(long, allow_hyphen_values = true)]
    pub ref_window: Option<String>,
    /// Take the reference from the infinite-volume equation instead of
    /// enumeration.
    #[arg(long)]
    pub infinite: bool,
    #[arg(long, default_value_t = crate::correq::solve::DEFAULT_INFINITE_KMAX)]
    pub kmax: usize,
    /// Finite-volume values by enumeration instead of the solver.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = crate::correq::solve::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub override_gate: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub model: ModelArg,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Precondition(_) => EXIT_FAILED,
        Error::ModelDefinition(_) | Error::Domain(_) | Error::Parse { .. } | Error::Io(_) => {
            EXIT_INPUT
        }
        Error::Budget { .. } => EXIT_BUDGET,
        Error::NotCertified { .. } => EXIT_GATE,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
    }
}

/// Parses `args` (program name first) and runs the command, writing the
/// human-readable summary to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    // the summary is buffered so the command can run inside a thread pool
    let mut buffer = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &mut buffer)),
            Err(e) => Err(Error::domain(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(&cli.command, &mut buffer),
    };
    let _ = out.write_all(&buffer);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: &Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Verify(a) => cmd_verify(a, out),
        Command::Exact(a) => cmd_exact(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Converge(a) => cmd_converge(a, out),
        Command::Bounds(a) => cmd_bounds(a, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn window_for(spec: &str, field: &dyn OnePointField) -> Result<Window> {
    let w = parse_window(spec)?;
    if w.dim() != field.dimension() {
        return Err(Error::domain(format!(
            "window {spec} has dimension {}, the model has {}",
            w.dim(),
            field.dimension()
        )));
    }
    Ok(w)
}

fn centred_box(dim: usize, radius: Coord) -> Result<Window> {
    Window::box_between(
        &Site::new(&vec![-radius; dim])?,
        &Site::new(&vec![radius; dim])?,
    )
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let model = Model::from_path(&a.model.model)?;
    let field = &model.field;
    let region = match &a.window {
        Some(spec) => window_for(spec, field)?,
        None => centred_box(field.dimension(), 2)?,
    };
    let plan = if a.exhaustive {
        SamplePlan::exhaustive(region.clone())
    } else {
        SamplePlan::random(a.seed, a.instances, region.clone())
    };
    let mut report = check_one_point_consistency(field, &plan)?;
    report = report.merge(check_field_consistency(field, &plan)?);
    report = report.merge(check_environment_condition(field, &plan)?);
    if !a.exhaustive {
        let n = (a.instances / 10).max(1);
        let enumeration = SamplePlan::random(a.seed, n, region.clone());
        report = report.merge(check_enumeration_invariance(field, &enumeration, 10, 6)?);
    }
    report.tolerance = a.tol;
    print_check_report(out, &report)?;
    if let Some(path) = &a.out {
        let header = Header::new(&model.digest)
            .with("command", "verify")
            .with("region", format_window(&region))
            .with("seed", a.seed)
            .with(
                "instances",
                if a.exhaustive {
                    "exhaustive".to_string()
                } else {
                    a.instances.to_string()
                },
            )
            .with_float("tolerance", a.tol);
        let mut f = create(path)?;
        write_check_report(&mut f, &header, &report)?;
        f.flush()?;
    }
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn print_check_report(out: &mut dyn Write, report: &CheckReport) -> Result<()> {
    for r in &report.identities {
        let pass = r.max_residual <= report.tolerance;
        write!(
            out,
            "{:<24} max residual {:.3e} over {} instances: {}",
            r.name,
            r.max_residual,
            r.checked,
            if pass { "pass" } else { "FAIL" }
        )?;
        match (&r.witness, pass) {
            (Some(w), false) => writeln!(out, " (witness: {w})")?,
            _ => writeln!(out)?,
        }
    }
    Ok(())
}

pub fn cmd_exact(a: &ExactArgs, out: &mut dyn Write) -> Result<i32> {
    let model = Model::from_path(&a.model.model)?;
    let field = &model.field;
    let window = window_for(&a.window, field)?;
    let table = rho_exact(field, &window)?;
    writeln!(
        out,
        "window {} ({} sites), Z = {:e}",
        format_window(&window),
        window.len(),
        table.partition_function()
    )?;
    let mut code = EXIT_OK;
    let mut residual = None;
    if window.len() <= EXACT_VERIFY_MAX_SITES {
        let eq = verify_correlation_equation(field, &window, &table)?;
        write!(
            out,
            "correlation equation: max residual {:.3e} over {} configurations",
            eq.max_residual, eq.checked
        )?;
        if eq.passed() {
            writeln!(out, ": pass")?;
        } else {
            let w = eq
                .witness
                .as_ref()
                .map_or("?".into(), |x| x.describe(field.spins()));
            writeln!(out, ": FAIL (witness: {w})")?;
            code = EXIT_FAILED;
        }
        residual = Some(eq.max_residual);
    } else {
        writeln!(
            out,
            "correlation equation: not verified above {EXACT_VERIFY_MAX_SITES} sites"
        )?;
    }
    if let Some(path) = &a.out {
        let header = Header::new(&model.digest)
            .with("command", "exact")
            .with("window", format_window(&window))
            .with("seed", 0)
            .with_float("tolerance", crate::exact::EQUATION_TOLERANCE)
            .with(
                "partition_function",
                format!("{:e}", table.partition_function()),
            )
            .with(
                "equation_residual",
                residual.map_or("NA".into(), |r| format!("{r:e}")),
            );
        let entries = table.entries();
        let mut f = create(path)?;
        write_correlations(
            &mut f,
            &header,
            field.spins(),
            entries.iter().map(|(x, v)| (x, *v)),
        )?;
        f.flush()?;
    }
    Ok(code)
}

pub fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let model = Model::from_path(&a.model.model)?;
    let field = &model.field;
    let window = window_for(&a.window, field)?;
    let options = SolveOptions {
        tol: a.tol,
        override_gate: a.override_gate,
        k_max: a.kmax,
        ..Default::default()
    };
    let (phi, report, route) = if a.infinite {
        let (p, r) = solve_infinite_volume(field, &window, &options)?;
        (p, r, "infinite-volume")
    } else if a.direct {
        let (p, r) = solve_finite_volume_direct(field, &window, &options)?;
        (p, r, "finite-volume direct")
    } else {
        let (p, r) = solve_finite_volume(field, &window, &options)?;
        (p, r, "finite-volume")
    };
    print_solve_report(out, route, &report)?;
    let states = field.spins().size().checked_pow(window.len() as u32);
    if !a.infinite
        && phi.domain().k_max() == window.len()
        && states.is_some_and(|s| s <= SOLVE_COMPARE_MAX_STATES)
    {
        let table = rho_exact(field, &window)?;
        let dev = phi
            .iter()
            .map(|(x, v)| (v - table.get(x)).abs())
            .fold(0.0, f64::max);
        writeln!(out, "max deviation from exact enumeration: {dev:.3e}")?;
    }
    if let Some(path) = &a.out {
        let header = Header::new(&model.digest)
            .with("command", "solve")
            .with("route", route)
            .with("window", format_window(&window))
            .with("seed", a.seed)
            .with_float("tol", a.tol)
            .with_float("residual_tol", options.residual_tol)
            .with("k_max", phi.domain().k_max())
            .with("override_gate", a.override_gate);
        write_solution(path, &header, field, &phi)?;
        let mut report_path = path.clone().into_os_string();
        report_path.push(".report");
        let mut f = create(Path::new(&report_path))?;
        write_solve_report(&mut f, &header, &report)?;
        f.flush()?;
    }
    Ok(EXIT_OK)
}

fn write_solution(
    path: &Path,
    header: &Header,
    field: &dyn OnePointField,
    phi: &SupportedFunction,
) -> Result<()> {
    let mut f = create(path)?;
    write_correlations(&mut f, header, field.spins(), phi.iter())?;
    f.flush()?;
    Ok(())
}

fn print_solve_report(out: &mut dyn Write, route: &str, r: &SolveReport) -> Result<()> {
    writeln!(out, "{route} solve: {} unknowns", r.unknowns)?;
    if r.max_iters > 0 {
        writeln!(
            out,
            "iterations {} (limit {}), final update {:.3e}",
            r.iterations, r.max_iters, r.final_update_norm
        )?;
        writeln!(
            out,
            "empirical contraction rate {:.4}, certified bound {:.4}{}",
            r.empirical_contraction_rate,
            r.operator_norm_bound,
            if r.gate_passed {
                ""
            } else {
                " (not certified)"
            }
        )?;
    }
    writeln!(out, "residual {:.3e}", r.residual_norm)?;
    if let Some(c) = &r.caveat {
        writeln!(out, "note: {c}")?;
    }
    Ok(())
}

pub fn cmd_converge(a: &ConvergeArgs, out: &mut dyn Write) -> Result<i32> {
    let model = Model::from_path(&a.model.model)?;
    let field = &model.field;
    if a.windows.len() < 2 {
        return Err(Error::domain(
            "a convergence study needs at least two windows",
        ));
    }
    let windows = a
        .windows
        .iter()
        .map(|s| window_for(s, field))
        .collect::<Result<Vec<_>>>()?;
    let probes = match &a.probes {
        Some(path) => parse_probes(&std::fs::read_to_string(path)?, field.spins())?,
        None => {
            let centre = windows[0].center();
            let spin = field
                .spins()
                .non_vacuum()
                .next()
                .expect("at least one non-vacuum spin");
            vec![Configuration::singleton(centre, spin)?]
        }
    };
    let largest = windows.last().expect("two windows");
    let ref_window = match &a.ref_window {
        Some(spec) => window_for(spec, field)?,
        None => grow(largest, 2)?,
    };
    let reference = if a.infinite {
        Reference::Infinite {
            window: ref_window.clone(),
            k_max: a.kmax,
        }
    } else {
        Reference::Exact {
            window: ref_window.clone(),
        }
    };
    let options = ProfileOptions {
        finite: if a.exact {
            FiniteRoute::Exact
        } else {
            FiniteRoute::Solve
        },
        solve: SolveOptions {
            tol: a.tol,
            override_gate: a.override_gate,
            ..Default::default()
        },
    };
    let profile = convergence_profile(field, &windows, &probes, &reference, &options)?;
    writeln!(out, "reference: {}", profile.reference_note)?;
    writeln!(
        out,
        "{:>6} {:>6} {:>14} {:>14}",
        "sites", "d", "deviation", "epsilon"
    )?;
    for r in &profile.rows {
        let eps = r
            .epsilon_bound
            .map_or("NA".to_string(), |e| format!("{e:.3e}"));
        writeln!(
            out,
            "{:>6} {:>6} {:>14.3e} {:>14}",
            r.window_len, r.d, r.max_abs_deviation, eps
        )?;
    }
    writeln!(out, "epsilon: {}", crate::correq::convergence::BOUND_LABEL)?;
    if let Some(path) = &a.out {
        let header = Header::new(&model.digest)
            .with("command", "converge")
            .with(
                "windows",
                windows
                    .iter()
                    .map(format_window)
                    .collect::<Vec<_>>()
                    .join(" "),
            )
            .with("reference_window", format_window(&ref_window))
            .with("seed", a.seed)
            .with_float("tol", a.tol)
            .with_float("residual_tol", options.solve.residual_tol)
            .with("override_gate", a.override_gate);
        let mut f = create(path)?;
        write_profile(&mut f, &header, &profile)?;
        f.flush()?;
    }
    Ok(EXIT_OK)
}

fn grow(w: &Window, by: Coord) -> Result<Window> {
    let dim = w.dim();
    let mut lo = vec![Coord::MAX; dim];
    let mut hi = vec![Coord::MIN; dim];
    for s in w.sites() {
        for (k, c) in s.coords().iter().enumerate() {
            lo[k] = lo[k].min(*c - by);
            hi[k] = hi[k].max(*c + by);
        }
    }
    Window::box_between(&Site::new(&lo)?, &Site::new(&hi)?)
}

pub fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let model = Model::from_path(&a.model.model)?;
    let field = &model.field;
    let b = field_bounds(field)?;
    let phi = field.potential().phi_norm();
    let r1 = remark1_sufficiency(phi, b.n_x);
    let flag = |p: bool| if p { "pass" } else { "fail" };
    writeln!(out, "norm_delta1\t{:.10}", b.norm_delta1)?;
    writeln!(out, "D\t{:.10}", b.d)?;
    writeln!(out, "N_X\t{}", b.n_x)?;
    writeln!(out, "C1\t{:.10}", b.c1)?;
    writeln!(out, "C1_prime\t{:.10}", b.c1_prime)?;
    writeln!(out, "C2\t{:.10}", b.c2)?;
    writeln!(
        out,
        "displayed_lhs\t{:.10}\t{}",
        b.displayed_lhs,
        flag(b.passes_displayed())
    )?;
    writeln!(
        out,
        "contraction_lhs\t{:.10}\t{}",
        b.contraction_lhs,
        flag(b.passes())
    )?;
    writeln!(out, "phi_norm\t{phi:.10}")?;
    writeln!(out, "pair_sufficiency_lhs\t{:.10}\t{}", r1.lhs, flag(r1.pass))?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("tefcorr").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::Budget {
                required: 1,
                budget: 0
            }),
            EXIT_BUDGET
        );
        assert_eq!(exit_code(&Error::NotCertified { lhs: 2.0 }), EXIT_GATE);
        assert_eq!(
            exit_code(&Error::Divergence {
                iterations: 1,
                last_update: 1.0,
                rate: 2.0
            }),
            EXIT_DIVERGENCE
        );
        assert_eq!(exit_code(&Error::Precondition("x".into())), EXIT_FAILED);
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                column: 1,
                message: "x".into()
            }),
            EXIT_INPUT
        );
    }

    #[test]
    fn usage_errors() {
        let (code, _, err) = run_str(&["solve"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("--model"));
        let (code, out, _) = run_str(&["--version"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("tefcorr"));
        let (code, _, err) = run_str(&["bounds", "--model", "/nonexistent/model.toml"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn grow_pads_every_side() {
        let w = grow(&parse_window("0,0:1,2").unwrap(), 2).unwrap();
        assert_eq!(format_window(&w), "-2,-2:3,4");
    }
}
