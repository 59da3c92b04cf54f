//! Command-line dispatch.
//!
//! Exit codes: 0 when every check passes, 1 on a violated check (or a warning
//! under `--strict`), 2 on configuration and catalog errors.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::catalog::{build_catalog_orbifold, gcd, CatalogSpec};
use crate::cohomology::{closed_form_h0, cohomology_table, euler_quasi_polynomial_check};
use crate::config::RunConfig;
use crate::curvature::{morse_integral_table, MorseIntegralTable};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::moishezon::{bigness_vs_rank, build_and_check, Verdict};
use crate::report::{Level, Report};
use crate::spectral::{assemble_kodaira_laplacian, heat_trace, morse_sum_vs_trace, write_spectral_csv, SpectralTable};
use crate::verify::{
    fit_rate, right_side_table, singular_diagonal_factor, strong_morse_from_tables, telescoping_residual,
    verify_kernel_asymptotics_regular, verify_kernel_asymptotics_singular, MorseReport, RightSide,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// Absolute tolerance of the exact trace chain.
pub const CHAIN_TOL: f64 = 1e-9;
/// Allowed relative drift of low eigenvalues when the resolution doubles.
pub const RESOLUTION_DRIFT_TOL: f64 = 1e-6;
/// Allowed distance of the singular diagonal ratio from `|G_x|` once
/// `p ≥ RATIO_MIN_POWER`; below that only the `C p^{-1/2}` envelope is checked.
pub const RATIO_TOL: f64 = 0.05;
pub const RATIO_MIN_POWER: u64 = 1024;
/// Required residual shrink factor of the singular correction.
pub const SHRINK_FACTOR: f64 = 10.0;

#[derive(Debug, Parser)]
#[command(name = "orbimorse", version, about = "Holomorphic Morse inequality checks on model orbifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides `[run] seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact sheaf cohomology dimensions h^q(X, L^p)
    Cohomology,
    /// Curvature integrals over the index sets M(q)
    CurvatureIntegral,
    /// Spectra and heat-trace residuals on torus quotients
    HeatTrace,
    /// Strong Morse inequality residuals
    VerifyMorse,
    /// Heat-kernel asymptotics at regular and singular points
    KernelAsymptotics,
    /// Moishezon criteria, bigness and Kodaira map rank
    MoishezonCheck,
    /// Every subcommand above, skipping unsupported models
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Cohomology => "cohomology",
            Command::CurvatureIntegral => "curvature-integral",
            Command::HeatTrace => "heat-trace",
            Command::VerifyMorse => "verify-morse",
            Command::KernelAsymptotics => "kernel-asymptotics",
            Command::MoishezonCheck => "moishezon-check",
            Command::All => "all",
        }
    }

    const SINGLE: [Command; 6] = [
        Command::Cohomology,
        Command::CurvatureIntegral,
        Command::HeatTrace,
        Command::VerifyMorse,
        Command::KernelAsymptotics,
        Command::MoishezonCheck,
    ];
}

/// Inputs shared by every subcommand of one run.
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn new(config: RunConfig, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        let seed = seed.unwrap_or(config.run.seed);
        let out = out.unwrap_or_else(|| config.output.dir.clone());
        Self { config, seed, out }
    }

    fn spec(&self) -> &CatalogSpec {
        &self.config.catalog
    }

    fn csv(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }
}

/// Errors that are the caller's fault rather than a failed check.
pub fn is_configuration_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::UnsupportedModel(_) | Error::DegreeOutOfRange { .. } | Error::Geometry(_) | Error::Io(_)
    )
}

/// Runs one subcommand and fills `report`. CSV tables go to `ctx.out`.
pub fn run(command: Command, ctx: &Context, report: &mut Report) -> Result<()> {
    std::fs::create_dir_all(&ctx.out)?;
    match command {
        Command::Cohomology => cohomology(ctx, report),
        Command::CurvatureIntegral => curvature_integral(ctx, report),
        Command::HeatTrace => heat_traces(ctx, report),
        Command::VerifyMorse => verify_morse(ctx, report),
        Command::KernelAsymptotics => kernel_asymptotics(ctx, report),
        Command::MoishezonCheck => moishezon(ctx, report),
        Command::All => {
            for sub in Command::SINGLE {
                match run(sub, ctx, report) {
                    Ok(()) => {}
                    Err(Error::UnsupportedModel(msg)) => {
                        report.diagnose(Level::Info, sub.name(), format!("skipped: {msg}"))
                    }
                    Err(e) if is_configuration_error(&e) => return Err(e),
                    Err(e) => report.diagnose(Level::Error, sub.name(), e.to_string()),
                }
            }
            Ok(())
        }
    }
}

fn cohomology(ctx: &Context, report: &mut Report) -> Result<()> {
    let spec = ctx.spec();
    let p_list = &ctx.config.run.p_list;
    let table = cohomology_table(spec, p_list)?;
    table.write_csv(ctx.csv("cohomology.csv")?)?;
    let rows = p_list.iter().map(|&p| Ok(json!({ "p": p, "h": table.row(p)? }))).collect::<Result<Vec<_>>>()?;
    report.push("cohomology.table", true, &rows)?;
    if let CatalogSpec::Wps { weights, degree, rank } = spec {
        let mut checked = 0usize;
        let mut mismatches = Vec::new();
        for &p in p_list {
            if let Some(h) = closed_form_h0(weights, degree * p as i64) {
                checked += 1;
                let found = table.get(p, 0)?;
                if h * *rank as u64 != found {
                    mismatches.push(json!({ "p": p, "closed_form": h, "table": found }));
                }
            }
        }
        let quasi = euler_quasi_polynomial_check(weights, 0)?;
        report.push(
            "cohomology.closed_form",
            mismatches.is_empty() && quasi,
            &json!({ "checked": checked, "mismatches": mismatches, "euler_quasi_polynomial": quasi }),
        )?;
    }
    Ok(())
}

/// `∫_M det(Ṙ/2π) dv` where a closed form exists.
fn exact_total_integral(spec: &CatalogSpec) -> Option<f64> {
    match spec {
        CatalogSpec::Wps { weights, degree, .. } => {
            let n = weights.len() - 1;
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            Some((*degree as f64).powi(n as i32) / (fact * weights.iter().map(|&a| a as f64).product::<f64>()))
        }
        CatalogSpec::Torus { degrees, k, .. } => Some(degrees.iter().map(|&d| d as f64).product::<f64>() / *k as f64),
        CatalogSpec::LocalModel { .. } => None,
    }
}

fn curvature_integral(ctx: &Context, report: &mut Report) -> Result<()> {
    let spec = ctx.spec();
    let tol = &ctx.config.tolerances;
    let (orb, bundle) = build_catalog_orbifold(spec)?;
    let table = morse_integral_table(&orb, &bundle, ctx.config.resolution(), tol.tol_degeneracy)?;
    let mut w = csv::Writer::from_writer(ctx.csv("curvature.csv")?);
    w.write_record(["q", "integral", "cumulative"])?;
    for q in 0..table.by_degree.len() {
        w.write_record([q.to_string(), format!("{:.12e}", table.by_degree[q]), format!("{:.12e}", table.up_to(q))])?;
    }
    w.flush()?;
    if table.degenerate_fraction > 0.0 {
        report.diagnose(
            Level::Warning,
            "curvature.integral",
            format!("{:.3e} of the quadrature weight lies on degenerate nodes", table.degenerate_fraction),
        );
    }
    let telescoping = telescoping_residual(&table);
    report.push(
        "curvature.telescoping",
        telescoping <= tol.tol_quadrature,
        &json!({
            "resolution": ctx.config.resolution(),
            "by_degree": table.by_degree,
            "degenerate_fraction": table.degenerate_fraction,
            "nodes": table.nodes,
            "telescoping_residual": telescoping,
        }),
    )?;
    if let Some(exact) = exact_total_integral(spec) {
        let total: f64 = table.by_degree.iter().sum();
        report.push(
            "curvature.total",
            (total - exact).abs() <= tol.tol_quadrature,
            &json!({ "total": total, "exact": exact, "error": (total - exact).abs() }),
        )?;
    }
    Ok(())
}

/// Spectral tables of all degrees at one power.
fn spectral_tables(ctx: &Context, p: u64, resolution: usize) -> Result<Vec<SpectralTable>> {
    (0..=ctx.spec().dimension())
        .map(|q| {
            assemble_kodaira_laplacian(ctx.spec(), p, q, resolution)
                .map(|op| op.spectral_table().with_gap_floor(ctx.config.tolerances.tol_spectral_gap))
        })
        .collect()
}

/// Exact trace chain over `p_list × u_list`; returns whether it holds.
fn trace_chain(ctx: &Context, report: &mut Report, write_csv: bool) -> Result<bool> {
    let n = ctx.spec().dimension();
    let resolution = ctx.config.run.spectral_resolution;
    let mut all_tables = Vec::new();
    let mut rows = Vec::new();
    let mut pass = true;
    for &p in &ctx.config.run.p_list {
        let tables = spectral_tables(ctx, p, resolution)?;
        let h: Vec<u64> = tables.iter().map(|t| t.zero_dim).collect();
        for &u in &ctx.config.run.u_list {
            let residuals = morse_sum_vs_trace(&tables, u, &h)?;
            let traces = tables.iter().map(|t| heat_trace(t, u)).collect::<Result<Vec<_>>>()?;
            let ok = residuals[..n].iter().all(|&r| r >= -CHAIN_TOL) && residuals[n].abs() <= CHAIN_TOL;
            pass &= ok;
            rows.push(json!({ "p": p, "u": u, "h": h, "traces": traces, "residuals": residuals, "pass": ok }));
        }
        all_tables.extend(tables);
    }
    if write_csv {
        write_spectral_csv(&all_tables, ctx.csv("spectrum.csv")?)?;
        let mut w = csv::Writer::from_writer(ctx.csv("heat_trace.csv")?);
        w.write_record(["p", "u", "q", "trace", "h", "residual"])?;
        for row in &rows {
            for q in 0..=n {
                w.write_record([
                    row["p"].to_string(),
                    row["u"].to_string(),
                    q.to_string(),
                    format!("{:.12e}", row["traces"][q].as_f64().unwrap_or(f64::NAN) + 0.0),
                    row["h"][q].to_string(),
                    format!("{:.6e}", row["residuals"][q].as_f64().unwrap_or(f64::NAN) + 0.0),
                ])?;
            }
        }
        w.flush()?;
    }
    report.push("heat_trace.chain", pass, &rows)?;
    Ok(pass)
}

/// Largest relative change of the low eigenvalues when the resolution
/// doubles, at the first power and degree 0.
fn resolution_drift(ctx: &Context) -> Result<f64> {
    let p = ctx.config.run.p_list[0];
    let m = ctx.config.run.spectral_resolution;
    let coarse = assemble_kodaira_laplacian(ctx.spec(), p, 0, m)?.spectral_table();
    let fine = assemble_kodaira_laplacian(ctx.spec(), p, 0, 2 * m)?.spectral_table();
    let mut drift: f64 = 0.0;
    for ((a, ma), (b, mb)) in coarse.eigenvalues.iter().zip(&fine.eigenvalues) {
        if ma != mb {
            return Ok(f64::INFINITY);
        }
        drift = drift.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok(drift)
}

fn heat_traces(ctx: &Context, report: &mut Report) -> Result<()> {
    trace_chain(ctx, report, true)?;
    let drift = resolution_drift(ctx)?;
    report.push(
        "heat_trace.resolution",
        drift <= RESOLUTION_DRIFT_TOL,
        &json!({ "resolution": ctx.config.run.spectral_resolution, "relative_drift": drift }),
    )?;
    Ok(())
}

fn verify_morse(ctx: &Context, report: &mut Report) -> Result<()> {
    let spec = ctx.spec();
    let run = &ctx.config.run;
    let tol = &ctx.config.tolerances;
    let table = cohomology_table(spec, &run.p_list)?;
    if matches!(spec, CatalogSpec::Torus { .. }) && !trace_chain(ctx, report, false)? {
        report.diagnose(Level::Error, "verify_morse", "trace chain fails; asymptotic checks withheld");
        return Ok(());
    }
    let (source, by_degree) = match spec {
        CatalogSpec::Wps { .. } => (RightSide::Exact, right_side_table(spec, RightSide::Exact)?),
        _ => {
            let source = RightSide::Quadrature { resolution: ctx.config.resolution(), tol: tol.tol_degeneracy };
            (source, right_side_table(spec, source)?)
        }
    };
    let integrals = MorseIntegralTable { by_degree: by_degree.clone(), degenerate_fraction: 0.0, nodes: 0 };
    let telescoping = telescoping_residual(&integrals);
    report.push(
        "verify_morse.telescoping",
        telescoping <= tol.tol_quadrature,
        &json!({ "right_side": source, "by_degree": by_degree, "telescoping_residual": telescoping }),
    )?;
    let mut morse = MorseReport::new(spec.id());
    for q in ctx.config.q_list() {
        let series = strong_morse_from_tables(spec, q, &table, &by_degree, source, tol.tol_morse_scale)?;
        let (p, log_abs): (Vec<u64>, Vec<f64>) =
            series.points.iter().filter(|pt| pt.rho.abs() > 1e-12).map(|pt| (pt.p, pt.rho.abs().ln())).unzip();
        let fit = fit_rate(&p, &log_abs).ok();
        if let Some(f) = fit.as_ref().filter(|f| !f.reliable) {
            report.diagnose(
                Level::Info,
                &format!("verify_morse.strong.q{q}"),
                format!("residual rate fit is unreliable (R² = {:.3})", f.r_squared),
            );
        }
        report.push(&format!("verify_morse.strong.q{q}"), series.pass, &json!({ "series": series, "fit": fit }))?;
        morse.strong.push(series);
    }
    morse.write_residual_csv(ctx.csv("residuals.csv")?)?;
    Ok(())
}

fn default_kernel_point(spec: &CatalogSpec) -> Vec<C64> {
    let n = spec.dimension();
    match spec {
        CatalogSpec::LocalModel { .. } => (0..n).map(|j| if j == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect(),
        _ => vec![c(0.25, 0.25); n],
    }
}

fn kernel_asymptotics(ctx: &Context, report: &mut Report) -> Result<()> {
    let spec = ctx.spec();
    let run = &ctx.config.run;
    let is_local = matches!(spec, CatalogSpec::LocalModel { .. });
    match spec {
        CatalogSpec::Torus { ripple, .. } if *ripple != 0.0 => {
            return Err(Error::UnsupportedModel("kernel asymptotics need a flat model".into()))
        }
        CatalogSpec::Wps { .. } => return Err(Error::UnsupportedModel("kernel asymptotics need a flat model".into())),
        _ => {}
    }
    let n = spec.dimension();
    let x = ctx.config.kernel_point().unwrap_or_else(|| default_kernel_point(spec));
    let min_distance = ctx.config.kernel.min_singular_distance.unwrap_or(if is_local { 0.5 } else { 0.25 });
    let q_list = ctx.config.q_list();

    let mut regular_csv = csv::Writer::from_writer(ctx.csv("kernel.csv")?);
    regular_csv.write_record(["u", "p", "q", "log_error", "log_bound"])?;
    for &u in &run.u_list {
        for &q in &q_list {
            let check = format!("kernel.regular.u{u}.q{q}");
            match verify_kernel_asymptotics_regular(spec, &x, u, &run.p_list, q, min_distance) {
                Ok(r) => {
                    if !r.fit.reliable {
                        report.diagnose(Level::Info, &check, format!("rate fit R² = {:.3}", r.fit.r_squared));
                    }
                    for rec in &r.records {
                        regular_csv.write_record([
                            u.to_string(),
                            rec.p.to_string(),
                            q.to_string(),
                            format!("{:.12e}", rec.log_error),
                            format!("{:.12e}", rec.log_bound),
                        ])?;
                    }
                    report.push(&check, r.pass, &r)?;
                }
                Err(Error::Refused(msg)) => report.diagnose(Level::Warning, &check, msg),
                Err(Error::Missing(_)) => {
                    report.push(&check, true, &json!({ "u": u, "q": q, "error": 0.0 }))?;
                    report.diagnose(Level::Info, &check, "kernel error vanishes at every power");
                }
                Err(e) => return Err(e),
            }
        }
    }
    regular_csv.flush()?;

    if is_local {
        let mut singular_csv = csv::Writer::from_writer(ctx.csv("singular.csv")?);
        singular_csv.write_record([
            "u",
            "p",
            "q",
            "kernel",
            "lim",
            "expansion",
            "residual_with_correction",
            "residual_without_correction",
            "shrink_factor",
        ])?;
        for &u in &run.u_list {
            for &q in &q_list {
                let check = format!("kernel.singular.u{u}.q{q}");
                let mut records = Vec::new();
                for &p in &run.p_list {
                    let mut z = vec![c(0.0, 0.0); n];
                    z[0] = c(1.0 / (p as f64).sqrt(), 0.0);
                    match verify_kernel_asymptotics_singular(spec, &z, u, &[p], q) {
                        Ok(r) => records.extend(r),
                        Err(Error::Refused(msg)) => report.diagnose(Level::Info, &check, format!("p = {p}: {msg}")),
                        Err(e) => return Err(e),
                    }
                }
                for r in &records {
                    singular_csv.write_record([
                        u.to_string(),
                        r.p.to_string(),
                        q.to_string(),
                        format!("{:.12e}", r.kernel),
                        format!("{:.12e}", r.lim),
                        format!("{:.12e}", r.expansion),
                        format!("{:.6e}", r.residual_with_correction),
                        format!("{:.6e}", r.residual_without_correction),
                        format!("{:.6e}", r.shrink_factor),
                    ])?;
                }
                let pass = records
                    .iter()
                    .all(|r| r.shrink_factor >= SHRINK_FACTOR || r.residual_without_correction <= 1e-12);
                report.push(&check, pass, &records)?;
            }
        }
        singular_csv.flush()?;
    }

    let (k, line_phase) = match spec {
        CatalogSpec::LocalModel { k, line_phase, .. } => (*k, *line_phase),
        CatalogSpec::Torus { k, .. } => (*k, 0.0),
        CatalogSpec::Wps { .. } => unreachable!("rejected above"),
    };
    if line_phase != 0.0 {
        report.diagnose(Level::Info, "kernel.ratio", "skipped: the line lift is twisted");
        return Ok(());
    }
    let origin = vec![c(0.0, 0.0); n];
    for &u in &run.u_list {
        let ratios = run
            .p_list
            .iter()
            .map(|&p| singular_diagonal_factor(spec, &origin, u, p, 0))
            .collect::<Result<Vec<_>>>()?;
        let deviations: Vec<f64> = ratios.iter().map(|r| (r - k as f64).abs()).collect();
        let scale = deviations
            .iter()
            .zip(&run.p_list)
            .take(2)
            .map(|(d, &p)| d * (p as f64).sqrt())
            .fold(0.0, f64::max);
        let within_envelope = deviations
            .iter()
            .zip(&run.p_list)
            .all(|(d, &p)| *d <= scale / (p as f64).sqrt() + 1e-12);
        let p_max = *run.p_list.last().expect("validated non-empty");
        let dev_max = *deviations.last().expect("validated non-empty");
        let pass = within_envelope && (p_max < RATIO_MIN_POWER || dev_max <= RATIO_TOL);
        report.push(
            &format!("kernel.ratio.u{u}"),
            pass,
            &json!({ "p": run.p_list, "u": u, "ratio": ratios, "isotropy_order": k, "envelope_scale": scale }),
        )?;
    }
    Ok(())
}

fn lcm(values: &[u64]) -> u64 {
    values.iter().fold(1, |l, &a| l / gcd(l, a) * a)
}

/// Largest power of the bigness tail: exact counts are cheap on weighted
/// projective spaces, torus counts need a spectral assembly per power.
const WPS_BIGNESS_TAIL: u64 = 2000;
const TORUS_BIGNESS_TAIL: u64 = 400;

fn moishezon(ctx: &Context, report: &mut Report) -> Result<()> {
    let spec = ctx.spec();
    let tol = &ctx.config.tolerances;
    let verdict = build_and_check(spec, ctx.config.resolution(), tol.tol_degeneracy, tol.tol_quadrature, ctx.seed)?;
    report.push("moishezon.verdict", true, &verdict)?;
    let (p_tail, p_rank) = match spec {
        CatalogSpec::Wps { weights, .. } => (WPS_BIGNESS_TAIL, lcm(weights).clamp(3, 12)),
        CatalogSpec::Torus { ripple, .. } if *ripple == 0.0 => (TORUS_BIGNESS_TAIL, 3),
        _ => {
            report.diagnose(Level::Info, "moishezon.bigness", "skipped: no exact section spaces for this model");
            return Ok(());
        }
    };
    let agreement = bigness_vs_rank(spec, p_tail, p_rank, ctx.seed)?;
    let criterion_implies_big = verdict.verdict != Verdict::Inconclusive;
    let pass = agreement.agree && (!criterion_implies_big || agreement.big);
    report.push("moishezon.bigness", pass, &json!({ "agreement": agreement, "p_tail": p_tail, "p_rank": p_rank }))?;
    Ok(())
}

/// Parses arguments, runs the subcommand and writes `report.json`. Returns
/// the process exit code.
pub fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return EXIT_CONFIG;
        }
    };
    let Some(config_path) = cli.config.as_deref() else {
        eprintln!("error: --config PATH is required");
        return EXIT_CONFIG;
    };
    let config = match RunConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_CONFIG;
        }
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_CONFIG;
        }
    };
    let ctx = Context::new(config, cli.seed, cli.out);
    pool.install(|| run_and_report(cli.command, &ctx, cli.strict))
}

fn run_and_report(command: Command, ctx: &Context, strict: bool) -> u8 {
    let mut report = match Report::new(command.name(), &ctx.config, ctx.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = run(command, ctx, &mut report) {
        if is_configuration_error(&e) {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        report.diagnose(Level::Error, command.name(), e.to_string());
    }
    if let Err(e) = report.write(&ctx.out.join("report.json")) {
        eprintln!("error: cannot write report: {e}");
        return EXIT_CONFIG;
    }
    for r in &report.results {
        println!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.check);
    }
    for d in report.diagnostics.iter().filter(|d| d.level != Level::Info) {
        eprintln!("{}: {}: {}", if d.level == Level::Error { "error" } else { "warning" }, d.check, d.message);
    }
    let failed = !report.all_pass() || report.has(Level::Error) || (strict && report.has(Level::Warning));
    if failed {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}
