//! Command-line front end. [`run`] parses arguments, dispatches and maps
//! errors to exit codes.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{Config, DomainConfig};
use crate::cutoffs::{eval_li, eval_lo, grad_li, gradient_bound, CollarCoords};
use crate::error::{Error, Result};
use crate::experiments::{homog_counterexample_report, operator_norm_sweep, rate_section6, rate_section7, RateTable};
use crate::extension::{trace_jump, Extension, Face};
use crate::field::{norm, Plain, RegionField};
use crate::fields::FieldDescriptor;
use crate::geometry::{CombSpec, Domain, MushroomSpec};
use crate::norms::regions::{
    comb_regions, comb_slice, cusp_regions, mushroom_regions, mushroom_slice, unit_cube, Selection,
};
use crate::norms::{lp_norm, plane_seminorm, poincare_quotient, sobolev_seminorm, NormReport, Region};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "sobexlab",
    version,
    about = "Sobolev extension experiments on mushroom, comb and cusp domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect the configured domain.
    Domain {
        #[command(subcommand)]
        action: DomainAction,
    },
    /// Tabulate the collar cut-offs.
    Cutoff {
        #[command(subcommand)]
        action: CutoffAction,
    },
    /// Evaluate the extension operator.
    Extend {
        #[command(subcommand)]
        action: ExtendAction,
    },
    /// Integrate a field over a set of regions.
    Norm(NormArgs),
    /// Run one of the rate experiments.
    Experiment(ExperimentArgs),
    /// Print or check configuration files.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Args, Debug, Clone)]
struct ConfigArg {
    /// JSON configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum DomainAction {
    /// Parameters with the derived centres and log2 radii.
    Describe {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Region tag of one point.
    Classify {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
    },
    /// Check the head placement of a mushroom domain.
    Validate {
        #[command(flatten)]
        cfg: ConfigArg,
    },
    /// Exact region measures of a mushroom domain.
    Measure {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum CutoffAction {
    /// CSV of `L^i`, `L^o` and the gradient bound over a collar cross-section.
    Sample {
        /// Outer collar radius `r`.
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        /// Grid size `ns,nxn` over the offset and axial directions.
        #[arg(long, value_delimiter = ',', default_value = "20,20")]
        grid: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ExtendAction {
    /// CSV of `E(u)` and `|∇E(u)|` on a cell-centred grid over the ambient cylinder.
    Sample {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        field: String,
        /// One grid size per coordinate.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extrapolated jump of `E(u)` across a face such as `head_bottom:1`.
    Jump {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        field: String,
        #[arg(long)]
        face: String,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum IntegrandArg {
    Lp,
    Grad,
    Poincare,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[arg(long)]
    field: String,
    #[arg(long, value_enum, default_value = "lp")]
    integrand: IntegrandArg,
    #[arg(long)]
    p: f64,
    /// all|omega|cube|stems|heads|collars|slab|index:k
    #[arg(long, default_value = "all")]
    regions: String,
    /// Integrate the extension `E(u)` instead of `u` (mushroom only).
    #[arg(long)]
    extend: bool,
    /// Integrate the gradient over the slice `x_n = t` instead.
    #[arg(long, allow_hyphen_values = true)]
    slice: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExperimentName {
    Homog,
    Opnorm,
    Rate6,
    Rate7,
}

impl ExperimentName {
    fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Homog => "homog",
            ExperimentName::Opnorm => "opnorm",
            ExperimentName::Rate6 => "rate6",
            ExperimentName::Rate7 => "rate7",
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment to run; overrides `experiment.name` of the config.
    #[arg(value_enum)]
    name: ExperimentName,
    #[command(flatten)]
    cfg: ConfigArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ConfigAction {
    /// Every configuration key with its default value.
    PrintDefaults,
    /// Parse a configuration and print its resolved form.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::Degenerate(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("SOBEXLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            // Fails only if the pool exists already, which keeps its size.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load(cfg: &ConfigArg) -> Result<Config> {
    match &cfg.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn mushroom(domain: &Domain) -> Result<&MushroomSpec> {
    match domain {
        Domain::Mushroom(s) => Ok(s),
        _ => Err(Error::Config("this command needs a mushroom domain".into())),
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// JSON to `out` when given, to standard output otherwise.
fn emit_json(v: &impl serde::Serialize, out: Option<&Path>) -> Result<()> {
    let text = pretty(v)?;
    match out {
        Some(p) => {
            write_atomic(p, text.as_bytes())?;
            println!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_csv(bytes: Vec<u8>, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            write_atomic(p, &bytes)?;
            println!("wrote {}", p.display());
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Domain { action } => domain_cmd(action),
        Command::Cutoff { action } => cutoff_cmd(action),
        Command::Extend { action } => extend_cmd(action),
        Command::Norm(args) => norm_cmd(args),
        Command::Experiment(args) => experiment_cmd(args),
        Command::Config { action } => config_cmd(action),
    }
}

fn domain_cmd(action: DomainAction) -> Result<i32> {
    match action {
        DomainAction::Describe { cfg, out } => {
            let domain = load(&cfg)?.domain.build()?;
            let v = match &domain {
                Domain::Mushroom(s) => s.describe(),
                Domain::Comb(c) => c.describe(),
                Domain::Cusp(c) => c.describe(),
            };
            emit_json(&v, out.as_deref())?;
            Ok(EXIT_OK)
        }
        DomainAction::Classify { cfg, point } => {
            let domain = load(&cfg)?.domain.build()?;
            if point.len() != domain.dim() {
                return Err(Error::invalid(format!(
                    "point has {} coordinates, the domain has dimension {}",
                    point.len(),
                    domain.dim()
                )));
            }
            let tag = match &domain {
                Domain::Mushroom(s) => s.classify(&point).to_string(),
                Domain::Comb(c) => c.classify(&point).to_string(),
                Domain::Cusp(c) => {
                    if c.in_ball(&point) {
                        "ball".to_string()
                    } else if c.in_cusp(&point) {
                        "cusp".to_string()
                    } else {
                        "outside".to_string()
                    }
                }
            };
            println!("{tag}");
            Ok(EXIT_OK)
        }
        DomainAction::Validate { cfg } => {
            let domain = load(&cfg)?.domain.build()?;
            let Domain::Mushroom(s) = &domain else {
                println!("ok");
                return Ok(EXIT_OK);
            };
            let report = s.validate_placement();
            print!("{}", pretty(&report)?);
            match report.first_violation() {
                None => {
                    println!("placement ok");
                    Ok(EXIT_OK)
                }
                Some(v) => {
                    println!("placement failed: {v} ({} violations)", report.violations.len());
                    Ok(EXIT_FAILED)
                }
            }
        }
        DomainAction::Measure { cfg, out } => {
            let domain = load(&cfg)?.domain.build()?;
            let s = mushroom(&domain)?;
            let mut regions = serde_json::Map::new();
            for tag in s.all_tags() {
                regions.insert(tag.to_string(), serde_json::to_value(s.region_measure(tag)?)?);
            }
            let v = json!({ "regions": regions, "omega": s.domain_measure() });
            emit_json(&v, out.as_deref())?;
            Ok(EXIT_OK)
        }
    }
}

fn cutoff_cmd(action: CutoffAction) -> Result<i32> {
    let CutoffAction::Sample { r, grid, out } = action;
    let [ns, nx] = grid[..] else {
        return Err(Error::invalid("--grid takes two sizes ns,nxn"));
    };
    if ns == 0 || nx == 0 {
        return Err(Error::invalid("grid sizes must be positive"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "xn", "Li", "Lo", "grad_Li", "bound"])?;
    let rho = r / 2.0;
    for i in 0..ns {
        let offset = (i as f64 + 0.5) / ns as f64 * rho;
        for j in 0..nx {
            let xn = (j as f64 + 0.5) / nx as f64;
            let c = CollarCoords::from_offset(offset, xn, r)?;
            let g = grad_li(&c)?.norm();
            w.write_record([
                c.s().to_string(),
                xn.to_string(),
                eval_li(&c).to_string(),
                eval_lo(&c).to_string(),
                g.to_string(),
                gradient_bound(&c).to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit_csv(bytes, out.as_deref())?;
    Ok(EXIT_OK)
}

fn extend_cmd(action: ExtendAction) -> Result<i32> {
    match action {
        ExtendAction::Sample { cfg, field, grid, out } => {
            let domain = load(&cfg)?.domain.build()?;
            let s = mushroom(&domain)?;
            let n = s.n;
            if grid.len() != n || grid.contains(&0) {
                return Err(Error::invalid(format!("--grid needs {n} positive sizes")));
            }
            let u = field.parse::<FieldDescriptor>()?.build(&domain)?;
            let ext = Extension::new(s, u.as_ref())?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            header.extend(["region", "E", "grad_E"].map(String::from));
            w.write_record(&header)?;
            let total: usize = grid.iter().product();
            for flat in 0..total {
                let mut rest = flat;
                let x: Vec<f64> = grid
                    .iter()
                    .enumerate()
                    .map(|(i, &g)| {
                        let j = rest % g;
                        rest /= g;
                        let len = if i == n - 1 { 3.0 } else { 1.0 };
                        (j as f64 + 0.5) / g as f64 * len
                    })
                    .collect();
                let tag = s.classify(&x);
                let (Ok(v), Ok(g)) = (ext.value_at(&x), ext.gradient_at(&x)) else {
                    continue;
                };
                let mut rec: Vec<String> = x.iter().map(|c| c.to_string()).collect();
                rec.extend([tag.to_string(), v.to_string(), norm(&g).to_string()]);
                w.write_record(&rec)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            emit_csv(bytes, out.as_deref())?;
            Ok(EXIT_OK)
        }
        ExtendAction::Jump {
            cfg,
            field,
            face,
            q,
            out,
        } => {
            let domain = load(&cfg)?.domain.build()?;
            let s = mushroom(&domain)?;
            let u = field.parse::<FieldDescriptor>()?.build(&domain)?;
            let face: Face = face.parse()?;
            let report = trace_jump(s, u.as_ref(), face, q)?;
            if out.is_some() {
                println!("{}: sup |jump| = {:e}", report.face, report.sup);
            }
            emit_json(&report, out.as_deref())?;
            Ok(EXIT_OK)
        }
    }
}

fn norm_csv(report: &NormReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["region", "value", "log2_value", "stderr"])?;
    for c in &report.contributions {
        w.write_record([
            c.region.clone(),
            format!("{:.17e}", c.value),
            format!("{:.17e}", c.log2_value),
            format!("{:.17e}", c.stderr),
        ])?;
    }
    w.write_record([
        "total".to_string(),
        format!("{:.17e}", report.total),
        format!("{:.17e}", report.log2_total),
        format!("{:.17e}", report.stderr),
    ])?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Regions of `sel` on `domain`, with the diameter used by Poincaré quotients.
fn select_regions(domain: &Domain, sel: Selection, extend: bool) -> Result<(Vec<Region>, f64)> {
    let n = domain.dim();
    match domain {
        Domain::Mushroom(s) => {
            if !extend && matches!(sel, Selection::All | Selection::Collars | Selection::Slab) {
                return Err(Error::invalid(format!(
                    "regions '{sel}' lie outside the domain; add --extend"
                )));
            }
            if sel == Selection::Cube {
                return Ok((unit_cube(n), (n as f64).sqrt()));
            }
            Ok((mushroom_regions(s, sel)?, ((n - 1) as f64 + 9.0).sqrt()))
        }
        Domain::Comb(c) => {
            let only = match sel {
                Selection::All | Selection::Omega => None,
                Selection::Index(k) => Some(k),
                other => return Err(Error::UnsupportedRegion(format!("'{other}' on a comb domain"))),
            };
            Ok((comb_regions(c, only)?, comb_diameter(c)))
        }
        Domain::Cusp(c) => match sel {
            Selection::All | Selection::Omega => Ok((cusp_regions(c), c.diameter())),
            other => Err(Error::UnsupportedRegion(format!("'{other}' on a cusp domain"))),
        },
    }
}

fn comb_diameter(c: &CombSpec) -> f64 {
    let last = c.n - 1;
    c.box_hi
        .iter()
        .enumerate()
        .map(|(i, &h)| if i == last { (h + 1.0).powi(2) } else { h * h })
        .sum::<f64>()
        .sqrt()
}

fn norm_cmd(args: NormArgs) -> Result<i32> {
    let cfg = load(&args.cfg)?;
    let domain = cfg.domain.build()?;
    let quad = &cfg.quadrature;
    let u = args.field.parse::<FieldDescriptor>()?.build(&domain)?;
    let ext;
    let plain = Plain(u.as_ref());
    let f: &dyn RegionField = if args.extend {
        ext = Extension::new(mushroom(&domain)?, u.as_ref())?;
        &ext
    } else {
        &plain
    };
    let sel: Selection = args.regions.parse()?;

    if let Some(t) = args.slice {
        if args.integrand != IntegrandArg::Grad {
            return Err(Error::invalid("--slice integrates the gradient; use --integrand grad"));
        }
        let slice = match &domain {
            Domain::Mushroom(s) => mushroom_slice(s, t)?,
            Domain::Comb(c) => comb_slice(c, t)?,
            Domain::Cusp(_) => return Err(Error::UnsupportedRegion("slices of a cusp domain".into())),
        };
        let report = plane_seminorm(f, &slice, args.p, quad)?;
        return finish_norm(&report, &args);
    }

    let (regions, diameter) = select_regions(&domain, sel, args.extend)?;
    match args.integrand {
        IntegrandArg::Lp => finish_norm(&lp_norm(f, &regions, args.p, quad)?, &args),
        IntegrandArg::Grad => finish_norm(&sobolev_seminorm(f, &regions, args.p, quad)?, &args),
        IntegrandArg::Poincare => {
            let report = poincare_quotient(f, &regions, diameter, args.p, quad)?;
            println!(
                "poincare quotient {:.10e} (rel_err {:.2e}), diameter^p {:.6e}",
                report.quotient, report.rel_err, report.diameter_p
            );
            if let Some(p) = &args.out {
                emit_json(&report, Some(p))?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn finish_norm(report: &NormReport, args: &NormArgs) -> Result<i32> {
    println!(
        "{} norm^p = {:.10e} (log2 {:.6}, rel_err {:.2e}) over {} regions",
        format!("{:?}", report.integrand).to_lowercase(),
        report.total,
        report.log2_total,
        report.rel_err,
        report.contributions.len()
    );
    if let Some(p) = &args.out {
        emit_json(report, Some(p))?;
    }
    if let Some(p) = &args.csv {
        emit_csv(norm_csv(report)?, Some(p))?;
    }
    Ok(EXIT_OK)
}

fn experiment_cmd(args: ExperimentArgs) -> Result<i32> {
    let mut cfg = load(&args.cfg)?;
    cfg.experiment.name = args.name.as_str().to_string();
    let domain = cfg.domain.build()?;
    let quad = &cfg.quadrature;
    let exp = &cfg.experiment;
    let table: RateTable = match args.name {
        ExperimentName::Homog => homog_counterexample_report(mushroom(&domain)?, &exp.mlist, quad)?,
        ExperimentName::Opnorm => operator_norm_sweep(mushroom(&domain)?, &exp.family()?, &exp.mlist, quad)?,
        ExperimentName::Rate7 => rate_section7(mushroom(&domain)?, exp.kmax, exp.window(), quad)?,
        ExperimentName::Rate6 => {
            let (Domain::Comb(c), DomainConfig::Comb { p, q, .. }) = (&domain, &cfg.domain) else {
                return Err(Error::Config("rate6 needs a comb domain".into()));
            };
            rate_section6(c, exp.kmax, *p, *q, exp.window(), quad)?
        }
    };

    for c in &table.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for f in &table.fits {
        println!(
            "fit {} over k in [{}, {}]: slope {:.6} (residual {:.2e})",
            f.quantity, f.window.0, f.window.1, f.slope, f.residual
        );
    }

    let json_out = args.out.or_else(|| cfg.output.json.as_ref().map(PathBuf::from));
    let csv_out = args.csv.or_else(|| cfg.output.csv.as_ref().map(PathBuf::from));
    if let Some(p) = json_out {
        let v = json!({ "config": cfg, "seed": cfg.quadrature.seed, "report": table });
        emit_json(&v, Some(&p))?;
    }
    if let Some(p) = csv_out {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        emit_csv(buf, Some(&p))?;
    }
    Ok(if table.passed() { EXIT_OK } else { EXIT_FAILED })
}

fn config_cmd(action: ConfigAction) -> Result<i32> {
    match action {
        ConfigAction::PrintDefaults => print!("{}", Config::default().to_json()),
        ConfigAction::Check { config } => print!("{}", Config::load(&config)?.to_json()),
    }
    Ok(EXIT_OK)
}
