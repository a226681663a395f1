use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fluxcount::conformal::{invariance_check, ConformalMap};
use fluxcount::dirac::{conjugation_residual, dirac_spectrum, numeric_spectrum_check, DEFAULT_MODES};
use fluxcount::domain::DomainSpec;
use fluxcount::field::{FieldSpec, RobinSpec};
use fluxcount::fourier::Periodic;
use fluxcount::hardy::toeplitz_count;
use fluxcount::index::{aps_index, ceil_ac, eta_term, grubb_index, lower_bound, FluxLedger, Rational, RationalLedger};
use fluxcount::planar::{fem_count, Spin};
use fluxcount::radial::{total_count, FiberCounterRegistry, RadialProblem};
use fluxcount::routes::RouteRegistry;
use fluxcount::scenario::{figure1_data, flux_ledger, run, Scenario};
use fluxcount::semiclassical::{de_gennes_c1, sweep_disc};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Counting negative eigenvalues of magnetic Robin Laplacians.
#[derive(Parser)]
#[command(name = "fluxcount", version)]
struct Cli {
    /// Seed for random test vectors and iterative eigensolvers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fiber-by-fiber count on a disc or annulus.
    RadialCount {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        /// galerkin or zero-energy.
        #[arg(long, default_value = "galerkin")]
        counter: String,
        #[arg(long)]
        cutoff: Option<i64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write the gauge as (r, phi, a) rows.
        #[arg(long)]
        gauge_csv: Option<PathBuf>,
    },
    /// P1 finite-element count.
    FemCount {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 5)]
        level: usize,
        #[arg(long, value_enum, default_value_t = SpinArg::Up)]
        spin: SpinArg,
        /// Number of negative eigenvalues to resolve.
        #[arg(long, default_value_t = 8)]
        report: usize,
    },
    /// Spectrum of -i d/ds + V on a circle.
    DiracSpectrum {
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long, default_value_t = -5, allow_hyphen_values = true)]
        m_min: i64,
        #[arg(long, default_value_t = 5, allow_hyphen_values = true)]
        m_max: i64,
        /// Fourier truncation of the numeric check.
        #[arg(long, default_value_t = DEFAULT_MODES)]
        modes: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Negative count of the Hardy-space compression of -i d/ds + V.
    ToeplitzCount {
        #[command(flatten)]
        potential: PotentialArgs,
        /// Truncations to try.
        #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256])]
        m: Vec<usize>,
    },
    /// FEM counts on a mapped domain and on the disc after pullback.
    ConformalCheck {
        /// Map coefficients as k,re,im triples.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        map: Vec<f64>,
        #[arg(long, default_value = "constant:3")]
        field: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        robin: f64,
        #[arg(long, default_value_t = 5)]
        level: usize,
    },
    /// Counts and eigenvalue sums below the first Landau level on a disc.
    SemiclassicalSweep {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.02, 0.01])]
        h: Vec<f64>,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        /// Also compute the de Gennes constant.
        #[arg(long)]
        c1: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Ceiling bound, index and eta term from flux data.
    Index {
        /// Per-component fluxes, outer first. Accepts p/q in rational mode.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        flux: Vec<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        robin_flux: Vec<String>,
        #[arg(short, default_value_t = 0)]
        d: usize,
        /// Exact arithmetic on p/q inputs.
        #[arg(long)]
        rational: bool,
    },
    /// Low-lying fiber eigenvalues against field strength (CSV).
    Figure1Data {
        /// start:stop:step or a comma list.
        #[arg(long, default_value = "0:8:0.1")]
        beta: String,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
        m_min: i64,
        #[arg(long, default_value_t = 6, allow_hyphen_values = true)]
        m_max: i64,
        #[arg(long, default_value_t = 2)]
        branches: usize,
        #[arg(long, default_value_t = 1024)]
        n: usize,
    },
    /// Runs scenario configs through every requested route.
    Validate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Only parse and check the configs.
        #[arg(long)]
        dry_run: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpinArg {
    Up,
    Down,
}

#[derive(Args)]
struct Problem {
    /// Scenario config; overrides the inline options below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// disc, annulus or mapped-disc.
    #[arg(long, default_value = "disc")]
    domain: String,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    inner: Option<f64>,
    #[arg(long)]
    outer: Option<f64>,
    /// Map coefficients as k,re,im triples.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    map: Vec<f64>,
    /// constant:B, gaussian:A,w or affine:c0,cx,cy.
    #[arg(long, default_value = "constant:1")]
    field: String,
    /// Constant Robin coefficient per boundary component.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    robin: Vec<f64>,
}

#[derive(Args)]
struct PotentialArgs {
    /// Circle length.
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    length: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a0: f64,
    /// Coefficients of cos(k w s), k = 1, 2, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cos: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sin: Vec<f64>,
}

impl PotentialArgs {
    fn periodic(&self) -> Periodic {
        Periodic::trig(self.a0, &self.cos, &self.sin, self.length)
    }
}

fn parse_map(v: &[f64]) -> Result<ConformalMap> {
    if v.len() % 3 != 0 {
        bail!("map coefficients come in k,re,im triples");
    }
    let terms: Vec<(usize, Complex64)> = v
        .chunks(3)
        .map(|c| {
            if c[0] < 2.0 || c[0].fract() != 0.0 {
                bail!("map exponent {} must be an integer >= 2", c[0]);
            }
            Ok((c[0] as usize, Complex64::new(c[1], c[2])))
        })
        .collect::<Result<_>>()?;
    Ok(ConformalMap::new(&terms)?)
}

fn parse_field(s: &str) -> Result<FieldSpec> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| anyhow!("field must look like kind:params, got '{s}'"))?;
    let nums: Vec<f64> = rest.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().with_context(|| format!("bad field parameters '{rest}'"))?;
    match (kind, nums.as_slice()) {
        ("constant", [b]) => Ok(FieldSpec::constant(*b)),
        ("gaussian", [a, w]) if *w > 0.0 => Ok(FieldSpec::gaussian(*a, *w)),
        ("affine", [c0, cx, cy]) => Ok(FieldSpec::affine(*c0, *cx, *cy)),
        _ => bail!("unsupported field '{s}' (use constant:B, gaussian:A,w with w > 0, affine:c0,cx,cy)"),
    }
}

impl Problem {
    fn scenario(&self, routes: &[&str]) -> Result<Scenario> {
        if let Some(path) = &self.config {
            return Ok(Scenario::from_path(path)?);
        }
        let domain = match self.domain.as_str() {
            "disc" => DomainSpec::disc(self.radius)?,
            "annulus" => DomainSpec::annulus(
                self.inner.ok_or_else(|| anyhow!("--inner is required for an annulus"))?,
                self.outer.ok_or_else(|| anyhow!("--outer is required for an annulus"))?,
            )?,
            "mapped-disc" => {
                let map = parse_map(&self.map)?;
                map.check_univalent()?;
                DomainSpec::MappedDisc(map)
            }
            other => bail!("unknown domain '{other}' (use disc, annulus or mapped-disc)"),
        };
        let robin = if self.robin.is_empty() {
            RobinSpec::neumann(domain.components())
        } else {
            RobinSpec::constant(&self.robin)
        };
        Ok(Scenario::new("cli", domain, parse_field(&self.field)?, robin, routes))
    }
}

fn parse_betas(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.parse::<f64>()).collect::<std::result::Result<_, _>>()?;
        let (a, b, h) = (v[0], v[1], v[2]);
        if !(h > 0.0) || b < a {
            bail!("beta range must be start:stop:step with step > 0 and stop >= start");
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + h * i as f64).collect());
    }
    Ok(s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?)
}

fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: i64 = q.trim().parse()?;
            if q == 0 {
                bail!("zero denominator in '{s}'");
            }
            Ok(Rational::new(p.trim().parse()?, q))
        }
        None => Ok(Rational::from_integer(s.parse()?)),
    }
}

fn parse_float(s: &str) -> Result<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => Ok(p.trim().parse::<f64>()? / q.trim().parse::<f64>()?),
        None => Ok(s.parse()?),
    }
}

struct Sink(Box<dyn Write>);

impl Sink {
    fn open(path: &Option<PathBuf>) -> Result<Self> {
        Ok(Self(match path {
            Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
            None => Box::new(std::io::stdout().lock()),
        }))
    }

    fn json(&mut self, v: &impl Serialize) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.0, v)?;
        writeln!(self.0)?;
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut self.0);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FLUXCOUNT_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("FLUXCOUNT_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("FLUXCOUNT_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    let seed = cli.seed.unwrap_or(0);
    let mut out = Sink::open(&cli.output)?;
    match cli.command {
        Command::RadialCount { problem, n, counter, cutoff, format, gauge_csv } => {
            let s = problem.scenario(&["radial"])?;
            let registry = FiberCounterRegistry::default();
            let c = registry.get(&counter).ok_or_else(|| anyhow!("unknown counter '{counter}' (known: {})", registry.names().join(", ")))?;
            let p = RadialProblem::new(&s.field, &s.domain, &s.robin)?;
            let t = total_count(&p, n, cutoff.unwrap_or_else(|| p.default_cutoff()), c)?;
            if let Some(path) = &gauge_csv {
                #[derive(Serialize)]
                struct Row {
                    r: f64,
                    phi: f64,
                    a: f64,
                }
                Sink::open(&Some(path.clone()))?.csv(p.radial_gauge().table(n).into_iter().map(|(r, phi, a)| Row { r, phi, a }))?;
            }
            match format {
                Format::Json => out.json(&json!({ "fluxes": p.gauge.fluxes, "robin_fluxes": p.gauge.robin_fluxes, "result": t }))?,
                Format::Csv => {
                    #[derive(Serialize)]
                    struct Row {
                        m: i64,
                        count: usize,
                        lowest: f64,
                    }
                    out.csv(t.fibers.iter().map(|f| Row { m: f.m, count: f.count, lowest: f.lowest.first().copied().unwrap_or(f64::NAN) }))?
                }
            }
        }
        Command::FemCount { problem, level, spin, report } => {
            let s = problem.scenario(&["fem"])?;
            let spin = match spin {
                SpinArg::Up => Spin::Up,
                SpinArg::Down => Spin::Down,
            };
            let (c, _) = fem_count(&s.domain, &s.field, &s.robin, level, spin, report, seed)?;
            let ledger = flux_ledger(&s, level)?;
            out.json(&json!({
                "fluxes": ledger.fluxes,
                "robin_fluxes": ledger.robin_fluxes,
                "bound": lower_bound(&ledger),
                "threshold_critical": ledger.threshold_critical(),
                "result": c,
            }))?;
        }
        Command::DiracSpectrum { potential, m_min, m_max, modes, format } => {
            if m_max < m_min {
                bail!("--m-max must be at least --m-min");
            }
            let v = potential.periodic();
            let spec = dirac_spectrum(&v, (m_min, m_max), 0);
            match format {
                Format::Json => {
                    let check = numeric_spectrum_check(&v, modes);
                    out.json(&json!({
                        "length": spec.length,
                        "flux": spec.flux,
                        "modes": spec.modes,
                        "eigenvalues": spec.eigenvalues,
                        "numeric_deviation": check.deviation,
                        "gap_deviation": check.gap_deviation,
                        "conjugation_residual": conjugation_residual(&v, v.omega() * (v.flux() + 0.5), modes),
                    }))?
                }
                Format::Csv => {
                    #[derive(Serialize)]
                    struct Row {
                        m: i64,
                        mu: f64,
                    }
                    out.csv(spec.modes.iter().zip(&spec.eigenvalues).map(|(&m, &mu)| Row { m, mu }))?
                }
            }
        }
        Command::ToeplitzCount { potential, m } => {
            let v = potential.periodic();
            let counts: Vec<_> = m.iter().map(|&mm| toeplitz_count(&v, mm)).collect();
            out.json(&json!({
                "flux": v.flux(),
                "bound": ceil_ac(-v.flux()).value.max(0),
                "counts": counts,
            }))?;
        }
        Command::ConformalCheck { map, field, robin, level } => {
            let map = parse_map(&map)?;
            let r = invariance_check(&map, &parse_field(&field)?, &RobinSpec::constant(&[robin]), level)?;
            out.json(&r)?;
            if !r.agrees() {
                return Ok(ExitCode::from(3));
            }
        }
        Command::SemiclassicalSweep { radius, h, n, c1, format } => {
            let sweep = sweep_disc(radius, &h, n)?;
            let dg = if c1 { Some(de_gennes_c1(8.0, 50)?) } else { None };
            match format {
                Format::Json => out.json(&json!({ "sweep": sweep, "de_gennes": dg }))?,
                Format::Csv => {
                    #[derive(Serialize)]
                    struct Row {
                        h: f64,
                        count: usize,
                        prediction: usize,
                        h_count: f64,
                        sum_e: f64,
                        sum_gap: f64,
                        scaled_gap: f64,
                        area_constant: f64,
                        c1: Option<f64>,
                    }
                    let area = sweep.area_constant;
                    out.csv(sweep.rows.iter().map(|r| Row {
                        h: r.h,
                        count: r.count,
                        prediction: r.prediction,
                        h_count: r.h_count(),
                        sum_e: r.sum_e,
                        sum_gap: r.sum_gap,
                        scaled_gap: r.scaled_gap(),
                        area_constant: area,
                        c1: dg.as_ref().map(|d| d.c1),
                    }))?
                }
            }
        }
        Command::Index { flux, robin_flux, d, rational } => {
            let robin_flux = if robin_flux.is_empty() { vec!["0".to_string(); flux.len()] } else { robin_flux };
            if rational {
                let f: Vec<Rational> = flux.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?;
                let g: Vec<Rational> = robin_flux.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?;
                let l = RationalLedger::new(d, f, g)?;
                let eta = l.eta_term().ok();
                let grubb = l.grubb_index().ok();
                out.json(&json!({
                    "bound": l.lower_bound(),
                    "aps_index": l.aps_index(),
                    "eta_term": eta.map(|r| r.to_string()),
                    "grubb_index": grubb.map(|r| r.to_string()),
                    "grubb_consistent": grubb.map(|r| r == Rational::from_integer(l.aps_index())),
                }))?;
            } else {
                let f: Vec<f64> = flux.iter().map(|s| parse_float(s)).collect::<Result<_>>()?;
                let g: Vec<f64> = robin_flux.iter().map(|s| parse_float(s)).collect::<Result<_>>()?;
                let l = FluxLedger::new(d, f, g)?;
                out.json(&json!({
                    "bound": lower_bound(&l),
                    "aps_index": aps_index(&l),
                    "eta_term": eta_term(&l).ok(),
                    "grubb_index": grubb_index(&l).ok(),
                    "threshold_critical": l.threshold_critical(),
                }))?;
            }
        }
        Command::Figure1Data { beta, radius, m_min, m_max, branches, n } => {
            if m_max < m_min {
                bail!("--m-max must be at least --m-min");
            }
            let pts = figure1_data(&parse_betas(&beta)?, radius, (m_min, m_max), branches, n)?;
            out.csv(pts)?;
        }
        Command::Validate { configs, dry_run } => {
            let registry = RouteRegistry::default();
            let mut scenarios = Vec::new();
            for path in &configs {
                let mut s = Scenario::from_path(path)?;
                if let Some(seed) = cli.seed {
                    s.seed = seed;
                }
                scenarios.push(s);
            }
            if dry_run {
                out.json(&json!({ "valid": configs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>() }))?;
                return Ok(ExitCode::SUCCESS);
            }
            let mut violated = false;
            let mut reports = Vec::new();
            for s in &scenarios {
                let r = run(s, &registry)?;
                violated |= r.bound_violated();
                if let Some(p) = &s.outputs.json {
                    Sink::open(&Some(p.clone()))?.json(&r)?;
                }
                if let Some(p) = &s.outputs.csv {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        scenario: &'a str,
                        route: &'a str,
                        resolution: usize,
                        count: i64,
                        bound: i64,
                    }
                    let (scenario, bound) = (r.name.as_str(), r.bound);
                    let rows = r.routes.iter().flat_map(|(name, o)| {
                        o.schedule.iter().map(move |&(resolution, count)| Row { scenario, route: name, resolution, count, bound })
                    });
                    Sink::open(&Some(p.clone()))?.csv(rows)?;
                }
                reports.push(r);
            }
            if reports.len() == 1 {
                out.json(&reports[0])?;
            } else {
                out.json(&reports)?;
            }
            if violated {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
