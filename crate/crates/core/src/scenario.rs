//! Scenario configs, the multi-route runner and its report.

use crate::conformal::{pullback, ConformalMap};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{robin_fluxes, FieldKind, FieldSpec, Interpolation, RadialProfile, RobinData, RobinSpec};
use crate::gauge::{solve_potential_on_mesh, solve_radial_potential};
use crate::index::{aps_index, lower_bound, FluxLedger};
use crate::quadrature::gauss_legendre;
use crate::radial::{FiberCounterRegistry, RadialProblem};
use crate::routes::{RouteOutcome, RouteRegistry, RunContext};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;
use toml::Spanned;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub radial: Vec<usize>,
    pub fem: Vec<usize>,
    pub toeplitz: Vec<usize>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { radial: vec![1024, 2048, 4096], fem: vec![3, 4, 5], toeplitz: vec![64, 128, 256] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Outputs {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub domain: DomainSpec,
    pub field: FieldSpec,
    pub robin: RobinSpec,
    pub schedule: Schedule,
    pub routes: Vec<String>,
    pub radial_counter: String,
    pub outputs: Outputs,
    pub seed: u64,
}

impl Scenario {
    pub fn new(name: &str, domain: DomainSpec, field: FieldSpec, robin: RobinSpec, routes: &[&str]) -> Self {
        Self {
            name: name.into(),
            domain,
            field,
            robin,
            schedule: Schedule::default(),
            routes: routes.iter().map(|r| r.to_string()).collect(),
            radial_counter: "galerkin".into(),
            outputs: Outputs::default(),
            seed: 0,
        }
    }

    /// `int_0^R B(r) r dr` for a radial field.
    pub fn field_flux_radial(&self, radius: f64) -> f64 {
        radial_flux(&self.field, radius)
    }

    /// Checks routes and data against the domain.
    pub fn validate(&self, registry: &RouteRegistry) -> Result<()> {
        self.validate_inner(registry).map_err(Error::Config)
    }

    fn validate_inner(&self, registry: &RouteRegistry) -> std::result::Result<(), String> {
        if self.routes.is_empty() {
            return Err("at least one route is required".into());
        }
        for r in &self.routes {
            let route = registry.get(r).ok_or_else(|| format!("unknown route '{r}' (known: {})", registry.names().join(", ")))?;
            route.supports(self).map_err(|e| format!("route '{r}': {e}"))?;
        }
        if self.robin.components.len() != self.domain.components() {
            return Err(format!(
                "Robin data has {} components, the domain has {}",
                self.robin.components.len(),
                self.domain.components()
            ));
        }
        for (name, list) in [("radial", &self.schedule.radial), ("fem", &self.schedule.fem), ("toeplitz", &self.schedule.toeplitz)] {
            if list.is_empty() || list.windows(2).any(|w| w[1] <= w[0]) || list[0] == 0 {
                return Err(format!("resolution.{name} must be a nonempty increasing list of positive integers"));
            }
        }
        if self.schedule.fem.iter().any(|&l| l > 8) {
            return Err("FEM levels above 8 are not supported".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn radial_flux(field: &FieldSpec, radius: f64) -> f64 {
    let (x, w) = gauss_legendre(24);
    let panels = 16;
    let h = radius / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            let r = h * (p as f64 + 0.5 * (xi + 1.0));
            s += 0.5 * h * wi * r * field.radial_value(r).unwrap_or(f64::NAN);
        }
    }
    s
}

/// Per-component fluxes. Radial data use the closed-form gauge; simply
/// connected domains with a pointwise field use quadrature of the total;
/// otherwise the FEM gauge at `fem_level` is used.
pub fn flux_ledger(s: &Scenario, fem_level: usize) -> Result<FluxLedger> {
    let lengths = s.domain.lengths();
    let (robin, _) = robin_fluxes(&s.robin, &lengths)?;
    let d = s.domain.d();
    if s.domain.is_radial() && s.field.is_radial() {
        let g = solve_radial_potential(&s.field, &s.domain)?;
        return FluxLedger::new(d, g.fluxes, robin);
    }
    let pointwise = !matches!(s.field.kind, FieldKind::Nodal(_));
    match (&s.domain, pointwise) {
        (DomainSpec::Disc { radius }, true) => {
            let map = ConformalMap::identity();
            let scaled = s.field.clone();
            let r = *radius;
            let f = FieldSpec::function(move |x, y| r * r * scaled.value(r * x, r * y).unwrap_or(f64::NAN));
            let pb = pullback(&map, &f, &RobinSpec::neumann(1))?;
            FluxLedger::new(0, vec![pb.flux_disc], robin)
        }
        (DomainSpec::MappedDisc(map), true) => {
            let pb = pullback(map, &s.field, &RobinSpec::neumann(1))?;
            FluxLedger::new(0, vec![pb.flux_disc], robin)
        }
        _ => {
            let mesh = s.domain.mesh(fem_level)?;
            let g = solve_potential_on_mesh(&s.field, &mesh)?;
            FluxLedger::new(d, g.fluxes, robin)
        }
    }
}

/// Outcome labels attached to a report.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Verdict {
    #[serde(rename = "BOUND-OK")]
    BoundOk,
    #[serde(rename = "BOUND-VIOLATED")]
    BoundViolated,
    #[serde(rename = "EQUALITY")]
    Equality,
    #[serde(rename = "STRICT")]
    Strict,
    #[serde(rename = "RADIAL-FEM-AGREE")]
    RoutesAgree,
    #[serde(rename = "RADIAL-FEM-DISAGREE")]
    RoutesDisagree,
    #[serde(rename = "TOEPLITZ-LE-FEM")]
    ToeplitzBelow,
    #[serde(rename = "TOEPLITZ-GT-FEM")]
    ToeplitzAbove,
    #[serde(rename = "UNSTABLE")]
    Unstable(String),
    #[serde(rename = "THRESHOLD-CRITICAL")]
    ThresholdCritical,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub name: String,
    pub seed: u64,
    pub d: usize,
    pub fluxes: Vec<f64>,
    pub robin_fluxes: Vec<f64>,
    pub flux_total: f64,
    pub bound: i64,
    pub aps_index: i64,
    pub threshold_critical: bool,
    pub routes: BTreeMap<String, RouteOutcome>,
    pub verdicts: Vec<Verdict>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn bound_violated(&self) -> bool {
        self.verdicts.contains(&Verdict::BoundViolated)
    }

    pub fn count(&self, route: &str) -> Option<i64> {
        self.routes.get(route).map(|r| r.count)
    }
}

fn verdicts(ledger: &FluxLedger, bound: i64, routes: &BTreeMap<String, RouteOutcome>) -> Vec<Verdict> {
    let critical = ledger.threshold_critical();
    let mut v = Vec::new();
    if critical {
        v.push(Verdict::ThresholdCritical);
    }
    // the bound is judged against FEM, or the radial count when FEM was not run
    let fem = routes.get("fem");
    if let Some(reference) = fem.or_else(|| routes.get("radial")) {
        if reference.count < bound && !critical {
            v.push(Verdict::BoundViolated);
        } else {
            v.push(Verdict::BoundOk);
            v.push(if reference.count == bound.max(0) { Verdict::Equality } else { Verdict::Strict });
        }
    }
    if let Some(fem) = fem {
        if let Some(r) = routes.get("radial") {
            v.push(if r.count == fem.count { Verdict::RoutesAgree } else { Verdict::RoutesDisagree });
        }
        if let Some(t) = routes.get("toeplitz") {
            v.push(if t.count <= fem.count { Verdict::ToeplitzBelow } else { Verdict::ToeplitzAbove });
        }
    }
    for (name, r) in routes {
        if !r.stabilized {
            v.push(Verdict::Unstable(name.clone()));
        }
    }
    v
}

/// Runs every requested route. Deterministic given the scenario, apart
/// from `timings_ms`.
pub fn run(s: &Scenario, registry: &RouteRegistry) -> Result<Report> {
    s.validate(registry)?;
    let t0 = Instant::now();
    let fem_level = s.schedule.fem.last().copied().unwrap_or(5);
    let ledger = flux_ledger(s, fem_level)?;
    let counters = FiberCounterRegistry::default();
    let ctx = RunContext { ledger: &ledger, fiber_counters: &counters, seed: s.seed };
    let mut timings = BTreeMap::new();
    timings.insert("fluxes".to_string(), t0.elapsed().as_secs_f64() * 1e3);
    let mut routes = BTreeMap::new();
    for name in &s.routes {
        let t = Instant::now();
        let route = registry.get(name).expect("validated");
        routes.insert(name.clone(), route.run(s, &ctx)?);
        timings.insert(name.clone(), t.elapsed().as_secs_f64() * 1e3);
    }
    let bound = lower_bound(&ledger);
    Ok(Report {
        schema: SCHEMA_VERSION,
        name: s.name.clone(),
        seed: s.seed,
        d: ledger.d,
        flux_total: ledger.total(),
        fluxes: ledger.fluxes.clone(),
        robin_fluxes: ledger.robin_fluxes.clone(),
        bound,
        aps_index: aps_index(&ledger),
        threshold_critical: ledger.threshold_critical(),
        verdicts: verdicts(&ledger, bound, &routes),
        routes,
        timings_ms: timings,
    })
}

/// Independent scenarios in parallel; results in input order.
pub fn run_all(scenarios: &[Scenario], registry: &RouteRegistry) -> Vec<Result<Report>> {
    scenarios.par_iter().map(|s| run(s, registry)).collect()
}

/// One point of a low-lying fiber branch on the disc with constant field.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub beta: f64,
    pub flux: f64,
    pub m: i64,
    pub branch: usize,
    pub eigenvalue: f64,
}

/// Lowest `branches` eigenvalues of each fiber `m in m_range` for every
/// `beta`, on `D(0, radius)` with Neumann data.
pub fn figure1_data(betas: &[f64], radius: f64, m_range: (i64, i64), branches: usize, n: usize) -> Result<Vec<BranchPoint>> {
    let domain = DomainSpec::disc(radius)?;
    let rows: Vec<Vec<BranchPoint>> = betas
        .par_iter()
        .map(|&beta| {
            let problem = RadialProblem::new(&FieldSpec::constant(beta), &domain, &RobinSpec::neumann(1))?;
            let flux = problem.gauge.fluxes[0];
            let mut out = Vec::new();
            for m in m_range.0..=m_range.1 {
                let pencil = problem.fiber(m, n).assemble()?;
                for k in 0..branches.min(pencil.len()) {
                    out.push(BranchPoint { beta, flux, m, branch: k, eigenvalue: pencil.eigenvalue(k, 1e-13) });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

// ---- config parsing ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: Spanned<u32>,
    name: Option<String>,
    seed: Option<u64>,
    routes: Spanned<Vec<String>>,
    radial_counter: Option<Spanned<String>>,
    domain: Spanned<RawDomain>,
    field: Spanned<RawField>,
    robin: Option<Spanned<RawRobin>>,
    resolution: Option<Spanned<RawResolution>>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    kind: Spanned<String>,
    radius: Option<Spanned<f64>>,
    inner: Option<Spanned<f64>>,
    outer: Option<Spanned<f64>>,
    /// `[k, re, im]` triples.
    coefficients: Option<Spanned<Vec<[f64; 3]>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    kind: Spanned<String>,
    value: Option<Spanned<f64>>,
    amplitude: Option<Spanned<f64>>,
    width: Option<Spanned<f64>>,
    c0: Option<Spanned<f64>>,
    cx: Option<Spanned<f64>>,
    cy: Option<Spanned<f64>>,
    r: Option<Spanned<Vec<f64>>>,
    b: Option<Spanned<Vec<f64>>>,
    interpolation: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobin {
    values: Option<Vec<f64>>,
    fourier: Option<Vec<RawFourier>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFourier {
    a0: f64,
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResolution {
    radial: Option<Vec<usize>>,
    fem: Option<Vec<usize>>,
    toeplitz: Option<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    json: Option<PathBuf>,
    csv: Option<PathBuf>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn at<T>(text: &str, s: &Spanned<T>, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {}: {msg}", line_of(text, s.span().start)))
}

fn parse(text: &str) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        let msg = e.message().to_string();
        Error::Config(match line {
            Some(l) => format!("line {l}: {msg}"),
            None => msg,
        })
    })?;
    if *raw.schema.get_ref() != SCHEMA_VERSION {
        return Err(at(text, &raw.schema, format!("unsupported schema {} (expected {SCHEMA_VERSION})", raw.schema.get_ref())));
    }
    let dom = raw.domain.get_ref();
    let need = |v: &Option<Spanned<f64>>, name: &str| -> Result<(f64, Spanned<()>)> {
        v.as_ref()
            .map(|x| (*x.get_ref(), Spanned::new(x.span(), ())))
            .ok_or_else(|| at(text, &dom.kind, format!("domain kind '{}' needs '{name}'", dom.kind.get_ref())))
    };
    let domain = match dom.kind.get_ref().as_str() {
        "disc" => {
            let r = dom.radius.as_ref().map_or(1.0, |r| *r.get_ref());
            DomainSpec::disc(r).map_err(|e| at(text, dom.radius.as_ref().unwrap_or(&Spanned::new(dom.kind.span(), 0.0)), e))?
        }
        "annulus" => {
            let (inner, _) = need(&dom.inner, "inner")?;
            let (outer, sp) = need(&dom.outer, "outer")?;
            DomainSpec::annulus(inner, outer).map_err(|e| at(text, &sp, e))?
        }
        "mapped-disc" => {
            let coeffs = dom.coefficients.as_ref().ok_or_else(|| at(text, &dom.kind, "domain kind 'mapped-disc' needs 'coefficients'"))?;
            let mut terms = Vec::new();
            for c in coeffs.get_ref() {
                if c[0] < 2.0 || c[0].fract() != 0.0 {
                    return Err(at(text, coeffs, format!("map exponent {} must be an integer >= 2", c[0])));
                }
                terms.push((c[0] as usize, Complex64::new(c[1], c[2])));
            }
            ConformalMap::new(&terms)
                .and_then(|m| m.check_univalent().map(|_| DomainSpec::MappedDisc(m)))
                .map_err(|e| at(text, coeffs, e))?
        }
        other => return Err(at(text, &dom.kind, format!("unknown domain kind '{other}' (use disc, annulus or mapped-disc)"))),
    };

    let f = raw.field.get_ref();
    let need = |v: &Option<Spanned<f64>>, name: &str| -> Result<f64> {
        v.as_ref().map(|x| *x.get_ref()).ok_or_else(|| at(text, &f.kind, format!("field kind '{}' needs '{name}'", f.kind.get_ref())))
    };
    let field = match f.kind.get_ref().as_str() {
        "constant" => FieldSpec::constant(need(&f.value, "value")?),
        "gaussian" => {
            let amplitude = need(&f.amplitude, "amplitude")?;
            let width = need(&f.width, "width")?;
            if !(width > 0.0) {
                return Err(at(text, f.width.as_ref().expect("checked"), "width must be positive"));
            }
            FieldSpec::gaussian(amplitude, width)
        }
        "affine" => FieldSpec::affine(need(&f.c0, "c0")?, need(&f.cx, "cx")?, need(&f.cy, "cy")?),
        "radial-profile" => {
            let (r, b) = match (&f.r, &f.b) {
                (Some(r), Some(b)) => (r, b),
                _ => return Err(at(text, &f.kind, "field kind 'radial-profile' needs 'r' and 'b'")),
            };
            let interp = match &f.interpolation {
                None => Interpolation::Pchip,
                Some(i) => match i.get_ref().as_str() {
                    "pchip" => Interpolation::Pchip,
                    "linear" => Interpolation::Linear,
                    other => return Err(at(text, i, format!("unknown interpolation '{other}' (use linear or pchip)"))),
                },
            };
            FieldSpec::radial(RadialProfile::new(r.get_ref().clone(), b.get_ref().clone(), interp).map_err(|e| at(text, r, e))?)
        }
        other => return Err(at(text, &f.kind, format!("unknown field kind '{other}' (use constant, gaussian, affine or radial-profile)"))),
    };

    let robin = match &raw.robin {
        None => RobinSpec::neumann(domain.components()),
        Some(sp) => {
            let r = sp.get_ref();
            match (&r.values, &r.fourier) {
                (Some(v), None) => RobinSpec::constant(v),
                (None, Some(f)) => RobinSpec {
                    components: f.iter().map(|c| RobinData::Fourier { a0: c.a0, cos: c.cos.clone(), sin: c.sin.clone() }).collect(),
                },
                _ => return Err(at(text, sp, "give exactly one of robin.values and robin.fourier")),
            }
        }
    };

    let mut schedule = Schedule::default();
    if let Some(res) = &raw.resolution {
        let r = res.get_ref();
        if let Some(v) = &r.radial {
            schedule.radial = v.clone();
        }
        if let Some(v) = &r.fem {
            schedule.fem = v.clone();
        }
        if let Some(v) = &r.toeplitz {
            schedule.toeplitz = v.clone();
        }
    }

    let registry = RouteRegistry::default();
    let counters = FiberCounterRegistry::default();
    let radial_counter = match &raw.radial_counter {
        Some(c) => {
            if counters.get(c.get_ref()).is_none() {
                return Err(at(text, c, format!("unknown fiber counter '{}' (known: {})", c.get_ref(), counters.names().join(", "))));
            }
            c.get_ref().clone()
        }
        None => "galerkin".into(),
    };
    let scenario = Scenario {
        name: raw.name.unwrap_or_else(|| "scenario".into()),
        domain,
        field,
        robin,
        schedule,
        routes: raw.routes.get_ref().clone(),
        radial_counter,
        outputs: raw.output.map(|o| Outputs { json: o.json, csv: o.csv }).unwrap_or_default(),
        seed: raw.seed.unwrap_or(0),
    };
    scenario.validate_inner(&registry).map_err(|msg| {
        let span = if msg.starts_with("Robin") {
            raw.robin.as_ref().map(|r| r.span()).unwrap_or(raw.domain.span())
        } else if msg.starts_with("resolution") || msg.starts_with("FEM levels") {
            raw.resolution.as_ref().map(|r| r.span()).unwrap_or(raw.routes.span())
        } else {
            raw.routes.span()
        };
        Error::Config(format!("line {}: {msg}", line_of(text, span.start)))
    })?;
    Ok(scenario)
}
