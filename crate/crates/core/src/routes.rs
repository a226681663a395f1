//! Independent ways of computing (or bounding) the negative count, selectable
//! by name.

use crate::count::Certificate;
use crate::dirac::BoundaryPotential;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::fourier::Periodic;
use crate::gauge::solve_potential_on_mesh;
use crate::hardy::toeplitz_count;
use crate::index::{aps_index, lower_bound, FluxLedger};
use crate::planar::{fem_count, Spin};
use crate::radial::{total_count, FiberCounterRegistry, RadialProblem};
use crate::scenario::Scenario;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Result of one route on one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct RouteOutcome {
    pub route: String,
    /// Count at the finest resolution (for the index route, the bound).
    pub count: i64,
    /// Count with the zero guard on the other side, where available.
    pub count_upper: Option<i64>,
    /// `(resolution, count)` along the schedule.
    pub schedule: Vec<(usize, i64)>,
    /// Last two counts agree.
    pub stabilized: bool,
    pub eigenvalues_below: Vec<f64>,
    pub certificate: Option<Certificate>,
}

impl RouteOutcome {
    fn from_schedule(route: &str, schedule: Vec<(usize, i64)>, count_upper: Option<i64>, eigenvalues_below: Vec<f64>, certificate: Option<Certificate>) -> Self {
        let n = schedule.len();
        let stabilized = n < 2 || schedule[n - 1].1 == schedule[n - 2].1;
        let count = schedule.last().map_or(0, |s| s.1);
        Self { route: route.into(), count, count_upper, schedule, stabilized, eigenvalues_below, certificate }
    }
}

/// Shared inputs for a run.
pub struct RunContext<'a> {
    pub ledger: &'a FluxLedger,
    pub fiber_counters: &'a FiberCounterRegistry,
    pub seed: u64,
}

pub trait CountRoute: Send + Sync {
    fn name(&self) -> &'static str;
    /// Rejects scenarios the route cannot handle.
    fn supports(&self, scenario: &Scenario) -> std::result::Result<(), String>;
    fn run(&self, scenario: &Scenario, ctx: &RunContext<'_>) -> Result<RouteOutcome>;
}

pub struct RadialRoute;
pub struct FemRoute;
pub struct ToeplitzRoute;
pub struct IndexRoute;

impl CountRoute for RadialRoute {
    fn name(&self) -> &'static str {
        "radial"
    }

    fn supports(&self, s: &Scenario) -> std::result::Result<(), String> {
        if !s.domain.is_radial() {
            return Err("the radial route needs a disc or an annulus".into());
        }
        if !s.field.is_radial() {
            return Err("the radial route needs a radial field".into());
        }
        if s.robin.components.iter().any(|g| g.as_constant().is_none()) {
            return Err("the radial route needs constant Robin data".into());
        }
        Ok(())
    }

    fn run(&self, s: &Scenario, ctx: &RunContext<'_>) -> Result<RouteOutcome> {
        let counter = ctx
            .fiber_counters
            .get(&s.radial_counter)
            .ok_or_else(|| Error::InvalidInput(format!("unknown fiber counter '{}'", s.radial_counter)))?;
        let problem = RadialProblem::new(&s.field, &s.domain, &s.robin)?;
        let cutoff = problem.default_cutoff();
        let mut schedule = Vec::new();
        let mut last = None;
        for &n in &s.schedule.radial {
            let t = total_count(&problem, n, cutoff, counter)?;
            schedule.push((n, t.count.count_negative as i64));
            last = Some(t.count);
        }
        let last = last.ok_or_else(|| Error::InvalidInput("empty radial schedule".into()))?;
        Ok(RouteOutcome::from_schedule(self.name(), schedule, None, last.eigenvalues_below, Some(last.certificate)))
    }
}

impl CountRoute for FemRoute {
    fn name(&self) -> &'static str {
        "fem"
    }

    fn supports(&self, _: &Scenario) -> std::result::Result<(), String> {
        Ok(())
    }

    fn run(&self, s: &Scenario, ctx: &RunContext<'_>) -> Result<RouteOutcome> {
        let mut schedule = Vec::new();
        let mut last = None;
        for &level in &s.schedule.fem {
            let (c, _) = fem_count(&s.domain, &s.field, &s.robin, level, Spin::Up, 8, ctx.seed)?;
            schedule.push((level, c.count.count_negative as i64));
            last = Some(c);
        }
        let last = last.ok_or_else(|| Error::InvalidInput("empty FEM schedule".into()))?;
        Ok(RouteOutcome::from_schedule(
            self.name(),
            schedule,
            Some(last.count_upper as i64),
            last.count.eigenvalues_below,
            Some(last.count.certificate),
        ))
    }
}

/// `V = g - A_tau` on the boundary circle of a disc, as a function of arclength.
pub fn disc_boundary_potential(s: &Scenario, fem_level: usize) -> Result<Periodic> {
    let DomainSpec::Disc { radius } = s.domain else {
        return Err(Error::InvalidInput("boundary potential is built for discs only".into()));
    };
    let length = 2.0 * PI * radius;
    let a_tau = if s.field.is_radial() {
        Periodic::constant(s.field_flux_radial(radius) / radius, length)
    } else {
        let mesh = s.domain.mesh(fem_level)?;
        let gauge = solve_potential_on_mesh(&s.field, &mesh)?;
        let edges = &gauge.fem().expect("FEM gauge").a_tau[0];
        let n = edges.len();
        let nodal = (0..n).map(|k| 0.5 * (edges[(k + n - 1) % n] + edges[k])).collect();
        Periodic::samples(length, nodal)
    };
    let g = s.robin.components[0].clone();
    let g = match g.as_constant() {
        Some(c) => Periodic::constant(c, length),
        None => Periodic::function(length, move |x| g.eval(2.0 * PI * x / length)),
    };
    Ok(BoundaryPotential::from_robin_and_trace(&[g], &[a_tau]).components.remove(0))
}

impl CountRoute for ToeplitzRoute {
    fn name(&self) -> &'static str {
        "toeplitz"
    }

    fn supports(&self, s: &Scenario) -> std::result::Result<(), String> {
        match s.domain {
            DomainSpec::Disc { .. } => Ok(()),
            _ => Err("the Toeplitz route works on a single circle; use a disc".into()),
        }
    }

    fn run(&self, s: &Scenario, _: &RunContext<'_>) -> Result<RouteOutcome> {
        let level = s.schedule.fem.last().copied().unwrap_or(5);
        let v = disc_boundary_potential(s, level)?;
        let mut schedule = Vec::new();
        let mut last = None;
        for &m in &s.schedule.toeplitz {
            let c = toeplitz_count(&v, m);
            schedule.push((m, c.count_negative as i64));
            last = Some(c);
        }
        let last = last.ok_or_else(|| Error::InvalidInput("empty Toeplitz schedule".into()))?;
        Ok(RouteOutcome::from_schedule(self.name(), schedule, None, last.eigenvalues_below, Some(last.certificate)))
    }
}

impl CountRoute for IndexRoute {
    fn name(&self) -> &'static str {
        "index"
    }

    fn supports(&self, _: &Scenario) -> std::result::Result<(), String> {
        Ok(())
    }

    fn run(&self, _: &Scenario, ctx: &RunContext<'_>) -> Result<RouteOutcome> {
        let bound = lower_bound(ctx.ledger);
        let index = aps_index(ctx.ledger);
        if bound != index {
            return Err(Error::InvalidInput(format!("index bookkeeping disagrees: bound {bound}, index {index}")));
        }
        Ok(RouteOutcome::from_schedule(self.name(), vec![(0, bound)], None, Vec::new(), None))
    }
}

/// Routes selectable by name.
pub struct RouteRegistry {
    routes: BTreeMap<&'static str, Box<dyn CountRoute>>,
}

impl RouteRegistry {
    pub fn empty() -> Self {
        Self { routes: BTreeMap::new() }
    }

    pub fn register(&mut self, route: Box<dyn CountRoute>) {
        self.routes.insert(route.name(), route);
    }

    pub fn get(&self, name: &str) -> Option<&dyn CountRoute> {
        self.routes.get(name).map(|r| r.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.routes.keys().copied().collect()
    }
}

impl Default for RouteRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(RadialRoute));
        r.register(Box::new(FemRoute));
        r.register(Box::new(ToeplitzRoute));
        r.register(Box::new(IndexRoute));
        r
    }
}
