use fluxcount::domain::DomainSpec;
use fluxcount::field::{FieldSpec, RobinSpec};
use fluxcount::routes::{CountRoute, RouteOutcome, RouteRegistry, RunContext};
use fluxcount::scenario::{run, Scenario, Verdict};
use fluxcount::Result;

fn small(mut s: Scenario) -> Scenario {
    s.schedule.radial = vec![256, 512];
    s.schedule.fem = vec![2, 3];
    s.schedule.toeplitz = vec![16, 32];
    s
}

#[test]
fn routes_agree_on_constant_disc() {
    for beta in [1.0, 3.0, 5.0] {
        let s = small(Scenario::new("disc", DomainSpec::unit_disc(), FieldSpec::constant(beta), RobinSpec::neumann(1), &["radial", "fem", "toeplitz", "index"]));
        let r = run(&s, &RouteRegistry::default()).unwrap();
        let want = (beta / 2.0f64).ceil() as i64;
        for route in ["radial", "fem", "toeplitz", "index"] {
            assert_eq!(r.count(route), Some(want), "{route} at beta {beta}");
        }
        assert!(r.verdicts.contains(&Verdict::Equality));
        assert!(!r.bound_violated());
    }
}

#[test]
fn annulus_is_strict() {
    let mut s = small(Scenario::new("annulus", DomainSpec::annulus(0.5, 1.0).unwrap(), FieldSpec::constant(8.0), RobinSpec::neumann(2), &["radial", "index"]));
    s.radial_counter = "zero-energy".into();
    s.schedule.radial = vec![1024];
    let r = run(&s, &RouteRegistry::default()).unwrap();
    assert_eq!(r.bound, 3);
    assert_eq!(r.count("radial"), Some(4));
    assert!(r.verdicts.contains(&Verdict::Strict));
}

#[test]
fn unsupported_route_is_rejected() {
    let s = small(Scenario::new("g", DomainSpec::unit_disc(), FieldSpec::affine(2.0, 1.0, 0.0), RobinSpec::neumann(1), &["radial"]));
    assert!(run(&s, &RouteRegistry::default()).is_err());
}

struct Fixed;

impl CountRoute for Fixed {
    fn name(&self) -> &'static str {
        "fem"
    }

    fn supports(&self, _: &Scenario) -> std::result::Result<(), String> {
        Ok(())
    }

    fn run(&self, _: &Scenario, _: &RunContext<'_>) -> Result<RouteOutcome> {
        Ok(RouteOutcome { route: "fem".into(), count: 0, count_upper: None, schedule: vec![(0, 0)], stabilized: true, eigenvalues_below: vec![], certificate: None })
    }
}

#[test]
fn registered_route_replaces_builtin() {
    let mut reg = RouteRegistry::default();
    reg.register(Box::new(Fixed));
    assert_eq!(reg.names().len(), 4);
    let s = small(Scenario::new("v", DomainSpec::unit_disc(), FieldSpec::constant(3.0), RobinSpec::neumann(1), &["fem", "index"]));
    let r = run(&s, &reg).unwrap();
    assert!(r.bound_violated());
}
