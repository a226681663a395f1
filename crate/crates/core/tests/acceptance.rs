//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use fluxcount::conformal::{invariance_check, ConformalMap};
use fluxcount::dirac::{conjugation_residual, numeric_spectrum_check, DEFAULT_MODES};
use fluxcount::domain::DomainSpec;
use fluxcount::field::{FieldSpec, RobinSpec};
use fluxcount::fourier::Periodic;
use fluxcount::hardy::{toeplitz_count, witness_by_quadrature};
use fluxcount::index::{aps_index, lower_bound, Rational, RationalLedger};
use fluxcount::linalg::C64;
use fluxcount::planar::{fem_count, Spin};
use fluxcount::routes::RouteRegistry;
use fluxcount::scenario::{flux_ledger, run, run_all, Scenario};
use fluxcount::semiclassical::{de_gennes_c1, sweep_disc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

const STAIRCASE_BETAS: [f64; 7] = [0.5, 1.0, 2.0, 3.0, 4.2, 6.0, 7.9];
const STAIRCASE_BUDGET: Duration = Duration::from_secs(120);
const RADIAL_FINEST: usize = 4096;
const FEM_FINEST: usize = 5;
const DIRAC_TOL: f64 = 1e-8;
const CONJUGATION_TOL: f64 = 1e-8;
const TOEPLITZ_M: [usize; 3] = [64, 128, 256];
const WITNESS_TOL: f64 = 1e-8;
const WITNESS_NODES: usize = 256;
const SEMICLASSICAL_H: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
const H_COUNT_REL_TOL: f64 = 0.02;
const SUM_E_H: f64 = 0.02;
const SUM_E_REL_TOL: f64 = 0.10;
const SUM_GAP_REL_TOL: f64 = 0.15;
const DE_GENNES_XI_MAX: f64 = 8.0;
const DE_GENNES_PER_UNIT: usize = 50;
const LEDGER_TRIALS: usize = 10_000;
const SEED: u64 = 20240917;

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn disc_scenario(name: &str, field: FieldSpec, robin: RobinSpec, routes: &[&str]) -> Scenario {
    let mut s = Scenario::new(name, DomainSpec::unit_disc(), field, robin, routes);
    s.schedule.radial = vec![1024, 2048, RADIAL_FINEST];
    s.schedule.fem = vec![3, 4, FEM_FINEST];
    s.seed = SEED;
    s
}

fn disc_staircase() -> Outcome {
    let t0 = Instant::now();
    let scenarios: Vec<Scenario> = STAIRCASE_BETAS
        .iter()
        .map(|&b| disc_scenario(&format!("beta-{b}"), FieldSpec::constant(b), RobinSpec::neumann(1), &["radial", "fem"]))
        .collect();
    let reports = run_all(&scenarios, &RouteRegistry::default());
    let elapsed = t0.elapsed();
    let mut ok = elapsed < STAIRCASE_BUDGET;
    let mut detail = Vec::new();
    for (b, r) in STAIRCASE_BETAS.iter().zip(reports) {
        let r = r.map_err(err)?;
        let want = (b / 2.0).ceil() as i64;
        let (rad, fem) = (r.count("radial").unwrap(), r.count("fem").unwrap());
        ok &= rad == want && fem == want;
        detail.push(format!("{b}:{rad}/{fem}/{want}"));
    }
    Ok((ok, format!("beta:radial/fem/ceil {} in {:.1}s", detail.join(" "), elapsed.as_secs_f64())))
}

fn gaussian_field() -> Outcome {
    let s = disc_scenario("gaussian", FieldSpec::gaussian(4.0, 1.0), RobinSpec::neumann(1), &["radial", "fem"]);
    let r = run(&s, &RouteRegistry::default()).map_err(err)?;
    let want = (2.0 * (1.0 - (-1.0f64).exp())).ceil() as i64;
    let (rad, fem) = (r.count("radial").unwrap(), r.count("fem").unwrap());
    Ok((want == 2 && rad == want && fem == want, format!("radial {rad}, fem {fem}, expected {want}")))
}

fn dirac_exactness() -> Outcome {
    let potentials = [
        ("0", Periodic::constant(0.0, TAU)),
        ("1/2", Periodic::constant(0.5, TAU)),
        ("cos s", Periodic::trig(0.0, &[1.0], &[], TAU)),
        ("0.7+0.3cos s", Periodic::trig(0.7, &[0.3], &[], TAU)),
    ];
    let (mut dev, mut conj) = (0.0f64, 0.0f64);
    for (_, v) in &potentials {
        dev = dev.max(numeric_spectrum_check(v, DEFAULT_MODES).deviation);
        for alpha in [0.25, -1.35] {
            conj = conj.max(conjugation_residual(v, alpha, 64));
        }
    }
    Ok((dev <= DIRAC_TOL && conj <= CONJUGATION_TOL, format!("max deviation {dev:.2e}, max conjugation residual {conj:.2e}")))
}

fn toeplitz_bound() -> Outcome {
    let potentials = [
        ("-2.5", Periodic::constant(-2.5, TAU), true),
        ("-1.2+cos s", Periodic::trig(-1.2, &[1.0], &[], TAU), false),
        ("-0.4+0.5sin 2s", Periodic::trig(-0.4, &[], &[0.0, 0.5], TAU), false),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, v, constant) in &potentials {
        let bound = (-v.flux()).ceil() as usize;
        let counts: Vec<usize> = TOEPLITZ_M.iter().map(|&m| toeplitz_count(v, m).count_negative).collect();
        ok &= counts[1] >= bound && counts[1] == counts[2] && counts[0] == counts[1];
        if *constant {
            ok &= counts.iter().all(|&c| c == bound);
        }
        detail.push(format!("{name}: {counts:?} >= {bound}"));
    }
    Ok((ok, detail.join("; ")))
}

fn annulus_bound() -> Outcome {
    let mut s = Scenario::new(
        "annulus",
        DomainSpec::annulus(0.5, 1.0).map_err(err)?,
        FieldSpec::constant(8.0),
        RobinSpec::neumann(2),
        &["radial", "fem"],
    );
    s.schedule.radial = vec![RADIAL_FINEST];
    s.schedule.fem = vec![FEM_FINEST];
    let ledger = flux_ledger(&s, FEM_FINEST).map_err(err)?;
    let bound = -1 + ledger.fluxes.iter().map(|f| f.ceil() as i64).sum::<i64>();
    let r = run(&s, &RouteRegistry::default()).map_err(err)?;
    let (rad, fem) = (r.count("radial").unwrap(), r.count("fem").unwrap());
    Ok((
        fem >= bound && fem == rad,
        format!("fluxes ({:.4}, {:.4}), bound {bound}, fem {fem}, radial {rad}", ledger.fluxes[0], ledger.fluxes[1]),
    ))
}

fn robin_shift() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for c in [-0.5, 0.5] {
        let (count, _) = fem_count(&DomainSpec::unit_disc(), &FieldSpec::constant(3.0), &RobinSpec::constant(&[c]), FEM_FINEST, Spin::Up, 8, SEED).map_err(err)?;
        let n = count.count.count_negative as i64;
        let bound = (1.5f64 - c).ceil() as i64;
        ok &= n >= bound;
        detail.push(format!("c={c}: {n} >= {bound}"));
    }
    Ok((ok, detail.join("; ")))
}

fn conformal_invariance() -> Outcome {
    let map = ConformalMap::new(&[(2, C64::new(0.2, 0.0))]).map_err(err)?;
    let r = invariance_check(&map, &FieldSpec::constant(3.0), &RobinSpec::neumann(1), FEM_FINEST).map_err(err)?;
    Ok((r.agrees(), format!("image {}, disc {}, level {}", r.count_on_image, r.count_on_disc, r.level)))
}

/// `I_1(x) = sum_k (x/2)^{2k+1} / (k! (k+1)!)`.
fn bessel_i1(x: f64) -> f64 {
    let mut term = x / 2.0;
    let mut sum = term;
    for k in 1..60 {
        term *= (x / 2.0) * (x / 2.0) / (k as f64 * (k + 1) as f64);
        sum += term;
    }
    sum
}

/// Taylor coefficients of `exp(c z)` up to degree 40.
fn exp_coeffs(c: C64) -> Vec<(i64, C64)> {
    let mut a = C64::new(1.0, 0.0);
    let mut out = vec![(0, a)];
    for n in 1..=40 {
        a = a * c / n as f64;
        out.push((n, a));
    }
    out
}

fn strict_witness() -> Outcome {
    let v = Periodic::trig(0.0, &[], &[1.0], TAU);
    let oracle = -PI * bessel_i1(1.0);
    let value = witness_by_quadrature(&exp_coeffs(C64::new(0.0, -0.5)), &v, WITNESS_NODES);
    let mirrored = witness_by_quadrature(&exp_coeffs(C64::new(0.0, 0.5)), &v, WITNESS_NODES);
    Ok((
        (value - oracle).abs() <= WITNESS_TOL,
        format!("e^(-iz/2): {value:.12}, oracle {oracle:.12}, |diff| {:.2e}; e^(+iz/2) gives {mirrored:.12}", (value - oracle).abs()),
    ))
}

fn semiclassical_staircase() -> Outcome {
    let sweep = sweep_disc(1.0, &SEMICLASSICAL_H, RADIAL_FINEST).map_err(err)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for row in &sweep.rows {
        let want = (1.0 / (2.0 * row.h)).ceil() as usize;
        ok &= row.count == want;
        detail.push(format!("h={}: {}/{want}", row.h, row.count));
    }
    let last = sweep.rows.last().unwrap();
    let rel = (last.h_count() - 0.5).abs() / 0.5;
    ok &= rel <= H_COUNT_REL_TOL;
    Ok((ok, format!("{}; hN at h={} is {:.4} (rel {rel:.2e})", detail.join(" "), last.h, last.h_count())))
}

fn eigenvalue_sums() -> Outcome {
    let sweep = sweep_disc(1.0, &[SUM_E_H], RADIAL_FINEST).map_err(err)?;
    let row = &sweep.rows[0];
    let dg = de_gennes_c1(DE_GENNES_XI_MAX, DE_GENNES_PER_UNIT).map_err(err)?;
    let rel_e = (row.sum_e - 0.5).abs() / 0.5;
    let rel_gap = (row.scaled_gap() - dg.c1).abs() / dg.c1;
    Ok((
        rel_e <= SUM_E_REL_TOL && rel_gap <= SUM_GAP_REL_TOL,
        format!(
            "sum e = {:.4} (rel {rel_e:.3}, tol {SUM_E_REL_TOL}); sum (h-e)/sqrt h = {:.4} vs C1 = {:.6} +- {:.1e} (rel {rel_gap:.3}, tol {SUM_GAP_REL_TOL})",
            row.sum_e,
            row.scaled_gap(),
            dg.c1,
            dg.error_bar
        ),
    ))
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.random_range(-60..=60), rng.random_range(1..=12))
}

fn index_self_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let zero = Rational::from_integer(0);
    for trial in 0..LEDGER_TRIALS {
        let d = rng.random_range(0..4usize);
        let fluxes: Vec<Rational> = (0..=d).map(|_| random_rational(&mut rng)).collect();
        let robin: Vec<Rational> = (0..=d).map(|_| if rng.random_bool(0.5) { random_rational(&mut rng) } else { zero }).collect();
        let exact = RationalLedger::new(d, fluxes.clone(), robin).map_err(err)?;
        let float = exact.to_float();
        if exact.aps_index() != exact.lower_bound() || aps_index(&float) != lower_bound(&float) || lower_bound(&float) != exact.lower_bound() {
            return Ok((false, format!("trial {trial}: index and bound disagree for {exact:?}")));
        }
        let neumann = RationalLedger::new(d, fluxes, vec![zero; d + 1]).map_err(err)?;
        if neumann.grubb_index().map_err(err)? != Rational::from_integer(neumann.aps_index()) {
            return Ok((false, format!("trial {trial}: eta identity fails for {neumann:?}")));
        }
    }
    Ok((true, format!("{LEDGER_TRIALS} ledgers")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("disc staircase", disc_staircase),
        ("radial nonincreasing field", gaussian_field),
        ("boundary Dirac exactness", dirac_exactness),
        ("Toeplitz lower bound", toeplitz_bound),
        ("annulus bound", annulus_bound),
        ("Robin shift", robin_shift),
        ("conformal invariance", conformal_invariance),
        ("strict-inequality witness", strict_witness),
        ("semiclassical staircase", semiclassical_staircase),
        ("eigenvalue sums", eigenvalue_sums),
        ("index self-consistency", index_self_consistency),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("{} [{:>2}] {name}: {detail} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, i + 1, t0.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
