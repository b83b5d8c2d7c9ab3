use proptest::prelude::*;

use smcf_core::domain::{build_domain, DomainSpec, PhiSpec};
use smcf_core::metric::MetricId;
use smcf_core::operator::Problem;
use smcf_core::translator::{continuation, continuation_from, solve_regularized, ContinuationSchedule, NewtonConfig};
use smcf_core::verify::c1_bound;
use smcf_oracle::radial;

fn disk(phi: PhiSpec, n: usize) -> Problem {
    let d = build_domain(DomainSpec::disk(1.0), MetricId::Flat).unwrap();
    Problem::new(&d, phi, n, 2 * n).unwrap()
}

#[test]
fn regularized_solution_matches_the_radial_oracle() {
    let p = disk(PhiSpec::constant(0.2), 128);
    let cfg = NewtonConfig::default();
    let mut w = vec![0.0; p.grid.n_unknowns()];
    let mut lambda = 0.0;
    let mut last = None;
    for eps in [1.0, 0.5, 0.25, 0.1] {
        let s = solve_regularized(&p, eps, &w, lambda, &cfg).unwrap();
        w = s.w.clone();
        lambda = s.lambda;
        last = Some(s);
    }
    let s = last.unwrap();
    let oracle = radial::regularized(0.2, 1.0, 0.1);
    assert!((s.lambda - 0.1 * oracle.mean).abs() < 1e-4, "{} vs {}", s.lambda, 0.1 * oracle.mean);
    let mut err: f64 = 0.0;
    for (k, node) in p.grid.nodes.iter().enumerate() {
        let r = node.x[0].hypot(node.x[1]);
        err = err.max((s.w[k] - oracle.profile.eval(r)).abs());
    }
    assert!(err < 1e-4, "max profile error {err:e}");
}

#[test]
fn translator_does_not_depend_on_the_starting_guess() {
    let p = disk(PhiSpec::constant(0.2), 32);
    let schedule = ContinuationSchedule::default();
    let starts = [
        p.grid.sample(|_| 0.0),
        p.grid.sample(|x| 0.3 * (x[0] * x[0] + x[1] * x[1])),
        p.grid.sample(|x| 0.2 * x[0] * x[1] - 0.1 * x[1]),
    ];
    let sols: Vec<_> = starts.iter().map(|u| continuation_from(&p, &schedule, u).unwrap()).collect();
    for s in &sols[1..] {
        assert!((s.c3_discrete - sols[0].c3_discrete).abs() < 1e-10);
        let d = s.profile.iter().zip(&sols[0].profile).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-7, "profiles differ by {d:e}");
    }
}

#[test]
fn speed_sign_follows_the_contact_angle() {
    let up = continuation(&disk(PhiSpec::constant(0.2), 16), &ContinuationSchedule::default()).unwrap();
    let down = continuation(&disk(PhiSpec::constant(-0.2), 16), &ContinuationSchedule::default()).unwrap();
    assert!(up.c3 < 0.0 && down.c3 > 0.0);
    assert!((up.c3 + down.c3).abs() < 1e-12);
    let d = up.profile.iter().zip(&down.profile).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-9, "{d:e}");
}

#[test]
fn c1_at_unit_constants() {
    assert!((c1_bound(1.0, 1.0).unwrap() - 0.618_034_0).abs() < 1e-7);
    assert_eq!(c1_bound(0.0, 1.0).unwrap(), 0.0);
    assert!(c1_bound(1.0, 0.0).is_err());
}

proptest! {
    #[test]
    fn c1_lies_in_the_unit_interval_and_is_monotone(
        c2 in 1e-3..50.0f64,
        k in 1e-2..20.0f64,
        f in 1.01..3.0f64,
    ) {
        let c = c1_bound(c2, k).unwrap();
        prop_assert!(c > 0.0 && c < 1.0);
        // larger boundary data loosen the bound, stronger convexity tightens it
        prop_assert!(c1_bound(c2 * f, k).unwrap() > c);
        prop_assert!(c1_bound(c2, k * f).unwrap() < c);
        let closed = ((c2.powi(4) + 4.0 * c2 * c2 * k * k).sqrt() - c2 * c2) / (2.0 * k * k);
        prop_assert!((c - closed).abs() < 1e-9 * (1.0 + closed));
    }
}
