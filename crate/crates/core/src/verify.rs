//! Self-check suite behind `chronoloop verify`.
//!
//! Every check uses pinned seeds, so the table is reproducible. The oracles
//! here are written against the raw operator algebra and the explicit path
//! enumeration, never against the staged evaluation they check.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::Rng;

use crate::algebra::{
    apply, is_unitary, norm_sq, solve_linear, Complex, Operator, State, DEFAULT_COND_LIMIT,
};
use crate::circuit::{
    default_qtltt_params, open_loop_pass, two_input_pass, BeamSplitter, CircuitConfig,
};
use crate::config::RunConfig;
use crate::error::Error;
use crate::loop_solver::{iterate_established_loop, solve_established_loop};
use crate::measurement::{born_probabilities, monte_carlo, Outcome};
use crate::random::{random_normalized_state, random_operator, random_state, random_unitary, run_rng, SimRng};
use crate::timetravel::{run_two_pass_protocol, InjectionMode};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Left,
    Right,
}

fn splitter_coef(bs: &BeamSplitter, entering: Side, exiting: Side) -> Complex {
    if entering == exiting {
        c(0.0, -bs.beta())
    } else {
        c(bs.alpha(), 0.0)
    }
}

/// `(ψ3, ψ4)` as the sum over input side × channel, one term per path.
pub fn path_sum(cfg: &CircuitConfig, psi: &State, chi: &State) -> (State, State) {
    let bs = cfg.splitter();
    let inputs = [(Side::Right, psi), (Side::Left, chi)];
    let channels = [(Side::Left, cfg.g1()), (Side::Right, cfg.g2())];
    let output = |exit: Side| {
        let mut total = State::zero(cfg.dim());
        for (in_side, input) in inputs {
            for (channel, g) in channels {
                let amp = splitter_coef(bs, channel, exit) * splitter_coef(bs, in_side, channel);
                total = &total + &(g * input).scale(amp);
            }
        }
        total
    };
    (output(Side::Right), output(Side::Left))
}

/// `(ψ3, ψ4)` from the closed-form operator expressions.
pub fn closed_form(cfg: &CircuitConfig, psi: &State, chi: &State) -> (State, State) {
    let (a, b) = (cfg.splitter().alpha(), cfg.splitter().beta());
    let (g1, g2) = (cfg.g1(), cfg.g2());
    let mix = |x: f64, ga: &Operator, y: f64, gb: &Operator| {
        ga.scale(c(x, 0.0)).checked_sub(&gb.scale(c(y, 0.0))).unwrap()
    };
    let cross = g1.checked_add(g2).unwrap().scale(c(0.0, -a * b));
    let psi3 = &(&mix(a * a, g1, b * b, g2) * psi) + &(&cross * chi);
    let psi4 = &(&cross * psi) + &(&mix(a * a, g2, b * b, g1) * chi);
    (psi3, psi4)
}

fn random_splitter(rng: &mut SimRng) -> BeamSplitter {
    let alpha: f64 = rng.random();
    BeamSplitter::new(alpha, (1.0 - alpha * alpha).sqrt()).expect("on the unit circle")
}

fn random_circuit(rng: &mut SimRng, dim: usize, unitary: bool) -> CircuitConfig {
    let bs = random_splitter(rng);
    let (g1, g2) = if unitary {
        (random_unitary(rng, dim), random_unitary(rng, dim))
    } else {
        (random_operator(rng, dim), random_operator(rng, dim))
    };
    CircuitConfig::new(bs, g1, g2).expect("same dimension")
}

fn eq_c_reproduction() -> Check {
    let cfg = default_qtltt_params(1, Operator::identity(1)).unwrap();
    let pass = open_loop_pass(&cfg, &State::basis(1, 0)).unwrap();
    let want = c(0.5, -0.5);
    let err = (pass.psi3.amplitudes()[0] - want)
        .norm()
        .max((pass.psi4.amplitudes()[0] - want).norm());
    let probs = born_probabilities(&pass).unwrap();
    check(
        "open-loop even split",
        err <= 1e-12 && probs == (0.5, 0.5),
        format!("max error {err:.2e}, probabilities {probs:?}"),
    )
}

fn eq_gh_reproduction() -> Check {
    let cfg = default_qtltt_params(1, Operator::identity(1)).unwrap();
    let report = run_two_pass_protocol(
        &cfg,
        &State::basis(1, 0),
        &InjectionMode::Coherent,
        0,
        Some(Outcome::Left),
    )
    .unwrap();
    let second = report.second_pass.as_ref().unwrap();
    let err3 = (second.psi3.amplitudes()[0] - c(1.0, -1.0)).norm();
    let n4 = second.psi4.norm();
    check(
        "coherent back-injection cancels left output",
        err3 <= 1e-12 && n4 <= 1e-12 && report.paradox == Some(1.0),
        format!("psi3 error {err3:.2e}, |psi4| {n4:.2e}, paradox {:?}", report.paradox),
    )
}

fn cancellation_generality() -> Check {
    let mut rng = run_rng(0xC0FFEE);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let dim = [1, 2, 4, 8][case % 4];
        let cfg = default_qtltt_params(dim, random_unitary(&mut rng, dim)).unwrap();
        let psi = random_normalized_state(&mut rng, dim);
        let report =
            run_two_pass_protocol(&cfg, &psi, &InjectionMode::Coherent, 0, Some(Outcome::Left)).unwrap();
        worst = worst.max(report.second_pass.unwrap().psi4.norm());
    }
    check(
        "cancellation for random unitary G",
        worst <= 1e-10,
        format!("worst |psi4| {worst:.2e}"),
    )
}

fn dephasing_law() -> Check {
    let mut rng = run_rng(0xDE_FA5E);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let phi = TAU * k as f64 / 99.0;
        let dim = 1 + k % 4;
        let cfg = default_qtltt_params(dim, random_unitary(&mut rng, dim)).unwrap();
        let psi = random_normalized_state(&mut rng, dim);
        let report = run_two_pass_protocol(
            &cfg,
            &psi,
            &InjectionMode::Dephased(phi),
            0,
            Some(Outcome::Left),
        )
        .unwrap();
        let p = report.p_left_second.unwrap();
        worst = worst.max((p - (1.0 - phi.cos()) / 2.0).abs());
    }
    check(
        "dephasing law p_left = (1 - cos phi)/2",
        worst <= 1e-10,
        format!("worst deviation {worst:.2e}"),
    )
}

fn path_sum_agreement() -> Check {
    let mut rng = run_rng(0x9A75_u64);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let dim = 1 + case % 8;
        let cfg = random_circuit(&mut rng, dim, false);
        let psi = random_state(&mut rng, dim);
        let chi = random_state(&mut rng, dim);
        let staged = two_input_pass(&cfg, &psi, &chi).unwrap();
        let (p3, p4) = path_sum(&cfg, &psi, &chi);
        let (f3, f4) = closed_form(&cfg, &psi, &chi);
        for (a, b) in [
            (&staged.psi3, &p3),
            (&staged.psi4, &p4),
            (&staged.psi3, &f3),
            (&staged.psi4, &f4),
            (&p3, &f3),
            (&p4, &f4),
        ] {
            worst = worst.max(a.max_abs_diff(b));
        }
    }
    check(
        "staged pass = path sum = closed form",
        worst <= 1e-10,
        format!("worst deviation {worst:.2e}"),
    )
}

fn norm_conservation() -> Check {
    let mut rng = run_rng(0x40_12);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let dim = 1 + case % 8;
        let cfg = random_circuit(&mut rng, dim, true);
        let psi = random_state(&mut rng, dim);
        let chi = random_state(&mut rng, dim);
        let out = two_input_pass(&cfg, &psi, &chi).unwrap();
        let lhs = norm_sq(&out.psi3) + norm_sq(&out.psi4);
        let rhs = norm_sq(&psi) + norm_sq(&chi);
        worst = worst.max((lhs - rhs).abs());
    }
    check(
        "norm conservation with unitary propagators",
        worst <= 1e-10,
        format!("worst deviation {worst:.2e}"),
    )
}

fn pass_linearity() -> Check {
    let mut rng = run_rng(0x11_AE);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let dim = 1 + case % 8;
        let cfg = random_circuit(&mut rng, dim, false);
        let (x, y, chi) = (
            random_state(&mut rng, dim),
            random_state(&mut rng, dim),
            random_state(&mut rng, dim),
        );
        let (s, t) = (c(rng.random(), rng.random()), c(rng.random(), rng.random()));
        let combo = &x.scale(s) + &y.scale(t);
        let lhs = two_input_pass(&cfg, &combo, &chi).unwrap();
        let px = two_input_pass(&cfg, &x, &chi).unwrap();
        let py = two_input_pass(&cfg, &y, &chi).unwrap();
        let pc = two_input_pass(&cfg, &State::zero(dim), &chi).unwrap();
        // affine in psi for fixed chi: f(sx + ty) = s f(x) + t f(y) + (1 - s - t) f(0)
        let rest = c(1.0, 0.0) - s - t;
        let rhs3 = &(&px.psi3.scale(s) + &py.psi3.scale(t)) + &pc.psi3.scale(rest);
        let rhs4 = &(&px.psi4.scale(s) + &py.psi4.scale(t)) + &pc.psi4.scale(rest);
        worst = worst
            .max(lhs.psi3.max_abs_diff(&rhs3))
            .max(lhs.psi4.max_abs_diff(&rhs4));
    }
    check(
        "pass is linear in each input",
        worst <= 1e-12,
        format!("worst deviation {worst:.2e}"),
    )
}

fn loop_direct_vs_iterative() -> Check {
    let mut rng = run_rng(0x100B);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for case in 0..100 {
        let dim = 1 + case % 8;
        let cfg = random_circuit(&mut rng, dim, true);
        let m = random_unitary(&mut rng, dim).scale(c(0.9, 0.0));
        let psi = random_normalized_state(&mut rng, dim);
        match (
            solve_established_loop(&cfg, &m, &psi),
            iterate_established_loop(&cfg, &m, &psi, 1e-13, 10_000),
        ) {
            (Ok(d), Ok(i)) => worst = worst.max(d.psi4.max_abs_diff(&i.psi4)),
            _ => failures += 1,
        }
    }
    check(
        "loop: direct solve = fixed-point iteration",
        failures == 0 && worst <= 1e-10,
        format!("worst deviation {worst:.2e}, failures {failures}"),
    )
}

fn loop_special_cases() -> Vec<Check> {
    let cfg = default_qtltt_params(1, Operator::identity(1)).unwrap();
    let psi = State::basis(1, 0);

    let open = open_loop_pass(&cfg, &psi).unwrap();
    let no_feedback = solve_established_loop(&cfg, &Operator::zero(1), &psi);
    let reduces = matches!(&no_feedback, Ok(s) if s.psi4 == open.psi4);

    let identity = solve_established_loop(&cfg, &Operator::identity(1), &psi);
    let value_err = identity
        .as_ref()
        .map(|s| (s.psi4.amplitudes()[0] - c(0.4, -0.2)).norm())
        .unwrap_or(f64::INFINITY);

    let singular = solve_established_loop(&cfg, &Operator::scalar(1, c(-1.0, -1.0)), &psi);

    let mut rng = run_rng(0x5_1A6);
    let mut singular_unitary = 0;
    for case in 0..50 {
        let dim = 1 + case % 8;
        let cfg = default_qtltt_params(dim, random_unitary(&mut rng, dim)).unwrap();
        let m = random_unitary(&mut rng, dim);
        let psi = random_normalized_state(&mut rng, dim);
        if solve_established_loop(&cfg, &m, &psi).is_err() {
            singular_unitary += 1;
        }
    }

    vec![
        check("loop: M = 0 gives the open-loop output", reduces, String::new()),
        check(
            "loop: M = I gives (2 - i)/5",
            value_err <= 1e-12,
            format!("error {value_err:.2e}"),
        ),
        check(
            "loop: resonant M is singular",
            matches!(singular, Err(Error::Singular { .. })),
            format!("{:?}", singular.err()),
        ),
        check(
            "loop: unitary M never singular",
            singular_unitary == 0,
            format!("{singular_unitary} singular cases"),
        ),
    ]
}

fn solve_round_trip() -> Check {
    let mut rng = run_rng(0x50_17E);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let dim = 1 + case % 8;
        // unitary plus identity shift keeps the matrix well conditioned
        let a = random_unitary(&mut rng, dim)
            .checked_add(&Operator::scalar(dim, c(3.0, 0.0)))
            .unwrap();
        let b = random_state(&mut rng, dim);
        let x = solve_linear(&a, &b, DEFAULT_COND_LIMIT).unwrap();
        worst = worst.max(apply(&a, &x).unwrap().max_abs_diff(&b));
    }
    check(
        "linear solve round trip",
        worst <= 1e-10,
        format!("worst deviation {worst:.2e}"),
    )
}

fn ensemble_checks() -> Vec<Check> {
    let cfg = default_qtltt_params(1, Operator::identity(1)).unwrap();
    let psi = State::basis(1, 0);
    let report = monte_carlo(&cfg, &psi, &InjectionMode::Coherent, 100_000, 20_240_601).unwrap();
    let freq_ok = (report.trigger_frequency - 0.5).abs() <= 0.005;

    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let mode = InjectionMode::RandomPhase;
    let a = single.install(|| monte_carlo(&cfg, &psi, &mode, 5_000, 7));
    let b = multi.install(|| monte_carlo(&cfg, &psi, &mode, 5_000, 7));

    vec![
        check(
            "ensemble trigger frequency and paradox",
            freq_ok && report.mean_paradox == Some(1.0),
            format!(
                "trigger frequency {}, mean paradox {:?}",
                report.trigger_frequency, report.mean_paradox
            ),
        ),
        check(
            "ensemble independent of thread count",
            a.is_ok() && a == b,
            String::new(),
        ),
    ]
}

fn unitary_propagators_are_recognized() -> Check {
    let cfg = default_qtltt_params(1, Operator::identity(1)).unwrap();
    let ok = is_unitary(cfg.g1(), 1e-12)
        && is_unitary(cfg.g2(), 1e-12)
        && cfg.splitter().alpha() == FRAC_1_SQRT_2
        && cfg.splitter().beta() == FRAC_1_SQRT_2;
    check("default parameters", ok, String::new())
}

fn config_round_trip() -> Check {
    let cfg = RunConfig::from_json(include_str!("../configs/qtltt_default.json"));
    let ok = match &cfg {
        Ok(cfg) => RunConfig::from_json(&cfg.to_json()).is_ok_and(|again| &again == cfg),
        Err(_) => false,
    };
    check("config dump round trip", ok, String::new())
}

/// Runs every check in a fixed order.
pub fn run_all() -> Vec<Check> {
    let mut checks = vec![
        unitary_propagators_are_recognized(),
        eq_c_reproduction(),
        eq_gh_reproduction(),
        cancellation_generality(),
        dephasing_law(),
        path_sum_agreement(),
        norm_conservation(),
        pass_linearity(),
        solve_round_trip(),
        loop_direct_vs_iterative(),
    ];
    checks.extend(loop_special_cases());
    checks.extend(ensemble_checks());
    checks.push(config_round_trip());
    checks
}

/// Fixed-width pass/fail table.
pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:<width$}  {}\n", c.name, c.detail));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    out
}
