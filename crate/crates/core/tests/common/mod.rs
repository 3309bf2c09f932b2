//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the staged pass; expected outputs come from explicit
//! path enumeration or from the closed-form matrix expressions evaluated
//! entry by entry.

#![allow(dead_code)]

use chronoloop::{CircuitConfig, Complex, Operator, State};

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn matvec(op: &Operator, v: &[Complex]) -> Vec<Complex> {
    let d = op.dim();
    (0..d)
        .map(|r| (0..d).map(|k| op.get(r, k) * v[k]).sum())
        .collect()
}

fn axpy(acc: &mut [Complex], scale: Complex, v: &[Complex]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += scale * x;
    }
}

fn state(v: Vec<Complex>) -> State {
    State::new(v).unwrap()
}

/// Explicit enumeration of the four interferometer paths per output.
///
/// Right input ψ: transmitted into the left arm (α), reflected into the
/// right arm (−iβ). Left input χ: reflected into the left arm (−iβ),
/// transmitted into the right arm (α). At the second splitter the left arm
/// reaches the right output ψ3 by transmission (α) and the left output ψ4 by
/// reflection (−iβ); the right arm the other way round.
pub fn path_enumeration(cfg: &CircuitConfig, psi: &State, chi: &State) -> (State, State) {
    let a = c(cfg.splitter().alpha(), 0.0);
    let r = c(0.0, -cfg.splitter().beta());
    let d = cfg.dim();
    let g1_psi = matvec(cfg.g1(), psi.amplitudes());
    let g2_psi = matvec(cfg.g2(), psi.amplitudes());
    let g1_chi = matvec(cfg.g1(), chi.amplitudes());
    let g2_chi = matvec(cfg.g2(), chi.amplitudes());

    let mut psi3 = vec![c(0.0, 0.0); d];
    axpy(&mut psi3, a * a, &g1_psi); // ψ → left arm → right out
    axpy(&mut psi3, r * r, &g2_psi); // ψ → right arm → right out
    axpy(&mut psi3, a * r, &g1_chi); // χ → left arm → right out
    axpy(&mut psi3, r * a, &g2_chi); // χ → right arm → right out

    let mut psi4 = vec![c(0.0, 0.0); d];
    axpy(&mut psi4, r * a, &g1_psi);
    axpy(&mut psi4, a * r, &g2_psi);
    axpy(&mut psi4, r * r, &g1_chi);
    axpy(&mut psi4, a * a, &g2_chi);
    (state(psi3), state(psi4))
}

/// ψ3 = (α²G1 − β²G2)ψ − iαβ(G1+G2)χ,  ψ4 = −iαβ(G1+G2)ψ + (α²G2 − β²G1)χ.
pub fn closed_forms(cfg: &CircuitConfig, psi: &State, chi: &State) -> (State, State) {
    let (al, be) = (cfg.splitter().alpha(), cfg.splitter().beta());
    let d = cfg.dim();
    let (g1, g2) = (cfg.g1(), cfg.g2());
    let entry = |f: &dyn Fn(Complex, Complex) -> Complex| {
        let mut entries = Vec::with_capacity(d * d);
        for r in 0..d {
            for k in 0..d {
                entries.push(f(g1.get(r, k), g2.get(r, k)));
            }
        }
        Operator::from_row_major(d, entries).unwrap()
    };
    let a2 = al * al;
    let b2 = be * be;
    let ab = c(0.0, -al * be);
    let rr = entry(&|x, y| x * a2 - y * b2);
    let cross = entry(&|x, y| ab * (x + y));
    let ll = entry(&|x, y| y * a2 - x * b2);

    let mut psi3 = matvec(&rr, psi.amplitudes());
    axpy(&mut psi3, c(1.0, 0.0), &matvec(&cross, chi.amplitudes()));
    let mut psi4 = matvec(&cross, psi.amplitudes());
    axpy(&mut psi4, c(1.0, 0.0), &matvec(&ll, chi.amplitudes()));
    (state(psi3), state(psi4))
}

/// Closed form of the dephased second-pass left probability under the
/// default structure (α = β = 1/√2, G1 = G, G2 = iG) with unitary G:
/// ψ4 = ((1−i)/2)(1 − e^{iφ})Gψ and ψ3 = ((1−i)/2)(1 + e^{iφ})Gψ, so
/// p_left = |1 − e^{iφ}|² / (|1 − e^{iφ}|² + |1 + e^{iφ}|²) = (1 − cos φ)/2.
pub fn dephased_p_left(phi: f64) -> f64 {
    (1.0 - phi.cos()) / 2.0
}
