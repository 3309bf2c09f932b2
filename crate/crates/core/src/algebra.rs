//! Small dense complex linear algebra.
//!
//! Everything here works on row-major `d x d` matrices with `d` expected to
//! stay at or below 16. States and operators are immutable values; every
//! operation returns a fresh value.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};

/// Complex amplitude.
pub type Complex = Complex64;

/// Default tolerance for unitarity checks.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Default limit on the condition estimate accepted by [`solve_linear`].
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

/// Residual bound promised by [`solve_linear`], relative to `max(1, ‖b‖)`.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

pub const I: Complex = Complex::new(0.0, 1.0);

fn all_finite(values: &[Complex]) -> bool {
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Amplitudes of the internal degree of freedom carried through one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    amps: Vec<Complex>,
}

impl State {
    pub fn new(amps: Vec<Complex>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Empty);
        }
        if !all_finite(&amps) {
            return Err(Error::NonFinite("state"));
        }
        Ok(Self { amps })
    }

    /// Builds a state from real parts only.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex::new(x, 0.0)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "state dimension must be at least 1");
        Self {
            amps: vec![Complex::new(0.0, 0.0); dim],
        }
    }

    /// Unit vector along basis direction `k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut s = Self::zero(dim);
        s.amps[k] = Complex::new(1.0, 0.0);
        s
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex> {
        self.amps
    }

    pub fn scale(&self, c: Complex) -> State {
        State {
            amps: self.amps.iter().map(|&a| c * a).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> State {
        State {
            amps: self.amps.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amps.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn norm(&self) -> f64 {
        norm_sq(self).sqrt()
    }

    /// Returns the state scaled to unit norm, or `ZeroOutput` for the zero state.
    pub fn normalized(&self) -> Result<State> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroOutput);
        }
        Ok(self.scale_real(1.0 / n))
    }

    pub fn checked_add(&self, other: &State) -> Result<State> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &State) -> Result<State> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        assert_eq!(self.dim(), other.dim(), "state dimensions differ");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn inner(&self, other: &State) -> Complex {
        assert_eq!(self.dim(), other.dim(), "state dimensions differ");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn zip_with(&self, other: &State, f: impl Fn(Complex, Complex) -> Complex) -> State {
        State {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Add for &State {
    type Output = State;

    fn add(self, rhs: &State) -> State {
        self.checked_add(rhs).expect("state dimensions differ")
    }
}

impl Sub for &State {
    type Output = State;

    fn sub(self, rhs: &State) -> State {
        self.checked_sub(rhs).expect("state dimensions differ")
    }
}

/// Dense square complex matrix acting on a [`State`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex>,
}

impl Operator {
    /// Builds an operator from row-major entries.
    pub fn from_row_major(dim: usize, entries: Vec<Complex>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if !all_finite(&entries) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Complex>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty);
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::NotSquare {
                rows: dim,
                len: bad.len(),
            });
        }
        Self::from_row_major(dim, rows.into_iter().flatten().collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, Complex::new(1.0, 0.0))
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "operator dimension must be at least 1");
        Self {
            dim,
            entries: vec![Complex::new(0.0, 0.0); dim * dim],
        }
    }

    /// `c` times the identity.
    pub fn scalar(dim: usize, c: Complex) -> Self {
        let mut op = Self::zero(dim);
        for k in 0..dim {
            op.entries[k * dim + k] = c;
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex] {
        &self.entries
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex]> {
        self.entries.chunks(self.dim)
    }

    pub fn scale(&self, c: Complex) -> Operator {
        Operator {
            dim: self.dim,
            entries: self.entries.iter().map(|&a| c * a).collect(),
        }
    }

    pub fn adjoint(&self) -> Operator {
        let d = self.dim;
        let mut entries = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                entries.push(self.get(c, r).conj());
            }
        }
        Operator { dim: d, entries }
    }

    pub fn checked_add(&self, other: &Operator) -> Result<Operator> {
        check_dims(self.dim, other.dim)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Operator) -> Result<Operator> {
        check_dims(self.dim, other.dim)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        check_dims(self.dim, other.dim)?;
        let d = self.dim;
        let mut entries = vec![Complex::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.get(r, k);
                for c in 0..d {
                    entries[r * d + c] += a * other.get(k, c);
                }
            }
        }
        Ok(Operator { dim: d, entries })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &Operator, f: impl Fn(Complex, Complex) -> Complex) -> Operator {
        Operator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Mul<&State> for &Operator {
    type Output = State;

    fn mul(self, rhs: &State) -> State {
        apply(self, rhs).expect("operator and state dimensions differ")
    }
}

/// Serialized as a list of `[re, im]` pairs.
impl Serialize for State {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.amps.len()))?;
        for z in &self.amps {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }
}

/// Serialized as row-major nested rows of `[re, im]` pairs.
impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for row in self.rows() {
            let pairs: Vec<[f64; 2]> = row.iter().map(|z| [z.re, z.im]).collect();
            seq.serialize_element(&pairs)?;
        }
        seq.end()
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Matrix-vector product.
pub fn apply(op: &Operator, s: &State) -> Result<State> {
    check_dims(op.dim, s.dim())?;
    let amps = op
        .rows()
        .map(|row| row.iter().zip(s.amplitudes()).map(|(a, x)| a * x).sum())
        .collect();
    Ok(State { amps })
}

/// Squared 2-norm, `Σ|aᵢ|²`.
pub fn norm_sq(s: &State) -> f64 {
    s.amps.iter().map(|z| z.norm_sqr()).sum()
}

/// True iff every entry of `op†·op − I` has modulus at most `tol`.
pub fn is_unitary(op: &Operator, tol: f64) -> bool {
    let d = op.dim;
    let adj = op.adjoint();
    let gram = adj.compose(op).expect("same dimension");
    (0..d).all(|r| {
        (0..d).all(|c| {
            let target = if r == c { 1.0 } else { 0.0 };
            (gram.get(r, c) - target).norm() <= tol
        })
    })
}

/// LU factorization with partial pivoting, stored in place.
struct Lu {
    dim: usize,
    lu: Vec<Complex>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &Operator) -> Lu {
        let d = a.dim;
        let mut lu = a.entries.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        for k in 0..d {
            let pivot_row = (k..d)
                .max_by(|&i, &j| lu[i * d + k].norm().total_cmp(&lu[j * d + k].norm()))
                .expect("non-empty range");
            if pivot_row != k {
                for c in 0..d {
                    lu.swap(k * d + c, pivot_row * d + c);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[k * d + k];
            if pivot.norm() == 0.0 {
                continue;
            }
            for r in (k + 1)..d {
                let factor = lu[r * d + k] / pivot;
                lu[r * d + k] = factor;
                for c in (k + 1)..d {
                    let u = lu[k * d + c];
                    lu[r * d + c] -= factor * u;
                }
            }
        }
        Lu { dim: d, lu, perm }
    }

    /// Cheap condition bound from the pivots: `max(1, max|uᵢᵢ|) / min|uᵢᵢ|`.
    ///
    /// The floor of 1 in the numerator puts the estimate on the unit scale of
    /// the circuit's amplitudes, so a near-total cancellation such as
    /// `1 − (1 + 2e-16)` is reported as singular even for `d = 1`.
    fn condition_estimate(&self) -> f64 {
        let d = self.dim;
        let pivots = (0..d).map(|k| self.lu[k * d + k].norm());
        let (lo, hi) = pivots.fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi.max(1.0) / lo
        }
    }

    fn solve(&self, b: &[Complex]) -> Vec<Complex> {
        let d = self.dim;
        let mut x: Vec<Complex> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..d {
            for c in 0..r {
                let l = self.lu[r * d + c];
                let xc = x[c];
                x[r] -= l * xc;
            }
        }
        for r in (0..d).rev() {
            for c in (r + 1)..d {
                let u = self.lu[r * d + c];
                let xc = x[c];
                x[r] -= u * xc;
            }
            x[r] /= self.lu[r * d + r];
        }
        x
    }
}

/// Solves `A·x = b`.
///
/// Fails with `Singular` when a pivot vanishes or the pivot-based condition
/// estimate exceeds `cond_limit`. Up to two rounds of iterative refinement
/// are applied so that `‖A·x − b‖ ≤ 1e-10·max(1, ‖b‖)`; if that bound still
/// does not hold the system is reported as singular.
pub fn solve_linear(a: &Operator, b: &State, cond_limit: f64) -> Result<State> {
    if !(cond_limit > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cond_limit must be positive, got {cond_limit}"
        )));
    }
    check_dims(a.dim, b.dim())?;
    let lu = Lu::factor(a);
    let condition_estimate = lu.condition_estimate();
    if !(condition_estimate <= cond_limit) {
        return Err(Error::Singular { condition_estimate });
    }

    let bound = SOLVE_RESIDUAL_TOL * b.norm().max(1.0);
    let mut x = State {
        amps: lu.solve(&b.amps),
    };
    let mut residual = &apply(a, &x)? - b;
    for _ in 0..2 {
        if residual.norm() <= bound {
            break;
        }
        let correction = lu.solve(&residual.amps);
        x = State {
            amps: x.amps.iter().zip(&correction).map(|(xi, ci)| xi - ci).collect(),
        };
        residual = &apply(a, &x)? - b;
    }
    if !all_finite(&x.amps) || residual.norm() > bound {
        return Err(Error::Singular { condition_estimate });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn apply_examples() {
        let e0 = State::basis(2, 0);
        assert_eq!(apply(&Operator::identity(2), &e0).unwrap(), e0);

        let swap = Operator::from_rows(vec![vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]])
            .unwrap();
        assert_eq!(apply(&swap, &e0).unwrap(), State::basis(2, 1));

        let phase = Operator::scalar(1, I);
        let out = apply(&phase, &State::basis(1, 0)).unwrap();
        assert_eq!(out.amplitudes(), &[I]);
    }

    #[test]
    fn apply_rejects_mismatched_dims() {
        let err = apply(&Operator::identity(2), &State::zero(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn unitarity_examples() {
        assert!(is_unitary(&Operator::identity(3), 1e-12));
        assert!(!is_unitary(&Operator::scalar(1, c(2., 0.)), 1e-12));
        assert!(is_unitary(&Operator::scalar(4, I), 1e-12));
    }

    #[test]
    fn solve_examples() {
        let b = State::new(vec![c(1., 0.), I]).unwrap();
        let x = solve_linear(&Operator::identity(2), &b, DEFAULT_COND_LIMIT).unwrap();
        assert_eq!(x, b);

        let x = solve_linear(
            &Operator::scalar(1, c(2., 0.)),
            &State::basis(1, 0),
            DEFAULT_COND_LIMIT,
        )
        .unwrap();
        assert_eq!(x.amplitudes(), &[c(0.5, 0.)]);

        let err = solve_linear(&Operator::zero(1), &State::basis(1, 0), DEFAULT_COND_LIMIT);
        assert!(matches!(err, Err(Error::Singular { .. })));
    }

    #[test]
    fn solve_flags_rounding_level_cancellation() {
        let nearly_zero = Operator::scalar(1, c(-2.2e-16, 0.));
        let err = solve_linear(&nearly_zero, &State::basis(1, 0), DEFAULT_COND_LIMIT);
        assert!(matches!(err, Err(Error::Singular { .. })));
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = Operator::from_rows(vec![vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(1., 0.)]])
            .unwrap();
        let b = State::new(vec![c(2., 0.), c(3., 0.)]).unwrap();
        let x = solve_linear(&a, &b, DEFAULT_COND_LIMIT).unwrap();
        assert!(x.max_abs_diff(&State::from_real(&[1., 2.]).unwrap()) < 1e-15);
    }

    #[test]
    fn solve_rejects_bad_cond_limit() {
        let err = solve_linear(&Operator::identity(1), &State::basis(1, 0), 0.0);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn norm_sq_examples() {
        assert_eq!(norm_sq(&State::basis(1, 0)), 1.0);
        let half = State::new(vec![c(0.5, -0.5)]).unwrap();
        assert_eq!(norm_sq(&half), 0.5);
        assert_eq!(norm_sq(&State::zero(2)), 0.0);
    }

    #[test]
    fn constructors_validate() {
        assert_eq!(State::new(vec![]).unwrap_err(), Error::Empty);
        assert!(matches!(
            State::new(vec![c(f64::NAN, 0.)]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            Operator::from_rows(vec![vec![c(1., 0.)], vec![c(1., 0.)]]),
            Err(Error::NotSquare { .. })
        ));
        assert!(matches!(
            Operator::from_row_major(2, vec![c(1., 0.); 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
