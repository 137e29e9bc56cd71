//! Closed-form success probability of phase-matched amplitude amplification.
//!
//! After `k` applications of `G(φ, φ)` to the uniform superposition, the
//! probability of landing in the marked subspace is
//!
//! ```text
//! P_k^φ(λ) = A cos((2k + 1) δ) + B,    cos δ = 1 − λ (1 − cos φ)
//! ```
//!
//! with `A = sin²θ / sin²δ · (cos φ − cos δ)` and
//! `B = sin²θ / sin²δ · (1 − cos φ cos δ)`, `sin²θ = λ`. Substituting
//! `sin²δ = λ(1 − cos φ)(2 − λ(1 − cos φ))` cancels the `λ(1 − cos φ)`
//! factor, which leaves
//!
//! ```text
//! A = (λ − 1) / (2 − λ(1 − cos φ)),   B = (1 + λ cos φ) / (2 − λ(1 − cos φ))
//! ```
//!
//! Since `B − A = 1`, the probability itself is evaluated as the sum of
//! non-negative terms `(2(1 − λ) sin²(X/2) + 2λ cos²(φ/2)) / (2 − λ(1 − cos φ))`
//! with `X = (2k + 1)δ`, which keeps full relative precision as `λ → 0`.
//! Everything else in this module (extremum locations, iteration bands,
//! rounding rules) derives from that kernel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Upper bound on the iteration count a plan table will be asked to cover.
pub const DEFAULT_K_MAX: u64 = 1_000_000;

/// Fraction `λ = M/N` of marked items, with `θ = arcsin √λ` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetFraction {
    lambda: f64,
    theta: f64,
}

impl TargetFraction {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain(format!(
                "target fraction must lie in (0, 1), got {lambda}"
            )));
        }
        Ok(Self {
            lambda,
            theta: lambda.sqrt().asin(),
        })
    }

    /// `marked` out of `total` items.
    pub fn from_counts(marked: usize, total: usize) -> Result<Self> {
        if marked == 0 || marked >= total {
            return Err(Error::Domain(format!(
                "need 0 < M < N, got M = {marked}, N = {total}"
            )));
        }
        Self::new(marked as f64 / total as f64)
    }

    pub fn value(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Phase of the matched rotations, restricted to `(0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PhaseAngle(f64);

impl PhaseAngle {
    pub const PI: PhaseAngle = PhaseAngle(PI);

    pub fn new(phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi <= PI) {
            return Err(Error::Domain(format!(
                "phase must lie in (0, π], got {phi}"
            )));
        }
        Ok(Self(phi))
    }

    /// Folds any real phase onto `(0, π]` using `P^φ = P^{2π−φ}` and
    /// `2π` periodicity. Multiples of `2π` have no representative.
    pub fn folded(phi: f64) -> Result<Self> {
        let r = phi.rem_euclid(2.0 * PI);
        Self::new(if r > PI { 2.0 * PI - r } else { r })
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// `δ ∈ (0, π)` with `cos δ = 1 − λ(1 − cos φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngle(f64);

impl RotationAngle {
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// `1 − cos φ`, computed without cancellation near `φ = 0`.
fn one_minus_cos(phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    2.0 * s * s
}

/// `δ = 2 arcsin √(λ(1 − cos φ)/2)`, the cancellation-free form of
/// `arccos(1 − λ(1 − cos φ))`.
fn delta_raw(lambda: f64, phi: f64) -> f64 {
    let u = lambda * one_minus_cos(phi);
    2.0 * (0.5 * u).sqrt().min(1.0).asin()
}

pub fn rotation_angle(lambda: TargetFraction, phi: PhaseAngle) -> RotationAngle {
    RotationAngle(delta_raw(lambda.value(), phi.value()))
}

/// The `A` and `B` of `P = A cos((2k + 1) δ) + B` at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
}

fn coefficients_raw(lambda: f64, phi: f64) -> Coefficients {
    let u = lambda * one_minus_cos(phi);
    let denom = 2.0 - u;
    Coefficients {
        a: (lambda - 1.0) / denom,
        b: (1.0 + lambda - u) / denom,
    }
}

/// Unclamped success probability for any real phase.
///
/// Prefer [`SuccessCurve::probability`]; this entry point exists for checks
/// that need phases outside `(0, π]`.
pub fn kernel(k: u64, phi: f64, lambda: f64) -> f64 {
    // A cos X + B rearranged into a sum of non-negative terms:
    // (2(1 − λ) sin²(X/2) + 2λ cos²(φ/2)) / (2 − λ(1 − cos φ))
    let x = (2 * k + 1) as f64 * delta_raw(lambda, phi);
    let s = (0.5 * x).sin();
    let h = (0.5 * phi).cos();
    let denom = 2.0 - lambda * one_minus_cos(phi);
    (2.0 * (1.0 - lambda) * s * s + 2.0 * lambda * h * h) / denom
}

/// `∂P/∂λ`, written as a numerator over `(1 + cos δ)²`.
fn derivative_raw(k: u64, phi: f64, lambda: f64) -> f64 {
    let c = one_minus_cos(phi);
    let u = lambda * c;
    let sin_delta = (u * (2.0 - u)).sqrt();
    let delta = delta_raw(lambda, phi);
    let n = (2 * k + 1) as f64;
    let x = n * delta;
    // sin(nδ)/sin δ → n as δ → 0
    let ratio = if sin_delta > 1e-300 {
        x.sin() / sin_delta
    } else {
        n
    };
    let one_plus_cos_delta = 2.0 - u;
    let numer = (2.0 - c) * (1.0 + x.cos()) - n * (c * (lambda - 1.0)) * one_plus_cos_delta * ratio;
    numer / (one_plus_cos_delta * one_plus_cos_delta)
}

/// The map `λ ↦ P_k^φ(λ)` for a fixed iteration count and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessCurve {
    pub k: u64,
    pub phi: PhaseAngle,
}

impl SuccessCurve {
    pub fn new(k: u64, phi: PhaseAngle) -> Self {
        Self { k, phi }
    }

    pub fn coefficients(&self, lambda: TargetFraction) -> Coefficients {
        coefficients_raw(lambda.value(), self.phi.value())
    }

    pub fn probability(&self, lambda: TargetFraction) -> f64 {
        self.probability_at(lambda.value())
    }

    /// As [`probability`](Self::probability) but on a bare `λ ∈ (0, 1]`.
    pub fn probability_at(&self, lambda: f64) -> f64 {
        kernel(self.k, self.phi.value(), lambda).clamp(0.0, 1.0)
    }

    pub fn derivative(&self, lambda: TargetFraction) -> f64 {
        self.derivative_at(lambda.value())
    }

    pub fn derivative_at(&self, lambda: f64) -> f64 {
        derivative_raw(self.k, self.phi.value(), lambda)
    }
}

pub fn success_probability(curve: SuccessCurve, lambda: TargetFraction) -> f64 {
    curve.probability(lambda)
}

pub fn success_derivative(curve: SuccessCurve, lambda: TargetFraction) -> f64 {
    curve.derivative(lambda)
}

/// All local maxima of `P_k^φ` on `(0, 1)`, ascending. Each has `P = 1`.
pub fn local_maxima(k: u64, phi: PhaseAngle) -> Vec<f64> {
    let c = one_minus_cos(phi.value());
    (1..=k)
        .map(|j| one_minus_cos((2 * j - 1) as f64 * PI / (2 * k + 1) as f64) / c)
        .take_while(|&x| x < 1.0)
        .collect()
}

/// `sin²(π/(4k + 2))`, the first maximum of the `φ = π` curve; `1` for `k = 0`.
pub fn max_point_pi(k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let s = (PI / (4 * k + 2) as f64).sin();
    s * s
}

fn first_max_raw(k: u64, phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    max_point_pi(k) / (s * s)
}

/// The single maximum of `P_k^φ` inside the band `Λ_k`.
pub fn first_max_point(k: u64, phi: PhaseAngle) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("iteration count must be positive".into()));
    }
    let lower = phi_min(k).value();
    if phi.value() <= lower {
        return Err(Error::Domain(format!(
            "phase {} is not above phi_min({k}) = {lower}",
            phi.value()
        )));
    }
    Ok(first_max_raw(k, phi.value()))
}

/// The phase whose first maximum sits exactly at `lambda`, if any.
///
/// Solves `sin²(π/(4k+2)) / sin²(φ/2) = λ`; undefined for `λ` below
/// `sin²(π/(4k+2))`.
pub fn peak_phase(k: u64, lambda: f64) -> Option<f64> {
    let s = (PI / (4 * k + 2) as f64).sin() / lambda.sqrt();
    if k == 0 || s.is_nan() || s <= 0.0 || s > 1.0 + 1e-15 {
        return None;
    }
    Some(2.0 * s.min(1.0).asin())
}

/// Interior minimum of the single-iteration curve on `[1/4, 1)`.
pub fn min_point_k1(phi: PhaseAngle) -> Result<f64> {
    if phi.value() <= PI / 3.0 {
        return Err(Error::Domain(format!(
            "phase {} is not above pi/3",
            phi.value()
        )));
    }
    Ok(min_point_k1_raw(phi.value()))
}

pub(crate) fn min_point_k1_raw(phi: f64) -> f64 {
    let c = phi.cos();
    (5.0 - 4.0 * c) / (6.0 - 6.0 * c)
}

/// Smallest phase whose first maximum still lies inside `Λ_k`.
///
/// Equivalent to `arccos(1 − (2 − 2cos(π/(2k+1))) / (1 − cos(π/(2k−1))))`,
/// evaluated as `2 arcsin(sin(π/(4k+2)) / sin(π/(4k−2)))`.
pub fn phi_min(k: u64) -> PhaseAngle {
    assert!(k >= 1, "phi_min needs k >= 1");
    let ratio = (PI / (4 * k + 2) as f64).sin() / (PI / (4 * k - 2) as f64).sin();
    PhaseAngle(2.0 * ratio.asin())
}

/// `Λ_k = [sin²(π/(4k+2)), sin²(π/(4k−2)))`, the λ range run with `k` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationBand {
    pub k: u64,
    pub lo: f64,
    pub hi: f64,
}

impl IterationBand {
    pub fn contains(&self, lambda: f64) -> bool {
        self.lo <= lambda && lambda < self.hi
    }
}

pub fn iteration_band(k: u64) -> IterationBand {
    assert!(k >= 1, "iteration bands start at k = 1");
    IterationBand {
        k,
        lo: max_point_pi(k),
        hi: max_point_pi(k - 1),
    }
}

/// Grover's band `Λ_{G,m}`: `[1/2, 1)` for `m = 0`, else
/// `[sin²(π/(4m+4)), sin²(π/(4m)))`.
pub fn grover_band(m: u64) -> (f64, f64) {
    let sq = |x: f64| {
        let s = x.sin();
        s * s
    };
    if m == 0 {
        (0.5, 1.0)
    } else {
        (sq(PI / (4 * m + 4) as f64), sq(PI / (4 * m) as f64))
    }
}

/// Nearest integer, with exact halves rounded down.
pub fn ci(x: f64) -> i64 {
    let shifted = x + 0.5;
    let r = shifted.floor();
    if r == shifted {
        r as i64 - 1
    } else {
        r as i64
    }
}

/// Iteration count `k = CI(π/(4 arcsin √λ))`; the `k` with `λ ∈ Λ_k`.
///
/// The rounding formula gives the starting guess and the closed-form band
/// bounds decide membership, so ties agree with [`iteration_band`].
pub fn iterations_for(lambda: TargetFraction) -> u64 {
    let l = lambda.value();
    let mut k = ci(PI / (4.0 * lambda.theta())).max(1) as u64;
    while l < max_point_pi(k) {
        k += 1;
    }
    while k > 1 && l >= max_point_pi(k - 1) {
        k -= 1;
    }
    k
}

/// Grover's iteration count `k_G = CI(π/(4 arcsin √λ) − 1/2)`.
pub fn grover_iterations(lambda: TargetFraction) -> u64 {
    let l = lambda.value();
    let mut m = ci(PI / (4.0 * lambda.theta()) - 0.5).max(0) as u64;
    while l < grover_band(m).0 {
        m += 1;
    }
    while m > 0 && l >= grover_band(m).1 {
        m -= 1;
    }
    m
}

/// Amplitudes on the marked (`a`) and unmarked (`b`) uniform superpositions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroverAmplitudePair {
    pub a: Complex64,
    pub b: Complex64,
}

impl GroverAmplitudePair {
    pub fn initial(lambda: TargetFraction) -> Self {
        let t = lambda.theta();
        Self {
            a: Complex64::new(t.sin(), 0.0),
            b: Complex64::new(t.cos(), 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }
}

/// Marked amplitude after `k` iterations, including its global phase:
/// `(sin θ / sin δ)(−1)^k e^{i(k−1)φ} (e^{iφ} sin((k+1)δ) − sin(kδ))`.
pub fn closed_form_amplitude(k: u64, phi: PhaseAngle, lambda: TargetFraction) -> Complex64 {
    let delta = rotation_angle(lambda, phi).value();
    let p = phi.value();
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let prefactor = sign * lambda.theta().sin() / delta.sin();
    let global = Complex64::from_polar(1.0, (k as f64 - 1.0) * p);
    let bracket = Complex64::from_polar(((k + 1) as f64 * delta).sin(), p)
        - Complex64::new((k as f64 * delta).sin(), 0.0);
    global * bracket * prefactor
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(x: f64) -> TargetFraction {
        TargetFraction::new(x).unwrap()
    }

    fn ph(x: f64) -> PhaseAngle {
        PhaseAngle::new(x).unwrap()
    }

    fn p(k: u64, phi: f64, lambda: f64) -> f64 {
        SuccessCurve::new(k, ph(phi)).probability(tf(lambda))
    }

    #[test]
    fn target_fraction_rejects_endpoints() {
        assert!(TargetFraction::new(0.0).is_err());
        assert!(TargetFraction::new(1.0).is_err());
        assert!(TargetFraction::new(f64::NAN).is_err());
        assert!(TargetFraction::from_counts(0, 8).is_err());
        assert!(TargetFraction::from_counts(8, 8).is_err());
        let t = tf(0.3);
        assert!((t.theta().sin().powi(2) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn phase_angle_domain() {
        assert!(PhaseAngle::new(0.0).is_err());
        assert!(PhaseAngle::new(PI + 1e-9).is_err());
        assert!(PhaseAngle::new(PI).is_ok());
        assert!((PhaseAngle::folded(2.0 * PI - 1.0).unwrap().value() - 1.0).abs() < 1e-12);
        assert!(PhaseAngle::folded(4.0 * PI).is_err());
    }

    #[test]
    fn rotation_angle_examples() {
        let d = rotation_angle(tf(0.25), PhaseAngle::PI).value();
        assert!((d - PI / 3.0).abs() < 1e-14);
        let d = rotation_angle(tf(0.75), PhaseAngle::PI).value();
        assert!((d - 2.0 * PI / 3.0).abs() < 1e-14);
        let d = rotation_angle(tf(1e-300), PhaseAngle::PI).value();
        assert!(d > 0.0 && d < 1e-149);
    }

    #[test]
    fn rotation_angle_matches_arccos_form() {
        for &(l, f) in &[(0.1, 0.5), (0.4, 2.0), (0.9, 3.0), (0.6, PI)] {
            let d = rotation_angle(tf(l), ph(f)).value();
            assert!((d.cos() - (1.0 - l * (1.0 - f.cos()))).abs() < 1e-14);
            assert!(d > 0.0 && d < PI);
        }
    }

    #[test]
    fn success_probability_examples() {
        assert!((p(1, PI, 0.25) - 1.0).abs() < 1e-14);
        assert!(p(1, PI, 0.75).abs() < 1e-14);
        assert!((p(1, 2.134, 0.25) - 0.9593).abs() < 1e-3);
    }

    #[test]
    fn coefficients_match_unsimplified_form() {
        for &(l, f) in &[(0.1, 0.5), (0.4, 2.0), (0.9, 3.0), (0.02, PI)] {
            let c = SuccessCurve::new(3, ph(f)).coefficients(tf(l));
            let d = rotation_angle(tf(l), ph(f)).value();
            let scale = l / d.sin().powi(2);
            assert!((c.a - scale * (f.cos() - d.cos())).abs() < 1e-12);
            assert!((c.b - scale * (1.0 - f.cos() * d.cos())).abs() < 1e-12);
            let gap = scale * (1.0 - f.cos()) * (1.0 + d.cos());
            assert!((c.b - c.a - gap).abs() < 1e-12);
            let x = 7.0 * d;
            assert!((c.a * x.cos() + c.b - kernel(3, f, l)).abs() < 1e-13);
        }
    }

    #[test]
    fn tiny_lambda_is_stable() {
        // P ≈ (2k+1)² λ for λ → 0 with φ = π
        let l = 1e-12;
        let got = p(3, PI, l);
        assert!((got / (49.0 * l) - 1.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn derivative_examples() {
        let c1 = SuccessCurve::new(1, PhaseAngle::PI);
        assert!(c1.derivative(tf(0.25)).abs() < 1e-9);
        assert!(c1.derivative(tf(0.75)).abs() < 1e-9);
        let c2 = SuccessCurve::new(2, PhaseAngle::PI);
        let h = 1e-6;
        let fd = (c2.probability_at(0.15 + h) - c2.probability_at(0.15 - h)) / (2.0 * h);
        let d = c2.derivative(tf(0.15));
        assert!(((d - fd) / fd).abs() < 1e-5, "{d} vs {fd}");
    }

    #[test]
    fn local_maxima_examples() {
        let m = local_maxima(1, PhaseAngle::PI);
        assert_eq!(m.len(), 1);
        assert!((m[0] - 0.25).abs() < 1e-15);
        let m = local_maxima(2, PhaseAngle::PI);
        assert_eq!(m.len(), 2);
        assert!((m[0] - (1.0 - (PI / 5.0).cos()) / 2.0).abs() < 1e-15);
        assert!((m[1] - (1.0 - (3.0 * PI / 5.0).cos()) / 2.0).abs() < 1e-15);
        let m = local_maxima(1, ph(PI / 2.0));
        assert_eq!(m.len(), 1);
        assert!((m[0] - 0.5).abs() < 1e-15);
        // small phases push later maxima past λ = 1
        assert!(local_maxima(3, ph(0.8)).len() < 3);
    }

    #[test]
    fn first_max_point_examples() {
        assert!((first_max_point(1, PhaseAngle::PI).unwrap() - 0.25).abs() < 1e-15);
        assert!((first_max_point(1, ph(2.0 * PI / 3.0)).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!(matches!(
            first_max_point(2, ph(PI / 3.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn min_point_k1_examples() {
        assert!((min_point_k1(PhaseAngle::PI).unwrap() - 0.75).abs() < 1e-15);
        assert!((min_point_k1(ph(2.0 * PI / 3.0)).unwrap() - 7.0 / 9.0).abs() < 1e-14);
        assert!(min_point_k1(ph(PI / 3.0)).is_err());
    }

    #[test]
    fn phi_min_examples() {
        assert!((phi_min(1).value() - PI / 3.0).abs() < 1e-12);
        assert!((phi_min(2).value() - 1.3324).abs() < 1e-3);
        let direct = |k: u64| {
            let num = 2.0 - 2.0 * (PI / (2 * k + 1) as f64).cos();
            let den = 1.0 - (PI / (2 * k - 1) as f64).cos();
            (1.0 - num / den).acos()
        };
        for k in 1..20 {
            assert!((phi_min(k).value() - direct(k)).abs() < 1e-10);
        }
        let mut prev = 0.0;
        for k in [1, 2, 5, 10, 100, 1000, 100_000] {
            let v = phi_min(k).value();
            assert!(v > prev && v < PI);
            prev = v;
        }
    }

    #[test]
    fn iteration_band_examples() {
        let b1 = iteration_band(1);
        assert!((b1.lo - 0.25).abs() < 1e-15 && b1.hi == 1.0);
        let b2 = iteration_band(2);
        assert!((b2.lo - (3.0 - 5f64.sqrt()) / 8.0).abs() < 1e-15);
        assert_eq!(b2.hi, b1.lo);
        let b8 = iteration_band(8);
        assert!((b8.lo - 0.008513).abs() < 5e-7);
        assert!((b8.hi - 0.01093).abs() < 5e-6);
    }

    #[test]
    fn ci_rounds_halves_down() {
        assert_eq!(ci(1.5), 1);
        assert_eq!(ci(1.5000001), 2);
        assert_eq!(ci(0.5), 0);
        assert_eq!(ci(2.49), 2);
        assert_eq!(ci(-0.5), -1);
    }

    #[test]
    fn iterations_for_examples() {
        assert_eq!(iterations_for(tf(0.5)), 1);
        assert_eq!(iterations_for(tf(0.01)), 8);
        assert_eq!(iterations_for(tf(0.25)), 1);
        assert_eq!(iterations_for(tf(0.2)), 2);
        assert_eq!(iterations_for(tf(iteration_band(5).lo)), 5);
    }

    #[test]
    fn grover_iterations_examples() {
        assert_eq!(grover_iterations(tf(0.5)), 0);
        assert_eq!(grover_iterations(tf(0.25)), 1);
        assert_eq!(grover_iterations(tf(0.01)), 7);
        assert_eq!(grover_iterations(tf(0.4999)), 1);
    }

    #[test]
    fn closed_form_amplitude_at_zero_iterations() {
        let l = tf(0.3);
        let a = closed_form_amplitude(0, ph(1.1), l);
        assert!((a - Complex64::new(0.3f64.sqrt(), 0.0)).norm() < 1e-14);
    }
}
