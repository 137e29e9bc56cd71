//! Exact simulation of phase-matched amplitude amplification.
//!
//! Two independent realizations are provided: the 2×2 matrix of `G` acting
//! on the span of the uniform marked and unmarked superpositions, and a
//! full `2^n` amplitude statevector with an explicit marked set. Both keep
//! the global phase of `G(φ, φ) = −H S_0^φ H S_f^φ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::{GroverAmplitudePair, PhaseAngle, TargetFraction};
use crate::error::{Error, Result};
use crate::planner::baseline_long;

pub const MAX_QUBITS: u32 = 14;

/// Matrix of `G(φ, φ)` in the `{|α⟩, |β⟩}` basis, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GMatrix {
    pub entries: [[Complex64; 2]; 2],
}

impl GMatrix {
    pub fn apply(&self, pair: GroverAmplitudePair) -> GroverAmplitudePair {
        let g = &self.entries;
        GroverAmplitudePair {
            a: g[0][0] * pair.a + g[0][1] * pair.b,
            b: g[1][0] * pair.a + g[1][1] * pair.b,
        }
    }

    /// Largest entry of `|G†G − I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let g = &self.entries;
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                let dot = g[0][i].conj() * g[0][j] + g[1][i].conj() * g[1][j];
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

pub fn g_matrix(phi: PhaseAngle, theta: f64) -> GMatrix {
    g_matrix_raw(phi.value(), theta)
}

fn g_matrix_raw(phi: f64, theta: f64) -> GMatrix {
    let e = Complex64::from_polar(1.0, phi);
    let one = Complex64::new(1.0, 0.0);
    let (s, c) = theta.sin_cos();
    let (s2, c2, sc) = (s * s, c * c, s * c);
    GMatrix {
        entries: [
            [-e * (e * s2 + c2), (one - e) * sc],
            [e * (one - e) * sc, -e * c2 - s2],
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub amplitudes: GroverAmplitudePair,
    pub iterations: u64,
}

impl TwoLevelState {
    pub fn success_probability(&self) -> f64 {
        self.amplitudes.a.norm_sqr()
    }
}

/// Applies the 2×2 `G` matrix `k` times to `sin θ |α⟩ + cos θ |β⟩`.
pub fn evolve_two_level(k: u64, phi: PhaseAngle, lambda: TargetFraction) -> TwoLevelState {
    let g = g_matrix(phi, lambda.theta());
    let mut amplitudes = GroverAmplitudePair::initial(lambda);
    for _ in 0..k {
        amplitudes = g.apply(amplitudes);
    }
    TwoLevelState {
        amplitudes,
        iterations: k,
    }
}

/// Full register of `2^n` amplitudes with a marked subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: u32,
    amplitudes: Vec<Complex64>,
    marked: Vec<bool>,
    marked_count: usize,
}

impl Statevector {
    /// `H^{⊗n}|0⟩` over `n` qubits with the given marked basis indices.
    pub fn uniform(n_qubits: u32, marked: &[usize]) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Domain(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let dim = 1usize << n_qubits;
        let mut flags = vec![false; dim];
        for &x in marked {
            if x >= dim {
                return Err(Error::Domain(format!("marked index {x} outside 0..{dim}")));
            }
            flags[x] = true;
        }
        let marked_count = flags.iter().filter(|&&f| f).count();
        if marked_count == 0 || marked_count == dim {
            return Err(Error::Domain(format!(
                "marked set must be a nonempty proper subset, got {marked_count} of {dim}"
            )));
        }
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            n_qubits,
            amplitudes: vec![amp; dim],
            marked: flags,
            marked_count,
        })
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn is_marked(&self, x: usize) -> bool {
        self.marked[x]
    }

    pub fn marked_count(&self) -> usize {
        self.marked_count
    }

    pub fn lambda(&self) -> f64 {
        self.marked_count as f64 / self.dim() as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn marked_probability(&self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.marked)
            .filter(|(_, &m)| m)
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }

    /// `S_f^φ`: multiply marked amplitudes by `e^{iφ}`.
    pub fn apply_oracle_phase(&mut self, phi: f64) {
        let e = Complex64::from_polar(1.0, phi);
        for (a, &m) in self.amplitudes.iter_mut().zip(&self.marked) {
            if m {
                *a *= e;
            }
        }
    }

    /// `H S_0^φ H = I − (1 − e^{iφ}) |ψ⟩⟨ψ|` with `|ψ⟩` uniform.
    pub fn apply_reflection_phase(&mut self, phi: f64) {
        let factor = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, phi);
        let mean: Complex64 =
            self.amplitudes.iter().sum::<Complex64>() / self.amplitudes.len() as f64;
        let shift = factor * mean;
        for a in &mut self.amplitudes {
            *a -= shift;
        }
    }

    /// One `G(φ, φ) = −H S_0^φ H S_f^φ`.
    pub fn apply_iteration(&mut self, phi: f64) {
        self.apply_oracle_phase(phi);
        self.apply_reflection_phase(phi);
        for a in &mut self.amplitudes {
            *a = -*a;
        }
    }
}

/// Marked-set probability after `k` iterations of `G(φ, φ)` on `n` qubits.
pub fn statevector_run(n_qubits: u32, marked: &[usize], k: u64, phi: PhaseAngle) -> Result<f64> {
    let mut state = Statevector::uniform(n_qubits, marked)?;
    for _ in 0..k {
        state.apply_iteration(phi.value());
    }
    Ok(state.marked_probability())
}

/// Runs Long's exact-search schedule for `M/N` and returns the marked probability.
pub fn run_long_exact(n_qubits: u32, marked: &[usize]) -> Result<f64> {
    let state = Statevector::uniform(n_qubits, marked)?;
    let lambda = TargetFraction::from_counts(state.marked_count(), state.dim())?;
    let (k, phi) = baseline_long(lambda)?;
    let phi = PhaseAngle::new(phi.min(PI))?;
    statevector_run(n_qubits, marked, k, phi)
}

/// Measurement counts per basis index from `shots` seeded samples.
pub fn sample_measurement(state: &Statevector, shots: u64, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    let weights: Vec<f64> = state.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Domain(format!("cannot sample statevector: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

/// Fraction of `counts` that landed in the marked set.
pub fn marked_frequency(state: &Statevector, counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let hits: u64 = counts
        .iter()
        .enumerate()
        .filter(|(x, _)| state.is_marked(*x))
        .map(|(_, c)| c)
        .sum();
    hits as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{closed_form_amplitude, SuccessCurve};

    fn ph(x: f64) -> PhaseAngle {
        PhaseAngle::new(x).unwrap()
    }

    fn tf(x: f64) -> TargetFraction {
        TargetFraction::new(x).unwrap()
    }

    #[test]
    fn g_matrix_at_pi_is_real_rotation() {
        let g = g_matrix(PhaseAngle::PI, PI / 6.0);
        let r = 3f64.sqrt() / 2.0;
        for row in &g.entries {
            for x in row {
                assert!(x.im.abs() < 1e-15);
            }
        }
        assert!((g.entries[0][0].re - 0.5).abs() < 1e-15);
        assert!((g.entries[1][1].re - 0.5).abs() < 1e-15);
        assert!((g.entries[0][1].norm() - r).abs() < 1e-15);
        assert!((g.entries[1][0].norm() - r).abs() < 1e-15);
        assert!(g.unitarity_residual() < 1e-12);
    }

    #[test]
    fn g_matrix_tends_to_minus_identity() {
        let g = g_matrix_raw(1e-12, 0.7);
        assert!((g.entries[0][0] + 1.0).norm() < 1e-11);
        assert!((g.entries[1][1] + 1.0).norm() < 1e-11);
        assert!(g.entries[0][1].norm() < 1e-11);
        assert!(g.entries[1][0].norm() < 1e-11);
    }

    #[test]
    fn two_level_examples() {
        let s = evolve_two_level(1, PhaseAngle::PI, tf(0.25));
        assert!((s.success_probability() - 1.0).abs() < 1e-14);
        let s = evolve_two_level(0, ph(1.3), tf(0.37));
        assert!((s.success_probability() - 0.37).abs() < 1e-15);
        let s = evolve_two_level(1, ph(2.134), tf(0.25));
        assert!((s.success_probability() - 0.9593).abs() < 1e-3);
    }

    #[test]
    fn two_level_matches_closed_form_amplitude() {
        for &(k, f, l) in &[(3, 2.0, 0.1), (7, 1.1, 0.02), (1, PI, 0.6), (12, 0.4, 0.3)] {
            let s = evolve_two_level(k, ph(f), tf(l));
            let a = closed_form_amplitude(k, ph(f), tf(l));
            assert!((s.amplitudes.a - a).norm() < 1e-10);
            let p = SuccessCurve::new(k, ph(f)).probability(tf(l));
            assert!((s.success_probability() - p).abs() < 1e-10);
            assert!((s.amplitudes.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn statevector_examples() {
        let p = statevector_run(2, &[3], 1, PhaseAngle::PI).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let marked: Vec<usize> = (0..8).collect();
        let p = statevector_run(4, &marked, 0, ph(0.3)).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        let marked: Vec<usize> = (0..102).map(|i| i * 10).collect();
        let p = statevector_run(10, &marked, 2, ph(2.163)).unwrap();
        let expect = SuccessCurve::new(2, ph(2.163)).probability(tf(102.0 / 1024.0));
        assert!((p - expect).abs() < 1e-10);
    }

    #[test]
    fn statevector_rejects_bad_marked_sets() {
        assert!(statevector_run(2, &[], 1, PhaseAngle::PI).is_err());
        assert!(statevector_run(2, &[0, 1, 2, 3], 1, PhaseAngle::PI).is_err());
        assert!(statevector_run(2, &[4], 1, PhaseAngle::PI).is_err());
        assert!(statevector_run(15, &[0], 1, PhaseAngle::PI).is_err());
        assert!(statevector_run(0, &[0], 1, PhaseAngle::PI).is_err());
    }

    #[test]
    fn long_exact_examples() {
        assert!((run_long_exact(2, &[1]).unwrap() - 1.0).abs() < 1e-9);
        assert!((run_long_exact(6, &[3, 9, 17, 40, 63]).unwrap() - 1.0).abs() < 1e-9);
        assert!((run_long_exact(10, &[777]).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_examples() {
        let mut certain = Statevector::uniform(2, &[3]).unwrap();
        certain.apply_iteration(PI);
        let counts = sample_measurement(&certain, 100, 7).unwrap();
        assert_eq!(counts[3], 100);

        let mut s = Statevector::uniform(2, &[1]).unwrap();
        s.apply_iteration(2.134);
        let counts = sample_measurement(&s, 100_000, 2024).unwrap();
        assert!((marked_frequency(&s, &counts) - 0.9593).abs() < 0.005);

        let marked: Vec<usize> = (0..8).collect();
        let s = Statevector::uniform(4, &marked).unwrap();
        let counts = sample_measurement(&s, 100_000, 11).unwrap();
        assert!((marked_frequency(&s, &counts) - 0.5).abs() < 0.01);

        assert!(sample_measurement(&s, 0, 1).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = Statevector::uniform(3, &[2, 5]).unwrap();
        assert_eq!(
            sample_measurement(&s, 1000, 99).unwrap(),
            sample_measurement(&s, 1000, 99).unwrap()
        );
    }
}
