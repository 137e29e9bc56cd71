//! Phase selection on one iteration band.
//!
//! For a fixed `k` and phase count `n`, the optimal phases make every
//! segment boundary sit at one common success level: the left band edge on
//! the first curve, each intersection of neighbouring curves, and the tail
//! checkpoint `λ_key` on the last curve (the interior minimum for `k = 1`,
//! the right band edge otherwise).
//!
//! The solver marches left to right at a trial level `q`. Each step picks
//! the smallest admissible phase whose curve still reaches `q` at the
//! current boundary, then follows that curve past its peak until it falls
//! back to `q`. Whether the band is covered with at most `n` phases is
//! monotone in `q`, so an outer bisection on `q` finds the largest
//! achievable minimum `Q_k^π(n)`.

use std::f64::consts::PI;

use crate::analytic::{
    first_max_point, iteration_band, min_point_k1_raw, peak_phase, phi_min, IterationBand,
    PhaseAngle, SuccessCurve,
};
use crate::error::{Error, Result};
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bracket width for roots in `λ`.
    pub lambda_tol: f64,
    /// Bracket width for roots in `φ`.
    pub phase_tol: f64,
    /// Tolerance on the common level `Q`.
    pub level_tol: f64,
    /// Points used by verification scans of a band.
    pub grid_points: usize,
    pub max_nk: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda_tol: 1e-12,
            phase_tol: 1e-12,
            level_tol: 1e-9,
            grid_points: 10_000,
            max_nk: 64,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("lambda_tol", self.lambda_tol)?;
        positive("phase_tol", self.phase_tol)?;
        positive("level_tol", self.level_tol)?;
        if self.max_nk == 0 {
            return Err(Error::Config("max_nk must be at least 1".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Config("grid_points must be at least 2".into()));
        }
        Ok(())
    }
}

/// `Λ_{k,m} = [lo, hi)`, served by phase `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSegment {
    /// 1-based position within the band.
    pub m: usize,
    pub lo: f64,
    pub hi: f64,
    pub phi: PhaseAngle,
}

impl PhaseSegment {
    pub fn contains(&self, lambda: f64) -> bool {
        self.lo <= lambda && lambda < self.hi
    }
}

/// Complete phase assignment for one iteration band.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    pub k: u64,
    pub p_cri: f64,
    pub n_k: usize,
    pub segments: Vec<PhaseSegment>,
    pub q_k_pi: f64,
    pub level_residual: f64,
}

impl PhasePlan {
    pub fn band(&self) -> IterationBand {
        iteration_band(self.k)
    }

    pub fn phases(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.phi.value()).collect()
    }

    /// `a_{k,0}, …, a_{k,n_k}`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        if let Some(first) = self.segments.first() {
            out.push(first.lo);
        }
        out.extend(self.segments.iter().map(|s| s.hi));
        out
    }

    pub fn segment_for(&self, lambda: f64) -> Option<&PhaseSegment> {
        self.segments.iter().find(|s| s.contains(lambda))
    }

    /// Success probability of the planned phase at `lambda`, if covered.
    pub fn probability_at(&self, lambda: f64) -> Option<f64> {
        self.segment_for(lambda)
            .map(|s| SuccessCurve::new(self.k, s.phi).probability_at(lambda))
    }

    /// The values that the optimality condition requires to coincide.
    pub fn equalized_levels(&self) -> Vec<f64> {
        equal_levels(self.k, &self.phases(), &self.boundaries())
    }

    /// Minimum planned probability over `points` evenly spaced samples of the band.
    pub fn grid_minimum(&self, points: usize) -> f64 {
        let band = self.band();
        (0..points)
            .map(|i| band.lo + (band.hi - band.lo) * i as f64 / points as f64)
            .filter_map(|l| self.probability_at(l))
            .fold(f64::INFINITY, f64::min)
    }
}

fn curve(k: u64, phi: f64) -> SuccessCurve {
    SuccessCurve::new(
        k,
        PhaseAngle::new(phi).expect("solver phases stay in (0, π]"),
    )
}

/// Right-hand checkpoint of a band's last curve.
fn tail_point(k: u64, phi: f64, band: &IterationBand) -> f64 {
    if k == 1 {
        min_point_k1_raw(phi)
    } else {
        band.hi
    }
}

/// Boundary values `P^{φ_1}(a_0)`, then both sides of each interior
/// boundary, then the tail value.
fn equal_levels(k: u64, phases: &[f64], boundaries: &[f64]) -> Vec<f64> {
    if phases.is_empty() {
        return Vec::new();
    }
    let band = iteration_band(k);
    let mut out = vec![curve(k, phases[0]).probability_at(boundaries[0])];
    for m in 1..phases.len() {
        let a = boundaries[m];
        out.push(curve(k, phases[m - 1]).probability_at(a));
        out.push(curve(k, phases[m]).probability_at(a));
    }
    let last = *phases.last().unwrap();
    out.push(curve(k, last).probability_at(tail_point(k, last, &band)));
    out
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Crossing of `P_k^{φ_hi}` and `P_k^{φ_lo}` between their peaks.
pub fn intersection_point(
    k: u64,
    phi_hi: PhaseAngle,
    phi_lo: PhaseAngle,
    cfg: &SolverConfig,
) -> Result<f64> {
    if phi_lo.value() >= phi_hi.value() {
        return Err(Error::Domain(format!(
            "expected phi_lo < phi_hi, got {} and {}",
            phi_lo.value(),
            phi_hi.value()
        )));
    }
    let left = first_max_point(k, phi_hi)?;
    let right = first_max_point(k, phi_lo)?;
    let upper = SuccessCurve::new(k, phi_hi);
    let lower = SuccessCurve::new(k, phi_lo);
    if right - left <= cfg.lambda_tol {
        return Ok(0.5 * (left + right));
    }
    bisect(
        |l| upper.probability_at(l) - lower.probability_at(l),
        left,
        right,
        cfg.lambda_tol,
        "curve intersection",
    )
}

/// Outcome of covering a band at a fixed level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMarch {
    pub phases: Vec<f64>,
    /// `a_{k,0}, …`; has one more entry than `phases` when feasible.
    pub boundaries: Vec<f64>,
    pub feasible: bool,
    /// Probability of the last curve at its tail checkpoint.
    pub tail_value: f64,
}

/// Covers `Λ_k` at level `q` with as few phases as the march needs, up to `cfg.max_nk`.
pub fn march_level(k: u64, q: f64, cfg: &SolverConfig) -> Result<LevelMarch> {
    cfg.validate()?;
    march_with_limit(k, q, cfg.max_nk, cfg)
}

fn march_with_limit(k: u64, q: f64, limit: usize, cfg: &SolverConfig) -> Result<LevelMarch> {
    if k == 0 {
        return Err(Error::Domain("iteration count must be positive".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Config(format!("level must lie in (0, 1), got {q}")));
    }
    let band = iteration_band(k);
    let floor = phi_min(k).value() + cfg.phase_tol;
    let mut phases = Vec::new();
    let mut boundaries = vec![band.lo];
    let mut tail_value = f64::NAN;

    while phases.len() < limit {
        let a = *boundaries.last().unwrap();
        // the boundary must stay left of the new curve's peak
        let ceiling = peak_phase(k, a).unwrap_or(PI).min(PI);
        let reach = |phi: f64| curve(k, phi).probability_at(a) - q;
        let phi = if ceiling <= floor || reach(floor) >= 0.0 {
            floor
        } else {
            bisect(reach, floor, ceiling, cfg.phase_tol, "phase reaching level")?
        };
        phases.push(phi);

        let c = curve(k, phi);
        let tail = tail_point(k, phi, &band);
        tail_value = c.probability_at(tail);
        if tail_value >= q {
            boundaries.push(band.hi);
            return Ok(LevelMarch {
                phases,
                boundaries,
                feasible: true,
                tail_value,
            });
        }
        let peak = first_max_point(k, PhaseAngle::new(phi)?)?;
        let next = bisect(
            |l| c.probability_at(l) - q,
            peak,
            tail,
            cfg.lambda_tol,
            "curve falling to level",
        )?;
        boundaries.push(next);
    }
    Ok(LevelMarch {
        phases,
        boundaries,
        feasible: false,
        tail_value,
    })
}

/// Largest minimum success probability with `n_k` phases, and the phases
/// that realize it.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSolution {
    pub q_star: f64,
    pub phases: Vec<f64>,
    pub boundaries: Vec<f64>,
    /// Spread of the equalized boundary values.
    pub residual: f64,
}

pub fn largest_min_success(k: u64, n_k: usize, cfg: &SolverConfig) -> Result<LevelSolution> {
    cfg.validate()?;
    if n_k == 0 || n_k > cfg.max_nk {
        return Err(Error::Config(format!(
            "phase count {n_k} outside 1..={}",
            cfg.max_nk
        )));
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut best: Option<LevelMarch> = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let run = march_with_limit(k, mid, n_k, cfg)?;
        if run.feasible {
            lo = mid;
            let done = hi - lo < cfg.level_tol && run.tail_value - mid < 0.5 * cfg.level_tol;
            best = Some(run);
            if done {
                break;
            }
        } else {
            hi = mid;
        }
    }
    let run = best.ok_or_else(|| {
        Error::Config(format!("no feasible level found for k = {k}, n_k = {n_k}"))
    })?;
    let levels = equal_levels(k, &run.phases, &run.boundaries);
    Ok(LevelSolution {
        q_star: lo,
        residual: spread(&levels),
        phases: run.phases,
        boundaries: run.boundaries,
    })
}

/// Least `n_k` with `Q_k^π(n_k) ≥ p_cri`, found by incrementing from one.
pub fn optimal_phase_count(k: u64, p_cri: f64, cfg: &SolverConfig) -> Result<usize> {
    Ok(search_phase_count(k, p_cri, cfg)?.0)
}

fn search_phase_count(k: u64, p_cri: f64, cfg: &SolverConfig) -> Result<(usize, LevelSolution)> {
    cfg.validate()?;
    if !(p_cri > 0.0 && p_cri < 1.0) {
        return Err(Error::Config(format!(
            "p_cri must lie in (0, 1), got {p_cri}"
        )));
    }
    for n in 1..=cfg.max_nk {
        let sol = largest_min_success(k, n, cfg)?;
        if sol.q_star >= p_cri {
            return Ok((n, sol));
        }
    }
    Err(Error::Config(format!(
        "k = {k}: p_cri = {p_cri} not reached within {} phases",
        cfg.max_nk
    )))
}

/// Optimal phases and segments of `Λ_k` for the target `p_cri`.
pub fn build_plan(k: u64, p_cri: f64, cfg: &SolverConfig) -> Result<PhasePlan> {
    let (n_k, sol) = search_phase_count(k, p_cri, cfg)?;
    let segments = sol
        .phases
        .iter()
        .enumerate()
        .map(|(i, &phi)| {
            Ok(PhaseSegment {
                m: i + 1,
                lo: sol.boundaries[i],
                hi: sol.boundaries[i + 1],
                phi: PhaseAngle::new(phi)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = PhasePlan {
        k,
        p_cri,
        n_k: segments.len(),
        segments,
        q_k_pi: sol.q_star,
        level_residual: sol.residual,
    };
    debug_assert_eq!(plan.n_k, n_k);
    let scanned = plan.grid_minimum(cfg.grid_points);
    if scanned < p_cri - cfg.level_tol {
        return Err(Error::Verification(format!(
            "k = {k}: planned minimum {scanned} on grid is below p_cri = {p_cri}"
        )));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ph(x: f64) -> PhaseAngle {
        PhaseAngle::new(x).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            level_tol: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = SolverConfig {
            max_nk: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn intersection_examples() {
        let cfg = SolverConfig::default();
        let a = intersection_point(1, ph(2.134), ph(1.465), &cfg).unwrap();
        let p1 = curve(1, 2.134).probability_at(a);
        let p2 = curve(1, 1.465).probability_at(a);
        assert!((p1 - p2).abs() < 1e-9);
        assert!((p1 - 0.9593).abs() < 1e-3);

        let a = intersection_point(1, PhaseAngle::PI, ph(PI - 1e-9), &cfg).unwrap();
        assert!((a - 0.25).abs() < 1e-8);

        let a = intersection_point(2, ph(2.163), ph(1.536), &cfg).unwrap();
        assert!((curve(2, 2.163).probability_at(a) - 0.9654).abs() < 1e-3);
    }

    #[test]
    fn intersection_rejects_misordered_phases() {
        let cfg = SolverConfig::default();
        assert!(intersection_point(1, ph(1.4), ph(2.0), &cfg).is_err());
        // below phi_min(2)
        assert!(intersection_point(2, ph(2.0), ph(1.0), &cfg).is_err());
    }

    #[test]
    fn march_examples() {
        let cfg = SolverConfig::default();
        let run = march_level(1, 0.90, &cfg).unwrap();
        assert!(run.feasible && run.phases.len() <= 2);
        let run = march_level(3, 0.93, &cfg).unwrap();
        assert!(run.feasible && run.phases.len() == 1);
        assert!(march_level(1, 1.0, &cfg).is_err());
    }

    #[test]
    fn march_phase_count_grows_with_level() {
        let cfg = SolverConfig {
            max_nk: 1000,
            ..Default::default()
        };
        let mut prev = 0;
        for q in [0.5, 0.9, 0.99, 0.999, 0.999999] {
            let run = march_level(1, q, &cfg).unwrap();
            assert!(run.feasible);
            assert!(run.phases.len() >= prev);
            prev = run.phases.len();
        }
        assert!(prev > 5);
    }

    #[test]
    fn march_reports_infeasible_when_capped() {
        let cfg = SolverConfig {
            max_nk: 1,
            ..Default::default()
        };
        let run = march_level(1, 0.99, &cfg).unwrap();
        assert!(!run.feasible);
        assert_eq!(run.phases.len(), 1);
    }

    #[test]
    fn largest_min_success_examples() {
        let cfg = SolverConfig::default();
        let s = largest_min_success(1, 2, &cfg).unwrap();
        assert!((s.q_star - 0.9593).abs() < 1e-3);
        assert!((s.phases[0] - 2.134).abs() < 5e-3 && (s.phases[1] - 1.465).abs() < 5e-3);
        let s = largest_min_success(2, 2, &cfg).unwrap();
        assert!((s.q_star - 0.9654).abs() < 1e-3);
        assert!((s.phases[0] - 2.163).abs() < 5e-3 && (s.phases[1] - 1.536).abs() < 5e-3);
        let s = largest_min_success(5, 1, &cfg).unwrap();
        assert!((s.q_star - 0.9757).abs() < 1e-3);
        assert!((s.phases[0] - 2.243).abs() < 5e-3);
        assert!(s.residual < 1e-8);
    }

    #[test]
    fn optimal_phase_count_examples() {
        let cfg = SolverConfig::default();
        assert_eq!(optimal_phase_count(1, 0.90, &cfg).unwrap(), 2);
        assert_eq!(optimal_phase_count(4, 0.90, &cfg).unwrap(), 1);
        assert!(optimal_phase_count(3, 0.95, &cfg).unwrap() >= 2);
        let capped = SolverConfig {
            max_nk: 1,
            ..Default::default()
        };
        assert!(matches!(
            optimal_phase_count(1, 0.95, &capped),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn build_plan_examples() {
        let cfg = SolverConfig::default();
        for (k, phi, q) in [(6, 2.322, 0.9830), (7, 2.383, 0.9875), (8, 2.432, 0.9904)] {
            let plan = build_plan(k, 0.90, &cfg).unwrap();
            assert_eq!(plan.n_k, 1);
            assert!((plan.phases()[0] - phi).abs() < 5e-3);
            assert!((plan.q_k_pi - q).abs() < 1e-3);
        }
    }

    #[test]
    fn plan_segments_tile_band() {
        let cfg = SolverConfig::default();
        let plan = build_plan(1, 0.97, &cfg).unwrap();
        let band = plan.band();
        assert_eq!(plan.segments.first().unwrap().lo, band.lo);
        assert_eq!(plan.segments.last().unwrap().hi, band.hi);
        for w in plan.segments.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
            assert!(w[0].phi.value() > w[1].phi.value());
        }
        for s in &plan.segments {
            assert!(s.phi.value() > phi_min(1).value());
            assert!(s.lo < s.hi);
        }
    }
}
