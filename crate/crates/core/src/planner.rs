//! Plan tables, range classification and baseline iteration counts.
//!
//! A [`PlanTable`] holds one [`PhasePlan`] per iteration band down to the
//! band containing `lambda0`. A caller who can only say which given range
//! `λ` lies in gets `(k, m)` from [`classify`] and runs `k` iterations at
//! phase `φ_{k,m}`.
//!
//! Baselines for comparison:
//! - Grover: `k_G = CI(π/(4θ) − 1/2)` at `φ = π`.
//! - fixed phase: `k = ⌊(π/4) / arcsin(√λ sin(φ/2))⌋` for a chosen `φ`.
//! - Long's exact search: minimal `k ≥ ⌈π/(4θ) − 1/2⌉` with
//!   `φ = 2 arcsin(sin(π/(4k+2)) / √λ)`, which reaches certainty.
//! - the fixed-point lower bound `⌈ln(2/δ)/(2√λ) − 1/2⌉`, `δ = √(1 − P_cri)`.
//!
//! Brassard's one-extra-iteration scheme, which fixes the last rotation
//! through `cot((2k+1)θ) = e^{iφ} sin 2θ (i cot(φ/2) − cos 2θ)^{-1}`, is not
//! solved here. The randomized trial-and-error search is only represented by
//! its quoted expected-cost bound, [`TRIAL_AND_ERROR_FACTOR`].

use std::f64::consts::PI;

use crate::analytic::{
    grover_band, grover_iterations, iterations_for, max_point_pi, peak_phase, PhaseAngle,
    SuccessCurve, TargetFraction, DEFAULT_K_MAX,
};
use crate::error::{Error, Result};
use crate::optimizer::{build_plan, PhasePlan, PhaseSegment, SolverConfig};

/// Expected iterations of randomized trial-and-error search, in units of `k_G`.
pub const TRIAL_AND_ERROR_FACTOR: f64 = 11.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanTable {
    pub p_cri: f64,
    pub lambda0: f64,
    pub solver: SolverConfig,
    /// Plans for `k = 1, 2, …` in order.
    pub plans: Vec<PhasePlan>,
}

impl PlanTable {
    /// Plans every band from `k = 1` down to the band containing `lambda0`.
    pub fn build(p_cri: f64, lambda0: f64, solver: SolverConfig) -> Result<Self> {
        Self::build_capped(p_cri, lambda0, solver, DEFAULT_K_MAX)
    }

    pub fn build_capped(
        p_cri: f64,
        lambda0: f64,
        solver: SolverConfig,
        k_cap: u64,
    ) -> Result<Self> {
        solver.validate()?;
        if !(p_cri > 0.0 && p_cri < 1.0) {
            return Err(Error::Config(format!(
                "p_cri must lie in (0, 1), got {p_cri}"
            )));
        }
        let lambda = TargetFraction::new(lambda0)
            .map_err(|_| Error::Config(format!("lambda0 must lie in (0, 1), got {lambda0}")))?;
        let k_max = iterations_for(lambda);
        if k_max > k_cap {
            return Err(Error::Config(format!(
                "lambda0 = {lambda0} needs k = {k_max}, above the cap {k_cap}"
            )));
        }
        let plans = (1..=k_max)
            .map(|k| build_plan(k, p_cri, &solver))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            p_cri,
            lambda0,
            solver,
            plans,
        })
    }

    pub fn k_max(&self) -> u64 {
        self.plans.len() as u64
    }

    /// Lower end of the covered range, the left edge of the deepest band.
    pub fn coverage_lo(&self) -> f64 {
        max_point_pi(self.k_max())
    }

    pub fn plan(&self, k: u64) -> Option<&PhasePlan> {
        if k == 0 {
            return None;
        }
        self.plans.get(k as usize - 1)
    }

    fn covered(&self, lambda: f64) -> Result<()> {
        if lambda < self.coverage_lo() {
            return Err(Error::Range {
                lambda,
                coverage_lo: self.coverage_lo(),
            });
        }
        Ok(())
    }

    /// Band and segment containing `λ`.
    fn locate(&self, lambda: f64) -> Result<(&PhasePlan, &PhaseSegment)> {
        self.covered(lambda)?;
        let k = iterations_for(TargetFraction::new(lambda)?);
        let plan = self.plan(k).ok_or(Error::Range {
            lambda,
            coverage_lo: self.coverage_lo(),
        })?;
        let seg = plan.segment_for(lambda).ok_or_else(|| {
            Error::Verification(format!("segments of band {k} do not cover {lambda}"))
        })?;
        Ok((plan, seg))
    }

    /// Segment holding the points just below `hi`, i.e. `lo < hi ≤ seg.hi`.
    fn locate_left_of(&self, hi: f64) -> Result<(&PhasePlan, &PhaseSegment)> {
        self.covered(hi)?;
        self.plans
            .iter()
            .flat_map(|p| p.segments.iter().map(move |s| (p, s)))
            .find(|(_, s)| s.lo < hi && hi <= s.hi)
            .ok_or(Error::Range {
                lambda: hi,
                coverage_lo: self.coverage_lo(),
            })
    }
}

/// What the caller knows about `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KigrQuery {
    Exact(f64),
    /// `λ ∈ [lo, hi)`.
    Range {
        lo: f64,
        hi: f64,
    },
}

impl KigrQuery {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KigrQuery::Exact(l) => TargetFraction::new(l).map(|_| ()),
            KigrQuery::Range { lo, hi } => {
                if lo > 0.0 && lo < hi && hi <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "range must satisfy 0 < lo < hi <= 1, got [{lo}, {hi})"
                    )))
                }
            }
        }
    }
}

/// Band index `k` and 1-based segment index `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub k: u64,
    pub m: usize,
}

fn segment_name(k: u64, seg: &PhaseSegment) -> String {
    format!("Λ_{{{k},{}}} = [{}, {})", seg.m, seg.lo, seg.hi)
}

pub fn classify(query: KigrQuery, table: &PlanTable) -> Result<Classification> {
    query.validate()?;
    match query {
        KigrQuery::Exact(l) => {
            let (plan, seg) = table.locate(l)?;
            Ok(Classification {
                k: plan.k,
                m: seg.m,
            })
        }
        KigrQuery::Range { lo, hi } => {
            let (p1, s1) = table.locate(lo)?;
            let (p2, s2) = table.locate_left_of(hi)?;
            if p1.k == p2.k && s1.m == s2.m {
                Ok(Classification { k: p1.k, m: s1.m })
            } else {
                Err(Error::Ambiguity {
                    lo,
                    hi,
                    first: segment_name(p1.k, s1),
                    second: segment_name(p2.k, s2),
                })
            }
        }
    }
}

/// Grover band index `m` (so `k_G = m`) for a query against `{Λ_{G,m}}`.
pub fn classify_grover(query: KigrQuery) -> Result<u64> {
    query.validate()?;
    match query {
        KigrQuery::Exact(l) => Ok(grover_iterations(TargetFraction::new(l)?)),
        KigrQuery::Range { lo, hi } => {
            let first = grover_iterations(TargetFraction::new(lo)?);
            let last = if hi >= 1.0 {
                0
            } else {
                let m = grover_iterations(TargetFraction::new(hi)?);
                if hi == grover_band(m).0 {
                    m + 1
                } else {
                    m
                }
            };
            if first == last {
                Ok(first)
            } else {
                let name = |m: u64| {
                    let (a, b) = grover_band(m);
                    format!("Λ_{{G,{m}}} = [{a}, {b})")
                };
                Err(Error::Ambiguity {
                    lo,
                    hi,
                    first: name(first),
                    second: name(last),
                })
            }
        }
    }
}

/// The iteration count and phase to run for `λ`, with the floor it guarantees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanChoice {
    pub k: u64,
    pub m: usize,
    pub phi: PhaseAngle,
    pub segment_lo: f64,
    pub segment_hi: f64,
    /// `Q_k^π` of the band.
    pub guaranteed: f64,
}

pub fn plan_for(lambda: TargetFraction, table: &PlanTable) -> Result<PlanChoice> {
    let (plan, seg) = table.locate(lambda.value())?;
    Ok(PlanChoice {
        k: plan.k,
        m: seg.m,
        phi: seg.phi,
        segment_lo: seg.lo,
        segment_hi: seg.hi,
        guaranteed: plan.q_k_pi,
    })
}

/// Optimal iterations of a fixed-phase search.
pub fn baseline_fixed_phase(phi: PhaseAngle, lambda: TargetFraction) -> u64 {
    let angle = (lambda.value().sqrt() * (0.5 * phi.value()).sin()).asin();
    (PI / 4.0 / angle).floor() as u64
}

/// Long's exact search: `(k, φ)` with `P = 1`.
///
/// The minimal `k ≥ ⌈π/(4θ) − 1/2⌉` is the smallest `k` with
/// `λ ≥ sin²(π/(4k+2))`, i.e. the same `k` as [`iterations_for`]; band
/// membership is used so ties resolve exactly.
pub fn baseline_long(lambda: TargetFraction) -> Result<(u64, f64)> {
    let k = iterations_for(lambda);
    let phi = peak_phase(k, lambda.value()).ok_or_else(|| {
        Error::Domain(format!(
            "sin(π/(4k+2)) exceeds √λ for k = {k}, λ = {}",
            lambda.value()
        ))
    })?;
    Ok((k, phi))
}

/// Lower bound on fixed-point search iterations for success `≥ p_cri`.
pub fn baseline_yoder_bound(p_cri: f64, lambda: TargetFraction) -> u64 {
    let delta = (1.0 - p_cri).sqrt();
    let bound = (2.0 / delta).ln() / (2.0 * lambda.value().sqrt()) - 0.5;
    bound.ceil().max(0.0) as u64
}

/// `P_cri` above which the fixed-point bound exceeds `π/(4√λ)`: `1 − 4e^{−π}`.
pub fn crossover_pcri() -> f64 {
    1.0 - 4.0 * (-PI).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationRelation {
    /// `k = k_G`
    Equal,
    /// `k = k_G + 1`
    PlusOne,
}

/// Whether `λ` falls in `[sin²(π/4k), sin²(π/(4k−2)))` for its band `k`.
pub fn iteration_relation(lambda: TargetFraction) -> IterationRelation {
    let k = iterations_for(lambda);
    let s = (PI / (4 * k) as f64).sin();
    if lambda.value() >= s * s {
        IterationRelation::PlusOne
    } else {
        IterationRelation::Equal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineComparison {
    pub lambda: f64,
    pub p_cri: f64,
    pub k_ours: u64,
    pub phi_ours: f64,
    pub p_ours: f64,
    pub k_grover: u64,
    pub p_grover: f64,
    pub phi_fixed: f64,
    pub k_fixed: u64,
    pub p_fixed: f64,
    pub k_long: u64,
    pub phi_long: f64,
    pub k_yoder_lb: u64,
}

impl BaselineComparison {
    pub fn yoder_ratio(&self) -> f64 {
        self.k_yoder_lb as f64 / self.k_ours as f64
    }
}

/// Side-by-side iteration counts and success probabilities at one `λ`.
///
/// Only the band containing `λ` is planned.
pub fn compare(
    lambda: TargetFraction,
    p_cri: f64,
    phi_fixed: PhaseAngle,
    solver: &SolverConfig,
) -> Result<BaselineComparison> {
    let l = lambda.value();
    let k_ours = iterations_for(lambda);
    let plan = build_plan(k_ours, p_cri, solver)?;
    let seg = plan.segment_for(l).ok_or_else(|| {
        Error::Verification(format!("segments of band {k_ours} do not cover {l}"))
    })?;
    let k_grover = grover_iterations(lambda);
    let k_fixed = baseline_fixed_phase(phi_fixed, lambda);
    let (k_long, phi_long) = baseline_long(lambda)?;
    Ok(BaselineComparison {
        lambda: l,
        p_cri,
        k_ours,
        phi_ours: seg.phi.value(),
        p_ours: SuccessCurve::new(k_ours, seg.phi).probability(lambda),
        k_grover,
        p_grover: SuccessCurve::new(k_grover, PhaseAngle::PI).probability(lambda),
        phi_fixed: phi_fixed.value(),
        k_fixed,
        p_fixed: SuccessCurve::new(k_fixed, phi_fixed).probability(lambda),
        k_long,
        phi_long,
        k_yoder_lb: baseline_yoder_bound(p_cri, lambda),
    })
}
