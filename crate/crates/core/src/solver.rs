//! Picard and perimeter iteration with a priori error bounds.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::contractions::{applicability, Applicability, ApplicabilityContext, Condition,
    ContractionSpec, StepRatio};
use crate::error::{Error, Result};
use crate::spaces::Space;
use crate::tol;
use crate::triangle::CBoundVerdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once `α^n C(α) d(x0, x1) ≤ ε`.
    APriori,
    /// Stop once `d(x_n, x_{n+1}) ≤ ε`.
    Residual,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub mode: StopRule,
    pub record_trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            epsilon: 1e-9,
            max_iter: 10_000,
            mode: StopRule::APriori,
            record_trace: true,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FixedPointExact,
    BoundMet,
    ResidualMet,
    MaxIter,
    Period2Detected,
    /// A step broke the contraction the coefficients promise; the a priori
    /// bound was abandoned and the run stopped on the residual or the
    /// iteration cap.
    RatioViolated,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(
            self,
            Termination::FixedPointExact | Termination::BoundMet | Termination::ResidualMet
        )
    }
}

/// Scalars are kept in full; points only as the start and the last three.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace<P> {
    pub step_dists: Vec<f64>,
    pub perimeters: Option<Vec<f64>>,
    pub a_priori: Option<Vec<f64>>,
    pub first_point: P,
    pub last_points: Vec<P>,
    pub n_steps: usize,
    pub termination: Termination,
    /// Steps `n` at which the one-step contraction failed.
    pub ratio_violations: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointResult<P> {
    pub point: P,
    /// `d(x*, T x*)`.
    pub residual: f64,
    pub bound_at_stop: Option<f64>,
    pub trace: IterationTrace<P>,
    /// The stopping rule actually used.
    pub rule: StopRule,
    pub provenance: Applicability,
}

/// `α^n · C · d(x0, x1)`.
pub fn error_bound(n: usize, alpha: f64, c: f64, d01: f64) -> f64 {
    if d01 == 0.0 {
        return 0.0;
    }
    alpha.powi(n.min(i32::MAX as usize) as i32) * c * d01
}

struct Recorder<P> {
    record: bool,
    step_dists: Vec<f64>,
    perimeters: Vec<f64>,
    a_priori: Vec<f64>,
    first: P,
    tail: VecDeque<P>,
    violations: Vec<usize>,
}

impl<P: Clone> Recorder<P> {
    fn new(first: &P, record: bool) -> Self {
        let mut tail = VecDeque::with_capacity(3);
        tail.push_back(first.clone());
        Recorder {
            record,
            step_dists: Vec::new(),
            perimeters: Vec::new(),
            a_priori: Vec::new(),
            first: first.clone(),
            tail,
            violations: Vec::new(),
        }
    }

    fn visit(&mut self, p: &P) {
        if self.tail.len() == 3 {
            self.tail.pop_front();
        }
        self.tail.push_back(p.clone());
    }

    fn scalars(&mut self, step: f64, bound: Option<f64>, perimeter: Option<f64>) {
        if !self.record {
            return;
        }
        self.step_dists.push(step);
        if let Some(b) = bound {
            self.a_priori.push(b);
        }
        if let Some(p) = perimeter {
            self.perimeters.push(p);
        }
    }

    fn finish(self, n_steps: usize, termination: Termination, perimeter_run: bool) -> IterationTrace<P> {
        IterationTrace {
            step_dists: self.step_dists,
            perimeters: perimeter_run.then_some(self.perimeters),
            a_priori: (!self.a_priori.is_empty()).then_some(self.a_priori),
            first_point: self.first,
            last_points: self.tail.into_iter().collect(),
            n_steps,
            termination,
            ratio_violations: self.violations,
        }
    }
}

/// Decides whether to stop at step `n` after the exact-zero checks.
fn stop_rule(
    rule: StopRule,
    violated: bool,
    bound: Option<f64>,
    residual: f64,
    eps: f64,
    n: usize,
    max_iter: usize,
) -> Option<Termination> {
    if !violated && rule == StopRule::APriori {
        if let Some(b) = bound {
            if b <= eps {
                return Some(Termination::BoundMet);
            }
        }
    }
    if (violated || rule == StopRule::Residual) && residual <= eps {
        return Some(if violated { Termination::RatioViolated } else { Termination::ResidualMet });
    }
    if n >= max_iter {
        return Some(if violated { Termination::RatioViolated } else { Termination::MaxIter });
    }
    None
}

fn require_applicable(a: Applicability) -> Result<Applicability> {
    if a.applicable {
        Ok(a)
    } else {
        Err(Error::NotApplicable(Box::new(a)))
    }
}

/// Iterates `x_{n+1} = T(x_n)` from `x0` under the theorem matching `spec`.
///
/// Perimeter specs are handed to [`perimeter_solve`]. The a priori rule
/// falls back to the residual rule when `C(α)` is unbounded at the step
/// ratio.
pub fn picard_solve<S, F>(
    space: &S,
    mut map: F,
    x0: &S::Point,
    spec: &ContractionSpec,
    cfg: &SolveConfig,
) -> Result<FixedPointResult<S::Point>>
where
    S: Space,
    F: FnMut(&S::Point) -> Result<S::Point>,
{
    if let ContractionSpec::Perimeter { alpha } = *spec {
        return perimeter_solve(space, map, x0, alpha, cfg);
    }
    cfg.validate()?;
    let ctx = ApplicabilityContext {
        flags: space.flags(),
        point_count: space.cardinality(),
        period2_free: None,
    };
    let provenance = require_applicable(applicability(spec, space.tf(), &ctx))?;
    let StepRatio::Ratio(ratio) = provenance.step_ratio else {
        unreachable!("applicable specs have a feasible step ratio")
    };
    let c = provenance.c_bound.finite();
    let rule = if c.is_none() { StopRule::Residual } else { cfg.mode };

    let mut rec = Recorder::new(x0, cfg.record_trace);
    let mut x = x0.clone();
    let mut next = map(&x)?;
    let d01 = space.dist(&x, &next);
    let mut prev: Option<f64> = None;
    let mut n = 0usize;
    let (termination, residual, bound) = loop {
        let d = space.dist(&x, &next);
        let bound = c.map(|c| error_bound(n, ratio, c, d01));
        rec.scalars(d, bound, None);
        if let Some(pd) = prev {
            if !tol::le(d, ratio * pd) {
                rec.violations.push(n);
            }
        }
        if d == 0.0 {
            break (Termination::FixedPointExact, d, bound);
        }
        let violated = !rec.violations.is_empty();
        if let Some(t) = stop_rule(rule, violated, bound, d, cfg.epsilon, n, cfg.max_iter) {
            break (t, d, bound);
        }
        prev = Some(d);
        x = std::mem::replace(&mut next, x);
        next = map(&x)?;
        rec.visit(&x);
        n += 1;
    };

    Ok(FixedPointResult {
        point: x,
        residual,
        bound_at_stop: bound,
        trace: rec.finish(n, termination, false),
        rule,
        provenance,
    })
}

/// Iteration for maps contracting perimeters of triangles.
///
/// Tracks `p_n = d(x_n, x_{n+1}) + d(x_{n+1}, x_{n+2}) + d(x_{n+2}, x_n)` and
/// stops on an exact fixed point, on a detected prime-period-2 orbit, or
/// by the bound `α^n C(α) p_0`.
pub fn perimeter_solve<S, F>(
    space: &S,
    mut map: F,
    x0: &S::Point,
    alpha: f64,
    cfg: &SolveConfig,
) -> Result<FixedPointResult<S::Point>>
where
    S: Space,
    F: FnMut(&S::Point) -> Result<S::Point>,
{
    cfg.validate()?;
    if let Some(n) = space.cardinality() {
        if n < 3 {
            return Err(Error::TooFewPoints(n));
        }
    }
    let spec = ContractionSpec::Perimeter { alpha };
    let ctx = ApplicabilityContext {
        flags: space.flags(),
        point_count: space.cardinality(),
        period2_free: None,
    };
    let provenance = require_applicable(applicability(&spec, space.tf(), &ctx))?;
    let c = provenance
        .c_bound
        .finite()
        .expect("applicable perimeter specs have a finite C");

    let mut rec = Recorder::new(x0, cfg.record_trace);
    let mut a = x0.clone();
    let mut b = map(&a)?;
    let mut z = map(&b)?;
    let mut p0: Option<f64> = None;
    let mut prev_p: Option<f64> = None;
    let mut n = 0usize;
    let (termination, residual, bound) = loop {
        let d_ab = space.dist(&a, &b);
        if d_ab == 0.0 {
            rec.scalars(d_ab, None, Some(0.0));
            break (Termination::FixedPointExact, d_ab, None);
        }
        if space.dist(&a, &z) == 0.0 {
            rec.scalars(d_ab, None, None);
            break (Termination::Period2Detected, d_ab, None);
        }
        let d_bz = space.dist(&b, &z);
        let p = d_ab + d_bz + space.dist(&z, &a);
        let p_first = *p0.get_or_insert(p);
        let bound = error_bound(n, alpha, c, p_first);
        rec.scalars(d_ab, Some(bound), Some(p));
        // the inequality binds only when x_n, x_{n+1}, x_{n+2} are pairwise distinct
        if let Some(pp) = prev_p {
            if d_bz > 0.0 && !tol::le(p, alpha * pp) {
                rec.violations.push(n);
            }
        }
        let violated = !rec.violations.is_empty();
        if let Some(t) = stop_rule(cfg.mode, violated, Some(bound), d_ab, cfg.epsilon, n, cfg.max_iter) {
            break (t, d_ab, Some(bound));
        }
        prev_p = (d_bz > 0.0).then_some(p);
        a = std::mem::replace(&mut b, z);
        z = map(&b)?;
        rec.visit(&a);
        n += 1;
    };

    Ok(FixedPointResult {
        point: a,
        residual,
        bound_at_stop: bound,
        trace: rec.finish(n, termination, true),
        rule: cfg.mode,
        provenance,
    })
}

/// Writes `n,step_dist,perimeter,a_priori_bound` rows; unused columns stay
/// empty.
pub fn write_trace_csv<P, W: Write>(trace: &IterationTrace<P>, mut w: W) -> Result<()> {
    writeln!(w, "n,step_dist,perimeter,a_priori_bound")?;
    let cell = |v: Option<&f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for (n, d) in trace.step_dists.iter().enumerate() {
        let p = trace.perimeters.as_ref().and_then(|ps| ps.get(n));
        let b = trace.a_priori.as_ref().and_then(|bs| bs.get(n));
        writeln!(w, "{n},{d},{},{}", cell(p), cell(b))?;
    }
    Ok(())
}

/// JSON-facing summary of a solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub point: String,
    pub residual: f64,
    pub termination: Termination,
    pub n_steps: usize,
    pub bound_at_stop: Option<f64>,
    pub rule: StopRule,
    pub step_ratio: StepRatio,
    pub c_bound: CBoundVerdict,
    pub conditions: Vec<Condition>,
}

impl<P> FixedPointResult<P> {
    pub fn report<S: Space<Point = P>>(&self, space: &S) -> SolveReport {
        SolveReport {
            point: space.render(&self.point),
            residual: self.residual,
            termination: self.trace.termination,
            n_steps: self.trace.n_steps,
            bound_at_stop: self.bound_at_stop,
            rule: self.rule,
            step_ratio: self.provenance.step_ratio,
            c_bound: self.provenance.c_bound,
            conditions: self.provenance.conditions.clone(),
        }
    }
}
