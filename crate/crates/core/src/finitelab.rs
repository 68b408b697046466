//! Brute-force oracle on finite spaces.
//!
//! Every theorem is audited the same way: when all hypotheses hold on a
//! finite instance, its conclusion is checked against the enumerated fixed
//! points and against the solver run from every start point.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::contractions::{applicability, chatterjea_constant, crr_min_alpha, kannan_constant,
    perimeter_constant, banach_constant, Applicability, ApplicabilityContext, ContractionFamily,
    ContractionSpec, MinConstant, StepRatio, TheoremPath};
use crate::error::{Error, Result};
use crate::spaces::{check_tr_finite, validate_finite, FiniteSpace, FiniteSpaceFile, SelfMap, Space};
use crate::solver::{picard_solve, SolveConfig, StopRule, Termination};
use crate::triangle::TriangleFunction;

/// Indices `i` with `T(i) = i`.
pub fn fixed_points(map: &SelfMap) -> Vec<usize> {
    (0..map.len()).filter(|&i| map.apply(i) == i).collect()
}

/// Indices of prime period 2: `T(T(i)) = i` and `T(i) ≠ i`.
pub fn period2_points(map: &SelfMap) -> Vec<usize> {
    (0..map.len())
        .filter(|&i| map.apply(i) != i && map.apply(map.apply(i)) == i)
        .collect()
}

/// The three-point counterexample: all distances 1, `x → y`, `y → x`,
/// `z → x`. It contracts perimeters by 2/3 yet has no fixed point.
pub fn example_6_6() -> (FiniteSpace, SelfMap) {
    let d = vec![
        vec![0.0, 1.0, 1.0],
        vec![1.0, 0.0, 1.0],
        vec![1.0, 1.0, 0.0],
    ];
    let labels = vec!["x".to_owned(), "y".to_owned(), "z".to_owned()];
    let fs = FiniteSpace::new(labels, d, TriangleFunction::max()).expect("well-formed");
    let map = SelfMap::new(vec![1, 0, 0], 3).expect("in range");
    (fs, map)
}

/// Best Ćirić-Reich-Rus coefficients found on the `(β, γ)` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrrProbe {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub step_ratio: StepRatio,
    pub applicable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimalConstants {
    pub banach: MinConstant,
    pub kannan: MinConstant,
    pub chatterjea: MinConstant,
    pub perimeter: MinConstant,
    pub crr: Option<CrrProbe>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub theorem: ContractionFamily,
    pub theorem_path: TheoremPath,
    pub hypotheses_met: bool,
    /// `None` when the hypotheses fail and no conclusion is claimed.
    pub conclusion_met: Option<bool>,
    pub failed_conditions: Vec<String>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub labels: Vec<String>,
    pub fixed_points: Vec<String>,
    pub period2_points: Vec<String>,
    pub minimal_constants: MinimalConstants,
    pub applicability: BTreeMap<ContractionFamily, Applicability>,
    pub audit: Vec<AuditRow>,
}

impl ClassifyReport {
    pub fn row(&self, family: ContractionFamily) -> &AuditRow {
        self.audit
            .iter()
            .find(|r| r.theorem == family)
            .expect("every family has a row")
    }

    /// Rows whose hypotheses held but whose conclusion did not.
    pub fn violations(&self) -> impl Iterator<Item = &AuditRow> {
        self.audit
            .iter()
            .filter(|r| r.hypotheses_met && r.conclusion_met == Some(false))
    }
}

const TR_CONDITION: &str = "generalized triangle inequality";
const CRR_GRID_STEPS: u32 = 20;
const CRR_MARGIN: f64 = 1e-9;

fn as_coefficient(c: MinConstant) -> f64 {
    match c {
        MinConstant::Value(v) => v,
        MinConstant::Infeasible => f64::INFINITY,
        MinConstant::Undefined => 0.0,
    }
}

/// Scans `(β, γ)` on a 0.05 grid and takes the smallest `α` for each. Among
/// admissible triples the applicable one with the smallest step ratio wins.
fn probe_crr(fs: &FiniteSpace, map: &SelfMap, ctx: &ApplicabilityContext) -> Option<(CrrProbe, Applicability)> {
    let mut best: Option<(CrrProbe, Applicability)> = None;
    let grid = (0..CRR_GRID_STEPS).map(|i| i as f64 / CRR_GRID_STEPS as f64);
    for beta in grid.clone() {
        for gamma in grid.clone() {
            let MinConstant::Value(alpha) = crr_min_alpha(fs, map, beta, gamma) else {
                continue;
            };
            // a sum that is 1 up to rounding must not pass as admissible
            if alpha + beta + gamma > 1.0 - CRR_MARGIN {
                continue;
            }
            let spec = ContractionSpec::Crr { alpha, beta, gamma };
            let a = applicability(&spec, fs.tf(), ctx);
            let probe = CrrProbe {
                alpha,
                beta,
                gamma,
                step_ratio: a.step_ratio,
                applicable: a.applicable,
            };
            let key = |p: &CrrProbe| (p.applicable, -p.step_ratio.value().unwrap_or(f64::INFINITY));
            let better = match &best {
                None => true,
                Some((b, _)) => key(&probe) > key(b),
            };
            if better {
                best = Some((probe, a));
            }
        }
    }
    best
}

/// Checks a theorem's conclusion: the number of fixed points, and that the
/// solver lands on a fixed point from every start.
fn check_conclusion(
    fs: &FiniteSpace,
    map: &SelfMap,
    spec: &ContractionSpec,
    appl: &Applicability,
    fixed: &[usize],
) -> (bool, String) {
    let k = fixed.len();
    let count_ok = match spec.family() {
        ContractionFamily::Perimeter => (1..=2).contains(&k),
        _ => k >= 1 && appl.max_fixed_points.is_none_or(|m| k <= m),
    };
    if !count_ok {
        return (false, format!("{k} fixed points"));
    }
    let cfg = SolveConfig {
        epsilon: f64::MIN_POSITIVE,
        max_iter: 4 * fs.n() + 4,
        mode: StopRule::Residual,
        record_trace: false,
    };
    for x0 in 0..fs.n() {
        match picard_solve(fs, |i: &usize| Ok(map.apply(*i)), &x0, spec, &cfg) {
            Ok(r) if r.trace.termination == Termination::FixedPointExact && fixed.contains(&r.point) => {}
            Ok(r) => {
                return (
                    false,
                    format!(
                        "solver from {} ended {:?} at {}",
                        fs.label(x0),
                        r.trace.termination,
                        fs.label(r.point)
                    ),
                )
            }
            Err(e) => return (false, format!("solver from {} failed: {e}", fs.label(x0))),
        }
    }
    (true, String::new())
}

/// Minimal constants, per-family applicability at those constants, and
/// the audit of every theorem on one finite instance.
pub fn classify(fs: &FiniteSpace, map: &SelfMap) -> Result<ClassifyReport> {
    let verdict = validate_finite(fs);
    if !verdict.passed {
        let v = &verdict.violations[0];
        return Err(Error::Format(format!(
            "not a semimetric: {:?} at ({}, {}) and {} more",
            v.kind,
            v.i,
            v.j,
            verdict.violations.len() - 1
        )));
    }
    if map.len() != fs.n() {
        return Err(Error::Format(format!("map has {} entries for {} points", map.len(), fs.n())));
    }
    let tr_holds = check_tr_finite(fs, fs.tf())?.passed;

    let fixed = fixed_points(map);
    let period2 = period2_points(map);
    let ctx = ApplicabilityContext {
        flags: fs.flags(),
        point_count: Some(fs.n()),
        period2_free: Some(period2.is_empty()),
    };

    let constants = MinimalConstants {
        banach: banach_constant(fs, map),
        kannan: kannan_constant(fs, map),
        chatterjea: chatterjea_constant(fs, map),
        perimeter: perimeter_constant(fs, map),
        crr: None,
    };
    let mut specs: Vec<(ContractionSpec, Applicability)> = vec![
        ContractionSpec::Banach { alpha: as_coefficient(constants.banach) },
        ContractionSpec::Kannan { beta: as_coefficient(constants.kannan) },
        ContractionSpec::Chatterjea { beta: as_coefficient(constants.chatterjea) },
        ContractionSpec::Perimeter { alpha: as_coefficient(constants.perimeter) },
    ]
    .into_iter()
    .map(|s| {
        let a = applicability(&s, fs.tf(), &ctx);
        (s, a)
    })
    .collect();

    let crr = probe_crr(fs, map, &ctx);
    let crr_entry = match &crr {
        Some((p, a)) => (ContractionSpec::Crr { alpha: p.alpha, beta: p.beta, gamma: p.gamma }, a.clone()),
        None => {
            // nothing admissible on the grid: report the Banach slice
            let s = ContractionSpec::Crr { alpha: as_coefficient(constants.banach), beta: 0.0, gamma: 0.0 };
            let a = applicability(&s, fs.tf(), &ctx);
            (s, a)
        }
    };
    specs.insert(3, crr_entry);
    let constants = MinimalConstants { crr: crr.map(|(p, _)| p), ..constants };

    let mut audit = Vec::with_capacity(specs.len());
    let mut ledgers = BTreeMap::new();
    for (spec, appl) in specs {
        let mut failed = appl.failed_conditions();
        if !tr_holds {
            failed.push(TR_CONDITION.to_owned());
        }
        let hypotheses_met = failed.is_empty();
        let (conclusion_met, detail) = if hypotheses_met {
            let (ok, detail) = check_conclusion(fs, map, &spec, &appl, &fixed);
            (Some(ok), detail)
        } else {
            (None, String::new())
        };
        audit.push(AuditRow {
            theorem: spec.family(),
            theorem_path: appl.theorem_path,
            hypotheses_met,
            conclusion_met,
            failed_conditions: failed,
            detail,
        });
        ledgers.insert(spec.family(), appl);
    }

    let names = |ix: &[usize]| ix.iter().map(|&i| fs.label(i).to_owned()).collect();
    Ok(ClassifyReport {
        labels: fs.labels().to_vec(),
        fixed_points: names(&fixed),
        period2_points: names(&period2),
        minimal_constants: constants,
        applicability: ledgers,
        audit,
    })
}

/// Distance model for random instances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    /// Shortest-path closure, `Φ = sum`.
    Metric,
    /// Minimax-path closure, `Φ = max`.
    Ultrametric,
    /// `K`-scaled closure, `Φ = K(u + v)`.
    BMetric(f64),
    /// No closure; `Φ` is the smallest scaled sum that holds.
    Generic,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Metric => f.write_str("metric"),
            Model::Ultrametric => f.write_str("ultrametric"),
            Model::BMetric(k) => write!(f, "bmetric({k})"),
            Model::Generic => f.write_str("generic"),
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    /// Accepts `metric`, `ultrametric`, `generic`, `bmetric` (K = 2),
    /// `bmetric(K)` and `bmetric:K`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unknown model `{s}`"));
        match s {
            "metric" => return Ok(Model::Metric),
            "ultrametric" => return Ok(Model::Ultrametric),
            "generic" => return Ok(Model::Generic),
            "bmetric" => return Ok(Model::BMetric(2.0)),
            _ => {}
        }
        let rest = s.strip_prefix("bmetric").ok_or_else(bad)?;
        let k = rest
            .strip_prefix(':')
            .or_else(|| rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')))
            .ok_or_else(bad)?;
        let k: f64 = k.trim().parse().map_err(|_| bad())?;
        if !(k.is_finite() && k >= 1.0) {
            return Err(Error::InvalidParameter(format!("bmetric needs K >= 1, got {k}")));
        }
        Ok(Model::BMetric(k))
    }
}

pub const MIN_POINTS: usize = 2;
pub const MAX_POINTS: usize = 8;

fn relax(d: &mut [Vec<f64>], step: impl Fn(f64, f64) -> f64) -> bool {
    let n = d.len();
    let mut changed = false;
    for z in 0..n {
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let cand = step(d[x][z], d[z][y]);
                if cand < d[x][y] {
                    d[x][y] = cand;
                    changed = true;
                }
            }
        }
    }
    changed
}

/// Smallest `K ≥ 1` with `d(x, y) ≤ K (d(x, z) + d(z, y))` on all triples.
pub fn derived_scaled_sum_k(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut k = 1.0f64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let den = d[x][z] + d[z][y];
                if den > 0.0 {
                    k = k.max(d[x][y] / den);
                }
            }
        }
    }
    k
}

/// A random space and map, fully determined by `(n, seed, model)`.
///
/// Distances start as integers in `1..=10` and are repaired by the model's
/// closure; the map is uniform over all `nⁿ` tables.
pub fn random_instance(n: usize, seed: u64, model: Model) -> Result<(FiniteSpace, SelfMap)> {
    if !(MIN_POINTS..=MAX_POINTS).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "n must lie in {MIN_POINTS}..={MAX_POINTS}, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![0.0; n]; n];
    for (i, j) in (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))) {
        let v = rng.gen_range(1..=10) as f64;
        d[i][j] = v;
        d[j][i] = v;
    }
    let tf = match model {
        Model::Metric => {
            relax(&mut d, |a, b| a + b);
            TriangleFunction::sum()
        }
        Model::Ultrametric => {
            relax(&mut d, f64::max);
            TriangleFunction::max()
        }
        Model::BMetric(k) => {
            // terminates: only finitely many K-weighted path sums lie below any bound
            for _ in 0..1000 {
                if !relax(&mut d, |a, b| k * (a + b)) {
                    break;
                }
            }
            TriangleFunction::scaled_sum(k)?
        }
        Model::Generic => TriangleFunction::scaled_sum(derived_scaled_sum_k(&d))?,
    };
    let images = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let map = SelfMap::new(images, n)?;
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    Ok((FiniteSpace::new(labels, d, tf)?, map))
}

/// Reproduction file for a falsifying instance.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ReproFile {
    #[serde(flatten)]
    pub space: FiniteSpaceFile,
    pub seed: u64,
    pub model: String,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditConfig {
    pub count: usize,
    pub n_max: usize,
    pub seed: u64,
    pub models: Vec<Model>,
    /// Replace instance 0 with [`example_6_6`].
    pub inject_example: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TheoremCounter {
    pub hypotheses_met: usize,
    pub conclusion_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditSummary {
    pub count: usize,
    pub n_max: usize,
    pub seed: u64,
    pub models: Vec<String>,
    pub theorems: BTreeMap<ContractionFamily, TheoremCounter>,
    /// Instances where Kannan holds with `β < 1/2` but no Banach constant
    /// below 1 exists.
    pub independence_witnesses: Vec<usize>,
}

impl AuditSummary {
    pub fn total_violations(&self) -> usize {
        self.theorems.values().map(|c| c.conclusion_violations).sum()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed, size and model of sweep instance `index`.
pub fn instance_params(cfg: &AuditConfig, index: usize) -> (u64, usize, Model) {
    let s = splitmix64(cfg.seed ^ splitmix64(index as u64));
    let span = cfg.n_max - MIN_POINTS + 1;
    let n = MIN_POINTS + (s % span as u64) as usize;
    (s, n, cfg.models[index % cfg.models.len()])
}

struct Outcome {
    index: usize,
    model: String,
    seed: u64,
    report: ClassifyReport,
    fs: FiniteSpace,
    map: SelfMap,
}

fn run_instance(cfg: &AuditConfig, index: usize) -> Result<Outcome> {
    let (seed, n, model) = instance_params(cfg, index);
    let (fs, map, model) = if index == 0 && cfg.inject_example {
        let (fs, map) = example_6_6();
        (fs, map, "example_6_6".to_owned())
    } else {
        let (fs, map) = random_instance(n, seed, model)?;
        (fs, map, model.to_string())
    };
    let report = classify(&fs, &map)?;
    Ok(Outcome { index, model, seed, report, fs, map })
}

fn is_witness(c: &MinimalConstants) -> bool {
    c.kannan.below(0.5) && !c.banach.below(1.0)
}

/// Generates, classifies and audits `count` instances. Instances run in
/// parallel; the summary does not depend on scheduling.
///
/// The first instance whose audit shows hypotheses met with the conclusion
/// failing aborts the sweep with [`Error::ConclusionViolation`].
pub fn theorem_audit(cfg: &AuditConfig) -> Result<AuditSummary> {
    if cfg.count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    if !(MIN_POINTS..=MAX_POINTS).contains(&cfg.n_max) {
        return Err(Error::InvalidParameter(format!(
            "n_max must lie in {MIN_POINTS}..={MAX_POINTS}, got {}",
            cfg.n_max
        )));
    }
    if cfg.models.is_empty() {
        return Err(Error::InvalidParameter("at least one model is required".into()));
    }

    let outcomes: Vec<Outcome> = (0..cfg.count)
        .into_par_iter()
        .map(|i| run_instance(cfg, i))
        .collect::<Result<_>>()?;

    let mut theorems: BTreeMap<ContractionFamily, TheoremCounter> =
        ContractionFamily::ALL.iter().map(|&f| (f, TheoremCounter::default())).collect();
    let mut witnesses = Vec::new();
    let mut first_violation: Option<(&Outcome, ContractionFamily)> = None;
    for o in &outcomes {
        for row in &o.report.audit {
            let counter = theorems.get_mut(&row.theorem).expect("all families present");
            if row.hypotheses_met {
                counter.hypotheses_met += 1;
                if row.conclusion_met == Some(false) {
                    counter.conclusion_violations += 1;
                    first_violation.get_or_insert((o, row.theorem));
                }
            }
        }
        if is_witness(&o.report.minimal_constants) {
            witnesses.push(o.index);
        }
    }

    if let Some((o, family)) = first_violation {
        let repro = ReproFile {
            space: FiniteSpaceFile::from_space(&o.fs, Some(&o.map))?,
            seed: o.seed,
            model: o.model.clone(),
            index: o.index,
        };
        return Err(Error::ConclusionViolation {
            theorem: family.name().to_owned(),
            repro: Box::new(repro),
        });
    }

    Ok(AuditSummary {
        count: cfg.count,
        n_max: cfg.n_max,
        seed: cfg.seed,
        models: cfg.models.iter().map(Model::to_string).collect(),
        theorems,
        independence_witnesses: witnesses,
    })
}

/// Summary of the three-point counterexample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub fixed_points: Vec<String>,
    pub period2: Vec<String>,
    pub perimeter_alpha_star: MinConstant,
    pub perimeter_audit: AuditRow,
    pub perimeter_solve: PerimeterRun,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerimeterRun {
    pub start: String,
    pub termination: Termination,
    pub n_steps: usize,
}

pub fn counterexample_report() -> Result<CounterexampleReport> {
    let (fs, map) = example_6_6();
    let report = classify(&fs, &map)?;
    let alpha = report.minimal_constants.perimeter;
    let z = 2;
    let cfg = SolveConfig {
        epsilon: 1e-12,
        max_iter: 100,
        mode: StopRule::Residual,
        record_trace: true,
    };
    let run = crate::solver::perimeter_solve(
        &fs,
        |i: &usize| Ok(map.apply(*i)),
        &z,
        alpha.value().expect("three points"),
        &cfg,
    )?;
    Ok(CounterexampleReport {
        fixed_points: report.fixed_points.clone(),
        period2: report.period2_points.clone(),
        perimeter_alpha_star: alpha,
        perimeter_audit: report.row(ContractionFamily::Perimeter).clone(),
        perimeter_solve: PerimeterRun {
            start: fs.label(z).to_owned(),
            termination: run.trace.termination,
            n_steps: run.trace.n_steps,
        },
    })
}
