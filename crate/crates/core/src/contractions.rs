//! The five contraction families, their theorem side conditions and their
//! exact verification on finite spaces.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spaces::{FiniteSpace, SelfMap, SpaceFlags};
use crate::tol;
use crate::triangle::{c_alpha, psi_inverse, CBoundVerdict, CMethod, ExtReal, Family,
    TriangleFunction, DEFAULT_P_CAP};

/// A contraction family with its coefficients.
///
/// JSON form: `{"family":"banach"|"kannan"|"chatterjea"|"crr"|"perimeter",
/// "alpha":?, "beta":?, "gamma":?}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ContractionSpec {
    /// `d(Tx, Ty) ≤ α d(x, y)`
    Banach { alpha: f64 },
    /// `d(Tx, Ty) ≤ β (d(x, Tx) + d(y, Ty))`
    Kannan { beta: f64 },
    /// `d(Tx, Ty) ≤ β (d(x, Ty) + d(y, Tx))`
    Chatterjea { beta: f64 },
    /// `d(Tx, Ty) ≤ α d(x, y) + β d(x, Tx) + γ d(y, Ty)`
    Crr { alpha: f64, beta: f64, gamma: f64 },
    /// Perimeter of the image of every pairwise distinct triple shrinks by `α`.
    Perimeter { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionFamily {
    Banach,
    Kannan,
    Chatterjea,
    Crr,
    Perimeter,
}

impl ContractionFamily {
    pub const ALL: [ContractionFamily; 5] = [
        ContractionFamily::Banach,
        ContractionFamily::Kannan,
        ContractionFamily::Chatterjea,
        ContractionFamily::Crr,
        ContractionFamily::Perimeter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContractionFamily::Banach => "banach",
            ContractionFamily::Kannan => "kannan",
            ContractionFamily::Chatterjea => "chatterjea",
            ContractionFamily::Crr => "crr",
            ContractionFamily::Perimeter => "perimeter",
        }
    }
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl ContractionSpec {
    pub fn banach(alpha: f64) -> Result<Self> {
        Self::Banach { alpha }.validated()
    }

    pub fn kannan(beta: f64) -> Result<Self> {
        Self::Kannan { beta }.validated()
    }

    pub fn chatterjea(beta: f64) -> Result<Self> {
        Self::Chatterjea { beta }.validated()
    }

    pub fn crr(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::Crr { alpha, beta, gamma }.validated()
    }

    pub fn perimeter(alpha: f64) -> Result<Self> {
        Self::Perimeter { alpha }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.check_range().map(|_| self).map_err(Error::InvalidParameter)
    }

    pub fn family(&self) -> ContractionFamily {
        match self {
            ContractionSpec::Banach { .. } => ContractionFamily::Banach,
            ContractionSpec::Kannan { .. } => ContractionFamily::Kannan,
            ContractionSpec::Chatterjea { .. } => ContractionFamily::Chatterjea,
            ContractionSpec::Crr { .. } => ContractionFamily::Crr,
            ContractionSpec::Perimeter { .. } => ContractionFamily::Perimeter,
        }
    }

    /// Coefficient ranges. Chatterjea accepts any `β ≥ 0`; only the side
    /// conditions decide whether a fixed point is guaranteed.
    pub fn check_range(&self) -> std::result::Result<(), String> {
        let ok = match *self {
            ContractionSpec::Banach { alpha } | ContractionSpec::Perimeter { alpha } => {
                nonneg(alpha) && alpha < 1.0
            }
            ContractionSpec::Kannan { beta } => nonneg(beta) && beta < 0.5,
            ContractionSpec::Chatterjea { beta } => nonneg(beta),
            ContractionSpec::Crr { alpha, beta, gamma } => {
                nonneg(alpha) && nonneg(beta) && nonneg(gamma) && alpha + beta + gamma < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(format!("coefficients out of range for {self:?}"))
        }
    }
}

/// Per-step contraction factor along a Picard orbit, or `Infeasible`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRatio {
    Ratio(f64),
    Infeasible,
}

impl StepRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            StepRatio::Ratio(r) => Some(r),
            StepRatio::Infeasible => None,
        }
    }

    fn from_raw(r: f64) -> Self {
        if r.is_finite() && (0.0..1.0).contains(&r) {
            StepRatio::Ratio(r)
        } else {
            StepRatio::Infeasible
        }
    }
}

impl Serialize for StepRatio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepRatio::Ratio(r) => s.serialize_f64(*r),
            StepRatio::Infeasible => s.serialize_str("infeasible"),
        }
    }
}

/// The factor `r` with `d(x_{n+1}, x_{n+2}) ≤ r · d(x_n, x_{n+1})` implied by
/// each family: `α`, `β/(1−β)`, `1/Ψ⁻¹(1/β)`, `(α+β)/(1−γ)` and `α`.
pub fn step_ratio(spec: &ContractionSpec, tf: &TriangleFunction) -> Result<StepRatio> {
    let r = match *spec {
        ContractionSpec::Banach { alpha } | ContractionSpec::Perimeter { alpha } => alpha,
        ContractionSpec::Kannan { beta } => beta / (1.0 - beta),
        ContractionSpec::Chatterjea { beta } => {
            if beta == 0.0 {
                0.0
            } else if !nonneg(beta) {
                return Ok(StepRatio::Infeasible);
            } else {
                match psi_inverse(tf, 1.0 / beta)? {
                    ExtReal::Finite(t) if t > 1.0 => 1.0 / t,
                    _ => return Ok(StepRatio::Infeasible),
                }
            }
        }
        ContractionSpec::Crr { alpha, beta, gamma } => (alpha + beta) / (1.0 - gamma),
    };
    Ok(StepRatio::from_raw(r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Pass,
    Fail,
    /// Cannot be decided statically; checked along the orbit at run time.
    Deferred,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub status: ConditionStatus,
    /// Informational conditions do not affect applicability.
    pub required: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremPath {
    Banach,
    Kannan,
    Chatterjea,
    /// Chatterjea maps on b-metric spaces with `β < 1/(2K)`, which needs no
    /// continuity of `d`.
    ChatterjeaBMetric,
    CiricReichRus,
    Perimeter,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Applicability {
    pub family: ContractionFamily,
    pub applicable: bool,
    pub step_ratio: StepRatio,
    pub c_bound: CBoundVerdict,
    pub conditions: Vec<Condition>,
    pub theorem_path: TheoremPath,
    /// Upper bound on the number of fixed points the theorem guarantees.
    pub max_fixed_points: Option<usize>,
}

impl Applicability {
    pub fn failed_conditions(&self) -> Vec<String> {
        self.conditions
            .iter()
            .filter(|c| c.required && c.status == ConditionStatus::Fail)
            .map(|c| c.name.clone())
            .collect()
    }
}

/// What is known about the space and map beyond the triangle function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApplicabilityContext {
    pub flags: SpaceFlags,
    pub point_count: Option<usize>,
    /// `Some(true)` when the map is known to have no points of prime period 2.
    pub period2_free: Option<bool>,
}

impl ApplicabilityContext {
    pub fn from_flags(flags: SpaceFlags) -> Self {
        ApplicabilityContext {
            flags,
            point_count: None,
            period2_free: None,
        }
    }
}

struct Ledger(Vec<Condition>);

impl Ledger {
    fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.push(name, if ok { ConditionStatus::Pass } else { ConditionStatus::Fail }, true, detail);
    }

    fn push(&mut self, name: &str, status: ConditionStatus, required: bool, detail: impl Into<String>) {
        self.0.push(Condition {
            name: name.to_owned(),
            status,
            required,
            detail: detail.into(),
        });
    }

    fn applicable(&self) -> bool {
        self.0
            .iter()
            .all(|c| !c.required || c.status != ConditionStatus::Fail)
    }
}

fn unbounded_for(tf: &TriangleFunction) -> CBoundVerdict {
    CBoundVerdict {
        value: ExtReal::Infinite,
        p_used: None,
        method: if tf.family() == Family::Custom {
            CMethod::NumericSup
        } else {
            CMethod::ClosedForm
        },
    }
}

/// `Φ(0, c) < 1`, the scalar condition of the Kannan, Chatterjea and
/// Ćirić-Reich-Rus theorems.
fn phi_zero_below_one(ledger: &mut Ledger, tf: &TriangleFunction, coeff: f64, sym: &str) {
    let name = format!("phi(0, {sym}) < 1");
    match tf.eval(0.0, coeff) {
        Ok(v) => ledger.check(&name, v < 1.0, format!("phi(0, {coeff}) = {v}")),
        Err(e) => ledger.check(&name, false, e.to_string()),
    }
}

/// Evaluates every side condition of the theorem matching `spec`.
///
/// Conditions that need knowledge of the map (period-2 points, the point
/// count) are `Deferred` unless supplied in `ctx`. A Chatterjea spec on a
/// scaled-sum space falls back to the b-metric path when the general
/// path fails.
pub fn applicability(
    spec: &ContractionSpec,
    tf: &TriangleFunction,
    ctx: &ApplicabilityContext,
) -> Applicability {
    let general = applicability_general(spec, tf, ctx);
    if let (ContractionSpec::Chatterjea { beta }, Some(k)) = (spec, tf.k()) {
        if !general.applicable {
            let bmetric = chatterjea_bmetric(*beta, k, tf, ctx);
            if bmetric.applicable {
                return bmetric;
            }
        }
    }
    general
}

fn applicability_general(
    spec: &ContractionSpec,
    tf: &TriangleFunction,
    ctx: &ApplicabilityContext,
) -> Applicability {
    let claims = tf.claims();
    let mut ledger = Ledger(Vec::new());

    match spec.check_range() {
        Ok(()) => ledger.check("coefficient range", true, ""),
        Err(e) => ledger.check("coefficient range", false, e),
    }

    let ratio = match step_ratio(spec, tf) {
        Ok(r) => r,
        Err(e) => {
            ledger.check("step ratio computable", false, e.to_string());
            StepRatio::Infeasible
        }
    };
    ledger.check(
        "step ratio < 1",
        ratio.value().is_some(),
        match ratio {
            StepRatio::Ratio(r) => format!("step ratio = {r}"),
            StepRatio::Infeasible => "step ratio infeasible".into(),
        },
    );

    ledger.check("phi homogeneous", claims.homogeneous, "phi(ku, kv) = k phi(u, v)");

    let c_bound = match ratio {
        StepRatio::Ratio(r) => c_alpha(tf, r, DEFAULT_P_CAP).unwrap_or_else(|_| unbounded_for(tf)),
        StepRatio::Infeasible => unbounded_for(tf),
    };
    let mut c_detail = match c_bound.value {
        ExtReal::Finite(c) => format!("C = {c} ({:?})", c_bound.method),
        ExtReal::Infinite => "C unbounded at the step ratio".to_owned(),
    };
    if !c_bound.value.is_finite() {
        if let (Some(k), StepRatio::Ratio(_)) = (tf.k(), ratio) {
            match *spec {
                ContractionSpec::Kannan { .. } if k <= 2.0 => c_detail.push_str(
                    "; K <= 2 alone does not bound the nested composition at beta/(1-beta)",
                ),
                ContractionSpec::Crr { gamma, .. } if k * gamma < 1.0 => c_detail.push_str(
                    "; K < 1/gamma alone does not bound the nested composition at the step ratio",
                ),
                _ => {}
            }
        }
    }
    ledger.check("C(step ratio) finite", c_bound.value.is_finite(), c_detail);

    ledger.check("space complete", ctx.flags.complete, "declared flag");

    let (path, max_fixed) = match *spec {
        ContractionSpec::Banach { .. } => {
            ledger.check("phi continuous at origin", claims.continuous_at_origin, "declared claim");
            (TheoremPath::Banach, Some(1))
        }
        ContractionSpec::Kannan { beta } => {
            ledger.check("phi continuous", claims.continuous_everywhere, "declared claim");
            phi_zero_below_one(&mut ledger, tf, beta, "beta");
            (TheoremPath::Kannan, Some(1))
        }
        ContractionSpec::Chatterjea { beta } => {
            ledger.check("phi continuous", claims.continuous_everywhere, "declared claim");
            ledger.check(
                "semimetric continuous",
                ctx.flags.continuous_semimetric,
                "declared flag",
            );
            phi_zero_below_one(&mut ledger, tf, beta, "beta");
            if beta > 0.0 {
                let name = "psi_inverse(1/beta) > 1";
                match psi_inverse(tf, 1.0 / beta) {
                    Ok(ExtReal::Finite(t)) => {
                        ledger.check(name, t > 1.0, format!("psi_inverse({}) = {t}", 1.0 / beta))
                    }
                    Ok(ExtReal::Infinite) => ledger.check(name, false, "psi_inverse is infinite"),
                    Err(e) => ledger.check(name, false, e.to_string()),
                }
            }
            (TheoremPath::Chatterjea, (beta < 0.5).then_some(1))
        }
        ContractionSpec::Crr { gamma, .. } => {
            ledger.check("phi continuous", claims.continuous_everywhere, "declared claim");
            phi_zero_below_one(&mut ledger, tf, gamma, "gamma");
            (TheoremPath::CiricReichRus, Some(1))
        }
        ContractionSpec::Perimeter { .. } => {
            ledger.check("phi continuous at origin", claims.continuous_at_origin, "declared claim");
            perimeter_map_conditions(&mut ledger, ctx);
            (TheoremPath::Perimeter, Some(2))
        }
    };

    Applicability {
        family: spec.family(),
        applicable: ledger.applicable(),
        step_ratio: ratio,
        c_bound,
        conditions: ledger.0,
        theorem_path: path,
        max_fixed_points: max_fixed,
    }
}

fn perimeter_map_conditions(ledger: &mut Ledger, ctx: &ApplicabilityContext) {
    const THREE: &str = "at least three points";
    const PERIOD2: &str = "no prime-period-2 points";
    match ctx.point_count {
        Some(n) => ledger.check(THREE, n >= 3, format!("{n} points")),
        None => ledger.check(THREE, true, "infinite space"),
    }
    match ctx.period2_free {
        Some(free) => ledger.check(
            PERIOD2,
            free,
            if free { "none found" } else { "map has points with T(T(x)) = x != T(x)" },
        ),
        None => ledger.push(PERIOD2, ConditionStatus::Deferred, true, "checked along the orbit"),
    }
}

/// Chatterjea on b-metric spaces: `0 ≤ β < 1/(2K)` suffices without any
/// continuity of `d`. The orbit then satisfies
/// `d_{n+1} ≤ Kβ/(1−Kβ) · d_n`; the a priori constant at that ratio is
/// reported but not required.
fn chatterjea_bmetric(
    beta: f64,
    k: f64,
    tf: &TriangleFunction,
    ctx: &ApplicabilityContext,
) -> Applicability {
    let mut ledger = Ledger(Vec::new());
    ledger.check("coefficient range", nonneg(beta), format!("beta = {beta}"));
    let threshold = 1.0 / (2.0 * k);
    ledger.check(
        "beta < 1/(2K)",
        beta < threshold,
        format!("beta = {beta}, 1/(2K) = {threshold}"),
    );
    ledger.check("space complete", ctx.flags.complete, "declared flag");
    let ratio = StepRatio::from_raw(k * beta / (1.0 - k * beta));
    let c_bound = match ratio {
        StepRatio::Ratio(r) => c_alpha(tf, r, DEFAULT_P_CAP).unwrap_or_else(|_| unbounded_for(tf)),
        StepRatio::Infeasible => unbounded_for(tf),
    };
    ledger.push(
        "C(step ratio) finite",
        if c_bound.value.is_finite() { ConditionStatus::Pass } else { ConditionStatus::Fail },
        false,
        "a priori bound available only when finite",
    );
    Applicability {
        family: ContractionFamily::Chatterjea,
        applicable: ledger.applicable() && ratio.value().is_some(),
        step_ratio: ratio,
        c_bound,
        conditions: ledger.0,
        theorem_path: TheoremPath::ChatterjeaBMetric,
        max_fixed_points: (beta < 0.5).then_some(1),
    }
}

/// Best constant found by enumeration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MinConstant {
    Value(f64),
    /// Some instance has a zero denominator with a positive numerator.
    Infeasible,
    /// No informative pair or triple exists (e.g. fewer than three points
    /// for perimeters).
    Undefined,
}

impl MinConstant {
    pub fn value(self) -> Option<f64> {
        match self {
            MinConstant::Value(v) => Some(v),
            _ => None,
        }
    }

    /// `true` when the constant exists and is below `bound`.
    pub fn below(self, bound: f64) -> bool {
        matches!(self, MinConstant::Value(v) if v < bound)
    }
}

impl Serialize for MinConstant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MinConstant::Value(v) => s.serialize_f64(*v),
            MinConstant::Infeasible => s.serialize_str("infeasible"),
            MinConstant::Undefined => s.serialize_none(),
        }
    }
}

struct RatioMax {
    best: Option<f64>,
    infeasible: bool,
}

impl RatioMax {
    fn new() -> Self {
        RatioMax { best: None, infeasible: false }
    }

    fn add(&mut self, num: f64, den: f64) {
        if num == 0.0 {
            return;
        }
        if den == 0.0 {
            self.infeasible = true;
            return;
        }
        let r = num / den;
        self.best = Some(self.best.map_or(r, |b| b.max(r)));
    }

    fn finish(self) -> MinConstant {
        if self.infeasible {
            MinConstant::Infeasible
        } else {
            self.best.map_or(MinConstant::Value(0.0), MinConstant::Value)
        }
    }
}

fn check_map(fs: &FiniteSpace, map: &SelfMap) -> Result<()> {
    if map.len() != fs.n() {
        return Err(Error::Format(format!(
            "map has {} entries for {} points",
            map.len(),
            fs.n()
        )));
    }
    if let Some((index, &image)) = map.images().iter().enumerate().find(|(_, &j)| j >= fs.n()) {
        return Err(Error::MapOutOfRange { index, image, n: fs.n() });
    }
    Ok(())
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y)))
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
}

fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |x| {
        (x + 1..n).flat_map(move |y| (y + 1..n).map(move |z| (x, y, z)))
    })
}

fn perimeter(fs: &FiniteSpace, x: usize, y: usize, z: usize) -> f64 {
    fs.d(x, y) + fs.d(y, z) + fs.d(x, z)
}

/// `max d(Tx,Ty)/d(x,y)` over distinct pairs.
pub fn banach_constant(fs: &FiniteSpace, map: &SelfMap) -> MinConstant {
    let mut m = RatioMax::new();
    for (x, y) in pairs(fs.n()) {
        m.add(fs.d(map.apply(x), map.apply(y)), fs.d(x, y));
    }
    m.finish()
}

/// `max d(Tx,Ty)/(d(x,Tx) + d(y,Ty))` over distinct pairs.
pub fn kannan_constant(fs: &FiniteSpace, map: &SelfMap) -> MinConstant {
    let mut m = RatioMax::new();
    for (x, y) in pairs(fs.n()) {
        let (tx, ty) = (map.apply(x), map.apply(y));
        m.add(fs.d(tx, ty), fs.d(x, tx) + fs.d(y, ty));
    }
    m.finish()
}

/// `max d(Tx,Ty)/(d(x,Ty) + d(y,Tx))` over distinct pairs.
pub fn chatterjea_constant(fs: &FiniteSpace, map: &SelfMap) -> MinConstant {
    let mut m = RatioMax::new();
    for (x, y) in pairs(fs.n()) {
        let (tx, ty) = (map.apply(x), map.apply(y));
        m.add(fs.d(tx, ty), fs.d(x, ty) + fs.d(y, tx));
    }
    m.finish()
}

/// Largest image-perimeter to perimeter ratio over pairwise distinct triples.
pub fn perimeter_constant(fs: &FiniteSpace, map: &SelfMap) -> MinConstant {
    if fs.n() < 3 {
        return MinConstant::Undefined;
    }
    let mut m = RatioMax::new();
    for (x, y, z) in triples(fs.n()) {
        let img = perimeter(fs, map.apply(x), map.apply(y), map.apply(z));
        m.add(img, perimeter(fs, x, y, z));
    }
    m.finish()
}

/// Smallest `α ≥ 0` making the Ćirić-Reich-Rus inequality hold for the
/// given `β, γ`. The inequality is not symmetric in `(x, y)` when `β ≠ γ`,
/// so ordered pairs are enumerated.
pub fn crr_min_alpha(fs: &FiniteSpace, map: &SelfMap, beta: f64, gamma: f64) -> MinConstant {
    let mut best = 0.0f64;
    for (x, y) in ordered_pairs(fs.n()) {
        let (tx, ty) = (map.apply(x), map.apply(y));
        let slack = fs.d(tx, ty) - beta * fs.d(x, tx) - gamma * fs.d(y, ty);
        if slack <= 0.0 {
            continue;
        }
        let dxy = fs.d(x, y);
        if dxy == 0.0 {
            return MinConstant::Infeasible;
        }
        best = best.max(slack / dxy);
    }
    MinConstant::Value(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// Pair `[x, y]` or triple `[x, y, z]` by index.
    pub points: Vec<usize>,
    /// Left side minus right side; positive means violated.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteCheck {
    pub family: ContractionFamily,
    pub holds: bool,
    pub worst: Option<Witness>,
    /// For Ćirić-Reich-Rus this is the Banach slice `β = γ = 0`.
    pub minimal: MinConstant,
}

/// Checks `spec`'s inequality on every distinct pair (or pairwise distinct
/// triple for perimeters), with [`tol::le`] slack. Coefficients are taken
/// as given, in or out of range.
pub fn verify_on_finite(fs: &FiniteSpace, map: &SelfMap, spec: &ContractionSpec) -> Result<FiniteCheck> {
    check_map(fs, map)?;
    let n = fs.n();
    let t = |i| map.apply(i);
    let mut holds = true;
    let mut worst: Option<Witness> = None;
    let mut record = |points: Vec<usize>, lhs: f64, rhs: f64| {
        if !tol::le(lhs, rhs) {
            holds = false;
        }
        let excess = lhs - rhs;
        if worst.as_ref().is_none_or(|w| excess > w.excess) {
            worst = Some(Witness { points, excess });
        }
    };

    let minimal = match *spec {
        ContractionSpec::Banach { alpha } => {
            for (x, y) in pairs(n) {
                record(vec![x, y], fs.d(t(x), t(y)), alpha * fs.d(x, y));
            }
            banach_constant(fs, map)
        }
        ContractionSpec::Kannan { beta } => {
            for (x, y) in pairs(n) {
                record(vec![x, y], fs.d(t(x), t(y)), beta * (fs.d(x, t(x)) + fs.d(y, t(y))));
            }
            kannan_constant(fs, map)
        }
        ContractionSpec::Chatterjea { beta } => {
            for (x, y) in pairs(n) {
                record(vec![x, y], fs.d(t(x), t(y)), beta * (fs.d(x, t(y)) + fs.d(y, t(x))));
            }
            chatterjea_constant(fs, map)
        }
        ContractionSpec::Crr { alpha, beta, gamma } => {
            for (x, y) in ordered_pairs(n) {
                let rhs = alpha * fs.d(x, y) + beta * fs.d(x, t(x)) + gamma * fs.d(y, t(y));
                record(vec![x, y], fs.d(t(x), t(y)), rhs);
            }
            banach_constant(fs, map)
        }
        ContractionSpec::Perimeter { alpha } => {
            for (x, y, z) in triples(n) {
                record(
                    vec![x, y, z],
                    perimeter(fs, t(x), t(y), t(z)),
                    alpha * perimeter(fs, x, y, z),
                );
            }
            perimeter_constant(fs, map)
        }
    };

    Ok(FiniteCheck {
        family: spec.family(),
        holds,
        worst,
        minimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_ones(n: usize, tf: TriangleFunction) -> FiniteSpace {
        let d = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        FiniteSpace::new((0..n).map(|i| format!("p{i}")).collect(), d, tf).unwrap()
    }

    fn ctx() -> ApplicabilityContext {
        ApplicabilityContext::from_flags(SpaceFlags::ALL)
    }

    #[test]
    fn spec_ranges() {
        assert!(ContractionSpec::banach(1.0).is_err());
        assert!(ContractionSpec::kannan(0.5).is_err());
        assert!(ContractionSpec::chatterjea(0.9).is_ok());
        assert!(ContractionSpec::chatterjea(-0.1).is_err());
        assert!(ContractionSpec::crr(0.3, 0.3, 0.4).is_err());
        assert!(ContractionSpec::crr(0.1, 0.2, 0.4).is_ok());
        assert!(ContractionSpec::perimeter(f64::NAN).is_err());
    }

    #[test]
    fn spec_json() {
        let s: ContractionSpec =
            serde_json::from_str(r#"{"family":"crr","alpha":0.1,"beta":0.2,"gamma":0.3}"#).unwrap();
        assert_eq!(s, ContractionSpec::Crr { alpha: 0.1, beta: 0.2, gamma: 0.3 });
        assert_eq!(
            serde_json::to_string(&ContractionSpec::Banach { alpha: 0.5 }).unwrap(),
            r#"{"family":"banach","alpha":0.5}"#
        );
    }

    #[test]
    fn step_ratio_examples() {
        let sum = TriangleFunction::sum();
        let k = step_ratio(&ContractionSpec::Kannan { beta: 1.0 / 3.0 }, &sum).unwrap();
        assert!((k.value().unwrap() - 0.5).abs() <= 4.0 * f64::EPSILON);
        let c = step_ratio(&ContractionSpec::Crr { alpha: 0.1, beta: 0.2, gamma: 0.4 }, &sum).unwrap();
        assert!((c.value().unwrap() - 0.5).abs() <= 4.0 * f64::EPSILON);
        let ch = step_ratio(&ContractionSpec::Chatterjea { beta: 0.8 }, &TriangleFunction::max()).unwrap();
        assert!((ch.value().unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(
            step_ratio(&ContractionSpec::Chatterjea { beta: 0.0 }, &sum).unwrap(),
            StepRatio::Ratio(0.0)
        );
        // Ψ⁻¹(2) = 1 for the sum: not strictly above one
        assert_eq!(
            step_ratio(&ContractionSpec::Chatterjea { beta: 0.5 }, &sum).unwrap(),
            StepRatio::Infeasible
        );
    }

    #[test]
    fn banach_scaled_sum_not_applicable() {
        let k2 = TriangleFunction::scaled_sum(2.0).unwrap();
        let a = applicability(&ContractionSpec::Banach { alpha: 0.6 }, &k2, &ctx());
        assert!(!a.applicable);
        assert_eq!(a.c_bound.value, ExtReal::Infinite);
        assert_eq!(a.failed_conditions(), vec!["C(step ratio) finite"]);
    }

    #[test]
    fn kannan_scaled_sum_cases() {
        let spec = ContractionSpec::Kannan { beta: 0.4 };
        let k2 = TriangleFunction::scaled_sum(2.0).unwrap();
        let a = applicability(&spec, &k2, &ctx());
        let phi = a.conditions.iter().find(|c| c.name == "phi(0, beta) < 1").unwrap();
        assert_eq!(phi.status, ConditionStatus::Pass);
        assert!((a.step_ratio.value().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(!a.applicable);
        let c = a.conditions.iter().find(|c| c.name == "C(step ratio) finite").unwrap();
        assert!(c.detail.contains("K <= 2"));

        let k14 = TriangleFunction::scaled_sum(1.4).unwrap();
        let a = applicability(&spec, &k14, &ctx());
        assert!(a.applicable, "{:?}", a.conditions);
        assert_eq!(a.theorem_path, TheoremPath::Kannan);
    }

    #[test]
    fn chatterjea_ultrametric() {
        let a = applicability(&ContractionSpec::Chatterjea { beta: 0.9 }, &TriangleFunction::max(), &ctx());
        assert!(a.applicable);
        assert!((a.step_ratio.value().unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(a.max_fixed_points, None);
    }

    #[test]
    fn chatterjea_bmetric_path() {
        let k2 = TriangleFunction::scaled_sum(2.0).unwrap();
        let no_cont = ApplicabilityContext::from_flags(SpaceFlags {
            complete: true,
            continuous_semimetric: false,
        });
        let a = applicability(&ContractionSpec::Chatterjea { beta: 0.2 }, &k2, &no_cont);
        assert!(a.applicable);
        assert_eq!(a.theorem_path, TheoremPath::ChatterjeaBMetric);
        let a = applicability(&ContractionSpec::Chatterjea { beta: 0.25 }, &k2, &no_cont);
        assert!(!a.applicable);
    }

    #[test]
    fn perimeter_deferred_and_known() {
        let spec = ContractionSpec::Perimeter { alpha: 0.5 };
        let a = applicability(&spec, &TriangleFunction::sum(), &ctx());
        assert!(a.applicable);
        assert!(a.conditions.iter().any(|c| c.status == ConditionStatus::Deferred));
        let known = ApplicabilityContext { flags: SpaceFlags::ALL, point_count: Some(3), period2_free: Some(false) };
        let a = applicability(&spec, &TriangleFunction::sum(), &known);
        assert_eq!(a.failed_conditions(), vec!["no prime-period-2 points"]);
    }

    #[test]
    fn finite_examples() {
        let fs = all_ones(3, TriangleFunction::max());
        let swap = SelfMap::new(vec![1, 0, 0], 3).unwrap();
        let r = verify_on_finite(&fs, &swap, &ContractionSpec::Perimeter { alpha: 0.7 }).unwrap();
        assert!(r.holds);
        assert_eq!(r.minimal, MinConstant::Value(2.0 / 3.0));

        let constant = SelfMap::constant(3, 1).unwrap();
        let r = verify_on_finite(&fs, &constant, &ContractionSpec::Banach { alpha: 0.0 }).unwrap();
        assert!(r.holds);
        assert_eq!(r.minimal, MinConstant::Value(0.0));

        let id = SelfMap::identity(3);
        let r = verify_on_finite(&fs, &id, &ContractionSpec::Banach { alpha: 0.99 }).unwrap();
        assert!(!r.holds);
        assert_eq!(r.minimal, MinConstant::Value(1.0));
        assert_eq!(kannan_constant(&fs, &id), MinConstant::Infeasible);
        assert_eq!(chatterjea_constant(&fs, &id), MinConstant::Value(0.5));
    }

    #[test]
    fn map_length_mismatch() {
        let fs = all_ones(3, TriangleFunction::sum());
        let m = SelfMap::identity(2);
        assert!(verify_on_finite(&fs, &m, &ContractionSpec::Banach { alpha: 0.5 }).is_err());
    }

    #[test]
    fn perimeter_undefined_below_three_points() {
        let fs = all_ones(2, TriangleFunction::sum());
        assert_eq!(perimeter_constant(&fs, &SelfMap::identity(2)), MinConstant::Undefined);
    }
}
