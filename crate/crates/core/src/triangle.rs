//! Triangle functions: the map `Φ` bounding `d(x, y)` by `Φ(d(x, z), d(z, y))`.
//!
//! Builtin families are the metric sum, the ultrametric max, the b-metric
//! scaled sum `K(u + v)` and the power family `(u^q + v^q)^(1/q)`. Arbitrary
//! functions can be wrapped as [`Family::Custom`]; for those the nested bound
//! `C(α)` is only estimated numerically and `Ψ⁻¹` is found by bisection.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tol;

/// Default truncation depth for the numeric `C(α)` supremum.
pub const DEFAULT_P_CAP: u32 = 64;

/// Nested bounds above this are treated as divergent.
pub const DIVERGENCE_CAP: f64 = 1e12;

const STALL_FACTOR: f64 = 0.999;
const STALL_STEPS: u32 = 8;

const BISECT_WIDTH: f64 = 1e-12;
const BISECT_UPPER_CAP: f64 = 1e18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sum,
    Max,
    ScaledSum,
    Power,
    Custom,
}

/// A nonnegative real or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinite => s.serialize_str("infinite"),
        }
    }
}

type PhiFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Kind {
    Sum,
    Max,
    ScaledSum { k: f64 },
    Power { q: f64 },
    Custom { name: String, f: Arc<PhiFn> },
}

/// Analytic properties a triangle function claims about itself.
///
/// These are declarations: [`check_axioms`] samples homogeneity, but
/// continuity is taken on trust.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiClaims {
    pub homogeneous: bool,
    pub continuous_at_origin: bool,
    pub continuous_everywhere: bool,
}

impl PhiClaims {
    pub const ALL: PhiClaims = PhiClaims {
        homogeneous: true,
        continuous_at_origin: true,
        continuous_everywhere: true,
    };
}

/// An immutable triangle function. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct TriangleFunction {
    kind: Kind,
    claims: PhiClaims,
}

impl fmt::Debug for TriangleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TriangleFunction")
            .field("family", &self.family())
            .field("params", &self.describe())
            .field("claims", &self.claims)
            .finish()
    }
}

impl TriangleFunction {
    /// `Φ(u, v) = u + v`.
    pub fn sum() -> Self {
        Self::builtin(Kind::Sum)
    }

    /// `Φ(u, v) = max(u, v)`.
    pub fn max() -> Self {
        Self::builtin(Kind::Max)
    }

    /// `Φ(u, v) = K(u + v)` for `K ≥ 1`.
    pub fn scaled_sum(k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "scaled_sum requires finite K >= 1, got {k}"
            )));
        }
        Ok(Self::builtin(Kind::ScaledSum { k }))
    }

    /// `Φ(u, v) = (u^q + v^q)^(1/q)` for `q > 0`.
    pub fn power(q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power requires finite q > 0, got {q}"
            )));
        }
        Ok(Self::builtin(Kind::Power { q }))
    }

    /// Wraps an arbitrary function. Nothing about `f` is verified here.
    pub fn custom<F>(name: impl Into<String>, claims: PhiClaims, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        TriangleFunction {
            kind: Kind::Custom {
                name: name.into(),
                f: Arc::new(f),
            },
            claims,
        }
    }

    fn builtin(kind: Kind) -> Self {
        TriangleFunction {
            kind,
            claims: PhiClaims::ALL,
        }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Sum => Family::Sum,
            Kind::Max => Family::Max,
            Kind::ScaledSum { .. } => Family::ScaledSum,
            Kind::Power { .. } => Family::Power,
            Kind::Custom { .. } => Family::Custom,
        }
    }

    pub fn claims(&self) -> PhiClaims {
        self.claims
    }

    /// The `K` of a scaled sum.
    pub fn k(&self) -> Option<f64> {
        match self.kind {
            Kind::ScaledSum { k } => Some(k),
            _ => None,
        }
    }

    pub fn q(&self) -> Option<f64> {
        match self.kind {
            Kind::Power { q } => Some(q),
            _ => None,
        }
    }

    /// Human-readable form, e.g. `scaled_sum(K=2)`.
    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Sum => "sum".into(),
            Kind::Max => "max".into(),
            Kind::ScaledSum { k } => format!("scaled_sum(K={k})"),
            Kind::Power { q } => format!("power(q={q})"),
            Kind::Custom { name, .. } => format!("custom({name})"),
        }
    }

    /// Evaluates `Φ(u, v)` without input validation.
    fn raw(&self, u: f64, v: f64) -> f64 {
        match &self.kind {
            Kind::Sum => u + v,
            Kind::Max => u.max(v),
            Kind::ScaledSum { k } => k * (u + v),
            Kind::Power { q } => {
                let m = u.max(v);
                if m == 0.0 {
                    return 0.0;
                }
                // factor out the larger argument so the power stays in [0, 2]
                let s = (u / m).powf(*q) + (v / m).powf(*q);
                m * s.powf(1.0 / q)
            }
            Kind::Custom { f, .. } => f(u, v),
        }
    }

    /// `Φ(u, v)` on finite nonnegative inputs.
    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        check_arg(u)?;
        check_arg(v)?;
        let r = self.raw(u, v);
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Domain(format!(
                "{} returned {r} at ({u}, {v})",
                self.describe()
            )));
        }
        Ok(r)
    }

    /// `Ψ(u) = Φ(u, 1)`.
    pub fn psi(&self, u: f64) -> Result<f64> {
        self.eval(u, 1.0)
    }

    /// `C(α)` in closed form, when the family has one.
    pub fn closed_form_c(&self, alpha: f64) -> Option<ExtReal> {
        match self.kind {
            Kind::Sum => Some(ExtReal::Finite(1.0 / (1.0 - alpha))),
            Kind::Max => Some(ExtReal::Finite(1.0)),
            Kind::Power { q } => Some(ExtReal::Finite((1.0 - alpha.powf(q)).powf(-1.0 / q))),
            Kind::ScaledSum { k } => {
                if alpha * k < 1.0 {
                    Some(ExtReal::Finite(k / (1.0 - alpha * k)))
                } else {
                    Some(ExtReal::Infinite)
                }
            }
            Kind::Custom { .. } => None,
        }
    }

    /// JSON descriptor for builtin families; `None` for custom functions.
    pub fn descriptor(&self) -> Option<PhiDescriptor> {
        let (family, k, q) = match self.kind {
            Kind::Sum => (Family::Sum, None, None),
            Kind::Max => (Family::Max, None, None),
            Kind::ScaledSum { k } => (Family::ScaledSum, Some(k), None),
            Kind::Power { q } => (Family::Power, None, Some(q)),
            Kind::Custom { .. } => return None,
        };
        Some(PhiDescriptor { family, k, q })
    }
}

fn check_arg(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "triangle function arguments must be finite and nonnegative, got {x}"
        )))
    }
}

/// `{"family": "sum"|"max"|"scaled_sum"|"power", "K": number?, "q": number?}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiDescriptor {
    pub family: Family,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl PhiDescriptor {
    pub fn build(&self) -> Result<TriangleFunction> {
        make_builtin(self.family, self.k.or(self.q))
    }
}

/// Builds a builtin family. `param` is `K` for scaled sums and `q` for powers.
pub fn make_builtin(family: Family, param: Option<f64>) -> Result<TriangleFunction> {
    match family {
        Family::Sum => Ok(TriangleFunction::sum()),
        Family::Max => Ok(TriangleFunction::max()),
        Family::ScaledSum => TriangleFunction::scaled_sum(param.ok_or_else(|| {
            Error::InvalidParameter("scaled_sum requires K".into())
        })?),
        Family::Power => TriangleFunction::power(
            param.ok_or_else(|| Error::InvalidParameter("power requires q".into()))?,
        ),
        Family::Custom => Err(Error::InvalidParameter(
            "custom triangle functions cannot be built from a tag".into(),
        )),
    }
}

pub fn eval_phi(tf: &TriangleFunction, u: f64, v: f64) -> Result<f64> {
    tf.eval(u, v)
}

pub fn psi(tf: &TriangleFunction, u: f64) -> Result<f64> {
    tf.psi(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    ZeroAtOrigin,
    Symmetry,
    Monotonicity,
    Homogeneity,
    /// Output negative or non-finite.
    Range,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub u: f64,
    pub v: f64,
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomVerdict {
    pub passed: bool,
    pub samples: usize,
    /// At most [`MAX_WITNESSES`] violations, in discovery order.
    pub violations: Vec<AxiomViolation>,
}

pub const MAX_WITNESSES: usize = 10;

/// Log-spaced grid over `[0, 1e6]` with an exact zero.
fn sample_grid() -> Vec<f64> {
    const STEPS: i32 = 120;
    let mut grid = vec![0.0];
    grid.extend((0..=STEPS).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / STEPS as f64)));
    grid.extend([0.5, 1.0, 2.0, 3.0]);
    grid
}

/// Samples symmetry, monotonicity, `Φ(0,0) = 0` and (when claimed)
/// homogeneity on a seeded grid sample.
pub fn check_axioms(tf: &TriangleFunction, sample_budget: usize, seed: u64) -> AxiomVerdict {
    let mut violations = Vec::new();
    let mut push = |axiom, u, v, k| {
        if violations.len() < MAX_WITNESSES {
            violations.push(AxiomViolation { axiom, u, v, k });
        }
    };

    match tf.eval(0.0, 0.0) {
        Ok(0.0) => {}
        Ok(_) => push(Axiom::ZeroAtOrigin, 0.0, 0.0, 1.0),
        Err(_) => push(Axiom::Range, 0.0, 0.0, 1.0),
    }

    let grid = sample_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng| grid[rng.gen_range(0..grid.len())];

    for _ in 0..sample_budget.max(1) {
        let u = pick(&mut rng);
        let v = pick(&mut rng);
        let w = pick(&mut rng);
        let k = pick(&mut rng);
        let (lo, hi) = if u <= w { (u, w) } else { (w, u) };

        let (Ok(fuv), Ok(fvu), Ok(flo), Ok(fhi)) =
            (tf.eval(u, v), tf.eval(v, u), tf.eval(lo, v), tf.eval(hi, v))
        else {
            push(Axiom::Range, u, v, k);
            continue;
        };
        if !tol::rel_eq(fuv, fvu) {
            push(Axiom::Symmetry, u, v, 1.0);
        }
        if !tol::le(flo, fhi) {
            push(Axiom::Monotonicity, lo, v, hi);
        }
        if tf.claims.homogeneous {
            match tf.eval(k * u, k * v) {
                Ok(scaled) if tol::rel_eq(scaled, k * fuv) => {}
                Ok(_) => push(Axiom::Homogeneity, u, v, k),
                Err(_) => push(Axiom::Range, k * u, k * v, k),
            }
        }
    }

    AxiomVerdict {
        passed: violations.is_empty(),
        samples: sample_budget.max(1),
        violations,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )))
    }
}

/// `Φ(1, Φ(α, Φ(α², …, Φ(α^{p−1}, α^p))))`, folded from the innermost pair.
pub fn nested_bound(tf: &TriangleFunction, alpha: f64, p: u32) -> Result<f64> {
    check_alpha(alpha)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let pow = |i: u32| alpha.powi(i as i32);
    let mut acc = tf.eval(pow(p - 1), pow(p))?;
    for i in (0..p - 1).rev() {
        acc = tf.eval(pow(i), acc)?;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CMethod {
    ClosedForm,
    NumericSup,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CBoundVerdict {
    #[serde(serialize_with = "serialize_c_value")]
    pub value: ExtReal,
    /// Depth reached by the numeric route; absent for closed forms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_used: Option<u32>,
    pub method: CMethod,
}

impl CBoundVerdict {
    pub fn finite(&self) -> Option<f64> {
        self.value.finite()
    }
}

fn serialize_c_value<S: Serializer>(v: &ExtReal, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        ExtReal::Finite(x) => s.serialize_f64(*x),
        ExtReal::Infinite => s.serialize_str("unbounded"),
    }
}

/// The constant `C(α)` bounding every nested composition.
///
/// Builtins use their closed form. Custom functions take the supremum of
/// [`nested_bound`] over `p ≤ p_cap`, declared unbounded once a value exceeds
/// [`DIVERGENCE_CAP`] or the increments stop shrinking for eight steps in a
/// row. The numeric route is an estimate, not a certificate.
pub fn c_alpha(tf: &TriangleFunction, alpha: f64, p_cap: u32) -> Result<CBoundVerdict> {
    check_alpha(alpha)?;
    if let Some(value) = tf.closed_form_c(alpha) {
        return Ok(CBoundVerdict {
            value,
            p_used: None,
            method: CMethod::ClosedForm,
        });
    }
    numeric_sup(tf, alpha, p_cap.max(1))
}

/// The numeric supremum route of [`c_alpha`], regardless of closed forms.
pub fn numeric_sup(tf: &TriangleFunction, alpha: f64, p_cap: u32) -> Result<CBoundVerdict> {
    check_alpha(alpha)?;
    let unbounded = |p| CBoundVerdict {
        value: ExtReal::Infinite,
        p_used: Some(p),
        method: CMethod::NumericSup,
    };
    let mut best = 0.0f64;
    let mut prev: Option<f64> = None;
    let mut prev_inc: Option<f64> = None;
    let mut stalled = 0;
    for p in 1..=p_cap.max(1) {
        let b = nested_bound(tf, alpha, p)?;
        if b > DIVERGENCE_CAP {
            return Ok(unbounded(p));
        }
        if let Some(pb) = prev {
            let inc = b - pb;
            let noise = f64::EPSILON * b.abs().max(1.0);
            match prev_inc {
                Some(pi) if inc > noise && inc >= STALL_FACTOR * pi => stalled += 1,
                _ => stalled = 0,
            }
            if stalled >= STALL_STEPS {
                return Ok(unbounded(p));
            }
            prev_inc = Some(inc);
        }
        prev = Some(b);
        best = best.max(b);
    }
    Ok(CBoundVerdict {
        value: ExtReal::Finite(best),
        p_used: Some(p_cap.max(1)),
        method: CMethod::NumericSup,
    })
}

/// Generalized inverse `Ψ⁻¹(τ) = inf { t ≥ 0 : Ψ(t) ≥ τ }`, `+∞` for an
/// empty set.
///
/// Builtins use their closed forms. For powers the result is then pinned
/// to the smallest float `t` with `Ψ(t) ≥ τ` under the implemented `Ψ`:
/// near `τ = 1` the closed form is ill-conditioned (`Ψ(t) − 1 ≈ t^q / q`
/// drops below one ulp), and unpinned `Ψ⁻¹(Ψ(t)) ≤ t` fails for small `t`.
pub fn psi_inverse(tf: &TriangleFunction, tau: f64) -> Result<ExtReal> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain(format!(
            "tau must be finite and nonnegative, got {tau}"
        )));
    }
    let t = match tf.kind {
        Kind::Sum => (tau - 1.0).max(0.0),
        Kind::Max => {
            if tau <= 1.0 {
                0.0
            } else {
                tau
            }
        }
        Kind::ScaledSum { k } => (tau / k - 1.0).max(0.0),
        Kind::Power { q } => {
            let t = if tau >= 1.0 {
                (tau.powf(q) - 1.0).powf(1.0 / q)
            } else {
                0.0
            };
            pin_to_infimum(tf, tau, t)?
        }
        Kind::Custom { .. } => return psi_inverse_bisect(tf, tau),
    };
    Ok(ExtReal::Finite(t))
}

/// Smallest float `t` with `Ψ(t) ≥ τ`, searched by bisection over the bit
/// patterns of nonnegative floats, which sort like the values.
fn pin_to_infimum(tf: &TriangleFunction, tau: f64, guess: f64) -> Result<f64> {
    if tf.psi(0.0)? >= tau {
        return Ok(0.0);
    }
    let mut hi = guess.max(f64::MIN_POSITIVE);
    let mut widen = 0;
    while tf.psi(hi)? < tau {
        hi = hi * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        widen += 1;
        if widen > 64 {
            // the closed form is far off; keep it rather than loop
            return Ok(guess);
        }
    }
    let (mut lo, mut hi) = (0u64, hi.to_bits());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tf.psi(f64::from_bits(mid))? >= tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(f64::from_bits(hi))
}

/// Bisection route of [`psi_inverse`] for any nondecreasing `Ψ`.
///
/// The bracket `[0, 1]` doubles its upper end until `Ψ(upper) ≥ τ`; past
/// `1e18` the level is deemed unattainable. Returns the lower end, which
/// approaches the infimum from below.
pub fn psi_inverse_bisect(tf: &TriangleFunction, tau: f64) -> Result<ExtReal> {
    if tf.psi(0.0)? >= tau {
        return Ok(ExtReal::Finite(0.0));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while tf.psi(hi)? < tau {
        lo = hi;
        hi *= 2.0;
        if hi > BISECT_UPPER_CAP {
            return Ok(ExtReal::Infinite);
        }
    }
    while hi - lo > BISECT_WIDTH {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if tf.psi(mid)? >= tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ExtReal::Finite(lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, eps: f64) -> bool {
        (a - b).abs() <= eps
    }

    #[test]
    fn builtin_evaluations() {
        assert_eq!(TriangleFunction::sum().eval(2.0, 3.0).unwrap(), 5.0);
        assert_eq!(TriangleFunction::max().eval(2.0, 3.0).unwrap(), 3.0);
        assert!(close(TriangleFunction::power(2.0).unwrap().eval(3.0, 4.0).unwrap(), 5.0, 1e-12));
        assert_eq!(TriangleFunction::sum().eval(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(TriangleFunction::scaled_sum(2.0).unwrap().eval(1.0, 1.0).unwrap(), 4.0);
        assert!(close(TriangleFunction::power(0.5).unwrap().eval(1.0, 1.0).unwrap(), 4.0, 1e-12));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(TriangleFunction::scaled_sum(0.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(TriangleFunction::power(0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(TriangleFunction::power(f64::NAN), Err(Error::InvalidParameter(_))));
        assert!(make_builtin(Family::Power, None).is_err());
        assert!(make_builtin(Family::Custom, None).is_err());
    }

    #[test]
    fn domain_errors() {
        let tf = TriangleFunction::sum();
        assert!(matches!(tf.eval(-1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(tf.eval(f64::INFINITY, 0.0), Err(Error::Domain(_))));
        assert!(matches!(tf.eval(0.0, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(psi_inverse(&tf, f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn axioms_pass_for_builtins() {
        for tf in [
            TriangleFunction::sum(),
            TriangleFunction::max(),
            TriangleFunction::scaled_sum(3.0).unwrap(),
            TriangleFunction::power(0.5).unwrap(),
            TriangleFunction::power(3.0).unwrap(),
        ] {
            let v = check_axioms(&tf, 1000, 1);
            assert!(v.passed, "{}: {:?}", tf.describe(), v.violations);
        }
    }

    #[test]
    fn axioms_catch_offset_and_nonhomogeneous() {
        let offset = TriangleFunction::custom("u+v+1", PhiClaims::ALL, |u, v| u + v + 1.0);
        let v = check_axioms(&offset, 50, 3);
        assert!(!v.passed);
        assert_eq!(v.violations[0].axiom, Axiom::ZeroAtOrigin);
        assert_eq!((v.violations[0].u, v.violations[0].v), (0.0, 0.0));

        let square = TriangleFunction::custom("u+v^2", PhiClaims::ALL, |u, v| u + v * v);
        let v = check_axioms(&square, 1000, 1);
        assert!(!v.passed);
        assert!(v.violations.len() <= MAX_WITNESSES);
        let w = v
            .violations
            .iter()
            .find(|w| w.axiom == Axiom::Homogeneity)
            .expect("homogeneity witness");
        assert!(w.k != 1.0 && w.v > 0.0);
    }

    #[test]
    fn asymmetric_custom_fails_symmetry() {
        let tf = TriangleFunction::custom("2u+v", PhiClaims::ALL, |u, v| 2.0 * u + v);
        let v = check_axioms(&tf, 200, 9);
        assert!(v.violations.iter().any(|w| w.axiom == Axiom::Symmetry));
    }

    #[test]
    fn nested_bound_examples() {
        assert_eq!(nested_bound(&TriangleFunction::max(), 0.5, 10).unwrap(), 1.0);
        assert!(close(nested_bound(&TriangleFunction::sum(), 0.5, 3).unwrap(), 1.875, 1e-15));
        let p2 = TriangleFunction::power(2.0).unwrap();
        let expected = (1.0f64 + 0.25 + 0.0625).sqrt();
        assert!(close(nested_bound(&p2, 0.5, 2).unwrap(), expected, 1e-14));
        assert!(close(expected, 1.14564, 1e-5));
        assert!(nested_bound(&p2, 1.0, 2).is_err());
        assert!(nested_bound(&p2, 0.5, 0).is_err());
    }

    #[test]
    fn c_alpha_closed_forms() {
        let v = c_alpha(&TriangleFunction::sum(), 0.5, DEFAULT_P_CAP).unwrap();
        assert_eq!(v.value, ExtReal::Finite(2.0));
        assert_eq!(v.method, CMethod::ClosedForm);
        let k2 = TriangleFunction::scaled_sum(2.0).unwrap();
        assert_eq!(c_alpha(&k2, 0.25, 64).unwrap().value, ExtReal::Finite(4.0));
        assert_eq!(c_alpha(&k2, 0.6, 64).unwrap().value, ExtReal::Infinite);
        assert_eq!(c_alpha(&k2, 0.5, 64).unwrap().value, ExtReal::Infinite);
        let pw = TriangleFunction::power(0.5).unwrap();
        assert!(close(c_alpha(&pw, 0.25, 64).unwrap().finite().unwrap(), 4.0, 1e-12));
    }

    #[test]
    fn c_alpha_numeric_for_custom() {
        let sum_like = TriangleFunction::custom("sum", PhiClaims::ALL, |u, v| u + v);
        let v = c_alpha(&sum_like, 0.5, 64).unwrap();
        assert_eq!(v.method, CMethod::NumericSup);
        let c = v.finite().unwrap();
        assert!(c <= 2.0 && c > 2.0 - 1e-15);

        // K = 2 with α = 0.6: terms grow like 1.2^p
        let divergent = TriangleFunction::custom("2(u+v)", PhiClaims::ALL, |u, v| 2.0 * (u + v));
        let v = c_alpha(&divergent, 0.6, 64).unwrap();
        assert_eq!(v.value, ExtReal::Infinite);
        assert!(v.p_used.unwrap() >= 1);

        // αK = 1 exactly: increments constant, caught by the stall rule
        let v = c_alpha(&divergent, 0.5, 64).unwrap();
        assert_eq!(v.value, ExtReal::Infinite);
        assert!(v.p_used.unwrap() < 64);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(&TriangleFunction::max(), 0.3).unwrap(), 1.0);
        assert_eq!(psi(&TriangleFunction::sum(), 2.0).unwrap(), 3.0);
        let p2 = TriangleFunction::power(2.0).unwrap();
        assert!(close(psi(&p2, 1.0).unwrap(), 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn psi_inverse_examples() {
        let max = TriangleFunction::max();
        assert_eq!(psi_inverse(&max, 2.0).unwrap(), ExtReal::Finite(2.0));
        assert_eq!(psi_inverse(&max, 0.5).unwrap(), ExtReal::Finite(0.0));
        assert_eq!(psi_inverse(&max, 1.0).unwrap(), ExtReal::Finite(0.0));
        let p2 = TriangleFunction::power(2.0).unwrap();
        let t = psi_inverse(&p2, 2f64.sqrt()).unwrap().finite().unwrap();
        assert!(close(t, 1.0, 1e-12));
        assert_eq!(psi_inverse(&TriangleFunction::sum(), 3.0).unwrap(), ExtReal::Finite(2.0));
        assert_eq!(psi_inverse(&TriangleFunction::sum(), 0.5).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn bisection_matches_closed_form_and_detects_infinite() {
        let sum_like = TriangleFunction::custom("sum", PhiClaims::ALL, |u, v| u + v);
        let t = psi_inverse(&sum_like, 3.0).unwrap().finite().unwrap();
        assert!(close(t, 2.0, 1e-11));
        assert!(t <= 2.0);

        let bounded = TriangleFunction::custom("bounded", PhiClaims::ALL, |u, v| {
            (u + v).min(5.0)
        });
        assert_eq!(psi_inverse(&bounded, 10.0).unwrap(), ExtReal::Infinite);
        assert_eq!(psi_inverse(&bounded, 0.5).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn descriptor_round_trip() {
        let json = r#"{"family":"scaled_sum","K":2.5}"#;
        let d: PhiDescriptor = serde_json::from_str(json).unwrap();
        let tf = d.build().unwrap();
        assert_eq!(tf.k(), Some(2.5));
        assert_eq!(serde_json::to_string(&tf.descriptor().unwrap()).unwrap(), json);
        let d: PhiDescriptor = serde_json::from_str(r#"{"family":"power","q":0.5}"#).unwrap();
        assert_eq!(d.build().unwrap().q(), Some(0.5));
        assert!(serde_json::from_str::<PhiDescriptor>(r#"{"family":"cubic"}"#).is_err());
    }
}
