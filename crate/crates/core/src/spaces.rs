//! Semimetric spaces: builtin continuous instances, finite distance matrices,
//! and checks of the semimetric axioms and the generalized triangle
//! inequality.

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;
use crate::triangle::{PhiDescriptor, TriangleFunction};

/// Analytic properties of a space that finite sampling cannot observe.
/// They are declared, never verified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceFlags {
    pub complete: bool,
    pub continuous_semimetric: bool,
}

impl SpaceFlags {
    pub const ALL: SpaceFlags = SpaceFlags {
        complete: true,
        continuous_semimetric: true,
    };
}

impl Default for SpaceFlags {
    fn default() -> Self {
        SpaceFlags::ALL
    }
}

pub trait Space {
    type Point: Clone + PartialEq + Debug;

    fn dist(&self, x: &Self::Point, y: &Self::Point) -> f64;

    /// The triangle function the space is declared to satisfy.
    fn tf(&self) -> &TriangleFunction;

    fn flags(&self) -> SpaceFlags;

    /// Number of points, `None` for infinite spaces.
    fn cardinality(&self) -> Option<usize>;

    /// Deterministic point sample for property checks.
    fn sample_points(&self, _count: usize, _seed: u64) -> Option<Vec<Self::Point>> {
        None
    }

    fn render(&self, p: &Self::Point) -> String;
}

/// Sampled points on the line: a fixed grid followed by uniform draws in
/// `[-1e6, 1e6]`.
fn line_sample(count: usize, seed: u64) -> Vec<f64> {
    const GRID: [f64; 15] = [
        0.0, 1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 1.0 / 3.0, 10.0, -10.0, 1e3, -1e3, 1e6, -1e6, 0.25,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<f64> = GRID.iter().copied().take(count).collect();
    while pts.len() < count {
        pts.push(rng.gen_range(-1e6..=1e6));
    }
    pts
}

/// The real line with `|x − y|`.
#[derive(Clone, Debug)]
pub struct RealLine {
    tf: TriangleFunction,
}

impl Default for RealLine {
    fn default() -> Self {
        RealLine {
            tf: TriangleFunction::sum(),
        }
    }
}

impl Space for RealLine {
    type Point = f64;

    fn dist(&self, x: &f64, y: &f64) -> f64 {
        (x - y).abs()
    }

    fn tf(&self) -> &TriangleFunction {
        &self.tf
    }

    fn flags(&self) -> SpaceFlags {
        SpaceFlags::ALL
    }

    fn cardinality(&self) -> Option<usize> {
        None
    }

    fn sample_points(&self, count: usize, seed: u64) -> Option<Vec<f64>> {
        Some(line_sample(count, seed))
    }

    fn render(&self, p: &f64) -> String {
        format!("{p}")
    }
}

/// The real line with the squared distance `(x − y)²`: a semimetric that
/// is not a metric. Its natural triangle function is `power(q = 1/2)`;
/// `scaled_sum(K = 2)` also holds.
#[derive(Clone, Debug)]
pub struct SquaredLine {
    tf: TriangleFunction,
}

impl Default for SquaredLine {
    fn default() -> Self {
        SquaredLine {
            tf: TriangleFunction::power(0.5).expect("q = 1/2 is valid"),
        }
    }
}

impl SquaredLine {
    pub fn with_tf(tf: TriangleFunction) -> Self {
        SquaredLine { tf }
    }
}

impl Space for SquaredLine {
    type Point = f64;

    fn dist(&self, x: &f64, y: &f64) -> f64 {
        (x - y) * (x - y)
    }

    fn tf(&self) -> &TriangleFunction {
        &self.tf
    }

    fn flags(&self) -> SpaceFlags {
        SpaceFlags::ALL
    }

    fn cardinality(&self) -> Option<usize> {
        None
    }

    fn sample_points(&self, count: usize, seed: u64) -> Option<Vec<f64>> {
        Some(line_sample(count, seed))
    }

    fn render(&self, p: &f64) -> String {
        format!("{p}")
    }
}

/// Binary strings of length `m` with `d(x, y) = 2^(−lcp(x, y))` for
/// `x ≠ y`. An ultrametric space, so `Φ = max`.
#[derive(Clone, Debug)]
pub struct StringUltrametric {
    m: usize,
    tf: TriangleFunction,
}

/// Largest string length whose point set is enumerated rather than sampled.
const ENUMERATE_BITS: usize = 12;

impl StringUltrametric {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > 1024 {
            return Err(Error::InvalidParameter(format!(
                "string length must lie in 1..=1024, got {m}"
            )));
        }
        Ok(StringUltrametric {
            m,
            tf: TriangleFunction::max(),
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Accepts a string of exactly `m` characters from `{0, 1}`.
    pub fn parse_point(&self, s: &str) -> Result<String> {
        if s.len() != self.m || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Domain(format!(
                "expected a binary string of length {}, got `{s}`",
                self.m
            )));
        }
        Ok(s.to_owned())
    }
}

pub fn common_prefix_len(a: &str, b: &str) -> usize {
    a.bytes().zip(b.bytes()).take_while(|(x, y)| x == y).count()
}

impl Space for StringUltrametric {
    type Point = String;

    fn dist(&self, x: &String, y: &String) -> f64 {
        if x == y {
            return 0.0;
        }
        let lcp = common_prefix_len(x, y);
        // powi keeps the value an exact power of two
        0.5f64.powi(lcp as i32)
    }

    fn tf(&self) -> &TriangleFunction {
        &self.tf
    }

    fn flags(&self) -> SpaceFlags {
        SpaceFlags::ALL
    }

    fn cardinality(&self) -> Option<usize> {
        if self.m < usize::BITS as usize {
            Some(1usize << self.m)
        } else {
            None
        }
    }

    fn sample_points(&self, count: usize, seed: u64) -> Option<Vec<String>> {
        let to_string = |bits: u64| -> String {
            (0..self.m)
                .map(|i| if (bits >> (self.m - 1 - i)) & 1 == 1 { '1' } else { '0' })
                .collect()
        };
        if self.m <= ENUMERATE_BITS {
            return Some((0..1u64 << self.m).map(to_string).collect());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..count)
            .map(|_| {
                (0..self.m)
                    .map(|_| if rng.gen::<bool>() { '1' } else { '0' })
                    .collect()
            })
            .collect();
        Some(pts)
    }

    fn render(&self, p: &String) -> String {
        p.clone()
    }
}

/// A named builtin instance.
#[derive(Clone, Debug)]
pub enum BuiltinSpace {
    RealLine(RealLine),
    SquaredLine(SquaredLine),
    StringUltrametric(StringUltrametric),
}

#[derive(Clone, Debug, Default)]
pub struct BuiltinParams {
    /// String length for `string_ultrametric`.
    pub m: Option<usize>,
    /// Overrides the triangle function of `squared_line`.
    pub tf: Option<TriangleFunction>,
}

pub const BUILTIN_NAMES: [&str; 3] = ["real_line", "squared_line", "string_ultrametric"];

pub fn builtin_space(name: &str, params: &BuiltinParams) -> Result<BuiltinSpace> {
    match name {
        "real_line" => Ok(BuiltinSpace::RealLine(RealLine::default())),
        "squared_line" => Ok(BuiltinSpace::SquaredLine(match &params.tf {
            Some(tf) => SquaredLine::with_tf(tf.clone()),
            None => SquaredLine::default(),
        })),
        "string_ultrametric" => Ok(BuiltinSpace::StringUltrametric(StringUltrametric::new(
            params.m.unwrap_or(16),
        )?)),
        other => Err(Error::UnknownSpace(other.to_owned())),
    }
}

impl BuiltinSpace {
    /// Names of the self-maps shipped with this space.
    pub fn catalog(&self) -> &'static [&'static str] {
        match self {
            BuiltinSpace::RealLine(_) | BuiltinSpace::SquaredLine(_) => &REAL_MAPS,
            BuiltinSpace::StringUltrametric(_) => &STRING_MAPS,
        }
    }
}

const REAL_MAPS: [&str; 3] = ["half_plus_one", "quarter_minus_three", "constant_zero"];
const STRING_MAPS: [&str; 2] = ["shift_zero", "constant_zeros"];

/// Catalog maps on the real line.
pub fn real_map(name: &str) -> Option<fn(f64) -> f64> {
    match name {
        "half_plus_one" => Some(|x| 0.5 * x + 1.0),
        "quarter_minus_three" => Some(|x| 0.25 * x - 3.0),
        "constant_zero" => Some(|_| 0.0),
        _ => None,
    }
}

/// Catalog maps on binary strings.
pub fn string_map(name: &str) -> Option<fn(&str) -> String> {
    match name {
        // prepend '0', drop the last character
        "shift_zero" => Some(|s| {
            let mut out = String::with_capacity(s.len());
            if !s.is_empty() {
                out.push('0');
                out.push_str(&s[..s.len() - 1]);
            }
            out
        }),
        "constant_zeros" => Some(|s| "0".repeat(s.len())),
        _ => None,
    }
}

/// A finite semimetric space given by its distance matrix.
#[derive(Clone, Debug)]
pub struct FiniteSpace {
    labels: Vec<String>,
    d: Vec<Vec<f64>>,
    tf: TriangleFunction,
    flags: SpaceFlags,
}

impl FiniteSpace {
    /// Checks only the shape of the matrix; see [`validate_finite`] for the
    /// semimetric axioms.
    pub fn new(labels: Vec<String>, d: Vec<Vec<f64>>, tf: TriangleFunction) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Format("a finite space needs at least one point".into()));
        }
        if d.len() != n {
            return Err(Error::Format(format!(
                "distance matrix has {} rows for {n} labels",
                d.len()
            )));
        }
        if let Some((i, row)) = d.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Format(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        Ok(FiniteSpace {
            labels,
            d,
            tf,
            flags: Self::default_flags(),
        })
    }

    /// Flags assumed for finite spaces. Every sequence in a finite space
    /// that converges is eventually constant, so completeness and
    /// sequential continuity of `d` hold trivially.
    pub fn default_flags() -> SpaceFlags {
        SpaceFlags::ALL
    }

    pub fn with_flags(mut self, flags: SpaceFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_tf(mut self, tf: TriangleFunction) -> Self {
        self.tf = tf;
        self
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.d
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }
}

impl Space for FiniteSpace {
    type Point = usize;

    fn dist(&self, x: &usize, y: &usize) -> f64 {
        self.d[*x][*y]
    }

    fn tf(&self) -> &TriangleFunction {
        &self.tf
    }

    fn flags(&self) -> SpaceFlags {
        self.flags
    }

    fn cardinality(&self) -> Option<usize> {
        Some(self.n())
    }

    fn sample_points(&self, _count: usize, _seed: u64) -> Option<Vec<usize>> {
        Some((0..self.n()).collect())
    }

    fn render(&self, p: &usize) -> String {
        self.labels[*p].clone()
    }
}

/// A self-map of a finite space, stored as an image table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelfMap(Vec<usize>);

impl SelfMap {
    pub fn new(images: Vec<usize>, n: usize) -> Result<Self> {
        if images.len() != n {
            return Err(Error::Format(format!(
                "map has {} entries for {n} points",
                images.len()
            )));
        }
        if let Some((index, &image)) = images.iter().enumerate().find(|(_, &j)| j >= n) {
            return Err(Error::MapOutOfRange { index, image, n });
        }
        Ok(SelfMap(images))
    }

    pub fn identity(n: usize) -> Self {
        SelfMap((0..n).collect())
    }

    pub fn constant(n: usize, target: usize) -> Result<Self> {
        Self::new(vec![target; n], n)
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixViolationKind {
    NonFinite,
    Negative,
    NonzeroDiagonal,
    Asymmetric,
    /// `d(i, j) = 0` for distinct `i ≠ j`.
    Indiscernible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixViolation {
    pub kind: MatrixViolationKind,
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixVerdict {
    pub passed: bool,
    pub violations: Vec<MatrixViolation>,
}

/// Checks the semimetric axioms on a distance matrix.
pub fn validate_finite(fs: &FiniteSpace) -> MatrixVerdict {
    use MatrixViolationKind::*;
    let n = fs.n();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = fs.d(i, j);
            let kind = if !v.is_finite() {
                Some(NonFinite)
            } else if v < 0.0 {
                Some(Negative)
            } else if i == j && v != 0.0 {
                Some(NonzeroDiagonal)
            } else if i < j && v != fs.d(j, i) {
                Some(Asymmetric)
            } else if i < j && v == 0.0 {
                Some(Indiscernible)
            } else {
                None
            };
            if let Some(kind) = kind {
                violations.push(MatrixViolation { kind, i, j });
            }
        }
    }
    MatrixVerdict {
        passed: violations.is_empty(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrWitness<P> {
    pub x: P,
    pub y: P,
    pub z: P,
    /// `d(x, y) − Φ(d(x, z), d(z, y))`; positive means violated.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrVerdict<P> {
    pub passed: bool,
    pub checked: usize,
    /// Triple with the largest excess seen, violated or not.
    pub worst: Option<TrWitness<P>>,
}

impl<P> TrVerdict<P> {
    fn fold(&mut self, excess_ok: bool, witness: TrWitness<P>) {
        self.checked += 1;
        if !excess_ok {
            self.passed = false;
        }
        let replace = match &self.worst {
            Some(w) => witness.excess > w.excess,
            None => true,
        };
        if replace {
            self.worst = Some(witness);
        }
    }
}

fn tr_term(tf: &TriangleFunction, dxy: f64, dxz: f64, dzy: f64) -> Result<(bool, f64)> {
    let bound = tf.eval(dxz, dzy)?;
    Ok((tol::le(dxy, bound), dxy - bound))
}

/// `d(x, y) ≤ Φ(d(x, z), d(z, y))` over every ordered triple of a finite
/// space.
pub fn check_tr_finite(fs: &FiniteSpace, tf: &TriangleFunction) -> Result<TrVerdict<usize>> {
    let n = fs.n();
    let mut verdict = TrVerdict {
        passed: true,
        checked: 0,
        worst: None,
    };
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let (ok, excess) = tr_term(tf, fs.d(x, y), fs.d(x, z), fs.d(z, y))?;
                verdict.fold(ok, TrWitness { x, y, z, excess });
            }
        }
    }
    Ok(verdict)
}

/// Sampled check of the generalized triangle inequality: `budget` triples
/// drawn from the space's sampler.
pub fn check_tr<S: Space>(
    space: &S,
    tf: &TriangleFunction,
    budget: usize,
    seed: u64,
) -> Result<TrVerdict<S::Point>> {
    let pool = space
        .sample_points(512, seed)
        .ok_or_else(|| Error::Unsupported("space has no point sampler".into()))?;
    if pool.is_empty() {
        return Err(Error::Unsupported("sampler returned no points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut verdict = TrVerdict {
        passed: true,
        checked: 0,
        worst: None,
    };
    for _ in 0..budget.max(1) {
        let x = &pool[rng.gen_range(0..pool.len())];
        let y = &pool[rng.gen_range(0..pool.len())];
        let z = &pool[rng.gen_range(0..pool.len())];
        let (ok, excess) = tr_term(tf, space.dist(x, y), space.dist(x, z), space.dist(z, y))?;
        verdict.fold(
            ok,
            TrWitness {
                x: x.clone(),
                y: y.clone(),
                z: z.clone(),
                excess,
            },
        );
    }
    Ok(verdict)
}

/// The finite-space JSON file:
/// `{"labels":[..], "d":[[..]], "phi":{..}, "map":[..]?, "flags":{..}?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpaceFile {
    pub labels: Vec<String>,
    pub d: Vec<Vec<f64>>,
    pub phi: PhiDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<SpaceFlags>,
}

impl FiniteSpaceFile {
    pub fn from_space(fs: &FiniteSpace, map: Option<&SelfMap>) -> Result<Self> {
        let phi = fs.tf().descriptor().ok_or_else(|| {
            Error::Unsupported("custom triangle functions cannot be serialized".into())
        })?;
        Ok(FiniteSpaceFile {
            labels: fs.labels.clone(),
            d: fs.d.clone(),
            phi,
            map: map.map(|m| m.images().to_vec()),
            flags: Some(fs.flags),
        })
    }

    pub fn into_space(self) -> Result<(FiniteSpace, Option<SelfMap>)> {
        let tf = self.phi.build()?;
        let mut fs = FiniteSpace::new(self.labels, self.d, tf)?;
        if let Some(flags) = self.flags {
            fs = fs.with_flags(flags);
        }
        let map = self.map.map(|m| SelfMap::new(m, fs.n())).transpose()?;
        Ok((fs, map))
    }
}
