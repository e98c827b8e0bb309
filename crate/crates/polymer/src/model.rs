//! Model parameters, Parisi measures and solved phase points.
//!
//! A [`ParisiMeasure`] is a probability measure `ζ` on `[0, q)` stored through
//! its cumulative distribution function `s ↦ ζ([0, s])`. The CDF is the
//! primitive because every formula of the theory consumes either the CDF or
//! the gap function `δ(s) = ∫_s^q ζ([0, u]) du`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::correlator::Correlator;
use crate::error::{ensure_domain, Error, Result};
use crate::parisi::StationarityResiduals;

/// Tolerance used when validating that a measure has total mass one.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Structure constants of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Inverse temperature β > 0.
    pub beta: f64,
    /// Mass μ > 0.
    pub mu: f64,
    /// Elastic strength t > 0.
    pub t: f64,
    /// Number of lattice sites `L ≥ 1`, when working at finite size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_size: Option<usize>,
}

impl ModelParams {
    /// Validated continuum parameters.
    pub fn new(beta: f64, mu: f64, t: f64) -> Result<Self> {
        let p = ModelParams { beta, mu, t, lattice_size: None };
        p.validate()?;
        Ok(p)
    }

    /// The same parameters at lattice size `l`.
    pub fn with_lattice(mut self, l: usize) -> Result<Self> {
        self.lattice_size = Some(l);
        self.validate()?;
        Ok(self)
    }

    /// The same parameters with a different mass.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        let mut p = self.clone();
        p.mu = mu;
        p.validate()?;
        Ok(p)
    }

    /// Checks strict positivity of all constants.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta", self.beta), ("mu", self.mu), ("t", self.t)] {
            ensure_domain(v.is_finite() && v > 0.0, || {
                format!("model parameter {name} must be finite and positive, got {v}")
            })?;
        }
        if let Some(l) = self.lattice_size {
            ensure_domain(l >= 1, || "lattice size L must be at least 1".to_string())?;
        }
        Ok(())
    }

    /// `s̄ = 1/√(μt)`, the continuum value of `βδ(0)` at a critical point.
    pub fn s_bar(&self) -> f64 {
        1.0 / (self.mu * self.t).sqrt()
    }
}

/// A closed-form CDF on an interval of the form `β⁻¹ U_B′(q_c − s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum CdfFormula {
    /// Power-law instance written out explicitly:
    /// `(2(γ+2)/(3β)) (2tgγ(γ+1))^{−1/3} (a + 2q_c − 2s)^{(γ−1)/3}`,
    /// which for `g = a = 1` reads
    /// `((γ+2)/(3β)) (4/(tγ(γ+1)))^{1/3} (1 + 2q_c − 2s)^{(γ−1)/3}`.
    FrsbPowerLaw {
        /// Inverse temperature.
        beta: f64,
        /// Elastic strength.
        t: f64,
        /// Amplitude of the power law.
        g: f64,
        /// Offset of the power law.
        a: f64,
        /// Exponent of the power law.
        gamma: f64,
        /// Right endpoint `q_c` of the Parisi pair.
        q_c: f64,
    },
    /// General form `β⁻¹ U_B′(q_c − s)` for any correlator.
    FrsbGeneral {
        /// Inverse temperature.
        beta: f64,
        /// Elastic strength.
        t: f64,
        /// Right endpoint `q_c` of the Parisi pair.
        q_c: f64,
        /// The correlator defining `U_B`.
        correlator: Correlator,
    },
}

impl CdfFormula {
    /// CDF value at `s`.
    pub fn value(&self, s: f64) -> f64 {
        match self {
            CdfFormula::FrsbPowerLaw { beta, t, g, a, gamma, q_c } => {
                let pref = 2.0 * (gamma + 2.0) / (3.0 * beta) * (2.0 * t * g * gamma * (gamma + 1.0)).powf(-1.0 / 3.0);
                pref * (a + 2.0 * q_c - 2.0 * s).powf((gamma - 1.0) / 3.0)
            }
            CdfFormula::FrsbGeneral { beta, t, q_c, correlator } => {
                let x = 2.0 * (q_c - s);
                let b2 = correlator.b2(x);
                let b3 = correlator.b3(x);
                (2.0 * t).powf(-1.0 / 3.0) * (-2.0 * b3 / 3.0) * b2.powf(-4.0 / 3.0) / beta
            }
        }
    }

    /// Exact `∫_lo^hi` of the CDF (both kinds have elementary antiderivatives).
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match self {
            CdfFormula::FrsbPowerLaw { beta, t, g, a, gamma, q_c } => {
                let pref = 2.0 * (gamma + 2.0) / (3.0 * beta) * (2.0 * t * g * gamma * (gamma + 1.0)).powf(-1.0 / 3.0);
                let p1 = (gamma + 2.0) / 3.0;
                let anti = |s: f64| -pref * (a + 2.0 * q_c - 2.0 * s).powf(p1) / (2.0 * p1);
                anti(hi) - anti(lo)
            }
            CdfFormula::FrsbGeneral { beta, t, q_c, correlator } => {
                // d/ds [−U_B(q_c − s)] = U_B′(q_c − s).
                let ub = |s: f64| (2.0 * t * correlator.b2(2.0 * (q_c - s))).powf(-1.0 / 3.0);
                (ub(lo) - ub(hi)) / beta
            }
        }
    }

    fn shifted(&self, r: f64) -> CdfFormula {
        let mut f = self.clone();
        match &mut f {
            CdfFormula::FrsbPowerLaw { q_c, .. } | CdfFormula::FrsbGeneral { q_c, .. } => *q_c += r,
        }
        f
    }
}

/// One ordered component of a measure's CDF description.
///
/// Non-atom segments tile `[0, q]` left to right (`[start, end)`, the last one
/// closed at `q`) and give the CDF value on their interval. Atom segments are
/// zero-width markers recording the jumps of the CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    /// A jump of size `mass` at `location`.
    Atom {
        /// Position of the atom.
        location: f64,
        /// Its mass.
        mass: f64,
    },
    /// The CDF equals `value` on `[start, end)`.
    ConstantCdf {
        /// Left end.
        start: f64,
        /// Right end.
        end: f64,
        /// CDF value.
        value: f64,
    },
    /// The CDF equals a closed-form expression on `[start, end)`.
    ClosedFormCdf {
        /// Left end.
        start: f64,
        /// Right end.
        end: f64,
        /// The expression.
        formula: CdfFormula,
    },
    /// The CDF is the linear interpolant of `(nodes, values)` on `[start, end)`.
    SampledCdf {
        /// Left end (equal to the first node).
        start: f64,
        /// Right end (equal to the last node).
        end: f64,
        /// Increasing nodes.
        nodes: Vec<f64>,
        /// Nondecreasing CDF values at the nodes.
        values: Vec<f64>,
    },
}

/// How the CDF behaves on one tile of `[0, q]`.
#[derive(Debug, Clone, Copy)]
pub enum PieceKind<'a> {
    /// Constant CDF value.
    Constant(f64),
    /// Closed-form CDF.
    Formula(&'a CdfFormula),
    /// Piecewise-linear CDF.
    Sampled(&'a [f64], &'a [f64]),
}

/// One tile `[start, end)` of the CDF description.
#[derive(Debug, Clone, Copy)]
pub struct Piece<'a> {
    /// Left end.
    pub start: f64,
    /// Right end.
    pub end: f64,
    /// CDF behaviour on the tile.
    pub kind: PieceKind<'a>,
}

impl Piece<'_> {
    /// CDF value at `s` (assumed inside the tile).
    pub fn cdf(&self, s: f64) -> f64 {
        match self.kind {
            PieceKind::Constant(v) => v,
            PieceKind::Formula(f) => f.value(s),
            PieceKind::Sampled(x, y) => interp(x, y, s),
        }
    }

    /// Exact `∫_lo^hi` of the CDF for `start ≤ lo ≤ hi ≤ end`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match self.kind {
            PieceKind::Constant(v) => v * (hi - lo),
            PieceKind::Formula(f) => f.integral(lo, hi),
            PieceKind::Sampled(x, y) => sampled_integral(x, y, lo, hi),
        }
    }

    /// True when the CDF is constant on the tile.
    pub fn is_constant(&self) -> bool {
        matches!(self.kind, PieceKind::Constant(_))
    }
}

fn interp(x: &[f64], y: &[f64], s: f64) -> f64 {
    let i = match x.partition_point(|&v| v <= s) {
        0 => return y[0],
        i if i >= x.len() => return y[y.len() - 1],
        i => i,
    };
    let (x0, x1, y0, y1) = (x[i - 1], x[i], y[i - 1], y[i]);
    if x1 == x0 {
        y1
    } else {
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }
}

fn sampled_integral(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for i in 1..x.len() {
        let a = x[i - 1].max(lo);
        let b = x[i].min(hi);
        if b > a {
            total += 0.5 * (interp(x, y, a) + interp(x, y, b)) * (b - a);
        }
    }
    total
}

/// A probability measure `ζ` on `[0, q)` with right endpoint `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr")]
pub struct ParisiMeasure {
    q: f64,
    q_star: f64,
    segments: Vec<Segment>,
    #[serde(skip)]
    tails: Vec<f64>,
}

#[derive(Deserialize)]
struct MeasureRepr {
    q: f64,
    segments: Vec<Segment>,
}

impl TryFrom<MeasureRepr> for ParisiMeasure {
    type Error = Error;

    fn try_from(r: MeasureRepr) -> Result<Self> {
        let tiles: Vec<Segment> = r.segments.into_iter().filter(|s| !matches!(s, Segment::Atom { .. })).collect();
        ParisiMeasure::from_tiles(r.q, tiles)
    }
}

impl ParisiMeasure {
    /// Builds a measure from non-atom segments tiling `[0, q]`; atom markers
    /// are derived from the jumps of the CDF.
    pub fn from_tiles(q: f64, tiles: Vec<Segment>) -> Result<Self> {
        ensure_domain(q.is_finite() && q > 0.0, || format!("measure endpoint q = {q} must be positive"))?;
        ensure_domain(!tiles.is_empty(), || "measure needs at least one segment".into())?;
        let mut pos = 0.0;
        for seg in &tiles {
            let (start, end) = match seg {
                Segment::Atom { .. } => return Err(Error::Domain("atom markers are derived, not tiles".into())),
                Segment::ConstantCdf { start, end, .. }
                | Segment::ClosedFormCdf { start, end, .. }
                | Segment::SampledCdf { start, end, .. } => (*start, *end),
            };
            ensure_domain(start == pos && end > start, || {
                format!("segments must tile [0, q] contiguously: got [{start}, {end}) after {pos}")
            })?;
            if let Segment::SampledCdf { nodes, values, .. } = seg {
                ensure_domain(
                    nodes.len() >= 2
                        && nodes.len() == values.len()
                        && nodes[0] == start
                        && nodes[nodes.len() - 1] == end
                        && nodes.windows(2).all(|w| w[1] > w[0])
                        && values.windows(2).all(|w| w[1] >= w[0]),
                    || "sampled CDF needs increasing nodes spanning its interval and nondecreasing values".into(),
                )?;
            }
            pos = end;
        }
        ensure_domain((pos - q).abs() <= 1e-15 * q.max(1.0), || format!("segments end at {pos}, expected q = {q}"))?;
        let mut m = ParisiMeasure { q, q_star: 0.0, segments: tiles, tails: Vec::new() };
        m.finish()?;
        Ok(m)
    }

    fn finish(&mut self) -> Result<()> {
        // Monotonicity, range, and jump bookkeeping.
        let mut atoms = Vec::new();
        let mut prev_right = 0.0;
        let pieces: Vec<(f64, f64, f64, f64)> = self
            .pieces()
            .map(|p| {
                let left = p.cdf(p.start);
                let right = if p.is_constant() { left } else { p.cdf(p.end) };
                (p.start, p.end, left, right)
            })
            .collect();
        for &(start, end, left, right) in &pieces {
            ensure_domain((0.0..=1.0 + MASS_TOLERANCE).contains(&left) && right <= 1.0 + MASS_TOLERANCE, || {
                format!("CDF leaves [0, 1] on [{start}, {end})")
            })?;
            ensure_domain(left >= prev_right - MASS_TOLERANCE && right >= left - MASS_TOLERANCE, || {
                format!("CDF decreases near s = {start}")
            })?;
            if left - prev_right > MASS_TOLERANCE {
                atoms.push((start, left - prev_right));
            }
            prev_right = right;
        }
        ensure_domain((prev_right - 1.0).abs() <= MASS_TOLERANCE, || {
            format!("total mass {prev_right} differs from 1")
        })?;
        // q_* = inf{s : ζ([0, s]) = 1}: the last tile must be a constant one.
        let mut q_star = None;
        for &(start, _, left, right) in pieces.iter().rev() {
            if (left - 1.0).abs() <= MASS_TOLERANCE && (right - 1.0).abs() <= MASS_TOLERANCE {
                q_star = Some(start);
            } else {
                break;
            }
        }
        let q_star = match q_star {
            Some(v) if v < self.q => v,
            _ => return Err(Error::Domain("the support of the measure must stay strictly below q".into())),
        };
        self.q_star = q_star;
        // Interleave derived atom markers before the tile they start.
        let tiles: Vec<Segment> = self.segments.drain(..).filter(|s| !matches!(s, Segment::Atom { .. })).collect();
        let mut segments = Vec::with_capacity(tiles.len() + atoms.len());
        let mut ai = 0;
        for t in tiles {
            let start = segment_start(&t);
            while ai < atoms.len() && atoms[ai].0 <= start {
                segments.push(Segment::Atom { location: atoms[ai].0, mass: atoms[ai].1 });
                ai += 1;
            }
            segments.push(t);
        }
        self.segments = segments;
        // Tail integrals ∫_{start_i}^q of the CDF for each tile.
        let ints: Vec<f64> = self.pieces().map(|p| p.integral(p.start, p.end)).collect();
        let mut tails = vec![0.0; ints.len() + 1];
        for i in (0..ints.len()).rev() {
            tails[i] = tails[i + 1] + ints[i];
        }
        self.tails = tails;
        Ok(())
    }

    /// Dirac mass at `location ∈ [0, q)`.
    pub fn dirac(q: f64, location: f64) -> Result<Self> {
        ensure_domain((0.0..q).contains(&location), || format!("atom location {location} must lie in [0, q = {q})"))?;
        let mut tiles = Vec::new();
        if location > 0.0 {
            tiles.push(Segment::ConstantCdf { start: 0.0, end: location, value: 0.0 });
        }
        tiles.push(Segment::ConstantCdf { start: location, end: q, value: 1.0 });
        Self::from_tiles(q, tiles)
    }

    /// Two-point measure `m δ_{q0} + (1 − m) δ_{q*}`.
    pub fn two_point(q: f64, q0: f64, q_star: f64, m: f64) -> Result<Self> {
        ensure_domain(0.0 <= q0 && q0 < q_star && q_star < q, || {
            format!("two-point measure needs 0 <= q0 < q* < q, got {q0}, {q_star}, {q}")
        })?;
        ensure_domain((0.0..=1.0).contains(&m), || format!("weight m = {m} outside [0, 1]"))?;
        let mut tiles = Vec::new();
        if q0 > 0.0 {
            tiles.push(Segment::ConstantCdf { start: 0.0, end: q0, value: 0.0 });
        }
        tiles.push(Segment::ConstantCdf { start: q0, end: q_star, value: m });
        tiles.push(Segment::ConstantCdf { start: q_star, end: q, value: 1.0 });
        Self::from_tiles(q, tiles)
    }

    /// Finite discrete measure `Σ massᵢ δ_{locᵢ}` (locations distinct, in `[0, q)`).
    pub fn discrete(q: f64, atoms: &[(f64, f64)]) -> Result<Self> {
        let mut a: Vec<(f64, f64)> = atoms.iter().copied().filter(|&(_, m)| m > 0.0).collect();
        a.sort_by(|x, y| x.0.total_cmp(&y.0));
        ensure_domain(!a.is_empty(), || "discrete measure needs a positive atom".into())?;
        let mut tiles = Vec::new();
        let mut pos = 0.0;
        let mut acc = 0.0;
        for &(loc, mass) in &a {
            ensure_domain((0.0..q).contains(&loc), || format!("atom {loc} outside [0, q)"))?;
            if loc > pos {
                tiles.push(Segment::ConstantCdf { start: pos, end: loc, value: acc });
            }
            acc += mass;
            pos = loc;
        }
        tiles.push(Segment::ConstantCdf { start: pos, end: q, value: acc });
        if (acc - 1.0).abs() <= MASS_TOLERANCE {
            if let Some(Segment::ConstantCdf { value, .. }) = tiles.last_mut() {
                *value = 1.0;
            }
        }
        Self::from_tiles(q, tiles)
    }

    /// Measure with CDF 0 on `[0, q0)`, `formula` on `[q0, q*)` and 1 on `[q*, q]`.
    pub fn with_formula(q: f64, q0: f64, q_star: f64, formula: CdfFormula) -> Result<Self> {
        ensure_domain(0.0 <= q0 && q0 < q_star && q_star < q, || {
            format!("formula measure needs 0 <= q0 < q* < q, got {q0}, {q_star}, {q}")
        })?;
        let mut tiles = Vec::new();
        if q0 > 0.0 {
            tiles.push(Segment::ConstantCdf { start: 0.0, end: q0, value: 0.0 });
        }
        tiles.push(Segment::ClosedFormCdf { start: q0, end: q_star, formula });
        tiles.push(Segment::ConstantCdf { start: q_star, end: q, value: 1.0 });
        Self::from_tiles(q, tiles)
    }

    /// Right endpoint `q`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `q_* = sup supp ζ`.
    pub fn q_star(&self) -> f64 {
        self.q_star
    }

    /// All segments, including derived atom markers.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// The atoms `(location, mass)` of the measure.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Atom { location, mass } => Some((*location, *mass)),
                _ => None,
            })
            .collect()
    }

    /// The tiles of `[0, q]` in order.
    pub fn pieces(&self) -> impl Iterator<Item = Piece<'_>> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Atom { .. } => None,
            Segment::ConstantCdf { start, end, value } => {
                Some(Piece { start: *start, end: *end, kind: PieceKind::Constant(*value) })
            }
            Segment::ClosedFormCdf { start, end, formula } => {
                Some(Piece { start: *start, end: *end, kind: PieceKind::Formula(formula) })
            }
            Segment::SampledCdf { start, end, nodes, values } => {
                Some(Piece { start: *start, end: *end, kind: PieceKind::Sampled(nodes, values) })
            }
        })
    }

    fn locate(&self, s: f64) -> (usize, Piece<'_>) {
        let mut last = None;
        for (i, p) in self.pieces().enumerate() {
            if s < p.end {
                return (i, p);
            }
            last = Some((i, p));
        }
        last.expect("measure has at least one tile")
    }

    fn check_range(&self, s: f64) -> Result<()> {
        ensure_domain((0.0..=self.q).contains(&s), || format!("argument s = {s} outside [0, q = {}]", self.q))
    }

    /// `ζ([0, s])` for `s ∈ [0, q]`.
    pub fn cdf(&self, s: f64) -> Result<f64> {
        self.check_range(s)?;
        Ok(self.cdf_unchecked(s))
    }

    pub(crate) fn cdf_unchecked(&self, s: f64) -> f64 {
        self.locate(s).1.cdf(s)
    }

    /// Gap function `δ(s) = ∫_s^q ζ([0, u]) du`, integrated exactly per segment.
    pub fn delta(&self, s: f64) -> Result<f64> {
        self.check_range(s)?;
        Ok(self.delta_unchecked(s))
    }

    pub(crate) fn delta_unchecked(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.q);
        let (i, p) = self.locate(s);
        p.integral(s, p.end) + self.tails[i + 1]
    }

    /// Infimum of the support.
    pub fn support_min(&self) -> f64 {
        for p in self.pieces() {
            if p.cdf(p.start) > 0.0 {
                return p.start;
            }
            if !p.is_constant() && p.cdf(p.end) > 0.0 {
                return p.start;
            }
        }
        self.q_star
    }

    /// The translated measure `ζ^r` on `[0, q + r]` with
    /// `ζ^r([0, s + r]) = ζ([0, s])`.
    pub fn translate(&self, r: f64) -> Result<Self> {
        let smin = self.support_min();
        if !(r > -smin || (r == 0.0)) {
            return Err(Error::Precondition(format!("translation r = {r} must exceed -inf supp = {}", -smin)));
        }
        let mut tiles = Vec::new();
        if r > 0.0 {
            tiles.push(Segment::ConstantCdf { start: 0.0, end: r, value: 0.0 });
        }
        for p in self.pieces() {
            let (a, b) = ((p.start + r).max(0.0), p.end + r);
            if b <= 0.0 || b <= a {
                continue;
            }
            let seg = match p.kind {
                PieceKind::Constant(v) => Segment::ConstantCdf { start: a, end: b, value: v },
                PieceKind::Formula(f) => Segment::ClosedFormCdf { start: a, end: b, formula: f.shifted(r) },
                PieceKind::Sampled(x, y) => {
                    let mut nodes: Vec<f64> = Vec::new();
                    let mut values = Vec::new();
                    for (xi, yi) in x.iter().zip(y) {
                        let xs = xi + r;
                        if xs > a && xs < b {
                            nodes.push(xs);
                            values.push(*yi);
                        }
                    }
                    nodes.insert(0, a);
                    values.insert(0, interp(x, y, a - r));
                    nodes.push(b);
                    values.push(interp(x, y, b - r));
                    Segment::SampledCdf { start: a, end: b, nodes, values }
                }
            };
            tiles.push(seg);
        }
        // Merge a leading zero tile produced by the shift with an original one.
        if let [Segment::ConstantCdf { value: v0, .. }, Segment::ConstantCdf { value: v1, end, .. }, ..] =
            tiles.as_slice()
        {
            if *v0 == 0.0 && *v1 == 0.0 {
                let end = *end;
                tiles.splice(0..2, [Segment::ConstantCdf { start: 0.0, end, value: 0.0 }]);
            }
        }
        Self::from_tiles(self.q + r, tiles)
    }

    /// `∫_lo^hi g(u, δ(u)) du` over `[lo, hi] ⊂ [0, q]`, split at the tiles.
    ///
    /// On tiles where the CDF vanishes `δ` is constant; if `g` ignores its first
    /// argument (`depends_on_u = false`) such tiles are integrated exactly with
    /// a single evaluation. Other tiles use adaptive Gauss–Legendre quadrature
    /// with absolute tolerance `abs_tol` per tile.
    pub fn integrate_gap<G: FnMut(f64, f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        depends_on_u: bool,
        abs_tol: f64,
        mut g: G,
    ) -> Result<f64> {
        let mut total = 0.0;
        let pieces: Vec<(f64, f64, bool)> =
            self.pieces().map(|p| (p.start, p.end, matches!(p.kind, PieceKind::Constant(v) if v == 0.0))).collect();
        for (start, end, flat) in pieces {
            let a = start.max(lo);
            let b = end.min(hi);
            if b <= a {
                continue;
            }
            if flat && !depends_on_u {
                let d = self.delta_unchecked(b);
                total += g(a, d) * (b - a);
            } else {
                total += crate::numerics::integrate(|u| g(u, self.delta_unchecked(u)), a, b, abs_tol, 1e-14)?;
            }
        }
        Ok(total)
    }

    /// Sup-norm distance between two CDFs on an `n`-point grid of the common
    /// interval `[0, min(q₁, q₂)]`.
    pub fn cdf_distance(&self, other: &ParisiMeasure, n: usize) -> f64 {
        let q = self.q.min(other.q);
        (0..n)
            .map(|i| q * i as f64 / (n - 1) as f64)
            .map(|s| (self.cdf_unchecked(s) - other.cdf_unchecked(s)).abs())
            .fold(0.0, f64::max)
    }
}

fn segment_start(s: &Segment) -> f64 {
    match s {
        Segment::Atom { location, .. } => *location,
        Segment::ConstantCdf { start, .. }
        | Segment::ClosedFormCdf { start, .. }
        | Segment::SampledCdf { start, .. } => *start,
    }
}

/// Phase label of a solved point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Replica symmetric: `ζ` is a single atom.
    #[serde(rename = "RS")]
    Rs,
    /// One-step replica symmetry breaking: two atoms.
    #[serde(rename = "ONE_RSB")]
    OneRsb,
    /// Full replica symmetry breaking: an absolutely continuous part.
    #[serde(rename = "FRSB")]
    Frsb,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Rs => "RS",
            Phase::OneRsb => "ONE_RSB",
            Phase::Frsb => "FRSB",
        })
    }
}

/// A solved phase point: the Parisi pair `(q_c, ζ_c)` with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsbSolution {
    /// Phase label.
    pub phase: Phase,
    /// Squared radius `q_c`.
    pub q_c: f64,
    /// Parisi measure `ζ_c`.
    pub measure: ParisiMeasure,
    /// Named scalars among `q_0`, `q_star`, `m`, `mu_larkin`.
    pub extras: BTreeMap<String, f64>,
    /// Alternative closed-form candidates kept for transparency (for example
    /// the two competing formulas for `q_0`).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alternatives: BTreeMap<String, f64>,
    /// Value of the Parisi functional at the pair (the limiting free energy).
    pub free_energy: f64,
    /// Stationarity residuals of the pair.
    pub residuals: StationarityResiduals,
}

impl RsbSolution {
    /// `q_* = sup supp ζ_c`.
    pub fn q_star(&self) -> f64 {
        self.measure.q_star()
    }
}
