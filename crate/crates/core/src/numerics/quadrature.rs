//! Globally adaptive Gauss–Kronrod quadrature.
//!
//! All entry points share one engine: a set of pieces, each mapped onto a
//! finite parameter interval, refined by bisecting the subinterval with the
//! largest error until the combined estimate meets
//! `max(relative_tolerance * |value|, absolute_tolerance)` for every component.
//!
//! Semi-infinite pieces use the rational map `x = lo + scale * u / (1 - u)`.
//! Endpoint weights `t^alpha (1 - t)^beta` with negative exponents are removed
//! by the substitution `t = v^{1/(alpha+1)}` (mirrored at `t = 1`), so the
//! integrand seen by the rule is bounded.

use serde::{Deserialize, Serialize};

use super::kronrod::{kronrod_rule, KronrodRule};
use crate::error::{domain, Error, Result};

/// Tolerances and budget for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    /// Maximum number of subintervals kept by the adaptive refinement.
    pub max_subdivisions: usize,
    /// Points in the Kronrod rule (odd, `2n + 1` for an `n`-point Gauss rule).
    pub base_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-10,
            absolute_tolerance: 1e-14,
            max_subdivisions: 200,
            base_nodes: 31,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) || !(self.absolute_tolerance > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "tolerances must be positive (relative {}, absolute {})",
                self.relative_tolerance, self.absolute_tolerance
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidSpec("max_subdivisions must be at least 1".into()));
        }
        if self.base_nodes < 3 || self.base_nodes % 2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "base_nodes must be odd and at least 3, got {}",
                self.base_nodes
            )));
        }
        Ok(())
    }

    pub fn with_relative_tolerance(mut self, tol: f64) -> Self {
        self.relative_tolerance = tol;
        self
    }

    pub fn with_absolute_tolerance(mut self, tol: f64) -> Self {
        self.absolute_tolerance = tol;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn target(&self, value: f64) -> f64 {
        (self.relative_tolerance * value.abs()).max(self.absolute_tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

impl IntegrationResult {
    /// Converts a non-converged result into [`Error::Quadrature`].
    pub fn require(self, function: &'static str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                function,
                value: self.value,
                error_estimate: self.error_estimate,
            })
        }
    }
}

/// One quadrature node of the final partition: its weight (including the
/// subinterval length) and the integrand components there (including any
/// change-of-variables Jacobian).
#[derive(Debug, Clone, Copy)]
pub struct WeightedSample<const K: usize> {
    pub weight: f64,
    pub values: [f64; K],
}

/// Result of a vector-valued integration, with the final node set retained so
/// that further sums can be formed on exactly the same nodes.
#[derive(Debug, Clone)]
pub struct NodeIntegration<const K: usize> {
    pub values: [f64; K],
    pub errors: [f64; K],
    pub converged: bool,
    pub nodes: Vec<WeightedSample<K>>,
}

struct Segment<const K: usize> {
    piece: usize,
    lo: f64,
    hi: f64,
    value: [f64; K],
    error: [f64; K],
    nodes: Vec<WeightedSample<K>>,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn apply_rule<const K: usize, F>(
    eval: &mut F,
    rule: &KronrodRule,
    piece: usize,
    lo: f64,
    hi: f64,
    keep_nodes: bool,
    scratch: &mut Vec<[f64; K]>,
) -> Segment<K>
where
    F: FnMut(usize, f64) -> [f64; K],
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    scratch.clear();
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let mut abs = [0.0; K];
    for ((&x, &wk), &wg) in rule
        .nodes
        .iter()
        .zip(&rule.kronrod_weights)
        .zip(&rule.gauss_weights)
    {
        let v = eval(piece, center + half * x);
        for c in 0..K {
            kron[c] += wk * v[c];
            gauss[c] += wg * v[c];
            abs[c] += wk * v[c].abs();
        }
        scratch.push(v);
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for c in 0..K {
        let mean = 0.5 * kron[c];
        let asc: f64 = scratch
            .iter()
            .zip(&rule.kronrod_weights)
            .map(|(v, wk)| wk * (v[c] - mean).abs())
            .sum();
        value[c] = kron[c] * half;
        let raw = (kron[c] - gauss[c]) * half;
        error[c] = rescale_error(raw, abs[c] * half, asc * half);
        if !value[c].is_finite() || !error[c].is_finite() {
            error[c] = f64::INFINITY;
        }
    }
    let nodes = if keep_nodes {
        scratch
            .iter()
            .zip(&rule.kronrod_weights)
            .map(|(v, wk)| WeightedSample {
                weight: wk * half,
                values: *v,
            })
            .collect()
    } else {
        Vec::new()
    };
    Segment {
        piece,
        lo,
        hi,
        value,
        error,
        nodes,
    }
}

/// Adaptive engine over mapped pieces `(piece_id, lo, hi)`.
pub(crate) fn adaptive<const K: usize, F>(
    mut eval: F,
    pieces: &[(usize, f64, f64)],
    spec: &QuadratureSpec,
    keep_nodes: bool,
) -> Result<NodeIntegration<K>>
where
    F: FnMut(usize, f64) -> [f64; K],
{
    spec.validate()?;
    let rule = kronrod_rule(spec.base_nodes);
    let mut scratch = Vec::with_capacity(rule.points());
    let mut segments: Vec<Segment<K>> = pieces
        .iter()
        .filter(|(_, lo, hi)| hi > lo)
        .map(|&(p, lo, hi)| apply_rule(&mut eval, &rule, p, lo, hi, keep_nodes, &mut scratch))
        .collect();

    let totals = |segments: &[Segment<K>]| {
        let mut value = [0.0; K];
        let mut error = [0.0; K];
        for s in segments {
            for c in 0..K {
                value[c] += s.value[c];
                error[c] += s.error[c];
            }
        }
        (value, error)
    };

    let converged = loop {
        let (value, error) = totals(&segments);
        if (0..K).all(|c| error[c] <= spec.target(value[c])) {
            break true;
        }
        if (0..K).any(|c| !value[c].is_finite()) || segments.len() >= spec.max_subdivisions {
            break false;
        }
        let targets: [f64; K] = std::array::from_fn(|c| spec.target(value[c]));
        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                let mid = 0.5 * (s.lo + s.hi);
                mid > s.lo && mid < s.hi
            })
            .map(|(i, s)| {
                let score = (0..K)
                    .map(|c| s.error[c] / targets[c])
                    .fold(0.0f64, f64::max);
                (i, score)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((index, _)) = worst else {
            break false;
        };
        let seg = segments.swap_remove(index);
        let mid = 0.5 * (seg.lo + seg.hi);
        segments.push(apply_rule(&mut eval, &rule, seg.piece, seg.lo, mid, keep_nodes, &mut scratch));
        segments.push(apply_rule(&mut eval, &rule, seg.piece, mid, seg.hi, keep_nodes, &mut scratch));
    };

    // Deterministic summation order: by piece, then left to right.
    segments.sort_by(|a, b| a.piece.cmp(&b.piece).then(a.lo.total_cmp(&b.lo)));
    let (values, errors) = totals(&segments);
    let nodes = if keep_nodes {
        segments.into_iter().flat_map(|s| s.nodes).collect()
    } else {
        Vec::new()
    };
    Ok(NodeIntegration {
        values,
        errors,
        converged,
        nodes,
    })
}

fn scalar(result: NodeIntegration<1>) -> IntegrationResult {
    IntegrationResult {
        value: result.values[0],
        error_estimate: result.errors[0],
        converged: result.converged,
    }
}

/// `∫_lo^hi f(x) dx` over a finite interval.
pub fn integrate_interval(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<IntegrationResult> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(domain("integrate_interval", "bounds must be finite"));
    }
    let (a, b, sign) = if hi >= lo { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let mut r = scalar(adaptive(|_, x| [f(x)], &[(0, a, b)], spec, false)?);
    r.value *= sign;
    Ok(r)
}

/// `∫_0^1 u^alpha (1-u)^beta f(u) du` for `alpha, beta > -1`.
///
/// `f` receives `(u, 1 - u)`; the complement is computed without cancellation
/// near `u = 1` and should be preferred over `1.0 - u` inside the integrand.
pub fn integrate_unit(
    f: impl Fn(f64, f64) -> f64,
    alpha: f64,
    beta: f64,
    spec: &QuadratureSpec,
) -> Result<IntegrationResult> {
    if !(alpha > -1.0) || !(beta > -1.0) {
        return Err(domain(
            "integrate_unit",
            format!("endpoint exponents must exceed -1, got ({alpha}, {beta})"),
        ));
    }
    let left = EndpointMap::new(alpha);
    let right = EndpointMap::new(beta);
    let pieces = [(0, 0.0, left.upper()), (1, 0.0, right.upper())];
    let eval = |piece: usize, v: f64| {
        let value = if piece == 0 {
            // u in (0, 1/2]
            let (u, jac) = left.forward(v);
            let c = 1.0 - u;
            jac * c.powf(beta) * f(u, c)
        } else {
            // complement c = 1 - u in (0, 1/2]
            let (c, jac) = right.forward(v);
            let u = 1.0 - c;
            jac * u.powf(alpha) * f(u, c)
        };
        [value]
    };
    Ok(scalar(adaptive(eval, &pieces, spec, false)?))
}

/// Weight-absorbing map for `∫_0^{1/2} x^e g(x) dx`.
#[derive(Clone, Copy)]
struct EndpointMap {
    exponent: f64,
    power: Option<f64>,
}

impl EndpointMap {
    fn new(exponent: f64) -> Self {
        let power = (exponent < 0.0).then(|| 1.0 / (exponent + 1.0));
        Self { exponent, power }
    }

    fn upper(&self) -> f64 {
        match self.power {
            Some(_) => 0.5f64.powf(self.exponent + 1.0),
            None => 0.5,
        }
    }

    /// Returns `(x, x^e dx/dv)`.
    fn forward(&self, v: f64) -> (f64, f64) {
        match self.power {
            Some(m) => (v.powf(m), m),
            None => (v, v.powf(self.exponent)),
        }
    }
}

/// `∫_0^∞ f(v) dv` through `v = u / (1 - u)`.
pub fn integrate_positive_axis(
    f: impl Fn(f64) -> f64,
    spec: &QuadratureSpec,
) -> Result<IntegrationResult> {
    integrate_positive_axis_scaled(f, 1.0, spec)
}

/// `∫_0^∞ f(v) dv` through `v = scale * u / (1 - u)`; `scale` should be near
/// the bulk of the integrand.
pub fn integrate_positive_axis_scaled(
    f: impl Fn(f64) -> f64,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<IntegrationResult> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(domain("integrate_positive_axis", format!("scale must be positive, got {scale}")));
    }
    integrate_segments(f, &[0.0, f64::INFINITY], scale, spec)
}

/// `∫ f` over the union of consecutive intervals in `breaks`; the first break
/// may be `-∞` and the last `+∞`. Infinite ends use the rational map with
/// `tail_scale`.
pub fn integrate_segments(
    f: impl Fn(f64) -> f64,
    breaks: &[f64],
    tail_scale: f64,
    spec: &QuadratureSpec,
) -> Result<IntegrationResult> {
    let (pieces, maps) = segment_pieces(breaks, tail_scale)?;
    let eval = |piece: usize, u: f64| {
        let (x, jac) = maps[piece].forward(u);
        let v = f(x);
        [if jac == 0.0 { 0.0 } else { v * jac }]
    };
    Ok(scalar(adaptive(eval, &pieces, spec, false)?))
}

/// Vector-valued [`integrate_segments`] that keeps the final node set.
pub fn integrate_segments_nodes<const K: usize>(
    f: impl Fn(f64) -> [f64; K],
    breaks: &[f64],
    tail_scale: f64,
    spec: &QuadratureSpec,
) -> Result<NodeIntegration<K>> {
    let (pieces, maps) = segment_pieces(breaks, tail_scale)?;
    let eval = |piece: usize, u: f64| {
        let (x, jac) = maps[piece].forward(u);
        let v = f(x);
        std::array::from_fn(|c| if jac == 0.0 { 0.0 } else { v[c] * jac })
    };
    adaptive(eval, &pieces, spec, true)
}

#[derive(Clone, Copy)]
enum SegmentMap {
    Finite,
    Upward { lo: f64, scale: f64 },
    Downward { hi: f64, scale: f64 },
}

impl SegmentMap {
    fn forward(&self, u: f64) -> (f64, f64) {
        match *self {
            SegmentMap::Finite => (u, 1.0),
            SegmentMap::Upward { lo, scale } => {
                let c = 1.0 - u;
                (lo + scale * u / c, scale / (c * c))
            }
            SegmentMap::Downward { hi, scale } => {
                let c = 1.0 - u;
                (hi - scale * u / c, scale / (c * c))
            }
        }
    }
}

type Pieces = (Vec<(usize, f64, f64)>, Vec<SegmentMap>);

fn segment_pieces(breaks: &[f64], tail_scale: f64) -> Result<Pieces> {
    if breaks.len() < 2 {
        return Err(domain("integrate_segments", "need at least two breakpoints"));
    }
    if breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("integrate_segments", "breakpoints must be strictly increasing"));
    }
    if breaks[1..breaks.len() - 1].iter().any(|b| !b.is_finite()) {
        return Err(domain("integrate_segments", "interior breakpoints must be finite"));
    }
    if !(tail_scale > 0.0) || !tail_scale.is_finite() {
        return Err(domain("integrate_segments", "tail scale must be positive"));
    }
    let mut pieces = Vec::new();
    let mut maps = Vec::new();
    let mut push = |map: SegmentMap, lo: f64, hi: f64| {
        pieces.push((maps.len(), lo, hi));
        maps.push(map);
    };
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => push(SegmentMap::Finite, lo, hi),
            (true, false) => push(SegmentMap::Upward { lo, scale: tail_scale }, 0.0, 1.0),
            (false, true) => push(SegmentMap::Downward { hi, scale: tail_scale }, 0.0, 1.0),
            (false, false) => {
                push(SegmentMap::Downward { hi: 0.0, scale: tail_scale }, 0.0, 1.0);
                push(SegmentMap::Upward { lo: 0.0, scale: tail_scale }, 0.0, 1.0);
            }
        }
    }
    Ok((pieces, maps))
}
