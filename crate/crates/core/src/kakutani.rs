//! Approximate fixed points of set-valued mappings.
//!
//! The pipeline reduces the set-valued problem to a single-valued one:
//! pick a grid fine enough that the map's combination property controls
//! whole cells, interpolate chosen selections piecewise-affinely over
//! the Kuhn triangulation, hand the interpolant to the Brouwer engine,
//! and convert its approximate fixed point back into a certified graph
//! witness. Every returned result re-verifies itself through
//! [`residual_certificate`] before leaving the pipeline; when the graph
//! witness step fails, the grid is refined and the attempt repeated a
//! bounded number of times, so an unsound caller-supplied modulus
//! surfaces as a diagnosed error rather than a wrong answer.
//!
//! Domains other than the unit cube are handled by affine rescaling,
//! plus metric projection onto hulls; the certification step always runs
//! against the original map in original coordinates.

use crate::brouwer::{self, MAX_RESOLUTION};
use crate::expr::ContinuityModulus;
use crate::geometry::{Domain, Metric, Point};
use crate::par;
use crate::setvalued::{SetValuedMap, WeakApproxData};
use crate::{Error, Result};

/// Refinement attempts after the first before the solver gives up.
const MAX_RETRIES: u32 = 6;
/// Largest interpolation table the selection builder will materialize.
const MAX_TABLE_POINTS: u64 = 1 << 24;

/// Grid resolutions and combination steps used by a solve, in attempt
/// order; `deltas` shrink across retries.
#[derive(Clone, Debug)]
pub struct SolveTrace {
    /// Selection-grid resolution of the successful attempt (cells per
    /// axis on the finest axis).
    pub resolution: u64,
    /// Resolution the inner single-valued search used.
    pub brouwer_resolution: u64,
    /// Combination step of each attempt, first to last.
    pub deltas: Vec<f64>,
    /// Retries consumed before success (0 = first attempt).
    pub retries: u32,
}

/// A certified approximate fixed point: `u` is a near-member of `U(x)`
/// (graph defect within the map's exactness) and `residual` is the
/// witnessed distance between `x` and `u`.
#[derive(Clone, Debug)]
pub struct FixedPointResult {
    pub x: Point,
    pub u: Point,
    pub eps: f64,
    pub residual: f64,
    pub graph_defect: f64,
    pub trace: SolveTrace,
}

/// Outcome of an independent residual check at a given point.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub ok: bool,
    pub u: Point,
    pub residual: f64,
}

/// Argument step under which convex combinations of up to `k_points`
/// graph points stay within `eps` of the graph, derived from the
/// two-point modulus by halving the tolerance per added point:
/// `d_2(e) = delta(e)`, `d_k(e) = min(d_{k-1}(e/2),
/// max(delta(e/2) - e/2, delta(e/2) / 2))`. Nonincreasing in `k_points`.
pub fn multi_point_delta(
    delta: &ContinuityModulus,
    k_points: u64,
    eps: f64,
) -> Result<f64> {
    if k_points < 2 {
        return Err(Error::Construction(format!(
            "combination step needs at least two points, got {k_points}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidEps(eps));
    }
    let mut out = f64::INFINITY;
    let mut e = eps;
    for _ in 0..(k_points - 2) {
        e /= 2.0;
        let d = delta.delta(e);
        out = out.min((d - e).max(d / 2.0));
    }
    out = out.min(delta.delta(e));
    if !(out > 0.0) {
        return Err(Error::ModulusTooWeak);
    }
    Ok(out)
}

/// Smallest resolution whose pitch strictly undercuts `pitch`.
fn resolution_for_pitch(pitch: f64, cap: u64) -> Result<u64> {
    if !(pitch > 0.0) {
        return Err(Error::ModulusTooWeak);
    }
    let mut k = (1.0 / pitch).floor() + 1.0;
    while 1.0 / k >= pitch {
        k += 1.0;
    }
    let cap = cap.min(MAX_RESOLUTION);
    if k > cap as f64 {
        return Err(Error::ResolutionOverflow { k: k as u128, cap });
    }
    Ok(k as u64)
}

/// Piecewise-affine interpolant over the Kuhn triangulation of the unit
/// cube, with independent per-axis resolutions; values live in a flat
/// table (axis 0 slowest). Carries a recorded Lipschitz bound for the
/// downstream grid sizing.
pub struct AffineSelection {
    values: Vec<f64>,
    axis_cells: Vec<u64>,
    n_out: usize,
    lipschitz: f64,
}

impl AffineSelection {
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Cells per axis on the finest axis.
    pub fn resolution(&self) -> u64 {
        self.axis_cells.iter().copied().max().unwrap_or(1)
    }

    fn strides(&self) -> Vec<u64> {
        let n = self.axis_cells.len();
        let mut s = vec![1u64; n];
        for j in (0..n.saturating_sub(1)).rev() {
            s[j] = s[j + 1] * (self.axis_cells[j + 1] + 1);
        }
        s
    }

    fn value_at(&self, vertex: &[u64], strides: &[u64]) -> &[f64] {
        let idx = vertex
            .iter()
            .zip(strides)
            .map(|(&v, &s)| v * s)
            .sum::<u64>() as usize
            * self.n_out;
        &self.values[idx..idx + self.n_out]
    }

    /// Evaluates the interpolant: locate the cube, order axes by
    /// descending fractional part (the containing Kuhn simplex), and
    /// combine the chain vertices barycentrically.
    pub fn eval(&self, t: &[f64]) -> Vec<f64> {
        let n = self.axis_cells.len();
        debug_assert_eq!(t.len(), n);
        let strides = self.strides();
        let mut cube = vec![0u64; n];
        let mut frac = vec![0.0f64; n];
        for j in 0..n {
            let k = self.axis_cells[j];
            let scaled = t[j].clamp(0.0, 1.0) * k as f64;
            let c = (scaled.floor() as u64).min(k - 1);
            cube[j] = c;
            frac[j] = scaled - c as f64;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            frac[b]
                .partial_cmp(&frac[a])
                .expect("finite fractions")
                .then(a.cmp(&b))
        });
        let mut out = vec![0.0; self.n_out];
        let add = |vertex: &[u64], weight: f64, out: &mut [f64]| {
            if weight == 0.0 {
                return;
            }
            for (o, v) in out.iter_mut().zip(self.value_at(vertex, &strides)) {
                *o += weight * v;
            }
        };
        add(&cube, 1.0 - frac[order[0]], &mut out);
        let mut vertex = cube;
        for (pos, &axis) in order.iter().enumerate() {
            vertex[axis] += 1;
            let weight = if pos + 1 < n {
                frac[axis] - frac[order[pos + 1]]
            } else {
                frac[axis]
            };
            add(&vertex, weight, &mut out);
        }
        out
    }
}

/// Builds the interpolation table by evaluating `value` at every lattice
/// vertex (digits per axis); `value` also reports a per-vertex quality
/// number whose maximum is returned alongside the selection.
fn build_selection<F>(
    axis_cells: Vec<u64>,
    n_out: usize,
    value: F,
) -> Result<(AffineSelection, f64)>
where
    F: Fn(&[u64]) -> Result<(Vec<f64>, f64)> + Sync,
{
    let n = axis_cells.len();
    let counts: Vec<u64> = axis_cells.iter().map(|&k| k + 1).collect();
    let total: u128 = counts.iter().map(|&c| c as u128).product();
    if total > MAX_TABLE_POINTS as u128 {
        return Err(Error::GridOverflow {
            cells: total,
            cap: MAX_TABLE_POINTS,
        });
    }
    let total = total as usize;
    let decode = |idx: usize| -> Vec<u64> {
        let mut rest = idx as u64;
        let mut digits = vec![0u64; n];
        for j in (0..n).rev() {
            digits[j] = rest % counts[j];
            rest /= counts[j];
        }
        digits
    };
    let entries = par::map_collect(total, |idx| value(&decode(idx)));
    let mut values = Vec::with_capacity(total * n_out);
    let mut worst = 0.0f64;
    for entry in entries {
        let (v, quality) = entry?;
        if v.len() != n_out {
            return Err(Error::DimensionMismatch {
                expected: n_out,
                got: v.len(),
            });
        }
        values.extend_from_slice(&v);
        worst = worst.max(quality);
    }
    let mut selection = AffineSelection {
        values,
        axis_cells,
        n_out,
        lipschitz: 0.0,
    };
    selection.lipschitz = selection_lipschitz(&selection);
    Ok((selection, worst))
}

/// Recorded Lipschitz bound: per cube, sum over axes of resolution times
/// the largest value jump along that axis' edges; maximum over cubes.
fn selection_lipschitz(sel: &AffineSelection) -> f64 {
    let n = sel.axis_cells.len();
    let strides = sel.strides();
    let cube_count: u64 = sel.axis_cells.iter().product();
    if cube_count == 0 {
        return 0.0;
    }
    let bound_for_cube = |cube_idx: usize| -> f64 {
        let mut rest = cube_idx as u64;
        let mut base = vec![0u64; n];
        for j in (0..n).rev() {
            base[j] = rest % sel.axis_cells[j];
            rest /= sel.axis_cells[j];
        }
        let mut total = 0.0;
        for axis in 0..n {
            let mut worst = 0.0f64;
            // Edges along `axis`: all corner choices on the other axes.
            for mask in 0..1u32 << (n - 1) {
                let mut v = base.clone();
                let mut bit = 0;
                for (j, corner) in v.iter_mut().enumerate() {
                    if j == axis {
                        continue;
                    }
                    if mask >> bit & 1 == 1 {
                        *corner += 1;
                    }
                    bit += 1;
                }
                let a = sel.value_at(&v, &strides);
                let mut w = v.clone();
                w[axis] += 1;
                let b = sel.value_at(&w, &strides);
                let jump = a
                    .iter()
                    .zip(b)
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0f64, f64::max);
                worst = worst.max(jump);
            }
            total += worst * sel.axis_cells[axis] as f64;
        }
        total
    };
    par::argmax(cube_count as usize, bound_for_cube)
        .map(|(_, v)| v)
        .unwrap_or(0.0)
}

/// Coordinate frame carrying a domain to the unit cube: affine per-axis
/// rescaling of the bounding box, plus metric projection for hulls.
struct Frame {
    lo: Vec<f64>,
    span: Vec<f64>,
    span_min: f64,
    span_max: f64,
    projection: bool,
}

impl Frame {
    fn new(domain: &Domain) -> Self {
        let (lo, hi) = domain.bounding_box();
        let span: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l).max(1e-12))
            .collect();
        let span_min = span.iter().copied().fold(f64::INFINITY, f64::min);
        let span_max = span.iter().copied().fold(0.0f64, f64::max);
        Frame {
            lo,
            span,
            span_min,
            span_max,
            projection: matches!(domain, Domain::Hull { .. }),
        }
    }

    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.span))
            .map(|(c, (l, s))| ((c - l) / s).clamp(0.0, 1.0))
            .collect()
    }

    fn from_unit(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .zip(self.lo.iter().zip(&self.span))
            .map(|(c, (l, s))| l + c * s)
            .collect()
    }

    /// A genuine domain point for unit coordinates `t`.
    fn domain_point(&self, domain: &Domain, t: &[f64]) -> Result<Vec<f64>> {
        let x = self.from_unit(t);
        if self.projection {
            Ok(domain.project(&Point::from_slice(&x))?.into_coords())
        } else {
            Ok(x)
        }
    }

    /// The map's combination modulus read in unit coordinates: tolerance
    /// shrinks by the smallest axis span, steps by the largest, and hull
    /// projection costs a further sqrt(n) (it is nonexpansive in the
    /// euclidean metric, not the max metric).
    fn unit_modulus(&self, m: &ContinuityModulus, n: usize) -> ContinuityModulus {
        if !self.projection && self.lo.iter().all(|&l| l == 0.0) && self.span.iter().all(|&s| s == 1.0)
        {
            return m.clone();
        }
        let mut out = m.scaled(self.span_min, 1.0 / self.span_max);
        if self.projection && n > 1 {
            out = out.scaled(1.0, 1.0 / (n as f64).sqrt());
        }
        out
    }
}

/// Interpolant of `U.select` values over the uniform `k`-grid of a
/// unit-cube domain — the single-valued stand-in the pipeline hands to
/// the Brouwer engine.
pub fn piecewise_affine_selection(u_map: &SetValuedMap, k: u64) -> Result<AffineSelection> {
    let domain = u_map.domain();
    let frame = Frame::new(domain);
    if frame.projection || frame.lo.iter().any(|&l| l != 0.0) || frame.span.iter().any(|&s| s != 1.0)
    {
        return Err(Error::InvalidDomain(
            "selection interpolation expects a unit-cube domain; rescale first".into(),
        ));
    }
    let n = domain.dim();
    let (selection, _) = selection_from_select(u_map, &frame, vec![k; n])?;
    Ok(selection)
}

fn selection_from_select(
    u_map: &SetValuedMap,
    frame: &Frame,
    axis_cells: Vec<u64>,
) -> Result<(AffineSelection, f64)> {
    let n_out = u_map.codomain().dim();
    let cells = axis_cells.clone();
    build_selection(axis_cells, n_out, |digits| {
        let t: Vec<f64> = digits
            .iter()
            .zip(&cells)
            .map(|(&d, &k)| d as f64 / k as f64)
            .collect();
        let x = frame.domain_point(u_map.domain(), &t)?;
        let u = u_map.select(&Point::from_slice(&x))?;
        Ok((frame.to_unit(u.coords()), 0.0))
    })
}

/// One reduction attempt shared by both solvers: run the Brouwer engine
/// on the interpolant, then try to convert its output into a graph
/// witness of the original map and certify it. `Ok(None)` means the
/// witness step failed and the caller should refine.
#[allow(clippy::too_many_arguments)]
fn finish_attempt(
    u_map: &SetValuedMap,
    frame: &Frame,
    g: &AffineSelection,
    eps: f64,
    eps3_unit: f64,
    grid_cap: u64,
    selection_resolution: u64,
    deltas: &[f64],
    retries: u32,
) -> Result<Option<FixedPointResult>> {
    let n = u_map.domain().dim();
    let eps3 = eps / 3.0;
    let omega_g = ContinuityModulus::lipschitz(g.lipschitz().max(1e-9))?;
    let inner = brouwer::approx_fixed_point_capped(
        |t: &[f64]| g.eval(t),
        &omega_g,
        n,
        eps3_unit,
        grid_cap,
    )?;
    let y = inner.point;
    let gy = g.eval(y.coords());
    let y_orig = frame.domain_point(u_map.domain(), y.coords())?;
    let w_orig = frame.from_unit(&gy);
    let Some((x, u)) = u_map.graph_near(
        &Point::from_slice(&y_orig),
        &Point::from_slice(&w_orig),
        eps3,
    )?
    else {
        return Ok(None);
    };
    let residual = Metric::Max.dist(x.coords(), u.coords());
    if residual >= eps {
        return Ok(None);
    }
    let report = residual_certificate(u_map, &x, eps)?;
    if !report.ok {
        return Ok(None);
    }
    let graph_defect = u_map.graph_distance(&x, &u)?;
    Ok(Some(FixedPointResult {
        x,
        u,
        eps,
        residual,
        graph_defect,
        trace: SolveTrace {
            resolution: selection_resolution,
            brouwer_resolution: inner.resolution_used,
            deltas: deltas.to_vec(),
            retries,
        },
    }))
}

/// Approximate fixed point of a map carrying a combination modulus.
pub fn approx_kakutani(u_map: &SetValuedMap, eps: f64) -> Result<FixedPointResult> {
    approx_kakutani_capped(u_map, eps, MAX_RESOLUTION)
}

/// [`approx_kakutani`] with a caller-supplied per-axis resolution cap.
pub fn approx_kakutani_capped(
    u_map: &SetValuedMap,
    eps: f64,
    grid_cap: u64,
) -> Result<FixedPointResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidEps(eps));
    }
    let Some(delta_mod) = u_map.delta_modulus() else {
        return Err(Error::Construction(
            "map has no combination modulus; use the weak solver".into(),
        ));
    };
    let n = u_map.domain().dim();
    let frame = Frame::new(u_map.domain());
    let unit_mod = frame.unit_modulus(delta_mod, n);
    let eps3_unit = eps / 3.0 / frame.span_max;
    // Cells combine up to 2^n graph points, one per cube corner.
    let mut pitch = multi_point_delta(&unit_mod, 1u64 << n.min(20), eps3_unit)?;
    let mut deltas = Vec::new();
    for retry in 0..=MAX_RETRIES {
        deltas.push(pitch);
        let k = resolution_for_pitch(pitch, grid_cap)?;
        let (g, _) = selection_from_select(u_map, &frame, vec![k; n])?;
        if let Some(result) = finish_attempt(
            u_map, &frame, &g, eps, eps3_unit, grid_cap, k, &deltas, retry,
        )? {
            return Ok(result);
        }
        pitch /= 2.0;
    }
    Err(Error::GraphSearchExhausted {
        radius: eps / 3.0,
        retries: MAX_RETRIES,
        last_delta: *deltas.last().expect("at least one attempt"),
    })
}

/// Approximate fixed point of a weakly approximable map: the grid and
/// its values come from the map's finite certificate at `eps/3`, with
/// interpolation vertices placed on the certificate's own net whenever
/// it is a lattice. Retries re-request a certificate at halved
/// tolerance.
pub fn approx_kakutani_weak(u_map: &SetValuedMap, eps: f64) -> Result<FixedPointResult> {
    approx_kakutani_weak_capped(u_map, eps, MAX_RESOLUTION)
}

/// [`approx_kakutani_weak`] with a caller-supplied resolution cap.
pub fn approx_kakutani_weak_capped(
    u_map: &SetValuedMap,
    eps: f64,
    grid_cap: u64,
) -> Result<FixedPointResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidEps(eps));
    }
    if u_map.is_approximable() {
        return Err(Error::Construction(
            "map carries a combination modulus; use the strong solver or wrap it first".into(),
        ));
    }
    if matches!(u_map.domain(), Domain::Hull { .. }) {
        return Err(Error::InvalidDomain(
            "the weak solver requires a box domain".into(),
        ));
    }
    let frame = Frame::new(u_map.domain());
    let eps3 = eps / 3.0;
    let eps3_unit = eps3 / frame.span_max;
    let mut request = eps3;
    let mut deltas = Vec::new();
    for retry in 0..=MAX_RETRIES {
        let data = u_map.weak_data(request)?;
        let delta = data.delta();
        if !(delta < request) {
            return Err(Error::Construction(format!(
                "weak certificate step {delta} must undercut the requested tolerance {request}"
            )));
        }
        deltas.push(delta);
        let (g, k_sel) = weak_selection(&data, &frame, delta, grid_cap)?;
        if let Some(result) = finish_attempt(
            u_map, &frame, &g, eps, eps3_unit, grid_cap, k_sel, &deltas, retry,
        )? {
            return Ok(result);
        }
        request /= 2.0;
    }
    Err(Error::GraphSearchExhausted {
        radius: eps3,
        retries: MAX_RETRIES,
        last_delta: *deltas.last().expect("at least one attempt"),
    })
}

/// Interpolant over a weak certificate. Lattice-shaped nets are used
/// directly (vertices are net points, so cell vertices stay within each
/// component's own step). Other nets get a uniform grid with measured
/// snapping; the attempt is rejected if snap distances plus the grid
/// pitch could push cell vertices past the certificate's step.
fn weak_selection(
    data: &WeakApproxData,
    frame: &Frame,
    delta: f64,
    grid_cap: u64,
) -> Result<(AffineSelection, u64)> {
    let n = frame.lo.len();
    let n_out = data.output_dim();
    if data.input_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: data.input_dim(),
        });
    }
    if let Some((lower, upper, counts)) = data.lattice() {
        let spans_domain = lower
            .iter()
            .zip(&frame.lo)
            .all(|(a, b)| (a - b).abs() <= 1e-9)
            && upper
                .iter()
                .zip(frame.lo.iter().zip(&frame.span))
                .all(|(u, (l, s))| (u - (l + s)).abs() <= 1e-9)
            && counts.iter().all(|&c| c >= 2);
        if spans_domain {
            let axis_cells: Vec<u64> = counts.iter().map(|&c| c as u64 - 1).collect();
            let resolution = axis_cells.iter().copied().max().unwrap_or(1);
            let (counts_f, lower_f, upper_f) = (counts.clone(), lower, upper);
            let (g, _) = build_selection(axis_cells, n_out, move |digits| {
                let x: Vec<f64> = digits
                    .iter()
                    .enumerate()
                    .map(|(j, &d)| {
                        lower_f[j]
                            + (upper_f[j] - lower_f[j]) * d as f64 / (counts_f[j] - 1) as f64
                    })
                    .collect();
                let u = data.first_selection(data.nearest(&x));
                Ok((frame.to_unit(u.coords()), data.snap_ratio(&x)))
            })?;
            return Ok((g, resolution));
        }
    }
    // General nets: grid pitch under delta/4, snapping measured.
    let k = resolution_for_pitch(delta / (4.0 * frame.span_max), grid_cap)?;
    let cells = vec![k; n];
    let (g, worst_ratio) = build_selection(cells, n_out, |digits| {
        let t: Vec<f64> = digits.iter().map(|&d| d as f64 / k as f64).collect();
        let x = frame.from_unit(&t);
        let u = data.first_selection(data.nearest(&x));
        Ok((frame.to_unit(u.coords()), data.snap_ratio(&x)))
    })?;
    let chain = 2.0 * worst_ratio + frame.span_max / (k as f64 * delta);
    if chain >= 1.0 - 1e-9 {
        return Err(Error::Construction(format!(
            "certificate net too sparse for its stated step: snap ratio {worst_ratio:.3} \
             leaves no room under the combination bound"
        )));
    }
    Ok((g, k))
}

/// Independent check that `x` is an `eps`-fixed point: finds a certified
/// graph member `u` over `x` (fiber points, the nearest fiber point, and
/// a graph-search witness are all considered) and reports the best
/// residual; `ok` iff that residual undercuts `eps`.
pub fn residual_certificate(
    u_map: &SetValuedMap,
    x: &Point,
    eps: f64,
) -> Result<ResidualReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidEps(eps));
    }
    let slack = u_map.graph_tol() + 1e-12;
    let mut candidates: Vec<Point> = vec![
        u_map.select(x)?,
        Point::from_slice(&u_map.nearest_fiber_point(x.coords(), x.coords())),
    ];
    let d0 = u_map.graph_distance(x, x)?;
    if let Some((xh, uh)) = u_map.graph_near(x, x, (d0 + slack).max(slack))? {
        if Metric::Max.dist(xh.coords(), x.coords()) <= slack {
            candidates.push(uh);
        }
    }
    let mut best: Option<(Point, f64)> = None;
    for u in candidates {
        let residual = Metric::Max.dist(x.coords(), u.coords());
        if best.as_ref().is_some_and(|(_, b)| residual >= *b) {
            continue;
        }
        if u_map.graph_distance(x, &u)? <= slack {
            best = Some((u, residual));
        }
    }
    Ok(match best {
        Some((u, residual)) => ResidualReport {
            ok: residual < eps,
            u,
            residual,
        },
        None => {
            let u = u_map.select(x)?;
            let residual = Metric::Max.dist(x.coords(), u.coords());
            ResidualReport {
                ok: false,
                u,
                residual,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setvalued::Segment;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lip(l: f64) -> ContinuityModulus {
        ContinuityModulus::lipschitz(l).unwrap()
    }

    fn unit() -> Domain {
        Domain::unit_box(1)
    }

    fn seg(ax: f64, au: f64, bx: f64, bu: f64) -> Segment {
        Segment::new(
            Point::from_slice(&[ax, au]),
            Point::from_slice(&[bx, bu]),
        )
        .unwrap()
    }

    /// The step mapping: 0 below 1/2, the whole interval at 1/2, 1 above.
    fn step_map() -> SetValuedMap {
        SetValuedMap::from_polygonal_graph(
            vec![
                seg(0.0, 0.0, 0.5, 0.0),
                seg(0.5, 0.0, 0.5, 1.0),
                seg(0.5, 1.0, 1.0, 1.0),
            ],
            unit(),
            lip(1.0),
        )
        .unwrap()
    }

    fn from_fn_1d(f: impl Fn(f64) -> f64 + Send + Sync + 'static, l: f64) -> SetValuedMap {
        SetValuedMap::from_function(move |x: &[f64]| vec![f(x[0])], &lip(l), unit()).unwrap()
    }

    #[test]
    fn multi_point_delta_examples() {
        let id = lip(1.0);
        assert_eq!(multi_point_delta(&id, 2, 0.1).unwrap(), 0.1);
        assert!((multi_point_delta(&id, 3, 0.1).unwrap() - 0.025).abs() < 1e-15);
        let table = ContinuityModulus::table(vec![(0.5, 0.125)]).unwrap();
        assert_eq!(
            multi_point_delta(&table, 2, 0.3).unwrap(),
            table.delta(0.3)
        );
        assert!(multi_point_delta(&id, 1, 0.1).is_err());
        assert!(multi_point_delta(&id, 3, 0.0).is_err());
    }

    #[test]
    fn multi_point_delta_nonincreasing_in_points() {
        let moduli = [lip(1.0), lip(3.0), ContinuityModulus::lipschitz_capped(0.5, 0.2).unwrap()];
        for m in &moduli {
            for eps in [0.4, 0.1, 0.02] {
                let mut prev = f64::INFINITY;
                for k in 2..=8 {
                    let d = multi_point_delta(m, k, eps).unwrap();
                    assert!(d > 0.0 && d <= prev + 1e-15, "k={k}, d={d}, prev={prev}");
                    prev = d;
                }
            }
        }
    }

    #[test]
    fn interpolation_matches_hand_values() {
        let m = from_fn_1d(|x| 1.0 - x, 1.0);
        let g = piecewise_affine_selection(&m, 4).unwrap();
        assert!((g.eval(&[0.375])[0] - 0.625).abs() < 1e-12);
        assert!((g.eval(&[0.0])[0] - 1.0).abs() < 1e-12);
        assert!((g.eval(&[1.0])[0] - 0.0).abs() < 1e-12);
        assert!((g.lipschitz() - 1.0).abs() < 1e-9);

        // The step graph interpolates through (1/2, lowest fiber point).
        let g = piecewise_affine_selection(&step_map(), 2).unwrap();
        assert!(g.eval(&[0.25])[0].abs() < 1e-12);
        assert!((g.eval(&[0.5])[0] - 0.0).abs() < 1e-12);
        assert!((g.eval(&[0.75])[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interpolation_of_identity_is_identity() {
        let m = SetValuedMap::from_function(
            |x: &[f64]| x.to_vec(),
            &lip(1.0),
            Domain::unit_box(2),
        )
        .unwrap();
        let g = piecewise_affine_selection(&m, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let t = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let v = g.eval(&t);
            assert!(Metric::Max.dist(&v, &t) < 1e-12);
        }
    }

    #[test]
    fn strong_solver_identity_and_affine() {
        let id = from_fn_1d(|x| x, 1.0);
        let out = approx_kakutani(&id, 1e-2).unwrap();
        assert_eq!(out.residual, 0.0);
        assert!(out.graph_defect <= id.graph_tol());

        let flip = from_fn_1d(|x| 1.0 - x, 1.0);
        let out = approx_kakutani(&flip, 1e-2).unwrap();
        assert!((out.point_x() - 0.5).abs() < 1e-2);
        assert!(out.residual < 1e-2);
    }

    impl FixedPointResult {
        fn point_x(&self) -> f64 {
            self.x.coords()[0]
        }
    }

    #[test]
    fn strong_solver_step_map() {
        let out = approx_kakutani(&step_map(), 1e-2).unwrap();
        assert!(out.residual < 1e-2);
        let report = residual_certificate(&step_map(), &out.x, 1e-2).unwrap();
        assert!(report.ok);
        // The interpolant's fixed points sit near the exact fixed points
        // 0, 1/2, and 1 of the step mapping.
        let x = out.point_x();
        let near_fp = x.min(1.0 - x).min((x - 0.5).abs());
        assert!(near_fp < 1e-2, "x = {x}");
    }

    #[test]
    fn strong_solver_two_dimensional_product() {
        let id2 = SetValuedMap::from_function(
            |x: &[f64]| x.to_vec(),
            &lip(1.0),
            Domain::unit_box(2),
        )
        .unwrap();
        let out = approx_kakutani(&id2, 0.05).unwrap();
        assert!(out.residual < 1e-9);
        assert_eq!(out.trace.retries, 0);
        assert_eq!(out.trace.deltas.len(), 1);
    }

    #[test]
    fn strong_solver_interval_hull_domain() {
        let domain = Domain::hull(vec![
            Point::from_slice(&[0.2]),
            Point::from_slice(&[0.8]),
        ])
        .unwrap();
        let m = SetValuedMap::from_function(
            |x: &[f64]| vec![0.5 * x[0] + 0.25],
            &lip(0.5),
            domain.clone(),
        )
        .unwrap();
        let out = approx_kakutani(&m, 1e-2).unwrap();
        assert!((out.point_x() - 0.5).abs() < 2e-2);
        // Returned points stay in the domain (projection-stable).
        let projected = domain.project(&out.x).unwrap();
        assert!(Metric::Max.dist(projected.coords(), out.x.coords()) <= 1e-9);
    }

    #[test]
    fn weak_solver_matches_strong_on_unique_fixed_point() {
        // 1 - x pins the fixed point at 1/2, so the two pipelines must
        // agree there to within eps.
        let flip = from_fn_1d(|x| 1.0 - x, 1.0);
        let strong = approx_kakutani(&flip, 1e-2).unwrap();
        let weak = approx_kakutani_weak(&flip.as_weakly_approximable().unwrap(), 1e-2).unwrap();
        assert!(weak.residual < 1e-2);
        assert!(Metric::Max.dist(weak.x.coords(), strong.x.coords()) <= 1e-2);

        // The identity fixes every point; each pipeline may land on a
        // different one, but both must certify.
        let id = from_fn_1d(|x| x, 1.0);
        let weak = approx_kakutani_weak(&id.as_weakly_approximable().unwrap(), 1e-2).unwrap();
        assert!(weak.residual < 1e-2);
        assert!(residual_certificate(&id, &weak.x, 1e-2).unwrap().ok);
    }

    #[test]
    fn weak_solver_step_map() {
        let weak_map = step_map().as_weakly_approximable().unwrap();
        let out = approx_kakutani_weak(&weak_map, 1e-2).unwrap();
        assert!(out.residual < 1e-2);
        assert!(residual_certificate(&step_map(), &out.x, 1e-2).unwrap().ok);
    }

    #[test]
    fn solvers_reject_wrong_approximability_kind() {
        let id = from_fn_1d(|x| x, 1.0);
        assert!(approx_kakutani_weak(&id, 1e-2).is_err());
        let weak = id.as_weakly_approximable().unwrap();
        assert!(approx_kakutani(&weak, 1e-2).is_err());
    }

    /// Oracle map whose graph search always fails: exercises the retry
    /// loop, the monotone trace, and the final error.
    #[test]
    fn graph_search_exhaustion_reports_trace() {
        use crate::setvalued::test_support::oracle_identity_no_witness;
        let m = oracle_identity_no_witness();
        let err = approx_kakutani_weak(&m, 0.1).unwrap_err();
        match err {
            Error::GraphSearchExhausted {
                retries,
                last_delta,
                ..
            } => {
                assert_eq!(retries, MAX_RETRIES);
                assert!(last_delta > 0.0);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn weak_solver_rejects_non_undercutting_provider() {
        use crate::setvalued::test_support::oracle_identity_static_delta;
        // Provider always answers with step equal to the request.
        let m = oracle_identity_static_delta();
        let err = approx_kakutani_weak(&m, 0.3).unwrap_err();
        assert!(matches!(err, Error::Construction(_)), "got {err:?}");
    }

    #[test]
    fn residual_certificate_examples() {
        let m = step_map();
        // 1/2 is an exact fixed point through the vertical fiber.
        let at_half = residual_certificate(&m, &Point::from_slice(&[0.5]), 1e-6).unwrap();
        assert!(at_half.ok);
        assert!((at_half.u.coords()[0] - 0.5).abs() <= 1e-9);
        assert!(at_half.residual <= 1e-9);
        // 1/4 maps to {0} only; residual 1/4 defeats eps = 0.1.
        let at_quarter = residual_certificate(&m, &Point::from_slice(&[0.25]), 0.1).unwrap();
        assert!(!at_quarter.ok);
        assert!((at_quarter.residual - 0.25).abs() <= 1e-9);

        let id = from_fn_1d(|x| x, 1.0);
        let report = residual_certificate(&id, &Point::from_slice(&[0.7]), 1e-9).unwrap();
        assert!(report.ok);
        assert_eq!(report.residual, 0.0);
    }

    #[test]
    fn combination_property_on_random_function_maps() {
        // Random cubics rescaled into the unit interval, with coefficient
        // -certified Lipschitz bounds; combinations of up to 4 graph
        // points over arguments within the derived step stay within eps
        // of the graph, measured by an exact dense-scan oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(1203);
        let eps = 0.1;
        for trial in 0..200 {
            let coeffs: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let raw = move |x: f64| {
                coeffs[0] + x * (coeffs[1] + x * (coeffs[2] + x * coeffs[3]))
            };
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..=1000 {
                let v = raw(i as f64 / 1000.0);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let span = (hi - lo).max(1e-6);
            // Map into [0.05, 0.95]: slack absorbs the coarse range scan.
            let f = move |x: f64| 0.05 + 0.9 * ((raw(x) - lo) / span).clamp(0.0, 1.0);
            let l = 0.9 * (coeffs[1].abs() + 2.0 * coeffs[2].abs() + 3.0 * coeffs[3].abs())
                / span;
            let m = from_fn_1d(f, l.max(1e-6));
            let modulus = m.delta_modulus().unwrap().clone();

            let k_points = 2 + (trial % 3) as u64;
            let delta = multi_point_delta(&modulus, k_points, eps).unwrap();
            let x0: f64 = rng.random_range(0.0..1.0);
            let xs: Vec<f64> = (0..k_points)
                .map(|i| {
                    if i == 0 {
                        x0
                    } else {
                        (x0 + rng.random_range(-0.49..0.49) * delta).clamp(0.0, 1.0)
                    }
                })
                .collect();
            let us: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
            let mut w: Vec<f64> = (0..k_points).map(|_| rng.random_range(0.0..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            let z: f64 = xs.iter().zip(&w).map(|(x, t)| x * t).sum();
            let u: f64 = us.iter().zip(&w).map(|(x, t)| x * t).sum();

            // Exact oracle: dense scan of max(|z - s|, |u - f(s)|).
            let mut scan = f64::INFINITY;
            for i in 0..=100_000 {
                let s = i as f64 / 100_000.0;
                scan = scan.min((z - s).abs().max((u - f(s)).abs()));
            }
            assert!(
                scan < eps,
                "trial {trial}: combination escaped to {scan} (k={k_points})"
            );
            let lib = m
                .graph_distance(&Point::from_slice(&[z]), &Point::from_slice(&[u]))
                .unwrap();
            assert!(lib < eps, "trial {trial}: library distance {lib}");
        }
    }
}
