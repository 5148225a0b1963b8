//! Certified minimax for payoffs on `[0,1]^n x [0,1]^m`.
//!
//! A payoff expression `f(x, y)` that is quasi-concave in the `x` block
//! and quasi-convex in the `y` block admits approximate saddle points:
//! the near-best-response regions `V(x) = {y : f(x,y) <= inf + eps}` and
//! `W(y) = {x : f(x,y) >= sup - eps}` are convex, their crossed product
//! is a set-valued self-map of the joint cube, and an approximate fixed
//! point of that map is an approximate saddle. This module builds the
//! two response mappings with finite certificates, runs the fixed-point
//! pipeline, and re-derives every reported bound from direct certified
//! scans of `f` so the final [`SaddleCertificate`] stands on its own.
//!
//! All level tests are nested strictly inside the nominal tolerance
//! (acceptance at `3/8` and `3/4` of the level budget above a certified
//! reference), so numerically accepted points are genuine members of the
//! half-tolerance and full-tolerance regions respectively, and rounding
//! can only shrink the reported sets, never inflate them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Block, ContinuityModulus, Expr};
use crate::geometry::{Domain, Metric, Point};
use crate::kakutani;
use crate::par;
use crate::setvalued::{
    Approximability, FiberFn, GraphDistFn, GraphNearFn, PointFn, ProviderFn, SetValuedMap,
    WeakApproxData,
};
use crate::{Error, Result};

/// Evaluation budget for [`brute_gap`] grids.
const MAX_BRUTE_EVALS: u128 = 1 << 26;
/// Per-axis point budget for response-mapping certificate nets.
const MAX_CERT_POINTS: u128 = 1 << 22;
/// Slack added to the statistical convexity inequalities.
const CONVEXITY_SLACK: f64 = 1e-9;

/// An approximate saddle point with self-contained certified bounds.
///
/// `inf_bound` undercuts `inf_y f(x0, y)` by at most `grid_tol`;
/// `sup_bound` overshoots `sup_x f(x, y0)` by at most `grid_tol`. The
/// constructor enforces `value < inf_bound + eps + grid_tol`,
/// `value > sup_bound - eps - grid_tol`, and
/// `gap_estimate <= 2 eps + 2 grid_tol`.
#[derive(Clone, Debug)]
pub struct SaddleCertificate {
    pub x0: Point,
    pub y0: Point,
    pub value: f64,
    pub eps: f64,
    pub inf_bound: f64,
    pub sup_bound: f64,
    pub gap_estimate: f64,
    pub grid_tol: f64,
}

/// A sampled counterexample to quasi-convexity (axis `y`) or
/// quasi-concavity (axis `x`).
#[derive(Clone, Debug)]
pub struct ConvexityViolation {
    /// Endpoints on the tested axis.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// The frozen other-block coordinates.
    pub fixed: Vec<f64>,
    pub t: f64,
    /// Payoff at the combination `t a + (1-t) b`.
    pub combined: f64,
    /// The level the combination had to stay on the right side of.
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct ConvexityReport {
    pub passed: bool,
    pub violation: Option<ConvexityViolation>,
    pub samples: u32,
}

fn block_dims(f: &Expr) -> (usize, usize) {
    let (n, m) = f.arity();
    (n.max(1), m.max(1))
}

/// `inf_y f(x0, y)` over the unit cube within `eps`: the minimum over a
/// net fine enough that uniform continuity bounds the off-grid error.
/// The result never undercuts the true infimum.
pub fn certified_inf(
    f: &Expr,
    omega: &ContinuityModulus,
    x0: &[f64],
    eps: f64,
) -> Result<f64> {
    scan_extremum(f, omega, x0, eps, false)
}

/// `sup_x f(x, y0)` within `eps`; never overshoots the true supremum.
pub fn certified_sup(
    f: &Expr,
    omega: &ContinuityModulus,
    y0: &[f64],
    eps: f64,
) -> Result<f64> {
    scan_extremum(f, omega, y0, eps, true)
}

fn scan_extremum(
    f: &Expr,
    omega: &ContinuityModulus,
    fixed: &[f64],
    eps: f64,
    maximize: bool,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidEps(eps));
    }
    let (n, m) = block_dims(f);
    let dim = if maximize { n } else { m };
    let net = Domain::unit_box(dim).eps_net(omega.delta(eps))?;
    let values = par::map_collect(net.len(), |i| {
        if maximize {
            f.eval(net[i].coords(), fixed)
        } else {
            f.eval(fixed, net[i].coords())
        }
    });
    let mut best = if maximize {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    for v in values {
        let v = v?;
        best = if maximize { best.max(v) } else { best.min(v) };
    }
    Ok(best)
}

/// Which side of the payoff a response mapping optimizes.
#[derive(Clone, Copy)]
enum Side {
    /// Near-minimizers in `y` for a frozen `x` (the map `V`).
    Inf,
    /// Near-maximizers in `x` for a frozen `y` (the map `W`).
    Sup,
}

/// Shared machinery of the two response mappings: payoff access with the
/// argument/fiber blocks in the right order, certified reference levels,
/// and grid scans for level-set members.
struct LevelKit {
    f: Arc<Expr>,
    omega: ContinuityModulus,
    /// Construction tolerance of the realized mapping.
    e: f64,
    side: Side,
    out_dim: usize,
}

impl LevelKit {
    fn payoff(&self, arg: &[f64], out: &[f64]) -> f64 {
        let r = match self.side {
            Side::Inf => self.f.eval(arg, out),
            Side::Sup => self.f.eval(out, arg),
        };
        r.unwrap_or(f64::NAN)
    }

    /// Certified optimum of the fiber block at `arg`, within `self.e / 8`.
    /// NaN (which fails every membership test) when evaluation breaks.
    fn reference(&self, arg: &[f64]) -> f64 {
        let net = match Domain::unit_box(self.out_dim).eps_net(self.omega.delta(self.e / 8.0)) {
            Ok(net) => net,
            Err(_) => return f64::NAN,
        };
        let mut best = f64::NAN;
        for p in &net {
            let v = self.payoff(arg, p.coords());
            if v.is_nan() {
                return f64::NAN;
            }
            best = match self.side {
                _ if best.is_nan() => v,
                Side::Inf => best.min(v),
                Side::Sup => best.max(v),
            };
        }
        best
    }

    fn accepts(&self, value: f64, reference: f64, margin: f64) -> bool {
        match self.side {
            Side::Inf => value <= reference + margin,
            Side::Sup => value >= reference - margin,
        }
    }

    /// Fiber-grid members within `margin` of the certified reference, in
    /// ascending lexicographic order. Empty when evaluation breaks down;
    /// never reports a point outside the true `margin + e/8` level set.
    fn members(&self, arg: &[f64], pitch: f64, margin: f64) -> Vec<Vec<f64>> {
        let reference = self.reference(arg);
        if reference.is_nan() {
            return Vec::new();
        }
        let net = match Domain::unit_box(self.out_dim).eps_net(pitch) {
            Ok(net) => net,
            Err(_) => return Vec::new(),
        };
        net.into_iter()
            .filter(|p| self.accepts(self.payoff(arg, p.coords()), reference, margin))
            .map(Point::into_coords)
            .collect()
    }

    /// Grid pitch for fiber and graph queries: fine enough for the
    /// `e/8` continuity budget and never coarser than `e/16`.
    fn query_pitch(&self) -> f64 {
        self.omega.delta(self.e / 8.0).min(self.e / 16.0)
    }
}

/// Margin over the certified reference that guarantees genuine
/// `e/2`-membership (selection lists handed to interpolation).
fn selection_margin(e: f64) -> f64 {
    3.0 * e / 8.0
}

/// Margin that guarantees genuine `e`-membership with interior headroom
/// (fiber enumeration and graph queries).
fn query_margin(e: f64) -> f64 {
    3.0 * e / 4.0
}

/// Builds one response mapping as an oracle-backed set-valued map with a
/// weak-approximability certificate provider.
fn response_map(kit: LevelKit, arg_dim: usize) -> Result<SetValuedMap> {
    let kit = Arc::new(kit);
    let out_dim = kit.out_dim;

    let select: Arc<PointFn> = {
        let kit = kit.clone();
        Arc::new(move |arg: &[f64]| {
            kit.members(arg, kit.query_pitch(), query_margin(kit.e))
                .into_iter()
                .next()
                .unwrap_or_else(|| vec![0.5; kit.out_dim])
        })
    };
    let fiber: Arc<FiberFn> = {
        let kit = kit.clone();
        Arc::new(move |arg: &[f64]| {
            let members = kit.members(arg, kit.query_pitch(), query_margin(kit.e));
            if members.is_empty() {
                vec![vec![0.5; kit.out_dim]]
            } else {
                members
            }
        })
    };
    let graph_distance: Arc<GraphDistFn> = {
        let kit = kit.clone();
        Arc::new(move |arg: &[f64], w: &[f64]| {
            kit.members(arg, kit.query_pitch(), query_margin(kit.e))
                .iter()
                .map(|y| Metric::Max.dist(y, w))
                .fold(f64::INFINITY, f64::min)
        })
    };
    let graph_near: Arc<GraphNearFn> = {
        let kit = kit.clone();
        Arc::new(move |arg: &[f64], w: &[f64], r: f64| {
            if !(r > 0.0) {
                return None;
            }
            let pitch = kit.query_pitch().min(r / 2.0);
            let mut best: Option<(f64, Vec<f64>)> = None;
            for y in kit.members(arg, pitch, query_margin(kit.e)) {
                let d = Metric::Max.dist(&y, w);
                if best.as_ref().is_none_or(|(b, _)| d < *b) {
                    best = Some((d, y));
                }
            }
            match best {
                Some((d, y)) if d <= r => Some((arg.to_vec(), y)),
                _ => None,
            }
        })
    };
    let provider: Arc<ProviderFn> = {
        let kit = kit.clone();
        Arc::new(move |request: f64| {
            if !(request > 0.0) {
                return Err(Error::InvalidEps(request));
            }
            let e_eff = kit.e.min(request);
            let delta = kit.omega.delta(e_eff / 4.0).min(request / 2.0);
            if !(delta > 0.0) {
                return Err(Error::ModulusTooWeak);
            }
            let per_axis = (2.0 / delta).ceil() as usize + 1;
            let total = (per_axis as u128).checked_pow(arg_dim as u32);
            match total {
                Some(t) if t <= MAX_CERT_POINTS => {}
                _ => {
                    return Err(Error::NetOverflow {
                        points: total.unwrap_or(u128::MAX),
                        cap: MAX_CERT_POINTS as u64,
                    })
                }
            }
            let total = (per_axis as usize).pow(arg_dim as u32);
            let spacing = 1.0 / (per_axis - 1) as f64;
            let margin = selection_margin(kit.e);
            let kit2 = kit.clone();
            let lists = par::map_collect(total, move |idx| {
                let mut rest = idx;
                let mut arg = vec![0.0; arg_dim];
                for j in (0..arg_dim).rev() {
                    arg[j] = (rest % per_axis) as f64 * spacing;
                    rest /= per_axis;
                }
                kit2.members(&arg, delta / 2.0, margin)
            });
            let mut selections = Vec::with_capacity(total);
            for list in lists {
                if list.is_empty() {
                    return Err(Error::ToleranceBudgetExhausted);
                }
                selections.push(list.into_iter().map(|y| Point::from_slice(&y)).collect());
            }
            WeakApproxData::grid(
                request,
                delta,
                vec![0.0; arg_dim],
                vec![1.0; arg_dim],
                vec![per_axis; arg_dim],
                selections,
            )
        })
    };

    Ok(SetValuedMap::from_oracles(
        Domain::unit_box(arg_dim),
        Domain::unit_box(out_dim),
        select,
        fiber,
        graph_distance,
        graph_near,
        Approximability::WeaklyApproximable { provider },
        0.0,
        1e-9,
    ))
}

/// The two near-best-response mappings at tolerance `eps`:
/// `V(x) = {y : f(x,y) <= inf_y f(x,.) + eps}` on the `x` cube and
/// `W(y) = {x : f(x,y) >= sup_x f(.,y) - eps}` on the `y` cube, both
/// weakly approximable with half-tolerance selection certificates.
pub fn sublevel_maps(
    f: &Expr,
    omega: &ContinuityModulus,
    eps: f64,
) -> Result<(SetValuedMap, SetValuedMap)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidEps(eps));
    }
    let (n, m) = block_dims(f);
    let f = Arc::new(f.clone());
    let v = response_map(
        LevelKit {
            f: f.clone(),
            omega: omega.clone(),
            e: eps,
            side: Side::Inf,
            out_dim: m,
        },
        n,
    )?;
    let w = response_map(
        LevelKit {
            f,
            omega: omega.clone(),
            e: eps,
            side: Side::Sup,
            out_dim: n,
        },
        m,
    )?;
    Ok((v, w))
}

/// An approximate saddle point of `f`: the crossed product of the two
/// half-tolerance response mappings is solved for an approximate fixed
/// point at the continuity step of `eps/4`, and the resulting point is
/// re-certified by direct inf/sup scans.
pub fn approx_saddle(
    f: &Expr,
    omega: &ContinuityModulus,
    eps: f64,
) -> Result<SaddleCertificate> {
    approx_saddle_capped(f, omega, eps, crate::brouwer::MAX_RESOLUTION).map(|(cert, _)| cert)
}

/// [`approx_saddle`] with a caller-supplied per-axis resolution cap for
/// the inner fixed-point solver, which also surfaces that solver's
/// trace for reporting.
pub fn approx_saddle_capped(
    f: &Expr,
    omega: &ContinuityModulus,
    eps: f64,
    grid_cap: u64,
) -> Result<(SaddleCertificate, kakutani::SolveTrace)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidEps(eps));
    }
    let (n, m) = block_dims(f);
    let (v_map, w_map) = sublevel_maps(f, omega, eps / 2.0)?;
    let delta_f = omega.delta(eps / 4.0);
    let crossed = SetValuedMap::twisted_product(w_map, v_map)?;
    let fixed = kakutani::approx_kakutani_weak_capped(&crossed, delta_f, grid_cap)?;
    let (x0, y0) = fixed.x.coords().split_at(n);
    debug_assert_eq!(y0.len(), m);

    let grid_tol = eps / 8.0;
    let value = f.eval(x0, y0)?;
    let inf_bound = certified_inf(f, omega, x0, grid_tol)?;
    let sup_bound = certified_sup(f, omega, y0, grid_tol)?;
    let gap_estimate = (sup_bound - inf_bound).max(0.0);

    let lower_ok = value < inf_bound + eps + grid_tol;
    let upper_ok = value > sup_bound - eps - grid_tol;
    let gap_ok = gap_estimate <= 2.0 * eps + 2.0 * grid_tol;
    if !(lower_ok && upper_ok && gap_ok) {
        return Err(Error::CertificateFailure(format!(
            "saddle bounds failed at ({:?}, {:?}): value {value}, inf bound {inf_bound}, \
             sup bound {sup_bound}, gap {gap_estimate}, eps {eps} (solver resolution {}, \
             retries {})",
            x0, y0, fixed.trace.resolution, fixed.trace.retries
        )));
    }
    Ok((
        SaddleCertificate {
            x0: Point::from_slice(x0),
            y0: Point::from_slice(y0),
            value,
            eps,
            inf_bound,
            sup_bound,
            gap_estimate,
            grid_tol,
        },
        fixed.trace,
    ))
}

/// Statistical falsifier for the saddle hypotheses: quasi-concavity
/// along the `x` block or quasi-convexity along the `y` block. Samples
/// segment endpoints, a frozen other-block point, and a mixing weight;
/// reports the first violating triple. Passing is evidence, not proof.
pub fn quasi_convexity_check(
    f: &Expr,
    axis: Block,
    samples: u32,
    seed: u64,
) -> ConvexityReport {
    let (n, m) = block_dims(f);
    let (axis_dim, fixed_dim) = match axis {
        Block::X => (n, m),
        Block::Y => (m, n),
    };
    let axis_box = Domain::unit_box(axis_dim);
    let fixed_box = Domain::unit_box(fixed_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let a = axis_box.sample(&mut rng).into_coords();
        let b = axis_box.sample(&mut rng).into_coords();
        let fixed = fixed_box.sample(&mut rng).into_coords();
        let t: f64 = rng.random_range(0.0..1.0);
        let combined: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(p, q)| t * p + (1.0 - t) * q)
            .collect();
        let eval = |axis_point: &[f64]| match axis {
            Block::X => f.eval(axis_point, &fixed),
            Block::Y => f.eval(&fixed, axis_point),
        };
        let (Ok(fa), Ok(fb), Ok(fc)) = (eval(&a), eval(&b), eval(&combined)) else {
            continue;
        };
        let (bound, violated) = match axis {
            // Quasi-concavity: the segment stays above the worse endpoint.
            Block::X => (fa.min(fb), fc < fa.min(fb) - CONVEXITY_SLACK),
            // Quasi-convexity: the segment stays below the worse endpoint.
            Block::Y => (fa.max(fb), fc > fa.max(fb) + CONVEXITY_SLACK),
        };
        if violated {
            return ConvexityReport {
                passed: false,
                violation: Some(ConvexityViolation {
                    a,
                    b,
                    fixed,
                    t,
                    combined: fc,
                    bound,
                }),
                samples,
            };
        }
    }
    ConvexityReport {
        passed: true,
        violation: None,
        samples,
    }
}

/// Exhaustive `(sup_x inf_y, inf_y sup_x)` over the uniform product grid
/// with `grid_k` cells per axis. Weak duality `sup inf <= inf sup` holds
/// on every grid by exchange of extrema.
pub fn brute_gap(f: &Expr, grid_k: u64) -> Result<(f64, f64)> {
    if grid_k < 1 {
        return Err(Error::Construction(
            "gap scan needs at least one grid cell per axis".into(),
        ));
    }
    let (n, m) = block_dims(f);
    let per_axis = grid_k + 1;
    let x_total = (per_axis as u128).pow(n as u32);
    let y_total = (per_axis as u128).pow(m as u32);
    let evals = x_total.saturating_mul(y_total);
    if evals > MAX_BRUTE_EVALS {
        return Err(Error::GridOverflow {
            cells: evals,
            cap: MAX_BRUTE_EVALS as u64,
        });
    }
    let decode = |mut idx: usize, dim: usize| -> Vec<f64> {
        let mut coords = vec![0.0; dim];
        for j in (0..dim).rev() {
            coords[j] = (idx as u64 % per_axis) as f64 / grid_k as f64;
            idx /= per_axis as usize;
        }
        coords
    };
    let inner_min = |x: &[f64]| -> Result<f64> {
        let mut best = f64::INFINITY;
        for yi in 0..y_total as usize {
            best = best.min(f.eval(x, &decode(yi, m))?);
        }
        Ok(best)
    };
    let mins = par::map_collect(x_total as usize, |xi| inner_min(&decode(xi, n)));
    let mut sup_inf = f64::NEG_INFINITY;
    for v in mins {
        sup_inf = sup_inf.max(v?);
    }
    let inner_max = |y: &[f64]| -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for xi in 0..x_total as usize {
            best = best.max(f.eval(&decode(xi, n), y)?);
        }
        Ok(best)
    };
    let maxes = par::map_collect(y_total as usize, |yi| inner_max(&decode(yi, m)));
    let mut inf_sup = f64::INFINITY;
    for v in maxes {
        inf_sup = inf_sup.min(v?);
    }
    Ok((sup_inf, inf_sup))
}
