//! Set-valued mappings with explicit graph access.
//!
//! A [`SetValuedMap`] packages a domain, a selection oracle, a graph
//! proximity oracle, and approximability data. Three concrete backends
//! cover the cases the solvers need: single-valued continuous functions
//! (`U(x) = {f(x)}`), one-dimensional mappings defined by a polygonal
//! graph, and products of two mappings. All distances are taken in the
//! max metric, so product graph distances are exact maxima of component
//! distances and moduli compose without dimension factors.
//!
//! Approximability comes in two strengths. A map with a delta modulus
//! guarantees that convex combinations of any two graph points over
//! arguments closer than `delta(eps)` stay within `eps` of the graph. A
//! weakly approximable map promises the same only on a finite net, and
//! only for designated selections there; [`WeakApproxData`] carries one
//! such certificate per accuracy request.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::ContinuityModulus;
use crate::geometry::{affine_combo, Domain, Metric, Point};
use crate::{Error, Result};

pub(crate) type PointFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
pub(crate) type FiberFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;
pub(crate) type GraphDistFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
pub(crate) type GraphNearFn =
    dyn Fn(&[f64], &[f64], f64) -> Option<(Vec<f64>, Vec<f64>)> + Send + Sync;
pub(crate) type ProviderFn = dyn Fn(f64) -> Result<WeakApproxData> + Send + Sync;

/// Accuracy of the exact (polygonal, product-of-polygonal) backends,
/// absorbing floating-point slack only.
const EXACT_BACKEND_TOL: f64 = 1e-9;
/// Accuracy of the branch-and-bound graph search behind function-backed
/// maps.
const FUNCTION_BACKEND_TOL: f64 = 1e-6;
/// Widest admissible gap in the argument coverage of a polygonal graph.
const COVERAGE_GAP: f64 = 1e-6;
/// Scales at which polygonal constructions cross-check the supplied
/// modulus before accepting it.
const SPOT_CHECK_EPS: [f64; 3] = [0.2, 0.1, 0.05];
const SPOT_CHECK_TRIALS: u32 = 1000;
const SPOT_CHECK_SEED: u64 = 0xA11CE;

/// A closed segment in graph space; each endpoint concatenates an
/// argument block with a value block. Degenerate point-segments are
/// allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    a: Point,
    b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        Ok(Segment { a, b })
    }

    pub fn endpoints(&self) -> (&Point, &Point) {
        (&self.a, &self.b)
    }
}

/// One violation of the approximability property found by sampling: the
/// convex combination of `(x, u)` and `(x_prime, u_prime)` at `t` sits
/// `distance` away from the graph.
#[derive(Clone, Debug)]
pub struct ApproxViolation {
    pub x: Point,
    pub x_prime: Point,
    pub u: Point,
    pub u_prime: Point,
    pub t: f64,
    pub distance: f64,
}

/// Outcome of [`SetValuedMap::check_approximability`]; a falsifier, not a
/// prover.
#[derive(Clone, Debug)]
pub struct ApproxReport {
    pub passed: bool,
    pub violation: Option<ApproxViolation>,
    pub trials: u32,
}

#[derive(Clone)]
enum FlatNet {
    Points(Arc<Vec<Point>>),
    /// Uniform axis-aligned grid, endpoints included; axis 0 varies
    /// slowest in the enumeration.
    Grid {
        lower: Vec<f64>,
        upper: Vec<f64>,
        counts: Vec<usize>,
    },
}

impl FlatNet {
    fn len(&self) -> usize {
        match self {
            FlatNet::Points(points) => points.len(),
            FlatNet::Grid { counts, .. } => counts.iter().product(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            FlatNet::Points(points) => points[0].dim(),
            FlatNet::Grid { lower, .. } => lower.len(),
        }
    }

    fn point(&self, index: usize) -> Vec<f64> {
        match self {
            FlatNet::Points(points) => points[index].coords().to_vec(),
            FlatNet::Grid {
                lower,
                upper,
                counts,
            } => {
                let mut rest = index;
                let mut digits = vec![0usize; counts.len()];
                for j in (0..counts.len()).rev() {
                    digits[j] = rest % counts[j];
                    rest /= counts[j];
                }
                digits
                    .iter()
                    .enumerate()
                    .map(|(j, &d)| grid_coord(lower[j], upper[j], counts[j], d))
                    .collect()
            }
        }
    }

    fn nearest(&self, p: &[f64]) -> usize {
        match self {
            FlatNet::Points(points) => {
                let mut best = (f64::INFINITY, 0usize);
                for (i, q) in points.iter().enumerate() {
                    let d = Metric::Max.dist(q.coords(), p);
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                best.1
            }
            FlatNet::Grid {
                lower,
                upper,
                counts,
            } => {
                let mut index = 0usize;
                for j in 0..counts.len() {
                    let span = upper[j] - lower[j];
                    let digit = if counts[j] == 1 || span <= 0.0 {
                        0
                    } else {
                        let raw = (p[j] - lower[j]) / span * (counts[j] - 1) as f64;
                        (raw.round().max(0.0) as usize).min(counts[j] - 1)
                    };
                    index = index * counts[j] + digit;
                }
                index
            }
        }
    }
}

fn grid_coord(lo: f64, hi: f64, count: usize, digit: usize) -> f64 {
    if count == 1 {
        (lo + hi) / 2.0
    } else {
        lo + (hi - lo) * digit as f64 / (count - 1) as f64
    }
}

#[derive(Clone)]
enum WeakRepr {
    Flat {
        net: FlatNet,
        selections: Arc<Vec<Vec<Point>>>,
    },
    Product {
        left: Arc<WeakApproxData>,
        right: Arc<WeakApproxData>,
        /// With the twist, the *first* input block feeds `right` and the
        /// second feeds `left`; output order is always (left, right).
        twist: bool,
    },
}

/// One weak-approximability certificate: a `delta/2`-net of the domain
/// together with nonempty graph selections above every net point, valid
/// for combination tolerance `eps`.
///
/// Products are kept symbolic so that a certificate over a product domain
/// never materializes the full cartesian net; all accessors index into it
/// lazily.
#[derive(Clone)]
pub struct WeakApproxData {
    eps: f64,
    delta: f64,
    repr: WeakRepr,
}

impl WeakApproxData {
    /// Certificate from explicit net points and their selections
    /// (parallel vectors). Requires `0 < delta < eps` and a nonempty
    /// selection list at every net point.
    pub fn explicit(
        eps: f64,
        delta: f64,
        net: Vec<Point>,
        selections: Vec<Vec<Point>>,
    ) -> Result<Self> {
        if net.is_empty() {
            return Err(Error::EmptySet);
        }
        if net.len() != selections.len() {
            return Err(Error::Construction(format!(
                "{} net points but {} selection lists",
                net.len(),
                selections.len()
            )));
        }
        Self::validated(
            eps,
            delta,
            WeakRepr::Flat {
                net: FlatNet::Points(Arc::new(net)),
                selections: Arc::new(selections),
            },
        )
    }

    /// Certificate whose net is a uniform grid over a box, kept implicit;
    /// `selections` is parallel to the grid enumeration (axis 0 slowest).
    /// The grid spacing must realize the `delta/2` net guarantee exactly,
    /// which downstream interpolation relies on.
    pub(crate) fn grid(
        eps: f64,
        delta: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
        counts: Vec<usize>,
        selections: Vec<Vec<Point>>,
    ) -> Result<Self> {
        let total: usize = counts.iter().product();
        if total == 0 {
            return Err(Error::EmptySet);
        }
        for j in 0..counts.len() {
            let spacing = if counts[j] > 1 {
                (upper[j] - lower[j]) / (counts[j] - 1) as f64
            } else {
                upper[j] - lower[j]
            };
            if spacing > delta / 2.0 * (1.0 + 1e-9) {
                return Err(Error::Construction(format!(
                    "grid spacing {spacing} on axis {j} exceeds delta/2 = {}",
                    delta / 2.0
                )));
            }
        }
        if total != selections.len() {
            return Err(Error::Construction(format!(
                "{total} grid points but {} selection lists",
                selections.len()
            )));
        }
        Self::validated(
            eps,
            delta,
            WeakRepr::Flat {
                net: FlatNet::Grid {
                    lower,
                    upper,
                    counts,
                },
                selections: Arc::new(selections),
            },
        )
    }

    /// Componentwise certificate for a product mapping; `delta` is the
    /// smaller of the two and both component guarantees transfer through
    /// the max metric.
    pub(crate) fn product(left: WeakApproxData, right: WeakApproxData, twist: bool) -> Result<Self> {
        let eps = left.eps.min(right.eps);
        let delta = left.delta.min(right.delta);
        Self::validated(
            eps,
            delta,
            WeakRepr::Product {
                left: Arc::new(left),
                right: Arc::new(right),
                twist,
            },
        )
    }

    fn validated(eps: f64, delta: f64, repr: WeakRepr) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidEps(eps));
        }
        if !(delta > 0.0 && delta < eps) {
            return Err(Error::Construction(format!(
                "weak approximation data requires 0 < delta < eps, got delta={delta}, eps={eps}"
            )));
        }
        if let WeakRepr::Flat { selections, .. } = &repr {
            if selections.iter().any(|s| s.is_empty()) {
                return Err(Error::Construction(
                    "every net point needs at least one selection".into(),
                ));
            }
        }
        Ok(WeakApproxData { eps, delta, repr })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            WeakRepr::Flat { net, .. } => net.len(),
            WeakRepr::Product { left, right, .. } => left.len() * right.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn input_dim(&self) -> usize {
        match &self.repr {
            WeakRepr::Flat { net, .. } => net.dim(),
            WeakRepr::Product { left, right, .. } => left.input_dim() + right.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match &self.repr {
            WeakRepr::Flat { selections, .. } => selections[0][0].dim(),
            WeakRepr::Product { left, right, .. } => left.output_dim() + right.output_dim(),
        }
    }

    pub fn net_point(&self, index: usize) -> Point {
        match &self.repr {
            WeakRepr::Flat { net, .. } => Point::from_slice(&net.point(index)),
            WeakRepr::Product { left, right, twist } => {
                let (il, ir) = (index / right.len(), index % right.len());
                let l = left.net_point(il);
                let r = right.net_point(ir);
                let mut coords = Vec::with_capacity(l.dim() + r.dim());
                if *twist {
                    coords.extend_from_slice(r.coords());
                    coords.extend_from_slice(l.coords());
                } else {
                    coords.extend_from_slice(l.coords());
                    coords.extend_from_slice(r.coords());
                }
                Point::from_slice(&coords)
            }
        }
    }

    /// All designated selections above the net point; always nonempty.
    pub fn selections(&self, index: usize) -> Vec<Point> {
        match &self.repr {
            WeakRepr::Flat { selections, .. } => selections[index].clone(),
            WeakRepr::Product { left, right, .. } => {
                let (il, ir) = (index / right.len(), index % right.len());
                let ls = left.selections(il);
                let rs = right.selections(ir);
                let mut out = Vec::with_capacity(ls.len() * rs.len());
                for l in &ls {
                    for r in &rs {
                        let mut coords = l.coords().to_vec();
                        coords.extend_from_slice(r.coords());
                        out.push(Point::from_slice(&coords));
                    }
                }
                out
            }
        }
    }

    /// The canonical (first-listed) selection above the net point.
    pub fn first_selection(&self, index: usize) -> Point {
        match &self.repr {
            WeakRepr::Flat { selections, .. } => selections[index][0].clone(),
            WeakRepr::Product { left, right, .. } => {
                let (il, ir) = (index / right.len(), index % right.len());
                let mut coords = left.first_selection(il).into_coords();
                coords.extend_from_slice(right.first_selection(ir).coords());
                Point::from_slice(&coords)
            }
        }
    }

    /// Index of a net point closest to `p` in the max metric.
    pub fn nearest(&self, p: &[f64]) -> usize {
        match &self.repr {
            WeakRepr::Flat { net, .. } => net.nearest(p),
            WeakRepr::Product { left, right, twist } => {
                let (pl, pr) = if *twist {
                    let (r, l) = p.split_at(right.input_dim());
                    (l, r)
                } else {
                    p.split_at(left.input_dim())
                };
                left.nearest(pl) * right.len() + right.nearest(pr)
            }
        }
    }

    /// The net as a per-axis uniform lattice `(lower, upper, counts)` in
    /// input-axis order, when it has that shape; products of lattices
    /// compose (twist-aware). Lattice nets let the interpolation stage
    /// place its vertices exactly on net points.
    pub(crate) fn lattice(&self) -> Option<(Vec<f64>, Vec<f64>, Vec<usize>)> {
        match &self.repr {
            WeakRepr::Flat {
                net:
                    FlatNet::Grid {
                        lower,
                        upper,
                        counts,
                    },
                ..
            } => Some((lower.clone(), upper.clone(), counts.clone())),
            WeakRepr::Flat { .. } => None,
            WeakRepr::Product { left, right, twist } => {
                let (ll, lu, lc) = left.lattice()?;
                let (rl, ru, rc) = right.lattice()?;
                let ((mut lo, mut up, mut cnt), (tl, tu, tc)) = if *twist {
                    ((rl, ru, rc), (ll, lu, lc))
                } else {
                    ((ll, lu, lc), (rl, ru, rc))
                };
                lo.extend(tl);
                up.extend(tu);
                cnt.extend(tc);
                Some((lo, up, cnt))
            }
        }
    }

    /// Snap quality at `p`: the distance to the nearest net point as a
    /// fraction of `delta`, taken per component for products so that a
    /// factor with a looser `delta` is judged against its own scale. A
    /// net fine enough for the interpolation pipeline keeps this at or
    /// below `1/4` everywhere.
    pub(crate) fn snap_ratio(&self, p: &[f64]) -> f64 {
        match &self.repr {
            WeakRepr::Flat { net, .. } => {
                let s = net.point(net.nearest(p));
                Metric::Max.dist(&s, p) / self.delta
            }
            WeakRepr::Product { left, right, twist } => {
                let (pl, pr) = if *twist {
                    let (r, l) = p.split_at(right.input_dim());
                    (l, r)
                } else {
                    p.split_at(left.input_dim())
                };
                left.snap_ratio(pl).max(right.snap_ratio(pr))
            }
        }
    }
}

impl fmt::Debug for WeakApproxData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeakApproxData")
            .field("eps", &self.eps)
            .field("delta", &self.delta)
            .field("net_len", &self.len())
            .finish()
    }
}

#[derive(Clone)]
pub(crate) enum Approximability {
    Approximable { delta: ContinuityModulus },
    WeaklyApproximable { provider: Arc<ProviderFn> },
}

#[derive(Clone)]
enum Backend {
    Function {
        f: Arc<PointFn>,
        omega: ContinuityModulus,
    },
    Polygonal {
        segments: Vec<Segment>,
    },
    Product {
        first: Arc<SetValuedMap>,
        second: Arc<SetValuedMap>,
        /// With the twist, the first input block feeds `second` and the
        /// second block feeds `first`; outputs keep (first, second) order.
        twist: bool,
    },
    Oracle {
        select: Arc<PointFn>,
        fiber: Arc<FiberFn>,
        graph_distance: Arc<GraphDistFn>,
        graph_near: Arc<GraphNearFn>,
    },
}

/// A mapping `U` assigning each domain point a nonempty subset of the
/// codomain, represented through its graph `G(U)`.
#[derive(Clone)]
pub struct SetValuedMap {
    domain: Domain,
    codomain: Domain,
    backend: Backend,
    approx: Approximability,
    select_tol: f64,
    graph_tol: f64,
}

impl fmt::Debug for SetValuedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.backend {
            Backend::Function { .. } => "function",
            Backend::Polygonal { .. } => "polygonal",
            Backend::Product { .. } => "product",
            Backend::Oracle { .. } => "oracle",
        };
        f.debug_struct("SetValuedMap")
            .field("backend", &kind)
            .field("domain_dim", &self.domain.dim())
            .field("codomain_dim", &self.codomain.dim())
            .finish()
    }
}

impl SetValuedMap {
    /// The single-valued mapping `U(x) = {f(x)}` for a function with
    /// uniform continuity modulus `omega`.
    ///
    /// Construction sweeps a coarse net plus seeded random points and
    /// rejects `f` if any image leaves the domain. The approximability
    /// modulus is `min(eps, omega(eps))`: moving the argument by `d`
    /// moves graph points by at most `max(d, variation(d))` in the
    /// product max-metric.
    pub fn from_function<F>(f: F, omega: &ContinuityModulus, domain: Domain) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let f: Arc<PointFn> = Arc::new(f);
        let n = domain.dim();
        let pitch = (domain.diameter(Metric::Max) / 8.0).max(1e-6);
        let mut probes = domain.eps_net(pitch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1ab1e);
        probes.extend((0..64).map(|_| domain.sample(&mut rng)));
        for p in &probes {
            let image = f(p.coords());
            if image.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: image.len(),
                });
            }
            if !domain.contains(&image, EXACT_BACKEND_TOL) {
                return Err(Error::CodomainEscape {
                    point: p.coords().to_vec(),
                    image,
                });
            }
        }
        Ok(SetValuedMap {
            codomain: domain.clone(),
            domain,
            backend: Backend::Function {
                f,
                omega: omega.clone(),
            },
            approx: Approximability::Approximable {
                delta: omega.min_with_identity(),
            },
            select_tol: 0.0,
            graph_tol: FUNCTION_BACKEND_TOL,
        })
    }

    /// A one-dimensional mapping defined by the union of graph segments.
    ///
    /// Rejects graphs whose argument coverage has gaps (some fiber would
    /// be empty) and cross-checks the supplied modulus by sampling the
    /// approximability property at a few scales; a found violation
    /// aborts construction.
    pub fn from_polygonal_graph(
        segments: Vec<Segment>,
        domain: Domain,
        delta: ContinuityModulus,
    ) -> Result<Self> {
        let map = Self::polygonal_core(segments, domain, delta)?;
        let modulus = match &map.approx {
            Approximability::Approximable { delta } => delta.clone(),
            Approximability::WeaklyApproximable { .. } => unreachable!(),
        };
        for eps in SPOT_CHECK_EPS {
            let report = map.check_approximability(
                eps,
                modulus.delta(eps),
                SPOT_CHECK_TRIALS,
                SPOT_CHECK_SEED,
            )?;
            if let Some(v) = report.violation {
                return Err(Error::ApproximabilityViolation {
                    eps,
                    x: v.x.into_coords(),
                    x2: v.x_prime.into_coords(),
                    u: v.u.into_coords(),
                    u2: v.u_prime.into_coords(),
                    t: v.t,
                    dist: v.distance,
                });
            }
        }
        Ok(map)
    }

    /// [`Self::from_polygonal_graph`] without the modulus spot-check;
    /// for deliberately broken graphs fed to the falsifier.
    pub fn from_polygonal_graph_unchecked(
        segments: Vec<Segment>,
        domain: Domain,
        delta: ContinuityModulus,
    ) -> Result<Self> {
        Self::polygonal_core(segments, domain, delta)
    }

    fn polygonal_core(
        segments: Vec<Segment>,
        domain: Domain,
        delta: ContinuityModulus,
    ) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::InvalidDomain(
                "polygonal graphs require a one-dimensional domain".into(),
            ));
        }
        if segments.is_empty() {
            return Err(Error::EmptySet);
        }
        for seg in &segments {
            if seg.a.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: seg.a.dim(),
                });
            }
            for p in [&seg.a, &seg.b] {
                let (x, u) = (p.coords()[0], p.coords()[1]);
                if !domain.contains(&[x], EXACT_BACKEND_TOL)
                    || !domain.contains(&[u], EXACT_BACKEND_TOL)
                {
                    return Err(Error::InvalidDomain(format!(
                        "graph endpoint ({x}, {u}) leaves the domain product"
                    )));
                }
            }
        }

        // Every argument needs a graph point nearby in the first
        // coordinate; sweep the sorted segment shadows for gaps.
        let (lo, hi) = domain.bounding_box();
        let (lo, hi) = (lo[0], hi[0]);
        let mut shadows: Vec<(f64, f64)> = segments
            .iter()
            .map(|s| {
                let (ax, bx) = (s.a.coords()[0], s.b.coords()[0]);
                (ax.min(bx), ax.max(bx))
            })
            .collect();
        shadows.sort_by(|a, b| a.partial_cmp(b).expect("finite endpoints"));
        let mut reach = lo;
        for (l, h) in shadows {
            if l > reach + COVERAGE_GAP {
                return Err(Error::Construction(format!(
                    "graph leaves arguments in ({reach}, {l}) without any fiber"
                )));
            }
            reach = reach.max(h);
        }
        if reach < hi - COVERAGE_GAP {
            return Err(Error::Construction(format!(
                "graph leaves arguments in ({reach}, {hi}) without any fiber"
            )));
        }

        Ok(SetValuedMap {
            codomain: domain.clone(),
            domain,
            backend: Backend::Polygonal { segments },
            approx: Approximability::Approximable { delta },
            select_tol: EXACT_BACKEND_TOL,
            graph_tol: EXACT_BACKEND_TOL,
        })
    }

    /// The product mapping `(a, b) -> U1(a) x U2(b)`. Both factors must
    /// carry the same approximability kind; delta moduli combine as
    /// pointwise minima, weak providers as componentwise certificates.
    pub fn product(first: SetValuedMap, second: SetValuedMap) -> Result<Self> {
        Self::combine(first, second, false)
    }

    /// The crossed self-map `(a, b) -> U1(b) x U2(a)` for a pair whose
    /// codomains are each other's domains: its approximate fixed points
    /// are exactly the pairs with `a` near `U1(b)` and `b` near `U2(a)`.
    pub(crate) fn twisted_product(first: SetValuedMap, second: SetValuedMap) -> Result<Self> {
        Self::combine(first, second, true)
    }

    fn combine(first: SetValuedMap, second: SetValuedMap, twist: bool) -> Result<Self> {
        let domain = if twist {
            product_domain(&second.domain, &first.domain)?
        } else {
            product_domain(&first.domain, &second.domain)?
        };
        let codomain = product_domain(&first.codomain, &second.codomain)?;
        let approx = match (&first.approx, &second.approx) {
            (
                Approximability::Approximable { delta: d1 },
                Approximability::Approximable { delta: d2 },
            ) => Approximability::Approximable {
                delta: d1.pointwise_min(d2)?,
            },
            (
                Approximability::WeaklyApproximable { provider: p1 },
                Approximability::WeaklyApproximable { provider: p2 },
            ) => {
                let (p1, p2) = (p1.clone(), p2.clone());
                Approximability::WeaklyApproximable {
                    provider: Arc::new(move |eps| {
                        WeakApproxData::product(p1(eps)?, p2(eps)?, twist)
                    }),
                }
            }
            _ => {
                return Err(Error::Construction(
                    "product factors must share an approximability kind".into(),
                ))
            }
        };
        Ok(SetValuedMap {
            domain,
            codomain,
            select_tol: first.select_tol.max(second.select_tol),
            graph_tol: first.graph_tol.max(second.graph_tol),
            approx,
            backend: Backend::Product {
                first: Arc::new(first),
                second: Arc::new(second),
                twist,
            },
        })
    }

    /// Fully caller-supplied backend; the solver modules use this for
    /// maps whose graphs are decided by certified numerical tests.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_oracles(
        domain: Domain,
        codomain: Domain,
        select: Arc<PointFn>,
        fiber: Arc<FiberFn>,
        graph_distance: Arc<GraphDistFn>,
        graph_near: Arc<GraphNearFn>,
        approx: Approximability,
        select_tol: f64,
        graph_tol: f64,
    ) -> Self {
        SetValuedMap {
            domain,
            codomain,
            backend: Backend::Oracle {
                select,
                fiber,
                graph_distance,
                graph_near,
            },
            approx,
            select_tol,
            graph_tol,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn codomain(&self) -> &Domain {
        &self.codomain
    }

    /// Distance slack of [`Self::select`]: selected points sit on the
    /// graph within this tolerance.
    pub fn select_tol(&self) -> f64 {
        self.select_tol
    }

    /// Accuracy of [`Self::graph_distance`]; reported distances never
    /// undershoot and overshoot by at most this much.
    pub fn graph_tol(&self) -> f64 {
        self.graph_tol
    }

    pub fn is_approximable(&self) -> bool {
        matches!(self.approx, Approximability::Approximable { .. })
    }

    /// The combination modulus, when the map carries the uniform kind.
    pub fn delta_modulus(&self) -> Option<&ContinuityModulus> {
        match &self.approx {
            Approximability::Approximable { delta } => Some(delta),
            Approximability::WeaklyApproximable { .. } => None,
        }
    }

    /// Requests a weak-approximability certificate at tolerance `eps`.
    /// Errors for maps carrying a delta modulus; wrap those with
    /// [`Self::as_weakly_approximable`] first.
    pub fn weak_data(&self, eps: f64) -> Result<WeakApproxData> {
        match &self.approx {
            Approximability::WeaklyApproximable { provider } => provider(eps),
            Approximability::Approximable { .. } => Err(Error::Construction(
                "map carries a delta modulus; wrap it with as_weakly_approximable first".into(),
            )),
        }
    }

    /// Reinterprets an approximable map as weakly approximable: the
    /// provider nets the domain well inside the `delta(eps)/2` coverage
    /// requirement (snap distance at most `delta/8`, which interpolation
    /// consumers rely on) and takes the full fiber enumeration as
    /// selections.
    pub fn as_weakly_approximable(&self) -> Result<SetValuedMap> {
        let delta = match &self.approx {
            Approximability::Approximable { delta } => delta.clone(),
            Approximability::WeaklyApproximable { .. } => return Ok(self.clone()),
        };
        let inner = Arc::new(self.clone());
        let provider: Arc<ProviderFn> = Arc::new(move |eps| {
            if !(eps > 0.0) {
                return Err(Error::InvalidEps(eps));
            }
            let d = delta.delta(eps).min(eps / 2.0);
            let net = inner.domain.eps_net(d / 8.0)?;
            let selections = net
                .iter()
                .map(|s| inner.fiber(s))
                .collect::<Result<Vec<_>>>()?;
            WeakApproxData::explicit(eps, d, net, selections)
        });
        Ok(SetValuedMap {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            backend: self.backend.clone(),
            approx: Approximability::WeaklyApproximable { provider },
            select_tol: self.select_tol,
            graph_tol: self.graph_tol,
        })
    }

    /// Some `u` with `(x, u)` on the graph within [`Self::select_tol`].
    pub fn select(&self, x: &Point) -> Result<Point> {
        self.check_dim(x, self.domain.dim())?;
        Ok(Point::from_slice(&self.select_raw(x.coords())))
    }

    /// Deterministic enumeration of known fiber points over `x`, in
    /// ascending order where the codomain is one-dimensional. Singleton
    /// for function backends, vertical-intersection endpoints for
    /// polygonal ones, cartesian products for products.
    pub fn fiber(&self, x: &Point) -> Result<Vec<Point>> {
        self.check_dim(x, self.domain.dim())?;
        Ok(self
            .fiber_raw(x.coords())
            .into_iter()
            .map(|u| Point::from_slice(&u))
            .collect())
    }

    /// Distance from `(z, w)` to the graph in the product max-metric;
    /// exact up to [`Self::graph_tol`].
    pub fn graph_distance(&self, z: &Point, w: &Point) -> Result<f64> {
        self.check_dim(z, self.domain.dim())?;
        self.check_dim(w, self.codomain.dim())?;
        Ok(self.graph_distance_raw(z.coords(), w.coords()))
    }

    /// A graph point within `r` of `(z, w)`, or `None` certifying that no
    /// graph point lies within `r - graph_tol`.
    pub fn graph_near(&self, z: &Point, w: &Point, r: f64) -> Result<Option<(Point, Point)>> {
        self.check_dim(z, self.domain.dim())?;
        self.check_dim(w, self.codomain.dim())?;
        if !(r > 0.0) {
            return Err(Error::InvalidEps(r));
        }
        Ok(self
            .graph_near_raw(z.coords(), w.coords(), r)
            .map(|(x, u)| (Point::from_slice(&x), Point::from_slice(&u))))
    }

    fn check_dim(&self, p: &Point, expected: usize) -> Result<()> {
        if p.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: p.dim(),
            });
        }
        Ok(())
    }

    fn select_raw(&self, x: &[f64]) -> Vec<f64> {
        match &self.backend {
            Backend::Function { f, .. } => f(x),
            Backend::Polygonal { segments } => vec![polygonal_select(segments, x[0])],
            Backend::Product {
                first,
                second,
                twist,
            } => {
                let (a, b) = split_input(x, first, second, *twist);
                let mut out = first.select_raw(a);
                out.extend(second.select_raw(b));
                out
            }
            Backend::Oracle { select, .. } => select(x),
        }
    }

    fn fiber_raw(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match &self.backend {
            Backend::Function { f, .. } => vec![f(x)],
            Backend::Polygonal { segments } => polygonal_fiber(segments, x[0])
                .into_iter()
                .map(|u| vec![u])
                .collect(),
            Backend::Product {
                first,
                second,
                twist,
            } => {
                let (a, b) = split_input(x, first, second, *twist);
                let fa = first.fiber_raw(a);
                let fb = second.fiber_raw(b);
                let mut out = Vec::with_capacity(fa.len() * fb.len());
                for ua in &fa {
                    for ub in &fb {
                        let mut u = ua.clone();
                        u.extend_from_slice(ub);
                        out.push(u);
                    }
                }
                out
            }
            Backend::Oracle { fiber, .. } => fiber(x),
        }
    }

    fn graph_distance_raw(&self, z: &[f64], w: &[f64]) -> f64 {
        match &self.backend {
            Backend::Function { f, omega } => {
                function_graph_search(f, omega, &self.domain, &self.codomain, z, w, None).0
            }
            Backend::Polygonal { segments } => polygonal_distance(segments, z[0], w[0]).0,
            Backend::Product {
                first,
                second,
                twist,
            } => {
                let (za, zb) = split_input(z, first, second, *twist);
                let (wa, wb) = w.split_at(first.codomain.dim());
                first
                    .graph_distance_raw(za, wa)
                    .max(second.graph_distance_raw(zb, wb))
            }
            Backend::Oracle { graph_distance, .. } => graph_distance(z, w),
        }
    }

    fn graph_near_raw(&self, z: &[f64], w: &[f64], r: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.backend {
            Backend::Function { f, omega } => {
                let (d, x) =
                    function_graph_search(f, omega, &self.domain, &self.codomain, z, w, Some(r));
                if d <= r {
                    let u = f(&x);
                    Some((x, u))
                } else {
                    None
                }
            }
            Backend::Polygonal { segments } => {
                let (d, x, u) = polygonal_distance(segments, z[0], w[0]);
                if d <= r {
                    Some((vec![x], vec![u]))
                } else {
                    None
                }
            }
            Backend::Product {
                first,
                second,
                twist,
            } => {
                let (za, zb) = split_input(z, first, second, *twist);
                let (wa, wb) = w.split_at(first.codomain.dim());
                let (xa, ua) = first.graph_near_raw(za, wa, r)?;
                let (xb, ub) = second.graph_near_raw(zb, wb, r)?;
                let x = if *twist {
                    let mut x = xb;
                    x.extend_from_slice(&xa);
                    x
                } else {
                    let mut x = xa;
                    x.extend_from_slice(&xb);
                    x
                };
                let mut u = ua;
                u.extend_from_slice(&ub);
                Some((x, u))
            }
            Backend::Oracle { graph_near, .. } => graph_near(z, w, r),
        }
    }

    /// Samples the approximability property: argument pairs closer than
    /// `delta`, every known fiber pair above them, and a fixed spread of
    /// combination weights. Reports the first violating triple in trial
    /// order; deterministic for a given seed.
    pub fn check_approximability(
        &self,
        eps: f64,
        delta: f64,
        trials: u32,
        seed: u64,
    ) -> Result<ApproxReport> {
        if !(eps > 0.0) {
            return Err(Error::InvalidEps(eps));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidEps(delta));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.domain.dim();
        for _ in 0..trials {
            let x = self.domain.sample(&mut rng);
            let jitter: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-delta..delta) * (1.0 - 1e-12))
                .collect();
            let shifted: Vec<f64> = x.coords().iter().zip(&jitter).map(|(a, d)| a + d).collect();
            let mut x2 = self.domain.project(&Point::from_slice(&shifted))?;
            // Projection keeps boxes within the jitter radius; hulls can
            // stretch max-metric distances, so contract toward x there.
            for _ in 0..64 {
                if Metric::Max.dist(x.coords(), x2.coords()) < delta {
                    break;
                }
                x2 = Point::from_slice(&affine_combo(0.5, x.coords(), x2.coords()));
            }
            let t_draw = rng.random_range(0.0..1.0);
            let fiber_x = self.fiber_raw(x.coords());
            let fiber_x2 = self.fiber_raw(x2.coords());
            for u in &fiber_x {
                for u2 in &fiber_x2 {
                    for t in [0.0, 0.25, 0.5, 0.75, 1.0, t_draw] {
                        let z_t = affine_combo(t, x.coords(), x2.coords());
                        let u_t = affine_combo(t, u, u2);
                        let distance = self.graph_distance_raw(&z_t, &u_t);
                        if distance >= eps {
                            return Ok(ApproxReport {
                                passed: false,
                                violation: Some(ApproxViolation {
                                    x: x.clone(),
                                    x_prime: x2.clone(),
                                    u: Point::from_slice(u),
                                    u_prime: Point::from_slice(u2),
                                    t,
                                    distance,
                                }),
                                trials,
                            });
                        }
                    }
                }
            }
        }
        Ok(ApproxReport {
            passed: true,
            violation: None,
            trials,
        })
    }

    /// The fiber point over `x` closest to `w`, including interior
    /// points of continuum fibers where the backend can parameterize
    /// them; decomposes componentwise over products. Used by residual
    /// certification.
    pub(crate) fn nearest_fiber_point(&self, x: &[f64], w: &[f64]) -> Vec<f64> {
        match &self.backend {
            Backend::Function { f, .. } => f(x),
            Backend::Polygonal { segments } => {
                let mut best: Option<(f64, f64)> = None;
                for seg in segments {
                    let (a, b) = (seg.a.coords(), seg.b.coords());
                    let (ax, au, bx, bu) = (a[0], a[1], b[0], b[1]);
                    if x[0] < ax.min(bx) - 1e-12 || x[0] > ax.max(bx) + 1e-12 {
                        continue;
                    }
                    let u = if (bx - ax).abs() <= 1e-12 {
                        w[0].clamp(au.min(bu), au.max(bu))
                    } else {
                        let t = ((x[0] - ax) / (bx - ax)).clamp(0.0, 1.0);
                        au + t * (bu - au)
                    };
                    let d = (u - w[0]).abs();
                    if best.map_or(true, |(bd, bu)| d < bd - 1e-15 || (d < bd + 1e-15 && u < bu)) {
                        best = Some((d, u));
                    }
                }
                vec![best.map_or_else(|| polygonal_select(segments, x[0]), |(_, u)| u)]
            }
            Backend::Product {
                first,
                second,
                twist,
            } => {
                let (xa, xb) = split_input(x, first, second, *twist);
                let (wa, wb) = w.split_at(first.codomain.dim());
                let mut out = first.nearest_fiber_point(xa, wa);
                out.extend(second.nearest_fiber_point(xb, wb));
                out
            }
            Backend::Oracle { select, fiber, .. } => {
                let candidates = fiber(x);
                candidates
                    .into_iter()
                    .min_by(|a, b| {
                        Metric::Max
                            .dist(a, w)
                            .partial_cmp(&Metric::Max.dist(b, w))
                            .expect("finite fiber distances")
                    })
                    .unwrap_or_else(|| select(x))
            }
        }
    }
}

/// Splits a product-map argument into the blocks feeding each factor.
fn split_input<'a>(
    x: &'a [f64],
    first: &SetValuedMap,
    second: &SetValuedMap,
    twist: bool,
) -> (&'a [f64], &'a [f64]) {
    if twist {
        let (b, a) = x.split_at(second.domain.dim());
        (a, b)
    } else {
        x.split_at(first.domain.dim())
    }
}

fn product_domain(a: &Domain, b: &Domain) -> Result<Domain> {
    match (a, b) {
        (
            Domain::Box {
                lower: la,
                upper: ua,
            },
            Domain::Box {
                lower: lb,
                upper: ub,
            },
        ) => {
            let mut lower = la.clone();
            lower.extend_from_slice(lb);
            let mut upper = ua.clone();
            upper.extend_from_slice(ub);
            Domain::make_box(lower, upper)
        }
        _ => {
            // conv(A) x conv(B) = conv(A x B), so cross the generator
            // (or corner) sets.
            let ga = domain_generators(a);
            let gb = domain_generators(b);
            let mut generators = Vec::with_capacity(ga.len() * gb.len());
            for p in &ga {
                for q in &gb {
                    let mut coords = p.clone();
                    coords.extend_from_slice(q);
                    generators.push(Point::from_slice(&coords));
                }
            }
            Domain::hull(generators)
        }
    }
}

fn domain_generators(d: &Domain) -> Vec<Vec<f64>> {
    match d {
        Domain::Hull { generators } => generators.iter().map(|g| g.coords().to_vec()).collect(),
        Domain::Box { lower, upper } => {
            let n = lower.len();
            (0..1usize << n)
                .map(|mask| {
                    (0..n)
                        .map(|j| {
                            if mask >> j & 1 == 1 {
                                upper[j]
                            } else {
                                lower[j]
                            }
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Max-metric distance from `(z, w)` to one graph segment, with the
/// minimizing parameter. The objective `max(|px(t)|, |pu(t)|)` with
/// affine `px`, `pu` is convex piecewise linear; the minimum over [0, 1]
/// sits at an endpoint, a kink of either absolute value, or a crossing.
fn segment_distance(seg: &Segment, z: f64, w: f64) -> (f64, f64) {
    let (a, b) = (seg.a.coords(), seg.b.coords());
    let (px0, pxs) = (a[0] - z, b[0] - a[0]);
    let (pu0, pus) = (a[1] - w, b[1] - a[1]);
    let mut candidates = [0.0f64, 1.0, -1.0, -1.0, -1.0, -1.0];
    let mut used = 2;
    for (num, den) in [
        (px0, pxs),
        (pu0, pus),
        (px0 - pu0, pxs - pus),
        (px0 + pu0, pxs + pus),
    ] {
        if den != 0.0 {
            candidates[used] = -num / den;
            used += 1;
        }
    }
    let mut best = (f64::INFINITY, 0.0);
    for &t in &candidates[..used] {
        let t = t.clamp(0.0, 1.0);
        let value = (px0 + t * pxs).abs().max((pu0 + t * pus).abs());
        if value < best.0 {
            best = (value, t);
        }
    }
    best
}

/// Exact distance to the segment union plus the witnessing graph point.
fn polygonal_distance(segments: &[Segment], z: f64, w: f64) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for seg in segments {
        let (d, t) = segment_distance(seg, z, w);
        if d < best.0 {
            let (a, b) = (seg.a.coords(), seg.b.coords());
            best = (
                d,
                a[0] + t * (b[0] - a[0]),
                a[1] + t * (b[1] - a[1]),
            );
        }
    }
    best
}

/// Intersections of the vertical line at `x` with the segment union,
/// ascending and deduplicated. Vertical segments contribute both
/// endpoints.
fn polygonal_fiber(segments: &[Segment], x: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for seg in segments {
        let (a, b) = (seg.a.coords(), seg.b.coords());
        let (ax, au, bx, bu) = (a[0], a[1], b[0], b[1]);
        if x < ax.min(bx) - 1e-12 || x > ax.max(bx) + 1e-12 {
            continue;
        }
        if (bx - ax).abs() <= 1e-12 {
            out.push(au);
            out.push(bu);
        } else {
            let t = ((x - ax) / (bx - ax)).clamp(0.0, 1.0);
            out.push(au + t * (bu - au));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite fiber"));
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    out
}

/// Lowest fiber point, falling back to the value of the argument-nearest
/// graph point for arguments outside the covered shadow.
fn polygonal_select(segments: &[Segment], x: f64) -> f64 {
    let fiber = polygonal_fiber(segments, x);
    if let Some(&lowest) = fiber.first() {
        return lowest;
    }
    let mut best = (f64::INFINITY, f64::INFINITY);
    for seg in segments {
        let (a, b) = (seg.a.coords(), seg.b.coords());
        let (ax, bx) = (a[0], b[0]);
        let t = if (bx - ax).abs() <= 1e-12 {
            0.0
        } else {
            ((x - ax) / (bx - ax)).clamp(0.0, 1.0)
        };
        let dist = (ax + t * (bx - ax) - x).abs();
        let u = a[1] + t * (b[1] - a[1]);
        if dist < best.0 - 1e-12 || (dist < best.0 + 1e-12 && u < best.1) {
            best = (dist, u);
        }
    }
    best.1
}

/// Branch-and-bound minimization of `max(dist(z, x), dist(w, f(x)))`
/// over the domain, accurate within [`FUNCTION_BACKEND_TOL`]. Returns
/// the best value and its argument; with `stop_below` set, returns as
/// soon as any point reaches that level.
fn function_graph_search(
    f: &Arc<PointFn>,
    omega: &ContinuityModulus,
    domain: &Domain,
    codomain: &Domain,
    z: &[f64],
    w: &[f64],
    stop_below: Option<f64>,
) -> (f64, Vec<f64>) {
    let tol = FUNCTION_BACKEND_TOL;
    let spread = codomain.diameter(Metric::Max).max(tol);
    let variation = |h: f64| -> f64 {
        omega
            .variation_bound(h)
            .map_or(spread, |v| v.min(spread))
    };
    let mut h_min = tol / 2.0;
    while h_min + variation(h_min) > tol && h_min > f64::MIN_POSITIVE {
        h_min /= 2.0;
    }

    let boxed = matches!(domain, Domain::Box { .. });
    let evaluate = |x: &[f64]| -> (f64, Vec<f64>) {
        let fx = f(x);
        let value = Metric::Max.dist(z, x).max(Metric::Max.dist(w, &fx));
        (value, fx)
    };
    let feasible = |c: &[f64]| -> Option<Vec<f64>> {
        if boxed {
            Some(c.to_vec())
        } else {
            let proj = domain
                .project(&Point::from_slice(c))
                .expect("dimension checked")
                .into_coords();
            Some(proj)
        }
    };

    let (lo, hi) = domain.bounding_box();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, u)| (l + u) / 2.0).collect();
    let half: Vec<f64> = lo.iter().zip(&hi).map(|(l, u)| (u - l) / 2.0).collect();

    // Warm start at the argument itself: for near-graph queries this is
    // already close to optimal and makes the pruning bite immediately.
    let start = domain
        .project(&Point::from_slice(z))
        .expect("dimension checked")
        .into_coords();
    let (mut best, _) = evaluate(&start);
    let mut best_x = start;
    if let Some(limit) = stop_below {
        if best <= limit {
            return (best, best_x);
        }
    }

    let mut stack = vec![(center, half)];
    while let Some((c, h)) = stack.pop() {
        let h_max = h.iter().cloned().fold(0.0f64, f64::max);
        let point = match feasible(&c) {
            Some(p) => p,
            None => continue,
        };
        if !boxed && Metric::Max.dist(&point, &c) > h_max * (c.len() as f64).sqrt() {
            continue; // cell misses the hull entirely
        }
        let (value, fc) = evaluate(&point);
        if value < best {
            best = value;
            best_x = point.clone();
            if let Some(limit) = stop_below {
                if best <= limit {
                    return (best, best_x);
                }
            }
        }
        if h_max <= h_min {
            continue;
        }
        let z_bound = z
            .iter()
            .zip(&c)
            .zip(&h)
            .map(|((zj, cj), hj)| (zj - cj).abs() - hj)
            .fold(0.0f64, f64::max);
        let mut lower = z_bound;
        if boxed {
            lower = lower.max(Metric::Max.dist(w, &fc) - variation(h_max));
        }
        if lower >= best - tol {
            continue;
        }
        let axis = h
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite half"))
            .map(|(j, _)| j)
            .expect("nonempty dims");
        for sign in [-1.0, 1.0] {
            let mut child_c = c.clone();
            let mut child_h = h.clone();
            child_h[axis] /= 2.0;
            child_c[axis] += sign * child_h[axis];
            stack.push((child_c, child_h));
        }
    }
    (best, best_x)
}

/// Hand-wired oracle maps for exercising solver failure paths.
#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    fn identity_oracles() -> (Arc<PointFn>, Arc<FiberFn>, Arc<GraphDistFn>) {
        let select: Arc<PointFn> = Arc::new(|x: &[f64]| x.to_vec());
        let fiber: Arc<FiberFn> = Arc::new(|x: &[f64]| vec![x.to_vec()]);
        // dist((z, w), identity graph) = |z - w| / 2 under the max metric.
        let dist: Arc<GraphDistFn> =
            Arc::new(|z: &[f64], w: &[f64]| (z[0] - w[0]).abs() / 2.0);
        (select, fiber, dist)
    }

    fn identity_provider(shrink: f64) -> Arc<ProviderFn> {
        Arc::new(move |eps: f64| {
            if !(eps > 0.0) {
                return Err(Error::InvalidEps(eps));
            }
            let delta = eps * shrink;
            let pitch = delta / 4.0;
            let count = (1.0 / pitch).ceil() as usize + 1;
            let net: Vec<Point> = (0..count)
                .map(|i| Point::from_slice(&[(i as f64 * pitch).min(1.0)]))
                .collect();
            let selections = net.iter().map(|p| vec![p.clone()]).collect();
            WeakApproxData::explicit(eps * 2.0, delta, net, selections)
        })
    }

    /// Identity on the unit interval with a valid weak certificate but a
    /// graph search that never yields a witness.
    pub(crate) fn oracle_identity_no_witness() -> SetValuedMap {
        let (select, fiber, dist) = identity_oracles();
        let near: Arc<GraphNearFn> = Arc::new(|_: &[f64], _: &[f64], _: f64| None);
        SetValuedMap::from_oracles(
            Domain::unit_box(1),
            Domain::unit_box(1),
            select,
            fiber,
            dist,
            near,
            Approximability::WeaklyApproximable {
                provider: identity_provider(0.5),
            },
            0.0,
            1e-9,
        )
    }

    /// Identity whose certificate provider answers with a step equal to
    /// the requested tolerance instead of undercutting it.
    pub(crate) fn oracle_identity_static_delta() -> SetValuedMap {
        let (select, fiber, dist) = identity_oracles();
        let near: Arc<GraphNearFn> = Arc::new(|z: &[f64], w: &[f64], r: f64| {
            let mid = (z[0] + w[0]) / 2.0;
            if (z[0] - mid).abs().max((w[0] - mid).abs()) <= r {
                Some((vec![mid], vec![mid]))
            } else {
                None
            }
        });
        SetValuedMap::from_oracles(
            Domain::unit_box(1),
            Domain::unit_box(1),
            select,
            fiber,
            dist,
            near,
            Approximability::WeaklyApproximable {
                provider: identity_provider(1.0),
            },
            0.0,
            1e-9,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain {
        Domain::unit_box(1)
    }

    fn seg(ax: f64, au: f64, bx: f64, bu: f64) -> Segment {
        Segment::new(Point::from_slice(&[ax, au]), Point::from_slice(&[bx, bu])).unwrap()
    }

    /// Step mapping defined by its graph: value 0 left of 1/2, the full
    /// unit fiber at 1/2, value 1 right of it.
    fn step_map() -> SetValuedMap {
        SetValuedMap::from_polygonal_graph(
            vec![
                seg(0.0, 0.0, 0.5, 0.0),
                seg(0.5, 0.0, 0.5, 1.0),
                seg(0.5, 1.0, 1.0, 1.0),
            ],
            unit(),
            ContinuityModulus::lipschitz(1.0).unwrap(),
        )
        .unwrap()
    }

    /// The same graph with the vertical fiber removed: a genuine jump.
    fn jump_map() -> SetValuedMap {
        SetValuedMap::from_polygonal_graph_unchecked(
            vec![seg(0.0, 0.0, 0.5, 0.0), seg(0.5, 1.0, 1.0, 1.0)],
            unit(),
            ContinuityModulus::lipschitz(1.0).unwrap(),
        )
        .unwrap()
    }

    fn one_minus_x() -> SetValuedMap {
        SetValuedMap::from_function(
            |x: &[f64]| vec![1.0 - x[0]],
            &ContinuityModulus::lipschitz(1.0).unwrap(),
            unit(),
        )
        .unwrap()
    }

    fn identity_map() -> SetValuedMap {
        SetValuedMap::from_function(
            |x: &[f64]| x.to_vec(),
            &ContinuityModulus::lipschitz(1.0).unwrap(),
            unit(),
        )
        .unwrap()
    }

    fn pt(coords: &[f64]) -> Point {
        Point::from_slice(coords)
    }

    #[test]
    fn step_map_fibers_and_selection() {
        let m = step_map();
        assert_eq!(m.select(&pt(&[0.25])).unwrap().coords(), &[0.0]);
        assert_eq!(m.select(&pt(&[0.75])).unwrap().coords(), &[1.0]);
        // The jump argument selects the lowest fiber point.
        assert_eq!(m.select(&pt(&[0.5])).unwrap().coords(), &[0.0]);
        let fiber = m.fiber(&pt(&[0.5])).unwrap();
        let values: Vec<f64> = fiber.iter().map(|p| p.coords()[0]).collect();
        assert_eq!(values, vec![0.0, 1.0]);
        assert_eq!(m.fiber(&pt(&[0.25])).unwrap().len(), 1);
    }

    #[test]
    fn step_map_graph_distance() {
        let m = step_map();
        assert!(m.graph_distance(&pt(&[0.5]), &pt(&[0.5])).unwrap() <= 1e-12);
        // Nearest graph point to (0.25, 0.3) is (0.5, 0.3) on the
        // vertical segment, at max-distance 0.25.
        let d = m.graph_distance(&pt(&[0.25]), &pt(&[0.3])).unwrap();
        assert!((d - 0.25).abs() <= 1e-12);
        let near = m.graph_near(&pt(&[0.25]), &pt(&[0.3]), 0.3).unwrap();
        let (x, u) = near.expect("within 0.3");
        assert!(Metric::Max.dist(&[x.coords()[0], u.coords()[0]], &[0.25, 0.3]) <= 0.3);
        assert!(m.graph_near(&pt(&[0.25]), &pt(&[0.3]), 0.2).unwrap().is_none());
    }

    #[test]
    fn segment_distance_matches_parameter_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let s = seg(
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            );
            let z = rng.random_range(-0.5..1.5);
            let w = rng.random_range(-0.5..1.5);
            let (exact, _) = segment_distance(&s, z, w);
            let (a, b) = (s.a.coords().to_vec(), s.b.coords().to_vec());
            let mut scan = f64::INFINITY;
            for i in 0..=10_000 {
                let t = i as f64 / 10_000.0;
                let x = a[0] + t * (b[0] - a[0]);
                let u = a[1] + t * (b[1] - a[1]);
                scan = scan.min((x - z).abs().max((u - w).abs()));
            }
            assert!(
                exact <= scan + 1e-12 && exact >= scan - 2e-4,
                "exact {exact} vs scan {scan}"
            );
        }
    }

    #[test]
    fn function_map_distances() {
        let m = one_minus_x();
        assert!(m.graph_distance(&pt(&[0.3]), &pt(&[0.7])).unwrap() <= m.graph_tol());
        // Frozen from a 1e-5-pitch scan of max(|0.5 - x|, |0 - (1 - x)|):
        // the nearest graph point is (0.75, 0.25).
        let d = m.graph_distance(&pt(&[0.5]), &pt(&[0.0])).unwrap();
        assert!((d - 0.25).abs() <= 2.0 * m.graph_tol(), "d = {d}");
        assert_eq!(m.select(&pt(&[0.2])).unwrap().coords(), &[0.8]);

        let id = identity_map();
        assert!(id.graph_distance(&pt(&[0.3]), &pt(&[0.3])).unwrap() <= id.graph_tol());

        assert!(m.graph_near(&pt(&[0.5]), &pt(&[0.0]), 0.3).unwrap().is_some());
        assert!(m.graph_near(&pt(&[0.5]), &pt(&[0.0]), 0.2).unwrap().is_none());
    }

    #[test]
    fn function_construction_rejects_codomain_escape() {
        let out = SetValuedMap::from_function(
            |x: &[f64]| vec![2.0 * x[0]],
            &ContinuityModulus::lipschitz(2.0).unwrap(),
            unit(),
        );
        assert!(matches!(out, Err(Error::CodomainEscape { .. })));
    }

    #[test]
    fn product_acts_componentwise() {
        let p = SetValuedMap::product(identity_map(), identity_map()).unwrap();
        assert_eq!(p.domain().dim(), 2);
        assert_eq!(
            p.select(&pt(&[0.3, 0.7])).unwrap().coords(),
            &[0.3, 0.7]
        );
        // Identity graph distance is |z - w| / 2 per component; the
        // product takes the max.
        let d = p
            .graph_distance(&pt(&[0.3, 0.7]), &pt(&[0.4, 0.5]))
            .unwrap();
        assert!((d - 0.1).abs() <= 2.0 * p.graph_tol());

        // Components at distances 0.1 and 0.3 combine to 0.3.
        let q = SetValuedMap::product(one_minus_x(), one_minus_x()).unwrap();
        let d = q
            .graph_distance(&pt(&[0.6, 0.8]), &pt(&[0.6, 0.8]))
            .unwrap();
        assert!((d - 0.3).abs() <= 2.0 * q.graph_tol(), "d = {d}");
    }

    #[test]
    fn product_requires_matching_kinds() {
        let weak = identity_map().as_weakly_approximable().unwrap();
        assert!(SetValuedMap::product(identity_map(), weak).is_err());
    }

    #[test]
    fn twisted_product_crosses_arguments() {
        let t =
            SetValuedMap::twisted_product(one_minus_x(), identity_map()).unwrap();
        // First block feeds the identity factor, second feeds 1 - y; the
        // output keeps (first, second) = (1 - y, x) order.
        let s = t.select(&pt(&[0.2, 0.4])).unwrap();
        assert_eq!(s.coords(), &[0.6, 0.2]);
        let d = t
            .graph_distance(&pt(&[0.2, 0.4]), &pt(&[0.6, 0.2]))
            .unwrap();
        assert!(d <= t.graph_tol());
    }

    #[test]
    fn approximability_spot_checks() {
        for (map, eps, delta) in [
            (identity_map(), 0.1, 0.1),
            (step_map(), 0.1, 0.1),
            (one_minus_x(), 0.05, 0.05),
        ] {
            let report = map.check_approximability(eps, delta, 300, 7).unwrap();
            assert!(report.passed, "violation: {:?}", report.violation);
        }
    }

    #[test]
    fn jump_map_is_falsified() {
        // The validated constructor already rejects the jump graph...
        let rejected = SetValuedMap::from_polygonal_graph(
            vec![seg(0.0, 0.0, 0.5, 0.0), seg(0.5, 1.0, 1.0, 1.0)],
            unit(),
            ContinuityModulus::lipschitz(1.0).unwrap(),
        );
        assert!(matches!(
            rejected,
            Err(Error::ApproximabilityViolation { .. })
        ));
        // ...and the falsifier pins the violation: combination midpoints
        // over the jump sit about 1/2 away from both horizontal pieces.
        let report = jump_map()
            .check_approximability(0.4, 0.1, 1000, 3)
            .unwrap();
        assert!(!report.passed);
        let v = report.violation.expect("violation recorded");
        assert!(v.distance >= 0.4);
        assert!((v.x.coords()[0] - 0.5).abs() < 0.1 + 1e-9);
    }

    #[test]
    fn polygonal_coverage_gap_rejected() {
        let out = SetValuedMap::from_polygonal_graph(
            vec![seg(0.0, 0.0, 0.4, 0.0)],
            unit(),
            ContinuityModulus::lipschitz(1.0).unwrap(),
        );
        assert!(matches!(out, Err(Error::Construction(_))));
    }

    #[test]
    fn weak_wrapper_certificates() {
        let m = step_map().as_weakly_approximable().unwrap();
        let data = m.weak_data(0.3).unwrap();
        assert!(data.delta() > 0.0 && data.delta() < 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = m.domain().sample(&mut rng);
            let i = data.nearest(x.coords());
            let s = data.net_point(i);
            assert!(
                Metric::Max.dist(x.coords(), s.coords()) <= data.delta() / 2.0 + 1e-9,
                "net misses {x:?}"
            );
        }
        for i in 0..data.len() {
            let s = data.net_point(i);
            for u in data.selections(i) {
                let d = m.graph_distance(&s, &u).unwrap();
                assert!(d <= m.graph_tol() + 1e-9);
            }
        }
        // The canonical selection is the lowest fiber point.
        let mid = data.nearest(&[0.5]);
        assert_eq!(data.first_selection(mid).coords(), &[0.0]);
    }

    #[test]
    fn weak_product_data_wiring() {
        let left = WeakApproxData::explicit(
            0.4,
            0.2,
            vec![pt(&[0.0]), pt(&[1.0])],
            vec![vec![pt(&[10.0])], vec![pt(&[11.0])]],
        )
        .unwrap();
        let right = WeakApproxData::explicit(
            0.4,
            0.1,
            vec![pt(&[0.5])],
            vec![vec![pt(&[20.0]), pt(&[21.0])]],
        )
        .unwrap();
        let p = WeakApproxData::product(left, right, true).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.delta(), 0.1);
        // Twisted input layout (right block first), plain output layout.
        assert_eq!(p.net_point(0).coords(), &[0.5, 0.0]);
        assert_eq!(p.net_point(1).coords(), &[0.5, 1.0]);
        assert_eq!(p.first_selection(0).coords(), &[10.0, 20.0]);
        let all: Vec<Vec<f64>> = p
            .selections(0)
            .iter()
            .map(|q| q.coords().to_vec())
            .collect();
        assert_eq!(all, vec![vec![10.0, 20.0], vec![10.0, 21.0]]);
        assert_eq!(p.nearest(&[0.5, 0.9]), 1);
    }

    #[test]
    fn weak_data_validation() {
        assert!(WeakApproxData::explicit(0.1, 0.1, vec![pt(&[0.0])], vec![vec![pt(&[0.0])]])
            .is_err());
        assert!(WeakApproxData::explicit(0.1, 0.05, vec![pt(&[0.0])], vec![vec![]]).is_err());
        assert!(WeakApproxData::explicit(0.1, 0.05, vec![], vec![]).is_err());
    }
}
