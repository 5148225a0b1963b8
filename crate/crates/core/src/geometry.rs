//! Points, compact convex domains, and the metric toolbox.
//!
//! Two domain shapes cover everything the solvers need: axis-aligned boxes
//! and convex hulls of finitely many generators. The default metric is the
//! max (l-infinity) metric, so product domains compose without hidden
//! `sqrt(n)` factors; the euclidean metric is available everywhere.
//!
//! [`Domain::project`] is the metric projection in the *euclidean* norm (the
//! unique closest point of a compact convex set). For boxes that coincides
//! with the componentwise clamp and is nonexpansive in both metrics; for
//! hulls nonexpansiveness is a euclidean fact and does not hold for the max
//! metric in general.

use crate::par;
use crate::{Error, Result};
use rand::Rng;

/// Hard cap on generated net sizes, independent of caller-supplied caps.
pub(crate) const MAX_NET_POINTS: u64 = 1 << 24;

/// Stop refining a hull projection once the squared distance improves by
/// less than this.
const PROJECTION_CONVERGENCE: f64 = 1e-14;

/// Weights below this are dropped from the active set during polish.
const ACTIVE_WEIGHT_FLOOR: f64 = 1e-12;

/// A point of R^n, n >= 1, all coordinates finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("zero coordinates".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate {c}")));
        }
        Ok(Point { coords })
    }

    /// Panics on invalid input; for literals in tests and internal code.
    pub fn from_slice(coords: &[f64]) -> Self {
        Point::new(coords.to_vec()).expect("valid point literal")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Metric {
    Euclidean,
    /// l-infinity; the crate-wide default.
    #[default]
    Max,
}

impl Metric {
    /// Distance between two slices of equal length.
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Max => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn dist_points(self, a: &Point, b: &Point) -> Result<f64> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        Ok(self.dist(a.coords(), b.coords()))
    }
}

/// `t*a + (1-t)*b`, componentwise.
pub(crate) fn affine_combo(t: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect()
}

/// A compact convex subset of R^n.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// `{ x : lower <= x <= upper }`, componentwise. Degenerate axes
    /// (`lower == upper`) are allowed.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Convex hull of finitely many generators.
    Hull { generators: Vec<Point> },
}

impl Domain {
    pub fn make_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let lo = Point::new(lower)?;
        let hi = Point::new(upper.clone())?;
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        if lo.coords().iter().zip(hi.coords()).any(|(l, u)| l > u) {
            return Err(Error::InvalidDomain("lower exceeds upper".into()));
        }
        Ok(Domain::Box {
            lower: lo.into_coords(),
            upper,
        })
    }

    pub fn unit_box(n: usize) -> Self {
        Domain::make_box(vec![0.0; n], vec![1.0; n]).expect("unit box")
    }

    pub fn hull(generators: Vec<Point>) -> Result<Self> {
        let first = generators.first().ok_or(Error::EmptySet)?;
        let n = first.dim();
        if let Some(g) = generators.iter().find(|g| g.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.dim(),
            });
        }
        Ok(Domain::Hull { generators })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Hull { generators } => generators[0].dim(),
        }
    }

    /// Membership up to `tol` in the max metric (euclidean distance for
    /// hulls, which only tightens the test).
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            Domain::Hull { generators } => {
                let (q, _) = project_hull(generators, x);
                Metric::Euclidean.dist(&q, x) <= tol
            }
        }
    }

    /// Euclidean metric projection onto the domain.
    ///
    /// Boxes clamp componentwise, which is exact and bit-stable. Hulls
    /// minimize `|x - sum l_i g_i|^2` over simplex weights by projected
    /// gradient descent, then polish the active set by solving the
    /// equality-constrained least-squares problem exactly.
    pub fn project(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        match self {
            Domain::Box { lower, upper } => {
                let coords = x
                    .coords()
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(v, (l, u))| v.clamp(*l, *u))
                    .collect();
                Point::new(coords)
            }
            Domain::Hull { generators } => {
                let (q, _) = project_hull(generators, x.coords());
                Point::new(q)
            }
        }
    }

    /// Smallest axis-aligned box containing the domain.
    pub(crate) fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Hull { generators } => {
                let n = generators[0].dim();
                let mut lo = vec![f64::INFINITY; n];
                let mut hi = vec![f64::NEG_INFINITY; n];
                for g in generators {
                    for (j, c) in g.coords().iter().enumerate() {
                        lo[j] = lo[j].min(*c);
                        hi[j] = hi[j].max(*c);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Diameter in the given metric: `dist(lower, upper)` for boxes, the
    /// largest pairwise generator distance for hulls.
    pub fn diameter(&self, metric: Metric) -> f64 {
        match self {
            Domain::Box { lower, upper } => metric.dist(lower, upper),
            Domain::Hull { generators } => {
                let mut best = 0.0f64;
                for (i, a) in generators.iter().enumerate() {
                    for b in &generators[i + 1..] {
                        best = best.max(metric.dist(a.coords(), b.coords()));
                    }
                }
                best
            }
        }
    }

    /// A finite net whose points lie in the domain and cover it within
    /// `eps` in the max metric.
    ///
    /// Boxes get the axis-aligned uniform grid with the largest pitch
    /// `h <= eps` dividing each side length evenly. Hulls grid their
    /// bounding box at pitch `eps / sqrt(n)` and project every grid point
    /// into the hull; projection shrinks euclidean distances, so coverage
    /// survives with the `sqrt(n)` allowance.
    pub fn eps_net(&self, eps: f64) -> Result<Vec<Point>> {
        if !(eps > 0.0) {
            return Err(Error::InvalidEps(eps));
        }
        match self {
            Domain::Box { lower, upper } => {
                check_net_size(lower, upper, eps)?;
                let axes: Vec<Vec<f64>> = lower
                    .iter()
                    .zip(upper)
                    .map(|(&l, &u)| axis_points(l, u, eps))
                    .collect();
                cartesian(&axes)
            }
            Domain::Hull { generators } => {
                let n = self.dim();
                let pitch = eps / (n as f64).sqrt();
                let (lo, hi) = bounding_box(generators);
                check_net_size(&lo, &hi, pitch)?;
                let axes: Vec<Vec<f64>> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(&l, &u)| axis_points(l, u, pitch))
                    .collect();
                let raw = cartesian(&axes)?;
                let mut projected: Vec<Vec<f64>> = par::map_collect(raw.len(), |i| {
                    project_hull(generators, raw[i].coords()).0
                });
                projected.sort_by(|a, b| a.partial_cmp(b).expect("finite coords"));
                projected.dedup();
                projected.into_iter().map(Point::new).collect()
            }
        }
    }

    /// Uniform sample: per-axis uniform for boxes, Dirichlet(1)-weighted
    /// generator combination for hulls.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        match self {
            Domain::Box { lower, upper } => {
                let coords = lower
                    .iter()
                    .zip(upper)
                    .map(|(&l, &u)| {
                        if u > l {
                            rng.random_range(l..u)
                        } else {
                            l
                        }
                    })
                    .collect();
                Point::new(coords).expect("box sample")
            }
            Domain::Hull { generators } => {
                let mut weights: Vec<f64> = (0..generators.len())
                    .map(|_| -(rng.random_range(f64::MIN_POSITIVE..1.0f64).ln()))
                    .collect();
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                let n = self.dim();
                let mut coords = vec![0.0; n];
                for (w, g) in weights.iter().zip(generators) {
                    for (c, gc) in coords.iter_mut().zip(g.coords()) {
                        *c += w * gc;
                    }
                }
                Point::new(coords).expect("hull sample")
            }
        }
    }
}

/// Largest pitch `h <= eps` with `(u - l) / h` integral, then the grid
/// `{l, l + h, ..., u}` with exact endpoints.
/// Rejects nets whose size would overflow [`MAX_NET_POINTS`] before any
/// axis vector is materialized (a single axis can already be too large).
fn check_net_size(lower: &[f64], upper: &[f64], pitch: f64) -> Result<()> {
    let mut total: u128 = 1;
    for (&l, &u) in lower.iter().zip(upper) {
        total = total.saturating_mul(axis_count(l, u, pitch) as u128 + 1);
        if total > MAX_NET_POINTS as u128 {
            return Err(Error::NetOverflow {
                points: total,
                cap: MAX_NET_POINTS,
            });
        }
    }
    Ok(())
}

fn axis_count(l: f64, u: f64, eps: f64) -> u64 {
    let span = u - l;
    if span <= 0.0 {
        return 0;
    }
    let k = (span / eps - 1e-9).ceil().max(1.0);
    if k > u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

fn axis_points(l: f64, u: f64, eps: f64) -> Vec<f64> {
    let span = u - l;
    if span <= 0.0 {
        return vec![l];
    }
    let k = axis_count(l, u, eps);
    let h = span / k as f64;
    (0..=k)
        .map(|j| {
            if j == 0 {
                l
            } else if j == k {
                u
            } else {
                l + j as f64 * h
            }
        })
        .collect()
}

fn cartesian(axes: &[Vec<f64>]) -> Result<Vec<Point>> {
    let total: u128 = axes.iter().map(|a| a.len() as u128).product();
    if total > MAX_NET_POINTS as u128 {
        return Err(Error::NetOverflow {
            points: total,
            cap: MAX_NET_POINTS,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; axes.len()];
    loop {
        let coords: Vec<f64> = idx.iter().zip(axes).map(|(&i, a)| a[i]).collect();
        out.push(Point::new(coords)?);
        let mut axis = axes.len();
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < axes[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn bounding_box(generators: &[Point]) -> (Vec<f64>, Vec<f64>) {
    let n = generators[0].dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for g in generators {
        for (i, &c) in g.coords().iter().enumerate() {
            lo[i] = lo[i].min(c);
            hi[i] = hi[i].max(c);
        }
    }
    (lo, hi)
}

/// Hausdorff distance between two nonempty finite sets.
pub fn hausdorff(a: &[Point], b: &[Point], metric: Metric) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = a[0].dim();
    for p in a.iter().chain(b) {
        if p.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.dim(),
            });
        }
    }
    let directed = |from: &[Point], to: &[Point]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| metric.dist(p.coords(), q.coords()))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Distance from `x` to a nonempty finite set.
pub fn dist_to_finite_set(x: &Point, set: &[Point], metric: Metric) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    for p in set {
        if p.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                got: p.dim(),
            });
        }
    }
    Ok(set
        .iter()
        .map(|p| metric.dist(x.coords(), p.coords()))
        .fold(f64::INFINITY, f64::min))
}

/// Nearest point of `conv(generators)` to `x` in the euclidean norm,
/// returned with its simplex weights.
fn project_hull(generators: &[Point], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = generators.len();
    let n = x.len();
    if m == 1 {
        return (generators[0].coords().to_vec(), vec![1.0]);
    }

    let combine = |lambda: &[f64]| -> Vec<f64> {
        let mut q = vec![0.0; n];
        for (w, g) in lambda.iter().zip(generators) {
            if *w != 0.0 {
                for (qc, gc) in q.iter_mut().zip(g.coords()) {
                    *qc += w * gc;
                }
            }
        }
        q
    };
    let objective = |lambda: &[f64]| -> f64 {
        let q = combine(lambda);
        q.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
    };

    // Start at the closest generator: monotone descent then guarantees the
    // result beats every generator's distance.
    let start = (0..m)
        .map(|i| (objective(&one_hot(m, i)), i))
        .min_by(|a, b| a.partial_cmp(b).expect("finite objective"))
        .map(|(_, i)| i)
        .expect("nonempty generators");
    let mut lambda = one_hot(m, start);
    let mut obj = objective(&lambda);

    // Gradient of the objective is 2 G^T (G lambda - x); its Lipschitz
    // constant is bounded by twice the squared Frobenius norm of G.
    let frob_sq: f64 = generators
        .iter()
        .flat_map(|g| g.coords())
        .map(|c| c * c)
        .sum();
    let step = 1.0 / (2.0 * frob_sq + 1e-12);

    for _ in 0..2_000 {
        let q = combine(&lambda);
        let resid: Vec<f64> = q.iter().zip(x).map(|(a, b)| a - b).collect();
        let mut trial: Vec<f64> = (0..m)
            .map(|i| {
                let grad_i: f64 = 2.0
                    * generators[i]
                        .coords()
                        .iter()
                        .zip(&resid)
                        .map(|(g, r)| g * r)
                        .sum::<f64>();
                lambda[i] - step * grad_i
            })
            .collect();
        project_to_simplex(&mut trial);
        let trial_obj = objective(&trial);
        if trial_obj < obj {
            let gain = obj - trial_obj;
            lambda = trial;
            obj = trial_obj;
            if gain < PROJECTION_CONVERGENCE {
                break;
            }
        } else {
            break;
        }
    }

    // Wolfe-style active-set cleanup. Projected gradient crawls near the
    // optimum; solving the affine subproblem on the support lands exactly
    // on the optimal face, and the vertex with the most negative
    // directional derivative tells us when the support must grow.
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let scale: f64 = generators
        .iter()
        .map(|g| dot(g.coords(), g.coords()))
        .fold(dot(x, x).max(1.0), f64::max);

    let mut support: Vec<usize> = (0..m).filter(|&i| lambda[i] > ACTIVE_WEIGHT_FLOOR).collect();
    if support.is_empty() {
        support.push(start);
    }
    let mut weights: Vec<f64> = {
        let total: f64 = support.iter().map(|&i| lambda[i]).sum();
        support.iter().map(|&i| lambda[i] / total).collect()
    };

    'outer: for _ in 0..10 * m + 20 {
        // Affine polish with line-search drops: move toward the affine
        // optimum, stopping where a weight first hits zero.
        loop {
            let solved = solve_affine_weights(generators, x, &support, 0.0)
                .or_else(|| solve_affine_weights(generators, x, &support, 1e-10 * scale));
            let Some(w) = solved else {
                break 'outer;
            };
            if w.iter().all(|&v| v >= -ACTIVE_WEIGHT_FLOOR) {
                let total: f64 = w.iter().map(|v| v.max(0.0)).sum();
                weights = w.iter().map(|v| v.max(0.0) / total).collect();
                break;
            }
            let theta = w
                .iter()
                .zip(&weights)
                .filter(|(wi, _)| **wi < 0.0)
                .map(|(&wi, &li)| li / (li - wi))
                .fold(1.0, f64::min);
            let mut next_support = Vec::with_capacity(support.len());
            let mut next_weights = Vec::with_capacity(support.len());
            for ((&idx, &li), &wi) in support.iter().zip(&weights).zip(&w) {
                let v = li + theta * (wi - li);
                if v > ACTIVE_WEIGHT_FLOOR {
                    next_support.push(idx);
                    next_weights.push(v);
                }
            }
            if next_support.is_empty() {
                break 'outer;
            }
            let total: f64 = next_weights.iter().sum();
            for v in &mut next_weights {
                *v /= total;
            }
            support = next_support;
            weights = next_weights;
        }

        let q = {
            let mut full = vec![0.0; m];
            for (&i, &w) in support.iter().zip(&weights) {
                full[i] = w;
            }
            combine(&full)
        };
        let d: Vec<f64> = q.iter().zip(x).map(|(a, b)| a - b).collect();
        let (best_i, best_val) = (0..m)
            .map(|i| (i, dot(&d, generators[i].coords())))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite product"))
            .expect("nonempty generators");
        let gap = dot(&d, &q) - best_val;
        if gap <= 1e-12 * scale || support.contains(&best_i) {
            break;
        }
        support.push(best_i);
        weights.push(0.0);
    }

    lambda = vec![0.0; m];
    for (&i, &w) in support.iter().zip(&weights) {
        lambda[i] = w;
    }
    (combine(&lambda), lambda)
}

fn one_hot(m: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] = 1.0;
    v
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_to_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite weight"));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    for w in v.iter_mut() {
        *w = (*w - tau).max(0.0);
    }
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for w in v.iter_mut() {
            *w /= total;
        }
    }
}

/// Minimize `|x - G_A w|^2` subject to `sum w = 1` over the active set via
/// the KKT system; `None` if the system is singular.
fn solve_affine_weights(
    generators: &[Point],
    x: &[f64],
    active: &[usize],
    ridge: f64,
) -> Option<Vec<f64>> {
    let a = active.len();
    let dim = a + 1;
    let mut mat = vec![vec![0.0; dim + 1]; dim];
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            mat[r][c] = 2.0
                * generators[i]
                    .coords()
                    .iter()
                    .zip(generators[j].coords())
                    .map(|(p, q)| p * q)
                    .sum::<f64>();
        }
        mat[r][r] += ridge;
        mat[r][a] = 1.0;
        mat[r][dim] = 2.0
            * generators[i]
                .coords()
                .iter()
                .zip(x)
                .map(|(p, q)| p * q)
                .sum::<f64>();
    }
    for c in 0..a {
        mat[a][c] = 1.0;
    }
    mat[a][dim] = 1.0;

    // Gaussian elimination with partial pivoting.
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&r1, &r2| {
                mat[r1][col]
                    .abs()
                    .partial_cmp(&mat[r2][col].abs())
                    .expect("finite pivot")
            })
            .expect("rows remain");
        if mat[pivot][col].abs() < 1e-12 {
            return None;
        }
        mat.swap(col, pivot);
        for row in 0..dim {
            if row != col {
                let factor = mat[row][col] / mat[col][col];
                if factor != 0.0 {
                    for c in col..=dim {
                        mat[row][c] -= factor * mat[col][c];
                    }
                }
            }
        }
    }
    Some((0..a).map(|r| mat[r][dim] / mat[r][r]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(coords: &[f64]) -> Point {
        Point::from_slice(coords)
    }

    /// Van der Corput sequence in the given base; combined per-axis this
    /// gives the quasi-random samples used by the coverage checks.
    fn halton(index: usize, base: usize) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        let mut i = index + 1;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }

    #[test]
    fn point_rejects_bad_input() {
        assert!(Point::new(vec![]).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![f64::INFINITY, 0.0]).is_err());
        assert!(Point::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn box_projection_clamps() {
        let d = Domain::unit_box(2);
        let q = d.project(&pt(&[1.5, -0.2])).unwrap();
        assert_eq!(q.coords(), &[1.0, 0.0]);
        // Bit stability: projecting twice yields identical bits.
        let q2 = d.project(&q).unwrap();
        assert_eq!(q.coords(), q2.coords());
    }

    #[test]
    fn projection_dimension_mismatch() {
        let d = Domain::unit_box(2);
        assert!(matches!(
            d.project(&pt(&[0.5])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn segment_projection_matches_scan_oracle() {
        // Oracle: parameter scan of |x - (t, 0)| over t in [0,1], pitch 1e-6,
        // minimized at t = 0.5 for x = (0.5, 1).
        let gens = vec![pt(&[0.0, 0.0]), pt(&[1.0, 0.0])];
        let x = [0.5, 1.0];
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=1_000_000u64 {
            let t = i as f64 * 1e-6;
            let d = Metric::Euclidean.dist(&x, &[t, 0.0]);
            if d < best.0 {
                best = (d, t);
            }
        }
        assert!((best.1 - 0.5).abs() < 1e-9);

        let d = Domain::hull(gens).unwrap();
        let q = d.project(&pt(&x)).unwrap();
        assert!((q.coords()[0] - 0.5).abs() < 1e-9);
        assert!(q.coords()[1].abs() < 1e-9);
    }

    #[test]
    fn hull_projection_postconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gens = vec![
            pt(&[0.0, 0.0]),
            pt(&[2.0, 0.5]),
            pt(&[1.0, 2.0]),
            pt(&[0.5, 1.0]),
        ];
        let d = Domain::hull(gens.clone()).unwrap();
        for _ in 0..200 {
            let x = pt(&[rng.random_range(-2.0..4.0), rng.random_range(-2.0..4.0)]);
            let q = d.project(&x).unwrap();
            assert!(d.contains(q.coords(), 1e-9));
            // Beats every generator in the euclidean metric.
            for g in &gens {
                assert!(
                    Metric::Euclidean.dist(x.coords(), q.coords())
                        <= Metric::Euclidean.dist(x.coords(), g.coords()) + 1e-9
                );
            }
            // Idempotent within 1e-9.
            let q2 = d.project(&q).unwrap();
            assert!(Metric::Euclidean.dist(q.coords(), q2.coords()) <= 1e-9);
        }
    }

    #[test]
    fn projection_nonexpansive_box_both_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = Domain::make_box(vec![-1.0, 0.0, 2.0], vec![1.5, 0.25, 5.0]).unwrap();
        for _ in 0..1000 {
            let a = pt(&[
                rng.random_range(-4.0..8.0),
                rng.random_range(-4.0..8.0),
                rng.random_range(-4.0..8.0),
            ]);
            let b = pt(&[
                rng.random_range(-4.0..8.0),
                rng.random_range(-4.0..8.0),
                rng.random_range(-4.0..8.0),
            ]);
            let pa = d.project(&a).unwrap();
            let pb = d.project(&b).unwrap();
            for m in [Metric::Euclidean, Metric::Max] {
                assert!(
                    m.dist(pa.coords(), pb.coords()) <= m.dist(a.coords(), b.coords()) + 1e-7
                );
            }
        }
    }

    #[test]
    fn projection_nonexpansive_hull_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d = Domain::hull(vec![
            pt(&[0.0, 0.0]),
            pt(&[3.0, 0.2]),
            pt(&[1.0, 2.5]),
        ])
        .unwrap();
        for _ in 0..1000 {
            let a = pt(&[rng.random_range(-3.0..6.0), rng.random_range(-3.0..6.0)]);
            let b = pt(&[rng.random_range(-3.0..6.0), rng.random_range(-3.0..6.0)]);
            let pa = d.project(&a).unwrap();
            let pb = d.project(&b).unwrap();
            assert!(
                Metric::Euclidean.dist(pa.coords(), pb.coords())
                    <= Metric::Euclidean.dist(a.coords(), b.coords()) + 1e-7
            );
        }
    }

    #[test]
    fn eps_net_unit_interval() {
        let d = Domain::unit_box(1);
        let net = d.eps_net(0.5).unwrap();
        let coords: Vec<f64> = net.iter().map(|p| p.coords()[0]).collect();
        assert_eq!(coords, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn eps_net_unit_square() {
        let d = Domain::unit_box(2);
        let net = d.eps_net(0.5).unwrap();
        assert_eq!(net.len(), 9);
        for p in &net {
            for &c in p.coords() {
                assert!([0.0, 0.5, 1.0].contains(&c));
            }
        }
    }

    #[test]
    fn eps_net_rejects_nonpositive_eps() {
        let d = Domain::unit_box(1);
        assert!(matches!(d.eps_net(0.0), Err(Error::InvalidEps(_))));
        assert!(matches!(d.eps_net(-0.1), Err(Error::InvalidEps(_))));
    }

    #[test]
    fn eps_net_covers_box() {
        let d = Domain::make_box(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        let eps = 0.3;
        let net = d.eps_net(eps).unwrap();
        for p in &net {
            assert!(d.contains(p.coords(), 0.0));
        }
        for i in 0..10_000 {
            let x = pt(&[2.0 * halton(i, 2), -1.0 + 2.0 * halton(i, 3)]);
            let dist = dist_to_finite_set(&x, &net, Metric::Max).unwrap();
            assert!(dist <= eps, "sample {i} at distance {dist}");
        }
    }

    #[test]
    fn eps_net_covers_hull() {
        let gens = vec![pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.5, 1.0])];
        let d = Domain::hull(gens.clone()).unwrap();
        let eps = 0.25;
        let net = d.eps_net(eps).unwrap();
        assert!(!net.is_empty());
        for p in &net {
            assert!(d.contains(p.coords(), 1e-9));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let x = d.sample(&mut rng);
            let dist = dist_to_finite_set(&x, &net, Metric::Max).unwrap();
            assert!(dist <= eps, "hull sample at distance {dist}");
        }
    }

    #[test]
    fn hausdorff_examples() {
        let a = vec![pt(&[0.0]), pt(&[1.0])];
        let b = vec![pt(&[0.0])];
        assert_eq!(hausdorff(&a, &b, Metric::Max).unwrap(), 1.0);
        assert_eq!(
            hausdorff(&a, &b, Metric::Max).unwrap(),
            hausdorff(&b, &a, Metric::Max).unwrap()
        );
        assert!(matches!(
            hausdorff(&[], &b, Metric::Max),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn hausdorff_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let rand_set = |rng: &mut ChaCha8Rng| -> Vec<Point> {
                let len = rng.random_range(1..6);
                (0..len)
                    .map(|_| pt(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]))
                    .collect()
            };
            let a = rand_set(&mut rng);
            let b = rand_set(&mut rng);
            let c = rand_set(&mut rng);
            for m in [Metric::Euclidean, Metric::Max] {
                let ab = hausdorff(&a, &b, m).unwrap();
                let bc = hausdorff(&b, &c, m).unwrap();
                let ac = hausdorff(&a, &c, m).unwrap();
                assert!(ac <= ab + bc + 1e-9);
            }
        }
    }

    #[test]
    fn dist_to_finite_set_examples() {
        let x = pt(&[3.0, 4.0]);
        let set = vec![pt(&[0.0, 0.0])];
        assert!((dist_to_finite_set(&x, &set, Metric::Euclidean).unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(
            dist_to_finite_set(&x, &[], Metric::Max),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(Domain::unit_box(1).diameter(Metric::Max), 1.0);
        assert_eq!(Domain::unit_box(2).diameter(Metric::Max), 1.0);
        assert!((Domain::unit_box(2).diameter(Metric::Euclidean) - 2f64.sqrt()).abs() < 1e-15);
        let h = Domain::hull(vec![pt(&[0.0, 0.0]), pt(&[3.0, 4.0])]).unwrap();
        assert_eq!(h.diameter(Metric::Euclidean), 5.0);
    }

    #[test]
    fn degenerate_axis_net() {
        let d = Domain::make_box(vec![0.0, 0.5], vec![1.0, 0.5]).unwrap();
        let net = d.eps_net(0.5).unwrap();
        assert_eq!(net.len(), 3);
        for p in &net {
            assert_eq!(p.coords()[1], 0.5);
        }
    }
}
