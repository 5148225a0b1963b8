//! Approximate Brouwer fixed points on the unit cube.
//!
//! The engine triangulates `[0,1]^n` into Kuhn simplices at a resolution
//! chosen from the function's continuity modulus, labels grid vertices by
//! a descent rule whose boundary behavior satisfies the Sperner
//! condition, and locates a completely labeled cell. The barycenter of
//! such a cell is an approximate fixed point; the returned residual is
//! always re-evaluated with the caller's function, never inferred from
//! the theory.
//!
//! Search strategy per dimension: bisection between the guaranteed
//! boundary labels in 1-D, door-to-door simplex path following from the
//! top face in 2-D (with an exhaustive scan as backstop at small
//! resolutions), and an exhaustive parallel scan in higher dimensions.

use std::collections::HashMap;

use crate::expr::ContinuityModulus;
use crate::geometry::{Metric, Point};
use crate::par;
use crate::{Error, Result};

/// Hard per-axis resolution bound; finer grids than this are rejected as
/// resolution overflow regardless of caller caps.
pub const MAX_RESOLUTION: u64 = 1 << 31;
/// Largest vertex count the exhaustive cell scans will touch.
const MAX_SCAN_VERTICES: u64 = 1 << 24;
/// Step bound for 2-D path following before declaring a stall.
const MAX_PATH_STEPS: u64 = 1 << 26;
/// Slack allowed when checking that evaluated images stay in the cube.
const CUBE_TOL: f64 = 1e-9;

/// One simplex of the Kuhn triangulation at resolution `k`: starting
/// from `base`, each vertex adds one more unit vector in the order given
/// by `perm` (entries are 1-based axis indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KuhnCell {
    base: Vec<u64>,
    perm: Vec<usize>,
    k: u64,
}

impl KuhnCell {
    fn new(base: Vec<u64>, perm: Vec<usize>, k: u64) -> Self {
        debug_assert!(perm.len() == base.len());
        debug_assert!(base.iter().enumerate().all(|(_, &b)| b < k.max(1)));
        KuhnCell { base, perm, k }
    }

    pub fn base(&self) -> &[u64] {
        &self.base
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn resolution(&self) -> u64 {
        self.k
    }

    /// The `n + 1` lattice vertices, in insertion order.
    pub fn lattice_vertices(&self) -> Vec<Vec<u64>> {
        let n = self.base.len();
        let mut out = Vec::with_capacity(n + 1);
        let mut v = self.base.clone();
        out.push(v.clone());
        for &axis in &self.perm {
            v[axis - 1] += 1;
            out.push(v.clone());
        }
        out
    }

    /// The same vertices scaled into `[0,1]^n`.
    pub fn vertices(&self) -> Vec<Point> {
        self.lattice_vertices()
            .into_iter()
            .map(|v| Point::from_slice(&lattice_coords(&v, self.k)))
            .collect()
    }

    pub fn barycenter(&self) -> Point {
        let n = self.base.len();
        let mut sum = vec![0.0; n];
        let verts = self.lattice_vertices();
        for v in &verts {
            for (s, &c) in sum.iter_mut().zip(v) {
                *s += c as f64;
            }
        }
        let scale = (self.k as f64) * (verts.len() as f64);
        for s in &mut sum {
            *s /= scale;
        }
        Point::from_slice(&sum)
    }
}

/// A located approximate fixed point with its witnessed residual.
#[derive(Clone, Debug)]
pub struct BrouwerResult {
    pub point: Point,
    /// `max`-metric distance between the point and its image, evaluated
    /// with the caller's function after the search.
    pub residual: f64,
    pub resolution_used: u64,
}

fn lattice_coords(v: &[u64], k: u64) -> Vec<f64> {
    v.iter().map(|&c| c as f64 / k as f64).collect()
}

/// Picks the grid resolution for accuracy `eps` in dimension `n`: the
/// pitch must undercut both the accuracy budget per vertex,
/// `eps / (2(n+1))`, and the argument shift the modulus allows for it.
pub fn grid_for_eps(omega: &ContinuityModulus, eps: f64, n: usize) -> Result<u64> {
    grid_for_eps_capped(omega, eps, n, MAX_RESOLUTION)
}

/// [`grid_for_eps`] with a caller-supplied per-axis resolution cap.
pub fn grid_for_eps_capped(
    omega: &ContinuityModulus,
    eps: f64,
    n: usize,
    cap: u64,
) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidEps(eps));
    }
    let budget = eps / (2.0 * (n as f64 + 1.0));
    let pitch = omega.delta(budget).min(budget);
    if !(pitch > 0.0) {
        return Err(Error::ModulusTooWeak);
    }
    let mut k = (1.0 / pitch).ceil().max(1.0);
    // One ulp of slack in the division must not break the contract
    // 1/k <= pitch.
    if 1.0 / k > pitch {
        k += 1.0;
    }
    let cap = cap.min(MAX_RESOLUTION);
    if k > cap as f64 {
        return Err(Error::ResolutionOverflow {
            k: k as u128,
            cap,
        });
    }
    Ok(k as u64)
}

/// Vertex label in `{0..n}`: the lowest axis `i` whose coordinate is
/// positive and not increased by `f`, or `0` when no axis qualifies.
/// Label `i` never appears on the face `x_i = 0`, which is the boundary
/// condition the cell search relies on.
pub fn sperner_label(image: &[f64], vertex: &[f64]) -> usize {
    for i in 0..vertex.len() {
        if image[i] <= vertex[i] && vertex[i] > 0.0 {
            return i + 1;
        }
    }
    0
}

/// Finds a cell whose `n + 1` vertices carry all labels `{0..n}`.
pub fn completely_labeled_search<F>(f: F, k: u64, n: usize) -> Result<KuhnCell>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if n == 0 || k == 0 {
        return Err(Error::InvalidDomain(
            "cell search needs n >= 1 and k >= 1".into(),
        ));
    }
    match n {
        1 => bisection_search_1d(&f, k),
        2 => match door_path_search_2d(&f, k) {
            Ok(cell) => Ok(cell),
            Err(Error::SearchFailure(_)) if (k + 1).pow(2) <= MAX_SCAN_VERTICES => {
                exhaustive_scan(&f, k, n)
            }
            Err(e) => Err(e),
        },
        _ => exhaustive_scan(&f, k, n),
    }
}

/// Evaluates `f` at a lattice vertex, rejects images that leave the
/// cube, and labels the vertex.
fn label_at<F>(f: &F, v: &[u64], k: u64) -> Result<usize>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let x = lattice_coords(v, k);
    let image = f(&x);
    if image.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: image.len(),
        });
    }
    if image.iter().any(|&c| !(-CUBE_TOL..=1.0 + CUBE_TOL).contains(&c)) {
        return Err(Error::CodomainEscape {
            point: x,
            image,
        });
    }
    Ok(sperner_label(&image, &x))
}

/// 1-D: the labels start at 0 (origin) and end at 1 (right endpoint), so
/// bisection maintaining that bracket lands on an adjacent 0|1 pair —
/// a completely labeled segment.
fn bisection_search_1d<F>(f: &F, k: u64) -> Result<KuhnCell>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut lo = 0u64;
    let mut hi = k;
    debug_assert_eq!(label_at(f, &[lo], k)?, 0);
    debug_assert_eq!(label_at(f, &[hi], k)?, 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if label_at(f, &[mid], k)? == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(KuhnCell::new(vec![lo], vec![1], k))
}

/// 2-D triangle of the Kuhn split of square `(i, j)`: the lower triangle
/// takes axis order (1, 2), the upper (2, 1); both share the diagonal
/// from `(i, j)` to `(i+1, j+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Tri {
    i: u64,
    j: u64,
    upper: bool,
}

type Edge = ((u64, u64), (u64, u64));

impl Tri {
    fn corners(&self) -> [(u64, u64); 3] {
        let (i, j) = (self.i, self.j);
        if self.upper {
            [(i, j), (i, j + 1), (i + 1, j + 1)]
        } else {
            [(i, j), (i + 1, j), (i + 1, j + 1)]
        }
    }

    fn cell(&self, k: u64) -> KuhnCell {
        let perm = if self.upper { vec![2, 1] } else { vec![1, 2] };
        KuhnCell::new(vec![self.i, self.j], perm, k)
    }

    fn edges(&self) -> [Edge; 3] {
        let [a, b, c] = self.corners();
        [(a, b), (b, c), (a, c)]
    }

    /// The triangle on the other side of `edge`, if it exists in the
    /// `k`-grid.
    fn neighbor(&self, edge: Edge, k: u64) -> Option<Tri> {
        let (i, j) = (self.i, self.j);
        let [a, b, c] = self.corners();
        let (p, q) = edge;
        if self.upper {
            if (p, q) == (a, b) {
                // left leg
                (i > 0).then(|| Tri { i: i - 1, j, upper: false })
            } else if (p, q) == (b, c) {
                // top leg
                (j + 1 < k).then(|| Tri { i, j: j + 1, upper: false })
            } else {
                Some(Tri { i, j, upper: false })
            }
        } else if (p, q) == (a, b) {
            // bottom leg
            (j > 0).then(|| Tri { i, j: j - 1, upper: true })
        } else if (p, q) == (b, c) {
            // right leg
            (i + 1 < k).then(|| Tri { i: i + 1, j, upper: true })
        } else {
            Some(Tri { i, j, upper: true })
        }
    }
}

/// 2-D: boundary doors (adjacent label-1/label-2 pairs) exist only on
/// the top face, and their count is odd, so following door-to-door paths
/// inward from the top must end in a completely labeled triangle.
fn door_path_search_2d<F>(f: &F, k: u64) -> Result<KuhnCell>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut labels: HashMap<(u64, u64), usize> = HashMap::new();
    let mut label = |f: &F, v: (u64, u64)| -> Result<usize> {
        if let Some(&l) = labels.get(&v) {
            return Ok(l);
        }
        let l = label_at(f, &[v.0, v.1], k)?;
        labels.insert(v, l);
        Ok(l)
    };

    let mut steps = 0u64;
    let mut prev_top = label(f, (0, k))?;
    for i in 0..k {
        let next_top = label(f, (i + 1, k))?;
        let door_here = prev_top.min(next_top) == 1 && prev_top.max(next_top) == 2;
        prev_top = next_top;
        if !door_here {
            continue;
        }
        // Walk inward from this boundary door.
        let mut tri = Tri { i, j: k - 1, upper: true };
        let mut entry: Edge = ((i, k), (i + 1, k));
        loop {
            steps += 1;
            if steps > MAX_PATH_STEPS {
                return Err(Error::SearchFailure(format!(
                    "path following exceeded {MAX_PATH_STEPS} steps at resolution {k}"
                )));
            }
            let corners = tri.corners();
            let mut ls = [0usize; 3];
            for (slot, &corner) in ls.iter_mut().zip(&corners) {
                *slot = label(f, corner)?;
            }
            let mut seen = [false; 3];
            for &l in &ls {
                seen[l] = true;
            }
            if seen[0] && seen[1] && seen[2] {
                return Ok(tri.cell(k));
            }
            // Not complete: labels are {1, 2} with one duplicate, so
            // exactly two edges are doors; leave through the one we did
            // not come in by.
            let exit = tri
                .edges()
                .iter()
                .zip([(ls[0], ls[1]), (ls[1], ls[2]), (ls[0], ls[2])])
                .find(|(e, pair)| {
                    **e != entry && pair.0.min(pair.1) == 1 && pair.0.max(pair.1) == 2
                })
                .map(|(e, _)| *e);
            let Some(exit) = exit else {
                break; // single-door triangle: labeling bug backstop
            };
            match tri.neighbor(exit, k) {
                Some(next) => {
                    tri = next;
                    entry = exit;
                }
                None => break, // path exits the square; try the next door
            }
        }
    }
    Err(Error::SearchFailure(format!(
        "no completely labeled triangle reachable from the top face at resolution {k}"
    )))
}

/// Exhaustive scan over every cube and permutation, deterministic in the
/// lexicographic cube order regardless of parallelism.
fn exhaustive_scan<F>(f: &F, k: u64, n: usize) -> Result<KuhnCell>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let vertices = (k + 1).checked_pow(n as u32).filter(|&v| v <= MAX_SCAN_VERTICES);
    let Some(vertex_count) = vertices else {
        return Err(Error::GridOverflow {
            cells: (k as u128 + 1).pow(n as u32),
            cap: MAX_SCAN_VERTICES,
        });
    };

    // Label every lattice vertex up front (parallel, order-preserving),
    // then sweep cells against the table.
    let strides: Vec<u64> = (0..n)
        .map(|j| (k + 1).pow((n - 1 - j) as u32))
        .collect();
    let decode = |index: u64| -> Vec<u64> {
        strides.iter().map(|s| index / s % (k + 1)).collect()
    };
    let labels = par::map_collect(vertex_count as usize, |idx| {
        label_at(f, &decode(idx as u64), k)
    });
    let labels: Vec<usize> = labels.into_iter().collect::<Result<_>>()?;
    let vertex_index =
        |v: &[u64]| -> usize { v.iter().zip(&strides).map(|(&c, s)| c * s).sum::<u64>() as usize };

    let perms = permutations(n);
    let cube_count = k.pow(n as u32) as usize;
    let cube_strides: Vec<u64> = (0..n).map(|j| k.pow((n - 1 - j) as u32)).collect();
    let hit = par::find_first(cube_count, |cube_idx| {
        let base: Vec<u64> = cube_strides
            .iter()
            .map(|s| cube_idx as u64 / s % k)
            .collect();
        let mut vertex = vec![0u64; n];
        for (perm_no, perm) in perms.iter().enumerate() {
            let mut seen = vec![false; n + 1];
            vertex.copy_from_slice(&base);
            seen[labels[vertex_index(&vertex)]] = true;
            for &axis in perm {
                vertex[axis - 1] += 1;
                seen[labels[vertex_index(&vertex)]] = true;
            }
            if seen.iter().all(|&s| s) {
                return Some(perm_no);
            }
        }
        None
    });
    match hit {
        Some((cube_idx, perm_no)) => {
            let base: Vec<u64> = cube_strides
                .iter()
                .map(|s| cube_idx as u64 / s % k)
                .collect();
            Ok(KuhnCell::new(base, perms[perm_no].clone(), k))
        }
        None => Err(Error::SearchFailure(format!(
            "no completely labeled cell in the full scan at resolution {k}"
        ))),
    }
}

/// All permutations of `{1..n}` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n + 1];
    fn rec(n: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for axis in 1..=n {
            if !used[axis] {
                used[axis] = true;
                current.push(axis);
                rec(n, current, used, out);
                current.pop();
                used[axis] = false;
            }
        }
    }
    rec(n, &mut current, &mut used, &mut out);
    out
}

/// Approximate fixed point of a self-map of `[0,1]^n`: resolution from
/// the modulus, completely labeled cell, barycenter, and a directly
/// evaluated residual that must undercut `eps`. A residual at or above
/// `eps` signals an unsound modulus and is reported as an error carrying
/// the best point found.
pub fn approx_fixed_point<F>(
    f: F,
    omega: &ContinuityModulus,
    n: usize,
    eps: f64,
) -> Result<BrouwerResult>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    approx_fixed_point_capped(f, omega, n, eps, MAX_RESOLUTION)
}

/// [`approx_fixed_point`] with a caller-supplied resolution cap.
pub fn approx_fixed_point_capped<F>(
    f: F,
    omega: &ContinuityModulus,
    n: usize,
    eps: f64,
    grid_cap: u64,
) -> Result<BrouwerResult>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let k = grid_for_eps_capped(omega, eps, n, grid_cap)?;
    let cell = completely_labeled_search(&f, k, n)?;
    let point = cell.barycenter();
    let image = f(point.coords());
    let residual = Metric::Max.dist(point.coords(), &image);
    if residual >= eps {
        return Err(Error::ModulusUnsound {
            point: point.into_coords(),
            residual,
            eps,
        });
    }
    Ok(BrouwerResult {
        point,
        residual,
        resolution_used: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lip(l: f64) -> ContinuityModulus {
        ContinuityModulus::lipschitz(l).unwrap()
    }

    #[test]
    fn grid_resolution_examples() {
        // Budget eps/(2(n+1)) = 0.025, modulus allows the same.
        assert_eq!(grid_for_eps(&lip(1.0), 0.1, 1).unwrap(), 40);
        // Budget 1.0: the coarsest grid suffices.
        assert_eq!(grid_for_eps(&lip(1.0), 4.0, 1).unwrap(), 1);
        // Budget 0.1/6, modulus divides by 10.
        let k = grid_for_eps(&lip(10.0), 0.1, 2).unwrap();
        assert!((600..=601).contains(&k), "k = {k}");
        assert!(1.0 / k as f64 <= 0.1 / 60.0 + 1e-15);
    }

    #[test]
    fn grid_resolution_overflow() {
        let out = grid_for_eps(&lip(1.0), 1e-12, 1);
        assert!(matches!(out, Err(Error::ResolutionOverflow { .. })));
        let capped = grid_for_eps_capped(&lip(1.0), 0.1, 1, 10);
        assert!(matches!(capped, Err(Error::ResolutionOverflow { cap: 10, .. })));
    }

    #[test]
    fn label_rule_examples() {
        // Identity ties on every axis; the lowest positive axis wins.
        assert_eq!(sperner_label(&[0.5, 0.5], &[0.5, 0.5]), 1);
        // 1 - x at the right endpoint descends.
        assert_eq!(sperner_label(&[0.0], &[1.0]), 1);
        // Origin: no positive coordinate qualifies.
        assert_eq!(sperner_label(&[0.3, 0.7], &[0.0, 0.0]), 0);
        // Face x_1 = 0 blocks label 1 even when f descends there.
        assert_eq!(sperner_label(&[0.0, 0.2], &[0.0, 0.5]), 2);
    }

    #[test]
    fn boundary_faces_never_get_their_own_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let mut v = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let axis = rng.random_range(0..2);
            v[axis] = 0.0;
            let image = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            assert_ne!(sperner_label(&image, &v), axis + 1);
        }
    }

    #[test]
    fn one_minus_x_cell_at_k4() {
        let cell = completely_labeled_search(|x: &[f64]| vec![1.0 - x[0]], 4, 1).unwrap();
        assert_eq!(cell.base(), &[1]);
        let verts = cell.vertices();
        assert_eq!(verts[0].coords(), &[0.25]);
        assert_eq!(verts[1].coords(), &[0.5]);
    }

    #[test]
    fn identity_coarsest_cell() {
        let cell = completely_labeled_search(|x: &[f64]| x.to_vec(), 1, 1).unwrap();
        assert_eq!(cell.base(), &[0]);
        assert_eq!(cell.resolution(), 1);
    }

    #[test]
    fn constant_map_cell_touches_the_constant() {
        let cell =
            completely_labeled_search(|_: &[f64]| vec![0.5, 0.5], 2, 2).unwrap();
        let near = cell
            .vertices()
            .iter()
            .any(|v| Metric::Max.dist(v.coords(), &[0.5, 0.5]) <= 0.5 + 1e-12);
        assert!(near, "cell {cell:?} not adjacent to the constant");
        // Path following and the exhaustive backstop agree here.
        let scanned =
            exhaustive_scan(&|_: &[f64]| vec![0.5, 0.5], 2, 2).unwrap();
        let bary = scanned.barycenter();
        assert!(Metric::Max.dist(bary.coords(), &[0.5, 0.5]) <= 0.5);
    }

    #[test]
    fn identity_fixed_point_is_exact() {
        let out = approx_fixed_point(|x: &[f64]| x.to_vec(), &lip(1.0), 1, 1e-3).unwrap();
        assert_eq!(out.residual, 0.0);
    }

    #[test]
    fn constant_map_converges_to_constant() {
        let out =
            approx_fixed_point(|_: &[f64]| vec![0.37], &lip(1.0), 1, 1e-3).unwrap();
        assert!((out.point.coords()[0] - 0.37).abs() < 1e-3);
        assert!(out.residual < 1e-3);
    }

    #[test]
    fn one_minus_x_localizes_the_crossing() {
        let out =
            approx_fixed_point(|x: &[f64]| vec![1.0 - x[0]], &lip(1.0), 1, 1e-3).unwrap();
        assert!((out.point.coords()[0] - 0.5).abs() < 5e-4);
        assert!(out.residual < 1e-3);
    }

    #[test]
    fn swap_map_localizes_the_diagonal() {
        let out = approx_fixed_point(
            |x: &[f64]| vec![x[1], x[0]],
            &lip(1.0),
            2,
            1e-2,
        )
        .unwrap();
        let c = out.point.coords();
        assert!((c[0] - c[1]).abs() < 1e-2);
        assert!(out.residual < 1e-2);
    }

    #[test]
    fn three_dimensional_scan_converges() {
        // Contraction toward (0.3, 0.6, 0.5) with a deliberately coarse
        // eps so the full scan stays small.
        let target = [0.3, 0.6, 0.5];
        let out = approx_fixed_point(
            move |x: &[f64]| {
                x.iter()
                    .zip(&target)
                    .map(|(c, t)| 0.5 * c + 0.5 * t)
                    .collect()
            },
            &lip(0.5),
            3,
            0.25,
        )
        .unwrap();
        assert!(out.residual < 0.25);
        let c = out.point.coords();
        for (got, want) in c.iter().zip(&target) {
            // residual = 0.5 |x - target| per axis
            assert!((got - want).abs() < 0.5, "{got} vs {want}");
        }
    }

    #[test]
    fn unsound_modulus_is_reported() {
        // Claimed Lipschitz 0.01 for the steep spike map forces a grid
        // far too coarse; the witnessed residual catches it.
        let f = |x: &[f64]| vec![if x[0] < 0.5 { 0.9 } else { 0.1 }];
        let out = approx_fixed_point(f, &lip(0.01), 1, 0.2);
        match out {
            Err(Error::ModulusUnsound { residual, eps, .. }) => {
                assert!(residual >= eps);
            }
            other => panic!("expected unsound-modulus error, got {other:?}"),
        }
    }

    #[test]
    fn residual_is_monotone_under_eps_halving() {
        let cases: Vec<(Box<dyn Fn(&[f64]) -> Vec<f64> + Sync>, usize, f64)> = vec![
            (Box::new(|x: &[f64]| vec![1.0 - x[0]]), 1, 1.0),
            (Box::new(|x: &[f64]| vec![x[1], x[0]]), 2, 1.0),
            (Box::new(|x: &[f64]| vec![0.5 * x[0] + 0.25, 0.5 * x[1] + 0.25]), 2, 0.5),
        ];
        for (f, n, l) in cases {
            let mut eps = 0.2;
            let mut last = f64::INFINITY;
            for _ in 0..4 {
                let out = approx_fixed_point(&f, &lip(l), n, eps).unwrap();
                assert!(
                    out.residual <= last + 1e-12,
                    "residual grew: {last} -> {} at eps {eps}",
                    out.residual
                );
                last = out.residual;
                eps /= 2.0;
            }
        }
    }

    #[test]
    fn random_certified_polynomial_maps_meet_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..50 {
            let n = if trial % 2 == 0 { 1 } else { 2 };
            // Affine-plus-product maps rescaled exactly into [0,1].
            let mut rows = Vec::new();
            for _ in 0..n {
                let b: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
                let c: f64 = if n == 2 { rng.random_range(-0.3..0.3) } else { 0.0 };
                let lo: f64 = b.iter().map(|v| v.min(0.0)).sum::<f64>() + c.min(0.0);
                let hi: f64 = b.iter().map(|v| v.max(0.0)).sum::<f64>() + c.max(0.0);
                let span = (hi - lo).max(1e-6);
                rows.push((b, c, lo, span));
            }
            let rows_for_l = rows.clone();
            let f = move |x: &[f64]| -> Vec<f64> {
                rows.iter()
                    .map(|(b, c, lo, span)| {
                        let cross = if x.len() == 2 { c * x[0] * x[1] } else { 0.0 };
                        let raw: f64 =
                            b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>() + cross;
                        ((raw - lo) / span).clamp(0.0, 1.0)
                    })
                    .collect()
            };
            let l = rows_for_l
                .iter()
                .map(|(b, c, _, span)| {
                    (b.iter().map(|v| v.abs()).sum::<f64>() + 2.0 * c.abs()) / span
                })
                .fold(0.0f64, f64::max)
                .max(1e-6);
            let out = approx_fixed_point(f, &lip(l), n, 0.05)
                .unwrap_or_else(|e| panic!("trial {trial} failed: {e:?}"));
            assert!(out.residual < 0.05);
        }
    }

    #[test]
    fn permutation_order_is_lexicographic() {
        assert_eq!(
            permutations(3),
            vec![
                vec![1, 2, 3],
                vec![1, 3, 2],
                vec![2, 1, 3],
                vec![2, 3, 1],
                vec![3, 1, 2],
                vec![3, 2, 1],
            ]
        );
    }
}
