//! Continuity moduli: computable functions `delta(eps) > 0` certifying
//! `dist(a, b) < delta(eps)  =>  |f(a) - f(b)| < eps`.

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ContinuityModulus {
    /// `delta(eps) = min(eps / l, cap)`.
    Lipschitz { l: f64, cap: f64 },
    /// Piecewise-linear interpolation through `(eps, delta)` pairs, sorted
    /// by `eps`; below the first pair delta scales linearly through the
    /// origin, above the last it stays constant.
    Table { pairs: Vec<(f64, f64)> },
}

impl ContinuityModulus {
    pub fn lipschitz(l: f64) -> Result<Self> {
        Self::lipschitz_capped(l, f64::INFINITY)
    }

    pub fn lipschitz_capped(l: f64, cap: f64) -> Result<Self> {
        if !(l > 0.0) || !(cap > 0.0) {
            return Err(Error::Construction(format!(
                "Lipschitz modulus needs positive constant and cap, got l={l}, cap={cap}"
            )));
        }
        Ok(ContinuityModulus::Lipschitz { l, cap })
    }

    pub fn table(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Construction("empty modulus table".into()));
        }
        for window in pairs.windows(2) {
            if window[1].0 <= window[0].0 || window[1].1 < window[0].1 {
                return Err(Error::Construction(
                    "modulus table must be strictly increasing in eps and nondecreasing in delta"
                        .into(),
                ));
            }
        }
        if pairs.iter().any(|&(e, d)| !(e > 0.0) || !(d > 0.0)) {
            return Err(Error::Construction(
                "modulus table entries must be positive".into(),
            ));
        }
        Ok(ContinuityModulus::Table { pairs })
    }

    /// The certified step for tolerance `eps`; positive whenever `eps` is.
    pub fn delta(&self, eps: f64) -> f64 {
        if !(eps > 0.0) {
            return 0.0;
        }
        match self {
            ContinuityModulus::Lipschitz { l, cap } => (eps / l).min(*cap),
            ContinuityModulus::Table { pairs } => {
                let first = pairs[0];
                if eps <= first.0 {
                    return first.1 * (eps / first.0);
                }
                for window in pairs.windows(2) {
                    let (e0, d0) = window[0];
                    let (e1, d1) = window[1];
                    if eps <= e1 {
                        let t = (eps - e0) / (e1 - e0);
                        return d0 + t * (d1 - d0);
                    }
                }
                pairs.last().expect("nonempty table").1
            }
        }
    }

    /// Modulus for `eps -> min(eps, delta(eps))`, the step certified for a
    /// function graph: moving the argument by `d` moves a graph point by at
    /// most `max(d, variation)` in the product max-metric.
    pub fn min_with_identity(&self) -> Self {
        match self {
            ContinuityModulus::Lipschitz { l, cap } => ContinuityModulus::Lipschitz {
                l: l.max(1.0),
                cap: *cap,
            },
            ContinuityModulus::Table { pairs } => ContinuityModulus::Table {
                pairs: pairs.iter().map(|&(e, d)| (e, d.min(e))).collect(),
            },
        }
    }

    /// The pointwise minimum `eps -> min(self(eps), other(eps))`, itself a
    /// valid modulus. Both inputs are piecewise linear, so the result is
    /// built on the union of their knots plus any crossing points.
    pub fn pointwise_min(&self, other: &Self) -> Result<Self> {
        if let (
            ContinuityModulus::Lipschitz { l: l1, cap: c1 },
            ContinuityModulus::Lipschitz { l: l2, cap: c2 },
        ) = (self, other)
        {
            return Ok(ContinuityModulus::Lipschitz {
                l: l1.max(*l2),
                cap: c1.min(*c2),
            });
        }

        let mut knots: Vec<f64> = self
            .knots()
            .into_iter()
            .chain(other.knots())
            .filter(|e| *e > 0.0)
            .collect();
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knot"));
        knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

        // Crossings: on each span both curves are affine, so they meet at
        // most once; the tails beyond the last knot may also cross.
        let mut extra = Vec::new();
        let mut lo = 0.0;
        for &hi in &knots {
            let s1 = (self.delta(hi) - self.delta(lo)) / (hi - lo);
            let s2 = (other.delta(hi) - other.delta(lo)) / (hi - lo);
            if (s1 - s2).abs() > 1e-15 {
                let t = (other.delta(lo) - self.delta(lo)) / (s1 - s2);
                let e = lo + t;
                if e > lo + 1e-12 && e < hi - 1e-12 {
                    extra.push(e);
                }
            }
            lo = hi;
        }
        let last = *knots.last().expect("mixed moduli always carry a knot");
        let (s1, s2) = (self.tail_slope(), other.tail_slope());
        if (s1 - s2).abs() > 1e-15 {
            let t = (other.delta(last) - self.delta(last)) / (s1 - s2);
            let e = last + t;
            if e > last + 1e-12 {
                extra.push(e);
            }
        }
        knots.extend(extra);
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knot"));
        knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

        ContinuityModulus::table(
            knots
                .into_iter()
                .map(|e| (e, self.delta(e).min(other.delta(e))))
                .collect(),
        )
    }

    /// Largest value change certified for arguments at distance `h`:
    /// `inf { eps : delta(eps) > h }`. `None` when the modulus never
    /// certifies steps above `h` (the caller must fall back to a global
    /// bound such as the codomain diameter).
    pub(crate) fn variation_bound(&self, h: f64) -> Option<f64> {
        if h <= 0.0 {
            return Some(0.0);
        }
        match self {
            ContinuityModulus::Lipschitz { l, cap } => {
                if *cap <= h {
                    None
                } else {
                    Some(h * l)
                }
            }
            ContinuityModulus::Table { pairs } => {
                let (e1, d1) = pairs[0];
                if d1 > h {
                    return Some(h * e1 / d1);
                }
                for window in pairs.windows(2) {
                    let (e0, d0) = window[0];
                    let (e1, d1) = window[1];
                    if d1 > h {
                        return Some(e0 + (h - d0) / (d1 - d0) * (e1 - e0));
                    }
                }
                None
            }
        }
    }

    fn knots(&self) -> Vec<f64> {
        match self {
            ContinuityModulus::Lipschitz { l, cap } => {
                if cap.is_finite() {
                    vec![cap * l]
                } else {
                    Vec::new()
                }
            }
            ContinuityModulus::Table { pairs } => pairs.iter().map(|&(e, _)| e).collect(),
        }
    }

    fn tail_slope(&self) -> f64 {
        match self {
            ContinuityModulus::Lipschitz { l, cap } => {
                if cap.is_finite() {
                    0.0
                } else {
                    1.0 / l
                }
            }
            ContinuityModulus::Table { .. } => 0.0,
        }
    }

    /// Modulus for a reparametrized map: `delta'(eps) = delta(eps *
    /// eps_factor) * delta_factor`. Used when rescaling domains to the unit
    /// cube.
    pub fn scaled(&self, eps_factor: f64, delta_factor: f64) -> Self {
        debug_assert!(eps_factor > 0.0 && delta_factor > 0.0);
        match self {
            ContinuityModulus::Lipschitz { l, cap } => ContinuityModulus::Lipschitz {
                l: l / (eps_factor * delta_factor),
                cap: cap * delta_factor,
            },
            ContinuityModulus::Table { pairs } => ContinuityModulus::Table {
                pairs: pairs
                    .iter()
                    .map(|&(e, d)| (e / eps_factor, d * delta_factor))
                    .collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_delta() {
        let m = ContinuityModulus::lipschitz(2.0).unwrap();
        assert_eq!(m.delta(0.1), 0.05);
        assert_eq!(m.delta(0.0), 0.0);
        let capped = ContinuityModulus::lipschitz_capped(1e-12, 1.0).unwrap();
        assert_eq!(capped.delta(100.0), 1.0);
        assert!(capped.delta(1e-9) > 0.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(ContinuityModulus::lipschitz(0.0).is_err());
        assert!(ContinuityModulus::lipschitz(-1.0).is_err());
        assert!(ContinuityModulus::table(vec![]).is_err());
        assert!(ContinuityModulus::table(vec![(0.1, 0.0)]).is_err());
        assert!(ContinuityModulus::table(vec![(0.2, 0.1), (0.1, 0.2)]).is_err());
    }

    #[test]
    fn table_interpolates_monotonically() {
        let m = ContinuityModulus::table(vec![(0.1, 0.01), (1.0, 0.5)]).unwrap();
        assert!((m.delta(0.1) - 0.01).abs() < 1e-15);
        assert!((m.delta(1.0) - 0.5).abs() < 1e-15);
        assert!((m.delta(0.55) - 0.255).abs() < 1e-12);
        // Below the table: linear through the origin.
        assert!((m.delta(0.05) - 0.005).abs() < 1e-15);
        // Above: clamped.
        assert_eq!(m.delta(3.0), 0.5);
        let mut prev = 0.0;
        for i in 1..200 {
            let d = m.delta(i as f64 * 0.01);
            assert!(d >= prev);
            prev = d;
        }
    }

    #[test]
    fn scaling_composes() {
        let m = ContinuityModulus::lipschitz(2.0).unwrap();
        let s = m.scaled(0.5, 2.0);
        // delta'(eps) = delta(eps/2) * 2 = eps/2.
        assert!((s.delta(0.2) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identity_cap() {
        // Gentle slopes get capped by the identity...
        let m = ContinuityModulus::lipschitz(0.5).unwrap().min_with_identity();
        assert!((m.delta(2.0) - 2.0).abs() < 1e-15);
        // ...steep ones are unchanged.
        let m = ContinuityModulus::lipschitz(4.0).unwrap().min_with_identity();
        assert!((m.delta(2.0) - 0.5).abs() < 1e-15);
        let t = ContinuityModulus::table(vec![(0.1, 0.5), (1.0, 2.0)])
            .unwrap()
            .min_with_identity();
        for e in [0.05, 0.1, 0.5, 1.0, 4.0] {
            assert!(t.delta(e) <= e + 1e-15);
        }
    }

    #[test]
    fn pointwise_min_agrees_with_both_inputs() {
        let cases = [
            (
                ContinuityModulus::lipschitz(2.0).unwrap(),
                ContinuityModulus::lipschitz_capped(1.0, 0.5).unwrap(),
            ),
            (
                ContinuityModulus::lipschitz(1.0).unwrap(),
                ContinuityModulus::table(vec![(1.0, 0.5), (2.0, 0.6)]).unwrap(),
            ),
            (
                ContinuityModulus::table(vec![(1.0, 5.0)]).unwrap(),
                ContinuityModulus::lipschitz(1.0).unwrap(),
            ),
            (
                ContinuityModulus::table(vec![(0.5, 0.1), (2.0, 1.5)]).unwrap(),
                ContinuityModulus::table(vec![(0.3, 0.2), (1.0, 0.4)]).unwrap(),
            ),
        ];
        for (a, b) in cases {
            let m = a.pointwise_min(&b).unwrap();
            for i in 1..400 {
                let e = i as f64 * 0.02;
                let want = a.delta(e).min(b.delta(e));
                assert!(
                    (m.delta(e) - want).abs() <= 1e-9 * (1.0 + want),
                    "min modulus mismatch at eps={e}: got {}, want {want}",
                    m.delta(e)
                );
            }
        }
    }

    #[test]
    fn variation_bound_inverts_delta() {
        let m = ContinuityModulus::lipschitz(2.0).unwrap();
        assert_eq!(m.variation_bound(0.1), Some(0.2));
        let capped = ContinuityModulus::lipschitz_capped(1.0, 0.25).unwrap();
        assert_eq!(capped.variation_bound(0.3), None);
        let t = ContinuityModulus::table(vec![(1.0, 0.5), (2.0, 1.0)]).unwrap();
        // delta passes 0.75 halfway through the second span.
        let inv = t.variation_bound(0.75).unwrap();
        assert!((inv - 1.5).abs() < 1e-12);
        assert!(t.variation_bound(1.0).is_none());
        // Sound: pairs closer than the bound's preimage vary by less.
        for h in [0.01, 0.2, 0.45] {
            let eta = t.variation_bound(h).unwrap();
            assert!(t.delta(eta + 1e-9) > h);
        }
    }
}
