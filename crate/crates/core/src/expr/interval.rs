//! Outward-rounded interval arithmetic and derivative enclosures.
//!
//! Every arithmetic endpoint is nudged one ulp outward, so enclosures stay
//! sound under IEEE round-to-nearest. Derivatives of `min`/`max`/`abs` at
//! undecided branches take the interval hull of both branch derivatives,
//! which bounds the slope of the piecewise function.

use super::modulus::ContinuityModulus;
use super::{Block, Expr};
use crate::geometry::{Domain, Metric};
use crate::{Error, Result};

/// Denominator enclosures must clear zero by this margin before the
/// derivative pass accepts a division.
pub const ENCLOSURE_DIV_GUARD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Largest absolute value attained on the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn hull(a: Interval, b: Interval) -> Interval {
        Interval {
            lo: a.lo.min(b.lo),
            hi: a.hi.max(b.hi),
        }
    }

    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: (self.lo + o.lo).next_down(),
            hi: (self.hi + o.hi).next_up(),
        }
    }

    fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: (self.lo - o.hi).next_down(),
            hi: (self.hi - o.lo).next_up(),
        }
    }

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    fn mul(self, o: Interval) -> Interval {
        let products = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        Interval {
            lo: products.iter().copied().fold(f64::INFINITY, f64::min).next_down(),
            hi: products
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
                .next_up(),
        }
    }

    /// `None` when the denominator comes within `margin` of zero.
    fn div(self, o: Interval, margin: f64) -> Option<Interval> {
        if o.lo <= margin && o.hi >= -margin {
            return None;
        }
        let quotients = [
            self.lo / o.lo,
            self.lo / o.hi,
            self.hi / o.lo,
            self.hi / o.hi,
        ];
        Some(Interval {
            lo: quotients
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
                .next_down(),
            hi: quotients
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
                .next_up(),
        })
    }

    fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval {
                lo: 0.0,
                hi: self.mag(),
            }
        }
    }

    fn min(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    fn max(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }
}

/// Sound enclosure of `e` over the interval boxes `x` and `y`.
///
/// Division by an interval containing zero is an error: the enclosure would
/// be unbounded.
pub fn interval_eval(e: &Expr, x: &[Interval], y: &[Interval]) -> Result<Interval> {
    Ok(match e {
        Expr::Const(c) => Interval::point(*c),
        Expr::Var(v) => {
            let slice = match v.block {
                Block::X => x,
                Block::Y => y,
            };
            *slice.get(v.index).ok_or(Error::DimensionMismatch {
                expected: v.index + 1,
                got: slice.len(),
            })?
        }
        Expr::Neg(a) => interval_eval(a, x, y)?.neg(),
        Expr::Abs(a) => interval_eval(a, x, y)?.abs(),
        Expr::Add(a, b) => interval_eval(a, x, y)?.add(interval_eval(b, x, y)?),
        Expr::Sub(a, b) => interval_eval(a, x, y)?.sub(interval_eval(b, x, y)?),
        Expr::Mul(a, b) => interval_eval(a, x, y)?.mul(interval_eval(b, x, y)?),
        Expr::Div(a, b) => interval_eval(a, x, y)?
            .div(interval_eval(b, x, y)?, 0.0)
            .ok_or(Error::UnboundedEnclosure)?,
        Expr::Min(a, b) => interval_eval(a, x, y)?.min(interval_eval(b, x, y)?),
        Expr::Max(a, b) => interval_eval(a, x, y)?.max(interval_eval(b, x, y)?),
    })
}

struct Enclosure {
    value: Interval,
    dx: Vec<Interval>,
    dy: Vec<Interval>,
}

impl Enclosure {
    fn constant(value: Interval, nx: usize, ny: usize) -> Self {
        Enclosure {
            value,
            dx: vec![Interval::ZERO; nx],
            dy: vec![Interval::ZERO; ny],
        }
    }

    fn zip(self, other: Enclosure, f: impl Fn(Interval, Interval) -> Interval) -> Enclosure {
        Enclosure {
            value: f(self.value, other.value),
            dx: self
                .dx
                .into_iter()
                .zip(other.dx)
                .map(|(a, b)| f(a, b))
                .collect(),
            dy: self
                .dy
                .into_iter()
                .zip(other.dy)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }
}

/// Forward-mode interval differentiation.
fn enclose(e: &Expr, x: &[Interval], y: &[Interval]) -> Result<Enclosure> {
    let nx = x.len();
    let ny = y.len();
    Ok(match e {
        Expr::Const(c) => Enclosure::constant(Interval::point(*c), nx, ny),
        Expr::Var(v) => {
            let slice = match v.block {
                Block::X => x,
                Block::Y => y,
            };
            let value = *slice.get(v.index).ok_or(Error::DimensionMismatch {
                expected: v.index + 1,
                got: slice.len(),
            })?;
            let mut enc = Enclosure::constant(value, nx, ny);
            match v.block {
                Block::X => enc.dx[v.index] = Interval::point(1.0),
                Block::Y => enc.dy[v.index] = Interval::point(1.0),
            }
            enc
        }
        Expr::Neg(a) => {
            let a = enclose(a, x, y)?;
            Enclosure {
                value: a.value.neg(),
                dx: a.dx.into_iter().map(Interval::neg).collect(),
                dy: a.dy.into_iter().map(Interval::neg).collect(),
            }
        }
        Expr::Abs(a) => {
            let a = enclose(a, x, y)?;
            let pick = |d: Interval| {
                if a.value.lo > 0.0 {
                    d
                } else if a.value.hi < 0.0 {
                    d.neg()
                } else {
                    Interval::hull(d, d.neg())
                }
            };
            Enclosure {
                value: a.value.abs(),
                dx: a.dx.into_iter().map(pick).collect(),
                dy: a.dy.into_iter().map(pick).collect(),
            }
        }
        Expr::Add(a, b) => enclose(a, x, y)?.zip(enclose(b, x, y)?, Interval::add),
        Expr::Sub(a, b) => enclose(a, x, y)?.zip(enclose(b, x, y)?, Interval::sub),
        Expr::Mul(a, b) => {
            let a = enclose(a, x, y)?;
            let b = enclose(b, x, y)?;
            let d = |da: Interval, db: Interval| da.mul(b.value).add(a.value.mul(db));
            Enclosure {
                value: a.value.mul(b.value),
                dx: a.dx.iter().zip(&b.dx).map(|(&p, &q)| d(p, q)).collect(),
                dy: a.dy.iter().zip(&b.dy).map(|(&p, &q)| d(p, q)).collect(),
            }
        }
        Expr::Div(a, b) => {
            let a = enclose(a, x, y)?;
            let b = enclose(b, x, y)?;
            let value = a
                .value
                .div(b.value, ENCLOSURE_DIV_GUARD)
                .ok_or(Error::UnboundedEnclosure)?;
            let denom_sq = b.value.mul(b.value);
            let d = |da: Interval, db: Interval| -> Result<Interval> {
                da.mul(b.value)
                    .sub(a.value.mul(db))
                    .div(denom_sq, 0.0)
                    .ok_or(Error::UnboundedEnclosure)
            };
            Enclosure {
                value,
                dx: a
                    .dx
                    .iter()
                    .zip(&b.dx)
                    .map(|(&p, &q)| d(p, q))
                    .collect::<Result<_>>()?,
                dy: a
                    .dy
                    .iter()
                    .zip(&b.dy)
                    .map(|(&p, &q)| d(p, q))
                    .collect::<Result<_>>()?,
            }
        }
        Expr::Min(a, b) | Expr::Max(a, b) => {
            let is_min = matches!(e, Expr::Min(..));
            let a = enclose(a, x, y)?;
            let b = enclose(b, x, y)?;
            let value = if is_min {
                a.value.min(b.value)
            } else {
                a.value.max(b.value)
            };
            // Branch decided only when the value enclosures separate.
            let take_a = if is_min {
                a.value.hi < b.value.lo
            } else {
                a.value.lo > b.value.hi
            };
            let take_b = if is_min {
                b.value.hi < a.value.lo
            } else {
                b.value.lo > a.value.hi
            };
            let d = |da: Interval, db: Interval| {
                if take_a {
                    da
                } else if take_b {
                    db
                } else {
                    Interval::hull(da, db)
                }
            };
            Enclosure {
                value,
                dx: a.dx.iter().zip(&b.dx).map(|(&p, &q)| d(p, q)).collect(),
                dy: a.dy.iter().zip(&b.dy).map(|(&p, &q)| d(p, q)).collect(),
            }
        }
    })
}

fn domain_intervals(dom: &Domain) -> Vec<Interval> {
    match dom {
        Domain::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| Interval::new(l, u))
            .collect(),
        Domain::Hull { .. } => {
            // The bounding box is a sound superset for derivative bounds.
            let n = dom.dim();
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            if let Domain::Hull { generators } = dom {
                for g in generators {
                    for (i, &c) in g.coords().iter().enumerate() {
                        lo[i] = lo[i].min(c);
                        hi[i] = hi[i].max(c);
                    }
                }
            }
            lo.into_iter()
                .zip(hi)
                .map(|(l, u)| Interval::new(l, u))
                .collect()
        }
    }
}

/// Lipschitz modulus of `e` with respect to the max metric on the product
/// of the two domains.
///
/// The constant is the sum over variables of the sup-norm of the partial
/// derivative enclosure: `|f(a) - f(b)| <= sum_i L_i |a_i - b_i| <= L *
/// max_i |a_i - b_i|`. Expressions with vanishing derivative get the
/// constant floored at 1e-12 and the step capped at the domain diameter,
/// so the modulus stays positive.
pub fn lipschitz_modulus(
    e: &Expr,
    x_dom: &Domain,
    y_dom: Option<&Domain>,
) -> Result<ContinuityModulus> {
    let (nx, ny) = e.arity();
    if nx > x_dom.dim() {
        return Err(Error::DimensionMismatch {
            expected: nx,
            got: x_dom.dim(),
        });
    }
    if ny > y_dom.map_or(0, Domain::dim) {
        return Err(Error::DimensionMismatch {
            expected: ny,
            got: y_dom.map_or(0, Domain::dim),
        });
    }
    let x = domain_intervals(x_dom);
    let y = y_dom.map(domain_intervals).unwrap_or_default();
    let enc = enclose(e, &x, &y)?;
    let l: f64 = enc
        .dx
        .iter()
        .chain(&enc.dy)
        .map(Interval::mag)
        .sum();
    if !l.is_finite() {
        return Err(Error::UnboundedEnclosure);
    }
    if l >= 1e-12 {
        ContinuityModulus::lipschitz(l)
    } else {
        let mut diam = x_dom.diameter(Metric::Max);
        if let Some(yd) = y_dom {
            diam = diam.max(yd.diameter(Metric::Max));
        }
        if diam <= 0.0 {
            diam = 1.0;
        }
        ContinuityModulus::lipschitz_capped(1e-12, diam)
    }
}
