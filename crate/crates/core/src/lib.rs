//! Constructive approximate fixed points for set-valued maps.
//!
//! Everything here is finite and certified: an `eps`-fixed point of a map `U`
//! is a point `x` together with a witness `u` such that the distance from `x`
//! to `u` is below `eps` and `(x, u)` lies on the graph of `U` up to the
//! backend's graph tolerance. No limits, no compactness arguments at runtime;
//! every claim a solver returns is re-checked against the user's data before
//! it is handed back.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: points, box/hull domains, metrics, projections and nets.
//! * [`expr`]: a small expression language with interval evaluation and
//!   derivative-based Lipschitz bounds.
//! * [`setvalued`]: set-valued maps with computable graph distance, plus the
//!   approximability checkers that gate the solvers.
//! * [`brouwer`]: simplicial (Kuhn/Sperner) search for approximate fixed
//!   points of continuous self-maps of the cube.
//! * [`kakutani`]: the set-valued pipeline (selection, interpolation, graph
//!   witness) built on top of [`brouwer`].
//! * [`minimax`]: saddle-point certification for quasi-convex/concave payoffs
//!   via best-response maps fed into [`kakutani`].
//!
//! With the default `parallel` feature the heavy grid scans fan out through
//! rayon; disabling it yields a fully sequential build that produces
//! bit-identical results.

pub mod brouwer;
mod error;
pub mod expr;
pub mod geometry;
pub mod kakutani;
pub mod minimax;
mod par;
pub mod setvalued;

pub use error::{Error, Result};
