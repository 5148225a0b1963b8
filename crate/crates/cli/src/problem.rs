//! Problem-file schema, validation and compilation into solver inputs.
//!
//! A problem file is a single JSON object:
//!
//! ```json
//! {
//!   "kind": "brouwer" | "kakutani" | "minimax",
//!   "dimension": { "n": 1, "m": 1 },
//!   "function": "…" or ["…", …],
//!   "graph": [[[x, u], [x2, u2]], …],
//!   "modulus": "auto" or { "lipschitz": 1.0 },
//!   "eps": 0.01,
//!   "domain": { "box": [[lo, hi], …] } or { "hull": [[…], …] },
//!   "seed": 0
//! }
//! ```
//!
//! `function` holds one expression per output component for `brouwer`
//! (and for function-backed `kakutani` problems) and a single payoff
//! expression for `minimax`; `graph` holds the segments of a
//! one-dimensional polygonal set-valued map. Every structural problem
//! is an input error (exit 1); failures that happen while a well-posed
//! problem is being certified are certification errors (exit 2).

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use fixpoint::expr::{self, ContinuityModulus, Expr};
use fixpoint::geometry::{Domain, Point};
use fixpoint::setvalued::{Segment, SetValuedMap};

/// CLI failure split by exit code: bad input (1) versus a problem that
/// was understood but could not be certified (2).
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Certification(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Certification(m) => f.write_str(m),
        }
    }
}

impl From<fixpoint::Error> for Failure {
    fn from(err: fixpoint::Error) -> Self {
        use fixpoint::Error::*;
        match err {
            Parse { .. } | DimensionMismatch { .. } | InvalidPoint(_) | InvalidDomain(_)
            | InvalidEps(_) | EmptySet | Construction(_) | DivisionNearZero
            | UnboundedEnclosure | CodomainEscape { .. } => Failure::Input(err.to_string()),
            _ => Failure::Certification(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Brouwer,
    Kakutani,
    Minimax,
}

impl Kind {
    pub fn parse(s: &str) -> CliResult<Kind> {
        match s {
            "brouwer" => Ok(Kind::Brouwer),
            "kakutani" => Ok(Kind::Kakutani),
            "minimax" => Ok(Kind::Minimax),
            other => Err(Failure::Input(format!(
                "field \"kind\": expected \"brouwer\", \"kakutani\" or \"minimax\", got {other:?}"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Brouwer => "brouwer",
            Kind::Kakutani => "kakutani",
            Kind::Minimax => "minimax",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: String,
    pub dimension: DimensionSpec,
    #[serde(default)]
    pub function: Option<FunctionSpec>,
    #[serde(default)]
    pub graph: Option<Vec<[[f64; 2]; 2]>>,
    pub modulus: ModulusSpec,
    pub eps: f64,
    pub domain: DomainSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionSpec {
    pub n: usize,
    #[serde(default)]
    pub m: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    One(String),
    Many(Vec<String>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ModulusSpec {
    Named(String),
    Lipschitz { lipschitz: f64 },
}

#[derive(Clone, Debug, Deserialize)]
pub enum DomainSpec {
    #[serde(rename = "box")]
    Box(Vec<[f64; 2]>),
    #[serde(rename = "hull")]
    Hull(Vec<Vec<f64>>),
}

pub fn load_problem(path: &Path) -> CliResult<ProblemFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_problem(&text, &path.display().to_string())
}

pub fn parse_problem(text: &str, origin: &str) -> CliResult<ProblemFile> {
    let file: ProblemFile = serde_json::from_str(text)
        .map_err(|e| Failure::Input(format!("{origin}: {e}")))?;
    if !(file.eps > 0.0 && file.eps.is_finite()) {
        return Err(Failure::Input(format!(
            "{origin}: field \"eps\" must be a positive finite real, got {}",
            file.eps
        )));
    }
    Ok(file)
}

/// A problem checked for consistency and lowered to solver inputs.
pub enum CompiledProblem {
    Brouwer(BrouwerProblem),
    Kakutani(KakutaniProblem),
    Minimax(MinimaxProblem),
}

/// A continuous self-map of a box, one expression per component.
pub struct BrouwerProblem {
    pub exprs: Vec<Expr>,
    pub n: usize,
    pub lower: Vec<f64>,
    pub span: Vec<f64>,
    /// Continuity modulus of the map in original coordinates.
    pub omega: ContinuityModulus,
    pub eps: f64,
    pub seed: u64,
}

pub struct KakutaniProblem {
    pub map: SetValuedMap,
    pub eps: f64,
    pub seed: u64,
}

/// A payoff on the unit cube pair, quasi-concave in `x`, quasi-convex
/// in `y`.
pub struct MinimaxProblem {
    pub f: Expr,
    pub n: usize,
    pub m: usize,
    pub omega: ContinuityModulus,
    pub eps: f64,
    pub seed: u64,
}

/// Validates the parsed file against `kind` and builds the solver-ready
/// problem. `eps` and `seed` are the effective values after flag
/// overrides.
pub fn compile(file: &ProblemFile, kind: Kind, eps: f64, seed: u64) -> CliResult<CompiledProblem> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Failure::Input(format!(
            "eps must be a positive finite real, got {eps}"
        )));
    }
    if kind != Kind::Minimax && file.dimension.m.is_some() {
        return Err(Failure::Input(
            "field \"dimension.m\" only applies to minimax problems".into(),
        ));
    }
    if kind != Kind::Kakutani && file.graph.is_some() {
        return Err(Failure::Input(
            "field \"graph\" only applies to kakutani problems".into(),
        ));
    }
    match kind {
        Kind::Brouwer => compile_brouwer(file, eps, seed),
        Kind::Kakutani => compile_kakutani(file, eps, seed),
        Kind::Minimax => compile_minimax(file, eps, seed),
    }
}

fn expression_list(spec: &FunctionSpec, n: usize) -> CliResult<Vec<Expr>> {
    let sources: Vec<&str> = match spec {
        FunctionSpec::One(s) => vec![s.as_str()],
        FunctionSpec::Many(v) => v.iter().map(String::as_str).collect(),
    };
    if sources.len() != n {
        return Err(Failure::Input(format!(
            "field \"function\": expected {n} component expression(s), got {}",
            sources.len()
        )));
    }
    let mut exprs = Vec::with_capacity(n);
    for (i, src) in sources.iter().enumerate() {
        let e = expr::parse(src)
            .map_err(|err| Failure::Input(format!("function component {i}: {err}")))?;
        let (nx, ny) = e.arity();
        if ny > 0 {
            return Err(Failure::Input(format!(
                "function component {i} uses y-variables; only x0..x{} are available",
                n - 1
            )));
        }
        if nx > n {
            return Err(Failure::Input(format!(
                "function component {i} uses x{}, but the problem dimension is {n}",
                nx - 1
            )));
        }
        exprs.push(e);
    }
    Ok(exprs)
}

fn build_box(spec: &[[f64; 2]]) -> CliResult<(Domain, Vec<f64>, Vec<f64>)> {
    let lower: Vec<f64> = spec.iter().map(|p| p[0]).collect();
    let upper: Vec<f64> = spec.iter().map(|p| p[1]).collect();
    for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
        if !(u > l) || !l.is_finite() || !u.is_finite() {
            return Err(Failure::Input(format!(
                "domain box axis {i} must be a nondegenerate finite interval, got [{l}, {u}]"
            )));
        }
    }
    let span: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| u - l).collect();
    let domain = Domain::make_box(lower.clone(), upper)?;
    Ok((domain, lower, span))
}

fn build_domain(spec: &DomainSpec, n: usize) -> CliResult<Domain> {
    let domain = match spec {
        DomainSpec::Box(axes) => build_box(axes)?.0,
        DomainSpec::Hull(rows) => {
            let points: Vec<Point> = rows.iter().map(|r| Point::from_slice(r)).collect();
            Domain::hull(points)?
        }
    };
    if domain.dim() != n {
        return Err(Failure::Input(format!(
            "domain has dimension {}, but \"dimension.n\" is {n}",
            domain.dim()
        )));
    }
    Ok(domain)
}

/// Combined max-metric modulus of a component list: the pointwise
/// minimum of the per-component interval-derived moduli.
fn auto_modulus(exprs: &[Expr], domain: &Domain) -> CliResult<ContinuityModulus> {
    let mut combined: Option<ContinuityModulus> = None;
    for e in exprs {
        let m = expr::lipschitz_modulus(e, domain, None)?;
        combined = Some(match combined {
            None => m,
            Some(c) => c.pointwise_min(&m)?,
        });
    }
    combined.ok_or_else(|| Failure::Input("empty function list".into()))
}

fn modulus_from_spec(
    spec: &ModulusSpec,
    auto: impl FnOnce() -> CliResult<ContinuityModulus>,
) -> CliResult<ContinuityModulus> {
    match spec {
        ModulusSpec::Named(name) if name == "auto" => auto(),
        ModulusSpec::Named(other) => Err(Failure::Input(format!(
            "field \"modulus\": expected \"auto\" or {{\"lipschitz\": L}}, got {other:?}"
        ))),
        ModulusSpec::Lipschitz { lipschitz } => {
            ContinuityModulus::lipschitz(*lipschitz).map_err(|e| {
                Failure::Input(format!("field \"modulus.lipschitz\": {e}"))
            })
        }
    }
}

fn compile_brouwer(file: &ProblemFile, eps: f64, seed: u64) -> CliResult<CompiledProblem> {
    let n = file.dimension.n;
    if n == 0 {
        return Err(Failure::Input("\"dimension.n\" must be positive".into()));
    }
    let Some(function) = &file.function else {
        return Err(Failure::Input(
            "brouwer problems need a \"function\" list with one expression per component".into(),
        ));
    };
    let exprs = expression_list(function, n)?;
    let DomainSpec::Box(axes) = &file.domain else {
        return Err(Failure::Input(
            "brouwer problems are solved on box domains; use kind \"kakutani\" for hulls".into(),
        ));
    };
    let (domain, lower, span) = build_box(axes)?;
    if domain.dim() != n {
        return Err(Failure::Input(format!(
            "domain has dimension {}, but \"dimension.n\" is {n}",
            domain.dim()
        )));
    }
    let omega = modulus_from_spec(&file.modulus, || auto_modulus(&exprs, &domain))?;
    Ok(CompiledProblem::Brouwer(BrouwerProblem {
        exprs,
        n,
        lower,
        span,
        omega,
        eps,
        seed,
    }))
}

fn compile_kakutani(file: &ProblemFile, eps: f64, seed: u64) -> CliResult<CompiledProblem> {
    let n = file.dimension.n;
    if n == 0 {
        return Err(Failure::Input("\"dimension.n\" must be positive".into()));
    }
    let map = match (&file.graph, &file.function) {
        (Some(_), Some(_)) => {
            return Err(Failure::Input(
                "give either \"graph\" or \"function\", not both".into(),
            ));
        }
        (Some(segments), None) => {
            if n != 1 {
                return Err(Failure::Input(
                    "polygonal graphs define one-dimensional maps; \"dimension.n\" must be 1"
                        .into(),
                ));
            }
            let domain = build_domain(&file.domain, 1)?;
            let delta = modulus_from_spec(&file.modulus, || {
                // Without derivative information the polygonal default is the
                // identity modulus; construction spot-checks it against the
                // segments and rejects unsound combinations.
                Ok(ContinuityModulus::lipschitz(1.0)?)
            })?;
            let segs: CliResult<Vec<Segment>> = segments
                .iter()
                .map(|[[x, u], [x2, u2]]| {
                    Segment::new(Point::from_slice(&[*x, *u]), Point::from_slice(&[*x2, *u2]))
                        .map_err(Failure::from)
                })
                .collect();
            SetValuedMap::from_polygonal_graph(segs?, domain, delta)?
        }
        (None, Some(function)) => {
            let exprs = expression_list(function, n)?;
            let domain = build_domain(&file.domain, n)?;
            let omega = modulus_from_spec(&file.modulus, || auto_modulus(&exprs, &domain))?;
            let f = move |x: &[f64]| eval_components_or_escape(&exprs, x);
            SetValuedMap::from_function(f, &omega, domain)?
        }
        (None, None) => {
            return Err(Failure::Input(
                "kakutani problems need either a \"graph\" or a \"function\"".into(),
            ));
        }
    };
    Ok(CompiledProblem::Kakutani(KakutaniProblem { map, eps, seed }))
}

fn compile_minimax(file: &ProblemFile, eps: f64, seed: u64) -> CliResult<CompiledProblem> {
    let Some(function) = &file.function else {
        return Err(Failure::Input(
            "minimax problems need a \"function\" with the payoff expression".into(),
        ));
    };
    let src = match function {
        FunctionSpec::One(s) => s.as_str(),
        FunctionSpec::Many(v) if v.len() == 1 => v[0].as_str(),
        FunctionSpec::Many(v) => {
            return Err(Failure::Input(format!(
                "minimax problems take a single payoff expression, got {} components",
                v.len()
            )));
        }
    };
    let f = expr::parse(src).map_err(|e| Failure::Input(format!("payoff expression: {e}")))?;
    let (nx, ny) = f.arity();
    let (n, m) = (nx.max(1), ny.max(1));
    if file.dimension.n != n {
        return Err(Failure::Input(format!(
            "\"dimension.n\" is {}, but the payoff uses {n} x-variable(s)",
            file.dimension.n
        )));
    }
    if let Some(fm) = file.dimension.m {
        if fm != m {
            return Err(Failure::Input(format!(
                "\"dimension.m\" is {fm}, but the payoff uses {m} y-variable(s)"
            )));
        }
    }
    let DomainSpec::Box(axes) = &file.domain else {
        return Err(Failure::Input(
            "minimax payoffs are certified on the unit cube; \"domain\" must be a box".into(),
        ));
    };
    if axes.len() != n + m {
        return Err(Failure::Input(format!(
            "domain has {} axes, but the joint strategy space has {}",
            axes.len(),
            n + m
        )));
    }
    for (i, [lo, hi]) in axes.iter().enumerate() {
        if lo.abs() > 1e-12 || (hi - 1.0).abs() > 1e-12 {
            return Err(Failure::Input(format!(
                "minimax payoffs are certified on the unit cube; axis {i} is [{lo}, {hi}] \
                 (rescale the payoff instead)"
            )));
        }
    }
    let omega = modulus_from_spec(&file.modulus, || {
        Ok(expr::lipschitz_modulus(
            &f,
            &Domain::unit_box(n),
            Some(&Domain::unit_box(m)),
        )?)
    })?;
    Ok(CompiledProblem::Minimax(MinimaxProblem {
        f,
        n,
        m,
        omega,
        eps,
        seed,
    }))
}

/// Evaluates a component list at `x`, mapping evaluation breakdowns to
/// a point far outside every domain so the surrounding certification
/// fails loudly instead of comparing against NaN.
pub fn eval_components_or_escape(exprs: &[Expr], x: &[f64]) -> Vec<f64> {
    match eval_components(exprs, x) {
        Ok(v) => v,
        Err(_) => vec![1e30; exprs.len()],
    }
}

pub fn eval_components(exprs: &[Expr], x: &[f64]) -> fixpoint::Result<Vec<f64>> {
    exprs.iter().map(|e| e.eval(x, &[])).collect()
}
