//! `fixpoint solve`: dispatch a compiled problem to the matching
//! solver and emit the certified report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use fixpoint::expr::Block;
use fixpoint::geometry::{Domain, Metric};
use fixpoint::{brouwer, kakutani, minimax};

use crate::problem::{
    self, BrouwerProblem, CliResult, CompiledProblem, Failure, KakutaniProblem, Kind,
    MinimaxProblem,
};
use crate::report::{self, real, reals, CertificateOut, ErrorOut, ResultOut, TraceOut};

pub struct SolveFlags<'a> {
    pub eps: Option<f64>,
    pub out: Option<&'a Path>,
    pub seed: Option<u64>,
    pub grid_cap: u64,
    pub quiet: bool,
}

pub fn cmd_solve(path: &Path, flags: &SolveFlags) -> CliResult<()> {
    let start = Instant::now();
    if flags.grid_cap == 0 {
        return Err(Failure::Input("--grid-cap must be positive".into()));
    }
    let file = problem::load_problem(path)?;
    let kind = Kind::parse(&file.kind)?;
    let eps = flags.eps.unwrap_or(file.eps);
    let seed = flags.seed.unwrap_or(file.seed);

    let solved = problem::compile(&file, kind, eps, seed).and_then(|compiled| match compiled {
        CompiledProblem::Brouwer(p) => solve_brouwer(&p, flags.grid_cap),
        CompiledProblem::Kakutani(p) => solve_kakutani(&p, flags.grid_cap),
        CompiledProblem::Minimax(p) => solve_minimax(&p, flags.grid_cap),
    });
    match solved {
        Ok(mut result) => {
            result.wall_time_ms = start.elapsed().as_millis();
            report::emit(&report::render(&result), flags.out, flags.quiet)
        }
        Err(Failure::Certification(message)) => {
            let body = ErrorOut {
                kind: kind.name(),
                error: message.clone(),
                eps: real(eps),
                wall_time_ms: start.elapsed().as_millis(),
            };
            // Emit the failure report anyway; exit code 2 carries the verdict.
            report::emit(&report::render(&body), flags.out, flags.quiet)?;
            Err(Failure::Certification(message))
        }
        Err(input) => Err(input),
    }
}

/// Probe density by dimension: dense nets are affordable only in low
/// dimension, and past ~20 axes the solver's own grid guards trip
/// before the probe would matter.
fn probe_points(n: usize) -> CliResult<Vec<fixpoint::geometry::Point>> {
    let pitch = match n {
        0..=4 => 0.125,
        5..=10 => 0.5,
        11..=20 => 1.0,
        _ => return Ok(Vec::new()),
    };
    Ok(Domain::unit_box(n).eps_net(pitch)?)
}

fn solve_brouwer(p: &BrouwerProblem, grid_cap: u64) -> CliResult<ResultOut> {
    let span_max = p.span.iter().cloned().fold(0.0, f64::max);
    let span_min = p.span.iter().cloned().fold(f64::INFINITY, f64::min);
    let real_of = |t: &[f64]| -> Vec<f64> {
        t.iter()
            .zip(&p.lower)
            .zip(&p.span)
            .map(|((ti, lo), s)| lo + s * ti)
            .collect()
    };

    // A fixed point needs a self-map; catch escapes up front with real
    // coordinates in the message instead of failing deep in the search.
    let tol = 1e-9 * span_max.max(1.0);
    for probe in probe_points(p.n)? {
        let x = real_of(probe.coords());
        let image = problem::eval_components(&p.exprs, &x)
            .map_err(|e| Failure::Input(format!("function evaluation at x = {x:?}: {e}")))?;
        for ((img, lo), s) in image.iter().zip(&p.lower).zip(&p.span) {
            if *img < lo - tol || *img > lo + s + tol {
                return Err(Failure::Input(format!(
                    "map leaves its domain: f({x:?}) = {image:?}"
                )));
            }
        }
    }

    let exprs = p.exprs.clone();
    let (lower, span) = (p.lower.clone(), p.span.clone());
    let g = move |t: &[f64]| -> Vec<f64> {
        let x: Vec<f64> = t
            .iter()
            .zip(&lower)
            .zip(&span)
            .map(|((ti, lo), s)| lo + s * ti)
            .collect();
        let image = problem::eval_components_or_escape(&exprs, &x);
        image
            .iter()
            .zip(&lower)
            .zip(&span)
            .map(|((img, lo), s)| (img - lo) / s)
            .collect()
    };
    let omega_unit = p.omega.scaled(span_min, 1.0 / span_max);
    let eps_unit = p.eps / span_max;
    let res = brouwer::approx_fixed_point_capped(&g, &omega_unit, p.n, eps_unit, grid_cap)?;

    let x = real_of(res.point.coords());
    let image = problem::eval_components(&p.exprs, &x).map_err(|e| {
        Failure::Certification(format!("function evaluation at the certified point: {e}"))
    })?;
    let residual = Metric::Max.dist(&x, &image);
    if residual >= p.eps {
        return Err(Failure::Certification(format!(
            "recheck in original coordinates gives residual {residual}, eps {}",
            p.eps
        )));
    }
    let mut bounds = BTreeMap::new();
    bounds.insert("eps", real(p.eps));
    bounds.insert("residual", real(residual));
    Ok(ResultOut {
        kind: "brouwer",
        point: reals(&x),
        u: Some(reals(&image)),
        y0: None,
        residual: real(residual),
        eps: real(p.eps),
        certificate: CertificateOut {
            bounds,
            gap_estimate: None,
        },
        trace: TraceOut {
            k: res.resolution_used,
            k_brouwer: None,
            deltas: Vec::new(),
            retries: 0,
            seed: p.seed,
        },
        wall_time_ms: 0,
    })
}

fn solve_kakutani(p: &KakutaniProblem, grid_cap: u64) -> CliResult<ResultOut> {
    let res = kakutani::approx_kakutani_capped(&p.map, p.eps, grid_cap)?;
    let mut bounds = BTreeMap::new();
    bounds.insert("eps", real(res.eps));
    bounds.insert("graphDefect", real(res.graph_defect));
    bounds.insert("residual", real(res.residual));
    Ok(ResultOut {
        kind: "kakutani",
        point: reals(res.x.coords()),
        u: Some(reals(res.u.coords())),
        y0: None,
        residual: real(res.residual),
        eps: real(res.eps),
        certificate: CertificateOut {
            bounds,
            gap_estimate: None,
        },
        trace: TraceOut {
            k: res.trace.resolution,
            k_brouwer: Some(res.trace.brouwer_resolution),
            deltas: reals(&res.trace.deltas),
            retries: res.trace.retries,
            seed: p.seed,
        },
        wall_time_ms: 0,
    })
}

fn solve_minimax(p: &MinimaxProblem, grid_cap: u64) -> CliResult<ResultOut> {
    // The saddle certificate presumes quasi-concavity in x and
    // quasi-convexity in y; run the statistical falsifier first so a
    // malposed payoff is reported as such rather than as a solver
    // breakdown.
    for axis in [Block::X, Block::Y] {
        let rep = minimax::quasi_convexity_check(&p.f, axis, 200, p.seed);
        if let Some(v) = rep.violation {
            let property = match axis {
                Block::X => "quasi-concave in the x block",
                Block::Y => "quasi-convex in the y block",
            };
            return Err(Failure::Input(format!(
                "payoff is not {property}: between {:?} and {:?} at t = {} (other block {:?}) \
                 the payoff is {} against level {}",
                v.a, v.b, v.t, v.fixed, v.combined, v.bound
            )));
        }
    }
    let (cert, trace) = minimax::approx_saddle_capped(&p.f, &p.omega, p.eps, grid_cap)?;
    let mut bounds = BTreeMap::new();
    bounds.insert("gridTol", real(cert.grid_tol));
    bounds.insert("infBound", real(cert.inf_bound));
    bounds.insert("supBound", real(cert.sup_bound));
    bounds.insert("value", real(cert.value));
    Ok(ResultOut {
        kind: "minimax",
        point: reals(cert.x0.coords()),
        u: None,
        y0: Some(reals(cert.y0.coords())),
        residual: real(cert.gap_estimate),
        eps: real(cert.eps),
        certificate: CertificateOut {
            bounds,
            gap_estimate: Some(real(cert.gap_estimate)),
        },
        trace: TraceOut {
            k: trace.resolution,
            k_brouwer: Some(trace.brouwer_resolution),
            deltas: reals(&trace.deltas),
            retries: trace.retries,
            seed: p.seed,
        },
        wall_time_ms: 0,
    })
}
