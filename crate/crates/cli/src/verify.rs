//! `fixpoint verify`: re-check a result file against its problem with
//! independently recomputed certificates.
//!
//! Verification never trusts the numbers in the result file beyond the
//! claimed point (and `y0`): residuals, level bounds and the minimax
//! gap are recomputed from the problem data, and minimax results are
//! additionally cross-checked against a brute-force grid scan of the
//! payoff.

use std::path::Path;

use serde::Deserialize;

use fixpoint::expr::ContinuityModulus;
use fixpoint::geometry::{Metric, Point};
use fixpoint::{kakutani, minimax};

use crate::problem::{
    self, BrouwerProblem, CliResult, CompiledProblem, Failure, KakutaniProblem, Kind,
    MinimaxProblem,
};

/// Numerical slack for re-derived inequalities.
const SLACK: f64 = 1e-9;
/// Brute-force oracle resolution for minimax cross-checks.
const BRUTE_GRID: u64 = 200;
/// Evaluation budget the brute grid must fit into.
const BRUTE_EVAL_CAP: u128 = 1 << 26;

#[derive(Deserialize)]
struct ResultIn {
    kind: String,
    point: Vec<f64>,
    #[serde(default)]
    y0: Option<Vec<f64>>,
    eps: f64,
}

pub struct VerifyFlags {
    pub eps: Option<f64>,
    pub quiet: bool,
}

pub fn cmd_verify(problem_path: &Path, result_path: &Path, flags: &VerifyFlags) -> CliResult<()> {
    let file = problem::load_problem(problem_path)?;
    let kind = Kind::parse(&file.kind)?;
    let text = std::fs::read_to_string(result_path)
        .map_err(|e| Failure::Input(format!("{}: {e}", result_path.display())))?;
    let result: ResultIn = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", result_path.display())))?;
    if result.kind != kind.name() {
        return Err(Failure::Input(format!(
            "result kind {:?} does not match problem kind {:?}",
            result.kind, kind.name()
        )));
    }
    let eps = flags.eps.unwrap_or(result.eps);
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Failure::Input(format!(
            "effective eps must be a positive finite real, got {eps}"
        )));
    }

    let note = |line: &str| {
        if !flags.quiet {
            println!("{line}");
        }
    };
    let verdict = match problem::compile(&file, kind, eps, file.seed)? {
        CompiledProblem::Brouwer(p) => verify_brouwer(&p, &result, eps, &note),
        CompiledProblem::Kakutani(p) => verify_kakutani(&p, &result, eps, &note),
        CompiledProblem::Minimax(p) => verify_minimax(&p, &result, eps, &note),
    }?;
    match verdict {
        Ok(()) => {
            note("certified");
            Ok(())
        }
        Err(reason) => {
            note("not certified");
            Err(Failure::Certification(reason))
        }
    }
}

/// Inner verdict: `Err` is a failed certificate (exit 2), while the
/// outer `CliResult` carries input errors (exit 1).
type Verdict = std::result::Result<(), String>;

fn check_dim(point: &[f64], expected: usize, what: &str) -> CliResult<()> {
    if point.len() != expected {
        return Err(Failure::Input(format!(
            "result {what} has {} coordinates, problem expects {expected}",
            point.len()
        )));
    }
    Ok(())
}

fn verify_brouwer(
    p: &BrouwerProblem,
    result: &ResultIn,
    eps: f64,
    note: &impl Fn(&str),
) -> CliResult<Verdict> {
    check_dim(&result.point, p.n, "point")?;
    for (i, ((x, lo), s)) in result.point.iter().zip(&p.lower).zip(&p.span).enumerate() {
        if *x < lo - SLACK || *x > lo + s + SLACK {
            return Ok(Err(format!("point coordinate {i} = {x} is outside the box")));
        }
    }
    let image = match problem::eval_components(&p.exprs, &result.point) {
        Ok(v) => v,
        Err(e) => return Ok(Err(format!("function evaluation at the point: {e}"))),
    };
    let residual = Metric::Max.dist(&result.point, &image);
    note(&format!("recomputed residual {residual:.3e} against eps {eps:.3e}"));
    Ok(if residual < eps {
        Ok(())
    } else {
        Err(format!("recomputed residual {residual} is not below eps {eps}"))
    })
}

fn verify_kakutani(
    p: &KakutaniProblem,
    result: &ResultIn,
    eps: f64,
    note: &impl Fn(&str),
) -> CliResult<Verdict> {
    check_dim(&result.point, p.map.domain().dim(), "point")?;
    let x = Point::from_slice(&result.point);
    if !p.map.domain().contains(x.coords(), SLACK) {
        return Ok(Err(format!("point {:?} is outside the domain", result.point)));
    }
    let rep = kakutani::residual_certificate(&p.map, &x, eps)?;
    note(&format!(
        "best graph member over the point: u = {:?}, residual {:.3e} against eps {eps:.3e}",
        rep.u.coords(),
        rep.residual
    ));
    Ok(if rep.ok {
        Ok(())
    } else {
        Err(format!(
            "no graph member over the point within eps; best residual {}",
            rep.residual
        ))
    })
}

/// Smallest payoff variation `e` the modulus cannot rule out for
/// argument moves of half a grid pitch; bounds how far off-grid extrema
/// can drift from the brute-force scan.
fn grid_error(omega: &ContinuityModulus, pitch: f64) -> std::result::Result<f64, String> {
    let mut e = 1e-15;
    while omega.delta(e) < pitch / 2.0 {
        e *= 2.0;
        if e > 1e6 {
            return Err("modulus cannot resolve the verification grid".into());
        }
    }
    Ok(e)
}

/// Largest grid resolution not exceeding [`BRUTE_GRID`] whose full scan
/// fits the evaluation budget in `dims` total axes.
fn brute_grid_for(dims: usize) -> u64 {
    let mut g = BRUTE_GRID;
    while g > 1 {
        let fits = (g as u128 + 1)
            .checked_pow(dims as u32)
            .is_some_and(|evals| evals <= BRUTE_EVAL_CAP);
        if fits {
            break;
        }
        g /= 2;
    }
    g
}

fn verify_minimax(
    p: &MinimaxProblem,
    result: &ResultIn,
    eps: f64,
    note: &impl Fn(&str),
) -> CliResult<Verdict> {
    check_dim(&result.point, p.n, "point")?;
    let Some(y0) = &result.y0 else {
        return Err(Failure::Input(
            "minimax result file is missing the \"y0\" field".into(),
        ));
    };
    check_dim(y0, p.m, "y0")?;
    for (what, coords) in [("point", &result.point), ("y0", y0)] {
        for (i, c) in coords.iter().enumerate() {
            if !(-SLACK..=1.0 + SLACK).contains(c) {
                return Ok(Err(format!(
                    "{what} coordinate {i} = {c} is outside the unit cube"
                )));
            }
        }
    }

    let grid_tol = eps / 8.0;
    let value = match p.f.eval(&result.point, y0) {
        Ok(v) => v,
        Err(e) => return Ok(Err(format!("payoff evaluation at the point: {e}"))),
    };
    let inf_bound = minimax::certified_inf(&p.f, &p.omega, &result.point, grid_tol)?;
    let sup_bound = minimax::certified_sup(&p.f, &p.omega, y0, grid_tol)?;
    let gap = (sup_bound - inf_bound).max(0.0);
    note(&format!(
        "recomputed value {value:.6}, inf bound {inf_bound:.6}, sup bound {sup_bound:.6}, \
         gap {gap:.3e}"
    ));
    if value >= inf_bound + eps + grid_tol + SLACK {
        return Ok(Err(format!(
            "value {value} exceeds the certified inf bound {inf_bound} by more than eps + gridTol"
        )));
    }
    if value <= sup_bound - eps - grid_tol - SLACK {
        return Ok(Err(format!(
            "value {value} undercuts the certified sup bound {sup_bound} by more than eps + gridTol"
        )));
    }
    if gap > 2.0 * eps + 2.0 * grid_tol + SLACK {
        return Ok(Err(format!(
            "certified gap {gap} exceeds 2 eps + 2 gridTol"
        )));
    }

    let grid_k = brute_grid_for(p.n + p.m);
    let (sup_inf, inf_sup) = minimax::brute_gap(&p.f, grid_k)?;
    let e_grid = match grid_error(&p.omega, 1.0 / grid_k as f64) {
        Ok(e) => e,
        Err(msg) => return Ok(Err(msg)),
    };
    note(&format!(
        "brute oracle at grid {grid_k}: supInf {sup_inf:.6}, infSup {inf_sup:.6}, \
         grid error bound {e_grid:.3e}"
    ));
    if sup_inf > inf_sup + 1e-12 {
        return Ok(Err(format!(
            "brute oracle violates weak duality: supInf {sup_inf} > infSup {inf_sup}"
        )));
    }
    // value <= infBound + eps + gridTol <= inf_y f(x0,.) + eps + 2 gridTol
    // <= supInf + eps + 2 gridTol, and the brute scan sees supInf within
    // e_grid; symmetrically below via infSup.
    let budget = eps + 2.0 * grid_tol + e_grid + SLACK;
    if value > sup_inf + budget {
        return Ok(Err(format!(
            "value {value} is inconsistent with the brute supInf {sup_inf} (budget {budget})"
        )));
    }
    if value < inf_sup - budget {
        return Ok(Err(format!(
            "value {value} is inconsistent with the brute infSup {inf_sup} (budget {budget})"
        )));
    }
    Ok(Ok(()))
}
