//! `fixpoint catalog`: built-in example problems.

use std::path::Path;

use crate::problem::{CliResult, Failure};

pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    /// Problem-file text exactly as `--emit` writes it.
    pub problem: &'static str,
}

pub const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "identity",
        summary: "every point of [0,1] is fixed; any certified point is accepted",
        problem: r#"{
  "kind": "brouwer",
  "dimension": { "n": 1 },
  "function": ["x0"],
  "modulus": "auto",
  "eps": 0.001,
  "domain": { "box": [[0.0, 1.0]] },
  "seed": 0
}
"#,
    },
    CatalogEntry {
        name: "one-minus-x",
        summary: "unique fixed point at 0.5; the residual pins the answer",
        problem: r#"{
  "kind": "brouwer",
  "dimension": { "n": 1 },
  "function": ["1 - x0"],
  "modulus": "auto",
  "eps": 0.001,
  "domain": { "box": [[0.0, 1.0]] },
  "seed": 0
}
"#,
    },
    CatalogEntry {
        name: "figure1",
        summary: "set-valued jump map with a vertical segment at 0.5",
        problem: r#"{
  "kind": "kakutani",
  "dimension": { "n": 1 },
  "graph": [
    [[0.0, 0.0], [0.5, 0.0]],
    [[0.5, 0.0], [0.5, 1.0]],
    [[0.5, 1.0], [1.0, 1.0]]
  ],
  "modulus": { "lipschitz": 1.0 },
  "eps": 0.01,
  "domain": { "box": [[0.0, 1.0]] },
  "seed": 0
}
"#,
    },
    CatalogEntry {
        name: "bilinear-saddle",
        summary: "payoff (x0-0.5)*(y0-0.5) with saddle value 0 at (0.5, 0.5)",
        problem: r#"{
  "kind": "minimax",
  "dimension": { "n": 1, "m": 1 },
  "function": "(x0 - 0.5)*(y0 - 0.5)",
  "modulus": "auto",
  "eps": 0.05,
  "domain": { "box": [[0.0, 1.0], [0.0, 1.0]] },
  "seed": 0
}
"#,
    },
    CatalogEntry {
        name: "matrix-game-2x2",
        summary: "diagonal 2x2 zero-sum game as a bilinear payoff; value 0.25 at (0.5, 0.5)",
        problem: r#"{
  "kind": "minimax",
  "dimension": { "n": 1, "m": 1 },
  "function": "0.5*x0*y0 + 0.5*(1 - x0)*(1 - y0)",
  "modulus": "auto",
  "eps": 0.1,
  "domain": { "box": [[0.0, 1.0], [0.0, 1.0]] },
  "seed": 0
}
"#,
    },
];

pub fn cmd_catalog(emit: Option<&Path>, quiet: bool) -> CliResult<()> {
    if let Some(dir) = emit {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        for entry in ENTRIES {
            let path = dir.join(format!("{}.json", entry.name));
            std::fs::write(&path, entry.problem)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            if !quiet {
                println!("wrote {}", path.display());
            }
        }
        return Ok(());
    }
    for entry in ENTRIES {
        if quiet {
            println!("{}", entry.name);
        } else {
            println!("{:16} {}", entry.name, entry.summary);
        }
    }
    Ok(())
}
