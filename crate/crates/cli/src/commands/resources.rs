//! `resources`: gate budgets and shot overheads over lattice sizes.

use hubbard_ts::resources::{compact_crossover, n_compact, n_jw, shot_overhead, Encoding};
use serde::Serialize;

use super::Ctx;
use crate::error::CliError;
use crate::output::num;

#[derive(Serialize)]
struct Reference {
    fidelity: f64,
    overhead: f64,
    ratio_to_reference: f64,
    within_factor_10: bool,
}

#[derive(Serialize)]
struct Summary {
    n_jw_6x6: usize,
    n_compact_6x6: usize,
    compact_crossover: usize,
    reference_overhead: f64,
    jw_6x6: Vec<Reference>,
}

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg.resources;
    ctx.cfg.resolve(false)?;
    let mut rows = Vec::new();
    for &l in &cfg.sizes {
        for &enc in &cfg.encodings {
            for &f in &cfg.fidelities {
                let r = shot_overhead(l, l, enc, f)?;
                rows.push(vec![
                    l.to_string(),
                    enc.name().to_string(),
                    num(f),
                    (2 * l * l).to_string(),
                    r.n_steps.to_string(),
                    r.gates_per_step.to_string(),
                    r.total_2q.to_string(),
                    num(r.q),
                    num(r.shot_overhead),
                ]);
            }
        }
    }
    ctx.out.csv(
        "resources.csv",
        &["L", "encoding", "fidelity", "n_qubits", "n_steps", "gates_per_step", "total_2q", "q", "overhead"],
        &rows,
    )?;
    let jw_6x6 = cfg
        .fidelities
        .iter()
        .map(|&f| {
            let overhead = shot_overhead(6, 6, Encoding::Jw, f)?.shot_overhead;
            let ratio = overhead / cfg.reference_overhead;
            Ok(Reference { fidelity: f, overhead, ratio_to_reference: ratio, within_factor_10: (0.1..=10.0).contains(&ratio) })
        })
        .collect::<Result<_, CliError>>()?;
    ctx.out.json(
        "resources_summary.json",
        &Summary {
            n_jw_6x6: n_jw(6, 6),
            n_compact_6x6: n_compact(6, 6),
            compact_crossover: compact_crossover(),
            reference_overhead: cfg.reference_overhead,
            jw_6x6,
        },
    )
}
