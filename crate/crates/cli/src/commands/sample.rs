//! `sample`: Metropolis-Hastings chains over energies and noise variants.

use hubbard_ts::sampler::{exhaustive_expectation, run_chain, ChainConfig, ChainResult, Evaluator};
use rayon::prelude::*;
use serde::Serialize;

use super::{stream_seed, Ctx};
use crate::config::ChainVariant;
use crate::error::CliError;
use crate::output::{num, opt};

#[derive(Serialize)]
struct ChainSummary {
    variant: ChainVariant,
    energy: f64,
    seed: u64,
    n_samples: usize,
    mean: f64,
    stderr: Option<f64>,
    naive_stderr: Option<f64>,
    acceptance_rate: f64,
    distinct_states: usize,
    exhaustive: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    chains: Vec<ChainSummary>,
}

fn evaluator(ctx: &Ctx, v: ChainVariant) -> Evaluator {
    let trotter = ctx.cfg.chain.trotter.then_some(ctx.cfg.trotter);
    match v {
        ChainVariant::Exact => Evaluator::Exact,
        ChainVariant::Noiseless => Evaluator::Series { trotter, shots: None, sigma: 0.0 },
        ChainVariant::Shots => Evaluator::Series { trotter, shots: ctx.cfg.noise.shots, sigma: 0.0 },
        ChainVariant::ShotsGaussian => {
            Evaluator::Series { trotter, shots: ctx.cfg.noise.shots, sigma: ctx.cfg.noise.sigma_series }
        }
    }
}

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let res = ctx.cfg.resolve(true)?;
    let chain = &ctx.cfg.chain;
    let jobs: Vec<(usize, usize)> =
        (0..chain.variants.len()).flat_map(|v| (0..res.energies.len()).map(move |e| (v, e))).collect();
    let results = jobs
        .par_iter()
        .map(|&(vi, ei)| {
            let config = ChainConfig {
                energy: res.energies[ei],
                delta: ctx.cfg.filter.delta,
                n_samples: chain.n_samples,
                burn_in: chain.burn_in,
                seed: stream_seed(ctx.cfg.seed, (vi * res.energies.len() + ei) as u64),
                evaluator: evaluator(ctx, chain.variants[vi]),
            };
            let run = run_chain(&config, &res.lattice, &res.params, &res.filter)?;
            Ok((config, run))
        })
        .collect::<Result<Vec<(ChainConfig, ChainResult)>, CliError>>()?;
    let exhaustive: Vec<Option<f64>> = res
        .energies
        .iter()
        .map(|&e| {
            if !chain.exhaustive {
                return Ok(None);
            }
            match exhaustive_expectation(&res.lattice, &res.params, e, ctx.cfg.filter.delta) {
                Ok(v) => Ok(Some(v)),
                Err(hubbard_ts::Error::Contract(_)) => Ok(None),
                Err(e) => Err(CliError::from(e)),
            }
        })
        .collect::<Result<_, CliError>>()?;

    let mut sweep = Vec::new();
    let mut chains = Vec::new();
    for (&(vi, ei), (config, run)) in jobs.iter().zip(&results) {
        let variant = chain.variants[vi];
        if chain.write_chains {
            let rows: Vec<Vec<String>> = run
                .records
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    vec![k.to_string(), r.state.to_hex(), num(r.weight), num(r.double_occupancy), (r.accepted as u8).to_string()]
                })
                .collect();
            ctx.out.csv(
                &format!("chain_{}_e{ei}.csv", variant.name()),
                &["step", "state", "weight", "double_occupancy", "accepted"],
                &rows,
            )?;
        }
        let blocking = run.blocking.as_ref();
        sweep.push(vec![
            num(config.energy),
            variant.name().to_string(),
            num(run.mean),
            opt(blocking.map(|b| b.stderr)),
            opt(blocking.map(|b| b.naive_stderr)),
            num(run.acceptance_rate),
            run.distinct_states.to_string(),
            opt(exhaustive[ei]),
        ]);
        chains.push(ChainSummary {
            variant,
            energy: config.energy,
            seed: config.seed,
            n_samples: config.n_samples,
            mean: run.mean,
            stderr: blocking.map(|b| b.stderr),
            naive_stderr: blocking.map(|b| b.naive_stderr),
            acceptance_rate: run.acceptance_rate,
            distinct_states: run.distinct_states,
            exhaustive: exhaustive[ei],
        });
    }
    ctx.out.csv(
        "sweep.csv",
        &["energy", "variant", "mean", "stderr", "naive_stderr", "acceptance_rate", "distinct_states", "exhaustive"],
        &sweep,
    )?;
    ctx.out.json("summary.json", &Summary { chains })
}
