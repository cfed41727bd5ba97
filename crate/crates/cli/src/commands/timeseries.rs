//! `timeseries`: Loschmidt readouts on the filter grid for every energy.

use std::collections::BTreeMap;

use hubbard_ts::circuit::{build_loschmidt_circuit, LoschmidtCircuit, LoschmidtOptions};
use hubbard_ts::interferometry::{ghz_probabilities, outcome_from_counts, output_state, sample_counts, trotter_amplitude};
use hubbard_ts::mitigation::{rescale, symmetry_filter, zne_extract, zne_fold, MitigationMethod};
use hubbard_ts::noise::{apply_channel_to_distribution, inject_pauli_noise, memory_error_outcomes, q_factor, sample_pair, ChannelParams};
use hubbard_ts::sim::{hubbard_spectrum, StateVector};
use rand_distr::{Distribution, Normal};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{stream_rng, Ctx};
use crate::config::Resolved;
use crate::error::CliError;
use crate::output::{num, opt};

pub const HEADER: [&str; 14] =
    ["energy", "m", "t", "n_steps", "n_2q", "variant", "p0", "p_pi", "re_g", "sigma", "q", "kept_fraction", "p0_fold", "p_pi_fold"];

/// One CSV row.
#[derive(Debug, Clone, Default)]
struct Row {
    variant: &'static str,
    /// Blank for rescaled rows, which estimate only the difference.
    p0: Option<f64>,
    p_pi: Option<f64>,
    re_g: f64,
    sigma: f64,
    q: Option<f64>,
    kept_fraction: Option<f64>,
    fold: Option<(f64, f64)>,
}

/// A noisy readout together with its raw counts when shots were drawn.
struct Noisy {
    p0: f64,
    p_pi: f64,
    re_g: f64,
    variance: f64,
    counts: Option<BTreeMap<u64, u64>>,
    q_model: f64,
}

#[derive(Serialize)]
struct GridPoint {
    m: usize,
    t: f64,
    coefficient: f64,
    n_steps: usize,
    n_2q: usize,
}

#[derive(Serialize)]
struct GridSummary {
    lattice: (usize, usize),
    n_qubits: usize,
    alpha: f64,
    cosine_power: usize,
    r: usize,
    tail: f64,
    energies: Vec<f64>,
    points: Vec<GridPoint>,
    simulated: bool,
}

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let dry = ctx.cfg.timeseries.dry_run;
    let res = ctx.cfg.resolve(!dry)?;
    let spec = &res.filter;
    let times = spec.times();
    let points = times
        .iter()
        .enumerate()
        .map(|(m, &t)| {
            let steps = ctx.cfg.trotter.steps_for(m);
            let lc = build_loschmidt_circuit(&res.psi0, &res.lattice, &res.params, t, steps, 0.0, LoschmidtOptions::default())?;
            Ok(GridPoint { m, t, coefficient: spec.coefficients[m], n_steps: steps, n_2q: lc.circuit.two_qubit_count() })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = GridSummary {
        lattice: (res.lattice.x, res.lattice.y),
        n_qubits: res.lattice.n_qubits(),
        alpha: spec.alpha,
        cosine_power: spec.m,
        r: spec.r,
        tail: spec.tail,
        energies: res.energies.clone(),
        points,
        simulated: !dry,
    };
    ctx.out.json("grid.json", &summary)?;
    if dry {
        return Ok(());
    }

    let eig = hubbard_spectrum(&res.lattice, &res.params)?;
    let work: Vec<(usize, usize)> =
        (0..res.energies.len()).flat_map(|e| (0..times.len()).map(move |m| (e, m))).collect();
    let blocks = work
        .par_iter()
        .map(|&(ei, m)| {
            let energy = res.energies[ei];
            let t = times[m];
            let steps = ctx.cfg.trotter.steps_for(m);
            let g = eig.loschmidt(&res.psi0, t, energy);
            let (p0, p_pi) = ghz_probabilities(g);
            let exact = Row { variant: "exact", p0: Some(p0), p_pi: Some(p_pi), re_g: g.re, ..Row::default() };
            let rows = measure(ctx, &res, energy, t, steps, (ei * times.len() + m) as u64)?;
            let lead = [num(energy), m.to_string(), num(t), steps.to_string()];
            let n2q = rows.1;
            Ok(std::iter::once(exact)
                .chain(rows.0)
                .map(|r| {
                    let mut rec: Vec<String> = lead.to_vec();
                    rec.extend([
                        n2q.to_string(),
                        r.variant.to_string(),
                        opt(r.p0),
                        opt(r.p_pi),
                        num(r.re_g),
                        num(r.sigma),
                        opt(r.q),
                        opt(r.kept_fraction),
                        opt(r.fold.map(|f| f.0)),
                        opt(r.fold.map(|f| f.1)),
                    ]);
                    rec
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows: Vec<Vec<String>> = blocks.into_iter().flatten().collect();
    ctx.out.csv("timeseries.csv", &HEADER, &rows)
}

/// Trotter, noisy and mitigated rows for one grid point, plus its two-qubit
/// gate count.
fn measure(ctx: &Ctx, res: &Resolved, energy: f64, t: f64, steps: usize, stream: u64) -> Result<(Vec<Row>, usize), CliError> {
    let cfg = &ctx.cfg;
    let lc = build_loschmidt_circuit(&res.psi0, &res.lattice, &res.params, t, steps, energy, LoschmidtOptions::default())?;
    let n2q = lc.circuit.two_qubit_count();
    let ideal = output_state(&lc)?.probabilities();
    let (p0, p_pi) = (ideal[lc.zero_string() as usize], ideal[lc.pi_string() as usize]);
    let mut rows = vec![Row { variant: "trotter", p0: Some(p0), p_pi: Some(p_pi), re_g: p0 - p_pi, ..Row::default() }];
    if cfg.noise.is_noiseless() {
        return Ok((rows, n2q));
    }

    let mut rng = stream_rng(cfg.seed, stream);
    let noisy = readout(ctx, res, &lc, &mut rng)?;
    let gauss = gaussian(cfg.noise.sigma_series, &mut rng);
    rows.push(Row {
        variant: "noisy",
        p0: Some(noisy.p0),
        p_pi: Some(noisy.p_pi),
        re_g: noisy.re_g + gauss,
        sigma: (noisy.variance + cfg.noise.sigma_series.powi(2)).sqrt(),
        q: Some(noisy.q_model),
        ..Row::default()
    });

    let sigma_g = cfg.noise.sigma_series;
    let mitigated = match cfg.mitigation.method {
        MitigationMethod::None => None,
        MitigationMethod::Rescale => {
            let q = noisy.q_model;
            Some(Row {
                variant: "mitigated",
                re_g: rescale(noisy.p0, noisy.p_pi, q)? + gauss / q,
                sigma: (noisy.variance + sigma_g * sigma_g).sqrt() / q,
                q: Some(q),
                ..Row::default()
            })
        }
        MitigationMethod::ZneRescale => {
            let folded = zne_fold(&lc);
            let f = readout(ctx, res, &folded, &mut rng)?;
            let est = zne_extract(f.p0, f.p_pi, res.lattice.n_qubits())?;
            rows[1].fold = Some((f.p0, f.p_pi));
            Some(Row {
                variant: "mitigated",
                re_g: rescale(noisy.p0, noisy.p_pi, est.q)? + gauss / est.q,
                sigma: (noisy.variance + sigma_g * sigma_g).sqrt() / est.q,
                q: Some(est.q),
                fold: Some((f.p0, f.p_pi)),
                ..Row::default()
            })
        }
        MitigationMethod::Symmetry => {
            let counts = noisy.counts.as_ref().ok_or_else(|| {
                CliError::Config("symmetry mitigation needs full-register shots (no memory-error model)".into())
            })?;
            let s = symmetry_filter(counts, &lc)?;
            Some(Row {
                variant: "mitigated",
                p0: Some(s.p0),
                p_pi: Some(s.p_pi),
                re_g: s.re_g + gauss,
                sigma: (s.sigma().powi(2) + sigma_g * sigma_g).sqrt(),
                kept_fraction: Some(s.kept_fraction),
                ..Row::default()
            })
        }
    };
    rows.extend(mitigated);
    Ok((rows, n2q))
}

fn gaussian(sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).map(|d| d.sample(rng)).unwrap_or(0.0)
}

/// Output distribution under the configured noise, then the 0/pi readout.
fn readout(ctx: &Ctx, res: &Resolved, lc: &LoschmidtCircuit, rng: &mut ChaCha8Rng) -> Result<Noisy, CliError> {
    let cfg = &ctx.cfg;
    let n = lc.circuit.n_qubits();
    let fidelity = cfg.noise.convention.fidelity(cfg.noise.eps_2q);
    let q_model = q_factor(lc.circuit.two_qubit_count(), fidelity);
    let channel = ChannelParams::new(q_model, 0.0, n)?;
    let (zero, pi) = (lc.zero_string() as usize, lc.pi_string() as usize);

    if let Some(theta) = &cfg.noise.memory {
        let g = trotter_amplitude(&res.psi0, &res.lattice, &res.params, lc.t, lc.n_steps)?;
        let (p0, p_pi) = memory_error_outcomes(g, lc.energy, lc.t, theta, &channel);
        return Ok(match cfg.noise.shots {
            Some(shots) => {
                let (n0, npi) = sample_pair(p0, p_pi, shots, rng)?;
                let (a, b) = (n0 as f64 / shots as f64, npi as f64 / shots as f64);
                let var = ((a + b) - (a - b).powi(2)).max(0.0) / shots as f64;
                Noisy { p0: a, p_pi: b, re_g: a - b, variance: var, counts: None, q_model }
            }
            None => Noisy { p0, p_pi, re_g: p0 - p_pi, variance: 0.0, counts: None, q_model },
        });
    }

    let probs = if cfg.noise.eps_2q == 0.0 {
        output_state(lc)?.probabilities()
    } else if cfg.timeseries.trajectories > 0 {
        let k = cfg.timeseries.trajectories;
        let mut acc = vec![0.0; 1 << n];
        for _ in 0..k {
            let noisy = inject_pauli_noise(&lc.circuit, cfg.noise.eps_2q, rng)?;
            let mut s = StateVector::zero(n);
            s.apply_circuit(&noisy)?;
            for (a, p) in acc.iter_mut().zip(s.probabilities()) {
                *a += p / k as f64;
            }
        }
        acc
    } else {
        apply_channel_to_distribution(&output_state(lc)?.probabilities(), zero, pi, &channel)
    };
    Ok(match cfg.noise.shots {
        Some(shots) => {
            let out = outcome_from_counts(sample_counts(&probs, shots, rng)?, lc.zero_string(), lc.pi_string())?;
            Noisy { p0: out.p0, p_pi: out.p_pi, re_g: out.re_g, variance: out.variance(), counts: Some(out.raw_counts), q_model }
        }
        None => Noisy {
            p0: probs[zero],
            p_pi: probs[pi],
            re_g: probs[zero] - probs[pi],
            variance: 0.0,
            counts: None,
            q_model,
        },
    })
}
