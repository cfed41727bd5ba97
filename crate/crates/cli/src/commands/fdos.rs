//! `fdos`: filtered density of states over the energy grid, series against
//! the spectral oracle, at truncation `x` and `x / 2`.

use hubbard_ts::filter::{make_filter, FilterSpec};
use hubbard_ts::interferometry::{trotter_amplitude, TimeSeries};
use hubbard_ts::sim::hubbard_spectrum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::Ctx;
use crate::config::SeriesKind;
use crate::error::CliError;
use crate::output::{num, opt};

/// Relative errors are reported only where the oracle is at least this large.
pub const RELATIVE_FLOOR: f64 = 0.05;

#[derive(Serialize)]
struct Summary {
    series: SeriesKind,
    cosine_power: usize,
    r: usize,
    r_half: usize,
    tail: f64,
    tail_half: f64,
    max_rel_err: Option<f64>,
    max_rel_change_half: Option<f64>,
}

fn combine(spec: &FilterSpec, energy: f64, amps: &[Complex64]) -> Result<f64, CliError> {
    let times = spec.times();
    let series = TimeSeries::from_amplitudes(energy, &times, &amps[..times.len()]);
    Ok(hubbard_ts::filter::fdos_from_series(&series, spec)?.value)
}

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let res = ctx.cfg.resolve(true)?;
    let spec = &res.filter;
    let half = make_filter(res.lattice.n_qubits(), ctx.cfg.filter.delta, ctx.cfg.filter.x / 2.0)?;
    let eig = hubbard_spectrum(&res.lattice, &res.params)?;
    let times = if spec.r >= half.r { spec.times() } else { half.times() };
    let kind = ctx.cfg.fdos.series;
    let amps = times
        .par_iter()
        .enumerate()
        .map(|(m, &t)| match kind {
            SeriesKind::Exact => Ok(eig.loschmidt(&res.psi0, t, 0.0)),
            SeriesKind::Trotter if m == 0 => Ok(Complex64::new(1.0, 0.0)),
            SeriesKind::Trotter => {
                Ok(trotter_amplitude(&res.psi0, &res.lattice, &res.params, t, ctx.cfg.trotter.steps_for(m))?)
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut rows = Vec::new();
    let (mut worst, mut worst_half): (Option<f64>, Option<f64>) = (None, None);
    for &e in &res.energies {
        let exact = eig.fdos(&res.psi0, e, spec.delta)?;
        let series = combine(spec, e, &amps)?;
        let series_half = combine(&half, e, &amps)?;
        let rel = (exact >= RELATIVE_FLOOR).then(|| (series - exact) / exact);
        let change = (series.abs() >= RELATIVE_FLOOR).then(|| (series_half - series) / series);
        if let Some(r) = rel {
            worst = Some(worst.map_or(r.abs(), |w: f64| w.max(r.abs())));
        }
        if let Some(c) = change {
            worst_half = Some(worst_half.map_or(c.abs(), |w: f64| w.max(c.abs())));
        }
        rows.push(vec![num(e), num(exact), num(series), num(series_half), opt(rel), opt(change), num(spec.tail)]);
    }
    ctx.out.csv(
        "fdos.csv",
        &["energy", "exact", "series", "series_half_x", "rel_err", "rel_change_half", "truncation_bound"],
        &rows,
    )?;
    ctx.out.json(
        "fdos_summary.json",
        &Summary {
            series: kind,
            cosine_power: spec.m,
            r: spec.r,
            r_half: half.r,
            tail: spec.tail,
            tail_half: half.tail,
            max_rel_err: worst,
            max_rel_change_half: worst_half,
        },
    )
}
