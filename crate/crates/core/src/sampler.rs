//! Metropolis-Hastings sampling of product states weighted by their filtered
//! density of states, with blocking error analysis.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, invalid, Result};
use crate::filter::{fdos_from_series, FilterSpec};
use crate::interferometry::{trotter_amplitude, StepPolicy, TimeSeries};
use crate::model::{build_snake_layout, neel_state, sector_states, HubbardParams, JWLayout, LatticeSpec, ProductState, Spin};
use crate::noise::perturb_series;
use crate::sim::{hubbard_spectrum, EigenDecomposition};

/// Every state reachable by moving one fermion to an empty same-spin
/// neighbouring site, in a fixed enumeration order.
pub fn legal_moves(state: &ProductState, lattice: &LatticeSpec, layout: &JWLayout) -> Vec<ProductState> {
    let mut out = Vec::new();
    for spin in [Spin::Up, Spin::Down] {
        for site in 0..lattice.n_sites() {
            let from = layout.qubit(site, spin);
            if !state.is_occupied(from) {
                continue;
            }
            for nb in lattice.neighbors(site) {
                let to = layout.qubit(nb, spin);
                if !state.is_occupied(to) {
                    out.push(state.with_bits(state.bits() ^ (1 << from) ^ (1 << to)));
                }
            }
        }
    }
    out
}

/// A proposed hop with the forward and reverse selection probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub state: ProductState,
    pub p_fwd: f64,
    pub p_rev: f64,
}

/// Picks one legal hop uniformly. A state without legal hops proposes itself
/// with unit probabilities.
pub fn propose_hop<R: Rng + ?Sized>(state: &ProductState, lattice: &LatticeSpec, layout: &JWLayout, rng: &mut R) -> Proposal {
    let moves = legal_moves(state, lattice, layout);
    if moves.is_empty() {
        return Proposal { state: *state, p_fwd: 1.0, p_rev: 1.0 };
    }
    let next = moves[rng.random_range(0..moves.len())];
    let back = legal_moves(&next, lattice, layout).len();
    Proposal { state: next, p_fwd: 1.0 / moves.len() as f64, p_rev: 1.0 / back as f64 }
}

/// Hastings acceptance `min(1, (D'/D) (p_rev / p_fwd))`; zero when `D' <= 0`.
pub fn acceptance_probability(d_new: f64, d_old: f64, p_fwd: f64, p_rev: f64) -> f64 {
    if !(d_new > 0.0) {
        return 0.0;
    }
    (d_new / d_old * (p_rev / p_fwd)).min(1.0)
}

pub fn accept<R: Rng + ?Sized>(d_new: f64, d_old: f64, p_fwd: f64, p_rev: f64, rng: &mut R) -> bool {
    let a = acceptance_probability(d_new, d_old, p_fwd, p_rev);
    a >= 1.0 || rng.random::<f64>() < a
}

/// How chain weights are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Evaluator {
    /// Spectral `D(E)` from the exact eigendecomposition.
    Exact,
    /// Cosine-filter series. Amplitudes come from the exact spectrum, or from
    /// Trotter circuits when `trotter` is set, and may carry shot and
    /// Gaussian noise.
    Series {
        #[serde(default)]
        trotter: Option<StepPolicy>,
        #[serde(default)]
        shots: Option<u64>,
        #[serde(default)]
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub energy: f64,
    pub delta: f64,
    pub n_samples: usize,
    /// Defaults to 10% of `n_samples`.
    pub burn_in: Option<usize>,
    pub seed: u64,
    pub evaluator: Evaluator,
}

impl ChainConfig {
    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.n_samples / 10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub state: ProductState,
    pub weight: f64,
    /// `sum_i n_{i,up} n_{i,down} / n_sites`.
    pub double_occupancy: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingLevel {
    pub block_size: usize,
    pub n_blocks: usize,
    pub stderr: f64,
    pub stderr_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingResult {
    pub mean: f64,
    pub stderr: f64,
    pub naive_stderr: f64,
    pub plateau_level: usize,
    pub levels: Vec<BlockingLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub records: Vec<SampleRecord>,
    pub mean: f64,
    pub blocking: Option<BlockingResult>,
    pub acceptance_rate: f64,
    pub distinct_states: usize,
}

/// Chain-local weight evaluation with one frozen value per state.
pub struct WeightCache<'a> {
    lattice: &'a LatticeSpec,
    params: &'a HubbardParams,
    filter: &'a FilterSpec,
    config: ChainConfig,
    spectrum: std::sync::Arc<EigenDecomposition>,
    memo: HashMap<u64, f64>,
    noise_rng: ChaCha8Rng,
}

impl<'a> WeightCache<'a> {
    pub fn new(lattice: &'a LatticeSpec, params: &'a HubbardParams, filter: &'a FilterSpec, config: ChainConfig) -> Result<Self> {
        Ok(WeightCache {
            lattice,
            params,
            filter,
            config,
            spectrum: hubbard_spectrum(lattice, params)?,
            memo: HashMap::new(),
            noise_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f_401_5e),
        })
    }

    pub fn weight(&mut self, psi: &ProductState) -> Result<f64> {
        if let Some(&w) = self.memo.get(&psi.bits()) {
            return Ok(w);
        }
        let w = self.evaluate(psi)?;
        self.memo.insert(psi.bits(), w);
        Ok(w)
    }

    pub fn distinct(&self) -> usize {
        self.memo.len()
    }

    fn evaluate(&mut self, psi: &ProductState) -> Result<f64> {
        let (energy, delta) = (self.config.energy, self.config.delta);
        match self.config.evaluator {
            Evaluator::Exact => self.spectrum.fdos(psi, energy, delta),
            Evaluator::Series { trotter, shots, sigma } => {
                let times = self.filter.times();
                let amps = times
                    .iter()
                    .enumerate()
                    .map(|(m, &t)| match trotter {
                        Some(policy) => trotter_amplitude(psi, self.lattice, self.params, t, policy.steps_for(m)),
                        None => Ok(self.spectrum.loschmidt(psi, t, 0.0)),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut series = TimeSeries::from_amplitudes(energy, &times, &amps);
                if shots.is_some() || sigma > 0.0 {
                    series = perturb_series(&series, sigma, shots, &mut self.noise_rng)?;
                }
                Ok(fdos_from_series(&series, self.filter)?.value)
            }
        }
    }
}

fn random_sector_state<R: Rng + ?Sized>(template: &ProductState, rng: &mut R) -> ProductState {
    let n = template.n_sites();
    let mut pick = |k: usize| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx[..k].iter().fold(0u64, |m, &i| m | 1 << i)
    };
    let up = pick(template.n_up());
    let down = pick(template.n_down());
    template.with_bits(up | down << n)
}

fn per_site_double_occupancy(psi: &ProductState) -> f64 {
    psi.double_occupancy() as f64 / psi.n_sites() as f64
}

/// Runs one Markov chain from the Neel state.
pub fn run_chain(config: &ChainConfig, lattice: &LatticeSpec, params: &HubbardParams, filter: &FilterSpec) -> Result<ChainResult> {
    if config.n_samples == 0 {
        return Err(invalid("n_samples must be at least 1"));
    }
    if !(config.delta > 0.0) {
        return Err(invalid(format!("delta must be positive, got {}", config.delta)));
    }
    let layout = build_snake_layout(lattice);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = WeightCache::new(lattice, params, filter, *config)?;

    let mut current = neel_state(lattice, &layout);
    let mut d_current = weights.weight(&current)?;
    let mut retries = 0;
    while !(d_current > 0.0) {
        retries += 1;
        if retries > 100 {
            return Err(contract("no starting state with positive weight after 100 retries"));
        }
        current = random_sector_state(&current, &mut rng);
        d_current = weights.weight(&current)?;
    }

    let burn_in = config.burn_in();
    let mut records = Vec::with_capacity(config.n_samples);
    let mut accepted_total = 0usize;
    for step in 0..burn_in + config.n_samples {
        let prop = propose_hop(&current, lattice, &layout, &mut rng);
        let d_new = if prop.state == current { d_current } else { weights.weight(&prop.state)? };
        let ok = accept(d_new, d_current, prop.p_fwd, prop.p_rev, &mut rng);
        if ok {
            current = prop.state;
            d_current = d_new;
        }
        if step >= burn_in {
            accepted_total += ok as usize;
            records.push(SampleRecord {
                state: current,
                weight: d_current,
                double_occupancy: per_site_double_occupancy(&current),
                accepted: ok,
            });
        }
    }
    let obs: Vec<f64> = records.iter().map(|r| r.double_occupancy).collect();
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let blocking = if obs.len() >= 64 { Some(blocking_error(&obs)?) } else { None };
    Ok(ChainResult {
        mean,
        blocking,
        acceptance_rate: accepted_total as f64 / records.len() as f64,
        distinct_states: weights.distinct(),
        records,
    })
}

/// `sum_p D_p O_p / sum_p D_p` over every product state in the Neel state's
/// particle-number sector.
pub fn exhaustive_expectation(lattice: &LatticeSpec, params: &HubbardParams, energy: f64, delta: f64) -> Result<f64> {
    let neel = neel_state(lattice, &build_snake_layout(lattice));
    let count = binomial(lattice.n_sites(), neel.n_up()) * binomial(lattice.n_sites(), neel.n_down());
    if count > 1_000_000 {
        return Err(contract(format!("{count} sector states exceed the enumeration limit")));
    }
    let eig = hubbard_spectrum(lattice, params)?;
    let (mut num, mut den) = (0.0, 0.0);
    for psi in sector_states(lattice.n_sites(), neel.n_up(), neel.n_down()) {
        let d = eig.fdos(&psi, energy, delta)?;
        num += d * per_site_double_occupancy(&psi);
        den += d;
    }
    if !(den > 0.0) {
        return Err(contract("filtered weights vanish over the whole sector"));
    }
    Ok(num / den)
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn level_stats(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let stderr = (var / (n - 1.0)).sqrt();
    (stderr, stderr / (2.0 * (n - 1.0)).sqrt())
}

/// Standard error of a correlated series by repeated pairwise block
/// averaging. The estimate is taken at the first level whose successor no
/// longer rises by more than the level's own uncertainty.
pub fn blocking_error(samples: &[f64]) -> Result<BlockingResult> {
    if samples.len() < 64 {
        return Err(contract(format!("blocking needs at least 64 samples, got {}", samples.len())));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let mut levels = Vec::new();
    let mut data = samples.to_vec();
    let mut size = 1;
    while data.len() >= 16 {
        let (stderr, stderr_error) = level_stats(&data);
        levels.push(BlockingLevel { block_size: size, n_blocks: data.len(), stderr, stderr_error });
        data = data.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        size *= 2;
    }
    let plateau = (0..levels.len() - 1)
        .find(|&l| levels[l + 1].stderr - levels[l].stderr <= levels[l].stderr_error)
        .unwrap_or(levels.len() - 1);
    let naive = levels[0].stderr;
    Ok(BlockingResult { mean, stderr: levels[plateau].stderr.max(naive), naive_stderr: naive, plateau_level: plateau, levels })
}
