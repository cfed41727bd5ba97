//! Filter reconstruction, Markov-chain sampling and mitigation checked
//! against enumeration and closed forms.

use std::collections::HashMap;

use hubbard_ts::circuit::{build_loschmidt_circuit, LoschmidtOptions};
use hubbard_ts::filter::*;
use hubbard_ts::interferometry::{ghz_probabilities, InterferometryOutcome};
use hubbard_ts::mitigation::*;
use hubbard_ts::model::*;
use hubbard_ts::noise::{ghz_flip_channel, sample_pair, ChannelParams};
use hubbard_ts::sampler::*;
use hubbard_ts::sim::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(x: usize, y: usize, params: HubbardParams) -> (LatticeSpec, JWLayout, ProductState, std::sync::Arc<EigenDecomposition>) {
    let l = LatticeSpec::new(x, y).unwrap();
    let layout = build_snake_layout(&l);
    let psi = neel_state(&l, &layout);
    let eig = hubbard_spectrum(&l, &params).unwrap();
    (l, layout, psi, eig)
}

fn exact_source(eig: &EigenDecomposition) -> SeriesSource<'_> {
    SeriesSource::Amplitude(Box::new(move |p: &ProductState, t: f64| Ok(eig.loschmidt(p, t, 0.0))))
}

#[test]
fn untruncated_series_is_the_cosine_power() {
    let (l, _, psi, eig) = setup(2, 2, HubbardParams::default());
    let base = make_filter(l.n_qubits(), 1.0, 1.0).unwrap();
    let full = filter_with_power(base.alpha, 1.0, 1.0, base.m, base.m / 2).unwrap();
    assert!(full.tail.abs() < 1e-15);
    let (values, weights) = eig.spectral_weights(psi.bits());
    for e in [-2.0, -0.5, 0.0, 1.0, 2.5] {
        let got = fdos_batch(&psi, &[e], &full, &exact_source(&eig)).unwrap()[0].value;
        let want: f64 =
            values.iter().zip(&weights).map(|(ek, w)| w * ((ek - e) / full.alpha).cos().powi(full.m as i32)).sum();
        assert!((got - want).abs() < 1e-12, "E={e}: {got} vs {want}");
    }
}

#[test]
fn truncated_series_tracks_the_gaussian() {
    let (l, _, psi, eig) = setup(2, 2, HubbardParams::default());
    let spec = make_filter(l.n_qubits(), 1.0, 1.0).unwrap();
    let energies: Vec<f64> = (-6..=10).map(|k| k as f64 * 0.5).collect();
    let est = fdos_batch(&psi, &energies, &spec, &exact_source(&eig)).unwrap();
    for e in &est {
        let exact = eig.fdos(&psi, e.energy, 1.0).unwrap();
        // Cosine-versus-Gaussian shape error plus the dropped binomial mass.
        let allowed = (0.02 * exact).max(spec.tail + 0.02);
        assert!((e.value - exact).abs() <= allowed, "E={}: {} vs {exact}", e.energy, e.value);
        assert!(e.value >= -spec.tail - 1e-12);
        assert_eq!(e.truncation_bound, spec.tail);
    }
}

#[test]
fn far_below_the_spectrum_is_empty() {
    let (l, _, psi, eig) = setup(2, 2, HubbardParams::default());
    let spec = make_filter(l.n_qubits(), 1.0, 3.0).unwrap();
    let lowest = eig.eigenvalues()[0];
    let d = fdos_batch(&psi, &[lowest - 8.0], &spec, &exact_source(&eig)).unwrap()[0].value;
    assert!(d.abs() < 1e-3, "{d}");
}

#[test]
fn free_neel_gives_a_cosine_power_peak() {
    let (l, _, psi, eig) = setup(2, 3, HubbardParams::new(0.0, 2.0).unwrap());
    let spec = make_filter(l.n_qubits(), 1.0, 1.0).unwrap();
    for e in [0.0, 0.5, 1.0, 2.0] {
        let d = fdos_batch(&psi, &[e], &spec, &exact_source(&eig)).unwrap()[0].value;
        let cos_power = (e / spec.alpha).cos().powi(spec.m as i32);
        assert!((d - cos_power).abs() <= spec.tail + 1e-12, "E={e}");
        let gauss = (-e * e / 2.0).exp();
        assert!((d - gauss).abs() <= spec.tail + 0.03, "E={e}: {d} vs {gauss}");
    }
}

#[test]
fn series_grid_mismatch_is_rejected() {
    let (l, _, psi, eig) = setup(2, 2, HubbardParams::default());
    let spec = make_filter(l.n_qubits(), 1.0, 1.0).unwrap();
    let times = spec.times();
    let amps: Vec<_> = times.iter().map(|&t| eig.loschmidt(&psi, t, 0.0)).collect();
    let mut series = hubbard_ts::interferometry::TimeSeries::from_amplitudes(0.5, &times, &amps);
    assert!(fdos_from_series(&series, &spec).is_ok());
    series.points[2].t += 0.1;
    assert!(fdos_from_series(&series, &spec).is_err());
    series.points.pop();
    assert!(fdos_from_series(&series, &spec).is_err());
}

/// Transition matrix of the chain over a whole sector, from proposal counts
/// and the acceptance rule.
fn transition_matrix(l: &LatticeSpec, layout: &JWLayout, weight: &HashMap<u64, f64>) -> HashMap<(u64, u64), f64> {
    let mut p = HashMap::new();
    for &a in weight.keys() {
        let pa = ProductState::new(a, l.n_sites()).unwrap();
        let moves = legal_moves(&pa, l, layout);
        for b in &moves {
            let back = legal_moves(b, l, layout).len();
            let q = 1.0 / moves.len() as f64;
            let acc = acceptance_probability(weight[&b.bits()], weight[&a], q, 1.0 / back as f64);
            *p.entry((a, b.bits())).or_insert(0.0) += q * acc;
        }
    }
    p
}

#[test]
fn detailed_balance_by_enumeration() {
    for (x, y, e) in [(2, 1, 0.5), (2, 2, 1.0), (2, 2, 3.0)] {
        let (l, layout, psi, eig) = setup(x, y, HubbardParams::default());
        let weight: HashMap<u64, f64> = sector_states(l.n_sites(), psi.n_up(), psi.n_down())
            .iter()
            .map(|s| (s.bits(), eig.fdos(s, e, 1.0).unwrap()))
            .collect();
        let p = transition_matrix(&l, &layout, &weight);
        for (&(a, b), &pab) in &p {
            let pba = p.get(&(b, a)).copied().unwrap_or(0.0);
            let lhs = weight[&a] * pab;
            let rhs = weight[&b] * pba;
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{x}x{y}: {a}->{b}");
        }
    }
}

#[test]
fn chain_matches_enumeration() {
    let params = HubbardParams::default();
    let (l, _, _, _) = setup(2, 2, params);
    let spec = make_filter(l.n_qubits(), 1.0, 1.0).unwrap();
    for e in [1.0, 3.0] {
        let config = ChainConfig { energy: e, delta: 1.0, n_samples: 100_000, burn_in: None, seed: 11, evaluator: Evaluator::Exact };
        let run = run_chain(&config, &l, &params, &spec).unwrap();
        let want = exhaustive_expectation(&l, &params, e, 1.0).unwrap();
        let err = run.blocking.as_ref().unwrap().stderr;
        assert!((run.mean - want).abs() <= 4.0 * err, "E={e}: {} vs {want} (stderr {err})", run.mean);
        assert!(run.acceptance_rate > 0.0 && run.acceptance_rate <= 1.0);
        assert!(run.distinct_states <= 36);
    }
}

#[test]
fn visit_frequencies_match_the_weights() {
    let params = HubbardParams::default();
    let (l, _, psi, eig) = setup(2, 1, params);
    let spec = make_filter(l.n_qubits(), 1.0, 1.0).unwrap();
    let config = ChainConfig { energy: 0.5, delta: 1.0, n_samples: 200_000, burn_in: None, seed: 4, evaluator: Evaluator::Exact };
    let run = run_chain(&config, &l, &params, &spec).unwrap();
    let states = sector_states(2, psi.n_up(), psi.n_down());
    let total: f64 = states.iter().map(|s| eig.fdos(s, 0.5, 1.0).unwrap()).sum();
    for s in &states {
        let freq = run.records.iter().filter(|r| r.state == *s).count() as f64 / run.records.len() as f64;
        let want = eig.fdos(s, 0.5, 1.0).unwrap() / total;
        assert!((freq - want).abs() < 0.01, "{}: {freq} vs {want}", s.to_bitstring());
    }
}

#[test]
fn wide_filter_gives_the_uniform_average() {
    let (l, _, _, _) = setup(2, 2, HubbardParams::default());
    let got = exhaustive_expectation(&l, &HubbardParams::default(), 1.0, 1e6).unwrap();
    // Two up and two down fermions placed independently on four sites.
    assert!((got - 0.25).abs() < 1e-9, "{got}");
}

#[test]
fn atomic_limit_by_hand() {
    let (l, _, psi, _) = setup(2, 2, HubbardParams::new(0.0, 2.0).unwrap());
    let (u, delta, e) = (2.0, 0.7, 1.5);
    let (mut num, mut den) = (0.0, 0.0);
    for up in 0u64..16 {
        for down in 0u64..16 {
            if up.count_ones() as usize != psi.n_up() || down.count_ones() as usize != psi.n_down() {
                continue;
            }
            let d = (up & down).count_ones() as f64;
            let w = (-(u * d - e).powi(2) / (2.0 * delta * delta)).exp();
            num += w * d / 4.0;
            den += w;
        }
    }
    let got = exhaustive_expectation(&l, &HubbardParams::new(0.0, u).unwrap(), e, delta).unwrap();
    assert!((got - num / den).abs() < 1e-12);
}

#[test]
fn rescaled_shots_are_unbiased() {
    let l = LatticeSpec::new(2, 2).unwrap();
    let psi = neel_state(&l, &build_snake_layout(&l));
    let eig = hubbard_spectrum(&l, &HubbardParams::default()).unwrap();
    let g = eig.loschmidt(&psi, 0.9, 1.0);
    let (p0, p_pi) = ghz_probabilities(g);
    let ch = ChannelParams::new(0.6, 0.05, 8).unwrap();
    let (a, b) = ghz_flip_channel(p0, p_pi, &ch);
    let shots = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let reps = 400;
    let mut values = Vec::with_capacity(reps);
    let mut sigmas = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (n0, npi) = sample_pair(a, b, shots, &mut rng).unwrap();
        let mut out = InterferometryOutcome::exact(n0 as f64 / shots as f64, npi as f64 / shots as f64);
        out.shots = Some(shots);
        let m = rescale_outcome(&out, &ch).unwrap();
        values.push(m.re_g_mitigated);
        sigmas.push(m.sigma);
    }
    let mean = values.iter().sum::<f64>() / reps as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let mean_sigma = sigmas.iter().sum::<f64>() / reps as f64;
    assert!((mean - g.re).abs() < 4.0 * sd / (reps as f64).sqrt(), "{mean} vs {}", g.re);
    assert!((sd / mean_sigma - 1.0).abs() < 0.15, "{sd} vs {mean_sigma}");
}

#[test]
fn folded_channel_recovers_q_from_sampled_counts() {
    let ch = ChannelParams::new(0.7, 0.03, 8).unwrap();
    let (a, b) = fold_channel(&ch);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shots = 200_000;
    let (n0, npi) = sample_pair(a, b, shots, &mut rng).unwrap();
    let est = zne_extract(n0 as f64 / shots as f64, npi as f64 / shots as f64, 8).unwrap();
    assert!((est.q - 0.7).abs() < 0.01, "{est:?}");
}

#[test]
fn symmetry_filter_never_hurts_a_flip_only_channel() {
    let l = LatticeSpec::new(2, 2).unwrap();
    let psi = neel_state(&l, &build_snake_layout(&l));
    let lc = build_loschmidt_circuit(&psi, &l, &HubbardParams::default(), 0.7, 2, 1.0, LoschmidtOptions::default()).unwrap();
    let ideal = hubbard_ts::interferometry::run_exact(&lc).unwrap();
    let probs = hubbard_ts::interferometry::output_state(&lc).unwrap().probabilities();
    // Bit flips on one random qubit with probability 0.2.
    let n = 8;
    let mut noisy = vec![0.0; probs.len()];
    for (b, &p) in probs.iter().enumerate() {
        noisy[b] += 0.8 * p;
        for q in 0..n {
            noisy[b ^ 1 << q] += 0.2 * p / n as f64;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let counts = hubbard_ts::interferometry::sample_counts(&noisy, 100_000, &mut rng).unwrap();
    let raw = hubbard_ts::interferometry::outcome_from_counts(counts.clone(), lc.zero_string(), lc.pi_string()).unwrap();
    let filtered = symmetry_filter(&counts, &lc).unwrap();
    assert!(filtered.kept_fraction < 1.0);
    assert!((filtered.re_g - ideal.re_g).abs() <= (raw.re_g - ideal.re_g).abs() + 3.0 * filtered.sigma());
    assert!((filtered.re_g - raw.re_g / filtered.kept_fraction).abs() < 1e-12);
}
