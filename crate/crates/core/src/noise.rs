//! Noise at three levels: Pauli trajectories on circuits, the analytic
//! outcome channel `(q, gamma, K)`, and shot or Gaussian noise on series.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind, Targets};
use crate::error::{contract, invalid, Result};
use crate::interferometry::{SeriesPoint, TimeSeries};

/// Parameters of the GHZ outcome channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub q: f64,
    pub gamma: f64,
    /// `(1 - q - 2 gamma) / 2^n_qubits`.
    pub kappa: f64,
}

impl ChannelParams {
    pub fn new(q: f64, gamma: f64, n_qubits: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) || gamma < 0.0 || q + 2.0 * gamma > 1.0 + 1e-12 {
            return Err(contract(format!("channel needs q in [0,1], gamma >= 0, q + 2 gamma <= 1; got q={q}, gamma={gamma}")));
        }
        Ok(ChannelParams { q, gamma, kappa: (1.0 - q - 2.0 * gamma) / 2f64.powi(n_qubits as i32) })
    }
}

/// How a depolarizing probability maps to the fidelity that enters `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityConvention {
    /// `f = 1 - eps`: the error-free survival probability.
    #[default]
    Survival,
    /// `f = 1 - 4 eps / 5`: average gate fidelity of a two-qubit depolarizer.
    AverageFidelity,
}

impl FidelityConvention {
    pub fn fidelity(&self, eps: f64) -> f64 {
        match self {
            FidelityConvention::Survival => 1.0 - eps,
            FidelityConvention::AverageFidelity => 1.0 - eps * 16.0 / 20.0,
        }
    }
}

/// `q = f^n`.
pub fn q_factor(n_2q_gates: usize, fidelity: f64) -> f64 {
    fidelity.powi(n_2q_gates as i32)
}

/// Outcome channel: each probability keeps a `q + gamma` share, swaps a
/// `gamma` share with its partner and gains the uniform background `K`.
pub fn ghz_flip_channel(p0: f64, p_pi: f64, params: &ChannelParams) -> (f64, f64) {
    let keep = params.q + params.gamma;
    (keep * p0 + params.gamma * p_pi + params.kappa, keep * p_pi + params.gamma * p0 + params.kappa)
}

/// The analytic channel applied to a full distribution: every entry is mixed
/// toward uniform, and the 0/pi pair additionally exchanges a `gamma` share.
pub fn apply_channel_to_distribution(probs: &[f64], zero: usize, pi: usize, params: &ChannelParams) -> Vec<f64> {
    let shrink = params.q + 2.0 * params.gamma;
    let mut out: Vec<f64> = probs.iter().map(|p| shrink * p + params.kappa).collect();
    let (p0, p_pi) = ghz_flip_channel(probs[zero], probs[pi], params);
    out[zero] = p0;
    out[pi] = p_pi;
    out
}

const PAULIS: [Option<GateKind>; 4] = [None, Some(GateKind::X), Some(GateKind::Y), Some(GateKind::Z)];

/// One stochastic trajectory: after every two-qubit gate, with probability
/// `eps` a uniformly drawn non-identity two-qubit Pauli is inserted.
pub fn inject_pauli_noise<R: Rng + ?Sized>(circuit: &Circuit, eps: f64, rng: &mut R) -> Result<Circuit> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid(format!("error probability must lie in [0, 1], got {eps}")));
    }
    let mut out = Circuit::new(circuit.n_qubits());
    out.add_global_phase(circuit.global_phase());
    for gate in circuit.gates() {
        out.try_push(*gate)?;
        if let Targets::Two(a, b) = gate.targets {
            if eps > 0.0 && rng.random::<f64>() < eps {
                let pick = rng.random_range(1..16usize);
                for (q, p) in [(a, PAULIS[pick / 4]), (b, PAULIS[pick % 4])] {
                    if let Some(kind) = p {
                        out.try_push(Gate::one(kind, q))?;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Trinomial draw of `(n0, n_pi)` out of `shots`.
pub fn sample_pair<R: Rng + ?Sized>(p0: f64, p_pi: f64, shots: u64, rng: &mut R) -> Result<(u64, u64)> {
    let p0 = p0.clamp(0.0, 1.0);
    let n0 = Binomial::new(shots, p0).map_err(|e| contract(e.to_string()))?.sample(rng);
    let rest = 1.0 - p0;
    let cond = if rest > 0.0 { (p_pi / rest).clamp(0.0, 1.0) } else { 0.0 };
    let n_pi = Binomial::new(shots - n0, cond).map_err(|e| contract(e.to_string()))?.sample(rng);
    Ok((n0, n_pi))
}

/// Shot resampling of `(p0, p_pi)` when `shots` is set, then additive
/// Gaussian noise of width `sigma` on `re_g`.
pub fn perturb_point<R: Rng + ?Sized>(point: &SeriesPoint, sigma: f64, shots: Option<u64>, rng: &mut R) -> Result<SeriesPoint> {
    if !(sigma >= 0.0) {
        return Err(invalid(format!("sigma must be non-negative, got {sigma}")));
    }
    let mut p = *point;
    if let Some(n) = shots {
        if n == 0 {
            return Err(invalid("shots must be at least 1"));
        }
        let (n0, n_pi) = sample_pair(point.p0, point.p_pi, n, rng)?;
        p.p0 = n0 as f64 / n as f64;
        p.p_pi = n_pi as f64 / n as f64;
        p.re_g = p.p0 - p.p_pi;
        p.shots = Some(n);
        p.variance += ((p.p0 + p.p_pi) - p.re_g * p.re_g).max(0.0) / n as f64;
    }
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| contract(e.to_string()))?;
        p.re_g += normal.sample(rng);
        p.variance += sigma * sigma;
    }
    Ok(p)
}

pub fn perturb_series<R: Rng + ?Sized>(series: &TimeSeries, sigma: f64, shots: Option<u64>, rng: &mut R) -> Result<TimeSeries> {
    let points = series.points.iter().map(|p| perturb_point(p, sigma, shots, rng)).collect::<Result<_>>()?;
    Ok(TimeSeries { energy: series.energy, points })
}

/// Distribution of the coherent memory-error phase `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThetaDistribution {
    Fixed { theta: f64 },
    Uniform { mean: f64, half_width: f64 },
    Gaussian { mean: f64, sd: f64 },
}

impl ThetaDistribution {
    /// `(<cos theta>, <sin theta>)`.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            ThetaDistribution::Fixed { theta } => (theta.cos(), theta.sin()),
            ThetaDistribution::Uniform { mean, half_width } => {
                let damp = if half_width == 0.0 { 1.0 } else { half_width.sin() / half_width };
                (damp * mean.cos(), damp * mean.sin())
            }
            ThetaDistribution::Gaussian { mean, sd } => {
                let damp = (-sd * sd / 2.0).exp();
                (damp * mean.cos(), damp * mean.sin())
            }
        }
    }
}

/// `(p0*, p_pi*)` under a depolarizing channel plus a random phase `theta`
/// on the interfering branch.
pub fn memory_error_outcomes(
    g: Complex64,
    energy: f64,
    t: f64,
    theta: &ThetaDistribution,
    params: &ChannelParams,
) -> (f64, f64) {
    let gp = g * Complex64::from_polar(1.0, energy * t);
    let (c, s) = theta.moments();
    let base = params.kappa + (params.q + 2.0 * params.gamma) / 4.0 * (1.0 + g.norm_sqr());
    let interference = params.q / 4.0 * (2.0 * c * gp.re - 2.0 * s * gp.im);
    (base + interference, base - interference)
}

/// Noise configuration shared by the CLI and the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub eps_2q: f64,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub sigma_series: f64,
    #[serde(default)]
    pub memory: Option<ThetaDistribution>,
    #[serde(default)]
    pub convention: FidelityConvention,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { eps_2q: 0.0, shots: None, sigma_series: 0.0, memory: None, convention: FidelityConvention::Survival }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eps_2q) {
            return Err(invalid(format!("eps_2q must lie in [0, 1), got {}", self.eps_2q)));
        }
        if !(self.sigma_series >= 0.0 && self.sigma_series.is_finite()) {
            return Err(invalid(format!("sigma_series must be finite and non-negative, got {}", self.sigma_series)));
        }
        if self.shots == Some(0) {
            return Err(invalid("shots must be at least 1"));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.eps_2q == 0.0 && self.shots.is_none() && self.sigma_series == 0.0 && self.memory.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::StateVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn q_factor_values() {
        assert_eq!(q_factor(254, 1.0), 1.0);
        assert!((q_factor(254, 0.998) - 0.6014).abs() < 5e-4);
        assert!((q_factor(254, 0.997) - 0.4664).abs() < 5e-4);
        let via_logs = (254.0 * 0.998f64.ln()).exp();
        assert!((q_factor(254, 0.998) - via_logs).abs() < 1e-12);
    }

    #[test]
    fn channel_limits_and_identity() {
        let id = ChannelParams::new(1.0, 0.0, 8).unwrap();
        assert_eq!(ghz_flip_channel(0.3, 0.1, &id), (0.3, 0.1));
        let mixed = ChannelParams::new(0.0, 0.0, 8).unwrap();
        let (a, b) = ghz_flip_channel(0.3, 0.1, &mixed);
        assert_eq!((a, b), (1.0 / 256.0, 1.0 / 256.0));
        let ch = ChannelParams::new(0.6, 0.05, 8).unwrap();
        let (a, b) = ghz_flip_channel(0.41, 0.17, &ch);
        assert!((a - b - 0.6 * (0.41 - 0.17)).abs() < 1e-15);
        assert!(ChannelParams::new(0.9, 0.1, 8).is_err());
    }

    #[test]
    fn channel_keeps_total_probability() {
        let mut probs = vec![0.0; 16];
        probs[0] = 0.4;
        probs[1] = 0.25;
        probs[6] = 0.35;
        let ch = ChannelParams::new(0.7, 0.08, 4).unwrap();
        let out = apply_channel_to_distribution(&probs, 0, 1, &ch);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_leaves_circuit_alone() {
        let mut c = Circuit::new(2);
        c.push(Gate::one(GateKind::H, 0));
        c.push(Gate::two(GateKind::CNOT, 0, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(inject_pauli_noise(&c, 0.0, &mut rng).unwrap(), c);
    }

    #[test]
    fn full_depolarization_mixes_the_pair() {
        let mut c = Circuit::new(2);
        c.push(Gate::two(GateKind::CNOT, 0, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30_000;
        let mut avg = [0.0; 4];
        let mut plain = StateVector::basis(2, 0);
        plain.apply_circuit(&c).unwrap();
        for _ in 0..n {
            let traj = inject_pauli_noise(&c, 1.0, &mut rng).unwrap();
            let mut s = StateVector::basis(2, 0);
            s.apply_circuit(&traj).unwrap();
            for (a, p) in avg.iter_mut().zip(s.probabilities()) {
                *a += p / n as f64;
            }
        }
        // Of the fifteen Paulis only IZ, ZI and ZZ leave |00> in place.
        let expect = [3.0 / 15.0, 4.0 / 15.0, 4.0 / 15.0, 4.0 / 15.0];
        for (a, e) in avg.iter().zip(expect) {
            assert!((a - e).abs() < 0.01, "{avg:?}");
        }
    }

    #[test]
    fn perturbation_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let point = SeriesPoint { m: 0, t: 0.0, p0: 0.5, p_pi: 0.2, re_g: 0.3, variance: 0.0, shots: None };
        assert_eq!(perturb_point(&point, 0.0, None, &mut rng).unwrap(), point);
        let n = 10_000;
        let draws: Vec<f64> = (0..n).map(|_| perturb_point(&point, 0.05, None, &mut rng).unwrap().re_g - 0.3).collect();
        let sd = (draws.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();
        assert!((sd / 0.05 - 1.0).abs() < 0.03);
        let half = SeriesPoint { p0: 0.5, p_pi: 0.3, ..point };
        let p0s: Vec<f64> = (0..n).map(|_| perturb_point(&half, 0.0, Some(700), &mut rng).unwrap().p0).collect();
        let mean = p0s.iter().sum::<f64>() / n as f64;
        let sd = (p0s.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((sd - 0.0189).abs() < 0.001, "{sd}");
    }

    #[test]
    fn memory_error_limits() {
        let g = Complex64::new(0.3, -0.4);
        let ch = ChannelParams::new(0.8, 0.05, 8).unwrap();
        let (e, t) = (1.2, 0.7);
        let gp = g * Complex64::from_polar(1.0, e * t);
        let (a, b) = memory_error_outcomes(g, e, t, &ThetaDistribution::Fixed { theta: 0.0 }, &ch);
        let ideal = crate::interferometry::ghz_probabilities(gp);
        let (ca, cb) = ghz_flip_channel(ideal.0, ideal.1, &ch);
        assert!((a - ca).abs() < 1e-14 && (b - cb).abs() < 1e-14);

        let id = ChannelParams::new(1.0, 0.0, 8).unwrap();
        let (a, b) = memory_error_outcomes(g, e, t, &ThetaDistribution::Fixed { theta: std::f64::consts::FRAC_PI_2 }, &id);
        assert!((a - b + gp.im).abs() < 1e-14);

        let flat = ThetaDistribution::Uniform { mean: 0.0, half_width: std::f64::consts::PI };
        let (a, b) = memory_error_outcomes(g, e, t, &flat, &ch);
        assert!((a - b).abs() < 1e-15);
    }
}
