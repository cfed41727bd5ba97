//! Reference implementations that share no code with the library.
#![allow(dead_code)]

use num_complex::Complex64;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Site index `row * x + col` of the snake position `k`.
pub fn snake_site(x: usize, k: usize) -> usize {
    let (r, j) = (k / x, k % x);
    if r % 2 == 0 {
        r * x + j
    } else {
        r * x + (x - 1 - j)
    }
}

/// Mode index (qubit) of `(site, spin)` under the snake layout; spin 0 is up.
pub fn mode(x: usize, y: usize, site: usize, spin: usize) -> usize {
    let n = x * y;
    let pos = (0..n).find(|&k| snake_site(x, k) == site).unwrap();
    spin * n + pos
}

/// `c_i^dagger c_j |b>` with the Jordan-Wigner sign convention that modes are
/// ordered by qubit index: returns the new basis state and its sign.
pub fn hop(b: u64, i: usize, j: usize) -> Option<(u64, f64)> {
    if b >> j & 1 == 0 {
        return None;
    }
    let mut s = 1.0;
    // Annihilate j: count occupied modes below j.
    if (b & ((1u64 << j) - 1)).count_ones() % 2 == 1 {
        s = -s;
    }
    let b1 = b & !(1u64 << j);
    if b1 >> i & 1 == 1 {
        return None;
    }
    if (b1 & ((1u64 << i) - 1)).count_ones() % 2 == 1 {
        s = -s;
    }
    Some((b1 | 1u64 << i, s))
}

/// Second-quantized Hubbard Hamiltonian with hopping `+J sum (c^dag c + h.c.)`
/// and interaction `U sum n_up n_down`, as a column function over basis
/// states.
pub struct FermionHubbard {
    pub x: usize,
    pub y: usize,
    pub j: f64,
    pub u: f64,
}

impl FermionHubbard {
    pub fn n_qubits(&self) -> usize {
        2 * self.x * self.y
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let (x, y) = (self.x, self.y);
        let mut out = Vec::new();
        for r in 0..y {
            for col in 0..x {
                let s = r * x + col;
                if col + 1 < x {
                    out.push((s, s + 1));
                }
                if r + 1 < y {
                    out.push((s, s + x));
                }
            }
        }
        out
    }

    /// `H |b>` as a list of `(index, amplitude)`.
    pub fn column(&self, b: u64) -> Vec<(u64, C)> {
        let mut out: Vec<(u64, C)> = Vec::new();
        let mut diag = 0.0;
        for site in 0..self.x * self.y {
            let (mu, md) = (mode(self.x, self.y, site, 0), mode(self.x, self.y, site, 1));
            if b >> mu & 1 == 1 && b >> md & 1 == 1 {
                diag += self.u;
            }
        }
        out.push((b, c(diag, 0.0)));
        for (sa, sb) in self.bonds() {
            for spin in 0..2 {
                let (ma, mb) = (mode(self.x, self.y, sa, spin), mode(self.x, self.y, sb, spin));
                for (i, j) in [(ma, mb), (mb, ma)] {
                    if let Some((nb, s)) = hop(b, i, j) {
                        out.push((nb, c(self.j * s, 0.0)));
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); v.len()];
        for (b, &a) in v.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            for (r, h) in self.column(b as u64) {
                out[r as usize] += h * a;
            }
        }
        out
    }
}

/// `exp(-i A t) v` by a Taylor series, for any linear map `apply`.
pub fn taylor_evolve(apply: impl Fn(&[C]) -> Vec<C>, v: &[C], t: f64) -> Vec<C> {
    // Split into short slices so the series converges quickly.
    let slices = (t.abs() * 8.0).ceil().max(1.0) as usize;
    let dt = t / slices as f64;
    let mut cur = v.to_vec();
    for _ in 0..slices {
        let mut term = cur.clone();
        let mut acc = cur.clone();
        for k in 1..60 {
            let next = apply(&term);
            let f = c(0.0, -dt) / k as f64;
            term = next.into_iter().map(|z| z * f).collect();
            let size: f64 = term.iter().map(|z| z.norm()).sum();
            for (a, z) in acc.iter_mut().zip(&term) {
                *a += z;
            }
            if size < 1e-18 {
                break;
            }
        }
        cur = acc;
    }
    cur
}

/// Dense matrix exponential `exp(-i M t)` by a Taylor series with scaling and
/// squaring.
pub fn expm_dense(m: &[Vec<C>], t: f64) -> Vec<Vec<C>> {
    let n = m.len();
    let norm: f64 = m.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max) * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let s = t / 2f64.powi(squarings as i32);
    let a: Vec<Vec<C>> = m.iter().map(|r| r.iter().map(|z| z * c(0.0, -s)).collect()).collect();
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..40 {
        term = matmul(&term, &a).into_iter().map(|r| r.into_iter().map(|z| z / k as f64).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

pub fn identity(n: usize) -> Vec<Vec<C>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect()
}

pub fn matmul(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![c(0.0, 0.0); m]; n];
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            if x.norm() == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

pub fn matvec(a: &[Vec<C>], v: &[C]) -> Vec<C> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn inner(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Deterministic pseudo-random normalized state (xorshift, no external RNG).
pub fn random_state(n_qubits: usize, seed: u64) -> Vec<C> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v: Vec<C> = (0..1usize << n_qubits).map(|_| c(next(), next())).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}
