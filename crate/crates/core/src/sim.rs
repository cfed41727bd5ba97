//! Dense statevector engine and the exact spectral oracle.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::circuit::{Circuit, Gate, GateKind, Targets};
use crate::error::{contract, invalid, Error, Result};
use crate::model::{build_snake_layout, hamiltonian_terms, HubbardParams, LatticeSpec, ProductState, QubitHamiltonian};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Complex amplitudes over `2^n_qubits` basis states; qubit `q` is bit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: u64) -> Self {
        assert!(n_qubits < 40, "dense register of {n_qubits} qubits is not addressable");
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index as usize] = ONE;
        Self { n_qubits, amps }
    }

    pub fn from_product(psi: &ProductState) -> Self {
        Self::basis(psi.n_qubits(), psi.bits())
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(invalid(format!("{} amplitudes do not fill a {n_qubits}-qubit register", amps.len())));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amps[index as usize]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&mut self, z: Complex64) {
        for a in &mut self.amps {
            *a *= z;
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match (gate.kind, gate.targets) {
            (GateKind::Rz(a), Targets::One(q)) => {
                let (p0, p1) = (Complex64::from_polar(1.0, -a / 2.0), Complex64::from_polar(1.0, a / 2.0));
                self.diag1(q, p0, p1);
            }
            (GateKind::Z, Targets::One(q)) => self.diag1(q, ONE, -ONE),
            (GateKind::ZZPhase(a), Targets::Two(q0, q1)) => {
                let (same, diff) = (Complex64::from_polar(1.0, -a / 2.0), Complex64::from_polar(1.0, a / 2.0));
                let m = (1usize << q0) | (1usize << q1);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    *amp *= if (i & m).count_ones() == 1 { diff } else { same };
                }
            }
            (GateKind::CZ, Targets::Two(q0, q1)) => {
                let m = (1usize << q0) | (1usize << q1);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & m == m {
                        *amp = -*amp;
                    }
                }
            }
            (kind, Targets::One(q)) => {
                let m = kind.matrix1().expect("single-qubit kind has a 2x2 matrix");
                self.dense1(q, &m);
            }
            (kind, Targets::Two(q0, q1)) => {
                let m = kind.matrix2().expect("two-qubit kind has a 4x4 matrix");
                self.dense2(q0, q1, &m);
            }
        }
        Ok(())
    }

    /// Applies every gate and then the circuit's global phase.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(contract(format!(
                "circuit on {} qubits applied to a {}-qubit state",
                circuit.n_qubits(),
                self.n_qubits
            )));
        }
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        if circuit.global_phase() != 0.0 {
            self.scale(Complex64::from_polar(1.0, circuit.global_phase()));
        }
        Ok(())
    }

    fn diag1(&mut self, q: usize, p0: Complex64, p1: Complex64) {
        for (i, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if i >> q & 1 == 1 { p1 } else { p0 };
        }
    }

    fn dense1(&mut self, q: usize, m: &[[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        for block in (0..self.amps.len()).step_by(2 * stride) {
            for i in block..block + stride {
                let (a, b) = (self.amps[i], self.amps[i + stride]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i + stride] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn dense2(&mut self, q0: usize, q1: usize, m: &[[Complex64; 4]; 4]) {
        let (m0, m1) = (1usize << q0, 1usize << q1);
        let (lo, hi) = (q0.min(q1), q0.max(q1));
        let dim = self.amps.len();
        // Enumerate indices with both target bits clear by inserting zeros.
        for k in 0..dim / 4 {
            let low_mask = (1usize << lo) - 1;
            let mut i = (k & low_mask) | ((k & !low_mask) << 1);
            let mid_mask = (1usize << hi) - 1;
            i = (i & mid_mask) | ((i & !mid_mask) << 1);
            let idx = [i, i | m1, i | m0, i | m0 | m1];
            let v = idx.map(|j| self.amps[j]);
            for (r, &j) in idx.iter().enumerate() {
                self.amps[j] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
    }
}

/// Functional form of [`StateVector::apply_gate`].
pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply_gate(gate)?;
    Ok(state)
}

/// Sparse Pauli-sum operator acting on basis indices.
#[derive(Debug, Clone)]
pub struct PauliOperator {
    n_qubits: usize,
    constant: f64,
    /// `(flip mask, sign mask, coefficient including i^{#Y})`.
    terms: Vec<(u64, u64, Complex64)>,
}

impl PauliOperator {
    pub fn from_hamiltonian(h: &QubitHamiltonian) -> Self {
        let terms = h
            .terms()
            .map(|t| {
                let (flip, sign, n_y) = t.masks();
                let iy = match n_y % 4 {
                    0 => ONE,
                    1 => Complex64::new(0.0, 1.0),
                    2 => -ONE,
                    _ => Complex64::new(0.0, -1.0),
                };
                (flip, sign, iy * t.coefficient)
            })
            .collect();
        Self { n_qubits: h.n_qubits, constant: h.constant, terms }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Nonzero entries `(row, value)` of column `col`, merged by row.
    pub fn column(&self, col: u64) -> Vec<(u64, Complex64)> {
        let mut out: Vec<(u64, Complex64)> = Vec::with_capacity(self.terms.len() + 1);
        out.push((col, Complex64::new(self.constant, 0.0)));
        for &(flip, sign, c) in &self.terms {
            let s = if (col & sign).count_ones() % 2 == 1 { -c } else { c };
            out.push((col ^ flip, s));
        }
        out.sort_by_key(|e| e.0);
        let mut merged: Vec<(u64, Complex64)> = Vec::with_capacity(out.len());
        for (r, v) in out {
            match merged.last_mut() {
                Some(last) if last.0 == r => last.1 += v,
                _ => merged.push((r, v)),
            }
        }
        merged.retain(|e| e.1.norm() > 1e-15);
        merged
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        let mut out = vec![ZERO; state.amps.len()];
        for (b, &a) in state.amps.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            out[b] += a * self.constant;
            for &(flip, sign, c) in &self.terms {
                let s = if ((b as u64) & sign).count_ones() % 2 == 1 { -c } else { c };
                out[b ^ flip as usize] += s * a;
            }
        }
        StateVector { n_qubits: state.n_qubits, amps: out }
    }

    pub fn expectation(&self, state: &StateVector) -> f64 {
        state.inner(&self.apply(state)).re
    }
}

/// Dense `2^n x 2^n` complex matrix, practical up to about 12 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn from_pauli(op: &PauliOperator) -> Self {
        let dim = 1usize << op.n_qubits;
        let mut matrix = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            for (row, v) in op.column(col as u64) {
                matrix[(row as usize, col)] += v;
            }
        }
        Self { matrix }
    }

    pub fn from_hamiltonian(h: &QubitHamiltonian) -> Self {
        Self::from_pauli(&PauliOperator::from_hamiltonian(h))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |M - M^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..=i {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Eigenvalues ascending within a block and the matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    /// Basis indices spanned by the block.
    pub indices: Vec<u64>,
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

/// Spectral decomposition split into blocks that the operator never
/// connects. For the Hubbard model these are the fixed-number sectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    n_qubits: usize,
    blocks: Vec<SpectralBlock>,
    /// `(block, local index)` of each basis index.
    locate: Vec<(u32, u32)>,
    eigenvalues: Vec<f64>,
}

impl EigenDecomposition {
    /// Decomposes a Pauli-sum operator; the union of its connected blocks is
    /// found from the sparse pattern before diagonalizing each block.
    pub fn from_pauli(op: &PauliOperator) -> Result<Self> {
        Self::build(op.n_qubits, |c| op.column(c))
    }

    /// Decomposes a dense operator, rejecting it if it is not Hermitian to
    /// within `1e-12`.
    pub fn from_dense(op: &DenseOperator) -> Result<Self> {
        let dim = op.dim();
        if !dim.is_power_of_two() {
            return Err(contract(format!("operator dimension {dim} is not a power of two")));
        }
        let defect = op.hermiticity_defect();
        if defect > 1e-12 {
            return Err(contract(format!("operator is not Hermitian (defect {defect:.3e})")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        Self::build(n_qubits, |c| {
            (0..dim)
                .filter_map(|r| {
                    let v = op.matrix[(r, c as usize)];
                    (v.norm() > 0.0).then_some((r as u64, v))
                })
                .collect()
        })
    }

    fn build(n_qubits: usize, column: impl Fn(u64) -> Vec<(u64, Complex64)>) -> Result<Self> {
        if n_qubits > 24 {
            return Err(invalid(format!("exact diagonalization of {n_qubits} qubits is out of reach")));
        }
        let dim = 1usize << n_qubits;
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut columns = Vec::with_capacity(dim);
        for c in 0..dim {
            let col = column(c as u64);
            for &(r, _) in &col {
                let (a, b) = (find(&mut parent, c), find(&mut parent, r as usize));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
            columns.push(col);
        }
        let mut groups: HashMap<usize, Vec<u64>> = HashMap::new();
        for i in 0..dim {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i as u64);
        }
        let mut roots: Vec<usize> = groups.keys().copied().collect();
        roots.sort_unstable();

        let mut locate = vec![(0u32, 0u32); dim];
        let mut blocks = Vec::with_capacity(roots.len());
        for (bi, root) in roots.into_iter().enumerate() {
            let indices = groups.remove(&root).expect("root present");
            for (li, &g) in indices.iter().enumerate() {
                locate[g as usize] = (bi as u32, li as u32);
            }
            let n = indices.len();
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for (lc, &g) in indices.iter().enumerate() {
                for &(r, v) in &columns[g as usize] {
                    let (rb, lr) = locate[r as usize];
                    debug_assert_eq!(rb as usize, bi);
                    m[(lr as usize, lc)] += v;
                }
            }
            let eig = SymmetricEigen::new(m);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
            let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
            blocks.push(SpectralBlock { indices, values, vectors });
        }
        let mut eigenvalues: Vec<f64> = blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { n_qubits, blocks, locate, eigenvalues })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn blocks(&self) -> &[SpectralBlock] {
        &self.blocks
    }

    /// `max |H - V Lambda V^dagger|` against a dense reference.
    pub fn reconstruction_error(&self, h: &DenseOperator) -> f64 {
        let mut rebuilt = DMatrix::<Complex64>::zeros(h.dim(), h.dim());
        for b in &self.blocks {
            let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
                b.values.len(),
                b.values.iter().map(|&v| Complex64::new(v, 0.0)),
            ));
            let local = &b.vectors * lambda * b.vectors.adjoint();
            for (i, &gi) in b.indices.iter().enumerate() {
                for (j, &gj) in b.indices.iter().enumerate() {
                    rebuilt[(gi as usize, gj as usize)] = local[(i, j)];
                }
            }
        }
        (rebuilt - &h.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `exp(-i H t) |state>`.
    pub fn evolve(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if state.n_qubits != self.n_qubits {
            return Err(contract("state and operator dimensions differ"));
        }
        let mut out = vec![ZERO; state.amps.len()];
        for b in &self.blocks {
            let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&g| state.amps[g as usize]));
            if local.iter().all(|z| *z == ZERO) {
                continue;
            }
            let mut coeff = b.vectors.adjoint() * local;
            for (c, &e) in coeff.iter_mut().zip(&b.values) {
                *c *= Complex64::from_polar(1.0, -e * t);
            }
            let back = &b.vectors * coeff;
            for (&g, v) in b.indices.iter().zip(back.iter()) {
                out[g as usize] = *v;
            }
        }
        Ok(StateVector { n_qubits: self.n_qubits, amps: out })
    }

    /// Energies and overlap weights `|<k|b>|^2` of a basis state.
    pub fn spectral_weights(&self, basis_index: u64) -> (Vec<f64>, Vec<f64>) {
        let (bi, li) = self.locate[basis_index as usize];
        let b = &self.blocks[bi as usize];
        let w = (0..b.values.len()).map(|k| b.vectors[(li as usize, k)].norm_sqr()).collect();
        (b.values.clone(), w)
    }

    /// `e^{iEt} <psi| exp(-iHt) |psi>` for a product state.
    pub fn loschmidt(&self, psi: &ProductState, t: f64, energy: f64) -> Complex64 {
        if t == 0.0 {
            return ONE;
        }
        let (e, w) = self.spectral_weights(psi.bits());
        let g: Complex64 = e.iter().zip(&w).map(|(&ek, &wk)| Complex64::from_polar(wk, -ek * t)).sum();
        g * Complex64::from_polar(1.0, energy * t)
    }

    /// `sum_k |<k|psi>|^2 exp(-(E_k - E)^2 / (2 delta^2))`.
    pub fn fdos(&self, psi: &ProductState, energy: f64, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(contract(format!("filter width must be positive, got {delta}")));
        }
        let (e, w) = self.spectral_weights(psi.bits());
        Ok(e.iter().zip(&w).map(|(&ek, &wk)| wk * (-(ek - energy).powi(2) / (2.0 * delta * delta)).exp()).sum())
    }
}

/// Ground-truth evolution through a fresh eigendecomposition of `h`.
pub fn exact_evolve(state: &StateVector, h: &DenseOperator, t: f64) -> Result<StateVector> {
    EigenDecomposition::from_dense(h)?.evolve(state, t)
}

pub fn loschmidt_exact(psi: &ProductState, eig: &EigenDecomposition, t: f64, energy: f64) -> Complex64 {
    eig.loschmidt(psi, t, energy)
}

pub fn fdos_exact(psi: &ProductState, eig: &EigenDecomposition, energy: f64, delta: f64) -> Result<f64> {
    eig.fdos(psi, energy, delta)
}

type SpectrumKey = (usize, usize, u64, u64);

/// Cached spectral decomposition of the Hubbard Hamiltonian for a lattice and
/// parameter set.
pub fn hubbard_spectrum(lattice: &LatticeSpec, params: &HubbardParams) -> Result<Arc<EigenDecomposition>> {
    static CACHE: OnceLock<Mutex<HashMap<SpectrumKey, Arc<EigenDecomposition>>>> = OnceLock::new();
    let key = (lattice.x, lattice.y, params.j.to_bits(), params.u.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().map_err(|_| Error::Contract("spectrum cache poisoned".into()))?.get(&key) {
        return Ok(hit.clone());
    }
    let h = hamiltonian_terms(lattice, params, &build_snake_layout(lattice));
    let eig = Arc::new(EigenDecomposition::from_pauli(&PauliOperator::from_hamiltonian(&h))?);
    cache
        .lock()
        .map_err(|_| Error::Contract("spectrum cache poisoned".into()))?
        .insert(key, eig.clone());
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::neel_state;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn x_flips_zero() {
        let s = apply_gate(StateVector::zero(1), &Gate::one(GateKind::X, 0)).unwrap();
        assert_eq!(s.amplitude(1), ONE);
    }

    #[test]
    fn zero_angle_zz_is_identity() {
        let mut s = StateVector::zero(2);
        s.apply_gate(&Gate::one(GateKind::H, 0)).unwrap();
        s.apply_gate(&Gate::one(GateKind::H, 1)).unwrap();
        let before = s.clone();
        s.apply_gate(&Gate::two(GateKind::ZZPhase(0.0), 0, 1)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn dense_and_diagonal_paths_agree() {
        // Apply ZZPhase through the generic 4x4 kernel and through the fast path.
        let mut a = StateVector::zero(3);
        for q in 0..3 {
            a.apply_gate(&Gate::one(GateKind::U1q { theta: 0.3 + q as f64, phi: 0.7 }, q)).unwrap();
        }
        let mut b = a.clone();
        a.apply_gate(&Gate::two(GateKind::ZZPhase(0.9), 2, 0)).unwrap();
        let m = GateKind::ZZPhase(0.9).matrix2().unwrap();
        b.dense2(2, 0, &m);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!(close(*x, *y, 1e-14));
        }
    }

    #[test]
    fn rejects_bad_targets() {
        let mut s = StateVector::zero(2);
        assert!(matches!(s.apply_gate(&Gate::one(GateKind::H, 2)), Err(Error::Index { .. })));
        let bad = Gate { kind: GateKind::H, targets: Targets::Two(0, 1) };
        assert!(matches!(s.apply_gate(&bad), Err(Error::Contract(_))));
    }

    #[test]
    fn spectrum_of_single_site() {
        let l = LatticeSpec::new(1, 1).unwrap();
        let eig = hubbard_spectrum(&l, &HubbardParams::default()).unwrap();
        assert_eq!(eig.eigenvalues(), &[0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn eigenstate_picks_up_phase() {
        let l = LatticeSpec::new(2, 1).unwrap();
        let h = hamiltonian_terms(&l, &HubbardParams::default(), &build_snake_layout(&l));
        let dense = DenseOperator::from_hamiltonian(&h);
        let eig = EigenDecomposition::from_dense(&dense).unwrap();
        let b = &eig.blocks()[eig.blocks().len() / 2];
        let mut amps = vec![ZERO; 16];
        for (i, &g) in b.indices.iter().enumerate() {
            amps[g as usize] = b.vectors[(i, 0)];
        }
        let psi = StateVector::from_amplitudes(4, amps).unwrap();
        let out = eig.evolve(&psi, 1.3).unwrap();
        let overlap = psi.inner(&out);
        assert!(close(overlap, Complex64::from_polar(1.0, -b.values[0] * 1.3), 1e-12));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = ONE;
        assert!(matches!(exact_evolve(&StateVector::zero(1), &DenseOperator { matrix: m }, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn loschmidt_trivial_cases() {
        let l = LatticeSpec::new(2, 2).unwrap();
        let neel = neel_state(&l, &build_snake_layout(&l));
        let eig = hubbard_spectrum(&l, &HubbardParams::default()).unwrap();
        assert_eq!(eig.loschmidt(&neel, 0.0, 0.7), ONE);
        let free = hubbard_spectrum(&l, &HubbardParams::new(0.0, 2.0).unwrap()).unwrap();
        let g = free.loschmidt(&neel, 1.1, 0.5);
        assert!(close(g, Complex64::from_polar(1.0, 0.55), 1e-12));
        assert!(eig.fdos(&neel, 0.0, 0.0).is_err());
        assert!((eig.fdos(&neel, 1.0, 1e6).unwrap() - 1.0).abs() < 1e-6);
        let _ = PI;
    }
}
