//! Fermi-Hubbard model on open rectangular lattices and its Jordan-Wigner
//! qubit form.
//!
//! Sites are indexed `row * x + col`. The Jordan-Wigner order is a snake
//! (boustrophedon) path: row 0 left to right, row 1 right to left, and so on.
//! Spin-up modes occupy qubits `0..n_sites` in snake order and spin-down modes
//! occupy `n_sites..2 * n_sites` in the same order. Qubit `q` is bit `q` of a
//! computational-basis index.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{invalid, Result};

/// Largest register the dense simulator accepts unless a caller raises it.
pub const DEFAULT_QUBIT_CAP: usize = 26;

/// An `x` (columns) by `y` (rows) rectangle with open boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub x: usize,
    pub y: usize,
}

/// Nearest-neighbour bond between two sites, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub vertical: bool,
}

impl LatticeSpec {
    pub fn new(x: usize, y: usize) -> Result<Self> {
        if x == 0 || y == 0 {
            return Err(invalid(format!("lattice must be at least 1x1, got {x}x{y}")));
        }
        if 2 * x * y > 64 {
            return Err(invalid(format!(
                "lattice {x}x{y} needs {} qubits; bitstrings are limited to 64",
                2 * x * y
            )));
        }
        Ok(Self { x, y })
    }

    pub fn n_sites(&self) -> usize {
        self.x * self.y
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites()
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.x + col
    }

    /// `(row, col)` of a site index.
    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.x, site % self.x)
    }

    /// Rejects lattices whose dense statevector would exceed `cap` qubits.
    pub fn check_dense(&self, cap: usize) -> Result<()> {
        if self.n_qubits() > cap {
            return Err(invalid(format!(
                "{}x{} lattice needs {} qubits, above the dense-simulation cap of {cap}",
                self.x,
                self.y,
                self.n_qubits()
            )));
        }
        Ok(())
    }

    /// All horizontal bonds followed by all vertical bonds.
    pub fn bonds(&self) -> Vec<Bond> {
        let mut out = Vec::with_capacity(self.n_bonds());
        for r in 0..self.y {
            for c in 0..self.x.saturating_sub(1) {
                out.push(Bond { a: self.site(r, c), b: self.site(r, c + 1), vertical: false });
            }
        }
        for r in 0..self.y.saturating_sub(1) {
            for c in 0..self.x {
                out.push(Bond { a: self.site(r, c), b: self.site(r + 1, c), vertical: true });
            }
        }
        out
    }

    pub fn n_bonds(&self) -> usize {
        self.x * (self.y - 1) + self.y * (self.x - 1)
    }

    /// Lattice neighbours of `site` in a fixed order (up, left, right, down).
    pub fn neighbors(&self, site: usize) -> Vec<usize> {
        let (r, c) = self.coords(site);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(self.site(r - 1, c));
        }
        if c > 0 {
            out.push(self.site(r, c - 1));
        }
        if c + 1 < self.x {
            out.push(self.site(r, c + 1));
        }
        if r + 1 < self.y {
            out.push(self.site(r + 1, c));
        }
        out
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.x, self.y)
    }
}

/// Hopping amplitude `j` and on-site repulsion `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub j: f64,
    pub u: f64,
}

impl Default for HubbardParams {
    fn default() -> Self {
        Self { j: 0.5, u: 2.0 }
    }
}

impl HubbardParams {
    pub fn new(j: f64, u: f64) -> Result<Self> {
        if !j.is_finite() || !u.is_finite() {
            return Err(invalid(format!("J and U must be finite, got J={j}, U={u}")));
        }
        Ok(Self { j, u })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

/// Snake Jordan-Wigner ordering of the lattice sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JWLayout {
    n_sites: usize,
    snake_order: Vec<usize>,
    position: Vec<usize>,
}

impl JWLayout {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Sites in Jordan-Wigner order.
    pub fn snake_order(&self) -> &[usize] {
        &self.snake_order
    }

    /// Position of `site` along the snake.
    pub fn position(&self, site: usize) -> usize {
        self.position[site]
    }

    pub fn site_to_qubit_up(&self, site: usize) -> usize {
        self.position[site]
    }

    pub fn site_to_qubit_down(&self, site: usize) -> usize {
        self.n_sites + self.position[site]
    }

    pub fn qubit(&self, site: usize, spin: Spin) -> usize {
        match spin {
            Spin::Up => self.site_to_qubit_up(site),
            Spin::Down => self.site_to_qubit_down(site),
        }
    }
}

pub fn build_snake_layout(lattice: &LatticeSpec) -> JWLayout {
    let mut snake_order = Vec::with_capacity(lattice.n_sites());
    for r in 0..lattice.y {
        if r % 2 == 0 {
            snake_order.extend((0..lattice.x).map(|c| lattice.site(r, c)));
        } else {
            snake_order.extend((0..lattice.x).rev().map(|c| lattice.site(r, c)));
        }
    }
    let mut position = vec![0; lattice.n_sites()];
    for (k, &s) in snake_order.iter().enumerate() {
        position[s] = k;
    }
    JWLayout { n_sites: lattice.n_sites(), snake_order, position }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Real coefficient times a tensor product of single-qubit Paulis.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    /// `(qubit, Pauli)` pairs sorted by qubit, each qubit at most once.
    pub ops: Vec<(usize, Pauli)>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, mut ops: Vec<(usize, Pauli)>) -> Self {
        ops.sort_by_key(|&(q, _)| q);
        debug_assert!(ops.windows(2).all(|w| w[0].0 != w[1].0), "repeated qubit in Pauli string");
        Self { coefficient, ops }
    }

    /// Bit masks `(flip, phase)`: qubits carrying X or Y flip; qubits
    /// carrying Y or Z contribute a sign.
    pub fn masks(&self) -> (u64, u64, u32) {
        let mut flip = 0u64;
        let mut phase = 0u64;
        let mut n_y = 0;
        for &(q, p) in &self.ops {
            match p {
                Pauli::X => flip |= 1 << q,
                Pauli::Z => phase |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    phase |= 1 << q;
                    n_y += 1;
                }
            }
        }
        (flip, phase, n_y)
    }
}

/// One hopping bond for one spin species: `(J/2)(XX + YY) Z...Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingTerm {
    pub bond: Bond,
    pub spin: Spin,
    pub xx: PauliTerm,
    pub yy: PauliTerm,
}

/// Qubit Hamiltonian of the Hubbard model: identity offset, hopping groups and
/// the Z / ZZ parts of the interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitHamiltonian {
    pub n_qubits: usize,
    pub constant: f64,
    pub hopping: Vec<HoppingTerm>,
    pub onsite: Vec<PauliTerm>,
}

impl QubitHamiltonian {
    /// Every non-identity term, hopping first.
    pub fn terms(&self) -> impl Iterator<Item = &PauliTerm> {
        self.hopping.iter().flat_map(|h| [&h.xx, &h.yy]).chain(self.onsite.iter())
    }
}

pub fn hamiltonian_terms(
    lattice: &LatticeSpec,
    params: &HubbardParams,
    layout: &JWLayout,
) -> QubitHamiltonian {
    let n = lattice.n_sites();
    let mut hopping = Vec::with_capacity(2 * lattice.n_bonds());
    for bond in lattice.bonds() {
        for spin in [Spin::Up, Spin::Down] {
            let (mut qa, mut qb) = (layout.qubit(bond.a, spin), layout.qubit(bond.b, spin));
            if qa > qb {
                std::mem::swap(&mut qa, &mut qb);
            }
            let string = |p: Pauli| {
                let mut ops = vec![(qa, p), (qb, p)];
                ops.extend((qa + 1..qb).map(|q| (q, Pauli::Z)));
                PauliTerm::new(params.j / 2.0, ops)
            };
            hopping.push(HoppingTerm { bond, spin, xx: string(Pauli::X), yy: string(Pauli::Y) });
        }
    }
    let quarter = params.u / 4.0;
    let mut onsite = Vec::with_capacity(3 * n);
    for site in 0..n {
        let (qu, qd) = (layout.site_to_qubit_up(site), layout.site_to_qubit_down(site));
        onsite.push(PauliTerm::new(-quarter, vec![(qu, Pauli::Z)]));
        onsite.push(PauliTerm::new(-quarter, vec![(qd, Pauli::Z)]));
        onsite.push(PauliTerm::new(quarter, vec![(qu, Pauli::Z), (qd, Pauli::Z)]));
    }
    QubitHamiltonian { n_qubits: 2 * n, constant: quarter * n as f64, hopping, onsite }
}

/// A computational-basis state of the `2 * n_sites` mode register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductState {
    bits: u64,
    n_sites: usize,
}

impl ProductState {
    pub fn new(bits: u64, n_sites: usize) -> Result<Self> {
        if n_sites == 0 || 2 * n_sites > 64 {
            return Err(invalid(format!("unsupported site count {n_sites}")));
        }
        if 2 * n_sites < 64 && bits >> (2 * n_sites) != 0 {
            return Err(invalid(format!("bits {bits:#x} exceed a {}-qubit register", 2 * n_sites)));
        }
        Ok(Self { bits, n_sites })
    }

    /// Builds a state from occupied snake positions of each spin register.
    pub fn from_occupations(n_sites: usize, up: &[usize], down: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &p in up {
            if p >= n_sites {
                return Err(invalid(format!("up position {p} out of range")));
            }
            bits |= 1 << p;
        }
        for &p in down {
            if p >= n_sites {
                return Err(invalid(format!("down position {p} out of range")));
            }
            bits |= 1 << (n_sites + p);
        }
        Self::new(bits, n_sites)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites
    }

    fn site_mask(&self) -> u64 {
        (1u64 << self.n_sites) - 1
    }

    pub fn up_bits(&self) -> u64 {
        self.bits & self.site_mask()
    }

    pub fn down_bits(&self) -> u64 {
        (self.bits >> self.n_sites) & self.site_mask()
    }

    pub fn n_up(&self) -> usize {
        self.up_bits().count_ones() as usize
    }

    pub fn n_down(&self) -> usize {
        self.down_bits().count_ones() as usize
    }

    pub fn is_occupied(&self, qubit: usize) -> bool {
        self.bits >> qubit & 1 == 1
    }

    /// Occupied qubit indices in increasing order.
    pub fn occupied(&self) -> Vec<usize> {
        (0..self.n_qubits()).filter(|&q| self.is_occupied(q)).collect()
    }

    /// Number of doubly occupied sites (qubit layout independent, since both
    /// registers share the snake order).
    pub fn double_occupancy(&self) -> usize {
        (self.up_bits() & self.down_bits()).count_ones() as usize
    }

    pub fn with_bits(&self, bits: u64) -> Self {
        Self { bits, n_sites: self.n_sites }
    }

    /// Bitstring with qubit 0 first.
    pub fn to_bitstring(&self) -> String {
        (0..self.n_qubits()).map(|q| if self.is_occupied(q) { '1' } else { '0' }).collect()
    }

    pub fn to_hex(&self) -> String {
        format!("{:0width$x}", self.bits, width = self.n_qubits().div_ceil(4))
    }
}

pub fn neel_state(lattice: &LatticeSpec, layout: &JWLayout) -> ProductState {
    let n = lattice.n_sites();
    debug_assert_eq!(n, layout.n_sites());
    let up: Vec<usize> = (0..n).step_by(2).collect();
    let down: Vec<usize> = (1..n).step_by(2).collect();
    ProductState::from_occupations(n, &up, &down).expect("positions are in range")
}

/// All product states with the given particle numbers, in increasing bit order.
pub fn sector_states(n_sites: usize, n_up: usize, n_down: usize) -> Vec<ProductState> {
    let ups = combinations(n_sites, n_up);
    let downs = combinations(n_sites, n_down);
    let mut out = Vec::with_capacity(ups.len() * downs.len());
    for &d in &downs {
        for &u in &ups {
            out.push(ProductState { bits: u | d << n_sites, n_sites });
        }
    }
    out
}

/// Bit masks over `n` bits with exactly `k` set, increasing.
fn combinations(n: usize, k: usize) -> Vec<u64> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    // Gosper's hack walks same-popcount masks in increasing order.
    let limit = 1u64 << n;
    let mut m = (1u64 << k) - 1;
    let mut out = Vec::new();
    while m < limit {
        out.push(m);
        let c = m & m.wrapping_neg();
        let r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}
