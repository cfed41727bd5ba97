//! Native-gate circuits for Trotterized Hubbard evolution and GHZ-style
//! Loschmidt interferometry.
//!
//! Circuits act on *positions*: qubit `p` of the register. Fermionic swaps
//! move modes between positions, and [`Circuit::relabel`] records where the
//! content of each starting position ends up.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, invalid, Error, Result};
use crate::model::{
    build_snake_layout, hamiltonian_terms, Bond, HubbardParams, JWLayout, LatticeSpec, ProductState,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    /// `exp(-i theta/2 (cos(phi) X + sin(phi) Y))`.
    U1q { theta: f64, phi: f64 },
    /// `exp(-i theta/2 Z)`.
    Rz(f64),
    /// `exp(-i alpha/2 Z Z)`.
    ZZPhase(f64),
    XXPhase(f64),
    YYPhase(f64),
    H,
    X,
    Y,
    Z,
    /// Control first, target second.
    CNOT,
    CZ,
    /// Fermionic swap: SWAP followed by a sign on `|11>`.
    FSWAP,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::U1q { .. } | GateKind::Rz(_) | GateKind::H | GateKind::X | GateKind::Y | GateKind::Z => 1,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::U1q { .. } => "U1Q",
            GateKind::Rz(_) => "RZ",
            GateKind::ZZPhase(_) => "ZZPHASE",
            GateKind::XXPhase(_) => "XXPHASE",
            GateKind::YYPhase(_) => "YYPHASE",
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::CNOT => "CNOT",
            GateKind::CZ => "CZ",
            GateKind::FSWAP => "FSWAP",
        }
    }

    /// Inverse rotation; fixed gates are self-inverse.
    pub fn inverse(&self) -> GateKind {
        match *self {
            GateKind::U1q { theta, phi } => GateKind::U1q { theta: -theta, phi },
            GateKind::Rz(a) => GateKind::Rz(-a),
            GateKind::ZZPhase(a) => GateKind::ZZPhase(-a),
            GateKind::XXPhase(a) => GateKind::XXPhase(-a),
            GateKind::YYPhase(a) => GateKind::YYPhase(-a),
            k => k,
        }
    }

    /// Brings rotation angles into `[0, 2pi)`. Rotations by `theta` and
    /// `theta + 2pi` differ by a sign, so the returned phase (0 or pi) must be
    /// added to the circuit's global phase.
    fn canonical(self) -> (GateKind, f64) {
        fn wrap(a: f64) -> (f64, f64) {
            let turns = (a / TAU).floor();
            let mut w = a - turns * TAU;
            let mut t = turns;
            if w >= TAU {
                w -= TAU;
                t += 1.0;
            }
            if w < 0.0 {
                w += TAU;
                t -= 1.0;
            }
            let phase = if t.rem_euclid(2.0) == 1.0 { PI } else { 0.0 };
            (w, phase)
        }
        match self {
            GateKind::U1q { theta, phi } => {
                let (t, ph) = wrap(theta);
                let (p, _) = wrap(phi);
                (GateKind::U1q { theta: t, phi: p }, ph)
            }
            GateKind::Rz(a) => {
                let (w, ph) = wrap(a);
                (GateKind::Rz(w), ph)
            }
            GateKind::ZZPhase(a) => {
                let (w, ph) = wrap(a);
                (GateKind::ZZPhase(w), ph)
            }
            GateKind::XXPhase(a) => {
                let (w, ph) = wrap(a);
                (GateKind::XXPhase(w), ph)
            }
            GateKind::YYPhase(a) => {
                let (w, ph) = wrap(a);
                (GateKind::YYPhase(w), ph)
            }
            k => (k, 0.0),
        }
    }

    /// 2x2 unitary, row-major.
    pub fn matrix1(&self) -> Option<[[Complex64; 2]; 2]> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let z = c(0.0, 0.0);
        Some(match *self {
            GateKind::U1q { theta, phi } => {
                let (s, co) = (theta / 2.0).sin_cos();
                let e = Complex64::from_polar(1.0, phi);
                [[c(co, 0.0), c(0.0, -s) * e.conj()], [c(0.0, -s) * e, c(co, 0.0)]]
            }
            GateKind::Rz(a) => [[Complex64::from_polar(1.0, -a / 2.0), z], [z, Complex64::from_polar(1.0, a / 2.0)]],
            GateKind::H => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
            }
            GateKind::X => [[z, c(1.0, 0.0)], [c(1.0, 0.0), z]],
            GateKind::Y => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
            GateKind::Z => [[c(1.0, 0.0), z], [z, c(-1.0, 0.0)]],
            _ => return None,
        })
    }

    /// 4x4 unitary, row-major, with the first target as the high bit of the
    /// local index.
    pub fn matrix2(&self) -> Option<[[Complex64; 4]; 4]> {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let mut m = [[z; 4]; 4];
        match *self {
            GateKind::ZZPhase(a) => {
                let (p, n) = (Complex64::from_polar(1.0, -a / 2.0), Complex64::from_polar(1.0, a / 2.0));
                m[0][0] = p;
                m[1][1] = n;
                m[2][2] = n;
                m[3][3] = p;
            }
            GateKind::XXPhase(a) => {
                let (s, co) = (a / 2.0).sin_cos();
                let d = Complex64::new(co, 0.0);
                let o = Complex64::new(0.0, -s);
                for i in 0..4 {
                    m[i][i] = d;
                    m[i][3 - i] = o;
                }
            }
            GateKind::YYPhase(a) => {
                let (s, co) = (a / 2.0).sin_cos();
                let d = Complex64::new(co, 0.0);
                for i in 0..4 {
                    m[i][i] = d;
                }
                // YY maps |00> -> -|11> and |01> -> |10>.
                m[0][3] = Complex64::new(0.0, s);
                m[3][0] = Complex64::new(0.0, s);
                m[1][2] = Complex64::new(0.0, -s);
                m[2][1] = Complex64::new(0.0, -s);
            }
            GateKind::CNOT => {
                m[0][0] = one;
                m[1][1] = one;
                m[2][3] = one;
                m[3][2] = one;
            }
            GateKind::CZ => {
                m[0][0] = one;
                m[1][1] = one;
                m[2][2] = one;
                m[3][3] = -one;
            }
            GateKind::FSWAP => {
                m[0][0] = one;
                m[1][2] = one;
                m[2][1] = one;
                m[3][3] = -one;
            }
            _ => return None,
        }
        Some(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Targets {
    One(usize),
    Two(usize, usize),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::One(_) => 1,
            Targets::Two(..) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max(&self) -> usize {
        match *self {
            Targets::One(a) => a,
            Targets::Two(a, b) => a.max(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Targets,
}

impl Gate {
    pub fn one(kind: GateKind, q: usize) -> Self {
        debug_assert_eq!(kind.arity(), 1);
        Self { kind, targets: Targets::One(q) }
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Self {
        debug_assert_eq!(kind.arity(), 2);
        Self { kind, targets: Targets::Two(a, b) }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.arity() == 2
    }

    /// Checks arity, distinctness and range against an `n_qubits` register.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.kind.arity() != self.targets.len() {
            return Err(contract(format!(
                "{} expects {} target(s), got {}",
                self.kind.name(),
                self.kind.arity(),
                self.targets.len()
            )));
        }
        if let Targets::Two(a, b) = self.targets {
            if a == b {
                return Err(contract(format!("{} targets must differ, got {a},{a}", self.kind.name())));
            }
        }
        let m = self.targets.max();
        if m >= n_qubits {
            return Err(Error::Index { index: m, n_qubits });
        }
        Ok(())
    }
}

/// Ordered gate list with a global phase and the position permutation its
/// fermionic swaps induce.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    global_phase: f64,
    /// `relabel[p]` is where the content that started at position `p` sits
    /// after the circuit.
    relabel: Vec<usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new(), global_phase: 0.0, relabel: (0..n_qubits).collect() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Phase `phi` such that the circuit implements `exp(i phi)` times the
    /// product of its gates.
    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    pub fn relabel(&self) -> &[usize] {
        &self.relabel
    }

    pub fn add_global_phase(&mut self, phi: f64) {
        self.global_phase = (self.global_phase + phi).rem_euclid(TAU);
    }

    /// Appends a gate after canonicalizing its angles. Panics on an invalid
    /// gate, which only a builder bug can produce; use [`Circuit::try_push`]
    /// for untrusted input.
    pub fn push(&mut self, gate: Gate) {
        self.try_push(gate).expect("builder produced an invalid gate");
    }

    pub fn try_push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let (kind, phase) = gate.kind.canonical();
        if phase != 0.0 {
            self.add_global_phase(phase);
        }
        if let (GateKind::FSWAP, Targets::Two(a, b)) = (kind, gate.targets) {
            for r in self.relabel.iter_mut() {
                if *r == a {
                    *r = b;
                } else if *r == b {
                    *r = a;
                }
            }
        }
        self.gates.push(Gate { kind, targets: gate.targets });
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) {
        assert_eq!(self.n_qubits, other.n_qubits, "register size mismatch");
        for g in &other.gates {
            self.push(*g);
        }
        self.add_global_phase(other.global_phase);
    }

    /// Gate-by-gate inverse in reverse order.
    pub fn inverse(&self) -> Circuit {
        let mut out = Circuit::new(self.n_qubits);
        for g in self.gates.iter().rev() {
            out.push(Gate { kind: g.kind.inverse(), targets: g.targets });
        }
        out.add_global_phase(-self.global_phase);
        out
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn count_kind(&self, pred: impl Fn(&GateKind) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(&g.kind)).count()
    }

    /// Line-oriented text: `qubits N`, optional `phase PHI`, then one gate per
    /// line as `KIND t[,t] [angle...]` with 12 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.n_qubits);
        if self.global_phase != 0.0 {
            let _ = writeln!(s, "phase {}", fmt_angle(self.global_phase));
        }
        for g in &self.gates {
            s.push_str(g.kind.name());
            match g.targets {
                Targets::One(a) => {
                    let _ = write!(s, " {a}");
                }
                Targets::Two(a, b) => {
                    let _ = write!(s, " {a},{b}");
                }
            }
            match g.kind {
                GateKind::U1q { theta, phi } => {
                    let _ = write!(s, " {} {}", fmt_angle(theta), fmt_angle(phi));
                }
                GateKind::Rz(a) | GateKind::ZZPhase(a) | GateKind::XXPhase(a) | GateKind::YYPhase(a) => {
                    let _ = write!(s, " {}", fmt_angle(a));
                }
                _ => {}
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| invalid("empty circuit text"))?;
        let n_qubits = header
            .strip_prefix("qubits ")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or_else(|| invalid(format!("bad header line `{header}`")))?;
        let mut c = Circuit::new(n_qubits);
        for line in lines {
            let mut parts = line.split_whitespace();
            let name = parts.next().unwrap_or_default();
            if name == "phase" {
                let phi = parse_f(parts.next(), line)?;
                c.add_global_phase(phi);
                continue;
            }
            let tstr = parts.next().ok_or_else(|| invalid(format!("missing targets in `{line}`")))?;
            let targets: Vec<usize> = tstr
                .split(',')
                .map(|t| t.parse::<usize>().map_err(|_| invalid(format!("bad target in `{line}`"))))
                .collect::<Result<_>>()?;
            let targets = match targets.as_slice() {
                [a] => Targets::One(*a),
                [a, b] => Targets::Two(*a, *b),
                _ => return Err(invalid(format!("expected one or two targets in `{line}`"))),
            };
            let kind = match name {
                "U1Q" => GateKind::U1q { theta: parse_f(parts.next(), line)?, phi: parse_f(parts.next(), line)? },
                "RZ" => GateKind::Rz(parse_f(parts.next(), line)?),
                "ZZPHASE" => GateKind::ZZPhase(parse_f(parts.next(), line)?),
                "XXPHASE" => GateKind::XXPhase(parse_f(parts.next(), line)?),
                "YYPHASE" => GateKind::YYPhase(parse_f(parts.next(), line)?),
                "H" => GateKind::H,
                "X" => GateKind::X,
                "Y" => GateKind::Y,
                "Z" => GateKind::Z,
                "CNOT" => GateKind::CNOT,
                "CZ" => GateKind::CZ,
                "FSWAP" => GateKind::FSWAP,
                other => return Err(invalid(format!("unknown gate kind `{other}`"))),
            };
            c.try_push(Gate { kind, targets })?;
        }
        Ok(c)
    }
}

fn fmt_angle(a: f64) -> String {
    format!("{a:.11e}")
}

fn parse_f(tok: Option<&str>, line: &str) -> Result<f64> {
    tok.and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| invalid(format!("bad angle in `{line}`")))
}

/// One layer of column swaps applied to every row of both spin registers,
/// plus the vertical bonds that become Jordan-Wigner adjacent after it.
#[derive(Debug, Clone, PartialEq)]
pub struct FswapRound {
    /// Pairs of adjacent positions `(p, p + 1)` within one spin register.
    pub swaps: Vec<(usize, usize)>,
    pub new_bonds: Vec<Bond>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FswapNetwork {
    /// Vertical bonds already adjacent before any swap (the snake's turns).
    pub initial_bonds: Vec<Bond>,
    pub rounds: Vec<FswapRound>,
}

impl FswapNetwork {
    /// FSWAP gates per Trotter step, counting both spin registers.
    pub fn fswap_count(&self) -> usize {
        2 * self.rounds.iter().map(|r| r.swaps.len()).sum::<usize>()
    }
}

/// Fermionic swap network that makes every vertical bond JW-adjacent at some
/// point.
///
/// Every round swaps the same pairs of physical columns in every row, so the
/// two row ends meeting at a snake turn always hold the same column label.
/// A vertical bond between rows `r` and `r + 1` is therefore reached when the
/// turn column has hosted that column's label. Two-row lattices need only one
/// turn column, which a selection sequence of `x(x-1)/2` column swaps sweeps
/// completely. Taller lattices need both edge columns swept; alternating the
/// odd-pair layer `V` and the even-pair layer `W` does that, stopping as soon
/// as every vertical bond has been covered.
pub fn build_fswap_network(lattice: &LatticeSpec, layout: &JWLayout) -> FswapNetwork {
    let (x, y) = (lattice.x, lattice.y);
    let n = lattice.n_sites();
    // content[p] = site currently at register position p.
    let mut content: Vec<usize> = layout.snake_order().to_vec();
    let is_vertical = |a: usize, b: usize| {
        let ((ra, ca), (rb, cb)) = (lattice.coords(a), lattice.coords(b));
        ca == cb && ra.abs_diff(rb) == 1
    };
    let mut covered = std::collections::HashSet::new();
    let scan = |content: &[usize], covered: &mut std::collections::HashSet<(usize, usize)>| {
        let mut fresh = Vec::new();
        for p in 0..n.saturating_sub(1) {
            let (a, b) = (content[p].min(content[p + 1]), content[p].max(content[p + 1]));
            if is_vertical(a, b) && covered.insert((a, b)) {
                fresh.push(Bond { a, b, vertical: true });
            }
        }
        fresh
    };
    let initial_bonds = scan(&content, &mut covered);
    let total_vertical = x * (y - 1);
    let mut rounds = Vec::new();
    if x < 2 || y < 2 {
        return FswapNetwork { initial_bonds, rounds };
    }

    let column_layers: Box<dyn Iterator<Item = Vec<usize>>> = if y == 2 {
        // Bring each remaining column label to the right edge in turn.
        Box::new((0..x - 1).rev().flat_map(move |k| (k..x - 1).map(|c| vec![c])))
    } else {
        Box::new((0..).map(move |layer: usize| (layer % 2..x - 1).step_by(2).collect()))
    };
    for cols in column_layers {
        if covered.len() == total_vertical {
            break;
        }
        assert!(rounds.len() <= 4 * x, "swap network failed to converge for {x}x{y}");
        let mut swaps = Vec::with_capacity(cols.len() * y);
        for r in 0..y {
            for &c in &cols {
                let p = if r % 2 == 0 { r * x + c } else { r * x + (x - 2 - c) };
                swaps.push((p, p + 1));
            }
        }
        for &(p, q) in &swaps {
            content.swap(p, q);
        }
        let new_bonds = scan(&content, &mut covered);
        rounds.push(FswapRound { swaps, new_bonds });
    }
    FswapNetwork { initial_bonds, rounds }
}

/// Hopping layer on a snake-ordered register: adjacent bonds first, then each
/// swap round followed by the bonds it exposes.
fn hopping_layer(lattice: &LatticeSpec, layout: &JWLayout, alpha: f64) -> Vec<Gate> {
    let n = lattice.n_sites();
    let network = build_fswap_network(lattice, layout);
    let mut content: Vec<usize> = layout.snake_order().to_vec();
    let mut gates = Vec::new();
    let hop = |gates: &mut Vec<Gate>, content: &[usize], bond: &Bond| {
        let p = (0..n - 1)
            .find(|&p| {
                let (a, b) = (content[p], content[p + 1]);
                (a, b) == (bond.a, bond.b) || (a, b) == (bond.b, bond.a)
            })
            .expect("bond is adjacent when scheduled");
        for offset in [0, n] {
            gates.push(Gate::two(GateKind::XXPhase(alpha), offset + p, offset + p + 1));
            gates.push(Gate::two(GateKind::YYPhase(alpha), offset + p, offset + p + 1));
        }
    };
    let mut initial: Vec<Bond> = lattice.bonds().into_iter().filter(|b| !b.vertical).collect();
    initial.extend(network.initial_bonds.iter().copied());
    initial.sort_by_key(|b| layout.position(b.a).min(layout.position(b.b)));
    for bond in &initial {
        hop(&mut gates, &content, bond);
    }
    for round in &network.rounds {
        for &(p, q) in &round.swaps {
            for offset in [0, n] {
                gates.push(Gate::two(GateKind::FSWAP, offset + p, offset + q));
            }
            content.swap(p, q);
        }
        for bond in &round.new_bonds {
            hop(&mut gates, &content, bond);
        }
    }
    gates
}

/// Appends `exp(-i H_int dt)`. Both spin registers carry the same mode
/// order, so whatever site sits at up position `p` has its partner at `n + p`.
fn push_onsite_layer(c: &mut Circuit, n: usize, u: f64, dt: f64) {
    for p in 0..n {
        c.push(Gate::one(GateKind::Rz(-u * dt / 2.0), p));
        c.push(Gate::one(GateKind::Rz(-u * dt / 2.0), n + p));
        c.push(Gate::two(GateKind::ZZPhase(u * dt / 2.0), p, n + p));
        c.add_global_phase(-u * dt / 4.0);
    }
}

/// One first-order step `exp(-i H_hopp dt) exp(-i H_int dt)`: the on-site
/// layer, then the hopping layer. A reversed step expects the mode order left
/// by a forward step and runs its hopping layer backwards, restoring the
/// snake order.
pub fn build_trotter_step(
    lattice: &LatticeSpec,
    params: &HubbardParams,
    layout: &JWLayout,
    dt: f64,
    reversed: bool,
) -> Circuit {
    let mut c = Circuit::new(lattice.n_qubits());
    push_onsite_layer(&mut c, lattice.n_sites(), params.u, dt);
    push_hopping(&mut c, lattice, params, layout, dt, reversed);
    c
}

fn push_hopping(c: &mut Circuit, lattice: &LatticeSpec, params: &HubbardParams, layout: &JWLayout, dt: f64, reversed: bool) {
    let mut gates = hopping_layer(lattice, layout, params.j * dt);
    if reversed {
        gates.reverse();
    }
    for g in gates {
        c.push(g);
    }
}

/// Applies the circuit's swap gates to a basis state, returning the permuted
/// state and the fermionic sign picked up along the way.
pub fn permute_product_state(circuit: &Circuit, psi: &ProductState) -> (ProductState, f64) {
    let mut bits = psi.bits();
    let mut sign = 1.0;
    for g in circuit.gates() {
        if let (GateKind::FSWAP, Targets::Two(a, b)) = (g.kind, g.targets) {
            let (ba, bb) = (bits >> a & 1, bits >> b & 1);
            if ba == 1 && bb == 1 {
                sign = -sign;
            }
            if ba != bb {
                bits ^= (1 << a) | (1 << b);
            }
        }
    }
    (psi.with_bits(bits), sign)
}

/// `H` and `Rz(xi)` on the pilot then a CNOT fan to the other occupied
/// qubits, producing `(|0...0> + e^{i xi} |psi0>) / sqrt 2` exactly.
pub fn build_ghz_prep(psi0: &ProductState, xi: f64) -> Result<Circuit> {
    let occupied = psi0.occupied();
    let (&pilot, rest) = occupied.split_first().ok_or_else(|| contract("GHZ preparation needs an occupied qubit"))?;
    let mut c = Circuit::new(psi0.n_qubits());
    c.push(Gate::one(GateKind::H, pilot));
    c.push(Gate::one(GateKind::Rz(xi), pilot));
    c.add_global_phase(xi / 2.0);
    for &q in rest {
        c.push(Gate::two(GateKind::CNOT, pilot, q));
    }
    Ok(c)
}

/// Options for [`build_loschmidt_circuit`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoschmidtOptions {
    /// Replace the first step's on-site layer by a phase on the pilot, valid
    /// because both interferometer branches are interaction eigenstates.
    pub absorb_first_onsite: bool,
}

/// A Loschmidt interferometry circuit with the bookkeeping needed to read it.
#[derive(Debug, Clone)]
pub struct LoschmidtCircuit {
    pub circuit: Circuit,
    pub psi0: ProductState,
    /// Pilot position at measurement time.
    pub pilot: usize,
    /// Positions of `psi0`'s occupied modes at measurement time, pilot first.
    pub decode_fan: Vec<usize>,
    /// Gates belonging to the final decoding block (inverse preparation).
    pub decode_len: usize,
    pub n_steps: usize,
    pub t: f64,
    pub energy: f64,
}

impl LoschmidtCircuit {
    /// Index of the 0-string.
    pub fn zero_string(&self) -> u64 {
        0
    }

    /// Index of the pi-string: the 0-string with the pilot bit set.
    pub fn pi_string(&self) -> u64 {
        1 << self.pilot
    }
}

/// Trotter evolution `U(t)` in `n_steps` alternating forward/reversed steps.
pub fn build_trotter_evolution(
    lattice: &LatticeSpec,
    params: &HubbardParams,
    t: f64,
    n_steps: usize,
) -> Circuit {
    let layout = build_snake_layout(lattice);
    let dt = t / n_steps as f64;
    let mut c = Circuit::new(lattice.n_qubits());
    for step in 0..n_steps {
        c.extend(&build_trotter_step(lattice, params, &layout, dt, step % 2 == 1));
    }
    c
}

pub fn build_loschmidt_circuit(
    psi0: &ProductState,
    lattice: &LatticeSpec,
    params: &HubbardParams,
    t: f64,
    n_steps: usize,
    energy: f64,
    options: LoschmidtOptions,
) -> Result<LoschmidtCircuit> {
    if n_steps == 0 {
        return Err(invalid("n_steps must be at least 1"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("time must be finite and non-negative, got {t}")));
    }
    if psi0.n_sites() != lattice.n_sites() {
        return Err(invalid("initial state does not match the lattice"));
    }
    let layout = build_snake_layout(lattice);
    let dt = t / n_steps as f64;
    let mut xi = energy * t;
    let mut evolution = Circuit::new(lattice.n_qubits());
    for step in 0..n_steps {
        let reversed = step % 2 == 1;
        if step == 0 && options.absorb_first_onsite {
            xi -= params.u * psi0.double_occupancy() as f64 * dt;
            push_hopping(&mut evolution, lattice, params, &layout, dt, reversed);
        } else {
            evolution.extend(&build_trotter_step(lattice, params, &layout, dt, reversed));
        }
    }
    let (psi_final, sign) = permute_product_state(&evolution, psi0);

    let mut circuit = build_ghz_prep(psi0, xi)?;
    circuit.extend(&evolution);
    let decode_xi = if sign < 0.0 { PI } else { 0.0 };
    let decode = build_ghz_prep(&psi_final, decode_xi)?.inverse();
    let decode_len = decode.len();
    circuit.extend(&decode);
    let decode_fan = psi_final.occupied();
    Ok(LoschmidtCircuit {
        circuit,
        psi0: *psi0,
        pilot: decode_fan[0],
        decode_fan,
        decode_len,
        n_steps,
        t,
        energy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Technique {
    Ghz,
    Hadamard,
}

/// Two-qubit gate budget of a two-step Loschmidt measurement.
///
/// `hopping` is per Trotter step; `onsite` and `ghz` cover the whole circuit,
/// so `total_2q = onsite + trotter_steps * hopping + ghz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub onsite: usize,
    pub hopping: usize,
    pub ghz: usize,
    pub total_2q: usize,
    pub n_qubits: usize,
    pub trotter_steps: usize,
}

/// Closed-form gate counts for two Trotter steps with the first on-site layer
/// folded into single-qubit phases.
pub fn count_gates(lattice: &LatticeSpec, technique: Technique) -> GateCounts {
    let (x, y) = (lattice.x as i64, lattice.y as i64);
    let xy = x * y;
    let (onsite, hopping, ghz, n_qubits) = match technique {
        Technique::Ghz => (xy, y * x * x + 7 * xy - 4 * (x + y), 2 * (xy - 1), 2 * xy),
        Technique::Hadamard => (7 * xy, 5 * y * x * x + 11 * xy - 8 * (x + y), 0, 2 * xy + 1),
    };
    let total = onsite + 2 * hopping + ghz;
    GateCounts {
        onsite: onsite as usize,
        hopping: hopping as usize,
        ghz: ghz as usize,
        total_2q: total as usize,
        n_qubits: n_qubits as usize,
        trotter_steps: 2,
    }
}

/// Counts a built Loschmidt circuit by gate role: `ZZPhase` is on-site,
/// `XXPhase`/`YYPhase`/`FSWAP` are hopping (reported per step), `CNOT` is GHZ.
pub fn tally_gates(lc: &LoschmidtCircuit) -> GateCounts {
    let c = &lc.circuit;
    let onsite = c.count_kind(|k| matches!(k, GateKind::ZZPhase(_)));
    let hopping = c.count_kind(|k| matches!(k, GateKind::XXPhase(_) | GateKind::YYPhase(_) | GateKind::FSWAP));
    let ghz = c.count_kind(|k| matches!(k, GateKind::CNOT));
    GateCounts {
        onsite,
        hopping: hopping / lc.n_steps,
        ghz,
        total_2q: c.two_qubit_count(),
        n_qubits: c.n_qubits(),
        trotter_steps: lc.n_steps,
    }
}

/// Bonds in the order a forward step applies their hopping exponentials.
pub fn hopping_bond_order(lattice: &LatticeSpec) -> Vec<Bond> {
    let layout = build_snake_layout(lattice);
    let network = build_fswap_network(lattice, &layout);
    let mut first: Vec<Bond> = lattice.bonds().into_iter().filter(|b| !b.vertical).collect();
    first.extend(network.initial_bonds.iter().copied());
    first.sort_by_key(|b| layout.position(b.a).min(layout.position(b.b)));
    first.extend(network.rounds.iter().flat_map(|r| r.new_bonds.iter().copied()));
    first
}

/// True when the bonds a step schedules are exactly the Hamiltonian's bonds.
pub fn scheduled_bonds_cover_hamiltonian(lattice: &LatticeSpec, params: &HubbardParams) -> bool {
    let layout = build_snake_layout(lattice);
    let h = hamiltonian_terms(lattice, params, &layout);
    let mut want: Vec<(usize, usize)> = h.hopping.iter().map(|t| (t.bond.a, t.bond.b)).collect();
    want.sort_unstable();
    want.dedup();
    let mut got: Vec<(usize, usize)> = hopping_bond_order(lattice).iter().map(|b| (b.a, b.b)).collect();
    got.sort_unstable();
    want == got
}
