use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hubbard_ts::circuit::{build_loschmidt_circuit, Gate, GateKind, LoschmidtOptions};
use hubbard_ts::model::{build_snake_layout, hamiltonian_terms, neel_state, HubbardParams, LatticeSpec};
use hubbard_ts::sim::{EigenDecomposition, PauliOperator, StateVector};

fn gate_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("gate");
    for n in [12usize, 16, 20] {
        let mut state = StateVector::zero(n);
        let h = Gate::one(GateKind::H, 0);
        let zz = Gate::two(GateKind::ZZPhase(0.3), 1, n - 1);
        let xx = Gate::two(GateKind::XXPhase(0.3), 2, n / 2);
        group.bench_with_input(BenchmarkId::new("h", n), &n, |b, _| b.iter(|| state.apply_gate(black_box(&h)).unwrap()));
        group.bench_with_input(BenchmarkId::new("zz_phase", n), &n, |b, _| b.iter(|| state.apply_gate(black_box(&zz)).unwrap()));
        group.bench_with_input(BenchmarkId::new("xx_phase", n), &n, |b, _| b.iter(|| state.apply_gate(black_box(&xx)).unwrap()));
    }
    group.finish();
}

fn loschmidt_circuits(c: &mut Criterion) {
    let mut group = c.benchmark_group("loschmidt_circuit");
    group.sample_size(20);
    let params = HubbardParams::default();
    for (x, y) in [(2, 2), (2, 3), (2, 4)] {
        let l = LatticeSpec::new(x, y).unwrap();
        let psi = neel_state(&l, &build_snake_layout(&l));
        let lc = build_loschmidt_circuit(&psi, &l, &params, 1.6, 2, 1.0, LoschmidtOptions::default()).unwrap();
        group.bench_function(format!("{x}x{y}"), |b| {
            b.iter(|| {
                let mut s = StateVector::zero(lc.circuit.n_qubits());
                s.apply_circuit(black_box(&lc.circuit)).unwrap();
                s
            })
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum");
    group.sample_size(10);
    for (x, y) in [(2, 2), (2, 3)] {
        let l = LatticeSpec::new(x, y).unwrap();
        let ham = hamiltonian_terms(&l, &HubbardParams::default(), &build_snake_layout(&l));
        let op = PauliOperator::from_hamiltonian(&ham);
        group.bench_function(format!("{x}x{y}"), |b| b.iter(|| EigenDecomposition::from_pauli(black_box(&op)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, gate_kernels, loschmidt_circuits, spectrum);
criterion_main!(benches);
