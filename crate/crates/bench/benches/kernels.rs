use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use locomplex::analysis::{synthetic::uniform_patch, twonn_id};
use locomplex::autoencoder::network::{gradient, NetworkParams};
use locomplex::circuit::{brickwork_step, sample_gate, StateVector};
use locomplex::gge::thermal_expectations;
use locomplex::lindblad::{build_liouvillian, random_rotated_dissipators};
use locomplex::linalg::C64;
use locomplex::pauli::{enumerate_support_strings, ising_charge, ising_hamiltonian};
use locomplex::{GibbsSpectrum, LagrangeVector, NetworkConfig};

fn gibbs(c: &mut Criterion) {
    let charges: Vec<_> = (0..3).map(|k| ising_charge(k, 1.0, 0.6)).collect();
    let mut g = c.benchmark_group("gibbs");
    g.sample_size(10);
    g.bench_function("spectrum_L10_three_charges", |b| {
        b.iter(|| GibbsSpectrum::new(black_box(&charges), 10, 3).unwrap())
    });
    let spectrum = GibbsSpectrum::new(&charges, 10, 3).unwrap();
    let lambda = LagrangeVector(vec![-0.4, 0.2, 0.1]);
    g.bench_function("observe_L10", |b| b.iter(|| spectrum.observe(black_box(&lambda)).unwrap()));
    let labels = enumerate_support_strings(3).unwrap();
    let h = ising_hamiltonian(-0.8, -0.48, 0.0);
    g.bench_function("thermal_oracle_L10", |b| {
        b.iter(|| thermal_expectations(black_box(&h), &labels, 10).unwrap())
    });
    g.finish();
}

fn liouvillian(c: &mut Criterion) {
    let h = ising_hamiltonian(1.0, 1.152, 0.974);
    let bath = random_rotated_dissipators(3, 1e-3).unwrap();
    let l = build_liouvillian(&h, &bath, 6).unwrap();
    let d = l.hilbert_dim();
    let rho = Array2::from_shape_fn((d, d), |(i, j)| C64::new(((i * 7 + j) % 5) as f64, (i as f64 - j as f64) * 0.1));
    c.bench_function("liouvillian_apply_N6", |b| b.iter(|| l.apply(black_box(&rho))));
}

fn circuit(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (_, even) = sample_gate(&mut rng);
    let (_, odd) = sample_gate(&mut rng);
    let state = StateVector::product(16, 0.7, 0.3).unwrap();
    c.bench_function("brickwork_step_L16", |b| {
        b.iter_batched_ref(
            || state.clone(),
            |s| brickwork_step(s, &even, &odd).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn network(c: &mut Criterion) {
    let net = NetworkConfig::new(48, 200, 2);
    let params = NetworkParams::init(&net, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Array2::from_shape_fn((128, 48), |_| rng.random_range(-1.0..1.0));
    c.bench_function("forward_backward_w200_b128", |b| {
        b.iter(|| gradient(&params, &net, black_box(&x.view())).unwrap())
    });
}

fn twonn(c: &mut Criterion) {
    let pts = uniform_patch(3, 2000, 48, 5);
    let mut g = c.benchmark_group("twonn");
    g.sample_size(10);
    g.bench_function("n2000_d48", |b| b.iter(|| twonn_id(black_box(&pts.view())).unwrap()));
    g.finish();
}

criterion_group!(kernels, gibbs, liouvillian, circuit, network, twonn);
criterion_main!(kernels);
