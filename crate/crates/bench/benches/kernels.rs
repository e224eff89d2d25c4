use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_bigint::BigUint;
use rand::SeedableRng;

use rzk_core::fq::{next_prime_at_least, FieldModulus, FqMatrix};
use rzk_core::graphs::{find_hamiltonian_cycle, Graph};
use rzk_core::quantum::{check_theorem_multi, DensityMatrix, ProjectorFamily};
use rzk_core::zkproto::{classical_soundness_value, run_honest};
use rzk_core::SeededRng;

fn field_kernels(c: &mut Criterion) {
    // protocol-scale modulus: next prime above 64·6!·2^30
    let q0 = BigUint::from(64u64 * 720) << 30;
    let q = FieldModulus::new(next_prime_at_least(&q0).q().clone()).unwrap();
    let mut rng = SeededRng::seed_from_u64(1);
    let a = FqMatrix::sample_uniform(8, 8, &q, &mut rng);
    let b = FqMatrix::sample_uniform(8, 8, &q, &mut rng);

    c.bench_function("fq/hadamard_8x8_46bit", |bencher| {
        bencher.iter(|| a.hadamard(&b).unwrap())
    });
    c.bench_function("fq/sample_8x8_46bit", |bencher| {
        bencher.iter_batched(
            || SeededRng::seed_from_u64(2),
            |mut r| FqMatrix::sample_uniform(8, 8, &q, &mut r),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("fq/next_prime_above_2^46", |bencher| {
        bencher.iter(|| next_prime_at_least(&q0))
    });
}

fn measurement_kernels(c: &mut Criterion) {
    let mut rng = SeededRng::seed_from_u64(3);
    let sigma = DensityMatrix::random_mixed(16, &mut rng);
    let family = ProjectorFamily::random(16, 4, 2, &mut rng);
    c.bench_function("quantum/theorem_check_d16_n4_s2", |bencher| {
        bencher.iter(|| check_theorem_multi(&sigma, &family).unwrap())
    });

    let sigma32 = DensityMatrix::random_mixed(32, &mut rng);
    let family32 = ProjectorFamily::random(32, 8, 4, &mut rng);
    c.bench_function("quantum/theorem_check_d32_n8_s4", |bencher| {
        bencher.iter(|| check_theorem_multi(&sigma32, &family32).unwrap())
    });
}

fn protocol_kernels(c: &mut Criterion) {
    let q = FieldModulus::from_u64(3079).unwrap();
    let g = Graph::complete(6);
    let cycle = find_hamiltonian_cycle(&g).unwrap().unwrap();
    c.bench_function("zkproto/honest_round_n6", |bencher| {
        let mut seed = 0u64;
        bencher.iter(|| {
            seed += 1;
            run_honest(&g, &cycle, &q, seed).unwrap()
        })
    });

    let path5 = Graph::path(5);
    c.bench_function("zkproto/soundness_scan_n5", |bencher| {
        bencher.iter(|| classical_soundness_value(&path5, &q).unwrap())
    });
}

criterion_group!(benches, field_kernels, measurement_kernels, protocol_kernels);
criterion_main!(benches);
