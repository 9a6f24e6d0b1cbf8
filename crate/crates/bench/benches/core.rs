use criterion::{black_box, criterion_group, criterion_main, Criterion};
use levelcheck::appendix::{transversal_sigma, Appendix, Case};
use levelcheck::divisor::{distribution_check, f_m_annihilation_check};
use levelcheck::gsp6::{stabilizer, Method};
use levelcheck::order::{subgroup_order, OrderOptions};
use levelcheck::unitary::complete_row;
use levelcheck_bench::{gaussian, probe, random_invertible, random_matrices};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ring_arithmetic(c: &mut Criterion) {
    let ring = gaussian(3, 4);
    let x = probe(&ring);
    c.bench_function("inert_mul_pow", |b| b.iter(|| ring.pow(black_box(x), 1000)));
    let mats = random_matrices(&ring, 4, 64, 1);
    c.bench_function("mat_mul_4x4_inert", |b| {
        b.iter(|| mats.windows(2).map(|w| ring.mat_mul(&w[0], &w[1])).count())
    });
    let inv = random_invertible(&ring, 4, 64, 2);
    c.bench_function("mat_inverse_4x4_inert", |b| b.iter(|| inv.iter().map(|a| ring.mat_inverse(a).is_ok()).count()));
}

fn orders(c: &mut Criterion) {
    let mut g = c.benchmark_group("orders");
    g.sample_size(10);
    let ap = Appendix::new(Case::Split, 2, 1, 6, None).unwrap();
    let v = ap.v().unwrap();
    let vp = ap.v_prime().unwrap();
    let opts = OrderOptions::default();
    g.bench_function("v_nm_split_p2", |b| b.iter(|| subgroup_order(&v, &opts).unwrap()));
    g.bench_function("v_prime_split_p2", |b| b.iter(|| subgroup_order(&vp, &opts).unwrap()));
    g.finish();
}

fn transversals(c: &mut Criterion) {
    let mut g = c.benchmark_group("transversals");
    g.sample_size(10);
    let ap = Appendix::new(Case::Split, 2, 1, 6, None).unwrap();
    g.bench_function("sigma_split_p2", |b| b.iter(|| transversal_sigma(&ap).unwrap().reps.len()));
    g.finish();
}

fn divisors(c: &mut Criterion) {
    c.bench_function("distribution_4_5_g2", |b| b.iter(|| distribution_check(4, 5, 2).pass));
    c.bench_function("fm_annihilation_g3_m5", |b| b.iter(|| f_m_annihilation_check(3, 5).pass));
}

fn unitary(c: &mut Criterion) {
    let ring = gaussian(3, 2);
    let row = vec![ring.one(), ring.zero(), ring.zero(), ring.one()];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    c.bench_function("complete_row_qi_9", |b| b.iter(|| complete_row(&ring, &row, &mut rng).unwrap()));
}

fn gsp6(c: &mut Criterion) {
    let mut g = c.benchmark_group("gsp6");
    g.sample_size(10);
    g.bench_function("stabilizer_p5_join", |b| b.iter(|| stabilizer(5, Method::Join).unwrap()));
    g.finish();
}

criterion_group!(benches, ring_arithmetic, orders, transversals, divisors, unitary, gsp6);
criterion_main!(benches);
