//! Fixtures shared by the `levelcheck` benchmarks.

use levelcheck::ring::{Elem, Ring, RingSpec};
use levelcheck::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` random square matrices of size `dim` over `ring`, from a fixed seed.
pub fn random_matrices(ring: &Ring, dim: usize, n: usize, seed: u64) -> Vec<Mat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ring.modulus() as i64;
    (0..n)
        .map(|_| Mat::from_fn(dim, |_, _| ring.from_coords(rng.gen_range(0..m), rng.gen_range(0..m))))
        .collect()
}

/// Random invertible matrices, found by rejection.
pub fn random_invertible(ring: &Ring, dim: usize, n: usize, seed: u64) -> Vec<Mat> {
    let mut out = Vec::with_capacity(n);
    let mut s = seed;
    while out.len() < n {
        out.extend(random_matrices(ring, dim, n, s).into_iter().filter(|a| ring.is_unit(ring.det(a))));
        s += 1;
    }
    out.truncate(n);
    out
}

/// The Gaussian integers modulo `p^k` for a prime `p = 3 mod 4`.
pub fn gaussian(p: u32, k: u32) -> Ring {
    Ring::new(RingSpec::for_field(p, k, -1).expect("p is inert in Q(i)")).expect("valid ring")
}

/// A fixed nonzero element, to keep the optimiser honest.
pub fn probe(ring: &Ring) -> Elem {
    ring.from_coords(2, 1)
}
