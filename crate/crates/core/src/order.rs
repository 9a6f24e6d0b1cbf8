//! Exact orders of congruence subgroups and uniform sampling.
//!
//! For a subgroup `G` of the ambient group modulo `p^K` with reduction
//! filtration `G_k = G ∩ ker(mod p^k)`, each quotient `G_k / G_{k+1}` embeds
//! in the space of `X mod p` solving the identity-linearized system with the
//! constraints of exponent above `k`. Lifting a basis of that space to
//! elements of `G_k` shows the embedding is onto, so
//! `|G| = |G mod p| * p^(sum of dimensions)`. The level-one image is
//! certified by generating it from lifted elements.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::congruence::SubgroupSpec;
use crate::error::{Error, Result};
use crate::lift::{Point, System};
use crate::matrix::Mat;
use crate::ring::Ring;

/// Budgets for order computations.
#[derive(Clone, Copy, Debug)]
pub struct OrderOptions {
    /// Cap on the number of level-one points.
    pub cap: u64,
    /// Number of sampled base points at which fiber dimensions are compared.
    pub rank_samples: usize,
    /// Attempts per lift before giving up.
    pub retries: usize,
    pub seed: u64,
}

impl Default for OrderOptions {
    fn default() -> Self {
        OrderOptions { cap: 20_000_000, rank_samples: 16, retries: 64, seed: 0 }
    }
}

/// A certified description of a subgroup modulo `p^K`.
pub struct SubgroupModel {
    pub system: System,
    ring1: Ring,
    /// The image modulo `p`.
    pub level_one: Vec<Point>,
    /// `dims[k - 1] = dim G_k / G_{k+1}` for `k = 1 .. K-1`.
    pub dims: Vec<usize>,
    /// Lifts of a basis of each filtration quotient.
    pub basis: Vec<Vec<Point>>,
    lifted: Vec<Option<Point>>,
    retries: usize,
}

/// `(a, nu_a) * (b, nu_b)`.
pub fn point_mul(ring: &Ring, a: &Point, b: &Point) -> Point {
    Point { x: ring.mat_mul(&a.x, &b.x), nu: ring.mul(a.nu, b.nu) }
}

impl SubgroupModel {
    pub fn build(spec: &SubgroupSpec, opts: &OrderOptions) -> Result<SubgroupModel> {
        Self::from_system(System::from_spec(spec)?, opts)
    }

    pub fn from_system(system: System, opts: &OrderOptions) -> Result<SubgroupModel> {
        let ring = system.ring.clone();
        let ring1 = ring.with_precision(1)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let level_one = system.level_one(opts.cap)?;
        let k = ring.k();
        let id = Mat::identity(&ring, system.n);
        let mut dims = Vec::new();
        let mut basis = Vec::new();
        for level in 1..k {
            let elim_kernel = {
                let f = system
                    .fiber(&id, ring.one(), level)
                    .ok_or_else(|| Error::NonConstantFiber(format!("identity does not lift at level {level}")))?;
                f.kernel
            };
            let mut lifted = Vec::with_capacity(elim_kernel.len());
            for v in &elim_kernel {
                let start = system.apply(&id, ring.one(), level, v);
                let pt = retry(opts.retries, || system.lift_random(&start.x, start.nu, level + 1, &mut rng))
                    .ok_or_else(|| {
                        Error::NonConstantFiber(format!(
                            "a tangent vector at level {level} does not lift to an element of the subgroup"
                        ))
                    })?;
                lifted.push(pt);
            }
            dims.push(elim_kernel.len());
            basis.push(lifted);
        }
        let mut model =
            SubgroupModel { system, ring1, level_one, dims, basis, lifted: Vec::new(), retries: opts.retries };
        model.certify_level_one(&mut rng)?;
        model.check_rank_constancy(opts.rank_samples, &mut rng)?;
        Ok(model)
    }

    /// Exact order.
    pub fn order(&self) -> BigUint {
        let p = BigUint::from(self.system.ring.p());
        let e: usize = self.dims.iter().sum();
        BigUint::from(self.level_one.len()) * p.pow(e as u32)
    }

    /// `log_p` of the order of the kernel of reduction modulo `p`.
    pub fn kernel_exponent(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Show that every level-one point is the reduction of a subgroup element:
    /// the reductions of lifted points generate all of them.
    fn certify_level_one(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let ring1 = self.ring1.clone();
        let index: HashMap<Mat, usize> = self.level_one.iter().enumerate().map(|(i, p)| (p.x.clone(), i)).collect();
        let mut lifted: Vec<Option<Point>> = vec![None; self.level_one.len()];
        let id1 = Mat::identity(&ring1, self.system.n);
        let mut closure: HashSet<Mat> = HashSet::from([id1]);
        let mut gens: Vec<Mat> = Vec::new();
        let mut order: Vec<usize> = (0..self.level_one.len()).collect();
        order.shuffle(rng);
        for &i in &order {
            if closure.len() == self.level_one.len() {
                break;
            }
            if closure.contains(&self.level_one[i].x) {
                continue;
            }
            let pt = self.lift_point(i, rng).ok_or_else(|| {
                Error::NonConstantFiber("a point modulo p does not lift to an element of the subgroup".into())
            })?;
            lifted[i] = Some(pt);
            gens.push(self.level_one[i].x.clone());
            // Close up: every element times every generator.
            let mut frontier: Vec<Mat> = closure.iter().cloned().collect();
            while let Some(a) = frontier.pop() {
                for g in &gens {
                    let b = ring1.mat_mul(&a, g);
                    if !index.contains_key(&b) {
                        return Err(Error::NonConstantFiber(
                            "a product of lifted points left the level-one solution set".into(),
                        ));
                    }
                    if closure.insert(b.clone()) {
                        frontier.push(b);
                    }
                }
            }
        }
        if closure.len() != self.level_one.len() {
            return Err(Error::NonConstantFiber(format!(
                "lifted points generate {} of {} points modulo p",
                closure.len(),
                self.level_one.len()
            )));
        }
        if self.level_one.len() <= 4096 {
            for i in 0..self.level_one.len() {
                if lifted[i].is_none() {
                    lifted[i] = self.lift_point(i, rng);
                }
            }
        }
        self.lifted = lifted;
        Ok(())
    }

    fn lift_point<R: Rng>(&self, i: usize, rng: &mut R) -> Option<Point> {
        let p = &self.level_one[i];
        retry(self.retries, || self.system.lift_level_one(&p.x, p.nu, rng))
    }

    fn check_rank_constancy(&self, samples: usize, rng: &mut ChaCha8Rng) -> Result<()> {
        for _ in 0..samples {
            let g = self.sample(rng)?;
            for (level, &d) in (1..).zip(&self.dims) {
                let got = self.system.nullity_at(&g.x, level + 1);
                if got != d {
                    return Err(Error::NonConstantFiber(format!(
                        "fiber dimension {got} at a sampled point differs from {d} at the identity (level {level})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// A uniformly distributed element of the subgroup.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Point> {
        let ring = &self.system.ring;
        let i = rng.gen_range(0..self.level_one.len());
        let mut g = match self.lifted.get(i).and_then(|x| x.clone()) {
            Some(pt) => pt,
            None => self
                .lift_point(i, rng)
                .ok_or_else(|| Error::SamplerStuck("a level-one point could not be lifted".into()))?,
        };
        let p = ring.p();
        for level in &self.basis {
            for s in level {
                let c = rng.gen_range(0..p);
                for _ in 0..c {
                    g = point_mul(ring, &g, s);
                }
            }
        }
        Ok(g)
    }

    /// Every element, by filtration: lifted level-one points times all
    /// products of basis powers.
    pub fn elements(&self, cap: u64) -> Result<Vec<Point>> {
        let total = self.order();
        if total > BigUint::from(cap) {
            return Err(Error::InfeasibleEnumeration(format!("order {total} exceeds cap {cap}")));
        }
        let ring = &self.system.ring;
        let p = ring.p();
        let mut kernel = vec![Point { x: Mat::identity(ring, self.system.n), nu: ring.one() }];
        for s in self.basis.iter().flatten() {
            let mut next = Vec::with_capacity(kernel.len() * p as usize);
            for k in &kernel {
                let mut cur = k.clone();
                for _ in 0..p {
                    next.push(cur.clone());
                    cur = point_mul(ring, &cur, s);
                }
            }
            kernel = next;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut out = Vec::new();
        for i in 0..self.level_one.len() {
            let g = match self.lifted.get(i).and_then(|x| x.clone()) {
                Some(pt) => pt,
                None => self
                    .lift_point(i, &mut rng)
                    .ok_or_else(|| Error::SamplerStuck("a level-one point could not be lifted".into()))?,
            };
            out.extend(kernel.iter().map(|k| point_mul(ring, &g, k)));
        }
        Ok(out)
    }
}

fn retry<T>(n: usize, mut f: impl FnMut() -> Option<T>) -> Option<T> {
    (0..n.max(1)).find_map(|_| f())
}

/// Exact order of a subgroup at its ring's precision.
pub fn subgroup_order(spec: &SubgroupSpec, opts: &OrderOptions) -> Result<BigUint> {
    Ok(SubgroupModel::build(spec, opts)?.order())
}

/// Order by summing complete fibers over every point; exponential, for small cases.
pub fn subgroup_order_by_summation(spec: &SubgroupSpec, cap: u64) -> Result<BigUint> {
    let sys = System::from_spec(spec)?;
    Ok(BigUint::from(sys.enumerate_all(cap)?.len()))
}

/// `[big : small]`, requiring exact division.
pub fn index(big: &SubgroupSpec, small: &SubgroupSpec, opts: &OrderOptions) -> Result<BigUint> {
    let a = subgroup_order(big, opts)?;
    let b = subgroup_order(small, opts)?;
    if b == BigUint::from(0u32) || &a % &b != BigUint::from(0u32) {
        return Err(Error::NotDivisible(format!("|{}| = {a} is not a multiple of |{}| = {b}", big.label, small.label)));
    }
    Ok(a / b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::{u1_spec, SubgroupSpec};
    use crate::groups::GroupKind;
    use crate::ring::RingSpec;

    #[test]
    fn orders_of_small_groups() {
        let o = OrderOptions::default();
        let gl = |p, k| SubgroupSpec::ambient(RingSpec::rational(p, k), GroupKind::Gl, 2);
        assert_eq!(subgroup_order(&gl(2, 2), &o).unwrap(), BigUint::from(96u32));
        assert_eq!(subgroup_order(&gl(3, 2), &o).unwrap(), BigUint::from(3888u32));
        let gsp = SubgroupSpec::ambient(RingSpec::rational(2, 1), GroupKind::Similitude, 4);
        assert_eq!(subgroup_order(&gsp, &o).unwrap(), BigUint::from(720u32));
        let u1 = u1_spec(RingSpec::rational(2, 1), 2, 1).unwrap();
        assert_eq!(subgroup_order(&u1, &o).unwrap(), BigUint::from(48u32));
    }

    #[test]
    fn lie_algebra_dimension_of_gsp4() {
        let gsp = SubgroupSpec::ambient(RingSpec::rational(3, 2), GroupKind::Similitude, 4);
        let m = SubgroupModel::build(&gsp, &OrderOptions::default()).unwrap();
        assert_eq!(m.dims, vec![11]);
        assert_eq!(m.order(), BigUint::from(103_680u32) * BigUint::from(3u32).pow(11));
    }

    #[test]
    fn elements_match_summation() {
        let spec = SubgroupSpec::ambient(RingSpec::rational(2, 3), GroupKind::Gl, 2);
        let m = SubgroupModel::build(&spec, &OrderOptions::default()).unwrap();
        let els = m.elements(1_000_000).unwrap();
        let set: HashSet<Mat> = els.iter().map(|p| p.x.clone()).collect();
        assert_eq!(set.len() as u64, 6 * 16 * 16);
        assert_eq!(subgroup_order_by_summation(&spec, 1_000_000).unwrap(), BigUint::from(set.len()));
    }
}
