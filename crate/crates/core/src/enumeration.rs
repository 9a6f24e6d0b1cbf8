//! Exhaustive enumeration and the counting checks built on it: the
//! exact-order bijection for symplectic level structures, the resolved
//! pattern of `V_{p^n,p^m}`, and the `GL_2` model of the whole pipeline.

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::congruence::{borel_specs, transport, u1_spec, v_nm_pattern, v_nm_spec, SubgroupSpec};
use crate::error::{Error, Result};
use crate::groups::{Cocharacter, GroupElem, GroupKind};
use crate::lift::System;
use crate::matrix::Mat;
use crate::order::{index, subgroup_order, OrderOptions, SubgroupModel};
use crate::report::{run_check, CheckReport};
use crate::ring::{Elem, Ring, RingSpec};

/// Every element of `GL_n(Z/p^k)` (`kind = Gl`) or `GSp_n(Z/p^k)`
/// (`kind = Similitude`), by level-one search and kernel lifting.
pub fn enumerate_group(kind: GroupKind, n: usize, p: u32, k: u32, cap: u64) -> Result<Vec<GroupElem>> {
    let spec = SubgroupSpec::ambient(RingSpec::rational(p, k), kind, n);
    let predicted = subgroup_order(&spec, &OrderOptions { cap, ..OrderOptions::default() })?;
    if predicted > BigUint::from(cap) {
        return Err(Error::InfeasibleEnumeration(format!("order {predicted} exceeds cap {cap}")));
    }
    let sys = System::from_spec(&spec)?;
    Ok(sys
        .enumerate_all(cap)?
        .into_iter()
        .map(|pt| match kind {
            GroupKind::Gl => GroupElem::new(pt.x),
            GroupKind::Similitude => GroupElem::with_multiplier(pt.x, pt.nu),
        })
        .collect())
}

/// Members of `spec` found by testing every matrix over the ring; the
/// brute-force oracle for small cases.
pub fn brute_force_members(spec: &SubgroupSpec, cap: u64) -> Result<Vec<Mat>> {
    let ring = Ring::new(spec.ring)?;
    let elems = ring.elements();
    let q = elems.len() as u64;
    let cells = (spec.n * spec.n) as u32;
    let total = q.checked_pow(cells).filter(|&t| t <= cap).ok_or_else(|| {
        Error::InfeasibleEnumeration(format!("{q}^{cells} candidate matrices exceed cap {cap}"))
    })?;
    Ok((0..total)
        .into_par_iter()
        .filter_map(|mut idx| {
            let m = Mat::from_fn(spec.n, |_, _| {
                let e = elems[(idx % q) as usize];
                idx /= q;
                e
            });
            spec.contains(&ring, &m).then_some(m)
        })
        .collect())
}

/// Number of vectors of exact order `p^m` in `(Z/p^m)^{2g}`.
pub fn exact_order_count(g: usize, p: u32, m: u32) -> BigUint {
    let p = BigUint::from(p);
    p.pow(2 * g as u32 * m) - p.pow(2 * g as u32 * (m - 1))
}

/// Points of exact order `p^m` against `[GSp_2g(Z/p^m) : U_1(p^m)]`, and the
/// last-row map as a bijection from `U_1`-cosets onto those points.
pub fn exact_order_bijection_check(g: usize, p: u32, m: u32, opts: &OrderOptions) -> CheckReport {
    run_check("exact-order-bijection", opts.seed, |b| {
        b.param("g", g).param("p", p).param("m", m);
        if m == 0 {
            return Err(Error::BadLevel("m must be at least 1".into()));
        }
        let ring = Ring::new(RingSpec::rational(p, m))?;
        let n = 2 * g;
        let u1 = u1_spec(*ring.spec(), g, m)?;
        let group = enumerate_group(GroupKind::Similitude, n, p, m, opts.cap)?;
        let u1_order = subgroup_order(&u1, opts)?;
        let idx = BigUint::from(group.len()) / &u1_order;
        let vectors = exact_order_count(g, p, m);
        b.param("group_order", group.len()).param("u1_order", u1_order.to_string());
        let mut classes: HashMap<Vec<Elem>, Vec<&GroupElem>> = HashMap::new();
        for h in &group {
            classes.entry(h.mat.row(n - 1).to_vec()).or_default().push(h);
        }
        for row in classes.keys() {
            if !row.iter().any(|&x| ring.is_unit(x)) {
                b.counterexample(format!("last row {row:?} does not have exact order p^{m}"));
            }
        }
        let u1_size = u1_order.to_u64_digits().first().copied().unwrap_or(0) as usize;
        for (row, members) in &classes {
            if members.len() != u1_size {
                b.counterexample(format!("last row {row:?} is hit {} times, |U1| = {u1_size}", members.len()));
            }
            let first_inv = ring.mat_inverse(&members[0].mat)?;
            for h in &members[1..] {
                if !u1.contains(&ring, &ring.mat_mul(&h.mat, &first_inv)) {
                    b.counterexample(format!("two elements with last row {row:?} differ outside U1"));
                    break;
                }
            }
        }
        Ok((
            json!({ "exact_order_vectors": vectors.to_string(), "index": vectors.to_string(), "row_classes": vectors.to_string() }),
            json!({ "exact_order_vectors": vectors.to_string(), "index": idx.to_string(), "row_classes": classes.len().to_string() }),
        ))
    })
}

/// The ring for `V_{p^n,p^m}` models: the pair ring for `split`, otherwise
/// the quadratic field with the given discriminant.
fn unitary_ring(split: bool, p: u32, k: u32, field: Option<i64>) -> Result<RingSpec> {
    let case = if split { crate::appendix::Case::Split } else { crate::appendix::Case::Inert };
    crate::appendix::appendix_ring(case, p, k, field)
}

/// The recursive definition of `V_{p^n,p^m}` against its resolved exponent
/// pattern: double inclusion on sampled members plus equal orders.
/// `weaken = Some((i, j))` drops the resolved condition on entry `(i, j)`
/// (0-based) to test sensitivity.
pub fn remark_pattern_equivalence(
    p: u32,
    m: u32,
    n: u32,
    samples: usize,
    split: bool,
    field: Option<i64>,
    weaken: Option<(usize, usize)>,
    opts: &OrderOptions,
) -> CheckReport {
    run_check("pattern-equivalence", opts.seed, |b| {
        b.param("p", p).param("m", m).param("n", n).param("samples", samples);
        b.param("case", if split { "split" } else { "inert" }).param("field_d", field);
        let spec = unitary_ring(split, p, n, field)?;
        let ring = Ring::new(spec)?;
        let recursive = v_nm_spec(spec, n, m)?;
        let mut resolved = v_nm_pattern(spec, n, m)?;
        if let Some((i, j)) = weaken {
            b.param("weakened_entry", [i + 1, j + 1]);
            resolved.conditions[0].pattern.expo[i][j] = 0;
        }
        let models = [SubgroupModel::build(&recursive, opts)?, SubgroupModel::build(&resolved, opts)?];
        let orders = [models[0].order(), models[1].order()];
        b.param("order_recursive", orders[0].to_string()).param("order_resolved", orders[1].to_string());
        let specs = [&recursive, &resolved];
        let mut violations = [0u64, 0u64];
        for side in 0..2 {
            let other = specs[1 - side];
            let found: Vec<String> = (0..samples)
                .into_par_iter()
                .map(|i| -> Result<Option<String>> {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ ((side as u64) << 40) ^ i as u64);
                    let pt = models[side].sample(&mut rng)?;
                    Ok((!other.contains_with_multiplier(&ring, &pt.x, pt.nu))
                        .then(|| format!("a member of {} is not in {}: {:?}", specs[side].label, other.label, pt.x.display(&ring))))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            violations[side] = found.len() as u64;
            for f in found {
                b.counterexample(f);
            }
        }
        Ok((
            json!({ "recursive_in_resolved_violations": 0, "resolved_in_recursive_violations": 0, "orders_equal": true }),
            json!({
                "recursive_in_resolved_violations": violations[0],
                "resolved_in_recursive_violations": violations[1],
                "orders_equal": orders[0] == orders[1],
            }),
        ))
    })
}

/// The `GL_2` pipeline with cocharacter `(1, 0)`: lifting-based orders
/// against brute force for the ambient group, the mirabolic, its transport,
/// their intersection, a conjugate and the Borel, plus index
/// multiplicativity along the tower.
pub fn oracle_g1(p: u32, k: u32, opts: &OrderOptions) -> CheckReport {
    run_check("oracle-gl2", opts.seed, |b| {
        b.param("p", p).param("k", k);
        let spec = RingSpec::rational(p, k);
        let ring = Ring::new(spec)?;
        let ambient = SubgroupSpec::ambient(spec, GroupKind::Gl, 2);
        let mirabolic = ambient
            .clone()
            .with_pattern(crate::congruence::last_row_pattern(2, k))?
            .labelled("P1");
        let moved = transport(&mirabolic, &Cocharacter::eta_gl2(), 1)?;
        let deep = mirabolic.intersect(&moved)?;
        let c = Mat::from_ints(&ring, &[&[1, 1], &[0, 1]]);
        let conj = mirabolic.conjugate(&ring, &c)?;
        let (borel, _) = borel_specs(spec, GroupKind::Gl, 2)?;
        let specs = [&ambient, &mirabolic, &moved, &deep, &conj, &borel];
        let mut expected = Vec::new();
        let mut computed = Vec::new();
        for s in specs {
            let brute = brute_force_members(s, opts.cap)?.len();
            let lifted = subgroup_order(s, opts)?;
            expected.push(json!({ "spec": s.label, "order": brute.to_string() }));
            computed.push(json!({ "spec": s.label, "order": lifted.to_string() }));
        }
        let whole = index(&ambient, &deep, opts)?;
        let steps = index(&ambient, &mirabolic, opts)? * index(&mirabolic, &deep, opts)?;
        if whole != steps {
            b.counterexample(format!("[G : D] = {whole} but [G : P][P : D] = {steps}"));
        }
        Ok((json!(expected), json!(computed)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_group_enumerations() {
        let cap = 1_000_000;
        assert_eq!(enumerate_group(GroupKind::Similitude, 4, 2, 1, cap).unwrap().len(), 720);
        assert_eq!(enumerate_group(GroupKind::Gl, 2, 3, 1, cap).unwrap().len(), 48);
        assert_eq!(enumerate_group(GroupKind::Gl, 2, 2, 2, cap).unwrap().len(), 96);
        assert!(matches!(
            enumerate_group(GroupKind::Similitude, 4, 3, 2, 1000),
            Err(Error::InfeasibleEnumeration(_))
        ));
    }

    #[test]
    fn exact_order_counts() {
        assert_eq!(exact_order_count(2, 2, 1), BigUint::from(15u32));
        assert_eq!(exact_order_count(1, 3, 1), BigUint::from(8u32));
        assert_eq!(exact_order_count(1, 2, 2), BigUint::from(12u32));
    }

    #[test]
    fn bijection_small() {
        let r = exact_order_bijection_check(1, 3, 1, &OrderOptions::default());
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn brute_force_gl2_mod_4() {
        let s = SubgroupSpec::ambient(RingSpec::rational(2, 2), GroupKind::Gl, 2);
        assert_eq!(brute_force_members(&s, 1 << 20).unwrap().len(), 96);
        assert!(brute_force_members(&s, 10).is_err());
    }

    #[test]
    fn oracle_pipeline_agrees() {
        for (p, k) in [(2, 1), (2, 2), (3, 1)] {
            let r = oracle_g1(p, k, &OrderOptions::default());
            assert!(r.pass, "{r:?}");
        }
    }
}
