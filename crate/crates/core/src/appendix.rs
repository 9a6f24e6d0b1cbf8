//! The local computations at `p` behind the Cartesian-square argument:
//! coset transversals `sigma_v` and `sigma'_w`, the closed-immersion lemma and
//! the equality of degrees, for split and inert primes.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::congruence::{u_for, v_nm_next_spec, v_nm_spec, v_prime_spec, DiagTarget, Extra, SubgroupSpec};
use crate::error::{Error, Result};
use crate::groups::{similitude_multiplier, split_iso_inv, GroupElem};
use crate::lift::{Affine, Output, Point, System};
use crate::matrix::Mat;
use crate::order::{subgroup_order, OrderOptions};
use crate::report::{run_check, CheckReport, ReportBuilder};
use crate::ring::{Elem, Ring, RingKind, RingSpec};

/// How `p` decomposes in the imaginary quadratic field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Split,
    Inert,
}

impl std::str::FromStr for Case {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Case::Split),
            "inert" => Ok(Case::Inert),
            other => Err(Error::InvalidRing(format!("unknown case {other:?}"))),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Case::Split => "split",
            Case::Inert => "inert",
        })
    }
}

/// The ring model of `O_F/p^K` for a case. Without a field label the split
/// model is the bare pair ring and the inert model uses the first of
/// `Q(i)`, `Q(sqrt -3)`, `Q(sqrt -7)` in which `p` is inert.
pub fn appendix_ring(case: Case, p: u32, k: u32, field: Option<i64>) -> Result<RingSpec> {
    match (case, field) {
        (Case::Split, None) => {
            let s = RingSpec::split(p, k);
            s.validate()?;
            Ok(s)
        }
        (Case::Split, Some(d)) => {
            let s = RingSpec::for_field(p, k, d)?;
            if s.kind != RingKind::Split {
                return Err(Error::InvalidRing(format!("{p} is inert in Q(sqrt({d}))")));
            }
            Ok(s)
        }
        (Case::Inert, Some(d)) => {
            let s = RingSpec::for_field(p, k, d)?;
            if s.kind == RingKind::Split {
                return Err(Error::InvalidRing(format!("{p} splits in Q(sqrt({d}))")));
            }
            Ok(s)
        }
        (Case::Inert, None) => [-1, -3, -7]
            .into_iter()
            .filter_map(|d| RingSpec::for_field(p, k, d).ok())
            .find(|s| s.kind != RingKind::Split)
            .ok_or_else(|| Error::InvalidRing(format!("{p} is not inert in any default field"))),
    }
}

/// Parameters of the appendix at one prime.
#[derive(Clone, Debug)]
pub struct Appendix {
    pub case: Case,
    pub ring: Ring,
    pub m: u32,
    pub n: u32,
    pub u: Mat,
    pub u_inv: Mat,
}

impl Appendix {
    /// Precision `K = n`.
    pub fn new(case: Case, p: u32, m: u32, n: u32, field: Option<i64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::BadLevel("m must be at least 1".into()));
        }
        let ring = Ring::new(appendix_ring(case, p, n, field)?)?;
        let u = u_for(&ring)?.mat;
        let u_inv = ring.mat_inverse(&u)?;
        Ok(Appendix { case, ring, m, n, u, u_inv })
    }

    pub fn spec(&self) -> RingSpec {
        *self.ring.spec()
    }

    pub fn v(&self) -> Result<SubgroupSpec> {
        v_nm_spec(self.spec(), self.n, self.m)
    }

    pub fn v_prime(&self) -> Result<SubgroupSpec> {
        v_prime_spec(self.spec(), self.n, self.m)
    }

    pub fn v_next(&self) -> Result<SubgroupSpec> {
        v_nm_next_spec(self.spec(), self.n, self.m)
    }

    /// `u S u^-1 & H`.
    pub fn h_side(&self, s: &SubgroupSpec) -> Result<SubgroupSpec> {
        Ok(s.conjugate(&self.ring, &self.u)?.in_h())
    }

    fn pm(&self, e: u32) -> Elem {
        self.ring.from_int((self.ring.p() as i64).pow(e))
    }

    fn conj_by_u(&self, g: &Mat) -> Mat {
        self.ring.mat_mul(&self.ring.mat_mul(&self.u, g), &self.u_inv)
    }

    fn require_depth(&self) -> Result<()> {
        if self.n < 3 * self.m + 3 {
            return Err(Error::PrecisionTooLow(format!("transversals need n >= 3m + 3, got n = {}", self.n)));
        }
        Ok(())
    }
}

/// A claimed system of left coset representatives of `small` in `big`.
#[derive(Clone, Debug)]
pub struct Transversal {
    pub big: SubgroupSpec,
    pub small: SubgroupSpec,
    pub reps: Vec<GroupElem>,
    pub params: String,
}

/// All tuples with `0 <= t_i < radices[i]`, first coordinate slowest.
pub fn mixed_radix(radices: &[u64]) -> Vec<Vec<u64>> {
    let total: u64 = radices.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut v = vec![0; radices.len()];
            for (slot, &r) in v.iter_mut().zip(radices).rev() {
                *slot = idx % r;
                idx /= r;
            }
            v
        })
        .collect()
}

fn unitriangular(ring: &Ring, entries: [(usize, usize, Elem); 6]) -> Mat {
    let mut m = Mat::identity(ring, 4);
    for (i, j, v) in entries {
        m.set(i, j, v);
    }
    m
}

/// The transversal `sigma_v` of `V'` in `V_{p^n,p^m}`.
pub fn transversal_sigma(ap: &Appendix) -> Result<Transversal> {
    ap.require_depth()?;
    let ring = &ap.ring;
    let p = ring.p() as u64;
    let m = ap.m;
    let (q1, q2, q3) = (ap.pm(m), ap.pm(2 * m), ap.pm(3 * m));
    let reps = match ap.case {
        Case::Split => {
            let base = Ring::new(ap.spec().base())?;
            let bint = |x: u64| base.from_int(x as i64);
            let (b1, b2, b3) = (bint(p.pow(m)), bint(p.pow(2 * m)), bint(p.pow(3 * m)));
            mixed_radix(&[p * p * p, p * p, p * p, p, p, p])
                .into_iter()
                .map(|v| {
                    let [r2, r1, r4, k1, r3, k2] = [v[0], v[1], v[2], v[3], v[4], v[5]];
                    let mm = unitriangular(
                        &base,
                        [
                            (0, 1, base.mul(b1, bint(k1))),
                            (0, 2, base.mul(b2, bint(r1))),
                            (0, 3, base.mul(b3, bint(r2))),
                            (1, 2, base.mul(b1, bint(r3))),
                            (1, 3, base.mul(b2, bint(r4))),
                            (2, 3, base.mul(b1, bint(k2))),
                        ],
                    );
                    split_iso_inv(ring, &mm, base.one())
                })
                .collect::<Result<Vec<_>>>()?
        }
        Case::Inert => mixed_radix(&[p * p * p, p * p, p * p, p, p, p])
            .into_iter()
            .map(|v| {
                let (k1, r1, r2, r3, r4) = inert_labels(ring, &v);
                let mat = unitriangular(
                    ring,
                    [
                        (0, 1, ring.mul(q1, k1)),
                        (0, 2, ring.mul(q2, r1)),
                        (0, 3, ring.mul(q3, r2)),
                        (1, 2, ring.mul(q1, r3)),
                        (1, 3, ring.mul(q2, r4)),
                        (2, 3, ring.neg(ring.mul(q1, ring.conj(k1)))),
                    ],
                );
                let nu = similitude_multiplier(ring, &mat).ok();
                GroupElem { mat, multiplier: nu }
            })
            .collect(),
    };
    let params = match ap.case {
        Case::Split => "(r2, r1, r4, k1, r3, k2) in Z/p^3 x (Z/p^2)^2 x (Z/p)^3",
        Case::Inert => "(r2~, r1, k1, r3) in Z/p^3 x O/p^2 x O/p x Z/p; r4 = conj(r1) - conj(k1) r3, r2 = r2~ + k1 r4",
    };
    Ok(Transversal { big: ap.v()?, small: ap.v_prime()?, reps, params: params.into() })
}

/// Fibers solved per `sigma'_w` before a parameter vector is declared unsolvable.
pub const LIFT_BUDGET: u64 = 20_000;

/// Which family of `sigma'_w` to materialize in the inert case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertFamily {
    /// Free parameters `(s3, r3, t, r2, r4)` with the remaining entries
    /// solved from the six listed relations.
    Literal,
    /// `sigma'_v` in the coset `sigma_v V'`, labelled like `sigma_v`.
    CosetLabelled,
}

/// The labels `(k1, r1, r2, r3)` of the inert `sigma_v` for a digit vector
/// over `Z/p^3 x O/p^2 x O/p x Z/p`.
fn inert_labels(ring: &Ring, v: &[u64]) -> (Elem, Elem, Elem, Elem, Elem) {
    let r2t = ring.from_int(v[0] as i64);
    let r1 = ring.from_coords(v[1] as i64, v[2] as i64);
    let k1 = ring.from_coords(v[3] as i64, v[4] as i64);
    let r3 = ring.from_int(v[5] as i64);
    let r4 = ring.sub(ring.conj(r1), ring.mul(ring.conj(k1), r3));
    let r2 = ring.add(r2t, ring.mul(k1, r4));
    (k1, r1, r2, r3, r4)
}

/// The pinned system whose solutions are the `sigma'_w`, and the indices of
/// the pins in parameter order.
fn sigma_prime_system(ap: &Appendix, family: InertFamily) -> Result<(System, Vec<usize>)> {
    let ring = &ap.ring;
    let k = ring.k();
    let m = ap.m;
    let mut sys = System::from_spec(&ap.v()?)?;
    sys.add_rational(Some(&ap.u), Some(&ap.u_inv));
    let zero = ring.zero();
    let one = ring.one();
    let coord = match ap.case {
        Case::Split => Output::First,
        Case::Inert => Output::Full,
    };
    for &(i, j) in &[(1, 0), (2, 0), (3, 0), (3, 1), (3, 2)] {
        sys.pin_entry(i, j, zero, coord, k);
    }
    sys.pin_entry(3, 3, one, coord, k);
    let mut pins = Vec::new();
    let mut pin_all = |sys: &mut System, list: &[(usize, usize, u32)]| {
        for &(i, j, e) in list {
            pins.push(sys.pin_entry(i, j, zero, coord, e));
        }
    };
    match (ap.case, family) {
        (Case::Split, _) => {
            sys.pin_entry(2, 2, one, coord, k);
            // The similitude factor of sigma' is its (1,1) entry.
            sys.add_affine(
                Affine { terms: vec![(0, one)], nu_coeff: ring.neg(one), constant: zero, output: Output::First },
                k,
            );
            sys.pin_entry(0, 0, one, coord, m + 1);
            sys.pin_entry(1, 1, one, coord, m + 1);
            pin_all(
                &mut sys,
                &[(0, 3, 3 * m + 3), (0, 2, 2 * m + 2), (1, 3, 2 * m + 2), (0, 1, m + 1), (1, 2, m + 1), (2, 3, m + 1), (2, 1, m + 1)],
            );
        }
        (Case::Inert, InertFamily::Literal) => {
            for &(i, j) in &[(0, 0), (1, 1), (2, 2), (0, 3), (1, 2), (2, 1)] {
                sys.add_affine(
                    Affine { terms: vec![(i * 4 + j, one)], nu_coeff: zero, constant: zero, output: Output::Irrational },
                    k,
                );
            }
            pin_all(&mut sys, &[(2, 2, m + 1), (1, 2, m + 1), (2, 1, m + 1), (0, 3, 3 * m + 3), (1, 3, 2 * m + 2)]);
        }
        (Case::Inert, InertFamily::CosetLabelled) => {}
    }
    Ok((sys, pins))
}

/// Pin targets per parameter vector, in the order of [`sigma_prime_system`].
fn sigma_prime_targets(ap: &Appendix, family: InertFamily) -> Vec<Vec<Elem>> {
    let ring = &ap.ring;
    let p = ring.p() as u64;
    let m = ap.m;
    let int = |x: u64| ring.from_int(x as i64);
    let (q1, q2, q3) = (ap.pm(m), ap.pm(2 * m), ap.pm(3 * m));
    match (ap.case, family) {
        (Case::Split, _) => mixed_radix(&[p * p * p, p * p, p * p, p, p, p])
            .into_iter()
            .map(|v| {
                let [r2, r1, r4, k1, r3, k2] = [v[0], v[1], v[2], v[3], v[4], v[5]];
                vec![
                    ring.mul(q3, int(r2)),
                    ring.mul(q2, int(r1)),
                    ring.mul(q2, int(r4)),
                    ring.mul(q1, int(k1)),
                    ring.mul(q1, int(r3)),
                    ring.mul(q1, int(k2)),
                    ring.mul(q1, int((k1 + k2) % p)),
                ]
            })
            .collect(),
        (Case::Inert, InertFamily::Literal) => mixed_radix(&[p, p, p, p * p * p, p * p, p * p])
            .into_iter()
            .map(|v| {
                let [s3, r3, t, r2] = [v[0], v[1], v[2], v[3]];
                let r4 = ring.from_coords(v[4] as i64, v[5] as i64);
                vec![
                    ring.add(ring.one(), ring.mul(q1, int(s3))),
                    ring.mul(q1, int(r3)),
                    ring.mul(q1, int(t)),
                    ring.mul(q3, int(r2)),
                    ring.mul(q2, r4),
                ]
            })
            .collect(),
        (Case::Inert, InertFamily::CosetLabelled) => vec![Vec::new(); (p as usize).pow(10)],
    }
}

/// `sigma'_w` for every parameter vector, `None` where the pinned system has
/// no solution within the search budget.
fn sigma_prime_points(ap: &Appendix, family: InertFamily, budget: u64) -> Result<Vec<Option<Point>>> {
    let ring = &ap.ring;
    let (sys, pins) = sigma_prime_system(ap, family)?;
    let id = Mat::identity(ring, 4);
    let branch = (ring.p() as u64).pow(4);
    // The coset-labelled family asks for sigma_v^-1 sigma' in V'.
    let anchors = match (ap.case, family) {
        (Case::Inert, InertFamily::CosetLabelled) => Some((
            transversal_sigma(ap)?
                .reps
                .iter()
                .map(|r| Ok((ring.mat_inverse(&r.mat)?, ring.invert(r.multiplier.unwrap_or(ring.one()))?)))
                .collect::<Result<Vec<_>>>()?,
            ap.v_prime()?,
        )),
        _ => None,
    };
    sigma_prime_targets(ap, family)
        .par_iter()
        .enumerate()
        .map(|(idx, t)| {
            use rand::SeedableRng;
            let mut s = sys.clone();
            for (&pin, &v) in pins.iter().zip(t) {
                s.set_pin_target(pin, v);
            }
            if let Some((inv, vp)) = &anchors {
                let (l, nu) = &inv[idx];
                s.add_spec_conditions_after(vp, Some((l, *nu)))?;
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(idx as u64);
            let mut left = budget;
            Ok(s.lift_search(&id, ring.one(), 1, branch, &mut left, &mut rng))
        })
        .collect()
}

/// The transversal `{u sigma'_w^-1 u^-1}` (split) or `{u sigma'_w u^-1}`
/// (inert) of `u V' u^-1 & H` in `u V u^-1 & H`. Each `sigma'_w` is found by
/// lifting its pinned entries through the constraint solver; parameter
/// vectors without a solution are dropped and counted in the second
/// component.
pub fn transversal_sigma_prime_family(ap: &Appendix, family: InertFamily, budget: u64) -> Result<(Transversal, usize)> {
    ap.require_depth()?;
    let ring = &ap.ring;
    let points = sigma_prime_points(ap, family, budget)?;
    let missing = points.iter().filter(|p| p.is_none()).count();
    let reps = points
        .into_iter()
        .flatten()
        .map(|pt| {
            let (mat, nu) = match ap.case {
                Case::Split => (ring.mat_inverse(&pt.x)?, ring.invert(pt.nu)?),
                Case::Inert => (pt.x, pt.nu),
            };
            Ok(GroupElem::with_multiplier(ap.conj_by_u(&mat), nu))
        })
        .collect::<Result<Vec<_>>>()?;
    let params = match (ap.case, family) {
        (Case::Split, _) => "W = (r2, r1, r4, k1, r3, k2, 0, 0, k1 + k2); remaining digits solved",
        (Case::Inert, InertFamily::Literal) => {
            "(s3, r3, t, r2, r4) in (Z/p)^3 x Z/p^3 x O/p^2; s1, s2, k1, k2, r1 solved"
        }
        (Case::Inert, InertFamily::CosetLabelled) => {
            "sigma'_v in sigma_v V' & u^-1 H u, labelled by (r2~, r1, k1, r3) like sigma_v"
        }
    };
    let t = Transversal {
        big: ap.h_side(&ap.v()?)?,
        small: ap.h_side(&ap.v_prime()?)?,
        reps,
        params: params.into(),
    };
    Ok((t, missing))
}

/// The default `sigma'_w` transversal: the published family in the split
/// case and the coset-labelled family in the inert case. Fails if any
/// parameter vector has no solution.
pub fn transversal_sigma_prime(ap: &Appendix, budget: u64) -> Result<Transversal> {
    let (t, missing) = transversal_sigma_prime_family(ap, InertFamily::CosetLabelled, budget)?;
    if missing > 0 {
        return Err(Error::CompletionFailure(format!("{missing} parameter vectors have no sigma'")));
    }
    Ok(t)
}

enum Probe {
    Entry { frame: usize, s: usize, t: usize, target: Elem, e: u32 },
    Rational { frame: usize, s: usize, t: usize },
    DiagEq { frame: usize, i: usize, k: usize, a: u32 },
    DiagNu { frame: usize, i: usize, a: u32 },
    Unit { frame: usize, i: usize },
    NuOne { a: u32 },
}

/// Decides `r_i^-1 r_j in small` entry by entry, stopping at the first
/// violated congruence.
pub struct CosetTester<'a> {
    ring: &'a Ring,
    /// Per conjugator `c`: `((r_i c)^-1, r_i c)` for every rep.
    frames: Vec<(Vec<Mat>, Vec<Mat>)>,
    nu_inv: Vec<Elem>,
    nu: Vec<Elem>,
    probes: Vec<Probe>,
}

impl<'a> CosetTester<'a> {
    pub fn new(ring: &'a Ring, small: &SubgroupSpec, reps: &[GroupElem]) -> Result<Self> {
        let n = small.n;
        let mut conjugators: Vec<Option<Mat>> = Vec::new();
        let mut frame_of = |c: Option<&Mat>| -> usize {
            let key = c.cloned();
            if let Some(i) = conjugators.iter().position(|x| *x == key) {
                i
            } else {
                conjugators.push(key);
                conjugators.len() - 1
            }
        };
        let mut entries = Vec::new();
        let mut rest = Vec::new();
        for cond in &small.conditions {
            let f = frame_of(cond.conjugator.as_ref().map(|c| &c.mat));
            let pat = &cond.pattern;
            for s in 0..n {
                for t in 0..n {
                    let e = pat.e(s, t);
                    if e > 0 {
                        let target = if s == t { ring.one() } else { ring.zero() };
                        entries.push(Probe::Entry { frame: f, s, t, target, e });
                    }
                }
                match pat.diag[s] {
                    DiagTarget::Free => {}
                    DiagTarget::Unit => rest.push(Probe::Unit { frame: f, i: s }),
                    DiagTarget::EqualsEntry { k, a } => rest.push(Probe::DiagEq { frame: f, i: s, k, a }),
                    DiagTarget::EqualsMultiplier { a } => rest.push(Probe::DiagNu { frame: f, i: s, a }),
                }
            }
        }
        for extra in &small.extras {
            match extra {
                Extra::Rational { conjugator } => {
                    let f = frame_of(conjugator.as_ref().map(|c| &c.mat));
                    for s in 0..n {
                        for t in 0..n {
                            rest.push(Probe::Rational { frame: f, s, t });
                        }
                    }
                }
                Extra::MultiplierOneMod { a } => rest.push(Probe::NuOne { a: *a }),
            }
        }
        entries.sort_by_key(|p| match p {
            Probe::Entry { e, .. } => std::cmp::Reverse(*e),
            _ => std::cmp::Reverse(0),
        });
        entries.extend(rest);
        let frames = conjugators
            .iter()
            .map(|c| {
                let right: Vec<Mat> = reps
                    .iter()
                    .map(|r| match c {
                        None => r.mat.clone(),
                        Some(c) => ring.mat_mul(&r.mat, c),
                    })
                    .collect();
                let left = right.iter().map(|m| ring.mat_inverse(m)).collect::<Result<Vec<_>>>()?;
                Ok((left, right))
            })
            .collect::<Result<Vec<_>>>()?;
        let nu: Vec<Elem> = reps
            .iter()
            .map(|r| r.multiplier.or_else(|| similitude_multiplier(ring, &r.mat).ok()).unwrap_or(ring.one()))
            .collect();
        let nu_inv = nu.iter().map(|&v| ring.invert(v)).collect::<Result<Vec<_>>>()?;
        Ok(CosetTester { ring, frames, nu, nu_inv, probes: entries })
    }

    #[inline]
    fn entry(&self, frame: usize, s: usize, t: usize, i: usize, j: usize) -> Elem {
        let (left, right) = &self.frames[frame];
        let a = left[i].row(s);
        let b = &right[j];
        let ring = self.ring;
        let mut acc = ring.zero();
        for (k, &x) in a.iter().enumerate() {
            if x != Elem(0, 0) {
                acc = ring.add(acc, ring.mul(x, b.get(k, t)));
            }
        }
        acc
    }

    /// Whether `r_i^-1 r_j` lies in the small subgroup.
    pub fn same_coset(&self, i: usize, j: usize) -> bool {
        let ring = self.ring;
        let nu = || ring.mul(self.nu[j], self.nu_inv[i]);
        self.probes.iter().all(|probe| match *probe {
            Probe::Entry { frame, s, t, target, e } => ring.divisible(ring.sub(self.entry(frame, s, t, i, j), target), e),
            Probe::Rational { frame, s, t } => ring.is_rational_elem(self.entry(frame, s, t, i, j)),
            Probe::DiagEq { frame, i: a, k, a: e } => {
                ring.divisible(ring.sub(self.entry(frame, a, a, i, j), self.entry(frame, k, k, i, j)), e)
            }
            Probe::DiagNu { frame, i: a, a: e } => ring.divisible(ring.sub(self.entry(frame, a, a, i, j), nu()), e),
            Probe::Unit { frame, i: a } => ring.is_unit(self.entry(frame, a, a, i, j)),
            Probe::NuOne { a } => ring.divisible(ring.sub(nu(), ring.one()), a),
        })
    }
}

/// Membership, pairwise distinctness of cosets and cardinality against the index.
pub fn verify_transversal(name: &str, t: &Transversal, opts: &OrderOptions) -> CheckReport {
    run_check(name, opts.seed, |b| {
        let ring = Ring::new(t.big.ring)?;
        b.param("big", &t.big.label).param("small", &t.small.label).param("parametrization", &t.params);
        b.param("reps", t.reps.len());
        let mut non_members = 0u64;
        for (i, r) in t.reps.iter().enumerate() {
            if !t.big.contains_elem(&ring, r) && !t.big.contains(&ring, &r.mat) {
                non_members += 1;
                b.counterexample(format!("rep #{i} is not in {}", t.big.label));
            }
        }
        let tester = CosetTester::new(&ring, &t.small, &t.reps)?;
        let coincident = AtomicU64::new(0);
        let examples = Mutex::new(Vec::new());
        let n = t.reps.len();
        (0..n).into_par_iter().for_each(|i| {
            for j in i + 1..n {
                if tester.same_coset(i, j) {
                    coincident.fetch_add(1, Ordering::Relaxed);
                    let mut ex = examples.lock().expect("example list poisoned");
                    if ex.len() < 20 {
                        ex.push(format!("reps #{i} and #{j} lie in the same coset"));
                    }
                }
            }
        });
        for e in examples.into_inner().expect("example list poisoned") {
            b.counterexample(e);
        }
        let coincident = coincident.into_inner();
        let idx = crate::order::index(&t.big, &t.small, opts)?;
        Ok((
            json!({ "reps": idx.to_string(), "non_members": 0, "coincident_pairs": 0 }),
            json!({ "reps": n.to_string(), "non_members": non_members, "coincident_pairs": coincident }),
        ))
    })
}

/// Every `g` modulo `p^{m+1}` of the `V'` shape with `u g u^-1` rational
/// satisfies `g = diag(x, 1, x, 1)` with multiplier `x`.
pub fn closed_immersion_check(case: Case, p: u32, m: u32, field: Option<i64>, cap: u64, seed: u64) -> CheckReport {
    run_check("closed-immersion", seed, |b| {
        b.param("case", case).param("p", p).param("m", m).param("field_d", field);
        let ap = Appendix::new(case, p, m, 3 * m + 3, field)?;
        let low = ap.ring.with_precision(m + 1)?;
        let vp = ap.v_prime()?.truncate(m + 1);
        let mut sys = System::from_spec(&vp)?;
        let full = &ap.ring;
        let u = full.mat_reduce_to(&ap.u, &low);
        let u_inv = full.mat_reduce_to(&ap.u_inv, &low);
        sys.add_rational(Some(&u), Some(&u_inv));
        for &(i, j) in &[(1, 0), (2, 0)] {
            sys.pin_entry(i, j, low.zero(), Output::Full, m + 1);
        }
        let points = sys.enumerate_all(cap)?;
        b.param("enumerated", points.len());
        for pt in &points {
            let g = &pt.x;
            let mut ok = true;
            for i in 0..4 {
                for j in 0..4 {
                    if i != j && g.get(i, j) != low.zero() {
                        ok = false;
                    }
                }
            }
            ok &= g.get(1, 1) == low.one() && g.get(3, 3) == low.one();
            ok &= g.get(0, 0) == pt.nu && g.get(2, 2) == pt.nu;
            if !ok {
                b.counterexample(format!("{:?} with multiplier {}", g.display(&low), low.display(pt.nu)));
            }
        }
        let bad = b.counterexample_count();
        Ok((json!({ "counterexamples": 0 }), json!({ "counterexamples": bad })))
    })
}

/// `[V : V'] = [u V u^-1 & H : u V' u^-1 & H] = p^10`, with
/// `u V' u^-1 & H = u V_{p^n,p^{m+1}} u^-1 & H` at full precision.
pub fn cartesian_degree_check(case: Case, p: u32, m: u32, n: u32, field: Option<i64>, opts: &OrderOptions) -> CheckReport {
    run_check("degree-equality", opts.seed, |b| {
        b.param("case", case).param("p", p).param("m", m).param("n", n).param("field_d", field);
        let ap = Appendix::new(case, p, m, n, field)?;
        let v = subgroup_order(&ap.v()?, opts)?;
        let vp = subgroup_order(&ap.v_prime()?, opts)?;
        let hv = subgroup_order(&ap.h_side(&ap.v()?)?, opts)?;
        let hvp = subgroup_order(&ap.h_side(&ap.v_prime()?)?, opts)?;
        let hvn = subgroup_order(&ap.h_side(&ap.v_next()?)?, opts)?;
        let ratio = |a: &BigUint, c: &BigUint| -> Value {
            if a % c == BigUint::from(0u32) {
                json!((a / c).to_string())
            } else {
                json!(format!("{a}/{c}"))
            }
        };
        let target = BigUint::from(p).pow(10).to_string();
        Ok((
            json!({ "v_index": target, "h_index": target, "h_prime_equals_h_next": true }),
            json!({ "v_index": ratio(&v, &vp), "h_index": ratio(&hv, &hvp), "h_prime_equals_h_next": hvp == hvn }),
        ))
    })
}

/// `[V : V'] = p^10` by order counting.
pub fn index_check(case: Case, p: u32, m: u32, n: u32, field: Option<i64>, opts: &OrderOptions) -> CheckReport {
    run_check("index-p10", opts.seed, |b| {
        b.param("case", case).param("p", p).param("m", m).param("n", n).param("field_d", field);
        let ap = Appendix::new(case, p, m, n, field)?;
        b.param("ring", ap.spec());
        let idx = crate::order::index(&ap.v()?, &ap.v_prime()?, opts)?;
        Ok((json!(BigUint::from(p).pow(10).to_string()), json!(idx.to_string())))
    })
}

/// Reports for one prime: closed immersion, both transversals and the degree equality.
pub fn appendix_reports(case: Case, p: u32, m: u32, field: Option<i64>, opts: &OrderOptions) -> Vec<CheckReport> {
    let n = 3 * m + 3;
    let mut out = vec![closed_immersion_check(case, p, m, field, opts.cap, opts.seed)];
    match Appendix::new(case, p, m, n, field) {
        Ok(ap) => {
            for (name, t) in [
                ("transversal-sigma", transversal_sigma(&ap)),
                ("transversal-sigma-prime", transversal_sigma_prime(&ap, LIFT_BUDGET)),
            ] {
                out.push(match t {
                    Ok(t) => {
                        let mut r = verify_transversal(name, &t, opts);
                        r.params.insert("case".into(), json!(case));
                        r.params.insert("p".into(), json!(p));
                        r.params.insert("m".into(), json!(m));
                        r
                    }
                    Err(e) => ReportBuilder::new(name, opts.seed).abort(&e),
                });
            }
        }
        Err(e) => out.push(ReportBuilder::new("transversal", opts.seed).abort(&e)),
    }
    out.push(cartesian_degree_check(case, p, m, n, field, opts));
    for r in &mut out {
        r.decision_log.push(format!("u = I + e E13 + conj(e) E24 with e = {}", match case {
            Case::Split => "(-1, 0) in the pair ring, i.e. (I - E13, 1)",
            Case::Inert => "the integral generator y",
        }));
    }
    out
}

/// The inert `sigma'_w` family with free parameters `(s3, r3, t, r2, r4)`,
/// verified as a transversal. Parameter vectors without any solution are
/// reported as counterexamples.
pub fn literal_inert_family_check(p: u32, m: u32, field: Option<i64>, opts: &OrderOptions) -> CheckReport {
    let built = Appendix::new(Case::Inert, p, m, 3 * m + 3, field)
        .and_then(|ap| transversal_sigma_prime_family(&ap, InertFamily::Literal, LIFT_BUDGET));
    match built {
        Ok((t, missing)) => {
            let mut r = verify_transversal("inert-literal-family", &t, opts);
            r.params.insert("p".into(), json!(p));
            r.params.insert("m".into(), json!(m));
            r.params.insert("unsolvable_parameter_vectors".into(), json!(missing));
            if missing > 0 {
                r.pass = false;
                r.counterexample_count += missing as u64;
                r.counterexamples.insert(0, format!("{missing} parameter vectors admit no sigma'"));
                r.counterexamples.truncate(crate::report::MAX_COUNTEREXAMPLES);
            }
            r
        }
        Err(e) => ReportBuilder::new("inert-literal-family", opts.seed).abort(&e),
    }
}
