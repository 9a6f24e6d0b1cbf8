//! Divisors on the finite torsion groups `(Z/c)^{2g}`: the characteristic
//! class `D_c`, pullback and pushforward along multiplication, the
//! distribution relation, the degree pairing, and the `F_m`/`N_m` operator
//! arithmetic.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::matrix::{exterior_power, generic_mul, Integers};
use crate::report::{run_check, CheckReport};

/// Largest group a divisor may live on.
pub const MAX_POINTS: u64 = 1 << 24;

/// The group `(Z/c)^{2g}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionGroup {
    pub g: usize,
    pub c: u64,
}

impl TorsionGroup {
    pub fn new(g: usize, c: u64) -> Result<Self> {
        if c == 0 || g == 0 {
            return Err(Error::BadLevel(format!("torsion group needs c >= 1 and g >= 1, got c = {c}, g = {g}")));
        }
        match c.checked_pow(2 * g as u32) {
            Some(n) if n <= MAX_POINTS => Ok(TorsionGroup { g, c }),
            _ => Err(Error::InfeasibleEnumeration(format!("(Z/{c})^{} has more than {MAX_POINTS} points", 2 * g))),
        }
    }

    pub fn rank(&self) -> usize {
        2 * self.g
    }

    pub fn cardinality(&self) -> u64 {
        self.c.pow(self.rank() as u32)
    }

    /// Coordinates of the point with the given index, least significant first.
    pub fn point(&self, mut idx: u64) -> Vec<u64> {
        (0..self.rank())
            .map(|_| {
                let x = idx % self.c;
                idx /= self.c;
                x
            })
            .collect()
    }

    /// Index of a point; coordinates are reduced mod `c`.
    pub fn index(&self, x: &[u64]) -> u64 {
        x.iter().rev().fold(0, |acc, &xi| acc * self.c + xi % self.c)
    }
}

/// An integer-valued function on a torsion group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SparseDivisor", try_from = "SparseDivisor")]
pub struct Divisor {
    pub base: TorsionGroup,
    coeffs: Vec<BigInt>,
}

/// JSON form of a divisor: the nonzero `(point, coefficient)` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseDivisor {
    pub g: usize,
    pub c: u64,
    pub support: Vec<(Vec<u64>, String)>,
}

impl From<Divisor> for SparseDivisor {
    fn from(d: Divisor) -> Self {
        let support = d.support().map(|(i, a)| (d.base.point(i), a.to_string())).collect();
        SparseDivisor { g: d.base.g, c: d.base.c, support }
    }
}

impl TryFrom<SparseDivisor> for Divisor {
    type Error = Error;
    fn try_from(s: SparseDivisor) -> Result<Self> {
        let mut d = Divisor::zero(TorsionGroup::new(s.g, s.c)?);
        for (x, a) in s.support {
            if x.len() != d.base.rank() || x.iter().any(|&xi| xi >= s.c) {
                return Err(Error::BadLevel(format!("point {x:?} is not in (Z/{})^{}", s.c, 2 * s.g)));
            }
            let a: BigInt = a.parse().map_err(|_| Error::BadLevel(format!("bad coefficient {a}")))?;
            let i = d.base.index(&x) as usize;
            d.coeffs[i] += a;
        }
        Ok(d)
    }
}

impl Divisor {
    pub fn zero(base: TorsionGroup) -> Self {
        Divisor { base, coeffs: vec![BigInt::zero(); base.cardinality() as usize] }
    }

    /// The point mass at `x`.
    pub fn delta(base: TorsionGroup, x: &[u64]) -> Self {
        let mut d = Divisor::zero(base);
        d.coeffs[base.index(x) as usize] = BigInt::one();
        d
    }

    /// The constant function 1, the class of the whole group.
    pub fn indicator(base: TorsionGroup) -> Self {
        Divisor { base, coeffs: vec![BigInt::one(); base.cardinality() as usize] }
    }

    pub fn coeff(&self, x: &[u64]) -> &BigInt {
        &self.coeffs[self.base.index(x) as usize]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Nonzero coefficients by point index.
    pub fn support(&self) -> impl Iterator<Item = (u64, &BigInt)> {
        self.coeffs.iter().enumerate().filter(|(_, a)| !a.is_zero()).map(|(i, a)| (i as u64, a))
    }

    pub fn degree(&self) -> BigInt {
        self.coeffs.iter().sum()
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Divisor { base: self.base, coeffs: self.coeffs.iter().map(|a| a * k).collect() }
    }

    pub fn add(&self, other: &Divisor) -> Result<Self> {
        if self.base != other.base {
            return Err(Error::BadLevel(format!("cannot add divisors on {:?} and {:?}", self.base, other.base)));
        }
        Ok(Divisor { base: self.base, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Divisor) -> Result<Self> {
        self.add(&other.scale(&BigInt::from(-1)))
    }
}

/// `D_c = c^{2g} delta_0 - 1` on `(Z/c)^{2g}`.
pub fn d_c(c: u64, g: usize) -> Result<Divisor> {
    let base = TorsionGroup::new(g, c)?;
    let origin = Divisor::delta(base, &vec![0; base.rank()]);
    origin.scale(&BigInt::from(base.cardinality())).sub(&Divisor::indicator(base))
}

/// Pullback along `[a] : (Z/ac)^{2g} -> (Z/c)^{2g}`, where the source
/// `c`-torsion is identified with `(Z/c)^{2g}` by dividing by `a`; so
/// `y` maps to `y mod c`.
pub fn pullback(d: &Divisor, a: u64) -> Result<Divisor> {
    let c = d.base.c;
    let level = a
        .checked_mul(c)
        .filter(|_| a >= 1)
        .ok_or_else(|| Error::BadLevel(format!("cannot pull back from level {c} by {a}")))?;
    let target = TorsionGroup::new(d.base.g, level)?;
    let coeffs = (0..target.cardinality())
        .map(|i| d.coeff(&target.point(i)).clone())
        .collect();
    Ok(Divisor { base: target, coeffs })
}

/// Pushforward along the relabeling `x -> ax`, defined when `gcd(a, c) = 1`.
pub fn pushforward(d: &Divisor, a: u64) -> Result<Divisor> {
    let c = d.base.c;
    if gcd(a % c.max(1), c) != 1 && c != 1 {
        return Err(Error::BadLevel(format!("multiplication by {a} is not a bijection on level {c}")));
    }
    let mut out = Divisor::zero(d.base);
    for (i, coeff) in d.support() {
        let x: Vec<u64> = d.base.point(i).iter().map(|&xi| mul_mod(xi, a, c)).collect();
        out.coeffs[d.base.index(&x) as usize] += coeff;
    }
    Ok(out)
}

/// Pushforward along `[a] : (Z/ac)^{2g} -> (Z/c)^{2g}` for a divisor at level
/// `ac`, the left inverse of [`pullback`] up to `a^{2g}`.
pub fn norm(d: &Divisor, a: u64) -> Result<Divisor> {
    let level = d.base.c;
    if a == 0 || level % a != 0 {
        return Err(Error::BadLevel(format!("{a} does not divide the level {level}")));
    }
    let target = TorsionGroup::new(d.base.g, level / a)?;
    let mut out = Divisor::zero(target);
    for (i, coeff) in d.support() {
        let y = d.base.point(i);
        out.coeffs[target.index(&y) as usize] += coeff;
    }
    Ok(out)
}

/// Extension by zero along the inclusion `(Z/c)^{2g} -> (Z/bc)^{2g}`,
/// `x -> bx`.
pub fn extend_by_zero(d: &Divisor, b: u64) -> Result<Divisor> {
    let c = d.base.c;
    let level = b
        .checked_mul(c)
        .filter(|_| b >= 1)
        .ok_or_else(|| Error::BadLevel(format!("cannot include level {c} by {b}")))?;
    let target = TorsionGroup::new(d.base.g, level)?;
    let mut out = Divisor::zero(target);
    for (i, coeff) in d.support() {
        let x: Vec<u64> = d.base.point(i).iter().map(|&xi| xi * b).collect();
        out.coeffs[target.index(&x) as usize] += coeff;
    }
    Ok(out)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn mul_mod(x: u64, a: u64, c: u64) -> u64 {
    ((x as u128 * a as u128) % c as u128) as u64
}

/// `[c1]^* D_{c2} + c2^{2g} D_{c1} = D_{c1 c2}` on `(Z/c1c2)^{2g}`, in both
/// argument orders.
pub fn distribution_check(c1: u64, c2: u64, g: usize) -> CheckReport {
    run_check("distribution", 0, |b| {
        b.param("c1", c1).param("c2", c2).param("g", g);
        b.decision("no coprimality to 6 is imposed on c1, c2");
        let mut sides = Vec::new();
        for (x, y) in [(c1, c2), (c2, c1)] {
            let pulled = pullback(&d_c(y, g)?, x)?;
            let factor = BigInt::from(y).pow(2 * g as u32);
            let lhs = pulled.add(&extend_by_zero(&d_c(x, g)?, y)?.scale(&factor))?;
            let rhs = d_c(x * y, g)?;
            let diff = lhs.sub(&rhs)?;
            for (i, a) in diff.support().take(5) {
                b.counterexample(format!("order ({x},{y}): sides differ by {a} at {:?}", diff.base.point(i)));
            }
            sides.push(diff.support().count());
        }
        Ok((json!({ "differing_points": [0, 0] }), json!({ "differing_points": sides })))
    })
}

/// The degree pairing `<v, (b, ..., b)> = b deg(v)` on test vectors: point
/// masses, `D_c` and random divisors, and the equivalence of degree zero with
/// orthogonality to the constants.
pub fn duality_pairing_check(c: u64, g: usize, seed: u64) -> CheckReport {
    run_check("duality-pairing", seed, |b| {
        b.param("c", c).param("g", g);
        let base = TorsionGroup::new(g, c)?;
        let mut tests = vec![d_c(c, g)?];
        for i in 0..base.cardinality().min(64) {
            tests.push(Divisor::delta(base, &base.point(i)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..8 {
            let coeffs = (0..base.cardinality()).map(|_| BigInt::from(rng.gen_range(-5i64..=5))).collect();
            tests.push(Divisor { base, coeffs });
        }
        let scalars: Vec<BigInt> = (-2i64..=3).map(BigInt::from).collect();
        let mut mismatches = 0u64;
        let mut kernel_disagreements = 0u64;
        for v in &tests {
            let deg = v.degree();
            let mut orthogonal = true;
            for s in &scalars {
                let pairing: BigInt = v.coeffs.iter().map(|a| a * s).sum();
                if pairing != s * &deg {
                    mismatches += 1;
                    b.counterexample(format!("pairing {pairing} with {s} differs from {s} * {deg}"));
                }
                orthogonal &= pairing.is_zero();
            }
            if orthogonal != deg.is_zero() {
                kernel_disagreements += 1;
                b.counterexample(format!("degree {deg} but orthogonality to constants is {orthogonal}"));
            }
        }
        let d_c_pairs: Vec<String> = scalars.iter().map(|s| (&tests[0].degree() * s).to_string()).collect();
        b.param("test_vectors", tests.len());
        Ok((
            json!({ "mismatches": 0, "kernel_disagreements": 0, "d_c_pairings_zero": true }),
            json!({
                "mismatches": mismatches,
                "kernel_disagreements": kernel_disagreements,
                "d_c_pairings_zero": d_c_pairs.iter().all(|s| s == "0"),
            }),
        ))
    })
}

/// `N_m = prod_{j=1}^{2g} (1 - m^j)`.
pub fn n_m(g: usize, m: u64) -> BigInt {
    (1..=2 * g as u32).map(|j| BigInt::one() - BigInt::from(m).pow(j)).product()
}

/// The `p`-adic valuation, `None` for zero.
pub fn valuation(n: &BigInt, p: u64) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    Some(v)
}

/// Whether `m` generates `(Z/p)^*`; `p` must be prime.
pub fn is_primitive_root(m: u64, p: u64) -> bool {
    if m % p == 0 {
        return false;
    }
    let mut x = 1u64;
    for k in 1..p - 1 {
        x = mul_mod(x, m, p);
        if x == 1 {
            return k == p - 1;
        }
    }
    true
}

/// The sufficient condition for `N_m` to be a `p`-adic unit: `p > 2g + 1`
/// and `m` a primitive root mod `p`.
pub fn remark_condition(p: u64, g: usize, m: u64) -> bool {
    p > 2 * g as u64 + 1 && is_primitive_root(m, p)
}

fn valuation_json(v: Option<u32>) -> serde_json::Value {
    v.map_or(json!("infinite"), |v| json!(v))
}

/// `v_p(N_m)`, passing exactly when `N_m` is a `p`-adic unit.
pub fn n_m_unit_check(p: u64, g: usize, m: u64) -> CheckReport {
    run_check("n-m-unit", 0, |b| {
        b.param("p", p).param("g", g).param("m", m);
        if m == 0 {
            return Err(Error::BadLevel("m must be at least 1".into()));
        }
        let n = n_m(g, m);
        let v = valuation(&n, p);
        let condition = remark_condition(p, g, m);
        b.param("n_m", n.to_string()).param("remark_condition", condition);
        if condition && v != Some(0) {
            b.counterexample(format!("p = {p} > 2g + 1 and {m} generates (Z/{p})^* yet v_p(N_m) = {v:?}"));
        }
        Ok((json!({ "v_p": 0 }), json!({ "v_p": valuation_json(v) })))
    })
}

fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&q| (2..q).take_while(|d| d * d <= q).all(|d| q % d != 0)).collect()
}

/// The sufficient condition against `v_p(N_m)` for every prime `p <= pmax`,
/// `1 <= g <= gmax` and `1 <= m < p`.
pub fn n_m_grid_check(pmax: u64, gmax: usize) -> CheckReport {
    run_check("n-m-grid", 0, |b| {
        b.param("pmax", pmax).param("gmax", gmax);
        let mut cases = 0u64;
        let mut covered = 0u64;
        let mut units = 0u64;
        let mut violations = 0u64;
        for p in primes_up_to(pmax) {
            for g in 1..=gmax {
                for m in 1..p {
                    cases += 1;
                    let unit = valuation(&n_m(g, m), p) == Some(0);
                    units += unit as u64;
                    if remark_condition(p, g, m) {
                        covered += 1;
                        if !unit {
                            violations += 1;
                            b.counterexample(format!("p = {p}, g = {g}, m = {m}: condition holds but N_m is not a unit"));
                        }
                    }
                }
            }
        }
        b.param("cases", cases).param("condition_holds", covered).param("units", units);
        Ok((json!({ "violations": 0 }), json!({ "violations": violations })))
    })
}

type IntMat = Vec<Vec<BigInt>>;

fn scalar_identity(n: usize, s: &BigInt) -> IntMat {
    (0..n).map(|i| (0..n).map(|j| if i == j { s.clone() } else { BigInt::zero() }).collect()).collect()
}

fn minus_scalar(m: &IntMat, s: &BigInt) -> IntMat {
    let mut out = m.clone();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] -= s;
    }
    out
}

/// `F_m = prod_{j=0}^{2g-1} (Tr_m - m^{2g-j})` applied to `Tr_m` on the
/// exterior power of rank `k` of `Z^{2g}`.
pub fn f_m_on_wedge(g: usize, m: u64, k: usize) -> (IntMat, IntMat) {
    let n = 2 * g;
    let scalar = scalar_identity(n, &BigInt::from(m));
    let tr = exterior_power(&Integers, &scalar, k);
    let dim = tr.len();
    let f = (0..n).fold(scalar_identity(dim, &BigInt::one()), |acc, j| {
        let factor = minus_scalar(&tr, &BigInt::from(m).pow((n - j) as u32));
        generic_mul(&Integers, &acc, &factor)
    });
    (tr, f)
}

/// `F_m` kills every degree below `2g`, and acts on the top degree, where
/// `Tr_m` is the identity, as the scalar `N_m`.
pub fn f_m_annihilation_check(g: usize, m: u64) -> CheckReport {
    run_check("f-m-annihilation", 0, |b| {
        b.param("g", g).param("m", m);
        if g == 0 {
            return Err(Error::BadLevel("g must be at least 1".into()));
        }
        let n = 2 * g;
        let mut annihilated = Vec::new();
        for i in 0..n {
            let k = n - i;
            let (tr, f) = f_m_on_wedge(g, m, k);
            let eigen = BigInt::from(m).pow(k as u32);
            if tr != scalar_identity(tr.len(), &eigen) {
                b.counterexample(format!("Tr_m on degree {i} is not the scalar {eigen}"));
            }
            if f.iter().flatten().all(Zero::is_zero) {
                annihilated.push(i);
            } else {
                b.counterexample(format!("F_m does not vanish on degree {i}"));
            }
        }
        let (_, top) = f_m_on_wedge(g, m, 0);
        let expected_scalar = n_m(g, m);
        Ok((
            json!({ "annihilated_degrees": (0..n).collect::<Vec<_>>(), "fixed_line_scalar": expected_scalar.to_string() }),
            json!({ "annihilated_degrees": annihilated, "fixed_line_scalar": top[0][0].to_string() }),
        ))
    })
}

/// `D_c` is fixed by every relabeling `x -> rx` with `gcd(r, c) = 1`.
pub fn trace_invariance_check(c: u64, g: usize) -> CheckReport {
    run_check("trace-invariance", 0, |b| {
        b.param("c", c).param("g", g);
        b.decision("the trace on residues is modelled as the relabeling x -> rx");
        let d = d_c(c, g)?;
        let mut moved = Vec::new();
        for r in (1..c.max(2)).filter(|&r| gcd(r, c) == 1) {
            if pushforward(&d, r)? != d {
                moved.push(r);
                b.counterexample(format!("multiplication by {r} moves D_{c}"));
            }
        }
        let deg = d.degree().to_i64();
        Ok((json!({ "degree": 0, "moved_by": [] }), json!({ "degree": deg, "moved_by": moved })))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn d_2_on_the_plane() {
        let d = d_c(2, 1).unwrap();
        assert_eq!(d.coeffs(), big(&[3, -1, -1, -1]).as_slice());
        assert!(d_c(1, 2).unwrap().support().next().is_none());
        assert!(d_c(3, 2).unwrap().degree().is_zero());
    }

    #[test]
    fn pullback_of_origin_is_two_torsion() {
        let base = TorsionGroup::new(1, 2).unwrap();
        let p = pullback(&Divisor::delta(base, &[0, 0]), 2).unwrap();
        let pts: Vec<Vec<u64>> = p.support().map(|(i, _)| p.base.point(i)).collect();
        assert_eq!(pts, vec![vec![0, 0], vec![2, 0], vec![0, 2], vec![2, 2]]);
    }

    #[test]
    fn pushforward_fixes_d_c() {
        assert_eq!(pushforward(&d_c(3, 1).unwrap(), 5).unwrap(), d_c(3, 1).unwrap());
        for c in 2..=10u64 {
            for g in 1..=2 {
                assert!(trace_invariance_check(c, g).pass);
            }
        }
        assert!(matches!(pushforward(&d_c(4, 1).unwrap(), 2), Err(Error::BadLevel(_))));
    }

    #[test]
    fn norm_after_pullback_scales() {
        let base = TorsionGroup::new(1, 3).unwrap();
        let d = Divisor::delta(base, &[1, 2]).add(&Divisor::delta(base, &[0, 1]).scale(&BigInt::from(-4))).unwrap();
        for a in 1..=4 {
            let back = norm(&pullback(&d, a).unwrap(), a).unwrap();
            assert_eq!(back, d.scale(&BigInt::from(a.pow(2))));
            assert_eq!(pullback(&d, a).unwrap().degree(), d.degree() * BigInt::from(a.pow(2)));
        }
    }

    #[test]
    fn distribution_examples() {
        assert!(distribution_check(2, 3, 1).pass);
        assert!(distribution_check(3, 5, 2).pass);
        assert!(distribution_check(4, 1, 2).pass);
    }

    #[test]
    fn duality_pairing() {
        assert!(duality_pairing_check(2, 2, 7).pass);
        assert!(duality_pairing_check(3, 1, 1).pass);
    }

    #[test]
    fn n_m_values() {
        assert_eq!(n_m(2, 3), BigInt::from(33280));
        assert_eq!(valuation(&n_m(2, 3), 7), Some(0));
        assert_eq!(n_m(2, 2), BigInt::from(315));
        assert_eq!(valuation(&n_m(2, 2), 5), Some(1));
        assert!(n_m(1, 1).is_zero());
        assert!(n_m_unit_check(7, 2, 3).pass);
        assert!(!n_m_unit_check(5, 2, 2).pass);
        assert!(!n_m_unit_check(5, 1, 1).pass);
    }

    #[test]
    fn f_m_examples() {
        let (tr, f) = f_m_on_wedge(1, 2, 2);
        assert_eq!(tr, vec![big(&[4])]);
        assert_eq!(f, vec![big(&[0])]);
        let (tr, _) = f_m_on_wedge(2, 3, 3);
        assert_eq!(tr.len(), 4);
        assert!(tr.iter().enumerate().all(|(i, row)| row[i] == BigInt::from(27)));
        let r = f_m_annihilation_check(3, 2);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.computed["fixed_line_scalar"], json!((-63i64 * -31 * -15 * -7 * -3 * -1).to_string()));
    }

    #[test]
    fn sparse_json_round_trip() {
        let d = d_c(2, 1).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"-1\""));
        let back: Divisor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"g":1,"c":2,"support":[[[5,0],"1"]]}"#;
        assert!(serde_json::from_str::<Divisor>(bad).is_err());
    }
}
