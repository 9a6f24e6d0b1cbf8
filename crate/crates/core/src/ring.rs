//! Residue rings `Z/p^K` and rank-2 extensions `O_F/p^K`.
//!
//! Elements are plain coordinate pairs; all arithmetic goes through a [`Ring`]
//! context. Rational elements keep the second coordinate at zero, split
//! elements store both components of the pair ring, and inert elements store
//! `(a, b)` for `a + b*y` with `y^2 = s*y + t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the three ring models is in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingKind {
    Rational,
    Inert { s: i64, t: i64 },
    Split,
}

/// Parameters of a residue ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingSpec {
    pub p: u32,
    pub k: u32,
    pub kind: RingKind,
    /// Discriminant label of the imaginary quadratic field; only used to
    /// validate that `p` splits when the split model is requested.
    pub field_disc: Option<i64>,
}

/// Default minimal polynomial `(s, t)` of the integral generator for a field
/// discriminant label.
pub fn default_minpoly(d: i64) -> Option<(i64, i64)> {
    match d {
        -1 => Some((0, -1)),
        -3 => Some((1, -1)),
        -7 => Some((1, -2)),
        _ => None,
    }
}

impl RingSpec {
    pub fn rational(p: u32, k: u32) -> Self {
        RingSpec { p, k, kind: RingKind::Rational, field_disc: None }
    }

    pub fn inert(p: u32, k: u32, s: i64, t: i64) -> Self {
        RingSpec { p, k, kind: RingKind::Inert { s, t }, field_disc: None }
    }

    pub fn split(p: u32, k: u32) -> Self {
        RingSpec { p, k, kind: RingKind::Split, field_disc: None }
    }

    /// Inert or split model of `O_F/p^K` for the field with label `d`,
    /// chosen according to how `p` decomposes.
    pub fn for_field(p: u32, k: u32, d: i64) -> Result<Self> {
        let (s, t) = default_minpoly(d)
            .ok_or_else(|| Error::InvalidRing(format!("no default minimal polynomial for d = {d}")))?;
        let inert = RingSpec { p, k, kind: RingKind::Inert { s, t }, field_disc: Some(d) };
        if inert.validate().is_ok() {
            return Ok(inert);
        }
        let split = RingSpec { p, k, kind: RingKind::Split, field_disc: Some(d) };
        split.validate()?;
        Ok(split)
    }

    pub fn with_precision(&self, k: u32) -> Self {
        RingSpec { k, ..*self }
    }

    /// The rational subring with the same `p` and `K`.
    pub fn base(&self) -> Self {
        RingSpec::rational(self.p, self.k)
    }

    pub fn degree(&self) -> usize {
        match self.kind {
            RingKind::Rational => 1,
            _ => 2,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.kind, RingKind::Rational)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::InvalidRing(format!("{} is not prime", self.p)));
        }
        if self.k == 0 {
            return Err(Error::InvalidRing("precision K must be at least 1".into()));
        }
        let modulus = (self.p as u64).checked_pow(self.k);
        if modulus.map_or(true, |m| m >= 1 << 31) {
            return Err(Error::InvalidRing(format!("{}^{} does not fit in 31 bits", self.p, self.k)));
        }
        match self.kind {
            RingKind::Rational => Ok(()),
            RingKind::Inert { s, t } => {
                let p = self.p as i64;
                let has_root = (0..p).any(|y| (y * y - s * y - t).rem_euclid(p) == 0);
                if has_root {
                    Err(Error::InvalidRing(format!(
                        "y^2 - {s}y - ({t}) is reducible modulo {p}"
                    )))
                } else {
                    Ok(())
                }
            }
            RingKind::Split => match self.field_disc {
                Some(d) if !splits(self.p, d) => {
                    Err(Error::InvalidRing(format!("{} does not split in Q(sqrt({d}))", self.p)))
                }
                _ => Ok(()),
            },
        }
    }
}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn splits(p: u32, d: i64) -> bool {
    if p == 2 {
        return d.rem_euclid(8) == 1;
    }
    let p = p as i64;
    let d = d.rem_euclid(p);
    d != 0 && (1..p).any(|x| (x * x) % p == d)
}

/// An element of a residue ring, as coordinates reduced modulo `p^K`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elem(pub u32, pub u32);

/// Arithmetic context for one [`RingSpec`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    spec: RingSpec,
    modulus: u64,
    s: u64,
    t: u64,
}

impl Ring {
    pub fn new(spec: RingSpec) -> Result<Self> {
        spec.validate()?;
        let modulus = (spec.p as u64).pow(spec.k);
        let (s, t) = match spec.kind {
            RingKind::Inert { s, t } => {
                let m = modulus as i64;
                (s.rem_euclid(m) as u64, t.rem_euclid(m) as u64)
            }
            _ => (0, 0),
        };
        Ok(Ring { spec, modulus, s, t })
    }

    pub fn spec(&self) -> &RingSpec {
        &self.spec
    }

    pub fn p(&self) -> u32 {
        self.spec.p
    }

    pub fn k(&self) -> u32 {
        self.spec.k
    }

    pub fn kind(&self) -> RingKind {
        self.spec.kind
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn degree(&self) -> usize {
        self.spec.degree()
    }

    pub fn is_rational(&self) -> bool {
        self.spec.is_rational()
    }

    /// Minimal polynomial coefficients `(s, t)` reduced into `[0, p^K)`.
    pub fn minpoly(&self) -> (u64, u64) {
        (self.s, self.t)
    }

    /// The same ring model at another precision.
    pub fn with_precision(&self, k: u32) -> Result<Ring> {
        Ring::new(self.spec.with_precision(k))
    }

    #[inline]
    fn red(&self, x: u64) -> u32 {
        (x % self.modulus) as u32
    }

    /// Image of an integer.
    pub fn from_int(&self, n: i64) -> Elem {
        let a = n.rem_euclid(self.modulus as i64) as u32;
        match self.spec.kind {
            RingKind::Split => Elem(a, a),
            _ => Elem(a, 0),
        }
    }

    /// Element from raw coordinates, reduced.
    pub fn from_coords(&self, a: i64, b: i64) -> Elem {
        let m = self.modulus as i64;
        match self.spec.kind {
            RingKind::Rational => Elem(a.rem_euclid(m) as u32, 0),
            _ => Elem(a.rem_euclid(m) as u32, b.rem_euclid(m) as u32),
        }
    }

    /// The basis element `y` (inert) or the idempotent `(0, 1)` (split).
    pub fn generator(&self) -> Elem {
        match self.spec.kind {
            RingKind::Rational => Elem(0, 0),
            _ => Elem(0, 1),
        }
    }

    #[inline]
    pub fn zero(&self) -> Elem {
        Elem(0, 0)
    }

    #[inline]
    pub fn one(&self) -> Elem {
        match self.spec.kind {
            RingKind::Split => Elem(1, 1),
            _ => Elem(1, 0),
        }
    }

    #[inline]
    pub fn add(&self, x: Elem, y: Elem) -> Elem {
        let m = self.modulus as u32;
        let a = x.0 + y.0;
        let b = x.1 + y.1;
        Elem(if a >= m { a - m } else { a }, if b >= m { b - m } else { b })
    }

    #[inline]
    pub fn neg(&self, x: Elem) -> Elem {
        let m = self.modulus as u32;
        Elem(if x.0 == 0 { 0 } else { m - x.0 }, if x.1 == 0 { 0 } else { m - x.1 })
    }

    #[inline]
    pub fn sub(&self, x: Elem, y: Elem) -> Elem {
        self.add(x, self.neg(y))
    }

    #[inline]
    pub fn mul(&self, x: Elem, y: Elem) -> Elem {
        let (a, b, c, d) = (x.0 as u64, x.1 as u64, y.0 as u64, y.1 as u64);
        match self.spec.kind {
            RingKind::Rational => Elem(self.red(a * c), 0),
            RingKind::Split => Elem(self.red(a * c), self.red(b * d)),
            RingKind::Inert { .. } => {
                let bd = b * d % self.modulus;
                Elem(self.red(a * c + self.t * bd), self.red(a * d + b * c + self.s * bd))
            }
        }
    }

    pub fn pow(&self, x: Elem, mut e: u64) -> Elem {
        let mut base = x;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplication by an integer.
    pub fn scale(&self, x: Elem, n: i64) -> Elem {
        self.mul(x, self.from_int(n))
    }

    /// The bar involution.
    #[inline]
    pub fn conj(&self, x: Elem) -> Elem {
        match self.spec.kind {
            RingKind::Rational => x,
            RingKind::Split => Elem(x.1, x.0),
            RingKind::Inert { .. } => {
                let b = x.1 as u64;
                Elem(self.red(x.0 as u64 + b * self.s), self.neg(Elem(x.1, 0)).0)
            }
        }
    }

    /// `x * conj(x)`, which lies in the rational subring.
    pub fn norm(&self, x: Elem) -> Elem {
        self.mul(x, self.conj(x))
    }

    /// Whether `x` lies in the image of `Z/p^K`.
    #[inline]
    pub fn is_rational_elem(&self, x: Elem) -> bool {
        match self.spec.kind {
            RingKind::Rational => true,
            RingKind::Split => x.0 == x.1,
            RingKind::Inert { .. } => x.1 == 0,
        }
    }

    /// The integer residue of a rational element.
    pub fn rational_value(&self, x: Elem) -> Option<u32> {
        self.is_rational_elem(x).then_some(x.0)
    }

    fn vp(&self, mut a: u32) -> u32 {
        if a == 0 {
            return self.spec.k;
        }
        let mut v = 0;
        while a % self.spec.p == 0 {
            a /= self.spec.p;
            v += 1;
        }
        v
    }

    /// Largest `v <= K` with `x` in `p^v` times the ring; `K` for zero.
    pub fn valuation(&self, x: Elem) -> u32 {
        match self.spec.kind {
            RingKind::Rational => self.vp(x.0),
            _ => self.vp(x.0).min(self.vp(x.1)),
        }
    }

    /// Whether `x` is divisible by `p^e` (always true for `e = 0`).
    #[inline]
    pub fn divisible(&self, x: Elem, e: u32) -> bool {
        if e == 0 {
            return true;
        }
        if e >= self.spec.k {
            return x == Elem(0, 0);
        }
        let q = (self.spec.p as u64).pow(e) as u32;
        x.0 % q == 0 && x.1 % q == 0
    }

    /// Units are the elements of valuation 0, except in the split model where
    /// both components must be units.
    pub fn is_unit(&self, x: Elem) -> bool {
        match self.spec.kind {
            RingKind::Split => self.vp(x.0) == 0 && self.vp(x.1) == 0,
            _ => self.valuation(x) == 0,
        }
    }

    pub fn is_zero(&self, x: Elem) -> bool {
        x == Elem(0, 0)
    }

    fn inv_int(&self, a: u32) -> Option<u32> {
        let m = self.modulus as i64;
        let (mut r0, mut r1) = (a as i64, m);
        let (mut s0, mut s1) = (1i64, 0i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        (r0 == 1).then(|| s0.rem_euclid(m) as u32)
    }

    /// Multiplicative inverse.
    pub fn invert(&self, x: Elem) -> Result<Elem> {
        let fail = || Error::NonUnit(format!("{x:?} has positive valuation in {:?}", self.spec));
        match self.spec.kind {
            RingKind::Rational => self.inv_int(x.0).map(|a| Elem(a, 0)).ok_or_else(fail),
            RingKind::Split => match (self.inv_int(x.0), self.inv_int(x.1)) {
                (Some(a), Some(b)) => Ok(Elem(a, b)),
                _ => Err(fail()),
            },
            RingKind::Inert { .. } => {
                let n = self.norm(x);
                let ninv = self.inv_int(n.0).ok_or_else(fail)?;
                Ok(self.mul(self.conj(x), Elem(ninv, 0)))
            }
        }
    }

    /// Reduction to a lower precision of the same model.
    pub fn reduce_to(&self, x: Elem, target: &Ring) -> Elem {
        let m = target.modulus as u32;
        match self.spec.kind {
            RingKind::Rational => Elem(x.0 % m, 0),
            _ => Elem(x.0 % m, x.1 % m),
        }
    }

    /// Every element of the ring, in coordinate order.
    pub fn elements(&self) -> Vec<Elem> {
        let m = self.modulus as u32;
        match self.spec.kind {
            RingKind::Rational => (0..m).map(|a| Elem(a, 0)).collect(),
            _ => (0..m).flat_map(|a| (0..m).map(move |b| Elem(a, b))).collect(),
        }
    }

    /// Every unit of the ring.
    pub fn units(&self) -> Vec<Elem> {
        self.elements().into_iter().filter(|&x| self.is_unit(x)).collect()
    }

    /// The two coordinates of `x` as a vector over `Z/p^K`.
    pub fn coords(&self, x: Elem) -> [u32; 2] {
        [x.0, x.1]
    }

    /// Human-readable rendering.
    pub fn display(&self, x: Elem) -> String {
        match self.spec.kind {
            RingKind::Rational => x.0.to_string(),
            RingKind::Split => format!("({}, {})", x.0, x.1),
            RingKind::Inert { .. } => format!("{}+{}y", x.0, x.1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qi(p: u32, k: u32) -> Ring {
        Ring::new(RingSpec::inert(p, k, 0, -1)).unwrap()
    }

    fn omega(p: u32, k: u32) -> Ring {
        Ring::new(RingSpec::inert(p, k, 1, -1)).unwrap()
    }

    #[test]
    fn conj_examples() {
        let r = qi(3, 1);
        assert_eq!(r.conj(Elem(0, 1)), Elem(0, 2));
        let s = Ring::new(RingSpec::split(7, 1)).unwrap();
        assert_eq!(s.conj(Elem(2, 5)), Elem(5, 2));
        let w = omega(2, 1);
        assert_eq!(w.conj(Elem(0, 1)), Elem(1, 1));
    }

    #[test]
    fn valuation_examples() {
        let r = Ring::new(RingSpec::rational(3, 4)).unwrap();
        assert_eq!(r.valuation(r.from_int(9)), 2);
        let r3 = Ring::new(RingSpec::rational(5, 3)).unwrap();
        assert_eq!(r3.valuation(r3.zero()), 3);
        let w = omega(2, 3);
        assert_eq!(w.valuation(Elem(0, 2)), 1);
    }

    #[test]
    fn invert_examples() {
        let r = Ring::new(RingSpec::rational(2, 3)).unwrap();
        assert_eq!(r.invert(r.from_int(3)).unwrap(), r.from_int(3));
        assert!(matches!(r.invert(r.from_int(2)), Err(Error::NonUnit(_))));
        let w = omega(2, 1);
        assert_eq!(w.invert(Elem(0, 1)).unwrap(), Elem(1, 1));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Ring::new(RingSpec::rational(4, 1)).is_err());
        assert!(Ring::new(RingSpec::rational(3, 0)).is_err());
        // y^2 + 1 has a root mod 5
        assert!(Ring::new(RingSpec::inert(5, 1, 0, -1)).is_err());
        let bad = RingSpec { field_disc: Some(-1), ..RingSpec::split(3, 1) };
        assert!(Ring::new(bad).is_err());
        assert_eq!(RingSpec::for_field(5, 2, -1).unwrap().kind, RingKind::Split);
        assert_eq!(RingSpec::for_field(3, 2, -1).unwrap().kind, RingKind::Inert { s: 0, t: -1 });
        assert_eq!(RingSpec::for_field(2, 2, -3).unwrap().kind, RingKind::Inert { s: 1, t: -1 });
    }

    fn small_rings() -> Vec<Ring> {
        let mut out = Vec::new();
        for p in [2, 3] {
            for k in [1, 2] {
                out.push(Ring::new(RingSpec::rational(p, k)).unwrap());
                out.push(Ring::new(RingSpec::split(p, k)).unwrap());
            }
        }
        for k in [1, 2] {
            out.push(omega(2, k));
            out.push(qi(3, k));
        }
        out
    }

    #[test]
    fn ring_axioms_exhaustive() {
        for r in small_rings() {
            let els = r.elements();
            for &a in &els {
                assert_eq!(r.conj(r.conj(a)), a);
                assert!(r.is_rational_elem(r.norm(a)));
                match r.invert(a) {
                    Ok(b) => assert_eq!(r.mul(a, b), r.one()),
                    Err(_) => assert!(!r.is_unit(a)),
                }
                for &b in &els {
                    assert_eq!(r.conj(r.mul(a, b)), r.mul(r.conj(a), r.conj(b)));
                    assert_eq!(r.conj(r.add(a, b)), r.add(r.conj(a), r.conj(b)));
                    assert_eq!(r.mul(a, b), r.mul(b, a));
                    if els.len() <= 81 {
                        for &c in &els {
                            assert_eq!(r.mul(r.mul(a, b), c), r.mul(a, r.mul(b, c)));
                            assert_eq!(r.mul(a, r.add(b, c)), r.add(r.mul(a, b), r.mul(a, c)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn generator_satisfies_minpoly() {
        for r in [qi(3, 3), omega(2, 4)] {
            let y = r.generator();
            let (s, t) = r.minpoly();
            let rhs = r.add(r.mul(Elem(s as u32, 0), y), Elem(t as u32, 0));
            assert_eq!(r.mul(y, y), rhs);
        }
    }
}
