//! Congruence subgroups as predicates: exponent patterns, conjugated
//! patterns, rationality conditions and the named subgroups of the
//! construction (`U_1`, `V_1`, `V_{p^n,p^m}`, `V'`, Klingen, Borels).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{similitude_multiplier, Cocharacter, GroupElem, GroupKind};
use crate::matrix::Mat;
use crate::ring::{Elem, Ring, RingKind, RingSpec};

/// Extra requirement on a diagonal entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagTarget {
    Free,
    Unit,
    /// `g_ii = g_kk mod p^a`.
    EqualsEntry { k: usize, a: u32 },
    /// `g_ii = nu(g) mod p^a`.
    EqualsMultiplier { a: u32 },
}

/// Entry `(i, j)` must be congruent to `delta_ij` modulo `p^{expo[i][j]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CongruencePattern {
    pub n: usize,
    pub expo: Vec<Vec<u32>>,
    pub diag: Vec<DiagTarget>,
}

impl CongruencePattern {
    pub fn trivial(n: usize) -> Self {
        CongruencePattern { n, expo: vec![vec![0; n]; n], diag: vec![DiagTarget::Free; n] }
    }

    pub fn from_rows(rows: &[&[u32]]) -> Self {
        let n = rows.len();
        CongruencePattern { n, expo: rows.iter().map(|r| r.to_vec()).collect(), diag: vec![DiagTarget::Free; n] }
    }

    #[inline]
    pub fn e(&self, i: usize, j: usize) -> u32 {
        self.expo[i][j]
    }

    pub fn max_exponent(&self) -> u32 {
        self.expo.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Entry-wise maximum of exponents and union of diagonal targets.
    pub fn intersect(&self, other: &CongruencePattern) -> Result<CongruencePattern> {
        if self.n != other.n {
            return Err(Error::PatternInvalid("patterns of different sizes".into()));
        }
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                out.expo[i][j] = self.expo[i][j].max(other.expo[i][j]);
            }
            out.diag[i] = match (self.diag[i], other.diag[i]) {
                (DiagTarget::Free, d) | (d, DiagTarget::Free) => d,
                (a, b) if a == b => a,
                (a, b) => {
                    return Err(Error::PatternInvalid(format!("conflicting diagonal targets {a:?} and {b:?}")));
                }
            };
        }
        Ok(out)
    }

    /// Whether `x` satisfies the pattern; `nu` is needed only for
    /// [`DiagTarget::EqualsMultiplier`].
    pub fn matches(&self, ring: &Ring, x: &Mat, nu: Option<Elem>) -> bool {
        let one = ring.one();
        for i in 0..self.n {
            for j in 0..self.n {
                let e = self.expo[i][j];
                if e == 0 {
                    continue;
                }
                let v = if i == j { ring.sub(x.get(i, i), one) } else { x.get(i, j) };
                if !ring.divisible(v, e) {
                    return false;
                }
            }
            let ok = match self.diag[i] {
                DiagTarget::Free => true,
                DiagTarget::Unit => ring.is_unit(x.get(i, i)),
                DiagTarget::EqualsEntry { k, a } => ring.divisible(ring.sub(x.get(i, i), x.get(k, k)), a),
                DiagTarget::EqualsMultiplier { a } => match nu {
                    Some(nu) => ring.divisible(ring.sub(x.get(i, i), nu), a),
                    None => false,
                },
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

/// A matrix `c` together with its inverse. A condition carrying it is tested
/// on `c^-1 g c`, so it cuts out `c S c^-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conjugator {
    pub mat: Mat,
    pub inverse: Mat,
}

impl Conjugator {
    pub fn new(ring: &Ring, mat: Mat) -> Result<Self> {
        let inverse = ring.mat_inverse(&mat)?;
        Ok(Conjugator { mat, inverse })
    }

    /// `c^-1 g c`.
    pub fn pull(&self, ring: &Ring, g: &Mat) -> Mat {
        ring.mat_mul(&ring.mat_mul(&self.inverse, g), &self.mat)
    }

    /// The conjugator `outer * self`.
    fn compose(&self, ring: &Ring, outer: &Conjugator) -> Conjugator {
        Conjugator {
            mat: ring.mat_mul(&outer.mat, &self.mat),
            inverse: ring.mat_mul(&self.inverse, &outer.inverse),
        }
    }
}

/// One pattern condition, optionally through a conjugator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub conjugator: Option<Conjugator>,
    pub pattern: CongruencePattern,
}

/// Closed conditions beyond exponent patterns.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extra {
    /// `c^-1 g c` has all entries in the rational subring (membership in `H`).
    Rational { conjugator: Option<Conjugator> },
    /// `nu(g) = 1 mod p^a`.
    MultiplierOneMod { a: u32 },
}

/// A subgroup of `GL_n`, `GSp_2g` or `GU(2,2)` over a residue ring, given by
/// predicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub label: String,
    pub ring: RingSpec,
    pub kind: GroupKind,
    pub n: usize,
    pub conditions: Vec<Condition>,
    pub extras: Vec<Extra>,
}

impl SubgroupSpec {
    /// The whole ambient group.
    pub fn ambient(ring: RingSpec, kind: GroupKind, n: usize) -> Self {
        SubgroupSpec { label: ambient_label(&ring, kind, n), ring, kind, n, conditions: Vec::new(), extras: Vec::new() }
    }

    pub fn with_pattern(mut self, pattern: CongruencePattern) -> Result<Self> {
        self.add_condition(Condition { conjugator: None, pattern })?;
        Ok(self)
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn add_condition(&mut self, cond: Condition) -> Result<()> {
        if cond.pattern.n != self.n {
            return Err(Error::PatternInvalid(format!("pattern size {} in dimension {}", cond.pattern.n, self.n)));
        }
        if cond.pattern.max_exponent() > self.ring.k {
            return Err(Error::PrecisionTooLow(format!(
                "exponent {} exceeds precision {}",
                cond.pattern.max_exponent(),
                self.ring.k
            )));
        }
        if let Some(existing) = self.conditions.iter_mut().find(|c| c.conjugator == cond.conjugator) {
            existing.pattern = existing.pattern.intersect(&cond.pattern)?;
        } else {
            self.conditions.push(cond);
        }
        Ok(())
    }

    fn add_extra(&mut self, extra: Extra) {
        if !self.extras.contains(&extra) {
            self.extras.push(extra);
        }
    }

    /// The unconjugated pattern, if any.
    pub fn plain_pattern(&self) -> Option<&CongruencePattern> {
        self.conditions.iter().find(|c| c.conjugator.is_none()).map(|c| &c.pattern)
    }

    /// Pointwise conjunction of two specs over the same ambient group.
    pub fn intersect(&self, other: &SubgroupSpec) -> Result<SubgroupSpec> {
        if self.ring != other.ring || self.kind != other.kind || self.n != other.n {
            return Err(Error::PatternInvalid("intersection of specs in different ambient groups".into()));
        }
        let mut out = self.clone();
        out.label = format!("{} & {}", self.label, other.label);
        for c in &other.conditions {
            out.add_condition(c.clone())?;
        }
        for e in &other.extras {
            out.add_extra(e.clone());
        }
        Ok(out)
    }

    /// `u S u^-1`.
    pub fn conjugate(&self, ring: &Ring, u: &Mat) -> Result<SubgroupSpec> {
        let outer = Conjugator::new(ring, u.clone())?;
        let lift = |c: &Option<Conjugator>| match c {
            None => Some(outer.clone()),
            Some(c) => Some(c.compose(ring, &outer)),
        };
        Ok(SubgroupSpec {
            label: format!("u({})u^-1", self.label),
            conditions: self
                .conditions
                .iter()
                .map(|c| Condition { conjugator: lift(&c.conjugator), pattern: c.pattern.clone() })
                .collect(),
            extras: self
                .extras
                .iter()
                .map(|e| match e {
                    Extra::Rational { conjugator } => Extra::Rational { conjugator: lift(conjugator) },
                    other => other.clone(),
                })
                .collect(),
            ..self.clone()
        })
    }

    /// Intersection with the rational points `H`.
    pub fn in_h(&self) -> SubgroupSpec {
        let mut out = self.clone();
        out.label = format!("{} & H", self.label);
        out.add_extra(Extra::Rational { conjugator: None });
        out
    }

    /// The same predicates read at a lower precision, with exponents clamped.
    pub fn truncate(&self, k: u32) -> SubgroupSpec {
        let ring_full = Ring::new(self.ring).expect("spec ring is valid");
        let ring = self.ring.with_precision(k);
        let low = Ring::new(ring).expect("truncated ring is valid");
        let red = |c: &Conjugator| Conjugator {
            mat: ring_full.mat_reduce_to(&c.mat, &low),
            inverse: ring_full.mat_reduce_to(&c.inverse, &low),
        };
        let clamp = |p: &CongruencePattern| CongruencePattern {
            n: p.n,
            expo: p.expo.iter().map(|r| r.iter().map(|&e| e.min(k)).collect()).collect(),
            diag: p
                .diag
                .iter()
                .map(|d| match *d {
                    DiagTarget::EqualsEntry { k: idx, a } => DiagTarget::EqualsEntry { k: idx, a: a.min(k) },
                    DiagTarget::EqualsMultiplier { a } => DiagTarget::EqualsMultiplier { a: a.min(k) },
                    other => other,
                })
                .collect(),
        };
        SubgroupSpec {
            label: format!("{} mod p^{k}", self.label),
            ring,
            kind: self.kind,
            n: self.n,
            conditions: self
                .conditions
                .iter()
                .map(|c| Condition { conjugator: c.conjugator.as_ref().map(red), pattern: clamp(&c.pattern) })
                .collect(),
            extras: self
                .extras
                .iter()
                .map(|e| match e {
                    Extra::Rational { conjugator } => Extra::Rational { conjugator: conjugator.as_ref().map(red) },
                    Extra::MultiplierOneMod { a } => Extra::MultiplierOneMod { a: (*a).min(k) },
                })
                .collect(),
        }
    }

    /// Multiplier of `g` in the ambient group, or `None` if `g` is not in it.
    pub fn ambient_multiplier(&self, ring: &Ring, g: &Mat) -> Option<Elem> {
        match self.kind {
            GroupKind::Gl => ring.is_unit(ring.det(g)).then(|| ring.one()),
            GroupKind::Similitude => similitude_multiplier(ring, g).ok(),
        }
    }

    /// Full membership test at precision `K`.
    pub fn contains(&self, ring: &Ring, g: &Mat) -> bool {
        match self.ambient_multiplier(ring, g) {
            Some(nu) => self.contains_with_multiplier(ring, g, nu),
            None => false,
        }
    }

    /// Membership test for `g` already known to lie in the ambient group with multiplier `nu`.
    pub fn contains_with_multiplier(&self, ring: &Ring, g: &Mat, nu: Elem) -> bool {
        let nu_opt = (self.kind == GroupKind::Similitude).then_some(nu);
        for c in &self.conditions {
            let ok = match &c.conjugator {
                None => c.pattern.matches(ring, g, nu_opt),
                Some(conj) => c.pattern.matches(ring, &conj.pull(ring, g), nu_opt),
            };
            if !ok {
                return false;
            }
        }
        for e in &self.extras {
            let ok = match e {
                Extra::Rational { conjugator: None } => ring.mat_is_rational(g),
                Extra::Rational { conjugator: Some(c) } => ring.mat_is_rational(&c.pull(ring, g)),
                Extra::MultiplierOneMod { a } => ring.divisible(ring.sub(nu, ring.one()), *a),
            };
            if !ok {
                return false;
            }
        }
        true
    }

    pub fn contains_elem(&self, ring: &Ring, g: &GroupElem) -> bool {
        match g.multiplier {
            Some(nu) if self.kind == GroupKind::Similitude => {
                similitude_multiplier(ring, &g.mat).map_or(false, |m| m == nu)
                    && self.contains_with_multiplier(ring, &g.mat, nu)
            }
            _ => self.contains(ring, &g.mat),
        }
    }
}

fn ambient_label(ring: &RingSpec, kind: GroupKind, n: usize) -> String {
    match (kind, ring.kind) {
        (GroupKind::Gl, _) => format!("GL{n}"),
        (GroupKind::Similitude, RingKind::Rational) => format!("GSp{n}"),
        (GroupKind::Similitude, RingKind::Split) => format!("GL{n}xGL1"),
        (GroupKind::Similitude, RingKind::Inert { .. }) => format!("GU({},{})", n / 2, n / 2),
    }
}

/// Pattern with only the last row constrained: `R_n(g) = (0, ..., 0, 1) mod p^m`.
pub fn last_row_pattern(n: usize, m: u32) -> CongruencePattern {
    let mut p = CongruencePattern::trivial(n);
    p.expo[n - 1] = vec![m; n];
    p
}

/// `g = diag(*, 1, *, 1) mod p^a` on 4 x 4 matrices.
pub fn diag_star_one_pattern(a: u32) -> CongruencePattern {
    let mut p = CongruencePattern::trivial(4);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                p.expo[i][j] = a;
            }
        }
    }
    p.expo[1][1] = a;
    p.expo[3][3] = a;
    p
}

fn check_precision(ring: &RingSpec, m: u32) -> Result<()> {
    if m > ring.k {
        Err(Error::PrecisionTooLow(format!("level p^{m} needs K >= {m}, got K = {}", ring.k)))
    } else {
        Ok(())
    }
}

/// `U_1(p^m)` in `GSp_2g`.
pub fn u1_spec(ring: RingSpec, g: usize, m: u32) -> Result<SubgroupSpec> {
    if !ring.is_rational() {
        return Err(Error::InvalidRing("U_1 lives in GSp over Z/p^K".into()));
    }
    check_precision(&ring, m)?;
    Ok(SubgroupSpec::ambient(ring, GroupKind::Similitude, 2 * g)
        .with_pattern(last_row_pattern(2 * g, m))?
        .labelled(format!("U1(p^{m})")))
}

/// `V_1(p^m)` in `GU(2,2)`.
pub fn v1_spec(ring: RingSpec, m: u32) -> Result<SubgroupSpec> {
    if ring.is_rational() {
        return Err(Error::InvalidRing("V_1 lives in GU(2,2) over an extension".into()));
    }
    check_precision(&ring, m)?;
    Ok(SubgroupSpec::ambient(ring, GroupKind::Similitude, 4)
        .with_pattern(last_row_pattern(4, m))?
        .labelled(format!("V1(p^{m})")))
}

/// Exponent rule for `eta^k S eta^-k`: off-diagonal entries become
/// `max(0, e_ij + k (c_i - c_j))`, diagonal entries are unchanged.
pub fn transport_pattern(p: &CongruencePattern, c: &Cocharacter, k: i64, max: u32) -> Result<CongruencePattern> {
    if c.exponents.len() != p.n {
        return Err(Error::PatternInvalid("cocharacter rank differs from pattern size".into()));
    }
    let mut out = p.clone();
    for i in 0..p.n {
        for j in 0..p.n {
            if i == j {
                continue;
            }
            let e = p.expo[i][j] as i64 + k * (c.exponents[i] - c.exponents[j]);
            let e = e.max(0);
            if e > max as i64 {
                return Err(Error::PrecisionTooLow(format!("transported exponent {e} at ({i},{j}) exceeds K = {max}")));
            }
            out.expo[i][j] = e as u32;
        }
    }
    Ok(out)
}

/// `eta^k S eta^-k` for a spec whose conditions are unconjugated.
pub fn transport(spec: &SubgroupSpec, c: &Cocharacter, k: i64) -> Result<SubgroupSpec> {
    let mut out = spec.clone();
    out.label = format!("eta^{k}({})", spec.label);
    for cond in &mut out.conditions {
        if cond.conjugator.is_some() {
            return Err(Error::PatternInvalid("transport of conjugated conditions is not supported".into()));
        }
        cond.pattern = transport_pattern(&cond.pattern, c, k, spec.ring.k)?;
    }
    Ok(out)
}

fn diag_congruence(ring: RingSpec, a: u32) -> Result<SubgroupSpec> {
    SubgroupSpec::ambient(ring, GroupKind::Similitude, 4).with_pattern(diag_star_one_pattern(a))
}

/// `V_{p^n,p^m} = V_1(p^n) & eta^m V_1(p^n) eta^-m & {g = diag(*,1,*,1) mod p^m}`.
pub fn v_nm_spec(ring: RingSpec, n: u32, m: u32) -> Result<SubgroupSpec> {
    let v = v1_spec(ring, n)?;
    let spec = v.intersect(&transport(&v, &Cocharacter::eta(), m as i64)?)?.intersect(&diag_congruence(ring, m)?)?;
    Ok(spec.labelled(format!("V(p^{n},p^{m})")))
}

/// `V' = V_1(p^n) & eta^{m+1} V_1(p^n) eta^{-(m+1)} & {g = diag(*,1,*,1) mod p^m}`.
pub fn v_prime_spec(ring: RingSpec, n: u32, m: u32) -> Result<SubgroupSpec> {
    let v = v1_spec(ring, n)?;
    let spec =
        v.intersect(&transport(&v, &Cocharacter::eta(), m as i64 + 1)?)?.intersect(&diag_congruence(ring, m)?)?;
    Ok(spec.labelled(format!("V'(p^{n},p^{m})")))
}

/// `V_{p^n,p^{m+1}} = V' & {g = diag(*,1,*,1) mod p^{m+1}}`.
pub fn v_nm_next_spec(ring: RingSpec, n: u32, m: u32) -> Result<SubgroupSpec> {
    let spec = v_prime_spec(ring, n, m)?.intersect(&diag_congruence(ring, m + 1)?)?;
    Ok(spec.labelled(format!("V(p^{n},p^{})", m + 1)))
}

/// The resolved exponent matrix for `V_{p^n,p^m}` when `n > 3m`.
pub fn v_nm_pattern(ring: RingSpec, n: u32, m: u32) -> Result<SubgroupSpec> {
    if n <= 3 * m {
        return Err(Error::PatternInvalid(format!("resolved pattern needs n > 3m, got n = {n}, m = {m}")));
    }
    check_precision(&ring, n)?;
    if ring.is_rational() {
        return Err(Error::InvalidRing("V_{p^n,p^m} lives in GU(2,2)".into()));
    }
    let pattern = CongruencePattern::from_rows(&[
        &[0, m, 2 * m, 3 * m],
        &[n, m, m, 2 * m],
        &[n, m, 0, m],
        &[n, n, n, n],
    ]);
    Ok(SubgroupSpec::ambient(ring, GroupKind::Similitude, 4)
        .with_pattern(pattern)?
        .labelled(format!("pattern(p^{n},p^{m})")))
}

/// `Klin°` in `GSp_4`: last row exactly `e_4`, first column zero below the corner.
pub fn klingen_spec(ring: RingSpec) -> Result<SubgroupSpec> {
    let k = ring.k;
    let mut p = last_row_pattern(4, k);
    p.expo[1][0] = k;
    p.expo[2][0] = k;
    Ok(SubgroupSpec::ambient(ring, GroupKind::Similitude, 4).with_pattern(p)?.labelled("Klin"))
}

/// Upper and lower triangular Borels of the ambient group.
pub fn borel_specs(ring: RingSpec, kind: GroupKind, n: usize) -> Result<(SubgroupSpec, SubgroupSpec)> {
    let mut upper = CongruencePattern::trivial(n);
    let mut lower = CongruencePattern::trivial(n);
    for i in 0..n {
        for j in 0..n {
            if i > j {
                upper.expo[i][j] = ring.k;
            } else if i < j {
                lower.expo[i][j] = ring.k;
            }
        }
    }
    Ok((
        SubgroupSpec::ambient(ring, kind, n).with_pattern(upper)?.labelled("B"),
        SubgroupSpec::ambient(ring, kind, n).with_pattern(lower)?.labelled("Bbar"),
    ))
}

/// `I + e E_13 + conj(e) E_24`.
pub fn u_generic(ring: &Ring, e: Elem) -> GroupElem {
    let mut m = Mat::identity(ring, 4);
    m.set(0, 2, e);
    m.set(1, 3, ring.conj(e));
    GroupElem::with_multiplier(m, ring.one())
}

/// Whether `e` generates `O/(pO + Z)`.
pub fn is_generator(ring: &Ring, e: Elem) -> bool {
    let p = ring.p();
    match ring.kind() {
        RingKind::Rational => false,
        RingKind::Inert { .. } => e.1 % p != 0,
        RingKind::Split => (e.0 as i64 - e.1 as i64).rem_euclid(p as i64) != 0,
    }
}

/// The conjugating element for an inert prime.
pub fn u_inert(ring: &Ring, e: Elem) -> Result<GroupElem> {
    if !matches!(ring.kind(), RingKind::Inert { .. }) {
        return Err(Error::InvalidRing("u_inert needs the inert model".into()));
    }
    if !is_generator(ring, e) {
        return Err(Error::BadGenerator(format!("{} does not generate O/(pO + Z)", ring.display(e))));
    }
    Ok(u_generic(ring, e))
}

/// The conjugating element for a split prime, `((I - E_13), 1)` in `(M, a)`
/// coordinates; as a pair it is `u_generic((-1, 0))`.
pub fn u_split(ring: &Ring) -> Result<GroupElem> {
    if ring.kind() != RingKind::Split {
        return Err(Error::InvalidRing("u_split needs the split model".into()));
    }
    Ok(u_generic(ring, ring.from_coords(-1, 0)))
}

/// The appendix's `u` for whichever model the ring uses; the inert generator
/// is the basis element `y`.
pub fn u_for(ring: &Ring) -> Result<GroupElem> {
    match ring.kind() {
        RingKind::Split => u_split(ring),
        RingKind::Inert { .. } => u_inert(ring, ring.generator()),
        RingKind::Rational => Err(Error::InvalidRing("no conjugating element over Z/p^K".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{gu_multiplier, split_iso_inv};

    #[test]
    fn transport_examples() {
        let c = Cocharacter::eta();
        let t = transport_pattern(&CongruencePattern::trivial(4), &c, 1, 6).unwrap();
        assert_eq!(t.e(0, 1), 1);
        assert_eq!(t.e(1, 0), 0);
        assert_eq!(transport_pattern(&last_row_pattern(4, 5), &c, 0, 6).unwrap(), last_row_pattern(4, 5));
        let t = transport_pattern(&last_row_pattern(4, 6), &c, 1, 6).unwrap();
        assert_eq!(t.expo[3], vec![3, 4, 5, 6]);
        assert!(matches!(transport_pattern(&last_row_pattern(4, 6), &c, -1, 6), Err(Error::PrecisionTooLow(_))));
    }

    #[test]
    fn transport_roundtrip_within_precision() {
        let c = Cocharacter::eta();
        let p = CongruencePattern::from_rows(&[&[0, 1, 2, 3], &[4, 1, 1, 2], &[4, 1, 0, 1], &[4, 4, 4, 4]]);
        for k in 0..=1 {
            let there = transport_pattern(&p, &c, k, 12).unwrap();
            assert_eq!(transport_pattern(&there, &c, -k, 12).unwrap(), p);
        }
    }

    #[test]
    fn remark_pattern_entry() {
        let spec = v_nm_pattern(RingSpec::split(2, 4), 4, 1).unwrap();
        assert_eq!(spec.plain_pattern().unwrap().e(0, 3), 3);
        assert!(matches!(v_nm_pattern(RingSpec::split(2, 4), 3, 1), Err(Error::PatternInvalid(_))));
    }

    #[test]
    fn raw_intersection_differs_only_in_forced_entries() {
        let raw = v_nm_spec(RingSpec::split(2, 4), 4, 1).unwrap();
        let raw = raw.plain_pattern().unwrap();
        let res = v_nm_pattern(RingSpec::split(2, 4), 4, 1).unwrap();
        let res = res.plain_pattern().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if (i, j) == (1, 0) || (i, j) == (2, 0) {
                    assert_eq!(raw.e(i, j), 1);
                    assert_eq!(res.e(i, j), 4);
                } else {
                    assert_eq!(raw.e(i, j), res.e(i, j), "entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn u_elements() {
        let r = Ring::new(RingSpec::split(2, 2)).unwrap();
        let u = u_split(&r).unwrap();
        let base = Ring::new(RingSpec::rational(2, 2)).unwrap();
        let m = base.elementary(4, 0, 2, base.from_int(-1));
        assert_eq!(split_iso_inv(&r, &m, base.one()).unwrap(), u);
        let w = Ring::new(RingSpec::inert(2, 3, 1, -1)).unwrap();
        let u = u_inert(&w, w.generator()).unwrap();
        assert_eq!(gu_multiplier(&w, &u.mat).unwrap(), w.one());
        assert!(matches!(u_inert(&w, w.one()), Err(Error::BadGenerator(_))));
    }

    #[test]
    fn precision_checks() {
        assert!(matches!(u1_spec(RingSpec::rational(2, 1), 2, 2), Err(Error::PrecisionTooLow(_))));
        assert!(v1_spec(RingSpec::inert(2, 1, 1, -1), 1).is_ok());
    }

    #[test]
    fn conjugated_membership() {
        let r = Ring::new(RingSpec::split(3, 3)).unwrap();
        let u = u_split(&r).unwrap();
        let v = v1_spec(RingSpec::split(3, 3), 2).unwrap();
        let uv = v.conjugate(&r, &u.mat).unwrap();
        let g = r.elementary(4, 0, 1, r.from_coords(1, 2));
        let g = crate::groups::GroupElem::new(g);
        let ug = r.mat_mul(&r.mat_mul(&u.mat, &g.mat), &r.mat_inverse(&u.mat).unwrap());
        assert_eq!(v.contains(&r, &g.mat), uv.contains(&r, &ug));
    }
}
