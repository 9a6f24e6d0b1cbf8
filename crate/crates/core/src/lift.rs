//! Solution sets of congruence systems over `R/p^K`: level-one enumeration,
//! Hensel steps over `F_p`, and exhaustive fiber enumeration.
//!
//! The unknowns are a matrix `x` over `R` and (for similitude groups) a
//! rational multiplier `nu`. A system consists of the group relation
//! `conj(x)^T J x = nu J` (or invertibility for GL) and a list of affine
//! constraints `f(x, nu) in p^e`. Every constraint is affine over `Z`, so a
//! lifting step from `p^j` to `p^{j+1}` is an affine system over `F_p`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::Rng;
use rayon::prelude::*;

use crate::congruence::{DiagTarget, Extra, SubgroupSpec};
use crate::error::{Error, Result};
use crate::groups::{symplectic_form, GroupKind};
use crate::matrix::Mat;
use crate::ring::{Elem, Ring, RingKind};

/// Which coordinates of the value of an affine functional must vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Output {
    /// All coordinates of the ring element.
    Full,
    /// The element is rational: this coordinate measures the failure.
    Irrational,
    /// Only the first coordinate: the integer part (inert) or the first
    /// component (split).
    First,
}

/// `f(x, nu) = sum coeff * x_ab + nu_coeff * nu + constant`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub terms: Vec<(usize, Elem)>,
    pub nu_coeff: Elem,
    pub constant: Elem,
    pub output: Output,
}

/// `f(x, nu) = 0 mod p^exponent`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub f: Affine,
    pub exponent: u32,
}

/// Terms of `(L x R)_ij` as a linear form in the entries of `x`.
pub fn sandwich_terms(ring: &Ring, n: usize, left: Option<&Mat>, right: Option<&Mat>, i: usize, j: usize) -> Vec<(usize, Elem)> {
    let mut acc: HashMap<usize, Elem> = HashMap::new();
    let lrow: Vec<(usize, Elem)> = match left {
        None => vec![(i, ring.one())],
        Some(l) => (0..n).map(|a| (a, l.get(i, a))).filter(|&(_, c)| c != Elem(0, 0)).collect(),
    };
    let rcol: Vec<(usize, Elem)> = match right {
        None => vec![(j, ring.one())],
        Some(r) => (0..n).map(|b| (b, r.get(b, j))).filter(|&(_, c)| c != Elem(0, 0)).collect(),
    };
    for &(a, la) in &lrow {
        for &(b, rb) in &rcol {
            let e = acc.entry(a * n + b).or_insert(Elem(0, 0));
            *e = ring.add(*e, ring.mul(la, rb));
        }
    }
    let mut terms: Vec<(usize, Elem)> = acc.into_iter().filter(|&(_, c)| c != Elem(0, 0)).collect();
    terms.sort_unstable_by_key(|t| t.0);
    terms
}

/// Dense Gauss-Jordan data of a matrix over `F_p`, reusable for many
/// right-hand sides.
#[derive(Debug)]
pub struct Elim {
    p: u32,
    ncols: usize,
    nrows: usize,
    pivots: Vec<usize>,
    reduced: Vec<Vec<u32>>,
    transform: Vec<Vec<u32>>,
}

fn inv_mod(a: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

impl Elim {
    pub fn new(p: u32, rows: &[Vec<u32>], ncols: usize) -> Elim {
        let nrows = rows.len();
        let mut a: Vec<Vec<u32>> = rows.to_vec();
        let mut t: Vec<Vec<u32>> = (0..nrows)
            .map(|i| {
                let mut r = vec![0u32; nrows];
                r[i] = 1;
                r
            })
            .collect();
        let pm = p as u64;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == nrows {
                break;
            }
            let Some(piv) = (r..nrows).find(|&i| a[i][c] != 0) else { continue };
            a.swap(r, piv);
            t.swap(r, piv);
            let inv = inv_mod(a[r][c], p) as u64;
            for x in a[r].iter_mut() {
                *x = (*x as u64 * inv % pm) as u32;
            }
            for x in t[r].iter_mut() {
                *x = (*x as u64 * inv % pm) as u32;
            }
            for i in 0..nrows {
                if i == r || a[i][c] == 0 {
                    continue;
                }
                let f = (p - a[i][c]) as u64;
                let (src_a, src_t) = (a[r].clone(), t[r].clone());
                for (x, y) in a[i].iter_mut().zip(&src_a) {
                    *x = ((*x as u64 + f * *y as u64) % pm) as u32;
                }
                for (x, y) in t[i].iter_mut().zip(&src_t) {
                    *x = ((*x as u64 + f * *y as u64) % pm) as u32;
                }
            }
            pivots.push(c);
            r += 1;
        }
        a.truncate(pivots.len());
        Elim { p, ncols, nrows, pivots, reduced: a, transform: t }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn nullity(&self) -> usize {
        self.ncols - self.pivots.len()
    }

    /// A solution of `A z = b` with free variables zero, if consistent.
    pub fn solve(&self, b: &[u32]) -> Option<Vec<u32>> {
        let pm = self.p as u64;
        let apply = |row: &Vec<u32>| -> u32 {
            (row.iter().zip(b).map(|(&x, &y)| x as u64 * y as u64 % pm).sum::<u64>() % pm) as u32
        };
        for r in self.rank()..self.nrows {
            if apply(&self.transform[r]) != 0 {
                return None;
            }
        }
        let mut z = vec![0u32; self.ncols];
        for (r, &c) in self.pivots.iter().enumerate() {
            z[c] = apply(&self.transform[r]);
        }
        Some(z)
    }

    /// Basis of the null space.
    pub fn kernel(&self) -> Vec<Vec<u32>> {
        let mut is_pivot = vec![false; self.ncols];
        for &c in &self.pivots {
            is_pivot[c] = true;
        }
        (0..self.ncols)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = vec![0u32; self.ncols];
                v[f] = 1;
                for (r, &c) in self.pivots.iter().enumerate() {
                    v[c] = (self.p - self.reduced[r][f]) % self.p;
                }
                v
            })
            .collect()
    }
}

/// Shared cache of eliminations keyed by the matrix itself.
#[derive(Clone, Default)]
pub struct ElimCache {
    inner: Arc<RwLock<HashMap<Vec<u32>, Arc<Elim>>>>,
}

impl ElimCache {
    pub fn get(&self, p: u32, rows: &[Vec<u32>], ncols: usize) -> Arc<Elim> {
        let key: Vec<u32> = rows.iter().flatten().copied().collect();
        if let Some(e) = self.inner.read().expect("elimination cache poisoned").get(&key) {
            return e.clone();
        }
        let e = Arc::new(Elim::new(p, rows, ncols));
        let mut map = self.inner.write().expect("elimination cache poisoned");
        if map.len() > 4096 {
            map.clear();
        }
        map.insert(key, e.clone());
        e
    }
}

/// A point of the solution set: matrix and multiplier at full precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    pub x: Mat,
    pub nu: Elem,
}

/// The affine fiber of one lifting step, in `F_p` digit coordinates.
#[derive(Clone, Debug)]
pub struct Fiber {
    pub particular: Vec<u32>,
    pub kernel: Vec<Vec<u32>>,
}

/// A congruence system over `R/p^K`.
#[derive(Clone)]
pub struct System {
    pub ring: Ring,
    ring1: Ring,
    pub n: usize,
    pub d: usize,
    pub kind: GroupKind,
    form: Option<Mat>,
    pub constraints: Vec<Constraint>,
    unit_diag: Vec<usize>,
    cache: ElimCache,
}

impl System {
    pub fn new(ring: Ring, kind: GroupKind, n: usize) -> Result<System> {
        let ring1 = ring.with_precision(1)?;
        let form = match kind {
            GroupKind::Similitude => Some(symplectic_form(&ring, n / 2)),
            GroupKind::Gl => None,
        };
        Ok(System {
            d: ring.degree(),
            ring1,
            ring,
            n,
            kind,
            form,
            constraints: Vec::new(),
            unit_diag: Vec::new(),
            cache: ElimCache::default(),
        })
    }

    /// The system whose solutions are the elements of `spec` at its precision.
    pub fn from_spec(spec: &SubgroupSpec) -> Result<System> {
        let ring = Ring::new(spec.ring)?;
        let mut sys = System::new(ring, spec.kind, spec.n)?;
        sys.add_spec_conditions(spec)?;
        Ok(sys)
    }

    pub fn with_cache(mut self, cache: ElimCache) -> System {
        self.cache = cache;
        self
    }

    pub fn has_nu(&self) -> bool {
        self.form.is_some()
    }

    /// Number of `F_p` unknowns.
    pub fn unknowns(&self) -> usize {
        self.n * self.n * self.d + usize::from(self.has_nu())
    }

    pub fn max_exponent(&self) -> u32 {
        self.constraints.iter().map(|c| c.exponent).max().unwrap_or(0)
    }

    /// Add the conditions of a spec (over the same ring and dimension).
    pub fn add_spec_conditions(&mut self, spec: &SubgroupSpec) -> Result<()> {
        self.add_spec_conditions_after(spec, None)
    }

    /// Add the conditions of a spec on `l x`, where `pre = (l, nu(l))`; with
    /// `pre = None` this is [`System::add_spec_conditions`].
    pub fn add_spec_conditions_after(&mut self, spec: &SubgroupSpec, pre: Option<(&Mat, Elem)>) -> Result<()> {
        let ring = self.ring.clone();
        let n = self.n;
        let nu_l = pre.map_or(ring.one(), |(_, v)| v);
        let lefts = |conj: Option<&Mat>| -> Option<Mat> {
            match (conj, pre) {
                (None, None) => None,
                (Some(c), None) => Some(c.clone()),
                (None, Some((l, _))) => Some(l.clone()),
                (Some(c), Some((l, _))) => Some(ring.mat_mul(c, l)),
            }
        };
        for cond in &spec.conditions {
            let left_owned = lefts(cond.conjugator.as_ref().map(|c| &c.inverse));
            let left = left_owned.as_ref();
            let right = cond.conjugator.as_ref().map(|c| &c.mat);
            let pat = &cond.pattern;
            for i in 0..n {
                for j in 0..n {
                    let e = pat.e(i, j);
                    if e > 0 {
                        let target = if i == j { ring.one() } else { ring.zero() };
                        self.add_entry(left, right, i, j, target, ring.zero(), e);
                    }
                }
                match pat.diag[i] {
                    DiagTarget::Free => {}
                    DiagTarget::Unit => {
                        if left.is_some() {
                            if pre.is_some() && cond.conjugator.is_none() {
                                // Units are detected modulo p, where the left factor is
                                // expected to be trivial.
                                continue;
                            }
                            return Err(Error::PatternInvalid("unit targets through a conjugator".into()));
                        }
                        self.unit_diag.push(i);
                    }
                    DiagTarget::EqualsEntry { k, a } => {
                        if a > 0 {
                            let mut terms = sandwich_terms(&ring, n, left, right, i, i);
                            for (idx, c) in sandwich_terms(&ring, n, left, right, k, k) {
                                terms.push((idx, ring.neg(c)));
                            }
                            self.push(terms, ring.zero(), ring.zero(), Output::Full, a);
                        }
                    }
                    DiagTarget::EqualsMultiplier { a } => {
                        if a > 0 {
                            self.add_entry(left, right, i, i, ring.zero(), nu_l, a);
                        }
                    }
                }
            }
        }
        for extra in &spec.extras {
            match extra {
                Extra::Rational { conjugator } => {
                    let left = lefts(conjugator.as_ref().map(|c| &c.inverse));
                    self.add_rational(left.as_ref(), conjugator.as_ref().map(|c| &c.mat));
                }
                Extra::MultiplierOneMod { a } => {
                    if *a > 0 {
                        self.push(Vec::new(), nu_l, ring.neg(ring.one()), Output::First, *a);
                    }
                }
            }
        }
        Ok(())
    }

    fn push(&mut self, terms: Vec<(usize, Elem)>, nu_coeff: Elem, constant: Elem, output: Output, exponent: u32) {
        let exponent = exponent.min(self.ring.k());
        self.constraints.push(Constraint { f: Affine { terms, nu_coeff, constant, output }, exponent });
    }

    /// Add `f = 0 mod p^e` and return its index.
    pub fn add_affine(&mut self, f: Affine, exponent: u32) -> usize {
        self.push(f.terms, f.nu_coeff, f.constant, f.output, exponent);
        self.constraints.len() - 1
    }

    /// `x_ij = target mod p^e`, reading the coordinates selected by `output`.
    pub fn pin_entry(&mut self, i: usize, j: usize, target: Elem, output: Output, e: u32) -> usize {
        let f = Affine {
            terms: vec![(i * self.n + j, self.ring.one())],
            nu_coeff: Elem(0, 0),
            constant: self.ring.neg(target),
            output,
        };
        self.add_affine(f, e)
    }

    /// Replace the target of a constraint added by [`System::pin_entry`].
    pub fn set_pin_target(&mut self, idx: usize, target: Elem) {
        self.constraints[idx].f.constant = self.ring.neg(target);
    }

    /// `(L x R)_ij - target - nu_coeff * nu = 0 mod p^e`.
    #[allow(clippy::too_many_arguments)]
    pub fn add_entry(&mut self, left: Option<&Mat>, right: Option<&Mat>, i: usize, j: usize, target: Elem, nu_coeff: Elem, e: u32) {
        let terms = sandwich_terms(&self.ring, self.n, left, right, i, j);
        let (c, nc) = (self.ring.neg(target), self.ring.neg(nu_coeff));
        self.push(terms, nc, c, Output::Full, e);
    }

    /// Every entry of `L x R` rational.
    pub fn add_rational(&mut self, left: Option<&Mat>, right: Option<&Mat>) {
        if self.ring.is_rational() {
            return;
        }
        let k = self.ring.k();
        for i in 0..self.n {
            for j in 0..self.n {
                let terms = sandwich_terms(&self.ring, self.n, left, right, i, j);
                self.push(terms, Elem(0, 0), Elem(0, 0), Output::Irrational, k);
            }
        }
    }

    fn out_len(&self, o: Output) -> usize {
        match o {
            Output::Full => self.d,
            _ => 1,
        }
    }

    #[inline]
    fn out_coords(&self, ring: &Ring, v: Elem, o: Output, buf: &mut Vec<u32>) {
        match (o, ring.kind()) {
            (Output::Full, RingKind::Rational) => buf.push(v.0),
            (Output::Full, _) => {
                buf.push(v.0);
                buf.push(v.1);
            }
            (Output::Irrational, RingKind::Split) => buf.push(ring.sub(Elem(v.0, 0), Elem(v.1, 0)).0),
            (Output::Irrational, _) => buf.push(v.1),
            (Output::First, _) => buf.push(v.0),
        }
    }

    /// Value of a functional at full precision.
    pub fn eval(&self, ring: &Ring, f: &Affine, x: &Mat, nu: Elem) -> Elem {
        let mut acc = f.constant;
        for &(idx, c) in &f.terms {
            let v = x.entries()[idx];
            if v != Elem(0, 0) {
                acc = ring.add(acc, ring.mul(c, v));
            }
        }
        if f.nu_coeff != Elem(0, 0) {
            acc = ring.add(acc, ring.mul(f.nu_coeff, nu));
        }
        acc
    }

    /// Whether `(x, nu)` satisfies every constraint and the group relation at full precision.
    pub fn satisfies(&self, x: &Mat, nu: Elem) -> bool {
        self.satisfies_at(&self.ring, x, nu)
    }

    fn satisfies_at(&self, ring: &Ring, x: &Mat, nu: Elem) -> bool {
        let k = ring.k();
        if !self.group_ok(ring, x, nu) {
            return false;
        }
        let mut buf = Vec::with_capacity(2);
        for c in &self.constraints {
            let e = c.exponent.min(k);
            if e == 0 {
                continue;
            }
            buf.clear();
            let v = self.eval(ring, &c.f, x, nu);
            self.out_coords(ring, v, c.f.output, &mut buf);
            let q = (ring.p() as u64).pow(e);
            if buf.iter().any(|&b| b as u64 % q != 0) {
                return false;
            }
        }
        true
    }

    fn group_ok(&self, ring: &Ring, x: &Mat, nu: Elem) -> bool {
        match &self.form {
            None => ring.is_unit(ring.det(x)),
            Some(_) => {
                if !ring.is_rational_elem(nu) || !ring.is_unit(nu) {
                    return false;
                }
                let j = symplectic_form(ring, self.n / 2);
                let lhs = ring.mat_mul(&ring.mat_mul(&ring.mat_adjoint(x), &j), x);
                lhs == ring.mat_scale(&j, nu)
            }
        }
    }

    fn basis_elem(&self, c: usize) -> Elem {
        if c == 0 {
            Elem(1, 0)
        } else {
            Elem(0, 1)
        }
    }

    fn nu_basis(&self) -> Elem {
        self.ring.one()
    }

    fn reduce1(&self, v: Elem) -> Elem {
        let p = self.ring.p();
        Elem(v.0 % p, v.1 % p)
    }

    /// Rows of the linearized system for a step into level `level`, at base point `x0` (mod p).
    fn linear_rows(&self, x0: &Mat, level: u32) -> Vec<Vec<u32>> {
        let r1 = &self.ring1;
        let n = self.n;
        let d = self.d;
        let ncols = self.unknowns();
        let p = r1.p();
        let mut rows: Vec<Vec<u32>> = Vec::new();
        if let Some(_) = &self.form {
            let j1 = symplectic_form(r1, n / 2);
            let a = r1.mat_mul(&r1.mat_adjoint(x0), &j1);
            let b = r1.mat_mul(&j1, x0);
            let mut block = vec![vec![0u32; ncols]; n * n * d];
            let mut buf = Vec::with_capacity(2);
            for ea in 0..n {
                for eb in 0..n {
                    for c in 0..d {
                        let col = (ea * n + eb) * d + c;
                        let beta = self.basis_elem(c);
                        let cb = r1.conj(beta);
                        // (A Y)_{r, eb} = A_{r, ea} beta
                        for r in 0..n {
                            let v = r1.mul(a.get(r, ea), beta);
                            if v != Elem(0, 0) {
                                buf.clear();
                                self.out_coords(r1, v, Output::Full, &mut buf);
                                for (o, &val) in buf.iter().enumerate() {
                                    let row = &mut block[(r * n + eb) * d + o];
                                    row[col] = (row[col] + val) % p;
                                }
                            }
                        }
                        // (conj(Y)^T B)_{eb, s} = conj(beta) B_{ea, s}
                        for s in 0..n {
                            let v = r1.mul(cb, b.get(ea, s));
                            if v != Elem(0, 0) {
                                buf.clear();
                                self.out_coords(r1, v, Output::Full, &mut buf);
                                for (o, &val) in buf.iter().enumerate() {
                                    let row = &mut block[(eb * n + s) * d + o];
                                    row[col] = (row[col] + val) % p;
                                }
                            }
                        }
                    }
                }
            }
            let col = n * n * d;
            for r in 0..n {
                for s in 0..n {
                    let v = r1.neg(r1.mul(j1.get(r, s), self.nu_basis()));
                    if v != Elem(0, 0) {
                        buf.clear();
                        self.out_coords(r1, self.reduce1(v), Output::Full, &mut buf);
                        for (o, &val) in buf.iter().enumerate() {
                            block[(r * n + s) * d + o][col] = val;
                        }
                    }
                }
            }
            rows.extend(block);
        }
        let mut buf = Vec::with_capacity(2);
        for c in self.constraints.iter().filter(|c| c.exponent >= level) {
            let len = self.out_len(c.f.output);
            let mut block = vec![vec![0u32; ncols]; len];
            for &(idx, coeff) in &c.f.terms {
                let coeff = self.reduce1(coeff);
                for cc in 0..d {
                    let v = r1.mul(coeff, self.basis_elem(cc));
                    buf.clear();
                    self.out_coords(r1, v, c.f.output, &mut buf);
                    for (o, &val) in buf.iter().enumerate() {
                        block[o][idx * d + cc] = (block[o][idx * d + cc] + val) % p;
                    }
                }
            }
            if self.has_nu() {
                let v = r1.mul(self.reduce1(c.f.nu_coeff), self.nu_basis());
                buf.clear();
                self.out_coords(r1, v, c.f.output, &mut buf);
                for (o, &val) in buf.iter().enumerate() {
                    block[o][ncols - 1] = val;
                }
            }
            rows.extend(block);
        }
        rows
    }

    /// Right-hand side for lifting `(x, nu)` from level `j` to `j + 1`:
    /// minus the residuals divided by `p^j`. `None` if some active residual is
    /// not divisible by `p^j`.
    fn rhs(&self, x: &Mat, nu: Elem, j: u32) -> Option<Vec<u32>> {
        let ring = &self.ring;
        let p = ring.p();
        let q = (p as u64).pow(j);
        let mut out = Vec::new();
        let push = |coords: &[u32], out: &mut Vec<u32>| -> bool {
            for &c in coords {
                if c as u64 % q != 0 {
                    return false;
                }
                let digit = ((c as u64 / q) % p as u64) as u32;
                out.push((p - digit) % p);
            }
            true
        };
        let mut buf = Vec::with_capacity(2);
        if self.form.is_some() {
            let jm = symplectic_form(ring, self.n / 2);
            let lhs = ring.mat_mul(&ring.mat_mul(&ring.mat_adjoint(x), &jm), x);
            let res = ring.mat_sub(&lhs, &ring.mat_scale(&jm, nu));
            for &v in res.entries() {
                buf.clear();
                self.out_coords(ring, v, Output::Full, &mut buf);
                if !push(&buf, &mut out) {
                    return None;
                }
            }
        }
        for c in self.constraints.iter().filter(|c| c.exponent > j) {
            buf.clear();
            let v = self.eval(ring, &c.f, x, nu);
            self.out_coords(ring, v, c.f.output, &mut buf);
            if !push(&buf, &mut out) {
                return None;
            }
        }
        Some(out)
    }

    fn elim_at(&self, x: &Mat, level: u32) -> Arc<Elim> {
        let x0 = self.ring.mat_reduce_to(x, &self.ring1);
        let rows = self.linear_rows(&x0, level);
        self.cache.get(self.ring.p(), &rows, self.unknowns())
    }

    /// Dimension of the linearized solution space at `x` for a step into `level`.
    pub fn nullity_at(&self, x: &Mat, level: u32) -> usize {
        self.elim_at(x, level).nullity()
    }

    /// The affine fiber of lifts of `(x, nu)` from level `j` to `j + 1`, or
    /// `None` if it is empty.
    pub fn fiber(&self, x: &Mat, nu: Elem, j: u32) -> Option<Fiber> {
        let b = self.rhs(x, nu, j)?;
        let e = self.elim_at(x, j + 1);
        let particular = e.solve(&b)?;
        Some(Fiber { particular, kernel: e.kernel() })
    }

    /// `(x + p^j Z, nu + p^j lambda)` for digit vector `z`.
    pub fn apply(&self, x: &Mat, nu: Elem, j: u32, z: &[u32]) -> Point {
        let ring = &self.ring;
        let q = ring.from_int((ring.p() as i64).pow(j));
        let n = self.n;
        let d = self.d;
        let mut out = x.clone();
        for idx in 0..n * n {
            let v = match d {
                1 => Elem(z[idx], 0),
                _ => Elem(z[idx * 2], z[idx * 2 + 1]),
            };
            if v != Elem(0, 0) {
                let cur = out.entries()[idx];
                out.entries_mut()[idx] = ring.add(cur, ring.mul(q, v));
            }
        }
        let nu = if self.has_nu() {
            let lam = z[n * n * d];
            ring.add(nu, ring.mul(q, ring.mul(ring.from_int(lam as i64), self.nu_basis())))
        } else {
            nu
        };
        Point { x: out, nu }
    }

    /// Combine a fiber's particular solution with kernel coefficients.
    pub fn fiber_point(&self, fiber: &Fiber, coeffs: &[u32]) -> Vec<u32> {
        let p = self.ring.p();
        let mut z = fiber.particular.clone();
        for (v, &c) in fiber.kernel.iter().zip(coeffs) {
            if c == 0 {
                continue;
            }
            for (zi, &vi) in z.iter_mut().zip(v) {
                *zi = ((*zi as u64 + c as u64 * vi as u64) % p as u64) as u32;
            }
        }
        z
    }

    /// Lift `(x, nu)`, satisfying the system modulo `p^from`, to full
    /// precision, choosing fiber points with `pick` (which receives the fiber
    /// dimension and returns coefficients).
    pub fn lift_with(&self, x: &Mat, nu: Elem, from: u32, mut pick: impl FnMut(usize) -> Vec<u32>) -> Option<Point> {
        let mut pt = Point { x: x.clone(), nu };
        for j in from..self.ring.k() {
            let fiber = self.fiber(&pt.x, pt.nu, j)?;
            let coeffs = pick(fiber.kernel.len());
            let z = self.fiber_point(&fiber, &coeffs);
            pt = self.apply(&pt.x, pt.nu, j, &z);
        }
        Some(pt)
    }

    /// Lift with uniformly random fiber choices.
    pub fn lift_random<R: Rng>(&self, x: &Mat, nu: Elem, from: u32, rng: &mut R) -> Option<Point> {
        let p = self.ring.p();
        self.lift_with(x, nu, from, |k| (0..k).map(|_| rng.gen_range(0..p)).collect())
    }

    /// Depth-first search for a full lift, backtracking over fiber points.
    /// Fibers with at most `branch` points are explored exhaustively, larger
    /// ones through `branch` random points; at most `budget` fibers are
    /// solved. Exhaustive exploration returning `None` proves no lift exists.
    pub fn lift_search<R: Rng>(
        &self,
        x: &Mat,
        nu: Elem,
        from: u32,
        branch: u64,
        budget: &mut u64,
        rng: &mut R,
    ) -> Option<Point> {
        if from >= self.ring.k() {
            return Some(Point { x: x.clone(), nu });
        }
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let fiber = self.fiber(x, nu, from)?;
        let p = self.ring.p() as u64;
        let dim = fiber.kernel.len();
        let total = p.checked_pow(dim as u32).unwrap_or(u64::MAX);
        let digits = |mut idx: u64| -> Vec<u32> {
            (0..dim)
                .map(|_| {
                    let d = (idx % p) as u32;
                    idx /= p;
                    d
                })
                .collect()
        };
        let choices: Vec<Vec<u32>> = if total <= branch {
            (0..total).map(digits).collect()
        } else {
            let mut v = vec![vec![0; dim]];
            v.extend((1..branch).map(|_| (0..dim).map(|_| rng.gen_range(0..p as u32)).collect()));
            v
        };
        for c in choices {
            let z = self.fiber_point(&fiber, &c);
            let pt = self.apply(x, nu, from, &z);
            if let Some(done) = self.lift_search(&pt.x, pt.nu, from + 1, branch, budget, rng) {
                return Some(done);
            }
            if *budget == 0 {
                return None;
            }
        }
        None
    }

    /// Lift choosing the particular solution at every step.
    pub fn lift_canonical(&self, x: &Mat, nu: Elem, from: u32) -> Option<Point> {
        self.lift_with(x, nu, from, |k| vec![0; k])
    }

    /// Lift a level-one point (given over `F_p`) to full precision.
    pub fn lift_level_one<R: Rng>(&self, x1: &Mat, nu1: Elem, rng: &mut R) -> Option<Point> {
        let x = Mat::from_fn(self.n, |i, j| x1.get(i, j));
        self.lift_random(&x, nu1, 1, rng)
    }

    /// Every solution modulo `p` (as matrices over `F_p` with multiplier), by
    /// row-wise backtracking. Fails if more than `cap` solutions exist.
    pub fn level_one(&self, cap: u64) -> Result<Vec<Point>> {
        Level1::new(self).enumerate(cap)
    }

    /// Every solution modulo `p^K`, enumerated level by level through the
    /// complete affine fibers. Fails if any level exceeds `cap` points.
    pub fn enumerate_all(&self, cap: u64) -> Result<Vec<Point>> {
        let mut level: Vec<Point> = self.level_one(cap)?;
        let p = self.ring.p() as u64;
        for j in 1..self.ring.k() {
            let mut total: u64 = 0;
            let fibers: Vec<Option<Fiber>> = level.par_iter().map(|pt| self.fiber(&pt.x, pt.nu, j)).collect();
            for f in fibers.iter().flatten() {
                total = total.saturating_add(p.saturating_pow(f.kernel.len() as u32));
            }
            if total > cap {
                return Err(Error::InfeasibleEnumeration(format!(
                    "level {} has {total} points, cap is {cap}",
                    j + 1
                )));
            }
            let next: Vec<Point> = level
                .par_iter()
                .zip(fibers.par_iter())
                .flat_map_iter(|(pt, f)| {
                    let mut out = Vec::new();
                    if let Some(f) = f {
                        let dim = f.kernel.len();
                        let count = p.pow(dim as u32);
                        for idx in 0..count {
                            let mut coeffs = Vec::with_capacity(dim);
                            let mut t = idx;
                            for _ in 0..dim {
                                coeffs.push((t % p) as u32);
                                t /= p;
                            }
                            let z = self.fiber_point(f, &coeffs);
                            out.push(self.apply(&pt.x, pt.nu, j, &z));
                        }
                    }
                    out
                })
                .collect();
            level = next;
        }
        Ok(level)
    }
}

/// Row-wise backtracking over `F_p`.
struct Level1<'a> {
    sys: &'a System,
    ring: Ring,
    /// Allowed values of each entry (from single-entry constraints).
    domains: Vec<Vec<Elem>>,
    /// Constraints (reduced mod p) checked once their last row is assigned.
    by_row: Vec<Vec<Affine>>,
    /// Constraints depending on the multiplier, checked at the given row.
    nu_row: usize,
}

impl<'a> Level1<'a> {
    fn new(sys: &'a System) -> Self {
        let ring = sys.ring1.clone();
        let n = sys.n;
        let red = |v: Elem| sys.reduce1(v);
        let all = ring.elements();
        let mut domains: Vec<Vec<Elem>> = vec![all.clone(); n * n];
        let mut by_row: Vec<Vec<Affine>> = vec![Vec::new(); n];
        let nu_row = if sys.has_nu() { n / 2 } else { 0 };
        for c in &sys.constraints {
            if c.exponent == 0 {
                continue;
            }
            let f = Affine {
                terms: c.f.terms.iter().map(|&(i, v)| (i, red(v))).filter(|&(_, v)| v != Elem(0, 0)).collect(),
                nu_coeff: red(c.f.nu_coeff),
                constant: red(c.f.constant),
                output: c.f.output,
            };
            let uses_nu = f.nu_coeff != Elem(0, 0);
            if f.terms.len() == 1 && !uses_nu {
                let idx = f.terms[0].0;
                let probe = |v: Elem| {
                    let mut m = Mat::zero(n);
                    m.entries_mut()[idx] = v;
                    let val = sys.eval(&ring, &f, &m, Elem(0, 0));
                    let mut buf = Vec::new();
                    sys.out_coords(&ring, val, f.output, &mut buf);
                    buf.iter().all(|&b| b == 0)
                };
                domains[idx].retain(|&v| probe(v));
                continue;
            }
            let mut row = f.terms.iter().map(|&(i, _)| i / n).max().unwrap_or(0);
            if uses_nu {
                row = row.max(nu_row);
            }
            by_row[row].push(f);
        }
        Level1 { sys, ring, domains, by_row, nu_row }
    }

    fn row_candidates(&self, r: usize) -> Vec<Vec<Elem>> {
        let n = self.sys.n;
        let mut out: Vec<Vec<Elem>> = vec![Vec::with_capacity(n)];
        for c in 0..n {
            let dom = &self.domains[r * n + c];
            let mut next = Vec::with_capacity(out.len() * dom.len());
            for partial in &out {
                for &v in dom {
                    let mut row = partial.clone();
                    row.push(v);
                    next.push(row);
                }
            }
            out = next;
        }
        out
    }

    /// `r_a J conj(r_b)^T` with `J` antidiagonal.
    fn pair(&self, ra: &[Elem], rb: &[Elem]) -> Elem {
        let ring = &self.ring;
        let n = ra.len();
        let g = n / 2;
        let mut acc = ring.zero();
        for i in 0..n {
            let t = ring.mul(ra[i], ring.conj(rb[n - 1 - i]));
            acc = if i < g { ring.add(acc, t) } else { ring.sub(acc, t) };
        }
        acc
    }

    fn enumerate(&self, cap: u64) -> Result<Vec<Point>> {
        use std::sync::atomic::AtomicU64;
        let n = self.sys.n;
        let cands: Vec<Vec<Vec<Elem>>> = (0..n).map(|r| self.row_candidates(r)).collect();
        let count = AtomicU64::new(0);
        let first: Vec<&Vec<Elem>> = cands[0].iter().collect();
        let results: Vec<Result<Vec<Point>>> = first
            .par_iter()
            .map(|row0| {
                let mut rows: Vec<Vec<Elem>> = vec![(*row0).clone()];
                let mut out = Vec::new();
                let mut nu = None;
                if !self.row_ok(&rows, &mut nu) {
                    return Ok(out);
                }
                self.dfs(&cands, &mut rows, nu, &mut out, &count, cap)?;
                Ok(out)
            })
            .collect();
        let mut all = Vec::new();
        for r in results {
            all.extend(r?);
        }
        if all.len() as u64 > cap {
            return Err(Error::InfeasibleEnumeration(format!("more than {cap} points modulo p")));
        }
        all.sort_by(|a, b| a.x.cmp(&b.x));
        Ok(all)
    }

    fn dfs(
        &self,
        cands: &[Vec<Vec<Elem>>],
        rows: &mut Vec<Vec<Elem>>,
        nu: Option<Elem>,
        out: &mut Vec<Point>,
        count: &std::sync::atomic::AtomicU64,
        cap: u64,
    ) -> Result<()> {
        use std::sync::atomic::Ordering;
        let n = self.sys.n;
        let r = rows.len();
        if r == n {
            if !self.leaf_ok(rows) {
                return Ok(());
            }
            let c = count.fetch_add(1, Ordering::Relaxed) + 1;
            if c > cap {
                return Err(Error::InfeasibleEnumeration(format!("more than {cap} points modulo p")));
            }
            let x = Mat::from_rows(rows.clone());
            out.push(Point { x, nu: nu.unwrap_or_else(|| self.ring.one()) });
            return Ok(());
        }
        for cand in &cands[r] {
            rows.push(cand.clone());
            let mut nu2 = nu;
            if self.row_ok(rows, &mut nu2) {
                self.dfs(cands, rows, nu2, out, count, cap)?;
            }
            rows.pop();
        }
        Ok(())
    }

    /// Check everything that becomes decidable once the last row in `rows` is set.
    fn row_ok(&self, rows: &[Vec<Elem>], nu: &mut Option<Elem>) -> bool {
        let ring = &self.ring;
        let n = self.sys.n;
        let r = rows.len() - 1;
        if self.sys.has_nu() {
            let g = n / 2;
            for a in 0..=r {
                let v = self.pair(&rows[a], &rows[r]);
                let jar = if a + r == n - 1 {
                    if a < g {
                        1
                    } else {
                        -1
                    }
                } else {
                    0
                };
                if jar == 0 {
                    if v != Elem(0, 0) {
                        return false;
                    }
                    continue;
                }
                match *nu {
                    None => {
                        // first antidiagonal pair fixes nu
                        let val = if jar == 1 { v } else { ring.neg(v) };
                        if !ring.is_rational_elem(val) || !ring.is_unit(val) {
                            return false;
                        }
                        *nu = Some(val);
                    }
                    Some(m) => {
                        let target = if jar == 1 { m } else { ring.neg(m) };
                        if v != target {
                            return false;
                        }
                    }
                }
            }
        }
        if !self.by_row[r].is_empty() {
            let mut m = Mat::zero(n);
            for (i, row) in rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    m.set(i, j, v);
                }
            }
            let nuv = nu.unwrap_or(Elem(0, 0));
            let mut buf = Vec::with_capacity(2);
            for f in &self.by_row[r] {
                if f.nu_coeff != Elem(0, 0) && nu.is_none() && r >= self.nu_row {
                    return false;
                }
                buf.clear();
                let val = self.sys.eval(ring, f, &m, nuv);
                self.sys.out_coords(ring, val, f.output, &mut buf);
                if buf.iter().any(|&b| b != 0) {
                    return false;
                }
            }
        }
        true
    }

    fn leaf_ok(&self, rows: &[Vec<Elem>]) -> bool {
        let ring = &self.ring;
        for &i in &self.sys.unit_diag {
            if !ring.is_unit(rows[i][i]) {
                return false;
            }
        }
        if self.sys.form.is_none() {
            let m = Mat::from_rows(rows.to_vec());
            return ring.is_unit(ring.det(&m));
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::RingSpec;

    #[test]
    fn elim_solves_and_spans_kernel() {
        let p = 5;
        let rows = vec![vec![1, 2, 0, 4], vec![2, 4, 1, 3], vec![3, 1, 1, 2]];
        let e = Elim::new(p, &rows, 4);
        let b = vec![1, 0, 1];
        assert!(e.solve(&[1, 0, 3]).is_none());
        let z = e.solve(&b).unwrap();
        for (row, &bi) in rows.iter().zip(&b) {
            let v: u32 = row.iter().zip(&z).map(|(a, c)| a * c).sum::<u32>() % p;
            assert_eq!(v, bi);
        }
        for k in e.kernel() {
            for row in &rows {
                assert_eq!(row.iter().zip(&k).map(|(a, c)| a * c).sum::<u32>() % p, 0);
            }
        }
        assert_eq!(e.rank() + e.nullity(), 4);
    }

    #[test]
    fn level_one_counts() {
        let r = Ring::new(RingSpec::rational(3, 1)).unwrap();
        let gl2 = System::new(r.clone(), GroupKind::Gl, 2).unwrap();
        assert_eq!(gl2.level_one(1_000_000).unwrap().len(), 48);
        let r2 = Ring::new(RingSpec::rational(2, 1)).unwrap();
        let gsp4 = System::new(r2, GroupKind::Similitude, 4).unwrap();
        assert_eq!(gsp4.level_one(1_000_000).unwrap().len(), 720);
    }

    #[test]
    fn enumerate_all_gl2_mod_4() {
        let r = Ring::new(RingSpec::rational(2, 2)).unwrap();
        let sys = System::new(r.clone(), GroupKind::Gl, 2).unwrap();
        let all = sys.enumerate_all(1_000_000).unwrap();
        assert_eq!(all.len(), 96);
        let mut seen = std::collections::HashSet::new();
        for pt in &all {
            assert!(sys.satisfies(&pt.x, pt.nu));
            assert!(seen.insert(pt.x.clone()));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let r = Ring::new(RingSpec::rational(2, 1)).unwrap();
        let gsp4 = System::new(r, GroupKind::Similitude, 4).unwrap();
        assert!(matches!(gsp4.level_one(10), Err(Error::InfeasibleEnumeration(_))));
    }
}
