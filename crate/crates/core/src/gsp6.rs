//! The stabilizer in `Klin_H x_{mu,det} GL_2` of the orbit of `u Bbar` in
//! the flag variety of `GSp_6`, over `F_p`.
//!
//! `GSp_4` acts on coordinates `(1, 2, 5, 6)` and `GL_2` on `(3, 4)`; with the
//! antidiagonal form this is a similitude embedding with shared multiplier.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::report::{run_check, CheckReport};

type M6 = [[u32; 6]; 6];
type M4 = [[u32; 4]; 4];
type M2 = [[u32; 2]; 2];

/// The displayed orbit representative.
pub const U_DISPLAYED: [[i64; 6]; 6] = [
    [1, 2, 1, -1, 1, 1],
    [0, 3, 2, 0, 1, -1],
    [0, 2, 2, 1, 0, -1],
    [0, 1, 1, 2, -1, 0],
    [0, 0, 0, -1, 1, -1],
    [0, 0, 0, 0, 0, 1],
];

/// Coordinates of the `GSp_4` factor.
pub const H_COORDS: [usize; 4] = [0, 1, 4, 5];
/// Coordinates of the `GL_2` factor.
pub const GL2_COORDS: [usize; 2] = [2, 3];

/// How the fiber product is searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Conjugate every element of the fiber product.
    Full,
    /// Split the linear condition between the two factors and join on it.
    Join,
}

#[derive(Clone, Copy)]
struct Fp(u32);

impl Fp {
    fn red(self, x: i64) -> u32 {
        x.rem_euclid(self.0 as i64) as u32
    }
    fn mul(self, a: u32, b: u32) -> u32 {
        (a as u64 * b as u64 % self.0 as u64) as u32
    }
    fn add(self, a: u32, b: u32) -> u32 {
        (a + b) % self.0
    }
    fn inv(self, a: u32) -> Option<u32> {
        (1..self.0).find(|&b| self.mul(a, b) == 1)
    }
}

fn mat_mul6(f: Fp, a: &M6, b: &M6) -> M6 {
    let mut c = [[0u32; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            let mut s = 0u64;
            for k in 0..6 {
                s += a[i][k] as u64 * b[k][j] as u64;
            }
            c[i][j] = (s % f.0 as u64) as u32;
        }
    }
    c
}

fn form(f: Fp, n: usize) -> Vec<Vec<u32>> {
    let mut j = vec![vec![0; n]; n];
    for i in 0..n {
        j[i][n - 1 - i] = if i < n / 2 { 1 } else { f.red(-1) };
    }
    j
}

/// `nu` with `a^T J a = nu J`, if any.
fn gsp_multiplier6(f: Fp, a: &M6) -> Option<u32> {
    let j = form(f, 6);
    let mut at_j = [[0u32; 6]; 6];
    for r in 0..6 {
        for c in 0..6 {
            at_j[r][c] = (0..6).fold(0, |s, k| f.add(s, f.mul(a[k][r], j[k][c])));
        }
    }
    let prod = mat_mul6(f, &at_j, a);
    let nu = prod[0][5];
    (nu != 0 && (0..6).all(|r| (0..6).all(|c| prod[r][c] == f.mul(nu, j[r][c])))).then_some(nu)
}

/// `a^-1` over `F_p` by Gauss-Jordan.
fn inverse6(f: Fp, a: &M6) -> Option<M6> {
    let mut m = *a;
    let mut inv = [[0u32; 6]; 6];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1;
    }
    for c in 0..6 {
        let piv = (c..6).find(|&r| m[r][c] != 0)?;
        m.swap(c, piv);
        inv.swap(c, piv);
        let s = f.inv(m[c][c])?;
        for k in 0..6 {
            m[c][k] = f.mul(m[c][k], s);
            inv[c][k] = f.mul(inv[c][k], s);
        }
        for r in 0..6 {
            if r != c && m[r][c] != 0 {
                let t = f.0 - m[r][c];
                for k in 0..6 {
                    m[r][k] = f.add(m[r][k], f.mul(t, m[c][k]));
                    inv[r][k] = f.add(inv[r][k], f.mul(t, inv[c][k]));
                }
            }
        }
    }
    Some(inv)
}

fn embed(h: &M4, g: &M2) -> M6 {
    let mut x = [[0u32; 6]; 6];
    for a in 0..4 {
        for b in 0..4 {
            x[H_COORDS[a]][H_COORDS[b]] = h[a][b];
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            x[GL2_COORDS[a]][GL2_COORDS[b]] = g[a][b];
        }
    }
    x
}

/// Row pairing `r J s^T` for the `GSp_4` form.
fn pair4(f: Fp, r: &[u32; 4], s: &[u32; 4]) -> u32 {
    let a = f.mul(r[0], s[3]) + f.mul(r[1], s[2]);
    let b = f.mul(r[2], s[1]) + f.mul(r[3], s[0]);
    f.red(a as i64 - b as i64)
}

/// `Klin_H(F_p)`: elements of `GSp_4` with last row exactly `e_4`, with their
/// multipliers. The rows satisfy `h J h^T = mu J`.
pub fn klingen_elements(p: u32) -> Vec<(M4, u32)> {
    let f = Fp(p);
    let e4 = [0, 0, 0, 1];
    let all: Vec<[u32; 4]> = (0..p.pow(4))
        .map(|mut i| {
            let mut v = [0; 4];
            for x in v.iter_mut() {
                *x = i % p;
                i /= p;
            }
            v
        })
        .collect();
    let isotropic_to_e4: Vec<[u32; 4]> = all.iter().copied().filter(|v| pair4(f, v, &e4) == 0).collect();
    all.par_iter()
        .flat_map_iter(|r1| {
            let mu = pair4(f, r1, &e4);
            let mut out = Vec::new();
            if mu != 0 {
                let orth: Vec<&[u32; 4]> = isotropic_to_e4.iter().filter(|v| pair4(f, r1, v) == 0).collect();
                for r2 in &orth {
                    for r3 in &orth {
                        if pair4(f, r2, r3) == mu {
                            out.push(([*r1, **r2, **r3, e4], mu));
                        }
                    }
                }
            }
            out.into_iter()
        })
        .collect()
}

/// `GL_2(F_p)` grouped by determinant.
fn gl2_by_det(p: u32) -> HashMap<u32, Vec<M2>> {
    let f = Fp(p);
    let mut out: HashMap<u32, Vec<M2>> = HashMap::new();
    for i in 0..p.pow(4) {
        let g = [[i % p, (i / p) % p], [(i / p / p) % p, (i / p / p / p) % p]];
        let d = f.red(f.mul(g[0][0], g[1][1]) as i64 - f.mul(g[0][1], g[1][0]) as i64);
        if d != 0 {
            out.entry(d).or_default().push(g);
        }
    }
    out
}

/// One element of the stabilizer.
#[derive(Clone, Debug, Serialize)]
pub struct StabilizerElement {
    pub x: M6,
    /// `u^-1 x u`.
    pub conjugate: M6,
    pub multiplier: u32,
}

/// Result of the stabilizer search.
#[derive(Clone, Debug, Serialize)]
pub struct Stabilizer {
    pub p: u32,
    pub method: Method,
    pub klingen_order: usize,
    pub fiber_product_order: u64,
    pub u_multiplier: u32,
    pub elements: Vec<StabilizerElement>,
}

/// Elements `x` of the fiber product with `u^-1 x u` lower triangular.
pub fn stabilizer(p: u32, method: Method) -> Result<Stabilizer> {
    if p < 5 || !(2..p).all(|d| p % d != 0) {
        return Err(Error::InvalidRing(format!("the stabilizer check needs a prime p >= 5, got {p}")));
    }
    let f = Fp(p);
    let mut u = [[0u32; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            u[i][j] = f.red(U_DISPLAYED[i][j]);
        }
    }
    let u_multiplier = gsp_multiplier6(f, &u)
        .ok_or_else(|| Error::NotInGroup(format!("the displayed u is not a symplectic similitude mod {p}")))?;
    let u_inv = inverse6(f, &u).ok_or_else(|| Error::NonUnit("det u".into()))?;
    let klin = klingen_elements(p);
    let gl2 = gl2_by_det(p);
    let fiber: u64 = klin.iter().map(|(_, mu)| gl2.get(mu).map_or(0, |v| v.len() as u64)).sum();
    let upper: Vec<(usize, usize)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
    // (u^-1 x u)_ij as a linear form in the entries of x.
    let coeff = |i: usize, j: usize, k: usize, l: usize| f.mul(u_inv[i][k], u[l][j]);
    let conj_entry = |x: &M6, i: usize, j: usize| -> u32 {
        let mut s = 0u64;
        for k in 0..6 {
            for l in 0..6 {
                if x[k][l] != 0 {
                    s += coeff(i, j, k, l) as u64 * x[k][l] as u64;
                }
            }
        }
        (s % p as u64) as u32
    };
    let zero2 = [[0; 2]; 2];
    let zero4 = [[0; 4]; 4];
    let hits: Vec<M6> = match method {
        Method::Full => klin
            .par_iter()
            .flat_map_iter(|(h, mu)| {
                gl2.get(mu)
                    .into_iter()
                    .flatten()
                    .map(|g| embed(h, g))
                    .filter(|x| upper.iter().all(|&(i, j)| conj_entry(x, i, j) == 0))
                    .collect::<Vec<_>>()
            })
            .collect(),
        Method::Join => {
            let lin = |x: &M6| -> Vec<u32> { upper.iter().map(|&(i, j)| conj_entry(x, i, j)).collect() };
            let mut table: HashMap<(u32, Vec<u32>), Vec<M2>> = HashMap::new();
            for (d, gs) in &gl2 {
                for g in gs {
                    table.entry((*d, lin(&embed(&zero4, g)))).or_default().push(*g);
                }
            }
            klin.par_iter()
                .flat_map_iter(|(h, mu)| {
                    let key: Vec<u32> = lin(&embed(h, &zero2)).iter().map(|&v| (p - v) % p).collect();
                    table
                        .get(&(*mu, key))
                        .into_iter()
                        .flatten()
                        .map(|g| embed(h, g))
                        .collect::<Vec<_>>()
                })
                .collect()
        }
    };
    let mut elements = Vec::new();
    for x in hits {
        let multiplier = gsp_multiplier6(f, &x)
            .ok_or_else(|| Error::NotInGroup("an embedded element is not a symplectic similitude".into()))?;
        let conjugate = mat_mul6(f, &mat_mul6(f, &u_inv, &x), &u);
        elements.push(StabilizerElement { x, conjugate, multiplier });
    }
    elements.sort_by_key(|e| e.multiplier);
    Ok(Stabilizer { p, method, klingen_order: klin.len(), fiber_product_order: fiber, u_multiplier, elements })
}

/// The stabilizer has `p - 1` elements, is closed under multiplication,
/// maps bijectively onto `F_p^*` by the multiplier, and each `u^-1 x u` has
/// diagonal `(x, 1, x, 1, x, 1)`.
pub fn gsp6_stabilizer_check(p: u32, method: Option<Method>, seed: u64) -> CheckReport {
    run_check("gsp6-stabilizer", seed, |b| {
        let method = method.unwrap_or(if p <= 5 { Method::Full } else { Method::Join });
        b.param("p", p).param("method", method);
        b.param("embedding", "GSp4 on coordinates (1,2,5,6), GL2 on (3,4)");
        let st = stabilizer(p, method)?;
        let f = Fp(p);
        b.param("klingen_order", st.klingen_order).param("fiber_product_order", st.fiber_product_order);
        b.param("u_multiplier", st.u_multiplier);
        let mut multipliers: Vec<u32> = st.elements.iter().map(|e| e.multiplier).collect();
        multipliers.dedup();
        let bijective = multipliers.len() == st.elements.len() && multipliers == (1..p).collect::<Vec<_>>();
        let mut shape_ok = true;
        for e in &st.elements {
            let d: Vec<u32> = (0..6).map(|i| e.conjugate[i][i]).collect();
            let x = e.multiplier;
            if d != [x, 1, x, 1, x, 1] {
                shape_ok = false;
                b.counterexample(format!("u^-1 x u has diagonal {d:?} with multiplier {x}"));
            }
        }
        let set: Vec<M6> = st.elements.iter().map(|e| e.x).collect();
        let closed = set.iter().all(|a| set.iter().all(|c| set.contains(&mat_mul6(f, a, c))));
        let diagonal = st.elements.iter().all(|e| (0..6).all(|i| (0..6).all(|j| i == j || e.conjugate[i][j] == 0)));
        b.param("conjugates_diagonal", diagonal);
        b.param(
            "conjugate_diagonals",
            st.elements.iter().map(|e| (0..6).map(|i| e.conjugate[i][i]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        );
        if !diagonal {
            b.decision("u^-1 x u is lower triangular with the displayed diagonal but not diagonal; the stabilizer is identified with the torus through its diagonal");
        }
        Ok((
            json!({ "count": p - 1, "multiplier_bijective": true, "closed": true, "diagonal_shape": true }),
            json!({ "count": st.elements.len(), "multiplier_bijective": bijective, "closed": closed, "diagonal_shape": shape_ok }),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displayed_u_is_symplectic() {
        for p in [5, 7, 11] {
            let f = Fp(p);
            let mut u = [[0u32; 6]; 6];
            for i in 0..6 {
                for j in 0..6 {
                    u[i][j] = f.red(U_DISPLAYED[i][j]);
                }
            }
            assert_eq!(gsp_multiplier6(f, &u), Some(1));
        }
    }

    #[test]
    fn embedding_lands_in_gsp6() {
        let f = Fp(5);
        let klin = klingen_elements(5);
        let gl2 = gl2_by_det(5);
        for (h, mu) in klin.iter().step_by(997) {
            let g = gl2[mu][0];
            assert_eq!(gsp_multiplier6(f, &embed(h, &g)), Some(*mu));
        }
    }

    #[test]
    fn klingen_order_small() {
        // |Klin(F_p)| = (p - 1) |Sp_2(F_p)| p^3 = (p - 1)^2 p^4 (p + 1).
        assert_eq!(klingen_elements(5).len(), 60_000);
    }

    #[test]
    fn methods_agree_at_5() {
        let a = stabilizer(5, Method::Full).unwrap();
        let b = stabilizer(5, Method::Join).unwrap();
        assert_eq!(a.elements.len(), 4);
        let xa: Vec<M6> = a.elements.iter().map(|e| e.x).collect();
        let xb: Vec<M6> = b.elements.iter().map(|e| e.x).collect();
        assert_eq!(xa, xb);
        assert_eq!(a.fiber_product_order, 7_200_000);
    }

    #[test]
    fn identity_always_present() {
        let st = stabilizer(7, Method::Join).unwrap();
        assert!(st.elements.iter().any(|e| (0..6).all(|i| (0..6).all(|j| e.x[i][j] == u32::from(i == j)))));
    }

    #[test]
    fn small_primes_rejected() {
        assert!(stabilizer(3, Method::Join).is_err());
        assert!(stabilizer(9, Method::Join).is_err());
    }
}
