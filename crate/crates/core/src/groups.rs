//! GSp_2g, GU(2,2) and GL_n over residue rings: forms, multipliers, the
//! embedding of GSp_4 into GU(2,2), the split-prime coordinates and the
//! cocharacter eta.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::ring::{Elem, Ring, RingKind};

/// The ambient group a subgroup lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    /// Invertible matrices.
    Gl,
    /// Similitudes of the form `J`: `conj(g)^T J g = nu J` with `nu` a rational
    /// unit. Over the rational ring this is GSp; over an extension it is GU,
    /// which in the split model is GL x GL_1.
    Similitude,
}

/// A matrix with an optional cached multiplier.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElem {
    pub mat: Mat,
    pub multiplier: Option<Elem>,
}

impl GroupElem {
    pub fn new(mat: Mat) -> Self {
        GroupElem { mat, multiplier: None }
    }

    pub fn with_multiplier(mat: Mat, nu: Elem) -> Self {
        GroupElem { mat, multiplier: Some(nu) }
    }

    pub fn identity(ring: &Ring, n: usize) -> Self {
        GroupElem { mat: Mat::identity(ring, n), multiplier: Some(ring.one()) }
    }
}

/// The `2g x 2g` matrix `[[0, I'], [-I', 0]]` with `I'` the antidiagonal of ones.
pub fn symplectic_form(ring: &Ring, g: usize) -> Mat {
    let n = 2 * g;
    let mut j = Mat::zero(n);
    for i in 0..n {
        let v = if i < g { ring.one() } else { ring.neg(ring.one()) };
        j.set(i, n - 1 - i, v);
    }
    j
}

/// The multiplier `nu` with `conj(g)^T J g = nu J`, if `g` is a similitude of
/// the standard form.
pub fn similitude_multiplier(ring: &Ring, g: &Mat) -> Result<Elem> {
    let n = g.dim();
    if n % 2 != 0 {
        return Err(Error::NotInGroup(format!("odd dimension {n}")));
    }
    let j = symplectic_form(ring, n / 2);
    let lhs = ring.mat_mul(&ring.mat_mul(&ring.mat_adjoint(g), &j), g);
    let nu = lhs.get(0, n - 1);
    if !ring.is_rational_elem(nu) || !ring.is_unit(nu) {
        return Err(Error::NotInGroup(format!("multiplier {} is not a rational unit", ring.display(nu))));
    }
    if lhs != ring.mat_scale(&j, nu) {
        return Err(Error::NotInGroup("form is not preserved up to a scalar".into()));
    }
    Ok(nu)
}

/// `mu(h)` with `h^T J h = mu J` for `h` over `Z/p^K`.
pub fn gsp_multiplier(ring: &Ring, h: &Mat) -> Result<Elem> {
    if !ring.is_rational() {
        return Err(Error::NotInGroup("GSp membership needs the rational ring".into()));
    }
    similitude_multiplier(ring, h)
}

/// `nu(g)` with `conj(g)^T J g = nu J` for `g` a `4 x 4` matrix over `O/p^K`.
pub fn gu_multiplier(ring: &Ring, g: &Mat) -> Result<Elem> {
    if ring.is_rational() || g.dim() != 4 {
        return Err(Error::NotInGroup("GU(2,2) membership needs a 4x4 matrix over an extension".into()));
    }
    similitude_multiplier(ring, g)
}

/// Inverse of a similitude with multiplier `nu`: `nu^-1 J^-1 conj(g)^T J`.
pub fn similitude_inverse(ring: &Ring, g: &Mat, nu: Elem) -> Result<Mat> {
    let n = g.dim();
    let j = symplectic_form(ring, n / 2);
    let jinv = ring.mat_scale(&j, ring.neg(ring.one()));
    let core = ring.mat_mul(&ring.mat_mul(&jinv, &ring.mat_adjoint(g)), &j);
    Ok(ring.mat_scale(&core, ring.invert(nu)?))
}

/// Product in the group, multiplying cached multipliers when both are known.
pub fn group_mul(ring: &Ring, a: &GroupElem, b: &GroupElem) -> GroupElem {
    GroupElem {
        mat: ring.mat_mul(&a.mat, &b.mat),
        multiplier: match (a.multiplier, b.multiplier) {
            (Some(x), Some(y)) => Some(ring.mul(x, y)),
            _ => None,
        },
    }
}

/// Inverse in a similitude group; falls back to elimination if the
/// multiplier is unknown and the matrix is not a similitude.
pub fn group_inverse(ring: &Ring, a: &GroupElem) -> Result<GroupElem> {
    let nu = match a.multiplier {
        Some(nu) => Some(nu),
        None => similitude_multiplier(ring, &a.mat).ok(),
    };
    match nu {
        Some(nu) => Ok(GroupElem { mat: similitude_inverse(ring, &a.mat, nu)?, multiplier: Some(ring.invert(nu)?) }),
        None => Ok(GroupElem::new(ring.mat_inverse(&a.mat)?)),
    }
}

/// The natural embedding of GSp_4(Z/p^K) into GU(2,2)(O/p^K).
pub fn phi_embed(base: &Ring, ext: &Ring, h: &GroupElem) -> Result<GroupElem> {
    let mu = gsp_multiplier(base, &h.mat)?;
    let mat = ext.embed(&h.mat);
    Ok(GroupElem { mat, multiplier: Some(ext.from_int(mu.0 as i64)) })
}

/// Split coordinates `(M, a)` of an element `(M, N)` of GU over the pair ring,
/// where `N^T J M = a J`.
pub fn split_iso(ring: &Ring, g: &GroupElem) -> Result<(Mat, Elem)> {
    if ring.kind() != RingKind::Split {
        return Err(Error::InvalidRing("split_iso needs the split model".into()));
    }
    let nu = similitude_multiplier(ring, &g.mat)?;
    let m = Mat::from_fn(g.mat.dim(), |i, j| Elem(g.mat.get(i, j).0, 0));
    Ok((m, Elem(nu.0, 0)))
}

/// Rebuild the pair element from `(M, a)` via `N = a J^-1 (M^T)^-1 J`.
pub fn split_iso_inv(ring: &Ring, m: &Mat, a: Elem) -> Result<GroupElem> {
    if ring.kind() != RingKind::Split {
        return Err(Error::InvalidRing("split_iso_inv needs the split model".into()));
    }
    let base = Ring::new(ring.spec().base())?;
    let a = base.invert(a).map(|_| a)?;
    let n = m.dim();
    let j = symplectic_form(&base, n / 2);
    let jinv = base.mat_scale(&j, base.neg(base.one()));
    let mt_inv = base.mat_inverse(&m.transpose())?;
    let nmat = base.mat_scale(&base.mat_mul(&base.mat_mul(&jinv, &mt_inv), &j), a);
    let mat = Mat::from_fn(n, |i, k| Elem(m.get(i, k).0, nmat.get(i, k).0));
    Ok(GroupElem { mat, multiplier: Some(Elem(a.0, a.0)) })
}

/// A cocharacter of the diagonal torus, `x -> diag(x^e_1, ..., x^e_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cocharacter {
    pub exponents: Vec<i64>,
}

impl Cocharacter {
    /// `eta: x -> diag(x^3, x^2, x, 1)`.
    pub fn eta() -> Self {
        Cocharacter { exponents: vec![3, 2, 1, 0] }
    }

    /// The GL_2 analogue `x -> diag(x, 1)`.
    pub fn eta_gl2() -> Self {
        Cocharacter { exponents: vec![1, 0] }
    }
}

/// `diag(p^{k e_1}, ..., p^{k e_n})` over the ring; entries at or beyond `p^K` are zero.
pub fn cocharacter_matrix(c: &Cocharacter, k: i64, ring: &Ring) -> Result<Mat> {
    let diag = c
        .exponents
        .iter()
        .map(|&e| {
            let exp = k * e;
            if exp < 0 {
                Err(Error::BadLevel(format!("negative power p^{exp} is not integral")))
            } else if exp >= ring.k() as i64 {
                Ok(ring.zero())
            } else {
                Ok(ring.from_int((ring.p() as i64).pow(exp as u32)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mat::diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::RingSpec;

    #[test]
    fn symplectic_form_examples() {
        let r = Ring::new(RingSpec::rational(5, 1)).unwrap();
        assert_eq!(symplectic_form(&r, 1), Mat::from_ints(&r, &[&[0, 1], &[-1, 0]]));
        let j = symplectic_form(&r, 2);
        assert_eq!(j.get(0, 3), r.one());
        assert_eq!(j.get(1, 2), r.one());
        assert_eq!(j.get(2, 1), r.from_int(-1));
        assert_eq!(j.get(3, 0), r.from_int(-1));
        for g in 1..=3 {
            let j = symplectic_form(&r, g);
            assert_eq!(r.mat_mul(&j, &j), r.mat_scale(&Mat::identity(&r, 2 * g), r.from_int(-1)));
        }
    }

    #[test]
    fn gsp_multiplier_examples() {
        let r = Ring::new(RingSpec::rational(3, 2)).unwrap();
        assert_eq!(gsp_multiplier(&r, &Mat::identity(&r, 4)).unwrap(), r.one());
        let two = r.mat_scale(&Mat::identity(&r, 4), r.from_int(2));
        assert_eq!(gsp_multiplier(&r, &two).unwrap(), r.from_int(4));
        assert_eq!(gsp_multiplier(&r, &symplectic_form(&r, 2)).unwrap(), r.one());
        let bad = r.elementary(4, 0, 1, r.one());
        assert!(matches!(gsp_multiplier(&r, &bad), Err(Error::NotInGroup(_))));
    }

    #[test]
    fn gu_multiplier_of_scalar_is_norm() {
        let r = Ring::new(RingSpec::inert(3, 2, 0, -1)).unwrap();
        let y = r.from_coords(1, 1);
        let g = r.mat_scale(&Mat::identity(&r, 4), y);
        assert_eq!(gu_multiplier(&r, &g).unwrap(), r.norm(y));
    }

    #[test]
    fn phi_preserves_multiplier() {
        let base = Ring::new(RingSpec::rational(3, 2)).unwrap();
        let ext = Ring::new(RingSpec::inert(3, 2, 0, -1)).unwrap();
        let h = Mat::diagonal(&[base.from_int(2), base.one(), base.from_int(2), base.one()]);
        // diag(2,1,2,1) has multiplier 2
        let img = phi_embed(&base, &ext, &GroupElem::new(h)).unwrap();
        assert_eq!(gu_multiplier(&ext, &img.mat).unwrap(), ext.from_int(2));
        assert_eq!(img.multiplier, Some(ext.from_int(2)));
    }

    #[test]
    fn split_iso_of_scalar_multiplier() {
        let r = Ring::new(RingSpec::split(5, 3)).unwrap();
        let base = Ring::new(RingSpec::rational(5, 3)).unwrap();
        let a = base.from_int(7);
        let g = split_iso_inv(&r, &Mat::identity(&base, 4), a).unwrap();
        for i in 0..4 {
            assert_eq!(g.mat.get(i, i), Elem(1, 7));
        }
        let (m, back) = split_iso(&r, &g).unwrap();
        assert_eq!(m, Mat::identity(&base, 4));
        assert_eq!(back, a);
    }

    #[test]
    fn cocharacter_examples() {
        let r = Ring::new(RingSpec::rational(2, 4)).unwrap();
        let d = cocharacter_matrix(&Cocharacter::eta(), 1, &r).unwrap();
        assert_eq!(d, Mat::from_ints(&r, &[&[8, 0, 0, 0], &[0, 4, 0, 0], &[0, 0, 2, 0], &[0, 0, 0, 1]]));
        assert_eq!(cocharacter_matrix(&Cocharacter::eta(), 0, &r).unwrap(), Mat::identity(&r, 4));
        let r7 = Ring::new(RingSpec::rational(2, 7)).unwrap();
        let d2 = cocharacter_matrix(&Cocharacter::eta(), 2, &r7).unwrap();
        assert_eq!(d2, Mat::diagonal(&[r7.from_int(64), r7.from_int(16), r7.from_int(4), r7.one()]));
    }
}
