//! Exact coordinates in the ring of integer combinations of the twelfth
//! roots of unity.
//!
//! Every point is stored as an integer quadruple `(a, b, c, d)` meaning
//! `a + b*z + c*z^2 + d*z^3` where `z = e^{i*pi/6}`. Higher powers reduce
//! through `z^4 = z^2 - 1`, so the four components are closed under
//! addition, multiplication and rotation by any multiple of 30 degrees.
//! All arithmetic is checked; overflow is reported, never wrapped.

use crate::error::{Error, Result};

/// `sqrt(3)` rounded to the nearest `f64`.
pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Image of `(a, b, c, d)` under one multiplication by `z`.
const fn zeta_step(p: [i64; 4]) -> [i64; 4] {
    [-p[3], p[0], p[1] + p[3], p[2]]
}

/// `ZETA_MATS[k][i]` is the quadruple for `z^k * z^i`, so rotation by
/// `z^k` is a row-vector product with entries in `{-1, 0, 1}`.
const ZETA_MATS: [[[i64; 4]; 4]; 12] = {
    let mut mats = [[[0i64; 4]; 4]; 12];
    let mut row = 0;
    while row < 4 {
        mats[0][row][row] = 1;
        row += 1;
    }
    let mut k = 1;
    while k < 12 {
        let mut i = 0;
        while i < 4 {
            mats[k][i] = zeta_step(mats[k - 1][i]);
            i += 1;
        }
        k += 1;
    }
    mats
};

/// A point of the tiling, exact by construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycNum {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl CycNum {
    pub const ZERO: CycNum = CycNum::new(0, 0, 0, 0);
    pub const ONE: CycNum = CycNum::new(1, 0, 0, 0);

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> CycNum {
        CycNum { a, b, c, d }
    }

    /// The unit vector `z^k`.
    pub fn zeta(k: i32) -> CycNum {
        let m = ZETA_MATS[k.rem_euclid(12) as usize][0];
        CycNum::new(m[0], m[1], m[2], m[3])
    }

    pub fn components(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn checked_add(&self, rhs: &CycNum) -> Result<CycNum> {
        let add = |x: i64, y: i64| x.checked_add(y).ok_or(Error::Overflow("add"));
        Ok(CycNum::new(
            add(self.a, rhs.a)?,
            add(self.b, rhs.b)?,
            add(self.c, rhs.c)?,
            add(self.d, rhs.d)?,
        ))
    }

    pub fn checked_sub(&self, rhs: &CycNum) -> Result<CycNum> {
        let sub = |x: i64, y: i64| x.checked_sub(y).ok_or(Error::Overflow("sub"));
        Ok(CycNum::new(
            sub(self.a, rhs.a)?,
            sub(self.b, rhs.b)?,
            sub(self.c, rhs.c)?,
            sub(self.d, rhs.d)?,
        ))
    }

    pub fn checked_neg(&self) -> Result<CycNum> {
        let neg = |x: i64| x.checked_neg().ok_or(Error::Overflow("neg"));
        Ok(CycNum::new(
            neg(self.a)?,
            neg(self.b)?,
            neg(self.c)?,
            neg(self.d)?,
        ))
    }

    /// Rotation by `k * 30` degrees about the origin.
    pub fn rotated(&self, k: i32) -> Result<CycNum> {
        let m = &ZETA_MATS[k.rem_euclid(12) as usize];
        let p = self.components();
        let mut out = [0i64; 4];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc: i128 = 0;
            for (i, &coeff) in p.iter().enumerate() {
                acc += coeff as i128 * m[i][j] as i128;
            }
            *slot = acc.try_into().map_err(|_| Error::Overflow("rotate"))?;
        }
        Ok(CycNum::new(out[0], out[1], out[2], out[3]))
    }

    /// Complex conjugate; fixes the real axis.
    pub fn conj(&self) -> Result<CycNum> {
        let add = |x: i64, y: i64| x.checked_add(y).ok_or(Error::Overflow("conj"));
        Ok(CycNum::new(
            add(self.a, self.c)?,
            self.b,
            self.c.checked_neg().ok_or(Error::Overflow("conj"))?,
            add(self.b, self.d)?
                .checked_neg()
                .ok_or(Error::Overflow("conj"))?,
        ))
    }

    /// Reflection across the imaginary axis, `p -> -conj(p)`.
    pub fn mirror_x(&self) -> Result<CycNum> {
        self.conj()?.checked_neg()
    }

    /// Full ring product. Only needed for diagnostics; rotation uses the
    /// precomputed matrices.
    pub fn checked_mul(&self, rhs: &CycNum) -> Result<CycNum> {
        let (a1, b1, c1, d1) = (
            self.a as i128,
            self.b as i128,
            self.c as i128,
            self.d as i128,
        );
        let (a2, b2, c2, d2) = (rhs.a as i128, rhs.b as i128, rhs.c as i128, rhs.d as i128);
        let t4 = b1 * d2 + c1 * c2 + d1 * b2;
        let t5 = c1 * d2 + d1 * c2;
        let raw = [
            a1 * a2 - t4 - d1 * d2,
            a1 * b2 + b1 * a2 - t5,
            a1 * c2 + b1 * b2 + c1 * a2 + t4,
            a1 * d2 + b1 * c2 + c1 * b2 + d1 * a2 + t5,
        ];
        let narrow = |v: i128| i64::try_from(v).map_err(|_| Error::Overflow("mul"));
        Ok(CycNum::new(
            narrow(raw[0])?,
            narrow(raw[1])?,
            narrow(raw[2])?,
            narrow(raw[3])?,
        ))
    }

    /// Exact real part, `a + c/2 + b*sqrt(3)/2`.
    pub fn x_exact(&self) -> Result<QuadReal> {
        let r = self
            .a
            .checked_mul(2)
            .and_then(|t| t.checked_add(self.c))
            .ok_or(Error::Overflow("x_exact"))?;
        Ok(QuadReal::new(r, self.b))
    }

    /// Exact imaginary part, `b/2 + d + c*sqrt(3)/2`.
    pub fn y_exact(&self) -> Result<QuadReal> {
        let r = self
            .d
            .checked_mul(2)
            .and_then(|t| t.checked_add(self.b))
            .ok_or(Error::Overflow("y_exact"))?;
        Ok(QuadReal::new(r, self.c))
    }

    /// Cartesian coordinates, rounded once at the end.
    pub fn to_xy(&self) -> (f64, f64) {
        let x = self.a as f64 + (SQRT3 * self.b as f64 + self.c as f64) / 2.0;
        let y = (self.b as f64 + SQRT3 * self.c as f64) / 2.0 + self.d as f64;
        (x, y)
    }
}

/// An exact real of the form `(r + s*sqrt(3)) / 2`.
///
/// Coordinates of ring points project onto reals of this shape, which
/// makes bounding boxes and areas comparable without rounding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct QuadReal {
    pub r: i64,
    pub s: i64,
}

impl QuadReal {
    pub const ZERO: QuadReal = QuadReal::new(0, 0);

    pub const fn new(r: i64, s: i64) -> QuadReal {
        QuadReal { r, s }
    }

    pub fn to_f64(&self) -> f64 {
        (self.r as f64 + SQRT3 * self.s as f64) / 2.0
    }

    pub fn checked_sub(&self, rhs: &QuadReal) -> Result<QuadReal> {
        Ok(QuadReal::new(
            self.r
                .checked_sub(rhs.r)
                .ok_or(Error::Overflow("real sub"))?,
            self.s
                .checked_sub(rhs.s)
                .ok_or(Error::Overflow("real sub"))?,
        ))
    }

    pub fn checked_abs(&self) -> Result<QuadReal> {
        if *self < QuadReal::ZERO {
            Ok(QuadReal::new(
                self.r.checked_neg().ok_or(Error::Overflow("real abs"))?,
                self.s.checked_neg().ok_or(Error::Overflow("real abs"))?,
            ))
        } else {
            Ok(*self)
        }
    }
}

impl PartialOrd for QuadReal {
    fn partial_cmp(&self, other: &QuadReal) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadReal {
    /// Exact comparison: decide the sign of `dr + ds*sqrt(3)` by sign
    /// inspection, falling back to comparing `dr^2` against `3*ds^2`.
    fn cmp(&self, other: &QuadReal) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        // i64 differences fit in i128 exactly.
        let dr = self.r as i128 - other.r as i128;
        let ds = self.s as i128 - other.s as i128;
        match (dr.signum(), ds.signum()) {
            (0, 0) => Equal,
            (r, s) if r >= 0 && s >= 0 => Greater,
            (r, s) if r <= 0 && s <= 0 => Less,
            (r, _) => {
                // Opposite signs: |dr| <= 2^64 - 1, so dr^2 fits in u128.
                let dr2 = dr.unsigned_abs().pow(2);
                let ds2 = ds.unsigned_abs().pow(2);
                // 3*ds^2 can exceed u128; overflow means it dominates.
                let cmp = match ds2.checked_mul(3) {
                    Some(t) => dr2.cmp(&t),
                    None => Less,
                };
                if r > 0 {
                    cmp
                } else {
                    cmp.reverse()
                }
            }
        }
    }
}

/// A plane isometry restricted to the symmetries the tiling uses:
/// optional reflection across the imaginary axis, then rotation by
/// `rot * 30` degrees, then translation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Isometry {
    pub reflect: bool,
    pub rot: u8,
    pub trans: CycNum,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        reflect: false,
        rot: 0,
        trans: CycNum::ZERO,
    };

    pub const MIRROR: Isometry = Isometry {
        reflect: true,
        rot: 0,
        trans: CycNum::ZERO,
    };

    pub fn new(reflect: bool, rot: i32, trans: CycNum) -> Isometry {
        Isometry {
            reflect,
            rot: rot.rem_euclid(12) as u8,
            trans,
        }
    }

    /// The rotation by `k * 30` degrees that carries `about` to `to`.
    pub fn pivot(about: &CycNum, k: i32, to: &CycNum) -> Result<Isometry> {
        let trans = to.checked_sub(&about.rotated(k)?)?;
        Ok(Isometry::new(false, k, trans))
    }

    pub fn apply(&self, p: &CycNum) -> Result<CycNum> {
        let q = if self.reflect { p.mirror_x()? } else { *p };
        q.rotated(self.rot as i32)?.checked_add(&self.trans)
    }

    /// `self` after `inner`: the isometry sending `p` to
    /// `self.apply(inner.apply(p))`.
    pub fn compose(&self, inner: &Isometry) -> Result<Isometry> {
        let rot = if self.reflect {
            // Mirroring conjugates rotations: m(z^k q) = z^{-k} m(q).
            (self.rot as i32) - (inner.rot as i32)
        } else {
            (self.rot as i32) + (inner.rot as i32)
        };
        Ok(Isometry::new(
            self.reflect ^ inner.reflect,
            rot,
            self.apply(&inner.trans)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_powers_match_reduction_rule() {
        let table = [
            (1, 0, 0, 0),
            (0, 1, 0, 0),
            (0, 0, 1, 0),
            (0, 0, 0, 1),
            (-1, 0, 1, 0),
            (0, -1, 0, 1),
            (-1, 0, 0, 0),
            (0, -1, 0, 0),
            (0, 0, -1, 0),
            (0, 0, 0, -1),
            (1, 0, -1, 0),
            (0, 1, 0, -1),
        ];
        for (k, &(a, b, c, d)) in table.iter().enumerate() {
            assert_eq!(CycNum::zeta(k as i32), CycNum::new(a, b, c, d), "z^{k}");
        }
        assert_eq!(CycNum::zeta(12), CycNum::ONE);
        assert_eq!(CycNum::zeta(-1), CycNum::zeta(11));
    }

    #[test]
    fn rotation_agrees_with_ring_product() {
        let p = CycNum::new(-1, 1, 1, 1);
        assert_eq!(p.rotated(3).unwrap(), CycNum::new(-2, -1, 1, 0));
        for k in 0..12 {
            let by_table = p.rotated(k).unwrap();
            let by_mul = p.checked_mul(&CycNum::zeta(k)).unwrap();
            assert_eq!(by_table, by_mul, "k={k}");
        }
    }

    #[test]
    fn mirror_and_conjugate() {
        let p = CycNum::new(-1, 1, 1, 1);
        assert_eq!(p.mirror_x().unwrap(), CycNum::new(0, -1, 1, 2));
        assert_eq!(p.conj().unwrap().conj().unwrap(), p);
        let (x, y) = p.to_xy();
        let (mx, my) = p.mirror_x().unwrap().to_xy();
        assert!((mx + x).abs() < 1e-12 && (my - y).abs() < 1e-12);
    }

    #[test]
    fn cartesian_projection() {
        let p = CycNum::new(-1, 1, 1, 1);
        let (x, y) = p.to_xy();
        assert!((x - 0.366_025_403_784_438_6).abs() < 1e-15);
        assert!((y - 2.366_025_403_784_438_4).abs() < 1e-15);
        assert!((p.x_exact().unwrap().to_f64() - x).abs() < 1e-15);
        assert!((p.y_exact().unwrap().to_f64() - y).abs() < 1e-15);
    }

    #[test]
    fn quadreal_ordering_is_exact() {
        assert!(QuadReal::new(0, 2) < QuadReal::new(3, 1));
        assert_eq!(
            QuadReal::new(5, -2).cmp(&QuadReal::new(5, -2)),
            std::cmp::Ordering::Equal
        );
        // Pell pairs p^2 - 3 q^2 = 1 sit closer to equality than f64 can
        // resolve; the exact comparison must still call them apart.
        let (mut p, mut q) = (2i64, 1i64);
        for _ in 0..18 {
            let (np, nq) = (2 * p + 3 * q, p + 2 * q);
            p = np;
            q = nq;
        }
        assert!(QuadReal::new(2 * p, 0) > QuadReal::new(0, 2 * q));
        assert!(QuadReal::new(-2 * p, 0) < QuadReal::new(0, -2 * q));
    }

    #[test]
    fn pivot_carries_about_to_target() {
        let about = CycNum::new(-1, 1, 1, 1);
        let to = CycNum::new(3, 0, -2, 5);
        for k in -12..24 {
            let iso = Isometry::pivot(&about, k, &to).unwrap();
            assert_eq!(iso.apply(&about).unwrap(), to);
        }
    }

    #[test]
    fn compose_matches_pointwise_application() {
        let samples = [
            Isometry::new(false, 0, CycNum::ZERO),
            Isometry::new(false, 5, CycNum::new(1, -2, 0, 3)),
            Isometry::new(true, 0, CycNum::new(0, 1, 0, -2)),
            Isometry::new(true, 11, CycNum::new(-3, 2, 2, -1)),
            Isometry::new(false, 7, CycNum::new(2, 0, -1, 0)),
        ];
        let points = [
            CycNum::ZERO,
            CycNum::ONE,
            CycNum::new(-1, 1, 1, 1),
            CycNum::new(4, -3, 2, -5),
        ];
        for f in &samples {
            for g in &samples {
                let fg = f.compose(g).unwrap();
                for p in &points {
                    assert_eq!(fg.apply(p).unwrap(), f.apply(&g.apply(p).unwrap()).unwrap());
                }
            }
        }
    }

    #[test]
    fn mirror_composition_flips_chirality() {
        let iso = Isometry::new(false, 4, CycNum::new(1, 2, 3, 4));
        let mirrored = Isometry::MIRROR.compose(&iso).unwrap();
        assert!(mirrored.reflect);
        let p = CycNum::new(2, -1, 0, 3);
        assert_eq!(
            mirrored.apply(&p).unwrap(),
            iso.apply(&p).unwrap().mirror_x().unwrap()
        );
    }

    #[test]
    fn overflow_is_reported() {
        let big = CycNum::new(i64::MAX, 0, 0, 0);
        assert!(matches!(
            big.checked_add(&CycNum::ONE),
            Err(Error::Overflow(_))
        ));
        // z * (0, M, 0, M) lands on b + d, which overflows.
        let wide = CycNum::new(0, i64::MAX, 0, i64::MAX);
        assert!(wide.rotated(1).is_err());
        assert!(wide.checked_mul(&CycNum::zeta(1)).is_err());
    }
}
