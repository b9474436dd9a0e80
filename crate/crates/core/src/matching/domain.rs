use crate::error::{Error, Result};

/// Rectangular lattice of candidate translations `t = (u, v)`, stored
/// row-major (`v` outer, `u` inner).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TranslationDomain {
    pub u_min: i32,
    pub u_max: i32,
    pub v_min: i32,
    pub v_max: i32,
    pub stride: i32,
}

impl TranslationDomain {
    /// Inclusive ranges; `u_max - u_min` and `v_max - v_min` must be
    /// multiples of `stride`.
    pub fn new(u: (i32, i32), v: (i32, i32), stride: i32) -> Result<Self> {
        if stride < 1 {
            return Err(Error::invalid(format!("stride must be >= 1, got {stride}")));
        }
        if u.0 > u.1 || v.0 > v.1 {
            return Err(Error::invalid("empty translation domain"));
        }
        if (u.1 - u.0) % stride != 0 || (v.1 - v.0) % stride != 0 {
            return Err(Error::invalid("domain extent is not a multiple of the stride"));
        }
        Ok(Self {
            u_min: u.0,
            u_max: u.1,
            v_min: v.0,
            v_max: v.1,
            stride,
        })
    }

    /// Every stride-aligned translation that moves at least one cell of a
    /// `test_w x test_h` grid onto a `ex_w x ex_h` grid. Always contains `(0, 0)`.
    pub fn covering(test_w: usize, test_h: usize, ex_w: usize, ex_h: usize, stride: i32) -> Result<Self> {
        if test_w == 0 || test_h == 0 || ex_w == 0 || ex_h == 0 {
            return Err(Error::invalid("empty grid"));
        }
        if stride < 1 {
            return Err(Error::invalid(format!("stride must be >= 1, got {stride}")));
        }
        let lo = |n: usize| -(((n as i32) - 1) / stride) * stride;
        let hi = |n: usize| (((n as i32) - 1) / stride) * stride;
        Self::new((lo(test_w), hi(ex_w)), (lo(test_h), hi(ex_h)), stride)
    }

    /// Square window `[-r, r]^2` around the origin.
    pub fn window(radius: i32) -> Self {
        Self {
            u_min: -radius,
            u_max: radius,
            v_min: -radius,
            v_max: radius,
            stride: 1,
        }
    }

    pub fn nu(&self) -> usize {
        ((self.u_max - self.u_min) / self.stride + 1) as usize
    }

    pub fn nv(&self) -> usize {
        ((self.v_max - self.v_min) / self.stride + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.nu() * self.nv()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn translation(&self, index: usize) -> (i32, i32) {
        let nu = self.nu();
        let (iu, iv) = ((index % nu) as i32, (index / nu) as i32);
        (self.u_min + iu * self.stride, self.v_min + iv * self.stride)
    }

    pub fn index_of(&self, u: i32, v: i32) -> Option<usize> {
        if u < self.u_min || u > self.u_max || v < self.v_min || v > self.v_max {
            return None;
        }
        let (du, dv) = (u - self.u_min, v - self.v_min);
        if du % self.stride != 0 || dv % self.stride != 0 {
            return None;
        }
        Some((dv / self.stride) as usize * self.nu() + (du / self.stride) as usize)
    }

    pub fn translations(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        (0..self.len()).map(|i| self.translation(i))
    }
}

/// Index of the smallest cost. Ties go to the smallest `|u| + |v|`, then to the
/// lowest row-major index.
pub fn argmin_label(costs: &[f64], domain: &TranslationDomain) -> usize {
    let mut best = 0;
    let mut best_key = (costs[0], l1(domain.translation(0)));
    for (i, &c) in costs.iter().enumerate().skip(1) {
        let key = (c, l1(domain.translation(i)));
        if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best = i;
            best_key = key;
        }
    }
    best
}

#[inline]
pub(crate) fn l1((u, v): (i32, i32)) -> i32 {
    u.abs() + v.abs()
}
