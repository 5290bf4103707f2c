//! Truncated multivariate Laurent windows.
//!
//! A window holds the integer-exponent coefficients of a formal expression
//! in up to [`MAXV`] variables, together with one complex exponent offset per
//! variable (the non-integer zero-mode powers collected for a fixed sector).
//! Coefficients outside the window bound are dropped and counted.

use crate::error::{DvaError, Result};
use crate::series::{powi_c, LaurentArray, PowerSeries};
use crate::C64;
use std::collections::BTreeMap;

pub const MAXV: usize = 4;

pub type Ex = [i32; MAXV];

const OFFSET_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Window {
    pub nv: usize,
    pub bound: i32,
    pub offsets: [C64; MAXV],
    pub terms: BTreeMap<Ex, C64>,
    /// Count of coefficients dropped at the window boundary.
    pub dropped: u64,
}

impl Window {
    pub fn new(nv: usize, bound: i32) -> Self {
        assert!(nv <= MAXV);
        Window {
            nv,
            bound,
            offsets: [C64::new(0.0, 0.0); MAXV],
            terms: BTreeMap::new(),
            dropped: 0,
        }
    }

    pub fn constant(nv: usize, bound: i32, v: C64) -> Self {
        let mut w = Window::new(nv, bound);
        w.add_term([0; MAXV], v);
        w
    }

    pub fn add_term(&mut self, e: Ex, v: C64) {
        if v.norm() == 0.0 {
            return;
        }
        if e.iter().any(|&k| k.abs() > self.bound) {
            self.dropped += 1;
            return;
        }
        let entry = self.terms.entry(e).or_insert(C64::new(0.0, 0.0));
        *entry += v;
    }

    fn offsets_close(&self, other: &Window) -> bool {
        (0..self.nv).all(|i| (self.offsets[i] - other.offsets[i]).norm() < OFFSET_TOL)
    }

    /// Add `scale * other`, tolerating per-variable offset mismatches by an
    /// integer (folded into the exponents); non-integer mismatch is an error.
    pub fn add_scaled(&mut self, other: &Window, scale: C64) -> Result<()> {
        assert_eq!(self.nv, other.nv);
        let mut shift = [0i32; MAXV];
        if !self.offsets_close(other) {
            for i in 0..self.nv {
                let d = other.offsets[i] - self.offsets[i];
                let di = d.re.round();
                if (d - C64::new(di, 0.0)).norm() > OFFSET_TOL {
                    return Err(DvaError::OffsetMismatch(format!(
                        "var {i}: {} vs {}",
                        other.offsets[i], self.offsets[i]
                    )));
                }
                shift[i] = di as i32;
            }
        }
        for (e, v) in &other.terms {
            let mut e2 = *e;
            for i in 0..self.nv {
                e2[i] += shift[i];
            }
            self.add_term(e2, scale * v);
        }
        self.dropped += other.dropped;
        Ok(())
    }

    pub fn scaled(&self, scale: C64) -> Window {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= scale;
        }
        out
    }

    /// Multiply by a positive power series in the ratio z_j / z_i.
    pub fn mul_ratio_series(&self, i: usize, j: usize, ps: &PowerSeries) -> Window {
        let arr = LaurentArray { lo: 0, c: ps.c.clone() };
        self.mul_ratio_laurent(i, j, &arr)
    }

    /// Multiply by a one-variable Laurent array in the ratio z_j / z_i
    /// (each power w^m contributes exponent +m at j, -m at i). For i == j the
    /// array is evaluated at w = 1 (the ratio degenerates to a scalar).
    pub fn mul_ratio_laurent(&self, i: usize, j: usize, la: &LaurentArray) -> Window {
        if i == j {
            let v: C64 = la.c.iter().sum();
            return self.scaled(v);
        }
        let mut out = Window::new(self.nv, self.bound);
        out.offsets = self.offsets;
        out.dropped = self.dropped;
        for (e, v) in &self.terms {
            for (idx, a) in la.c.iter().enumerate() {
                if a.norm() == 0.0 {
                    continue;
                }
                let m = la.lo + idx as i64;
                let mut e2 = *e;
                e2[i] -= m as i32;
                e2[j] += m as i32;
                out.add_term(e2, v * a);
            }
        }
        out
    }

    /// Multiply by the monomial prod z_i^{e_i}.
    pub fn mul_monomial(&self, e: Ex, coeff: C64) -> Window {
        let mut out = Window::new(self.nv, self.bound);
        out.offsets = self.offsets;
        out.dropped = self.dropped;
        for (k, v) in &self.terms {
            let mut k2 = *k;
            for i in 0..self.nv {
                k2[i] += e[i];
            }
            out.add_term(k2, v * coeff);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn get(&self, e: Ex) -> C64 {
        self.terms.get(&e).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// Coefficient of the all-zero exponent. Offsets must vanish for this to
    /// be the genuine constant term.
    pub fn constant_term(&self) -> Result<C64> {
        for i in 0..self.nv {
            if self.offsets[i].norm() > OFFSET_TOL {
                return Err(DvaError::OffsetMismatch(format!(
                    "constant term with nonzero offset {} on var {i}",
                    self.offsets[i]
                )));
            }
        }
        Ok(self.get([0; MAXV]))
    }

    /// Evaluate the window (including offsets) at z_i = rho_i e^{i theta_i},
    /// with the continuous angle fixing the power branch.
    pub fn eval_at(&self, rho: &[f64], theta: &[f64]) -> C64 {
        let logs: Vec<C64> = (0..self.nv)
            .map(|i| C64::new(rho[i].ln(), theta[i]))
            .collect();
        let mut off = C64::new(0.0, 0.0);
        for i in 0..self.nv {
            off += self.offsets[i] * logs[i];
        }
        let pre = off.exp();
        let mut acc = C64::new(0.0, 0.0);
        for (e, v) in &self.terms {
            let mut ex = C64::new(0.0, 0.0);
            for i in 0..self.nv {
                ex += C64::new(e[i] as f64, 0.0) * logs[i];
            }
            acc += v * ex.exp();
        }
        pre * acc
    }

    /// Substitute z_b = scale * z_a: exponents and offsets of b fold into a.
    pub fn collapse_var(&self, b: usize, a: usize, scale: C64) -> Window {
        assert!(a != b);
        let mut out = Window::new(self.nv, self.bound);
        out.offsets = self.offsets;
        out.offsets[a] = self.offsets[a] + self.offsets[b];
        out.offsets[b] = C64::new(0.0, 0.0);
        out.dropped = self.dropped;
        let off_fac = powc(scale, self.offsets[b]);
        for (e, v) in &self.terms {
            let mut e2 = *e;
            let eb = e2[b];
            e2[b] = 0;
            e2[a] += eb;
            out.add_term(e2, v * off_fac * powi_c(scale, eb as i64));
        }
        out
    }
}

fn powc(base: C64, expo: C64) -> C64 {
    if expo.norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        (expo * base.ln()).exp()
    }
}

/// Expand `delta(gamma z_b / z_a) * payload` into a window over the target
/// offsets. The delta support allows moving the non-integer offset between
/// the two variables; total offset conservation is checked, and the
/// redistribution multiplier gamma^{-Delta} is applied.
pub fn delta_expand_aligned(
    gamma: C64,
    a: usize,
    b: usize,
    payload: &Window,
    target_off: &[C64; MAXV],
    bound: i32,
) -> Result<Window> {
    let nv = payload.nv;
    let mut out = Window::new(nv, bound);
    out.offsets = *target_off;
    out.dropped = payload.dropped;

    // Offsets on variables other than a, b must match outright.
    for i in 0..nv {
        if i == a || i == b {
            continue;
        }
        if (payload.offsets[i] - target_off[i]).norm() > OFFSET_TOL {
            return Err(DvaError::OffsetMismatch(format!(
                "delta transport: spectator var {i} offset {} vs target {}",
                payload.offsets[i], target_off[i]
            )));
        }
    }
    let total_payload = payload.offsets[a] + payload.offsets[b];
    let total_target = target_off[a] + target_off[b];
    if (total_payload - total_target).norm() > OFFSET_TOL {
        return Err(DvaError::OffsetMismatch(format!(
            "delta transport: offset sum {} vs target {}",
            total_payload, total_target
        )));
    }
    // Move Delta = payload_b - target_b from z_b onto z_a using z_b = z_a/gamma
    // on the support; this multiplies by gamma^{-Delta}.
    let delta = payload.offsets[b] - target_off[b];
    let mult = powc(gamma, -delta);

    for (e, v) in &payload.terms {
        // delta(gamma z_b/z_a) = sum_n gamma^n z_b^n z_a^{-n}
        for n in -(2 * bound as i64)..=(2 * bound as i64) {
            let mut e2 = *e;
            e2[b] += n as i32;
            e2[a] -= n as i32;
            if e2.iter().any(|&k| k.abs() > bound) {
                continue;
            }
            out.add_term(e2, v * mult * powi_c(gamma, n));
        }
    }
    Ok(out)
}
