//! One-variable truncated series: formal power series (positive powers) and
//! two-sided Laurent coefficient arrays.

use crate::C64;
use rustfft::FftPlanner;

/// Dense truncated power series: c[m] is the coefficient of w^m.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub c: Vec<C64>,
}

impl PowerSeries {
    pub fn one(order: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        c[0] = C64::new(1.0, 0.0);
        PowerSeries { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// exp of a series given by its log coefficients, log(w^m)-coefficient =
    /// `log_m(m)` for m >= 1 (no constant term). Exact formal exponential via
    /// the derivative recurrence n F_n = sum_{k=1..n} k L_k F_{n-k}.
    pub fn exp_from_log<F: Fn(usize) -> C64>(order: usize, log_m: F) -> Self {
        let mut l = vec![C64::new(0.0, 0.0); order + 1];
        for (m, lm) in l.iter_mut().enumerate().skip(1) {
            *lm = log_m(m);
        }
        let mut f = vec![C64::new(0.0, 0.0); order + 1];
        f[0] = C64::new(1.0, 0.0);
        for n in 1..=order {
            let mut acc = C64::new(0.0, 0.0);
            for k in 1..=n {
                acc += (k as f64) * l[k] * f[n - k];
            }
            f[n] = acc / n as f64;
        }
        PowerSeries { c: f }
    }

    pub fn mul_trunc(&self, other: &PowerSeries, order: usize) -> PowerSeries {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        for (i, a) in self.c.iter().enumerate() {
            if i > order {
                break;
            }
            for (j, b) in other.c.iter().enumerate() {
                if i + j > order {
                    break;
                }
                c[i + j] += a * b;
            }
        }
        PowerSeries { c }
    }

    /// Coefficients of f(a w): c[m] * a^m.
    pub fn scale_arg(&self, a: C64) -> PowerSeries {
        let mut c = self.c.clone();
        let mut am = C64::new(1.0, 0.0);
        for cm in c.iter_mut() {
            *cm *= am;
            am *= a;
        }
        PowerSeries { c }
    }

    pub fn eval(&self, w: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &cm in self.c.iter().rev() {
            acc = acc * w + cm;
        }
        acc
    }
}

/// Two-sided Laurent coefficient array: coefficient of w^k for
/// k in [lo, lo + c.len() - 1].
#[derive(Debug, Clone)]
pub struct LaurentArray {
    pub lo: i64,
    pub c: Vec<C64>,
}

impl LaurentArray {
    pub fn hi(&self) -> i64 {
        self.lo + self.c.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> C64 {
        if k < self.lo || k > self.hi() {
            C64::new(0.0, 0.0)
        } else {
            self.c[(k - self.lo) as usize]
        }
    }

    /// Coefficients of f(a w): c_k * a^k.
    pub fn scale_arg(&self, a: C64) -> LaurentArray {
        let mut out = self.clone();
        for (i, cm) in out.c.iter_mut().enumerate() {
            let k = out.lo + i as i64;
            *cm *= powi_c(a, k);
        }
        out
    }

    /// Coefficients of f(1/w): index reversal.
    pub fn reversed(&self) -> LaurentArray {
        let hi = self.hi();
        let mut c = self.c.clone();
        c.reverse();
        LaurentArray { lo: -hi, c }
    }

    /// Pointwise product function's coefficients via full convolution,
    /// clipped to [lo_clip, hi_clip].
    pub fn conv_clip(&self, other: &LaurentArray, lo_clip: i64, hi_clip: i64) -> LaurentArray {
        let n = (hi_clip - lo_clip + 1) as usize;
        let mut c = vec![C64::new(0.0, 0.0); n];
        for (i, a) in self.c.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            let ka = self.lo + i as i64;
            for (j, b) in other.c.iter().enumerate() {
                let k = ka + other.lo + j as i64;
                if k < lo_clip || k > hi_clip {
                    continue;
                }
                c[(k - lo_clip) as usize] += a * b;
            }
        }
        LaurentArray { lo: lo_clip, c }
    }

    /// Convolve with a positive power series (clipped).
    pub fn conv_series_clip(&self, ps: &PowerSeries, lo_clip: i64, hi_clip: i64) -> LaurentArray {
        let other = LaurentArray { lo: 0, c: ps.c.clone() };
        self.conv_clip(&other, lo_clip, hi_clip)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude within `margin` of either end of the
    /// stored range; used as the truncation-tail diagnostic.
    pub fn tail_max(&self, margin: usize) -> f64 {
        let n = self.c.len();
        let m = margin.min(n);
        let head = self.c[..m].iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tail = self.c[n - m..].iter().map(|v| v.norm()).fold(0.0, f64::max);
        head.max(tail)
    }

    /// Evaluate sum c_k w^k.
    pub fn eval(&self, w: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, cm) in self.c.iter().enumerate() {
            acc += cm * powi_c(w, self.lo + i as i64);
        }
        acc
    }
}

pub fn powi_c(a: C64, k: i64) -> C64 {
    if k >= 0 {
        a.powu(k as u32)
    } else {
        a.powu((-k) as u32).inv()
    }
}

/// Laurent coefficients of `f` on the circle |w| = 1 by an N-point DFT.
///
/// For a function analytic on an annulus strictly containing the unit circle
/// the aliasing error decays geometrically in `n_fft`; the caller checks
/// `tail_max` to confirm the window caught the decay.
pub fn laurent_on_circle<F: Fn(C64) -> C64>(f: F, n_fft: usize, kmax: i64) -> LaurentArray {
    assert!(2 * kmax + 1 <= n_fft as i64, "kmax too large for n_fft");
    let mut buf: Vec<C64> = (0..n_fft)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n_fft as f64;
            f(C64::new(th.cos(), th.sin()))
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_fft);
    fft.process(&mut buf);
    let mut c = Vec::with_capacity((2 * kmax + 1) as usize);
    for k in -kmax..=kmax {
        let idx = k.rem_euclid(n_fft as i64) as usize;
        c.push(buf[idx] / n_fft as f64);
    }
    LaurentArray { lo: -kmax, c }
}
