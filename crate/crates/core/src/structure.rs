//! Scalar structure functions and constants: the f/g families with their
//! defining exp-series and closed product forms, Delta, c, h/h*, s/s*, the
//! h_ij/s_ij ladders, the eta-twisted h kernels, f^DV, f^Z, c_h, t(s) and
//! the j-kernels of the s=2 layer.

use crate::error::{DvaError, Result};
use crate::qseries::{qpochhammer_inf, BracketCtx, Nome, Params};
use crate::series::PowerSeries;
use crate::C64;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Coefficient of z^m in ln f_11 (the defining exp-series).
pub fn log_coeff_f11(m: usize, p: &Params) -> C64 {
    let mf = m as f64;
    let e = |w: C64| p.xp(mf * w);
    (one() - e(2.0 * p.r)) * (one() - e(-2.0 * p.rstar)) * (one() - e(2.0 * (p.s - 1.0)))
        / ((one() - e(2.0 * p.s)) * mf)
}

/// Coefficient of z^m in ln f_12 (includes the (xz)^m shift).
pub fn log_coeff_f12(m: usize, p: &Params) -> C64 {
    let mf = m as f64;
    let e = |w: C64| p.xp(mf * w);
    (one() - e(2.0 * p.r)) * (one() - e(-2.0 * p.rstar)) * (one() - e(2.0 * (p.s - 2.0)))
        / ((one() - e(2.0 * p.s)) * mf)
        * p.xp(C64::new(mf, 0.0))
}

pub fn log_coeff_f22(m: usize, p: &Params) -> C64 {
    let mf = m as f64;
    let e = |w: C64| p.xp(mf * w);
    (one() - e(2.0 * p.r)) * (one() - e(-2.0 * p.rstar)) * (one() + e(C64::new(2.0, 0.0)))
        * (one() - e(2.0 * (p.s - 2.0)))
        / ((one() - e(2.0 * p.s)) * mf)
}

/// Coefficient of z^m in ln f^DV, taken in the convergent pairing (z^{+m}).
pub fn log_coeff_fdv(m: usize, p: &Params) -> C64 {
    let mf = m as f64;
    let e = |w: C64| p.xp(mf * w);
    (one() - e(2.0 * p.r)) * (one() - e(-2.0 * p.rstar)) / ((one() + e(C64::new(2.0, 0.0))) * mf)
}

/// Coefficient of z^{-m} in ln f^Z as printed (equivalently the exchange
/// coefficient phi_m checked against the ZZ contraction).
pub fn log_coeff_fz(m: usize, p: &Params) -> C64 {
    let mf = m as f64;
    let e = |w: C64| p.xp(mf * w);
    -(one() - e(2.0 * p.r)) * (one() - e(-2.0 * p.rstar))
        * (e(C64::new(2.0, 0.0)) - e(2.0 * (p.s - 1.0)))
        / ((one() - e(2.0 * p.s)) * (one() + e(C64::new(2.0, 0.0))) * mf)
}

pub fn series_f11(order: usize, p: &Params) -> PowerSeries {
    PowerSeries::exp_from_log(order, |m| log_coeff_f11(m, p))
}

pub fn series_f12(order: usize, p: &Params) -> PowerSeries {
    PowerSeries::exp_from_log(order, |m| log_coeff_f12(m, p))
}

pub fn series_f22(order: usize, p: &Params) -> PowerSeries {
    PowerSeries::exp_from_log(order, |m| log_coeff_f22(m, p))
}

pub fn series_fdv(order: usize, p: &Params) -> PowerSeries {
    PowerSeries::exp_from_log(order, |m| log_coeff_fdv(m, p))
}

/// Delta(z) = (1 - x^{r+r*} z)(1 - x^{-r-r*} z) / ((1 - x z)(1 - x^{-1} z)).
pub fn delta_fn(z: C64, p: &Params) -> C64 {
    let a = p.xp(p.r + p.rstar);
    (one() - a * z) * (one() - z / a) / ((one() - p.x * z) * (one() - z / p.x))
}

/// c = -(1 - x^{-2 r*})(1 - x^{2r}) / (1 - x^2).
pub fn const_c(p: &Params) -> C64 {
    -(one() - p.xp(-2.0 * p.rstar)) * (one() - p.xp(2.0 * p.r)) / (1.0 - p.x * p.x)
}

/// The closed product form of f_11 (fusion block).
pub fn f11_closed(z: C64, p: &Params) -> Result<C64> {
    let q = Nome::new(p.xp(2.0 * p.s))?;
    let e = |w: C64| p.xp(w);
    let pole_dist = (z - one()).norm();
    if pole_dist < 1e-12 {
        return Err(DvaError::Pole { location: "z = 1".into(), context: "f11 closed form".into() });
    }
    let num = qpochhammer_inf(e(2.0 * p.s - 2.0) * z, &q, p.eps_tail)
        * qpochhammer_inf(e(2.0 * p.r) * z, &q, p.eps_tail)
        * qpochhammer_inf(e(-2.0 * p.rstar) * z, &q, p.eps_tail);
    let den = qpochhammer_inf(e(C64::new(2.0, 0.0)) * z, &q, p.eps_tail)
        * qpochhammer_inf(e(2.0 * p.rstar + 2.0 * p.s) * z, &q, p.eps_tail)
        * qpochhammer_inf(e(2.0 * p.s - 2.0 * p.r) * z, &q, p.eps_tail);
    Ok(num / den / (one() - z))
}

pub fn f12_closed(z: C64, p: &Params) -> Result<C64> {
    Ok(f11_closed(p.x * z, p)? * f11_closed(z / p.x, p)? / delta_fn(z, p))
}

pub fn f22_closed(z: C64, p: &Params) -> Result<C64> {
    Ok(f12_closed(z / p.x, p)? * f12_closed(p.x * z, p)?)
}

/// g_11 = f_11; g_12(z) = g_11(xz) g_11(x^{-1}z); g_22(z) = g_21(x^{-1}z) g_12(xz).
pub fn g12_closed(z: C64, p: &Params) -> Result<C64> {
    Ok(f11_closed(p.x * z, p)? * f11_closed(z / p.x, p)?)
}

pub fn g22_closed(z: C64, p: &Params) -> Result<C64> {
    Ok(g12_closed(z / p.x, p)? * g12_closed(p.x * z, p)?)
}

/// Series of g_12 in its own argument: exp-series of f11(xz) f11(x^{-1}z).
pub fn series_g12(order: usize, p: &Params) -> PowerSeries {
    PowerSeries::exp_from_log(order, |m| {
        let mf = m as f64;
        let sc = p.xp(C64::new(mf, 0.0)) + p.xp(C64::new(-mf, 0.0));
        log_coeff_f11(m, p) * sc
    })
}

pub fn series_g22(order: usize, p: &Params) -> PowerSeries {
    PowerSeries::exp_from_log(order, |m| {
        let mf = m as f64;
        let sc = p.xp(C64::new(mf, 0.0)) + p.xp(C64::new(-mf, 0.0));
        log_coeff_f11(m, p) * sc * sc
    })
}

/// h(u) = [u]_s [u+r]_s / ([u+1]_s [u+r*]_s).
pub struct HKernel {
    ctx: BracketCtx,
    r: C64,
    rstar: C64,
}

impl HKernel {
    pub fn new(p: &Params) -> Result<Self> {
        Ok(HKernel { ctx: BracketCtx::new(p.s, p)?, r: p.r, rstar: p.rstar })
    }

    /// The r -> -r* involution image h*.
    pub fn new_star(p: &Params) -> Result<Self> {
        Ok(HKernel { ctx: BracketCtx::new(p.s, p)?, r: -p.rstar, rstar: -p.r })
    }

    pub fn eval(&self, u: C64) -> C64 {
        self.ctx.eval(u) * self.ctx.eval(u + self.r)
            / (self.ctx.eval(u + one()) * self.ctx.eval(u + self.rstar))
    }
}

pub fn h_u(u: C64, p: &Params) -> Result<C64> {
    Ok(HKernel::new(p)?.eval(u))
}

pub fn hstar_u(u: C64, p: &Params) -> Result<C64> {
    Ok(HKernel::new_star(p)?.eval(u))
}

/// u = ln z / (2 ln x) with the principal branch; h and friends are
/// single-valued in z (the quadratic prefactors cancel), so the branch
/// choice is immaterial.
pub fn u_of_z(z: C64, p: &Params) -> C64 {
    z.ln() / (2.0 * p.ln_x())
}

pub fn h11_z(z: C64, p: &Params) -> Result<C64> {
    h_u(u_of_z(z, p), p)
}

/// s(z): explicit q-product form, normalized so that the defining property
/// h(u) = s(z) f_11(z) holds exactly. The quadratic bracket prefactors of h
/// contribute a constant x^{2 r*/s} the bare printed product misses.
pub fn s_fun(z: C64, p: &Params) -> Result<C64> {
    let q = Nome::new(p.xp(2.0 * p.s))?;
    let e = |w: C64| p.xp(w);
    let part = |zz: C64| {
        qpochhammer_inf(zz, &q, p.eps_tail)
            * qpochhammer_inf(e(2.0 * p.s - 2.0 * p.r) * zz, &q, p.eps_tail)
            / (qpochhammer_inf(e(2.0 * p.s - 2.0) * zz, &q, p.eps_tail)
                * qpochhammer_inf(e(-2.0 * p.rstar) * zz, &q, p.eps_tail))
    };
    Ok(p.xp(2.0 * p.rstar / p.s - 2.0 * p.rstar) * part(z) * part(z.inv()))
}

/// s*(z): the r -> -r* image, explicit form (prefactor normalized so that
/// h*(u) = s*(z) f_11(z)).
pub fn sstar_fun(z: C64, p: &Params) -> Result<C64> {
    let q = Nome::new(p.xp(2.0 * p.s))?;
    let e = |w: C64| p.xp(w);
    let part = |zz: C64| {
        qpochhammer_inf(zz, &q, p.eps_tail)
            * qpochhammer_inf(e(2.0 * p.s + 2.0 * p.rstar) * zz, &q, p.eps_tail)
            / (qpochhammer_inf(e(2.0 * p.s - 2.0) * zz, &q, p.eps_tail)
                * qpochhammer_inf(e(2.0 * p.r) * zz, &q, p.eps_tail))
    };
    Ok(p.xp(-2.0 * p.r / p.s + 2.0 * p.r) * part(z) * part(z.inv()))
}

pub fn s11_z(z: C64, p: &Params) -> Result<C64> {
    s_fun(z, p)
}

pub fn s12_z(z: C64, p: &Params) -> Result<C64> {
    let x2 = p.x * p.x;
    Ok(s_fun(z / x2, p)? * s_fun(z * x2, p)?)
}

pub fn s22_z(z: C64, p: &Params) -> Result<C64> {
    let x2 = p.x * p.x;
    let s0 = s_fun(z, p)?;
    Ok(s_fun(z / x2, p)? * s0 * s0 * s_fun(z * x2, p)?)
}

/// h_12 in the z-convention of the constant-term machinery:
/// h_12(z) = h_11(x^{-2} z) h_11(x^2 z).
pub fn h12_z(z: C64, p: &Params) -> Result<C64> {
    let x2 = p.x * p.x;
    Ok(h11_z(z / x2, p)? * h11_z(z * x2, p)?)
}

pub fn h22_z(z: C64, p: &Params) -> Result<C64> {
    let x2 = p.x * p.x;
    let h0 = h11_z(z, p)?;
    Ok(h11_z(z / x2, p)? * h0 * h0 * h11_z(z * x2, p)?)
}

/// h_12 in the u-convention: h(u-1) h(u+1). Equals h12_z under z = x^{2u};
/// stored separately so the two printed conventions never alias.
pub fn h12_u(u: C64, p: &Params) -> Result<C64> {
    let h = HKernel::new(p)?;
    Ok(h.eval(u - one()) * h.eval(u + one()))
}

pub fn h22_u(u: C64, p: &Params) -> Result<C64> {
    Ok(h12_u(u - one(), p)? * h12_u(u + one(), p)?)
}

/// The fused T1-T2 kernel h_11(x^{-1}z) h_11(x z), i.e. h(u-1/2) h(u+1/2);
/// this is the convention for which the s=2 simplification h_12 = 1 holds
/// exactly.
pub fn h12_fused_u(u: C64, p: &Params) -> Result<C64> {
    let h = HKernel::new(p)?;
    Ok(h.eval(u - 0.5) * h.eval(u + 0.5))
}

pub fn h22_fused_u(u: C64, p: &Params) -> Result<C64> {
    Ok(h12_fused_u(u - one(), p)? * h12_fused_u(u + one(), p)?)
}

/// eta-twisted kernels of the Dynkin-invariance machinery.
pub fn h12_eta_z(z: C64, p: &Params) -> Result<C64> {
    Ok(h11_z(p.xp(p.s - 1.0) * z, p)? * h11_z(p.xp(1.0 - p.s) * z, p)?)
}

pub fn h22_eta_z(z: C64, p: &Params) -> Result<C64> {
    Ok(h11_z(p.xp(-p.s) * z, p)?
        * h11_z(p.xp(-p.s + 2.0) * z, p)?
        * h11_z(p.xp(p.s - 2.0) * z, p)?
        * h11_z(p.xp(p.s) * z, p)?)
}

pub fn h22_etaeta_z(z: C64, p: &Params) -> Result<C64> {
    let h0 = h11_z(z, p)?;
    Ok(h11_z(p.xp(-2.0 * p.s + 2.0) * z, p)? * h0 * h0 * h11_z(p.xp(2.0 * p.s - 2.0) * z, p)?)
}

/// c_h of the Dynkin warm-up relation
/// h11(z) - h11(x^{2s} z) = c_h (delta(x^2 z) - delta(x^{2r-2+2s} z)).
pub fn const_ch(p: &Params) -> Result<C64> {
    let q = Nome::new(p.xp(2.0 * p.s))?;
    let e = |w: C64| p.xp(w);
    let qp = |z: C64| qpochhammer_inf(z, &q, p.eps_tail);
    let num = qp(e(C64::new(2.0, 0.0)))
        * qp(e(2.0 * p.r - 2.0))
        * qp(e(2.0 * p.s - 2.0))
        * qp(e(2.0 * p.s - 2.0 * p.r + 2.0));
    let den = qp(e(2.0 * p.r - 4.0)) * qp(q.q) * qp(q.q) * qp(e(2.0 * p.s - 2.0 * p.r + 4.0));
    Ok(-num / den)
}

/// t(s) of the s=2 nonlocal layer.
pub fn const_ts(p: &Params) -> Result<C64> {
    let q = Nome::new(p.xp(2.0 * p.r))?;
    let e = |w: C64| p.xp(w);
    let qp = |z: C64| qpochhammer_inf(z, &q, p.eps_tail);
    let br1 = p.bracket_a(one());
    Ok(p.xp(-2.0 * p.rstar / p.r) / br1 * qp(e(2.0 * p.r + 2.0 * p.s - 4.0)) * qp(e(2.0 * p.r - 2.0))
        / (qp(e(2.0 * p.s - 2.0)) * qp(q.q)))
}

/// j_{1,1}(u1,v1|u2,v2) of the s=2 nonlocal layer (brackets at modulus r).
pub fn j11(u1: C64, v1: C64, u2: C64, v2: C64, p: &Params) -> Result<C64> {
    let ctx = BracketCtx::new(p.r, p)?;
    let b = |u: C64| ctx.eval(u);
    let s2 = p.s / 2.0;
    Ok(b(u1 - u2) * b(u1 - u2 + 1.0) * b(v1 - v2) * b(v1 - v2 + 1.0)
        / (b(u1 - v2 + s2) * b(v2 - u1 + s2 - 1.0) * b(v1 - u2 + s2) * b(u2 - v1 + s2 - 1.0)))
}

pub fn j12(u1: C64, v1: C64, v2: C64, p: &Params) -> Result<C64> {
    j11(u1, v1, v2 + 1.0 - p.s / 2.0, v2, p)
}

pub fn j22(v1: C64, v2: C64, p: &Params) -> Result<C64> {
    j11(v1 + 1.0 - p.s / 2.0, v1, v2 + 1.0 - p.s / 2.0, v2, p)
}

/// Named dispatch over the scalar family, per the module contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructName {
    F11,
    F12,
    F22,
    G11,
    G12,
    G22,
    Delta,
    S,
    SStar,
    H,
    HStar,
    H11,
    H12Z,
    H22Z,
    S11,
    S12,
    S22,
    H12Eta,
    H22Eta,
    H22EtaEta,
    FDv,
    FZ,
}

/// Single dispatch point; z-family names take z, u-family names take u.
pub fn eval_family(name: StructName, arg: C64, p: &Params) -> Result<C64> {
    use StructName::*;
    match name {
        F11 | G11 => f11_closed(arg, p),
        F12 => f12_closed(arg, p),
        F22 => f22_closed(arg, p),
        G12 => g12_closed(arg, p),
        G22 => g22_closed(arg, p),
        Delta => Ok(delta_fn(arg, p)),
        S | S11 => s_fun(arg, p),
        SStar => sstar_fun(arg, p),
        H => h_u(arg, p),
        HStar => hstar_u(arg, p),
        H11 => h11_z(arg, p),
        H12Z => h12_z(arg, p),
        H22Z => h22_z(arg, p),
        S12 => s12_z(arg, p),
        S22 => s22_z(arg, p),
        H12Eta => h12_eta_z(arg, p),
        H22Eta => h22_eta_z(arg, p),
        H22EtaEta => h22_etaeta_z(arg, p),
        FDv => Ok(series_fdv(200, p).eval(arg)),
        FZ => Ok(PowerSeries::exp_from_log(200, |m| log_coeff_fz(m, p)).eval(arg.inv())),
    }
}

/// Annulus of analyticity of s(z) around |z| = 1: pole moduli from the
/// denominator q-products on both sides.
pub fn s_annulus(p: &Params) -> (f64, f64) {
    let inner = p
        .xp(2.0 * p.s - 2.0)
        .norm()
        .max(p.xp(-2.0 * p.rstar).norm().min(p.xp(2.0 * p.rstar).norm()));
    (inner, 1.0 / inner)
}

pub fn sstar_annulus(p: &Params) -> (f64, f64) {
    let inner = p
        .xp(2.0 * p.s - 2.0)
        .norm()
        .max(p.xp(2.0 * p.r).norm().min(p.xp(-2.0 * p.r).norm()));
    (inner, 1.0 / inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::laurent_on_circle;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn p_default() -> Params {
        Params::new(0.6, c(2.3, 0.4), c(2.7, 0.0)).unwrap()
    }

    fn close_rel(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn f11_series_constant_term_is_one() {
        let p = p_default();
        let s = series_f11(12, &p);
        assert!((s.c[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn f_series_vs_closed_on_overlap() {
        // the exp-series converges inside the nearest zero/pole of f; compare
        // against the closed product there
        let p = p_default();
        let z = c(0.05, 0.02);
        let s = series_f11(80, &p);
        let closed = f11_closed(z, &p).unwrap();
        assert!(close_rel(s.eval(z), closed, 1e-10), "{} vs {}", s.eval(z), closed);
        let s12 = series_f12(80, &p);
        assert!(close_rel(s12.eval(z), f12_closed(z, &p).unwrap(), 1e-10));
        let s22 = series_f22(80, &p);
        assert!(close_rel(s22.eval(z), f22_closed(z, &p).unwrap(), 1e-10));
    }

    #[test]
    fn fusion_relations() {
        let p = p_default();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let z = c(rng.gen_range(-0.25..0.25), rng.gen_range(-0.25..0.25));
            if z.norm() < 0.02 {
                continue;
            }
            // f12(z) Delta(z) = f11(xz) f11(x^{-1}z)
            let lhs = f12_closed(z, &p).unwrap() * delta_fn(z, &p);
            let rhs = f11_closed(p.x * z, &p).unwrap() * f11_closed(z / p.x, &p).unwrap();
            assert!(close_rel(lhs, rhs, 1e-10));
            // f22(z) = f12(x^{-1}z) f21(xz)
            let lhs = f22_closed(z, &p).unwrap();
            let rhs = f12_closed(z / p.x, &p).unwrap() * f12_closed(p.x * z, &p).unwrap();
            assert!(close_rel(lhs, rhs, 1e-10));
            // g22(z) = g21(x^{-1}z) g12(xz)
            let lhs = g22_closed(z, &p).unwrap();
            let rhs = g12_closed(z / p.x, &p).unwrap() * g12_closed(p.x * z, &p).unwrap();
            assert!(close_rel(lhs, rhs, 1e-10));
        }
    }

    #[test]
    fn h_decomposition_and_star() {
        let p = p_default();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = HKernel::new(&p).unwrap();
        let hs = HKernel::new_star(&p).unwrap();
        for _ in 0..30 {
            let u = c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.6..0.6));
            let z = p.xp(2.0 * u);
            // h(u) = s(z) f11(z)
            let lhs = h.eval(u);
            let rhs = s_fun(z, &p).unwrap() * f11_closed(z, &p).unwrap();
            assert!(close_rel(lhs, rhs, 1e-10), "{lhs} vs {rhs} at u={u}");
            // h*(u) = h(u)|_{r -> -r*}
            let pr = Params::new(p.x, -p.rstar, p.s).unwrap();
            let oracle = HKernel::new(&pr).unwrap().eval(u);
            assert!(close_rel(hs.eval(u), oracle, 1e-11));
            // h*(u) = s*(z) f11(z)
            let rhs2 = sstar_fun(z, &p).unwrap() * f11_closed(z, &p).unwrap();
            assert!(close_rel(hs.eval(u), rhs2, 1e-10));
        }
    }

    #[test]
    fn s_h_ladders() {
        let p = p_default();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x2 = p.x * p.x;
        for _ in 0..20 {
            let u = c(rng.gen_range(-0.2..0.2), rng.gen_range(-0.5..0.5));
            let z = p.xp(2.0 * u);
            // s12, s22 displays
            let lhs = s12_z(z, &p).unwrap();
            let rhs = s_fun(z / x2, &p).unwrap() * s_fun(z * x2, &p).unwrap();
            assert!(close_rel(lhs, rhs, 1e-10));
            let s0 = s_fun(z, &p).unwrap();
            let lhs = s22_z(z, &p).unwrap();
            let rhs = s_fun(z / x2, &p).unwrap() * s0 * s0 * s_fun(z * x2, &p).unwrap();
            assert!(close_rel(lhs, rhs, 1e-10));
            // h22(u) = h12(u-1) h12(u+1) with h12(u) = h(u-1)h(u+1)
            let lhs = h22_u(u, &p).unwrap();
            let rhs = h12_u(u - 1.0, &p).unwrap() * h12_u(u + 1.0, &p).unwrap();
            assert!(close_rel(lhs, rhs, 1e-10));
            // the two h12 conventions agree under z = x^{2u}
            assert!(close_rel(h12_u(u, &p).unwrap(), h12_z(z, &p).unwrap(), 1e-10));
        }
    }

    #[test]
    fn const_c_examples() {
        let p = Params::new(0.5, c(2.0, 0.0), c(2.7, 0.0)).unwrap();
        assert!((const_c(&p) - c(3.75, 0.0)).norm() < 1e-13);
        // r -> 1 (r* -> 0) kills the factor (1 - x^0)
        let p1 = Params::new(0.5, c(1.0, 0.0), c(2.7, 0.0)).unwrap();
        assert!(const_c(&p1).norm() < 1e-15);
    }

    #[test]
    fn ch_relation_and_residue() {
        // h11(z) - h11(x^{2s} z) = c_h (delta(x^2 z) - delta(x^{2r-2+2s} z))
        // in the warm-up regime Re(s) > 2, 1 - Re(s) < Re(r) < 0
        let p = Params::new(0.55, c(-0.4, 0.0), c(2.6, 0.0)).unwrap();
        let ch = const_ch(&p).unwrap();
        // Laurent coefficients on |z| = 1 of both sides; the shifted current
        // h11(x^{2s} z) lives on a different annulus of h11, so its
        // coefficients come from its own expansion, not from scaling
        let arr = laurent_on_circle(|z| h11_z(z, &p).unwrap(), 512, 24);
        let q2s = p.xp(2.0 * p.s);
        let arr_sh = laurent_on_circle(|z| h11_z(q2s * z, &p).unwrap(), 512, 24);
        let g2 = p.xp(2.0 * p.r - 2.0 + 2.0 * p.s);
        let x2 = c(p.x * p.x, 0.0);
        let mut max_dev: f64 = 0.0;
        for n in -10i64..=10 {
            let lhs = arr.get(n) - arr_sh.get(n);
            let rhs = ch
                * (crate::series::powi_c(x2, n) - crate::series::powi_c(g2, n));
            max_dev = max_dev.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
        }
        assert!(max_dev < 1e-9, "coefficient relation dev {max_dev}");
        // residue oracle: c_h = lim (1 - x^2 z) h11(z) as z -> x^{-2}
        let z0 = c(1.0 / (p.x * p.x), 0.0);
        let mut vals = vec![];
        for k in 2..6 {
            let eps = 10f64.powi(-k);
            let z = z0 * (1.0 + eps);
            vals.push((c(1.0, 0.0) - p.x * p.x * z) * h11_z(z, &p).unwrap());
        }
        // Richardson: the limit dominates once eps is small
        let lim = vals[vals.len() - 1];
        assert!(
            (lim - ch).norm() <= 2e-3 * (1.0 + ch.norm()),
            "residue {} vs c_h {}",
            lim,
            ch
        );
    }

    #[test]
    fn ts_value_and_divergence_probe() {
        let p = Params::new(0.6, c(2.3, 0.0), c(1.8, 0.0)).unwrap();
        let t = const_ts(&p).unwrap();
        assert!(t.norm().is_finite() && t.norm() > 0.0);
        // |t(s)/[s-2]_r| grows like 1/|s-2| approaching s = 2
        let mut prev = 0.0;
        for k in 1..=4 {
            let s = 2.0 - 10f64.powi(-k);
            let pk = Params::new(0.6, c(2.3, 0.0), c(s, 0.0)).unwrap();
            let ctx = crate::qseries::BracketCtx::new(pk.r, &pk).unwrap();
            let ratio = (const_ts(&pk).unwrap() / ctx.eval(pk.s - 2.0)).norm();
            if k > 1 {
                assert!(ratio > 5.0 * prev, "divergence probe: {} vs {}", ratio, prev);
            }
            prev = ratio;
        }
        // determinism
        assert_eq!(const_ts(&p).unwrap(), const_ts(&p).unwrap());
    }

    #[test]
    fn j_kernel_substitutions() {
        let p = p_default();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let u1 = c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.3..0.3));
            let v1 = c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.3..0.3));
            let v2 = c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.3..0.3));
            let lhs = j12(u1, v1, v2, &p).unwrap();
            let rhs = j11(u1, v1, v2 + 1.0 - p.s / 2.0, v2, &p).unwrap();
            assert!(close_rel(lhs, rhs, 1e-12));
        }
    }

    #[test]
    fn s_annulus_contains_circle() {
        let p = p_default();
        let (lo, hi) = s_annulus(&p);
        assert!(lo < 1.0 && hi > 1.0);
        // the Laurent coefficients computed on |z|=1 must decay at the window
        let arr = laurent_on_circle(|z| s_fun(z, &p).unwrap(), 256, 40);
        assert!(arr.tail_max(3) < 1e-12, "tail {}", arr.tail_max(3));
        let (lo2, hi2) = sstar_annulus(&p);
        assert!(lo2 < 1.0 && hi2 > 1.0);
    }
}
