//! Declarative vertex-operator engine.
//!
//! Every current is a [`CurrentSpec`]: a sector shift for e^{a iQ}, the
//! z^{b pihat + d} and x^{e pihat} zero-mode data, and the per-mode
//! coefficient pair of the exponential. Products of normal-ordered
//! exponentials reduce exactly by pairwise central contractions; matrix
//! elements between truncated Fock states come out as [`Window`]s.

pub mod appendix;

use crate::error::{DvaError, Result};
use crate::fock::{pairing_g, BasisState, Sector};
use crate::qseries::{BracketCtx, Params};
use crate::series::{powi_c, PowerSeries};
use crate::window::{delta_expand_aligned, Window, Ex, MAXV};
use crate::C64;
use std::sync::Arc;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

type ModeFn = Arc<dyn Fn(i64) -> (C64, C64) + Send + Sync>;

/// A single vertex operator: zero-mode prefactor data plus mode coefficients
/// (c1_m, c2_m) of beta^a_m z^{-m} in the exponent.
#[derive(Clone)]
pub struct CurrentSpec {
    pub name: String,
    /// sector increment of e^{a iQ}
    pub dl: i64,
    pub dk: i64,
    /// z^{b pihat}
    pub b: C64,
    /// constant z power
    pub d: C64,
    /// x^{e pihat}
    pub e: C64,
    modes: ModeFn,
}

impl std::fmt::Debug for CurrentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CurrentSpec({})", self.name)
    }
}

impl CurrentSpec {
    pub fn mode(&self, m: i64) -> (C64, C64) {
        debug_assert!(m != 0);
        (self.modes)(m)
    }

    /// Change of pihat eigenvalue across this current's Q exponential.
    pub fn pi_shift(&self, p: &Params) -> C64 {
        self.dl as f64 * p.r - self.dk as f64 * p.rstar
    }
}

/// The Dynkin automorphism on the catalog: swaps oscillator colors with
/// x^{∓ sm} twists and negates zero modes.
pub fn eta_of(c: &CurrentSpec, p: &Params) -> CurrentSpec {
    let inner = c.modes.clone();
    let pp = *p;
    CurrentSpec {
        name: format!("eta({})", c.name),
        dl: -c.dl,
        dk: -c.dk,
        b: -c.b,
        d: c.d,
        e: -c.e,
        modes: Arc::new(move |m| {
            let (c1, c2) = inner(m);
            (pp.xp(pp.s * m as f64) * c2, pp.xp(-pp.s * m as f64) * c1)
        }),
    }
}

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

fn kappa(p: &Params, m: i64) -> C64 {
    p.xp(p.r * m as f64) - p.xp(-p.r * m as f64)
}

pub fn lambda1(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "Lambda1".into(),
        dl: 0,
        dk: 0,
        b: C64::new(0.0, 0.0),
        d: C64::new(0.0, 0.0),
        e: C64::new(-1.0, 0.0),
        modes: Arc::new(move |m| (kappa(&pp, m), C64::new(0.0, 0.0))),
    }
}

pub fn lambda2(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "Lambda2".into(),
        dl: 0,
        dk: 0,
        b: C64::new(0.0, 0.0),
        d: C64::new(0.0, 0.0),
        e: C64::new(1.0, 0.0),
        modes: Arc::new(move |m| (C64::new(0.0, 0.0), kappa(&pp, m))),
    }
}

/// T2(z) = :Lambda1(x^{-1}z) Lambda2(x z): as a single fused spec.
pub fn t2(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "T2".into(),
        dl: 0,
        dk: 0,
        b: C64::new(0.0, 0.0),
        d: C64::new(0.0, 0.0),
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |m| {
            let k = kappa(&pp, m);
            let xm = pp.xp(C64::new(m as f64, 0.0));
            (k * xm, k / xm)
        }),
    }
}

pub fn f1(p: &Params) -> CurrentSpec {
    CurrentSpec {
        name: "F1".into(),
        dl: 0,
        dk: -2,
        b: 1.0 / p.r,
        d: p.rstar / p.r,
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |_| (C64::new(1.0, 0.0), C64::new(-1.0, 0.0))),
    }
}

pub fn f0(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "F0".into(),
        dl: 0,
        dk: 2,
        b: -1.0 / p.r,
        d: p.rstar / p.r,
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |m| (-pp.xp(pp.s * m as f64), pp.xp(-pp.s * m as f64))),
    }
}

pub fn e1(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "E1".into(),
        dl: -2,
        dk: 0,
        b: -1.0 / p.rstar,
        d: p.r / p.rstar,
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |m| {
            let ratio = pp.bracket_a(pp.r * m as f64) / pp.bracket_a(pp.rstar * m as f64);
            (-ratio, ratio)
        }),
    }
}

pub fn e0(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "E0".into(),
        dl: 2,
        dk: 0,
        b: 1.0 / p.rstar,
        d: p.r / p.rstar,
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |m| {
            let ratio = pp.bracket_a(pp.r * m as f64) / pp.bracket_a(pp.rstar * m as f64);
            (ratio * pp.xp(pp.s * m as f64), -ratio * pp.xp(-pp.s * m as f64))
        }),
    }
}

/// The adjoint-action current A(z).
pub fn cal_a(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "A".into(),
        dl: 0,
        dk: -2,
        b: 1.0 / p.r,
        d: p.rstar / p.r,
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |m| (pp.xp(pp.r * m as f64), -pp.xp(-pp.r * m as f64))),
    }
}

/// The adjoint-action current B(z).
pub fn cal_b(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "B".into(),
        dl: -2,
        dk: 0,
        b: -1.0 / p.rstar,
        d: p.r / p.rstar,
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |m| {
            let ratio = pp.bracket_a(pp.r * m as f64) / pp.bracket_a(pp.rstar * m as f64);
            (-ratio * pp.xp(-pp.rstar * m as f64), ratio * pp.xp(pp.rstar * m as f64))
        }),
    }
}

/// H(z) of the [E1, F1] delta relation.
pub fn cal_h(p: &Params) -> CurrentSpec {
    let pp = *p;
    let rr = p.r * p.rstar;
    CurrentSpec {
        name: "H".into(),
        dl: -2,
        dk: -2,
        b: -1.0 / rr,
        d: 1.0 / rr,
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |m| {
            let ratio =
                pp.bracket_a(C64::new(m as f64, 0.0)) / pp.bracket_a(pp.rstar * m as f64);
            (-ratio, ratio)
        }),
    }
}

/// Lambda1^{DV}(z) with modes in the beta basis ((x z)^{-m} argument).
pub fn lambda_dv1(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "LambdaDV1".into(),
        dl: 0,
        dk: 0,
        b: C64::new(0.0, 0.0),
        d: C64::new(0.0, 0.0),
        e: C64::new(-1.0, 0.0),
        modes: Arc::new(move |m| {
            let mf = m as f64;
            let c = kappa(&pp, m) * pp.xp(C64::new(-mf, 0.0))
                / (pp.xp(C64::new(mf, 0.0)) + pp.xp(C64::new(-mf, 0.0)));
            (c, -c)
        }),
    }
}

/// Lambda2^{DV}(z); the printed x^{-pihat} zero mode is corrected to
/// x^{+pihat} (required by Lambda2 = Lambda2^{DV} Z; flagged in the docs).
pub fn lambda_dv2(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "LambdaDV2".into(),
        dl: 0,
        dk: 0,
        b: C64::new(0.0, 0.0),
        d: C64::new(0.0, 0.0),
        e: C64::new(1.0, 0.0),
        modes: Arc::new(move |m| {
            let mf = m as f64;
            let c = -kappa(&pp, m) * pp.xp(C64::new(mf, 0.0))
                / (pp.xp(C64::new(mf, 0.0)) + pp.xp(C64::new(-mf, 0.0)));
            (c, -c)
        }),
    }
}

/// Z(z), the B^2-boson exponential.
pub fn zcal(p: &Params) -> CurrentSpec {
    let pp = *p;
    CurrentSpec {
        name: "Z".into(),
        dl: 0,
        dk: 0,
        b: C64::new(0.0, 0.0),
        d: C64::new(0.0, 0.0),
        e: C64::new(0.0, 0.0),
        modes: Arc::new(move |m| {
            let mf = m as f64;
            let c = kappa(&pp, m) / (pp.xp(C64::new(mf, 0.0)) + pp.xp(C64::new(-mf, 0.0)));
            (c * pp.xp(C64::new(mf, 0.0)), c * pp.xp(C64::new(-mf, 0.0)))
        }),
    }
}

// ---------------------------------------------------------------------------
// products
// ---------------------------------------------------------------------------

/// One factor of an operator product: a current attached to variable
/// `var` with argument `scale * z_var`.
#[derive(Debug, Clone)]
pub struct Factor {
    pub spec: CurrentSpec,
    pub var: usize,
    pub scale: C64,
}

impl Factor {
    pub fn new(spec: CurrentSpec, var: usize, scale: C64) -> Self {
        Factor { spec, var, scale }
    }

    /// Effective mode coefficients including the argument scale.
    fn eff_mode(&self, m: i64) -> (C64, C64) {
        let (c1, c2) = self.spec.mode(m);
        let sc = powi_c(self.scale, -m);
        (c1 * sc, c2 * sc)
    }
}

/// A leg of an operator word: a single current or a sum (T1 = Lambda1 + Lambda2).
#[derive(Debug, Clone)]
pub enum Leg {
    Single(Factor),
    Sum(Vec<(C64, Factor)>),
}

pub fn leg_t1(p: &Params, var: usize, scale: C64) -> Leg {
    Leg::Sum(vec![
        (one(), Factor::new(lambda1(p), var, scale)),
        (one(), Factor::new(lambda2(p), var, scale)),
    ])
}

pub fn leg_single(spec: CurrentSpec, var: usize, scale: C64) -> Leg {
    Leg::Single(Factor::new(spec, var, scale))
}

/// Expand a word of legs into plain factor words with coefficients.
pub fn expand_word(legs: &[Leg]) -> Vec<(C64, Vec<Factor>)> {
    let mut out: Vec<(C64, Vec<Factor>)> = vec![(one(), vec![])];
    for leg in legs {
        let mut next = vec![];
        match leg {
            Leg::Single(f) => {
                for (c, w) in &out {
                    let mut w2 = w.clone();
                    w2.push(f.clone());
                    next.push((*c, w2));
                }
            }
            Leg::Sum(items) => {
                for (c, w) in &out {
                    for (ci, f) in items {
                        let mut w2 = w.clone();
                        w2.push(f.clone());
                        next.push((c * ci, w2));
                    }
                }
            }
        }
        out = next;
    }
    out
}

/// Zero-mode data of a normal-ordered factor word acting on a ket sector.
#[derive(Debug, Clone)]
pub struct ZeroModes {
    pub out_sector: Sector,
    pub var_offsets: [C64; MAXV],
    pub scalar: C64,
}

pub fn zero_modes(word: &[Factor], ket: Sector, p: &Params) -> ZeroModes {
    let n = word.len();
    let mut var_offsets = [C64::new(0.0, 0.0); MAXV];
    let mut scalar = one();
    let mut out = ket;
    // pihat seen by factor i = pihat(ket) + sum of shifts of factors to its right
    for i in 0..n {
        let f = &word[i];
        let mut pi = ket.pihat(p);
        for g in word.iter().skip(i + 1) {
            pi += g.spec.pi_shift(p);
        }
        let o = f.spec.b * pi + f.spec.d;
        var_offsets[f.var] += o;
        // (scale z)^o and x^{e pi}
        scalar *= cpow(f.scale, o) * p.xp(f.spec.e * pi);
    }
    for f in word {
        out = out.shifted(f.spec.dl, f.spec.dk);
    }
    ZeroModes { out_sector: out, var_offsets, scalar }
}

fn cpow(base: C64, expo: C64) -> C64 {
    if expo.norm() == 0.0 {
        one()
    } else {
        (expo * base.ln()).exp()
    }
}

/// Coefficient of w^m (w = z_right/z_left) in the log of the pairwise
/// contraction factor.
pub fn contraction_log_coeff(left: &Factor, right: &Factor, m: usize, p: &Params) -> C64 {
    let mi = m as i64;
    let (l1, l2) = left.eff_mode(mi);
    let (r1, r2) = right.eff_mode(-mi);
    let mut c = C64::new(0.0, 0.0);
    c += l1 * r1 * pairing_g(m as u32, 1, 1, p);
    c += l1 * r2 * pairing_g(m as u32, 1, 2, p);
    c += l2 * r1 * pairing_g(m as u32, 2, 1, p);
    c += l2 * r2 * pairing_g(m as u32, 2, 2, p);
    -c / ((m * m) as f64)
}

pub fn contraction_series(left: &Factor, right: &Factor, order: usize, p: &Params) -> PowerSeries {
    PowerSeries::exp_from_log(order, |m| contraction_log_coeff(left, right, m, p))
}

// ---------------------------------------------------------------------------
// Wick evaluation
// ---------------------------------------------------------------------------

/// Oscillator part of <bra| :prod factors: |ket>: a Laurent window over the
/// word variables (no zero modes, no contraction factors).
pub fn wick_window(
    word: &[Factor],
    bra: &BasisState,
    ket: &BasisState,
    p: &Params,
    bound: i32,
    nv: usize,
) -> Window {
    let bm = bra.modes();
    let km = ket.modes();

    // scalar window for an unmatched bra mode (color a, +m):
    // t = -(1/m) sum_f sum_b c_{f,b}(-m) scale_f^m g^{ab}_m z_{var_f}^{+m}
    let t_window = |a: u8, m: u32| -> Vec<(Ex, C64)> {
        let mut terms = vec![];
        for f in word {
            let (c1, c2) = f.eff_mode(-(m as i64));
            let coeff = -(c1 * pairing_g(m, a, 1, p) + c2 * pairing_g(m, a, 2, p)) / m as f64;
            if coeff.norm() > 0.0 {
                let mut e = [0i32; MAXV];
                e[f.var] += m as i32;
                terms.push((e, coeff));
            }
        }
        terms
    };
    // scalar window for an unmatched ket mode (color b, -n):
    // s = (1/n) sum_f sum_a c_{f,a}(n) scale_f^{-n} g^{ab}_n z_{var_f}^{-n}
    let s_window = |b: u8, n: u32| -> Vec<(Ex, C64)> {
        let mut terms = vec![];
        for f in word {
            let (c1, c2) = f.eff_mode(n as i64);
            let coeff = (c1 * pairing_g(n, 1, b, p) + c2 * pairing_g(n, 2, b, p)) / n as f64;
            if coeff.norm() > 0.0 {
                let mut e = [0i32; MAXV];
                e[f.var] -= n as i32;
                terms.push((e, coeff));
            }
        }
        terms
    };

    fn mul_small(w: &Window, terms: &[(Ex, C64)]) -> Window {
        let mut out = Window::new(w.nv, w.bound);
        out.offsets = w.offsets;
        out.dropped = w.dropped;
        for (e, v) in &w.terms {
            for (de, dv) in terms {
                let mut e2 = *e;
                for i in 0..MAXV {
                    e2[i] += de[i];
                }
                out.add_term(e2, v * dv);
            }
        }
        out
    }

    fn go(
        i: usize,
        bm: &[(u8, u32)],
        km: &[(u8, u32)],
        used: &mut Vec<bool>,
        p: &Params,
        nv: usize,
        bound: i32,
        t_window: &dyn Fn(u8, u32) -> Vec<(Ex, C64)>,
        s_window: &dyn Fn(u8, u32) -> Vec<(Ex, C64)>,
    ) -> Window {
        if i == bm.len() {
            // leftover ket modes all take their s-scalars
            let mut w = Window::constant(nv, bound, C64::new(1.0, 0.0));
            for (j, &(b, n)) in km.iter().enumerate() {
                if !used[j] {
                    w = mul_small(&w, &s_window(b, n));
                }
            }
            return w;
        }
        let (a, m) = bm[i];
        // bra mode takes its t-scalar
        let rest = go(i + 1, bm, km, used, p, nv, bound, t_window, s_window);
        let mut acc = mul_small(&rest, &t_window(a, m));
        // or pairs with an unused ket mode of the same m
        for j in 0..km.len() {
            let (b, n) = km[j];
            if used[j] || n != m {
                continue;
            }
            used[j] = true;
            let sub = go(i + 1, bm, km, used, p, nv, bound, t_window, s_window);
            used[j] = false;
            let _ = acc.add_scaled(&sub.scaled(pairing_g(m, a, b, p)), one());
        }
        acc
    }

    let mut used = vec![false; km.len()];
    go(0, &bm, &km, &mut used, p, nv, bound, &t_window, &s_window)
}

#[derive(Debug, Clone, Copy)]
pub struct MeOpts {
    /// Contraction series truncation order.
    pub order: usize,
    /// Window bound per variable.
    pub bound: i32,
    /// Number of window variables (residual windows mix words over
    /// different variable subsets).
    pub nv: usize,
}

impl MeOpts {
    pub fn new(order: usize, bound: i32) -> Self {
        MeOpts { order, bound, nv: 2 }
    }

    pub fn with_nv(mut self, nv: usize) -> Self {
        self.nv = nv;
        self
    }
}

/// Matrix element of a plain factor word: zero modes, pairwise contraction
/// series and the Wick window, assembled into one window with offsets.
pub fn matrix_element_word(
    word: &[Factor],
    bra: &BasisState,
    ket: &BasisState,
    p: &Params,
    opts: MeOpts,
) -> Window {
    let nv = opts.nv.max(word.iter().map(|f| f.var + 1).max().unwrap_or(1));
    let zm = zero_modes(word, ket.sector, p);
    if zm.out_sector != bra.sector {
        return Window::new(nv, opts.bound);
    }
    let mut w = wick_window(word, bra, ket, p, opts.bound, nv).scaled(zm.scalar);
    w.offsets = zm.var_offsets;
    for i in 0..word.len() {
        for j in (i + 1)..word.len() {
            if word[i].var == word[j].var {
                // same-point products are supported only for pairs whose
                // contraction vanishes identically (the B-boson split);
                // summing the float residue of the cancelling g-products
                // would otherwise poison the window
                for m in 1..=opts.order.min(16) {
                    let l = contraction_log_coeff(&word[i], &word[j], m, p);
                    let scale = contraction_abs_scale(&word[i], &word[j], m, p);
                    assert!(
                        l.norm() <= 1e-9 * (1.0 + scale),
                        "same-point product of {} and {} has a nonzero contraction",
                        word[i].spec.name,
                        word[j].spec.name
                    );
                }
                continue;
            }
            let ps = contraction_series(&word[i], &word[j], opts.order, p);
            w = w.mul_ratio_series(word[i].var, word[j].var, &ps);
        }
    }
    w
}

/// Magnitude scale of the contraction coefficient's constituent products,
/// for normalized zero tests.
pub fn contraction_abs_scale(left: &Factor, right: &Factor, m: usize, p: &Params) -> f64 {
    let mi = m as i64;
    let (l1, l2) = left.eff_mode(mi);
    let (r1, r2) = right.eff_mode(-mi);
    let mut s = 0.0f64;
    for (a, la) in [(1u8, l1), (2, l2)] {
        for (b, rb) in [(1u8, r1), (2, r2)] {
            s += (la * rb * pairing_g(m as u32, a, b, p)).norm();
        }
    }
    s / ((m * m) as f64)
}

/// Matrix element of a word of legs (sums expanded).
pub fn matrix_element(
    legs: &[Leg],
    bra: &BasisState,
    ket: &BasisState,
    p: &Params,
    opts: MeOpts,
) -> Result<Window> {
    let expansions = expand_word(legs);
    let nv = opts.nv.max(expansions[0].1.iter().map(|f| f.var + 1).max().unwrap_or(1));
    let mut acc: Option<Window> = None;
    for (coeff, word) in &expansions {
        let w = matrix_element_word(word, bra, ket, p, opts);
        match &mut acc {
            None => acc = Some(w.scaled(*coeff)),
            Some(a) => a.add_scaled(&w, *coeff)?,
        }
    }
    Ok(acc.unwrap_or_else(|| Window::new(nv, opts.bound)))
}

// ---------------------------------------------------------------------------
// relations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DVirRel {
    R1,
    R2,
    R3,
}

/// LHS-minus-RHS window of a defining relation between fixed states.
/// Returns the residual window and the magnitude scale of the sides.
pub fn defining_relation_residual(
    rel: DVirRel,
    bra: &BasisState,
    ket: &BasisState,
    p: &Params,
    opts: MeOpts,
) -> Result<(Window, f64)> {
    let f11 = crate::structure::series_f11(opts.order, p);
    let f12 = crate::structure::series_f12(opts.order, p);
    let f22 = crate::structure::series_f22(opts.order, p);
    let xinv = C64::new(1.0 / p.x, 0.0);
    match rel {
        DVirRel::R1 => {
            let a = matrix_element(&[leg_t1(p, 0, one()), leg_t1(p, 1, one())], bra, ket, p, opts)?
                .mul_ratio_series(0, 1, &f11);
            let b = matrix_element(&[leg_t1(p, 1, one()), leg_t1(p, 0, one())], bra, ket, p, opts)?
                .mul_ratio_series(1, 0, &f11);
            let c = crate::structure::const_c(p);
            let gam = p.xp(C64::new(2.0, 0.0));
            let t20 = matrix_element(&[leg_single(t2(p), 0, xinv)], bra, ket, p, opts)?;
            let t21 = matrix_element(&[leg_single(t2(p), 1, xinv)], bra, ket, p, opts)?;
            let zero_off = [C64::new(0.0, 0.0); MAXV];
            // delta(x^2 z2/z1): gamma = x^2, b-var = 1 (z2), a-var = 0 (z1)
            let d0 = delta_expand_aligned(gam, 0, 1, &t20, &zero_off, opts.bound)?;
            let d1 = delta_expand_aligned(gam, 1, 0, &t21, &zero_off, opts.bound)?;
            let scale = a.max_abs().max(b.max_abs()).max((d0.max_abs() + d1.max_abs()) * c.norm());
            let mut res = a;
            res.add_scaled(&b, -one())?;
            res.add_scaled(&d0, -c)?;
            res.add_scaled(&d1, c)?;
            Ok((res, scale))
        }
        DVirRel::R2 => {
            let a = matrix_element(
                &[leg_t1(p, 0, one()), leg_single(t2(p), 1, one())],
                bra,
                ket,
                p,
                opts,
            )?
            .mul_ratio_series(0, 1, &f12);
            let b = matrix_element(
                &[leg_single(t2(p), 1, one()), leg_t1(p, 0, one())],
                bra,
                ket,
                p,
                opts,
            )?
            .mul_ratio_series(1, 0, &f12);
            let scale = a.max_abs().max(b.max_abs());
            let mut res = a;
            res.add_scaled(&b, -one())?;
            Ok((res, scale))
        }
        DVirRel::R3 => {
            let a = matrix_element(
                &[leg_single(t2(p), 0, one()), leg_single(t2(p), 1, one())],
                bra,
                ket,
                p,
                opts,
            )?
            .mul_ratio_series(0, 1, &f22);
            let b = matrix_element(
                &[leg_single(t2(p), 1, one()), leg_single(t2(p), 0, one())],
                bra,
                ket,
                p,
                opts,
            )?
            .mul_ratio_series(1, 0, &f22);
            let scale = a.max_abs().max(b.max_abs());
            let mut res = a;
            res.add_scaled(&b, -one())?;
            Ok((res, scale))
        }
    }
}

/// The eight adjoint-action brackets [Lambda_i(z1), S_j(z2)].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointRel {
    L1F1,
    L2F1,
    L1F0,
    L2F0,
    L1E1,
    L2E1,
    L1E0,
    L2E0,
}

pub fn adjoint_action_residual(
    which: AdjointRel,
    bra: &BasisState,
    ket: &BasisState,
    p: &Params,
    opts: MeOpts,
) -> Result<(Window, f64)> {
    use AdjointRel::*;
    let xr = |w: C64| p.xp(w);
    // (lambda, screen, coeff, gamma of delta(gamma z1/z2), rhs current, rhs arg scale)
    let (lam, scr, coeff, gamma, rhs, rhs_scale) = match which {
        L1F1 => (lambda1(p), f1(p), xr(-p.rstar) - xr(p.rstar), xr(p.r), cal_a(p), xr(-p.r)),
        L2F1 => (lambda2(p), f1(p), xr(p.rstar) - xr(-p.rstar), xr(-p.r), cal_a(p), xr(p.r)),
        L1F0 => (
            lambda1(p),
            f0(p),
            xr(p.rstar) - xr(-p.rstar),
            xr(-p.r + p.s),
            eta_of(&cal_a(p), p),
            xr(p.r),
        ),
        L2F0 => (
            lambda2(p),
            f0(p),
            xr(-p.rstar) - xr(p.rstar),
            xr(p.r - p.s),
            eta_of(&cal_a(p), p),
            xr(-p.r),
        ),
        L1E1 => (lambda1(p), e1(p), xr(p.r) - xr(-p.r), xr(-p.rstar), cal_b(p), xr(p.rstar)),
        L2E1 => (lambda2(p), e1(p), xr(-p.r) - xr(p.r), xr(p.rstar), cal_b(p), xr(-p.rstar)),
        L1E0 => (
            lambda1(p),
            e0(p),
            xr(-p.r) - xr(p.r),
            xr(p.rstar + p.s),
            eta_of(&cal_b(p), p),
            xr(-p.rstar),
        ),
        L2E0 => (
            lambda2(p),
            e0(p),
            xr(p.r) - xr(-p.r),
            xr(-p.rstar - p.s),
            eta_of(&cal_b(p), p),
            xr(p.rstar),
        ),
    };
    let a = matrix_element_word(
        &[Factor::new(lam.clone(), 0, one()), Factor::new(scr.clone(), 1, one())],
        bra,
        ket,
        p,
        opts,
    );
    let b = matrix_element_word(
        &[Factor::new(scr, 1, one()), Factor::new(lam, 0, one())],
        bra,
        ket,
        p,
        opts,
    );
    let payload =
        matrix_element_word(&[Factor::new(rhs, 1, rhs_scale)], bra, ket, p, opts);
    // delta(gamma z1/z2): b-var = 0 (z1), a-var = 1 (z2)
    let rhs_w = delta_expand_aligned(gamma, 1, 0, &payload, &a.offsets, opts.bound)?;
    let scale = a.max_abs().max(b.max_abs()).max(rhs_w.max_abs() * coeff.norm());
    let mut res = a;
    res.add_scaled(&b, -one())?;
    res.add_scaled(&rhs_w, -coeff)?;
    Ok((res, scale))
}

/// [E1(z1), F1(z2)] against (1/(x-x^{-1}))(delta(x z2/z1) H(x^r z2) -
/// delta(x z1/z2) H(x^{-r} z2)); `eta_image` runs the [E0, F0] variant.
pub fn ef_delta_residual(
    bra: &BasisState,
    ket: &BasisState,
    p: &Params,
    opts: MeOpts,
    eta_image: bool,
) -> Result<(Window, f64)> {
    let (ecur, fcur, hcur) = if eta_image {
        (e0(p), f0(p), eta_of(&cal_h(p), p))
    } else {
        (e1(p), f1(p), cal_h(p))
    };
    let a = matrix_element_word(
        &[Factor::new(ecur.clone(), 0, one()), Factor::new(fcur.clone(), 1, one())],
        bra,
        ket,
        p,
        opts,
    );
    let b = matrix_element_word(
        &[Factor::new(fcur, 1, one()), Factor::new(ecur, 0, one())],
        bra,
        ket,
        p,
        opts,
    );
    let hp = matrix_element_word(&[Factor::new(hcur.clone(), 1, p.xp(p.r))], bra, ket, p, opts);
    let hm = matrix_element_word(&[Factor::new(hcur, 1, p.xp(-p.r))], bra, ket, p, opts);
    let xg = C64::new(p.x, 0.0);
    // delta(x z2/z1): b-var 1, a-var 0; delta(x z1/z2): b-var 0, a-var 1
    let d0 = delta_expand_aligned(xg, 0, 1, &hp, &a.offsets, opts.bound)?;
    let d1 = delta_expand_aligned(xg, 1, 0, &hm, &a.offsets, opts.bound)?;
    let pref = 1.0 / (p.x - 1.0 / p.x);
    let scale = a.max_abs().max(b.max_abs()).max((d0.max_abs() + d1.max_abs()) * pref.abs());
    let mut res = a;
    res.add_scaled(&b, -one())?;
    res.add_scaled(&d0, -C64::new(pref, 0.0))?;
    res.add_scaled(&d1, C64::new(pref, 0.0))?;
    Ok((res, scale))
}

/// E1(z1) F0(z2) - F0(z2) E1(z1): commutes exactly (no delta term).
pub fn e1f0_commutation_residual(
    bra: &BasisState,
    ket: &BasisState,
    p: &Params,
    opts: MeOpts,
) -> Result<(Window, f64)> {
    let a = matrix_element_word(
        &[Factor::new(e1(p), 0, one()), Factor::new(f0(p), 1, one())],
        bra,
        ket,
        p,
        opts,
    );
    let b = matrix_element_word(
        &[Factor::new(f0(p), 1, one()), Factor::new(e1(p), 0, one())],
        bra,
        ket,
        p,
        opts,
    );
    let scale = a.max_abs().max(b.max_abs());
    let mut res = a;
    res.add_scaled(&b, -one())?;
    Ok((res, scale))
}

// ---------------------------------------------------------------------------
// screening exchange relations (scalar checks)
// ---------------------------------------------------------------------------

/// The eight exchange relations of the four regime blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeRel {
    FFSameRPos,
    F0F1RPos,
    FFSameRNeg,
    F0F1RNeg,
    EESameRsPos,
    E0E1RsPos,
    EESameRsNeg,
    E0E1RsNeg,
}

impl ExchangeRel {
    pub fn all() -> [ExchangeRel; 8] {
        use ExchangeRel::*;
        [FFSameRPos, F0F1RPos, FFSameRNeg, F0F1RNeg, EESameRsPos, E0E1RsPos, EESameRsNeg, E0E1RsNeg]
    }

    pub fn name(&self) -> &'static str {
        use ExchangeRel::*;
        match self {
            FFSameRPos => "F_j F_j, Re(r)>0",
            F0F1RPos => "F_0 F_1, Re(r)>0",
            FFSameRNeg => "F_j F_j, Re(r)<0",
            F0F1RNeg => "F_0 F_1, Re(r)<0",
            EESameRsPos => "E_j E_j, Re(r*)>0",
            E0E1RsPos => "E_0 E_1, Re(r*)>0",
            EESameRsNeg => "E_j E_j, Re(r*)<0",
            E0E1RsNeg => "E_0 E_1, Re(r*)<0",
        }
    }

    fn regime_ok(&self, p: &Params) -> bool {
        use ExchangeRel::*;
        match self {
            FFSameRPos | F0F1RPos => p.r.re > 0.0,
            FFSameRNeg | F0F1RNeg => p.r.re < 0.0,
            EESameRsPos | E0E1RsPos => p.rstar.re > 0.0,
            EESameRsNeg | E0E1RsNeg => p.rstar.re < 0.0,
        }
    }
}

/// Closed contraction factors per regime as q-product data.
pub struct PochForm {
    pub num: Vec<(C64, C64)>,
    pub den: Vec<(C64, C64)>,
}

impl PochForm {
    /// Factor value at w; factors with q = 0 are plain (1 - a w).
    pub fn eval(&self, w: C64, p: &Params) -> C64 {
        let f = |a: C64, q: C64, w: C64| -> C64 {
            if q.norm() == 0.0 {
                one() - a * w
            } else {
                crate::qseries::qpochhammer_inf(a * w, &crate::qseries::Nome { q }, p.eps_tail)
            }
        };
        let mut v = one();
        for &(a, q) in &self.num {
            v *= f(a, q, w);
        }
        for &(a, q) in &self.den {
            v /= f(a, q, w);
        }
        v
    }

    /// Coefficient of w^m in the log: -sum_num a^m/(m(1-q^m)) + sum_den ...
    pub fn log_coeff(&self, m: usize) -> C64 {
        let mf = m as f64;
        let term = |a: C64, q: C64| -> C64 {
            let qm = if q.norm() == 0.0 { C64::new(0.0, 0.0) } else { powi_c(q, m as i64) };
            powi_c(a, m as i64) / (mf * (one() - qm))
        };
        let mut v = C64::new(0.0, 0.0);
        for &(a, q) in &self.num {
            v -= term(a, q);
        }
        for &(a, q) in &self.den {
            v += term(a, q);
        }
        v
    }
}

/// Regime-gated closed contraction form for the screening pairs used by the
/// exchange checks and the nonlocal quadrature. The forms at Re>0 regimes
/// are the appendix entries; the opposite-regime variants are the analogous
/// geometric expansions in the mirrored nome.
pub fn screening_closed_form(rel: ExchangeRel, p: &Params) -> PochForm {
    use ExchangeRel::*;
    let e = |w: C64| p.xp(w);
    let z = C64::new(0.0, 0.0);
    match rel {
        FFSameRPos => PochForm {
            num: vec![(one(), z), (e(C64::new(2.0, 0.0)), e(2.0 * p.r))],
            den: vec![(e(2.0 * p.r - 2.0), e(2.0 * p.r))],
        },
        FFSameRNeg => PochForm {
            num: vec![(one(), z), (e(C64::new(-2.0, 0.0)), e(-2.0 * p.r))],
            den: vec![(e(2.0 - 2.0 * p.r), e(-2.0 * p.r))],
        },
        F0F1RPos => PochForm {
            num: vec![(e(2.0 * p.r - 2.0 + p.s), e(2.0 * p.r)), (e(2.0 * p.r - p.s), e(2.0 * p.r))],
            den: vec![(e(p.s), e(2.0 * p.r)), (e(2.0 - p.s), e(2.0 * p.r))],
        },
        F0F1RNeg => PochForm {
            num: vec![(e(p.s - 2.0 * p.r), e(-2.0 * p.r)), (e(2.0 - p.s - 2.0 * p.r), e(-2.0 * p.r))],
            den: vec![(e(p.s - 2.0), e(-2.0 * p.r)), (e(-p.s), e(-2.0 * p.r))],
        },
        EESameRsPos => PochForm {
            num: vec![(one(), z), (e(C64::new(-2.0, 0.0)), e(2.0 * p.rstar))],
            den: vec![(e(2.0 * p.rstar + 2.0), e(2.0 * p.rstar))],
        },
        EESameRsNeg => PochForm {
            num: vec![(one(), z), (e(C64::new(2.0, 0.0)), e(-2.0 * p.rstar))],
            den: vec![(e(-2.0 * p.rstar - 2.0), e(-2.0 * p.rstar))],
        },
        E0E1RsPos => PochForm {
            num: vec![
                (e(2.0 * p.rstar + p.s), e(2.0 * p.rstar)),
                (e(2.0 * p.rstar + 2.0 - p.s), e(2.0 * p.rstar)),
            ],
            den: vec![(e(-p.s), e(2.0 * p.rstar)), (e(p.s - 2.0), e(2.0 * p.rstar))],
        },
        E0E1RsNeg => PochForm {
            num: vec![
                (e(p.s - 2.0 - 2.0 * p.rstar), e(-2.0 * p.rstar)),
                (e(-p.s - 2.0 * p.rstar), e(-2.0 * p.rstar)),
            ],
            den: vec![(e(p.s), e(-2.0 * p.rstar)), (e(2.0 - p.s), e(-2.0 * p.rstar))],
        },
    }
}

/// Scalar symmetry residual of an exchange relation, sampled at `samples`
/// seeded points. Returns the per-point relative residuals.
pub fn exchange_relation_check(
    rel: ExchangeRel,
    p: &Params,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    if !rel.regime_ok(p) {
        return Err(DvaError::Domain(format!(
            "exchange relation {} outside its regime at r = {}",
            rel.name(),
            p.r
        )));
    }
    use ExchangeRel::*;
    // bracket modulus and cross z1 exponent of the pair
    let (rho, cross): (C64, C64) = match rel {
        FFSameRPos | F0F1RPos => (p.r, 2.0 * p.rstar / p.r),
        FFSameRNeg | F0F1RNeg => (-p.r, 2.0 * p.rstar / p.r),
        EESameRsPos | E0E1RsPos => (p.rstar, 2.0 * p.r / p.rstar),
        EESameRsNeg | E0E1RsNeg => (-p.rstar, 2.0 * p.r / p.rstar),
    };
    let cross = match rel {
        F0F1RPos | F0F1RNeg | E0E1RsPos | E0E1RsNeg => -cross,
        _ => cross,
    };
    let ctx = BracketCtx::new(rho, p)?;
    // theta ratio(u) for the left ordering; right ordering is ratio(-u)
    let ratio = |u: C64| -> C64 {
        match rel {
            FFSameRPos => ctx.eval(u) / ctx.eval(u - 1.0),
            FFSameRNeg => ctx.eval(u) / ctx.eval(u + 1.0),
            F0F1RPos => ctx.eval(u + p.s / 2.0 - 1.0) / ctx.eval(u + p.s / 2.0),
            F0F1RNeg => ctx.eval(u - p.s / 2.0 + 1.0) / ctx.eval(u - p.s / 2.0),
            EESameRsPos => ctx.eval(u) / ctx.eval(u + 1.0),
            EESameRsNeg => ctx.eval(u) / ctx.eval(u - 1.0),
            E0E1RsPos => ctx.eval(u - p.s / 2.0 + 1.0) / ctx.eval(u - p.s / 2.0),
            E0E1RsNeg => ctx.eval(u + p.s / 2.0 - 1.0) / ctx.eval(u + p.s / 2.0),
        }
    };
    let form = screening_closed_form(rel, p);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    let mut tries = 0;
    while out.len() < samples {
        tries += 1;
        if tries > 50 * samples {
            return Err(DvaError::Sampling("exchange check: pole avoidance exhausted".into()));
        }
        // points on |z1| = |z2| = 1 with a pole margin in u
        let u = C64::new(0.0, rng.gen_range(-1.2..1.2));
        if u.norm() < 5e-2 {
            continue;
        }
        let w = p.xp(-2.0 * u); // z2/z1 with z_j = x^{2 u_j}, u = u1 - u2
        // Both sides divided by (z1 z2)^{cross/2}: the left ordering carries
        // z1^{cross}, the right z2^{cross}, so the symmetric split leaves
        // x^{± u cross}.
        let lhs = ratio(u) * p.xp(u * cross) * form.eval(w, p);
        let rhs = ratio(-u) * p.xp(-u * cross) * form.eval(w.inv(), p);
        let denom = lhs.norm() + rhs.norm() + 1e-30;
        out.push((lhs - rhs).norm() / denom);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// T1 = T^DV * Z decomposition
// ---------------------------------------------------------------------------

/// Pieces of the dv-decomposition check; all residuals are relative.
#[derive(Debug, Clone)]
pub struct DvCheck {
    pub b_commutator_dev: f64,
    pub b_commutator_dev_s2: f64,
    pub product_dev: f64,
    pub tdv_z_commute_dev: f64,
    pub fz_exchange_dev: f64,
    pub fz_one_at_s2: f64,
}

/// [B^i_n, B^j_{-n}] assembled from the oscillator pairing.
pub fn b_boson_bracket(i: u8, j: u8, n: u32, p: &Params) -> C64 {
    let xm = p.xp(C64::new(n as f64, 0.0));
    let cvec = |which: u8| -> (C64, C64) {
        match which {
            1 => (one(), -one()),
            2 => (xm, one() / xm),
            _ => unreachable!(),
        }
    };
    // entries of B^i_{+n} (m = +n) and B^j_{-n}: the mode coefficients of the
    // defining linear map have x^{±m} with m the mode index, so B^j_{-n}
    // carries x^{∓n}
    let (a1, a2) = cvec(i);
    let (b1, b2) = match j {
        1 => (one(), -one()),
        2 => (one() / xm, xm),
        _ => unreachable!(),
    };
    a1 * b1 * pairing_g(n, 1, 1, p)
        + a1 * b2 * pairing_g(n, 1, 2, p)
        + a2 * b1 * pairing_g(n, 2, 1, p)
        + a2 * b2 * pairing_g(n, 2, 2, p)
}

pub fn dv_decomposition_check(p: &Params, opts: MeOpts) -> Result<DvCheck> {
    let mut dev_b: f64 = 0.0;
    for n in 1..=10u32 {
        let nf = n as f64;
        let xn = p.xp(C64::new(nf, 0.0));
        let coshlike = xn + one() / xn;
        // [B^1_n, B^1_{-n}] = n [r*n]/[rn] (x^n + x^{-n})
        let b11 = b_boson_bracket(1, 1, n, p);
        let f11 = nf * p.bracket_a(p.rstar * nf) / p.bracket_a(p.r * nf) * coshlike;
        dev_b = dev_b.max((b11 - f11).norm() / (1.0 + f11.norm()));
        // [B^1_n, B^2_{-n}] = 0
        let b12 = b_boson_bracket(1, 2, n, p);
        dev_b = dev_b.max(b12.norm() / (1.0 + f11.norm()));
        // [B^2_n, B^2_{-n}] = n [r*n][(s-2)n]/([rn][sn]) (x^n + x^{-n})
        let b22 = b_boson_bracket(2, 2, n, p);
        let f22 = nf * p.bracket_a(p.rstar * nf) * p.bracket_a((p.s - 2.0) * nf)
            / (p.bracket_a(p.r * nf) * p.bracket_a(p.s * nf))
            * coshlike;
        dev_b = dev_b.max((b22 - f22).norm() / (1.0 + f22.norm()));
    }
    // s = 2 specialization: [B^2, B^2] = 0 and f^Z = 1
    let p2 = Params::new(p.x, p.r, C64::new(2.0, 0.0))?;
    let mut dev_b2: f64 = 0.0;
    let mut fz_one: f64 = 0.0;
    for n in 1..=10u32 {
        dev_b2 = dev_b2.max(b_boson_bracket(2, 2, n, &p2).norm());
        fz_one = fz_one.max(crate::structure::log_coeff_fz(n as usize, &p2).norm());
    }

    // (ii) T1(z) vs T^DV(z) Z(z) matrix elements, level <= 2, a few sectors
    let mut dev_prod: f64 = 0.0;
    for sector in [Sector::new(0, 0), Sector::new(1, -1)] {
        let basis = crate::fock::basis_states(sector, p.l_level.min(2) as u32);
        for bra in &basis {
            for ket in &basis {
                let t1w = matrix_element(&[leg_t1(p, 0, one())], bra, ket, p, opts)?;
                let dv_legs = [Leg::Sum(vec![
                    (one(), Factor::new(lambda_dv1(p), 0, one())),
                    (one(), Factor::new(lambda_dv2(p), 0, one())),
                ])];
                // T^DV(z) Z(z): both factors on the same variable
                let mut dvz: Option<Window> = None;
                for (coeff, mut word) in expand_word(&dv_legs) {
                    word.push(Factor::new(zcal(p), 0, one()));
                    let w = matrix_element_word(&word, bra, ket, p, opts);
                    match &mut dvz {
                        None => dvz = Some(w.scaled(coeff)),
                        Some(a) => a.add_scaled(&w, coeff)?,
                    }
                }
                let dvz = dvz.unwrap();
                let scale = t1w.max_abs().max(dvz.max_abs()).max(1e-30);
                let mut res = t1w;
                res.add_scaled(&dvz, -one())?;
                dev_prod = dev_prod.max(res.max_abs() / scale);
            }
        }
    }

    // (iii) [T^DV(z1), Z(z2)] = 0 and the f^Z exchange as a coefficient
    // identity: the ZZ contraction log-coefficient equals the f^Z one.
    let mut dev_comm: f64 = 0.0;
    {
        let sector = Sector::new(0, 0);
        let basis = crate::fock::basis_states(sector, 1);
        for bra in &basis {
            for ket in &basis {
                for dv in [lambda_dv1(p), lambda_dv2(p)] {
                    let a = matrix_element_word(
                        &[Factor::new(dv.clone(), 0, one()), Factor::new(zcal(p), 1, one())],
                        bra,
                        ket,
                        p,
                        opts,
                    );
                    let b = matrix_element_word(
                        &[Factor::new(zcal(p), 1, one()), Factor::new(dv, 0, one())],
                        bra,
                        ket,
                        p,
                        opts,
                    );
                    let scale = a.max_abs().max(1e-30);
                    let mut res = a;
                    res.add_scaled(&b, -one())?;
                    dev_comm = dev_comm.max(res.max_abs() / scale);
                }
            }
        }
    }
    let mut dev_fz: f64 = 0.0;
    {
        let zl = Factor::new(zcal(p), 0, one());
        let zr = Factor::new(zcal(p), 1, one());
        for m in 1..=p.m_series.min(40) {
            let lc = contraction_log_coeff(&zl, &zr, m, p);
            let fz = crate::structure::log_coeff_fz(m, p);
            dev_fz = dev_fz.max((lc - fz).norm() / (1.0 + fz.norm()));
        }
    }

    Ok(DvCheck {
        b_commutator_dev: dev_b,
        b_commutator_dev_s2: dev_b2,
        product_dev: dev_prod,
        tdv_z_commute_dev: dev_comm,
        fz_exchange_dev: dev_fz,
        fz_one_at_s2: fz_one,
    })
}

/// T^DV defining relation residual (f^DV in the convergent pairing).
pub fn tdv_relation_residual(
    bra: &BasisState,
    ket: &BasisState,
    p: &Params,
    opts: MeOpts,
) -> Result<(Window, f64)> {
    let fdv = crate::structure::series_fdv(opts.order, p);
    let dv_leg = |var: usize| {
        Leg::Sum(vec![
            (one(), Factor::new(lambda_dv1(p), var, one())),
            (one(), Factor::new(lambda_dv2(p), var, one())),
        ])
    };
    let a = matrix_element(&[dv_leg(0), dv_leg(1)], bra, ket, p, opts)?
        .mul_ratio_series(0, 1, &fdv);
    let b = matrix_element(&[dv_leg(1), dv_leg(0)], bra, ket, p, opts)?
        .mul_ratio_series(1, 0, &fdv);
    // RHS: c (delta(x^2 z2/z1) - delta(x^2 z1/z2)), identity payloads
    let c = crate::structure::const_c(p);
    let gam = p.xp(C64::new(2.0, 0.0));
    let idw = if bra == ket {
        Window::constant(2, opts.bound, one())
    } else {
        // identity payload is diagonal in the pairing basis only through the
        // Gram matrix entry
        Window::constant(2, opts.bound, crate::fock::pair_states(bra, ket, p))
    };
    let zero_off = [C64::new(0.0, 0.0); MAXV];
    let d0 = delta_expand_aligned(gam, 0, 1, &idw, &zero_off, opts.bound)?;
    let d1 = delta_expand_aligned(gam, 1, 0, &idw, &zero_off, opts.bound)?;
    let scale = a.max_abs().max(b.max_abs()).max((d0.max_abs() + d1.max_abs()) * c.norm());
    let mut res = a;
    res.add_scaled(&b, -one())?;
    res.add_scaled(&d0, -c)?;
    res.add_scaled(&d1, c)?;
    Ok((res, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_mode, basis_states, inner_product, BasisState, FockVector};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn p_local() -> Params {
        Params::new(0.6, c(2.3, 0.4), c(2.7, 0.0)).unwrap()
    }

    fn p_nonlocal() -> Params {
        Params::new(0.6, c(0.45, 0.1), c(1.3, 0.0)).unwrap()
    }

    #[test]
    fn mode_coeffs_decay() {
        // every catalog entry's mode coefficients decay geometrically
        let p = p_local();
        for spec in [lambda1(&p), lambda2(&p), t2(&p), f1(&p), f0(&p), e1(&p), e0(&p), cal_a(&p), cal_b(&p), cal_h(&p), lambda_dv1(&p), lambda_dv2(&p), zcal(&p)] {
            let mut prev: f64 = f64::MAX;
            for m in 8..=24 {
                let (c1, c2) = spec.mode(m);
                let mag = c1.norm().max(c2.norm()).max(1e-300);
                // allow growth up to x^{-|const| m} but require log-linearity:
                // ratio between consecutive magnitudes bounded
                let ratio = mag / prev;
                if m > 8 {
                    assert!(ratio < 1.0 / p.x.powi(8), "{} grows too fast", spec.name);
                }
                prev = mag;
            }
        }
    }

    #[test]
    fn eta_maps_catalog_correctly() {
        // eta(Lambda1(z)) = Lambda2(x^s z), eta(F1) = F0, eta(E1) = E0
        let p = p_local();
        let el1 = eta_of(&lambda1(&p), &p);
        let l2 = lambda2(&p);
        let close = |a: C64, b: C64| (a - b).norm() <= 1e-12 * (1.0 + a.norm().max(b.norm()));
        for m in [-3i64, -1, 1, 2, 5] {
            let (a1, a2) = el1.mode(m);
            // Lambda2(x^s z): mode coeffs scale by (x^s)^{-m}
            let (b1, b2) = l2.mode(m);
            let sc = crate::series::powi_c(p.xp(p.s), -m);
            assert!(close(a1, b1 * sc));
            assert!(close(a2, b2 * sc));
        }
        assert_eq!(el1.e, l2.e);
        let ef1 = eta_of(&f1(&p), &p);
        let f0c = f0(&p);
        for m in [-2i64, 1, 4] {
            let (a1, a2) = ef1.mode(m);
            let (b1, b2) = f0c.mode(m);
            assert!(close(a1, b1) && close(a2, b2));
        }
        assert_eq!((ef1.dl, ef1.dk), (f0c.dl, f0c.dk));
        assert!((ef1.b - f0c.b).norm() < 1e-14);
        let ee1 = eta_of(&e1(&p), &p);
        let e0c = e0(&p);
        for m in [-2i64, 1, 4] {
            let (a1, a2) = ee1.mode(m);
            let (b1, b2) = e0c.mode(m);
            assert!(close(a1, b1) && close(a2, b2));
        }
    }

    /// Independent oracle: apply the normal-ordered exponential through
    /// `apply_mode` with the exponential expanded to the level cap.
    fn me_oracle(word: &[Factor], bra: &BasisState, ket: &BasisState, p: &Params, bound: i32) -> Window {
        let nv = word.iter().map(|f| f.var + 1).max().unwrap_or(1);
        let cap = (p.l_level + 1) as i64;
        // intermediate states legitimately exceed the level cap before the
        // later factors annihilate back down; lift it for the oracle
        let p = &p.with_l_level(12);
        // expansion of one exponential: sum over multisets of modes; each
        // application is (1/m) c_m beta_m z^{-m} with symmetry factors
        fn expansions(
            f: &Factor,
            cap: i64,
            p: &Params,
        ) -> Vec<(C64, Vec<(u8, i64)>, i64)> {
            // returns (coeff, mode applications, z-degree), modes applied in
            // the listed order; generated as ordered tuples / k! over modes
            // with |m| <= cap, word length <= 2 per sign (level cap 2)
            let mut singles: Vec<(C64, (u8, i64), i64)> = vec![];
            for m in 1..=cap {
                for sign in [-1i64, 1] {
                    let mm = sign * m;
                    let (c1, c2) = f.eff_mode(mm);
                    if c1.norm() > 0.0 {
                        singles.push((c1 / mm as f64, (1, mm), -mm));
                    }
                    if c2.norm() > 0.0 {
                        singles.push((c2 / mm as f64, (2, mm), -mm));
                    }
                }
            }
            // multisets of up to four modes with multinomial symmetry
            // factors (enough for bra level + ket level <= 4)
            let mut out: Vec<(C64, Vec<(u8, i64)>, i64)> = vec![];
            fn build(
                singles: &[(C64, (u8, i64), i64)],
                start: usize,
                coeff: C64,
                modes: &mut Vec<(u8, i64)>,
                deg: i64,
                out: &mut Vec<(C64, Vec<(u8, i64)>, i64)>,
            ) {
                out.push((coeff, modes.clone(), deg));
                if modes.len() == 4 {
                    return;
                }
                for i in start..singles.len() {
                    let (cf, md, dg) = singles[i];
                    // symmetry factor: 1/k! for k repeats of the same single
                    let reps = modes.iter().filter(|&&q| q == md).count() as f64;
                    modes.push(md);
                    build(singles, i, coeff * cf / (reps + 1.0), modes, deg + dg, out);
                    modes.pop();
                }
            }
            let mut modes = vec![];
            build(&singles, 0, C64::new(1.0, 0.0), &mut modes, 0, &mut out);
            out
        }
        let mut win = Window::new(nv, bound);
        let zm = zero_modes(word, ket.sector, p);
        if zm.out_sector != bra.sector {
            return win;
        }
        win.offsets = zm.var_offsets;
        // apply factors right-to-left; each factor applies its negative modes
        // left of its positive modes (normal ordering within the factor)
        fn rec(
            widx: usize,
            word: &[Factor],
            state: FockVector,
            coeff: C64,
            degs: &mut [i64; MAXV],
            bra: &BasisState,
            p: &Params,
            win: &mut Window,
            cap: i64,
        ) {
            if widx == 0 {
                let amp = inner_product(&FockVector::basis(bra.clone()), &state, p);
                if amp.norm() > 0.0 {
                    let mut e = [0i32; MAXV];
                    for i in 0..MAXV {
                        e[i] = degs[i] as i32;
                    }
                    win.add_term(e, coeff * amp);
                }
                return;
            }
            let f = &word[widx - 1];
            for (cf, modes, deg) in expansions(f, cap, p) {
                // modes within one exponential commute (same sign products
                // only matter normal-ordered: negatives then positives on the
                // ket side means positives applied first)
                let mut st = state.clone();
                let mut pos: Vec<(u8, i64)> = modes.iter().filter(|(_, m)| *m > 0).cloned().collect();
                let negs: Vec<(u8, i64)> = modes.iter().filter(|(_, m)| *m < 0).cloned().collect();
                // apply positive modes first (rightmost in normal order)
                pos.extend(negs);
                let mut dead = false;
                for (color, m) in pos {
                    st = apply_mode(color, m, &st, p);
                    if st.amps.is_empty() {
                        dead = true;
                        break;
                    }
                }
                if dead {
                    continue;
                }
                degs[f.var] += deg;
                rec(widx - 1, word, st, coeff * cf, degs, bra, p, win, cap);
                degs[f.var] -= deg;
            }
        }
        let mut degs = [0i64; MAXV];
        let ket_vec = FockVector::basis(ket.clone());
        rec(word.len(), word, ket_vec, zm.scalar, &mut degs, bra, p, &mut win, cap);
        win
    }

    #[test]
    fn matrix_element_vacuum_factorization() {
        // single-current vacuum expectation equals its zero-mode scalar
        let p = p_local();
        let vac = BasisState::vacuum(crate::fock::Sector::new(0, 0));
        let opts = MeOpts::new(24, 8);
        let w = matrix_element_word(&[Factor::new(lambda1(&p), 0, one())], &vac, &vac, &p, opts);
        // <0,0| Lambda1(z) |0,0> = x^{-pihat eig} = x^0 = 1
        assert!((w.get([0; MAXV]) - one()).norm() < 1e-13);
        assert_eq!(w.terms.len(), 1);
        // F1 between shifted sectors picks its zero-mode z-powers
        let bra = BasisState::vacuum(crate::fock::Sector::new(0, -2));
        let wf = matrix_element_word(&[Factor::new(f1(&p), 0, one())], &bra, &vac, &p, opts);
        assert!((wf.offsets[0] - p.rstar / p.r).norm() < 1e-13);
        assert!((wf.get([0; MAXV]) - one()).norm() < 1e-13);
        // sector selection rule: mismatched sectors give the zero window
        let woff = matrix_element_word(&[Factor::new(f1(&p), 0, one())], &vac, &vac, &p, opts);
        assert!(woff.terms.is_empty());
    }

    #[test]
    fn matrix_element_matches_apply_mode_oracle() {
        // brute-force route through apply_mode agrees with the contraction
        // engine for one- and two-current words at level <= 2
        let p = p_local().with_l_level(2);
        let opts = MeOpts::new(30, 5);
        let sector = crate::fock::Sector::new(0, 0);
        let basis = basis_states(sector, 2);
        let words: Vec<Vec<Factor>> = vec![
            vec![Factor::new(lambda1(&p), 0, one())],
            vec![Factor::new(t2(&p), 0, C64::new(1.0 / p.x, 0.0))],
            vec![Factor::new(lambda1(&p), 0, one()), Factor::new(lambda2(&p), 1, one())],
            vec![Factor::new(lambda2(&p), 0, one()), Factor::new(lambda1(&p), 1, one())],
        ];
        for word in &words {
            for bra in &basis {
                for ket in &basis {
                    if bra.level() > 1 && ket.level() > 1 {
                        continue; // keep the oracle cheap
                    }
                    let fast = matrix_element_word(word, bra, ket, &p, opts);
                    let slow = me_oracle(word, bra, ket, &p, opts.bound);
                    let scale = slow.max_abs().max(fast.max_abs()).max(1.0);
                    for k in -2i32..=2 {
                        for det in 0..=0 {
                            let _ = det;
                            let mut e = [0i32; MAXV];
                            if word.len() == 2 {
                                e[0] = k;
                                e[1] = -k;
                            } else {
                                e[0] = k;
                            }
                            let d = (fast.get(e) - slow.get(e)).norm() / scale;
                            assert!(
                                d < 1e-10,
                                "word {:?} bra {} ket {} e {:?}: {} vs {}",
                                word.iter().map(|f| f.spec.name.clone()).collect::<Vec<_>>(),
                                bra.label(),
                                ket.label(),
                                e,
                                fast.get(e),
                                slow.get(e)
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn t1t1_vacuum_window_matches_oracle() {
        // <0,0| T1(z1) T1(z2) |0,0>: four Lambda pairs with x^{∓pihat} scalars
        let p = p_local().with_l_level(2);
        let opts = MeOpts::new(30, 5);
        let vac = BasisState::vacuum(crate::fock::Sector::new(0, 0));
        let fast = matrix_element(
            &[leg_t1(&p, 0, one()), leg_t1(&p, 1, one())],
            &vac,
            &vac,
            &p,
            opts,
        )
        .unwrap();
        let mut slow = Window::new(2, opts.bound);
        for li in [lambda1(&p), lambda2(&p)] {
            for lj in [lambda1(&p), lambda2(&p)] {
                let w = me_oracle(
                    &[Factor::new(li.clone(), 0, one()), Factor::new(lj, 1, one())],
                    &vac,
                    &vac,
                    &p,
                    opts.bound,
                );
                slow.add_scaled(&w, one()).unwrap();
            }
        }
        let scale = slow.max_abs().max(1.0);
        for k in -2i32..=2 {
            let e = [k, -k, 0, 0];
            assert!(
                (fast.get(e) - slow.get(e)).norm() / scale < 1e-10,
                "k={k}: {} vs {}",
                fast.get(e),
                slow.get(e)
            );
        }
    }

    #[test]
    fn appendix_oracle_all_entries() {
        let p = p_local();
        let checks = appendix::check_all(&p, 24);
        assert_eq!(checks.len(), 60);
        for ch in &checks {
            match ch.corrected_dev {
                // entries whose printed q-product is itself a suspected typo:
                // the corrected form must match and the printed must not
                Some(cd) => {
                    assert!(cd < 1e-10, "{}: corrected dev {}", ch.name, cd);
                    assert!(ch.series_dev > 1e-4, "{}: printed form unexpectedly matches", ch.name);
                }
                None => {
                    assert!(ch.series_dev < 1e-10, "{}: series dev {}", ch.name, ch.series_dev)
                }
            }
            if ch.suspected_typo {
                assert!(
                    !ch.offsets_match,
                    "{}: flagged as typo but printed prefactor matches",
                    ch.name
                );
            } else {
                assert!(
                    ch.offsets_match,
                    "{}: printed prefactor mismatch (engine z1^{}, x^{})",
                    ch.name, ch.engine_zpow, ch.engine_xpow
                );
            }
        }
    }

    #[test]
    fn defining_relations_vacuum_quick() {
        let p = p_local().with_l_level(2);
        let opts = MeOpts::new(40, 8);
        let vac = BasisState::vacuum(crate::fock::Sector::new(0, 0));
        for rel in [DVirRel::R1, DVirRel::R2, DVirRel::R3] {
            let (res, scale) = defining_relation_residual(rel, &vac, &vac, &p, opts).unwrap();
            assert!(
                res.max_abs() / scale < 1e-9,
                "{:?}: rel residual {}",
                rel,
                res.max_abs() / scale
            );
        }
        // dVir2 with bra = ket = b1_{-1}|0,0>
        let st = BasisState::new(crate::fock::Sector::new(0, 0), vec![1], vec![]);
        let (res, scale) = defining_relation_residual(DVirRel::R2, &st, &st, &p, opts).unwrap();
        assert!(res.max_abs() / scale < 1e-8);
    }

    #[test]
    fn adjoint_actions_vacuum() {
        let p = p_local().with_l_level(1);
        let opts = MeOpts::new(40, 8);
        let s00 = crate::fock::Sector::new(0, 0);
        use AdjointRel::*;
        for rel in [L1F1, L2F1, L1F0, L2F0, L1E1, L2E1, L1E0, L2E0] {
            // pick bra sector matching the screening shift
            let (dl, dk) = match rel {
                L1F1 | L2F1 => (0, -2),
                L1F0 | L2F0 => (0, 2),
                L1E1 | L2E1 => (-2, 0),
                L1E0 | L2E0 => (2, 0),
            };
            let bra = BasisState::vacuum(crate::fock::Sector::new(dl, dk));
            let ket = BasisState::vacuum(s00);
            let (res, scale) = adjoint_action_residual(rel, &bra, &ket, &p, opts).unwrap();
            assert!(
                res.max_abs() / scale < 1e-8,
                "{:?}: {}",
                rel,
                res.max_abs() / scale
            );
        }
    }

    #[test]
    fn ef_delta_and_e1f0() {
        let p = p_local().with_l_level(1);
        let opts = MeOpts::new(40, 8);
        let ket = BasisState::vacuum(crate::fock::Sector::new(0, 0));
        let bra = BasisState::vacuum(crate::fock::Sector::new(-2, -2));
        let (res, scale) = ef_delta_residual(&bra, &ket, &p, opts, false).unwrap();
        assert!(res.max_abs() / scale < 1e-8, "E1F1-H: {}", res.max_abs() / scale);
        let bra0 = BasisState::vacuum(crate::fock::Sector::new(2, 2));
        let (res0, scale0) = ef_delta_residual(&bra0, &ket, &p, opts, true).unwrap();
        assert!(res0.max_abs() / scale0 < 1e-8, "E0F0-etaH: {}", res0.max_abs() / scale0);
        // E1 F0 commutes with no delta term
        let brax = BasisState::vacuum(crate::fock::Sector::new(-2, 2));
        let (resx, scalex) = e1f0_commutation_residual(&brax, &ket, &p, opts).unwrap();
        assert!(resx.max_abs() / scalex.max(1.0) < 1e-10);
    }

    #[test]
    fn exchange_relations_all_blocks() {
        // blocks 1 and 3 at points with Re r > 0 / Re r* > 0; blocks 2 and 4
        // need Re r < 0 / Re r* < 0
        let p_pos = p_local(); // Re r = 2.3 > 0, Re r* = 1.3 > 0
        let p_neg = Params::new(0.6, c(-0.45, 0.1), c(1.3, 0.0)).unwrap(); // Re r < 0, Re r* < 0
        let p_mid = p_nonlocal(); // Re r > 0, Re r* < 0
        use ExchangeRel::*;
        for (rel, pp) in [
            (FFSameRPos, &p_pos),
            (F0F1RPos, &p_pos),
            (EESameRsPos, &p_pos),
            (E0E1RsPos, &p_pos),
            (FFSameRNeg, &p_neg),
            (F0F1RNeg, &p_neg),
            (EESameRsNeg, &p_mid),
            (E0E1RsNeg, &p_mid),
        ] {
            let devs = exchange_relation_check(rel, pp, 30, 12345).unwrap();
            let max = devs.iter().cloned().fold(0.0, f64::max);
            assert!(max < 1e-10, "{}: {}", rel.name(), max);
        }
        // u1 = u2 symmetric point: both sides finite and equal (possibly 0)
        let ctx = BracketCtx::new(p_pos.r, &p_pos).unwrap();
        let lhs = ctx.eval(c(0.0, 0.0)) / ctx.eval(c(-1.0, 0.0));
        assert!(lhs.norm() < 1e-14);
    }

    #[test]
    fn closed_forms_match_series_in_regime() {
        // every regime-gated closed form equals the engine series inside the
        // series' convergence disk at a point in its regime
        let p_pos = p_local();
        let p_neg = Params::new(0.6, c(-0.45, 0.1), c(1.3, 0.0)).unwrap();
        let p_mid = p_nonlocal();
        use ExchangeRel::*;
        let cases: Vec<(ExchangeRel, &Params, CurrentSpec, CurrentSpec)> = vec![
            (FFSameRPos, &p_pos, f1(&p_pos), f1(&p_pos)),
            (F0F1RPos, &p_pos, f0(&p_pos), f1(&p_pos)),
            (EESameRsPos, &p_pos, e1(&p_pos), e1(&p_pos)),
            (E0E1RsPos, &p_pos, e0(&p_pos), e1(&p_pos)),
            (FFSameRNeg, &p_neg, f1(&p_neg), f1(&p_neg)),
            (F0F1RNeg, &p_neg, f0(&p_neg), f1(&p_neg)),
            (EESameRsNeg, &p_mid, e1(&p_mid), e1(&p_mid)),
            (E0E1RsNeg, &p_mid, e0(&p_mid), e1(&p_mid)),
        ];
        for (rel, pp, l, rgt) in cases {
            let form = screening_closed_form(rel, pp);
            let lf = Factor::new(l, 0, one());
            let rf = Factor::new(rgt, 1, one());
            let series = PowerSeries::exp_from_log(60, |m| contraction_log_coeff(&lf, &rf, m, pp));
            for wv in [c(0.05, 0.02), c(-0.03, 0.04)] {
                let a = series.eval(wv);
                let b = form.eval(wv, pp);
                assert!(
                    (a - b).norm() <= 1e-11 * (1.0 + b.norm()),
                    "{}: {} vs {}",
                    rel.name(),
                    a,
                    b
                );
            }
        }
    }

    #[test]
    fn dv_decomposition() {
        let p = p_local().with_l_level(2);
        let opts = MeOpts::new(40, 8);
        let ck = dv_decomposition_check(&p, opts).unwrap();
        assert!(ck.b_commutator_dev < 1e-12, "B commutators: {}", ck.b_commutator_dev);
        assert!(ck.b_commutator_dev_s2 < 1e-14, "B2B2 at s=2: {}", ck.b_commutator_dev_s2);
        assert!(ck.product_dev < 1e-8, "T1 vs TDV*Z: {}", ck.product_dev);
        assert!(ck.tdv_z_commute_dev < 1e-10, "[TDV, Z]: {}", ck.tdv_z_commute_dev);
        assert!(ck.fz_exchange_dev < 1e-12, "fZ exchange: {}", ck.fz_exchange_dev);
        assert!(ck.fz_one_at_s2 < 1e-14, "fZ at s=2: {}", ck.fz_one_at_s2);
        // T^DV defining relation with the convergent f^DV pairing
        let vac = BasisState::vacuum(crate::fock::Sector::new(0, 0));
        let (res, scale) = tdv_relation_residual(&vac, &vac, &p, opts).unwrap();
        assert!(res.max_abs() / scale < 1e-9, "TDV relation: {}", res.max_abs() / scale);
    }

    #[test]
    fn eta_covariance_of_matrix_elements() {
        // eta(Lambda1(z)) = Lambda2(x^s z) as an identity of matrix elements:
        // <eta b| Lambda2(x^s z) |eta k> with the eta factors equals
        // <b| Lambda1(z) |k> ... the covariance is checked through the
        // window equality of eta-transformed elements.
        let p = p_local().with_l_level(2);
        let opts = MeOpts::new(30, 6);
        let basis = basis_states(crate::fock::Sector::new(0, 0), 2);
        for bra in basis.iter().take(5) {
            for ket in basis.iter().take(5) {
                let (fb, eb) = crate::fock::eta_basis(bra, &p);
                let (fk, ek) = crate::fock::eta_basis(ket, &p);
                let lhs = matrix_element_word(
                    &[Factor::new(lambda1(&p), 0, one())],
                    &eb,
                    &ek,
                    &p,
                    opts,
                )
                .scaled(fb * fk);
                let rhs = matrix_element_word(
                    &[Factor::new(lambda2(&p), 0, p.xp(p.s))],
                    bra,
                    ket,
                    &p,
                    opts,
                );
                // the eta-twisted bra pairing differs from the plain one by
                // the color-imbalance twist; compare through the invariant
                // pairing instead: <eta b|X|eta k> f_b f_k = twist(b) <b|eta(X)|k>
                let twist = {
                    let mut t = one();
                    for &m in &bra.part1 {
                        t *= p.xp(2.0 * p.s * m as f64);
                    }
                    for &m in &bra.part2 {
                        t *= p.xp(-2.0 * p.s * m as f64);
                    }
                    t
                };
                let scale = lhs.max_abs().max(rhs.max_abs()).max(1.0);
                for k in -2i32..=2 {
                    let e = [k, 0, 0, 0];
                    let d = (lhs.get(e) - twist * rhs.get(e)).norm() / scale;
                    assert!(d < 1e-9, "bra {} ket {} k {}: dev {}", bra.label(), ket.label(), k, d);
                }
            }
        }
    }
}
