//! The printed normal-ordering table and its oracle.
//!
//! Every displayed formula is encoded as q-product data plus the printed
//! zero-mode prefactor. The oracle compares the engine's contraction series
//! (built from the pairing matrix) against the log-expansion of the printed
//! product coefficient-by-coefficient, and checks the automated zero-mode
//! exponents against the printed ones, reporting mismatches as suspected
//! typos.

use super::{
    cal_a, cal_b, cal_h, contraction_log_coeff, e0, e1, f0, f1, lambda1, lambda2, CurrentSpec,
    Factor, PochForm,
};
use crate::qseries::Params;

use crate::C64;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Printed zero-mode prefactor of an appendix entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrintedPow {
    None,
    /// z1^{c}
    Z1(C64),
    /// x^{c}
    X(C64),
}

pub struct AppendixEntry {
    pub name: &'static str,
    pub left: CurrentSpec,
    pub right: CurrentSpec,
    pub printed: PrintedPow,
    pub form: PochForm,
    /// true when the printed prefactor is a known suspected typo
    pub suspected_typo: bool,
    /// engine-derived replacement when the printed q-product itself is a
    /// suspected typo (the oracle reports the printed deviation and asserts
    /// the corrected form)
    pub corrected: Option<PochForm>,
}

/// Outcome of one oracle comparison.
#[derive(Debug, Clone)]
pub struct EntryCheck {
    pub name: String,
    /// max over m <= order of |engine_m - printed_m| / max(1, |...|),
    /// taken at the contraction-exponent level
    pub series_dev: f64,
    /// same against the corrected q-product when one is recorded
    pub corrected_dev: Option<f64>,
    pub offsets_match: bool,
    pub suspected_typo: bool,
    pub engine_zpow: C64,
    pub engine_xpow: C64,
    pub printed: PrintedPow,
}

fn entry(
    name: &'static str,
    left: CurrentSpec,
    right: CurrentSpec,
    printed: PrintedPow,
    num: Vec<(C64, C64)>,
    den: Vec<(C64, C64)>,
    suspected_typo: bool,
) -> AppendixEntry {
    AppendixEntry {
        name,
        left,
        right,
        printed,
        form: PochForm { num, den },
        suspected_typo,
        corrected: None,
    }
}

/// The full printed table. Entries marked `suspected_typo` carry prefactors
/// whose printed form disagrees with the automated zero-mode bookkeeping
/// (the series parts agree); see the crate README.
pub fn appendix_table(p: &Params) -> Vec<AppendixEntry> {
    let e = |w: C64| p.xp(w);
    let z = C64::new(0.0, 0.0);
    let qs = e(2.0 * p.s);
    let qr = e(2.0 * p.r);
    let qrs = e(2.0 * p.rstar);
    let qnr = e(-2.0 * p.r);
    let qnrs = e(-2.0 * p.rstar);
    let c = |v: f64| C64::new(v, 0.0);
    let r = p.r;
    let rs = p.rstar;
    let s = p.s;
    let mut t = vec![];

    // Lambda-Lambda
    for (name, l, rgt) in [
        ("Lambda1 Lambda1", lambda1(p), lambda1(p)),
        ("Lambda2 Lambda2", lambda2(p), lambda2(p)),
    ] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::None,
            vec![(one(), z), (e(c(2.0)), qs), (e(2.0 * r + 2.0 * s - 2.0), qs), (e(2.0 * s - 2.0 * r), qs)],
            vec![(e(2.0 * s - 2.0), qs), (e(2.0 * r), qs), (e(2.0 - 2.0 * r), qs)],
            false,
        ));
    }
    t.push(entry(
        "Lambda1 Lambda2",
        lambda1(p),
        lambda2(p),
        PrintedPow::None,
        vec![(e(c(2.0)), qs), (e(-2.0 * r), qs), (e(2.0 * r - 2.0), qs)],
        vec![(e(c(-2.0)), qs), (e(2.0 * r), qs), (e(2.0 - 2.0 * r), qs)],
        false,
    ));
    t.push(entry(
        "Lambda2 Lambda1",
        lambda2(p),
        lambda1(p),
        PrintedPow::None,
        vec![(e(2.0 + 2.0 * s), qs), (e(2.0 * s - 2.0 * r), qs), (e(2.0 * s + 2.0 * r - 2.0), qs)],
        vec![(e(2.0 * s - 2.0), qs), (e(2.0 * s + 2.0 * r), qs), (e(2.0 * s + 2.0 - 2.0 * r), qs)],
        false,
    ));

    // Lambda-F block (rational)
    let rat = |a_num: C64, a_den: C64| (vec![(a_num, z)], vec![(a_den, z)]);
    let lam_f: Vec<(&'static str, CurrentSpec, CurrentSpec, PrintedPow, C64, C64)> = vec![
        ("Lambda1 F1", lambda1(p), f1(p), PrintedPow::X(-2.0 * rs), e(r - 2.0), e(-r)),
        ("F1 Lambda1", f1(p), lambda1(p), PrintedPow::None, e(2.0 - r), e(r)),
        ("Lambda2 F1", lambda2(p), f1(p), PrintedPow::X(2.0 * rs), e(2.0 - r), e(r)),
        ("F1 Lambda2", f1(p), lambda2(p), PrintedPow::None, e(r - 2.0), e(-r)),
        ("Lambda1 F0", lambda1(p), f0(p), PrintedPow::X(2.0 * rs), e(2.0 - r - s), e(r - s)),
        ("F0 Lambda1", f0(p), lambda1(p), PrintedPow::None, e(r + s - 2.0), e(-r + s)),
        ("Lambda2 F0", lambda2(p), f0(p), PrintedPow::X(-2.0 * rs), e(r + s - 2.0), e(-r + s)),
        ("F0 Lambda2", f0(p), lambda2(p), PrintedPow::None, e(2.0 - r - s), e(r - s)),
        ("Lambda1 E1", lambda1(p), e1(p), PrintedPow::X(2.0 * r), e(-r - 1.0), e(r - 1.0)),
        ("E1 Lambda1", e1(p), lambda1(p), PrintedPow::None, e(r + 1.0), e(-r + 1.0)),
        ("Lambda2 E1", lambda2(p), e1(p), PrintedPow::X(-2.0 * r), e(r + 1.0), e(-r + 1.0)),
        ("E1 Lambda2", e1(p), lambda2(p), PrintedPow::None, e(-r - 1.0), e(r - 1.0)),
        ("Lambda1 E0", lambda1(p), e0(p), PrintedPow::X(-2.0 * r), e(r + 1.0 - s), e(-r + 1.0 - s)),
        ("E0 Lambda1", e0(p), lambda1(p), PrintedPow::None, e(-r - 1.0 + s), e(r - 1.0 + s)),
        ("Lambda2 E0", lambda2(p), e0(p), PrintedPow::X(2.0 * r), e(-r - 1.0 + s), e(r - 1.0 + s)),
        ("E0 Lambda2", e0(p), lambda2(p), PrintedPow::None, e(r + 1.0 - s), e(-r + 1.0 - s)),
    ];
    for (name, l, rgt, pr, a_num, a_den) in lam_f {
        let (num, den) = rat(a_num, a_den);
        t.push(entry(name, l, rgt, pr, num, den, false));
    }

    // E-E block
    for (name, l, rgt) in [("E1 E1", e1(p), e1(p)), ("E0 E0", e0(p), e0(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(2.0 * r / rs),
            vec![(one(), z), (e(c(-2.0)), qrs)],
            vec![(e(2.0 * rs + 2.0), qrs)],
            false,
        ));
    }
    for (name, l, rgt) in [("E1 E0", e1(p), e0(p)), ("E0 E1", e0(p), e1(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(-2.0 * r / rs),
            vec![(e(2.0 * rs + s), qrs), (e(2.0 * rs + 2.0 - s), qrs)],
            vec![(e(-s), qrs), (e(s - 2.0), qrs)],
            false,
        ));
    }

    // F-F block: printed x-powers are suspected typos for z1-powers
    for (name, l, rgt) in [("F1 F1", f1(p), f1(p)), ("F0 F0", f0(p), f0(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::X(2.0 * rs / r),
            vec![(one(), z), (e(c(2.0)), qr)],
            vec![(e(2.0 * r - 2.0), qr)],
            true,
        ));
    }
    for (name, l, rgt) in [("F1 F0", f1(p), f0(p)), ("F0 F1", f0(p), f1(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::X(-2.0 * rs / r),
            vec![(e(2.0 * r - 2.0 + s), qr), (e(2.0 * r - s), qr)],
            vec![(e(s), qr), (e(2.0 - s), qr)],
            true,
        ));
    }

    // F-E block (rational)
    for (name, l, rgt) in [
        ("F1 E1", f1(p), e1(p)),
        ("E1 F1", e1(p), f1(p)),
        ("F0 E0", f0(p), e0(p)),
        ("E0 F0", e0(p), f0(p)),
    ] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(c(-2.0)),
            vec![],
            vec![(e(c(1.0)), z), (e(c(-1.0)), z)],
            false,
        ));
    }
    for (name, l, rgt) in [
        ("F1 E0", f1(p), e0(p)),
        ("E0 F1", e0(p), f1(p)),
        ("F0 E1", f0(p), e1(p)),
        ("E1 F0", e1(p), f0(p)),
    ] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(c(2.0)),
            vec![(e(s - 1.0), z), (e(1.0 - s), z)],
            vec![],
            false,
        ));
    }

    // A block
    for (name, l, rgt) in [("A F0", cal_a(p), f0(p)), ("F0 A", f0(p), cal_a(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(c(-2.0)), // suspected typo for z1^{-2 r*/r}
            vec![(e(3.0 * r - s), qr), (e(r + s - 2.0), qr)],
            vec![(e(r - s + 2.0), qr), (e(-r + s), qr)],
            true,
        ));
    }
    for (name, l, rgt) in [("A F1", cal_a(p), f1(p)), ("F1 A", f1(p), cal_a(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(2.0 * rs / r),
            vec![(e(-r + 2.0), qr)],
            vec![(e(3.0 * r - 2.0), qr)],
            false,
        ));
    }
    for (name, l, rgt) in [("A E0", cal_a(p), e0(p)), ("E0 A", e0(p), cal_a(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(c(2.0)),
            vec![(e(r + 1.0 - s), z), (e(-r + s - 1.0), z)],
            vec![],
            false,
        ));
    }
    for (name, l, rgt) in [("A E1", cal_a(p), e1(p)), ("E1 A", e1(p), cal_a(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(c(-2.0)),
            vec![],
            vec![(e(r - 1.0), z), (e(1.0 - r), z)],
            false,
        ));
    }

    // B block
    for (name, l, rgt) in [("B F0", cal_b(p), f0(p)), ("F0 B", f0(p), cal_b(p))] {
        // the printed "xs^{-r*+1-s}" token is read as x^{-r*+1-s}
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(c(2.0)),
            vec![(e(s + rs - 1.0), z), (e(-rs + 1.0 - s), z)],
            vec![],
            false,
        ));
    }
    for (name, l, rgt) in [("B F1", cal_b(p), f1(p)), ("F1 B", f1(p), cal_b(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(c(-2.0)),
            vec![],
            vec![(e(rs + 1.0), z), (e(-rs - 1.0), z)],
            false,
        ));
    }
    for (name, l, rgt) in [("B E0", cal_b(p), e0(p)), ("E0 B", e0(p), cal_b(p))] {
        // printed with the s-shifts dropped and z1^{-2} for z1^{-2r/r*};
        // the corrected q-product restores the s-dependence
        let mut en = entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(c(-2.0)),
            vec![(e(3.0 * rs), qrs), (e(rs + 2.0), qrs)],
            vec![(e(rs - 2.0), qrs), (e(-rs), qrs)],
            true,
        );
        en.corrected = Some(PochForm {
            num: vec![(e(3.0 * rs + s), qrs), (e(rs + 2.0 - s), qrs)],
            den: vec![(e(rs + s - 2.0), qrs), (e(-rs - s), qrs)],
        });
        t.push(en);
    }
    for (name, l, rgt) in [("B E1", cal_b(p), e1(p)), ("E1 B", e1(p), cal_b(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(2.0 * r / rs),
            vec![(e(-rs - 2.0), qrs)],
            vec![(e(3.0 * rs + 2.0), qrs)],
            false,
        ));
    }

    // H block, Re(r) > 0 with F's. The printed F0/H q-product is inverted
    // (numerator and denominator swapped); composing H = :E1(x^{1-r}.)
    // F1(x^{-r}.): out of verified pairs gives the corrected form.
    for (name, l, rgt) in [("F0 H", f0(p), cal_h(p)), ("H F0", cal_h(p), f0(p))] {
        let mut en = entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(2.0 / r),
            vec![(e(r + s), qr), (e(r + 2.0 - s), qr)],
            vec![(e(r + s - 2.0), qr), (e(r - s), qr)],
            false,
        );
        en.corrected = Some(PochForm {
            num: vec![(e(r + s - 2.0), qr), (e(r - s), qr)],
            den: vec![(e(r + s), qr), (e(r + 2.0 - s), qr)],
        });
        t.push(en);
    }
    for (name, l, rgt) in [("F1 H", f1(p), cal_h(p)), ("H F1", cal_h(p), f1(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(-2.0 / r),
            vec![(e(r + 2.0), qr)],
            vec![(e(r - 2.0), qr)],
            false,
        ));
    }
    // H block, Re(r*) < 0 with E's (nome x^{-2 r*}); the E0/H q-product is
    // printed inverted as well.
    for (name, l, rgt) in [("E0 H", e0(p), cal_h(p)), ("H E0", cal_h(p), e0(p))] {
        let mut en = entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(-2.0 / rs),
            vec![(e(-rs + s), qnrs), (e(-rs + 2.0 - s), qnrs)],
            vec![(e(-rs + s - 2.0), qnrs), (e(-rs - s), qnrs)],
            false,
        );
        en.corrected = Some(PochForm {
            num: vec![(e(-rs + s - 2.0), qnrs), (e(-rs - s), qnrs)],
            den: vec![(e(-rs + s), qnrs), (e(-rs + 2.0 - s), qnrs)],
        });
        t.push(en);
    }
    for (name, l, rgt) in [("E1 H", e1(p), cal_h(p)), ("H E1", cal_h(p), e1(p))] {
        t.push(entry(
            name,
            l,
            rgt,
            PrintedPow::Z1(2.0 / rs),
            vec![(e(-rs + 2.0), qnrs)],
            vec![(e(-rs - 2.0), qnrs)],
            false,
        ));
    }
    let _ = qnr;
    t
}

/// Compare one entry: engine contraction series vs printed form through
/// `order`, and the zero-mode exponents.
///
/// The comparison runs at the level of the contraction exponent (the series
/// log). Exponentiation is a formal bijection fixing the constant term, so
/// log agreement through order M is equivalent to factor agreement, and it
/// avoids the catastrophic cancellation the exp recurrence suffers when the
/// log coefficients outgrow the factor's own coefficients.
pub fn check_entry(entry: &AppendixEntry, p: &Params, order: usize) -> EntryCheck {
    let l = Factor::new(entry.left.clone(), 0, one());
    let rgt = Factor::new(entry.right.clone(), 1, one());
    let mut dev: f64 = 0.0;
    let mut cdev: Option<f64> = entry.corrected.as_ref().map(|_| 0.0);
    for m in 1..=order {
        let a = contraction_log_coeff(&l, &rgt, m, p);
        let b = entry.form.log_coeff(m);
        let d = (a - b).norm() / 1.0f64.max(a.norm()).max(b.norm());
        dev = dev.max(d);
        if let (Some(cd), Some(cf)) = (cdev.as_mut(), entry.corrected.as_ref()) {
            let bc = cf.log_coeff(m);
            let dc = (a - bc).norm() / 1.0f64.max(a.norm()).max(bc.norm());
            *cd = cd.max(dc);
        }
    }
    // engine zero-mode cross factors z1^{b_L pishift_R}, x^{e_L pishift_R}
    let shift = entry.right.pi_shift(p);
    let engine_zpow = entry.left.b * shift;
    let engine_xpow = entry.left.e * shift;
    let offsets_match = match entry.printed {
        PrintedPow::None => engine_zpow.norm() < 1e-12 && engine_xpow.norm() < 1e-12,
        PrintedPow::Z1(c) => (engine_zpow - c).norm() < 1e-10 && engine_xpow.norm() < 1e-12,
        PrintedPow::X(c) => (engine_xpow - c).norm() < 1e-10 && engine_zpow.norm() < 1e-12,
    };
    EntryCheck {
        name: entry.name.to_string(),
        series_dev: dev,
        corrected_dev: cdev,
        offsets_match,
        suspected_typo: entry.suspected_typo,
        engine_zpow,
        engine_xpow,
        printed: entry.printed,
    }
}

/// Run the whole appendix oracle.
pub fn check_all(p: &Params, order: usize) -> Vec<EntryCheck> {
    let table = appendix_table(p);
    crate::par::par_map(&table, |e| check_entry(e, p, order))
}
