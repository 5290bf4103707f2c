//! The two-color bosonic Fock space F_{l,k}: partition-labelled basis states,
//! the oscillator pairing, zero-mode bookkeeping and the Dynkin automorphism.
//!
//! The bilinear pairing is fixed by <l,k|l,k> = 1 and the commutation
//! relations; bra states pair through their reflected annihilation word, so
//! the form is bilinear, not hermitian. Square roots of r/r* never appear:
//! pihat eigenvalues are stored as l r - k r* and Q-shifts as sector
//! increments.

use crate::qseries::Params;
use crate::C64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sector {
    pub l: i64,
    pub k: i64,
}

impl Sector {
    pub fn new(l: i64, k: i64) -> Self {
        Sector { l, k }
    }

    /// pihat |l,k> = (l r - k r*) |l,k>.
    pub fn pihat(&self, p: &Params) -> C64 {
        self.l as f64 * p.r - self.k as f64 * p.rstar
    }

    pub fn shifted(&self, dl: i64, dk: i64) -> Sector {
        Sector { l: self.l + dl, k: self.k + dk }
    }
}

/// Basis state: a sector plus one multiset of creation modes per color,
/// stored sorted descending (negative modes commute, so the multiset is a
/// canonical label).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub sector: Sector,
    pub part1: Vec<u32>,
    pub part2: Vec<u32>,
}

impl BasisState {
    pub fn vacuum(sector: Sector) -> Self {
        BasisState { sector, part1: vec![], part2: vec![] }
    }

    pub fn new(sector: Sector, mut part1: Vec<u32>, mut part2: Vec<u32>) -> Self {
        part1.sort_unstable_by(|a, b| b.cmp(a));
        part2.sort_unstable_by(|a, b| b.cmp(a));
        BasisState { sector, part1, part2 }
    }

    pub fn level(&self) -> u32 {
        self.part1.iter().sum::<u32>() + self.part2.iter().sum::<u32>()
    }

    /// Modes as (color, m) pairs, m > 0.
    pub fn modes(&self) -> Vec<(u8, u32)> {
        let mut v: Vec<(u8, u32)> = self.part1.iter().map(|&m| (1u8, m)).collect();
        v.extend(self.part2.iter().map(|&m| (2u8, m)));
        v
    }

    pub fn label(&self) -> String {
        let mut s = String::new();
        for m in &self.part1 {
            s.push_str(&format!("b1[-{m}]"));
        }
        for m in &self.part2 {
            s.push_str(&format!("b2[-{m}]"));
        }
        s.push_str(&format!("|{},{}>", self.sector.l, self.sector.k));
        s
    }
}

/// All basis states of a sector with level <= cap, ordered by (level, label).
pub fn basis_states(sector: Sector, level_cap: u32) -> Vec<BasisState> {
    fn partitions(n: u32) -> Vec<Vec<u32>> {
        fn go(n: u32, maxpart: u32) -> Vec<Vec<u32>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = vec![];
            let top = n.min(maxpart);
            for first in (1..=top).rev() {
                for mut rest in go(n - first, first) {
                    let mut v = vec![first];
                    v.append(&mut rest);
                    out.push(v);
                }
            }
            out
        }
        go(n, n)
    }
    let mut out = vec![];
    for lvl in 0..=level_cap {
        for l1 in 0..=lvl {
            let l2 = lvl - l1;
            for p1 in partitions(l1) {
                for p2 in partitions(l2) {
                    out.push(BasisState::new(sector, p1.clone(), p2));
                }
            }
        }
    }
    out.sort_by_key(|b| (b.level(), b.part1.clone(), b.part2.clone()));
    out
}

/// The oscillator pairing g^{ab}_m = [beta^a_m, beta^b_{-m}] for m > 0.
pub fn pairing_g(m: u32, a: u8, b: u8, p: &Params) -> C64 {
    let mf = m as f64;
    let br = |w: C64| p.bracket_a(mf * w);
    let rs = br(p.rstar) / (br(p.r) * br(p.s));
    match (a, b) {
        (1, 1) | (2, 2) => mf * rs * br(p.s - 1.0),
        (1, 2) => -mf * rs * p.bracket_a(C64::new(mf, 0.0)) * p.xp(C64::new(-p.s.re * mf, -p.s.im * mf)),
        (2, 1) => -mf * rs * p.bracket_a(C64::new(mf, 0.0)) * p.xp(C64::new(p.s.re * mf, p.s.im * mf)),
        _ => panic!("colors are 1 or 2"),
    }
}

/// The zero-mode pairing constant [P, iQ] = 2.
pub const P_IQ_COMMUTATOR: f64 = 2.0;

/// Finite linear combination of basis states sharing one sector.
#[derive(Debug, Clone)]
pub struct FockVector {
    pub sector: Sector,
    pub amps: BTreeMap<BasisState, C64>,
    /// Components dropped by the level cap (counted, not fatal).
    pub truncated: u64,
}

impl FockVector {
    pub fn zero(sector: Sector) -> Self {
        FockVector { sector, amps: BTreeMap::new(), truncated: 0 }
    }

    pub fn basis(state: BasisState) -> Self {
        let sector = state.sector;
        let mut amps = BTreeMap::new();
        amps.insert(state, C64::new(1.0, 0.0));
        FockVector { sector, amps, truncated: 0 }
    }

    pub fn add(&mut self, state: BasisState, amp: C64) {
        if amp.norm() == 0.0 {
            return;
        }
        debug_assert_eq!(state.sector, self.sector);
        let e = self.amps.entry(state).or_insert(C64::new(0.0, 0.0));
        *e += amp;
        if e.norm() == 0.0 {
            // keep the invariant: no zero amplitudes stored
            let key = self
                .amps
                .iter()
                .find(|(_, v)| v.norm() == 0.0)
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.amps.remove(&k);
            }
        }
    }

    pub fn scale(&mut self, c: C64) {
        for v in self.amps.values_mut() {
            *v *= c;
        }
    }
}

/// Bilinear pairing via Wick contraction of the reflected bra word against
/// the ket word. States in different sectors pair to zero.
pub fn inner_product(bra: &FockVector, ket: &FockVector, p: &Params) -> C64 {
    if bra.sector != ket.sector {
        return C64::new(0.0, 0.0);
    }
    let mut acc = C64::new(0.0, 0.0);
    for (bs, bv) in &bra.amps {
        for (ks, kv) in &ket.amps {
            acc += bv * kv * pair_states(bs, ks, p);
        }
    }
    acc
}

/// <vac| prod beta^{a_i}_{+m_i} prod beta^{b_j}_{-n_j} |vac> as a sum over
/// complete matchings with equal mode numbers.
pub fn pair_states(bra: &BasisState, ket: &BasisState, p: &Params) -> C64 {
    let bm = bra.modes();
    let km = ket.modes();
    if bm.len() != km.len() {
        return C64::new(0.0, 0.0);
    }
    fn go(bm: &[(u8, u32)], used: &mut Vec<bool>, km: &[(u8, u32)], p: &Params) -> C64 {
        if bm.is_empty() {
            return C64::new(1.0, 0.0);
        }
        let (a, m) = bm[0];
        let mut acc = C64::new(0.0, 0.0);
        for (j, &(b, n)) in km.iter().enumerate() {
            if used[j] || n != m {
                continue;
            }
            used[j] = true;
            acc += pairing_g(m, a, b, p) * go(&bm[1..], used, km, p);
            used[j] = false;
        }
        acc
    }
    let mut used = vec![false; km.len()];
    go(&bm, &mut used, &km, p)
}

/// The eta-invariant bilinear form: the bra word reflects with the
/// color-dependent twist omega(beta^1_{-m}) = x^{sm} beta^1_{+m},
/// omega(beta^2_{-m}) = x^{-sm} beta^2_{+m}. This is the unique (up to
/// normalization) reflection making the induced form Dynkin-invariant; the
/// plain form above reproduces the paper's contraction values instead.
pub fn inner_product_eta_invariant(bra: &FockVector, ket: &FockVector, p: &Params) -> C64 {
    if bra.sector != ket.sector {
        return C64::new(0.0, 0.0);
    }
    let mut acc = C64::new(0.0, 0.0);
    for (bs, bv) in &bra.amps {
        let mut twist = C64::new(1.0, 0.0);
        for &m in &bs.part1 {
            twist *= p.xp(p.s * m as f64);
        }
        for &m in &bs.part2 {
            twist *= p.xp(-p.s * m as f64);
        }
        for (ks, kv) in &ket.amps {
            acc += bv * kv * twist * pair_states(bs, ks, p);
        }
    }
    acc
}

/// Gram matrix of a basis slice.
pub fn gram(basis: &[BasisState], p: &Params) -> Vec<Vec<C64>> {
    basis
        .iter()
        .map(|b| basis.iter().map(|k| pair_states(b, k, p)).collect())
        .collect()
}

/// Apply beta^{color}_m to a vector. m < 0 appends the mode (subject to the
/// level cap, overflow counted); m > 0 contracts against stored modes.
pub fn apply_mode(color: u8, m: i64, v: &FockVector, p: &Params) -> FockVector {
    let mut out = FockVector::zero(v.sector);
    out.truncated = v.truncated;
    for (state, amp) in &v.amps {
        if m < 0 {
            let madd = (-m) as u32;
            if state.level() + madd > p.l_level as u32 {
                out.truncated += 1;
                continue;
            }
            let mut p1 = state.part1.clone();
            let mut p2 = state.part2.clone();
            if color == 1 {
                p1.push(madd);
            } else {
                p2.push(madd);
            }
            out.add(BasisState::new(state.sector, p1, p2), *amp);
        } else {
            let mpos = m as u32;
            let modes = state.modes();
            for (i, &(b, n)) in modes.iter().enumerate() {
                if n != mpos {
                    continue;
                }
                let mut p1 = vec![];
                let mut p2 = vec![];
                for (j, &(c, q)) in modes.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    if c == 1 {
                        p1.push(q);
                    } else {
                        p2.push(q);
                    }
                }
                out.add(
                    BasisState::new(state.sector, p1, p2),
                    amp * pairing_g(mpos, color, b, p),
                );
            }
        }
    }
    out
}

/// Dynkin automorphism on a basis state: beta^1_{-m} -> x^{sm} beta^2_{-m},
/// beta^2_{-m} -> x^{-sm} beta^1_{-m}, sector (l,k) -> (-l,-k).
/// Returns (scalar, image state).
pub fn eta_basis(state: &BasisState, p: &Params) -> (C64, BasisState) {
    let mut factor = C64::new(1.0, 0.0);
    for &m in &state.part1 {
        factor *= p.xp(p.s * m as f64);
    }
    for &m in &state.part2 {
        factor *= p.xp(-p.s * m as f64);
    }
    let img = BasisState::new(
        Sector::new(-state.sector.l, -state.sector.k),
        state.part2.clone(),
        state.part1.clone(),
    );
    (factor, img)
}

pub fn eta_on_state(v: &FockVector, p: &Params) -> FockVector {
    let sector = Sector::new(-v.sector.l, -v.sector.k);
    let mut out = FockVector::zero(sector);
    out.truncated = v.truncated;
    for (state, amp) in &v.amps {
        let (f, img) = eta_basis(state, p);
        out.add(img, amp * f);
    }
    out
}
