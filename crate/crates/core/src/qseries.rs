//! q-products, Jacobi theta functions and bracket symbols.
//!
//! Everything is parametrized by the global triple `(x, r, s)` with
//! `0 < x < 1`, `r, s` complex, `r* = r - 1`. Complex powers of `x` use the
//! real logarithm of `x`, so `x^w = exp(w ln x)` is branch-free.

use crate::error::{DvaError, Result};
use crate::C64;

/// Global parameter triple plus truncation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub x: f64,
    pub r: C64,
    pub s: C64,
    /// r* = r - 1, recomputed on construction.
    pub rstar: C64,
    /// Tail bound for infinite products / series.
    pub eps_tail: f64,
    /// Laurent / contraction truncation order.
    pub m_series: usize,
    /// Fock level cap.
    pub l_level: usize,
}

impl Params {
    pub fn new(x: f64, r: C64, s: C64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0) {
            return Err(DvaError::Domain(format!("x must lie in (0,1), got {x}")));
        }
        Ok(Params {
            x,
            r,
            s,
            rstar: r - C64::new(1.0, 0.0),
            eps_tail: 1e-16,
            m_series: 64,
            l_level: 2,
        })
    }

    pub fn with_m_series(mut self, m: usize) -> Self {
        self.m_series = m;
        self
    }

    pub fn with_l_level(mut self, l: usize) -> Self {
        self.l_level = l;
        self
    }

    pub fn ln_x(&self) -> f64 {
        self.x.ln()
    }

    /// x^w with the real branch of ln x.
    pub fn xp(&self, w: C64) -> C64 {
        (w * self.ln_x()).exp()
    }

    /// tau with x = e^{-pi i / (rho tau)}, i.e. tau = -pi i / (rho ln x).
    pub fn tau(&self, rho: C64) -> C64 {
        -C64::i() * std::f64::consts::PI / (rho * self.ln_x())
    }

    /// The bracket [a] = (x^a - x^{-a}) / (x - x^{-1}).
    pub fn bracket_a(&self, a: C64) -> C64 {
        (self.xp(a) - self.xp(-a)) / (self.x - 1.0 / self.x)
    }

    fn require_re_pos(&self, what: &str, v: C64) -> Result<()> {
        if v.re <= 0.0 {
            return Err(DvaError::Domain(format!("Re({what}) must be positive, got {v}")));
        }
        Ok(())
    }
}

/// A nome `q` with |q| < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nome {
    pub q: C64,
}

impl Nome {
    pub fn new(q: C64) -> Result<Self> {
        if q.norm() >= 1.0 {
            return Err(DvaError::Domain(format!("|q| must be < 1, got |q| = {}", q.norm())));
        }
        Ok(Nome { q })
    }
}

/// (z; q)_inf = prod_{j>=0} (1 - q^j z), truncated once both |q^j| and
/// |q^j z| drop below `eps_tail`.
pub fn qpochhammer_inf(z: C64, q: &Nome, eps_tail: f64) -> C64 {
    let mut prod = C64::new(1.0, 0.0);
    let mut qj = C64::new(1.0, 0.0);
    for _ in 0..100_000 {
        prod *= C64::new(1.0, 0.0) - qj * z;
        qj *= q.q;
        if qj.norm() < eps_tail && (qj * z).norm() < eps_tail {
            break;
        }
    }
    prod
}

/// Theta_q(z) = (z;q)_inf (q/z;q)_inf (q;q)_inf.
pub fn theta_big(z: C64, q: &Nome, eps_tail: f64) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(DvaError::Domain("theta_big: z = 0".into()));
    }
    Ok(qpochhammer_inf(z, q, eps_tail)
        * qpochhammer_inf(q.q / z, q, eps_tail)
        * qpochhammer_inf(q.q, q, eps_tail))
}

/// Evaluation context for the bracket [u]_rho at a fixed modulus rho.
///
/// Caches the nome q = x^{2 rho} and the normalization (q;q)^{-3}.
#[derive(Debug, Clone, Copy)]
pub struct BracketCtx {
    pub rho: C64,
    q: Nome,
    norm: C64,
    ln_x: f64,
    eps_tail: f64,
}

impl BracketCtx {
    pub fn new(rho: C64, p: &Params) -> Result<Self> {
        p.require_re_pos("rho", rho)?;
        let q = Nome::new(p.xp(2.0 * rho))?;
        let qq = qpochhammer_inf(q.q, &q, p.eps_tail);
        Ok(BracketCtx {
            rho,
            q,
            norm: 1.0 / (qq * qq * qq),
            ln_x: p.ln_x(),
            eps_tail: p.eps_tail,
        })
    }

    /// [u]_rho = x^{u^2/rho - u} Theta_{x^{2 rho}}(x^{2u}) / (q;q)^3.
    pub fn eval(&self, u: C64) -> C64 {
        let xp = |w: C64| (w * self.ln_x).exp();
        let z = xp(2.0 * u);
        let theta = qpochhammer_inf(z, &self.q, self.eps_tail)
            * qpochhammer_inf(self.q.q / z, &self.q, self.eps_tail)
            * qpochhammer_inf(self.q.q, &self.q, self.eps_tail);
        xp(u * u / self.rho - u) * theta * self.norm
    }
}

/// One-off bracket evaluation; hot paths should hold a [`BracketCtx`].
pub fn bracket_u(u: C64, rho: C64, p: &Params) -> Result<C64> {
    Ok(BracketCtx::new(rho, p)?.eval(u))
}

pub fn bracket_a(a: C64, p: &Params) -> C64 {
    p.bracket_a(a)
}

/// The nonlocal kernel
/// theta_{alpha,rho}(u) = [u-pi+alpha][u-alpha] + [u-pi-alpha][u+alpha],
/// with the zero-mode eigenvalue `pihat_eig` substituted for the operator.
pub fn vartheta_kernel(u: C64, alpha: C64, rho: C64, pihat_eig: C64, p: &Params) -> Result<C64> {
    let ctx = BracketCtx::new(rho, p)?;
    Ok(vartheta_with(&ctx, u, alpha, pihat_eig))
}

pub fn vartheta_with(ctx: &BracketCtx, u: C64, alpha: C64, pihat_eig: C64) -> C64 {
    ctx.eval(u - pihat_eig + alpha) * ctx.eval(u - alpha)
        + ctx.eval(u - pihat_eig - alpha) * ctx.eval(u + alpha)
}
