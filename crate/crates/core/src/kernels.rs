//! Memory kernels, model parameters and the hypothesis checks that make the
//! boundary memory control dissipative.
//!
//! Two kernel families are supported: `α(s) = d2·e^(−d1·s)` and
//! `α(s) = d2·(1+s)^(−d1)`. For both, `β = −α′`, the rate function `ξ` with
//! `−ξ₀β ≤ β′ ≤ −ξβ`, and the weighted mass `α₀ = ∫ β/ξ ds` are available in
//! closed form.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Poincaré constant of `H¹₀(0, 1)`: `‖v‖² ≤ c₀‖v′‖²` with `c₀ = 1/π²`.
pub const POINCARE_CONSTANT: f64 = 1.0 / (PI * PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Exponential,
    Polynomial,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Exponential => "exponential",
            KernelFamily::Polynomial => "polynomial",
        })
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(KernelFamily::Exponential),
            "polynomial" => Ok(KernelFamily::Polynomial),
            other => Err(Error::Parse(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Memory kernel `α`. Immutable once constructed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryKernel {
    family: KernelFamily,
    d1: f64,
    d2: f64,
}

impl MemoryKernel {
    pub fn new(family: KernelFamily, d1: f64, d2: f64) -> Result<Self> {
        if !(d2.is_finite() && d2 > 0.0) {
            return Err(Error::param("d2", format!("amplitude must be positive, got {d2}")));
        }
        match family {
            KernelFamily::Exponential if !(d1.is_finite() && d1 > 0.0) => {
                Err(Error::param("d1", format!("exponential kernel needs d1 > 0, got {d1}")))
            }
            KernelFamily::Polynomial if !(d1.is_finite() && d1 > 1.0) => {
                Err(Error::param("d1", format!("polynomial kernel needs d1 > 1, got {d1}")))
            }
            _ => Ok(MemoryKernel { family, d1, d2 }),
        }
    }

    pub fn exponential(d1: f64, d2: f64) -> Result<Self> {
        Self::new(KernelFamily::Exponential, d1, d2)
    }

    pub fn polynomial(d1: f64, d2: f64) -> Result<Self> {
        Self::new(KernelFamily::Polynomial, d1, d2)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn alpha(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Exponential => self.d2 * (-self.d1 * s).exp(),
            KernelFamily::Polynomial => self.d2 * (1.0 + s).powf(-self.d1),
        }
    }

    /// `β(s) = −α′(s)`.
    pub fn beta(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Exponential => self.d1 * self.d2 * (-self.d1 * s).exp(),
            KernelFamily::Polynomial => self.d1 * self.d2 * (1.0 + s).powf(-self.d1 - 1.0),
        }
    }

    /// `β′(s) = −α″(s)`.
    pub fn beta_prime(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Exponential => -self.d1 * self.d1 * self.d2 * (-self.d1 * s).exp(),
            KernelFamily::Polynomial => {
                -self.d1 * (self.d1 + 1.0) * self.d2 * (1.0 + s).powf(-self.d1 - 2.0)
            }
        }
    }

    pub fn xi(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Exponential => self.d1,
            KernelFamily::Polynomial => self.d1 / (1.0 + s),
        }
    }

    pub fn xi0(&self) -> f64 {
        self.d1
    }

    /// `∫₀^s ξ(τ) dτ`.
    pub fn xi_integral(&self, s: f64) -> f64 {
        match self.family {
            KernelFamily::Exponential => self.d1 * s,
            KernelFamily::Polynomial => self.d1 * (1.0 + s).ln(),
        }
    }

    /// `α₀ = ∫₀^∞ −α′(s)/ξ(s) ds`.
    pub fn alpha0(&self) -> f64 {
        match self.family {
            KernelFamily::Exponential => self.d2 / self.d1,
            KernelFamily::Polynomial => self.d2 / (self.d1 - 1.0),
        }
    }

    /// First `S` with `α(S) < 1e-14`, capped at `1e4`.
    pub fn truncation_point(&self) -> f64 {
        let tol: f64 = 1e-14;
        let s = match self.family {
            KernelFamily::Exponential => (self.d2 / tol).ln() / self.d1,
            KernelFamily::Polynomial => (self.d2 / tol).powf(1.0 / self.d1) - 1.0,
        };
        s.clamp(0.0, 1e4)
    }
}

impl fmt::Display for MemoryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(d1={}, d2={})", self.family, self.d1, self.d2)
    }
}

/// Coefficients of the KdV–Burgers equation
/// `y_t − w0·y_xx + w1·y_xxx + w2·y_x + w3·y·y_x = 0` with boundary gain `w4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvbParams {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl KdvbParams {
    /// Validates `w0 ≥ 0`, `w1 > 0` and `|w4| < 1`.
    pub fn new(w0: f64, w1: f64, w2: f64, w3: f64, w4: f64) -> Result<Self> {
        let p = KdvbParams { w0, w1, w2, w3, w4 };
        for (name, v) in [("w0", w0), ("w1", w1), ("w2", w2), ("w3", w3), ("w4", w4)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if w0 < 0.0 {
            return Err(Error::param("w0", format!("diffusion condition w0 >= 0 violated ({w0})")));
        }
        if w1 <= 0.0 {
            return Err(Error::param("w1", format!("dispersion condition w1 > 0 violated ({w1})")));
        }
        if w4.abs() >= 1.0 {
            return Err(Error::param("w4", format!("boundary gain condition |w4| < 1 violated ({w4})")));
        }
        Ok(p)
    }

    /// Right-hand side of the smallness condition on `α₀`.
    pub fn alpha0_bound(&self) -> f64 {
        let q = 1.0 - self.w4 * self.w4;
        let c = 1.0 + self.w1 * self.w4;
        self.w1 * q / (self.w1 * self.w1 * q + c * c)
    }
}

/// Coefficients of the Kuramoto–Sivashinsky equation
/// `y_t + n0·y_xxxx + n1·y·y_x + n2·y_xx = 0` with boundary gain `n3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsParams {
    pub n0: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

impl KsParams {
    /// Validates `n0 > 0` and `n3 > 0`. The anti-diffusion range
    /// `0 < n2 < π²·n0` is a hypothesis and is reported by [`check_htilde`].
    pub fn new(n0: f64, n1: f64, n2: f64, n3: f64) -> Result<Self> {
        for (name, v) in [("n0", n0), ("n1", n1), ("n2", n2), ("n3", n3)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if n0 <= 0.0 {
            return Err(Error::param("n0", format!("viscosity condition n0 > 0 violated ({n0})")));
        }
        if n3 <= 0.0 {
            return Err(Error::param("n3", format!("boundary gain condition n3 > 0 violated ({n3})")));
        }
        Ok(KsParams { n0, n1, n2, n3 })
    }

    /// Right-hand side of the smallness condition on `α₀`, `None` when `n0 = 1`.
    pub fn alpha0_bound(&self) -> Option<f64> {
        let gap = (1.0 - self.n0).abs();
        (gap != 0.0).then(|| 2.0 * self.n0 * self.n3 / (gap * gap))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub passed: bool,
    pub checks: Vec<HypothesisCheck>,
    pub alpha0: f64,
    /// `rhs − α₀` of the smallness condition (infinite when it is vacuous).
    pub margin: f64,
}

impl HypothesisReport {
    fn from_checks(checks: Vec<HypothesisCheck>, alpha0: f64, margin: f64) -> Self {
        let passed = checks.iter().all(|c| c.satisfied);
        HypothesisReport { passed, checks, alpha0, margin }
    }

    pub fn violations(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }

    pub fn bound(&self) -> f64 {
        self.alpha0 + self.margin
    }

    /// Strict mode: a failed report becomes an error.
    pub fn require(&self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        let names: Vec<&str> = self.violations().map(|c| c.name.as_str()).collect();
        Err(Error::HypothesisFailed(names.join("; ")))
    }

    /// `key = value` lines, suitable for a summary file.
    pub fn key_values(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("hypotheses_passed = {}\n", self.passed));
        out.push_str(&format!("alpha0 = {:?}\n", self.alpha0));
        out.push_str(&format!("alpha0_bound = {:?}\n", self.bound()));
        out.push_str(&format!("alpha0_margin = {:?}\n", self.margin));
        out.push_str(&format!("violations = {}\n", self.violations().count()));
        out
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let violations = self.violations().count();
        if self.passed {
            writeln!(f, "PASS")?;
        } else {
            writeln!(f, "FAIL ({violations} violation{})", if violations == 1 { "" } else { "s" })?;
        }
        writeln!(f, "{:<36} {:>22} {:>22}  ok", "condition", "lhs", "rhs")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<36} {:>22.15e} {:>22.15e}  {}",
                c.name,
                c.lhs,
                c.rhs,
                if c.satisfied { "yes" } else { "NO" }
            )?;
        }
        write!(f, "alpha0 = {:.15e}, bound = {:.15e}", self.alpha0, self.bound())
    }
}

fn check(name: &str, lhs: f64, rhs: f64, satisfied: bool) -> HypothesisCheck {
    HypothesisCheck { name: name.to_string(), lhs, rhs, satisfied }
}

/// Hypothesis set for the KdVB system. Failures are reported, never raised.
pub fn check_h(k: &MemoryKernel, p: &KdvbParams) -> HypothesisReport {
    let a0 = k.alpha0();
    let bound = p.alpha0_bound();
    let checks = vec![
        check("w0 >= 0", p.w0, 0.0, p.w0 >= 0.0),
        check("w1 > 0", p.w1, 0.0, p.w1 > 0.0),
        check("|w4| < 1", p.w4.abs(), 1.0, p.w4.abs() < 1.0),
        check("alpha0 < w1(1-w4^2)/(w1^2(1-w4^2)+(1+w1 w4)^2)", a0, bound, a0 < bound),
    ];
    HypothesisReport::from_checks(checks, a0, bound - a0)
}

/// Hypothesis set for the KS system. The `α₀` condition is vacuous when `n0 = 1`.
pub fn check_htilde(k: &MemoryKernel, p: &KsParams) -> HypothesisReport {
    let a0 = k.alpha0();
    let upper = PI * PI * p.n0;
    let mut checks = vec![
        check("n0 > 0", p.n0, 0.0, p.n0 > 0.0),
        check("n3 > 0", p.n3, 0.0, p.n3 > 0.0),
        check("n2 > 0", p.n2, 0.0, p.n2 > 0.0),
        check("n2 < pi^2 n0", p.n2, upper, p.n2 < upper),
    ];
    let margin = match p.alpha0_bound() {
        Some(bound) => {
            checks.push(check("alpha0 < 2 n0 n3/|1-n0|^2", a0, bound, a0 < bound));
            bound - a0
        }
        None => {
            checks.push(check("alpha0 unconstrained (n0 = 1)", a0, f64::INFINITY, true));
            f64::INFINITY
        }
    };
    HypothesisReport::from_checks(checks, a0, margin)
}

/// A certified dissipativity constant with the `ε` that attains it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub eps: f64,
}

/// Maximizes a unimodal function on the open interval `(lo, hi)`.
fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

/// `κ(ε) = ½·min{w1(1−w4²) − ε|1+w1w4|, 1 − α₀(w1 + |1+w1w4|/ε)}`.
pub fn kappa_at(k: &MemoryKernel, p: &KdvbParams, eps: f64) -> f64 {
    let a0 = k.alpha0();
    let cross = (1.0 + p.w1 * p.w4).abs();
    let first = p.w1 * (1.0 - p.w4 * p.w4) - eps * cross;
    let second = 1.0 - a0 * (p.w1 + cross / eps);
    0.5 * first.min(second)
}

/// Admissible `ε` interval for `κ`, `None` when the cross term vanishes.
pub fn kappa_interval(k: &MemoryKernel, p: &KdvbParams) -> Option<(f64, f64)> {
    let a0 = k.alpha0();
    let cross = (1.0 + p.w1 * p.w4).abs();
    if cross == 0.0 {
        return None;
    }
    let lo = a0 * cross / (1.0 - p.w1 * a0);
    let hi = p.w1 * (1.0 - p.w4 * p.w4) / cross;
    Some((lo, hi))
}

/// KdVB dissipativity constant, maximized over the admissible `ε`.
pub fn kappa(k: &MemoryKernel, p: &KdvbParams) -> Result<Margin> {
    let a0 = k.alpha0();
    let margin = match kappa_interval(k, p) {
        None => Margin { value: kappa_at(k, p, 1.0), eps: 1.0 },
        Some((lo, hi)) => {
            if 1.0 - p.w1 * a0 <= 0.0 || !(lo < hi) {
                return Err(Error::NoAdmissibleEpsilon { lo, hi });
            }
            let (eps, value) = golden_section_max(|e| kappa_at(k, p, e), lo, hi);
            Margin { value, eps }
        }
    };
    if margin.value > 0.0 {
        Ok(margin)
    } else {
        Err(Error::NonPositiveMargin { value: margin.value })
    }
}

/// `ϑ(ε) = min{½(1 − α₀|1−n0|/ε), n0·n3 − |1−n0|ε/2, n0 − n2/π²}`.
pub fn vartheta_at(k: &MemoryKernel, p: &KsParams, eps: f64) -> f64 {
    let a0 = k.alpha0();
    let gap = (1.0 - p.n0).abs();
    let first = 0.5 * (1.0 - a0 * gap / eps);
    let second = p.n0 * p.n3 - gap * eps / 2.0;
    let third = p.n0 - p.n2 / (PI * PI);
    first.min(second).min(third)
}

/// Admissible `ε` interval for `ϑ`, `None` when `n0 = 1`.
pub fn vartheta_interval(k: &MemoryKernel, p: &KsParams) -> Option<(f64, f64)> {
    let gap = (1.0 - p.n0).abs();
    (gap != 0.0).then(|| (k.alpha0() * gap, 2.0 * p.n0 * p.n3 / gap))
}

/// KS dissipativity constant, maximized over the admissible `ε` (`ε = 1` when `n0 = 1`).
pub fn vartheta(k: &MemoryKernel, p: &KsParams) -> Result<Margin> {
    let margin = match vartheta_interval(k, p) {
        None => Margin { value: vartheta_at(k, p, 1.0), eps: 1.0 },
        Some((lo, hi)) => {
            if !(lo < hi) {
                return Err(Error::NoAdmissibleEpsilon { lo, hi });
            }
            let (eps, value) = golden_section_max(|e| vartheta_at(k, p, e), lo, hi);
            Margin { value, eps }
        }
    };
    if margin.value > 0.0 {
        Ok(margin)
    } else {
        Err(Error::NonPositiveMargin { value: margin.value })
    }
}

/// Exponential decay rate `c = 2·w0·κ·ξ₀ / (w0 + c₀·κ·ξ₀)` guaranteed when
/// `w0 > 0` and `ξ` is constant. Other branches have no closed-form rate.
pub fn decay_rate_predictor(k: &MemoryKernel, p: &KdvbParams) -> Option<f64> {
    if p.w0 <= 0.0 || k.family() != KernelFamily::Exponential {
        return None;
    }
    let kap = kappa(k, p).ok()?.value;
    let xi = k.xi0();
    Some(2.0 * p.w0 * kap * xi / (p.w0 + POINCARE_CONSTANT * kap * xi))
}
