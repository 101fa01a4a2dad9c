//! Boundary-trace history, the history variable `η(t, s) = ∫_{t−s}^t ∂ₓy(0, τ) dτ`,
//! the memory integrals, and the boundary closures that turn the memory
//! condition into values for the near-boundary nodes.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::{KdvbParams, KsParams, MemoryKernel};
use crate::quadrature::{simpson, simpson_samples};
use crate::stepper::GeneralizedCoeffs;

/// Prescribed boundary trace for negative times, `∂ₓy(0, −t) = y₁(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HistoryFn {
    Zero,
    Constant(f64),
    /// `amplitude·sin(t)`
    Sine { amplitude: f64 },
}

impl HistoryFn {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            HistoryFn::Zero => 0.0,
            HistoryFn::Constant(c) => c,
            HistoryFn::Sine { amplitude } => amplitude * t.sin(),
        }
    }

    /// `∫₀^s y₁(τ) dτ` in closed form.
    pub fn integral(&self, s: f64) -> f64 {
        match *self {
            HistoryFn::Zero => 0.0,
            HistoryFn::Constant(c) => c * s,
            HistoryFn::Sine { amplitude } => amplitude * (1.0 - s.cos()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            HistoryFn::Zero => true,
            HistoryFn::Constant(c) => c == 0.0,
            HistoryFn::Sine { amplitude } => amplitude == 0.0,
        }
    }
}

impl fmt::Display for HistoryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryFn::Zero => f.write_str("zero"),
            HistoryFn::Constant(c) => write!(f, "constant({c:?})"),
            HistoryFn::Sine { amplitude } => write!(f, "sine({amplitude:?})"),
        }
    }
}

/// Splits `name(a, b, ...)` into the name and its numeric arguments.
pub(crate) fn parse_call(text: &str) -> Result<(String, Vec<f64>)> {
    let text = text.trim();
    let Some(open) = text.find('(') else {
        return Ok((text.to_string(), Vec::new()));
    };
    let close = text
        .strip_suffix(')')
        .ok_or_else(|| Error::Parse(format!("missing `)` in `{text}`")))?;
    let name = text[..open].trim().to_string();
    let inner = &close[open + 1..];
    let args = inner
        .split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(|a| a.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{a}` in `{text}`"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((name, args))
}

impl FromStr for HistoryFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        match (name.as_str(), args.as_slice()) {
            ("zero", []) => Ok(HistoryFn::Zero),
            ("constant", [c]) => Ok(HistoryFn::Constant(*c)),
            ("sine", [a]) => Ok(HistoryFn::Sine { amplitude: *a }),
            _ => Err(Error::Parse(format!("unknown history function `{s}`"))),
        }
    }
}

/// Recorded boundary traces `∂ₓy(0, t_j)` and their running trapezoidal integral.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceHistory {
    dt: f64,
    values: Vec<f64>,
    cumulative: Vec<f64>,
    history: HistoryFn,
}

impl TraceHistory {
    pub fn new(dt: f64, history: HistoryFn, initial_trace: f64) -> Self {
        TraceHistory { dt, values: vec![initial_trace], cumulative: vec![0.0], history }
    }

    pub fn push(&mut self, trace: f64) {
        let prev = *self.values.last().expect("history is never empty");
        let acc = *self.cumulative.last().expect("history is never empty");
        self.values.push(trace);
        self.cumulative.push(acc + 0.5 * self.dt * (prev + trace));
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn history(&self) -> &HistoryFn {
        &self.history
    }

    /// Index of the latest recorded time.
    pub fn last_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// `A(t) = ∫₀^t ∂ₓy(0, τ) dτ` for `0 ≤ t ≤ t_n`, piecewise linear between
    /// recorded times. `position` is `t / dt`.
    fn cumulative_at_position(&self, n: usize, position: f64) -> f64 {
        if position <= 0.0 {
            return 0.0;
        }
        let j = position.floor() as usize;
        if j >= n {
            return self.cumulative[n];
        }
        let frac = position - j as f64;
        let a = &self.cumulative;
        a[j] + frac * (a[j + 1] - a[j])
    }

    /// `η(t_n, s)` for `s ≥ 0`.
    pub fn eta_at(&self, n: usize, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::param("s", format!("history depth must be nonnegative, got {s}")));
        }
        if n > self.last_index() {
            return Err(Error::param("n", format!("time index {n} not recorded yet")));
        }
        Ok(self.eta_unchecked(n, s))
    }

    fn eta_unchecked(&self, n: usize, s: f64) -> f64 {
        let t_n = n as f64 * self.dt;
        let a_n = self.cumulative[n];
        if s > t_n {
            a_n + self.history.integral(s - t_n)
        } else {
            a_n - self.cumulative_at_position(n, n as f64 - s / self.dt)
        }
    }

    /// Recorded trace at `t_j`.
    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }
}

/// Samples `η(t_n, s_i)` on `s_i = i·ds`, `i = 0..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaField {
    ds: f64,
    eta: Vec<f64>,
    t_index: usize,
}

impl EtaField {
    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn values(&self) -> &[f64] {
        &self.eta
    }

    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.ds
    }

    pub fn s_max(&self) -> f64 {
        self.s(self.eta.len() - 1)
    }

    pub fn t_index(&self) -> usize {
        self.t_index
    }

    /// Synthetic field, for diagnostics and tests.
    pub fn from_values(ds: f64, eta: Vec<f64>, t_index: usize) -> Self {
        EtaField { ds, eta, t_index }
    }
}

/// `η₀(s_i) = ∫₀^{s_i} y₁`.
pub fn eta_init(history: &HistoryFn, samples: usize, ds: f64) -> EtaField {
    let eta = (0..samples).map(|i| history.integral(i as f64 * ds)).collect();
    EtaField { ds, eta, t_index: 0 }
}

/// Refreshes the field to `η(t_n, ·)` from the trace history; `η(t_n, 0) = 0`.
pub fn update_eta(field: &mut EtaField, th: &TraceHistory, n: usize) -> Result<()> {
    if n > th.last_index() {
        return Err(Error::param("n", format!("time index {n} not recorded yet")));
    }
    let ds = field.ds;
    for (i, v) in field.eta.iter_mut().enumerate().skip(1) {
        *v = th.eta_unchecked(n, i as f64 * ds);
    }
    field.eta[0] = 0.0;
    field.t_index = n;
    Ok(())
}

/// The three pieces of the memory condition evaluated at `t_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MemoryIntegrals {
    /// `∫₀^{s_f} β(s) η(t_n, s) ds`
    pub i_eta: f64,
    /// `Σ_{i=1}^{n+1} α(iΔt) ∂ₓy(0, t_{n+1} − iΔt) Δt`
    pub s_hist: f64,
    /// `∫_{t_{n+1}}^{s_f} α(s) y₁(s − t_{n+1}) ds`
    pub i_tail: f64,
}

impl MemoryIntegrals {
    /// The part of the memory condition that determines the new trace.
    pub fn remainder(&self) -> f64 {
        self.i_eta - self.s_hist - self.i_tail
    }
}

/// Memory integrals for the step `t_n → t_{n+1}`, with `η` lagged at `t_n`.
pub fn memory_integrals(k: &MemoryKernel, field: &EtaField, th: &TraceHistory) -> MemoryIntegrals {
    let ds = field.ds;
    let weighted: Vec<f64> = field
        .eta
        .iter()
        .enumerate()
        .map(|(i, e)| k.beta(i as f64 * ds) * e)
        .collect();
    let i_eta = simpson_samples(&weighted, ds);

    let dt = th.dt;
    let next = th.last_index() + 1;
    let s_hist: f64 = (1..=next)
        .map(|i| k.alpha(i as f64 * dt) * th.values[next - i])
        .sum::<f64>()
        * dt;

    let t_next = next as f64 * dt;
    let s_f = field.s_max();
    let i_tail = if th.history.is_zero() || t_next >= s_f {
        0.0
    } else {
        let panels = ((s_f - t_next) / ds).ceil() as usize;
        let y1 = th.history;
        simpson(|s| k.alpha(s) * y1.value(s - t_next), t_next, s_f, panels)
    };
    MemoryIntegrals { i_eta, s_hist, i_tail }
}

/// Node values produced by a boundary closure at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClosureValues {
    /// `y₁`
    pub y1: f64,
    /// `y_{M−1}`
    pub y_m1: f64,
    /// Ghost node `y₋₁` (zero for KdVB).
    pub y_minus1: f64,
    /// `∂ₓy(0, t) ≈ (y₁ − y₋₁) / (2Δx)`
    pub trace: f64,
    /// Back-substitution residual of the discrete memory condition (KS only).
    pub residual: f64,
}

/// KdVB closure: ghost nodes beyond both ends are taken as zero, `y₁` solves
/// the memory condition and `y_{M−1}` follows from the derivative coupling.
pub fn kdvb_closure(
    k: &MemoryKernel,
    p: &KdvbParams,
    ints: &MemoryIntegrals,
    dx: f64,
    dt: f64,
) -> ClosureValues {
    let a0 = k.alpha(0.0);
    let y1 = 2.0 * dx / (a0 * dt) * ints.remainder();
    let memory = ints.s_hist + ints.i_tail + a0 * (y1 / (2.0 * dx)) * dt;
    let y_m1 = -p.w4 * y1 - 2.0 * dx * memory;
    ClosureValues { y1, y_m1, y_minus1: 0.0, trace: y1 / (2.0 * dx), residual: 0.0 }
}

/// Residual of the discrete second-derivative memory condition at `x = 0`,
/// `(y₋₁ + y₁)/Δx² = n3·(y₁ − y₋₁)/(2Δx) + memory`, relative to the size of its terms.
pub fn ks_condition_residual(p: &KsParams, y1: f64, y_minus1: f64, memory: f64, dx: f64) -> f64 {
    let lhs = (y_minus1 + y1) / (dx * dx);
    let rhs = p.n3 * (y1 - y_minus1) / (2.0 * dx) + memory;
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

/// KS closure: `y_{M−1} = 0`; `y₁` and the ghost `y₋₁` jointly satisfy the
/// trace relation and the second-derivative memory condition at `x = 0`.
pub fn ks_closure(
    k: &MemoryKernel,
    p: &KsParams,
    ints: &MemoryIntegrals,
    dx: f64,
    dt: f64,
) -> Result<ClosureValues> {
    let denom = p.n3 * dx + 2.0;
    let prefactor = 1.0 - (p.n3 * dx - 2.0) / denom;
    if denom == 0.0 || prefactor == 0.0 || !prefactor.is_finite() {
        return Err(Error::param("n3", "closure prefactor vanishes"));
    }
    let a0 = k.alpha(0.0);
    let jump = 2.0 * dx / (a0 * dt) * ints.remainder();
    let memory = ints.s_hist + ints.i_tail + ints.remainder();
    let y1 = (jump + 2.0 * dx * dx / denom * memory) / prefactor;
    let y_minus1 = y1 - jump;
    let residual = ks_condition_residual(p, y1, y_minus1, memory, dx);
    Ok(ClosureValues { y1, y_m1: 0.0, y_minus1, trace: (y1 - y_minus1) / (2.0 * dx), residual })
}

/// Stencil taps that reach the closure nodes, scaled like the interior
/// operators: `(dt/2)·Σ a_i·f_i` with `f_i` the contribution of `D_i`.
pub fn boundary_vector(
    coeffs: &GeneralizedCoeffs,
    closure: &ClosureValues,
    n: usize,
    dx: f64,
    dt: f64,
) -> Vec<f64> {
    let mut f = vec![0.0; n];
    if n < 2 {
        return f;
    }
    let (y1, ym) = (closure.y1, closure.y_m1);
    let half = 0.5 * dt;
    let c1 = half * coeffs.a1 / dx;
    let c2 = half * coeffs.a2 / (dx * dx);
    let c3 = half * coeffs.a3 / dx.powi(3);
    let c4 = half * coeffs.a4 / dx.powi(4);
    f[0] += -0.5 * c1 * y1 + c2 * y1 + c3 * y1 - 4.0 * c4 * y1;
    f[1] += -0.5 * c3 * y1 + c4 * y1;
    f[n - 2] += 0.5 * c3 * ym + c4 * ym;
    f[n - 1] += 0.5 * c1 * ym + c2 * ym - c3 * ym - 4.0 * c4 * ym;
    f
}
