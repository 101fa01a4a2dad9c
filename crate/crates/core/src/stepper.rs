//! Crank–Nicolson time integration of
//! `y_t + a1·y_x + a2·y_xx + a3·y_xxx + a4·y_xxxx + a5·y·y_x = 0`
//! with a Picard sweep for the midpoint nonlinearity and the memory closures
//! supplying the near-boundary nodes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::analysis::{discrete_energy, EnergySeries};
use crate::error::{Error, Result};
use crate::history::{
    boundary_vector, eta_init, kdvb_closure, ks_closure, memory_integrals, parse_call, update_eta,
    ClosureValues, EtaField, HistoryFn, TraceHistory,
};
use crate::kernels::{check_h, check_htilde, HypothesisReport, KdvbParams, KsParams, MemoryKernel};
use crate::linalg::{assemble_system, build_stencils, PentaLU, PentaMatrix};

/// Upper bound on the number of time steps in one run.
pub const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneralizedCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
}

impl GeneralizedCoeffs {
    pub fn linear(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Kdvb(KdvbParams),
    Ks(KsParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Kdvb(_) => "kdvb",
            Model::Ks(_) => "ks",
        }
    }
}

/// Coefficients of the generalized equation for a model.
pub fn map_coeffs(model: &Model) -> GeneralizedCoeffs {
    match *model {
        Model::Kdvb(p) => GeneralizedCoeffs { a1: p.w2, a2: -p.w0, a3: p.w1, a4: 0.0, a5: p.w3 },
        Model::Ks(p) => GeneralizedCoeffs { a1: 0.0, a2: p.n2, a3: 0.0, a4: p.n0, a5: p.n1 },
    }
}

/// Initial profile `y₀(x)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialProfile {
    Zero,
    /// `amplitude·(1 − cos 2πx)`
    OneMinusCos { amplitude: f64 },
    /// `amplitude·sin(mode·πx)`
    Sine { amplitude: f64, mode: f64 },
    /// `amplitude·sin^power(πx)`; vanishes to order `power` at both ends.
    SinPow { amplitude: f64, power: i32 },
    /// Smooth compactly supported bump `amplitude·exp(1 − 1/(1 − r²))`, `r = (x − center)/width`.
    Bump { amplitude: f64, center: f64, width: f64 },
}

impl InitialProfile {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            InitialProfile::Zero => 0.0,
            InitialProfile::OneMinusCos { amplitude } => amplitude * (1.0 - (2.0 * PI * x).cos()),
            InitialProfile::Sine { amplitude, mode } => amplitude * (mode * PI * x).sin(),
            InitialProfile::SinPow { amplitude, power } => amplitude * (PI * x).sin().powi(power),
            InitialProfile::Bump { amplitude, center, width } => {
                let r = (x - center) / width;
                if r.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp()
                }
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            InitialProfile::Zero => InitialProfile::Zero,
            InitialProfile::OneMinusCos { amplitude } => {
                InitialProfile::OneMinusCos { amplitude: factor * amplitude }
            }
            InitialProfile::Sine { amplitude, mode } => {
                InitialProfile::Sine { amplitude: factor * amplitude, mode }
            }
            InitialProfile::SinPow { amplitude, power } => {
                InitialProfile::SinPow { amplitude: factor * amplitude, power }
            }
            InitialProfile::Bump { amplitude, center, width } => {
                InitialProfile::Bump { amplitude: factor * amplitude, center, width }
            }
        }
    }
}

impl fmt::Display for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialProfile::Zero => f.write_str("zero"),
            InitialProfile::OneMinusCos { amplitude } => write!(f, "one_minus_cos({amplitude:?})"),
            InitialProfile::Sine { amplitude, mode } => write!(f, "sine({amplitude:?}, {mode:?})"),
            InitialProfile::SinPow { amplitude, power } => write!(f, "sin_pow({amplitude:?}, {power})"),
            InitialProfile::Bump { amplitude, center, width } => {
                write!(f, "bump({amplitude:?}, {center:?}, {width:?})")
            }
        }
    }
}

impl FromStr for InitialProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        match (name.as_str(), args.as_slice()) {
            ("zero", []) => Ok(InitialProfile::Zero),
            ("one_minus_cos", []) => Ok(InitialProfile::OneMinusCos { amplitude: 1.0 }),
            ("one_minus_cos", [a]) => Ok(InitialProfile::OneMinusCos { amplitude: *a }),
            ("sine", [a, m]) => Ok(InitialProfile::Sine { amplitude: *a, mode: *m }),
            ("sin_pow", [a, p]) if p.fract() == 0.0 && *p >= 1.0 && *p <= 64.0 => {
                Ok(InitialProfile::SinPow { amplitude: *a, power: *p as i32 })
            }
            ("bump", [a, c, w]) if *w > 0.0 => {
                Ok(InitialProfile::Bump { amplitude: *a, center: *c, width: *w })
            }
            _ => Err(Error::Parse(format!("unknown initial profile `{s}`"))),
        }
    }
}

/// Everything needed to integrate one system.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: Model,
    pub kernel: MemoryKernel,
    /// Number of spatial intervals; `dx = 1/M`.
    pub m: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Number of `s` intervals; the grid has `L + 1` samples.
    pub l: usize,
    pub s_f: f64,
    pub y0: InitialProfile,
    pub y1: HistoryFn,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub strict_hypotheses: bool,
    /// Weight the memory part of the discrete energy by ½ (off: the sum is unweighted).
    pub half_memory_energy: bool,
}

impl SimConfig {
    pub fn dx(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn ds(&self) -> f64 {
        self.s_f / self.l as f64
    }

    /// Number of steps, `⌊T/dt⌋` up to rounding.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt + 1e-9).floor() as usize
    }

    pub fn coeffs(&self) -> GeneralizedCoeffs {
        map_coeffs(&self.model)
    }

    pub fn interior_len(&self) -> usize {
        self.m - 3
    }

    pub fn validate(&self) -> Result<()> {
        match self.model {
            Model::Kdvb(p) => {
                KdvbParams::new(p.w0, p.w1, p.w2, p.w3, p.w4)?;
            }
            Model::Ks(p) => {
                KsParams::new(p.n0, p.n1, p.n2, p.n3)?;
            }
        }
        MemoryKernel::new(self.kernel.family(), self.kernel.d1(), self.kernel.d2())?;
        if self.m < 8 {
            return Err(Error::param("M", format!("need at least 8 intervals, got {}", self.m)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("T", format!("must be nonnegative, got {}", self.t_final)));
        }
        if self.l < 2 {
            return Err(Error::param("L", format!("need at least 2 s-intervals, got {}", self.l)));
        }
        if !(self.s_f > 0.0 && self.s_f.is_finite()) {
            return Err(Error::param("s_f", format!("must be positive, got {}", self.s_f)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::param("picard_tol", "must be positive"));
        }
        if self.picard_max == 0 {
            return Err(Error::param("picard_max", "must be at least 1"));
        }
        if self.steps() > MAX_STEPS {
            return Err(Error::param("dt", format!("run needs {} steps, cap is {MAX_STEPS}", self.steps())));
        }
        Ok(())
    }

    pub fn hypothesis_report(&self) -> HypothesisReport {
        match &self.model {
            Model::Kdvb(p) => check_h(&self.kernel, p),
            Model::Ks(p) => check_htilde(&self.kernel, p),
        }
    }
}

/// Solution and memory state at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// Interior unknowns `y_2 … y_{M−2}`.
    pub y: Vec<f64>,
    pub closure: ClosureValues,
    pub trace: TraceHistory,
    pub eta: EtaField,
    pub n: usize,
}

impl SimState {
    /// All nodes `y_0 … y_M`, with closure values at nodes 1 and `M − 1`.
    pub fn full_nodes(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.y.len() + 4);
        v.push(0.0);
        v.push(self.closure.y1);
        v.extend_from_slice(&self.y);
        v.push(self.closure.y_m1);
        v.push(0.0);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Index of the time level just computed.
    pub n: usize,
    pub picard_iterations: usize,
    pub picard_residual: f64,
    pub closure: ClosureValues,
}

/// Per-run machinery: operators and the factorization of the implicit matrix.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: SimConfig,
    coeffs: GeneralizedCoeffs,
    lhs: PentaLU,
    rhs: PentaMatrix,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        Self::with_coeffs(cfg, cfg.coeffs())
    }

    /// Research mode: integrate with user-supplied coefficients while the
    /// boundary closure still follows `cfg.model`.
    pub fn with_coeffs(cfg: &SimConfig, coeffs: GeneralizedCoeffs) -> Result<Self> {
        let stencils = build_stencils(cfg.m, cfg.dx())?;
        let (lhs, rhs) = assemble_system(coeffs.linear(), cfg.dt, &stencils)?;
        let lhs = PentaLU::factor(&lhs)?;
        Ok(Stepper { cfg: cfg.clone(), coeffs, lhs, rhs })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn coeffs(&self) -> &GeneralizedCoeffs {
        &self.coeffs
    }

    pub fn initial_state(&self) -> SimState {
        let cfg = &self.cfg;
        let m = cfg.m;
        let dx = cfg.dx();
        let y = (2..=m - 2).map(|k| cfg.y0.value(k as f64 * dx)).collect();
        let y1 = cfg.y0.value(dx);
        let y_m1 = cfg.y0.value((m - 1) as f64 * dx);
        let closure = ClosureValues { y1, y_m1, y_minus1: 0.0, trace: y1 / (2.0 * dx), residual: 0.0 };
        let trace = TraceHistory::new(cfg.dt, cfg.y1, closure.trace);
        let eta = eta_init(&cfg.y1, cfg.l + 1, cfg.ds());
        SimState { y, closure, trace, eta, n: 0 }
    }

    pub fn energy(&self, state: &SimState) -> f64 {
        discrete_energy(&state.full_nodes(), &state.eta, &self.cfg.kernel, self.cfg.dx(), self.cfg.half_memory_energy)
    }

    fn closure(&self, state: &SimState) -> Result<ClosureValues> {
        let cfg = &self.cfg;
        let ints = memory_integrals(&cfg.kernel, &state.eta, &state.trace);
        match &cfg.model {
            Model::Kdvb(p) => Ok(kdvb_closure(&cfg.kernel, p, &ints, cfg.dx(), cfg.dt)),
            Model::Ks(p) => ks_closure(&cfg.kernel, p, &ints, cfg.dx(), cfg.dt),
        }
    }

    /// `mid_k·(mid_{k+1} − mid_{k−1})/(2dx)` on interior rows, where `mid`
    /// are the full-grid midpoint values.
    fn nonlinear(mid: &[f64], dx: f64, out: &mut [f64]) {
        for (row, o) in out.iter_mut().enumerate() {
            let k = row + 2;
            *o = mid[k] * (mid[k + 1] - mid[k - 1]) / (2.0 * dx);
        }
    }

    /// Advances `state` by one step.
    pub fn step(&self, state: &mut SimState) -> Result<StepReport> {
        let cfg = &self.cfg;
        let n = cfg.interior_len();
        let (dx, dt) = (cfg.dx(), cfg.dt);
        let next = state.n + 1;

        let closure = self.closure(state)?;
        let f_old = boundary_vector(&self.coeffs, &state.closure, n, dx, dt);
        let f_new = boundary_vector(&self.coeffs, &closure, n, dx, dt);
        let mut base = self.rhs.matvec(&state.y);
        for i in 0..n {
            base[i] -= f_old[i] + f_new[i];
        }

        let a5 = self.coeffs.a5;
        let (w, iterations, residual) = if a5 == 0.0 {
            (self.lhs.solve(&base)?, 1, 0.0)
        } else {
            let mut mid = vec![0.0; n + 4];
            mid[1] = 0.5 * (state.closure.y1 + closure.y1);
            mid[n + 2] = 0.5 * (state.closure.y_m1 + closure.y_m1);
            let mut nl = vec![0.0; n];
            let mut w = state.y.clone();
            let mut rhs = vec![0.0; n];
            let mut converged = None;
            let mut residual = f64::INFINITY;
            for it in 1..=cfg.picard_max {
                for i in 0..n {
                    mid[i + 2] = 0.5 * (w[i] + state.y[i]);
                }
                Self::nonlinear(&mid, dx, &mut nl);
                for i in 0..n {
                    rhs[i] = base[i] - dt * a5 * nl[i];
                }
                self.lhs.solve_in_place(&mut rhs)?;
                let diff: f64 = rhs.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                residual = diff / norm2(&rhs).max(1.0);
                std::mem::swap(&mut w, &mut rhs);
                if !residual.is_finite() {
                    return Err(Error::Divergence { step: next });
                }
                if residual <= cfg.picard_tol {
                    converged = Some(it);
                    break;
                }
            }
            match converged {
                Some(it) => (w, it, residual),
                None => {
                    return Err(Error::PicardNotConverged { step: next, residual, iterations: cfg.picard_max })
                }
            }
        };

        if w.iter().any(|v| !v.is_finite()) || !closure.y1.is_finite() || !closure.y_m1.is_finite() {
            return Err(Error::Divergence { step: next });
        }
        state.y = w;
        state.closure = closure;
        state.trace.push(closure.trace);
        state.n = next;
        update_eta(&mut state.eta, &state.trace, next)?;
        Ok(StepReport { n: next, picard_iterations: iterations, picard_residual: residual, closure })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Keep every `snapshot_stride`-th level (the first and last are always kept);
    /// zero keeps only those two.
    pub snapshot_stride: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { snapshot_stride: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// Nodes `y_0 … y_M`.
    pub nodes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub trace: f64,
    pub y1: f64,
    pub y_m1: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub hypothesis: HypothesisReport,
    pub energy: EnergySeries,
    pub snapshots: Vec<Snapshot>,
    pub trace: Vec<TraceRow>,
    pub steps: Vec<StepReport>,
    pub final_state: SimState,
    pub dx: f64,
}

impl RunOutput {
    pub fn max_picard_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.picard_iterations).max().unwrap_or(0)
    }

    pub fn max_closure_residual(&self) -> f64 {
        self.steps.iter().map(|s| s.closure.residual).fold(0.0, f64::max)
    }
}

/// Integrates `cfg` from `t = 0` through `⌊T/dt⌋` steps.
pub fn run(cfg: &SimConfig, opts: &RunOptions) -> Result<RunOutput> {
    let hypothesis = cfg.hypothesis_report();
    if cfg.strict_hypotheses {
        hypothesis.require()?;
    } else if !hypothesis.passed {
        let names: Vec<&str> = hypothesis.violations().map(|c| c.name.as_str()).collect();
        log::warn!("hypotheses violated, continuing: {}", names.join("; "));
    }
    let stepper = Stepper::new(cfg)?;
    let mut state = stepper.initial_state();
    let total = cfg.steps();
    let dt = cfg.dt;

    let mut energy = EnergySeries::default();
    energy.push(0.0, stepper.energy(&state));
    let mut snapshots = vec![Snapshot { t: 0.0, nodes: state.full_nodes() }];
    let mut trace = vec![TraceRow { t: 0.0, trace: state.closure.trace, y1: state.closure.y1, y_m1: state.closure.y_m1 }];
    let mut steps = Vec::with_capacity(total);

    for _ in 0..total {
        let report = stepper.step(&mut state)?;
        let t = state.n as f64 * dt;
        energy.push(t, stepper.energy(&state));
        trace.push(TraceRow { t, trace: report.closure.trace, y1: report.closure.y1, y_m1: report.closure.y_m1 });
        let keep = state.n == total || (opts.snapshot_stride > 0 && state.n % opts.snapshot_stride == 0);
        if keep {
            snapshots.push(Snapshot { t, nodes: state.full_nodes() });
        }
        steps.push(report);
    }
    Ok(RunOutput { hypothesis, energy, snapshots, trace, steps, final_state: state, dx: cfg.dx() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::MemoryKernel;

    pub(crate) fn kdvb_cfg(m: usize, dt: f64, t_final: f64) -> SimConfig {
        SimConfig {
            model: Model::Kdvb(KdvbParams::new(0.01, 1.0, 2.0, 6.0, 0.1).unwrap()),
            kernel: MemoryKernel::exponential(2.0, 0.01).unwrap(),
            m,
            dt,
            t_final,
            l: 300,
            s_f: 30.0,
            y0: InitialProfile::OneMinusCos { amplitude: 1.0 },
            y1: HistoryFn::Zero,
            picard_tol: 1e-10,
            picard_max: 50,
            strict_hypotheses: false,
            half_memory_energy: false,
        }
    }

    #[test]
    fn coefficient_maps() {
        let c = map_coeffs(&Model::Kdvb(KdvbParams { w0: 0.01, w1: 1.0, w2: 2.0, w3: 6.0, w4: 0.0 }));
        assert_eq!(c, GeneralizedCoeffs { a1: 2.0, a2: -0.01, a3: 1.0, a4: 0.0, a5: 6.0 });
        let c = map_coeffs(&Model::Ks(KsParams { n0: 0.01, n1: 1.0, n2: 0.1, n3: 0.1 }));
        assert_eq!(c, GeneralizedCoeffs { a1: 0.0, a2: 0.1, a3: 0.0, a4: 0.01, a5: 1.0 });
        let c = map_coeffs(&Model::Kdvb(KdvbParams { w0: 0.0, w1: 0.0, w2: 0.0, w3: 0.0, w4: 0.0 }));
        assert_eq!(c, GeneralizedCoeffs::default());
        let c = map_coeffs(&Model::Ks(KsParams { n0: 0.0, n1: 0.0, n2: 0.0, n3: 0.0 }));
        assert_eq!(c, GeneralizedCoeffs::default());
    }

    #[test]
    fn profile_round_trip() {
        for p in [
            InitialProfile::Zero,
            InitialProfile::OneMinusCos { amplitude: 1.0 },
            InitialProfile::Sine { amplitude: 0.5, mode: 2.0 },
            InitialProfile::SinPow { amplitude: 1.0, power: 4 },
            InitialProfile::Bump { amplitude: 1.0, center: 0.5, width: 0.2 },
        ] {
            assert_eq!(p.to_string().parse::<InitialProfile>().unwrap(), p);
        }
        assert!("bump(1, 0.5, 0)".parse::<InitialProfile>().is_err());
        assert!("sin_pow(1, 2.5)".parse::<InitialProfile>().is_err());
        let b = InitialProfile::Bump { amplitude: 2.0, center: 0.5, width: 0.2 };
        assert_eq!(b.value(0.5), 2.0);
        assert_eq!(b.value(0.71), 0.0);
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut cfg = kdvb_cfg(32, 0.01, 0.2);
        cfg.y0 = InitialProfile::Zero;
        let out = run(&cfg, &RunOptions::default()).unwrap();
        assert!(out.final_state.full_nodes().iter().all(|&v| v == 0.0));
        assert!(out.energy.energies().iter().all(|&e| e == 0.0));
        assert!(out.trace.iter().all(|r| r.trace == 0.0 && r.y1 == 0.0 && r.y_m1 == 0.0));
    }

    #[test]
    fn linear_problem_needs_one_solve() {
        let mut cfg = kdvb_cfg(64, 0.005, 0.05);
        cfg.model = Model::Kdvb(KdvbParams::new(0.01, 1.0, 2.0, 0.0, 0.1).unwrap());
        let stepper = Stepper::new(&cfg).unwrap();
        let mut state = stepper.initial_state();
        let before = state.clone();
        let r = stepper.step(&mut state).unwrap();
        assert_eq!(r.picard_iterations, 1);
        // a second solve from the converged iterate changes nothing
        let next_closure = r.closure;
        let n = cfg.interior_len();
        let c = stepper.coeffs();
        let f0 = boundary_vector(c, &before.closure, n, cfg.dx(), cfg.dt);
        let f1 = boundary_vector(c, &next_closure, n, cfg.dx(), cfg.dt);
        let mut rhs = stepper.rhs.matvec(&before.y);
        for i in 0..n {
            rhs[i] -= f0[i] + f1[i];
        }
        let again = stepper.lhs.solve(&rhs).unwrap();
        let diff: f64 = again.iter().zip(&state.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(diff / norm2(&again).max(1.0) < 1e-10);
    }

    #[test]
    fn short_final_time_gives_no_steps() {
        let cfg = kdvb_cfg(32, 0.01, 0.005);
        let out = run(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(out.energy.len(), 1);
        let stepper = Stepper::new(&cfg).unwrap();
        assert_eq!(out.energy.energies()[0], stepper.energy(&stepper.initial_state()));
    }

    #[test]
    fn strict_mode_rejects_failed_hypotheses() {
        let mut cfg = kdvb_cfg(32, 0.01, 0.05);
        cfg.kernel = MemoryKernel::exponential(1.0, 0.9).unwrap();
        assert!(run(&cfg, &RunOptions::default()).is_ok());
        cfg.strict_hypotheses = true;
        assert!(matches!(run(&cfg, &RunOptions::default()), Err(Error::HypothesisFailed(_))));
    }

    #[test]
    fn linearity_without_memory() {
        let mut cfg = kdvb_cfg(64, 0.005, 0.1);
        cfg.model = Model::Kdvb(KdvbParams::new(0.01, 1.0, 2.0, 0.0, 0.1).unwrap());
        cfg.y0 = InitialProfile::Bump { amplitude: 1.0, center: 0.5, width: 0.3 };
        let a = run(&cfg, &RunOptions::default()).unwrap();
        cfg.y0 = cfg.y0.scaled(2.0);
        let b = run(&cfg, &RunOptions::default()).unwrap();
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            for (u, v) in sa.nodes.iter().zip(&sb.nodes) {
                assert!((2.0 * u - v).abs() <= 1e-12 * v.abs().max(1e-300) + 1e-300, "{u} {v}");
            }
        }
    }

    #[test]
    fn skew_operators_conserve_the_norm() {
        // a2 = a4 = a5 = 0 and data supported away from the boundary.
        let mut cfg = kdvb_cfg(128, 0.002, 0.1);
        cfg.model = Model::Kdvb(KdvbParams::new(0.0, 1.0, 2.0, 0.0, 0.0).unwrap());
        cfg.y0 = InitialProfile::Bump { amplitude: 1.0, center: 0.5, width: 0.2 };
        let stepper = Stepper::new(&cfg).unwrap();
        let mut state = stepper.initial_state();
        let n0 = norm2(&state.y);
        let mut worst: f64 = 0.0;
        for _ in 0..cfg.steps() {
            let before = norm2(&state.full_nodes());
            stepper.step(&mut state).unwrap();
            worst = worst.max((norm2(&state.full_nodes()) - before).abs() / n0);
        }
        assert!(worst < 1e-10, "per-step drift {worst}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = kdvb_cfg(7, 0.01, 0.1);
        assert!(Stepper::new(&cfg).is_err());
        cfg.m = 32;
        cfg.dt = 1e-9;
        cfg.t_final = 10.0;
        assert!(cfg.validate().is_err());
    }
}
