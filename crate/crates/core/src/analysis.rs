//! Energy diagnostics, decay fits and grid convergence studies.

use std::fmt;

use crate::error::{Error, Result};
use crate::history::EtaField;
use crate::kernels::MemoryKernel;
use crate::stepper::{SimConfig, Stepper};

/// `E = ½ Σ_{i=1}^{M−1} y_i² Δx + w·Σ_{i=0}^{L} β(s_i) η_i² Δs` over the full
/// node vector `y_0 … y_M`, with `w = ½` when `half_memory` is set and `1` otherwise.
pub fn discrete_energy(nodes: &[f64], eta: &EtaField, k: &MemoryKernel, dx: f64, half_memory: bool) -> f64 {
    let m = nodes.len().saturating_sub(1);
    let field: f64 = if m >= 2 { nodes[1..m].iter().map(|y| y * y).sum() } else { 0.0 };
    let ds = eta.ds();
    let memory: f64 = eta.values().iter().enumerate().map(|(i, e)| k.beta(i as f64 * ds) * e * e).sum();
    let weight = if half_memory { 0.5 } else { 1.0 };
    0.5 * field * dx + weight * memory * ds
}

/// Time series of the discrete energy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergySeries {
    times: Vec<f64>,
    energies: Vec<f64>,
}

impl EnergySeries {
    pub fn new(times: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        if times.len() != energies.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), got: energies.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Fit("times must be strictly increasing".into()));
        }
        Ok(EnergySeries { times, energies })
    }

    pub fn push(&mut self, t: f64, e: f64) {
        self.times.push(t);
        self.energies.push(e);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Middle 60% of the recorded time range.
    pub fn default_window(&self) -> (f64, f64) {
        match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => (a + 0.2 * (b - a), a + 0.8 * (b - a)),
            _ => (0.0, 0.0),
        }
    }

    fn in_window(&self, window: (f64, f64)) -> impl Iterator<Item = (f64, f64)> + '_ {
        let tol = 1e-12 * (1.0 + window.1.abs());
        self.times
            .iter()
            .zip(&self.energies)
            .filter(move |(t, _)| **t >= window.0 - tol && **t <= window.1 + tol)
            .map(|(t, e)| (*t, *e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    /// `E ≈ A·e^{−rate·t}`
    Exponential,
    /// `E ≈ A·(1 + t)^{−rate}`
    Polynomial,
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecayModel::Exponential => "exponential",
            DecayModel::Polynomial => "polynomial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    pub rate: f64,
    pub amplitude: f64,
    /// Coefficient of determination of the log-space fit, in `[0, 1]`.
    pub r2: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Set when the log-energy is constant over the window.
    pub degenerate: bool,
}

fn log_fit(series: &EnergySeries, window: (f64, f64), model: DecayModel) -> Result<DecayFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, e) in series.in_window(window) {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Fit(format!("energy must be positive to fit, got {e} at t = {t}")));
        }
        xs.push(match model {
            DecayModel::Exponential => t,
            DecayModel::Polynomial => (1.0 + t).ln(),
        });
        ys.push(e.ln());
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Fit(format!("need at least 2 points in window, got {n}")));
    }
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("window contains a single time".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let degenerate = syy <= 1e-28 * (1.0 + ym * ym) * n as f64;
    let r2 = if degenerate {
        0.0
    } else {
        let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        model,
        rate: if degenerate { 0.0 } else { -slope },
        amplitude: intercept.exp(),
        r2,
        window,
        points: n,
        degenerate,
    })
}

/// Least-squares fit of `ln E` against `t`.
pub fn fit_exponential(series: &EnergySeries, window: (f64, f64)) -> Result<DecayFit> {
    log_fit(series, window, DecayModel::Exponential)
}

/// Least-squares fit of `ln E` against `ln(1 + t)`.
pub fn fit_polynomial(series: &EnergySeries, window: (f64, f64)) -> Result<DecayFit> {
    log_fit(series, window, DecayModel::Polynomial)
}

/// Largest relative increase `max_n (E_{n+1} − E_n) / max(E_n, ε_mach)`;
/// nonpositive for a nonincreasing series.
pub fn monotonicity_defect(series: &EnergySeries) -> f64 {
    let e = series.energies();
    if e.len() < 2 {
        return 0.0;
    }
    e.windows(2)
        .map(|w| (w[1] - w[0]) / w[0].max(f64::EPSILON))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub levels: Vec<usize>,
    /// `‖u_l − u_{l+1}‖` sampled at the coarsest nodes.
    pub differences: Vec<f64>,
    /// `log₂(d_l / d_{l+1})` for consecutive differences.
    pub orders: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn observed_order(&self) -> f64 {
        *self.orders.last().expect("at least three levels")
    }
}

/// Runs `cfg` on each spatial resolution in `levels` (each twice the
/// previous) with `dt` refined in proportion and compares final states.
pub fn self_convergence(cfg: &SimConfig, levels: &[usize]) -> Result<ConvergenceStudy> {
    if levels.len() < 3 {
        return Err(Error::Convergence(format!("need at least 3 levels, got {}", levels.len())));
    }
    if levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Convergence(format!("levels must double: {levels:?}")));
    }
    let coarse = levels[0];
    let mut finals = Vec::with_capacity(levels.len());
    for &m in levels {
        let mut c = cfg.clone();
        c.m = m;
        c.dt = cfg.dt * coarse as f64 / m as f64;
        c.t_final = cfg.steps() as f64 * cfg.dt;
        let stepper = Stepper::new(&c)?;
        let mut state = stepper.initial_state();
        let steps = cfg.steps() * m / coarse;
        for _ in 0..steps {
            stepper.step(&mut state)?;
        }
        finals.push(state.full_nodes());
    }
    let dx0 = 1.0 / coarse as f64;
    let mut differences = Vec::new();
    for (l, pair) in finals.windows(2).enumerate() {
        let (r1, r2) = (levels[l] / coarse, levels[l + 1] / coarse);
        let sq: f64 = (0..=coarse).map(|i| (pair[0][i * r1] - pair[1][i * r2]).powi(2)).sum();
        differences.push((sq * dx0).sqrt());
    }
    let orders = differences.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    Ok(ConvergenceStudy { levels: levels.to_vec(), differences, orders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(f: impl Fn(f64) -> f64, n: usize, t_end: f64) -> EnergySeries {
        let times: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        let e = times.iter().map(|&t| f(t)).collect();
        EnergySeries::new(times, e).unwrap()
    }

    #[test]
    fn energy_of_single_node() {
        let mut nodes = vec![0.0; 11];
        nodes[4] = 1.0;
        let eta = EtaField::from_values(0.1, vec![0.0; 5], 0);
        let k = MemoryKernel::exponential(1.0, 0.1).unwrap();
        assert!((discrete_energy(&nodes, &eta, &k, 0.1, false) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn memory_weighting() {
        let nodes = vec![0.0; 11];
        let eta = EtaField::from_values(0.5, vec![0.0, 1.0, 2.0], 0);
        let k = MemoryKernel::exponential(1.0, 0.1).unwrap();
        let full = discrete_energy(&nodes, &eta, &k, 0.1, false);
        let expect = 0.5 * (k.beta(0.5) + 4.0 * k.beta(1.0));
        assert!((full - expect).abs() < 1e-15);
        assert!((discrete_energy(&nodes, &eta, &k, 0.1, true) - 0.5 * expect).abs() < 1e-15);
    }

    #[test]
    fn exact_exponential_recovered() {
        let s = series(|t| 3.0 * (-2.0 * t).exp(), 100, 5.0);
        let fit = fit_exponential(&s, (0.0, 5.0)).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-10);
        assert!((fit.amplitude - 3.0).abs() < 1e-9);
        assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn exact_power_law_recovered() {
        let s = series(|t| 0.7 * (1.0 + t).powf(-1.5), 200, 10.0);
        let fit = fit_polynomial(&s, s.default_window()).unwrap();
        assert!((fit.rate - 1.5).abs() < 1e-10);
        assert_eq!(fit.points, 121);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = series(|_| 2.0, 10, 1.0);
        let fit = fit_exponential(&s, (0.0, 1.0)).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.r2, 0.0);
        assert!(fit.degenerate);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let s = series(|t| 1.0 - t, 10, 1.0);
        assert!(matches!(fit_exponential(&s, (0.0, 1.0)), Err(Error::Fit(_))));
        let s = series(|t| (-t).exp(), 10, 1.0);
        assert!(fit_exponential(&s, (0.45, 0.5)).is_err());
        assert!(EnergySeries::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(EnergySeries::new(vec![0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn monotonicity() {
        assert_eq!(monotonicity_defect(&EnergySeries::default()), 0.0);
        let s = series(|t| (-t).exp(), 10, 1.0);
        assert!(monotonicity_defect(&s) < 0.0);
        let s = EnergySeries::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.6]).unwrap();
        assert!((monotonicity_defect(&s) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn convergence_level_validation() {
        let cfg = crate::manifest::preset("case1").unwrap().config;
        assert!(self_convergence(&cfg, &[16, 32]).is_err());
        assert!(self_convergence(&cfg, &[16, 32, 48]).is_err());
    }

    proptest! {
        #[test]
        fn exponential_fit_recovers_rate(rate in 0.01f64..5.0, amp in 0.1f64..10.0) {
            let s = series(|t| amp * (-rate * t).exp(), 50, 4.0);
            let fit = fit_exponential(&s, s.default_window()).unwrap();
            prop_assert!((fit.rate - rate).abs() < 1e-9 * rate.max(1.0));
            prop_assert!(fit.r2 >= 0.0 && fit.r2 <= 1.0);
        }

        #[test]
        fn r2_stays_in_unit_interval(noise in proptest::collection::vec(-1.0f64..1.0, 20)) {
            let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
            let e: Vec<f64> = noise.iter().map(|z| (z * 2.0).exp()).collect();
            let s = EnergySeries::new(times, e).unwrap();
            for fit in [fit_exponential(&s, (0.0, 2.0)).unwrap(), fit_polynomial(&s, (0.0, 2.0)).unwrap()] {
                prop_assert!(fit.r2 >= 0.0 && fit.r2 <= 1.0);
            }
        }
    }
}
