//! Composite Newton-Cotes rules on uniform grids.

/// Composite Simpson rule over uniformly spaced samples `f[0..=n]` with spacing `h`.
///
/// An odd number of panels is handled by closing the last panel with the
/// trapezoid rule. Fewer than two samples integrate to zero.
pub fn simpson_samples(f: &[f64], h: f64) -> f64 {
    let panels = f.len().saturating_sub(1);
    if panels == 0 {
        return 0.0;
    }
    if panels == 1 {
        return 0.5 * h * (f[0] + f[1]);
    }
    let even = panels - panels % 2;
    let mut odd_sum = 0.0;
    let mut even_sum = 0.0;
    for i in 1..even {
        if i % 2 == 1 {
            odd_sum += f[i];
        } else {
            even_sum += f[i];
        }
    }
    let mut total = h / 3.0 * (f[0] + 4.0 * odd_sum + 2.0 * even_sum + f[even]);
    if even < panels {
        total += 0.5 * h * (f[even] + f[panels]);
    }
    total
}

/// Composite Simpson rule for `g` on `[a, b]` with `panels` subintervals
/// (rounded up to an even count).
pub fn simpson<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = panels.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut acc = g(a) + g(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Composite trapezoid rule over uniformly spaced samples.
pub fn trapezoid_samples(f: &[f64], h: f64) -> f64 {
    if f.len() < 2 {
        return 0.0;
    }
    let inner: f64 = f[1..f.len() - 1].iter().sum();
    h * (0.5 * (f[0] + f[f.len() - 1]) + inner)
}
