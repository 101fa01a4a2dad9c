//! Fixtures shared by the solver benchmarks.

use memstab::{preset, PentaMatrix, SimConfig};

/// Diagonally dominant pentadiagonal matrix with deterministic entries.
pub fn dominant_matrix(n: usize) -> PentaMatrix {
    let mut a = PentaMatrix::zeros(n);
    for i in 0..n {
        let w = 1.0 + (i % 7) as f64 / 7.0;
        for (off, v) in [(-2i64, -0.5), (-1, 1.0 * w), (1, -0.75), (2, 0.25 * w)] {
            let j = i as i64 + off;
            if j >= 0 && (j as usize) < n {
                a.set(i, j as usize, v);
            }
        }
        a.set(i, i, 6.0 + w);
    }
    a
}

pub fn rhs(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i as f64) * 0.37).sin()).collect()
}

/// Desk-scale preset configuration with the final time replaced.
pub fn preset_config(name: &str, t_final: f64) -> SimConfig {
    let mut cfg = preset(name).expect("shipped preset").config;
    cfg.t_final = t_final;
    cfg
}
