//! Pentadiagonal operators on the interior nodes and their banded LU factorization.

use crate::error::{Error, Result};

/// Square matrix with nonzeros only on offsets −2..=2.
///
/// Bands are stored by row: `bands[j][i]` holds `A[i][i + j − 2]`; entries
/// that fall outside the matrix are kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PentaMatrix {
    n: usize,
    bands: [Vec<f64>; 5],
}

impl PentaMatrix {
    pub fn zeros(n: usize) -> Self {
        PentaMatrix { n, bands: std::array::from_fn(|_| vec![0.0; n]) }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        m.bands[2].fill(1.0);
        m
    }

    /// Builds a matrix from a constant stencil `(l2, l1, d, u1, u2)` applied on every row.
    pub fn from_stencil(n: usize, stencil: [f64; 5]) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for (j, &w) in stencil.iter().enumerate() {
                let col = i as isize + j as isize - 2;
                if col >= 0 && (col as usize) < n {
                    m.bands[j][i] = w;
                }
            }
        }
        m
    }

    /// Builds a matrix from explicit band vectors (offsets −2..=2, each of length `n`).
    pub fn from_bands(bands: [Vec<f64>; 5]) -> Result<Self> {
        let n = bands[2].len();
        for b in &bands {
            if b.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: b.len() });
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("bands", "entries must be finite"));
            }
        }
        let mut m = PentaMatrix { n, bands };
        // Clear the entries that do not belong to the matrix.
        for i in 0..n {
            for j in 0..5 {
                let col = i as isize + j as isize - 2;
                if col < 0 || col as usize >= n {
                    m.bands[j][i] = 0.0;
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let off = col as isize - row as isize;
        if row >= self.n || col >= self.n || off.abs() > 2 {
            return 0.0;
        }
        self.bands[(off + 2) as usize][row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let off = col as isize - row as isize;
        assert!(row < self.n && col < self.n && off.abs() <= 2, "entry ({row}, {col}) outside the band");
        self.bands[(off + 2) as usize][row] = value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut acc = self.bands[2][i] * x[i];
            if i >= 2 {
                acc += self.bands[0][i] * x[i - 2];
            }
            if i >= 1 {
                acc += self.bands[1][i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.bands[3][i] * x[i + 1];
            }
            if i + 2 < n {
                acc += self.bands[4][i] * x[i + 2];
            }
            y[i] = acc;
        }
    }

    /// `self + scale·other`.
    pub fn add_scaled(&self, other: &PentaMatrix, scale: f64) -> Result<PentaMatrix> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mut out = self.clone();
        for (dst, src) in out.bands.iter_mut().zip(&other.bands) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
        Ok(out)
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.bands.iter().map(|b| b[i].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// The four difference operators on the `M − 3` interior unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencils {
    pub d1: PentaMatrix,
    pub d2: PentaMatrix,
    pub d3: PentaMatrix,
    pub d4: PentaMatrix,
    pub dx: f64,
}

impl Stencils {
    pub fn dim(&self) -> usize {
        self.d1.dim()
    }
}

/// Centered second-order stencils for the first to fourth derivatives on a
/// grid of `M + 1` nodes with spacing `dx`. Taps that reach nodes 0, 1,
/// `M − 1`, `M` are dropped here; the boundary vector supplies them.
pub fn build_stencils(m: usize, dx: f64) -> Result<Stencils> {
    if m < 8 {
        return Err(Error::param("M", format!("need at least 8 intervals, got {m}")));
    }
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::param("dx", format!("spacing must be positive, got {dx}")));
    }
    let n = m - 3;
    let (h1, h2, h3, h4) = (1.0 / dx, 1.0 / (dx * dx), 1.0 / dx.powi(3), 1.0 / dx.powi(4));
    Ok(Stencils {
        d1: PentaMatrix::from_stencil(n, [0.0, -0.5 * h1, 0.0, 0.5 * h1, 0.0]),
        d2: PentaMatrix::from_stencil(n, [0.0, h2, -2.0 * h2, h2, 0.0]),
        d3: PentaMatrix::from_stencil(n, [-0.5 * h3, h3, 0.0, -h3, 0.5 * h3]),
        d4: PentaMatrix::from_stencil(n, [h4, -4.0 * h4, 6.0 * h4, -4.0 * h4, h4]),
        dx,
    })
}

/// Crank–Nicolson operators `I ± (dt/2)(a1·D1 + a2·D2 + a3·D3 + a4·D4)`.
pub fn assemble_system(
    a: [f64; 4],
    dt: f64,
    stencils: &Stencils,
) -> Result<(PentaMatrix, PentaMatrix)> {
    let n = stencils.dim();
    let ops = [&stencils.d1, &stencils.d2, &stencils.d3, &stencils.d4];
    let mut spatial = PentaMatrix::zeros(n);
    for (coef, op) in a.iter().zip(ops) {
        spatial = spatial.add_scaled(op, *coef)?;
    }
    let id = PentaMatrix::identity(n);
    let lhs = id.add_scaled(&spatial, 0.5 * dt)?;
    let rhs = id.add_scaled(&spatial, -0.5 * dt)?;
    Ok((lhs, rhs))
}

const WIDTH: usize = 7;

/// Banded LU factorization with row pivoting restricted to the two rows below
/// the diagonal. `U` gains at most two extra superdiagonals.
///
/// Each row stores the columns `row − 2 ..= row + 4` of the working matrix.
#[derive(Debug, Clone)]
pub struct PentaLU {
    n: usize,
    rows: Vec<[f64; WIDTH]>,
    multipliers: Vec<[f64; 2]>,
    pivots: Vec<usize>,
    pivoted: bool,
}

#[inline]
fn slot(row: usize, col: usize) -> usize {
    col + 2 - row
}

impl PentaLU {
    pub fn factor(a: &PentaMatrix) -> Result<Self> {
        let n = a.dim();
        let mut rows = vec![[0.0; WIDTH]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for j in 0..5 {
                row[j] = a.bands[j][i];
            }
        }
        let threshold = 1e-14 * a.norm_inf();
        let mut multipliers = vec![[0.0; 2]; n];
        let mut pivots = vec![0; n];
        let mut pivoted = false;
        for k in 0..n {
            let last = (k + 2).min(n - 1);
            let mut p = k;
            let mut best = rows[k][slot(k, k)].abs();
            for r in k + 1..=last {
                let v = rows[r][slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > threshold) || best == 0.0 {
                return Err(Error::SingularPivot { row: k, pivot: best });
            }
            pivots[k] = p;
            let right = (k + 4).min(n - 1);
            if p != k {
                pivoted = true;
                for c in k..=right {
                    let (sk, sp) = (slot(k, c), slot(p, c));
                    let tmp = rows[k][sk];
                    rows[k][sk] = rows[p][sp];
                    rows[p][sp] = tmp;
                }
            }
            let pivot = rows[k][slot(k, k)];
            for (m, r) in (k + 1..=last).enumerate() {
                let l = rows[r][slot(r, k)] / pivot;
                multipliers[k][m] = l;
                rows[r][slot(r, k)] = 0.0;
                if l != 0.0 {
                    for c in k + 1..=right {
                        let u = rows[k][slot(k, c)];
                        rows[r][slot(r, c)] -= l * u;
                    }
                }
            }
        }
        Ok(PentaLU { n, rows, multipliers, pivots, pivoted })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Whether any row interchange took place.
    pub fn pivoted(&self) -> bool {
        self.pivoted
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.n;
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            let [l1, l2] = self.multipliers[k];
            if k + 1 < n {
                x[k + 1] -= l1 * xk;
            }
            if k + 2 < n {
                x[k + 2] -= l2 * xk;
            }
        }
        for k in (0..n).rev() {
            let row = &self.rows[k];
            let mut acc = x[k];
            for c in k + 1..=(k + 4).min(n - 1) {
                acc -= row[slot(k, c)] * x[c];
            }
            x[k] = acc / row[slot(k, k)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interior(m: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let dx = 1.0 / m as f64;
        (2..=m - 2).map(|k| f(k as f64 * dx)).collect()
    }

    #[test]
    fn rejects_small_grids() {
        assert!(build_stencils(7, 1.0 / 7.0).is_err());
        assert!(build_stencils(8, 1.0 / 8.0).is_ok());
    }

    #[test]
    fn d2_row_sums() {
        let m = 20;
        let s = build_stencils(m, 1.0 / m as f64).unwrap();
        let r = s.d2.matvec(&vec![1.0; m - 3]);
        let h2 = (m * m) as f64;
        assert!((r[0] + h2).abs() < 1e-9);
        assert!((r[m - 4] + h2).abs() < 1e-9);
        for v in &r[1..m - 4] {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn d1_exact_for_linear() {
        let m = 16;
        let s = build_stencils(m, 1.0 / m as f64).unwrap();
        let r = s.d1.matvec(&interior(m, |x| x));
        for v in &r[1..r.len() - 1] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stencils_exact_on_low_degree_polynomials() {
        let m = 16;
        let dx = 1.0 / m as f64;
        let s = build_stencils(m, dx).unwrap();
        let n = m - 3;
        let check = |op: &PentaMatrix, f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64| {
            let r = op.matvec(&interior(m, f));
            for i in 2..n - 2 {
                let x = (i + 2) as f64 * dx;
                assert!((r[i] - df(x)).abs() < 1e-7 * (1.0 + df(x).abs()), "row {i}");
            }
        };
        check(&s.d1, &|x| x * x, &|x| 2.0 * x);
        check(&s.d2, &|x| x * x * x, &|x| 6.0 * x);
        check(&s.d3, &|x| x.powi(4), &|x| 24.0 * x);
        check(&s.d4, &|x| x.powi(5), &|x| 120.0 * x);
        check(&s.d4, &|x| x.powi(4), &|_| 24.0);
    }

    #[test]
    fn d4_second_order_on_quartic_plus_sextic() {
        // f = x⁶ has f'''' = 360x²; the stencil error is dx²·f⁽⁶⁾/6 = 120·dx².
        let mut errs = Vec::new();
        for m in [32usize, 64, 128] {
            let dx = 1.0 / m as f64;
            let s = build_stencils(m, dx).unwrap();
            let r = s.d4.matvec(&interior(m, |x| x.powi(6)));
            let err = (2..m - 5)
                .map(|i| {
                    let x = (i + 2) as f64 * dx;
                    (r[i] - 360.0 * x * x).abs()
                })
                .fold(0.0, f64::max);
            assert!((err - 120.0 * dx * dx).abs() < 1e-5, "m={m} err={err}");
            errs.push(err);
        }
        assert!((errs[0] / errs[1]).log2() > 1.9);
    }

    #[test]
    fn d3_printed_sign_layout() {
        let s = build_stencils(12, 1.0).unwrap();
        assert_eq!(s.d3.get(0, 1), -1.0);
        assert_eq!(s.d3.get(0, 2), 0.5);
        assert_eq!(s.d3.get(1, 0), 1.0);
        assert_eq!(s.d3.get(2, 0), -0.5);
        assert_eq!(s.d3.get(2, 2), 0.0);
    }

    #[test]
    fn assembly_identities() {
        let s = build_stencils(10, 1.0).unwrap();
        let (l, r) = assemble_system([0.0; 4], 0.1, &s).unwrap();
        assert_eq!(l, PentaMatrix::identity(7));
        assert_eq!(r, PentaMatrix::identity(7));

        let (l, r) = assemble_system([0.3, -1.2, 2.0, 0.7], 0.05, &s).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let expect = if i == j { 2.0 } else { 0.0 };
                assert!((l.get(i, j) + r.get(i, j) - expect).abs() < 1e-14);
            }
        }

        let (l, _) = assemble_system([0.0, 0.0, 0.0, 1.0], 2.0, &s).unwrap();
        let row: Vec<f64> = (1..6).map(|j| l.get(3, j)).collect();
        assert_eq!(row, vec![1.0, -4.0, 7.0, -4.0, 1.0]);
    }

    #[test]
    fn identity_and_tridiagonal_solves() {
        let lu = PentaLU::factor(&PentaMatrix::identity(5)).unwrap();
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(lu.solve(&b).unwrap(), b.to_vec());

        let a = PentaMatrix::from_stencil(4, [0.0, -1.0, 2.0, -1.0, 0.0]);
        let x = PentaLU::factor(&a).unwrap().solve(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // Zero leading diagonal forces an interchange.
        let mut a = PentaMatrix::from_stencil(6, [0.5, 1.0, 3.0, 1.0, 0.5]);
        a.set(0, 0, 0.0);
        a.set(3, 3, 1e-3);
        let lu = PentaLU::factor(&a).unwrap();
        assert!(lu.pivoted());
        let x_true = [1.0, -1.0, 2.0, 0.5, -3.0, 4.0];
        let b = a.matvec(&x_true);
        let x = lu.solve(&b).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = PentaMatrix::zeros(5);
        assert!(matches!(PentaLU::factor(&a), Err(Error::SingularPivot { .. })));
        let mut b = PentaMatrix::identity(4);
        b.set(2, 2, 0.0);
        assert!(PentaLU::factor(&b).is_err());
    }

    #[test]
    fn from_bands_validates() {
        assert!(PentaMatrix::from_bands([vec![0.0; 3], vec![0.0; 3], vec![1.0; 4], vec![0.0; 4], vec![0.0; 4]]).is_err());
        assert!(PentaMatrix::from_bands([vec![0.0; 2], vec![0.0; 2], vec![f64::NAN; 2], vec![0.0; 2], vec![0.0; 2]]).is_err());
        let m = PentaMatrix::from_bands([vec![9.0; 3], vec![1.0; 3], vec![2.0; 3], vec![3.0; 3], vec![4.0; 3]]).unwrap();
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.get(2, 0), 9.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![9.0, 6.0, 12.0]);
    }

    proptest! {
        #[test]
        fn solve_is_linear(
            seed in any::<u64>(), n in 5usize..40, scale in -3.0f64..3.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut bands: [Vec<f64>; 5] = std::array::from_fn(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
            for v in bands[2].iter_mut() {
                *v += 5.0 * v.signum();
            }
            let a = PentaMatrix::from_bands(bands).unwrap();
            let lu = PentaLU::factor(&a).unwrap();
            let b1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let comb: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| scale * x + y).collect();
            let x1 = lu.solve(&b1).unwrap();
            let x2 = lu.solve(&b2).unwrap();
            let xc = lu.solve(&comb).unwrap();
            for i in 0..n {
                prop_assert!((xc[i] - (scale * x1[i] + x2[i])).abs() < 1e-12 * (1.0 + xc[i].abs()));
            }
        }
    }
}
