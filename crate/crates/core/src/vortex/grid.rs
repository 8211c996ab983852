//! Uniform square grids, sine-transform Poisson/Helmholtz solves and
//! fourth-order difference stencils shared by the field solvers.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Square vertex grid: `n` points per side covering
/// [center − h, center + h]² with h = half_width.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub center: (f64, f64),
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.center.0 - self.half_width + self.step() * i as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.center.1 - self.half_width + self.step() * j as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }
}

/// DST-I along both axes of an m×m interior array, used to diagonalize the
/// Dirichlet difference operators. Self-inverse up to 2/(m+1) per axis.
pub struct Dst2 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst2 {
    pub fn new(m: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (m + 1));
        Dst2 { m, fft }
    }

    /// In-place DST-I along rows and columns (unnormalized).
    pub fn forward(&self, a: &mut [f64]) {
        let m = self.m;
        assert_eq!(a.len(), m * m);
        let mut line = vec![0.0; m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); 2 * (m + 1)];
        // rows
        for j in 0..m {
            line.copy_from_slice(&a[j * m..(j + 1) * m]);
            self.dst_line(&mut line, &mut scratch);
            a[j * m..(j + 1) * m].copy_from_slice(&line);
        }
        // columns
        for i in 0..m {
            for j in 0..m {
                line[j] = a[j * m + i];
            }
            self.dst_line(&mut line, &mut scratch);
            for j in 0..m {
                a[j * m + i] = line[j];
            }
        }
    }

    /// Normalized inverse: forward followed by the (2/(m+1))² scaling.
    pub fn inverse(&self, a: &mut [f64]) {
        self.forward(a);
        let s = (2.0 / (self.m as f64 + 1.0)).powi(2);
        for v in a.iter_mut() {
            *v *= s;
        }
    }

    fn dst_line(&self, x: &mut [f64], buf: &mut [Complex64]) {
        let m = self.m;
        let big = 2 * (m + 1);
        buf[0] = Complex64::new(0.0, 0.0);
        buf[m + 1] = Complex64::new(0.0, 0.0);
        for (k, &v) in x.iter().enumerate() {
            buf[k + 1] = Complex64::new(v, 0.0);
            buf[big - 1 - k] = Complex64::new(-v, 0.0);
        }
        self.fft.process(buf);
        for (k, v) in x.iter_mut().enumerate() {
            *v = -0.5 * buf[k + 1].im;
        }
    }
}

/// Eigenvalue of the 1D second-difference operator (Dirichlet) for sine
/// mode k (1-based) on m interior points with step d.
fn lambda_1d(k: usize, m: usize, d: f64) -> f64 {
    let theta = std::f64::consts::PI * k as f64 / (m + 1) as f64;
    (2.0 * theta.cos() - 2.0) / (d * d)
}

/// Direct solver for (c·I − A) on the interior with zero Dirichlet data,
/// where A is either the 5-point Laplacian or the 9-point compact one.
pub struct HelmholtzSolver {
    m: usize,
    dst: Dst2,
    /// symbol[k2*m + k1] = eigenvalue of A for sine mode (k1+1, k2+1)
    symbol: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianKind {
    FivePoint,
    NinePoint,
}

impl HelmholtzSolver {
    pub fn new(m: usize, d: f64, kind: LaplacianKind) -> Self {
        let mut symbol = vec![0.0; m * m];
        for k2 in 0..m {
            let ly = lambda_1d(k2 + 1, m, d);
            for k1 in 0..m {
                let lx = lambda_1d(k1 + 1, m, d);
                symbol[k2 * m + k1] = match kind {
                    LaplacianKind::FivePoint => lx + ly,
                    LaplacianKind::NinePoint => lx + ly + d * d / 6.0 * lx * ly,
                };
            }
        }
        HelmholtzSolver { m, dst: Dst2::new(m), symbol }
    }

    /// Solve (c·I − A) u = f in place.
    pub fn solve(&self, f: &mut [f64], c: f64) {
        self.dst.forward(f);
        let scale = (2.0 / (self.m as f64 + 1.0)).powi(2);
        for (v, &s) in f.iter_mut().zip(&self.symbol) {
            *v *= scale / (c - s);
        }
        self.dst.forward(f);
    }
}

/// Apply the 5-point Laplacian to the interior of a full n×n field
/// (boundary values read from the field itself).
pub fn apply_lap5_full(spec: &GridSpec, w: &[f64], out: &mut [f64]) {
    let n = spec.n;
    let d2 = spec.step() * spec.step();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let c = w[j * n + i];
            out[j * n + i] =
                (w[j * n + i - 1] + w[j * n + i + 1] + w[(j - 1) * n + i] + w[(j + 1) * n + i]
                    - 4.0 * c)
                    / d2;
        }
    }
}

/// Apply the compact 9-point operator to the interior of a full field.
pub fn apply_lap9_full(spec: &GridSpec, w: &[f64], out: &mut [f64]) {
    let n = spec.n;
    let d2 = spec.step() * spec.step();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let c = w[j * n + i];
            let edge = w[j * n + i - 1] + w[j * n + i + 1] + w[(j - 1) * n + i] + w[(j + 1) * n + i];
            let corner = w[(j - 1) * n + i - 1]
                + w[(j - 1) * n + i + 1]
                + w[(j + 1) * n + i - 1]
                + w[(j + 1) * n + i + 1];
            out[j * n + i] = (4.0 * edge + corner - 20.0 * c) / (6.0 * d2);
        }
    }
}

/// Same 9-point apply for interior-only arrays with implicit zero boundary.
pub fn apply_lap9_interior(m: usize, d: f64, x: &[f64], out: &mut [f64]) {
    let d2 = d * d;
    let get = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= m as isize || j >= m as isize {
            0.0
        } else {
            x[j as usize * m + i as usize]
        }
    };
    for j in 0..m as isize {
        for i in 0..m as isize {
            let edge = get(i - 1, j) + get(i + 1, j) + get(i, j - 1) + get(i, j + 1);
            let corner = get(i - 1, j - 1) + get(i - 1, j + 1) + get(i + 1, j - 1) + get(i + 1, j + 1);
            out[j as usize * m as usize + i as usize] =
                (4.0 * edge + corner - 20.0 * get(i, j)) / (6.0 * d2);
        }
    }
}

/// 4th-order first derivative of a full-grid real field along x, one-sided
/// at the two outermost columns.
pub fn ddx4(spec: &GridSpec, w: &[f64], out: &mut [f64]) {
    let n = spec.n;
    let h = spec.step();
    for j in 0..n {
        for i in 0..n {
            let v = |k: usize| w[j * n + k];
            out[j * n + i] = if i >= 2 && i + 2 < n {
                (v(i - 2) - v(i + 2) + 8.0 * (v(i + 1) - v(i - 1))) / (12.0 * h)
            } else if i < 2 {
                (-25.0 * v(i) + 48.0 * v(i + 1) - 36.0 * v(i + 2) + 16.0 * v(i + 3)
                    - 3.0 * v(i + 4))
                    / (12.0 * h)
            } else {
                (25.0 * v(i) - 48.0 * v(i - 1) + 36.0 * v(i - 2) - 16.0 * v(i - 3)
                    + 3.0 * v(i - 4))
                    / (12.0 * h)
            };
        }
    }
}

/// 4th-order first derivative along y.
pub fn ddy4(spec: &GridSpec, w: &[f64], out: &mut [f64]) {
    let n = spec.n;
    let h = spec.step();
    for i in 0..n {
        for j in 0..n {
            let v = |k: usize| w[k * n + i];
            out[j * n + i] = if j >= 2 && j + 2 < n {
                (v(j - 2) - v(j + 2) + 8.0 * (v(j + 1) - v(j - 1))) / (12.0 * h)
            } else if j < 2 {
                (-25.0 * v(j) + 48.0 * v(j + 1) - 36.0 * v(j + 2) + 16.0 * v(j + 3)
                    - 3.0 * v(j + 4))
                    / (12.0 * h)
            } else {
                (25.0 * v(j) - 48.0 * v(j - 1) + 36.0 * v(j - 2) - 16.0 * v(j - 3)
                    + 3.0 * v(j - 4))
                    / (12.0 * h)
            };
        }
    }
}

/// Transpose of [`ddx4`] (scatter form), needed by least-squares adjoints.
pub fn ddx4_t(spec: &GridSpec, w: &[f64], out: &mut [f64]) {
    let n = spec.n;
    let h = spec.step();
    for v in out.iter_mut() {
        *v = 0.0;
    }
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            let wv = w[row];
            let mut put = |k: usize, c: f64| out[j * n + k] += c * wv;
            if i >= 2 && i + 2 < n {
                put(i - 2, 1.0 / (12.0 * h));
                put(i + 2, -1.0 / (12.0 * h));
                put(i + 1, 8.0 / (12.0 * h));
                put(i - 1, -8.0 / (12.0 * h));
            } else if i < 2 {
                put(i, -25.0 / (12.0 * h));
                put(i + 1, 48.0 / (12.0 * h));
                put(i + 2, -36.0 / (12.0 * h));
                put(i + 3, 16.0 / (12.0 * h));
                put(i + 4, -3.0 / (12.0 * h));
            } else {
                put(i, 25.0 / (12.0 * h));
                put(i - 1, -48.0 / (12.0 * h));
                put(i - 2, 36.0 / (12.0 * h));
                put(i - 3, -16.0 / (12.0 * h));
                put(i - 4, 3.0 / (12.0 * h));
            }
        }
    }
}

/// Transpose of [`ddy4`].
pub fn ddy4_t(spec: &GridSpec, w: &[f64], out: &mut [f64]) {
    let n = spec.n;
    let h = spec.step();
    for v in out.iter_mut() {
        *v = 0.0;
    }
    for i in 0..n {
        for j in 0..n {
            let wv = w[j * n + i];
            let mut put = |k: usize, c: f64| out[k * n + i] += c * wv;
            if j >= 2 && j + 2 < n {
                put(j - 2, 1.0 / (12.0 * h));
                put(j + 2, -1.0 / (12.0 * h));
                put(j + 1, 8.0 / (12.0 * h));
                put(j - 1, -8.0 / (12.0 * h));
            } else if j < 2 {
                put(j, -25.0 / (12.0 * h));
                put(j + 1, 48.0 / (12.0 * h));
                put(j + 2, -36.0 / (12.0 * h));
                put(j + 3, 16.0 / (12.0 * h));
                put(j + 4, -3.0 / (12.0 * h));
            } else {
                put(j, 25.0 / (12.0 * h));
                put(j - 1, -48.0 / (12.0 * h));
                put(j - 2, 36.0 / (12.0 * h));
                put(j - 3, -16.0 / (12.0 * h));
                put(j - 4, 3.0 / (12.0 * h));
            }
        }
    }
}

/// Complex-field versions of the 4th-order derivatives.
pub fn ddx4_c(spec: &GridSpec, w: &[Complex64], out: &mut [Complex64]) {
    let n = spec.n;
    let (mut re, mut im) = (vec![0.0; n * n], vec![0.0; n * n]);
    let (mut dre, mut dim) = (vec![0.0; n * n], vec![0.0; n * n]);
    for (k, c) in w.iter().enumerate() {
        re[k] = c.re;
        im[k] = c.im;
    }
    ddx4(spec, &re, &mut dre);
    ddx4(spec, &im, &mut dim);
    for k in 0..n * n {
        out[k] = Complex64::new(dre[k], dim[k]);
    }
}

pub fn ddy4_c(spec: &GridSpec, w: &[Complex64], out: &mut [Complex64]) {
    let n = spec.n;
    let (mut re, mut im) = (vec![0.0; n * n], vec![0.0; n * n]);
    let (mut dre, mut dim) = (vec![0.0; n * n], vec![0.0; n * n]);
    for (k, c) in w.iter().enumerate() {
        re[k] = c.re;
        im[k] = c.im;
    }
    ddy4(spec, &re, &mut dre);
    ddy4(spec, &im, &mut dim);
    for k in 0..n * n {
        out[k] = Complex64::new(dre[k], dim[k]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dst_is_self_inverse() {
        let m = 17;
        let dst = Dst2::new(m);
        let orig: Vec<f64> = (0..m * m).map(|k| ((k * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let mut a = orig.clone();
        dst.forward(&mut a);
        dst.inverse(&mut a);
        for (x, y) in a.iter().zip(&orig) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn dst_line_matches_direct_sum() {
        let m = 9;
        let dst = Dst2::new(m);
        // use the 2D transform on a field constant along y? simpler: check
        // via solving a known Poisson problem below
        let mut a = vec![0.0; m * m];
        a[4 * m + 4] = 1.0;
        let mut b = a.clone();
        dst.forward(&mut b);
        // direct O(m⁴) DST2
        let mut c = vec![0.0; m * m];
        for k2 in 0..m {
            for k1 in 0..m {
                let mut s = 0.0;
                for j in 0..m {
                    for i in 0..m {
                        s += a[j * m + i]
                            * ((std::f64::consts::PI * (i + 1) as f64 * (k1 + 1) as f64
                                / (m + 1) as f64)
                                .sin())
                            * ((std::f64::consts::PI * (j + 1) as f64 * (k2 + 1) as f64
                                / (m + 1) as f64)
                                .sin());
                    }
                }
                c[k2 * m + k1] = s;
            }
        }
        for (x, y) in b.iter().zip(&c) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn helmholtz_five_point_inverts_operator() {
        let m = 31;
        let d = 0.1;
        let solver = HelmholtzSolver::new(m, d, LaplacianKind::FivePoint);
        let f: Vec<f64> = (0..m * m).map(|k| ((k * 31 % 17) as f64 - 8.0) * 0.1).collect();
        let mut u = f.clone();
        let c = 2.0;
        solver.solve(&mut u, c);
        // check (c − Δ5)u = f with implicit zero boundary
        let spec = GridSpec { center: (0.0, 0.0), half_width: d * (m + 1) as f64 / 2.0, n: m + 2 };
        let mut full = vec![0.0; (m + 2) * (m + 2)];
        for j in 0..m {
            for i in 0..m {
                full[(j + 1) * (m + 2) + i + 1] = u[j * m + i];
            }
        }
        let mut lap = vec![0.0; (m + 2) * (m + 2)];
        apply_lap5_full(&spec, &full, &mut lap);
        for j in 0..m {
            for i in 0..m {
                let got = c * u[j * m + i] - lap[(j + 1) * (m + 2) + i + 1];
                assert_abs_diff_eq!(got, f[j * m + i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn helmholtz_nine_point_matches_interior_apply() {
        let m = 21;
        let d = 0.07;
        let solver = HelmholtzSolver::new(m, d, LaplacianKind::NinePoint);
        let f: Vec<f64> = (0..m * m).map(|k| ((k * 13 % 23) as f64 - 11.0) * 0.05).collect();
        let mut u = f.clone();
        solver.solve(&mut u, 1.5);
        let mut lap = vec![0.0; m * m];
        apply_lap9_interior(m, d, &u, &mut lap);
        for k in 0..m * m {
            assert_abs_diff_eq!(1.5 * u[k] - lap[k], f[k], epsilon = 1e-9);
        }
    }

    #[test]
    fn fourth_order_derivative_accuracy() {
        let spec = GridSpec { center: (0.0, 0.0), half_width: 1.0, n: 41 };
        let n = spec.n;
        let mut w = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                w[j * n + i] = (1.3 * spec.x(i)).sin() * (0.7 * spec.y(j)).cos();
            }
        }
        let mut dx = vec![0.0; n * n];
        ddx4(&spec, &w, &mut dx);
        for j in 0..n {
            for i in 0..n {
                let want = 1.3 * (1.3 * spec.x(i)).cos() * (0.7 * spec.y(j)).cos();
                assert_abs_diff_eq!(dx[j * n + i], want, epsilon = 5e-6);
            }
        }
    }
}
