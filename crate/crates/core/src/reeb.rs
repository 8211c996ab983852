//! Linearized return dynamics along a closed orbit.
//!
//! Everything here is driven by a pair of periodic coefficient functions
//! `(ν, μ)` on the circle: the symmetric first-order operator
//!
//! ```text
//! L ζ = (i/2) ζ' + ν ζ + μ ζ̄
//! ```
//!
//! its kernel flow `z' = 2i(ν z + μ z̄)` integrated into an SL(2,ℝ) path
//! `U(t)`, the elliptic/hyperbolic classification by `trace U(2π)`, rotation
//! numbers read off a continuous angle lift, Fourier discretizations of `L`
//! on `2πq`-periodic functions, and the signed count of eigenvalue zero
//! crossings along a family of symmetric operators.

use crate::error::{Error, Result};
use crate::fourier;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Default sample count for coefficient functions.
pub const DEFAULT_SAMPLES: usize = 256;
/// Default step count for monodromy integration (2π/4096 step).
pub const DEFAULT_MONODROMY_STEPS: usize = 4096;
/// |trace ∓ 2| below this is reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// The coefficient pair (ν, μ) of the linearized flow, stored as uniform
/// samples on [0, 2π) with trigonometric interpolation.
#[derive(Clone, Debug)]
pub struct PeriodicPair {
    nu: Vec<f64>,
    mu: Vec<Complex64>,
    nu_coeffs: Vec<Complex64>,
    mu_coeffs: Vec<Complex64>,
}

impl PeriodicPair {
    /// Build from sample vectors of equal length (≥ 8).
    pub fn from_samples(nu: Vec<f64>, mu: Vec<Complex64>) -> Result<Self> {
        if nu.len() != mu.len() {
            return Err(Error::Representation(format!(
                "nu has {} samples, mu has {}",
                nu.len(),
                mu.len()
            )));
        }
        if nu.len() < 8 {
            return Err(Error::invalid("need at least 8 samples"));
        }
        let nu_c: Vec<Complex64> = nu.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let nu_coeffs = fourier::fft_coeffs(&nu_c);
        let mu_coeffs = fourier::fft_coeffs(&mu);
        Ok(Self { nu, mu, nu_coeffs, mu_coeffs })
    }

    /// Sample a closure at the default resolution.
    pub fn from_fn(nu: impl Fn(f64) -> f64, mu: impl Fn(f64) -> Complex64) -> Self {
        let ts = fourier::sample_points(DEFAULT_SAMPLES);
        let nu_s: Vec<f64> = ts.iter().map(|&t| nu(t)).collect();
        let mu_s: Vec<Complex64> = ts.iter().map(|&t| mu(t)).collect();
        Self::from_samples(nu_s, mu_s).expect("default sampling is valid")
    }

    /// Constant coefficients.
    pub fn constant(nu: f64, mu: Complex64) -> Self {
        Self::from_fn(|_| nu, |_| mu)
    }

    /// The elliptic canonical pair (½R, 0) with rotation number R.
    pub fn canonical_elliptic(rotation: f64) -> Self {
        Self::constant(0.5 * rotation, Complex64::new(0.0, 0.0))
    }

    /// The hyperbolic canonical pair (¼k, iε e^{ikt}) with rotation number k.
    ///
    /// The substitution z = e^{ikt/2} w decouples the kernel flow to
    /// w' = −2ε w̄, so trace U(2π) = (−1)^k · 2cosh(4πε).
    pub fn canonical_hyperbolic(k: i64, eps: f64) -> Self {
        Self::from_fn(
            |_| k as f64 / 4.0,
            move |t| Complex64::new(0.0, eps) * Complex64::from_polar(1.0, k as f64 * t),
        )
    }

    /// The variant (½k, iε e^{−ikt}) that appears in some statements of the
    /// canonical form. Supplied so candidate homotopies to it can be checked;
    /// for small ε this pair is in fact elliptic (the μ frequency does not
    /// resonate with the rotation rate 2ν = k).
    pub fn half_k_variant(k: i64, eps: f64) -> Self {
        Self::from_fn(
            |_| k as f64 / 2.0,
            move |t| Complex64::new(0.0, eps) * Complex64::from_polar(1.0, -(k as f64) * t),
        )
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn nu_samples(&self) -> &[f64] {
        &self.nu
    }

    pub fn mu_samples(&self) -> &[Complex64] {
        &self.mu
    }

    /// ν(t) by trigonometric interpolation.
    pub fn nu_at(&self, t: f64) -> f64 {
        fourier::eval_trig(&self.nu_coeffs, t).re
    }

    /// μ(t) by trigonometric interpolation.
    pub fn mu_at(&self, t: f64) -> Complex64 {
        fourier::eval_trig(&self.mu_coeffs, t)
    }

    /// Fourier coefficient ν̂_j of e^{ijt}; zero outside the sampled band.
    pub fn nu_hat(&self, j: i64) -> Complex64 {
        coeff_at(&self.nu_coeffs, j)
    }

    /// Fourier coefficient μ̂_j of e^{ijt}.
    pub fn mu_hat(&self, j: i64) -> Complex64 {
        coeff_at(&self.mu_coeffs, j)
    }

    /// Pointwise linear interpolation toward `other` (s ∈ [0,1]).
    pub fn lerp(&self, other: &PeriodicPair, s: f64) -> PeriodicPair {
        let n = self.len().max(other.len());
        let ts = fourier::sample_points(n);
        let nu: Vec<f64> = ts
            .iter()
            .map(|&t| (1.0 - s) * self.nu_at(t) + s * other.nu_at(t))
            .collect();
        let mu: Vec<Complex64> = ts
            .iter()
            .map(|&t| self.mu_at(t) * (1.0 - s) + other.mu_at(t) * s)
            .collect();
        PeriodicPair::from_samples(nu, mu).expect("interpolant sampling is valid")
    }

    /// Sup-norm perturbation, used by stability tests.
    pub fn perturbed(&self, dnu: impl Fn(f64) -> f64, dmu: impl Fn(f64) -> Complex64) -> Self {
        let ts = fourier::sample_points(self.len());
        let nu: Vec<f64> = ts.iter().map(|&t| self.nu_at(t) + dnu(t)).collect();
        let mu: Vec<Complex64> = ts.iter().map(|&t| self.mu_at(t) + dmu(t)).collect();
        Self::from_samples(nu, mu).expect("perturbed sampling is valid")
    }
}

fn coeff_at(coeffs: &[Complex64], j: i64) -> Complex64 {
    let n = coeffs.len() as i64;
    if j < -(n / 2) || j >= n - n / 2 {
        return Complex64::new(0.0, 0.0);
    }
    let idx = j.rem_euclid(n) as usize;
    coeffs[idx]
}

/// A complex function with period 2πq, stored as uniform samples.
#[derive(Clone, Debug)]
pub struct PeriodicFn {
    pub q: u32,
    pub samples: Vec<Complex64>,
}

impl PeriodicFn {
    pub fn from_fn(q: u32, n: usize, f: impl Fn(f64) -> Complex64) -> Self {
        let period = 2.0 * PI * q as f64;
        let samples = (0..n).map(|j| f(period * j as f64 / n as f64)).collect();
        Self { q, samples }
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let period = 2.0 * PI * self.q as f64;
        let n = self.samples.len();
        (0..n).map(|j| period * j as f64 / n as f64).collect()
    }

    /// L² norm over one period.
    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).re.sqrt()
    }

    /// Complex L² pairing ∫ f ḡ over one period.
    pub fn l2_inner(&self, other: &PeriodicFn) -> Complex64 {
        assert_eq!(self.samples.len(), other.samples.len());
        let period = 2.0 * PI * self.q as f64;
        let h = period / self.samples.len() as f64;
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * h
    }
}

/// Apply L to a 2πq-periodic function: (i/2)ζ' + νζ + μζ̄.
pub fn apply_l(pair: &PeriodicPair, zeta: &PeriodicFn, q: u32) -> Result<PeriodicFn> {
    if q == 0 {
        return Err(Error::invalid("q must be positive"));
    }
    if zeta.q != q {
        return Err(Error::Representation(format!(
            "zeta has period multiplier {}, expected {}",
            zeta.q, q
        )));
    }
    if zeta.samples.len() < 16 {
        return Err(Error::invalid("too few samples to differentiate"));
    }
    let period = 2.0 * PI * q as f64;
    let dz = fourier::spectral_derivative(&zeta.samples, period);
    let half_i = Complex64::new(0.0, 0.5);
    let out = zeta
        .sample_times()
        .into_iter()
        .zip(zeta.samples.iter().zip(&dz))
        .map(|(t, (&z, &zp))| half_i * zp + self_nu(pair, t) * z + pair.mu_at(t) * z.conj())
        .collect();
    Ok(PeriodicFn { q, samples: out })
}

fn self_nu(pair: &PeriodicPair, t: f64) -> Complex64 {
    Complex64::new(pair.nu_at(t), 0.0)
}

/// The monodromy path U(t) of the kernel flow, with its final trace and the
/// continuous angle lift of U(t)·(1,0)ᵀ.
#[derive(Clone, Debug)]
pub struct MonodromyResult {
    /// Sparse record of (t, U(t)) along the integration.
    pub samples: Vec<(f64, [[f64; 2]; 2])>,
    pub trace_final: f64,
    pub angle_lift: f64,
    pub final_matrix: [[f64; 2]; 2],
}

impl MonodromyResult {
    pub fn max_det_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|(_, u)| (u[0][0] * u[1][1] - u[0][1] * u[1][0] - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Coefficient matrix A(t) of U' = A U in the real coordinates z = x + iy:
/// x' = −2μ₂x − 2(ν−μ₁)y, y' = 2(ν+μ₁)x + 2μ₂y. Traceless.
fn flow_matrix(pair: &PeriodicPair, t: f64) -> [[f64; 2]; 2] {
    let nu = pair.nu_at(t);
    let mu = pair.mu_at(t);
    [
        [-2.0 * mu.im, -2.0 * (nu - mu.re)],
        [2.0 * (nu + mu.re), 2.0 * mu.im],
    ]
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_axpy(y: &mut [[f64; 2]; 2], s: f64, x: &[[f64; 2]; 2]) {
    for i in 0..2 {
        for j in 0..2 {
            y[i][j] += s * x[i][j];
        }
    }
}

/// Integrate U' = A(t)U over [0, 2π] with classical RK4.
pub fn monodromy(pair: &PeriodicPair, steps: usize) -> Result<MonodromyResult> {
    if steps < 64 {
        return Err(Error::invalid("monodromy needs at least 64 steps"));
    }
    let h = 2.0 * PI / steps as f64;
    let mut u = [[1.0, 0.0], [0.0, 1.0]];
    let mut angle: f64 = 0.0;
    let record_every = (steps / 256).max(1);
    let mut samples = Vec::with_capacity(steps / record_every + 2);
    samples.push((0.0, u));

    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = mat_mul(&flow_matrix(pair, t), &u);
        let mut u2 = u;
        mat_axpy(&mut u2, 0.5 * h, &k1);
        let k2 = mat_mul(&flow_matrix(pair, t + 0.5 * h), &u2);
        let mut u3 = u;
        mat_axpy(&mut u3, 0.5 * h, &k2);
        let k3 = mat_mul(&flow_matrix(pair, t + 0.5 * h), &u3);
        let mut u4 = u;
        mat_axpy(&mut u4, h, &k3);
        let k4 = mat_mul(&flow_matrix(pair, t + h), &u4);

        let mut unew = u;
        mat_axpy(&mut unew, h / 6.0, &k1);
        mat_axpy(&mut unew, h / 3.0, &k2);
        mat_axpy(&mut unew, h / 3.0, &k3);
        mat_axpy(&mut unew, h / 6.0, &k4);

        // unwrap the angle of U(t)·(1,0)ᵀ by the nearest branch
        let prev = angle;
        let raw = unew[1][0].atan2(unew[0][0]);
        let mut delta = raw - wrap_to_pi(prev);
        while delta > PI {
            delta -= 2.0 * PI;
        }
        while delta < -PI {
            delta += 2.0 * PI;
        }
        angle = prev + delta;
        u = unew;

        if (s + 1) % record_every == 0 || s + 1 == steps {
            samples.push(((s + 1) as f64 * h, u));
        }
    }

    Ok(MonodromyResult {
        samples,
        trace_final: u[0][0] + u[1][1],
        angle_lift: angle,
        final_matrix: u,
    })
}

fn wrap_to_pi(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    if x < -PI {
        x += 2.0 * PI;
    }
    x
}

/// Stability type of a coefficient pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OrbitKind {
    Elliptic,
    Hyperbolic,
    Degenerate,
}

/// Classification of the monodromy with its rotation data. Only `R mod 1`
/// (elliptic) and `k mod 2` (hyperbolic) are chart-independent; the computed
/// integer lift is exposed as-is.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct Classification {
    pub kind: OrbitKind,
    /// Elliptic rotation number with the lift from the angle of U(t)(1,0)ᵀ.
    pub rotation_r: Option<f64>,
    /// Hyperbolic rotation number (half-turn count).
    pub rotation_k: Option<i64>,
    /// trace U(2π) > 2.
    pub positive_hyperbolic: bool,
    pub trace: f64,
    pub angle_lift: f64,
}

impl Classification {
    pub fn elliptic(r: f64) -> Self {
        Classification {
            kind: OrbitKind::Elliptic,
            rotation_r: Some(r),
            rotation_k: None,
            positive_hyperbolic: false,
            trace: 2.0 * (2.0 * PI * r).cos(),
            angle_lift: 2.0 * PI * r,
        }
    }

    pub fn hyperbolic(k: i64) -> Self {
        Classification {
            kind: OrbitKind::Hyperbolic,
            rotation_r: None,
            rotation_k: Some(k),
            positive_hyperbolic: k % 2 == 0,
            trace: if k % 2 == 0 { 2.5 } else { -2.5 },
            angle_lift: PI * k as f64,
        }
    }
}

/// Classify a pair from its monodromy at the default step count.
pub fn classify(pair: &PeriodicPair) -> Classification {
    classify_with_steps(pair, DEFAULT_MONODROMY_STEPS)
}

pub fn classify_with_steps(pair: &PeriodicPair, steps: usize) -> Classification {
    let m = monodromy(pair, steps).expect("step count is validated");
    let trace = m.trace_final;
    let lift = m.angle_lift;

    if (trace.abs() - 2.0).abs() < DEGENERACY_TOL {
        return Classification {
            kind: OrbitKind::Degenerate,
            rotation_r: None,
            rotation_k: None,
            positive_hyperbolic: false,
            trace,
            angle_lift: lift,
        };
    }
    if trace.abs() > 2.0 {
        let k_est = lift / PI;
        let k = k_est.round() as i64;
        debug_assert!(
            (k_est - k as f64).abs() < 0.25,
            "hyperbolic angle lift {k_est} too far from a half-turn count"
        );
        // sign rule: (−1)^k = sign(trace)
        let k = if (k % 2 == 0) == (trace > 0.0) { k } else { k + 1 };
        Classification {
            kind: OrbitKind::Hyperbolic,
            rotation_r: None,
            rotation_k: Some(k),
            positive_hyperbolic: trace > 2.0,
            trace,
            angle_lift: lift,
        }
    } else {
        // eigenvalues e^{±2πiR}: R mod 1 from the trace, the lift picks the branch
        let theta = (trace / 2.0).clamp(-1.0, 1.0).acos(); // ∈ (0, π)
        let approx_r = lift / (2.0 * PI);
        let base = approx_r.floor();
        let mut best = f64::NAN;
        let mut best_dist = f64::INFINITY;
        for k in [base - 1.0, base, base + 1.0, base + 2.0] {
            for cand in [k + theta / (2.0 * PI), k - theta / (2.0 * PI)] {
                let d = (cand - approx_r).abs();
                if d < best_dist {
                    best_dist = d;
                    best = cand;
                }
            }
        }
        Classification {
            kind: OrbitKind::Elliptic,
            rotation_r: Some(best),
            rotation_k: None,
            positive_hyperbolic: false,
            trace,
            angle_lift: lift,
        }
    }
}

/// Eigen-decomposition of L on 2πq-periodic functions in the Fourier basis
/// {e^{imt/q} : |m| ≤ n_modes}, as a real symmetric matrix of dimension
/// 2(2·n_modes+1).
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub q: u32,
    pub n_modes: u32,
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// eigenvectors[i][k] = Fourier coefficient of e^{i(k−n_modes)t/q}.
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// Primitive period multiplier (divides q) of each eigenvector.
    pub primitive_periods: Vec<u32>,
    /// True when μ has Fourier content outside the resolved band.
    pub truncation_warning: bool,
}

impl SpectrumResult {
    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |m, &l| m.min(l.abs()))
    }

    /// Materialize eigenvector `i` as a sampled 2πq-periodic function.
    pub fn eigenvector_fn(&self, i: usize, samples: usize) -> PeriodicFn {
        let n = self.n_modes as i64;
        let q = self.q;
        let coeffs = &self.eigenvectors[i];
        PeriodicFn::from_fn(q, samples, |t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &c) in coeffs.iter().enumerate() {
                let m = k as i64 - n;
                acc += c * Complex64::from_polar(1.0, m as f64 * t / q as f64);
            }
            acc
        })
    }
}

/// Assemble the real-symmetric matrix of L on the 2πq-periodic Fourier band.
///
/// Row/column layout: modes m ∈ {−n,…,n}; column 2k is e^{imt/q} and 2k+1 is
/// i·e^{imt/q} with k = m+n. Multiplication by ν couples m → m + jq through
/// ν̂_j; the antilinear part μ·conj couples m → jq − m through μ̂_j.
pub fn l_matrix(pair: &PeriodicPair, q: u32, n_modes: u32) -> DMatrix<f64> {
    let n = n_modes as i64;
    let qi = q as i64;
    let dim = 2 * (2 * n_modes as usize + 1);
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for row in -n..=n {
        let r = (row + n) as usize;
        for col in -n..=n {
            let c = (col + n) as usize;
            let mut lin = Complex64::new(0.0, 0.0);
            if row == col {
                lin += Complex64::new(-(row as f64) / (2.0 * q as f64), 0.0);
            }
            let dj = row - col;
            if dj.rem_euclid(qi) == 0 {
                lin += pair.nu_hat(dj / qi);
            }
            // linear block: c ↦ lin·c
            m[(2 * r, 2 * c)] += lin.re;
            m[(2 * r, 2 * c + 1)] += -lin.im;
            m[(2 * r + 1, 2 * c)] += lin.im;
            m[(2 * r + 1, 2 * c + 1)] += lin.re;

            let sj = row + col;
            if sj.rem_euclid(qi) == 0 {
                let w = pair.mu_hat(sj / qi);
                // antilinear block: c ↦ w·c̄
                m[(2 * r, 2 * c)] += w.re;
                m[(2 * r, 2 * c + 1)] += w.im;
                m[(2 * r + 1, 2 * c)] += w.im;
                m[(2 * r + 1, 2 * c + 1)] += -w.re;
            }
        }
    }
    // kill round-off asymmetry
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// Spectrum of L on 2πq-periodic functions.
pub fn spectrum(pair: &PeriodicPair, q: u32, n_modes: u32) -> Result<SpectrumResult> {
    if q == 0 {
        return Err(Error::invalid("q must be positive"));
    }
    if n_modes < 8 {
        return Err(Error::invalid("n_modes must be at least 8"));
    }
    // warn when μ's band would couple modes outside the window
    let mu_band = (0..pair.len() as i64 / 2)
        .filter(|&j| pair.mu_hat(j).norm() > 1e-12 || pair.mu_hat(-j).norm() > 1e-12)
        .max()
        .unwrap_or(0);
    let truncation_warning = mu_band * q as i64 > n_modes as i64 / 2;

    let m = l_matrix(pair, q, n_modes);
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let n = n_modes as i64;
    let mut eigenvalues = Vec::with_capacity(order.len());
    let mut eigenvectors = Vec::with_capacity(order.len());
    let mut primitive_periods = Vec::with_capacity(order.len());
    for &i in &order {
        eigenvalues.push(eig.eigenvalues[i]);
        let v = eig.eigenvectors.column(i);
        let coeffs: Vec<Complex64> = (0..=(2 * n) as usize)
            .map(|k| Complex64::new(v[2 * k], v[2 * k + 1]))
            .collect();
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut g: i64 = 0;
        for (k, c) in coeffs.iter().enumerate() {
            if c.norm() > 1e-8 * max {
                g = gcd_i64(g, (k as i64 - n).abs());
            }
        }
        let period = q / gcd_i64(q as i64, g).max(1) as u32;
        primitive_periods.push(period.max(1));
        eigenvectors.push(coeffs);
    }

    Ok(SpectrumResult {
        q,
        n_modes,
        eigenvalues,
        eigenvectors,
        primitive_periods,
        truncation_warning,
    })
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Witnessed n-ellipticity check: kR ∉ ℤ for all k ≤ n.
#[derive(Clone, Debug)]
pub struct NEllipticCheck {
    pub ok: bool,
    pub failing_k: Option<u32>,
    pub rotation_r: f64,
}

pub fn check_n_elliptic(pair: &PeriodicPair, n: u32) -> Result<NEllipticCheck> {
    let class = classify(pair);
    let r = match (class.kind, class.rotation_r) {
        (OrbitKind::Elliptic, Some(r)) => r,
        _ => return Err(Error::Precondition("pair is not elliptic".into())),
    };
    check_n_elliptic_rotation(r, n)
}

/// Same check on a declared rotation number.
pub fn check_n_elliptic_rotation(r: f64, n: u32) -> Result<NEllipticCheck> {
    let tol = 1e-9;
    for k in 1..=n {
        let kr = k as f64 * r;
        if (kr - kr.round()).abs() < tol {
            return Ok(NEllipticCheck { ok: false, failing_k: Some(k), rotation_r: r });
        }
    }
    Ok(NEllipticCheck { ok: true, failing_k: None, rotation_r: r })
}

/// A 1-parameter family of symmetric matrices that can be evaluated at any
/// parameter (needed for crossing refinement).
pub trait OperatorPath: Sync {
    fn at(&self, tau: f64) -> DMatrix<f64>;
}

/// Family backed by samples on a grid, linearly interpolated in between.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    pub taus: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
}

impl OperatorFamily {
    pub fn new(taus: Vec<f64>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        if taus.len() != matrices.len() || taus.len() < 2 {
            return Err(Error::invalid("need matching grids with at least 2 samples"));
        }
        for m in &matrices {
            let asym = (m - m.transpose()).norm();
            if asym > 1e-12 * m.norm().max(1.0) {
                return Err(Error::invalid("family matrices must be symmetric"));
            }
        }
        Ok(Self { taus, matrices })
    }

    /// Sample a matrix-valued closure uniformly on [0,1].
    pub fn from_fn(samples: usize, f: impl Fn(f64) -> DMatrix<f64>) -> Result<Self> {
        let taus: Vec<f64> = (0..samples)
            .map(|i| i as f64 / (samples - 1) as f64)
            .collect();
        let matrices = taus.iter().map(|&t| f(t)).collect();
        Self::new(taus, matrices)
    }
}

impl OperatorPath for OperatorFamily {
    fn at(&self, tau: f64) -> DMatrix<f64> {
        let n = self.taus.len();
        if tau <= self.taus[0] {
            return self.matrices[0].clone();
        }
        if tau >= self.taus[n - 1] {
            return self.matrices[n - 1].clone();
        }
        let i = match self.taus.binary_search_by(|t| t.partial_cmp(&tau).unwrap()) {
            Ok(i) => return self.matrices[i].clone(),
            Err(i) => i - 1,
        };
        let s = (tau - self.taus[i]) / (self.taus[i + 1] - self.taus[i]);
        &self.matrices[i] * (1.0 - s) + &self.matrices[i + 1] * s
    }
}

impl<F: Fn(f64) -> DMatrix<f64> + Sync> OperatorPath for F {
    fn at(&self, tau: f64) -> DMatrix<f64> {
        self(tau)
    }
}

/// One detected eigenvalue zero crossing.
#[derive(Clone, Debug)]
pub struct Crossing {
    pub tau: f64,
    /// +1 for crossing with positive derivative, −1 otherwise.
    pub sign: i64,
    /// Central-difference estimate of dλ/dτ at the crossing.
    pub slope: f64,
}

#[derive(Clone, Debug)]
pub struct SpectralFlowResult {
    pub flow: i64,
    pub crossings: Vec<Crossing>,
}

const CROSSING_TOL: f64 = 1e-9;

fn eigenvalues_of(m: &DMatrix<f64>) -> Vec<f64> {
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

fn n_negative(vals: &[f64]) -> usize {
    vals.iter().filter(|&&v| v < 0.0).count()
}

fn min_abs(vals: &[f64]) -> f64 {
    vals.iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()))
}

/// Signed count of eigenvalue zero crossings along the path, sampled on
/// `grid` and refined by bisection wherever the crossing structure of an
/// interval is ambiguous.
pub fn spectral_flow(path: &dyn OperatorPath, grid: &[f64]) -> Result<SpectralFlowResult> {
    if grid.len() < 2 {
        return Err(Error::invalid("parameter grid needs at least 2 points"));
    }
    let evals: Vec<Vec<f64>> = grid.iter().map(|&t| eigenvalues_of(&path.at(t))).collect();
    for (idx, e) in [(0, &evals[0]), (grid.len() - 1, evals.last().unwrap())] {
        if min_abs(e) <= CROSSING_TOL {
            return Err(Error::Precondition(format!(
                "endpoint matrix at grid index {idx} is singular"
            )));
        }
    }

    let mut crossings = Vec::new();
    for i in 0..grid.len() - 1 {
        resolve_interval(
            path,
            grid[i],
            grid[i + 1],
            &evals[i],
            &evals[i + 1],
            0,
            &mut crossings,
        )?;
    }
    crossings.sort_by(|a, b| a.tau.partial_cmp(&b.tau).unwrap());
    let flow = crossings.iter().map(|c| c.sign).sum();
    Ok(SpectralFlowResult { flow, crossings })
}

const MAX_REFINE_DEPTH: usize = 48;

fn resolve_interval(
    path: &dyn OperatorPath,
    a: f64,
    b: f64,
    ea: &[f64],
    eb: &[f64],
    depth: usize,
    out: &mut Vec<Crossing>,
) -> Result<()> {
    let delta = n_negative(ea) as i64 - n_negative(eb) as i64;
    let quiet = min_abs(ea).min(min_abs(eb)) > 10.0 * CROSSING_TOL;

    if delta == 0 && quiet && depth > 0 {
        // a hidden double crossing inside a quiet refined interval would
        // require the eigenvalue to dip below the sampling scale; accept
        return Ok(());
    }
    if delta == 0 && depth == 0 {
        // probe the midpoint once for a double-crossing dip
        let mid = 0.5 * (a + b);
        let em = eigenvalues_of(&path.at(mid));
        if n_negative(&em) as i64 != n_negative(ea) as i64 {
            resolve_interval(path, a, mid, ea, &em, depth + 1, out)?;
            resolve_interval(path, mid, b, &em, eb, depth + 1, out)?;
        }
        return Ok(());
    }
    if delta == 0 {
        return Ok(());
    }

    if b - a < 1e-12 || depth >= MAX_REFINE_DEPTH {
        if depth >= MAX_REFINE_DEPTH && delta.abs() > 1 {
            return Err(Error::Budget(format!(
                "could not separate {} crossings near tau = {}",
                delta.abs(),
                0.5 * (a + b)
            )));
        }
        // localized: emit |delta| crossings with the sign of delta
        let tau = 0.5 * (a + b);
        let slope = crossing_slope(path, tau, b - a);
        for _ in 0..delta.abs() {
            out.push(Crossing { tau, sign: delta.signum(), slope });
        }
        return Ok(());
    }

    let mid = 0.5 * (a + b);
    let em = eigenvalues_of(&path.at(mid));
    if delta.abs() == 1 && (b - a) < 1e-7 {
        let tau = mid;
        let slope = crossing_slope(path, tau, (b - a).max(1e-7));
        out.push(Crossing { tau, sign: delta.signum(), slope });
        return Ok(());
    }
    resolve_interval(path, a, mid, ea, &em, depth + 1, out)?;
    resolve_interval(path, mid, b, &em, eb, depth + 1, out)?;
    Ok(())
}

fn crossing_slope(path: &dyn OperatorPath, tau: f64, h: f64) -> f64 {
    let h = h.max(1e-7);
    let lo = eigenvalues_of(&path.at(tau - h));
    let hi = eigenvalues_of(&path.at(tau + h));
    let pick = |vals: &[f64]| {
        vals.iter()
            .copied()
            .min_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap())
            .unwrap()
    };
    (pick(&hi) - pick(&lo)) / (2.0 * h)
}

/// Builds the diagonal family diag(ν_τ − m/(2q)) over the Fourier window on
/// the conjugation-invariant real form (one copy per mode, so a simple
/// crossing counts once). Only valid for μ ≡ 0 families.
pub fn diagonal_family_for_nu(
    nu_of_tau: impl Fn(f64) -> f64 + Sync,
    q: u32,
    n_modes: u32,
    samples: usize,
) -> Result<OperatorFamily> {
    let n = n_modes as i64;
    OperatorFamily::from_fn(samples, move |tau| {
        let nu = nu_of_tau(tau);
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            (2 * n + 1) as usize,
            (-n..=n).map(|m| nu - m as f64 / (2.0 * q as f64)),
        ))
    })
}

/// Result of checking a candidate homotopy of pairs.
#[derive(Clone, Debug)]
pub struct HomotopyReport {
    pub pass: bool,
    pub entries: Vec<Classification>,
    /// (index, reason) for each failing entry.
    pub failures: Vec<(usize, String)>,
}

/// Classify every pair along a candidate path and verify that the stability
/// kind and the invariant rotation data (R mod 1, or k) match `expect`
/// throughout. This checks a supplied path; it does not construct one.
///
/// The hyperbolic rotation number must match exactly; elliptic R mod 1 may
/// drift by up to 0.02 along the path (linear interpolants do not hold R
/// fixed pointwise).
pub fn verify_homotopy(path: &[PeriodicPair], expect: &Classification) -> Result<HomotopyReport> {
    verify_homotopy_with_tol(path, expect, 0.02)
}

pub fn verify_homotopy_with_tol(
    path: &[PeriodicPair],
    expect: &Classification,
    rotation_tol: f64,
) -> Result<HomotopyReport> {
    if path.len() < 2 {
        return Err(Error::invalid("path needs at least 2 entries"));
    }
    let mut entries = Vec::with_capacity(path.len());
    let mut failures = Vec::new();
    for (i, pair) in path.iter().enumerate() {
        let c = classify(pair);
        match (c.kind, expect.kind) {
            (OrbitKind::Degenerate, _) => {
                failures.push((i, format!("degenerate entry, trace = {}", c.trace)));
            }
            (k, e) if k != e => {
                failures.push((i, format!("kind {:?} differs from expected {:?}", k, e)));
            }
            (OrbitKind::Elliptic, OrbitKind::Elliptic) => {
                let (r, re) = (c.rotation_r.unwrap(), expect.rotation_r.unwrap_or(f64::NAN));
                let d = circular_distance(r, re);
                if !(d < rotation_tol) {
                    failures.push((i, format!("R mod 1 = {:.6} differs from expected {:.6}", r.rem_euclid(1.0), re.rem_euclid(1.0))));
                }
            }
            (OrbitKind::Hyperbolic, OrbitKind::Hyperbolic) => {
                if c.rotation_k != expect.rotation_k {
                    failures.push((i, format!("k = {:?} differs from expected {:?}", c.rotation_k, expect.rotation_k)));
                }
            }
            _ => {}
        }
        entries.push(c);
    }
    Ok(HomotopyReport { pass: failures.is_empty(), entries, failures })
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Linear-interpolation path from `pair` to its canonical partner: (½R, 0)
/// when elliptic, (¼k, iεe^{ikt}) when hyperbolic.
pub fn path_to_canonical(pair: &PeriodicPair, eps: f64, steps: usize) -> Result<Vec<PeriodicPair>> {
    let class = classify(pair);
    let target = match class.kind {
        OrbitKind::Elliptic => PeriodicPair::canonical_elliptic(class.rotation_r.unwrap()),
        OrbitKind::Hyperbolic => PeriodicPair::canonical_hyperbolic(class.rotation_k.unwrap(), eps),
        OrbitKind::Degenerate => {
            return Err(Error::Degenerate("cannot build a canonical path from a degenerate pair".into()))
        }
    };
    Ok((0..=steps)
        .map(|i| pair.lerp(&target, i as f64 / steps as f64))
        .collect())
}
