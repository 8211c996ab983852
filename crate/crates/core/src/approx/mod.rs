//! Cutoff-interpolated contact forms and their certificates: the fixed
//! mollifier step, the radial interpolation parameter τ_ρ, sampled 1-forms
//! with analytic exterior derivatives, positivity of a ∧ da, the distance
//! between the true Reeb field and its model, uniform eigenvalue gaps, and
//! the arithmetic/contraction certificate that forces nearby closed orbits
//! onto the core circle.

pub mod cylinder;

use crate::error::{Error, Result};
use crate::fourier;
use crate::reeb::{spectrum, PeriodicPair};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Smooth nonincreasing step: exactly 1 on [0, 5/16], exactly 0 on
/// [7/16, ∞), built from the exponential mollifier ratio.
pub fn bump(x: f64) -> f64 {
    assert!(x >= 0.0, "bump is defined for nonnegative arguments");
    const LO: f64 = 5.0 / 16.0;
    const HI: f64 = 7.0 / 16.0;
    if x <= LO {
        return 1.0;
    }
    if x >= HI {
        return 0.0;
    }
    let t = (HI - x) / (HI - LO); // 1 at LO, 0 at HI
    let phi = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    phi(t) / (phi(t) + phi(1.0 - t))
}

/// The interpolation parameter τ_ρ = k/Q + (1/Q)·χ(|z|/ρ).
pub fn tau_rho(z: Complex64, k: u32, big_q: u32, rho: f64) -> f64 {
    assert!(big_q >= 1 && rho > 0.0);
    k as f64 / big_q as f64 + bump(z.norm() / rho) / big_q as f64
}

/// Numerically measured sup|dτ_ρ| and sup|∇dτ_ρ| over a dense radial grid.
pub fn tau_rho_derivative_sup(big_q: u32, rho: f64) -> (f64, f64) {
    let n = 4096;
    let h = 1.2 * rho / n as f64;
    let tau = |r: f64| bump(r / rho) / big_q as f64;
    let mut sup1: f64 = 0.0;
    let mut sup2: f64 = 0.0;
    for i in 1..n - 1 {
        let r = i as f64 * h;
        let d1 = (tau(r + h) - tau(r - h)) / (2.0 * h);
        let d2 = (tau(r + h) - 2.0 * tau(r) + tau(r - h)) / (h * h);
        sup1 = sup1.max(d1.abs());
        sup2 = sup2.max(d2.abs());
    }
    (sup1, sup2)
}

/// A τ-parametrized coefficient family, evaluated pointwise.
pub trait PairFamily: Sync {
    fn nu(&self, tau: f64, t: f64) -> f64;
    fn mu(&self, tau: f64, t: f64) -> Complex64;

    /// Materialize the pair at fixed τ.
    fn pair_at(&self, tau: f64) -> PeriodicPair {
        PeriodicPair::from_fn(|t| self.nu(tau, t), |t| self.mu(tau, t))
    }
}

/// Family from closures.
pub struct FnFamily<N, M>(pub N, pub M)
where
    N: Fn(f64, f64) -> f64 + Sync,
    M: Fn(f64, f64) -> Complex64 + Sync;

impl<N, M> PairFamily for FnFamily<N, M>
where
    N: Fn(f64, f64) -> f64 + Sync,
    M: Fn(f64, f64) -> Complex64 + Sync,
{
    fn nu(&self, tau: f64, t: f64) -> f64 {
        (self.0)(tau, t)
    }
    fn mu(&self, tau: f64, t: f64) -> Complex64 {
        (self.1)(tau, t)
    }
}

/// Linear interpolation family between two pairs.
pub struct LerpFamily {
    pub from: PeriodicPair,
    pub to: PeriodicPair,
}

impl PairFamily for LerpFamily {
    fn nu(&self, tau: f64, t: f64) -> f64 {
        (1.0 - tau) * self.from.nu_at(t) + tau * self.to.nu_at(t)
    }
    fn mu(&self, tau: f64, t: f64) -> Complex64 {
        self.from.mu_at(t) * (1.0 - tau) + self.to.mu_at(t) * tau
    }
}

/// Optional higher-order tail: components (T_t, T_x, T_y) of a 1-form,
/// multiplied by (1 − χ(|z|/ρ)) when the form is assembled.
pub type TailFn = dyn Fn(f64, Complex64) -> [f64; 3] + Sync;

/// A sampled 1-form on S¹ × {|z| ≤ d_rad} with its exterior derivative.
/// Components are stored against (t, x, y); `da` holds the coefficients of
/// (dt∧dx, dt∧dy, dx∧dy).
pub struct FormField {
    pub ell: f64,
    pub d_rad: f64,
    pub n_t: usize,
    pub n_xy: usize,
    pub a: Vec<[f64; 3]>,
    pub da: Vec<[f64; 3]>,
}

impl FormField {
    pub fn idx(&self, ti: usize, i: usize, j: usize) -> usize {
        (ti * self.n_xy + j) * self.n_xy + i
    }

    pub fn xy(&self, i: usize, j: usize) -> Complex64 {
        let h = 2.0 * self.d_rad / (self.n_xy - 1) as f64;
        Complex64::new(-self.d_rad + h * i as f64, -self.d_rad + h * j as f64)
    }

    pub fn t(&self, ti: usize) -> f64 {
        2.0 * PI * ti as f64 / self.n_t as f64
    }

    fn step(&self) -> f64 {
        2.0 * self.d_rad / (self.n_xy - 1) as f64
    }

    /// Sup over the grid of |d(a) − stored da| with d(a) recomputed
    /// numerically (spectral in t, 4th-order differences in x, y).
    pub fn exterior_consistency(&self) -> f64 {
        let da_num = numerical_exterior(self);
        self.da
            .iter()
            .zip(&da_num)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Assemble the interpolated form
/// (2π/ℓ)a = (1 − 2ν_τ|z|² − μ_τz̄² − μ̄_τz²)dt + ½i(z dz̄ − z̄ dz)
///           + (1 − χ(|z|/ρ))·tail,  τ = τ_ρ(z),
/// with the exterior derivative computed analytically (tail by numerical
/// differentiation when supplied).
#[allow(clippy::too_many_arguments)]
pub fn build_form(
    family: &dyn PairFamily,
    k: u32,
    big_q: u32,
    rho: f64,
    ell: f64,
    tail: Option<&TailFn>,
    n_t: usize,
    n_xy: usize,
    d_rad: f64,
) -> Result<FormField> {
    if n_t < 8 || n_xy < 16 {
        return Err(Error::invalid("form grid too small"));
    }
    let scale = ell / (2.0 * PI);
    let mut field = FormField {
        ell,
        d_rad,
        n_t,
        n_xy,
        a: vec![[0.0; 3]; n_t * n_xy * n_xy],
        da: vec![[0.0; 3]; n_t * n_xy * n_xy],
    };
    let dtau = 1e-5;
    for ti in 0..n_t {
        let t = field.t(ti);
        for j in 0..n_xy {
            for i in 0..n_xy {
                let z = field.xy(i, j);
                let (x, y) = (z.re, z.im);
                let tau = tau_rho(z, k, big_q, rho);
                let nu = family.nu(tau, t);
                let mu = family.mu(tau, t);
                let r2 = z.norm_sqr();
                let zbar2 = (z.conj()) * (z.conj());
                let f_val = 1.0 - 2.0 * nu * r2 - 2.0 * (mu * zbar2).re;

                // ∂τ/∂(x,y) through χ(|z|/ρ)
                let r = z.norm().max(1e-30);
                let chi_p = {
                    let h = rho * 1e-6;
                    (bump(((r + h) / rho).max(0.0)) - bump(((r - h).max(0.0)) / rho)) / (2.0 * h)
                };
                let (tau_x, tau_y) = (chi_p * x / (r * big_q as f64), chi_p * y / (r * big_q as f64));
                // ∂τ-derivatives of the coefficients
                let dnu = (family.nu(tau + dtau, t) - family.nu(tau - dtau, t)) / (2.0 * dtau);
                let dmu = (family.mu(tau + dtau, t) - family.mu(tau - dtau, t)) / (2.0 * dtau);

                // F = 1 − 2ν|z|² − 2Re(μ z̄²)
                let fx = -2.0 * dnu * tau_x * r2 - 4.0 * nu * x
                    - 2.0 * (dmu * tau_x * zbar2).re
                    - 2.0 * (mu * 2.0 * z.conj()).re;
                let fy = -2.0 * dnu * tau_y * r2 - 4.0 * nu * y
                    - 2.0 * (dmu * tau_y * zbar2).re
                    - 2.0 * (mu * 2.0 * z.conj() * Complex64::new(0.0, -1.0)).re;

                let kidx = field.idx(ti, i, j);
                let mut a_t = f_val;
                let mut a_x = -y;
                let mut a_y = x;
                // analytic da: dF∧dt + 2dx∧dy
                let mut c_tx = -fx;
                let mut c_ty = -fy;
                let mut c_xy = 2.0;
                if let Some(tf) = tail {
                    let chi = bump(r / rho);
                    let w = 1.0 - chi;
                    let tv = tf(t, z);
                    a_t += w * tv[0];
                    a_x += w * tv[1];
                    a_y += w * tv[2];
                    // tail exterior derivative handled numerically below
                    c_tx = f64::NAN;
                    c_ty = f64::NAN;
                    c_xy = f64::NAN;
                }
                field.a[kidx] = [scale * a_t, scale * a_x, scale * a_y];
                field.da[kidx] = [scale * c_tx, scale * c_ty, scale * c_xy];
            }
        }
    }
    if tail.is_some() {
        // with a tail present the full exterior derivative is numerical
        field.da = numerical_exterior(&field);
    }
    Ok(field)
}

/// Numerical exterior derivative of the sampled 1-form.
fn numerical_exterior(field: &FormField) -> Vec<[f64; 3]> {
    let (n_t, n_xy) = (field.n_t, field.n_xy);
    let h = field.step();
    let mut out = vec![[0.0; 3]; field.a.len()];

    // spectral ∂_t of a_x, a_y along the periodic axis
    let mut dt_ax = vec![0.0; field.a.len()];
    let mut dt_ay = vec![0.0; field.a.len()];
    let mut series = vec![Complex64::new(0.0, 0.0); n_t];
    for j in 0..n_xy {
        for i in 0..n_xy {
            for comp in 1..=2 {
                for ti in 0..n_t {
                    series[ti] = Complex64::new(field.a[field.idx(ti, i, j)][comp], 0.0);
                }
                let ds = fourier::spectral_derivative(&series, 2.0 * PI);
                for ti in 0..n_t {
                    let v = ds[ti].re;
                    if comp == 1 {
                        dt_ax[field.idx(ti, i, j)] = v;
                    } else {
                        dt_ay[field.idx(ti, i, j)] = v;
                    }
                }
            }
        }
    }

    // 4th-order x/y derivatives at fixed t
    let d4 = |get: &dyn Fn(usize) -> f64, idx: usize, n: usize| -> f64 {
        let v = get;
        if idx >= 2 && idx + 2 < n {
            (v(idx - 2) - v(idx + 2) + 8.0 * (v(idx + 1) - v(idx - 1))) / (12.0 * h)
        } else if idx < 2 {
            (-25.0 * v(idx) + 48.0 * v(idx + 1) - 36.0 * v(idx + 2) + 16.0 * v(idx + 3)
                - 3.0 * v(idx + 4))
                / (12.0 * h)
        } else {
            (25.0 * v(idx) - 48.0 * v(idx - 1) + 36.0 * v(idx - 2) - 16.0 * v(idx - 3)
                + 3.0 * v(idx - 4))
                / (12.0 * h)
        }
    };

    for ti in 0..n_t {
        for j in 0..n_xy {
            for i in 0..n_xy {
                let k = field.idx(ti, i, j);
                let ax_at = |comp: usize, ii: usize, jj: usize| field.a[field.idx(ti, ii, jj)][comp];
                let dx_at = |comp: usize| d4(&|ii| ax_at(comp, ii, j), i, n_xy);
                let dy_at = |comp: usize| d4(&|jj| ax_at(comp, i, jj), j, n_xy);
                // da = (∂_t a_x − ∂_x a_t)dt∧dx + (∂_t a_y − ∂_y a_t)dt∧dy
                //      + (∂_x a_y − ∂_y a_x)dx∧dy
                out[k] = [
                    dt_ax[k] - dx_at(0),
                    dt_ay[k] - dy_at(0),
                    dx_at(2) - dy_at(1),
                ];
            }
        }
    }
    out
}

/// Result of the positivity check of a ∧ da.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ContactReport {
    /// min over the sampled disk of the coefficient of a∧da against
    /// dt∧dx∧dy.
    pub min_coefficient: f64,
    pub max_coefficient: f64,
    pub pass: bool,
}

/// min over the grid (restricted to |z| ≤ d_rad) of the a∧da coefficient.
pub fn contact_check(field: &FormField) -> ContactReport {
    let mut min_c = f64::INFINITY;
    let mut max_c = f64::NEG_INFINITY;
    for ti in 0..field.n_t {
        for j in 0..field.n_xy {
            for i in 0..field.n_xy {
                let z = field.xy(i, j);
                if z.norm() > field.d_rad {
                    continue;
                }
                let k = field.idx(ti, i, j);
                let a = field.a[k];
                let da = field.da[k];
                // a∧da = (a_t c_xy − a_x c_ty + a_y c_tx) dt∧dx∧dy
                let c = a[0] * da[2] - a[1] * da[1] + a[2] * da[0];
                min_c = min_c.min(c);
                max_c = max_c.max(c);
            }
        }
    }
    ContactReport { min_coefficient: min_c, max_coefficient: max_c, pass: min_c > 0.0 }
}

/// Reeb-field comparison: the true kernel direction against the model
/// field (2π/ℓ)(∂_t + Re W ∂_x + Im W ∂_y), W = 2i(ν_τ z + μ_τ z̄).
#[derive(Clone, Debug, serde::Serialize)]
pub struct ReebReport {
    /// sup over ρ/8 ≤ |z| ≤ ρ of |v_true − v_model| / (|z|/Q); this is the
    /// measured constant of the linear-in-1/Q bound and is stable in Q.
    pub sup_ratio: f64,
    /// sup of |v_true − v_model| / |z|; scales like 1/Q, so doubling Q
    /// halves it.
    pub sup_slope: f64,
    /// sup of the raw difference on the annulus.
    pub sup_difference: f64,
    pub points_checked: usize,
}

pub fn reeb_check(
    field: &FormField,
    family: &dyn PairFamily,
    k: u32,
    big_q: u32,
    rho: f64,
) -> Result<ReebReport> {
    let mut sup_ratio: f64 = 0.0;
    let mut sup_slope: f64 = 0.0;
    let mut sup_diff: f64 = 0.0;
    let mut count = 0usize;
    let scale = 2.0 * PI / field.ell;
    for ti in 0..field.n_t {
        let t = field.t(ti);
        for j in 0..field.n_xy {
            for i in 0..field.n_xy {
                let z = field.xy(i, j);
                let r = z.norm();
                if r < rho / 8.0 || r > rho {
                    continue;
                }
                let kk = field.idx(ti, i, j);
                let a = field.a[kk];
                let da = field.da[kk];
                let v = reeb_at(&a, &da)?;
                let tau = tau_rho(z, k, big_q, rho);
                let w = Complex64::new(0.0, 2.0)
                    * (family.nu(tau, t) * z + family.mu(tau, t) * z.conj());
                let model = [scale, scale * w.re, scale * w.im];
                let diff = ((v[0] - model[0]).powi(2)
                    + (v[1] - model[1]).powi(2)
                    + (v[2] - model[2]).powi(2))
                .sqrt();
                sup_diff = sup_diff.max(diff);
                sup_ratio = sup_ratio.max(diff / (r / big_q as f64));
                sup_slope = sup_slope.max(diff / r);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::invalid("annulus ρ/8 ≤ |z| ≤ ρ is not resolved by the grid"));
    }
    Ok(ReebReport { sup_ratio, sup_slope, sup_difference: sup_diff, points_checked: count })
}

/// Solve a(v) = 1, da(v, ·) = 0 at one grid point. The three contraction
/// rows have rank 2, so the 4×3 system is consistent with a unique
/// solution; it is solved through the normal equations.
fn reeb_at(a: &[f64; 3], da: &[f64; 3]) -> Result<[f64; 3]> {
    let (c_tx, c_ty, c_xy) = (da[0], da[1], da[2]);
    // rows: a(v) = 1; ι_v da components (dt, dx, dy) = 0
    let m = nalgebra::Matrix4x3::new(
        a[0], a[1], a[2], //
        0.0, -c_tx, -c_ty, //
        c_tx, 0.0, -c_xy, //
        c_ty, c_xy, 0.0,
    );
    let n = m.transpose() * m;
    let rhs = nalgebra::Vector3::new(a[0], a[1], a[2]); // Mᵀ(1,0,0,0)
    if n.determinant().abs() < 1e-12 * n.norm().powi(3).max(1e-30) {
        return Err(Error::Degenerate("contact form degenerates at a grid point".into()));
    }
    let sol = n
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("contact form degenerates at a grid point".into()))?;
    Ok([sol[0], sol[1], sol[2]])
}

/// Uniform eigenvalue gap over a τ-sampled family and q ≤ q_max.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EigenGapReport {
    pub lambda0: f64,
    pub attained_tau: f64,
    pub attained_q: u32,
}

pub fn eigen_gap(
    family: &dyn PairFamily,
    tau_samples: usize,
    q_max: u32,
    n_modes: u32,
) -> Result<EigenGapReport> {
    if q_max < 1 || tau_samples < 2 {
        return Err(Error::invalid("need q_max ≥ 1 and at least 2 τ samples"));
    }
    let mut best = f64::INFINITY;
    let mut at = (0.0, 1u32);
    for s in 0..tau_samples {
        let tau = s as f64 / (tau_samples - 1) as f64;
        let pair = family.pair_at(tau);
        for q in 1..=q_max {
            let gap = spectrum(&pair, q, n_modes)?.min_abs_eigenvalue();
            if gap < best {
                best = gap;
                at = (tau, q);
            }
        }
    }
    if best < 1e-9 {
        return Err(Error::Degenerate(format!(
            "family develops a kernel at τ = {}, q = {}",
            at.0, at.1
        )));
    }
    Ok(EigenGapReport { lambda0: best, attained_tau: at.0, attained_q: at.1 })
}

/// Two-part certificate that a perturbed kernel equation forces the zero
/// solution: the arithmetic largeness condition on Q and a quantitative
/// contraction bound for z ↦ L⁻¹τ(z) under |τ(z)| ≤ c₀(|z|/Q + |z|²).
#[derive(Clone, Debug, serde::Serialize)]
pub struct ForcedZeroReport {
    /// Q⁻¹ ≤ λ₀/(100·c₀).
    pub arithmetic_pass: bool,
    /// Lipschitz constant ‖L⁻¹‖·c₀·(1/Q + 2·ball_radius).
    pub contraction_constant: f64,
    pub contraction_pass: bool,
    /// Discretized ‖L⁻¹‖ = 1/min|eigenvalue|.
    pub inverse_norm: f64,
}

pub fn forced_zero_check(
    lambda0: f64,
    c0_bound: f64,
    big_q: u32,
    ball_radius: f64,
    pair: &PeriodicPair,
    q: u32,
) -> Result<ForcedZeroReport> {
    let spec = spectrum(pair, q, 32)?;
    let gap = spec.min_abs_eigenvalue();
    if gap < 1e-9 {
        return Err(Error::Degenerate("L is not invertible at this discretization".into()));
    }
    let inverse_norm = 1.0 / gap;
    let arithmetic_pass = 1.0 / big_q as f64 <= lambda0 / (100.0 * c0_bound);
    let contraction_constant =
        inverse_norm * c0_bound * (1.0 / big_q as f64 + 2.0 * ball_radius);
    Ok(ForcedZeroReport {
        arithmetic_pass,
        contraction_constant,
        contraction_pass: contraction_constant < 1.0,
        inverse_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bump_plateau_values() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(0.3), 1.0); // 0.3 < 5/16
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(7.0 / 16.0), 0.0);
        // smooth and monotone in between
        let mut prev = 1.0;
        for i in 0..=100 {
            let x = 5.0 / 16.0 + (2.0 / 16.0) * i as f64 / 100.0;
            let v = bump(x);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn bump_smoothness_across_joints() {
        // finite differences up to order 4 stay bounded across 5/16, 7/16
        let h = 1e-3;
        for x0 in [5.0 / 16.0, 7.0 / 16.0] {
            for order in 1..=4usize {
                let mut worst: f64 = 0.0;
                for s in -5..=5 {
                    let x = x0 + s as f64 * h * 0.5;
                    let d = central_diff(x, order, h);
                    worst = worst.max(d.abs());
                }
                // crude bound: derivatives of the mollifier step scale
                // like (1/width)^order with moderate constants
                let bound = (30.0f64 / 1.0).powi(order as i32);
                assert!(worst < bound, "order {order} near {x0}: {worst}");
            }
        }
    }

    fn central_diff(x: f64, order: usize, h: f64) -> f64 {
        let f = |x: f64| bump(x.max(0.0));
        match order {
            1 => (f(x + h) - f(x - h)) / (2.0 * h),
            2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
            3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h))
                / (2.0 * h * h * h),
            _ => (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                / (h * h * h * h),
        }
    }

    #[test]
    fn tau_rho_plateaus() {
        let q = 50;
        let rho = 0.05;
        let inner = tau_rho(Complex64::new(0.01, 0.0), 3, q, rho);
        assert_abs_diff_eq!(inner, 4.0 / 50.0, epsilon = 1e-15);
        let outer = tau_rho(Complex64::new(0.06, 0.0), 3, q, rho);
        assert_abs_diff_eq!(outer, 3.0 / 50.0, epsilon = 1e-15);
    }

    #[test]
    fn tau_rho_derivative_scaling() {
        // sup|dτ| = c/(Qρ) with c = sup|χ'| fixed by the mollifier; the
        // transition width 1/8 forces c ≥ 8 (mean value), so the scaled
        // constant is stable across (Q, ρ) rather than below any
        // particular small value
        let mut consts = Vec::new();
        for (q, rho) in [(10u32, 0.2), (50, 0.05), (100, 0.01), (25, 0.6)] {
            let (d1, d2) = tau_rho_derivative_sup(q, rho);
            consts.push(d1 * q as f64 * rho);
            // second derivative scales like 1/(Qρ²)
            let c2 = d2 * q as f64 * rho * rho;
            assert!(c2 > 1.0 && c2 < 1e4, "c2 = {c2}");
        }
        let c0 = consts[0];
        assert!(c0 > 8.0, "mean-value lower bound: {c0}");
        for c in &consts {
            assert!((c - c0).abs() < 0.05 * c0, "constants {consts:?}");
        }
    }

    fn constant_family(nu: f64, mu: Complex64) -> impl PairFamily {
        FnFamily(move |_tau, _t| nu, move |_tau, _t| mu)
    }

    #[test]
    fn build_form_matches_plateau_models() {
        let fam = FnFamily(
            |tau: f64, _t: f64| 0.1 + 0.05 * tau,
            |tau: f64, t: f64| Complex64::new(0.02 * tau, 0.0) * Complex64::from_polar(1.0, 2.0 * t),
        );
        let (k, q, rho, ell) = (3u32, 50u32, 0.05, 2.0 * PI);
        let field = build_form(&fam, k, q, rho, ell, None, 16, 97, 1.4 * rho).unwrap();
        let scale = ell / (2.0 * PI);
        for (ti, i, j) in [(0usize, 6usize, 7usize), (7, 90, 4), (11, 48, 91)] {
            let z = field.xy(i, j);
            let t = field.t(ti);
            let r = z.norm();
            let tau_expect = if r > rho {
                k as f64 / q as f64
            } else if r <= rho / 4.0 {
                (k + 1) as f64 / q as f64
            } else {
                continue;
            };
            let nu = fam.nu(tau_expect, t);
            let mu = fam.mu(tau_expect, t);
            let f_expect =
                1.0 - 2.0 * nu * z.norm_sqr() - 2.0 * (mu * z.conj() * z.conj()).re;
            let got = field.a[field.idx(ti, i, j)];
            assert_abs_diff_eq!(got[0], scale * f_expect, epsilon = 1e-10);
            assert_abs_diff_eq!(got[1], scale * (-z.im), epsilon = 1e-12);
            assert_abs_diff_eq!(got[2], scale * z.re, epsilon = 1e-12);
        }
        // z = 0 is exactly (ℓ/2π)dt
        let mid = field.n_xy / 2;
        let got = field.a[field.idx(3, mid, mid)];
        assert_abs_diff_eq!(got[0], scale, epsilon = 1e-12);
        assert_abs_diff_eq!(got[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(got[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exterior_derivative_consistency() {
        let fam = FnFamily(
            |tau: f64, t: f64| 0.1 + 0.05 * tau + 0.01 * t.sin(),
            |tau: f64, t: f64| {
                Complex64::new(0.02 * tau, 0.01) * Complex64::from_polar(1.0, t)
            },
        );
        // the χ-transition has width ρ/8 and must be resolved by the grid
        let field = build_form(&fam, 2, 50, 0.05, 2.0 * PI, None, 12, 481, 0.06).unwrap();
        let err = field.exterior_consistency();
        assert!(err < 1e-6, "d(a) consistency {err}");
    }

    #[test]
    fn contact_positive_for_standard_configuration() {
        let fam = FnFamily(
            |tau: f64, _t: f64| 0.15 + 0.1 * tau,
            |tau: f64, t: f64| Complex64::new(0.05 * tau, 0.0) * Complex64::from_polar(1.0, 2.0 * t),
        );
        let field = build_form(&fam, 25, 50, 0.05, 2.0 * PI, None, 16, 96, 0.06).unwrap();
        let rep = contact_check(&field);
        assert!(rep.pass, "min coefficient {}", rep.min_coefficient);
    }

    #[test]
    fn contact_coefficient_of_trivial_pair() {
        // ν = μ = 0 constant family: coefficient = 2(ℓ/2π)² (1 + O(|z|²))
        let ell = 3.0;
        let fam = constant_family(0.0, Complex64::new(0.0, 0.0));
        let field = build_form(&fam, 0, 10, 0.05, ell, None, 8, 64, 0.08).unwrap();
        let rep = contact_check(&field);
        let expect = ell * ell / (2.0 * PI * PI);
        assert!((rep.max_coefficient - expect).abs() < 0.01 * expect);
        assert!(rep.min_coefficient > 0.9 * expect);
    }

    #[test]
    fn reeb_field_exact_for_constant_family() {
        // no τ dependence: the model field is the exact kernel direction
        let fam = FnFamily(
            |_tau: f64, t: f64| 0.15 + 0.05 * (t).cos(),
            |_tau: f64, t: f64| Complex64::new(0.03, 0.0) * Complex64::from_polar(1.0, 2.0 * t),
        );
        let field = build_form(&fam, 2, 50, 0.05, 2.0 * PI, None, 16, 161, 0.055).unwrap();
        let rep = reeb_check(&field, &fam, 2, 50, 0.05).unwrap();
        assert!(rep.sup_difference < 1e-6, "difference {}", rep.sup_difference);
        // z = 0: true Reeb = (2π/ℓ)∂_t exactly
        let mid = field.n_xy / 2;
        let k = field.idx(0, mid, mid);
        let v = reeb_at(&field.a[k], &field.da[k]).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn reeb_ratio_halves_when_q_doubles() {
        let fam = FnFamily(
            |tau: f64, _t: f64| 0.15 + 0.2 * tau,
            |tau: f64, t: f64| Complex64::new(0.1 * tau, 0.0) * Complex64::from_polar(1.0, 2.0 * t),
        );
        let rho = 0.05;
        let mut slopes = Vec::new();
        let mut ratios = Vec::new();
        for q in [25u32, 50] {
            let field = build_form(&fam, q / 5, q, rho, 2.0 * PI, None, 12, 161, 1.05 * rho).unwrap();
            let rep = reeb_check(&field, &fam, q / 5, q, rho).unwrap();
            slopes.push(rep.sup_slope);
            ratios.push(rep.sup_ratio);
        }
        // |v| obeys the linear-in-1/Q bound: doubling Q halves |v|/|z|
        // while the normalized constant |v|/(|z|/Q) stays put
        let halving = slopes[1] / slopes[0];
        assert!(
            (halving - 0.5).abs() < 0.125,
            "doubling Q scaled |v|/|z| by {halving}"
        );
        let stability = ratios[1] / ratios[0];
        assert!((stability - 1.0).abs() < 0.25, "constant moved by {stability}");
    }

    #[test]
    fn eigen_gap_constant_family() {
        let fam = constant_family(0.15, Complex64::new(0.0, 0.0));
        let rep = eigen_gap(&fam, 3, 3, 24).unwrap();
        // brute-force oracle: min over q ≤ 3, m of |0.15 − m/(2q)| = 1/60
        let mut oracle = f64::INFINITY;
        for q in 1..=3i64 {
            for m in -40..=40i64 {
                oracle = oracle.min((0.15 - m as f64 / (2.0 * q as f64)).abs());
            }
        }
        assert_abs_diff_eq!(rep.lambda0, oracle, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.lambda0, 1.0 / 60.0, epsilon = 1e-10);
        assert_eq!(rep.attained_q, 3);
    }

    #[test]
    fn eigen_gap_hyperbolic_family_positive() {
        let fam = FnFamily(
            |_tau: f64, _t: f64| 0.5,
            |tau: f64, t: f64| {
                Complex64::new(0.0, 0.03 + 0.02 * tau) * Complex64::from_polar(1.0, 2.0 * t)
            },
        );
        let rep = eigen_gap(&fam, 3, 2, 24).unwrap();
        assert!(rep.lambda0 > 0.0);
    }

    #[test]
    fn eigen_gap_detects_degeneracy() {
        // R passes through 1 ⇒ kernel appears at some τ
        let fam = FnFamily(|tau: f64, _t: f64| 0.4 + 0.2 * tau, |_, _| Complex64::new(0.0, 0.0));
        assert!(eigen_gap(&fam, 5, 1, 16).is_err());
    }

    #[test]
    fn eigen_gap_monotone_under_refinement() {
        let fam = FnFamily(
            |tau: f64, _t: f64| 0.13 + 0.07 * tau,
            |_, _| Complex64::new(0.0, 0.0),
        );
        let coarse = eigen_gap(&fam, 3, 2, 20).unwrap().lambda0;
        let fine = eigen_gap(&fam, 9, 2, 20).unwrap().lambda0;
        assert!(fine <= coarse + 1e-12);
    }

    #[test]
    fn forced_zero_examples() {
        let pair = PeriodicPair::constant(0.15, Complex64::new(0.0, 0.0));
        // λ₀ = 0.05, c₀ = 1, Q = 50: arithmetic fails; Q = 2001 passes
        let r1 = forced_zero_check(0.05, 1.0, 50, 0.01, &pair, 1).unwrap();
        assert!(!r1.arithmetic_pass);
        let r2 = forced_zero_check(0.05, 1.0, 2001, 0.01, &pair, 1).unwrap();
        assert!(r2.arithmetic_pass);
        // contraction constant ≈ ‖L⁻¹‖(1/Q + 2·λ₀/4) with ‖L⁻¹‖ = 1/0.15
        let lambda0 = 0.15;
        let radius = lambda0 / 4.0;
        let r3 = forced_zero_check(lambda0, 1.0, 2001, radius, &pair, 1).unwrap();
        assert!(r3.contraction_pass);
        assert!((r3.contraction_constant - 0.5).abs() < 0.02, "{}", r3.contraction_constant);
    }

    #[test]
    fn forced_zero_rejects_degenerate_l() {
        let pair = PeriodicPair::constant(0.5, Complex64::new(0.0, 0.0));
        assert!(forced_zero_check(0.05, 1.0, 100, 0.01, &pair, 1).is_err());
    }
}
