//! Planar gauge-field solutions with prescribed zeros: the radial profile,
//! the full planar solver, and the derived observables (flux, holomorphic
//! moments, decay rate, the weighted second-moment Hamiltonian and the
//! tangent/metric solve).

pub mod grid;
pub mod planar;
pub mod radial;
pub mod tangent;

pub use grid::GridSpec;
pub use planar::{solve_planar, PlanarSettings, ResidualReport, VortexConfig, VortexSolution};
pub use radial::{solve_radial, RadialProfile};
pub use tangent::{tangent_solve, TangentPair};

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Flux (1/2π)∫(1 − |α|²); equals the zero count up to the domain tail.
pub fn flux(sol: &VortexSolution) -> f64 {
    sol.flux
}

/// Holomorphic moments (1/2π)∫ z^q (1 − |α|²) for q = 1..q_max, with the
/// grid half-width reported as the effective radius of the quadrature.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MomentReport {
    pub moments: Vec<(f64, f64)>,
    pub effective_radius: f64,
}

pub fn moments(sol: &VortexSolution, q_max: u32) -> MomentReport {
    let n = sol.grid.n;
    let d = sol.grid.step();
    let mut out = vec![Complex64::new(0.0, 0.0); q_max as usize];
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let rho = 1.0 - sol.alpha[k].norm_sqr();
            if rho == 0.0 {
                continue;
            }
            let z = sol.grid.point(i, j);
            let mut zq = Complex64::new(1.0, 0.0);
            for q in 0..q_max as usize {
                zq *= z;
                out[q] += zq * rho;
            }
        }
    }
    let scale = d * d / (2.0 * std::f64::consts::PI);
    MomentReport {
        moments: out.into_iter().map(|c| (c.re * scale, c.im * scale)).collect(),
        effective_radius: sol.grid.half_width,
    }
}

pub fn moments_complex(sol: &VortexSolution, q_max: u32) -> Vec<Complex64> {
    moments(sol, q_max)
        .moments
        .into_iter()
        .map(|(re, im)| Complex64::new(re, im))
        .collect()
}

/// Least-squares slope of log(1 − |α|²) against distance from the
/// configuration centroid over [r_lo, r_hi]; returns the decay exponent
/// (positive for decay).
pub fn decay_fit(sol: &VortexSolution, r_lo: f64, r_hi: f64) -> Result<f64> {
    if r_hi <= r_lo {
        return Err(Error::invalid("empty fit window"));
    }
    if r_hi > sol.grid.half_width {
        return Err(Error::invalid("fit window extends beyond the grid"));
    }
    let c = sol.config.centroid();
    let n = sol.grid.n;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let z = sol.grid.point(i, j);
            let r = (z - c).norm();
            if r < r_lo || r > r_hi {
                continue;
            }
            let rho = 1.0 - sol.alpha[j * n + i].norm_sqr();
            if rho > 1e-12 {
                xs.push(r);
                ys.push(rho.ln());
            }
        }
    }
    if xs.len() < 16 {
        return Err(Error::Degenerate(
            "field below the numerical floor across the fit window".into(),
        ));
    }
    let n_pts = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n_pts;
    let my = ys.iter().sum::<f64>() / n_pts;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-(cov / var))
}

/// The weighted second-moment functional
/// ĥ = (1/4π)∫(2ν|z|² + μz̄² + μ̄z²)(1 − |α|²)
/// for frozen coefficients (ν, μ).
pub fn hamiltonian(sol: &VortexSolution, nu: f64, mu: Complex64) -> f64 {
    let parts = hamiltonian_parts(sol);
    nu * parts.0 + (mu.conj() * parts.1).re
}

/// The (ν, μ)-independent ingredients of ĥ: the real second moment
/// P = (1/2π)∫|z|²(1−|α|²) and the holomorphic moment
/// M₂ = (1/2π)∫z²(1−|α|²), so that ĥ = ν·P + Re(μ̄·M₂).
pub fn hamiltonian_parts(sol: &VortexSolution) -> (f64, Complex64) {
    let n = sol.grid.n;
    let d = sol.grid.step();
    let mut p = 0.0;
    let mut m2 = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let rho = 1.0 - sol.alpha[j * n + i].norm_sqr();
            let z = sol.grid.point(i, j);
            p += z.norm_sqr() * rho;
            m2 += z * z * rho;
        }
    }
    let scale = d * d / (2.0 * std::f64::consts::PI);
    (p * scale, m2 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse(zs: Vec<Complex64>) -> VortexSolution {
        solve_planar(&VortexConfig::new(zs), &PlanarSettings::coarse()).unwrap()
    }

    #[test]
    fn moments_of_centered_vortex_vanish() {
        let sol = coarse(vec![Complex64::new(0.0, 0.0)]);
        let m = moments_complex(&sol, 1);
        assert!(m[0].norm() < 1e-3, "moment1 {}", m[0]);
    }

    #[test]
    fn moment_identity_two_zeros() {
        let sol = coarse(vec![Complex64::new(0.5, 0.0), Complex64::new(-0.5, 0.0)]);
        let m = moments_complex(&sol, 2);
        assert!(m[0].norm() < 1e-3, "moment1 {}", m[0]);
        // power sum of squares = 0.5
        assert!((m[1] - Complex64::new(0.5, 0.0)).norm() < 0.025, "moment2 {}", m[1]);
    }

    #[test]
    fn hamiltonian_zero_for_zero_pair() {
        let sol = coarse(vec![Complex64::new(0.3, 0.2)]);
        assert_eq!(hamiltonian(&sol, 0.0, Complex64::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn hamiltonian_translation_identity_coarse() {
        // ĥ(w) − ĥ(0) = ν|w|² + Re(μ̄ w²), exact for the continuum fields
        let nu = 0.15;
        let mu = Complex64::new(0.0, 0.1);
        let h0 = hamiltonian(&coarse(vec![Complex64::new(0.0, 0.0)]), nu, mu);
        let w = Complex64::new(0.3, -0.25);
        let hw = hamiltonian(&coarse(vec![w]), nu, mu);
        let expect = nu * w.norm_sqr() + (mu.conj() * w * w).re;
        let scale = nu * w.norm_sqr() + mu.norm() * w.norm_sqr();
        assert!(
            ((hw - h0) - expect).abs() < 0.02 * scale,
            "got {} want {}",
            hw - h0,
            expect
        );
    }

    #[test]
    fn decay_exponent_coarse_vortex() {
        let cfg = VortexConfig::new(vec![Complex64::new(0.0, 0.0)]);
        let sol =
            solve_planar(&cfg, &PlanarSettings { n: 160, min_half_width: 8.0, residual_threshold: 5e-4, ..Default::default() })
                .unwrap();
        let ex = decay_fit(&sol, 3.0, 6.0).unwrap();
        assert!(ex > 1.2 && ex < 1.7, "exponent {ex}");
    }

    #[test]
    fn decay_fit_errors_on_vacuum() {
        let sol = coarse(vec![]);
        assert!(decay_fit(&sol, 3.0, 5.0).is_err());
    }
}
