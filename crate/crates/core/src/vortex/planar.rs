//! Planar solver: fields with prescribed zeros via the scalar reduction
//! u = log|α|², Δu = 2(eᵘ − 1) + 4π Σ δ_{z_j}.
//!
//! The singular part u_sing = Σ log(ρ_j²/(1+ρ_j²)) is split off
//! analytically; the smooth remainder w is solved by Newton iteration on a
//! 4th-order compact discretization with sine-transform preconditioned CG.
//! The correctness contract is the direct residual of the first-order
//! equations on the grid (curvature against 1 − |α|², and the covariant
//! d-bar of α), not the reduction itself.

use super::grid::{
    apply_lap5_full, apply_lap9_full, apply_lap9_interior, ddx4, ddx4_c, ddy4, ddy4_c, GridSpec,
    HelmholtzSolver, LaplacianKind,
};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Prescribed zero multiset; multiplicity by repetition.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VortexConfig {
    pub zeros: Vec<Complex64>,
}

impl VortexConfig {
    pub fn new(zeros: Vec<Complex64>) -> Self {
        VortexConfig { zeros }
    }

    pub fn vortex_number(&self) -> usize {
        self.zeros.len()
    }

    pub fn max_radius(&self) -> f64 {
        self.zeros.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> Complex64 {
        if self.zeros.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        self.zeros.iter().sum::<Complex64>() / self.zeros.len() as f64
    }
}

/// Solver resolution and budgets.
#[derive(Clone, Copy, Debug)]
pub struct PlanarSettings {
    /// Points per side; the default follows the 256² production grid.
    pub n: usize,
    /// Half-width floor; the actual grid uses max(this, 3 + 2·max|z_j|).
    pub min_half_width: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub cg_tol: f64,
    pub max_cg: usize,
    /// Reject solutions whose direct first-order residuals exceed this.
    pub residual_threshold: f64,
}

impl Default for PlanarSettings {
    fn default() -> Self {
        PlanarSettings {
            n: 256,
            min_half_width: 8.0,
            newton_tol: 1e-10,
            max_newton: 30,
            cg_tol: 1e-12,
            max_cg: 600,
            residual_threshold: 1e-4,
        }
    }
}

impl PlanarSettings {
    /// Cheap preset for moduli-space dynamics sweeps; the direct-residual
    /// gate is relaxed along with the resolution.
    pub fn coarse() -> Self {
        PlanarSettings { n: 97, min_half_width: 6.0, residual_threshold: 2e-3, ..Default::default() }
    }

    pub fn grid_for(&self, config: &VortexConfig) -> GridSpec {
        let half = self.min_half_width.max(3.0 + 2.0 * config.max_radius());
        GridSpec { center: (0.0, 0.0), half_width: half, n: self.n }
    }
}

/// Direct residuals of the first-order equations, measured away from zeros.
#[derive(Clone, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct ResidualReport {
    /// sup |curl A − (1 − |α|²)| at distance > 2 cells from every zero.
    pub curvature_sup: f64,
    pub curvature_l2: f64,
    /// sup |∂̄α + A^{0,1}α| on the same mask.
    pub dbar_sup: f64,
    pub dbar_l2: f64,
    /// max of u over the grid (must stay ≤ ~0).
    pub max_u: f64,
    /// Final sup-norm of the nonlinear solve residual.
    pub newton_residual: f64,
    /// |u| on the outermost ring.
    pub boundary_sup_u: f64,
}

/// A solved configuration with its derived fields.
#[derive(Clone, Debug)]
pub struct VortexSolution {
    pub config: VortexConfig,
    pub grid: GridSpec,
    /// u = log|α|² (−∞ at the zeros).
    pub u: Vec<f64>,
    /// Smooth remainder w = u − u_sing; kept for derivative work.
    pub w: Vec<f64>,
    pub alpha: Vec<Complex64>,
    /// A^{0,1} = ½(a₂ − i a₁), the (0,1)-component of the connection.
    pub a_conn: Vec<Complex64>,
    pub flux: f64,
    pub residuals: ResidualReport,
}

fn exp_u_sing_at(zeros: &[Complex64], z: Complex64) -> f64 {
    zeros
        .iter()
        .map(|&zj| {
            let r2 = (z - zj).norm_sqr();
            r2 / (1.0 + r2)
        })
        .product()
}

fn u_sing_at(zeros: &[Complex64], z: Complex64) -> f64 {
    zeros
        .iter()
        .map(|&zj| {
            let r2 = ((z - zj).norm_sqr()).max(1e-300);
            (r2 / (1.0 + r2)).ln()
        })
        .sum()
}

fn split_source_at(zeros: &[Complex64], z: Complex64) -> f64 {
    zeros
        .iter()
        .map(|&zj| 4.0 / (1.0 + (z - zj).norm_sqr()).powi(2))
        .sum()
}

/// Smooth closed form α = e^{w/2}·Π (z−z_j)/√(1+ρ_j²).
fn alpha_at(zeros: &[Complex64], w: f64, z: Complex64) -> Complex64 {
    let mut a = Complex64::new((0.5 * w).exp(), 0.0);
    for &zj in zeros {
        let d = z - zj;
        a *= d / (1.0 + d.norm_sqr()).sqrt();
    }
    a
}

/// ∂_z α at a simple zero z_k, in closed form.
pub fn dz_alpha_at_zero(sol: &VortexSolution, k: usize) -> Complex64 {
    let zk = sol.config.zeros[k];
    let wk = interp_real(&sol.grid, &sol.w, zk);
    let mut a = Complex64::new((0.5 * wk).exp(), 0.0);
    for (j, &zj) in sol.config.zeros.iter().enumerate() {
        if j == k {
            continue;
        }
        let d = zk - zj;
        a *= d / (1.0 + d.norm_sqr()).sqrt();
    }
    a
}

/// Bilinear interpolation of a real grid field.
pub fn interp_real(spec: &GridSpec, field: &[f64], z: Complex64) -> f64 {
    let d = spec.step();
    let fx = ((z.re - (spec.center.0 - spec.half_width)) / d).clamp(0.0, (spec.n - 2) as f64);
    let fy = ((z.im - (spec.center.1 - spec.half_width)) / d).clamp(0.0, (spec.n - 2) as f64);
    let (i, j) = (fx.floor() as usize, fy.floor() as usize);
    let (sx, sy) = (fx - i as f64, fy - j as f64);
    let n = spec.n;
    let v = |ii: usize, jj: usize| field[jj * n + ii];
    v(i, j) * (1.0 - sx) * (1.0 - sy)
        + v(i + 1, j) * sx * (1.0 - sy)
        + v(i, j + 1) * (1.0 - sx) * sy
        + v(i + 1, j + 1) * sx * sy
}

/// Bilinear interpolation of a complex grid field.
pub fn interp_complex(spec: &GridSpec, field: &[Complex64], z: Complex64) -> Complex64 {
    let d = spec.step();
    let fx = ((z.re - (spec.center.0 - spec.half_width)) / d).clamp(0.0, (spec.n - 2) as f64);
    let fy = ((z.im - (spec.center.1 - spec.half_width)) / d).clamp(0.0, (spec.n - 2) as f64);
    let (i, j) = (fx.floor() as usize, fy.floor() as usize);
    let (sx, sy) = (fx - i as f64, fy - j as f64);
    let n = spec.n;
    let v = |ii: usize, jj: usize| field[jj * n + ii];
    v(i, j) * (1.0 - sx) * (1.0 - sy)
        + v(i + 1, j) * sx * (1.0 - sy)
        + v(i, j + 1) * (1.0 - sx) * sy
        + v(i + 1, j + 1) * sx * sy
}

/// Solve for the configuration on the settings' grid.
pub fn solve_planar(config: &VortexConfig, settings: &PlanarSettings) -> Result<VortexSolution> {
    let spec = settings.grid_for(config);
    let n = spec.n;
    let d = spec.step();
    if d > 1.0 / 8.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "grid resolution {:.4} coarser than 8 points per unit length",
            d
        )));
    }
    for &z in &config.zeros {
        if (z - Complex64::new(spec.center.0, spec.center.1)).norm() > 0.5 * spec.half_width {
            return Err(Error::invalid(format!("zero {z} too close to the boundary")));
        }
    }

    let zeros = &config.zeros;
    let total = n * n;
    let m = n - 2;

    // precompute pointwise data
    let mut e_sing = vec![0.0; total];
    let mut source = vec![0.0; total];
    for j in 0..n {
        for i in 0..n {
            let z = spec.point(i, j);
            e_sing[j * n + i] = exp_u_sing_at(zeros, z);
            source[j * n + i] = split_source_at(zeros, z);
        }
    }

    // w with Dirichlet data u = 0 on the boundary
    let mut w = vec![0.0; total];
    for j in 0..n {
        for i in 0..n {
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                w[j * n + i] = -u_sing_at(zeros, spec.point(i, j));
            }
        }
    }

    let helm = HelmholtzSolver::new(m, d, LaplacianKind::NinePoint);
    let g_of = |w: &[f64], k: usize| 2.0 * (e_sing[k] * w[k].exp() - 1.0) + source[k];
    let gp_of = |w: &[f64], k: usize| 2.0 * e_sing[k] * w[k].exp();

    // Newton residual F = A9 w − (G + d²/12 Δ5 G) on the interior
    let mut gfield = vec![0.0; total];
    let mut lap5g = vec![0.0; total];
    let mut a9w = vec![0.0; total];
    let compute_residual = |w: &[f64],
                            gfield: &mut Vec<f64>,
                            lap5g: &mut Vec<f64>,
                            a9w: &mut Vec<f64>|
     -> (Vec<f64>, f64) {
        for k in 0..total {
            gfield[k] = g_of(w, k);
        }
        apply_lap5_full(&spec, gfield, lap5g);
        apply_lap9_full(&spec, w, a9w);
        let mut res = vec![0.0; m * m];
        let mut sup = 0.0f64;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = j * n + i;
                let v = a9w[k] - gfield[k] - d * d / 12.0 * lap5g[k];
                res[(j - 1) * m + (i - 1)] = v;
                sup = sup.max(v.abs());
            }
        }
        (res, sup)
    };

    let mut newton_residual = f64::INFINITY;
    let mut newton_iters = 0usize;
    for _ in 0..settings.max_newton {
        newton_iters += 1;
        let (res, sup) = compute_residual(&w, &mut gfield, &mut lap5g, &mut a9w);
        newton_residual = sup;
        if sup < settings.newton_tol {
            break;
        }
        // quasi-Newton: (−A9 + diag(G')) δ = res, then w += δ
        let gp: Vec<f64> = (1..n - 1)
            .flat_map(|j| (1..n - 1).map(move |i| (i, j)))
            .map(|(i, j)| gp_of(&w, j * n + i))
            .collect();
        // inexact Newton: loose inner solves early, the outer residual
        // check stays exact
        let eta = (1e-3f64).max(settings.cg_tol).min(0.1 * settings.newton_tol / sup.min(1.0));
        let eta = eta.clamp(settings.cg_tol, 1e-3);
        let delta = pcg(&helm, m, d, &gp, &res, eta, settings.max_cg)?;
        let mut step = 0.0f64;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let dv = delta[(j - 1) * m + (i - 1)];
                w[j * n + i] += dv;
                step = step.max(dv.abs());
            }
        }
        if step < 1e-14 {
            break;
        }
    }
    if newton_residual > settings.newton_tol.max(1e-8) {
        return Err(Error::NonConvergence(format!(
            "planar Newton stalled at residual {newton_residual:.3e}"
        )));
    }
    if std::env::var("VORTECH_SOLVE_STATS").is_ok() {
        eprintln!("newton_iters = {newton_iters}");
    }

    // derived fields
    let mut u = vec![0.0; total];
    let mut alpha = vec![Complex64::new(0.0, 0.0); total];
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let z = spec.point(i, j);
            u[k] = u_sing_at(zeros, z) + w[k];
            alpha[k] = alpha_at(zeros, w[k], z);
        }
    }

    // A^{0,1} = ½ Σ (z−z_j)/(1+ρ_j²) − ½ ∂̄w
    let mut dxw = vec![0.0; total];
    let mut dyw = vec![0.0; total];
    ddx4(&spec, &w, &mut dxw);
    ddy4(&spec, &w, &mut dyw);
    let mut a_conn = vec![Complex64::new(0.0, 0.0); total];
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let z = spec.point(i, j);
            let mut sing = Complex64::new(0.0, 0.0);
            for &zj in zeros {
                let dz = z - zj;
                sing += dz / (1.0 + dz.norm_sqr());
            }
            // A^{0,1} = −∂̄ log α = ½Σ(z−z_j)/(1+ρ_j²) − ½∂̄w, ∂̄ = ½(∂x+i∂y)
            let dbar_w = Complex64::new(0.5 * dxw[k], 0.5 * dyw[k]);
            a_conn[k] = sing * 0.5 - dbar_w * 0.5;
        }
    }

    // flux and residual report
    let mut flux = 0.0;
    for k in 0..total {
        flux += 1.0 - alpha[k].norm_sqr();
    }
    flux *= d * d / (2.0 * std::f64::consts::PI);

    let residuals = residual_report(&spec, zeros, &u, &alpha, &a_conn, newton_residual);
    if residuals.curvature_sup.max(residuals.dbar_sup) > settings.residual_threshold {
        return Err(Error::NonConvergence(format!(
            "direct residuals {:.2e}/{:.2e} above the threshold {:.1e}; raise the resolution",
            residuals.curvature_sup, residuals.dbar_sup, settings.residual_threshold
        )));
    }
    Ok(VortexSolution { config: config.clone(), grid: spec, u, w, alpha, a_conn, flux, residuals })
}

/// Preconditioned CG for (−A9 + diag(g)) x = b on the interior.
fn pcg(
    helm: &HelmholtzSolver,
    m: usize,
    d: f64,
    g: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let size = m * m;
    // bulk linearized mass: g = 2eᵘ ≈ 2 outside the cores
    let cbar = 2.0;
    let apply = |x: &[f64], out: &mut Vec<f64>| {
        apply_lap9_interior(m, d, x, out);
        for k in 0..size {
            out[k] = -out[k] + g[k] * x[k];
        }
    };
    let precond = |r: &[f64]| -> Vec<f64> {
        let mut z = r.to_vec();
        helm.solve(&mut z, cbar);
        z
    };

    let mut x = vec![0.0; size];
    let mut r = b.to_vec();
    let b_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; size];
    let mut iters = 0usize;
    for _ in 0..max_iter {
        iters += 1;
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap.abs() < 1e-300 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..size {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn < tol * b_norm {
            if std::env::var("VORTECH_SOLVE_STATS").is_ok() {
                eprintln!("  cg iters = {iters}");
            }
            return Ok(x);
        }
        z = precond(&r);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..size {
            p[k] = z[k] + beta * p[k];
        }
    }
    // CG exits are soft: the quasi-Newton loop tolerates an inexact step
    Ok(x)
}

fn residual_report(
    spec: &GridSpec,
    zeros: &[Complex64],
    u: &[f64],
    alpha: &[Complex64],
    a_conn: &[Complex64],
    newton_residual: f64,
) -> ResidualReport {
    let n = spec.n;
    let total = n * n;
    let d = spec.step();

    // curvature: b = ∂x a₂ − ∂y a₁ with a₂ = 2Re A^{0,1}, a₁ = −2Im A^{0,1}
    let mut a1 = vec![0.0; total];
    let mut a2 = vec![0.0; total];
    for k in 0..total {
        a1[k] = -2.0 * a_conn[k].im;
        a2[k] = 2.0 * a_conn[k].re;
    }
    let mut dxa2 = vec![0.0; total];
    let mut dya1 = vec![0.0; total];
    ddx4(spec, &a2, &mut dxa2);
    ddy4(spec, &a1, &mut dya1);

    // ∂̄α via 4th-order differences
    let mut dxa = vec![Complex64::new(0.0, 0.0); total];
    let mut dya = vec![Complex64::new(0.0, 0.0); total];
    ddx4_c(spec, alpha, &mut dxa);
    ddy4_c(spec, alpha, &mut dya);

    let mask_r = 2.0 * d;
    let mut rep = ResidualReport { newton_residual, ..Default::default() };
    let mut count = 0usize;
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            rep.max_u = rep.max_u.max(u[k]);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                rep.boundary_sup_u = rep.boundary_sup_u.max(u[k].abs());
            }
            let z = spec.point(i, j);
            if zeros.iter().any(|&zj| (z - zj).norm() <= mask_r) {
                continue;
            }
            let curv = (dxa2[k] - dya1[k]) - (1.0 - alpha[k].norm_sqr());
            let dbar = (dxa[k] + Complex64::new(0.0, 1.0) * dya[k]) * 0.5 + a_conn[k] * alpha[k];
            rep.curvature_sup = rep.curvature_sup.max(curv.abs());
            rep.curvature_l2 += curv * curv;
            rep.dbar_sup = rep.dbar_sup.max(dbar.norm());
            rep.dbar_l2 += dbar.norm_sqr();
            count += 1;
        }
    }
    if count > 0 {
        rep.curvature_l2 = (rep.curvature_l2 * d * d).sqrt();
        rep.dbar_l2 = (rep.dbar_l2 * d * d).sqrt();
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_solution_is_exact() {
        let sol = solve_planar(&VortexConfig::default(), &PlanarSettings::coarse()).unwrap();
        assert!(sol.u.iter().all(|&v| v.abs() < 1e-12));
        assert!(sol.alpha.iter().all(|a| (a - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        assert!(sol.a_conn.iter().all(|a| a.norm() < 1e-12));
        assert!(sol.flux.abs() < 1e-12);
        assert!(sol.residuals.curvature_sup < 1e-10);
        assert!(sol.residuals.dbar_sup < 1e-10);
    }

    #[test]
    fn single_vortex_coarse_residuals() {
        let cfg = VortexConfig::new(vec![Complex64::new(0.0, 0.0)]);
        let sol = solve_planar(&cfg, &PlanarSettings::coarse()).unwrap();
        // coarse grid: pure 4th-order truncation, tightens to <1e-4 at 256²
        assert!(sol.residuals.curvature_sup < 1.5e-3, "curv {}", sol.residuals.curvature_sup);
        assert!(sol.residuals.dbar_sup < 1.5e-3, "dbar {}", sol.residuals.dbar_sup);
        assert!(sol.residuals.max_u < 1e-6);
        assert!((sol.flux - 1.0).abs() < 0.02, "flux {}", sol.flux);
    }

    #[test]
    fn symmetric_pair_is_symmetric() {
        let cfg = VortexConfig::new(vec![Complex64::new(0.5, 0.0), Complex64::new(-0.5, 0.0)]);
        let sol = solve_planar(&cfg, &PlanarSettings::coarse()).unwrap();
        let n = sol.grid.n;
        // u(z) = u(−z): the grid is symmetric under (i,j) → (n−1−i, n−1−j)
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let a = sol.u[j * n + i];
                let b = sol.u[(n - 1 - j) * n + (n - 1 - i)];
                if a.is_finite() && b.is_finite() {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        assert!(worst < 1e-6, "asymmetry {worst}");
    }

    #[test]
    fn rejects_zero_near_boundary() {
        let cfg = VortexConfig::new(vec![Complex64::new(5.0, 0.0)]);
        let err = solve_planar(&cfg, &PlanarSettings::coarse());
        assert!(err.is_err() || err.unwrap().grid.half_width >= 13.0);
    }
}
