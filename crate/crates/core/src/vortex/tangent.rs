//! Tangent vectors to the solution space at a solved configuration.
//!
//! A holomorphic tangent vector is a square-integrable pair (x, ι) with
//!
//! ```text
//! ∂x + 2^{-1/2} ᾱ ι = 0        ∂̄_A ι + 2^{-1/2} α x = 0
//! ```
//!
//! x changes the (0,1) part of the connection (scaled by 2^{-1/2}) and ι
//! changes α. The direction is pinned by matching ι at the zeros to the
//! leading-order zero motion: ι(z_j) = −w_j·∂_zα(z_j). The system is solved
//! in least squares (normal equations + conjugate gradients) with the
//! matching enforced as a penalty, and the metric norm is π^{-1/2} times
//! the L² norm.

use super::grid::{ddx4, ddx4_t, ddy4, ddy4_t, GridSpec};
use super::planar::{dz_alpha_at_zero, VortexSolution};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// A solved tangent pair with its norms and diagnostics.
#[derive(Clone, Debug)]
pub struct TangentPair {
    pub x: Vec<Complex64>,
    pub iota: Vec<Complex64>,
    pub l2_norm: f64,
    /// π^{-1/2} · l2_norm.
    pub metric_norm: f64,
    /// Relative residual of the first-order system at the minimizer.
    pub residual_rel: f64,
    /// Worst interpolation mismatch at the zeros.
    pub constraint_err: f64,
}

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const PENALTY: f64 = 4.0;

struct Op<'a> {
    spec: GridSpec,
    alpha: &'a [Complex64],
    a_conn: &'a [Complex64],
    /// bilinear interpolation weights per constraint: (node, weight)
    constraints: Vec<Vec<(usize, f64)>>,
}

/// State vector layout: x then ι, both full-grid complex.
type State = Vec<Complex64>;

impl<'a> Op<'a> {
    fn total(&self) -> usize {
        self.spec.len()
    }

    /// E1 = ∂x + s ᾱ ι,  E2 = ∂̄ι + A^{0,1}ι + s α x,  C_j = Σ w_k ι_k.
    fn apply(&self, v: &State) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let t = self.total();
        let (x, iota) = v.split_at(t);
        let (dx_x, dy_x) = self.derivs(x);
        let (dx_i, dy_i) = self.derivs(iota);
        let mut e1 = vec![Complex64::new(0.0, 0.0); t];
        let mut e2 = vec![Complex64::new(0.0, 0.0); t];
        for k in 0..t {
            // ∂ = ½(∂x − i∂y), ∂̄ = ½(∂x + i∂y)
            let dz_x = (dx_x[k] - Complex64::new(0.0, 1.0) * dy_x[k]) * 0.5;
            let dzbar_i = (dx_i[k] + Complex64::new(0.0, 1.0) * dy_i[k]) * 0.5;
            e1[k] = dz_x + self.alpha[k].conj() * iota[k] * INV_SQRT2;
            e2[k] = dzbar_i + self.a_conn[k] * iota[k] + self.alpha[k] * x[k] * INV_SQRT2;
        }
        let c = self
            .constraints
            .iter()
            .map(|ws| ws.iter().map(|&(k, w)| iota[k] * w).sum())
            .collect();
        (e1, e2, c)
    }

    /// Adjoint of `apply` under the real L² pairing (weights folded in by
    /// the caller).
    fn apply_adjoint(&self, e1: &[Complex64], e2: &[Complex64], c: &[Complex64]) -> State {
        let t = self.total();
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * t];
        // x-part: ∂*e1 + s ᾱ e2
        let dz_star = self.dz_adjoint(e1);
        for k in 0..t {
            out[k] = dz_star[k] + self.alpha[k].conj() * e2[k] * INV_SQRT2;
        }
        // ι-part: s α e1 + ∂̄*e2 + conj(A^{0,1}) e2 + constraint scatter
        let dzbar_star = self.dzbar_adjoint(e2);
        for k in 0..t {
            out[t + k] = self.alpha[k] * e1[k] * INV_SQRT2
                + dzbar_star[k]
                + self.a_conn[k].conj() * e2[k];
        }
        for (ws, &cv) in self.constraints.iter().zip(c) {
            for &(k, w) in ws {
                out[t + k] += cv * w;
            }
        }
        out
    }

    fn derivs(&self, f: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let t = self.total();
        let (mut re, mut im) = (vec![0.0; t], vec![0.0; t]);
        for (k, c) in f.iter().enumerate() {
            re[k] = c.re;
            im[k] = c.im;
        }
        let (mut a, mut b, mut cc, mut dd) =
            (vec![0.0; t], vec![0.0; t], vec![0.0; t], vec![0.0; t]);
        ddx4(&self.spec, &re, &mut a);
        ddx4(&self.spec, &im, &mut b);
        ddy4(&self.spec, &re, &mut cc);
        ddy4(&self.spec, &im, &mut dd);
        let dx = (0..t).map(|k| Complex64::new(a[k], b[k])).collect();
        let dy = (0..t).map(|k| Complex64::new(cc[k], dd[k])).collect();
        (dx, dy)
    }

    fn derivs_t(&self, f: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let t = self.total();
        let (mut re, mut im) = (vec![0.0; t], vec![0.0; t]);
        for (k, c) in f.iter().enumerate() {
            re[k] = c.re;
            im[k] = c.im;
        }
        let (mut a, mut b, mut cc, mut dd) =
            (vec![0.0; t], vec![0.0; t], vec![0.0; t], vec![0.0; t]);
        ddx4_t(&self.spec, &re, &mut a);
        ddx4_t(&self.spec, &im, &mut b);
        ddy4_t(&self.spec, &re, &mut cc);
        ddy4_t(&self.spec, &im, &mut dd);
        let dxt = (0..t).map(|k| Complex64::new(a[k], b[k])).collect();
        let dyt = (0..t).map(|k| Complex64::new(cc[k], dd[k])).collect();
        (dxt, dyt)
    }

    /// (½(Dx − iDy))* u = ½(Dxᵀ u + i Dyᵀ u)
    fn dz_adjoint(&self, u: &[Complex64]) -> Vec<Complex64> {
        let (dxt, dyt) = self.derivs_t(u);
        dxt.iter()
            .zip(&dyt)
            .map(|(a, b)| (a + Complex64::new(0.0, 1.0) * b) * 0.5)
            .collect()
    }

    /// (½(Dx + iDy))* u = ½(Dxᵀ u − i Dyᵀ u)
    fn dzbar_adjoint(&self, u: &[Complex64]) -> Vec<Complex64> {
        let (dxt, dyt) = self.derivs_t(u);
        dxt.iter()
            .zip(&dyt)
            .map(|(a, b)| (a - Complex64::new(0.0, 1.0) * b) * 0.5)
            .collect()
    }
}

fn re_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn bilinear_weights(spec: &GridSpec, z: Complex64) -> Vec<(usize, f64)> {
    let d = spec.step();
    let fx = ((z.re - (spec.center.0 - spec.half_width)) / d).clamp(0.0, (spec.n - 2) as f64);
    let fy = ((z.im - (spec.center.1 - spec.half_width)) / d).clamp(0.0, (spec.n - 2) as f64);
    let (i, j) = (fx.floor() as usize, fy.floor() as usize);
    let (sx, sy) = (fx - i as f64, fy - j as f64);
    let n = spec.n;
    vec![
        (j * n + i, (1.0 - sx) * (1.0 - sy)),
        (j * n + i + 1, sx * (1.0 - sy)),
        ((j + 1) * n + i, (1.0 - sx) * sy),
        ((j + 1) * n + i + 1, sx * sy),
    ]
}

/// Solve the tangent system for the zero motion `direction` (one complex
/// displacement per configured zero).
pub fn tangent_solve(sol: &VortexSolution, direction: &[Complex64]) -> Result<TangentPair> {
    let zeros = &sol.config.zeros;
    if direction.len() != zeros.len() {
        return Err(Error::invalid(format!(
            "direction has {} entries for {} zeros",
            direction.len(),
            zeros.len()
        )));
    }
    let t = sol.grid.len();
    if direction.iter().all(|d| d.norm() == 0.0) {
        return Ok(TangentPair {
            x: vec![Complex64::new(0.0, 0.0); t],
            iota: vec![Complex64::new(0.0, 0.0); t],
            l2_norm: 0.0,
            metric_norm: 0.0,
            residual_rel: 0.0,
            constraint_err: 0.0,
        });
    }
    // coincident zeros would need jet conditions rather than values
    let step = sol.grid.step();
    for a in 0..zeros.len() {
        for b in a + 1..zeros.len() {
            if (zeros[a] - zeros[b]).norm() < 2.0 * step
                && (direction[a].norm() > 0.0 || direction[b].norm() > 0.0)
            {
                return Err(Error::Precondition(
                    "direction prescribes motion of nearly coincident zeros".into(),
                ));
            }
        }
    }

    let constraints: Vec<Vec<(usize, f64)>> =
        zeros.iter().map(|&z| bilinear_weights(&sol.grid, z)).collect();
    let targets: Vec<Complex64> = (0..zeros.len())
        .map(|j| -direction[j] * dz_alpha_at_zero(sol, j))
        .collect();

    let op = Op { spec: sol.grid, alpha: &sol.alpha, a_conn: &sol.a_conn, constraints };
    let d2 = step * step;

    // normal equations N v = rhs with N = T*W T,
    // W = diag(d² on the equations, PENALTY on the constraints)
    let normal = |v: &State| -> State {
        let (e1, e2, c) = op.apply(v);
        let e1w: Vec<Complex64> = e1.into_iter().map(|v| v * d2).collect();
        let e2w: Vec<Complex64> = e2.into_iter().map(|v| v * d2).collect();
        let cw: Vec<Complex64> = c.into_iter().map(|v| v * PENALTY).collect();
        op.apply_adjoint(&e1w, &e2w, &cw)
    };
    let rhs = {
        let zero_e = vec![Complex64::new(0.0, 0.0); t];
        let cw: Vec<Complex64> = targets.iter().map(|&v| v * PENALTY).collect();
        op.apply_adjoint(&zero_e, &zero_e, &cw)
    };

    // plain CG on the normal equations
    let mut v = vec![Complex64::new(0.0, 0.0); 2 * t];
    let mut r = rhs.clone();
    let rhs_norm = re_inner(&rhs, &rhs).sqrt().max(1e-300);
    let mut p = r.clone();
    let mut rr = re_inner(&r, &r);
    for _ in 0..1200 {
        let np = normal(&p);
        let pnp = re_inner(&p, &np);
        if pnp.abs() < 1e-300 {
            break;
        }
        let alpha = rr / pnp;
        for k in 0..2 * t {
            v[k] += p[k] * alpha;
            r[k] -= np[k] * alpha;
        }
        let rr_new = re_inner(&r, &r);
        if rr_new.sqrt() < 1e-9 * rhs_norm {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..2 * t {
            p[k] = r[k] + p[k] * beta;
        }
    }

    let (x, iota) = v.split_at(t);
    let (e1, e2, c) = op.apply(&v);
    let eq_l2 = ((re_inner(&e1, &e1) + re_inner(&e2, &e2)) * d2).sqrt();
    let l2 = ((re_inner(x, x) + re_inner(iota, iota)) * d2).sqrt();
    let constraint_err = c
        .iter()
        .zip(&targets)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let residual_rel = eq_l2 / l2.max(1e-300);

    Ok(TangentPair {
        x: x.to_vec(),
        iota: iota.to_vec(),
        l2_norm: l2,
        metric_norm: l2 / std::f64::consts::PI.sqrt(),
        residual_rel,
        constraint_err,
    })
}

/// Hermitian pairing (1/π)∫(x_a x̄_b + ι_a ῑ_b) of two tangent pairs on the
/// same grid.
pub fn pair_inner(grid: &GridSpec, a: &TangentPair, b: &TangentPair) -> Complex64 {
    let d2 = grid.step() * grid.step();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..grid.len() {
        acc += a.x[k] * b.x[k].conj() + a.iota[k] * b.iota[k].conj();
    }
    acc * d2 / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex::planar::{solve_planar, PlanarSettings, VortexConfig};

    #[test]
    fn zero_direction_gives_zero_pair() {
        let sol = solve_planar(
            &VortexConfig::new(vec![Complex64::new(0.0, 0.0)]),
            &PlanarSettings::coarse(),
        )
        .unwrap();
        let t = tangent_solve(&sol, &[Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(t.l2_norm, 0.0);
        assert_eq!(t.metric_norm, 0.0);
    }

    #[test]
    fn unit_translation_metric_norm() {
        let sol = solve_planar(
            &VortexConfig::new(vec![Complex64::new(0.0, 0.0)]),
            &PlanarSettings::coarse(),
        )
        .unwrap();
        let t = tangent_solve(&sol, &[Complex64::new(1.0, 0.0)]).unwrap();
        assert!(t.metric_norm > 0.0);
        assert!(t.constraint_err < 1e-3, "constraint err {}", t.constraint_err);
        println!(
            "g1 = metric_norm^2 = {} (l2 = {}), residual_rel = {}",
            t.metric_norm * t.metric_norm,
            t.l2_norm,
            t.residual_rel
        );
        // translation invariance: x and y translations have equal norm
        let ty = tangent_solve(&sol, &[Complex64::new(0.0, 1.0)]).unwrap();
        assert!((t.metric_norm - ty.metric_norm).abs() < 0.02 * t.metric_norm);
    }

    #[test]
    fn metric_positivity_and_concentration() {
        let w = Complex64::new(0.4, 0.1);
        let sol = solve_planar(&VortexConfig::new(vec![w]), &PlanarSettings::coarse()).unwrap();
        // rotation direction δz = i z at an offset vortex
        let t = tangent_solve(&sol, &[Complex64::new(0.0, 1.0) * w]).unwrap();
        assert!(t.metric_norm > 0.0);
        // ι mass concentrates near the vortex where ∇α is supported
        let n = sol.grid.n;
        let mut near = 0.0;
        let mut tot = 0.0;
        for j in 0..n {
            for i in 0..n {
                let z = sol.grid.point(i, j);
                let m = t.iota[j * n + i].norm_sqr();
                tot += m;
                if (z - w).norm() < 3.0 {
                    near += m;
                }
            }
        }
        assert!(near / tot > 0.85, "iota mass fraction near core {}", near / tot);
    }
}
