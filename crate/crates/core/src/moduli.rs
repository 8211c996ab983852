//! Hamiltonian dynamics on the space of zero configurations.
//!
//! Points of the degree-m moduli space are coordinatized by the power sums
//! σ_q = Σ z_j^q of the zeros. The per-period coefficient pair (ν(t), μ(t))
//! defines the weighted second-moment Hamiltonian ĥ on the space, and the
//! closed-orbit problem asks for fixed points of the time-2π flow of
//!
//! ```text
//! σ̇ = 2i G⁻¹ ∂ĥ/∂σ̄
//! ```
//!
//! where G is the Hermitian metric Gram matrix estimated from tangent-pair
//! norms. The sign and factor are pinned by the m = 1 consistency
//! requirement that the linearized return map reproduce the kernel flow
//! z' = 2i(νz + μz̄) of the linearized operator (the metric is ≈ 1 for a
//! single zero under the π^{-1/2} normalization).
//!
//! ĥ is linear in (ν, μ): ĥ = ν·P(σ) + Re(μ̄·M₂(σ)) with P the real second
//! moment and M₂ = σ₂ the holomorphic one, so field solves are cached per
//! rounded moment vector and shared across times. For m = 2, translations
//! and rotations act by isometries, collapsing both P and G to functions of
//! |σ₂ − σ₁²/2|; the engine can tabulate those once and interpolate, which
//! is what makes dense return-map scans affordable. The reduced evaluators
//! are cross-checked against the direct solves in the test suite.

use crate::error::{Error, Result};
use crate::reeb::PeriodicPair;
use crate::vortex::planar::{solve_planar, PlanarSettings, VortexConfig};
use crate::vortex::tangent::{pair_inner, tangent_solve};
use crate::vortex::hamiltonian_parts;
use dashmap::DashMap;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// A point of the moduli space: the zero multiset with its cached power
/// sums σ_q, q = 1..m.
#[derive(Clone, Debug)]
pub struct ModuliPoint {
    pub m: usize,
    pub zeros: Vec<Complex64>,
    pub moments: Vec<Complex64>,
}

impl ModuliPoint {
    pub fn from_zeros(zeros: Vec<Complex64>) -> Self {
        let m = zeros.len();
        let moments = power_sums(&zeros, m);
        ModuliPoint { m, zeros, moments }
    }

    /// Invert the chart: recover zeros from power sums via Newton's
    /// identities and polynomial root finding.
    pub fn from_moments(m: usize, moments: &[Complex64]) -> Result<Self> {
        if moments.len() != m {
            return Err(Error::invalid("need exactly m moment coordinates"));
        }
        let zeros = zeros_from_power_sums(moments)?;
        let back = power_sums(&zeros, m);
        let err = back
            .iter()
            .zip(moments)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if err > 1e-8 {
            return Err(Error::NonConvergence(format!(
                "moment inversion mismatch {err:.2e}"
            )));
        }
        Ok(ModuliPoint { m, zeros, moments: moments.to_vec() })
    }

    pub fn origin(m: usize) -> Self {
        ModuliPoint {
            m,
            zeros: vec![Complex64::new(0.0, 0.0); m],
            moments: vec![Complex64::new(0.0, 0.0); m],
        }
    }
}

pub fn power_sums(zeros: &[Complex64], m: usize) -> Vec<Complex64> {
    (1..=m)
        .map(|q| zeros.iter().map(|z| z.powu(q as u32)).sum())
        .collect()
}

/// Newton's identities: power sums → elementary symmetric functions →
/// monic polynomial roots.
fn zeros_from_power_sums(p: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = p.len();
    let mut e = vec![Complex64::new(1.0, 0.0)];
    for k in 1..=m {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[k - i] * p[i - 1] * sign;
        }
        e.push(acc / k as f64);
    }
    let coeffs: Vec<Complex64> = (0..=m)
        .map(|k| e[k] * if k % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    durand_kerner(&coeffs)
}

/// Roots of a monic polynomial with coefficients [1, c₁, …, c_m].
fn durand_kerner(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = coeffs.len() - 1;
    if m == 0 {
        return Ok(vec![]);
    }
    if m == 1 {
        return Ok(vec![-coeffs[1]]);
    }
    if m == 2 {
        // quadratic formula keeps the hot path exact
        let (b, c) = (coeffs[1], coeffs[2]);
        let disc = (b * b - c * 4.0).sqrt();
        return Ok(vec![(-b + disc) * 0.5, (-b - disc) * 0.5]);
    }
    let eval = |z: Complex64| -> Complex64 {
        coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    };
    let radius = 1.0 + coeffs.iter().skip(1).map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / m as f64 + 0.4))
        .collect();
    for _ in 0..300 {
        let mut worst: f64 = 0.0;
        let old = roots.clone();
        for j in 0..m {
            let mut denom = Complex64::new(1.0, 0.0);
            for k in 0..m {
                if k != j {
                    denom *= old[j] - old[k];
                }
            }
            if denom.norm() < 1e-280 {
                denom = Complex64::new(1e-280, 0.0);
            }
            let delta = eval(old[j]) / denom;
            roots[j] = old[j] - delta;
            worst = worst.max(delta.norm());
        }
        if worst < 1e-13 {
            return Ok(roots);
        }
    }
    Err(Error::NonConvergence("polynomial root iteration stalled".into()))
}

/// One integration sample along a trajectory.
#[derive(Clone, Debug)]
pub struct FlowState {
    /// Time in [0, 2π].
    pub t: f64,
    pub point: ModuliPoint,
    /// ĥ at (point, t).
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub states: Vec<FlowState>,
    /// Step index at which a moment coordinate exceeded the escape cap.
    pub diverged_at: Option<usize>,
}

impl FlowTrajectory {
    pub fn end_moments(&self) -> &[Complex64] {
        &self.states.last().expect("trajectory has states").point.moments
    }
}

/// How ĥ and the metric are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// One field solve per rounded moment vector (cached).
    Direct,
    /// Symmetry-reduced interpolation tables (m = 2 only); built once from
    /// direct solves and cross-checked in tests.
    Reduced,
    /// Reduced for m = 2, direct otherwise.
    Auto,
}

/// Budgets, steps and caches for the dynamics.
#[derive(Clone, Debug)]
pub struct DynamicsSettings {
    pub solver: PlanarSettings,
    /// Central-difference step in moment coordinates.
    pub fd_step: f64,
    /// RK4 steps per period.
    pub steps: usize,
    /// Escape cap: |σ_q| beyond this is treated as divergence to infinity.
    pub moment_cap: f64,
    /// Rounding for the field-solve cache.
    pub cache_rounding: f64,
    /// Rounding for the direct Gram cache.
    pub gram_rounding: f64,
    /// Two-tier closed-orbit thresholds.
    pub candidate_threshold: f64,
    pub refined_threshold: f64,
    pub eval_mode: EvalMode,
}

impl Default for DynamicsSettings {
    fn default() -> Self {
        DynamicsSettings {
            solver: PlanarSettings::coarse(),
            fd_step: 0.02,
            steps: 64,
            moment_cap: 10.0,
            cache_rounding: 1e-6,
            gram_rounding: 1e-2,
            candidate_threshold: 1e-2,
            refined_threshold: 1e-3,
            eval_mode: EvalMode::Auto,
        }
    }
}

type Key = (usize, Vec<(i64, i64)>);

fn round_key(m: usize, moments: &[Complex64], rounding: f64) -> Key {
    (
        m,
        moments
            .iter()
            .map(|c| ((c.re / rounding).round() as i64, (c.im / rounding).round() as i64))
            .collect(),
    )
}

/// Natural cubic spline on ascending nodes.
#[derive(Clone, Debug)]
struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    y2: Vec<f64>,
}

impl Spline {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        let mut y2 = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let p = sig * y2[i - 1] + 2.0;
            y2[i] = (sig - 1.0) / p;
            u[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                - (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
            u[i] = (6.0 * u[i] / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
        }
        for i in (0..n - 1).rev() {
            y2[i] = y2[i] * y2[i + 1] + u[i];
        }
        Spline { xs, ys, y2 }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] > x {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let h = self.xs[hi] - self.xs[lo];
        let a = (self.xs[hi] - x) / h;
        let b = (x - self.xs[lo]) / h;
        a * self.ys[lo]
            + b * self.ys[hi]
            + ((a * a * a - a) * self.y2[lo] + (b * b * b - b) * self.y2[hi]) * h * h / 6.0
    }
}

/// Symmetry-reduced data for m = 2: everything is a function of the
/// centered invariant y = |s|², s = σ₂ − σ₁²/2.
struct ReducedTables {
    /// p(y): second moment of the centered configuration.
    p: Spline,
    /// Diagonal metric entries at centered configurations.
    g1: Spline,
    g2: Spline,
    y_max: f64,
    /// Linear-in-|s| extension data for p beyond the table.
    p_end: (f64, f64), // (x_end, slope dp/dx at the end)
}

/// Dynamics driver with concurrent solve caches.
pub struct ModuliEngine {
    pub settings: DynamicsSettings,
    parts_cache: DashMap<Key, (f64, Complex64)>,
    gram_cache: DashMap<Key, Vec<Complex64>>,
    tables: OnceLock<std::result::Result<ReducedTables, String>>,
}

impl ModuliEngine {
    pub fn new(settings: DynamicsSettings) -> Self {
        ModuliEngine {
            settings,
            parts_cache: DashMap::new(),
            gram_cache: DashMap::new(),
            tables: OnceLock::new(),
        }
    }

    pub fn cache_len(&self) -> usize {
        self.parts_cache.len()
    }

    fn reduced_for(&self, m: usize) -> bool {
        match self.settings.eval_mode {
            EvalMode::Direct => false,
            EvalMode::Reduced => m == 2,
            EvalMode::Auto => m == 2,
        }
    }

    /// (P, M₂) at the configuration with the given moments.
    pub fn parts(&self, m: usize, moments: &[Complex64]) -> Result<(f64, Complex64)> {
        if m == 2 && self.reduced_for(m) {
            let t = self.tables()?;
            let s = moments[1] - moments[0] * moments[0] * 0.5;
            let y = s.norm_sqr();
            let p_c = if y <= t.y_max {
                t.p.eval(y)
            } else {
                // two well-separated cores: p grows linearly in |s|
                let x = y.sqrt();
                t.p.eval(t.y_max) + (x - t.p_end.0) * t.p_end.1
            };
            // translation identity: P(σ) = |σ₁|²/2 + p(|s|)
            let p = 0.5 * moments[0].norm_sqr() + p_c;
            return Ok((p, moments[1]));
        }
        self.direct_parts(m, moments)
    }

    /// Direct evaluation through the rounded-moment solve cache.
    pub fn direct_parts(&self, m: usize, moments: &[Complex64]) -> Result<(f64, Complex64)> {
        let key = round_key(m, moments, self.settings.cache_rounding);
        if let Some(v) = self.parts_cache.get(&key) {
            return Ok(*v);
        }
        let point = ModuliPoint::from_moments(m, moments)?;
        let sol = solve_planar(&VortexConfig::new(point.zeros), &self.settings.solver)?;
        let parts = hamiltonian_parts(&sol);
        self.parts_cache.insert(key, parts);
        Ok(parts)
    }

    /// ĥ(σ, ν, μ) = ν·P + Re(μ̄·M₂).
    pub fn h(&self, m: usize, moments: &[Complex64], nu: f64, mu: Complex64) -> Result<f64> {
        let (p, m2) = self.parts(m, moments)?;
        Ok(nu * p + (mu.conj() * m2).re)
    }

    /// ∂ĥ/∂σ̄_q by central differences, q = 1..m.
    pub fn dbar_h(
        &self,
        m: usize,
        moments: &[Complex64],
        nu: f64,
        mu: Complex64,
    ) -> Result<Vec<Complex64>> {
        let d = self.settings.fd_step;
        let mut out = Vec::with_capacity(m);
        for q in 0..m {
            let shifted = |dre: f64, dim: f64| -> Result<f64> {
                let mut mm = moments.to_vec();
                mm[q] += Complex64::new(dre, dim);
                self.h(m, &mm, nu, mu)
            };
            let hx = (shifted(d, 0.0)? - shifted(-d, 0.0)?) / (2.0 * d);
            let hy = (shifted(0.0, d)? - shifted(0.0, -d)?) / (2.0 * d);
            // ∂/∂σ̄ = ½(∂_x + i∂_y) on real-valued ĥ
            out.push(Complex64::new(0.5 * hx, 0.5 * hy));
        }
        Ok(out)
    }

    /// Hermitian metric Gram matrix G_{pq} = ⟨∂/∂σ_p, ∂/∂σ_q⟩, row-major.
    pub fn gram(&self, m: usize, moments: &[Complex64]) -> Result<Vec<Complex64>> {
        if m == 2 && self.reduced_for(m) {
            let t = self.tables()?;
            let s1 = moments[0];
            let s = moments[1] - s1 * s1 * 0.5;
            let y = s.norm_sqr().min(t.y_max);
            let (g1, g2) = (t.g1.eval(y), t.g2.eval(y));
            // pull back the centered diagonal metric through the
            // translation chart map (dK = [[1,0],[−σ₁,1]])
            return Ok(vec![
                Complex64::new(g1 + s1.norm_sqr() * g2, 0.0),
                -s1.conj() * g2,
                -s1 * g2,
                Complex64::new(g2, 0.0),
            ]);
        }
        self.direct_gram(m, moments)
    }

    /// Gram from per-point tangent solves (cached on a coarse rounding).
    /// Coincident zeros are regularized by a small symmetric spread before
    /// differentiating (the metric is smooth across the diagonal while the
    /// zero-motion parametrization is not).
    pub fn direct_gram(&self, m: usize, moments: &[Complex64]) -> Result<Vec<Complex64>> {
        let key = if m == 1 {
            // translation invariance: one entry serves the whole chart
            (1, vec![(0, 0)])
        } else {
            round_key(m, moments, self.settings.gram_rounding)
        };
        if let Some(v) = self.gram_cache.get(&key) {
            return Ok(v.clone());
        }
        let point = if m == 1 {
            ModuliPoint::origin(1)
        } else {
            ModuliPoint::from_moments(m, moments)?
        };
        let mut zeros = point.zeros.clone();
        let min_sep = 4.0 * {
            let g = self.settings.solver.grid_for(&VortexConfig::new(zeros.clone()));
            g.step()
        };
        let mut too_close = false;
        for a in 0..m {
            for b in a + 1..m {
                too_close |= (zeros[a] - zeros[b]).norm() < min_sep;
            }
        }
        if too_close {
            for (j, z) in zeros.iter_mut().enumerate() {
                *z += Complex64::from_polar(min_sep, 2.0 * PI * j as f64 / m as f64 + 0.7);
            }
        }
        let g = gram_at_zeros(&zeros, &self.settings.solver)?;
        self.gram_cache.insert(key, g.clone());
        Ok(g)
    }

    fn tables(&self) -> Result<&ReducedTables> {
        let built = self.tables.get_or_init(|| {
            build_tables(&self.settings.solver).map_err(|e| e.to_string())
        });
        built.as_ref().map_err(|e: &String| Error::NonConvergence(e.clone()))
    }

    /// The metric-raised differential ∇ĥ = G⁻¹ ∂̄ĥ in moment coordinates.
    pub fn grad_h(&self, point: &ModuliPoint, nu: f64, mu: Complex64) -> Result<Vec<Complex64>> {
        let m = point.m;
        let dbar = self.dbar_h(m, &point.moments, nu, mu)?;
        let g = self.gram(m, &point.moments)?;
        raise(m, &g, &dbar)
    }

    /// Hamiltonian vector field σ̇ = 2i G⁻¹ ∂̄ĥ at (σ, t).
    fn rhs(
        &self,
        m: usize,
        moments: &[Complex64],
        pair: &PeriodicPair,
        t: f64,
    ) -> Result<Vec<Complex64>> {
        let nu = pair.nu_at(t);
        let mu = pair.mu_at(t);
        let dbar = self.dbar_h(m, moments, nu, mu)?;
        let v = raise(m, &self.gram(m, moments)?, &dbar)?;
        Ok(v.into_iter().map(|c| c * Complex64::new(0.0, 2.0)).collect())
    }

    /// Integrate one period t ∈ [0, 2π] with fixed-step RK4.
    pub fn flow(
        &self,
        pair: &PeriodicPair,
        m: usize,
        start: &ModuliPoint,
        steps: usize,
    ) -> Result<FlowTrajectory> {
        if steps < 16 {
            return Err(Error::invalid("flow needs at least 16 steps"));
        }
        let h = 2.0 * PI / steps as f64;
        let mut sigma = start.moments.clone();
        let mut states = Vec::with_capacity(steps + 1);
        let push_state = |states: &mut Vec<FlowState>, t: f64, sigma: &[Complex64]| -> Result<()> {
            let point = ModuliPoint::from_moments(m, sigma)?;
            let energy = self.h(m, sigma, pair.nu_at(t), pair.mu_at(t))?;
            states.push(FlowState { t, point, energy });
            Ok(())
        };
        push_state(&mut states, 0.0, &sigma)?;
        for s in 0..steps {
            let t = s as f64 * h;
            let k1 = self.rhs(m, &sigma, pair, t)?;
            let k2 = self.rhs(m, &add(&sigma, &k1, 0.5 * h), pair, t + 0.5 * h)?;
            let k3 = self.rhs(m, &add(&sigma, &k2, 0.5 * h), pair, t + 0.5 * h)?;
            let k4 = self.rhs(m, &add(&sigma, &k3, h), pair, t + h)?;
            for q in 0..m {
                sigma[q] += (k1[q] + (k2[q] + k3[q]) * 2.0 + k4[q]) * (h / 6.0);
            }
            if sigma.iter().any(|c| c.norm() > self.settings.moment_cap) {
                // escape to infinity is meaningful, not fatal
                let t_end = (s + 1) as f64 * h;
                let point = ModuliPoint { m, zeros: vec![], moments: sigma.clone() };
                states.push(FlowState { t: t_end, point, energy: f64::NAN });
                return Ok(FlowTrajectory { states, diverged_at: Some(s + 1) });
            }
            push_state(&mut states, (s + 1) as f64 * h, &sigma)?;
        }
        Ok(FlowTrajectory { states, diverged_at: None })
    }

    /// Return-map displacement |Φ(σ) − σ| over one period.
    pub fn displacement(
        &self,
        pair: &PeriodicPair,
        m: usize,
        moments: &[Complex64],
        steps: usize,
    ) -> Result<f64> {
        let start = ModuliPoint::from_moments(m, moments)?;
        let traj = self.flow(pair, m, &start, steps)?;
        if traj.diverged_at.is_some() {
            return Ok(f64::INFINITY);
        }
        let end = traj.end_moments();
        Ok(moments
            .iter()
            .zip(end)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Scan a moment-coordinate box for fixed points of the return map.
    pub fn closed_orbit_search(
        &self,
        pair: &PeriodicPair,
        m: usize,
        region: &SearchRegion,
        grid_per_axis: usize,
    ) -> Result<SearchReport> {
        if region.half_extents.len() != m {
            return Err(Error::invalid("region must give one half-extent per coordinate"));
        }
        if grid_per_axis < 2 {
            return Err(Error::invalid("need at least 2 samples per axis"));
        }
        let axes = 2 * m;
        let total: usize = grid_per_axis.pow(axes as u32);
        let coord = |sample: usize, axis: usize| -> f64 {
            let idx = (sample / grid_per_axis.pow(axis as u32)) % grid_per_axis;
            let half = region.half_extents[axis / 2];
            -half + 2.0 * half * idx as f64 / (grid_per_axis - 1) as f64
        };

        let evals: Vec<(Vec<Complex64>, f64)> = (0..total)
            .map(|s| {
                let moments: Vec<Complex64> = (0..m)
                    .map(|q| Complex64::new(coord(s, 2 * q), coord(s, 2 * q + 1)))
                    .collect();
                let disp = self
                    .displacement(pair, m, &moments, self.settings.steps)
                    .unwrap_or(f64::INFINITY);
                (moments, disp)
            })
            .collect();

        let failed = evals.iter().filter(|(_, d)| d.is_infinite()).count();
        let finite: Vec<&(Vec<Complex64>, f64)> =
            evals.iter().filter(|(_, d)| d.is_finite()).collect();
        if finite.is_empty() {
            return Err(Error::Budget("every sample diverged or failed".into()));
        }
        let (argmin, min_disp) = finite
            .iter()
            .map(|(mm, d)| (mm, *d))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(mm, d)| (mm.clone(), d))
            .unwrap();

        // every sampled point fixed ⇒ the flow is degenerate (ĥ constant)
        let max_disp = finite.iter().map(|(_, d)| *d).fold(0.0, f64::max);
        let degenerate = max_disp < self.settings.refined_threshold;

        let mut candidates = Vec::new();
        if !degenerate {
            for (mm, d) in finite.iter().filter(|(_, d)| *d < self.settings.candidate_threshold) {
                let (refined, rd) = self.refine_candidate(pair, m, mm, *d)?;
                if rd < self.settings.refined_threshold {
                    candidates.push(CandidateOrbit { moments: refined, displacement: rd });
                }
            }
        }
        candidates.sort_by(|a, b| a.displacement.partial_cmp(&b.displacement).unwrap());
        candidates.dedup_by(|a, b| {
            a.moments
                .iter()
                .zip(&b.moments)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
                < 0.05
        });

        Ok(SearchReport {
            samples: total,
            failed_samples: failed,
            min_displacement: min_disp,
            argmin_moments: argmin,
            max_displacement: max_disp,
            degenerate_all_fixed: degenerate,
            candidates,
        })
    }

    /// Local pattern-search refinement of a candidate fixed point.
    fn refine_candidate(
        &self,
        pair: &PeriodicPair,
        m: usize,
        start: &[Complex64],
        start_disp: f64,
    ) -> Result<(Vec<Complex64>, f64)> {
        let mut best = start.to_vec();
        let mut best_d = start_disp;
        let mut radius = 2.0 * self.settings.candidate_threshold;
        for _ in 0..8 {
            let mut improved = false;
            for q in 0..m {
                for dir in [
                    Complex64::new(radius, 0.0),
                    Complex64::new(-radius, 0.0),
                    Complex64::new(0.0, radius),
                    Complex64::new(0.0, -radius),
                ] {
                    let mut probe = best.clone();
                    probe[q] += dir;
                    let d = self
                        .displacement(pair, m, &probe, self.settings.steps)
                        .unwrap_or(f64::INFINITY);
                    if d < best_d {
                        best_d = d;
                        best = probe;
                        improved = true;
                    }
                }
            }
            if !improved {
                radius *= 0.5;
            }
            if best_d < 0.25 * self.settings.refined_threshold {
                break;
            }
        }
        Ok((best, best_d))
    }

    /// Floquet multipliers of the linearized return map at the symmetric
    /// all-zeros-coincident point, by central differences of the flow.
    pub fn linearized_monodromy(&self, pair: &PeriodicPair, m: usize) -> Result<FloquetResult> {
        // the symmetric point must be a fixed trajectory: ∂̄ĥ(0, t) ≈ 0
        let origin = vec![Complex64::new(0.0, 0.0); m];
        let mut grad_sup: f64 = 0.0;
        for k in 0..8 {
            let t = 2.0 * PI * k as f64 / 8.0;
            let dbar = self.dbar_h(m, &origin, pair.nu_at(t), pair.mu_at(t))?;
            grad_sup = grad_sup.max(dbar.iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
        if grad_sup > 5e-3 {
            return Err(Error::Precondition(format!(
                "symmetric point is not a fixed trajectory (sup |∂̄ĥ| = {grad_sup:.2e})"
            )));
        }

        let delta = 0.05;
        let dim = 2 * m;
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for axis in 0..dim {
            let mut plus = origin.clone();
            let mut minus = origin.clone();
            let bump = if axis % 2 == 0 {
                Complex64::new(delta, 0.0)
            } else {
                Complex64::new(0.0, delta)
            };
            plus[axis / 2] += bump;
            minus[axis / 2] -= bump;
            let fp =
                self.flow(pair, m, &ModuliPoint::from_moments(m, &plus)?, self.settings.steps)?;
            let fm =
                self.flow(pair, m, &ModuliPoint::from_moments(m, &minus)?, self.settings.steps)?;
            if fp.diverged_at.is_some() || fm.diverged_at.is_some() {
                return Err(Error::NonConvergence("linearization stencil diverged".into()));
            }
            let ep = fp.end_moments();
            let em = fm.end_moments();
            for q in 0..m {
                let dcol = (ep[q] - em[q]) / (2.0 * delta);
                jac[(2 * q, axis)] = dcol.re;
                jac[(2 * q + 1, axis)] = dcol.im;
            }
        }
        let eig = jac.complex_eigenvalues();
        Ok(FloquetResult {
            multipliers: eig.iter().copied().collect(),
            gradient_sup: grad_sup,
            return_map: jac,
        })
    }
}

/// Direct Gram at explicit (pairwise distinct) zeros.
pub fn gram_at_zeros(zeros: &[Complex64], solver: &PlanarSettings) -> Result<Vec<Complex64>> {
    let m = zeros.len();
    let sol = solve_planar(&VortexConfig::new(zeros.to_vec()), solver)?;
    // zero-motion directions for ∂/∂σ_p: δz = M⁻¹ e_p, M_{qj} = q z_j^{q−1}
    let mut mat = DMatrix::<Complex64>::zeros(m, m);
    for q in 0..m {
        for j in 0..m {
            mat[(q, j)] = zeros[j].powu(q as u32) * (q as f64 + 1.0);
        }
    }
    let lu = mat.lu();
    let mut pairs = Vec::with_capacity(m);
    for p in 0..m {
        let mut e = nalgebra::DVector::<Complex64>::zeros(m);
        e[p] = Complex64::new(1.0, 0.0);
        let dir = lu
            .solve(&e)
            .ok_or_else(|| Error::Degenerate("zero-motion Jacobian is singular".into()))?;
        let dirs: Vec<Complex64> = dir.iter().copied().collect();
        pairs.push(tangent_solve(&sol, &dirs)?);
    }
    let mut g = vec![Complex64::new(0.0, 0.0); m * m];
    for p in 0..m {
        for q in 0..m {
            g[p * m + q] = pair_inner(&sol.grid, &pairs[p], &pairs[q]);
        }
    }
    Ok(g)
}

/// Build the m = 2 symmetry-reduced tables from direct solves at centered
/// configurations (zeros ±a, s = 2a² real).
fn build_tables(solver: &PlanarSettings) -> Result<ReducedTables> {
    // nodes in y = |s|², denser near the diagonal
    let g_ys: Vec<f64> = vec![
        0.02, 0.06, 0.14, 0.28, 0.5, 0.85, 1.3, 1.9, 2.7, 3.8, 5.2, 7.0, 9.5, 12.5, 16.0,
    ];
    let p_ys: Vec<f64> = std::iter::once(0.0).chain(g_ys.iter().copied()).collect();
    let y_max: f64 = 16.0;

    let mut p_vals = Vec::with_capacity(p_ys.len());
    for &y in &p_ys {
        let a = (y.sqrt() / 2.0).sqrt(); // s = 2a² = √y
        let zeros = vec![Complex64::new(a, 0.0), Complex64::new(-a, 0.0)];
        let sol = solve_planar(&VortexConfig::new(zeros), solver)?;
        p_vals.push(hamiltonian_parts(&sol).0);
    }
    let p = Spline::new(p_ys.clone(), p_vals.clone());
    // linear-in-x tail: slope from the last two nodes
    let x_end = y_max.sqrt();
    let x_pre = p_ys[p_ys.len() - 2].sqrt();
    let slope = (p_vals[p_vals.len() - 1] - p_vals[p_vals.len() - 2]) / (x_end - x_pre);
    let p_end = (x_end, slope);

    let mut g1_vals = Vec::with_capacity(g_ys.len());
    let mut g2_vals = Vec::with_capacity(g_ys.len());
    for &y in &g_ys {
        let a = (y.sqrt() / 2.0).sqrt();
        let zeros = vec![Complex64::new(a, 0.0), Complex64::new(-a, 0.0)];
        let g = gram_at_zeros(&zeros, solver)?;
        g1_vals.push(g[0].re);
        g2_vals.push(g[3].re);
    }
    let g1 = Spline::new(g_ys.clone(), g1_vals);
    let g2 = Spline::new(g_ys, g2_vals);
    Ok(ReducedTables { p, g1, g2, y_max, p_end })
}

/// Box region in moment coordinates, centered at the origin.
#[derive(Clone, Debug)]
pub struct SearchRegion {
    pub half_extents: Vec<f64>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CandidateOrbit {
    #[serde(serialize_with = "ser_moments")]
    pub moments: Vec<Complex64>,
    pub displacement: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SearchReport {
    pub samples: usize,
    pub failed_samples: usize,
    pub min_displacement: f64,
    #[serde(serialize_with = "ser_moments")]
    pub argmin_moments: Vec<Complex64>,
    pub max_displacement: f64,
    /// Every sampled point fixed (trivial dynamics).
    pub degenerate_all_fixed: bool,
    pub candidates: Vec<CandidateOrbit>,
}

fn ser_moments<S: serde::Serializer>(
    v: &[Complex64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for c in v {
        seq.serialize_element(&(c.re, c.im))?;
    }
    seq.end()
}

#[derive(Clone, Debug)]
pub struct FloquetResult {
    pub multipliers: Vec<Complex64>,
    pub gradient_sup: f64,
    pub return_map: DMatrix<f64>,
}

fn raise(m: usize, g: &[Complex64], dbar: &[Complex64]) -> Result<Vec<Complex64>> {
    if m == 1 {
        if g[0].re <= 0.0 {
            return Err(Error::Degenerate("metric must be positive".into()));
        }
        return Ok(vec![dbar[0] / g[0].re]);
    }
    if m == 2 {
        let (a, b, c, d) = (g[0], g[1], g[2], g[3]);
        let det = a * d - b * c;
        if det.norm() < 1e-14 {
            return Err(Error::Degenerate("ill-conditioned Gram matrix".into()));
        }
        return Ok(vec![
            (d * dbar[0] - b * dbar[1]) / det,
            (-c * dbar[0] + a * dbar[1]) / det,
        ]);
    }
    let gm = DMatrix::<Complex64>::from_fn(m, m, |i, j| g[i * m + j]);
    let rhs = nalgebra::DVector::<Complex64>::from_iterator(m, dbar.iter().copied());
    let sol = gm
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("ill-conditioned Gram matrix".into()))?;
    Ok(sol.iter().copied().collect())
}

fn add(sigma: &[Complex64], k: &[Complex64], h: f64) -> Vec<Complex64> {
    sigma.iter().zip(k).map(|(s, v)| s + v * h).collect()
}

/// Verify moments↔zeros consistency of a point at strict tolerance.
pub fn check_point(point: &ModuliPoint) -> bool {
    let back = power_sums(&point.zeros, point.m);
    back.iter()
        .zip(&point.moments)
        .all(|(a, b)| (a - b).norm() < 1e-12 * (1.0 + b.norm()))
}
