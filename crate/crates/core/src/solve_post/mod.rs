//! Linear solve, error norms, energy-norm diagnostics and rate fits.

use crate::assembly::{eval_hybrid, AssembledSystem, BlockLayout, CsrMatrix};
use crate::error::{Error, Result};
use crate::geometry::{Manufactured, MetricAt, PatchGeometry, Region};
use crate::problem::Discretization;
use crate::splines::MultiIndex;
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{Matrix3, Vector2, Vector3};
use rayon::prelude::*;

/// Relative residual every solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A x = b` for symmetric positive definite `A` by sparse Cholesky
/// with a few steps of iterative refinement. Returns `x` and the relative
/// residual.
pub fn solve_linear(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: b.len() });
    }
    let bn = norm(b);
    if bn == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let upper: Vec<Triplet<usize, usize, f64>> =
        a.triplets().filter(|&(i, j, _)| i <= j).map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &upper)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let llt = mat.sp_cholesky(Side::Upper).map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let solve = |r: &[f64]| -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
        let x = llt.solve(&rhs);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(b);
    let residual = |x: &[f64]| -> Vec<f64> { a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
    let mut r = residual(&x);
    let mut rel = norm(&r) / bn;
    for _ in 0..4 {
        if rel <= RESIDUAL_TOLERANCE * 1e-2 {
            break;
        }
        let dx = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let rc = residual(&candidate);
        let relc = norm(&rc) / bn;
        if !(relc < rel) {
            break;
        }
        x = candidate;
        r = rc;
        rel = relc;
    }
    if !(rel <= RESIDUAL_TOLERANCE) {
        return Err(Error::Residual { residual: rel, tolerance: RESIDUAL_TOLERANCE });
    }
    Ok((x, rel))
}

/// Coefficients of the hybrid field and the two patch fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFields {
    pub hybrid: Vec<f64>,
    pub patches: [Vec<f64>; 2],
    pub residual: f64,
}

impl SolutionFields {
    pub fn from_vector(layout: &BlockLayout, x: &[f64], residual: f64) -> Self {
        Self {
            hybrid: x[layout.range(0)].to_vec(),
            patches: [x[layout.range(1)].to_vec(), x[layout.range(2)].to_vec()],
            residual,
        }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.hybrid.iter().chain(&self.patches[0]).chain(&self.patches[1]).copied().collect()
    }
}

pub fn solve(system: &AssembledSystem) -> Result<SolutionFields> {
    let (x, residual) = solve_linear(&system.matrix, &system.rhs)?;
    Ok(SolutionFields::from_vector(&system.layout, &x, residual))
}

/// L2 and H1-seminorm errors on one patch, measured on the mapped patch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PatchError {
    pub l2: f64,
    pub h1: f64,
}

/// Value and reference gradient of a discrete patch field.
type PatchSample = (f64, [f64; 2]);

/// Errors of an arbitrary patch function against the exact solution, lifted
/// to the exact geometry; the exact gradient is projected onto the tangent
/// plane of the perturbed patch.
pub fn patch_errors_of<F>(disc: &Discretization, patch: usize, exact: &Manufactured, approx: F) -> Result<PatchError>
where
    F: Fn(MultiIndex, [f64; 2]) -> Result<PatchSample> + Sync,
{
    let pd = &disc.patches[patch];
    let map = &pd.geometry.map;
    let parts = pd
        .mesh
        .cells()
        .par_iter()
        .map(|cell| {
            let (mut l2, mut h1) = (0.0, 0.0);
            for q in &cell.bulk {
                let (v, g) = approx(cell.index, q.x)?;
                let metric = MetricAt::new(map, q.x);
                let y = map.eval(q.x);
                let n = map.normal(q.x);
                let ge = exact.surface_gradient(&y)?;
                let ge = (Matrix3::identity() - n * n.transpose()) * ge;
                let dg = metric.surface_gradient(g) - ge;
                let w = q.w * metric.sqrt_det;
                l2 += w * (v - exact.value(&y)?).powi(2);
                h1 += w * dg.norm_squared();
            }
            Ok((l2, h1))
        })
        .collect::<Result<Vec<_>>>()?;
    let (l2, h1) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(PatchError { l2: l2.sqrt(), h1: h1.sqrt() })
}

fn patch_sampler<'a>(disc: &'a Discretization, sol: &'a SolutionFields, patch: usize) -> impl Fn(MultiIndex, [f64; 2]) -> Result<PatchSample> + Sync + 'a {
    let space = &disc.patches[patch].space;
    let coeffs = &sol.patches[patch];
    move |cell, x| {
        let f = space.eval_field_in_cell(coeffs, cell, &x, 1)?;
        let g = f.gradient();
        Ok((f.value(), [g[0], g[1]]))
    }
}

pub fn patch_errors(disc: &Discretization, sol: &SolutionFields, exact: &Manufactured) -> Result<[PatchError; 2]> {
    Ok([
        patch_errors_of(disc, 0, exact, patch_sampler(disc, sol, 0))?,
        patch_errors_of(disc, 1, exact, patch_sampler(disc, sol, 1))?,
    ])
}

/// Squared terms of the energy norm of the discretization error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyComponents {
    /// `|u_0|^2_{s_h,0}`.
    pub hybrid_stab: f64,
    /// `sum_i |grad (u_i - u)|^2`.
    pub gradient: f64,
    /// `sum_i |u_i|^2_{s_h,i}`.
    pub ghost: f64,
    /// `sum_i h |d_n (u_i - u)|^2` on the trim curves.
    pub flux: f64,
    /// `sum_i h^-1 |u_i - u_0|^2` on the trim curves.
    pub jump: f64,
}

impl EnergyComponents {
    pub fn total_squared(&self) -> f64 {
        self.hybrid_stab + self.gradient + self.ghost + self.flux + self.jump
    }

    pub fn total(&self) -> f64 {
        self.total_squared().sqrt()
    }
}

/// Energy-norm terms of `u_h - u`, with the exact solution's own
/// stabilization terms taken as zero. `exact = None` measures `u_h` itself.
pub fn energy_norm(
    disc: &Discretization,
    system: &AssembledSystem,
    sol: &SolutionFields,
    exact: Option<&Manufactured>,
) -> Result<EnergyComponents> {
    let h = system.params.h;
    let mut out = EnergyComponents {
        hybrid_stab: system.hybrid_stab.quadratic_form(&sol.hybrid).max(0.0),
        ghost: (0..2).map(|i| system.ghost[i].quadratic_form(&sol.patches[i]).max(0.0)).sum(),
        ..Default::default()
    };
    for i in 0..2 {
        let pd = &disc.patches[i];
        let map = &pd.geometry.map;
        out.gradient += match exact {
            Some(e) => patch_errors(disc, sol, e)?[i].h1.powi(2),
            None => patch_errors_of(disc, i, &Manufactured::Constant(0.0), patch_sampler(disc, sol, i))?.h1.powi(2),
        };
        for (cell, q) in pd.mesh.curve_points() {
            let f = pd.space.eval_field_in_cell(&sol.patches[i], cell, &q.x, 1)?;
            let metric = MetricAt::new(map, q.x);
            let n = Vector2::new(q.normal[0], q.normal[1]);
            let g = f.gradient();
            let scale = n.dot(&(metric.inverse * n)).sqrt();
            let mut dn = n.dot(&(metric.inverse * Vector2::new(g[0], g[1]))) / scale;
            let y = map.eval(q.x);
            if let Some(e) = exact {
                let conormal: Vector3<f64> = metric.jacobian * (metric.inverse * n) / scale;
                dn -= conormal.dot(&e.surface_gradient(&y)?);
            }
            let ds = q.w * metric.line_element([-q.normal[1], q.normal[0]]);
            let u0 = hybrid_value(disc, &sol.hybrid, &y)?;
            out.flux += h * ds * dn * dn;
            out.jump += ds * (f.value() - u0).powi(2) / h;
        }
    }
    Ok(out)
}

/// Hybrid field at a physical point.
pub fn hybrid_value(disc: &Discretization, coeffs: &[f64], y: &Vector3<f64>) -> Result<f64> {
    let b = eval_hybrid(&disc.hybrid, y, 0)?;
    Ok(b.dofs().iter().enumerate().map(|(k, &d)| coeffs[d] * b.value(k)).sum())
}

/// Spread of the hybrid field between matched points on the two perturbed
/// interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GapVariation {
    pub max: f64,
    pub mean: f64,
    pub pairs: usize,
}

/// Closest point to `y` on the mapped trim arc of a patch, searched over the
/// arc angle; `guess` wins ties so identical curves pair points with
/// themselves.
pub fn closest_on_arc(geometry: &PatchGeometry, y: &Vector3<f64>, guess: f64) -> Vector3<f64> {
    let (a, b) = geometry.arc_range();
    let at = |t: f64| geometry.map.eval(geometry.trim.arc_point(t));
    let dist = |t: f64| (at(t) - y).norm_squared();
    let samples = 64;
    let step = (b - a) / samples as f64;
    let k = (0..=samples).min_by(|&i, &j| dist(a + step * i as f64).total_cmp(&dist(a + step * j as f64))).unwrap_or(0);
    let (mut lo, mut hi) = ((a + step * (k as f64 - 1.0)).max(a), (a + step * (k as f64 + 1.0)).min(b));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - ratio * (hi - lo);
        let m2 = lo + ratio * (hi - lo);
        if dist(m1) < dist(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    if dist(guess) <= dist(t) {
        at(guess)
    } else {
        at(t)
    }
}

/// Pairs each of `pairs` points at uniform arc angle on the first interface
/// with its closest point on the second.
pub fn cross_gap_variation(disc: &Discretization, hybrid: &[f64], pairs: usize) -> Result<GapVariation> {
    let first = &disc.patches[0].geometry;
    let second = &disc.patches[1].geometry;
    let (a, b) = first.arc_range();
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for k in 0..pairs {
        let theta = a + (b - a) * (k as f64 + 0.5) / pairs as f64;
        let s1 = first.map.eval(first.trim.arc_point(theta));
        let s2 = closest_on_arc(second, &s1, theta);
        let d = (hybrid_value(disc, hybrid, &s1)? - hybrid_value(disc, hybrid, &s2)?).abs();
        max = max.max(d);
        sum += d;
    }
    Ok(GapVariation { max, mean: sum / pairs.max(1) as f64, pairs })
}

/// Number of matched pairs used by the studies.
pub const GAP_PAIRS: usize = 256;

/// Patch field at a reference point, `None` off the kept region.
pub fn sample_patch(disc: &Discretization, sol: &SolutionFields, patch: usize, x: [f64; 2]) -> Result<Option<f64>> {
    let pd = &disc.patches[patch];
    if !pd.geometry.trim.is_kept(x) {
        return Ok(None);
    }
    let cell = match pd.space.locate_active(&x) {
        Some(c) => c,
        None => return Ok(None),
    };
    Ok(Some(pd.space.eval_field_in_cell(&sol.patches[patch], cell, &x, 0)?.value()))
}

/// Slopes of `log e` against `log h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Slope between consecutive levels.
    pub pairwise: Vec<f64>,
    /// Least-squares slope over the fitted levels.
    pub fit: f64,
    /// Leading levels entering the fit.
    pub levels: usize,
}

fn check_series(h: &[f64], e: &[f64]) -> Result<()> {
    if h.len() != e.len() {
        return Err(Error::LengthMismatch { expected: h.len(), got: e.len() });
    }
    if h.len() < 2 {
        return Err(Error::InvalidParameter("rate fit needs at least two levels".into()));
    }
    if let Some(&bad) = e.iter().chain(h).find(|&&v| !(v > 0.0)) {
        return Err(Error::NonPositiveError(bad));
    }
    Ok(())
}

fn least_squares_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Pairwise slopes and a least-squares slope over all levels.
pub fn convergence_rates(h: &[f64], e: &[f64]) -> Result<RateFit> {
    check_series(h, e)?;
    let pairwise = h.windows(2).zip(e.windows(2)).map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect();
    Ok(RateFit { pairwise, fit: least_squares_slope(h, e), levels: h.len() })
}

/// Leading levels before the error stalls: each step must cut the error by
/// at least `(h_k / h_(k+1))^(p/2)`. Never fewer than two.
pub fn pre_plateau_levels(h: &[f64], e: &[f64], degree: usize) -> usize {
    let mut n = 1;
    for k in 0..h.len().saturating_sub(1) {
        let need = (h[k] / h[k + 1]).powf(degree as f64 / 2.0);
        if e[k] / e[k + 1] >= need {
            n = k + 2;
        } else {
            break;
        }
    }
    n.max(2).min(h.len())
}

/// Pairwise slopes over all levels, least-squares slope over the
/// pre-plateau levels only.
pub fn fitted_rates(h: &[f64], e: &[f64], degree: usize) -> Result<RateFit> {
    let all = convergence_rates(h, e)?;
    let n = pre_plateau_levels(h, e, degree);
    Ok(RateFit { pairwise: all.pairwise, fit: least_squares_slope(&h[..n], &e[..n]), levels: n })
}

/// All diagnostics of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub delta: f64,
    pub degree: usize,
    pub dofs: [usize; 3],
    pub patch: [PatchError; 2],
    pub energy: EnergyComponents,
    pub gap: GapVariation,
    pub residual: f64,
}

impl ErrorReport {
    pub fn l2(&self) -> f64 {
        self.patch.iter().map(|p| p.l2 * p.l2).sum::<f64>().sqrt()
    }

    pub fn h1(&self) -> f64 {
        self.patch.iter().map(|p| p.h1 * p.h1).sum::<f64>().sqrt()
    }
}

pub fn evaluate(disc: &Discretization, system: &AssembledSystem, sol: &SolutionFields) -> Result<ErrorReport> {
    let exact = &disc.setup.data;
    Ok(ErrorReport {
        h: disc.setup.h(),
        delta: disc.setup.delta,
        degree: disc.setup.degree(),
        dofs: system.layout.sizes,
        patch: patch_errors(disc, sol, exact)?,
        energy: energy_norm(disc, system, sol, Some(exact))?,
        gap: cross_gap_variation(disc, &sol.hybrid, GAP_PAIRS)?,
        residual: sol.residual,
    })
}

/// Assembles, solves and evaluates one discretization.
pub fn run_solve(disc: &Discretization) -> Result<(AssembledSystem, SolutionFields, ErrorReport)> {
    let system = crate::assembly::assemble_system(disc)?;
    let sol = solve(&system)?;
    let report = evaluate(disc, &system, &sol)?;
    Ok((system, sol, report))
}
