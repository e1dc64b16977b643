//! Direct-method (Hyers) iteration and the stabilization driver.
//!
//! Forward: `h_n(x) = q^{−n} f(q^n x)`; backward: `h_n(x) = q^{n} f(q^{−n} x)`,
//! with `q = r/s`. The driver iterates on a probe set until successive
//! iterates agree to `cauchy_tol`, extracts the limit operator from the images
//! of the canonical basis, and then measures how far the limit is from being
//! an exact solution and how far `f` is from the limit.

mod map;

use rayon::prelude::*;

pub use map::{FnMap, LinearOp, Map, Perturbation, PerturbedMap};

use crate::control::{
    check_summability, phi_tilde_bound, Certificate, ControlFunction, Direction, JensenParams,
};
use crate::error::{Error, Result};
use crate::seeded;
use crate::talg::{norm, AlgebraCtx, Element, Shape};

/// Arguments of the direct method are kept inside this range.
pub const SCALE_LIMIT: f64 = 1e100;

/// `(s x + t y) / r`, optionally rotated by a unimodular `mu`.
pub(crate) fn jensen_argument(
    params: &JensenParams,
    mu: num_complex::Complex64,
    x: &Element,
    y: &Element,
) -> Element {
    if mu == num_complex::Complex64::new(1.0, 0.0) {
        (&x.scale_re(params.s) + &y.scale_re(params.t)).scale_re(1.0 / params.r)
    } else {
        (&x.scale(mu * params.s) + &y.scale(mu * params.t)).scale_re(1.0 / params.r)
    }
}

/// `‖r f((s x + t y)/r) − s f(x) − t f(y)‖`.
pub fn jensen_residual(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    params: &JensenParams,
    x: &Element,
    y: &Element,
) -> Result<f64> {
    let z = jensen_argument(params, num_complex::Complex64::new(1.0, 0.0), x, y);
    let v = &(&f.apply(&z)?.scale_re(params.r) - &f.apply(x)?.scale_re(params.s))
        - &f.apply(y)?.scale_re(params.t);
    norm(ctx, &v)
}

/// `n`-th direct-method iterate at `x`.
pub fn hyers_step(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    params: &JensenParams,
    x: &Element,
    n: usize,
) -> Result<Element> {
    if n == 0 {
        return f.apply(x);
    }
    let nx = norm(ctx, x)?;
    let g = params.arg_scale(n);
    if nx > 0.0 {
        let scaled = g * nx;
        if !(scaled < SCALE_LIMIT && scaled > 1.0 / SCALE_LIMIT) {
            return Err(Error::ScaleOverflow {
                n,
                max_n: max_usable_n(params, nx),
            });
        }
    }
    Ok(f.apply(&x.scale_re(g))?.scale_re(1.0 / g))
}

fn max_usable_n(params: &JensenParams, nx: f64) -> usize {
    let step = params.arg_scale(1);
    let bound = if step > 1.0 { SCALE_LIMIT } else { 1.0 / SCALE_LIMIT };
    let n = ((bound / nx).ln() / step.ln()).floor();
    if n.is_finite() && n > 0.0 {
        n as usize
    } else {
        0
    }
}

/// The direct-method iterate at a fixed step, viewed as a map.
pub struct LimitMap<'a> {
    ctx: AlgebraCtx,
    f: &'a dyn Map,
    params: JensenParams,
    n: usize,
}

impl<'a> LimitMap<'a> {
    pub fn new(ctx: AlgebraCtx, f: &'a dyn Map, params: JensenParams, n: usize) -> Self {
        LimitMap { ctx, f, params, n }
    }

    pub fn step(&self) -> usize {
        self.n
    }
}

impl Map for LimitMap<'_> {
    fn shape(&self) -> Shape {
        self.f.shape()
    }
    fn apply(&self, x: &Element) -> Result<Element> {
        hyers_step(&self.ctx, self.f, &self.params, x, self.n)
    }
}

#[derive(Debug, Clone)]
pub struct StabilizeOptions {
    pub cauchy_tol: f64,
    pub n_max: usize,
    /// Extra seeded points on which residuals are evaluated.
    pub random_points: usize,
    pub seed: u64,
    pub tail_tol: f64,
    /// Relative slack allowed on the `‖f − h‖ ≤ φ̃` bound.
    pub slack: f64,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        StabilizeOptions {
            cauchy_tol: 1e-10,
            n_max: 200,
            random_points: 100,
            seed: 0,
            tail_tol: 1e-12,
            slack: 1e-6,
        }
    }
}

/// 16 seeded elements cycling through norms `0.1, 1, 10`.
pub fn default_probes(ctx: &AlgebraCtx, shape: Shape, seed: u64) -> Result<Vec<Element>> {
    sample_points(ctx, shape, seed, 16, &[0.1, 1.0, 10.0])
}

/// `count` seeded elements whose norms cycle through `scales`.
pub fn sample_points(
    ctx: &AlgebraCtx,
    shape: Shape,
    seed: u64,
    count: usize,
    scales: &[f64],
) -> Result<Vec<Element>> {
    let mut rng = seeded::rng(seed);
    (0..count)
        .map(|i| seeded::element_with_norm(ctx, shape, scales[i % scales.len()], &mut rng))
        .collect()
}

/// Outcome of iterating the direct method on a point set.
#[derive(Debug, Clone)]
pub struct CauchyRun {
    /// First step at which every point moved by less than the tolerance.
    pub n_star: Option<usize>,
    /// `max_i ‖h_n(x_i) − h_{n−1}(x_i)‖` for `n = 1, 2, …`.
    pub gaps: Vec<f64>,
    /// Iterates at the last step reached.
    pub values: Vec<Element>,
    pub diagnostic: Option<String>,
}

pub fn iterate_until_cauchy(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    params: &JensenParams,
    points: &[Element],
    cauchy_tol: f64,
    n_max: usize,
) -> Result<CauchyRun> {
    let mut prev: Vec<Element> = points.iter().map(|x| f.apply(x)).collect::<Result<_>>()?;
    let mut gaps = Vec::new();
    for n in 1..=n_max {
        let cur: Result<Vec<Element>> = points
            .par_iter()
            .map(|x| hyers_step(ctx, f, params, x, n))
            .collect();
        let cur = match cur {
            Ok(c) => c,
            Err(Error::ScaleOverflow { max_n, .. }) => {
                return Ok(CauchyRun {
                    n_star: None,
                    gaps,
                    values: prev,
                    diagnostic: Some(format!(
                        "no convergence before the scale guard: largest usable n is {max_n}"
                    )),
                })
            }
            Err(e) => return Err(e),
        };
        let step_gaps = cur
            .par_iter()
            .zip(&prev)
            .map(|(a, b)| norm(ctx, &(a - b)))
            .collect::<Result<Vec<f64>>>()?;
        // sequential reduction keeps the result independent of scheduling
        let gap = step_gaps.iter().fold(0.0_f64, |m, &g| m.max(g));
        gaps.push(gap);
        prev = cur;
        if gap < cauchy_tol {
            return Ok(CauchyRun {
                n_star: Some(n),
                gaps,
                values: prev,
                diagnostic: None,
            });
        }
    }
    Ok(CauchyRun {
        n_star: None,
        gaps,
        values: prev,
        diagnostic: Some(format!(
            "Cauchy gap still above {cauchy_tol:e} after n_max = {n_max} steps"
        )),
    })
}

/// Limit operator from the images of the canonical basis (plus `extra`
/// points that only influence when the iteration stops).
pub fn limit_operator(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    params: &JensenParams,
    extra: &[Element],
    cauchy_tol: f64,
    n_max: usize,
) -> Result<(Option<LinearOp>, CauchyRun)> {
    let shape = f.shape();
    let mut points: Vec<Element> = (0..shape.len()).map(|j| Element::basis(shape, j)).collect();
    points.extend_from_slice(extra);
    let run = iterate_until_cauchy(ctx, f, params, &points, cauchy_tol, n_max)?;
    let h = match run.n_star {
        Some(_) => Some(LinearOp::from_columns(shape, &run.values[..shape.len()])?),
        None => None,
    };
    Ok((h, run))
}

#[derive(Debug, Clone)]
pub struct StabilizationReport {
    /// Limit operator; `None` when the iteration did not converge.
    pub h: Option<LinearOp>,
    pub direction: Direction,
    pub n_star: Option<usize>,
    /// Gap at the last step.
    pub cauchy_gap: f64,
    pub cauchy_curve: Vec<f64>,
    /// `φ̃(x, x, 0)` at `‖x‖ = 1`.
    pub bound: f64,
    pub max_fh_gap: f64,
    /// `max ‖f(x) − h(x)‖ / φ̃(x, x, 0)`.
    pub max_bound_ratio: f64,
    pub max_additivity_residual: f64,
    pub max_jensen_residual_of_h: f64,
    pub homogeneity_residual: f64,
    /// `max ‖h(x) − H x‖`: pointwise limit vs. extracted operator.
    pub linear_fit_residual: f64,
    pub points_checked: usize,
    pub pass: bool,
    pub failures: Vec<String>,
}

impl StabilizationReport {
    /// The pointwise limit at the convergence step.
    pub fn limit_map<'a>(&self, ctx: &AlgebraCtx, f: &'a dyn Map, params: &JensenParams) -> Option<LimitMap<'a>> {
        self.n_star.map(|n| LimitMap::new(*ctx, f, *params, n))
    }
}

/// Runs the direct method for a certified `(f, cf, params)` and measures the
/// resulting limit.
pub fn stabilize(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    params: &JensenParams,
    cf: &ControlFunction,
    cert: &Certificate,
    probes: &[Element],
    opts: &StabilizeOptions,
) -> Result<StabilizationReport> {
    if !cert.covers(cf, params) {
        return Err(Error::NotCertified);
    }
    if probes.is_empty() {
        return Err(Error::InvalidParams("stabilize needs at least one probe".into()));
    }
    check_summability(cf, params)?;
    let shape = f.shape();
    let bound_unit = phi_tilde_bound(cf, params, 1.0, opts.tail_tol)?;
    let (h_op, run) = limit_operator(ctx, f, params, probes, opts.cauchy_tol, opts.n_max)?;
    let cauchy_gap = run.gaps.last().copied().unwrap_or(0.0);
    let (h_op, n_star) = match (h_op, run.n_star) {
        (Some(h), Some(n)) => (h, n),
        _ => {
            return Ok(StabilizationReport {
                h: None,
                direction: params.direction,
                n_star: None,
                cauchy_gap,
                cauchy_curve: run.gaps,
                bound: bound_unit,
                max_fh_gap: f64::NAN,
                max_bound_ratio: f64::NAN,
                max_additivity_residual: f64::NAN,
                max_jensen_residual_of_h: f64::NAN,
                homogeneity_residual: f64::NAN,
                linear_fit_residual: f64::NAN,
                points_checked: 0,
                pass: false,
                failures: run.diagnostic.into_iter().collect(),
            })
        }
    };
    let h = LimitMap::new(*ctx, f, *params, n_star);
    let tol = opts.cauchy_tol;
    let q = params.q();

    let mut points: Vec<Element> = probes.to_vec();
    points.extend(sample_points(
        ctx,
        shape,
        seeded::derive_seed(opts.seed, "stabilize-points"),
        opts.random_points,
        &[0.1, 1.0, 10.0],
    )?);

    struct PointStats {
        fh_gap: f64,
        ratio: f64,
        fit: f64,
    }
    let stats = points
        .par_iter()
        .map(|x| -> Result<PointStats> {
            let hx = h.apply(x)?;
            let fh_gap = norm(ctx, &(&f.apply(x)? - &hx))?;
            let nx = norm(ctx, x)?;
            let b = phi_tilde_bound(cf, params, nx, opts.tail_tol)?;
            let ratio = if b > 0.0 {
                fh_gap / b
            } else if fh_gap > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            let fit = norm(ctx, &(&hx - &h_op.apply(x)?))?;
            Ok(PointStats { fh_gap, ratio, fit })
        })
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(usize, usize)> = (0..points.len()).map(|i| (i, (i + 1) % points.len())).collect();
    struct PairStats {
        add: f64,
        add_ok: bool,
        jensen: f64,
        jensen_ok: bool,
    }
    let pair_stats = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<PairStats> {
            let (x, y) = (&points[i], &points[j]);
            let scale = 1.0 + norm(ctx, x)? + norm(ctx, y)?;
            let hx = h.apply(x)?;
            let hy = h.apply(y)?;
            let add = norm(ctx, &(&(&h.apply(&(x + y))? - &hx) - &hy))?;
            let jensen = jensen_residual(ctx, &h, params, x, y)?;
            Ok(PairStats {
                add,
                add_ok: add <= 10.0 * tol * scale,
                jensen,
                jensen_ok: jensen <= 10.0 * tol * (params.r + params.s + params.t) * scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let homog = probes
        .par_iter()
        .map(|x| -> Result<f64> {
            let lhs = h.apply(&x.scale_re(q))?;
            let rhs = h.apply(x)?.scale_re(q);
            norm(ctx, &(&lhs - &rhs))
        })
        .collect::<Result<Vec<f64>>>()?;

    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, f64::max);
    let max_fh_gap = max(&mut stats.iter().map(|s| s.fh_gap));
    let max_bound_ratio = max(&mut stats.iter().map(|s| s.ratio));
    let linear_fit_residual = max(&mut stats.iter().map(|s| s.fit));
    let max_additivity_residual = max(&mut pair_stats.iter().map(|s| s.add));
    let max_jensen_residual_of_h = max(&mut pair_stats.iter().map(|s| s.jensen));
    let homogeneity_residual = max(&mut homog.iter().copied());

    let mut failures = Vec::new();
    if max_bound_ratio > 1.0 + opts.slack {
        failures.push(format!(
            "‖f − h‖ exceeds φ̃(x,x,0): worst ratio {max_bound_ratio:e}"
        ));
    }
    if pair_stats.iter().any(|s| !s.add_ok) {
        failures.push(format!(
            "additivity residual {max_additivity_residual:e} above 10·cauchy_tol·(1+‖x‖+‖y‖)"
        ));
    }
    if pair_stats.iter().any(|s| !s.jensen_ok) {
        failures.push(format!(
            "Jensen residual of h {max_jensen_residual_of_h:e} above tolerance"
        ));
    }
    let homog_tol = 10.0 * tol * q.max(1.0);
    if homogeneity_residual > homog_tol {
        failures.push(format!(
            "homogeneity residual {homogeneity_residual:e} above {homog_tol:e}"
        ));
    }

    Ok(StabilizationReport {
        h: Some(h_op),
        direction: params.direction,
        n_star: Some(n_star),
        cauchy_gap,
        cauchy_curve: run.gaps,
        bound: bound_unit,
        max_fh_gap,
        max_bound_ratio,
        max_additivity_residual,
        max_jensen_residual_of_h,
        homogeneity_residual,
        linear_fit_residual,
        points_checked: points.len(),
        pass: failures.is_empty(),
        failures,
    })
}

#[derive(Debug, Clone)]
pub struct BoundCheck {
    /// `max (‖f(x) − H x‖ − φ̃(x, x, 0))`; negative means satisfied with margin.
    pub max_violation: f64,
    /// Point attaining a positive violation.
    pub witness: Option<Element>,
}

/// Samples points across norm scales and measures how far `‖f(x) − H x‖`
/// rises above `φ̃(x, x, 0)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_bound(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    report: &StabilizationReport,
    cf: &ControlFunction,
    params: &JensenParams,
    sample_count: usize,
    seed: u64,
    tail_tol: f64,
) -> Result<BoundCheck> {
    let h = report
        .h
        .as_ref()
        .ok_or_else(|| Error::Refused("report has no limit operator".into()))?;
    let points = sample_points(ctx, f.shape(), seed, sample_count, &[0.1, 1.0, 10.0, 100.0])?;
    let viol = points
        .par_iter()
        .map(|x| -> Result<f64> {
            let gap = norm(ctx, &(&f.apply(x)? - &h.apply(x)?))?;
            Ok(gap - phi_tilde_bound(cf, params, norm(ctx, x)?, tail_tol)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (imax, max_violation) = viol
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(BoundCheck {
        max_violation,
        witness: (max_violation > 0.0).then(|| points[imax].clone()),
    })
}

/// Stabilizes with a different probe set per seed and returns the largest
/// pairwise column distance between the extracted operators.
pub fn uniqueness_probe(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    params: &JensenParams,
    cf: &ControlFunction,
    cert: &Certificate,
    seeds: &[u64],
    opts: &StabilizeOptions,
) -> Result<f64> {
    if seeds.len() < 2 {
        return Err(Error::InvalidParams("uniqueness probe needs at least two seeds".into()));
    }
    let mut ops = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let probes = default_probes(ctx, f.shape(), seed)?;
        let o = StabilizeOptions {
            seed,
            ..opts.clone()
        };
        let rep = stabilize(ctx, f, params, cf, cert, &probes, &o)?;
        match rep.h {
            Some(h) if rep.pass => ops.push(h),
            _ => {
                return Err(Error::Refused(format!(
                    "stabilization with seed {seed} failed: {}",
                    rep.failures.join("; ")
                )))
            }
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            worst = worst.max(ops[i].column_distance(&ops[j]));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{certify_control, CertifyOptions};

    fn setup(pert: Perturbation) -> (AlgebraCtx, PerturbedMap) {
        let ctx = AlgebraCtx::new(2).unwrap();
        let mut rng = seeded::rng(5);
        let l = seeded::gaussian_element(Shape::Matrix(2), &mut rng);
        (ctx, PerturbedMap::new(ctx, Shape::Matrix(2), l, pert).unwrap())
    }

    #[test]
    fn step_zero_is_f() {
        let (ctx, f) = setup(Perturbation::Power { eps0: 0.1, p: 0.5, seed: 1 });
        let x = Element::real_diag(&[0.3, -1.2]);
        let p = JensenParams::jensen();
        assert_eq!(hyers_step(&ctx, &f, &p, &x, 0).unwrap(), f.apply(&x).unwrap());
    }

    #[test]
    fn power_deviation_decays_like_q_power() {
        // q^{-n} · ε₀ · (q^n)^p = ε₀ q^{n(p−1)} at ‖x‖ = 1
        let (ctx, f) = setup(Perturbation::Power { eps0: 0.1, p: 0.5, seed: 1 });
        let x = Element::identity(2);
        let p = JensenParams::jensen();
        let lx = f.base().matmul(&x).unwrap();
        for n in [1, 5, 20] {
            let d = norm(&ctx, &(&hyers_step(&ctx, &f, &p, &x, n).unwrap() - &lx)).unwrap();
            let expected = 0.1 * 2f64.powf(-(n as f64) / 2.0);
            assert!((d - expected).abs() < 1e-10, "n = {n}: {d} vs {expected}");
        }
    }

    #[test]
    fn scale_overflow_names_max_n() {
        let (ctx, f) = setup(Perturbation::None);
        let p = JensenParams::jensen();
        let x = Element::identity(2);
        match hyers_step(&ctx, &f, &p, &x, 400) {
            Err(Error::ScaleOverflow { n, max_n }) => {
                assert_eq!(n, 400);
                assert_eq!(max_n, 332); // 2^332 < 1e100 < 2^333
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn linear_residual_vanishes() {
        let (ctx, f) = setup(Perturbation::None);
        let p = JensenParams::new(3.0, 1.5, 0.7, Direction::Forward).unwrap();
        let x = Element::real_diag(&[1.0, 2.0]);
        let y = Element::identity(2);
        assert!(jensen_residual(&ctx, &f, &p, &x, &y).unwrap() < 1e-12 * 10.0);
        let z = Element::zeros(Shape::Matrix(2));
        assert_eq!(jensen_residual(&ctx, &f, &p, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn stabilize_refuses_uncovered_certificate() {
        let (ctx, f) = setup(Perturbation::None);
        let p = JensenParams::jensen();
        let cf = ControlFunction::power(1.0, 0.5);
        let cert = certify_control(&ctx, &f, &cf, &p, &CertifyOptions::new(8, 1))
            .unwrap()
            .certificate()
            .unwrap();
        let other = ControlFunction::power(2.0, 0.5);
        let probes = default_probes(&ctx, f.shape(), 1).unwrap();
        assert!(matches!(
            stabilize(&ctx, &f, &p, &other, &cert, &probes, &StabilizeOptions::default()),
            Err(Error::NotCertified)
        ));
    }
}
