//! Ternary Jordan homomorphism and derivation residuals, the coupled
//! inequalities, superstability and spanning-set checks.
//!
//! All brackets are the ternary product `[x, y, z] = x y* z` of [`crate::talg`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::control::{ControlFamily, ControlFunction, Direction, JensenParams};
use crate::error::{Error, Result};
use crate::hyers::{jensen_argument, limit_operator, Map};
use crate::talg::{norm, tern_product, AlgebraCtx, Element};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphismKind {
    JordanHom,
    JordanDer,
    FullHom,
    FullDer,
}

impl MorphismKind {
    pub fn is_hom(self) -> bool {
        matches!(self, MorphismKind::JordanHom | MorphismKind::FullHom)
    }
}

/// `[f(a), f(a), f(a)]` or `[f(a),a,a] + [a,f(a),a] + [a,a,f(a)]`.
fn bracket_image(ctx: &AlgebraCtx, kind: MorphismKind, a: &Element, fa: &Element) -> Result<Element> {
    if kind.is_hom() {
        tern_product(ctx, fa, fa, fa)
    } else {
        let t1 = tern_product(ctx, fa, a, a)?;
        let t2 = tern_product(ctx, a, fa, a)?;
        let t3 = tern_product(ctx, a, a, fa)?;
        Ok(&(&t1 + &t2) + &t3)
    }
}

/// `‖f([a,a,a]) − [f(a), f(a), f(a)]‖`.
pub fn hom_residual(ctx: &AlgebraCtx, f: &dyn Map, a: &Element) -> Result<f64> {
    let cube = tern_product(ctx, a, a, a)?;
    let fa = f.apply(a)?;
    norm(ctx, &(&f.apply(&cube)? - &bracket_image(ctx, MorphismKind::JordanHom, a, &fa)?))
}

/// `‖f([a,a,a]) − [f(a),a,a] − [a,f(a),a] − [a,a,f(a)]‖`.
pub fn der_residual(ctx: &AlgebraCtx, f: &dyn Map, a: &Element) -> Result<f64> {
    let cube = tern_product(ctx, a, a, a)?;
    let fa = f.apply(a)?;
    norm(ctx, &(&f.apply(&cube)? - &bracket_image(ctx, MorphismKind::JordanDer, a, &fa)?))
}

/// `‖f([x,y,z]) − [f(x), f(y), f(z)]‖`.
pub fn full_hom_residual(ctx: &AlgebraCtx, f: &dyn Map, x: &Element, y: &Element, z: &Element) -> Result<f64> {
    let lhs = f.apply(&tern_product(ctx, x, y, z)?)?;
    let rhs = tern_product(ctx, &f.apply(x)?, &f.apply(y)?, &f.apply(z)?)?;
    norm(ctx, &(&lhs - &rhs))
}

/// `‖f([x,y,z]) − [f(x),y,z] − [x,f(y),z] − [x,y,f(z)]‖`.
pub fn full_der_residual(ctx: &AlgebraCtx, f: &dyn Map, x: &Element, y: &Element, z: &Element) -> Result<f64> {
    let lhs = f.apply(&tern_product(ctx, x, y, z)?)?;
    let t1 = tern_product(ctx, &f.apply(x)?, y, z)?;
    let t2 = tern_product(ctx, x, &f.apply(y)?, z)?;
    let t3 = tern_product(ctx, x, y, &f.apply(z)?)?;
    norm(ctx, &(&(&(&lhs - &t1) - &t2) - &t3))
}

/// Residual of the coupled inequality
/// `‖r f((μ s x + μ t y + [a,a,a]) / r) − μ s f(x) − μ t f(y) − B(a)‖`
/// where `B(a)` is the homomorphism or derivation bracket.
#[allow(clippy::too_many_arguments)]
pub fn coupled_residual(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    params: &JensenParams,
    mu: Complex64,
    x: &Element,
    y: &Element,
    a: &Element,
    kind: MorphismKind,
) -> Result<f64> {
    if (mu.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("mu must be unimodular, |mu| = {}", mu.norm())));
    }
    let mut z = jensen_argument(params, mu, x, y);
    if !a.is_zero() {
        z = &z + &tern_product(ctx, a, a, a)?.scale_re(1.0 / params.r);
    }
    let (fx, fy) = (f.apply(x)?, f.apply(y)?);
    let (fx, fy) = if mu == Complex64::new(1.0, 0.0) {
        (fx.scale_re(params.s), fy.scale_re(params.t))
    } else {
        (fx.scale(mu * params.s), fy.scale(mu * params.t))
    };
    let v = &(&f.apply(&z)?.scale_re(params.r) - &fx) - &fy;
    let v = if a.is_zero() {
        v
    } else {
        &v - &bracket_image(ctx, kind, a, &f.apply(a)?)?
    };
    norm(ctx, &v)
}

fn morphism_residual(ctx: &AlgebraCtx, f: &dyn Map, a: &Element, kind: MorphismKind) -> Result<f64> {
    if kind.is_hom() {
        hom_residual(ctx, f, a)
    } else {
        der_residual(ctx, f, a)
    }
}

/// `ε` for which `ε (‖x‖^p + ‖y‖^p + ‖a‖^{m p})` majorizes the coupled
/// residual of `jordan_near_hom`/`jordan_near_der` for all `‖a‖ ≤ a_max`.
///
/// The linear part cancels exactly. What remains is `r δ(z)`, `s δ(x)`,
/// `t δ(y)` and the bracket of `δ(a)` against the exact part, bounded term by
/// term with `(α + β + γ)^p ≤ α^p + β^p + γ^p`, so `0 ≤ p < 1` is required.
pub fn coupled_majorant_eps(
    params: &JensenParams,
    kind: MorphismKind,
    eps0: f64,
    p: f64,
    m: u32,
    a_max: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("coupled majorant needs 0 <= p < 1, got {p}")));
    }
    let (r, s, t) = (params.r, params.s, params.t);
    let mp = p * f64::from(m);
    let exps = [3.0 * p - mp, 2.0 + p - mp, 1.0 + 2.0 * p - mp];
    if exps.iter().any(|&e| e < 0.0) {
        return Err(Error::Domain(format!(
            "a-exponent m·p = {mp} outgrows the bracket terms; the majorant would blow up near a = 0"
        )));
    }
    let c_x = r.powf(1.0 - p) * s.powf(p) + s;
    let c_y = r.powf(1.0 - p) * t.powf(p) + t;
    let mut c_a = r.powf(1.0 - p) * a_max.powf(exps[0]) + 3.0 * a_max.powf(exps[1]);
    if kind.is_hom() {
        c_a += 3.0 * eps0 * a_max.powf(exps[2]) + eps0 * eps0 * a_max.powf(exps[0]);
    }
    Ok(eps0 * c_x.max(c_y).max(c_a))
}

#[derive(Debug, Clone)]
pub struct SuperstabilityReport {
    /// `(n, max_a q^{−3n} R(q^n a) / ‖a‖³)` where `R` is the bracket defect
    /// `‖r h([b,b,b]/r) − B(b)‖`.
    pub residual_curve: Vec<(usize, f64)>,
    /// `max_a` of the hom/der residual of `h` at `a`, divided by `‖a‖³`.
    pub final_residual: f64,
    pub pass: bool,
}

pub const SUPERSTABILITY_TOL: f64 = 1e-8;

/// Checks that a `q`-homogeneous `h` is an exact Jordan morphism by tracking
/// the cubically rescaled bracket defect along `a, q a, q² a, …`.
#[allow(clippy::too_many_arguments)]
pub fn superstability_check(
    ctx: &AlgebraCtx,
    h: &dyn Map,
    params: &JensenParams,
    cf: &ControlFunction,
    kind: MorphismKind,
    n_max: usize,
    a_samples: &[Element],
) -> Result<SuperstabilityReport> {
    if a_samples.is_empty() {
        return Err(Error::InvalidParams("superstability needs a-samples".into()));
    }
    let q = params.q();
    if params.direction != Direction::Forward || q <= 1.0 {
        return Err(Error::Refused(format!(
            "superstability scaling needs the forward direction with r/s > 1, got r/s = {q}"
        )));
    }
    // the Jensen part needs q^{-n} φ(q^n x, q^n y, 0) → 0 and the bracket part
    // q^{-3n} φ(0, 0, q^n a) → 0
    if let ControlFamily::Power { p, m } = cf.family {
        let mp = p * f64::from(m);
        if !(p < 1.0 && mp < 3.0) {
            return Err(Error::Refused(format!(
                "control does not vanish under rescaling: needs p < 1 and m·p < 3, got p = {p}, m·p = {mp}"
            )));
        }
    }
    for a in a_samples {
        let lhs = h.apply(&a.scale_re(q))?;
        let rhs = h.apply(a)?.scale_re(q);
        let defect = norm(ctx, &(&lhs - &rhs))?;
        let scale = 1.0_f64.max(q * norm(ctx, a)?);
        if defect > 1e-10 * scale {
            return Err(Error::Refused(format!(
                "h is not (r/s)-homogeneous: ‖h(qa) − q h(a)‖ = {defect:e} at ‖a‖ = {}",
                norm(ctx, a)?
            )));
        }
    }
    let mut norms = Vec::with_capacity(a_samples.len());
    for a in a_samples {
        let na = norm(ctx, a)?;
        if na == 0.0 {
            return Err(Error::InvalidParams("a-samples must be nonzero".into()));
        }
        norms.push(na);
    }
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let mut curve = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let g = q.powi(n as i32);
        if (g * max_norm).powi(3) >= crate::hyers::SCALE_LIMIT {
            break;
        }
        let mut worst = 0.0_f64;
        for (a, na) in a_samples.iter().zip(&norms) {
            let b = a.scale_re(g);
            let cube = tern_product(ctx, &b, &b, &b)?;
            let lhs = h.apply(&cube.scale_re(1.0 / params.r))?.scale_re(params.r);
            let hb = h.apply(&b)?;
            let d = norm(ctx, &(&lhs - &bracket_image(ctx, kind, &b, &hb)?))?;
            worst = worst.max(d / g.powi(3) / na.powi(3));
        }
        curve.push((n, worst));
    }
    let mut final_residual = 0.0_f64;
    for (a, na) in a_samples.iter().zip(&norms) {
        final_residual = final_residual.max(morphism_residual(ctx, h, a, kind)? / na.powi(3));
    }
    let tail = curve.last().map(|c| c.1).unwrap_or(f64::INFINITY);
    Ok(SuperstabilityReport {
        pass: tail < SUPERSTABILITY_TOL && final_residual < SUPERSTABILITY_TOL,
        residual_curve: curve,
        final_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanWitness {
    pub s1: usize,
    pub s2: usize,
    pub a: usize,
    pub n: usize,
    pub defect: f64,
}

#[derive(Debug, Clone)]
pub struct SpanningReport {
    /// Worst defect of the spanning hypothesis, divided by
    /// `q^{2n} ‖s₁‖ ‖s₂‖ ‖a‖`.
    pub hypothesis_residual: f64,
    /// Worst hom/der residual of the limit operator, divided by `‖a‖³`.
    pub conclusion_residual: f64,
    pub witness: Option<SpanWitness>,
    pub n_star: Option<usize>,
}

/// Rank of a set of elements viewed as vectors.
pub fn span_rank(set: &[Element]) -> usize {
    if set.is_empty() {
        return 0;
    }
    let rows = set[0].shape().len();
    let cols = set.len();
    let mut m: Vec<Vec<Complex64>> = (0..rows)
        .map(|i| set.iter().map(|e| e.as_slice()[i]).collect())
        .collect();
    let scale = set.iter().map(|e| e.frobenius_norm()).fold(0.0, f64::max);
    let eps = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for c in 0..cols {
        let pivot = (rank..rows).max_by(|&i, &j| m[i][c].norm().total_cmp(&m[j][c].norm()));
        let Some(pr) = pivot else { break };
        if m[pr][c].norm() <= eps {
            continue;
        }
        m.swap(rank, pr);
        let (top, rest) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in rest.iter_mut() {
            let factor = row[c] / pivot_row[c];
            for (x, v) in row[c..cols].iter_mut().zip(&pivot_row[c..cols]) {
                *x -= factor * v;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Checks the spanning-set hypothesis for `f` and the Jordan conclusion for
/// its limit operator.
#[allow(clippy::too_many_arguments)]
pub fn spanning_check(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    params: &JensenParams,
    span_set: &[Element],
    n_list: &[usize],
    a_samples: &[Element],
    kind: MorphismKind,
    cauchy_tol: f64,
    n_max: usize,
) -> Result<SpanningReport> {
    let shape = f.shape();
    if !shape.is_matrix() {
        return Err(Error::VectorMode(shape));
    }
    if n_list.is_empty() || a_samples.is_empty() {
        return Err(Error::InvalidParams("spanning check needs n values and a-samples".into()));
    }
    let rank = span_rank(span_set);
    if rank < shape.len() {
        return Err(Error::Refused(format!(
            "span set has rank {rank}, needs {} to span the algebra",
            shape.len()
        )));
    }
    let q = params.q();
    let mut hypothesis_residual = 0.0_f64;
    let mut witness = None;
    for &n in n_list {
        let g = q.powi(n as i32);
        for (i1, s1) in span_set.iter().enumerate() {
            let gs1 = s1.scale_re(g);
            let fs1 = f.apply(&gs1)?;
            for (i2, s2) in span_set.iter().enumerate() {
                let gs2 = s2.scale_re(g);
                let fs2 = f.apply(&gs2)?;
                for (ia, a) in a_samples.iter().enumerate() {
                    let lhs = f.apply(&tern_product(ctx, s1, s2, a)?.scale_re(g * g))?;
                    let rhs = if kind.is_hom() {
                        tern_product(ctx, &fs1, &fs2, &f.apply(a)?)?
                    } else {
                        let t1 = tern_product(ctx, &fs1, &gs2, a)?;
                        let t2 = tern_product(ctx, &gs1, &fs2, a)?;
                        let t3 = tern_product(ctx, &gs1, &gs2, &f.apply(a)?)?;
                        &(&t1 + &t2) + &t3
                    };
                    let scale = g * g * norm(ctx, s1)? * norm(ctx, s2)? * norm(ctx, a)?;
                    let d = norm(ctx, &(&lhs - &rhs))? / scale.max(f64::MIN_POSITIVE);
                    if d > hypothesis_residual {
                        hypothesis_residual = d;
                        witness = Some(SpanWitness {
                            s1: i1,
                            s2: i2,
                            a: ia,
                            n,
                            defect: d,
                        });
                    }
                }
            }
        }
    }
    let (h, run) = limit_operator(ctx, f, params, a_samples, cauchy_tol, n_max)?;
    let conclusion_residual = match &h {
        Some(h) => {
            let mut worst = 0.0_f64;
            for a in a_samples {
                let na = norm(ctx, a)?;
                worst = worst.max(morphism_residual(ctx, h, a, kind)? / na.powi(3));
            }
            worst
        }
        None => f64::INFINITY,
    };
    Ok(SpanningReport {
        hypothesis_residual,
        conclusion_residual,
        witness,
        n_star: run.n_star,
    })
}

/// `count` seeded matrix-mode elements cycling through norms `0.5, 1, 2`.
pub fn default_a_samples(ctx: &AlgebraCtx, seed: u64, count: usize) -> Result<Vec<Element>> {
    crate::hyers::sample_points(ctx, ctx.matrix_shape(), seed, count, &[0.5, 1.0, 2.0])
}

/// Matrix units `E_{ij}`, the canonical spanning set of the algebra.
pub fn matrix_units(n: usize) -> Vec<Element> {
    let shape = crate::talg::Shape::Matrix(n);
    (0..n * n).map(|k| Element::basis(shape, k)).collect()
}
