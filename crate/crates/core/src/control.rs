//! Control functions `φ`, the summed majorant `φ̃` and certification of a
//! perturbed map against a control function.
//!
//! `φ̃` is summed along the direct-method scaling `q = r/s`:
//!
//! * forward: `φ̃(x,y,a) = (1/r) Σ_{j≥0} q^{−j} φ(q^j x, q^j y, q^j a)`
//! * backward: `φ̃(x,y,a) = (1/s) Σ_{j≥0} q^{j} φ(q^{−j} x, q^{−j} y, q^{−j} a)`
//!
//! For the power family every component of the series is geometric, so the
//! truncation error after any term is known exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyers::{jensen_residual, Map};
use crate::jordan::{coupled_residual, MorphismKind};
use crate::seeded;
use crate::talg::{norm, AlgebraCtx, Element};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `h(x) = lim q^{−n} f(q^n x)`
    Forward,
    /// `h(x) = lim q^{n} f(q^{−n} x)`
    Backward,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// Constants of `r f((s x + t y)/r) = s f(x) + t f(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenParams {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub direction: Direction,
    /// Overrides the series prefactor (`1/r` forward, `1/s` backward).
    pub prefactor: Option<f64>,
}

impl JensenParams {
    pub fn new(r: f64, s: f64, t: f64, direction: Direction) -> Result<Self> {
        for (name, v) in [("r", r), ("s", s), ("t", t)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be a positive finite real, got {v}"
                )));
            }
        }
        if r == s {
            return Err(Error::InvalidParams(format!(
                "constraint r ≠ s violated (r/s = 1 gives no scaling): got r = s = {r}"
            )));
        }
        Ok(JensenParams {
            r,
            s,
            t,
            direction,
            prefactor: None,
        })
    }

    /// The classical Jensen constants `r = 2, s = t = 1`.
    pub fn jensen() -> Self {
        JensenParams::new(2.0, 1.0, 1.0, Direction::Forward).expect("valid constants")
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// `q = r/s`.
    pub fn q(&self) -> f64 {
        self.r / self.s
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor.unwrap_or(match self.direction {
            Direction::Forward => 1.0 / self.r,
            Direction::Backward => 1.0 / self.s,
        })
    }

    /// Factor applied to the argument at step `n` of the direct method.
    pub fn arg_scale(&self, n: usize) -> f64 {
        let q = self.q();
        match self.direction {
            Direction::Forward => q.powi(n as i32),
            Direction::Backward => q.powi(-(n as i32)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ControlFamily {
    /// `ε (‖x‖^p + ‖y‖^p + ‖a‖^{m p})`
    Power { p: f64, m: u32 },
    /// `ε`
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlFunction {
    pub eps: f64,
    #[serde(flatten)]
    pub family: ControlFamily,
}

impl ControlFunction {
    pub fn power(eps: f64, p: f64) -> Self {
        ControlFunction::power_m(eps, p, 1)
    }

    pub fn power_m(eps: f64, p: f64, m: u32) -> Self {
        ControlFunction {
            eps,
            family: ControlFamily::Power { p, m },
        }
    }

    pub fn constant(eps: f64) -> Self {
        ControlFunction {
            eps,
            family: ControlFamily::Constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "eps must be a nonnegative finite real, got {}",
                self.eps
            )));
        }
        if let ControlFamily::Power { p, m } = self.family {
            if !p.is_finite() || p == 1.0 {
                return Err(Error::InvalidParams(format!(
                    "power exponent p must be finite and different from 1, got {p}"
                )));
            }
            if m == 0 {
                return Err(Error::InvalidParams("a-exponent multiplier m must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Growth exponent of the `x`, `y` terms (0 for the constant family).
    pub fn xy_exponent(&self) -> f64 {
        match self.family {
            ControlFamily::Power { p, .. } => p,
            ControlFamily::Constant => 0.0,
        }
    }

    /// Growth exponent of the `a` term.
    pub fn a_exponent(&self) -> f64 {
        match self.family {
            ControlFamily::Power { p, m } => p * f64::from(m),
            ControlFamily::Constant => 0.0,
        }
    }

    /// `φ` evaluated from argument norms; `na = None` drops the `a` term.
    pub fn eval_norms(&self, nx: f64, ny: f64, na: Option<f64>) -> Result<f64> {
        match self.family {
            ControlFamily::Constant => Ok(self.eps),
            ControlFamily::Power { p, m } => {
                let mp = p * f64::from(m);
                let a = match na {
                    Some(na) => pow_term(na, mp)?,
                    None => 0.0,
                };
                Ok(self.eps * (pow_term(nx, p)? + pow_term(ny, p)? + a))
            }
        }
    }
}

/// `n^p` with zero arguments contributing nothing for `p ≥ 0`.
fn pow_term(n: f64, p: f64) -> Result<f64> {
    if n == 0.0 {
        if p < 0.0 {
            return Err(Error::Domain(format!(
                "0^p is undefined for p = {p} < 0"
            )));
        }
        return Ok(0.0);
    }
    Ok(n.powf(p))
}

pub fn eval_phi(
    ctx: &AlgebraCtx,
    cf: &ControlFunction,
    x: &Element,
    y: &Element,
    a: Option<&Element>,
) -> Result<f64> {
    let na = a.map(|a| norm(ctx, a)).transpose()?;
    cf.eval_norms(norm(ctx, x)?, norm(ctx, y)?, na)
}

/// Term ratio of a geometric component of growth `exponent` in the series for
/// `direction`.
pub fn series_ratio(direction: Direction, q: f64, exponent: f64) -> f64 {
    match direction {
        Direction::Forward => q.powf(exponent - 1.0),
        Direction::Backward => q.powf(1.0 - exponent),
    }
}

/// Checks that the `x`, `y` part of `φ̃` converges for the chosen direction.
///
/// Forward needs `r/s > 1` and `(r/s)^(p−1) < 1`; backward needs
/// `(r/s)^(1−p) < 1`.
pub fn check_summability(cf: &ControlFunction, params: &JensenParams) -> Result<()> {
    let q = params.q();
    let p = cf.xy_exponent();
    match params.direction {
        Direction::Forward => {
            let ratio = series_ratio(Direction::Forward, q, p);
            if q <= 1.0 || ratio >= 1.0 {
                return Err(Error::Divergent(format!(
                    "forward iteration needs r/s > 1 and (r/s)^(p-1) < 1; \
                     got r/s = {q}, p = {p}, (r/s)^(p-1) = {ratio}"
                )));
            }
        }
        Direction::Backward => {
            let ratio = series_ratio(Direction::Backward, q, p);
            if ratio >= 1.0 {
                return Err(Error::Divergent(format!(
                    "backward iteration needs (r/s)^(1-p) < 1; \
                     got r/s = {q}, p = {p}, (r/s)^(1-p) = {ratio}"
                )));
            }
        }
    }
    Ok(())
}

/// Picks the direction whose series converges, preferring forward.
pub fn resolve_direction(cf: &ControlFunction, params: &JensenParams) -> Result<Direction> {
    let fwd = params.with_direction(Direction::Forward);
    if check_summability(cf, &fwd).is_ok() {
        return Ok(Direction::Forward);
    }
    let bwd = params.with_direction(Direction::Backward);
    match check_summability(cf, &bwd) {
        Ok(()) => Ok(Direction::Backward),
        Err(_) => Err(Error::Divergent(format!(
            "neither direction converges: forward needs r/s > 1 and (r/s)^(p-1) < 1, \
             backward needs (r/s)^(1-p) < 1; got r/s = {}, p = {}",
            params.q(),
            cf.xy_exponent()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesSum {
    pub value: f64,
    pub terms_used: usize,
}

const MAX_SERIES_TERMS: usize = 1_000_000;

/// Partial sum of `φ̃(x, y, a)` from argument norms, within `tail_tol` of the
/// full series.
pub fn phi_tilde_series(
    cf: &ControlFunction,
    params: &JensenParams,
    nx: f64,
    ny: f64,
    na: Option<f64>,
    tail_tol: f64,
) -> Result<SeriesSum> {
    cf.validate()?;
    if tail_tol.is_nan() || tail_tol <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "tail_tol must be positive, got {tail_tol}"
        )));
    }
    let q = params.q();
    let mut exponents = Vec::with_capacity(2);
    match cf.family {
        ControlFamily::Constant => exponents.push(0.0),
        ControlFamily::Power { .. } => {
            if nx > 0.0 || ny > 0.0 {
                exponents.push(cf.xy_exponent());
            }
            if na.is_some_and(|a| a > 0.0) {
                exponents.push(cf.a_exponent());
            }
        }
    }
    let mut rho = 0.0_f64;
    for &e in &exponents {
        let ratio = series_ratio(params.direction, q, e);
        if ratio >= 1.0 {
            let which = match params.direction {
                Direction::Forward => "(r/s)^(k-1) < 1",
                Direction::Backward => "(r/s)^(1-k) < 1",
            };
            return Err(Error::Divergent(format!(
                "series for {:?} direction needs {which} for growth exponent k = {e}; \
                 got r/s = {q}, ratio = {ratio}",
                params.direction
            )));
        }
        rho = rho.max(ratio);
    }
    let pref = params.prefactor();
    let mut sum = 0.0;
    for j in 0..MAX_SERIES_TERMS {
        let (arg, weight) = match params.direction {
            Direction::Forward => (q.powi(j as i32), q.powi(-(j as i32))),
            Direction::Backward => (q.powi(-(j as i32)), q.powi(j as i32)),
        };
        if !(arg.is_finite() && weight.is_finite() && arg > 0.0 && weight > 0.0) {
            break;
        }
        let term = pref * weight * cf.eval_norms(arg * nx, arg * ny, na.map(|a| arg * a))?;
        sum += term;
        let tail = if rho == 0.0 { 0.0 } else { term * rho / (1.0 - rho) };
        if tail < tail_tol {
            return Ok(SeriesSum {
                value: sum,
                terms_used: j + 1,
            });
        }
    }
    Err(Error::Divergent(format!(
        "series did not reach tail tolerance {tail_tol:e} before the argument scale overflowed"
    )))
}

/// `φ̃(x, x, 0)`, the distance bound between `f` and its limit.
pub fn phi_tilde_bound(
    cf: &ControlFunction,
    params: &JensenParams,
    nx: f64,
    tail_tol: f64,
) -> Result<f64> {
    Ok(phi_tilde_series(cf, params, nx, nx, None, tail_tol)?.value)
}

pub fn phi_tilde_series_elements(
    ctx: &AlgebraCtx,
    cf: &ControlFunction,
    params: &JensenParams,
    x: &Element,
    y: &Element,
    a: Option<&Element>,
    tail_tol: f64,
) -> Result<SeriesSum> {
    let na = a.map(|a| norm(ctx, a)).transpose()?;
    phi_tilde_series(cf, params, norm(ctx, x)?, norm(ctx, y)?, na, tail_tol)
}

/// `2 r^{−p} ε ‖x‖^p / (r^{1−p} − s^{1−p})`, the power-family value of
/// `φ̃(x, x, 0)` in the forward direction.
pub fn phi_tilde_closed_form(cf: &ControlFunction, params: &JensenParams, norm_x: f64) -> Result<f64> {
    let p = match cf.family {
        ControlFamily::Power { p, .. } => p,
        ControlFamily::Constant => {
            return Err(Error::InvalidParams(
                "closed form is defined for the power family only".into(),
            ))
        }
    };
    if p == 1.0 {
        return Err(Error::Domain("p = 1 makes the denominator vanish".into()));
    }
    if p > 1.0 {
        return Err(Error::Domain(format!(
            "closed form needs p < 1, got p = {p}"
        )));
    }
    if params.direction != Direction::Forward {
        return Err(Error::InvalidParams(
            "closed form is stated for the forward direction".into(),
        ));
    }
    let (r, s) = (params.r, params.s);
    if r <= s {
        return Err(Error::InvalidParams(format!(
            "closed form needs r > s, got r = {r}, s = {s}"
        )));
    }
    let num = 2.0 * r.powf(-p) * cf.eps * pow_term(norm_x, p)?;
    Ok(num / (r.powf(1.0 - p) - s.powf(1.0 - p)))
}

/// Smallest `ε` for which `ε (‖x‖^p + ‖y‖^p)` majorizes the Jensen residual
/// of `L + δ` with `‖δ(x)‖ ≤ eps0 ‖x‖^p`, from
/// `‖(s x + t y)/r‖^p ≤ r^{−p} (s + t)^p (‖x‖^p + ‖y‖^p)`.
pub fn jensen_majorant_eps(params: &JensenParams, eps0: f64, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::Domain(format!(
            "the power majorant needs p >= 0, got p = {p}"
        )));
    }
    let (r, s, t) = (params.r, params.s, params.t);
    Ok(eps0 * (r.powf(1.0 - p) * (s + t).powf(p) + s + t))
}

/// What the certification sweep samples.
#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub sample_count: usize,
    pub seed: u64,
    /// Norm scales for `x` and `y`.
    pub scales: Vec<f64>,
    /// Norm scales for `a` (coupled mode only).
    pub a_scales: Vec<f64>,
    /// `None` certifies the plain Jensen inequality; `Some(kind)` the coupled
    /// inequality with the homomorphism or derivation bracket.
    pub coupled: Option<MorphismKind>,
    /// Unimodular scalars swept in coupled mode.
    pub mus: Vec<Complex64>,
}

impl CertifyOptions {
    pub fn new(sample_count: usize, seed: u64) -> Self {
        CertifyOptions {
            sample_count,
            seed,
            scales: vec![0.1, 1.0, 10.0, 100.0],
            a_scales: vec![0.1, 1.0, 10.0],
            coupled: None,
            mus: default_mus(seed),
        }
    }

    pub fn coupled(mut self, kind: MorphismKind) -> Self {
        self.coupled = Some(kind);
        self
    }

    pub fn with_a_scales(mut self, a_scales: Vec<f64>) -> Self {
        self.a_scales = a_scales;
        self
    }

    pub fn with_mus(mut self, mus: Vec<Complex64>) -> Self {
        self.mus = mus;
        self
    }
}

/// `{1, i}` followed by eight seeded unimodular scalars.
pub fn default_mus(seed: u64) -> Vec<Complex64> {
    let mut rng = seeded::rng(seeded::derive_seed(seed, "mu"));
    let mut mus = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
    mus.extend((0..8).map(|_| seeded::random_unimodular(&mut rng)));
    mus
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertWitness {
    pub x: Element,
    pub y: Element,
    pub a: Option<Element>,
    pub mu: Complex64,
    pub residual: f64,
    pub phi: f64,
}

#[derive(Debug, Clone)]
pub struct CertReport {
    pub max_ratio: f64,
    pub pass: bool,
    /// Sample attaining `max_ratio`.
    pub witness: Option<CertWitness>,
    pub samples: usize,
    cf: ControlFunction,
    params: JensenParams,
}

impl CertReport {
    /// Proof of a passed certification, required by the stabilization driver.
    pub fn certificate(&self) -> Option<Certificate> {
        self.pass.then_some(Certificate {
            cf: self.cf,
            params: self.params,
        })
    }
}

/// Token produced only by a passing [`certify_control`] run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    cf: ControlFunction,
    params: JensenParams,
}

impl Certificate {
    pub fn covers(&self, cf: &ControlFunction, params: &JensenParams) -> bool {
        self.cf == *cf && self.params == *params
    }
}

/// Empirically checks that `f` satisfies the Jensen inequality (or the coupled
/// inequality) with control `cf`, reporting the worst ratio `residual / φ`.
pub fn certify_control(
    ctx: &AlgebraCtx,
    f: &dyn Map,
    cf: &ControlFunction,
    params: &JensenParams,
    opts: &CertifyOptions,
) -> Result<CertReport> {
    cf.validate()?;
    if opts.sample_count == 0 || opts.scales.is_empty() {
        return Err(Error::InvalidParams(
            "certification needs at least one sample and one scale".into(),
        ));
    }
    if opts.coupled.is_some() && (opts.a_scales.is_empty() || opts.mus.is_empty()) {
        return Err(Error::InvalidParams(
            "coupled certification needs a-scales and unimodular samples".into(),
        ));
    }
    let shape = f.shape();
    let mut rng = seeded::rng(opts.seed);
    let k = opts.scales.len();
    let mut max_ratio = 0.0_f64;
    let mut witness = None;
    for i in 0..opts.sample_count {
        let x = seeded::element_with_norm(ctx, shape, opts.scales[i % k], &mut rng)?;
        let general = seeded::element_with_norm(ctx, shape, opts.scales[(i / k) % k], &mut rng)?;
        let zero = Element::zeros(shape);
        let (x, y) = match i % 4 {
            0 => (x, general),
            1 => (x, zero),
            2 => (x.clone(), x),
            _ if opts.coupled.is_some() => (zero.clone(), zero),
            _ => (x, general),
        };
        let (residual, phi, a, mu) = match opts.coupled {
            None => {
                let res = jensen_residual(ctx, f, params, &x, &y)?;
                (res, eval_phi(ctx, cf, &x, &y, None)?, None, Complex64::new(1.0, 0.0))
            }
            Some(kind) => {
                let ka = opts.a_scales.len();
                let a = seeded::element_with_norm(ctx, shape, opts.a_scales[i % ka], &mut rng)?;
                let mu = opts.mus[i % opts.mus.len()];
                let res = coupled_residual(ctx, f, params, mu, &x, &y, &a, kind)?;
                (res, eval_phi(ctx, cf, &x, &y, Some(&a))?, Some(a), mu)
            }
        };
        let ratio = if phi > 0.0 {
            residual / phi
        } else if residual > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > max_ratio || witness.is_none() {
            max_ratio = max_ratio.max(ratio);
            witness = Some(CertWitness {
                x,
                y,
                a,
                mu,
                residual,
                phi,
            });
        }
    }
    Ok(CertReport {
        max_ratio,
        pass: max_ratio <= 1.0,
        witness,
        samples: opts.sample_count,
        cf: *cf,
        params: *params,
    })
}
