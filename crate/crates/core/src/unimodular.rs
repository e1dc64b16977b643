//! Three-point unimodular decomposition and the scalar-linearity bootstraps.
//!
//! Any `z` with `|z| ≤ 3` is a sum of three unit complex numbers. Combined
//! with additivity and `T¹`-homogeneity this upgrades a map to full complex
//! linearity: for `λ ≠ 0` pick an integer `M > 4|λ|`, decompose `3λ/M`, and
//! `h(λx) = (M/3) Σ h(μᵢ x)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hyers::Map;
use crate::seeded;
use crate::talg::{norm, AlgebraCtx, Element};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnimodularTriple {
    pub mu1: Complex64,
    pub mu2: Complex64,
    pub mu3: Complex64,
}

impl UnimodularTriple {
    pub fn sum(&self) -> Complex64 {
        self.mu1 + self.mu2 + self.mu3
    }

    pub fn as_array(&self) -> [Complex64; 3] {
        [self.mu1, self.mu2, self.mu3]
    }
}

/// Writes `z` as `μ₁ + μ₂ + μ₃` with `|μᵢ| = 1`.
///
/// `μ₁ = z/|z|`; the remainder `w = z − μ₁` has `|w| = ||z| − 1| ≤ 2` and is
/// split symmetrically as `(w/|w|) e^{±iα}` with `cos α = |w|/2`. The origin
/// uses the cube roots of unity and `|z| = 1` uses `±i μ₁`.
pub fn decompose_three(z: Complex64) -> Result<UnimodularTriple> {
    let r = z.norm();
    if !r.is_finite() || r > 3.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "three unit vectors cannot sum to modulus {r} > 3"
        )));
    }
    if r == 0.0 {
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        return Ok(UnimodularTriple {
            mu1: Complex64::new(1.0, 0.0),
            mu2: w,
            mu3: w.conj(),
        });
    }
    let mu1 = z / r;
    let w = z - mu1;
    let wn = w.norm();
    if wn == 0.0 {
        let i = Complex64::new(0.0, 1.0);
        return Ok(UnimodularTriple {
            mu1,
            mu2: i * mu1,
            mu3: -i * mu1,
        });
    }
    let dir = w / wn;
    let alpha = (wn / 2.0).min(1.0).acos();
    Ok(UnimodularTriple {
        mu1,
        mu2: dir * Complex64::from_polar(1.0, alpha),
        mu3: dir * Complex64::from_polar(1.0, -alpha),
    })
}

/// Smallest integer `M > 4|λ|`.
pub fn m_for_lambda(lambda: Complex64) -> Result<u64> {
    let r = lambda.norm();
    if r == 0.0 {
        return Err(Error::Domain("lambda = 0 is handled by h(0) = 0".into()));
    }
    if !r.is_finite() {
        return Err(Error::Domain(format!("lambda must be finite, got {lambda}")));
    }
    Ok((4.0 * r).floor() as u64 + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityWitness {
    pub x: Element,
    pub scalar: Complex64,
    pub defect: f64,
    pub what: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityReport {
    pub max_defect: f64,
    pub pass: bool,
    pub witness: Option<LinearityWitness>,
}

#[derive(Default)]
struct Worst {
    ratio: f64,
    defect: f64,
    witness: Option<LinearityWitness>,
}

impl Worst {
    /// Tracks both the raw maximum and the sample closest to failing.
    fn record(&mut self, defect: f64, allowed: f64, x: &Element, scalar: Complex64, what: &'static str) {
        self.defect = self.defect.max(defect);
        let ratio = defect / allowed;
        if ratio > self.ratio || self.witness.is_none() {
            self.ratio = self.ratio.max(ratio);
            self.witness = Some(LinearityWitness {
                x: x.clone(),
                scalar,
                defect,
                what,
            });
        }
    }
}

fn check_additive(ctx: &AlgebraCtx, h: &dyn Map, xs: &[Element], tol: f64) -> Result<()> {
    for (i, x) in xs.iter().enumerate() {
        let y = &xs[(i + 1) % xs.len()];
        let d = norm(ctx, &(&(&h.apply(&(x + y))? - &h.apply(x)?) - &h.apply(y)?))?;
        let scale = 1.0 + norm(ctx, x)? + norm(ctx, y)?;
        if d > tol * scale {
            return Err(Error::Refused(format!(
                "h is not additive within {tol:e}: defect {d:e} at sample {i}"
            )));
        }
    }
    Ok(())
}

/// Seeded λ-samples: axes, seams and assorted moduli plus 32 random values.
pub fn default_lambda_samples(seed: u64) -> Vec<Complex64> {
    let c = Complex64::new;
    let mut v = vec![
        c(1.0, 0.0),
        c(-1.0, 0.0),
        c(0.0, 1.0),
        c(0.0, -1.0),
        c(0.5, 0.0),
        c(2.0, 0.0),
        c(1.0, 1.0),
        c(-3.0, 4.0),
        c(-0.03, 0.04),
        c(-30.0, 40.0),
        c(0.25, 0.0),
    ];
    let mut rng = seeded::rng(seed);
    use rand::Rng;
    for _ in 0..32 {
        let modulus = 10f64.powf(rng.gen_range(-2.0..3.0));
        v.push(Complex64::from_polar(modulus, rng.gen_range(0.0..std::f64::consts::TAU)));
    }
    v
}

/// Rebuilds `λ h(x)` through the unimodular chain and compares with `h(λx)`.
///
/// Additivity is a hard precondition (refused if it fails). Failure of
/// `T¹`-homogeneity or of the chain itself is reported as `pass = false` with
/// a witness.
pub fn c_linearity_from_t1(
    ctx: &AlgebraCtx,
    h: &dyn Map,
    lambda_samples: &[Complex64],
    x_samples: &[Element],
    tol: f64,
    seed: u64,
) -> Result<LinearityReport> {
    if x_samples.is_empty() {
        return Err(Error::InvalidParams("need x-samples".into()));
    }
    check_additive(ctx, h, x_samples, tol)?;
    let mus = crate::control::default_mus(seed);
    let mut worst = Worst::default();
    for x in x_samples {
        let nx = norm(ctx, x)?;
        let hx = h.apply(x)?;
        for &mu in &mus {
            let d = norm(ctx, &(&h.apply(&x.scale(mu))? - &hx.scale(mu)))?;
            worst.record(d, 10.0 * tol * 2.0 * nx.max(1.0), x, mu, "mu-homogeneity");
        }
        let third = norm(ctx, &(&h.apply(&x.scale_re(1.0 / 3.0))? - &hx.scale_re(1.0 / 3.0)))?;
        worst.record(third, 10.0 * tol * nx.max(1.0), x, Complex64::new(1.0 / 3.0, 0.0), "rational homogeneity");
        for &lambda in lambda_samples {
            let allowed = 10.0 * tol * (1.0 + lambda.norm()) * nx.max(1.0);
            if lambda == Complex64::new(0.0, 0.0) {
                let d = norm(ctx, &h.apply(&x.scale(lambda))?)?;
                worst.record(d, allowed, x, lambda, "h(0) = 0");
                continue;
            }
            let m = m_for_lambda(lambda)? as f64;
            let triple = decompose_three(lambda * 3.0 / m)?;
            let mut acc = Element::zeros(x.shape());
            for mu in triple.as_array() {
                acc = &acc + &h.apply(&x.scale(mu))?;
            }
            let rebuilt = acc.scale_re(m / 3.0);
            let d = norm(ctx, &(&h.apply(&x.scale(lambda))? - &rebuilt))?;
            worst.record(d, allowed, x, lambda, "unimodular chain");
        }
    }
    Ok(LinearityReport {
        max_defect: worst.defect,
        pass: worst.ratio <= 1.0,
        witness: worst.witness,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ILinearityReport {
    /// `max ‖h(i x) − i h(x)‖`.
    pub i_defect: f64,
    /// `max ‖h((α₁ + iα₂) x) − α₁ h(x) − iα₂ h(x)‖`.
    pub assembled_defect: f64,
    pub max_defect: f64,
    pub pass: bool,
    pub witness: Option<LinearityWitness>,
}

/// Complex linearity from homogeneity under `i` plus real linearity.
pub fn i_linearity_check(
    ctx: &AlgebraCtx,
    h: &dyn Map,
    x_samples: &[Element],
    tol: f64,
    seed: u64,
) -> Result<ILinearityReport> {
    use rand::Rng;
    if x_samples.is_empty() {
        return Err(Error::InvalidParams("need x-samples".into()));
    }
    check_additive(ctx, h, x_samples, tol)?;
    let i = Complex64::new(0.0, 1.0);
    let mut rng = seeded::rng(seed);
    let mut worst = Worst::default();
    let mut i_defect = 0.0_f64;
    let mut assembled_defect = 0.0_f64;
    for x in x_samples {
        let nx = norm(ctx, x)?;
        let hx = h.apply(x)?;
        let d = norm(ctx, &(&h.apply(&x.scale(i))? - &hx.scale(i)))?;
        i_defect = i_defect.max(d);
        worst.record(d, 10.0 * tol * nx.max(1.0), x, i, "i-homogeneity");

        let (a1, a2): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let lambda = Complex64::new(a1, a2);
        let rhs = &hx.scale_re(a1) + &hx.scale(i * a2);
        let d = norm(ctx, &(&h.apply(&x.scale(lambda))? - &rhs))?;
        assembled_defect = assembled_defect.max(d);
        worst.record(d, 10.0 * tol * (1.0 + lambda.norm()) * nx.max(1.0), x, lambda, "assembled");
    }
    Ok(ILinearityReport {
        i_defect,
        assembled_defect,
        max_defect: i_defect.max(assembled_defect),
        pass: worst.ratio <= 1.0,
        witness: worst.witness,
    })
}
