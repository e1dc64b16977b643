//! Finite-dimensional ternary Banach algebra model.
//!
//! Elements are dense complex `n x n` matrices (algebra mode) or complex
//! `n`-vectors (plain Banach-space mode). The ternary product is
//! `[x, y, z] = x · y* · z` with `y*` the conjugate transpose, and the norm
//! used for the algebra axioms is the operator (spectral) norm.
//!
//! The product is complex-linear in the outer slots and conjugate-linear in
//! the middle slot; the axiom checkers below assert exactly that pattern.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Matrix(usize),
    Vector(usize),
}

impl Shape {
    pub fn dim(self) -> usize {
        match self {
            Shape::Matrix(n) | Shape::Vector(n) => n,
        }
    }

    /// Number of complex entries.
    pub fn len(self) -> usize {
        match self {
            Shape::Matrix(n) => n * n,
            Shape::Vector(n) => n,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn is_matrix(self) -> bool {
        matches!(self, Shape::Matrix(_))
    }
}

/// A point of the ambient space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    shape: Shape,
    data: Vec<Complex64>,
}

impl Element {
    pub fn zeros(shape: Shape) -> Self {
        Element {
            shape,
            data: vec![Complex64::new(0.0, 0.0); shape.len()],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut e = Element::zeros(Shape::Matrix(n));
        for i in 0..n {
            e.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        e
    }

    /// Builds an element from row-major entries, rejecting NaN/Inf.
    pub fn from_flat(shape: Shape, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Domain(format!(
                "{:?} needs {} entries, got {}",
                shape,
                shape.len(),
                data.len()
            )));
        }
        let e = Element { shape, data };
        if !e.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(e)
    }

    pub fn matrix(n: usize, data: Vec<Complex64>) -> Result<Self> {
        Element::from_flat(Shape::Matrix(n), data)
    }

    pub fn vector(data: Vec<Complex64>) -> Result<Self> {
        let n = data.len();
        Element::from_flat(Shape::Vector(n), data)
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let n = shape.dim();
        let data = match shape {
            Shape::Matrix(_) => (0..n * n).map(|k| f(k / n, k % n)).collect(),
            Shape::Vector(_) => (0..n).map(|i| f(i, 0)).collect(),
        };
        Element { shape, data }
    }

    pub fn real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Element::from_fn(Shape::Matrix(n), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Canonical basis element with a single unit entry at flat index `k`
    /// (a matrix unit in matrix mode).
    pub fn basis(shape: Shape, k: usize) -> Self {
        let mut e = Element::zeros(shape);
        e.data[k] = Complex64::new(1.0, 0.0);
        e
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match self.shape {
            Shape::Matrix(n) => self.data[i * n + j],
            Shape::Vector(_) => self.data[i],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Element {
            shape: self.shape,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Element {
            shape: self.shape,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Element {
            shape: self.shape,
            data: self.data.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Result<Self> {
        let n = match self.shape {
            Shape::Matrix(n) => n,
            s => return Err(Error::VectorMode(s)),
        };
        Ok(Element::from_fn(self.shape, |i, j| self.data[j * n + i].conj()))
    }

    pub fn matmul(&self, other: &Element) -> Result<Self> {
        let n = match self.shape {
            Shape::Matrix(n) => n,
            s => return Err(Error::VectorMode(s)),
        };
        match other.shape {
            Shape::Matrix(m) if m == n => {
                let mut out = vec![Complex64::new(0.0, 0.0); n * n];
                for i in 0..n {
                    for k in 0..n {
                        let a = self.data[i * n + k];
                        if a.re == 0.0 && a.im == 0.0 {
                            continue;
                        }
                        let row = &other.data[k * n..(k + 1) * n];
                        for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                            *o += a * b;
                        }
                    }
                }
                Ok(Element {
                    shape: self.shape,
                    data: out,
                })
            }
            Shape::Vector(m) if m == n => {
                let out = (0..n)
                    .map(|i| {
                        self.data[i * n..(i + 1) * n]
                            .iter()
                            .zip(&other.data)
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect();
                Ok(Element {
                    shape: other.shape,
                    data: out,
                })
            }
            got => Err(Error::DimensionMismatch {
                expected: self.shape,
                got,
            }),
        }
    }

    /// Root-sum-square of all entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn zip_with(&self, other: &Element, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.shape, other.shape, "element shape mismatch");
        Element {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale_re(-1.0)
    }
}

impl Mul<&Element> for Complex64 {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        rhs.scale(self)
    }
}

impl Mul<&Element> for f64 {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        rhs.scale_re(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Largest singular value (Euclidean length for vectors).
    Operator,
    /// Root-sum-square of the entries.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraCtx {
    pub dim: usize,
    pub norm_kind: NormKind,
    /// Relative tolerance of the operator-norm evaluator.
    pub norm_tol: f64,
    pub max_iter: usize,
}

impl AlgebraCtx {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::BadDimension(dim));
        }
        Ok(AlgebraCtx {
            dim,
            norm_kind: NormKind::Operator,
            norm_tol: 1e-12,
            max_iter: 10_000,
        })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Ok(AlgebraCtx {
            norm_kind: NormKind::Euclidean,
            ..AlgebraCtx::new(dim)?
        })
    }

    pub fn matrix_shape(&self) -> Shape {
        Shape::Matrix(self.dim)
    }

    fn check(&self, x: &Element) -> Result<()> {
        if x.dim() != self.dim {
            let expected = match x.shape() {
                Shape::Matrix(_) => Shape::Matrix(self.dim),
                Shape::Vector(_) => Shape::Vector(self.dim),
            };
            return Err(Error::DimensionMismatch {
                expected,
                got: x.shape(),
            });
        }
        Ok(())
    }

    fn check_matrix(&self, x: &Element) -> Result<()> {
        if !x.shape().is_matrix() {
            return Err(Error::VectorMode(x.shape()));
        }
        self.check(x)
    }
}

/// `[x, y, z] = x · y* · z`.
pub fn tern_product(ctx: &AlgebraCtx, x: &Element, y: &Element, z: &Element) -> Result<Element> {
    ctx.check_matrix(x)?;
    ctx.check_matrix(y)?;
    ctx.check_matrix(z)?;
    x.matmul(&y.adjoint()?.matmul(z)?)
}

pub fn norm(ctx: &AlgebraCtx, x: &Element) -> Result<f64> {
    ctx.check(x)?;
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    match (ctx.norm_kind, x.shape()) {
        (NormKind::Euclidean, _) | (NormKind::Operator, Shape::Vector(_)) => Ok(x.frobenius_norm()),
        (NormKind::Operator, Shape::Matrix(n)) => {
            spectral_norm(x.as_slice(), n, ctx.norm_tol, ctx.max_iter)
        }
    }
}

/// Largest singular value by power iteration on `x* x`.
///
/// Starts from the all-ones vector. Stops once the Rayleigh-quotient increment
/// and its geometric tail estimate are both below `tol` relative. If the result
/// falls below the largest column norm (a hard lower bound, reached when the
/// start vector misses the dominant subspace) the iteration is restarted from
/// that column's basis vector.
fn spectral_norm(a: &[Complex64], n: usize, tol: f64, max_iter: usize) -> Result<f64> {
    let gram = gram_matrix(a, n);
    let diag_max = (0..n)
        .map(|j| gram[j * n + j].re)
        .fold(0.0_f64, f64::max);
    if diag_max == 0.0 {
        return Ok(0.0);
    }
    let ones = vec![Complex64::new(1.0, 0.0); n];
    let mut rho = rayleigh_power(&gram, n, ones, tol, max_iter)?;
    if rho < diag_max * (1.0 - 1e-12) {
        let jmax = (0..n)
            .max_by(|&i, &j| gram[i * n + i].re.total_cmp(&gram[j * n + j].re))
            .unwrap_or(0);
        let mut start = vec![Complex64::new(0.0, 0.0); n];
        start[jmax] = Complex64::new(1.0, 0.0);
        rho = rho.max(rayleigh_power(&gram, n, start, tol, max_iter)?);
    }
    Ok(rho.max(0.0).sqrt())
}

fn gram_matrix(a: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        let row = &a[k * n..(k + 1) * n];
        for i in 0..n {
            let ai = row[i].conj();
            for j in 0..n {
                g[i * n + j] += ai * row[j];
            }
        }
    }
    g
}

fn rayleigh_power(
    b: &[Complex64],
    n: usize,
    mut v: Vec<Complex64>,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= vn);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut prev_rho = f64::NAN;
    let mut prev_delta = f64::NAN;
    for _ in 0..max_iter {
        for i in 0..n {
            w[i] = b[i * n..(i + 1) * n]
                .iter()
                .zip(&v)
                .map(|(x, y)| x * y)
                .sum();
        }
        let rho: f64 = v.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
        let wn = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if wn == 0.0 {
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        if prev_rho.is_finite() {
            let delta = (rho - prev_rho).abs();
            if delta <= 8.0 * f64::EPSILON * rho {
                return Ok(rho);
            }
            if prev_delta.is_finite() && prev_delta > 0.0 {
                let c = delta / prev_delta;
                if c < 1.0 {
                    let tail = delta * c / (1.0 - c);
                    if delta <= tol * rho && tail <= tol * rho {
                        return Ok(rho);
                    }
                }
            }
            prev_delta = delta;
        }
        prev_rho = rho;
    }
    Err(Error::NormNotConverged {
        iterations: max_iter,
        estimate: prev_rho.max(0.0).sqrt(),
    })
}

/// `‖[x,y,[z,u,v]] − [x,[u,z,y],v]‖`.
pub fn check_associativity(
    ctx: &AlgebraCtx,
    x: &Element,
    y: &Element,
    z: &Element,
    u: &Element,
    v: &Element,
) -> Result<f64> {
    let lhs = tern_product(ctx, x, y, &tern_product(ctx, z, u, v)?)?;
    let rhs = tern_product(ctx, x, &tern_product(ctx, u, z, y)?, v)?;
    norm(ctx, &(&lhs - &rhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormAxioms {
    /// `max(0, ‖[x,y,z]‖ − ‖x‖‖y‖‖z‖)`
    pub submult_violation: f64,
    /// `|‖[x,x,x]‖ − ‖x‖³|`
    pub cstar_violation: f64,
}

pub fn check_norm_axioms(
    ctx: &AlgebraCtx,
    x: &Element,
    y: &Element,
    z: &Element,
) -> Result<NormAxioms> {
    let nx = norm(ctx, x)?;
    let prod = norm(ctx, &tern_product(ctx, x, y, z)?)?;
    let bound = nx * norm(ctx, y)? * norm(ctx, z)?;
    let cube = norm(ctx, &tern_product(ctx, x, x, x)?)?;
    Ok(NormAxioms {
        submult_violation: (prod - bound).max(0.0),
        cstar_violation: (cube - nx.powi(3)).abs(),
    })
}

/// `max(‖x − [x,e,e]‖, ‖x − [e,e,x]‖)`.
pub fn check_identity(ctx: &AlgebraCtx, e: &Element, x: &Element) -> Result<f64> {
    let right = norm(ctx, &(x - &tern_product(ctx, x, e, e)?))?;
    let left = norm(ctx, &(x - &tern_product(ctx, e, e, x)?))?;
    Ok(right.max(left))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_is_fixed_by_the_product() {
        let ctx = AlgebraCtx::new(3).unwrap();
        let i = Element::identity(3);
        assert_eq!(tern_product(&ctx, &i, &i, &i).unwrap(), i);
    }

    #[test]
    fn product_with_identity_outside_is_adjoint() {
        let ctx = AlgebraCtx::new(2).unwrap();
        let e = Element::identity(2);
        let a = Element::matrix(2, vec![c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.5), c(-2.0, 0.0)]).unwrap();
        let got = tern_product(&ctx, &e, &a, &e).unwrap();
        assert_eq!(got, a.adjoint().unwrap());
    }

    #[test]
    fn vector_mode_and_dimension_errors() {
        let ctx = AlgebraCtx::new(2).unwrap();
        let v = Element::vector(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let m = Element::identity(2);
        assert!(matches!(
            tern_product(&ctx, &v, &m, &m),
            Err(Error::VectorMode(_))
        ));
        let big = Element::identity(3);
        assert!(matches!(
            tern_product(&ctx, &m, &big, &m),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norm_of_diagonal_and_identity() {
        let ctx = AlgebraCtx::new(3).unwrap();
        let d = Element::real_diag(&[3.0, 1.0, -2.0]);
        assert!((norm(&ctx, &d).unwrap() - 3.0).abs() < 1e-12);
        assert!((norm(&ctx, &Element::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(norm(&ctx, &Element::zeros(Shape::Matrix(3))).unwrap(), 0.0);
    }

    #[test]
    fn norm_when_ones_vector_is_in_the_kernel() {
        // x*x annihilates the all-ones start vector.
        let ctx = AlgebraCtx::new(2).unwrap();
        let x = Element::matrix(2, vec![c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert!((norm(&ctx, &x).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn euclidean_norm_is_root_sum_square() {
        let ctx = AlgebraCtx::euclidean(2).unwrap();
        let x = Element::real_diag(&[3.0, 4.0]);
        assert!((norm(&ctx, &x).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert_eq!(
            Element::vector(vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        );
        assert!(matches!(AlgebraCtx::new(65), Err(Error::BadDimension(65))));
    }

    #[test]
    fn identity_axiom_cases() {
        let ctx = AlgebraCtx::new(2).unwrap();
        let i = Element::identity(2);
        let zero = Element::zeros(Shape::Matrix(2));
        assert!((check_identity(&ctx, &zero, &i).unwrap() - 1.0).abs() < 1e-15);
        let e = Element::real_diag(&[1.0, -1.0]);
        assert!(check_identity(&ctx, &e, &i).unwrap() < 1e-12);
    }

    #[test]
    fn cstar_identity_for_diagonal() {
        let ctx = AlgebraCtx::new(2).unwrap();
        let x = Element::real_diag(&[2.0, 1.0]);
        let ax = check_norm_axioms(&ctx, &x, &x, &x).unwrap();
        assert!(ax.cstar_violation <= 1e-12);
        let i = Element::identity(2);
        let ax = check_norm_axioms(&ctx, &i, &i, &i).unwrap();
        assert_eq!((ax.submult_violation, ax.cstar_violation), (0.0, 0.0));
    }

    #[test]
    fn associativity_of_identities_is_exact() {
        let ctx = AlgebraCtx::new(4).unwrap();
        let i = Element::identity(4);
        assert_eq!(check_associativity(&ctx, &i, &i, &i, &i, &i).unwrap(), 0.0);
    }
}
