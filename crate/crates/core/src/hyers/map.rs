use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded;
use crate::talg::{norm, AlgebraCtx, Element, Shape};

/// A deterministic map on the ambient space.
pub trait Map: Sync {
    fn shape(&self) -> Shape;
    fn apply(&self, x: &Element) -> Result<Element>;
}

impl<M: Map + ?Sized> Map for &M {
    fn shape(&self) -> Shape {
        (**self).shape()
    }
    fn apply(&self, x: &Element) -> Result<Element> {
        (**self).apply(x)
    }
}

/// Adapts a closure into a [`Map`].
pub struct FnMap<F> {
    shape: Shape,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&Element) -> Result<Element> + Sync,
{
    pub fn new(shape: Shape, f: F) -> Self {
        FnMap { shape, f }
    }
}

impl<F> Map for FnMap<F>
where
    F: Fn(&Element) -> Result<Element> + Sync,
{
    fn shape(&self) -> Shape {
        self.shape
    }
    fn apply(&self, x: &Element) -> Result<Element> {
        (self.f)(x)
    }
}

/// Complex-linear operator on the (row-major) vectorized ambient space.
///
/// For matrix mode an `n x n` element is identified with a vector of length
/// `n²`, so the operator is `n² x n²`. Column `j` is the image of the `j`-th
/// canonical basis element.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOp {
    shape: Shape,
    data: Vec<Complex64>,
}

impl LinearOp {
    pub fn identity(shape: Shape) -> Self {
        let n = shape.len();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        LinearOp { shape, data }
    }

    /// Operator whose `j`-th column is `columns[j]` vectorized.
    pub fn from_columns(shape: Shape, columns: &[Element]) -> Result<Self> {
        let n = shape.len();
        if columns.len() != n {
            return Err(Error::Domain(format!(
                "need {n} columns, got {}",
                columns.len()
            )));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for (j, col) in columns.iter().enumerate() {
            if col.shape() != shape {
                return Err(Error::DimensionMismatch {
                    expected: shape,
                    got: col.shape(),
                });
            }
            for (i, v) in col.as_slice().iter().enumerate() {
                data[i * n + j] = *v;
            }
        }
        Ok(LinearOp { shape, data })
    }

    /// The lift of `x ↦ l · x` (matrix product, or matvec in vector mode).
    pub fn left_mul(shape: Shape, l: &Element) -> Result<Self> {
        let cols = (0..shape.len())
            .map(|j| l.matmul(&Element::basis(shape, j)))
            .collect::<Result<Vec<_>>>()?;
        LinearOp::from_columns(shape, &cols)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        let n = self.shape.len();
        (0..n).map(|i| self.data[i * n + j]).collect()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        LinearOp {
            shape: self.shape,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Largest Euclidean distance between corresponding columns.
    pub fn column_distance(&self, other: &LinearOp) -> f64 {
        assert_eq!(self.shape, other.shape, "operator shape mismatch");
        let n = self.shape.len();
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| (self.data[i * n + j] - other.data[i * n + j]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

impl Map for LinearOp {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn apply(&self, x: &Element) -> Result<Element> {
        if x.shape() != self.shape {
            return Err(Error::DimensionMismatch {
                expected: self.shape,
                got: x.shape(),
            });
        }
        let n = self.shape.len();
        let xs = x.as_slice();
        let data = (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(xs)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Element::from_flat(self.shape, data)
    }
}

/// Perturbation `δ` added to the linear base. `δ(0) = 0` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Perturbation {
    None,
    /// `δ(x) = c · dir(x)`
    Bounded { c: f64, seed: u64 },
    /// `δ(x) = eps0 · ‖x‖^p · dir(x)`
    Power { eps0: f64, p: f64, seed: u64 },
}

/// `f = L + δ` where `L` acts by left multiplication and `δ` is a
/// deterministic function of the bit pattern of its argument.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedMap {
    ctx: AlgebraCtx,
    shape: Shape,
    base: Element,
    perturbation: Perturbation,
}

impl PerturbedMap {
    /// `base` must be an `n x n` matrix; `shape` selects matrix or vector mode.
    pub fn new(ctx: AlgebraCtx, shape: Shape, base: Element, perturbation: Perturbation) -> Result<Self> {
        if base.shape() != Shape::Matrix(ctx.dim) {
            return Err(Error::DimensionMismatch {
                expected: Shape::Matrix(ctx.dim),
                got: base.shape(),
            });
        }
        if shape.dim() != ctx.dim {
            return Err(Error::DimensionMismatch {
                expected: Shape::Matrix(ctx.dim),
                got: shape,
            });
        }
        match perturbation {
            Perturbation::Bounded { c, .. } if !(c.is_finite() && c >= 0.0) => {
                return Err(Error::InvalidParams(format!("bounded amplitude must be >= 0, got {c}")))
            }
            Perturbation::Power { eps0, p, .. } if !(eps0.is_finite() && eps0 >= 0.0 && p.is_finite()) => {
                return Err(Error::InvalidParams(format!(
                    "power perturbation needs eps0 >= 0 and finite p, got eps0 = {eps0}, p = {p}"
                )))
            }
            _ => {}
        }
        Ok(PerturbedMap {
            ctx,
            shape,
            base,
            perturbation,
        })
    }

    pub fn linear(ctx: AlgebraCtx, shape: Shape, base: Element) -> Result<Self> {
        PerturbedMap::new(ctx, shape, base, Perturbation::None)
    }

    /// `x ↦ u x + δ(x)` with `u` unitary: a perturbed exact ternary
    /// homomorphism.
    pub fn jordan_near_hom(ctx: AlgebraCtx, u: Element, eps0: f64, p: f64, seed: u64) -> Result<Self> {
        PerturbedMap::new(
            ctx,
            Shape::Matrix(ctx.dim),
            u,
            Perturbation::Power { eps0, p, seed },
        )
    }

    /// `x ↦ iτ x + δ(x)`: a perturbed exact ternary derivation.
    pub fn jordan_near_der(ctx: AlgebraCtx, tau: f64, eps0: f64, p: f64, seed: u64) -> Result<Self> {
        let base = Element::identity(ctx.dim).scale(Complex64::new(0.0, tau));
        PerturbedMap::new(
            ctx,
            Shape::Matrix(ctx.dim),
            base,
            Perturbation::Power { eps0, p, seed },
        )
    }

    pub fn ctx(&self) -> &AlgebraCtx {
        &self.ctx
    }

    pub fn base(&self) -> &Element {
        &self.base
    }

    pub fn perturbation(&self) -> Perturbation {
        self.perturbation
    }

    /// The linear part as an operator on the vectorized space.
    pub fn base_operator(&self) -> LinearOp {
        LinearOp::left_mul(self.shape, &self.base).expect("base checked at construction")
    }

    /// `δ(x)`.
    pub fn delta(&self, x: &Element) -> Result<Element> {
        let (amplitude, seed) = match self.perturbation {
            Perturbation::None => return Ok(Element::zeros(self.shape)),
            Perturbation::Bounded { c, seed } => (c, seed),
            Perturbation::Power { eps0, p, seed } => {
                let nx = norm(&self.ctx, x)?;
                if nx == 0.0 {
                    return Ok(Element::zeros(self.shape));
                }
                (eps0 * nx.powf(p), seed)
            }
        };
        if amplitude == 0.0 || x.is_zero() {
            return Ok(Element::zeros(self.shape));
        }
        let dir = seeded::raw_direction(x, seed);
        let len = norm(&self.ctx, &dir)?;
        Ok(dir.scale_re(amplitude / len))
    }
}

impl Map for PerturbedMap {
    fn shape(&self) -> Shape {
        self.shape
    }

    fn apply(&self, x: &Element) -> Result<Element> {
        if x.shape() != self.shape {
            return Err(Error::DimensionMismatch {
                expected: self.shape,
                got: x.shape(),
            });
        }
        let lin = self.base.matmul(x)?;
        match self.perturbation {
            Perturbation::None => Ok(lin),
            _ => Ok(&lin + &self.delta(x)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_mul_operator_matches_matrix_product() {
        let ctx = AlgebraCtx::new(3).unwrap();
        let mut rng = seeded::rng(1);
        let l = seeded::gaussian_element(Shape::Matrix(3), &mut rng);
        let x = seeded::gaussian_element(Shape::Matrix(3), &mut rng);
        let op = LinearOp::left_mul(Shape::Matrix(3), &l).unwrap();
        let d = &op.apply(&x).unwrap() - &l.matmul(&x).unwrap();
        assert!(norm(&ctx, &d).unwrap() < 1e-13);
    }

    #[test]
    fn delta_vanishes_at_zero_and_has_requested_size() {
        let ctx = AlgebraCtx::new(2).unwrap();
        let f = PerturbedMap::new(
            ctx,
            Shape::Matrix(2),
            Element::identity(2),
            Perturbation::Power { eps0: 0.1, p: 0.5, seed: 4 },
        )
        .unwrap();
        assert!(f.apply(&Element::zeros(Shape::Matrix(2))).unwrap().is_zero());
        let x = Element::real_diag(&[4.0, 1.0]);
        let d = f.delta(&x).unwrap();
        assert!((norm(&ctx, &d).unwrap() - 0.2).abs() < 1e-12);
        // deterministic
        assert_eq!(f.apply(&x).unwrap(), f.apply(&x).unwrap());
    }

    #[test]
    fn bounded_perturbation_in_vector_mode() {
        let ctx = AlgebraCtx::new(3).unwrap();
        let f = PerturbedMap::new(
            ctx,
            Shape::Vector(3),
            Element::identity(3),
            Perturbation::Bounded { c: 0.5, seed: 9 },
        )
        .unwrap();
        let x = Element::vector(vec![Complex64::new(1.0, 2.0); 3]).unwrap();
        let d = &f.apply(&x).unwrap() - &x;
        assert!((d.frobenius_norm() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn from_columns_rejects_wrong_count() {
        assert!(LinearOp::from_columns(Shape::Vector(2), &[Element::basis(Shape::Vector(2), 0)]).is_err());
    }
}
