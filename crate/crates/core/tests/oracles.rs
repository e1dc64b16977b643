//! Library results against independent reference implementations and frozen
//! oracle outputs.

use approx::assert_relative_eq;
use jensen_lab::control::{
    jensen_majorant_eps, phi_tilde_closed_form, phi_tilde_series, ControlFunction, Direction, JensenParams,
};
use jensen_lab::hyers::{hyers_step, Perturbation, PerturbedMap};
use jensen_lab::jordan::coupled_majorant_eps;
use jensen_lab::seeded::{self, raw_direction, SplitMix64};
use jensen_lab::talg::{norm, tern_product};
use jensen_lab::unimodular::{decompose_three, m_for_lambda};
use jensen_lab::{AlgebraCtx, Complex64, Element, Map, MorphismKind, Shape};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn triple_loop(a: &Element, b: &Element) -> Vec<Complex64> {
    let n = a.dim();
    let cols = b.shape().len() / n;
    let mut out = vec![c(0.0, 0.0); n * cols];
    for i in 0..n {
        for j in 0..cols {
            for k in 0..n {
                out[i * cols + j] += a.as_slice()[i * n + k] * b.as_slice()[k * cols + j];
            }
        }
    }
    out
}

/// Singular values by one-sided Jacobi rotations on the columns.
fn jacobi_singular_values(a: &Element) -> Vec<f64> {
    let n = a.dim();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| (0..n).map(|i| a.get(i, j)).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = cols[i].iter().map(|v| v.norm_sqr()).sum();
                let beta: f64 = cols[j].iter().map(|v| v.norm_sqr()).sum();
                let gamma: Complex64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (left, right) = cols.split_at_mut(j);
                for (a, b) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (xi, yj) = (*a, *b * phase.conj());
                    *a = xi * cs - yj * sn;
                    *b = (xi * sn + yj * cs) * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols.iter().map(|col| col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[test]
fn matmul_matches_triple_loop() {
    let mut rng = seeded::rng(100);
    for n in 1..=7 {
        let a = seeded::gaussian_element(Shape::Matrix(n), &mut rng);
        let b = seeded::gaussian_element(Shape::Matrix(n), &mut rng);
        let v = seeded::gaussian_element(Shape::Vector(n), &mut rng);
        for (rhs, got) in [(&b, a.matmul(&b).unwrap()), (&v, a.matmul(&v).unwrap())] {
            for (x, y) in got.as_slice().iter().zip(triple_loop(&a, rhs)) {
                assert!((x - y).norm() <= 1e-13 * (1.0 + y.norm()));
            }
        }
    }
}

#[test]
fn ternary_product_matches_reference() {
    let mut rng = seeded::rng(101);
    for n in 1..=5 {
        let ctx = AlgebraCtx::new(n).unwrap();
        let x = seeded::gaussian_element(Shape::Matrix(n), &mut rng);
        let y = seeded::gaussian_element(Shape::Matrix(n), &mut rng);
        let z = seeded::gaussian_element(Shape::Matrix(n), &mut rng);
        let ystar = Element::from_fn(Shape::Matrix(n), |i, j| y.get(j, i).conj());
        let xy = Element::matrix(n, triple_loop(&x, &ystar)).unwrap();
        let expected = triple_loop(&xy, &z);
        let got = tern_product(&ctx, &x, &y, &z).unwrap();
        for (a, b) in got.as_slice().iter().zip(expected) {
            assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }
}

#[test]
fn jacobi_oracle_on_known_matrix() {
    // diag(3, 1) rotated by a unitary keeps its singular values
    let u = seeded::random_unitary(2, &mut seeded::rng(7));
    let d = Element::real_diag(&[3.0, 1.0]);
    let s = jacobi_singular_values(&u.matmul(&d).unwrap());
    assert_relative_eq!(s[0], 3.0, max_relative = 1e-13);
    assert_relative_eq!(s[1], 1.0, max_relative = 1e-13);
}

#[test]
fn operator_norm_matches_jacobi_svd() {
    let mut rng = seeded::rng(102);
    for n in 1..=8 {
        let ctx = AlgebraCtx::new(n).unwrap();
        for _ in 0..25 {
            let x = seeded::gaussian_element(Shape::Matrix(n), &mut rng);
            let oracle = jacobi_singular_values(&x)[0];
            assert_relative_eq!(norm(&ctx, &x).unwrap(), oracle, max_relative = 1e-10);
        }
    }
}

#[test]
fn operator_norm_of_rank_one_and_clustered_spectra() {
    let ctx = AlgebraCtx::new(4).unwrap();
    // rank one u v*: norm |u| |v|
    let u = [c(1.0, 1.0), c(0.0, -2.0), c(0.5, 0.0), c(0.0, 0.0)];
    let v = [c(0.0, 1.0), c(3.0, 0.0), c(-1.0, 0.0), c(1.0, 1.0)];
    let x = Element::from_fn(Shape::Matrix(4), |i, j| u[i] * v[j].conj());
    let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert_relative_eq!(norm(&ctx, &x).unwrap(), nu * nv, max_relative = 1e-12);
    // nearly degenerate top singular values
    let d = Element::real_diag(&[1.0, 1.0 - 1e-9, 0.5, 0.1]);
    let w = seeded::random_unitary(4, &mut seeded::rng(3));
    let y = w.matmul(&d).unwrap();
    assert_relative_eq!(norm(&ctx, &y).unwrap(), jacobi_singular_values(&y)[0], max_relative = 1e-10);
}

#[test]
fn closed_form_reference_value() {
    // 2 · 2^{-1/2} · 0.1 / (2^{1/2} − 1), evaluated independently
    let expected = 0.341_421_356_237_309_5;
    let cf = ControlFunction::power(0.1, 0.5);
    let params = JensenParams::jensen();
    assert_relative_eq!(phi_tilde_closed_form(&cf, &params, 1.0).unwrap(), expected, max_relative = 1e-15);
    let series = phi_tilde_series(&cf, &params, 1.0, 1.0, None, 1e-14).unwrap();
    assert!((series.value - expected).abs() <= 1e-13);
}

#[test]
fn series_matches_naive_summation() {
    // (1/r) Σ q^{-j} ε 2 (q^j |x|)^p summed term by term for 400 terms
    for (p, r, s, nx) in [(0.5, 3.0, 1.0, 2.0), (0.25, 2.0, 0.5, 0.3), (-0.5, 5.0, 2.0, 7.0)] {
        let params = JensenParams::new(r, s, 1.0, Direction::Forward).unwrap();
        let q: f64 = r / s;
        let naive: f64 = (0..400)
            .map(|j| q.powi(-j) * 2.0 * (q.powi(j) * nx).powf(p))
            .sum::<f64>()
            / r;
        let got = phi_tilde_series(&ControlFunction::power(1.0, p), &params, nx, nx, None, 1e-14).unwrap();
        assert_relative_eq!(got.value, naive, max_relative = 1e-12);
    }
}

#[test]
fn backward_series_matches_naive_summation() {
    // (1/s) Σ q^{j} ε 2 (q^{-j} |x|)^p with p = 2
    let params = JensenParams::new(2.0, 1.0, 1.0, Direction::Backward).unwrap();
    let naive: f64 = (0..200).map(|j| 2f64.powi(j) * 2.0 * (2f64.powi(-j) * 3.0).powi(2)).sum();
    let got = phi_tilde_series(&ControlFunction::power(1.0, 2.0), &params, 3.0, 3.0, None, 1e-14).unwrap();
    assert_relative_eq!(got.value, naive, max_relative = 1e-13);
    assert_relative_eq!(naive, 36.0, max_relative = 1e-13);
}

#[test]
fn splitmix_reference_stream() {
    let mut g = SplitMix64::new(0);
    assert_eq!(g.next_u64(), 0xe220_a839_7b1d_cdaf);
    assert_eq!(g.next_u64(), 0x6e78_9e6a_a1b9_65f4);
    assert_eq!(g.next_u64(), 0x06c4_5d18_8009_454f);
}

#[test]
fn direction_is_bit_exact() {
    // frozen from an independent implementation of the documented encoding
    let x = Element::vector(vec![c(1.0, 2.0), c(-0.5, 0.0)]).unwrap();
    assert_eq!(seeded::hash_element(&x, 42), 0xe95c_a26e_b738_c2b4);
    let d = raw_direction(&x, 42);
    let bits: Vec<u64> = d.as_slice().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect();
    assert_eq!(
        bits,
        vec![0x3fc7_449d_0169_a1f0, 0xbf63_7c6a_11b3_be00, 0x3fed_903c_1ca7_884a, 0x3f90_d171_2749_7880]
    );
}

#[test]
fn normalized_direction_reference() {
    let ctx = AlgebraCtx::new(2).unwrap();
    let x = Element::vector(vec![c(1.0, 2.0), c(-0.5, 0.0)]).unwrap();
    let f = PerturbedMap::new(ctx, Shape::Vector(2), Element::zeros(Shape::Matrix(2)), Perturbation::Bounded { c: 1.0, seed: 42 })
        .unwrap();
    let d = f.apply(&x).unwrap();
    let expected = [
        f64::from_bits(0x3fc8_b544_89c0_1dd9),
        f64::from_bits(0xbf64_b125_a0af_6342),
        f64::from_bits(0x3fef_64a1_e459_4409),
        f64::from_bits(0x3f91_dbe7_d194_b06b),
    ];
    let got: Vec<f64> = d.as_slice().iter().flat_map(|z| [z.re, z.im]).collect();
    for (g, e) in got.iter().zip(expected) {
        assert!((g - e).abs() <= 2.0 * f64::EPSILON);
    }
}

#[test]
fn bounded_perturbation_decays_exactly_like_inverse_scale() {
    // ‖q^{-n} f(q^n x) − L x‖ = c q^{-n}
    let ctx = AlgebraCtx::new(3).unwrap();
    let l = seeded::gaussian_element(Shape::Matrix(3), &mut seeded::rng(8));
    let f = PerturbedMap::new(ctx, Shape::Matrix(3), l.clone(), Perturbation::Bounded { c: 0.3, seed: 1 }).unwrap();
    let params = JensenParams::new(3.0, 1.0, 1.0, Direction::Forward).unwrap();
    let x = seeded::gaussian_element(Shape::Matrix(3), &mut seeded::rng(9));
    for n in [0usize, 1, 4, 10] {
        let d = &hyers_step(&ctx, &f, &params, &x, n).unwrap() - &l.matmul(&x).unwrap();
        assert_relative_eq!(norm(&ctx, &d).unwrap(), 0.3 * 3f64.powi(-(n as i32)), max_relative = 1e-9);
    }
}

#[test]
fn unimodular_worked_example() {
    // z = 2: μ₁ = 1, w = 1, α = arccos(1/2) = π/3
    let t = decompose_three(c(2.0, 0.0)).unwrap();
    let third = std::f64::consts::FRAC_PI_3;
    assert!((t.mu1 - c(1.0, 0.0)).norm() < 1e-15);
    assert!((t.mu2 - Complex64::from_polar(1.0, third)).norm() < 1e-15);
    assert!((t.mu3 - Complex64::from_polar(1.0, -third)).norm() < 1e-15);
    assert_eq!(m_for_lambda(c(0.25, 0.0)).unwrap(), 2);
    assert_eq!(m_for_lambda(c(-30.0, 40.0)).unwrap(), 201);
}

#[test]
fn majorant_reference_values() {
    let params = JensenParams::jensen();
    // 0.1 · (2^{1/2} · 2^{1/2} + 2)
    assert_relative_eq!(jensen_majorant_eps(&params, 0.1, 0.5).unwrap(), 0.4, max_relative = 1e-15);
    // 0.05 · (2^{1/2} · 10^0 + 3 · 10^1)
    let der = coupled_majorant_eps(&params, MorphismKind::JordanDer, 0.05, 0.5, 3, 10.0).unwrap();
    assert_relative_eq!(der, 1.570_710_678_118_654_8, max_relative = 1e-15);
}
