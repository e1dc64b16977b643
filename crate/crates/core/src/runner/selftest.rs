//! Fast in-binary invariant suite behind `jensen-lab selftest`.

use num_complex::Complex64;
use rand::Rng;

use crate::control::{
    certify_control, jensen_majorant_eps, phi_tilde_closed_form, phi_tilde_series, CertifyOptions, ControlFunction,
    Direction, JensenParams,
};
use crate::hyers::{default_probes, stabilize, verify_bound, FnMap, Perturbation, PerturbedMap, StabilizeOptions};
use crate::seeded;
use crate::talg::{check_associativity, check_norm_axioms, norm, AlgebraCtx, Element, Shape};
use crate::unimodular::{decompose_three, i_linearity_check};

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestLine {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn line(name: &'static str, r: crate::Result<(bool, String)>) -> SelftestLine {
    match r {
        Ok((pass, detail)) => SelftestLine { name, pass, detail },
        Err(e) => SelftestLine {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn algebra_axioms() -> crate::Result<(bool, String)> {
    let mut rng = seeded::rng(seeded::derive_seed(0, "selftest-algebra"));
    let mut worst_assoc = 0.0_f64;
    let mut worst_norm = 0.0_f64;
    for i in 0..60 {
        let n = 2 + i % 3;
        let ctx = AlgebraCtx::new(n)?;
        let e: Vec<Element> = (0..5).map(|_| seeded::gaussian_element(Shape::Matrix(n), &mut rng)).collect();
        let scale: f64 = e.iter().map(|x| norm(&ctx, x)).collect::<crate::Result<Vec<_>>>()?.iter().product();
        worst_assoc = worst_assoc.max(check_associativity(&ctx, &e[0], &e[1], &e[2], &e[3], &e[4])? / scale.max(1.0));
        let ax = check_norm_axioms(&ctx, &e[0], &e[1], &e[2])?;
        let nx = norm(&ctx, &e[0])?;
        worst_norm = worst_norm
            .max(ax.submult_violation)
            .max(ax.cstar_violation / nx.powi(3).max(1.0));
    }
    Ok((
        worst_assoc <= 1e-12 && worst_norm <= 1e-10,
        format!("associativity {worst_assoc:.2e}, norm axioms {worst_norm:.2e}"),
    ))
}

fn closed_form() -> crate::Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for p in [-0.5, 0.0, 0.25, 0.5, 0.75] {
        for q in [1.5, 2.0, 3.0, 5.0, 10.0] {
            let params = JensenParams::new(q, 1.0, 1.0, Direction::Forward)?;
            let cf = ControlFunction::power(1.0, p);
            for nx in [0.1, 1.0, 10.0] {
                let series = phi_tilde_series(&cf, &params, nx, nx, None, 1e-13)?.value;
                worst = worst.max((series - phi_tilde_closed_form(&cf, &params, nx)?).abs());
            }
        }
    }
    Ok((worst <= 1e-9, format!("max |series - closed form| {worst:.2e}")))
}

fn unimodular() -> crate::Result<(bool, String)> {
    let mut rng = seeded::rng(seeded::derive_seed(0, "selftest-unimodular"));
    let mut worst = 0.0_f64;
    for _ in 0..2000 {
        let z = Complex64::from_polar(3.0 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
        let t = decompose_three(z)?;
        worst = worst.max((t.sum() - z).norm());
        for mu in t.as_array() {
            worst = worst.max((mu.norm() - 1.0).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max defect {worst:.2e}")))
}

fn stabilization() -> crate::Result<(bool, String)> {
    let ctx = AlgebraCtx::new(2)?;
    let params = JensenParams::jensen();
    let l = seeded::gaussian_element(Shape::Matrix(2), &mut seeded::rng(3));
    let (eps0, p) = (0.1, 0.5);
    let f = PerturbedMap::new(ctx, Shape::Matrix(2), l.clone(), Perturbation::Power { eps0, p, seed: 7 })?;
    let cf = ControlFunction::power(jensen_majorant_eps(&params, eps0, p)?, p);
    let cert = certify_control(&ctx, &f, &cf, &params, &CertifyOptions::new(200, 1))?;
    let Some(cert) = cert.certificate() else {
        return Ok((false, format!("certification failed, ratio {:.3}", cert.max_ratio)));
    };
    let probes = default_probes(&ctx, Shape::Matrix(2), 2)?;
    let opts = StabilizeOptions {
        random_points: 20,
        ..StabilizeOptions::default()
    };
    let rep = stabilize(&ctx, &f, &params, &cf, &cert, &probes, &opts)?;
    let vb = verify_bound(&ctx, &f, &rep, &cf, &params, 100, 4, 1e-12)?;
    let truth = crate::hyers::LinearOp::left_mul(Shape::Matrix(2), &l)?;
    let dist = rep.h.as_ref().map(|h| h.column_distance(&truth)).unwrap_or(f64::INFINITY);
    Ok((
        rep.pass && vb.max_violation < 0.0 && dist <= 1e-8,
        format!(
            "n_star {:?}, |H - L| {dist:.2e}, bound violation {:.2e}",
            rep.n_star, vb.max_violation
        ),
    ))
}

fn i_linearity() -> crate::Result<(bool, String)> {
    let ctx = AlgebraCtx::new(2)?;
    let shape = Shape::Matrix(2);
    let xs = crate::hyers::sample_points(&ctx, shape, 9, 20, &[0.1, 1.0, 10.0])?;
    let lin = FnMap::new(shape, |x: &Element| Ok(x.clone()));
    let conj = FnMap::new(shape, |x: &Element| Ok(x.conj()));
    let a = i_linearity_check(&ctx, &lin, &xs, 1e-12, 1)?;
    let b = i_linearity_check(&ctx, &conj, &xs, 1e-12, 1)?;
    Ok((
        a.pass && !b.pass,
        format!("linear defect {:.2e}, conjugation defect {:.2e}", a.max_defect, b.max_defect),
    ))
}

/// Runs the suite and returns one line per invariant.
pub fn selftest() -> Vec<SelftestLine> {
    vec![
        line("algebra axioms", algebra_axioms()),
        line("closed form vs series", closed_form()),
        line("unimodular decomposition", unimodular()),
        line("stabilization and bound", stabilization()),
        line("i-linearity separation", i_linearity()),
    ]
}
