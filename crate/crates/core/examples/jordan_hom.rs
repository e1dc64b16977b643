//! A perturbed ternary homomorphism x ↦ U x is stabilized to an exact one.

use jensen_lab::control::{certify_control, CertifyOptions};
use jensen_lab::hyers::{default_probes, sample_points, stabilize, StabilizeOptions};
use jensen_lab::jordan::{coupled_majorant_eps, default_a_samples, hom_residual};
use jensen_lab::seeded;
use jensen_lab::talg::norm;
use jensen_lab::unimodular::{c_linearity_from_t1, default_lambda_samples};
use jensen_lab::{AlgebraCtx, ControlFunction, JensenParams, MorphismKind, PerturbedMap, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = AlgebraCtx::new(3)?;
    let shape = Shape::Matrix(3);
    let params = JensenParams::jensen();
    let kind = MorphismKind::JordanHom;
    let u = seeded::random_unitary(3, &mut seeded::rng(5));
    let f = PerturbedMap::jordan_near_hom(ctx, u, 0.05, 0.5, 5)?;

    // φ(x, y, a) = eps (‖x‖^p + ‖y‖^p + ‖a‖^{3p}) on ‖a‖ ≤ 10
    let eps = coupled_majorant_eps(&params, kind, 0.05, 0.5, 3, 10.0)?;
    let cf = ControlFunction::power_m(eps, 0.5, 3);
    let cert = certify_control(&ctx, &f, &cf, &params, &CertifyOptions::new(400, 5).coupled(kind))?;
    println!("coupled certification: eps {eps:.4}, ratio {:.3}", cert.max_ratio);
    let token = cert.certificate().ok_or("control not certified")?;

    let rep = stabilize(&ctx, &f, &params, &cf, &token, &default_probes(&ctx, shape, 5)?, &StabilizeOptions::default())?;
    let h = rep.limit_map(&ctx, &f, &params).ok_or("iteration did not converge")?;
    let mut worst = 0.0_f64;
    for a in default_a_samples(&ctx, 50, 20)? {
        worst = worst.max(hom_residual(&ctx, &h, &a)? / norm(&ctx, &a)?.powi(3));
    }
    println!("max ‖H[a,a,a] - [Ha,Ha,Ha]‖ / ‖a‖³ = {worst:.3e}");

    let xs = sample_points(&ctx, shape, 51, 10, &[0.1, 1.0, 10.0])?;
    let lin = c_linearity_from_t1(&ctx, &h, &default_lambda_samples(52), &xs, 1e-6, 53)?;
    println!("C-linearity defect {:.3e} (pass {})", lin.max_defect, lin.pass);
    Ok(())
}
