//! A perturbed derivation x ↦ iτ x, and the superstability of its limit.

use jensen_lab::control::{certify_control, CertifyOptions};
use jensen_lab::hyers::{default_probes, stabilize, StabilizeOptions};
use jensen_lab::jordan::{coupled_majorant_eps, default_a_samples, superstability_check};
use jensen_lab::{AlgebraCtx, ControlFunction, JensenParams, MorphismKind, PerturbedMap, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = AlgebraCtx::new(3)?;
    let params = JensenParams::jensen();
    let kind = MorphismKind::JordanDer;
    let f = PerturbedMap::jordan_near_der(ctx, 0.7, 0.05, 0.5, 6)?;
    let cf = ControlFunction::power_m(coupled_majorant_eps(&params, kind, 0.05, 0.5, 3, 10.0)?, 0.5, 3);
    let cert = certify_control(&ctx, &f, &cf, &params, &CertifyOptions::new(400, 6).coupled(kind))?;
    let token = cert.certificate().ok_or("control not certified")?;
    let rep = stabilize(
        &ctx,
        &f,
        &params,
        &cf,
        &token,
        &default_probes(&ctx, Shape::Matrix(3), 6)?,
        &StabilizeOptions::default(),
    )?;
    let h = rep.h.as_ref().ok_or("iteration did not converge")?;

    let samples = default_a_samples(&ctx, 60, 20)?;
    let ss = superstability_check(&ctx, h, &params, &cf, kind, 40, &samples)?;
    for (n, r) in ss.residual_curve.iter().step_by(8) {
        println!("n = {n:>2}: rescaled derivation residual {r:.3e}");
    }
    println!("final {:.3e}, superstable {}", ss.final_residual, ss.pass);
    Ok(())
}
