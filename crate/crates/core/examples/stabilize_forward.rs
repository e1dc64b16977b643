//! Recover a linear map from a perturbed one with the forward iteration
//! q⁻ⁿ f(qⁿ x), then check the stability bound.

use jensen_lab::control::{certify_control, jensen_majorant_eps, CertifyOptions};
use jensen_lab::hyers::{default_probes, stabilize, verify_bound, StabilizeOptions};
use jensen_lab::seeded;
use jensen_lab::{AlgebraCtx, ControlFunction, JensenParams, LinearOp, Perturbation, PerturbedMap, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = AlgebraCtx::new(4)?;
    let shape = Shape::Matrix(4);
    let params = JensenParams::jensen();
    let l = seeded::gaussian_element(shape, &mut seeded::rng(11));
    let (eps0, p) = (0.1, 0.5);
    let f = PerturbedMap::new(ctx, shape, l.clone(), Perturbation::Power { eps0, p, seed: 11 })?;

    // a control that majorizes the residual of f everywhere
    let cf = ControlFunction::power(jensen_majorant_eps(&params, eps0, p)?, p);
    let cert = certify_control(&ctx, &f, &cf, &params, &CertifyOptions::new(400, 11))?;
    println!("certification: pass {} max ratio {:.4}", cert.pass, cert.max_ratio);
    let token = cert.certificate().ok_or("control not certified")?;

    let probes = default_probes(&ctx, shape, 11)?;
    let rep = stabilize(&ctx, &f, &params, &cf, &token, &probes, &StabilizeOptions::default())?;
    let h = rep.h.as_ref().ok_or("iteration did not converge")?;
    println!("n_star {:?}", rep.n_star);
    println!("additivity residual {:.3e}", rep.max_additivity_residual);
    println!("|H - L| = {:.3e}", h.column_distance(&LinearOp::left_mul(shape, &l)?));

    let vb = verify_bound(&ctx, &f, &rep, &cf, &params, 200, 12, 1e-12)?;
    println!("max of ‖f(x) - H(x)‖ - φ̃(x): {:.4} (negative means the bound holds)", vb.max_violation);
    Ok(())
}
