//! Things that must fail: an undersized control, an inflated limit, and a
//! divergent direction.

use jensen_lab::control::{certify_control, jensen_majorant_eps, phi_tilde_series, CertifyOptions};
use jensen_lab::hyers::{default_probes, stabilize, verify_bound, StabilizeOptions};
use jensen_lab::seeded;
use jensen_lab::{AlgebraCtx, Complex64, ControlFunction, Direction, JensenParams, Perturbation, PerturbedMap, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = AlgebraCtx::new(3)?;
    let shape = Shape::Matrix(3);
    let params = JensenParams::jensen();
    let l = seeded::gaussian_element(shape, &mut seeded::rng(2));
    let f = PerturbedMap::new(ctx, shape, l, Perturbation::Power { eps0: 0.1, p: 0.5, seed: 2 })?;

    let small = ControlFunction::power(0.01, 0.5);
    let cert = certify_control(&ctx, &f, &small, &params, &CertifyOptions::new(200, 2))?;
    println!("eps = 0.01: certified {}, ratio {:.2}", cert.pass, cert.max_ratio);
    if let Some(w) = &cert.witness {
        println!("  witness residual {:.4} > phi {:.4}", w.residual, w.phi);
    }

    let cf = ControlFunction::power(jensen_majorant_eps(&params, 0.1, 0.5)?, 0.5);
    let token = certify_control(&ctx, &f, &cf, &params, &CertifyOptions::new(200, 2))?
        .certificate()
        .ok_or("control not certified")?;
    let mut rep = stabilize(&ctx, &f, &params, &cf, &token, &default_probes(&ctx, shape, 2)?, &StabilizeOptions::default())?;
    rep.h = rep.h.map(|h| h.scale(Complex64::new(1.5, 0.0)));
    let vb = verify_bound(&ctx, &f, &rep, &cf, &params, 100, 3, 1e-12)?;
    println!("H scaled by 1.5: bound violation {:.3}", vb.max_violation);

    let forward = JensenParams::new(2.0, 1.0, 1.0, Direction::Forward)?;
    match phi_tilde_series(&ControlFunction::power(1.0, 1.5), &forward, 1.0, 1.0, None, 1e-12) {
        Ok(s) => println!("p = 1.5 forward unexpectedly summed to {}", s.value),
        Err(e) => println!("p = 1.5 forward: {e}"),
    }
    Ok(())
}
