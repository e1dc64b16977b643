//! For p > 1 the forward series diverges and the iteration runs backward,
//! qⁿ f(q⁻ⁿ x).

use jensen_lab::control::{certify_control, jensen_majorant_eps, resolve_direction, CertifyOptions};
use jensen_lab::hyers::{default_probes, stabilize, verify_bound, StabilizeOptions};
use jensen_lab::seeded;
use jensen_lab::{AlgebraCtx, ControlFunction, Direction, JensenParams, LinearOp, Perturbation, PerturbedMap, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = AlgebraCtx::new(3)?;
    let shape = Shape::Matrix(3);
    let (eps0, p) = (0.1, 2.0);
    let forward = JensenParams::jensen();
    let cf = ControlFunction::power(jensen_majorant_eps(&forward, eps0, p)?, p);
    let direction = resolve_direction(&cf, &forward)?;
    println!("p = {p}: resolved direction {direction:?}");
    assert_eq!(direction, Direction::Backward);
    let params = forward.with_direction(direction);

    let l = seeded::gaussian_element(shape, &mut seeded::rng(4));
    let f = PerturbedMap::new(ctx, shape, l.clone(), Perturbation::Power { eps0, p, seed: 4 })?;
    let cert = certify_control(&ctx, &f, &cf, &params, &CertifyOptions::new(300, 4))?;
    let token = cert.certificate().ok_or("control not certified")?;
    let rep = stabilize(&ctx, &f, &params, &cf, &token, &default_probes(&ctx, shape, 4)?, &StabilizeOptions::default())?;
    let h = rep.h.as_ref().ok_or("iteration did not converge")?;
    println!("n_star {:?}, |H - L| = {:.3e}", rep.n_star, h.column_distance(&LinearOp::left_mul(shape, &l)?));
    let vb = verify_bound(&ctx, &f, &rep, &cf, &params, 200, 5, 1e-12)?;
    println!("bound violation {:.4}", vb.max_violation);
    Ok(())
}
