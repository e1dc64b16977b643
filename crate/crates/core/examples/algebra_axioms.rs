//! Ternary product identities on random complex matrices.

use jensen_lab::seeded;
use jensen_lab::talg::{check_associativity, check_identity, check_norm_axioms, norm, tern_product};
use jensen_lab::{AlgebraCtx, Element, Shape};

fn main() -> Result<(), jensen_lab::Error> {
    let ctx = AlgebraCtx::new(3)?;
    let mut rng = seeded::rng(1);
    let xs: Vec<Element> = (0..5).map(|_| seeded::gaussian_element(Shape::Matrix(3), &mut rng)).collect();

    let p = tern_product(&ctx, &xs[0], &xs[1], &xs[2])?;
    println!("‖[x,y,z]‖ = {:.6}", norm(&ctx, &p)?);
    println!("‖x‖‖y‖‖z‖ = {:.6}", xs[..3].iter().map(|x| norm(&ctx, x)).product::<Result<f64, _>>()?);

    let assoc = check_associativity(&ctx, &xs[0], &xs[1], &xs[2], &xs[3], &xs[4])?;
    println!("‖[x,y,[z,u,v]] - [x,[u,z,y],v]‖ = {assoc:.3e}");

    let ax = check_norm_axioms(&ctx, &xs[0], &xs[1], &xs[2])?;
    println!("submultiplicativity excess {:.3e}", ax.submult_violation);
    println!("|‖[x,x,x]‖ - ‖x‖³| = {:.3e}", ax.cstar_violation);

    // the identity matrix is a unitary tripotent
    println!("identity defect {:.3e}", check_identity(&ctx, &Element::identity(3), &xs[0])?);
    Ok(())
}
