//! Morphism identities checked on a spanning set transfer to every element.

use jensen_lab::jordan::{default_a_samples, matrix_units, spanning_check};
use jensen_lab::seeded;
use jensen_lab::{AlgebraCtx, JensenParams, MorphismKind, PerturbedMap, Shape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 3;
    let ctx = AlgebraCtx::new(n)?;
    let u = seeded::random_unitary(n, &mut seeded::rng(8));
    let f = PerturbedMap::linear(ctx, Shape::Matrix(n), u)?;
    let samples = default_a_samples(&ctx, 80, 4)?;
    let rep = spanning_check(
        &ctx,
        &f,
        &JensenParams::jensen(),
        &matrix_units(n),
        &[1, 2, 3],
        &samples,
        MorphismKind::JordanHom,
        1e-10,
        200,
    )?;
    println!("hypothesis residual on matrix units {:.3e}", rep.hypothesis_residual);
    println!("conclusion residual on random a     {:.3e}", rep.conclusion_residual);
    println!("iterations to converge {:?}", rep.n_star);
    Ok(())
}
