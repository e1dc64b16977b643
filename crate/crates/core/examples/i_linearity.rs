//! The i-linearity test separates linear maps from conjugation.

use jensen_lab::hyers::sample_points;
use jensen_lab::seeded;
use jensen_lab::unimodular::i_linearity_check;
use jensen_lab::{AlgebraCtx, Element, FnMap, LinearOp, Shape};

fn main() -> Result<(), jensen_lab::Error> {
    let ctx = AlgebraCtx::new(3)?;
    let shape = Shape::Matrix(3);
    let xs = sample_points(&ctx, shape, 10, 30, &[0.1, 1.0, 10.0])?;
    let linear = LinearOp::left_mul(shape, &seeded::gaussian_element(shape, &mut seeded::rng(10)))?;
    let conj = FnMap::new(shape, |x: &Element| Ok(x.conj()));
    for (name, rep) in [
        ("left multiplication", i_linearity_check(&ctx, &linear, &xs, 1e-12, 1)?),
        ("conjugation", i_linearity_check(&ctx, &conj, &xs, 1e-12, 1)?),
    ] {
        println!("{name:<20} i-defect {:.3e} pass {}", rep.i_defect, rep.pass);
        if let Some(w) = rep.witness {
            println!("{:<20} worst at {} with defect {:.3e}", "", w.what, w.defect);
        }
    }
    Ok(())
}
