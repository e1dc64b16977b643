//! Every complex number of modulus at most 3 is a sum of three unimodular ones.

use jensen_lab::unimodular::{decompose_three, m_for_lambda};
use jensen_lab::Complex64;

fn main() -> Result<(), jensen_lab::Error> {
    for z in [Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(-1.0, 2.5), Complex64::new(0.0, 3.0)] {
        let t = decompose_three(z)?;
        println!(
            "{z:>10.3} = {:.4} + {:.4} + {:.4}   |sum - z| = {:.1e}",
            t.mu1,
            t.mu2,
            t.mu3,
            (t.sum() - z).norm()
        );
    }
    match decompose_three(Complex64::new(3.5, 0.0)) {
        Ok(_) => println!("3.5 unexpectedly decomposed"),
        Err(e) => println!("3.5: {e}"),
    }
    // λ = M (λ/M) with |λ/M| < 1/4 small enough for the homogeneity argument
    let l = Complex64::new(7.0, -3.0);
    println!("M for {l} is {}", m_for_lambda(l)?);
    Ok(())
}
