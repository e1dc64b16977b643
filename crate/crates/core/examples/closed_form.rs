//! The bound φ̃ for a power control: truncated series against the closed form.

use jensen_lab::control::{phi_tilde_closed_form, phi_tilde_series};
use jensen_lab::{ControlFunction, Direction, JensenParams};

fn main() -> Result<(), jensen_lab::Error> {
    let params = JensenParams::jensen();
    let cf = ControlFunction::power(0.1, 0.5);
    let series = phi_tilde_series(&cf, &params, 1.0, 1.0, None, 1e-14)?;
    println!(
        "r=2, s=t=1, eps=0.1, p=1/2, ‖x‖=1: series {:.16} ({} terms), closed form {:.16}",
        series.value,
        series.terms_used,
        phi_tilde_closed_form(&cf, &params, 1.0)?
    );

    println!("{:>6} {:>6} {:>22} {:>22}", "p", "r/s", "series", "closed form");
    for p in [0.0, 0.25, 0.75] {
        for q in [1.5, 4.0] {
            let params = JensenParams::new(q, 1.0, 1.0, Direction::Forward)?;
            let cf = ControlFunction::power(1.0, p);
            let s = phi_tilde_series(&cf, &params, 2.0, 2.0, None, 1e-13)?.value;
            let c = phi_tilde_closed_form(&cf, &params, 2.0)?;
            println!("{p:>6} {q:>6} {s:>22.15} {c:>22.15}");
        }
    }
    Ok(())
}
