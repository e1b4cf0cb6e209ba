//! Truncating the ring-down after N round trips: an integrating detector
//! behind the resonator reads a finite geometric sum.

use cavity_ctl::prelude::*;
use std::f64::consts::PI;

fn main() -> Result<()> {
    let spec = FabryPerotSpec { n_r: 2.5, cavity_length: 15.0, left_length: 160.0, right_length: 120.0 };
    let stack = build_fabry_perot(&spec)?;
    let res = resonance_constants(&spec)?;
    let grid = make_frequency_grid(1.0, 0.25, 1025, 400.0)?;
    let lead = PulseInjection::lead(smoothed_rect_spectrum(&grid, 1.0, 60.0 / (2.0 * PI), 0.25)?, 140.0);
    let x_r = stack.end() + 60.0;
    let tg = TimeGrid::span(400.0, 0.25)?;
    let free = Synthesizer::new(&LayerStack::vacuum(), std::slice::from_ref(&lead), Normalization::Lead)?;
    let reference = coherent_detector(&free, x_r, &tg, 1.0);

    for n in 1..=4 {
        let schedule = design_truncation(&res, res.r, n, &lead)?;
        let synth = Synthesizer::new(&stack, &schedule.with_lead(&lead), Normalization::Lead)?;
        let ratio = coherent_detector(&synth, x_r, &tg, 1.0) / reference;
        let t2 = Complex64::new(res.t * res.t, 0.0);
        let r2 = Complex64::new(res.r * res.r, 0.0);
        println!("N = {n}: detector {ratio:.5}, geometric sum {:.5}", geometric_sum(t2, r2, n));
    }
    Ok(())
}
