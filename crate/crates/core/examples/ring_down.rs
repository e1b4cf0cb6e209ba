//! Short pulse through the resonator: the transmitted train and the energy
//! ratio between neighbouring pulses.

use cavity_ctl::prelude::*;
use std::f64::consts::PI;

fn main() -> Result<()> {
    let spec = FabryPerotSpec { n_r: 2.5, cavity_length: 15.0, left_length: 160.0, right_length: 120.0 };
    let stack = build_fabry_perot(&spec)?;
    let res = resonance_constants(&spec)?;
    let grid = make_frequency_grid(1.0, 0.25, 513, 250.0)?;
    let env = smoothed_rect_spectrum(&grid, 1.0, 60.0 / (2.0 * PI), 0.25)?;
    let synth = Synthesizer::new(&stack, &[PulseInjection::lead(env, 100.0)], Normalization::Lead)?;

    let x_r = stack.end() + 20.0;
    let tg = TimeGrid::span(250.0, 0.25)?;
    let series = synth.time_series(x_r, &tg);
    // Pulse k passes x_R near t_k; integrate |Ψ|^2 over one round trip around it.
    let first = stack.start() - 100.0 + 0.5 * res.tau_rt + (x_r - stack.end());
    let mut prev = None;
    for k in 0..5 {
        let centre = first + k as f64 * res.tau_rt;
        let e: f64 = (0..tg.len)
            .filter(|&m| (tg.at(m) - centre).abs() <= 0.5 * res.tau_rt)
            .map(|m| series[m].norm_sqr() * tg.step)
            .sum();
        match prev {
            Some(p) => println!("pulse {k} near t = {centre:.1}: energy {e:.5}, ratio {:.4}", e / p),
            None => println!("pulse {k} near t = {centre:.1}: energy {e:.5}"),
        }
        prev = Some(e);
    }
    println!("r^4 = {:.4}", res.r.powi(4));
    Ok(())
}
