//! Nulling the leakage through both mirrors with pairs of control pulses:
//! the cavity energy grows round trip by round trip.

use cavity_ctl::prelude::*;
use std::f64::consts::PI;

fn main() -> Result<()> {
    let spec = FabryPerotSpec { n_r: 2.5, cavity_length: 30.0, left_length: 240.0, right_length: 200.0 };
    let stack = build_fabry_perot(&spec)?;
    let res = resonance_constants(&spec)?;
    let grid = make_frequency_grid(1.0, 0.25, 1025, 300.0)?;
    let lead = PulseInjection::lead(smoothed_rect_spectrum(&grid, 1.0, 60.0 / (2.0 * PI), 0.25)?, 215.0);
    let k = 3;
    let schedule = design_confinement(&res, res.r, res.t, k, &lead, &stack)?;
    let synth = Synthesizer::new(&stack, &schedule.with_lead(&lead), Normalization::Lead)?;

    let cavity = RegionSpec::new("B", stack.start(), stack.end())?;
    let nodes = cavity_ctl::media::sample_positions(&stack, stack.start(), stack.end(), 20.0);
    let t_c = stack.start() - lead.center0;
    let tg = TimeGrid::new(t_c + 0.25 * res.tau_rt, 0.5 * res.tau_rt, 2 * k as usize + 3)?;
    let energy = synth.region_energy_series(&nodes, &cavity, &tg)?;
    for (i, e) in energy.iter().enumerate() {
        println!("t = {:6.1}: cavity energy {e:.4}", tg.at(i));
    }
    Ok(())
}
