//! On-resonance ray picture: the pulse train leaving an uncontrolled
//! resonator, then with one cancelling control pulse.

use cavity_ctl::prelude::*;
use std::f64::consts::PI;

fn main() -> Result<()> {
    let spec = FabryPerotSpec { n_r: 2.5, cavity_length: 15.0, left_length: 160.0, right_length: 120.0 };
    let res = resonance_constants(&spec)?;
    let grid = make_frequency_grid(1.0, 0.25, 257, 100.0)?;
    let lead = PulseInjection::lead(smoothed_rect_spectrum(&grid, 1.0, 60.0 / (2.0 * PI), 0.25)?, 100.0);

    let none = ControlSchedule::empty(ControlIntent::Manual, res.tau_rt, 0.0);
    let cancel = design_truncation(&res, res.r, 1, &lead)?;
    for (name, schedule) in [("uncontrolled", &none), ("cancelled", &cancel)] {
        println!("{name}:");
        for ev in raytrace(res.r, res.t, schedule, 12)? {
            println!("  t = {:6.1}  {:?}  |a|^2 = {:.5}", ev.time, ev.side, ev.energy());
        }
    }
    Ok(())
}
