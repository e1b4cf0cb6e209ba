//! Two copies of the same pulse, one a fixed time ahead, crossing an empty
//! region: the distance rises in two steps and then only falls.

use cavity_ctl::prelude::*;
use std::f64::consts::PI;

fn main() -> Result<()> {
    let grid = make_frequency_grid(1.0, 0.25, 513, 320.0)?;
    let lead = PulseInjection::lead(smoothed_rect_spectrum(&grid, 1.0, 60.0 / (2.0 * PI), 0.25)?, -80.0);
    let pair = TrajectoryPair::new(&LayerStack::vacuum(), &[lead], 60.0)?;
    let region = RegionSpec::new("A", 0.0, 160.0)?;
    let x: Vec<f64> = (0..=4000).map(|i| -20.0 + 0.05 * i as f64).collect();
    let tg = TimeGrid::span(320.0, 1.0)?;
    let d = pair.distance_series(&x, &region, &tg)?;
    let id = nonmarkov_content(&d)?;
    for k in (0..d.d.len()).step_by(20) {
        println!("t = {:5.1}  D = {:.4}  ID = {:.2e}", d.t_grid[k], d.d[k], id.id[k]);
    }
    println!("ID total = {:.3e}", id.total);
    Ok(())
}
