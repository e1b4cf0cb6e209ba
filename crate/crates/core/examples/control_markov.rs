//! Cancelling the ring-down changes how much information flows back into
//! the regions on either side of the resonator.
//! Slow without `--release`.

use cavity_ctl::scenario::Scenario;
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fig8.toml");
    let p = Scenario::from_path(&path)?.prepare()?;
    for name in ["A", "C"] {
        let region = p.region(name).ok_or("missing region")?;
        let (_, on) = p.measure(region, 60.0, true)?;
        let (_, off) = p.measure(region, 60.0, false)?;
        println!("{name}: controlled {:.4}, uncontrolled {:.4}", on.total, off.total);
    }
    Ok(())
}
