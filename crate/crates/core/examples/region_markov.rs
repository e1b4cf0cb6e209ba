//! Region dependence of the non-Markovian content for a long resonator:
//! the whole cavity versus its half next to the left mirror.
//! Slow without `--release`.

use cavity_ctl::scenario::Scenario;
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fig9.toml");
    let p = Scenario::from_path(&path)?.prepare()?;
    for name in ["B", "B'"] {
        let region = p.region(name).ok_or("missing region")?;
        let (_, id) = p.measure(region, 30.0, false)?;
        println!("{name:>2} [{:.2}, {:.2}]: ID total = {:.4}", region.x_lo, region.x_hi, id.total);
    }
    Ok(())
}
