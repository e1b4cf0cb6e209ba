//! Running a bundled scenario through the library entry point used by the
//! command-line tool.

use cavity_ctl::scenario::{run_scenario, Command, Options};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fig5.toml");
    let out = tempfile::tempdir()?;
    let opts = Options { out_dir: out.path().to_path_buf(), binary: false, quiet: true };
    let manifest = run_scenario(Command::Run, &config, &opts)?;
    println!("scenario {}", manifest.scenario_hash);
    for o in &manifest.outputs {
        println!("  {} ({} bytes, sha256 {})", o.path, o.bytes, &o.sha256[..16]);
    }
    Ok(())
}
