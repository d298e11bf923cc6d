//! Writes the synthetic grids shipped in `data/`.
//!
//! Usage: `cargo run -p grayspace --example synth_grids -- [DIR]`

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use grayspace::griddata::write_grid_csv;
use grayspace::synth::{synthesize, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    for spec in [SynthSpec::scattered(), SynthSpec::clustered()] {
        for (res, suffix) in [(100.0, "100m"), (1000.0, "1km")] {
            let grid = synthesize(&spec, res)?;
            let path = dir.join(format!("grid-{}-{suffix}.csv", spec.layout.as_str()));
            write_grid_csv(&grid, BufWriter::new(File::create(&path)?))?;
            println!("{} ({} households)", path.display(), grid.total_households());
        }
    }
    Ok(())
}
