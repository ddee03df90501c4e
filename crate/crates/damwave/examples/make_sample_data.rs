//! Regenerates the committed sample inputs under `data/`.
//!
//! ```text
//! cargo run -p damwave --example make_sample_data
//! ```
//!
//! Everything written here is deterministic, so the files in version
//! control never drift from what this program produces.

use std::fs;
use std::path::Path;

use damwave::simulation::load_scenario;
use damwave::terrain::TerrainRaster;

fn seamount_raster() -> TerrainRaster {
    // 48×32 cells of 0.05° over [0, 2.4]°×[0, 1.6]°: an abyssal plain at
    // −1000 m with a seamount rising to −10 m. The steep flanks drive the
    // adaptive refinement; the plain stays coarse.
    let (ncols, nrows, cell) = (48, 32, 0.05);
    let (peak_lon, peak_lat) = (1.2, 0.8);
    let mut values = Vec::with_capacity(ncols * nrows);
    for row in 0..nrows {
        // ESRI ASCII grids store the northernmost row first.
        let lat = (nrows - 1 - row) as f64 * cell + cell / 2.0;
        for col in 0..ncols {
            let lon = col as f64 * cell + cell / 2.0;
            let d2 = ((lon - peak_lon) / 0.25).powi(2) + ((lat - peak_lat) / 0.25).powi(2);
            let elev = -1000.0 + 990.0 * (-d2).exp();
            values.push((elev * 100.0).round() / 100.0);
        }
    }
    TerrainRaster::new(ncols, nrows, 0.0, 0.0, cell, -9999.0, values).unwrap()
}

fn channel_raster() -> TerrainRaster {
    // Flat 100 m deep channel, 1.1°×0.1°.
    TerrainRaster::new(22, 2, 0.0, 0.0, 0.05, -9999.0, vec![-100.0; 44]).unwrap()
}

fn two_basin_raster() -> TerrainRaster {
    // Two 4 m deep basins joined by a submerged ridge crest at −0.5 m.
    let (ncols, nrows, cell) = (30, 10, 0.02);
    let mut values = Vec::with_capacity(ncols * nrows);
    for _row in 0..nrows {
        for col in 0..ncols {
            let lon = col as f64 * cell + cell / 2.0;
            let elev = -4.0 + 3.5 * (-((lon - 0.3) / 0.04).powi(2)).exp();
            values.push((elev * 1000.0).round() / 1000.0);
        }
    }
    TerrainRaster::new(ncols, nrows, 0.0, 0.0, cell, -9999.0, values).unwrap()
}

const DAMBREAK_SCN: &str = "\
# Dam break beside a seamount: a raised reservoir north-west of the peak
# empties across the adaptively refined flank. Snapshots land every 10
# steps; watch the front in the two gauge files.

raster = data/seamount.asc
tolerance = 25
tau = 60
n_steps = 240
output_cadence = 10

region reservoir 2.0
  0.0 0.9
  0.9 0.9
  0.9 1.6
  0.0 1.6
end

gauge flank   1.00 0.95
gauge faraway 2.00 0.40
";

const CHANNEL_SCN: &str = "\
# Flat-bottom channel at 100 m depth: a 0.1 m step released at the west
# end travels east at the shallow-water celerity √(9.81·100) ≈ 31.3 m/s.
# Compare the threshold-crossing times in the two gauge files.

raster = data/channel.asc
uniform_rounds = 5
tau = 25
n_steps = 120
c0 = 0

region reservoir 0.1
  -0.01 -0.01
  0.205 -0.01
  0.205 0.11
  -0.01 0.11
end

gauge west 0.4 0.05
gauge east 0.8 0.05
";

const TWO_BASIN_SCN: &str = "\
# Two basins, one submerged ridge: the west basin starts 1 m high and
# spills over until both settle at the shared equilibrium (the level stays
# up — the overflow is permanent).

raster = data/two_basin.asc
tolerance = 0.2
tau = 2500
n_steps = 150
output_cadence = 25

region upper 1.0
  -0.01 -0.01
  0.25 -0.01
  0.25 0.21
  -0.01 0.21
end

gauge west 0.12 0.10
gauge ridge 0.30 0.10
gauge east 0.48 0.10
";

fn main() {
    let data = Path::new("data");
    fs::create_dir_all(data).unwrap();

    seamount_raster().save(data.join("seamount.asc")).unwrap();
    channel_raster().save(data.join("channel.asc")).unwrap();
    two_basin_raster().save(data.join("two_basin.asc")).unwrap();

    for (name, text) in [
        ("dambreak.scn", DAMBREAK_SCN),
        ("channel.scn", CHANNEL_SCN),
        ("two_basin.scn", TWO_BASIN_SCN),
    ] {
        let path = data.join(name);
        fs::write(&path, text).unwrap();
        // Self-check: every committed scenario must parse and validate.
        load_scenario(&path).unwrap();
        println!("wrote {}", path.display());
    }
    println!("wrote data/seamount.asc, data/channel.asc, data/two_basin.asc");
}
