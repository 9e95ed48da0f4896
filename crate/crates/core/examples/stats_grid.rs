//! How well the mean and variance come back as the sample grows.

use medshare::cli::{stats_experiment, write_stats_csv, StatsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = stats_experiment(&StatsConfig::default(), 1)?;
    write_stats_csv(&rows, std::io::stdout())?;
    Ok(())
}
