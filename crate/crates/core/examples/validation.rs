//! Runs one validation suite, by default the projection checks.
//!
//! `cargo run --release --example validation -- cube`

use clap::ValueEnum;
use graphot::validate::{run, Suite, ValidateOptions};

fn main() -> graphot::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "projections".into());
    let suite = Suite::from_str(&name, true).unwrap_or_else(|e| panic!("unknown suite {name}: {e}"));
    for c in run(suite, &ValidateOptions::default())? {
        println!("{c}");
    }
    Ok(())
}
