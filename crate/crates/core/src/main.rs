use clap::Parser;
use wavesat::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
