//! Prints the complete default run configuration as TOML.

fn main() {
    print!("{}", wsimplex::RunConfig::default().to_toml());
}
