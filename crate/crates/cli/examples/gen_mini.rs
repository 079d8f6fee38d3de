//! Regenerate the bundled mini benchmark:
//! `cargo run -p drselect-cli --example gen_mini -- crates/cli/fixtures/mini`

use std::path::PathBuf;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini"));
    match drselect_cli::synth::generate(&dir, 20240611) {
        Ok(config) => println!("wrote {}", config.display()),
        Err(e) => {
            eprintln!("gen_mini: {e}");
            std::process::exit(1);
        }
    }
}
