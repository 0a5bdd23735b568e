//! Writes the built-in reference instance to disk.
//!
//! Usage: `cargo run -p pdpcd --example export_toy [PATH]` (default
//! `instances/toy.json`, relative to the working directory).

use pdpcd::instance::store_instance;
use pdpcd::samples;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "instances/toy.json".into());
    store_instance(&path, &samples::toy()).expect("write instance");
    println!("wrote {path}");
}
