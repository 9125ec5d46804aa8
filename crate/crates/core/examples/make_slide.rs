//! Writes a synthetic stained-slide raster, handy for trying the CLI
//! without real data:
//!
//! ```text
//! cargo run --release -p stainbench-core --example make_slide -- out.png 1 512
//! ```

use stainbench_core::imagecore::save_tile;
use stainbench_core::synthetic::stain_tile;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 3 {
        eprintln!("usage: make_slide <out.png> <seed> [side-length]");
        std::process::exit(1);
    }
    let out = &args[1];
    let seed: u64 = args[2].parse().expect("seed must be an integer");
    let size: u32 = args
        .get(3)
        .map(|s| s.parse().expect("side length must be an integer"))
        .unwrap_or(512);
    let tile = stain_tile(seed, size, 0.004);
    save_tile(&tile, out).expect("write image");
    println!("wrote {out} ({size}x{size})");
}
