//! Quick per-tile transfer timings on synthetic 256x256 tiles:
//!
//! ```text
//! cargo run --release -p stainbench-core --example timing_probe
//! ```

use stainbench_core::stainalg::{
    apply_colorstat, apply_stain_transfer, fit_colorstat, fit_stain_profile, StainMethod,
    StainParams,
};
use stainbench_core::synthetic::stain_tile;
use std::time::Instant;

fn main() {
    let tiles: Vec<_> = (0..20).map(|s| stain_tile(s, 256, 0.005)).collect();
    let params = StainParams::default();

    let cs = fit_colorstat(&tiles[..4]).unwrap();
    let t = Instant::now();
    for tile in &tiles {
        std::hint::black_box(apply_colorstat(tile, &cs));
    }
    println!("colorstat: {:?}/tile", t.elapsed() / tiles.len() as u32);

    let mk = fit_stain_profile(&tiles[..4], StainMethod::Macenko, &params).unwrap();
    let t = Instant::now();
    for tile in &tiles {
        std::hint::black_box(apply_stain_transfer(tile, &mk.profile, &params).unwrap());
    }
    println!("macenko:   {:?}/tile", t.elapsed() / tiles.len() as u32);

    let vh = fit_stain_profile(&tiles[..2], StainMethod::Vahadane, &params).unwrap();
    let t = Instant::now();
    for tile in &tiles[..6] {
        std::hint::black_box(apply_stain_transfer(tile, &vh.profile, &params).unwrap());
    }
    println!("vahadane:  {:?}/tile", t.elapsed() / 6);
}
