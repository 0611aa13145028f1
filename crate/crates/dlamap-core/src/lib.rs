#![no_std]
extern crate alloc;

pub mod planar_map;
pub mod mullin_codec;
pub mod walk_engines;
pub mod dla_engine;
pub mod map_surgery;
pub mod mated_crt;
