#![allow(dead_code)]
pub mod raster;
