pub mod bench;
pub mod denoise;
pub mod simulate;
pub mod spectra;
