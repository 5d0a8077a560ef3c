//! Pedestrian recognition from FMCW radar micro-Doppler signatures.
//!
//! The crate covers the whole chain: frames to range-Doppler maps and
//! time-Doppler spectrograms ([`radarproc`]), gait statistics ([`features`]),
//! a small neural-network engine ([`nn`]), the frame-predicting GAN used for
//! data enhancement ([`rdgan`]), the fused multi-characteristic classifier
//! ([`mcl`]), and a point-scatterer simulator for desk-scale data ([`simkit`]).

pub mod error;
pub mod features;
pub mod formats;
pub mod mcl;
pub mod nn;
pub mod pipeline;
pub mod radarproc;
pub mod rdgan;
pub mod simkit;

pub use error::{Error, Result};
