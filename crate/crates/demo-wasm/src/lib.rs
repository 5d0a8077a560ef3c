//! Browser bindings: one processed range-Doppler frame, a walker's
//! spectrogram, and its gait features. All use the default pipeline config
//! with the walker class chosen by the caller.

use demcl::features::{extract_features, FeatureWindowConfig};
use demcl::pipeline::{process_frames, PipelineConfig};
use demcl::radarproc::{tds_from_rdms, RangeDopplerMap, TimeDopplerSpectrogram};
use demcl::simkit::simulate_pedestrian;
use wasm_bindgen::prelude::*;

fn config(seed: u64) -> PipelineConfig {
    PipelineConfig {
        seed,
        ..PipelineConfig::default()
    }
}

fn class_checked(cfg: &PipelineConfig, class: usize) -> demcl::Result<()> {
    if class >= cfg.dataset.classes {
        return Err(demcl::Error::InvalidConfig(format!(
            "class {class} outside 0..{}",
            cfg.dataset.classes
        )));
    }
    Ok(())
}

/// Denoised, clutter-suppressed map of one walker at time `t_s`.
pub fn frame_map(class: usize, t_s: f64, seed: u64) -> demcl::Result<RangeDopplerMap> {
    let cfg = config(seed);
    class_checked(&cfg, class)?;
    let frames = (t_s.max(0.0) * cfg.radar.frame_rate).round() + 1.0;
    let mut rec = simulate_pedestrian(&cfg.profile(class), &cfg.radar, frames / cfg.radar.frame_rate)?;
    let last = rec.frames.pop().expect("at least one frame");
    let mut maps = process_frames(&[last], &cfg.range_gate()?, &cfg.processing)?;
    Ok(maps.remove(0))
}

/// Spectrogram of one walker over `duration_s` seconds.
pub fn walker_spectrogram(class: usize, duration_s: f64, seed: u64) -> demcl::Result<TimeDopplerSpectrogram> {
    let cfg = config(seed);
    class_checked(&cfg, class)?;
    let rec = simulate_pedestrian(&cfg.profile(class), &cfg.radar, duration_s)?;
    let maps = process_frames(&rec.frames, &cfg.range_gate()?, &cfg.processing)?;
    tds_from_rdms(&maps, cfg.radar.frame_rate)
}

/// `[f1, f2, f3, f4]` over the last `z` columns of the walker's spectrogram.
pub fn walker_features(class: usize, duration_s: f64, seed: u64) -> demcl::Result<[f64; 4]> {
    let tds = walker_spectrogram(class, duration_s, seed)?;
    let mut fcfg = FeatureWindowConfig {
        fallback_period_s: Some(1.0),
        ..FeatureWindowConfig::default()
    };
    fcfg.z = fcfg.z.min(tds.len());
    let window = tds.window(tds.len() - fcfg.z, fcfg.z)?;
    Ok(extract_features(&window, &fcfg)?.to_array())
}

fn js_err(e: demcl::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Row-major dB map; `rdm_shape` gives its rows and columns.
#[wasm_bindgen]
pub fn rdm(class: usize, t_s: f64, seed: u64) -> Result<Vec<f64>, JsValue> {
    let m = frame_map(class, t_s, seed).map_err(js_err)?;
    let mut out = Vec::with_capacity(m.rows() * m.cols());
    for r in 0..m.rows() {
        for d in 0..m.cols() {
            out.push(m.at(r, d));
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn rdm_shape() -> Result<Vec<usize>, JsValue> {
    let cfg = PipelineConfig::default();
    let gate = cfg.range_gate().map_err(js_err)?;
    Ok(vec![gate.len(), cfg.radar.chirps])
}

/// Column-major spectrogram: `doppler_bins` values per frame.
#[wasm_bindgen]
pub fn tds(class: usize, duration_s: f64, seed: u64) -> Result<Vec<f64>, JsValue> {
    Ok(walker_spectrogram(class, duration_s, seed).map_err(js_err)?.as_slice().to_vec())
}

#[wasm_bindgen]
pub fn features(class: usize, duration_s: f64, seed: u64) -> Result<Vec<f64>, JsValue> {
    Ok(walker_features(class, duration_s, seed).map_err(js_err)?.to_vec())
}
