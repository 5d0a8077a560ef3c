//! Little-endian binary containers for frames, maps and spectrograms.
//!
//! * `RDF1`: magic, `u32 K`, `u32 L`, `u32 frame_count`, `f32 frame_rate`, then
//!   each frame chirp-major (`l` outer, `k` inner) as `(re, im)` `f32` pairs.
//! * `RDM1`: magic, `u32 rows`, `u32 cols`, row-major `f32`. A map sequence is
//!   stored as consecutive records in one file.
//! * `TDS1`: magic, `u32 rows` (time), `u32 cols` (Doppler), row-major `f32`.
//!
//! Writers go through [`write_atomic`], so a failed write never leaves a
//! partial file at the destination.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::radarproc::{centered_doppler_axis, RadarFrame, RangeDopplerMap, TimeDopplerSpectrogram};

pub const RDF_MAGIC: &[u8; 4] = b"RDF1";
pub const RDM_MAGIC: &[u8; 4] = b"RDM1";
pub const TDS_MAGIC: &[u8; 4] = b"TDS1";

/// Writes `bytes` to a sibling temp file, syncs it, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::input(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| -> io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, pos: 0, what }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated(format!(
                "{}: needed {n} bytes at offset {}, {} left",
                self.what,
                self.pos,
                self.remaining()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn magic(&mut self, expect: &[u8; 4]) -> Result<()> {
        let m = self.take(4)?;
        if m != expect {
            return Err(Error::Format(format!(
                "{}: bad magic {:?}, expected {:?}",
                self.what,
                String::from_utf8_lossy(m),
                String::from_utf8_lossy(expect)
            )));
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| {
            Error::Format(format!("{}: payload size overflow", self.what))
        })?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f32(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&(v as f32).to_le_bytes());
}

fn dim(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::input(format!("{what} {n} does not fit in u32")))
}

/// Serializes frames, which must share `K`, `L` and frame rate.
pub fn encode_rdf(frames: &[RadarFrame]) -> Result<Vec<u8>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::input("RDF1 needs at least one frame"))?;
    let (k, l) = (first.fast_time(), first.chirps());
    let mut out = Vec::with_capacity(20 + frames.len() * k * l * 8);
    out.extend_from_slice(RDF_MAGIC);
    put_u32(&mut out, dim(k, "K")?);
    put_u32(&mut out, dim(l, "L")?);
    put_u32(&mut out, dim(frames.len(), "frame count")?);
    put_f32(&mut out, first.frame_rate);
    for f in frames {
        if f.fast_time() != k || f.chirps() != l {
            return Err(Error::input("all frames in an RDF1 file must share K and L"));
        }
        for ll in 0..l {
            for kk in 0..k {
                let s = f.get(kk, ll);
                put_f32(&mut out, s.re);
                put_f32(&mut out, s.im);
            }
        }
    }
    Ok(out)
}

pub fn decode_rdf(bytes: &[u8]) -> Result<Vec<RadarFrame>> {
    let mut r = Reader::new(bytes, "RDF1");
    r.magic(RDF_MAGIC)?;
    let k = r.u32()? as usize;
    let l = r.u32()? as usize;
    let count = r.u32()? as usize;
    let rate = r.f32()? as f64;
    let per_frame = k
        .checked_mul(l)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("RDF1: frame size overflow".into()))?;
    if r.remaining() < per_frame.saturating_mul(count) {
        return Err(Error::Truncated(format!(
            "RDF1: header declares {count} frames of {k}x{l}, payload has {} bytes",
            r.remaining()
        )));
    }
    let mut frames = Vec::with_capacity(count);
    for index in 0..count {
        let mut samples = vec![Complex64::new(0.0, 0.0); k * l];
        for ll in 0..l {
            for kk in 0..k {
                let re = r.f32()? as f64;
                let im = r.f32()? as f64;
                samples[kk * l + ll] = Complex64::new(re, im);
            }
        }
        frames.push(RadarFrame::new(samples, k, l, index as u64, rate)?);
    }
    if r.remaining() != 0 {
        return Err(Error::Format(format!("RDF1: {} trailing bytes", r.remaining())));
    }
    Ok(frames)
}

fn encode_grid(out: &mut Vec<u8>, magic: &[u8; 4], rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    out.extend_from_slice(magic);
    put_u32(out, dim(rows, "rows")?);
    put_u32(out, dim(cols, "cols")?);
    for &v in data {
        put_f32(out, v);
    }
    Ok(())
}

fn decode_grid(r: &mut Reader<'_>, magic: &[u8; 4]) -> Result<(usize, usize, Vec<f64>)> {
    r.magic(magic)?;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("grid size overflow".into()))?;
    let data = r.f32s(n)?;
    Ok((rows, cols, data))
}

pub fn encode_rdm_sequence(maps: &[RangeDopplerMap]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for m in maps {
        encode_grid(&mut out, RDM_MAGIC, m.rows(), m.cols(), &m.magnitude_db)?;
    }
    Ok(out)
}

/// Decodes every record; range axes come back as bin indices.
pub fn decode_rdm_sequence(bytes: &[u8]) -> Result<Vec<RangeDopplerMap>> {
    let mut r = Reader::new(bytes, "RDM1");
    let mut maps = Vec::new();
    while r.remaining() > 0 {
        let (rows, cols, data) = decode_grid(&mut r, RDM_MAGIC)?;
        let mut m = RangeDopplerMap::with_default_axes(data, rows, cols)?;
        m.frame_index = maps.len() as u64;
        maps.push(m);
    }
    if maps.is_empty() {
        return Err(Error::Format("RDM1: file holds no maps".into()));
    }
    Ok(maps)
}

pub fn encode_tds(tds: &TimeDopplerSpectrogram) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    encode_grid(&mut out, TDS_MAGIC, tds.len(), tds.doppler_bins(), tds.as_slice())?;
    Ok(out)
}

pub fn decode_tds(bytes: &[u8], frame_rate: f64) -> Result<TimeDopplerSpectrogram> {
    let mut r = Reader::new(bytes, "TDS1");
    let (rows, cols, data) = decode_grid(&mut r, TDS_MAGIC)?;
    if r.remaining() != 0 {
        return Err(Error::Format(format!("TDS1: {} trailing bytes", r.remaining())));
    }
    let mut tds = TimeDopplerSpectrogram::from_rows(data, rows, cols, frame_rate)?;
    tds.doppler_axis = centered_doppler_axis(cols);
    Ok(tds)
}

pub fn write_rdf(path: &Path, frames: &[RadarFrame]) -> Result<()> {
    write_atomic(path, &encode_rdf(frames)?)
}

pub fn read_rdf(path: &Path) -> Result<Vec<RadarFrame>> {
    decode_rdf(&fs::read(path)?)
}

pub fn write_rdm_sequence(path: &Path, maps: &[RangeDopplerMap]) -> Result<()> {
    write_atomic(path, &encode_rdm_sequence(maps)?)
}

pub fn read_rdm_sequence(path: &Path) -> Result<Vec<RangeDopplerMap>> {
    decode_rdm_sequence(&fs::read(path)?)
}

pub fn write_tds(path: &Path, tds: &TimeDopplerSpectrogram) -> Result<()> {
    write_atomic(path, &encode_tds(tds)?)
}

pub fn read_tds(path: &Path, frame_rate: f64) -> Result<TimeDopplerSpectrogram> {
    decode_tds(&fs::read(path)?, frame_rate)
}

/// `key=value` lines, sorted by key.
pub fn encode_metadata(meta: &BTreeMap<String, String>) -> String {
    meta.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn decode_metadata(text: &str) -> Result<BTreeMap<String, String>> {
    let mut meta = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("metadata line {}: missing '='", n + 1)))?;
        meta.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames() -> Vec<RadarFrame> {
        (0..3)
            .map(|i| {
                let s = (0..12)
                    .map(|n| Complex64::new(n as f64 * 0.5, -(i as f64)))
                    .collect();
                RadarFrame::new(s, 3, 4, i, 15.0).unwrap()
            })
            .collect()
    }

    #[test]
    fn rdf_layout_is_chirp_major() {
        let bytes = encode_rdf(&frames()).unwrap();
        assert_eq!(&bytes[..4], b"RDF1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 3);
        assert_eq!(f32::from_le_bytes(bytes[16..20].try_into().unwrap()), 15.0);
        // second sample on disk is (k=1, l=0) which sits at k*L + l = 4 in memory
        let re = f32::from_le_bytes(bytes[28..32].try_into().unwrap());
        assert_eq!(re, 2.0);
        assert_eq!(bytes.len(), 20 + 3 * 12 * 8);
        assert_eq!(decode_rdf(&bytes).unwrap(), frames());
    }

    #[test]
    fn truncated_and_bad_magic() {
        let bytes = encode_rdf(&frames()).unwrap();
        assert!(matches!(decode_rdf(&bytes[..bytes.len() - 3]), Err(Error::Truncated(_))));
        assert!(matches!(decode_rdf(&bytes[..10]), Err(Error::Truncated(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_rdf(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn rdm_sequence_records() {
        let a = RangeDopplerMap::with_default_axes(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2, 3).unwrap();
        let b = RangeDopplerMap::with_default_axes(vec![-1.5; 6], 2, 3).unwrap();
        let bytes = encode_rdm_sequence(&[a.clone(), b]).unwrap();
        assert_eq!(bytes.len(), 2 * (12 + 24));
        let back = decode_rdm_sequence(&bytes).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].magnitude_db, a.magnitude_db);
        assert!(decode_rdm_sequence(&bytes[..30]).is_err());
    }

    #[test]
    fn metadata_lines() {
        let mut m = BTreeMap::new();
        m.insert("seed".to_string(), "7".to_string());
        m.insert("gait_freq".to_string(), "1.25".to_string());
        let text = encode_metadata(&m);
        assert_eq!(text, "gait_freq=1.25\nseed=7\n");
        assert_eq!(decode_metadata(&text).unwrap(), m);
        assert!(decode_metadata("novalue").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
