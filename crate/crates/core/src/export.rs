//! On-disk formats: 8-bit grayscale PNG observations and JSON-lines histories.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explorer::{History, HistoryEntry};
use crate::features::{BehaviorVector, ConstraintFeatures};
use crate::grid::Grid2D;
use crate::scalar::Scalar;

/// Encodes `round(255 * clip(v, 0, 1))` per cell as a grayscale PNG.
pub fn encode_png<T: Scalar>(obs: &Grid2D<T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, obs.width() as u32, obs.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        w.write_image_data(&obs.to_gray8())
            .map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes an 8-bit grayscale PNG into `(width, height, pixels)`.
pub fn decode_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let dec = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = dec.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Png(format!(
            "expected 8-bit grayscale, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, buf))
}

/// File name of an entry's observation.
pub fn observation_id(index: usize) -> String {
    format!("{index}.png")
}

/// One line of a history snapshot. Observations are stored separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord<T> {
    pub index: usize,
    pub params: Vec<T>,
    pub behavior: BehaviorVector<T>,
    pub constraint_features: ConstraintFeatures<T>,
    pub classification: i8,
    pub observation_id: String,
}

impl<T: Scalar> From<&HistoryEntry<T>> for HistoryRecord<T> {
    fn from(e: &HistoryEntry<T>) -> Self {
        Self {
            index: e.index,
            params: e.params.values.clone(),
            behavior: e.behavior,
            constraint_features: e.constraint_features,
            classification: e.classification,
            observation_id: observation_id(e.index),
        }
    }
}

/// Writes one JSON object per entry.
pub fn write_history_jsonl<T: Scalar + Serialize, W: Write>(
    entries: &[HistoryEntry<T>],
    mut w: W,
) -> Result<()> {
    for e in entries {
        let line = serde_json::to_string(&HistoryRecord::from(e))
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    Ok(())
}

pub fn history_jsonl<T: Scalar + Serialize>(history: &History<T>) -> String {
    let mut out = Vec::new();
    write_history_jsonl(history.entries(), &mut out).expect("writing to memory");
    String::from_utf8(out).expect("json is utf-8")
}

pub fn read_history_jsonl<T: Scalar + for<'de> Deserialize<'de>, R: BufRead>(
    r: R,
) -> Result<Vec<HistoryRecord<T>>> {
    r.lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| {
            let l = l.map_err(|e| Error::InvalidConfig(e.to_string()))?;
            serde_json::from_str(&l)
                .map_err(|e| Error::InvalidConfig(format!("bad history line: {e}")))
        })
        .collect()
}
