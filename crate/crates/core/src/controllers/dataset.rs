//! Raster dataset dump: one flat grayscale file per frame plus a label sidecar.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::SegmentLabel;
use crate::error::{Error, Result};
use crate::sim::sensor::{RASTER_HEIGHT, RASTER_WIDTH};
use crate::sim::Raster;

pub const LABEL_FILE: &str = "labels.csv";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabelRow {
    file: String,
    width: usize,
    height: usize,
    label: SegmentLabel,
}

/// Writes `frame_NNNNN.gray` files and `labels.csv` into `dir`.
pub fn write_dataset(dir: &Path, frames: &[(Raster, SegmentLabel)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(LABEL_FILE)).map_err(csv_err)?;
    for (i, (img, label)) in frames.iter().enumerate() {
        let file = format!("frame_{i:05}.gray");
        fs::write(dir.join(&file), img.as_bytes())?;
        w.serialize(LabelRow {
            file,
            width: img.width(),
            height: img.height(),
            label: *label,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<Vec<(Raster, SegmentLabel)>> {
    let mut r = csv::Reader::from_path(dir.join(LABEL_FILE)).map_err(csv_err)?;
    let mut out = Vec::new();
    for row in r.deserialize::<LabelRow>() {
        let row = row.map_err(csv_err)?;
        if (row.width, row.height) != (RASTER_WIDTH, RASTER_HEIGHT) {
            return Err(Error::format(format!(
                "{}: {}x{} frame, expected {RASTER_WIDTH}x{RASTER_HEIGHT}",
                row.file, row.width, row.height
            )));
        }
        let bytes = fs::read(dir.join(&row.file))?;
        let img = Raster::from_vec(row.width, row.height, bytes)
            .map_err(|e| Error::format(format!("{}: {e}", row.file)))?;
        out.push((img, row.label));
    }
    Ok(out)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format(format!("{other:?}")),
    }
}
