//! Flow files, image ingestion and flow visualisation.

mod color;
mod flo;
mod image;
mod kitti;

pub use self::color::{flow_to_color, COLOR_WHEEL};
pub use self::flo::{read_flo, write_flo, FLO_MAGIC};
pub use self::image::{decode_image, encode_png, read_image, write_png};
pub use self::kitti::{read_kitti_png, write_kitti_png, KITTI_MAX, KITTI_MIN};

use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowFormat {
    Flo,
    KittiPng,
}

/// A decoded flow file. KITTI files carry a validity mask on `flow`.
#[derive(Clone, Debug)]
pub struct FlowFileRecord {
    pub flow: FlowField,
    pub source_format: FlowFormat,
}

/// Read a `.flo` or KITTI `.png` flow file, chosen by extension.
pub fn read_flow_file(path: &Path) -> Result<FlowFileRecord> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let record = match ext.as_str() {
        "flo" => read_flo(&bytes).map(|flow| FlowFileRecord {
            flow,
            source_format: FlowFormat::Flo,
        }),
        "png" => read_kitti_png(&bytes),
        _ => Err(Error::invalid("read_flow_file", format!("unknown flow file extension `{ext}`"))),
    };
    record.map_err(|e| e.in_file(path))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
