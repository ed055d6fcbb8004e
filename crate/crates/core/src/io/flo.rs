//! Middlebury `.flo`: f32 magic 202021.25, i32 width, i32 height, then
//! row-major interleaved `(u, v)` f32, all little-endian.

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::tensor::Tensor;

pub const FLO_MAGIC: f32 = 202021.25;

/// Encode a flow field. The validity mask, if any, is not stored.
pub fn write_flo(flow: &FlowField) -> Result<Vec<u8>> {
    if !flow.tensor().is_finite() {
        return Err(Error::invalid("write_flo", "flow contains non-finite values"));
    }
    let (h, w) = (flow.height(), flow.width());
    let mut out = Vec::with_capacity(12 + 8 * h * w);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for (u, v) in flow.u().iter().zip(flow.v()) {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn word(bytes: &[u8], at: usize) -> [u8; 4] {
    bytes[at..at + 4].try_into().expect("four bytes")
}

pub fn read_flo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < 12 {
        return Err(Error::Truncated(format!("{}-byte .flo header", bytes.len())));
    }
    let magic = f32::from_le_bytes(word(bytes, 0));
    if magic != FLO_MAGIC {
        return Err(Error::BadMagic(format!(".flo magic {magic}, expected {FLO_MAGIC}")));
    }
    let w = i32::from_le_bytes(word(bytes, 4));
    let h = i32::from_le_bytes(word(bytes, 8));
    if w <= 0 || h <= 0 {
        return Err(Error::Corrupt(format!(".flo dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let need = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Corrupt(format!(".flo dimensions {w}x{h} overflow")))?;
    let payload = &bytes[12..];
    if payload.len() < need {
        return Err(Error::Truncated(format!(
            ".flo payload has {} bytes, {w}x{h} needs {need}",
            payload.len()
        )));
    }
    if payload.len() > need {
        return Err(Error::Corrupt(format!("{} trailing bytes after .flo payload", payload.len() - need)));
    }
    let n = w * h;
    let mut data = vec![0f32; 2 * n];
    for (i, px) in payload.chunks_exact(8).enumerate() {
        data[i] = f32::from_le_bytes(word(px, 0));
        data[n + i] = f32::from_le_bytes(word(px, 4));
    }
    FlowField::new(Tensor::new(2, h, w, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_pixel_file() {
        let bytes = write_flo(&FlowField::zeros(1, 1)).unwrap();
        assert_eq!(bytes.len(), 20);
        let back = read_flo(&bytes).unwrap();
        assert_eq!(back.tensor().data(), &[0.0, 0.0]);
    }

    #[test]
    fn layout_is_interleaved() {
        let f = FlowField::new(Tensor::new(2, 1, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        let b = write_flo(&f).unwrap();
        let floats: Vec<f32> = b[12..].chunks(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(floats, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn rejects_bad_files() {
        let mut b = write_flo(&FlowField::zeros(2, 2)).unwrap();
        assert!(matches!(read_flo(&b[..30]), Err(Error::Truncated(_))));
        assert!(matches!(read_flo(&b[..8]), Err(Error::Truncated(_))));
        b[..4].copy_from_slice(&0f32.to_le_bytes());
        assert!(matches!(read_flo(&b), Err(Error::BadMagic(_))));
        let f = FlowField::constant(1, 1, f32::NAN, 0.0);
        assert!(write_flo(&f).is_err());
    }
}
