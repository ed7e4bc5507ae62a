//! Flat binary container for trained stacks.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset 0   "EBMM"
//! offset 4   version: u32 (= 1)
//! offset 8   kind: u8 (0 = DBN, 1 = DBM)
//! offset 9   layer count: u8
//! offset 10  six zero bytes of padding
//! per layer  m: u32, n: u32, W (m·n f64, row-major), a (m f64), b (n f64)
//! ```

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::deep::{ModelKind, StackedModel};
use crate::error::{Error, Result};
use crate::rbm::RbmLayer;

pub const MAGIC: &[u8; 4] = b"EBMM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode_model(model: &StackedModel) -> Result<Vec<u8>> {
    let depth =
        u8::try_from(model.depth()).map_err(|_| Error::Contract("more than 255 layers".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match model.kind() {
        ModelKind::Dbn => 0,
        ModelKind::Dbm => 1,
    });
    out.push(depth);
    out.extend_from_slice(&[0u8; 6]);
    for layer in model.layers() {
        for dim in [layer.visible(), layer.hidden()] {
            let dim = u32::try_from(dim)
                .map_err(|_| Error::Contract("layer dimension exceeds u32".into()))?;
            out.extend_from_slice(&dim.to_le_bytes());
        }
        for x in layer
            .weights
            .iter()
            .chain(&layer.visible_bias)
            .chain(&layer.hidden_bias)
        {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .offset
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::parse(
                    "model",
                    format!(
                        "truncated at byte offset {} (needed {len} more bytes)",
                        self.offset
                    ),
                )
            })?;
        let slice = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            count
                .checked_mul(8)
                .ok_or_else(|| Error::parse("model", "dimension overflow"))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<StackedModel> {
    let mut r = Reader { bytes, offset: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::parse(
            "model",
            "bad magic at byte offset 0 (expected \"EBMM\")",
        ));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::parse(
            "model",
            format!("unsupported version {version} at byte offset 4"),
        ));
    }
    let kind = match r.take(1)?[0] {
        0 => ModelKind::Dbn,
        1 => ModelKind::Dbm,
        other => {
            return Err(Error::parse(
                "model",
                format!("unknown model kind {other} at byte offset 8"),
            ))
        }
    };
    let depth = r.take(1)?[0] as usize;
    r.take(6)?;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let m = r.u32()? as usize;
        let n = r.u32()? as usize;
        let w = Array2::from_shape_vec((m, n), r.f64s(m * n)?)
            .map_err(|e| Error::parse("model", e.to_string()))?;
        let a = Array1::from(r.f64s(m)?);
        let b = Array1::from(r.f64s(n)?);
        layers.push(RbmLayer::from_parts(w, a, b)?);
    }
    if r.offset != bytes.len() {
        return Err(Error::parse(
            "model",
            format!(
                "{} trailing bytes after the last layer",
                bytes.len() - r.offset
            ),
        ));
    }
    StackedModel::new(kind, layers)
}

pub fn save_model(model: &StackedModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<StackedModel> {
    decode_model(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    #[test]
    fn header_layout_is_exact() {
        let model =
            StackedModel::init(ModelKind::Dbm, &[3, 2, 1], 0.1, &mut rng_from_seed(1)).unwrap();
        let bytes = encode_model(&model).unwrap();
        assert_eq!(&bytes[..4], b"EBMM");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(bytes[8], 1);
        assert_eq!(bytes[9], 2);
        assert_eq!(&bytes[10..16], &[0; 6]);
        assert_eq!(&bytes[16..20], &3u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &2u32.to_le_bytes());
        assert_eq!(
            &bytes[24..32],
            &model.layers()[0].weights[[0, 0]].to_le_bytes()
        );
        assert_eq!(
            &bytes[32..40],
            &model.layers()[0].weights[[0, 1]].to_le_bytes()
        );
        let expected = 16 + (8 + 8 * (6 + 3 + 2)) + (8 + 8 * (2 + 2 + 1));
        assert_eq!(bytes.len(), expected);
    }

    #[test]
    fn round_trip_preserves_parameters() {
        let model =
            StackedModel::init(ModelKind::Dbn, &[7, 4, 3], 0.5, &mut rng_from_seed(2)).unwrap();
        let back = decode_model(&encode_model(&model).unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn corrupt_inputs_report_offsets() {
        let model =
            StackedModel::init(ModelKind::Dbn, &[3, 2], 0.5, &mut rng_from_seed(3)).unwrap();
        let mut bytes = encode_model(&model).unwrap();
        let truncated = decode_model(&bytes[..bytes.len() - 3])
            .unwrap_err()
            .to_string();
        assert!(truncated.contains("byte offset"), "{truncated}");
        bytes[0] = b'X';
        assert!(decode_model(&bytes)
            .unwrap_err()
            .to_string()
            .contains("magic"));
    }
}
