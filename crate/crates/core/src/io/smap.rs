//! SMAP: a minimal container for stacks of score maps.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SMAP"
//! 4       1     version (1)
//! 5       4     height, u32 little-endian
//! 9       4     width, u32 little-endian
//! 13      1     channel count C (1..=7)
//! 14      4*C*H*W  f32 little-endian, channel-major then row-major
//! ```
//!
//! Channel order is fixed: ts, tf, tr, up, down, left, right. A file with
//! fewer than seven channels holds a prefix of that order; the rest read
//! as zero.

use crate::decoder::PredictionMaps;
use crate::error::MapFormatError;
use crate::grid::ScoreMap;

pub const MAGIC: [u8; 4] = *b"SMAP";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;
pub const MAX_CHANNELS: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub height: u32,
    pub width: u32,
    pub channels: Vec<ScoreMap>,
}

impl MapFile {
    pub fn from_predictions(maps: &PredictionMaps) -> Self {
        MapFile {
            height: maps.height() as u32,
            width: maps.width() as u32,
            channels: maps.channels().iter().map(|&c| c.clone()).collect(),
        }
    }

    pub fn to_predictions(&self) -> PredictionMaps {
        let mut maps = PredictionMaps::zeros(self.width as usize, self.height as usize);
        for (dst, src) in maps.channels_mut().into_iter().zip(&self.channels) {
            *dst = src.clone();
        }
        maps
    }

    /// Serializes; values are stored as `f32`.
    pub fn encode(&self) -> Vec<u8> {
        let n = self.width as usize * self.height as usize;
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * n * self.channels.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.push(self.channels.len() as u8);
        for ch in &self.channels {
            for &v in ch.as_slice() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<MapFile, MapFormatError> {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(MapFormatError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(MapFormatError::TruncatedHeader);
        }
        if bytes[4] != VERSION {
            return Err(MapFormatError::UnsupportedVersion(bytes[4]));
        }
        let height = u32::from_le_bytes(bytes[5..9].try_into().unwrap());
        let width = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
        let c = bytes[13];
        let bad = MapFormatError::BadDimensions {
            width,
            height,
            channels: c,
        };
        if width == 0 || height == 0 || c == 0 || c as usize > MAX_CHANNELS {
            return Err(bad);
        }
        let n = (width as usize).checked_mul(height as usize).ok_or(bad.clone())?;
        let expected = n.checked_mul(4 * c as usize).ok_or(bad)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() < expected {
            return Err(MapFormatError::TruncatedPayload {
                expected,
                got: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(MapFormatError::TrailingBytes(payload.len() - expected));
        }
        let mut channels = Vec::with_capacity(c as usize);
        for (channel, chunk) in payload.chunks_exact(4 * n).enumerate() {
            let mut vals = Vec::with_capacity(n);
            for (index, b) in chunk.chunks_exact(4).enumerate() {
                let v = f32::from_le_bytes(b.try_into().unwrap());
                if !v.is_finite() {
                    return Err(MapFormatError::NonFinite { channel, index });
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(MapFormatError::OutOfRange {
                        channel,
                        index,
                        value: v,
                    });
                }
                vals.push(v as f64);
            }
            channels.push(ScoreMap::from_vec(width as usize, height as usize, vals));
        }
        Ok(MapFile {
            height,
            width,
            channels,
        })
    }
}

/// Binary PGM (P5) of one channel, values scaled by 255 and rounded.
pub fn to_pgm(map: &ScoreMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    out.extend(
        map.as_slice()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_pixel() -> MapFile {
        MapFile {
            height: 1,
            width: 1,
            channels: vec![ScoreMap::filled(1, 1, 0.5)],
        }
    }

    #[test]
    fn single_value_layout() {
        let bytes = one_pixel().encode();
        assert_eq!(bytes.len(), HEADER_LEN + 4);
        assert_eq!(&bytes[..5], b"SMAP\x01");
        assert_eq!(&bytes[14..], &0.5f32.to_le_bytes());
        assert_eq!(MapFile::decode(&bytes).unwrap(), one_pixel());
    }

    #[test]
    fn malformed_inputs() {
        let good = one_pixel().encode();
        assert_eq!(
            MapFile::decode(&good[..good.len() - 1]),
            Err(MapFormatError::TruncatedPayload { expected: 4, got: 3 })
        );
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(MapFile::decode(&bad), Err(MapFormatError::BadMagic(_))));
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(MapFile::decode(&bad), Err(MapFormatError::UnsupportedVersion(2)));
        assert_eq!(MapFile::decode(&good[..10]), Err(MapFormatError::TruncatedHeader));
        let mut bad = good.clone();
        bad.push(0);
        assert_eq!(MapFile::decode(&bad), Err(MapFormatError::TrailingBytes(1)));
        let mut bad = good.clone();
        bad[14..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(MapFile::decode(&bad), Err(MapFormatError::NonFinite { .. })));
        let mut bad = good.clone();
        bad[14..].copy_from_slice(&1.5f32.to_le_bytes());
        assert!(matches!(MapFile::decode(&bad), Err(MapFormatError::OutOfRange { .. })));
        let mut bad = good;
        bad[13] = 8;
        assert!(matches!(
            MapFile::decode(&bad),
            Err(MapFormatError::BadDimensions { .. })
        ));
    }

    #[test]
    fn short_file_fills_missing_channels() {
        let maps = one_pixel().to_predictions();
        assert_eq!(maps.ts[0], 0.5);
        assert_eq!(maps.right[0], 0.0);
    }

    #[test]
    fn pgm_header() {
        let pgm = to_pgm(&ScoreMap::filled(2, 1, 1.0));
        assert_eq!(pgm, b"P5\n2 1\n255\n\xff\xff");
    }
}
