//! Binary raster file format.
//!
//! Layout: a 16-byte header (magic `BEVG`, u32 side, f32 resolution, u32
//! channel count, all little-endian) followed by `channel count` row-major
//! rasters of 32-bit little-endian floats.

use super::GridError;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

pub const RASTER_MAGIC: &[u8; 4] = b"BEVG";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RasterErrorKind {
    BadMagic,
    Truncated,
    TrailingBytes,
}

impl fmt::Display for RasterErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RasterErrorKind::BadMagic => write!(f, "bad magic (expected \"BEVG\")"),
            RasterErrorKind::Truncated => write!(f, "file truncated"),
            RasterErrorKind::TrailingBytes => write!(f, "unexpected trailing bytes"),
        }
    }
}

/// Parsed contents of a raster file.
#[derive(Debug, Clone)]
pub struct RasterFile {
    pub side: u32,
    pub resolution_m: f32,
    pub channels: Vec<Vec<f32>>,
}

/// Writes `channels` rasters of `side * side` floats each.
pub fn write_rasters(
    path: &Path,
    side: u32,
    resolution_m: f32,
    channels: &[&[f32]],
) -> Result<(), GridError> {
    let cells = (side as usize) * (side as usize);
    for (i, ch) in channels.iter().enumerate() {
        if ch.len() != cells {
            return Err(GridError::DimensionMismatch(format!(
                "raster channel {i} has {} values, expected {cells}",
                ch.len()
            )));
        }
    }
    let io_err = |source| GridError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut buf =
        Vec::with_capacity(16 + channels.len() * cells * std::mem::size_of::<f32>());
    buf.extend_from_slice(RASTER_MAGIC);
    buf.extend_from_slice(&side.to_le_bytes());
    buf.extend_from_slice(&resolution_m.to_le_bytes());
    buf.extend_from_slice(&(channels.len() as u32).to_le_bytes());
    for ch in channels {
        for &v in *ch {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(&buf).map_err(io_err)?;
    Ok(())
}

/// Reads a raster file back; the inverse of [`write_rasters`].
pub fn read_rasters(path: &Path) -> Result<RasterFile, GridError> {
    let io_err = |source| GridError::Io {
        path: path.display().to_string(),
        source,
    };
    let format_err = |kind| GridError::Raster {
        path: path.display().to_string(),
        kind,
    };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(io_err)?
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    if bytes.len() < 16 {
        return Err(format_err(RasterErrorKind::Truncated));
    }
    if &bytes[0..4] != RASTER_MAGIC {
        return Err(format_err(RasterErrorKind::BadMagic));
    }
    let side = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let resolution_m = f32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let channel_count = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let cells = (side as usize) * (side as usize);
    let expected = 16 + channel_count * cells * 4;
    if bytes.len() < expected {
        return Err(format_err(RasterErrorKind::Truncated));
    }
    if bytes.len() > expected {
        return Err(format_err(RasterErrorKind::TrailingBytes));
    }
    let mut channels = Vec::with_capacity(channel_count);
    let mut offset = 16;
    for _ in 0..channel_count {
        let mut data = Vec::with_capacity(cells);
        for _ in 0..cells {
            data.push(f32::from_le_bytes(
                bytes[offset..offset + 4].try_into().unwrap(),
            ));
            offset += 4;
        }
        channels.push(data);
    }
    Ok(RasterFile {
        side,
        resolution_m,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("bevg-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("grid.bevg");
        let a: Vec<f32> = (0..16).map(|i| i as f32 / 15.0).collect();
        let b: Vec<f32> = (0..16).map(|i| (15 - i) as f32 / 15.0).collect();
        write_rasters(&path, 4, 0.25, &[&a, &b]).unwrap();
        let file = read_rasters(&path).unwrap();
        assert_eq!(file.side, 4);
        assert_eq!(file.resolution_m, 0.25);
        assert_eq!(file.channels, vec![a, b]);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = std::env::temp_dir().join(format!("bevg-io-magic-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.bevg");
        fs::write(&path, b"NOPE\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        match read_rasters(&path) {
            Err(GridError::Raster { kind, .. }) => assert_eq!(kind, RasterErrorKind::BadMagic),
            other => panic!("expected bad magic, got {other:?}"),
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = std::env::temp_dir().join(format!("bevg-io-trunc-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("short.bevg");
        let data: Vec<f32> = vec![0.5; 16];
        write_rasters(&path, 4, 0.25, &[&data]).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        match read_rasters(&path) {
            Err(GridError::Raster { kind, .. }) => assert_eq!(kind, RasterErrorKind::Truncated),
            other => panic!("expected truncation error, got {other:?}"),
        }
        fs::remove_dir_all(&dir).ok();
    }
}
