use std::io::Cursor;
use std::path::Path;

use crate::{fsutil, CliError};

/// Binary (P5) PGM bytes for 8-bit gray pixels, row-major.
pub fn pgm_bytes(width: usize, height: usize, px: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(px);
    out
}

pub fn write_pgm(path: &Path, width: usize, height: usize, px: &[u8]) -> Result<(), CliError> {
    fsutil::write_atomic(path, &pgm_bytes(width, height, px))
}

pub fn png_bytes(width: usize, height: usize, px: &[u8]) -> Result<Vec<u8>, CliError> {
    let img = image::GrayImage::from_raw(width as u32, height as u32, px.to_vec())
        .ok_or_else(|| CliError::Data(format!("{} pixels do not fill {width}x{height}", px.len())))?;
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(buf.into_inner())
}

pub fn write_png(path: &Path, width: usize, height: usize, px: &[u8]) -> Result<(), CliError> {
    fsutil::write_atomic(path, &png_bytes(width, height, px)?)
}

/// Parses a P5 PGM with maxval 255 into (width, height, pixels).
pub fn parse_pgm(bytes: &[u8]) -> Option<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::new();
    let mut at = 0;
    while fields.len() < 4 {
        while at < bytes.len() && bytes[at].is_ascii_whitespace() {
            at += 1;
        }
        let start = at;
        while at < bytes.len() && !bytes[at].is_ascii_whitespace() {
            at += 1;
        }
        if start == at {
            return None;
        }
        fields.push(std::str::from_utf8(&bytes[start..at]).ok()?.to_string());
    }
    at += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    let (w, h): (usize, usize) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
    let px = bytes.get(at..)?.to_vec();
    (px.len() == w * h).then_some((w, h, px))
}
