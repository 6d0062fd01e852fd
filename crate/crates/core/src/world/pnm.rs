//! Netpbm dumps of observation planes: 16-bit binary PGM (P5, maxval 65535,
//! big-endian samples) for depth and binary PPM (P6) for RGB.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::observation::Observation;

pub fn encode_pgm16(width: u32, height: u32, depth: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(depth.len() * 2);
    for v in depth {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn encode_ppm(width: u32, height: u32, rgb: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Parses the `magic width height maxval` header and returns the offset of the
/// first sample byte.
fn parse_header(bytes: &[u8], magic: &str) -> io::Result<(u32, u32, u32, usize)> {
    let mut fields = Vec::with_capacity(4);
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(invalid("truncated netpbm header"));
        }
        fields
            .push(std::str::from_utf8(&bytes[start..i]).map_err(|_| invalid("non-ascii header"))?);
    }
    if fields[0] != magic {
        return Err(invalid(format!("expected {magic}, found {}", fields[0])));
    }
    let num = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| invalid(format!("bad header field {s}")))
    };
    // exactly one whitespace byte separates the header from the raster
    Ok((num(fields[1])?, num(fields[2])?, num(fields[3])?, i + 1))
}

pub fn decode_pgm16(bytes: &[u8]) -> io::Result<(u32, u32, Vec<u16>)> {
    let (w, h, maxval, off) = parse_header(bytes, "P5")?;
    if maxval != 65535 {
        return Err(invalid(format!("expected maxval 65535, found {maxval}")));
    }
    let n = w as usize * h as usize;
    let raster = bytes.get(off..).unwrap_or_default();
    if raster.len() != n * 2 {
        return Err(invalid("raster length does not match dimensions"));
    }
    let values = raster
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok((w, h, values))
}

pub fn decode_ppm(bytes: &[u8]) -> io::Result<(u32, u32, Vec<u8>)> {
    let (w, h, maxval, off) = parse_header(bytes, "P6")?;
    if maxval != 255 {
        return Err(invalid(format!("expected maxval 255, found {maxval}")));
    }
    let raster = bytes.get(off..).unwrap_or_default();
    if raster.len() != w as usize * h as usize * 3 {
        return Err(invalid("raster length does not match dimensions"));
    }
    Ok((w, h, raster.to_vec()))
}

/// Writes `depth.pgm` and/or `rgb.ppm` into `dir`, one file per present plane.
pub fn dump_observation(obs: &Observation, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if let Some(depth) = obs.depth() {
        let path = dir.join("depth.pgm");
        fs::write(&path, encode_pgm16(obs.width(), obs.height(), depth))?;
        written.push(path);
    }
    if let Some(rgb) = obs.rgb() {
        let path = dir.join("rgb.ppm");
        fs::write(&path, encode_ppm(obs.width(), obs.height(), rgb))?;
        written.push(path);
    }
    Ok(written)
}
