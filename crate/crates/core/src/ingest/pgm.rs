//! Binary PGM (`P5`, maxval 255).

use std::io::{self, Write};

/// Parsed P5 image before it is assigned a stream index.
#[derive(Debug)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Returns true when `bytes` starts with the P5 magic.
pub fn is_pgm(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && &bytes[..2] == b"P5"
}

pub fn decode(bytes: &[u8]) -> Result<PgmImage, String> {
    if !is_pgm(bytes) {
        return Err("missing P5 magic".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        skip_whitespace_and_comments(bytes, &mut pos);
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format!("header field {name} is missing or not a number"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        fields[i] = text
            .parse()
            .map_err(|_| format!("header field {name} out of range: {text}"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported, expected 255"));
    }
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("header not terminated by whitespace".into()),
    }
    let len = width * height;
    let raster = &bytes[pos..];
    if raster.len() < len {
        return Err(format!(
            "raster truncated: expected {len} bytes, found {}",
            raster.len()
        ));
    }
    Ok(PgmImage {
        width,
        height,
        pixels: raster[..len].to_vec(),
    })
}

fn skip_whitespace_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

pub fn write<W: Write>(mut out: W, width: usize, height: usize, pixels: &[u8]) -> io::Result<()> {
    debug_assert_eq!(pixels.len(), width * height);
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(pixels)?;
    out.flush()
}

pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(pixels.len() + 20);
    write(&mut out, width, height, pixels).expect("writing to a Vec cannot fail");
    out
}
