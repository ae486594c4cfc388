//! Binary PGM (`P5`, maxval 255) encoding.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

pub fn encode(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage> {
    let bad = |m: &str| Error::InvalidImage(format!("pgm: {m}"));
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // Skip whitespace and `#` comments between header tokens.
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary graymap (P5)"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = w * h;
    if bytes.len() < pos + need {
        return Err(bad("truncated raster"));
    }
    GrayImage::new(w, h, bytes[pos..pos + need].to_vec())
}

pub fn read(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let img = GrayImage::from_fn(7, 3, |x, y| (x * 31 + y * 97) as u8);
        let bytes = encode(&img);
        assert!(bytes.starts_with(b"P5\n7 3\n255\n"));
        assert_eq!(decode(&bytes).unwrap(), img);
        assert_eq!(encode(&decode(&bytes).unwrap()), bytes);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[9, 250]);
        assert_eq!(decode(&bytes).unwrap().data(), &[9, 250]);
    }

    #[test]
    fn rejects_other_formats() {
        assert!(decode(b"P2\n1 1\n255\n0").is_err());
        assert!(decode(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode(b"P5\n1 1\n65535\n\x00\x00").is_err());
    }
}
