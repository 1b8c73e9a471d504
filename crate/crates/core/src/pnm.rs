//! Binary PPM (P6) and PGM (P5) reading and writing, 8-bit only.

use crate::vq::ImageBuffer;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("malformed {kind} file: {reason}")]
    Malformed { kind: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 8-bit single-channel raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub samples: Vec<u8>,
}

struct Header {
    width: usize,
    height: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8], magic: &[u8; 2], kind: &'static str) -> Result<Header, PnmError> {
    let bad = |reason: &str| PnmError::Malformed {
        kind,
        reason: reason.to_string(),
    };
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(bad("wrong magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Whitespace and '#' comments may precede each header field.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("expected a decimal number"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing whitespace after maxval"));
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    Ok(Header {
        width,
        height,
        data_start: pos + 1,
    })
}

pub fn decode_ppm(bytes: &[u8]) -> Result<ImageBuffer, PnmError> {
    let h = parse_header(bytes, b"P6", "PPM")?;
    let n = h.width * h.height * 3;
    let data = bytes.get(h.data_start..h.data_start + n).ok_or(PnmError::Malformed {
        kind: "PPM",
        reason: "truncated raster".into(),
    })?;
    Ok(ImageBuffer::new(h.height, h.width, data.to_vec()).expect("sizes checked"))
}

pub fn encode_ppm(image: &ImageBuffer) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.samples());
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, PnmError> {
    let h = parse_header(bytes, b"P5", "PGM")?;
    let n = h.width * h.height;
    let data = bytes.get(h.data_start..h.data_start + n).ok_or(PnmError::Malformed {
        kind: "PGM",
        reason: "truncated raster".into(),
    })?;
    Ok(GrayImage {
        height: h.height,
        width: h.width,
        samples: data.to_vec(),
    })
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.samples);
    out
}

pub fn read_ppm(path: impl AsRef<std::path::Path>) -> Result<ImageBuffer, PnmError> {
    decode_ppm(&std::fs::read(path)?)
}

pub fn write_ppm(path: impl AsRef<std::path::Path>, image: &ImageBuffer) -> Result<(), PnmError> {
    Ok(std::fs::write(path, encode_ppm(image))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip_without_comments() {
        let mut img = ImageBuffer::filled(2, 3, [1, 2, 3]);
        img.set_pixel(1, 2, [250, 0, 7]);
        let bytes = encode_ppm(&img);
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        assert!(!bytes.contains(&b'#'));
        assert_eq!(decode_ppm(&bytes).unwrap(), img);
    }

    #[test]
    fn reads_comments_and_rejects_truncation() {
        let bytes = b"P6 # made by hand\n1 1\n# depth\n255\n\x01\x02\x03";
        assert_eq!(decode_ppm(bytes).unwrap().pixel(0, 0), [1, 2, 3]);
        assert!(decode_ppm(b"P6\n2 2\n255\n\x00").is_err());
        assert!(decode_ppm(b"P5\n1 1\n255\n\x00").is_err());
        assert!(decode_ppm(b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00").is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let g = GrayImage {
            height: 2,
            width: 2,
            samples: vec![0, 9, 255, 1],
        };
        assert_eq!(decode_pgm(&encode_pgm(&g)).unwrap(), g);
    }
}
