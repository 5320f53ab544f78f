//! Grayscale PGM/PNG reading and writing, RGB PNG output.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use coshrem::{BinaryMap, GrayImage, MeasureMap, RgbImage};

#[derive(Debug, thiserror::Error)]
pub enum ImageIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("PNG decoding failed: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("PNG encoding failed: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("unsupported bit depth {0}; only 8- and 16-bit grayscale is accepted")]
    BitDepth(u32),
    #[error("non-grayscale input ({0}); convert the image to single-channel grayscale")]
    NotGrayscale(String),
    #[error("unrecognized image format (expected binary PGM `P5` or PNG)")]
    UnknownFormat,
    #[error("unsupported output extension for {0} (use .pgm or .png)")]
    Extension(String),
    #[error(transparent)]
    Image(#[from] coshrem::Error),
}

pub type Result<T> = std::result::Result<T, ImageIoError>;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ImageIoError + '_ {
    move |source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads an 8- or 16-bit grayscale PGM or PNG onto the `[0, 255]` scale.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_gray(&bytes)
}

/// Decodes PGM (`P5`) or PNG bytes, detected by their magic number.
pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"P6") || bytes.starts_with(b"P3") {
        Err(ImageIoError::NotGrayscale("PPM color image".into()))
    } else {
        Err(ImageIoError::UnknownFormat)
    }
}

/// Splits the PGM header into its four fields and returns the payload offset.
fn pgm_header(bytes: &[u8]) -> Result<([u64; 3], usize)> {
    let mut fields = Vec::with_capacity(3);
    let mut pos = 2;
    while fields.len() < 3 {
        match bytes.get(pos) {
            None => return Err(ImageIoError::Pgm("truncated header".into())),
            Some(b'#') => {
                while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                    pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            Some(b) if b.is_ascii_digit() => {
                let start = pos;
                while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
                    pos += 1;
                }
                let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
                let value = text
                    .parse()
                    .map_err(|_| ImageIoError::Pgm(format!("header value {text} out of range")))?;
                fields.push(value);
            }
            Some(&b) => {
                return Err(ImageIoError::Pgm(format!(
                    "unexpected byte 0x{b:02x} in header"
                )))
            }
        }
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok(([fields[0], fields[1], fields[2]], pos + 1)),
        _ => Err(ImageIoError::Pgm("missing separator after maxval".into())),
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let ([w, h, maxval], offset) = pgm_header(bytes)?;
    if w == 0 || h == 0 {
        return Err(ImageIoError::Pgm("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(ImageIoError::Pgm(format!("maxval {maxval} outside 1..=65535")));
    }
    let (w, h) = (w as usize, h as usize);
    let n = w
        .checked_mul(h)
        .ok_or_else(|| ImageIoError::Pgm("image too large".into()))?;
    let sample = if maxval < 256 { 1 } else { 2 };
    let raster = &bytes[offset..];
    if raster.len() < n * sample {
        return Err(ImageIoError::Pgm(format!(
            "raster has {} bytes, expected {}",
            raster.len(),
            n * sample
        )));
    }
    let scale = 255.0 / maxval as f64;
    let data = if sample == 1 {
        raster[..n].iter().map(|&v| v as f64 * scale).collect()
    } else {
        raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    Ok(GrayImage::new(w, h, data)?)
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info()?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if color != png::ColorType::Grayscale {
        return Err(ImageIoError::NotGrayscale(format!("PNG color type {color:?}")));
    }
    let bits = match depth {
        png::BitDepth::Eight => 8,
        png::BitDepth::Sixteen => 16,
        other => return Err(ImageIoError::BitDepth(other as u32)),
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageIoError::Pgm("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf)?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks_exact(frame.line_size).take(h) {
        if bits == 8 {
            data.extend(row[..w].iter().map(|&v| v as f64));
        } else {
            data.extend(
                row[..2 * w]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 257.0),
            );
        }
    }
    Ok(GrayImage::new(w, h, data)?)
}

/// Clamps to `[0, 255]` and rounds half up.
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 255.0) + 0.5).floor() as u8
}

/// Writes an 8-bit PGM or PNG depending on the extension.
pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let encoded = match extension(path).as_deref() {
        Some("pgm") => pgm_bytes(img.width(), img.height(), 255, &bytes),
        Some("png") => encode_png(img.width(), img.height(), png::ColorType::Grayscale, png::BitDepth::Eight, &bytes)?,
        _ => return Err(ImageIoError::Extension(path.display().to_string())),
    };
    fs::write(path, encoded).map_err(io_err(path))
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

fn pgm_bytes(width: usize, height: usize, maxval: u32, raster: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    out.extend_from_slice(raster);
    out
}

/// 16-bit PGM bytes of a `[0, 1]` measure scaled to `0..=65535`.
pub fn measure_pgm16(measure: &MeasureMap) -> Vec<u8> {
    let raster: Vec<u8> = measure
        .values()
        .iter()
        .flat_map(|&m| ((m.clamp(0.0, 1.0) * 65535.0).round() as u16).to_be_bytes())
        .collect();
    pgm_bytes(measure.width(), measure.height(), 65535, &raster)
}

/// Binary map as an 8-bit PGM with on-pixels at 255.
pub fn binary_pgm(map: &BinaryMap) -> Vec<u8> {
    let raster: Vec<u8> = map.mask().iter().map(|&on| if on { 255 } else { 0 }).collect();
    pgm_bytes(map.width(), map.height(), 255, &raster)
}

/// Reads a binary map: any nonzero pixel is on.
pub fn load_binary(path: &Path) -> Result<BinaryMap> {
    let img = load_gray(path)?;
    let mask = img.data().iter().map(|&v| v > 0.0).collect();
    Ok(BinaryMap::from_mask(img.width(), img.height(), mask)?)
}

fn encode_png(
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    raster: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(color);
        encoder.set_depth(depth);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(raster)?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn rgb_png(img: &RgbImage) -> Result<Vec<u8>> {
    encode_png(img.width(), img.height(), png::ColorType::Rgb, png::BitDepth::Eight, img.data())
}

/// Measure map as an 8-bit grayscale PNG (1 → 255).
pub fn measure_png(measure: &MeasureMap) -> Result<Vec<u8>> {
    let raster: Vec<u8> = measure.values().iter().map(|&m| quantize(m * 255.0)).collect();
    encode_png(measure.width(), measure.height(), png::ColorType::Grayscale, png::BitDepth::Eight, &raster)
}

pub fn binary_png(map: &BinaryMap) -> Result<Vec<u8>> {
    let raster: Vec<u8> = map.mask().iter().map(|&on| if on { 255 } else { 0 }).collect();
    encode_png(map.width(), map.height(), png::ColorType::Grayscale, png::BitDepth::Eight, &raster)
}

/// Writes `bytes` to `path`, naming the path on failure.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_the_two_by_two_pgm() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 128, 255]);
        let img = decode_gray(&bytes).unwrap();
        assert_eq!(img.dims(), (2, 2));
        assert_eq!(img.data(), &[0.0, 128.0, 128.0, 255.0]);
    }

    #[test]
    fn sixteen_bit_full_scale_is_255() {
        let mut bytes = b"P5\n# comment\n1 2\n65535\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0xff, 0x01, 0x01]);
        let img = decode_gray(&bytes).unwrap();
        assert_eq!(img.data(), &[255.0, 1.0]);
    }

    #[test]
    fn quantization_clamps_and_rounds_half_up() {
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(254.6), 255);
        assert_eq!(quantize(12.5), 13);
        assert_eq!(quantize(12.49), 12);
        assert_eq!(quantize(300.0), 255);
    }

    #[test]
    fn rejects_color_and_garbage() {
        assert!(matches!(decode_gray(b"P6 1 1 255\n\0\0\0"), Err(ImageIoError::NotGrayscale(_))));
        assert!(matches!(decode_gray(b"hello"), Err(ImageIoError::UnknownFormat)));
        assert!(matches!(decode_gray(b"P5 2 2 255\n\0"), Err(ImageIoError::Pgm(_))));
        let rgb = rgb_png(&RgbImage::new(2, 2)).unwrap();
        assert!(matches!(decode_gray(&rgb), Err(ImageIoError::NotGrayscale(_))));
    }
}
