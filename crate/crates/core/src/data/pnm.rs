//! Binary PGM/PPM reading and writing, plus the thermal range sidecar.
//!
//! Thermal frames are 16-bit PGM (`P5`, maxval 65535, big-endian samples).
//! Codes map linearly onto the physical range stored in a sidecar text file
//! `min=<float> max=<float>` next to the image (same stem, `.range` extension).
//! Colour frames are 8-bit PPM (`P6`, maxval 255).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graymap16 {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pixmap8 {
    pub width: usize,
    pub height: usize,
    /// Interleaved RGB.
    pub pixels: Vec<u8>,
}

/// Physical value range of a thermal frame.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThermalRange {
    pub min: f64,
    pub max: f64,
}

impl ThermalRange {
    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn is_degenerate(&self) -> bool {
        self.max <= self.min
    }
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("range")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parses a binary PNM header; returns `(magic, width, height, maxval, data offset)`.
fn parse_header(bytes: &[u8], path: &Path) -> Result<(String, usize, usize, usize, usize)> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PNM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() {
        return Err(Error::format(path, "missing raster"));
    }
    pos += 1;
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::format(path, format!("bad {what} `{s}` in PNM header")))
    };
    let width = num(&fields[1], "width")?;
    let height = num(&fields[2], "height")?;
    let maxval = num(&fields[3], "maxval")?;
    Ok((fields[0].clone(), width, height, maxval, pos))
}

pub fn read_pgm16(path: &Path) -> Result<Graymap16> {
    let bytes = read(path)?;
    let (magic, width, height, maxval, offset) = parse_header(&bytes, path)?;
    if magic != "P5" {
        return Err(Error::format(
            path,
            format!("expected P5 graymap, found `{magic}`"),
        ));
    }
    if maxval != 65535 {
        return Err(Error::format(
            path,
            format!("expected 16-bit maxval 65535, found {maxval}"),
        ));
    }
    let raster = &bytes[offset..];
    if raster.len() != width * height * 2 {
        return Err(Error::format(
            path,
            format!(
                "raster holds {} bytes, {width}x{height} needs {}",
                raster.len(),
                width * height * 2
            ),
        ));
    }
    let pixels = raster
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok(Graymap16 {
        width,
        height,
        pixels,
    })
}

pub fn write_pgm16(path: &Path, img: &Graymap16) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n65535\n", img.width, img.height).into_bytes();
    bytes.reserve(img.pixels.len() * 2);
    for p in &img.pixels {
        bytes.extend_from_slice(&p.to_be_bytes());
    }
    write(path, &bytes)
}

pub fn read_ppm8(path: &Path) -> Result<Pixmap8> {
    let bytes = read(path)?;
    let (magic, width, height, maxval, offset) = parse_header(&bytes, path)?;
    if magic != "P6" {
        return Err(Error::format(
            path,
            format!("expected P6 pixmap, found `{magic}`"),
        ));
    }
    if maxval != 255 {
        return Err(Error::format(
            path,
            format!("expected 8-bit maxval 255, found {maxval}"),
        ));
    }
    let raster = &bytes[offset..];
    if raster.len() != width * height * 3 {
        return Err(Error::format(
            path,
            format!(
                "raster holds {} bytes, {width}x{height} RGB needs {}",
                raster.len(),
                width * height * 3
            ),
        ));
    }
    Ok(Pixmap8 {
        width,
        height,
        pixels: raster.to_vec(),
    })
}

pub fn write_ppm8(path: &Path, img: &Pixmap8) -> Result<()> {
    let mut bytes = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    bytes.extend_from_slice(&img.pixels);
    write(path, &bytes)
}

pub fn read_range(path: &Path) -> Result<ThermalRange> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (mut min, mut max) = (None, None);
    for token in text.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("expected key=value, got `{token}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Error::format(path, format!("bad number `{value}`")))?;
        match key {
            "min" => min = Some(value),
            "max" => max = Some(value),
            other => return Err(Error::format(path, format!("unknown key `{other}`"))),
        }
    }
    match (min, max) {
        (Some(min), Some(max)) if min.is_finite() && max.is_finite() && max >= min => {
            Ok(ThermalRange { min, max })
        }
        (Some(_), Some(_)) => Err(Error::format(path, "range needs finite min <= max")),
        _ => Err(Error::format(path, "sidecar needs both min= and max=")),
    }
}

pub fn write_range(path: &Path, range: &ThermalRange) -> Result<()> {
    write(
        path,
        format!("min={} max={}\n", range.min, range.max).as_bytes(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm16_is_big_endian() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let img = Graymap16 {
            width: 2,
            height: 1,
            pixels: vec![0x0102, 0xfffe],
        };
        write_pgm16(&p, &img).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0x01, 0x02, 0xff, 0xfe]);
        assert_eq!(read_pgm16(&p).unwrap(), img);
    }

    #[test]
    fn header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ppm");
        fs::write(&p, b"P6\n# made by hand\n1 1\n255\n\x01\x02\x03").unwrap();
        assert_eq!(read_ppm8(&p).unwrap().pixels, vec![1, 2, 3]);
    }

    #[test]
    fn wrong_sizes_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pgm");
        fs::write(&p, b"P5\n2 2\n65535\n\x00\x01").unwrap();
        assert!(matches!(read_pgm16(&p), Err(Error::Format { .. })));
        fs::write(&p, b"P5\n1 1\n255\n\x00").unwrap();
        assert!(matches!(read_pgm16(&p), Err(Error::Format { .. })));
        assert!(matches!(read_ppm8(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_file_is_io_error_with_path() {
        let err = read_pgm16(Path::new("/nonexistent/x.pgm")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/x.pgm"));
    }

    #[test]
    fn range_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.range");
        let r = ThermalRange {
            min: 290.125,
            max: 310.5,
        };
        write_range(&p, &r).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "min=290.125 max=310.5\n");
        assert_eq!(read_range(&p).unwrap(), r);
        fs::write(&p, "min=3").unwrap();
        assert!(read_range(&p).is_err());
    }
}
