use std::path::Path;

use crate::error::{Error, Result};
use crate::observation::ObservationTensor;

/// 8-bit raster: one byte per pixel for gray, three for RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: bool,
    pub data: Vec<u8>,
}

/// `round(255 v)` with halves rounded up; input clamped to `[0, 1]`.
pub fn quantize(v: f32) -> u8 {
    (255.0 * v.clamp(0.0, 1.0) as f64 + 0.5).floor() as u8
}

impl Image {
    /// One-channel tensors (and tensors with fewer than three channels)
    /// render their first plane as gray; wider tensors render planes 0, 1
    /// and 2 as red, green and blue.
    pub fn from_observation(obs: &ObservationTensor) -> Self {
        let (c, h, w) = obs.shape();
        let rgb = c >= 3;
        let mut data = Vec::with_capacity(h * w * if rgb { 3 } else { 1 });
        for y in 0..h {
            for x in 0..w {
                if rgb {
                    data.extend((0..3).map(|ch| quantize(obs.get(ch, y, x))));
                } else {
                    data.push(quantize(obs.get(0, y, x)));
                }
            }
        }
        Image {
            width: w,
            height: h,
            rgb,
            data,
        }
    }

    fn bytes_per_pixel(&self) -> usize {
        if self.rgb {
            3
        } else {
            1
        }
    }

    /// `self` and `right` next to each other.
    pub fn beside(&self, right: &Image) -> Result<Image> {
        if self.height != right.height || self.rgb != right.rgb {
            return Err(Error::Invalid("images differ in height or color type".into()));
        }
        let bpp = self.bytes_per_pixel();
        let width = self.width + right.width;
        let mut data = Vec::with_capacity(width * self.height * bpp);
        for y in 0..self.height {
            data.extend_from_slice(&self.data[y * self.width * bpp..(y + 1) * self.width * bpp]);
            data.extend_from_slice(&right.data[y * right.width * bpp..(y + 1) * right.width * bpp]);
        }
        Ok(Image {
            width,
            height: self.height,
            rgb: self.rgb,
            data,
        })
    }

    /// Binary `P5` (gray) or `P6` (RGB) with maxval 255.
    pub fn to_bytes(&self) -> Vec<u8> {
        let magic = if self.rgb { "P6" } else { "P5" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    /// Parses binary PGM/PPM with maxval 255. Comments are not accepted.
    pub fn parse(bytes: &[u8]) -> Result<Image> {
        let bad = |m: &str| Error::format("PNM", m);
        let mut pos = 0;
        let mut token = || -> Result<&[u8]> {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            Ok(&bytes[start..pos])
        };
        let rgb = match token()? {
            b"P5" => false,
            b"P6" => true,
            _ => return Err(bad("expected P5 or P6")),
        };
        let mut number = |what: &str| -> Result<usize> {
            std::str::from_utf8(token()?)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(&format!("bad {what}")))
        };
        let width = number("width")?;
        let height = number("height")?;
        if number("maxval")? != 255 {
            return Err(bad("maxval must be 255"));
        }
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(bad("missing raster"));
        }
        let data = bytes[pos + 1..].to_vec();
        let expected = width * height * if rgb { 3 } else { 1 };
        if data.len() != expected {
            return Err(bad(&format!("raster has {} bytes, expected {expected}", data.len())));
        }
        Ok(Image {
            width,
            height,
            rgb,
            data,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Image> {
        Image::parse(&std::fs::read(path)?)
    }
}

/// Writes `obs` as a PGM or PPM file.
pub fn render_observation(obs: &ObservationTensor, path: impl AsRef<Path>) -> Result<()> {
    Image::from_observation(obs).save(path)
}

/// Writes the real state on the left and the dreamed state on the right.
pub fn render_pair(real: &ObservationTensor, dreamed: &ObservationTensor, path: impl AsRef<Path>) -> Result<()> {
    Image::from_observation(real)
        .beside(&Image::from_observation(dreamed))?
        .save(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn player_plane_bytes() {
        let obs = ObservationTensor::from_vec(1, 2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let bytes = Image::from_observation(&obs).to_bytes();
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[255, 0, 0, 0]);
    }

    #[test]
    fn halves_round_up() {
        let obs = ObservationTensor::from_vec(1, 3, 2, vec![0.5; 6]).unwrap();
        assert!(Image::from_observation(&obs).data.iter().all(|b| *b == 128));
        assert_eq!(quantize(-1.0), 0);
        assert_eq!(quantize(2.0), 255);
    }

    #[test]
    fn rgb_uses_first_three_planes() {
        let mut obs = ObservationTensor::zeros(4, 1, 1);
        obs.set(0, 0, 0, 1.0);
        obs.set(2, 0, 0, 0.2);
        obs.set(3, 0, 0, 1.0);
        let img = Image::from_observation(&obs);
        assert!(img.rgb);
        assert_eq!(img.data, vec![255, 0, 51]);
        assert_eq!(&img.to_bytes()[..2], b"P6");
    }

    #[test]
    fn side_by_side_concatenates_rows() {
        let a = ObservationTensor::from_vec(1, 2, 1, vec![1.0, 0.0]).unwrap();
        let b = ObservationTensor::from_vec(1, 2, 2, vec![0.0, 0.2, 0.4, 0.6]).unwrap();
        let img = Image::from_observation(&a)
            .beside(&Image::from_observation(&b))
            .unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.data, vec![255, 0, 51, 0, 102, 153]);
        let c = ObservationTensor::zeros(1, 3, 1);
        assert!(Image::from_observation(&a)
            .beside(&Image::from_observation(&c))
            .is_err());
    }

    #[test]
    fn parse_round_trip_and_rejects() {
        let obs = ObservationTensor::from_vec(3, 1, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let bytes = Image::from_observation(&obs).to_bytes();
        let img = Image::parse(&bytes).unwrap();
        assert_eq!(img.to_bytes(), bytes);
        assert!(Image::parse(b"P5\n2 2\n255\n\x00").is_err());
        assert!(Image::parse(b"P5\n1 1\n15\n\x00").is_err());
        assert!(Image::parse(b"P3\n1 1\n255\n\x00").is_err());
    }
}
