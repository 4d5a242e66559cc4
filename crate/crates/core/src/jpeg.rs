//! JPEG compress/decompress cycle with explicit quality and chroma subsampling.
//!
//! Encoding uses `jpeg-encoder` with the Annex K base tables scaled by the
//! libjpeg quality formula (`5000/q` below 50, `200 - 2q` above), JFIF YCbCr
//! and 2x2-averaged chroma for 4:2:0. Decoding uses `jpeg-decoder`.

use std::fmt;
use std::str::FromStr;

use jpeg_encoder::{rgb_to_ycbcr, Encoder, ImageBuffer, JpegColorType, SamplingFactor};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subsampling {
    /// Full-resolution chroma.
    S444,
    /// Chroma halved horizontally and vertically.
    S420,
}

impl Subsampling {
    pub fn label(self) -> &'static str {
        match self {
            Subsampling::S444 => "444",
            Subsampling::S420 => "420",
        }
    }
}

impl fmt::Display for Subsampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Subsampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "444" | "4:4:4" => Ok(Subsampling::S444),
            "420" | "4:2:0" => Ok(Subsampling::S420),
            other => Err(Error::InvalidParameter(format!(
                "subsampling must be 444 or 420, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JpegParams {
    pub quality: u8,
    pub subsampling: Subsampling,
}

impl JpegParams {
    pub fn new(quality: u8, subsampling: Subsampling) -> Result<Self> {
        let p = Self {
            quality,
            subsampling,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=100).contains(&self.quality) {
            return Err(Error::InvalidParameter(format!(
                "quality must be in 1..=100, got {}",
                self.quality
            )));
        }
        Ok(())
    }
}

/// Encodes `img` as a baseline JFIF stream.
pub fn jpeg_bytes(img: &Image, params: &JpegParams) -> Result<Vec<u8>> {
    params.validate()?;
    if img.width() < 16 || img.height() < 16 {
        return Err(Error::InvalidParameter(format!(
            "image {}x{} is smaller than 16x16",
            img.width(),
            img.height()
        )));
    }
    let (w, h) = (
        u16::try_from(img.width()).map_err(|_| Error::Codec("width exceeds 65535".into()))?,
        u16::try_from(img.height()).map_err(|_| Error::Codec("height exceeds 65535".into()))?,
    );
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, params.quality);
    enc.set_sampling_factor(match params.subsampling {
        Subsampling::S444 => SamplingFactor::R_4_4_4,
        Subsampling::S420 => SamplingFactor::R_4_2_0,
    });
    enc.encode_image(YccBuffer::new(img, params.subsampling, w, h))
        .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(out)
}

/// YCbCr planes handed to the encoder. The encoder subsamples chroma by taking
/// the top-left sample of each 2x2 cell, so under 4:2:0 every sample of a cell
/// carries the rounded cell mean.
struct YccBuffer {
    planes: [Vec<u8>; 3],
    width: u16,
    height: u16,
}

impl YccBuffer {
    fn new(img: &Image, subsampling: Subsampling, width: u16, height: u16) -> Self {
        let (w, h) = (img.width(), img.height());
        let mut planes = [vec![0u8; w * h], vec![0u8; w * h], vec![0u8; w * h]];
        for (i, px) in img.data().chunks_exact(3).enumerate() {
            let (y, cb, cr) = rgb_to_ycbcr(px[0], px[1], px[2]);
            planes[0][i] = y;
            planes[1][i] = cb;
            planes[2][i] = cr;
        }
        if subsampling == Subsampling::S420 {
            for plane in &mut planes[1..] {
                for cy in (0..h).step_by(2) {
                    for cx in (0..w).step_by(2) {
                        let cells: Vec<usize> = [(0, 0), (1, 0), (0, 1), (1, 1)]
                            .iter()
                            .filter(|&&(dx, dy)| cx + dx < w && cy + dy < h)
                            .map(|&(dx, dy)| (cy + dy) * w + cx + dx)
                            .collect();
                        let sum: usize = cells.iter().map(|&i| plane[i] as usize).sum();
                        let mean = ((sum + cells.len() / 2) / cells.len()) as u8;
                        for i in cells {
                            plane[i] = mean;
                        }
                    }
                }
            }
        }
        YccBuffer { planes, width, height }
    }
}

impl ImageBuffer for YccBuffer {
    fn get_jpeg_color_type(&self) -> JpegColorType {
        JpegColorType::Ycbcr
    }

    fn width(&self) -> u16 {
        self.width
    }

    fn height(&self) -> u16 {
        self.height
    }

    fn fill_buffers(&self, y: u16, buffers: &mut [Vec<u8>; 4]) {
        let w = self.width as usize;
        let row = y as usize * w..(y as usize + 1) * w;
        for (buffer, plane) in buffers.iter_mut().zip(&self.planes) {
            buffer.extend_from_slice(&plane[row.clone()]);
        }
    }
}

/// Decodes a JPEG stream to RGB.
pub fn decode_jpeg(bytes: &[u8]) -> Result<Image> {
    let mut dec = jpeg_decoder::Decoder::new(bytes);
    let pixels = dec.decode().map_err(|e| Error::Codec(e.to_string()))?;
    let info = dec.info().ok_or_else(|| Error::Codec("missing frame header".into()))?;
    let data = match info.pixel_format {
        jpeg_decoder::PixelFormat::RGB24 => pixels,
        jpeg_decoder::PixelFormat::L8 => pixels.iter().flat_map(|&v| [v, v, v]).collect(),
        other => return Err(Error::Codec(format!("unsupported pixel format {other:?}"))),
    };
    Image::new(info.width as usize, info.height as usize, data)
}

/// Chroma subsampling recorded in the frame header of a JPEG stream.
pub fn jpeg_subsampling(bytes: &[u8]) -> Result<Subsampling> {
    let bad = |what: &str| Error::Codec(format!("frame header: {what}"));
    if bytes.get(..2) != Some(&[0xFF, 0xD8]) {
        return Err(bad("missing start-of-image marker"));
    }
    let mut at = 2;
    while at + 4 <= bytes.len() {
        if bytes[at] != 0xFF {
            return Err(bad("expected a marker"));
        }
        let marker = bytes[at + 1];
        let len = u16::from_be_bytes([bytes[at + 2], bytes[at + 3]]) as usize;
        let body = bytes.get(at + 4..at + 2 + len).ok_or_else(|| bad("truncated segment"))?;
        // SOF0..SOF15 except DHT (C4), JPG (C8) and DAC (CC)
        if (0xC0..=0xCF).contains(&marker) && ![0xC4, 0xC8, 0xCC].contains(&marker) {
            let count = *body.get(5).ok_or_else(|| bad("short frame header"))? as usize;
            let factors: Vec<(u8, u8)> = (0..count)
                .map(|c| body.get(6 + 3 * c + 1).map(|&hv| (hv >> 4, hv & 0x0F)))
                .collect::<Option<_>>()
                .ok_or_else(|| bad("short component list"))?;
            return match factors.as_slice() {
                [(1, 1), (1, 1), (1, 1)] => Ok(Subsampling::S444),
                [(2, 2), (1, 1), (1, 1)] => Ok(Subsampling::S420),
                [_] => Ok(Subsampling::S444),
                other => Err(Error::Codec(format!("unsupported sampling factors {other:?}"))),
            };
        }
        at += 2 + len;
    }
    Err(bad("no frame header found"))
}

/// Encode then decode; the adversary only ever sees the decoded raster.
pub fn jpeg_cycle(img: &Image, params: &JpegParams) -> Result<Image> {
    decode_jpeg(&jpeg_bytes(img, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(w: usize, h: usize, phase: f64) -> Image {
        Image::from_fn(w, h, |x, y| {
            let (xf, yf) = (x as f64, y as f64);
            let r = 128.0 + 90.0 * ((xf * 0.07 + phase).sin() * (yf * 0.05).cos());
            let g = 100.0 + 60.0 * ((xf + yf) * 0.03 + phase).cos() + 0.2 * yf;
            let b = 60.0 + 0.5 * xf + 40.0 * ((yf * 0.11).sin());
            [r.clamp(0.0, 255.0) as u8, g.clamp(0.0, 255.0) as u8, b.clamp(0.0, 255.0) as u8]
        })
    }

    #[test]
    fn framing_and_decode_consistency() {
        let img = scene(64, 48, 0.3);
        let p = JpegParams::new(70, Subsampling::S420).unwrap();
        let bytes = jpeg_bytes(&img, &p).unwrap();
        assert_eq!(&bytes[..2], &[0xFF, 0xD8]);
        assert_eq!(&bytes[bytes.len() - 2..], &[0xFF, 0xD9]);
        let cycled = jpeg_cycle(&img, &p).unwrap();
        assert_eq!(decode_jpeg(&bytes).unwrap(), cycled);
        assert_eq!((cycled.width(), cycled.height()), (64, 48));
        assert_eq!(jpeg_bytes(&img, &p).unwrap(), bytes);
    }

    #[test]
    fn flat_gray_at_full_quality() {
        let img = Image::filled(32, 32, [128; 3]);
        let out = jpeg_cycle(&img, &JpegParams::new(100, Subsampling::S444).unwrap()).unwrap();
        let max = img.data().iter().zip(out.data()).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
        assert!(max <= 2, "max deviation {max}");
    }

    #[test]
    fn higher_quality_costs_more_bytes() {
        let img = scene(96, 96, 1.1);
        let len = |q| jpeg_bytes(&img, &JpegParams::new(q, Subsampling::S444).unwrap()).unwrap().len();
        assert!(len(90) > len(70));
    }

    #[test]
    fn subsampling_is_read_back_from_the_header() {
        let img = scene(32, 32, 0.4);
        for sr in [Subsampling::S444, Subsampling::S420] {
            let bytes = jpeg_bytes(&img, &JpegParams::new(75, sr).unwrap()).unwrap();
            assert_eq!(jpeg_subsampling(&bytes).unwrap(), sr);
        }
        assert!(jpeg_subsampling(b"not a jpeg").is_err());
    }

    #[test]
    fn parameter_checks() {
        assert!(JpegParams::new(0, Subsampling::S444).is_err());
        assert!(JpegParams::new(101, Subsampling::S420).is_err());
        assert!("422".parse::<Subsampling>().is_err());
        assert_eq!("4:2:0".parse::<Subsampling>().unwrap(), Subsampling::S420);
        let small = Image::filled(8, 8, [0; 3]);
        assert!(jpeg_bytes(&small, &JpegParams::new(90, Subsampling::S444).unwrap()).is_err());
        assert!(matches!(decode_jpeg(&[0xFF, 0xD8, 0x00]), Err(Error::Codec(_))));
    }
}
