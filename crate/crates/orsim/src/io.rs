//! Image files: PNG and binary PPM/PGM in, PNG and PGM out.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, RgbImage};
use orsim_core::imaging::RasterImage;

use crate::error::{CliError, Result};

const EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pnm"];

/// Decode an 8-bit image to a raster in `[0, 1]` with one (gray) or three
/// (RGB) channels. Alpha is dropped.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let img = image::open(path).map_err(|source| CliError::Image { path: path.to_path_buf(), source })?;
    let raster = match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => {
            let g = img.to_luma8();
            let (w, h) = g.dimensions();
            RasterImage::new(w as usize, h as usize, 1, g.pixels().map(|p| p.0[0] as f64 / 255.0).collect())?
        }
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let rgb = img.to_rgb8();
            let (w, h) = rgb.dimensions();
            let mut planes = vec![Vec::with_capacity((w * h) as usize); 3];
            for p in rgb.pixels() {
                for (c, plane) in planes.iter_mut().enumerate() {
                    plane.push(p.0[c] as f64 / 255.0);
                }
            }
            RasterImage::from_planes(w as usize, h as usize, planes)?
        }
        other => {
            return Err(CliError::Config(format!(
                "{}: unsupported pixel format {:?}; only 8-bit gray and RGB are read",
                path.display(),
                other.color()
            )))
        }
    };
    Ok(raster)
}

/// [`load_image`] with gray inputs replicated to three channels, as the
/// feature pipeline expects color input.
pub fn load_rgb(path: &Path) -> Result<RasterImage> {
    let img = load_image(path)?;
    if img.channels() == 3 {
        return Ok(img);
    }
    let plane = img.plane(0).to_vec();
    Ok(RasterImage::from_planes(img.width(), img.height(), vec![plane.clone(), plane.clone(), plane])?)
}

fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Write a one- or three-channel raster as 8-bit PNG.
pub fn save_png(img: &RasterImage, path: &Path) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let res = match img.channels() {
        1 => GrayImage::from_fn(w, h, |x, y| image::Luma([to_u8(img.get(0, x as usize, y as usize))])).save(path),
        3 => RgbImage::from_fn(w, h, |x, y| {
            image::Rgb([0, 1, 2].map(|c| to_u8(img.get(c, x as usize, y as usize))))
        })
        .save(path),
        c => return Err(CliError::Config(format!("cannot write a {c}-channel image"))),
    };
    res.map_err(|source| CliError::Image { path: path.to_path_buf(), source })
}

/// Debug dump of one channel as binary PGM; values are scaled by 255 and
/// clamped to `[0, 255]`.
pub fn dump_pgm(plane: &[f64], width: usize, height: usize, path: &Path) -> Result<()> {
    if plane.len() != width * height {
        return Err(CliError::Config("plane size does not match its dimensions".into()));
    }
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend(plane.iter().map(|&v| to_u8(v)));
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Image files of `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase());
        if path.is_file() && ext.is_some_and(|e| EXTENSIONS.contains(&e.as_str())) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Identifier used in annotation and detection files: the file stem.
pub fn image_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact_on_8bit_values() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::from_fn(5, 4, 3, |c, x, y| ((x * 40 + y * 7 + c * 50) % 256) as f64 / 255.0).unwrap();
        let path = dir.path().join("a.png");
        save_png(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn gray_is_replicated_for_features() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::from_fn(3, 3, 1, |_, x, y| (x + 3 * y) as f64 / 255.0).unwrap();
        let path = dir.path().join("g.png");
        save_png(&img, &path).unwrap();
        let rgb = load_rgb(&path).unwrap();
        assert_eq!(rgb.channels(), 3);
        assert_eq!(rgb.plane(2), img.plane(0));
    }

    #[test]
    fn pgm_dump_clamps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        dump_pgm(&[-1.0, 0.5, 2.0], 3, 1, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.ends_with(&[0, 128, 255]));
        let back = load_image(&path).unwrap();
        assert_eq!(back.width(), 3);
    }
}
