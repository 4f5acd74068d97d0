//! PNG/TIFF reading and writing for tiles and masks.

use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat, ImageReader};

use super::{BinaryMask, ImageTile, ImagingError};

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageTile, ImagingError> {
    let path = path.as_ref();
    let decoded = decode(path)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels = match decoded {
        DynamicImage::ImageRgb8(buf) => buf.into_raw(),
        DynamicImage::ImageRgba8(buf) => buf
            .into_raw()
            .chunks_exact(4)
            .flat_map(|c| [c[0], c[1], c[2]])
            .collect(),
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().flat_map(|v| [v, v, v]).collect(),
        DynamicImage::ImageLumaA8(buf) => buf
            .into_raw()
            .chunks_exact(2)
            .flat_map(|c| [c[0], c[0], c[0]])
            .collect(),
        other => return Err(unsupported_color(path, other.color())),
    };
    ImageTile::new(w, h, pixels).map_err(|e| corrupt(path, e.to_string()))
}

/// Writes an RGB tile; the format follows the extension (`.png`, `.tif`, `.tiff`).
pub fn write_image(path: impl AsRef<Path>, img: &ImageTile) -> Result<(), ImagingError> {
    let path = path.as_ref();
    let format = output_format(path)?;
    image::save_buffer_with_format(
        path,
        img.as_raw(),
        img.width() as u32,
        img.height() as u32,
        ColorType::Rgb8,
        format,
    )
    .map_err(|e| map_image_error(path, e))
}

/// Reads a single-channel mask; any nonzero value is positive.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask, ImagingError> {
    let path = path.as_ref();
    let decoded = decode(path)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let bits: Vec<bool> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| v != 0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.into_raw().chunks_exact(2).map(|c| c[0] != 0).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .into_raw()
            .chunks_exact(3)
            .map(|c| c.iter().any(|&v| v != 0))
            .collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .into_raw()
            .chunks_exact(4)
            .map(|c| c[..3].iter().any(|&v| v != 0))
            .collect(),
        other => return Err(unsupported_color(path, other.color())),
    };
    BinaryMask::new(w, h, bits).map_err(|e| corrupt(path, e.to_string()))
}

/// Writes a mask as 8-bit gray with values {0, 255}.
pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<(), ImagingError> {
    let path = path.as_ref();
    let format = output_format(path)?;
    let data: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    image::save_buffer_with_format(
        path,
        &data,
        mask.width() as u32,
        mask.height() as u32,
        ColorType::L8,
        format,
    )
    .map_err(|e| map_image_error(path, e))
}

fn decode(path: &Path) -> Result<DynamicImage, ImagingError> {
    let reader = ImageReader::open(path)
        .map_err(|source| ImagingError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| ImagingError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Tiff) => {}
        Some(other) => {
            return Err(ImagingError::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: format!("{other:?} is not PNG or TIFF"),
            })
        }
        None => return Err(corrupt(path, "unrecognized image signature".into())),
    }
    reader.decode().map_err(|e| map_image_error(path, e))
}

fn output_format(path: &Path) -> Result<ImageFormat, ImagingError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("tif") | Some("tiff") => Ok(ImageFormat::Tiff),
        _ => Err(ImagingError::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "expected a .png, .tif or .tiff extension".into(),
        }),
    }
}

fn unsupported_color(path: &Path, color: ColorType) -> ImagingError {
    ImagingError::UnsupportedFormat {
        path: path.to_path_buf(),
        reason: format!("color type {color:?}; only 8-bit gray/RGB(A) is supported"),
    }
}

fn corrupt(path: &Path, reason: String) -> ImagingError {
    ImagingError::CorruptFile {
        path: path.to_path_buf(),
        reason,
    }
}

fn map_image_error(path: &Path, err: image::ImageError) -> ImagingError {
    match err {
        image::ImageError::IoError(source) => ImagingError::Io {
            path: path.to_path_buf(),
            source,
        },
        image::ImageError::Unsupported(e) => ImagingError::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: e.to_string(),
        },
        other => corrupt(path, other.to_string()),
    }
}
