use super::ImagingError;

/// 8-bit RGB raster, row-major, three bytes per pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageTile {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for ImageTile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageTile")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ImageTile {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        if pixels.len() != width * height * 3 {
            return Err(ImagingError::BufferLength {
                expected: width * height * 3,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Tile filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds a tile by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        let mut pixels = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Iterator over pixels as RGB triples in row-major order.
    pub fn pixels(&self) -> impl ExactSizeIterator<Item = [u8; 3]> + '_ {
        self.pixels.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn same_size(&self, other: &ImageTile) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Copies out the `w`×`h` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<ImageTile, ImagingError> {
        if x + w > self.width || y + h > self.height {
            return Err(ImagingError::OutOfBounds {
                x,
                y,
                w,
                h,
                width: self.width,
                height: self.height,
            });
        }
        check_dims(w, h)?;
        let mut pixels = Vec::with_capacity(w * h * 3);
        for row in y..y + h {
            let start = (row * self.width + x) * 3;
            pixels.extend_from_slice(&self.pixels[start..start + w * 3]);
        }
        Ok(ImageTile {
            width: w,
            height: h,
            pixels,
        })
    }

    /// Rotates content by 90° clockwise.
    pub fn rotate90(&self) -> ImageTile {
        let (w, h) = (self.height, self.width);
        let mut out = ImageTile {
            width: w,
            height: h,
            pixels: vec![0; self.pixels.len()],
        };
        for y in 0..self.height {
            for x in 0..self.width {
                out.put(self.height - 1 - y, x, self.get(x, y));
            }
        }
        out
    }
}

/// Single-channel 8-bit raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        if pixels.len() != width * height {
            return Err(ImagingError::BufferLength {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Boolean raster; `true` marks a stain-positive (foreground) pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.width, self.height)?;
        if self.width * self.height <= 1024 {
            for row in self.bits.chunks(self.width) {
                let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(ImagingError::BufferLength {
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn full(width: usize, height: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Number of positive pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_size(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &BinaryMask,
        op: impl Fn(bool, bool) -> bool,
    ) -> Result<BinaryMask, ImagingError> {
        if !self.same_size(other) {
            return Err(ImagingError::DimensionMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            });
        }
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask, ImagingError> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask, ImagingError> {
        self.zip_with(other, |a, b| a || b)
    }

    /// Pixels set in `self` but not in `other`.
    pub fn minus(&self, other: &BinaryMask) -> Result<BinaryMask, ImagingError> {
        self.zip_with(other, |a, b| a && !b)
    }

    /// True when every positive pixel of `self` is positive in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_size(other) && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<BinaryMask, ImagingError> {
        if x + w > self.width || y + h > self.height {
            return Err(ImagingError::OutOfBounds {
                x,
                y,
                w,
                h,
                width: self.width,
                height: self.height,
            });
        }
        BinaryMask::from_fn(w, h, |cx, cy| self.get(x + cx, y + cy))
    }
}

/// Boolean morphological footprint with an anchor (origin) pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    width: usize,
    height: usize,
    anchor: (usize, usize),
    bits: Vec<bool>,
}

impl StructuringElement {
    /// `anchor` is `(row, col)`. The anchor pixel must be part of the
    /// footprint so that dilation is extensive and erosion anti-extensive.
    pub fn new(
        width: usize,
        height: usize,
        anchor: (usize, usize),
        bits: Vec<bool>,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(ImagingError::BufferLength {
                expected: width * height,
                actual: bits.len(),
            });
        }
        let (row, col) = anchor;
        if row >= height || col >= width {
            return Err(ImagingError::InvalidStructuringElement(format!(
                "anchor ({row}, {col}) outside {width}x{height} footprint"
            )));
        }
        if !bits[row * width + col] {
            return Err(ImagingError::InvalidStructuringElement(format!(
                "anchor ({row}, {col}) is not a footprint pixel"
            )));
        }
        Ok(Self {
            width,
            height,
            anchor,
            bits,
        })
    }

    /// Full `width`×`height` rectangle anchored at `(height / 2, width / 2)`.
    pub fn rect(width: usize, height: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, (height / 2, width / 2), vec![true; width * height])
    }

    pub fn square(size: usize) -> Result<Self, ImagingError> {
        Self::rect(size, size)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn is_full_rect(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// True when the footprint is point-symmetric about its anchor.
    pub fn is_symmetric(&self) -> bool {
        self.offsets().all(|(dy, dx)| self.contains_offset(-dy, -dx))
    }

    fn contains_offset(&self, dy: isize, dx: isize) -> bool {
        let r = self.anchor.0 as isize + dy;
        let c = self.anchor.1 as isize + dx;
        r >= 0
            && c >= 0
            && (r as usize) < self.height
            && (c as usize) < self.width
            && self.bits[r as usize * self.width + c as usize]
    }

    /// Footprint offsets `(dy, dx)` relative to the anchor.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let (ar, ac) = self.anchor;
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| {
            let r = (i / self.width) as isize - ar as isize;
            let c = (i % self.width) as isize - ac as isize;
            (r, c)
        })
    }
}

fn check_dims(width: usize, height: usize) -> Result<(), ImagingError> {
    if width == 0 || height == 0 {
        return Err(ImagingError::InvalidDimensions { width, height });
    }
    Ok(())
}
