//! Patch lattice, mask maps and single-channel images.
//!
//! Cells are linearized row-major with the origin at the top-left patch:
//! cell `(i, j)` (column `i`, row `j`) lives at index `cols * j + i`.

use crate::error::{MaskError, Result};
use crate::scalar::{floor_guarded, Scalar};

/// Partition of an image into whole square patches.
///
/// Pixels to the right of `cols * patch_size` or below `rows * patch_size`
/// are not covered by any patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchGrid {
    cols: usize,
    rows: usize,
    patch_size: usize,
    image_width: usize,
    image_height: usize,
}

impl PatchGrid {
    /// Grid covering exactly `cols x rows` patches of size 1, for code that
    /// only cares about the lattice.
    pub fn cells(cols: usize, rows: usize) -> Result<Self> {
        partition(cols, rows, 1)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn image_width(&self) -> usize {
        self.image_width
    }

    pub fn image_height(&self) -> usize {
        self.image_height
    }

    pub fn total_patches(&self) -> usize {
        self.cols * self.rows
    }

    /// Uncovered pixels on the right and bottom edges.
    pub fn remainder(&self) -> (usize, usize) {
        (
            self.image_width - self.cols * self.patch_size,
            self.image_height - self.rows * self.patch_size,
        )
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        debug_assert!(col < self.cols && row < self.rows);
        self.cols * row + col
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.cols, index / self.cols)
    }

    /// Same lattice shape, ignoring pixel geometry.
    pub fn same_lattice(&self, other: &PatchGrid) -> bool {
        self.cols == other.cols && self.rows == other.rows
    }
}

impl std::fmt::Display for PatchGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.cols, self.rows)
    }
}

/// Split a `image_width x image_height` image into `patch_size` squares.
pub fn partition(image_width: usize, image_height: usize, patch_size: usize) -> Result<PatchGrid> {
    if image_width == 0 || image_height == 0 || patch_size == 0 {
        return Err(MaskError::InvalidDimension(format!(
            "image {image_width}x{image_height} with patch size {patch_size}: all must be at least 1"
        )));
    }
    if patch_size > image_width.min(image_height) {
        return Err(MaskError::InvalidDimension(format!(
            "patch size {patch_size} exceeds image {image_width}x{image_height}"
        )));
    }
    Ok(PatchGrid {
        cols: image_width / patch_size,
        rows: image_height / patch_size,
        patch_size,
        image_width,
        image_height,
    })
}

pub(crate) fn check_ratio(ratio: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ratio) || ratio.is_nan() {
        return Err(MaskError::RatioOutOfRange(ratio));
    }
    Ok(())
}

/// Patches kept visible at `ratio`: `floor((1 - ratio) * T)`.
pub fn target_kept_count(grid: &PatchGrid, ratio: f64) -> Result<usize> {
    check_ratio(ratio)?;
    Ok(floor_guarded((1.0 - ratio) * grid.total_patches() as f64).min(grid.total_patches()))
}

/// Patches to mask at `ratio`: `T - floor((1 - ratio) * T)`.
///
/// Square, block-wise and mesh masks aim for this count. Random masks use
/// [`random_masked_count`] instead.
pub fn target_masked_count(grid: &PatchGrid, ratio: f64) -> Result<usize> {
    Ok(grid.total_patches() - target_kept_count(grid, ratio)?)
}

/// Patches masked by the random pattern: `floor(ratio * T)`.
///
/// On 49 patches at 0.6 this is 29 while [`target_masked_count`] gives 30.
pub fn random_masked_count(grid: &PatchGrid, ratio: f64) -> Result<usize> {
    check_ratio(ratio)?;
    Ok(floor_guarded(ratio * grid.total_patches() as f64).min(grid.total_patches()))
}

/// Boolean assignment over a [`PatchGrid`]; `true` means masked.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskMap {
    grid: PatchGrid,
    cells: Vec<bool>,
}

impl MaskMap {
    pub fn new(grid: PatchGrid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.total_patches() {
            return Err(MaskError::DimensionMismatch(format!(
                "{} cells for a {} grid",
                cells.len(),
                grid
            )));
        }
        Ok(MaskMap { grid, cells })
    }

    pub fn filled(grid: PatchGrid, masked: bool) -> Self {
        MaskMap {
            grid,
            cells: vec![masked; grid.total_patches()],
        }
    }

    /// Mask with exactly the listed cell indices masked.
    pub fn from_masked_indices(grid: PatchGrid, indices: &[usize]) -> Result<Self> {
        let mut mask = MaskMap::filled(grid, false);
        for &i in indices {
            if i >= grid.total_patches() {
                return Err(MaskError::DimensionMismatch(format!(
                    "cell index {i} outside a {grid} grid"
                )));
            }
            mask.cells[i] = true;
        }
        Ok(mask)
    }

    pub fn grid(&self) -> &PatchGrid {
        &self.grid
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn is_masked(&self, col: usize, row: usize) -> bool {
        self.cells[self.grid.index(col, row)]
    }

    pub fn set(&mut self, col: usize, row: usize, masked: bool) {
        let idx = self.grid.index(col, row);
        self.cells[idx] = masked;
    }

    pub fn masked_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&i| self.cells[i]).collect()
    }

    pub fn unmasked_indices(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&i| !self.cells[i]).collect()
    }

    /// Same cells on a grid with different pixel geometry but identical lattice.
    pub fn with_grid(self, grid: PatchGrid) -> Result<Self> {
        if !self.grid.same_lattice(&grid) {
            return Err(MaskError::GeometryMismatch(format!(
                "mask lattice {} differs from {}",
                self.grid, grid
            )));
        }
        Ok(MaskMap {
            grid,
            cells: self.cells,
        })
    }
}

/// Fraction of masked patches.
pub fn masked_ratio<T: Scalar>(mask: &MaskMap) -> T {
    T::ratio(mask.masked_count() as u64, mask.grid.total_patches() as u64)
}

pub fn complement(mask: &MaskMap) -> MaskMap {
    MaskMap {
        grid: mask.grid,
        cells: mask.cells.iter().map(|c| !c).collect(),
    }
}

/// Single-channel image with intensities in `[0, max_value]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    max_value: u16,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, max_value: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || max_value == 0 {
            return Err(MaskError::InvalidDimension(format!(
                "image {width}x{height} with max value {max_value}"
            )));
        }
        if pixels.len() != width * height {
            return Err(MaskError::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|&&p| p > max_value) {
            return Err(MaskError::InvalidParameter(format!(
                "pixel value {p} exceeds max value {max_value}"
            )));
        }
        Ok(GrayImage {
            width,
            height,
            max_value,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, max_value: u16, value: u16) -> Result<Self> {
        GrayImage::new(width, height, max_value, vec![value.min(max_value); width * height])
    }

    /// Build from a per-pixel function of `(x, y)`; values are clamped.
    pub fn from_fn(width: usize, height: usize, max_value: u16, f: impl Fn(usize, usize) -> u16) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).min(max_value));
            }
        }
        GrayImage::new(width, height, max_value, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_value(&self) -> u16 {
        self.max_value
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    pub(crate) fn set(&mut self, x: usize, y: usize, v: u16) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn same_shape(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Replace every pixel of every masked patch by `fill`.
pub fn apply_mask(image: &GrayImage, mask: &MaskMap, fill: u16) -> Result<GrayImage> {
    let grid = mask.grid();
    if grid.image_width() != image.width() || grid.image_height() != image.height() {
        return Err(MaskError::GeometryMismatch(format!(
            "mask grid expects a {}x{} image, got {}x{}",
            grid.image_width(),
            grid.image_height(),
            image.width(),
            image.height()
        )));
    }
    if fill > image.max_value() {
        return Err(MaskError::InvalidParameter(format!(
            "fill {fill} exceeds max value {}",
            image.max_value()
        )));
    }
    let ps = grid.patch_size();
    let mut out = image.clone();
    for idx in mask.masked_indices() {
        let (col, row) = grid.coords(idx);
        for y in row * ps..(row + 1) * ps {
            for x in col * ps..(col + 1) * ps {
                out.set(x, y, fill);
            }
        }
    }
    Ok(out)
}
