//! Support-level model of a hierarchical convolution stack fed a masked input.
//!
//! A cell is *active* when the feature at that position may be nonzero.
//! In a dense stack masked positions are zero-filled but still convolved,
//! so activity spreads by one kernel radius per layer and the mask pattern
//! dissolves. A sparse stack only computes active positions, so within a
//! stage the support never changes. Stage transitions halve the resolution;
//! a coarse cell is active iff any of its (up to four) children is.

use std::fmt;

use crate::error::{MaskError, Result};
use crate::grid::MaskMap;

/// Boolean activity map over a `cols x rows` lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportMap {
    cols: usize,
    rows: usize,
    cells: Vec<bool>,
}

impl SupportMap {
    pub fn new(cols: usize, rows: usize, cells: Vec<bool>) -> Result<Self> {
        if cols == 0 || rows == 0 || cells.len() != cols * rows {
            return Err(MaskError::DimensionMismatch(format!(
                "{} cells for a {cols}x{rows} support map",
                cells.len()
            )));
        }
        Ok(SupportMap { cols, rows, cells })
    }

    /// Active where the mask is *not* masked.
    pub fn from_unmasked(mask: &MaskMap) -> Self {
        SupportMap {
            cols: mask.grid().cols(),
            rows: mask.grid().rows(),
            cells: mask.cells().iter().map(|m| !m).collect(),
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn active_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(|&c| c)
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// `self` is a subset of `other` (same dimensions).
    pub fn is_subset_of(&self, other: &SupportMap) -> bool {
        self.cols == other.cols
            && self.rows == other.rows
            && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    fn pool(&self, any: bool) -> SupportMap {
        let cols = self.cols.div_ceil(2);
        let rows = self.rows.div_ceil(2);
        let mut cells = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                // out-of-range children are padding and count as inactive
                let children = [
                    (2 * c, 2 * r),
                    (2 * c + 1, 2 * r),
                    (2 * c, 2 * r + 1),
                    (2 * c + 1, 2 * r + 1),
                ]
                .into_iter()
                .filter(|&(x, y)| x < self.cols && y < self.rows)
                .map(|(x, y)| self.get(x, y));
                let v = if any {
                    children.into_iter().any(|v| v)
                } else {
                    children.into_iter().all(|v| v)
                };
                cells.push(v);
            }
        }
        SupportMap { cols, rows, cells }
    }

    /// 2x2 any-active pooling; odd edges are padded with inactive cells.
    pub fn pool_any(&self) -> SupportMap {
        self.pool(true)
    }

    /// 2x2 all-active pooling over the in-range children.
    pub fn pool_all(&self) -> SupportMap {
        self.pool(false)
    }

    pub fn complement(&self) -> SupportMap {
        SupportMap {
            cols: self.cols,
            rows: self.rows,
            cells: self.cells.iter().map(|c| !c).collect(),
        }
    }

    /// Dilation by a `(2 * radius + 1)`-square structuring element.
    pub fn dilate(&self, radius: usize) -> SupportMap {
        let mut cells = vec![false; self.cells.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                if !self.get(c, r) {
                    continue;
                }
                for y in r.saturating_sub(radius)..=(r + radius).min(self.rows - 1) {
                    for x in c.saturating_sub(radius)..=(c + radius).min(self.cols - 1) {
                        cells[y * self.cols + x] = true;
                    }
                }
            }
        }
        SupportMap {
            cols: self.cols,
            rows: self.rows,
            cells,
        }
    }
}

impl fmt::Display for SupportMap {
    /// One text row per lattice row: `#` active, `.` inactive.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                f.write_str(if self.get(c, r) { "#" } else { "." })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Repeated any-active pooling of the unmasked set: entry `s` is the
/// support after `s + 1` halvings.
pub fn downsample_mask(mask: &MaskMap, stages: usize) -> Vec<SupportMap> {
    let mut out = Vec::with_capacity(stages);
    let mut current = SupportMap::from_unmasked(mask);
    for _ in 0..stages {
        current = current.pool_any();
        out.push(current.clone());
    }
    out
}

/// Shape of the simulated network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageStack {
    pub num_stages: usize,
    pub layers_per_stage: usize,
    pub kernel_radius: usize,
}

impl Default for StageStack {
    fn default() -> Self {
        StageStack {
            num_stages: 4,
            layers_per_stage: 2,
            kernel_radius: 1,
        }
    }
}

impl StageStack {
    /// Resolution halves between consecutive stages.
    pub const DOWNSAMPLE_FACTOR: usize = 2;

    pub fn validate(&self) -> Result<()> {
        if self.num_stages == 0 || self.kernel_radius == 0 || self.layers_per_stage == 0 {
            return Err(MaskError::InvalidParameter(format!(
                "stack needs >= 1 stage, layer and kernel radius, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn total_layers(&self) -> usize {
        self.num_stages * self.layers_per_stage
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Dense,
    Sparse,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Dense => "dense",
            Mode::Sparse => "sparse",
        }
    }
}

/// Support after one layer. Layer 0 is the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerFrame {
    pub layer: usize,
    pub stage: usize,
    pub support: SupportMap,
}

/// Layer-by-layer support. The first layer of every stage after the first
/// halves the resolution before convolving.
pub fn propagate(mask: &MaskMap, stack: &StageStack, mode: Mode) -> Result<Vec<LayerFrame>> {
    stack.validate()?;
    let mut frames = Vec::with_capacity(stack.total_layers() + 1);
    let mut current = SupportMap::from_unmasked(mask);
    frames.push(LayerFrame {
        layer: 0,
        stage: 0,
        support: current.clone(),
    });
    let mut layer = 0;
    for stage in 0..stack.num_stages {
        for step in 0..stack.layers_per_stage {
            if stage > 0 && step == 0 {
                current = current.pool_any();
            }
            if mode == Mode::Dense {
                current = current.dilate(stack.kernel_radius);
            }
            layer += 1;
            frames.push(LayerFrame {
                layer,
                stage,
                support: current.clone(),
            });
        }
    }
    Ok(frames)
}

pub fn dense_propagate(mask: &MaskMap, stack: &StageStack) -> Result<Vec<LayerFrame>> {
    propagate(mask, stack, Mode::Dense)
}

pub fn sparse_propagate(mask: &MaskMap, stack: &StageStack) -> Result<Vec<LayerFrame>> {
    propagate(mask, stack, Mode::Sparse)
}

/// First layer at which the mask pattern is gone: every position is active
/// although the pooled mask at that resolution still has inactive cells.
///
/// A mask without masked cells has nothing to lose and reports `Some(0)`.
/// Sparse propagation tracks the pooled mask exactly, so it reports `None`
/// for every mask with at least one masked cell.
pub fn pattern_loss_depth(mask: &MaskMap, stack: &StageStack, mode: Mode) -> Result<Option<usize>> {
    if mask.masked_count() == 0 {
        stack.validate()?;
        return Ok(Some(0));
    }
    let frames = propagate(mask, stack, mode)?;
    let reference = sparse_propagate(mask, stack)?;
    Ok(frames
        .iter()
        .zip(&reference)
        .find(|(f, r)| f.support.is_full() && !r.support.is_full())
        .map(|(f, _)| f.layer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PatchGrid;
    use crate::patterns::gen_mesh;
    use crate::rng::RngSeed;
    use proptest::prelude::*;

    fn grid(c: usize, r: usize) -> PatchGrid {
        PatchGrid::cells(c, r).unwrap()
    }

    fn checkerboard(n: usize) -> MaskMap {
        let cells = (0..n * n).map(|i| (i % n + i / n) % 2 == 1).collect();
        MaskMap::new(grid(n, n), cells).unwrap()
    }

    #[test]
    fn downsample_examples() {
        let open = MaskMap::filled(grid(8, 8), false);
        let maps = downsample_mask(&open, 3);
        let dims: Vec<_> = maps.iter().map(|m| (m.cols(), m.rows(), m.is_full())).collect();
        assert_eq!(dims, vec![(4, 4, true), (2, 2, true), (1, 1, true)]);
        let closed = MaskMap::filled(grid(8, 8), true);
        assert!(downsample_mask(&closed, 3).iter().all(SupportMap::is_empty));
        let board = downsample_mask(&checkerboard(8), 1);
        assert!(board[0].is_full());
    }

    #[test]
    fn downsample_pads_odd_grids() {
        let mut mask = MaskMap::filled(grid(7, 7), true);
        mask.set(6, 6, false);
        let maps = downsample_mask(&mask, 3);
        assert_eq!((maps[0].cols(), maps[0].rows()), (4, 4));
        assert_eq!(maps[0].active_count(), 1);
        assert!(maps[0].get(3, 3));
        assert!(maps[2].is_full());
    }

    #[test]
    fn dense_dilation_examples() {
        let stack = StageStack {
            num_stages: 1,
            layers_per_stage: 4,
            kernel_radius: 1,
        };
        let empty = MaskMap::filled(grid(7, 7), true);
        assert!(dense_propagate(&empty, &stack)
            .unwrap()
            .iter()
            .all(|f| f.support.is_empty()));
        let mut center = MaskMap::filled(grid(7, 7), true);
        center.set(3, 3, false);
        let frames = dense_propagate(&center, &stack).unwrap();
        let counts: Vec<_> = frames.iter().map(|f| f.support.active_count()).collect();
        assert_eq!(counts, vec![1, 9, 25, 49, 49]);
        for (layer, frame) in frames.iter().enumerate().take(4) {
            for r in 0..7usize {
                for c in 0..7usize {
                    let inside = c.abs_diff(3) <= layer && r.abs_diff(3) <= layer;
                    assert_eq!(frame.support.get(c, r), inside);
                }
            }
        }
    }

    #[test]
    fn mesh_keep_set_fills_after_one_layer() {
        let stack = StageStack {
            num_stages: 1,
            layers_per_stage: 1,
            kernel_radius: 1,
        };
        for seed in 0..200 {
            let mask = gen_mesh(&grid(7, 7), 0.6, RngSeed(seed)).unwrap();
            let frames = dense_propagate(&mask, &stack).unwrap();
            let full = frames[1].support.is_full();
            // enumeration: full iff every cell has a kept cell within Chebyshev distance 1
            let kept = mask.unmasked_indices();
            let covered = (0..49).all(|i: usize| {
                kept.iter()
                    .any(|&k| (k % 7).abs_diff(i % 7) <= 1 && (k / 7).abs_diff(i / 7) <= 1)
            });
            assert_eq!(full, covered, "seed {seed}");
        }
    }

    #[test]
    fn sparse_examples() {
        let stack = StageStack::default();
        let mask = gen_mesh(&grid(7, 7), 0.6, RngSeed(11)).unwrap();
        let frames = sparse_propagate(&mask, &stack).unwrap();
        let pooled = downsample_mask(&mask, stack.num_stages - 1);
        for f in &frames {
            let expected = if f.stage == 0 {
                SupportMap::from_unmasked(&mask)
            } else {
                pooled[f.stage - 1].clone()
            };
            assert_eq!(f.support, expected, "layer {}", f.layer);
        }
        let closed = MaskMap::filled(grid(7, 7), true);
        assert!(sparse_propagate(&closed, &stack)
            .unwrap()
            .iter()
            .all(|f| f.support.is_empty()));
    }

    #[test]
    fn loss_depth_examples() {
        let stack = StageStack {
            num_stages: 1,
            layers_per_stage: 8,
            kernel_radius: 1,
        };
        let open = MaskMap::filled(grid(7, 7), false);
        assert_eq!(pattern_loss_depth(&open, &stack, Mode::Dense).unwrap(), Some(0));
        assert_eq!(pattern_loss_depth(&open, &stack, Mode::Sparse).unwrap(), Some(0));
        let mut corner = MaskMap::filled(grid(7, 7), true);
        corner.set(0, 0, false);
        assert_eq!(pattern_loss_depth(&corner, &stack, Mode::Dense).unwrap(), Some(6));
        assert_eq!(pattern_loss_depth(&corner, &stack, Mode::Sparse).unwrap(), None);
        let closed = MaskMap::filled(grid(7, 7), true);
        assert_eq!(pattern_loss_depth(&closed, &stack, Mode::Dense).unwrap(), None);
        let short = StageStack {
            num_stages: 1,
            layers_per_stage: 2,
            kernel_radius: 1,
        };
        assert_eq!(pattern_loss_depth(&corner, &short, Mode::Dense).unwrap(), None);
    }

    #[test]
    fn stack_validation() {
        let mask = MaskMap::filled(grid(4, 4), false);
        for bad in [
            StageStack {
                num_stages: 0,
                ..Default::default()
            },
            StageStack {
                kernel_radius: 0,
                ..Default::default()
            },
            StageStack {
                layers_per_stage: 0,
                ..Default::default()
            },
        ] {
            assert!(dense_propagate(&mask, &bad).is_err());
        }
        assert_eq!(StageStack::DOWNSAMPLE_FACTOR, 2);
    }

    #[test]
    fn display_frame() {
        let mut m = MaskMap::filled(grid(3, 2), true);
        m.set(1, 0, false);
        assert_eq!(SupportMap::from_unmasked(&m).to_string(), ".#.\n...\n");
    }

    proptest! {
        #[test]
        fn dense_monotone_and_sparse_constant(
            cells in proptest::collection::vec(any::<bool>(), 49),
            stages in 1usize..4,
            layers in 1usize..4,
            radius in 1usize..3,
        ) {
            let mask = MaskMap::new(grid(7, 7), cells).unwrap();
            let stack = StageStack { num_stages: stages, layers_per_stage: layers, kernel_radius: radius };
            let dense = dense_propagate(&mask, &stack).unwrap();
            for w in dense.windows(2) {
                let prev = if w[1].stage != w[0].stage { w[0].support.pool_any() } else { w[0].support.clone() };
                prop_assert!(prev.is_subset_of(&w[1].support));
            }
            let sparse = sparse_propagate(&mask, &stack).unwrap();
            for w in sparse.windows(2) {
                if w[0].stage == w[1].stage {
                    prop_assert_eq!(&w[0].support, &w[1].support);
                }
            }
            for (d, s) in dense.iter().zip(&sparse) {
                prop_assert!(s.support.is_subset_of(&d.support));
            }
        }

        #[test]
        fn dense_fills_within_diameter_bound(
            cells in proptest::collection::vec(any::<bool>(), 35),
            radius in 1usize..4,
        ) {
            let mask = MaskMap::new(grid(7, 5), cells).unwrap();
            prop_assume!(mask.masked_count() < 35);
            // Chebyshev diameter of a 7x5 grid
            let diameter: usize = 6;
            let bound = diameter.div_ceil(radius);
            let stack = StageStack { num_stages: 1, layers_per_stage: bound, kernel_radius: radius };
            let frames = dense_propagate(&mask, &stack).unwrap();
            prop_assert!(frames[bound].support.is_full());
        }

        #[test]
        fn pooling_commutes_with_complement(cells in proptest::collection::vec(any::<bool>(), 42)) {
            let mask = MaskMap::new(grid(7, 6), cells).unwrap();
            let unmasked = SupportMap::from_unmasked(&mask);
            let masked = unmasked.complement();
            prop_assert_eq!(unmasked.pool_any().complement(), masked.pool_all());
        }
    }
}
