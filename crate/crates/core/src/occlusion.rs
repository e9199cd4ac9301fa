//! Probability that a small rectangular region ends up completely masked.
//!
//! Random and mesh masks have closed forms (hypergeometric products); every
//! pattern can be estimated by Monte-Carlo over seeded trials.

use std::thread;

use rand::RngCore;

use crate::error::{MaskError, Result};
use crate::grid::{random_masked_count, MaskMap, PatchGrid};
use crate::patterns::{mesh_candidates_with, mesh_kept_count, MeshOptions, ParityClass, PatternSpec};
use crate::rng::{stream, RngSeed, Stream};
use crate::scalar::Scalar;

/// Trials per Monte-Carlo partition. Partition `p` draws its trial seeds
/// from its own stream, so results do not depend on the thread count.
pub const PARTITION_TRIALS: u64 = 4096;

/// Axis-aligned block of patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Region {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Region { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn validate(&self, grid: &PatchGrid) -> Result<()> {
        if self.w == 0 || self.h == 0 || self.x + self.w > grid.cols() || self.y + self.h > grid.rows() {
            return Err(MaskError::RegionOutOfBounds {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                cols: grid.cols(),
                rows: grid.rows(),
            });
        }
        Ok(())
    }

    /// Row-major cell indices covered by the region.
    pub fn cells(&self, grid: &PatchGrid) -> Vec<usize> {
        (self.y..self.y + self.h)
            .flat_map(|row| (self.x..self.x + self.w).map(move |col| grid.index(col, row)))
            .collect()
    }

    /// Every placement of a `w x h` region on the grid.
    pub fn all_positions(grid: &PatchGrid, w: usize, h: usize) -> Vec<Region> {
        if w == 0 || h == 0 || w > grid.cols() || h > grid.rows() {
            return Vec::new();
        }
        (0..=grid.rows() - h)
            .flat_map(|y| (0..=grid.cols() - w).map(move |x| Region::new(x, y, w, h)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionEstimate<T> {
    pub probability: T,
    /// Zero for exact results.
    pub stderr: T,
    pub method: Method,
    /// Zero for exact results.
    pub trials: u64,
}

impl<T: Scalar> OcclusionEstimate<T> {
    fn exact(probability: T) -> Self {
        OcclusionEstimate {
            probability,
            stderr: T::zero(),
            method: Method::Exact,
            trials: 0,
        }
    }
}

/// Probability that `special` fixed items all land in a uniform `draws`-subset
/// of `population` items: `C(N - a, m - a) / C(N, m)`.
pub fn all_included<T: Scalar>(population: usize, draws: usize, special: usize) -> T {
    if special > draws || draws > population {
        return T::zero();
    }
    (0..special).fold(T::one(), |acc, i| {
        acc * T::ratio((draws - i) as u64, (population - i) as u64)
    })
}

/// Probability that none of `special` fixed items lands in a uniform
/// `draws`-subset: `C(N - c, k) / C(N, k)`.
pub fn none_included<T: Scalar>(population: usize, draws: usize, special: usize) -> T {
    if draws + special > population {
        return T::zero();
    }
    (0..special).fold(T::one(), |acc, i| {
        acc * T::ratio((population - draws - i) as u64, (population - i) as u64)
    })
}

/// Full-occlusion probability under the random pattern at `ratio`.
pub fn exact_random_occlusion<T: Scalar>(
    grid: &PatchGrid,
    ratio: f64,
    region: &Region,
) -> Result<OcclusionEstimate<T>> {
    let masked = random_masked_count(grid, ratio)?;
    exact_random_occlusion_count(grid, masked, region)
}

/// Same as [`exact_random_occlusion`] for an explicit masked count.
pub fn exact_random_occlusion_count<T: Scalar>(
    grid: &PatchGrid,
    masked: usize,
    region: &Region,
) -> Result<OcclusionEstimate<T>> {
    region.validate(grid)?;
    if masked > grid.total_patches() {
        return Err(MaskError::InvalidParameter(format!(
            "{masked} masked patches on a {grid} grid"
        )));
    }
    Ok(OcclusionEstimate::exact(all_included(
        grid.total_patches(),
        masked,
        region.area(),
    )))
}

pub fn exact_mesh_occlusion<T: Scalar>(grid: &PatchGrid, ratio: f64, region: &Region) -> Result<OcclusionEstimate<T>> {
    exact_mesh_occlusion_with(grid, ratio, region, MeshOptions::default())
}

/// Full-occlusion probability under the mesh pattern.
///
/// The region is fully masked iff none of its cells in the chosen parity
/// class is kept, so the answer averages one hypergeometric term per class.
pub fn exact_mesh_occlusion_with<T: Scalar>(
    grid: &PatchGrid,
    ratio: f64,
    region: &Region,
    options: MeshOptions,
) -> Result<OcclusionEstimate<T>> {
    region.validate(grid)?;
    PatternSpec::Mesh { ratio, options }.validate(grid)?;
    let kept = mesh_kept_count(grid, ratio, options.rounding)?;
    let mut total = T::zero();
    for parity in [ParityClass::Even, ParityClass::Odd] {
        let class = mesh_candidates_with(grid, parity, options.parity_rule);
        let inside = (region.y..region.y + region.h)
            .flat_map(|row| (region.x..region.x + region.w).map(move |col| (col, row)))
            .filter(|&(col, row)| options.parity_rule.class_of(grid, col, row) == parity)
            .count();
        total = total + none_included::<T>(class.len(), kept, inside);
    }
    Ok(OcclusionEstimate::exact(total / T::from_count(2)))
}

/// Masked count a mesh mask produces at `ratio`.
pub fn mesh_masked_count(grid: &PatchGrid, ratio: f64) -> Result<usize> {
    PatternSpec::mesh(ratio).target_count(grid)
}

/// Mesh versus random full-occlusion probabilities for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionComparison<T> {
    pub ratio: f64,
    pub region: Region,
    pub mesh: T,
    /// Random pattern at the same nominal ratio (`floor(ratio * T)` masked).
    pub random_nominal: T,
    /// Random pattern masking as many cells as the mesh mask does.
    pub random_count_matched: T,
}

pub fn compare_mesh_random<T: Scalar>(grid: &PatchGrid, ratio: f64, region: &Region) -> Result<OcclusionComparison<T>> {
    Ok(OcclusionComparison {
        ratio,
        region: *region,
        mesh: exact_mesh_occlusion(grid, ratio, region)?.probability,
        random_nominal: exact_random_occlusion(grid, ratio, region)?.probability,
        random_count_matched: exact_random_occlusion_count(grid, mesh_masked_count(grid, ratio)?, region)?.probability,
    })
}

/// Run `trials` seeded generations of `spec` and fold them into an
/// accumulator. Partitions are distributed over `threads` workers and merged
/// in partition order.
#[allow(clippy::too_many_arguments)]
pub fn fold_trials<A, I, S, M>(
    spec: &PatternSpec,
    grid: &PatchGrid,
    trials: u64,
    seed: RngSeed,
    threads: usize,
    init: I,
    step: S,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &MaskMap) + Sync,
    M: Fn(&mut A, A),
{
    if trials == 0 {
        return Err(MaskError::InvalidParameter("trials must be at least 1".into()));
    }
    spec.validate(grid)?;
    let partitions = trials.div_ceil(PARTITION_TRIALS);
    let run_partition = |p: u64| -> Result<A> {
        let mut acc = init();
        let mut rng = stream(seed, Stream::Partition(p));
        let end = ((p + 1) * PARTITION_TRIALS).min(trials);
        for _ in p * PARTITION_TRIALS..end {
            let mask = spec.generate(grid, RngSeed(rng.next_u64()))?;
            step(&mut acc, &mask);
        }
        Ok(acc)
    };
    let threads = threads.clamp(1, partitions as usize);
    let mut results: Vec<(u64, A)> = if threads == 1 {
        (0..partitions)
            .map(|p| run_partition(p).map(|a| (p, a)))
            .collect::<Result<_>>()?
    } else {
        let run = &run_partition;
        let chunks: Vec<Result<Vec<(u64, A)>>> = thread::scope(|s| {
            let handles: Vec<_> = (0..threads as u64)
                .map(|t| {
                    s.spawn(move || {
                        (t..partitions)
                            .step_by(threads)
                            .map(|p| run(p).map(|a| (p, a)))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("Monte-Carlo worker panicked"))
                .collect()
        });
        let mut all = Vec::with_capacity(partitions as usize);
        for chunk in chunks {
            all.extend(chunk?);
        }
        all
    };
    results.sort_by_key(|(p, _)| *p);
    let mut iter = results.into_iter().map(|(_, a)| a);
    let mut acc = iter.next().expect("at least one partition");
    for a in iter {
        merge(&mut acc, a);
    }
    Ok(acc)
}

/// Monte-Carlo full-occlusion estimate for a rectangular region.
pub fn mc_occlusion(
    spec: &PatternSpec,
    grid: &PatchGrid,
    region: &Region,
    trials: u64,
    seed: RngSeed,
) -> Result<OcclusionEstimate<f64>> {
    region.validate(grid)?;
    mc_occlusion_cells(spec, grid, &region.cells(grid), trials, seed, 1)
}

/// Monte-Carlo full-occlusion estimate for an arbitrary cell set.
pub fn mc_occlusion_cells(
    spec: &PatternSpec,
    grid: &PatchGrid,
    cells: &[usize],
    trials: u64,
    seed: RngSeed,
    threads: usize,
) -> Result<OcclusionEstimate<f64>> {
    if let Some(&bad) = cells.iter().find(|&&c| c >= grid.total_patches()) {
        return Err(MaskError::InvalidParameter(format!("cell {bad} outside a {grid} grid")));
    }
    let hits = fold_trials(
        spec,
        grid,
        trials,
        seed,
        threads,
        || 0u64,
        |acc, mask| {
            if cells.iter().all(|&c| mask.cells()[c]) {
                *acc += 1;
            }
        },
        |acc, other| *acc += other,
    )?;
    let p = hits as f64 / trials as f64;
    Ok(OcclusionEstimate {
        probability: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        method: Method::MonteCarlo,
        trials,
    })
}

/// Per-cell masked frequency over seeded trials.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub cols: usize,
    pub rows: usize,
    pub trials: u64,
    /// Row-major frequencies in `[0, 1]`.
    pub values: Vec<f64>,
}

impl FrequencyGrid {
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

pub fn patch_mask_frequency(
    spec: &PatternSpec,
    grid: &PatchGrid,
    trials: u64,
    seed: RngSeed,
    threads: usize,
) -> Result<FrequencyGrid> {
    let n = grid.total_patches();
    let counts = fold_trials(
        spec,
        grid,
        trials,
        seed,
        threads,
        || vec![0u64; n],
        |acc, mask| {
            for (a, &m) in acc.iter_mut().zip(mask.cells()) {
                *a += u64::from(m);
            }
        },
        |acc, other| {
            for (a, b) in acc.iter_mut().zip(other) {
                *a += b;
            }
        },
    )?;
    Ok(FrequencyGrid {
        cols: grid.cols(),
        rows: grid.rows(),
        trials,
        values: counts.into_iter().map(|c| c as f64 / trials as f64).collect(),
    })
}
