//! `maskkit` command-line tool.

mod error;
mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use maskkit::augment::{self, CropSpec};
use maskkit::metrics::{self, confusion_from_labels};
use maskkit::netpbm;
use maskkit::occlusion::{self, Method, Region};
use maskkit::patterns::{parse_dims, KeepRounding, ParityRule};
use maskkit::propagation::{self, StageStack};
use maskkit::{
    apply_mask, partition, BigRational, BlockParams, GrayImage, MaskMap, MeshOptions, PatchGrid, PatternSpec,
    Provenance, RngSeed, Scalar,
};

use error::{flag_error, pattern_flag, CliError};
use manifest::{leading_comments, replay_args, RunManifest};

#[derive(Parser, Debug)]
#[command(
    name = "maskkit",
    version,
    about = "Patch mask generation and analysis for masked image modeling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a mask and write it as a P1 bitmap.
    Gen(GenArgs),
    /// Fill the masked patches of a graymap.
    Apply(ApplyArgs),
    /// Full-occlusion probability of a rectangular region.
    Occlusion(OcclusionArgs),
    /// Per-patch masking frequency over seeded trials.
    Stats(StatsArgs),
    /// Layer-by-layer support of dense and sparse convolution stacks.
    Propagate(PropagateArgs),
    /// Accuracy, precision, recall and F1 from a truth,pred CSV.
    Metrics(MetricsArgs),
    /// Inverse-frequency class weights.
    Weights(WeightsArgs),
    /// Mixup, CutMix, crop and flip.
    #[command(subcommand)]
    Augment(AugmentCommand),
    /// Re-run the command recorded in an output file header.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dims(usize, usize);

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

fn parse_dims_arg(s: &str) -> Result<Dims, String> {
    parse_dims(s).map(|(a, b)| Dims(a, b)).map_err(|e| e.to_string())
}

fn parse_point(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad coordinate {v:?}"));
    Ok((p(x)?, p(y)?))
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum PatternKind {
    Mesh,
    Random,
    Square,
    Blockwise,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum RoundingArg {
    Floor,
    HalfUp,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ParityRuleArg {
    Linear,
    Checkerboard,
}

fn value_name<V: ValueEnum>(v: &V) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

#[derive(Args, Debug, Clone)]
struct PatternArgs {
    #[arg(long, value_enum)]
    pattern: PatternKind,
    /// Patch grid as COLSxROWS.
    #[arg(long, default_value = "7x7", value_parser = parse_dims_arg)]
    grid: Dims,
    /// Target masking ratio in [0, 1] (mesh requires >= 0.5).
    #[arg(long)]
    ratio: f64,
    /// Side of each square (square pattern).
    #[arg(long)]
    side_k: Option<usize>,
    #[arg(long)]
    min_block_area: Option<usize>,
    #[arg(long)]
    aspect_low: Option<f64>,
    #[arg(long)]
    aspect_high: Option<f64>,
    /// Rounding of the mesh kept count.
    #[arg(long, value_enum, default_value_t = RoundingArg::Floor)]
    rounding: RoundingArg,
    /// Parity rule of the mesh candidate classes.
    #[arg(long, value_enum, default_value_t = ParityRuleArg::Linear)]
    parity_rule: ParityRuleArg,
}

impl PatternArgs {
    fn grid(&self) -> Result<PatchGrid, CliError> {
        PatchGrid::cells(self.grid.0, self.grid.1).map_err(|e| flag_error("--grid", e))
    }

    fn spec(&self) -> Result<(PatternSpec, PatchGrid), CliError> {
        let grid = self.grid()?;
        let spec = match self.pattern {
            PatternKind::Mesh => PatternSpec::Mesh {
                ratio: self.ratio,
                options: MeshOptions {
                    rounding: match self.rounding {
                        RoundingArg::Floor => KeepRounding::Floor,
                        RoundingArg::HalfUp => KeepRounding::HalfUp,
                    },
                    parity_rule: match self.parity_rule {
                        ParityRuleArg::Linear => ParityRule::LinearIndex,
                        ParityRuleArg::Checkerboard => ParityRule::Checkerboard,
                    },
                },
            },
            PatternKind::Random => PatternSpec::random(self.ratio),
            PatternKind::Square => PatternSpec::Square {
                side_k: self
                    .side_k
                    .ok_or_else(|| CliError::usage("--side-k is required for --pattern square"))?,
                ratio: self.ratio,
            },
            PatternKind::Blockwise => {
                let d = BlockParams::default();
                PatternSpec::BlockWise {
                    ratio: self.ratio,
                    params: BlockParams {
                        min_block_area: self.min_block_area.unwrap_or(d.min_block_area),
                        aspect_low: self.aspect_low.unwrap_or(d.aspect_low),
                        aspect_high: self.aspect_high.unwrap_or(d.aspect_high),
                    },
                }
            }
        };
        spec.validate(&grid).map_err(|e| flag_error(pattern_flag(&e), e))?;
        Ok((spec, grid))
    }

    /// Canonical flags for the resolved pattern.
    fn argv(&self, spec: &PatternSpec) -> Vec<String> {
        let mut v = vec![
            "--pattern".to_string(),
            value_name(&self.pattern),
            "--grid".to_string(),
            self.grid.to_string(),
            "--ratio".to_string(),
            spec.ratio().to_string(),
        ];
        match spec {
            PatternSpec::Mesh { .. } => {
                if self.rounding != RoundingArg::Floor {
                    v.extend(["--rounding".to_string(), value_name(&self.rounding)]);
                }
                if self.parity_rule != ParityRuleArg::Linear {
                    v.extend(["--parity-rule".to_string(), value_name(&self.parity_rule)]);
                }
            }
            PatternSpec::Random { .. } => {}
            PatternSpec::Square { side_k, .. } => v.extend(["--side-k".to_string(), side_k.to_string()]),
            PatternSpec::BlockWise { params, .. } => v.extend([
                "--min-block-area".to_string(),
                params.min_block_area.to_string(),
                "--aspect-low".to_string(),
                params.aspect_low.to_string(),
                "--aspect-high".to_string(),
                params.aspect_high.to_string(),
            ]),
        }
        v
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    pattern: PatternArgs,
    #[arg(long, env = "MASKKIT_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    /// Input P2/P5 graymap.
    #[arg(long)]
    image: PathBuf,
    /// Input P1 mask.
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    patch_size: usize,
    /// Value written into masked patches.
    #[arg(long, default_value_t = 0)]
    fill: u16,
    /// Write binary P5 instead of plain P2.
    #[arg(long)]
    binary: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum OcclusionMode {
    Exact,
    Mc,
    Both,
}

#[derive(Args, Debug)]
struct OcclusionArgs {
    #[command(flatten)]
    pattern: PatternArgs,
    /// Region size as WxH patches.
    #[arg(long, value_parser = parse_dims_arg)]
    region: Dims,
    /// Top-left patch of the region as X,Y.
    #[arg(long, value_parser = parse_point, default_value = "0,0", conflicts_with = "all_positions")]
    at: (usize, usize),
    /// One row per placement of the region.
    #[arg(long)]
    all_positions: bool,
    #[arg(long, value_enum, default_value_t = OcclusionMode::Exact)]
    mode: OcclusionMode,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, env = "MASKKIT_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for Monte-Carlo; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    pattern: PatternArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, env = "MASKKIT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    Dense,
    Sparse,
}

#[derive(Args, Debug)]
struct PropagateArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Convolution layers per stage.
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 1)]
    stages: usize,
    /// Kernel radius; 1 is a 3x3 kernel.
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// Also write text frames of each layer's support.
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Two-column CSV of 0/1 labels: truth,pred. A header row is optional.
    #[arg(long)]
    csv: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WeightsArgs {
    /// Negative-class count.
    #[arg(long)]
    n0: u64,
    /// Positive-class count.
    #[arg(long)]
    n1: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum CropPreset {
    Downstream,
    Contrastive,
}

#[derive(Subcommand, Debug)]
enum AugmentCommand {
    /// Draw a mixing coefficient from Beta(alpha, alpha).
    Lambda {
        #[arg(long)]
        alpha: f64,
        #[arg(long, env = "MASKKIT_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Pixelwise convex combination of two graymaps.
    Mixup {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Fixed coefficient instead of a Beta draw.
        #[arg(long, conflicts_with = "alpha", required_unless_present = "alpha")]
        lambda: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, env = "MASKKIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Paste a random box of one graymap into another.
    Cutmix {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, env = "MASKKIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Random resized crop.
    Crop {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out_size: usize,
        #[arg(long, value_enum, default_value_t = CropPreset::Downstream)]
        preset: CropPreset,
        #[arg(long)]
        scale_low: Option<f64>,
        #[arg(long)]
        scale_high: Option<f64>,
        #[arg(long)]
        aspect_low: Option<f64>,
        #[arg(long)]
        aspect_high: Option<f64>,
        #[arg(long, env = "MASKKIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Horizontal flip with probability p.
    Flip {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, env = "MASKKIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Output file produced by an earlier run.
    file: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::internal(format!("cannot write to standard output: {e}"))),
    }
}

fn in_file(path: &Path, err: maskkit::MaskError) -> CliError {
    CliError::usage(format!("{}: {err}", path.display()))
}

fn read_gray(path: &Path) -> Result<GrayImage, CliError> {
    Ok(netpbm::read_pgm(&read_file(path)?).map_err(|e| in_file(path, e))?.0)
}

fn read_mask(path: &Path) -> Result<MaskMap, CliError> {
    Ok(netpbm::read_mask_pbm(&read_file(path)?)
        .map_err(|e| in_file(path, e))?
        .0)
}

fn path_arg(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn strings<const N: usize>(items: [&str; N]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// CSV body with the manifest as leading comment lines.
fn csv_output(manifest: &RunManifest, header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut out = manifest.header().into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    let csv_err = |e: csv::Error| CliError::internal(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::internal(format!("csv: {e}")))?;
    drop(w);
    Ok(out)
}

fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    let (spec, grid) = a.pattern.spec()?;
    let seed = RngSeed(a.seed);
    let mask = spec
        .generate(&grid, seed)
        .map_err(|e| flag_error(pattern_flag(&e), e))?;
    let provenance = Provenance {
        spec,
        cols: grid.cols(),
        rows: grid.rows(),
        seed,
    };
    let mut args = strings(["gen"]);
    args.extend(a.pattern.argv(&spec));
    args.extend(["--seed".to_string(), a.seed.to_string()]);
    let manifest = RunManifest::new("gen", args, Some(a.seed));
    let mut comments = vec![provenance.to_string()];
    comments.extend(manifest.lines());
    emit(a.output.as_deref(), netpbm::write_mask_pbm(&mask, &comments).as_bytes())
}

fn cmd_apply(a: &ApplyArgs) -> Result<(), CliError> {
    let image = read_gray(&a.image)?;
    let mask = read_mask(&a.mask)?;
    let grid = partition(image.width(), image.height(), a.patch_size).map_err(|e| flag_error("--patch-size", e))?;
    let mask = mask.with_grid(grid).map_err(|e| {
        CliError::usage(format!(
            "{} does not fit {} with --patch-size {}: {e}",
            a.mask.display(),
            a.image.display(),
            a.patch_size
        ))
    })?;
    let out = apply_mask(&image, &mask, a.fill).map_err(|e| flag_error("--fill", e))?;
    let mut args = vec![
        "apply".to_string(),
        "--image".to_string(),
        path_arg(&a.image),
        "--mask".to_string(),
        path_arg(&a.mask),
        "--patch-size".to_string(),
        a.patch_size.to_string(),
        "--fill".to_string(),
        a.fill.to_string(),
    ];
    if a.binary {
        args.push("--binary".to_string());
    }
    let comments = RunManifest::new("apply", args, None).lines();
    let bytes = if a.binary {
        netpbm::write_pgm_binary(&out, &comments)
    } else {
        netpbm::write_pgm_plain(&out, &comments).into_bytes()
    };
    emit(a.output.as_deref(), &bytes)
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.12}")
}

fn cmd_occlusion(a: &OcclusionArgs) -> Result<(), CliError> {
    let (spec, grid) = a.pattern.spec()?;
    let Dims(w, h) = a.region;
    let regions = if a.all_positions {
        let all = Region::all_positions(&grid, w, h);
        if all.is_empty() {
            return Err(CliError::usage(format!(
                "invalid value for --region: {w}x{h} does not fit a {grid} grid"
            )));
        }
        all
    } else {
        let r = Region::new(a.at.0, a.at.1, w, h);
        r.validate(&grid).map_err(|e| flag_error("--region/--at", e))?;
        vec![r]
    };
    let want_exact = a.mode != OcclusionMode::Mc;
    let want_mc = a.mode != OcclusionMode::Exact;
    if want_exact && !matches!(spec, PatternSpec::Mesh { .. } | PatternSpec::Random { .. }) {
        return Err(CliError::usage(format!(
            "invalid value for --mode: exact probabilities exist for mesh and random only, not {}",
            spec.name()
        )));
    }
    if want_mc && (a.trials == 0 || a.threads == 0) {
        return Err(CliError::usage("--trials and --threads must be at least 1"));
    }
    let mut rows = Vec::new();
    for region in &regions {
        let mut row = |method: Method, p: f64, se: f64, trials: u64| {
            rows.push(vec![
                spec.name().to_string(),
                spec.ratio().to_string(),
                region.w.to_string(),
                region.h.to_string(),
                region.x.to_string(),
                region.y.to_string(),
                method.name().to_string(),
                fmt_prob(p),
                fmt_prob(se),
                trials.to_string(),
                a.seed.to_string(),
            ]);
        };
        if want_exact {
            let est = match spec {
                PatternSpec::Mesh { ratio, options } => {
                    occlusion::exact_mesh_occlusion_with::<BigRational>(&grid, ratio, region, options)?
                }
                _ => occlusion::exact_random_occlusion::<BigRational>(&grid, spec.ratio(), region)?,
            };
            row(Method::Exact, est.probability.to_f64_lossy(), 0.0, 0);
        }
        if want_mc {
            let est = occlusion::mc_occlusion_cells(
                &spec,
                &grid,
                &region.cells(&grid),
                a.trials,
                RngSeed(a.seed),
                a.threads,
            )?;
            row(Method::MonteCarlo, est.probability, est.stderr, est.trials);
        }
    }
    let mut args = strings(["occlusion"]);
    args.extend(a.pattern.argv(&spec));
    args.extend(["--region".to_string(), a.region.to_string()]);
    if a.all_positions {
        args.push("--all-positions".to_string());
    } else {
        args.extend(["--at".to_string(), format!("{},{}", a.at.0, a.at.1)]);
    }
    args.extend(["--mode".to_string(), value_name(&a.mode)]);
    args.extend(["--trials".to_string(), a.trials.to_string()]);
    args.extend(["--seed".to_string(), a.seed.to_string()]);
    args.extend(["--threads".to_string(), a.threads.to_string()]);
    let manifest = RunManifest::new("occlusion", args, Some(a.seed));
    let header = [
        "pattern",
        "ratio",
        "region_w",
        "region_h",
        "x",
        "y",
        "method",
        "probability",
        "stderr",
        "trials",
        "seed",
    ];
    emit(a.output.as_deref(), &csv_output(&manifest, &header, rows)?)
}

fn cmd_stats(a: &StatsArgs) -> Result<(), CliError> {
    let (spec, grid) = a.pattern.spec()?;
    if a.trials == 0 || a.threads == 0 {
        return Err(CliError::usage("--trials and --threads must be at least 1"));
    }
    let freq = occlusion::patch_mask_frequency(&spec, &grid, a.trials, RngSeed(a.seed), a.threads)?;
    let mut rows = Vec::with_capacity(freq.values.len());
    for row in 0..freq.rows {
        for col in 0..freq.cols {
            rows.push(vec![
                col.to_string(),
                row.to_string(),
                format!("{:.6}", freq.get(col, row)),
            ]);
        }
    }
    let mut args = strings(["stats"]);
    args.extend(a.pattern.argv(&spec));
    args.extend(["--trials".to_string(), a.trials.to_string()]);
    args.extend(["--seed".to_string(), a.seed.to_string()]);
    args.extend(["--threads".to_string(), a.threads.to_string()]);
    let manifest = RunManifest::new("stats", args, Some(a.seed));
    emit(
        a.output.as_deref(),
        &csv_output(&manifest, &["col", "row", "frequency"], rows)?,
    )
}

fn cmd_propagate(a: &PropagateArgs) -> Result<(), CliError> {
    let mask = read_mask(&a.mask)?;
    let stack = StageStack {
        num_stages: a.stages,
        layers_per_stage: a.layers,
        kernel_radius: a.radius,
    };
    stack
        .validate()
        .map_err(|e| flag_error("--stages/--layers/--radius", e))?;
    let mode = match a.mode {
        ModeArg::Dense => propagation::Mode::Dense,
        ModeArg::Sparse => propagation::Mode::Sparse,
    };
    let frames = propagation::propagate(&mask, &stack, mode)?;
    let args = vec![
        "propagate".to_string(),
        "--mask".to_string(),
        path_arg(&a.mask),
        "--mode".to_string(),
        mode.name().to_string(),
        "--layers".to_string(),
        a.layers.to_string(),
        "--stages".to_string(),
        a.stages.to_string(),
        "--radius".to_string(),
        a.radius.to_string(),
    ];
    let manifest = RunManifest::new("propagate", args, None);
    if let Some(path) = &a.frames {
        let mut text = manifest.header();
        for f in &frames {
            text.push_str(&format!(
                "layer={} stage={} active={}\n{}\n",
                f.layer,
                f.stage,
                f.support.active_count(),
                f.support
            ));
        }
        emit(Some(path), text.as_bytes())?;
    }
    let rows = frames
        .iter()
        .map(|f| {
            vec![
                f.layer.to_string(),
                f.support.active_count().to_string(),
                f.support.is_full().to_string(),
            ]
        })
        .collect();
    emit(
        a.output.as_deref(),
        &csv_output(&manifest, &["layer", "active_count", "is_full"], rows)?,
    )
}

fn cmd_metrics(a: &MetricsArgs) -> Result<(), CliError> {
    let data = read_file(&a.csv)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(data.as_slice());
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", a.csv.display())))?;
        if rec.len() != 2 {
            return Err(CliError::usage(format!(
                "{}: row {} has {} columns, expected truth,pred",
                a.csv.display(),
                i + 1,
                rec.len()
            )));
        }
        let is_label = |s: &str| s == "0" || s == "1";
        if i == 0 && !is_label(&rec[0]) && !is_label(&rec[1]) {
            continue;
        }
        truth.push(rec[0].to_string());
        pred.push(rec[1].to_string());
    }
    let counts = confusion_from_labels(&truth, &pred).map_err(|e| in_file(&a.csv, e))?;
    let report: maskkit::ExactMetrics = metrics::metrics(&counts);
    let manifest = RunManifest::new(
        "metrics",
        vec!["metrics".into(), "--csv".into(), path_arg(&a.csv)],
        None,
    );
    let mut out = manifest.header();
    out.push_str("accuracy,precision,recall,f1\n");
    out.push_str(&report.table_row());
    out.push('\n');
    emit(a.output.as_deref(), out.as_bytes())
}

fn cmd_weights(a: &WeightsArgs) -> Result<(), CliError> {
    let w: maskkit::ClassWeights = metrics::class_weights(a.n0, a.n1).map_err(|e| flag_error("--n0/--n1", e))?;
    let args = vec![
        "weights".to_string(),
        "--n0".to_string(),
        a.n0.to_string(),
        "--n1".to_string(),
        a.n1.to_string(),
    ];
    let manifest = RunManifest::new("weights", args, None);
    let row = vec![
        w.n0.to_string(),
        w.n1.to_string(),
        format!("{:.6}", w.w0),
        format!("{:.6}", w.w1),
    ];
    emit(
        a.output.as_deref(),
        &csv_output(&manifest, &["n0", "n1", "w0", "w1"], vec![row])?,
    )
}

fn write_image(path: &Path, img: &GrayImage, manifest: &RunManifest) -> Result<(), CliError> {
    emit(Some(path), netpbm::write_pgm_plain(img, &manifest.lines()).as_bytes())
}

fn print_pairs(pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        println!("{k}={v}");
    }
}

fn cmd_augment(c: &AugmentCommand) -> Result<(), CliError> {
    match c {
        AugmentCommand::Lambda { alpha, seed } => {
            let lam = augment::sample_lambda(*alpha, RngSeed(*seed)).map_err(|e| flag_error("--alpha", e))?;
            print_pairs(&[
                ("alpha", alpha.to_string()),
                ("seed", seed.to_string()),
                ("lambda", lam.lambda().to_string()),
            ]);
        }
        AugmentCommand::Mixup {
            a,
            b,
            lambda,
            alpha,
            seed,
            output,
        } => {
            let (ia, ib) = (read_gray(a)?, read_gray(b)?);
            let lam = match (lambda, alpha) {
                (Some(l), _) => maskkit::MixCoefficient::new(*l).map_err(|e| flag_error("--lambda", e))?,
                (None, Some(al)) => {
                    augment::sample_lambda(*al, RngSeed(*seed)).map_err(|e| flag_error("--alpha", e))?
                }
                (None, None) => return Err(CliError::usage("one of --lambda or --alpha is required")),
            };
            let out = augment::mixup_pixels(&ia, &ib, &lam)?;
            let mut args = vec![
                "augment".into(),
                "mixup".into(),
                "--a".into(),
                path_arg(a),
                "--b".into(),
                path_arg(b),
            ];
            match (lambda, alpha) {
                (Some(l), _) => args.extend(["--lambda".to_string(), l.to_string()]),
                (None, Some(al)) => args.extend(["--alpha".to_string(), al.to_string()]),
                _ => {}
            }
            args.extend(["--seed".to_string(), seed.to_string()]);
            write_image(output, &out, &RunManifest::new("augment mixup", args, Some(*seed)))?;
            print_pairs(&[("seed", seed.to_string()), ("lambda", lam.lambda().to_string())]);
        }
        AugmentCommand::Cutmix {
            a,
            b,
            alpha,
            seed,
            output,
        } => {
            let (ia, ib) = (read_gray(a)?, read_gray(b)?);
            let out = augment::cutmix::<BigRational>(&ia, &ib, *alpha, RngSeed(*seed)).map_err(|e| match e {
                maskkit::MaskError::InvalidAlpha(_) => flag_error("--alpha", e),
                e => e.into(),
            })?;
            let args = vec![
                "augment".into(),
                "cutmix".into(),
                "--a".into(),
                path_arg(a),
                "--b".into(),
                path_arg(b),
                "--alpha".into(),
                alpha.to_string(),
                "--seed".into(),
                seed.to_string(),
            ];
            write_image(
                output,
                &out.image,
                &RunManifest::new("augment cutmix", args, Some(*seed)),
            )?;
            let r = out.rect;
            print_pairs(&[
                ("seed", seed.to_string()),
                ("sampled_lambda", out.sampled_lambda.to_string()),
                ("lambda", out.lambda.lambda().to_f64_lossy().to_string()),
                ("lambda_exact", out.lambda.lambda().to_string()),
                ("rect", format!("{},{},{},{}", r.x0, r.y0, r.x1, r.y1)),
            ]);
        }
        AugmentCommand::Crop {
            image,
            out_size,
            preset,
            scale_low,
            scale_high,
            aspect_low,
            aspect_high,
            seed,
            output,
        } => {
            let img = read_gray(image)?;
            let base = match preset {
                CropPreset::Downstream => CropSpec::downstream(*out_size),
                CropPreset::Contrastive => CropSpec::contrastive(*out_size),
            };
            let spec = CropSpec {
                scale_low: scale_low.unwrap_or(base.scale_low),
                scale_high: scale_high.unwrap_or(base.scale_high),
                aspect_low: aspect_low.unwrap_or(base.aspect_low),
                aspect_high: aspect_high.unwrap_or(base.aspect_high),
                out_size: *out_size,
            };
            spec.validate()
                .map_err(|e| flag_error("--out-size/--scale-*/--aspect-*", e))?;
            let choice = augment::choose_crop(img.width(), img.height(), &spec, RngSeed(*seed))?;
            let out = augment::resize_region(&img, choice.rect, *out_size, *out_size)?;
            let args = vec![
                "augment".into(),
                "crop".into(),
                "--image".into(),
                path_arg(image),
                "--out-size".into(),
                out_size.to_string(),
                "--scale-low".into(),
                spec.scale_low.to_string(),
                "--scale-high".into(),
                spec.scale_high.to_string(),
                "--aspect-low".into(),
                spec.aspect_low.to_string(),
                "--aspect-high".into(),
                spec.aspect_high.to_string(),
                "--seed".into(),
                seed.to_string(),
            ];
            write_image(output, &out, &RunManifest::new("augment crop", args, Some(*seed)))?;
            let r = choice.rect;
            print_pairs(&[
                ("seed", seed.to_string()),
                ("rect", format!("{},{},{},{}", r.x0, r.y0, r.x1, r.y1)),
                ("fallback", choice.fallback.to_string()),
            ]);
        }
        AugmentCommand::Flip { image, p, seed, output } => {
            let img = read_gray(image)?;
            let (out, flipped) = augment::random_flip(&img, *p, RngSeed(*seed)).map_err(|e| flag_error("--p", e))?;
            let args = vec![
                "augment".into(),
                "flip".into(),
                "--image".into(),
                path_arg(image),
                "--p".into(),
                p.to_string(),
                "--seed".into(),
                seed.to_string(),
            ];
            write_image(output, &out, &RunManifest::new("augment flip", args, Some(*seed)))?;
            print_pairs(&[("seed", seed.to_string()), ("flipped", flipped.to_string())]);
        }
    }
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> Result<(), CliError> {
    let data = read_file(&a.file)?;
    let mut argv = vec!["maskkit".to_string()];
    argv.extend(
        replay_args(&leading_comments(&data)).map_err(|e| CliError::usage(format!("{}: {e}", a.file.display())))?,
    );
    if argv.get(1).is_some_and(|c| c == "replay") {
        return Err(CliError::usage("refusing to replay a replay"));
    }
    if let Some(out) = &a.output {
        argv.extend(["--output".to_string(), path_arg(out)]);
    }
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| CliError::usage(format!("{}: recorded arguments no longer parse: {e}", a.file.display())))?;
    run(&cli)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Apply(a) => cmd_apply(a),
        Command::Occlusion(a) => cmd_occlusion(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Propagate(a) => cmd_propagate(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Weights(a) => cmd_weights(a),
        Command::Augment(c) => cmd_augment(c),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
