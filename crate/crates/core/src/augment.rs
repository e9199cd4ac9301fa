//! Mixup, CutMix, random resized crop and horizontal flip.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{MaskError, Result};
use crate::grid::GrayImage;
use crate::rng::{stream, RngSeed, Stream};
use crate::scalar::{one_minus, Scalar};

/// Mixing weight of the first input, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixCoefficient<T>(T);

impl<T: Scalar> MixCoefficient<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if lambda < T::zero() || lambda > T::one() {
            return Err(MaskError::InvalidParameter(format!(
                "mixing coefficient {lambda:?} outside [0, 1]"
            )));
        }
        Ok(MixCoefficient(lambda))
    }

    pub fn lambda(&self) -> &T {
        &self.0
    }

    pub fn into_inner(self) -> T {
        self.0
    }
}

/// Per-class probabilities summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVec<T>(Vec<T>);

impl<T: Scalar> LabelVec<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| *p < T::zero() || *p > T::one()) {
            return Err(MaskError::InvalidParameter(format!("invalid label vector {probs:?}")));
        }
        let sum = probs.iter().cloned().fold(T::zero(), |a, b| a + b);
        let err = (sum.to_f64_lossy() - 1.0).abs();
        if (T::EXACT && !sum.is_one()) || err > 1e-9 {
            return Err(MaskError::InvalidParameter(format!("label vector sums to {sum:?}")));
        }
        Ok(LabelVec(probs))
    }

    /// Hard label for class `class` out of `classes`.
    pub fn one_hot(class: usize, classes: usize) -> Result<Self> {
        if class >= classes {
            return Err(MaskError::InvalidParameter(format!("class {class} of {classes}")));
        }
        LabelVec::new(
            (0..classes)
                .map(|c| if c == class { T::one() } else { T::zero() })
                .collect(),
        )
    }

    pub fn probs(&self) -> &[T] {
        &self.0
    }
}

/// `x_a * lambda + x_b * (1 - lambda)` per pixel, rounded half-up.
pub fn mixup_pixels<T: Scalar>(a: &GrayImage, b: &GrayImage, lam: &MixCoefficient<T>) -> Result<GrayImage> {
    if !a.same_shape(b) {
        return Err(MaskError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let max = a.max_value().max(b.max_value());
    let l = lam.lambda().clone();
    let rest = one_minus(&l);
    let pixels = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&pa, &pb)| {
            let v = T::from_count(pa.into()) * l.clone() + T::from_count(pb.into()) * rest.clone();
            v.round_half_up().clamp(0, i64::from(max)) as u16
        })
        .collect();
    GrayImage::new(a.width(), a.height(), max, pixels)
}

/// `y_a * lambda + y_b * (1 - lambda)` componentwise.
pub fn mix_labels<T: Scalar>(ya: &LabelVec<T>, yb: &LabelVec<T>, lam: &MixCoefficient<T>) -> Result<LabelVec<T>> {
    if ya.0.len() != yb.0.len() {
        return Err(MaskError::DimensionMismatch(format!(
            "{} classes vs {}",
            ya.0.len(),
            yb.0.len()
        )));
    }
    let l = lam.lambda().clone();
    let rest = one_minus(&l);
    Ok(LabelVec(
        ya.0.iter()
            .zip(&yb.0)
            .map(|(a, b)| a.clone() * l.clone() + b.clone() * rest.clone())
            .collect(),
    ))
}

fn beta_draw<R: Rng>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MaskError::InvalidAlpha(alpha));
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|_| MaskError::InvalidAlpha(alpha))?;
    loop {
        let g1 = gamma.sample(rng);
        let g2 = gamma.sample(rng);
        // both draws underflow to zero for tiny alpha; redraw
        if g1 + g2 > 0.0 {
            return Ok((g1 / (g1 + g2)).clamp(0.0, 1.0));
        }
    }
}

/// Draw `lambda ~ Beta(alpha, alpha)` as `g1 / (g1 + g2)` with `g_i ~ Gamma(alpha, 1)`.
pub fn sample_lambda(alpha: f64, seed: RngSeed) -> Result<MixCoefficient<f64>> {
    let mut rng = stream(seed, Stream::Lambda);
    MixCoefficient::new(beta_draw(alpha, &mut rng)?)
}

/// Pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Rectangle of `b` pasted into `a`; returns the effective
/// `lambda = 1 - pasted_area / total_area`.
pub fn paste_rect<T: Scalar>(a: &GrayImage, b: &GrayImage, rect: PixelRect) -> Result<(GrayImage, MixCoefficient<T>)> {
    if !a.same_shape(b) {
        return Err(MaskError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if rect.x0 > rect.x1 || rect.y0 > rect.y1 || rect.x1 > a.width() || rect.y1 > a.height() {
        return Err(MaskError::GeometryMismatch(format!("rectangle {rect:?} outside image")));
    }
    let max = a.max_value().max(b.max_value());
    let mut out = GrayImage::new(a.width(), a.height(), max, a.pixels().to_vec())?;
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            out.set(x, y, b.get(x, y));
        }
    }
    let total = (a.width() * a.height()) as u64;
    let lam = T::one() - T::ratio(rect.area() as u64, total);
    Ok((out, MixCoefficient::new(lam)?))
}

/// Result of [`cutmix`].
#[derive(Debug, Clone, PartialEq)]
pub struct CutMixOutput<T> {
    pub image: GrayImage,
    /// Effective label weight of `a` after clipping.
    pub lambda: MixCoefficient<T>,
    /// The Beta draw the box size was derived from.
    pub sampled_lambda: f64,
    pub rect: PixelRect,
}

/// Paste a box of `b` covering a `1 - lambda0` area fraction, centred at a
/// uniform pixel and clipped to the image.
pub fn cutmix<T: Scalar>(a: &GrayImage, b: &GrayImage, alpha: f64, seed: RngSeed) -> Result<CutMixOutput<T>> {
    if !a.same_shape(b) {
        return Err(MaskError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let lambda0 = sample_lambda(alpha, seed)?.into_inner();
    let mut rng = stream(seed, Stream::CutMixBox);
    let (w, h) = (a.width() as f64, a.height() as f64);
    let cut = (1.0 - lambda0).sqrt();
    let (cw, ch) = (w * cut, h * cut);
    let cx = rng.random_range(0..a.width()) as f64;
    let cy = rng.random_range(0..a.height()) as f64;
    let clip = |v: f64, hi: f64| v.round().clamp(0.0, hi) as usize;
    let rect = PixelRect {
        x0: clip(cx - cw / 2.0, w),
        y0: clip(cy - ch / 2.0, h),
        x1: clip(cx + cw / 2.0, w),
        y1: clip(cy + ch / 2.0, h),
    };
    let (image, lambda) = paste_rect(a, b, rect)?;
    Ok(CutMixOutput {
        image,
        lambda,
        sampled_lambda: lambda0,
        rect,
    })
}

/// Scale and aspect ranges for [`random_resized_crop`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropSpec {
    pub scale_low: f64,
    pub scale_high: f64,
    pub aspect_low: f64,
    pub aspect_high: f64,
    pub out_size: usize,
}

impl CropSpec {
    /// Downstream fine-tuning crop: 8%-100% area, aspect 3/4-4/3.
    pub fn downstream(out_size: usize) -> Self {
        CropSpec {
            scale_low: 0.08,
            scale_high: 1.0,
            aspect_low: 3.0 / 4.0,
            aspect_high: 4.0 / 3.0,
            out_size,
        }
    }

    /// Contrastive pretraining crop: 20%-100% area, aspect 3/4-4/3.
    pub fn contrastive(out_size: usize) -> Self {
        CropSpec {
            scale_low: 0.20,
            ..CropSpec::downstream(out_size)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.scale_low > 0.0
            && self.scale_low <= self.scale_high
            && self.scale_high <= 1.0
            && self.aspect_low > 0.0
            && self.aspect_low <= self.aspect_high
            && self.aspect_high.is_finite()
            && self.out_size >= 1;
        if !ok {
            return Err(MaskError::InvalidParameter(format!("invalid crop spec {self:?}")));
        }
        Ok(())
    }
}

/// Crop sides for area fraction `f` and aspect `r = w / h`:
/// `w = round(sqrt(f * W * H * r))`, `h = round(sqrt(f * W * H / r))`.
/// `None` when the crop does not fit.
pub fn crop_size(width: usize, height: usize, f: f64, r: f64) -> Option<(usize, usize)> {
    let area = f * (width * height) as f64;
    let w = (area * r).sqrt().round() as usize;
    let h = (area / r).sqrt().round() as usize;
    (w >= 1 && h >= 1 && w <= width && h <= height).then_some((w, h))
}

/// Bilinear resize of the `rect` region to `out_w x out_h`, using
/// pixel-centre alignment.
pub fn resize_region(img: &GrayImage, rect: PixelRect, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if rect.x1 <= rect.x0 || rect.y1 <= rect.y0 || rect.x1 > img.width() || rect.y1 > img.height() {
        return Err(MaskError::GeometryMismatch(format!("crop {rect:?} outside image")));
    }
    let (cw, ch) = (rect.x1 - rect.x0, rect.y1 - rect.y0);
    let sx = cw as f64 / out_w as f64;
    let sy = ch as f64 / out_h as f64;
    let sample = |pos: f64, len: usize| -> (usize, usize, f64) {
        let p = pos.clamp(0.0, (len - 1) as f64);
        let i0 = p.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, p - i0 as f64)
    };
    GrayImage::from_fn(out_w, out_h, img.max_value(), |ox, oy| {
        let (x0, x1, fx) = sample((ox as f64 + 0.5) * sx - 0.5, cw);
        let (y0, y1, fy) = sample((oy as f64 + 0.5) * sy - 0.5, ch);
        let px = |x: usize, y: usize| f64::from(img.get(rect.x0 + x, rect.y0 + y));
        let top = px(x0, y0) * (1.0 - fx) + px(x1, y0) * fx;
        let bottom = px(x0, y1) * (1.0 - fx) + px(x1, y1) * fx;
        (top * (1.0 - fy) + bottom * fy)
            .round_half_up()
            .clamp(0, i64::from(img.max_value())) as u16
    })
}

/// Crop geometry chosen by [`random_resized_crop`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropChoice {
    pub rect: PixelRect,
    /// `true` when all ten attempts failed and the centre crop was used.
    pub fallback: bool,
}

pub fn choose_crop(width: usize, height: usize, spec: &CropSpec, seed: RngSeed) -> Result<CropChoice> {
    spec.validate()?;
    let mut rng = stream(seed, Stream::Crop);
    let (log_lo, log_hi) = (spec.aspect_low.ln(), spec.aspect_high.ln());
    for _ in 0..10 {
        let f = rng.random_range(spec.scale_low..=spec.scale_high);
        let r = if log_hi > log_lo {
            rng.random_range(log_lo..=log_hi).exp()
        } else {
            spec.aspect_low
        };
        if let Some((w, h)) = crop_size(width, height, f, r) {
            let x0 = rng.random_range(0..=width - w);
            let y0 = rng.random_range(0..=height - h);
            return Ok(CropChoice {
                rect: PixelRect {
                    x0,
                    y0,
                    x1: x0 + w,
                    y1: y0 + h,
                },
                fallback: false,
            });
        }
    }
    // centre crop of the whole image, aspect clamped into range
    let ratio = width as f64 / height as f64;
    let (w, h) = if ratio < spec.aspect_low {
        (
            width,
            ((width as f64 / spec.aspect_low).round() as usize).clamp(1, height),
        )
    } else if ratio > spec.aspect_high {
        (
            ((height as f64 * spec.aspect_high).round() as usize).clamp(1, width),
            height,
        )
    } else {
        (width, height)
    };
    let x0 = (width - w) / 2;
    let y0 = (height - h) / 2;
    Ok(CropChoice {
        rect: PixelRect {
            x0,
            y0,
            x1: x0 + w,
            y1: y0 + h,
        },
        fallback: true,
    })
}

/// Random area/aspect crop resized to `out_size x out_size`.
pub fn random_resized_crop(img: &GrayImage, spec: &CropSpec, seed: RngSeed) -> Result<GrayImage> {
    let choice = choose_crop(img.width(), img.height(), spec, seed)?;
    resize_region(img, choice.rect, spec.out_size, spec.out_size)
}

pub fn mirror(img: &GrayImage) -> GrayImage {
    let w = img.width();
    GrayImage::from_fn(w, img.height(), img.max_value(), |x, y| img.get(w - 1 - x, y))
        .expect("mirror preserves geometry")
}

/// Horizontal mirror with probability `p`; returns the image and whether it flipped.
pub fn random_flip(img: &GrayImage, p: f64, seed: RngSeed) -> Result<(GrayImage, bool)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MaskError::InvalidParameter(format!(
            "flip probability {p} outside [0, 1]"
        )));
    }
    let flip = stream(seed, Stream::Flip).random::<f64>() < p;
    Ok((if flip { mirror(img) } else { img.clone() }, flip))
}
