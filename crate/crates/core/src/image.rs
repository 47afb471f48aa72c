use crate::error::{Error, Result};
use crate::real::{cast, Real};

/// How the stored values relate to the bytes of an 8-bit image file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ColorSpace {
    /// Values are linear light; file IO applies the sRGB transfer curve.
    Linear,
    /// Values are sRGB-encoded intensities, `byte / 255`.
    #[default]
    Srgb,
}

/// Row-major `height × width × channels` image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer<F = f32> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<F>,
    pub color_space: ColorSpace,
}

impl<F: Real> ImageBuffer<F> {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, F::zero())
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: F) -> Self {
        Self { width, height, channels, data: vec![value; width * height * channels], color_space: ColorSpace::Srgb }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<F>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if !matches!(channels, 1 | 3 | 4) {
            return Err(Error::invalid(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "image data has {} values, expected {}",
                data.len(),
                width * height * channels
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image data contains non-finite values"));
        }
        Ok(Self { width, height, channels, data, color_space: ColorSpace::Srgb })
    }

    /// Image from a per-pixel RGB function.
    pub fn from_fn_rgb(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [F; 3]) -> Self {
        let mut img = Self::new(width, height, 3);
        for y in 0..height {
            for x in 0..width {
                let c = f(x, y);
                img.data[(y * width + x) * 3..][..3].copy_from_slice(&c);
            }
        }
        img
    }

    pub fn with_color_space(mut self, cs: ColorSpace) -> Self {
        self.color_space = cs;
        self
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn same_shape<G>(&self, other: &ImageBuffer<G>) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[F] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [F] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    pub fn rgb(&self, x: usize, y: usize) -> [F; 3] {
        let p = self.pixel(x, y);
        match self.channels {
            1 => [p[0]; 3],
            _ => [p[0], p[1], p[2]],
        }
    }

    pub fn cast<G: Real>(&self) -> ImageBuffer<G> {
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| cast(v)).collect(),
            color_space: self.color_space,
        }
    }

    /// Per-pixel mean over channels.
    pub fn to_gray(&self) -> ImageBuffer<F> {
        let c = F::of(self.channels as f64);
        let data = self.data.chunks(self.channels).map(|p| p.iter().copied().sum::<F>() / c).collect();
        ImageBuffer { width: self.width, height: self.height, channels: 1, data, color_space: self.color_space }
    }

    /// Bilinear lookup at continuous pixel coordinates; pixel centers are at
    /// integers and coordinates clamp to `[0, W−1] × [0, H−1]`.
    pub fn sample_bilinear(&self, x: F, y: F, out: &mut [F]) {
        let x = x.max(F::zero()).min(F::of((self.width - 1) as f64));
        let y = y.max(F::zero()).min(F::of((self.height - 1) as f64));
        let x0f = x.floor();
        let y0f = y.floor();
        let fx = x - x0f;
        let fy = y - y0f;
        let x0 = x0f.as_f64() as usize;
        let y0 = y0f.as_f64() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let one = F::one();
        let w = [(one - fx) * (one - fy), fx * (one - fy), (one - fx) * fy, fx * fy];
        let (p00, p10, p01, p11) = (self.pixel(x0, y0), self.pixel(x1, y0), self.pixel(x0, y1), self.pixel(x1, y1));
        for c in 0..self.channels {
            out[c] = w[0] * p00[c] + w[1] * p10[c] + w[2] * p01[c] + w[3] * p11[c];
        }
    }

    /// Box-filter downsampling by an integer factor.
    pub fn downsample_box(&self, factor: usize) -> Result<ImageBuffer<F>> {
        if factor == 0 || self.width % factor != 0 || self.height % factor != 0 {
            return Err(Error::invalid(format!(
                "cannot downsample {}×{} by {factor}",
                self.width, self.height
            )));
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let norm = F::of(1.0 / (factor * factor) as f64);
        let mut out = ImageBuffer::new(w, h, self.channels).with_color_space(self.color_space);
        for y in 0..h {
            for x in 0..w {
                for c in 0..self.channels {
                    let mut s = F::zero();
                    for dy in 0..factor {
                        for dx in 0..factor {
                            s += self.pixel(x * factor + dx, y * factor + dy)[c];
                        }
                    }
                    out.pixel_mut(x, y)[c] = s * norm;
                }
            }
        }
        Ok(out)
    }

    /// Copy with every value clamped to `[0, 1]`.
    pub fn clamped(&self) -> ImageBuffer<F> {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = v.max(F::zero()).min(F::one());
        }
        out
    }
}

/// Bilinear upsampling by an integer factor with half-pixel-center alignment:
/// output pixel `o` samples input coordinate `(o + ½)/k − ½`.
pub fn upsample_bilinear<F: Real>(img: &ImageBuffer<F>, factor: usize) -> Result<ImageBuffer<F>> {
    if factor == 0 {
        return Err(Error::invalid("upsampling factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width * factor, img.height * factor);
    let k = F::of(factor as f64);
    let mut out = ImageBuffer::new(w, h, img.channels).with_color_space(img.color_space);
    let mut px = vec![F::zero(); img.channels];
    for y in 0..h {
        let sy = (F::of(y as f64) + F::half()) / k - F::half();
        for x in 0..w {
            let sx = (F::of(x as f64) + F::half()) / k - F::half();
            img.sample_bilinear(sx, sy, &mut px);
            out.pixel_mut(x, y).copy_from_slice(&px);
        }
    }
    Ok(out)
}

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}
