//! File formats: 8-bit PNG and binary PPM images, the `LGSP` primitive
//! format and the JSON scene description.
//!
//! `LGSP` layout, little-endian:
//!
//! ```text
//! "LGSP" | u32 version = 1 | u32 count | u32 sh_degree | u32 T | f32 sigma
//! count × { center[3] rotation[4] scale[2] opacity sh[3(L+1)²] color[3T²] alpha[T²] }  (f32)
//! ```

use std::cell::Cell;
use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::image::{linear_to_srgb, srgb_to_linear, ColorSpace, ImageBuffer};
use crate::linalg::Vec3;
use crate::primitive::{TexturedPrimitive, MAX_TEXTURE_SIZE};
use crate::real::Real;
use crate::sh::{sh_coeff_count, MAX_SH_DEGREE};

pub const LGSP_MAGIC: &[u8; 4] = b"LGSP";
pub const LGSP_VERSION: u32 = 1;
pub const LGSP_HEADER_BYTES: usize = 24;

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset: offset as u64, message: message.into() }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Ppm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("png") => Ok(Self::Png),
            Some("ppm") => Ok(Self::Ppm),
            _ => Err(Error::invalid(format!("{}: unsupported image extension (use .png or .ppm)", path.display()))),
        }
    }
}

/// Byte values of an image, converted to the buffer's declared color space.
fn to_bytes<F: Real>(img: &ImageBuffer<F>) -> Vec<u8> {
    img.data
        .iter()
        .map(|&v| {
            let v = v.as_f64().clamp(0.0, 1.0);
            let e = match img.color_space {
                ColorSpace::Linear => linear_to_srgb(v),
                ColorSpace::Srgb => v,
            };
            (e * 255.0).round() as u8
        })
        .collect()
}

fn from_bytes(width: usize, height: usize, channels: usize, bytes: &[u8], space: ColorSpace) -> ImageBuffer<f32> {
    let data = bytes
        .iter()
        .map(|&b| {
            let e = b as f64 / 255.0;
            (match space {
                ColorSpace::Linear => srgb_to_linear(e),
                ColorSpace::Srgb => e,
            }) as f32
        })
        .collect();
    ImageBuffer { width, height, channels, data, color_space: space }
}

/// Reader that records how many bytes the decoder has consumed.
struct CountingReader<'a> {
    inner: Cursor<&'a [u8]>,
    consumed: Rc<Cell<usize>>,
}

impl Read for CountingReader<'_> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.consumed.set(self.consumed.get() + n);
        Ok(n)
    }
}

pub fn decode_png(bytes: &[u8], space: ColorSpace) -> Result<ImageBuffer<f32>> {
    let consumed = Rc::new(Cell::new(0));
    let mut decoder = png::Decoder::new(CountingReader { inner: Cursor::new(bytes), consumed: consumed.clone() });
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(|e| parse_err(consumed.get(), format!("PNG header: {e}")))?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(|e| parse_err(consumed.get(), format!("PNG data: {e}")))?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let src = &buf[..frame.buffer_size()];
    let (channels, take): (usize, &[usize]) = match frame.color_type {
        png::ColorType::Grayscale => (1, &[0]),
        png::ColorType::GrayscaleAlpha => (1, &[0]),
        png::ColorType::Rgb => (3, &[0, 1, 2]),
        png::ColorType::Rgba => (3, &[0, 1, 2]),
        png::ColorType::Indexed => return Err(parse_err(0, "unexpanded palette image")),
    };
    let stride = frame.color_type.samples();
    let mut out = Vec::with_capacity(w * h * channels);
    for px in src.chunks_exact(stride) {
        out.extend(take.iter().map(|&i| px[i]));
    }
    Ok(from_bytes(w, h, channels, &out, space))
}

pub fn encode_png<F: Real>(img: &ImageBuffer<F>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        let (color, bytes) = match img.channels {
            1 => (png::ColorType::Grayscale, to_bytes(img)),
            3 => (png::ColorType::Rgb, to_bytes(img)),
            4 => (png::ColorType::Rgba, to_bytes(img)),
            c => return Err(Error::invalid(format!("cannot write {c}-channel PNG"))),
        };
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Format(e.to_string()))?;
        writer.write_image_data(&bytes).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(out)
}

/// Parses a binary `P6` PPM with 8-bit samples.
pub fn decode_ppm(bytes: &[u8], space: ColorSpace) -> Result<ImageBuffer<f32>> {
    let mut pos = 0usize;
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(parse_err(0, "missing P6 magic"));
    }
    pos += 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Whitespace and comments before each header token.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(parse_err(pos, "truncated PPM header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(pos, "expected a decimal number in PPM header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text.parse().map_err(|_| parse_err(start, format!("number '{text}' out of range")))?;
    }
    let [w, h, maxval] = fields;
    if w == 0 || h == 0 {
        return Err(parse_err(pos, "PPM dimensions must be positive"));
    }
    if maxval != 255 {
        return Err(parse_err(pos, format!("unsupported PPM maxval {maxval} (only 255)")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(parse_err(pos, "expected whitespace after PPM maxval")),
    }
    let need = w.checked_mul(h).and_then(|n| n.checked_mul(3)).ok_or_else(|| parse_err(pos, "PPM too large"))?;
    if bytes.len() - pos < need {
        return Err(parse_err(bytes.len(), format!("PPM pixel data truncated: need {need} bytes, have {}", bytes.len() - pos)));
    }
    Ok(from_bytes(w, h, 3, &bytes[pos..pos + need], space))
}

pub fn encode_ppm<F: Real>(img: &ImageBuffer<F>) -> Result<Vec<u8>> {
    let rgb = match img.channels {
        3 => to_bytes(img),
        1 => to_bytes(img).into_iter().flat_map(|b| [b, b, b]).collect(),
        4 => to_bytes(img).chunks(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        c => return Err(Error::invalid(format!("cannot write {c}-channel PPM"))),
    };
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&rgb);
    Ok(out)
}

/// Reads a PNG or PPM; values are decoded into `space`.
pub fn read_image(path: impl AsRef<Path>, space: ColorSpace) -> Result<ImageBuffer<f32>> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path)?;
    let bytes = read_file(path)?;
    let decoded = match format {
        ImageFormat::Png => decode_png(&bytes, space),
        ImageFormat::Ppm => decode_ppm(&bytes, space),
    };
    decoded.map_err(|e| match e {
        Error::Parse { offset, message } => Error::Parse { offset, message: format!("{}: {message}", path.display()) },
        other => other,
    })
}

/// Writes a PNG or PPM chosen by extension. Values are clamped to `[0, 1]`
/// and linear buffers are sRGB-encoded.
pub fn write_image<F: Real>(path: impl AsRef<Path>, img: &ImageBuffer<F>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Png => encode_png(img)?,
        ImageFormat::Ppm => encode_ppm(img)?,
    };
    write_file(path, &bytes)
}

fn record_floats(sh_degree: usize, t: usize) -> usize {
    10 + 3 * sh_coeff_count(sh_degree) + 4 * t * t
}

pub fn encode_primitives(prims: &[TexturedPrimitive<f32>]) -> Result<Vec<u8>> {
    let (sh_degree, t, sigma) = match prims.first() {
        Some(p) => (p.sh_degree, p.texture_size, p.texture_sigma),
        None => (0, 1, 1.0),
    };
    for (i, p) in prims.iter().enumerate() {
        p.validate().map_err(|e| Error::invalid(format!("primitive {i}: {e}")))?;
        if p.sh_degree != sh_degree || p.texture_size != t || p.texture_sigma.to_bits() != sigma.to_bits() {
            return Err(Error::invalid(format!(
                "primitive {i} has (L={}, T={}, σ={}) but the file stores (L={sh_degree}, T={t}, σ={sigma}) for all",
                p.sh_degree, p.texture_size, p.texture_sigma
            )));
        }
    }
    let mut out = Vec::with_capacity(LGSP_HEADER_BYTES + prims.len() * record_floats(sh_degree, t) * 4);
    out.extend_from_slice(LGSP_MAGIC);
    for v in [LGSP_VERSION, prims.len() as u32, sh_degree as u32, t as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&sigma.to_le_bytes());
    let mut put = |v: f32| out.extend_from_slice(&v.to_le_bytes());
    for p in prims {
        p.center.to_array().into_iter().for_each(&mut put);
        p.rotation.into_iter().for_each(&mut put);
        p.scale.into_iter().for_each(&mut put);
        put(p.opacity);
        p.sh.iter().flatten().copied().for_each(&mut put);
        p.color_texture.iter().flatten().copied().for_each(&mut put);
        p.alpha_texture.iter().copied().for_each(&mut put);
    }
    Ok(out)
}

pub fn decode_primitives(bytes: &[u8]) -> Result<Vec<TexturedPrimitive<f32>>> {
    if bytes.len() < LGSP_HEADER_BYTES {
        return Err(Error::Format(format!("LGSP file is {} bytes, shorter than the 24-byte header", bytes.len())));
    }
    if &bytes[..4] != LGSP_MAGIC {
        return Err(Error::Format("bad magic, expected \"LGSP\"".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != LGSP_VERSION {
        return Err(Error::Format(format!("unsupported LGSP version {version}")));
    }
    let (count, sh_degree, t) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let sigma = f32::from_le_bytes(bytes[20..24].try_into().unwrap());
    if sh_degree > MAX_SH_DEGREE {
        return Err(Error::Format(format!("SH degree {sh_degree} exceeds {MAX_SH_DEGREE}")));
    }
    if t == 0 || t > MAX_TEXTURE_SIZE {
        return Err(Error::Format(format!("texture size {t} outside 1..={MAX_TEXTURE_SIZE}")));
    }
    let record = record_floats(sh_degree, t) * 4;
    let expected = count.checked_mul(record).and_then(|n| n.checked_add(LGSP_HEADER_BYTES));
    if expected != Some(bytes.len()) {
        return Err(Error::Format(format!(
            "LGSP size mismatch: header declares {count} records of {record} bytes, file has {} bytes",
            bytes.len()
        )));
    }
    let mut pos = LGSP_HEADER_BYTES;
    let mut next = || {
        let v = f32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
        pos += 4;
        v
    };
    let n_sh = sh_coeff_count(sh_degree);
    let mut prims = Vec::with_capacity(count);
    for _ in 0..count {
        let center = Vec3::new(next(), next(), next());
        let rotation = [next(), next(), next(), next()];
        let scale = [next(), next()];
        let opacity = next();
        let sh = (0..n_sh).map(|_| [next(), next(), next()]).collect();
        let color_texture = (0..t * t).map(|_| [next(), next(), next()]).collect();
        let alpha_texture = (0..t * t).map(|_| next()).collect();
        prims.push(TexturedPrimitive {
            center,
            rotation,
            scale,
            opacity,
            sh_degree,
            sh,
            texture_size: t,
            texture_sigma: sigma,
            color_texture,
            alpha_texture,
        });
    }
    Ok(prims)
}

pub fn write_primitives(path: impl AsRef<Path>, prims: &[TexturedPrimitive<f32>]) -> Result<()> {
    write_file(path.as_ref(), &encode_primitives(prims)?)
}

pub fn read_primitives(path: impl AsRef<Path>) -> Result<Vec<TexturedPrimitive<f32>>> {
    let path = path.as_ref();
    decode_primitives(&read_file(path)?).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub const SCENE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraEntry {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// World-to-camera rotation, row-major.
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
}

impl From<&Camera> for CameraEntry {
    fn from(c: &Camera) -> Self {
        let m = c.rotation;
        Self {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            r: [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]],
            t: c.translation,
        }
    }
}

impl CameraEntry {
    pub fn to_camera(&self) -> Result<Camera> {
        let r = self.r;
        Camera::new(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            [[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]],
            self.t,
        )
    }
}

/// JSON scene description; image paths are relative to the file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub version: u32,
    pub cameras: Vec<CameraEntry>,
    #[serde(default)]
    pub images: Vec<String>,
}

impl SceneFile {
    pub fn new(cameras: &[Camera], images: Vec<String>) -> Self {
        Self { version: SCENE_VERSION, cameras: cameras.iter().map(CameraEntry::from).collect(), images }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENE_VERSION {
            return Err(Error::Format(format!("unsupported scene version {}", self.version)));
        }
        if !self.images.is_empty() && self.images.len() != self.cameras.len() {
            return Err(Error::Format(format!(
                "scene lists {} cameras but {} images",
                self.cameras.len(),
                self.images.len()
            )));
        }
        Ok(())
    }

    pub fn cameras(&self) -> Result<Vec<Camera>> {
        self.cameras.iter().map(CameraEntry::to_camera).collect()
    }
}

pub fn read_scene_file(path: impl AsRef<Path>) -> Result<SceneFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let scene: SceneFile = serde_json::from_str(&text)?;
    scene.validate()?;
    Ok(scene)
}

pub fn write_scene_file(path: impl AsRef<Path>, scene: &SceneFile) -> Result<()> {
    scene.validate()?;
    write_file(path.as_ref(), serde_json::to_string_pretty(scene)?.as_bytes())
}

/// Cameras and their images (decoded to linear RGB).
pub fn load_scene(path: impl AsRef<Path>) -> Result<Vec<(Camera, ImageBuffer<f32>)>> {
    let path = path.as_ref();
    let scene = read_scene_file(path)?;
    if scene.images.is_empty() {
        return Err(Error::invalid(format!("{}: scene has no images", path.display())));
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    scene
        .cameras()?
        .into_iter()
        .zip(&scene.images)
        .map(|(cam, rel)| {
            let img = read_image(dir.join(rel), ColorSpace::Linear)?;
            if img.width != cam.width as usize || img.height != cam.height as usize {
                return Err(Error::invalid(format!(
                    "{rel}: image is {}×{}, camera expects {}×{}",
                    img.width, img.height, cam.width, cam.height
                )));
            }
            Ok((cam, img))
        })
        .collect()
}

/// Writes `view_XX.png` images and `scene.json` into `dir`; returns the
/// scene file path.
pub fn save_scene(dir: impl AsRef<Path>, views: &[(Camera, ImageBuffer<f32>)]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for (k, (_, img)) in views.iter().enumerate() {
        let name = format!("view_{k:02}.png");
        write_image(dir.join(&name), img)?;
        names.push(name);
    }
    let cams: Vec<Camera> = views.iter().map(|(c, _)| c.clone()).collect();
    let path = dir.join("scene.json");
    write_scene_file(&path, &SceneFile::new(&cams, names))?;
    Ok(path)
}
