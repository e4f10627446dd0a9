//! Binary array format and image export.
//!
//! Every array starts with a 16-byte header:
//!
//! ```text
//! 0..8    magic   b"LACTARR\0"
//! 8..10   version u16 LE (currently 1)
//! 10      kind    u8   0 raw, 1 image, 2 sinogram, 3 angle mask, 4 linear denoiser
//! 11      dtype   u8   0 float32, 1 float64
//! 12..16  ndim    u32 LE
//! ```
//!
//! followed by `ndim` little-endian u32 dimensions and the row-major payload
//! in `dtype`. Sinograms and masks carry their angle list (float64, one per
//! row) between the dimensions and the payload. Linear denoisers store
//! dimensions `[T, rows, cols]` and a payload of `T * rows * cols` filter taps
//! followed by `T` offsets, indexed by step.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::score_models::{LinearDenoiser, Patch};
use crate::tomo_ops::{AngleMask, Image, Sinogram};

pub const ARRAY_MAGIC: &[u8; 8] = b"LACTARR\0";
pub const ARRAY_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ArrayKind {
    Raw = 0,
    Image = 1,
    Sinogram = 2,
    Mask = 3,
    LinearDenoiser = 4,
}

impl ArrayKind {
    fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => ArrayKind::Raw,
            1 => ArrayKind::Image,
            2 => ArrayKind::Sinogram,
            3 => ArrayKind::Mask,
            4 => ArrayKind::LinearDenoiser,
            other => return Err(Error::Format(format!("unknown array kind {other}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[repr(u8)]
pub enum Dtype {
    #[default]
    F32 = 0,
    F64 = 1,
}

impl Dtype {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(Error::Format(format!("unknown dtype {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayHeader {
    pub kind: ArrayKind,
    pub dtype: Dtype,
    pub dims: Vec<u32>,
}

pub(crate) fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format(format!("truncated file while reading {what}"))
        } else {
            Error::Format(format!("read failed ({what}): {e}"))
        }
    })
}

pub(crate) fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r, what)?))
}

fn write_all(w: &mut impl Write, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes).map_err(|e| Error::io("<stream>", e))
}

fn write_header(w: &mut impl Write, header: &ArrayHeader) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 4 * header.dims.len());
    buf.extend_from_slice(ARRAY_MAGIC);
    buf.extend_from_slice(&ARRAY_VERSION.to_le_bytes());
    buf.push(header.kind as u8);
    buf.push(header.dtype as u8);
    buf.extend_from_slice(&(header.dims.len() as u32).to_le_bytes());
    for d in &header.dims {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    write_all(w, &buf)
}

pub fn read_header(r: &mut impl Read) -> Result<ArrayHeader> {
    let mut head = [0u8; 16];
    read_exact(r, &mut head, "array header")?;
    if &head[0..8] != ARRAY_MAGIC {
        return Err(Error::Format("bad array magic".into()));
    }
    let version = u16::from_le_bytes([head[8], head[9]]);
    if version != ARRAY_VERSION {
        return Err(Error::Format(format!(
            "array version {version} not supported (expected {ARRAY_VERSION})"
        )));
    }
    let kind = ArrayKind::from_u8(head[10])?;
    let dtype = Dtype::from_u8(head[11])?;
    let ndim = u32::from_le_bytes([head[12], head[13], head[14], head[15]]);
    if ndim > 8 {
        return Err(Error::Format(format!("implausible ndim {ndim}")));
    }
    let dims = (0..ndim)
        .map(|_| read_u32(r, "array dims"))
        .collect::<Result<Vec<_>>>()?;
    Ok(ArrayHeader { kind, dtype, dims })
}

fn write_values(w: &mut impl Write, values: &[f64], dtype: Dtype) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    match dtype {
        Dtype::F32 => values
            .iter()
            .for_each(|v| buf.extend_from_slice(&(*v as f32).to_le_bytes())),
        Dtype::F64 => values
            .iter()
            .for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
    }
    write_all(w, &buf)
}

fn read_values(r: &mut impl Read, n: usize, dtype: Dtype, what: &str) -> Result<Vec<f64>> {
    let width = match dtype {
        Dtype::F32 => 4,
        Dtype::F64 => 8,
    };
    let bytes = n
        .checked_mul(width)
        .filter(|&b| b <= 1 << 34)
        .ok_or_else(|| Error::Format(format!("implausible {what} size")))?;
    let mut buf = vec![0u8; bytes];
    read_exact(r, &mut buf, what)?;
    Ok(match dtype {
        Dtype::F32 => buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        Dtype::F64 => buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
    })
}

fn expect_kind(h: &ArrayHeader, kind: ArrayKind, ndim: usize) -> Result<()> {
    if h.kind != kind {
        return Err(Error::Format(format!(
            "expected {kind:?} array, found {:?}",
            h.kind
        )));
    }
    if h.dims.len() != ndim {
        return Err(Error::Format(format!(
            "{kind:?} array needs {ndim} dims, found {}",
            h.dims.len()
        )));
    }
    Ok(())
}

pub fn write_raw(w: &mut impl Write, dims: &[usize], values: &[f64], dtype: Dtype) -> Result<()> {
    let count: usize = dims.iter().product();
    if count != values.len() {
        return Err(Error::shape(count, values.len()));
    }
    write_header(
        w,
        &ArrayHeader {
            kind: ArrayKind::Raw,
            dtype,
            dims: dims.iter().map(|&d| d as u32).collect(),
        },
    )?;
    write_values(w, values, dtype)
}

pub fn read_raw(r: &mut impl Read) -> Result<(Vec<usize>, Vec<f64>)> {
    let h = read_header(r)?;
    if h.kind != ArrayKind::Raw {
        return Err(Error::Format(format!(
            "expected Raw array, found {:?}",
            h.kind
        )));
    }
    let dims: Vec<usize> = h.dims.iter().map(|&d| d as usize).collect();
    let values = read_values(r, dims.iter().product(), h.dtype, "raw payload")?;
    Ok((dims, values))
}

pub fn write_image(w: &mut impl Write, img: &Image, dtype: Dtype) -> Result<()> {
    write_header(
        w,
        &ArrayHeader {
            kind: ArrayKind::Image,
            dtype,
            dims: vec![img.height() as u32, img.width() as u32],
        },
    )?;
    write_values(w, img.data(), dtype)
}

pub fn read_image(r: &mut impl Read) -> Result<Image> {
    let h = read_header(r)?;
    expect_kind(&h, ArrayKind::Image, 2)?;
    let (hgt, wid) = (h.dims[0] as usize, h.dims[1] as usize);
    let data = read_values(r, hgt * wid, h.dtype, "image payload")?;
    Image::new(wid, hgt, data)
}

fn write_angles(w: &mut impl Write, angles: &[f64]) -> Result<()> {
    write_values(w, angles, Dtype::F64)
}

pub fn write_sinogram(w: &mut impl Write, s: &Sinogram, dtype: Dtype) -> Result<()> {
    write_header(
        w,
        &ArrayHeader {
            kind: ArrayKind::Sinogram,
            dtype,
            dims: vec![s.n_angles() as u32, s.n_detectors() as u32],
        },
    )?;
    write_angles(w, s.angles())?;
    write_values(w, s.data(), dtype)
}

pub fn read_sinogram(r: &mut impl Read) -> Result<Sinogram> {
    let h = read_header(r)?;
    expect_kind(&h, ArrayKind::Sinogram, 2)?;
    let (na, nd) = (h.dims[0] as usize, h.dims[1] as usize);
    let angles = read_values(r, na, Dtype::F64, "sinogram angles")?;
    let data = read_values(r, na * nd, h.dtype, "sinogram payload")?;
    Sinogram::new(angles, nd, data)
}

pub fn write_mask(w: &mut impl Write, m: &AngleMask) -> Result<()> {
    write_header(
        w,
        &ArrayHeader {
            kind: ArrayKind::Mask,
            dtype: Dtype::F32,
            dims: vec![m.full_angles().len() as u32],
        },
    )?;
    write_angles(w, m.full_angles())?;
    let bits: Vec<f64> = m
        .measured()
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();
    write_values(w, &bits, Dtype::F32)
}

pub fn read_mask(r: &mut impl Read) -> Result<AngleMask> {
    let h = read_header(r)?;
    expect_kind(&h, ArrayKind::Mask, 1)?;
    let n = h.dims[0] as usize;
    let angles = read_values(r, n, Dtype::F64, "mask angles")?;
    let bits = read_values(r, n, h.dtype, "mask payload")?;
    AngleMask::new(angles, bits.iter().map(|&b| b != 0.0).collect())
}

pub fn write_linear_denoiser(w: &mut impl Write, d: &LinearDenoiser) -> Result<()> {
    let p = d.patch();
    write_header(
        w,
        &ArrayHeader {
            kind: ArrayKind::LinearDenoiser,
            dtype: Dtype::F64,
            dims: vec![d.steps() as u32, p.rows() as u32, p.cols() as u32],
        },
    )?;
    let mut values = Vec::with_capacity(d.steps() * (p.len() + 1));
    for t in 1..=d.steps() {
        values.extend_from_slice(d.weights(t));
    }
    values.extend((1..=d.steps()).map(|t| d.bias(t)));
    write_values(w, &values, Dtype::F64)
}

pub fn read_linear_denoiser(r: &mut impl Read) -> Result<LinearDenoiser> {
    let h = read_header(r)?;
    expect_kind(&h, ArrayKind::LinearDenoiser, 3)?;
    let (steps, rows, cols) = (h.dims[0] as usize, h.dims[1] as usize, h.dims[2] as usize);
    if rows % 2 == 0 || cols % 2 == 0 {
        return Err(Error::Format("patch dimensions must be odd".into()));
    }
    let patch = Patch {
        half_angle: rows / 2,
        half_detector: cols / 2,
    };
    let k = patch.len();
    let values = read_values(r, steps * (k + 1), h.dtype, "denoiser payload")?;
    let (w, b) = values.split_at(steps * k);
    LinearDenoiser::from_parts(
        patch,
        w.chunks(k).map(<[f64]>::to_vec).collect(),
        b.to_vec(),
    )
    .map_err(|e| Error::Format(e.to_string()))
}

/// Per-step clean estimates collected during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub steps: Vec<usize>,
    pub snapshots: Vec<Sinogram>,
}

/// Trace file: a raw `[n]` array of step indices, then a raw `[n, angles, detectors]` float32 stack.
pub fn write_trace(w: &mut impl Write, trace: &Trace) -> Result<()> {
    let steps: Vec<f64> = trace.steps.iter().map(|&t| t as f64).collect();
    write_raw(w, &[steps.len()], &steps, Dtype::F64)?;
    let (na, nd) = trace
        .snapshots
        .first()
        .map_or((0, 0), |s| (s.n_angles(), s.n_detectors()));
    let stack: Vec<f64> = trace
        .snapshots
        .iter()
        .flat_map(|s| s.data().iter().copied())
        .collect();
    write_raw(w, &[trace.snapshots.len(), na, nd], &stack, Dtype::F32)
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_sinogram(path: &Path, s: &Sinogram, dtype: Dtype) -> Result<()> {
    let mut w = create(path)?;
    write_sinogram(&mut w, s, dtype)?;
    finish(w, path)
}

pub fn load_sinogram(path: &Path) -> Result<Sinogram> {
    read_sinogram(&mut open(path)?)
}

pub fn save_image(path: &Path, img: &Image, dtype: Dtype) -> Result<()> {
    let mut w = create(path)?;
    write_image(&mut w, img, dtype)?;
    finish(w, path)
}

pub fn load_image(path: &Path) -> Result<Image> {
    read_image(&mut open(path)?)
}

pub fn save_linear_denoiser(path: &Path, d: &LinearDenoiser) -> Result<()> {
    let mut w = create(path)?;
    write_linear_denoiser(&mut w, d)?;
    finish(w, path)
}

pub fn load_linear_denoiser(path: &Path) -> Result<LinearDenoiser> {
    read_linear_denoiser(&mut open(path)?)
}

pub fn save_trace(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = create(path)?;
    write_trace(&mut w, trace)?;
    finish(w, path)
}

/// Min-max scales `values` to 0..=255 (constant input maps to 0).
pub fn to_gray8(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// Binary (P5) PGM, min-max scaled.
pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::shape(width * height, values.len()));
    }
    let mut w = create(path)?;
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend(to_gray8(values));
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

/// 8-bit grayscale PNG, min-max scaled.
pub fn write_png(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::shape(width * height, values.len()));
    }
    let img = image::GrayImage::from_raw(width as u32, height as u32, to_gray8(values))
        .ok_or_else(|| Error::invalid("png buffer size"))?;
    img.save(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
}
