//! Dataset container.
//!
//! ```text
//! b"LACTDSET"  u32 version  u32 record count
//! per record:  b"REC\0"  u64 body length  body
//! body:        u64 seed  f64 sigma_y  f64 snr_db  u8 has_phantom
//!              x0_full (sinogram, f64)  y (sinogram, f64)  mask
//!              [phantom (image, f64)]
//! ```
//!
//! A TOML manifest summarising the records is written next to the container
//! (same path with `.toml` appended).

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{
    create, finish, open, read_exact, read_f64, read_image, read_mask, read_sinogram, read_u32,
    read_u64, write_image, write_mask, write_sinogram, Dtype,
};
use crate::tomo_ops::{AngleMask, Image, Sinogram};

pub const DATASET_MAGIC: &[u8; 8] = b"LACTDSET";
pub const DATASET_VERSION: u32 = 1;
const RECORD_TAG: &[u8; 4] = b"REC\0";

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub seed: u64,
    pub sigma_y: f64,
    pub snr_db: f64,
    pub x0_full: Sinogram,
    pub y: Sinogram,
    pub mask: AngleMask,
    pub phantom: Option<Image>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    /// Hexadecimal; TOML integers cannot hold every u64.
    pub seed: String,
    pub sigma_y: f64,
    pub snr_db: f64,
    pub n_angles: usize,
    pub n_detectors: usize,
    pub measured: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub count: usize,
    pub records: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn from_records(records: &[DatasetRecord]) -> Self {
        Self {
            version: DATASET_VERSION,
            count: records.len(),
            records: records
                .iter()
                .enumerate()
                .map(|(index, r)| ManifestEntry {
                    index,
                    seed: format!("{:#018x}", r.seed),
                    sigma_y: r.sigma_y,
                    snr_db: r.snr_db,
                    n_angles: r.x0_full.n_angles(),
                    n_detectors: r.x0_full.n_detectors(),
                    measured: r.mask.measured_count(),
                })
                .collect(),
        }
    }
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

fn encode_record(rec: &DatasetRecord) -> Result<Vec<u8>> {
    rec.x0_full.ensure_same_shape(&rec.y)?;
    if rec.mask.full_angles().len() != rec.y.n_angles() {
        return Err(Error::shape(
            format!("mask with {} rows", rec.y.n_angles()),
            rec.mask.full_angles().len(),
        ));
    }
    let mut body = Vec::new();
    body.extend_from_slice(&rec.seed.to_le_bytes());
    body.extend_from_slice(&rec.sigma_y.to_le_bytes());
    body.extend_from_slice(&rec.snr_db.to_le_bytes());
    body.push(rec.phantom.is_some() as u8);
    write_sinogram(&mut body, &rec.x0_full, Dtype::F64)?;
    write_sinogram(&mut body, &rec.y, Dtype::F64)?;
    write_mask(&mut body, &rec.mask)?;
    if let Some(img) = &rec.phantom {
        write_image(&mut body, img, Dtype::F64)?;
    }
    Ok(body)
}

fn decode_record(body: &[u8]) -> Result<DatasetRecord> {
    let mut r = body;
    let seed = read_u64(&mut r, "record seed")?;
    let sigma_y = read_f64(&mut r, "record sigma_y")?;
    let snr_db = read_f64(&mut r, "record snr")?;
    let mut flag = [0u8; 1];
    read_exact(&mut r, &mut flag, "record flags")?;
    let x0_full = read_sinogram(&mut r)?;
    let y = read_sinogram(&mut r)?;
    let mask = read_mask(&mut r)?;
    let phantom = match flag[0] {
        0 => None,
        1 => Some(read_image(&mut r)?),
        other => return Err(Error::Format(format!("bad record flag {other}"))),
    };
    if !r.is_empty() {
        return Err(Error::Format(format!(
            "{} trailing bytes in record",
            r.len()
        )));
    }
    x0_full.ensure_same_shape(&y)?;
    Ok(DatasetRecord {
        seed,
        sigma_y,
        snr_db,
        x0_full,
        y,
        mask,
        phantom,
    })
}

pub fn write_dataset_to(w: &mut impl Write, records: &[DatasetRecord]) -> Result<()> {
    let count = u32::try_from(records.len()).map_err(|_| Error::invalid("too many records"))?;
    let mut head = Vec::with_capacity(16);
    head.extend_from_slice(DATASET_MAGIC);
    head.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    head.extend_from_slice(&count.to_le_bytes());
    let wr = |w: &mut dyn Write, b: &[u8]| w.write_all(b).map_err(|e| Error::io("<stream>", e));
    wr(w, &head)?;
    for rec in records {
        let body = encode_record(rec)?;
        wr(w, RECORD_TAG)?;
        wr(w, &(body.len() as u64).to_le_bytes())?;
        wr(w, &body)?;
    }
    Ok(())
}

pub fn read_dataset_from(r: &mut impl Read) -> Result<Vec<DatasetRecord>> {
    let mut magic = [0u8; 8];
    read_exact(r, &mut magic, "dataset magic")?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Format("bad dataset magic".into()));
    }
    let version = read_u32(r, "dataset version")?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!(
            "dataset version {version} not supported (expected {DATASET_VERSION})"
        )));
    }
    let count = read_u32(r, "record count")? as usize;
    let mut records = Vec::with_capacity(count.min(4096));
    for i in 0..count {
        let mut tag = [0u8; 4];
        read_exact(r, &mut tag, &format!("record {i} tag"))?;
        if &tag != RECORD_TAG {
            return Err(Error::Format(format!("bad tag on record {i}")));
        }
        let len = read_u64(r, "record length")?;
        if len > 1 << 34 {
            return Err(Error::Format(format!("implausible record length {len}")));
        }
        let mut body = vec![0u8; len as usize];
        read_exact(r, &mut body, &format!("record {i}"))?;
        records.push(decode_record(&body)?);
    }
    let mut extra = [0u8; 1];
    match r.read(&mut extra) {
        Ok(0) => Ok(records),
        Ok(_) => Err(Error::Format("trailing data after last record".into())),
        Err(e) => Err(Error::Format(format!("read failed: {e}"))),
    }
}

/// Writes the container and its manifest.
pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    let mut w = create(path)?;
    write_dataset_to(&mut w, records)?;
    finish(w, path)?;
    let manifest = toml::to_string(&Manifest::from_records(records))
        .map_err(|e| Error::Format(format!("manifest encoding: {e}")))?;
    let mpath = manifest_path(path);
    std::fs::write(&mpath, manifest).map_err(|e| Error::io(mpath, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    read_dataset_from(&mut open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantoms_data::{
        generate_phantom, simulate_acquisition, AcquisitionProtocol, Phantom, PhantomKind,
    };

    fn record(seed: u64, with_phantom: bool) -> DatasetRecord {
        let img = generate_phantom(
            &Phantom {
                kind: PhantomKind::BlobField,
                size: 16,
            },
            seed,
        )
        .unwrap();
        let acq = simulate_acquisition(&img, &AcquisitionProtocol::default(), seed).unwrap();
        DatasetRecord {
            seed,
            sigma_y: acq.sigma_y,
            snr_db: acq.snr_db,
            x0_full: acq.x0_full,
            y: acq.y,
            mask: acq.mask,
            phantom: with_phantom.then_some(img),
        }
    }

    fn bytes(records: &[DatasetRecord]) -> Vec<u8> {
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, records).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_bitwise() {
        let recs = vec![record(1, true), record(2, false)];
        let buf = bytes(&recs);
        assert_eq!(read_dataset_from(&mut buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn empty_dataset_is_valid() {
        let buf = bytes(&[]);
        assert_eq!(buf.len(), 16);
        assert!(read_dataset_from(&mut buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn corrupted_magic() {
        let mut buf = bytes(&[record(3, false)]);
        buf[0] = b'X';
        let err = read_dataset_from(&mut buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn version_mismatch() {
        let mut buf = bytes(&[]);
        buf[8] = 9;
        let err = read_dataset_from(&mut buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn truncation_is_detected() {
        let buf = bytes(&[record(4, true)]);
        for cut in [10, 20, buf.len() / 2, buf.len() - 1] {
            let err = read_dataset_from(&mut &buf[..cut]).unwrap_err();
            assert!(err.to_string().contains("truncated"), "cut {cut}: {err}");
        }
    }

    #[test]
    fn manifest_is_written_alongside() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.bin");
        let recs = vec![record(5, false)];
        write_dataset(&path, &recs).unwrap();
        let m: Manifest =
            toml::from_str(&std::fs::read_to_string(manifest_path(&path)).unwrap()).unwrap();
        assert_eq!(m.count, 1);
        assert_eq!(m.records[0].measured, 61);
        assert_eq!(read_dataset(&path).unwrap(), recs);
    }
}
