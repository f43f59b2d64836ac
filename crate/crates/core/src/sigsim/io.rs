//! Binary dataset container. All scalars little-endian:
//!
//! ```text
//! "SSBD" | version u16 | rolloff f64 | samples_per_symbol u32
//! | filter_span_symbols u32 | snr_db f64 | snr_reference u8
//! | window_len u32 | n_train u64 | n_val u64 | n_test u64 | seed u64
//! then for train, val, test: count u64, then count × (label u8, window_len × (re f32, im f32))
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use num_complex::Complex32;

use super::{DatasetSpec, Label, LabeledDataset, SensingWindow, SignalParams, SigsimError, SnrReference, Split};

pub const MAGIC: [u8; 4] = *b"SSBD";
pub const FORMAT_VERSION: u16 = 1;

pub fn write_dataset<W: Write>(ds: &LabeledDataset, mut w: W) -> Result<(), SigsimError> {
    let s = &ds.spec;
    let p = &s.params;
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&p.rolloff.to_le_bytes())?;
    w.write_all(&(p.samples_per_symbol as u32).to_le_bytes())?;
    w.write_all(&(p.filter_span_symbols as u32).to_le_bytes())?;
    w.write_all(&p.snr_db.to_le_bytes())?;
    w.write_all(&[p.snr_reference.code()])?;
    w.write_all(&(p.window_len as u32).to_le_bytes())?;
    for v in [s.n_train, s.n_val, s.n_test, s.seed] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(1 + 8 * p.window_len);
    for split in Split::ALL {
        let windows = ds.split(split);
        w.write_all(&(windows.len() as u64).to_le_bytes())?;
        for win in windows {
            buf.clear();
            buf.push(win.label.as_u8());
            for z in &win.samples {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn fill<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<(), SigsimError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => SigsimError::Truncated(what),
        _ => SigsimError::Io(e),
    })
}

fn take<const N: usize, R: Read>(r: &mut R, what: &'static str) -> Result<[u8; N], SigsimError> {
    let mut b = [0u8; N];
    fill(r, &mut b, what)?;
    Ok(b)
}

fn read_spec<R: Read>(r: &mut R) -> Result<DatasetSpec, SigsimError> {
    let magic = take::<4, _>(r, "magic")?;
    if magic != MAGIC {
        return Err(SigsimError::BadMagic(magic));
    }
    let version = u16::from_le_bytes(take(r, "version")?);
    if version != FORMAT_VERSION {
        return Err(SigsimError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let rolloff = f64::from_le_bytes(take(r, "header")?);
    let samples_per_symbol = u32::from_le_bytes(take(r, "header")?) as usize;
    let filter_span_symbols = u32::from_le_bytes(take(r, "header")?) as usize;
    let snr_db = f64::from_le_bytes(take(r, "header")?);
    let code = take::<1, _>(r, "header")?[0];
    let snr_reference = SnrReference::from_code(code)
        .ok_or_else(|| SigsimError::CorruptHeader(format!("unknown SNR reference code {code}")))?;
    let window_len = u32::from_le_bytes(take(r, "header")?) as usize;
    let mut counts = [0u64; 4];
    for c in &mut counts {
        *c = u64::from_le_bytes(take(r, "header")?);
    }
    let spec = DatasetSpec {
        params: SignalParams { rolloff, samples_per_symbol, filter_span_symbols, snr_db, snr_reference, window_len },
        n_train: counts[0],
        n_val: counts[1],
        n_test: counts[2],
        seed: counts[3],
    };
    spec.validate().map_err(|e| SigsimError::CorruptHeader(e.to_string()))?;
    Ok(spec)
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<LabeledDataset, SigsimError> {
    let spec = read_spec(&mut r)?;
    let wl = spec.params.window_len;
    let mut splits: Vec<Vec<SensingWindow>> = Vec::with_capacity(3);
    let mut buf = vec![0u8; 1 + 8 * wl];
    for split in Split::ALL {
        let count = u64::from_le_bytes(take(&mut r, "split count")?);
        if count != spec.count(split) {
            return Err(SigsimError::CorruptHeader(format!(
                "{split:?} split holds {count} examples but the header declares {}",
                spec.count(split)
            )));
        }
        let mut windows = Vec::with_capacity(count.min(1 << 20) as usize);
        for _ in 0..count {
            fill(&mut r, &mut buf, "example payload")?;
            let label = Label::from_u8(buf[0]).ok_or(SigsimError::BadLabel(buf[0]))?;
            let samples = buf[1..]
                .chunks_exact(8)
                .map(|c| {
                    Complex32::new(
                        f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                        f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
                    )
                })
                .collect();
            windows.push(SensingWindow { samples, label });
        }
        splits.push(windows);
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(SigsimError::CorruptHeader("trailing bytes after the test split".into()));
    }
    let test = splits.pop().unwrap_or_default();
    let val = splits.pop().unwrap_or_default();
    let train = splits.pop().unwrap_or_default();
    Ok(LabeledDataset { spec, train, val, test })
}

pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<(), SigsimError> {
    write_dataset(ds, BufWriter::new(File::create(path)?))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset, SigsimError> {
    read_dataset(BufReader::new(File::open(path)?))
}
