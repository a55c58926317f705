//! Binary sample dumps.
//!
//! Layout, all little-endian: 4-byte magic `SQZD`, `u32` format version,
//! `u64` sample count, then `count` IEEE-754 `f64` samples.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SQZD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

pub fn write_samples<W: Write>(mut w: W, samples: &[f64]) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    for s in samples {
        w.write_all(&s.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_samples<R: Read>(mut r: R, origin: &Path) -> Result<Vec<f64>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::parse(origin, "truncated header"))?;
    if header[..4] != MAGIC {
        return Err(Error::parse(origin, "bad magic, not a sample dump"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::parse(origin, format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| Error::io(origin, e))?;
    if body.len() != count * 8 {
        return Err(Error::parse(
            origin,
            format!("header announces {count} samples, body holds {} bytes", body.len()),
        ));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn write_file(path: &Path, samples: &[f64]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_samples(std::io::BufWriter::new(f), samples).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<f64>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_samples(std::io::BufReader::new(f), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_samples(&mut buf, &[1.5]).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 8);
        assert_eq!(&buf[..4], b"SQZD");
        assert_eq!(&buf[4..8], &[1, 0, 0, 0]);
        assert_eq!(&buf[8..16], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&buf[16..], &1.5f64.to_le_bytes());
    }

    #[test]
    fn rejects_corrupt_dumps() {
        let p = Path::new("d.bin");
        assert!(read_samples(&b"SQZ"[..], p).is_err());
        let mut buf = Vec::new();
        write_samples(&mut buf, &[1.0, 2.0]).unwrap();
        assert!(read_samples(&buf[..buf.len() - 1], p).is_err());
        buf[0] = b'X';
        assert!(read_samples(&buf[..], p).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(samples in proptest::collection::vec(any::<f64>(), 0..200)) {
            let mut buf = Vec::new();
            write_samples(&mut buf, &samples).unwrap();
            let back = read_samples(&buf[..], Path::new("d.bin")).unwrap();
            prop_assert_eq!(back.len(), samples.len());
            for (a, b) in back.iter().zip(&samples) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
