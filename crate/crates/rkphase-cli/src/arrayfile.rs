//! Binary container for complex arrays.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic    4 bytes  "RKPH"
//! version  u16      currently 1
//! dtype    u8       0x01 = c64 (interleaved f64 re, im)
//! rank     u8       1 or 2
//! dims     rank x u64
//! payload  16 * prod(dims) bytes, row-major (re, im) f64 pairs
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

use rkphase::{CMatrix, CVector, RVector};

pub const MAGIC: [u8; 4] = *b"RKPH";
pub const VERSION: u16 = 1;
pub const DTYPE_C64: u8 = 0x01;

#[derive(Debug, Error)]
pub enum ArrayFileError {
    #[error("bad magic bytes (expected \"RKPH\")")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported dtype tag {0:#04x}")]
    UnsupportedDtype(u8),
    #[error("unsupported rank {0} (expected 1 or 2)")]
    UnsupportedRank(u8),
    #[error("truncated payload: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("trailing bytes after payload")]
    TrailingBytes,
    #[error("expected a real-valued array but found nonzero imaginary parts")]
    NotReal,
    #[error("expected rank {expected}, found rank {found}")]
    WrongRank { expected: u8, found: u8 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type ArrayFileResult<T> = std::result::Result<T, ArrayFileError>;

/// A decoded array of either rank.
#[derive(Debug, Clone, PartialEq)]
pub enum ComplexArray {
    Vector(CVector),
    Matrix(CMatrix),
}

fn write_header<W: Write>(w: &mut W, dims: &[u64]) -> ArrayFileResult<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[DTYPE_C64, dims.len() as u8])?;
    for &d in dims {
        w.write_all(&d.to_le_bytes())?;
    }
    Ok(())
}

fn write_payload<'a, W: Write, I: Iterator<Item = &'a Complex64>>(
    w: &mut W,
    entries: I,
) -> ArrayFileResult<()> {
    for c in entries {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_vector(path: &Path, v: &CVector) -> ArrayFileResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, &[v.len() as u64])?;
    write_payload(&mut w, v.iter())?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> ArrayFileResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, &[m.nrows() as u64, m.ncols() as u64])?;
    for row in m.rows() {
        for c in row.iter() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Store a nonnegative real vector as c64 with zero imaginary parts.
pub fn write_real_vector(path: &Path, v: &RVector) -> ArrayFileResult<()> {
    let cv: CVector = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    write_vector(path, &cv)
}

pub fn read(path: &Path) -> ArrayFileResult<ComplexArray> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, ArrayFileError::BadMagic)?;
    if magic != MAGIC {
        return Err(ArrayFileError::BadMagic);
    }

    let mut two = [0u8; 2];
    read_exact_or(
        &mut r,
        &mut two,
        ArrayFileError::TruncatedPayload {
            expected: 2,
            got: 0,
        },
    )?;
    let version = u16::from_le_bytes(two);
    if version != VERSION {
        return Err(ArrayFileError::UnsupportedVersion(version));
    }

    let mut tags = [0u8; 2];
    read_exact_or(
        &mut r,
        &mut tags,
        ArrayFileError::TruncatedPayload {
            expected: 2,
            got: 0,
        },
    )?;
    let (dtype, rank) = (tags[0], tags[1]);
    if dtype != DTYPE_C64 {
        return Err(ArrayFileError::UnsupportedDtype(dtype));
    }
    if rank != 1 && rank != 2 {
        return Err(ArrayFileError::UnsupportedRank(rank));
    }

    let mut dims = Vec::with_capacity(rank as usize);
    for _ in 0..rank {
        let mut eight = [0u8; 8];
        read_exact_or(
            &mut r,
            &mut eight,
            ArrayFileError::TruncatedPayload {
                expected: 8,
                got: 0,
            },
        )?;
        dims.push(u64::from_le_bytes(eight) as usize);
    }

    let count: usize = dims.iter().product();
    let expected = 16 * count;
    let mut payload = vec![0u8; expected];
    let got = read_up_to(&mut r, &mut payload)?;
    if got < expected {
        return Err(ArrayFileError::TruncatedPayload { expected, got });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(ArrayFileError::TrailingBytes);
    }

    let mut entries = Vec::with_capacity(count);
    for chunk in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        entries.push(Complex64::new(re, im));
    }

    match rank {
        1 => Ok(ComplexArray::Vector(Array1::from_vec(entries))),
        2 => {
            let m = Array2::from_shape_vec((dims[0], dims[1]), entries)
                .expect("dims consistent with payload length");
            Ok(ComplexArray::Matrix(m))
        }
        _ => unreachable!(),
    }
}

pub fn read_vector(path: &Path) -> ArrayFileResult<CVector> {
    match read(path)? {
        ComplexArray::Vector(v) => Ok(v),
        ComplexArray::Matrix(_) => Err(ArrayFileError::WrongRank {
            expected: 1,
            found: 2,
        }),
    }
}

pub fn read_matrix(path: &Path) -> ArrayFileResult<CMatrix> {
    match read(path)? {
        ComplexArray::Matrix(m) => Ok(m),
        ComplexArray::Vector(_) => Err(ArrayFileError::WrongRank {
            expected: 2,
            found: 1,
        }),
    }
}

/// Read a vector stored as c64 with zero imaginary parts.
pub fn read_real_vector(path: &Path) -> ArrayFileResult<RVector> {
    let v = read_vector(path)?;
    if v.iter().any(|c| c.im != 0.0) {
        return Err(ArrayFileError::NotReal);
    }
    Ok(v.mapv(|c| c.re))
}

fn read_exact_or<R: Read>(
    r: &mut R,
    buf: &mut [u8],
    on_eof: ArrayFileError,
) -> ArrayFileResult<()> {
    let got = read_up_to(r, buf)?;
    if got < buf.len() {
        return Err(on_eof);
    }
    Ok(())
}

fn read_up_to<R: Read>(r: &mut R, buf: &mut [u8]) -> ArrayFileResult<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rkphase::Rng;
    use std::fs;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("rkphase-arrayfile-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> CMatrix {
        CMatrix::from_shape_fn((rows, cols), |_| rng.complex_standard_normal())
    }

    #[test]
    fn matrix_round_trip_bitwise() {
        let mut rng = Rng::seed_from_u64(1);
        let m = random_matrix(7, 5, &mut rng);
        let p = temp_path("round_trip.rkph");
        write_matrix(&p, &m).unwrap();
        let back = read_matrix(&p).unwrap();
        assert_eq!(m.dim(), back.dim());
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn corrupt_magic_detected() {
        let mut rng = Rng::seed_from_u64(2);
        let m = random_matrix(2, 2, &mut rng);
        let p = temp_path("bad_magic.rkph");
        write_matrix(&p, &m).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] = b'X';
        fs::write(&p, bytes).unwrap();
        assert!(matches!(read(&p), Err(ArrayFileError::BadMagic)));
    }

    #[test]
    fn unsupported_dtype_detected() {
        let mut rng = Rng::seed_from_u64(3);
        let m = random_matrix(2, 2, &mut rng);
        let p = temp_path("bad_dtype.rkph");
        write_matrix(&p, &m).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[6] = 0x7f; // dtype tag offset: magic(4) + version(2)
        fs::write(&p, bytes).unwrap();
        assert!(matches!(
            read(&p),
            Err(ArrayFileError::UnsupportedDtype(0x7f))
        ));
    }

    #[test]
    fn truncated_payload_detected() {
        let mut rng = Rng::seed_from_u64(4);
        let m = random_matrix(2, 3, &mut rng);
        let p = temp_path("truncated.rkph");
        write_matrix(&p, &m).unwrap();
        let bytes = fs::read(&p).unwrap();
        // Keep 5 of 6 entries.
        fs::write(&p, &bytes[..bytes.len() - 16]).unwrap();
        match read(&p) {
            Err(ArrayFileError::TruncatedPayload { expected, got }) => {
                assert_eq!(expected, 16 * 6);
                assert_eq!(got, 16 * 5);
            }
            other => panic!("expected TruncatedPayload, got {other:?}"),
        }
    }

    #[test]
    fn version_and_trailing_detected() {
        let mut rng = Rng::seed_from_u64(5);
        let m = random_matrix(2, 2, &mut rng);
        let p = temp_path("version.rkph");
        write_matrix(&p, &m).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[4] = 0xff;
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            read(&p),
            Err(ArrayFileError::UnsupportedVersion(_))
        ));

        bytes[4] = VERSION.to_le_bytes()[0];
        bytes.push(0);
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(read(&p), Err(ArrayFileError::TrailingBytes)));
    }

    #[test]
    fn real_vector_round_trip_and_check() {
        let v = RVector::from_vec(vec![0.0, 1.5, 2.25]);
        let p = temp_path("real.rkph");
        write_real_vector(&p, &v).unwrap();
        assert_eq!(read_real_vector(&p).unwrap(), v);

        let mut rng = Rng::seed_from_u64(6);
        let c: CVector = (0..3).map(|_| rng.complex_standard_normal()).collect();
        write_vector(&p, &c).unwrap();
        assert!(matches!(read_real_vector(&p), Err(ArrayFileError::NotReal)));
    }
}
