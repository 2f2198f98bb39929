//! ADTN: a minimal little-endian tensor container.
//!
//! Layout: magic `ADTN`, version `u8` (= 1), dtype `u8`, ndim `u8`,
//! reserved `u8` (= 0), `ndim` × `u64` dims, then the row-major payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"ADTN";
pub const VERSION: u8 = 1;
const FIXED_HEADER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DType {
    F32,
    F64,
    U8,
    U16,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
            DType::U8 => 2,
            DType::U16 => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(DType::F32),
            1 => Ok(DType::F64),
            2 => Ok(DType::U8),
            3 => Ok(DType::U16),
            other => Err(Error::UnsupportedDtype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
            DType::U8 => 1,
            DType::U16 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
    U16(Vec<u16>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::U8(v) => v.len(),
            TensorData::U16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
            TensorData::U8(_) => DType::U8,
            TensorData::U16(_) => DType::U16,
        }
    }
}

/// Dense row-major n-dimensional array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: TensorData,
}

fn element_count(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidShape("tensor must have at least one dim".into()));
    }
    dims.iter().try_fold(1usize, |acc, &d| {
        if d == 0 {
            return Err(Error::InvalidShape(format!("zero-length dim in {dims:?}")));
        }
        acc.checked_mul(d).ok_or(Error::DimOverflow)
    })
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        if dims.len() > u8::MAX as usize {
            return Err(Error::InvalidShape(format!("{} dims exceed 255", dims.len())));
        }
        let count = element_count(&dims)?;
        if count != data.len() {
            return Err(Error::InvalidShape(format!(
                "dims {dims:?} need {count} elements, data has {}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn from_f32(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        Self::new(dims, TensorData::F32(data))
    }

    pub fn from_u8(dims: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        Self::new(dims, TensorData::U8(data))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            TensorData::F32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.data {
            TensorData::U8(v) => Some(v),
            _ => None,
        }
    }

    /// Serializes to the ADTN byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = self.data.len() * self.dtype().size();
        let mut out = Vec::with_capacity(FIXED_HEADER + 8 * self.dims.len() + payload);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.dtype().code());
        out.push(self.dims.len() as u8);
        out.push(0);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.data {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::U8(v) => out.extend_from_slice(v),
            TensorData::U16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Truncated {
                expected: FIXED_HEADER as u64,
                found: bytes.len() as u64,
            });
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic { found: magic });
        }
        if bytes.len() < FIXED_HEADER {
            return Err(Error::Truncated {
                expected: FIXED_HEADER as u64,
                found: bytes.len() as u64,
            });
        }
        if bytes[4] != VERSION {
            return Err(Error::UnsupportedVersion(bytes[4]));
        }
        let dtype = DType::from_code(bytes[5])?;
        let ndim = bytes[6] as usize;
        let header = FIXED_HEADER + 8 * ndim;
        if bytes.len() < header {
            return Err(Error::Truncated {
                expected: header as u64,
                found: bytes.len() as u64,
            });
        }
        let mut dims = Vec::with_capacity(ndim);
        for i in 0..ndim {
            let at = FIXED_HEADER + 8 * i;
            let d = u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
            dims.push(usize::try_from(d).map_err(|_| Error::DimOverflow)?);
        }
        let count = element_count(&dims)?;
        let payload_len = count.checked_mul(dtype.size()).ok_or(Error::DimOverflow)?;
        let expected = (header as u64)
            .checked_add(payload_len as u64)
            .ok_or(Error::DimOverflow)?;
        let found = bytes.len() as u64;
        if found < expected {
            return Err(Error::Truncated { expected, found });
        }
        if found > expected {
            return Err(Error::InvalidShape(format!(
                "{} trailing bytes after payload",
                found - expected
            )));
        }
        let payload = &bytes[header..];
        let data = match dtype {
            DType::F32 => TensorData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::F64 => TensorData::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::U8 => TensorData::U8(payload.to_vec()),
            DType::U16 => TensorData::U16(
                payload
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
        };
        Ok(Tensor { dims, data })
    }
}

pub fn write_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, t.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    Tensor::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_header_layout() {
        let t = Tensor::from_f32(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = t.to_bytes();
        let mut expected = Vec::new();
        expected.extend_from_slice(b"ADTN");
        expected.extend_from_slice(&[1, 0, 2, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0, 0, 0, 0, 0]);
        // 1.0f32 = 0x3f800000, 2.0 = 0x40000000, 3.0 = 0x40400000, 4.0 = 0x40800000
        expected.extend_from_slice(&[0, 0, 0x80, 0x3f]);
        expected.extend_from_slice(&[0, 0, 0x00, 0x40]);
        expected.extend_from_slice(&[0, 0, 0x40, 0x40]);
        expected.extend_from_slice(&[0, 0, 0x80, 0x40]);
        assert_eq!(bytes.len(), 8 + 16 + 16);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn file_roundtrip_28x28x33() {
        let data: Vec<f32> = (0..28 * 28 * 33).map(|i| (i as f32).sin() * 1e3).collect();
        let t = Tensor::from_f32(vec![28, 28, 33], data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.adtn");
        write_tensor(&t, &path).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back.to_bytes(), t.to_bytes());
        assert_eq!(back, t);
    }

    #[test]
    fn distinct_errors() {
        let good = Tensor::from_u8(vec![3], vec![1, 2, 3]).unwrap().to_bytes();

        let mut bad_magic = good.clone();
        bad_magic[..4].copy_from_slice(b"XXXX");
        assert!(matches!(Tensor::from_bytes(&bad_magic), Err(Error::BadMagic { .. })));

        let mut bad_dtype = good.clone();
        bad_dtype[5] = 9;
        assert!(matches!(Tensor::from_bytes(&bad_dtype), Err(Error::UnsupportedDtype(9))));

        let truncated = &good[..good.len() - 1];
        assert!(matches!(Tensor::from_bytes(truncated), Err(Error::Truncated { .. })));

        let mut overflow = Vec::new();
        overflow.extend_from_slice(b"ADTN");
        overflow.extend_from_slice(&[1, 0, 2, 0]);
        overflow.extend_from_slice(&u64::MAX.to_le_bytes());
        overflow.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(Tensor::from_bytes(&overflow), Err(Error::DimOverflow)));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Tensor::from_f32(vec![], vec![]).is_err());
        assert!(Tensor::from_f32(vec![2, 0], vec![]).is_err());
        assert!(Tensor::from_f32(vec![2, 2], vec![1.0]).is_err());
    }

    fn arb_tensor() -> impl Strategy<Value = Tensor> {
        prop::collection::vec(1usize..5, 1..4).prop_flat_map(|dims| {
            let n: usize = dims.iter().product();
            let d = dims.clone();
            prop_oneof![
                prop::collection::vec(any::<u32>(), n)
                    .prop_map(|v| TensorData::F32(v.into_iter().map(f32::from_bits).collect())),
                prop::collection::vec(any::<u64>(), n)
                    .prop_map(|v| TensorData::F64(v.into_iter().map(f64::from_bits).collect())),
                prop::collection::vec(any::<u8>(), n).prop_map(TensorData::U8),
                prop::collection::vec(any::<u16>(), n).prop_map(TensorData::U16),
            ]
            .prop_map(move |data| Tensor::new(d.clone(), data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(t in arb_tensor()) {
            let bytes = t.to_bytes();
            let back = Tensor::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }
}
