use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::descriptors::{Method, PatchFeatureGrid};
use crate::error::{Error, Result};
use crate::io::{read_tensor, write_tensor, Tensor};

/// M×D matrix of training patch descriptors. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    vectors: Vec<f32>,
    dim: usize,
    method: Method,
}

impl MemoryBank {
    pub fn new(vectors: Vec<f32>, dim: usize, method: Method) -> Result<Self> {
        if dim == 0 || vectors.is_empty() || vectors.len() % dim != 0 {
            return Err(Error::InvalidShape(format!(
                "bank needs M ≥ 1 rows of dim {dim}, got {} values",
                vectors.len()
            )));
        }
        Ok(Self {
            vectors,
            dim,
            method,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn row(&self, m: usize) -> &[f32] {
        &self.vectors[m * self.dim..(m + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.vectors.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.vectors
    }

    /// New bank holding the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let mut vectors = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            vectors.extend_from_slice(self.row(r));
        }
        Self::new(vectors, self.dim, self.method)
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_f32(vec![self.len(), self.dim], self.vectors.clone()).expect("consistent shape")
    }

    pub fn from_tensor(t: &Tensor, method: Method) -> Result<Self> {
        let dims = t.dims();
        if dims.len() != 2 {
            return Err(Error::InvalidShape(format!("bank tensor must be M×D, got {dims:?}")));
        }
        let data = t
            .as_f32()
            .ok_or_else(|| Error::InvalidShape("bank tensor must be f32".into()))?;
        Self::new(data.to_vec(), dims[1], method)
    }

    /// Writes `<stem>.adtn` and the `<stem>.meta` key=value sidecar.
    pub fn save(&self, stem: &Path, meta: &BankMeta) -> Result<()> {
        if let Some(dir) = stem.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_tensor(&self.to_tensor(), with_ext(stem, "adtn"))?;
        let meta_path = with_ext(stem, "meta");
        fs::write(&meta_path, meta.render()).map_err(|e| Error::io(&meta_path, e))
    }

    pub fn load(stem: &Path) -> Result<(Self, BankMeta)> {
        let meta_path = with_ext(stem, "meta");
        let text = fs::read_to_string(&meta_path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingFile(meta_path.clone())
            } else {
                Error::io(&meta_path, e)
            }
        })?;
        let meta = BankMeta::parse(&text)?;
        let bank = Self::from_tensor(&read_tensor(with_ext(stem, "adtn"))?, meta.method)?;
        if bank.len() != meta.count || bank.dim() != meta.dim {
            return Err(Error::BankMeta(format!(
                "sidecar says {}×{}, tensor is {}×{}",
                meta.count,
                meta.dim,
                bank.len(),
                bank.dim()
            )));
        }
        Ok((bank, meta))
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Sidecar describing how a bank was built.
#[derive(Debug, Clone, PartialEq)]
pub struct BankMeta {
    pub method: Method,
    pub dim: usize,
    pub count: usize,
    pub k: usize,
    pub coreset_ratio: f64,
    pub seed: u64,
}

impl BankMeta {
    pub fn render(&self) -> String {
        format!(
            "method={}\ndim={}\ncount={}\nk={}\ncoreset_ratio={}\nseed={}\n",
            self.method, self.dim, self.count, self.k, self.coreset_ratio, self.seed
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::BankMeta(format!("malformed line {line:?}")))?;
            kv.insert(k.trim(), v.trim());
        }
        let get = |key: &str| {
            kv.get(key)
                .copied()
                .ok_or_else(|| Error::BankMeta(format!("missing key {key}")))
        };
        let num = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::BankMeta(format!("bad value for {key}")))
        };
        Ok(Self {
            method: get("method")?.parse()?,
            dim: num("dim")? as usize,
            count: num("count")? as usize,
            k: num("k")? as usize,
            coreset_ratio: get("coreset_ratio")?
                .parse()
                .map_err(|_| Error::BankMeta("bad value for coreset_ratio".into()))?,
            seed: num("seed")?,
        })
    }
}

/// Stacks every patch of every training grid, grid by grid, row-major.
pub fn fit_memory_bank(grids: &[PatchFeatureGrid]) -> Result<MemoryBank> {
    let first = grids
        .first()
        .ok_or_else(|| Error::InvalidParameter("memory bank needs at least one grid".into()))?;
    let dim = first.dim();
    let mut vectors = Vec::with_capacity(grids.iter().map(|g| g.values().len()).sum());
    for g in grids {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "grid dim {} differs from bank dim {dim}",
                g.dim()
            )));
        }
        vectors.extend_from_slice(g.values());
    }
    MemoryBank::new(vectors, dim, first.method())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stacks_all_patches() {
        let a = PatchFeatureGrid::new(28, 2, (0..1568).map(|v| v as f32).collect(), Method::Raw).unwrap();
        let b = PatchFeatureGrid::zeros(28, 2, Method::Raw);
        let bank = fit_memory_bank(&[a.clone(), b]).unwrap();
        assert_eq!(bank.len(), 1568);
        let single = fit_memory_bank(std::slice::from_ref(&a)).unwrap();
        for (p, row) in single.rows().enumerate() {
            assert_eq!(row, a.patch(p));
        }
    }

    #[test]
    fn rejects_dim_mismatch() {
        let a = PatchFeatureGrid::zeros(2, 3, Method::Raw);
        let b = PatchFeatureGrid::zeros(2, 4, Method::Raw);
        assert!(fit_memory_bank(&[a, b]).is_err());
        assert!(fit_memory_bank(&[]).is_err());
    }

    #[test]
    fn save_load() {
        let dir = tempfile::tempdir().unwrap();
        let bank = MemoryBank::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, Method::Fpfh).unwrap();
        let meta = BankMeta {
            method: Method::Fpfh,
            dim: 3,
            count: 2,
            k: 1,
            coreset_ratio: 0.1,
            seed: 7,
        };
        let stem = dir.path().join("cls").join("bank");
        bank.save(&stem, &meta).unwrap();
        let (b2, m2) = MemoryBank::load(&stem).unwrap();
        assert_eq!(b2, bank);
        assert_eq!(m2, meta);
        assert!(BankMeta::parse("method=fpfh\n").is_err());
    }
}
