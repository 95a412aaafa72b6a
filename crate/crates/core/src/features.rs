//! Per-view feature matrices and the on-disk feature store.
//!
//! File layout (little-endian):
//!
//! ```text
//! magic  b"MNFS"     4 bytes
//! version            u8 (= 1)
//! name_len           u16, then name_len bytes of UTF-8 view name
//! n_rows, n_cols     u64, u64
//! dtype              u8 (0 = f32, 1 = f64)
//! layout             u8 (0 = dense, 1 = sparse)
//! dense:  n_rows * n_cols values, row-major
//! sparse: per row u32 count, count u32 indices, count values
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, SparseVector};
use crate::scalar::{Dtype, Scalar};

const MAGIC: &[u8; 4] = b"MNFS";
const VERSION: u8 = 1;

/// Borrowed view of one feature row.
#[derive(Debug, Clone, Copy)]
pub enum RowRef<'a, T> {
    Dense(&'a [T]),
    Sparse(&'a SparseVector<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix<T> {
    Dense(Matrix<T>),
    Sparse { cols: usize, rows: Vec<SparseVector<T>> },
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn n_rows(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.rows(),
            FeatureMatrix::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.cols(),
            FeatureMatrix::Sparse { cols, .. } => *cols,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, FeatureMatrix::Sparse { .. })
    }

    pub fn row(&self, i: usize) -> RowRef<'_, T> {
        match self {
            FeatureMatrix::Dense(m) => RowRef::Dense(m.row(i)),
            FeatureMatrix::Sparse { rows, .. } => RowRef::Sparse(&rows[i]),
        }
    }

    pub fn dense_row(&self, i: usize) -> Vec<T> {
        match self.row(i) {
            RowRef::Dense(r) => r.to_vec(),
            RowRef::Sparse(s) => s.to_dense(self.n_cols()),
        }
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        match self {
            FeatureMatrix::Dense(m) => {
                let rows: Vec<Vec<T>> = idx.iter().map(|&i| m.row(i).to_vec()).collect();
                FeatureMatrix::Dense(Matrix::from_rows(m.cols(), &rows))
            }
            FeatureMatrix::Sparse { cols, rows } => FeatureMatrix::Sparse {
                cols: *cols,
                rows: idx.iter().map(|&i| rows[i].clone()).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureView<T> {
    pub name: String,
    pub matrix: FeatureMatrix<T>,
}

impl<T: Scalar> FeatureView<T> {
    pub fn new(name: impl Into<String>, matrix: FeatureMatrix<T>) -> Self {
        FeatureView {
            name: name.into(),
            matrix,
        }
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn encode_feature_view<T: Scalar>(view: &FeatureView<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    let name = view.name.as_bytes();
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name);
    put_u64(&mut out, view.matrix.n_rows() as u64);
    put_u64(&mut out, view.matrix.n_cols() as u64);
    out.push(T::DTYPE.code());
    match &view.matrix {
        FeatureMatrix::Dense(m) => {
            out.push(0);
            for &v in m.as_slice() {
                v.write_le(&mut out);
            }
        }
        FeatureMatrix::Sparse { rows, .. } => {
            out.push(1);
            for r in rows {
                put_u32(&mut out, r.nnz() as u32);
                for &i in &r.indices {
                    put_u32(&mut out, i);
                }
                for &v in &r.values {
                    v.write_le(&mut out);
                }
            }
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format("feature file", "unexpected end of data"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn value<T: Scalar>(&mut self, dtype: Dtype) -> Result<T> {
        let bytes = self.take(dtype.width())?;
        Ok(match dtype {
            Dtype::F32 => T::lit(f32::read_le(bytes) as f64),
            Dtype::F64 => T::lit(f64::read_le(bytes)),
        })
    }
}

/// Decodes a feature file, converting stored values to `T`.
pub fn decode_feature_view<T: Scalar>(buf: &[u8]) -> Result<FeatureView<T>> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::format("feature file", "bad magic"));
    }
    let version = c.u8()?;
    if version != VERSION {
        return Err(Error::format("feature file", format!("unsupported version {version}")));
    }
    let name_len = c.u16()? as usize;
    let name = std::str::from_utf8(c.take(name_len)?)
        .map_err(|_| Error::format("feature file", "view name is not UTF-8"))?
        .to_string();
    let n_rows = c.u64()? as usize;
    let n_cols = c.u64()? as usize;
    let dtype = Dtype::from_code(c.u8()?).ok_or_else(|| Error::format("feature file", "unknown dtype"))?;
    let matrix = match c.u8()? {
        0 => {
            let expected = n_rows
                .checked_mul(n_cols)
                .and_then(|n| n.checked_mul(dtype.width()))
                .ok_or_else(|| Error::format("feature file", "shape overflows"))?;
            if buf.len() - c.pos != expected {
                return Err(Error::format(
                    "feature file",
                    format!("expected {expected} data bytes, found {}", buf.len() - c.pos),
                ));
            }
            let mut data = Vec::with_capacity(n_rows * n_cols);
            for _ in 0..n_rows * n_cols {
                data.push(c.value(dtype)?);
            }
            FeatureMatrix::Dense(Matrix::from_vec(n_rows, n_cols, data))
        }
        1 => {
            if n_rows > (buf.len() - c.pos) / 4 {
                return Err(Error::format("feature file", "row count exceeds file size"));
            }
            let mut rows = Vec::with_capacity(n_rows);
            for _ in 0..n_rows {
                let nnz = c.u32()? as usize;
                if nnz > n_cols {
                    return Err(Error::format("feature file", format!("row has {nnz} entries but {n_cols} columns")));
                }
                let mut indices = Vec::with_capacity(nnz);
                for _ in 0..nnz {
                    let i = c.u32()?;
                    if i as usize >= n_cols {
                        return Err(Error::format("feature file", format!("index {i} >= {n_cols} columns")));
                    }
                    indices.push(i);
                }
                let mut values = Vec::with_capacity(nnz);
                for _ in 0..nnz {
                    values.push(c.value(dtype)?);
                }
                rows.push(SparseVector { indices, values });
            }
            FeatureMatrix::Sparse { cols: n_cols, rows }
        }
        other => return Err(Error::format("feature file", format!("unknown layout {other}"))),
    };
    if c.pos != buf.len() {
        return Err(Error::format("feature file", "trailing bytes"));
    }
    Ok(FeatureView { name, matrix })
}

pub fn write_feature_view<T: Scalar>(path: &Path, view: &FeatureView<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_feature_view(view))?;
    w.flush()?;
    Ok(())
}

pub fn read_feature_view<T: Scalar>(path: &Path) -> Result<FeatureView<T>> {
    let buf = std::fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    decode_feature_view(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sparse_strategy() -> impl Strategy<Value = FeatureView<f64>> {
        (1usize..20, 0usize..6).prop_flat_map(|(cols, n_rows)| {
            proptest::collection::vec(
                proptest::collection::btree_map(0..cols as u32, -1e3f64..1e3, 0..cols),
                n_rows,
            )
            .prop_map(move |rows| {
                let rows = rows
                    .into_iter()
                    .map(|m| SparseVector {
                        indices: m.keys().copied().collect(),
                        values: m.values().copied().collect(),
                    })
                    .collect();
                FeatureView::new("tfidf", FeatureMatrix::Sparse { cols, rows })
            })
        })
    }

    proptest! {
        #[test]
        fn sparse_roundtrip(view in sparse_strategy()) {
            let bytes = encode_feature_view(&view);
            prop_assert_eq!(decode_feature_view::<f64>(&bytes).unwrap(), view);
        }

        #[test]
        fn dense_roundtrip(rows in 0usize..5, cols in 0usize..5, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let view = FeatureView::new("timestamp", FeatureMatrix::Dense(Matrix::<f32>::uniform(rows, cols, 1.0, &mut rng)));
            let bytes = encode_feature_view(&view);
            prop_assert_eq!(decode_feature_view::<f32>(&bytes).unwrap(), view);
        }
    }

    #[test]
    fn f32_file_reads_as_f64() {
        let view = FeatureView::new(
            "doc2vec",
            FeatureMatrix::Dense(Matrix::from_vec(1, 2, vec![0.5f32, -0.25])),
        );
        let back: FeatureView<f64> = decode_feature_view(&encode_feature_view(&view)).unwrap();
        assert_eq!(back.matrix.dense_row(0), vec![0.5, -0.25]);
    }

    #[test]
    fn header_layout_is_fixed() {
        let view = FeatureView::new("ab", FeatureMatrix::Dense(Matrix::from_vec(1, 1, vec![1.0f64])));
        let bytes = encode_feature_view(&view);
        assert_eq!(&bytes[..4], b"MNFS");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..9], &[2, 0, b'a', b'b']);
        assert_eq!(&bytes[9..17], &1u64.to_le_bytes());
        assert_eq!(&bytes[17..25], &1u64.to_le_bytes());
        assert_eq!((bytes[25], bytes[26]), (1, 0));
        assert_eq!(&bytes[27..], &1.0f64.to_le_bytes());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let view = FeatureView::new("x", FeatureMatrix::Dense(Matrix::from_vec(2, 2, vec![1.0f64; 4])));
        let bytes = encode_feature_view(&view);
        assert!(decode_feature_view::<f64>(&bytes[..bytes.len() - 3]).is_err());
    }
}
