use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{check_id, text_lines};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EVEC";
const VERSION: u32 = 1;
/// Upper bound on the number of floats reserved from an untrusted header.
const MAX_PREALLOC_FLOATS: u64 = 1 << 24;

/// One fixed-dimension `f32` vector per id, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_capacity(dim, 0)
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(EmbeddingSet {
            dim,
            ids: Vec::with_capacity(rows),
            data: Vec::with_capacity(rows * dim),
            index: HashMap::with_capacity(rows),
        })
    }

    /// Builds a set from row-major data; `data.len()` must equal `ids.len() * dim`.
    pub fn from_parts(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite component in vector {}",
                ids[pos / dim]
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            check_id(id, i + 1)?;
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: id.clone(),
                    line: i + 1,
                });
            }
        }
        Ok(EmbeddingSet {
            dim,
            ids,
            data,
            index,
        })
    }

    pub fn push(&mut self, id: impl Into<String>, vector: &[f32]) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite component in vector {id}")));
        }
        check_id(&id, self.ids.len() + 1)?;
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId {
                id,
                line: self.ids.len() + 1,
            });
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn vector(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|row| self.vector(row))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Row-major view of all vectors.
    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> + '_ {
        self.ids
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(id, v)| (id.as_str(), v))
    }

    /// The rows for `ids`, in that order.
    pub fn select<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<EmbeddingSet> {
        let mut out = EmbeddingSet::new(self.dim)?;
        for id in ids {
            let v = self
                .get(id)
                .ok_or_else(|| Error::MissingEmbedding(id.to_owned()))?;
            out.push(id, v)?;
        }
        Ok(out)
    }

    /// Appends every row of `other`; ids must stay unique.
    pub fn extend_from(&mut self, other: &EmbeddingSet) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        for (id, v) in other.iter() {
            self.push(id, v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(reader: R, format: EmbeddingFormat) -> Result<Self> {
        match format {
            EmbeddingFormat::Binary => read_binary(reader),
            EmbeddingFormat::Tsv => {
                let mut bytes = Vec::new();
                let mut reader = reader;
                reader.read_to_end(&mut bytes).map_err(|e| Error::Binary {
                    offset: bytes.len() as u64,
                    message: e.to_string(),
                })?;
                read_tsv(&bytes)
            }
        }
    }

    pub fn from_bytes(bytes: &[u8], format: EmbeddingFormat) -> Result<Self> {
        match format {
            EmbeddingFormat::Binary => read_binary(bytes),
            EmbeddingFormat::Tsv => read_tsv(bytes),
        }
    }

    pub fn write_to<W: Write>(&self, writer: W, format: EmbeddingFormat) -> io::Result<()> {
        match format {
            EmbeddingFormat::Binary => self.write_binary(writer),
            EmbeddingFormat::Tsv => self.write_tsv(writer),
        }
    }

    pub fn to_bytes(&self, format: EmbeddingFormat) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out, format)
            .expect("writing to a Vec cannot fail");
        out
    }

    fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        let dim = u32::try_from(self.dim)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension exceeds u32"))?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        w.write_all(&dim.to_le_bytes())?;
        for (id, v) in self.iter() {
            let len = u16::try_from(id.len()).map_err(|_| {
                io::Error::new(io::ErrorKind::InvalidInput, format!("id {id} longer than 65535 bytes"))
            })?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()
    }

    fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (id, v) in self.iter() {
            write!(w, "{id}\t")?;
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{x}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    }
}

/// On-disk layout for [`EmbeddingSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    /// `EVEC` little-endian records.
    Binary,
    /// `id<TAB>v1 v2 ... vdim`.
    Tsv,
}

impl EmbeddingFormat {
    /// `.tsv`/`.txt` select TSV; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv" | "txt") => EmbeddingFormat::Tsv,
            _ => EmbeddingFormat::Binary,
        }
    }
}

impl FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" | "evec" => Ok(EmbeddingFormat::Binary),
            "tsv" => Ok(EmbeddingFormat::Tsv),
            other => Err(Error::invalid(format!("unknown embedding format {other:?}"))),
        }
    }
}

pub fn read_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EmbeddingSet::read_from(BufReader::with_capacity(1 << 20, file), format).map_err(|e| e.in_file(path))
}

pub fn write_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    set.write_to(BufWriter::new(file), format).map_err(io_err)
}

struct Counting<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Counting<R> {
    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let start = self.offset;
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(Error::Binary {
                        offset: start + filled as u64,
                        message: format!("truncated file while reading {what}"),
                    })
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => {
                    return Err(Error::Binary {
                        offset: start + filled as u64,
                        message: e.to_string(),
                    })
                }
            }
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    /// Like `fill`, but grows `buf` only as bytes arrive, so a corrupt
    /// length field cannot trigger a huge allocation.
    fn fill_vec(&mut self, buf: &mut Vec<u8>, len: usize, what: &str) -> Result<()> {
        const CHUNK: usize = 1 << 16;
        buf.clear();
        while buf.len() < len {
            let start = buf.len();
            buf.resize(start + (len - start).min(CHUNK), 0);
            self.fill(&mut buf[start..], what)?;
        }
        Ok(())
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let mut b = [0; 2];
        self.fill(&mut b, what)?;
        Ok(u16::from_le_bytes(b))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let mut b = [0; 4];
        self.fill(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let mut b = [0; 8];
        self.fill(&mut b, what)?;
        Ok(u64::from_le_bytes(b))
    }
}

fn read_binary<R: Read>(reader: R) -> Result<EmbeddingSet> {
    let mut r = Counting {
        inner: reader,
        offset: 0,
    };
    let mut magic = [0; 4];
    r.fill(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Binary {
            offset: 0,
            message: format!("bad magic {magic:?}, expected \"EVEC\""),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Binary {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let count = r.u64("count")?;
    let dim = r.u32("dim")? as usize;
    if dim == 0 {
        return Err(Error::Binary {
            offset: 16,
            message: "dimension must be positive".into(),
        });
    }
    let rows = count.min(MAX_PREALLOC_FLOATS / dim as u64) as usize;
    let mut set = EmbeddingSet::with_capacity(dim, rows)?;
    let mut row_bytes = Vec::new();
    let mut vector = Vec::new();
    for _ in 0..count {
        let record_start = r.offset;
        let len = r.u16("id length")? as usize;
        let mut id = vec![0; len];
        r.fill(&mut id, "id")?;
        let id = String::from_utf8(id).map_err(|_| Error::Binary {
            offset: record_start + 2,
            message: "id is not valid UTF-8".into(),
        })?;
        let vector_start = r.offset;
        r.fill_vec(&mut row_bytes, dim * 4, "vector")?;
        vector.clear();
        vector.extend(row_bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])));
        if let Some(j) = vector.iter().position(|x| !x.is_finite()) {
            return Err(Error::Binary {
                offset: vector_start + 4 * j as u64,
                message: format!("non-finite component in vector {id}"),
            });
        }
        set.push(id, &vector).map_err(|e| Error::Binary {
            offset: record_start,
            message: e.to_string(),
        })?;
    }
    let mut probe = [0u8; 1];
    match r.inner.read(&mut probe) {
        Ok(0) => Ok(set),
        Ok(_) => Err(Error::Binary {
            offset: r.offset,
            message: "trailing bytes after last record".into(),
        }),
        Err(e) => Err(Error::Binary {
            offset: r.offset,
            message: e.to_string(),
        }),
    }
}

fn read_tsv(bytes: &[u8]) -> Result<EmbeddingSet> {
    let mut set: Option<EmbeddingSet> = None;
    for line in text_lines(bytes) {
        let (line_no, line) = line?;
        let (id, values) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(line_no, "expected `id<TAB>v1 v2 ...`"))?;
        check_id(id, line_no)?;
        let vector = values
            .split_whitespace()
            .map(|tok| {
                let x: f32 = tok
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("{tok:?} is not a number")))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(Error::parse(line_no, format!("non-finite component {tok}")))
                }
            })
            .collect::<Result<Vec<f32>>>()?;
        if vector.is_empty() {
            return Err(Error::parse(line_no, "empty vector"));
        }
        let set = match &mut set {
            Some(s) => s,
            None => set.insert(EmbeddingSet::new(vector.len())?),
        };
        if vector.len() != set.dim() {
            return Err(Error::parse(
                line_no,
                format!("dimension mismatch: expected {}, found {}", set.dim(), vector.len()),
            ));
        }
        set.push(id, &vector).map_err(|e| match e {
            Error::DuplicateId { id, .. } => Error::DuplicateId { id, line: line_no },
            e => Error::parse(line_no, e.to_string()),
        })?;
    }
    set.ok_or_else(|| Error::invalid("no embedding records"))
}
