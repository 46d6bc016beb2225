//! Kernel, label and latent files.
//!
//! Binary kernel layout (`.mklk`), all integers little-endian:
//!
//! ```text
//! b"MKLK" | version: u32 = 1 | rows: u32 | cols: u32 | rows*cols f64, row-major
//! [ count: u32 | count × (len: u32 | len bytes UTF-8) ]      optional id table
//! ```
//!
//! The id table holds either `rows` ids (square matrices, shared by rows and
//! columns) or `rows + cols` ids (row ids first). The CSV alternative is a
//! bare numeric grid, one row per line, no header.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use mklrt_core::nalgebra::DMatrix;
use mklrt_core::{CrossKernelMatrix, KernelMatrix, LabelVector};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"MKLK";
pub const FORMAT_VERSION: u32 = 1;

/// A matrix as stored on disk, with whatever ids the file carried.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub values: DMatrix<f64>,
    pub row_ids: Option<Vec<String>>,
    pub col_ids: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Binary,
    Csv,
}

impl MatrixFormat {
    /// `.csv` is CSV, everything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Binary,
        }
    }
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn to_u32(n: usize, what: &str) -> std::io::Result<u32> {
    u32::try_from(n).map_err(|_| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("{what} exceeds u32"),
        )
    })
}

/// Writes the binary layout. `ids` must be empty, `rows` long (square only)
/// or `rows + cols` long.
pub fn write_mklk<W: Write>(
    w: &mut W,
    values: &DMatrix<f64>,
    ids: &[String],
) -> std::io::Result<()> {
    let (rows, cols) = values.shape();
    let ok = ids.is_empty() || ids.len() == rows + cols || (rows == cols && ids.len() == rows);
    if !ok {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!(
                "id table of length {} fits neither {rows} nor {}",
                ids.len(),
                rows + cols
            ),
        ));
    }
    w.write_all(MAGIC)?;
    write_u32(w, FORMAT_VERSION)?;
    write_u32(w, to_u32(rows, "rows")?)?;
    write_u32(w, to_u32(cols, "cols")?)?;
    for i in 0..rows {
        for j in 0..cols {
            w.write_all(&values[(i, j)].to_le_bytes())?;
        }
    }
    if !ids.is_empty() {
        write_u32(w, to_u32(ids.len(), "id count")?)?;
        for id in ids {
            write_u32(w, to_u32(id.len(), "id length")?)?;
            w.write_all(id.as_bytes())?;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end =
            end.ok_or_else(|| format!("truncated file: need {n} bytes at offset {}", self.pos))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Parses the binary layout from a byte buffer.
pub fn parse_mklk(bytes: &[u8]) -> std::result::Result<RawMatrix, String> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err("bad magic, expected MKLK".into());
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let n = rows.checked_mul(cols).ok_or("matrix size overflows")?;
    let raw = c.take(n.checked_mul(8).ok_or("matrix size overflows")?)?;
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let values = DMatrix::from_row_slice(rows, cols, &data);
    let (mut row_ids, mut col_ids) = (None, None);
    if !c.done() {
        let count = c.u32()? as usize;
        let mut ids = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let len = c.u32()? as usize;
            let s =
                std::str::from_utf8(c.take(len)?).map_err(|e| format!("id is not UTF-8: {e}"))?;
            ids.push(s.to_string());
        }
        if count == rows + cols {
            col_ids = Some(ids.split_off(rows));
            row_ids = Some(ids);
        } else if rows == cols && count == rows {
            row_ids = Some(ids.clone());
            col_ids = Some(ids);
        } else {
            return Err(format!(
                "id table has {count} entries for a {rows}x{cols} matrix"
            ));
        }
        if !c.done() {
            return Err(format!(
                "{} trailing bytes after id table",
                bytes.len() - c.pos
            ));
        }
    }
    Ok(RawMatrix {
        values,
        row_ids,
        col_ids,
    })
}

pub fn parse_csv_grid<R: Read>(r: R) -> std::result::Result<DMatrix<f64>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                rec.len(),
                cols.unwrap()
            ));
        }
        for field in rec.iter() {
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|_| format!("row {}: {field:?} is not a number", i + 1))?,
            );
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &data))
}

pub fn write_csv_grid<W: Write>(w: W, values: &DMatrix<f64>) -> std::io::Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in values.row_iter() {
        wr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wr.flush()
}

/// Reads a matrix file; binary files are recognised by their magic bytes.
pub fn load_matrix(path: &Path) -> Result<RawMatrix> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| CliError::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        parse_mklk(&bytes).map_err(|m| CliError::format(path, m))
    } else {
        let values = parse_csv_grid(bytes.as_slice()).map_err(|m| CliError::format(path, m))?;
        Ok(RawMatrix {
            values,
            row_ids: None,
            col_ids: None,
        })
    }
}

pub fn save_matrix(path: &Path, values: &DMatrix<f64>, ids: &[String]) -> Result<()> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let res = match MatrixFormat::from_path(path) {
        MatrixFormat::Binary => write_mklk(&mut w, values, ids),
        MatrixFormat::Csv => write_csv_grid(&mut w, values),
    };
    res.and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn save_kernel(path: &Path, k: &KernelMatrix) -> Result<()> {
    save_matrix(path, k.values(), k.item_ids())
}

pub fn save_cross_kernel(path: &Path, k: &CrossKernelMatrix) -> Result<()> {
    let ids: Vec<String> = k.test_ids().iter().chain(k.train_ids()).cloned().collect();
    save_matrix(path, k.values(), &ids)
}

/// A square kernel plus whether its ids came from the file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedKernel {
    pub kernel: KernelMatrix,
    pub explicit_ids: bool,
}

pub fn load_kernel(path: &Path) -> Result<LoadedKernel> {
    let raw = load_matrix(path)?;
    if raw.values.nrows() != raw.values.ncols() {
        return Err(CliError::format(
            path,
            format!(
                "kernel must be square, got {}x{}",
                raw.values.nrows(),
                raw.values.ncols()
            ),
        ));
    }
    if raw.row_ids != raw.col_ids {
        return Err(CliError::format(path, "kernel row and column ids differ"));
    }
    let explicit_ids = raw.row_ids.is_some();
    let kernel = match raw.row_ids {
        Some(ids) => KernelMatrix::new(raw.values, ids)?,
        None => KernelMatrix::from_values(raw.values)?,
    };
    Ok(LoadedKernel {
        kernel,
        explicit_ids,
    })
}

/// Loads a test-by-train matrix. Missing train ids are taken from
/// `train_ids` when given (the column count must match), else `"0".."N-1"`.
pub fn load_cross_kernel(path: &Path, train_ids: Option<&[String]>) -> Result<CrossKernelMatrix> {
    let raw = load_matrix(path)?;
    let (rows, cols) = raw.values.shape();
    let test_ids = raw.row_ids.unwrap_or_else(|| default_ids(rows));
    let train = match (raw.col_ids, train_ids) {
        (Some(ids), _) => ids,
        (None, Some(ids)) if ids.len() == cols => ids.to_vec(),
        (None, Some(ids)) => {
            return Err(CliError::format(
                path,
                format!(
                    "cross kernel has {cols} columns but the model has {} training items",
                    ids.len()
                ),
            ))
        }
        (None, None) => default_ids(cols),
    };
    Ok(CrossKernelMatrix::new(raw.values, test_ids, train)?)
}

pub fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Reads `item_id,class_id` rows. A first row whose class field is not an
/// integer is treated as a header.
pub fn read_labels(path: &Path) -> Result<Vec<(String, usize)>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(f));
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::format(path, e.to_string()))?;
        if rec.len() != 2 {
            return Err(CliError::format(
                path,
                format!("row {}: expected item_id,class_id", i + 1),
            ));
        }
        match rec[1].parse::<usize>() {
            Ok(c) => out.push((rec[0].to_string(), c)),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(CliError::format(
                    path,
                    format!(
                        "row {}: class id {:?} is not a non-negative integer",
                        i + 1,
                        &rec[1]
                    ),
                ))
            }
        }
    }
    Ok(out)
}

/// Merges label files into one id → class map; conflicting duplicates are
/// an error.
pub fn label_map(files: &[(&Path, Vec<(String, usize)>)]) -> Result<BTreeMap<String, usize>> {
    let mut map = BTreeMap::new();
    for (path, rows) in files {
        for (id, c) in rows {
            if let Some(prev) = map.insert(id.clone(), *c) {
                if prev != *c {
                    return Err(CliError::format(
                        path,
                        format!("item {id:?} has classes {prev} and {c}"),
                    ));
                }
            }
        }
    }
    Ok(map)
}

/// Class ids for `ids` from a label map.
pub fn lookup_labels(
    map: &BTreeMap<String, usize>,
    ids: &[String],
    what: &str,
) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| {
            map.get(id)
                .copied()
                .ok_or_else(|| CliError::Usage(format!("no label for {what} item {id:?}")))
        })
        .collect()
}

/// Orders label rows to match kernel items. With explicit kernel ids the
/// rows are matched by id; otherwise the file order is used.
pub fn align_labels(
    path: &Path,
    rows: &[(String, usize)],
    kernel: &LoadedKernel,
) -> Result<LabelVector> {
    let ids = kernel.kernel.item_ids();
    let labels = if kernel.explicit_ids {
        let map = label_map(&[(path, rows.to_vec())])?;
        lookup_labels(&map, ids, "kernel")?
    } else {
        if rows.len() != ids.len() {
            return Err(CliError::format(
                path,
                format!(
                    "{} labels for a kernel over {} items",
                    rows.len(),
                    ids.len()
                ),
            ));
        }
        rows.iter().map(|(_, c)| *c).collect()
    };
    Ok(LabelVector::new(labels)?)
}

/// Leading `# key=value` lines of a CSV output.
pub fn read_comments(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text
        .lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}

/// Writes `item_id,z1..zd` rows, preceded by `# key=value` comment lines.
pub fn write_latents(
    path: &Path,
    ids: &[String],
    z: &DMatrix<f64>,
    comments: &[(String, String)],
) -> Result<()> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_comments(&mut w, comments).map_err(|e| CliError::io(path, e))?;
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["item_id".to_string()];
    header.extend((1..=z.ncols()).map(|d| format!("z{d}")));
    let res = (|| -> csv::Result<()> {
        wr.write_record(&header)?;
        for (i, id) in ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(z.row(i).iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    })();
    res.map_err(|e| CliError::format(path, e.to_string()))
}

pub(crate) fn write_comments<W: Write>(
    w: &mut W,
    comments: &[(String, String)],
) -> std::io::Result<()> {
    for (k, v) in comments {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

pub fn read_latents(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(f));
    let dims = reader
        .headers()
        .map_err(|e| CliError::format(path, e.to_string()))?
        .len();
    if dims < 2 {
        return Err(CliError::format(
            path,
            "latent file needs item_id and at least one coordinate",
        ));
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::format(path, e.to_string()))?;
        ids.push(rec[0].to_string());
        for f in rec.iter().skip(1) {
            data.push(f.parse::<f64>().map_err(|_| {
                CliError::format(path, format!("row {}: {f:?} is not a number", i + 1))
            })?);
        }
    }
    let n = ids.len();
    Ok((ids, DMatrix::from_row_slice(n, dims - 1, &data)))
}
