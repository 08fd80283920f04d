//! Self-describing container of named 2-D arrays.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! b"MLSWEC01"  u32 header_len  header_json
//! u32 n_arrays
//! per array: u16 name_len  name  u8 dtype(0=f64,1=i32)  u32 rows  u32 cols  data
//! ```
//!
//! The text variant starts with `# mlswe-container` followed by a `header`
//! line holding the JSON header and one block per array:
//!
//! ```text
//! array <name> <f64|i32> <rows> <cols>
//! <row values separated by whitespace>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MLSWEC01";
const TEXT_MAGIC: &str = "# mlswe-container";

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F64(Vec<f64>),
    I32(Vec<i32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub rows: usize,
    pub cols: usize,
    pub data: ArrayData,
}

impl Array {
    pub fn f64(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Array {
            rows,
            cols,
            data: ArrayData::F64(data),
        }
    }

    pub fn i32(rows: usize, cols: usize, data: Vec<i32>) -> Self {
        assert_eq!(rows * cols, data.len());
        Array {
            rows,
            cols,
            data: ArrayData::I32(data),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    pub header: serde_json::Map<String, serde_json::Value>,
    pub arrays: BTreeMap<String, Array>,
}

fn fmt_err(path: Option<&Path>, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.map(Path::to_path_buf),
        msg: msg.into(),
    }
}

impl Container {
    pub fn insert(&mut self, name: &str, array: Array) {
        self.arrays.insert(name.to_string(), array);
    }

    pub fn get(&self, name: &str) -> Option<&Array> {
        self.arrays.get(name)
    }

    /// Fetch an f64 array and check its shape. `cols == 0` accepts any width.
    pub fn f64_array(&self, name: &str, rows: usize, cols: usize) -> Result<(&[f64], usize)> {
        let a = self
            .get(name)
            .ok_or_else(|| fmt_err(None, format!("missing array `{name}`")))?;
        let ArrayData::F64(v) = &a.data else {
            return Err(fmt_err(None, format!("array `{name}` is not f64")));
        };
        if a.rows != rows || (cols != 0 && a.cols != cols) {
            return Err(fmt_err(
                None,
                format!(
                    "array `{name}` has shape {}x{}, expected {rows}x{cols}",
                    a.rows, a.cols
                ),
            ));
        }
        Ok((v, a.cols))
    }

    pub fn i32_array(&self, name: &str, rows: usize, cols: usize) -> Result<(&[i32], usize)> {
        let a = self
            .get(name)
            .ok_or_else(|| fmt_err(None, format!("missing array `{name}`")))?;
        let ArrayData::I32(v) = &a.data else {
            return Err(fmt_err(None, format!("array `{name}` is not i32")));
        };
        if a.rows != rows || (cols != 0 && a.cols != cols) {
            return Err(fmt_err(
                None,
                format!(
                    "array `{name}` has shape {}x{}, expected {rows}x{cols}",
                    a.rows, a.cols
                ),
            ));
        }
        Ok((v, a.cols))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for (name, a) in &self.arrays {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            let dtype: u8 = match a.data {
                ArrayData::F64(_) => 0,
                ArrayData::I32(_) => 1,
            };
            out.push(dtype);
            out.extend_from_slice(&(a.rows as u32).to_le_bytes());
            out.extend_from_slice(&(a.cols as u32).to_le_bytes());
            match &a.data {
                ArrayData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                ArrayData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::parse_binary(bytes, None)
    }

    fn parse_binary(bytes: &[u8], path: Option<&Path>) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0, path };
        if cur.take(8)? != MAGIC {
            return Err(fmt_err(path, "bad magic"));
        }
        let hlen = cur.u32()? as usize;
        let header: serde_json::Value = serde_json::from_slice(cur.take(hlen)?)
            .map_err(|e| fmt_err(path, format!("header: {e}")))?;
        let serde_json::Value::Object(header) = header else {
            return Err(fmt_err(path, "header is not an object"));
        };
        let n = cur.u32()? as usize;
        let mut arrays = BTreeMap::new();
        for _ in 0..n {
            let nlen = u16::from_le_bytes(cur.take(2)?.try_into().unwrap()) as usize;
            let name = std::str::from_utf8(cur.take(nlen)?)
                .map_err(|_| fmt_err(path, "array name is not utf-8"))?
                .to_string();
            let dtype = cur.take(1)?[0];
            let rows = cur.u32()? as usize;
            let cols = cur.u32()? as usize;
            let len = rows
                .checked_mul(cols)
                .ok_or_else(|| fmt_err(path, "array size overflow"))?;
            let data = match dtype {
                0 => ArrayData::F64(
                    cur.take(len.checked_mul(8).ok_or_else(|| fmt_err(path, "overflow"))?)?
                        .chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                ),
                1 => ArrayData::I32(
                    cur.take(len.checked_mul(4).ok_or_else(|| fmt_err(path, "overflow"))?)?
                        .chunks_exact(4)
                        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                ),
                d => return Err(fmt_err(path, format!("unknown dtype {d} for `{name}`"))),
            };
            arrays.insert(name, Array { rows, cols, data });
        }
        if cur.pos != bytes.len() {
            return Err(fmt_err(path, "trailing bytes"));
        }
        Ok(Container { header, arrays })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{TEXT_MAGIC}").unwrap();
        writeln!(s, "header {}", serde_json::Value::Object(self.header.clone())).unwrap();
        for (name, a) in &self.arrays {
            let dtype = match a.data {
                ArrayData::F64(_) => "f64",
                ArrayData::I32(_) => "i32",
            };
            writeln!(s, "array {name} {dtype} {} {}", a.rows, a.cols).unwrap();
            for r in 0..a.rows {
                let row: Vec<String> = (0..a.cols)
                    .map(|c| match &a.data {
                        // `{:?}` prints the shortest string that round-trips exactly.
                        ArrayData::F64(v) => format!("{:?}", v[r * a.cols + c]),
                        ArrayData::I32(v) => v[r * a.cols + c].to_string(),
                    })
                    .collect();
                writeln!(s, "{}", row.join(" ")).unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::parse_text(text, None)
    }

    fn parse_text(text: &str, path: Option<&Path>) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(TEXT_MAGIC) {
            return Err(fmt_err(path, "missing text container marker"));
        }
        let hline = lines.next().ok_or_else(|| fmt_err(path, "missing header"))?;
        let hjson = hline
            .strip_prefix("header")
            .ok_or_else(|| fmt_err(path, "expected `header` line"))?;
        let header = match serde_json::from_str(hjson.trim()) {
            Ok(serde_json::Value::Object(m)) => m,
            _ => return Err(fmt_err(path, "header is not a JSON object")),
        };
        let mut arrays = BTreeMap::new();
        while let Some(line) = lines.next() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 || parts[0] != "array" {
                return Err(fmt_err(path, format!("expected array block, got `{line}`")));
            }
            let name = parts[1].to_string();
            let rows: usize = parts[3]
                .parse()
                .map_err(|_| fmt_err(path, format!("bad row count for `{name}`")))?;
            let cols: usize = parts[4]
                .parse()
                .map_err(|_| fmt_err(path, format!("bad column count for `{name}`")))?;
            let mut tokens = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let row = lines
                    .next()
                    .ok_or_else(|| fmt_err(path, format!("`{name}` truncated")))?;
                let before = tokens.len();
                tokens.extend(row.split_whitespace());
                if tokens.len() - before != cols {
                    return Err(fmt_err(path, format!("`{name}` row has wrong width")));
                }
            }
            let bad = |_| fmt_err(path, format!("unparsable value in `{name}`"));
            let data = match parts[2] {
                "f64" => ArrayData::F64(
                    tokens
                        .iter()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(bad)?,
                ),
                "i32" => ArrayData::I32(
                    tokens
                        .iter()
                        .map(|t| t.parse::<i32>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| fmt_err(path, format!("unparsable value in `{name}`")))?,
                ),
                d => return Err(fmt_err(path, format!("unknown dtype `{d}`"))),
            };
            arrays.insert(name, Array { rows, cols, data });
        }
        Ok(Container { header, arrays })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Load either variant, detected from the leading bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            Self::parse_binary(&bytes, Some(path))
        } else if bytes.starts_with(TEXT_MAGIC.as_bytes()) {
            let text = std::str::from_utf8(&bytes).map_err(|_| fmt_err(Some(path), "not utf-8"))?;
            Self::parse_text(text, Some(path))
        } else {
            Err(fmt_err(Some(path), "unrecognized container"))
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: Option<&'a Path>,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| fmt_err(self.path, "unexpected end of file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
