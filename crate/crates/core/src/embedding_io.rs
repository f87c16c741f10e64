//! Embedding containers and their on-disk formats.
//!
//! Real-valued embeddings use the GloVe text layout, one word per line:
//!
//! *word component_1 component_2 ... component_d*
//!
//! Binary embeddings use the packed `BEMB` layout. All integers are
//! little-endian:
//!
//! | field            | type                                   |
//! |------------------|----------------------------------------|
//! | magic            | `b"BEMB"`                              |
//! | version          | `u32` (currently 1)                    |
//! | n (vocab size)   | `u64`                                  |
//! | c (code length)  | `u32`                                  |
//! | vocabulary       | per token: `u32` byte length, UTF-8    |
//! | codes            | n rows of `ceil(c / 8)` bytes          |
//!
//! Bit `j` of a row lives in byte `j / 8` at position `j % 8` (LSB first).
//! A set bit is the logical value +1, a clear bit is -1, and padding bits
//! are zero.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const BEMB_MAGIC: &[u8; 4] = b"BEMB";
pub const BEMB_VERSION: u32 = 1;
/// Bytes before the vocabulary block: magic, version, n, c.
pub const BEMB_HEADER_LEN: usize = 4 + 4 + 8 + 4;

fn build_index(vocab: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(vocab.len());
    for (i, token) in vocab.iter().enumerate() {
        if index.insert(token.clone(), i).is_some() {
            return Err(Error::DuplicateToken {
                token: token.clone(),
                line: i + 1,
            });
        }
    }
    Ok(index)
}

/// Vocabulary plus a dense `n x d` matrix of word vectors.
#[derive(Clone, Debug)]
pub struct EmbeddingMatrix<T> {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    data: Matrix<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(vocab: Vec<String>, data: Matrix<T>) -> Result<Self> {
        if vocab.is_empty() || data.rows() == 0 {
            return Err(Error::NoVectors);
        }
        if data.cols() == 0 {
            return Err(Error::Dimension(
                "embedding dimension must be at least 1".into(),
            ));
        }
        if vocab.len() != data.rows() {
            return Err(Error::Dimension(format!(
                "{} tokens for {} rows",
                vocab.len(),
                data.rows()
            )));
        }
        if !data.is_finite() {
            return Err(Error::Numeric(
                "embedding contains NaN or infinite values".into(),
            ));
        }
        let index = build_index(&vocab)?;
        Ok(Self { vocab, index, data })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn data(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn vector(&self, token: &str) -> Option<&[T]> {
        self.index_of(token).map(|i| self.data.row(i))
    }
}

impl<T: PartialEq> PartialEq for EmbeddingMatrix<T> {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab && self.data == other.data
    }
}

/// Vocabulary plus an `n x c` matrix of ±1 codes, stored bit-packed.
#[derive(Clone, Debug)]
pub struct BinaryEmbedding {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    code_len: usize,
    packed: Vec<u8>,
}

impl PartialEq for BinaryEmbedding {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab && self.code_len == other.code_len && self.packed == other.packed
    }
}

impl Eq for BinaryEmbedding {}

/// Bytes needed to pack one row of `code_len` bits.
pub fn packed_row_bytes(code_len: usize) -> usize {
    code_len.div_ceil(8)
}

/// Packs a row of logical ±1 values; anything `>= 0` packs as +1.
pub fn pack_signs<T: Scalar>(row: &[T], out: &mut [u8]) {
    out.iter_mut().for_each(|b| *b = 0);
    for (j, v) in row.iter().enumerate() {
        if *v >= T::zero() {
            out[j / 8] |= 1 << (j % 8);
        }
    }
}

impl BinaryEmbedding {
    /// Builds from a matrix whose entries are exactly -1 or +1.
    pub fn from_signs<T: Scalar>(vocab: Vec<String>, signs: &Matrix<T>) -> Result<Self> {
        if let Some(bad) = signs
            .as_slice()
            .iter()
            .find(|v| **v != T::one() && **v != -T::one())
        {
            return Err(Error::Numeric(format!("code entry {bad} is not -1 or +1")));
        }
        Self::from_sign_of(vocab, signs)
    }

    /// Builds from `sgn` of an arbitrary real matrix, with `sgn(0) = +1`.
    pub fn from_sign_of<T: Scalar>(vocab: Vec<String>, values: &Matrix<T>) -> Result<Self> {
        if vocab.len() != values.rows() {
            return Err(Error::Dimension(format!(
                "{} tokens for {} rows",
                vocab.len(),
                values.rows()
            )));
        }
        let code_len = values.cols();
        let row_bytes = packed_row_bytes(code_len);
        let mut packed = vec![0u8; row_bytes * values.rows()];
        if row_bytes > 0 {
            for (row, out) in values.rows_iter().zip(packed.chunks_exact_mut(row_bytes)) {
                pack_signs(row, out);
            }
        }
        Self::from_packed(vocab, code_len, packed)
    }

    /// Wraps already-packed rows. Padding bits must be zero.
    pub fn from_packed(vocab: Vec<String>, code_len: usize, packed: Vec<u8>) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::NoVectors);
        }
        if code_len == 0 {
            return Err(Error::Dimension("code length must be at least 1".into()));
        }
        let row_bytes = packed_row_bytes(code_len);
        if packed.len() != vocab.len() * row_bytes {
            return Err(Error::Length(format!(
                "expected {} packed bytes for {} rows of {} bits, got {}",
                vocab.len() * row_bytes,
                vocab.len(),
                code_len,
                packed.len()
            )));
        }
        let pad = code_len % 8;
        if pad != 0 {
            let mask = !((1u8 << pad) - 1);
            if packed
                .chunks_exact(row_bytes)
                .any(|r| r[row_bytes - 1] & mask != 0)
            {
                return Err(Error::Format(
                    "non-zero padding bits in packed codes".into(),
                ));
            }
        }
        let index = build_index(&vocab)?;
        Ok(Self {
            vocab,
            index,
            code_len,
            packed,
        })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn code_len(&self) -> usize {
        self.code_len
    }

    pub fn row_bytes(&self) -> usize {
        packed_row_bytes(self.code_len)
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Packed bytes of row `i`.
    pub fn row(&self, i: usize) -> &[u8] {
        let rb = self.row_bytes();
        &self.packed[i * rb..(i + 1) * rb]
    }

    pub fn packed(&self) -> &[u8] {
        &self.packed
    }

    /// Logical value (+1 or -1) of bit `j` in row `i`.
    pub fn get(&self, i: usize, j: usize) -> i8 {
        assert!(
            j < self.code_len,
            "bit {j} out of range for code length {}",
            self.code_len
        );
        if self.row(i)[j / 8] >> (j % 8) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Row `i` cast to a real ±1 vector.
    pub fn signs_of_row<T: Scalar>(&self, i: usize) -> Vec<T> {
        let row = self.row(i);
        (0..self.code_len)
            .map(|j| {
                if row[j / 8] >> (j % 8) & 1 == 1 {
                    T::one()
                } else {
                    -T::one()
                }
            })
            .collect()
    }

    /// All codes cast to a real ±1 matrix.
    pub fn to_sign_matrix<T: Scalar>(&self) -> Matrix<T> {
        let mut data = Vec::with_capacity(self.len() * self.code_len);
        for i in 0..self.len() {
            data.extend(self.signs_of_row::<T>(i));
        }
        Matrix::from_vec(self.len(), self.code_len, data).expect("shape is consistent")
    }

    /// Size in bytes of the serialized `BEMB` file.
    pub fn file_size(&self) -> usize {
        BEMB_HEADER_LEN + self.vocab.iter().map(|t| 4 + t.len()).sum::<usize>() + self.packed.len()
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a GloVe-style text embedding from a buffered reader.
///
/// Blank lines are skipped. Every other line must hold a token followed by
/// the same number of finite components.
pub fn read_text_embedding<T: Scalar, R: BufRead>(reader: R) -> Result<EmbeddingMatrix<T>> {
    let mut vocab = Vec::new();
    let mut index = HashMap::new();
    let mut data: Vec<T> = Vec::new();
    let mut dim: Option<usize> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut fields = line.split_ascii_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let before = data.len();
        for field in fields {
            let value: f64 = field
                .parse()
                .map_err(|_| parse_error(lineno, format!("cannot parse '{field}' as a number")))?;
            let value = T::of(value);
            if !value.is_finite() {
                return Err(parse_error(lineno, format!("non-finite value '{field}'")));
            }
            data.push(value);
        }
        let found = data.len() - before;
        match dim {
            None if found == 0 => {
                return Err(Error::Format(format!(
                    "line {lineno}: token '{token}' has no components"
                )))
            }
            None => dim = Some(found),
            Some(d) if d != found => {
                return Err(Error::Format(format!(
                    "line {lineno}: expected {d} components, found {found}"
                )))
            }
            Some(_) => {}
        }
        if index.insert(token.to_owned(), vocab.len()).is_some() {
            return Err(Error::DuplicateToken {
                token: token.to_owned(),
                line: lineno,
            });
        }
        vocab.push(token.to_owned());
    }

    let Some(dim) = dim else {
        return Err(Error::NoVectors);
    };
    let data = Matrix::from_vec(vocab.len(), dim, data)?;
    Ok(EmbeddingMatrix { vocab, index, data })
}

pub fn load_text_embedding<T: Scalar>(path: impl AsRef<Path>) -> Result<EmbeddingMatrix<T>> {
    read_text_embedding(BufReader::new(File::open(path)?))
}

pub fn write_text_embedding<T: Scalar, W: Write>(
    emb: &EmbeddingMatrix<T>,
    mut writer: W,
) -> Result<()> {
    for (token, row) in emb.vocab.iter().zip(emb.data.rows_iter()) {
        write!(writer, "{token}")?;
        for v in row {
            write!(writer, " {v}")?;
        }
        writeln!(writer)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_text_embedding<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_text_embedding(emb, BufWriter::new(File::create(path)?))
}

pub fn write_packed<W: Write>(binary: &BinaryEmbedding, mut writer: W) -> Result<()> {
    let code_len = u32::try_from(binary.code_len)
        .map_err(|_| Error::Parameter("code length does not fit in u32".into()))?;
    writer.write_all(BEMB_MAGIC)?;
    writer.write_all(&BEMB_VERSION.to_le_bytes())?;
    writer.write_all(&(binary.len() as u64).to_le_bytes())?;
    writer.write_all(&code_len.to_le_bytes())?;
    for token in &binary.vocab {
        let len = u32::try_from(token.len())
            .map_err(|_| Error::Parameter(format!("token of {} bytes is too long", token.len())))?;
        writer.write_all(&len.to_le_bytes())?;
        writer.write_all(token.as_bytes())?;
    }
    writer.write_all(&binary.packed)?;
    writer.flush()?;
    Ok(())
}

pub fn save_packed(binary: &BinaryEmbedding, path: impl AsRef<Path>) -> Result<()> {
    write_packed(binary, BufWriter::new(File::create(path)?))
}

fn read_exact_or_truncated<R: Read>(reader: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => {
            Error::Length(format!("file truncated while reading {what}"))
        }
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(reader: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact_or_truncated(reader, &mut buf, what)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_packed<R: Read>(mut reader: R) -> Result<BinaryEmbedding> {
    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut reader, &mut magic, "magic")?;
    if &magic != BEMB_MAGIC {
        return Err(Error::Format("bad magic, not a BEMB file".into()));
    }
    let version = read_u32(&mut reader, "version")?;
    if version != BEMB_VERSION {
        return Err(Error::Format(format!("unsupported BEMB version {version}")));
    }
    let mut n = [0u8; 8];
    read_exact_or_truncated(&mut reader, &mut n, "row count")?;
    let n = usize::try_from(u64::from_le_bytes(n))
        .map_err(|_| Error::Format("row count does not fit in memory".into()))?;
    let code_len = read_u32(&mut reader, "code length")? as usize;

    // n comes from the file; do not trust it for preallocation
    let mut vocab = Vec::with_capacity(n.min(1 << 20));
    for i in 0..n {
        let len = read_u32(&mut reader, "token length")? as usize;
        let mut bytes = Vec::new();
        (&mut reader).take(len as u64).read_to_end(&mut bytes)?;
        if bytes.len() != len {
            return Err(Error::Length(format!("file truncated inside token {i}")));
        }
        let token = String::from_utf8(bytes)
            .map_err(|_| Error::Format(format!("token {i} is not valid UTF-8")))?;
        vocab.push(token);
    }

    let expected = n
        .checked_mul(packed_row_bytes(code_len))
        .ok_or_else(|| Error::Format("code block size overflows".into()))?;
    let mut packed = Vec::new();
    (&mut reader)
        .take(expected as u64)
        .read_to_end(&mut packed)?;
    if packed.len() != expected {
        return Err(Error::Length(format!(
            "file truncated in code block: expected {expected} bytes, got {}",
            packed.len()
        )));
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after code block".into()));
    }
    BinaryEmbedding::from_packed(vocab, code_len, packed)
}

pub fn load_packed(path: impl AsRef<Path>) -> Result<BinaryEmbedding> {
    read_packed(BufReader::new(File::open(path)?))
}

/// Word pairs with human similarity scores.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityDataset {
    pub pairs: Vec<(String, String, f64)>,
}

/// Words with gold category labels.
#[derive(Clone, Debug, PartialEq)]
pub struct CategorizationDataset {
    pub items: Vec<(String, String)>,
}

impl CategorizationDataset {
    /// Distinct labels in first-seen order.
    pub fn categories(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for (_, label) in &self.items {
            if !seen.contains(&label.as_str()) {
                seen.push(label.as_str());
            }
        }
        seen
    }
}

/// Splits on tabs, else commas, else runs of whitespace.
fn split_dataset_line(line: &str) -> Vec<&str> {
    let fields: Vec<&str> = if line.contains('\t') {
        line.split('\t').collect()
    } else if line.contains(',') {
        line.split(',').collect()
    } else {
        line.split_whitespace().collect()
    };
    fields.into_iter().map(str::trim).collect()
}

fn dataset_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, l))),
            Err(e) => Some(Err(Error::Io(e))),
        })
}

pub fn read_similarity_dataset<R: BufRead>(reader: R) -> Result<SimilarityDataset> {
    let mut pairs = Vec::new();
    for line in dataset_lines(reader) {
        let (lineno, line) = line?;
        let fields = split_dataset_line(&line);
        let [a, b, score] = fields.as_slice() else {
            return Err(parse_error(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        };
        let score: f64 = score
            .parse()
            .map_err(|_| parse_error(lineno, format!("cannot parse score '{score}'")))?;
        if !score.is_finite() {
            return Err(parse_error(lineno, "score is not finite"));
        }
        pairs.push(((*a).to_owned(), (*b).to_owned(), score));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(SimilarityDataset { pairs })
}

pub fn load_similarity_dataset(path: impl AsRef<Path>) -> Result<SimilarityDataset> {
    read_similarity_dataset(BufReader::new(File::open(path)?))
}

pub fn read_categorization_dataset<R: BufRead>(reader: R) -> Result<CategorizationDataset> {
    let mut items = Vec::new();
    for line in dataset_lines(reader) {
        let (lineno, line) = line?;
        let fields = split_dataset_line(&line);
        let [word, label] = fields.as_slice() else {
            return Err(parse_error(
                lineno,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        };
        if word.is_empty() || label.is_empty() {
            return Err(parse_error(lineno, "empty field"));
        }
        items.push(((*word).to_owned(), (*label).to_owned()));
    }
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(CategorizationDataset { items })
}

pub fn load_categorization_dataset(path: impl AsRef<Path>) -> Result<CategorizationDataset> {
    read_categorization_dataset(BufReader::new(File::open(path)?))
}

/// True if the file starts with the `BEMB` magic.
pub fn is_packed_file(path: impl AsRef<Path>) -> Result<bool> {
    let mut magic = [0u8; 4];
    let mut file = File::open(path)?;
    let mut read = 0;
    while read < 4 {
        let k = file.read(&mut magic[read..])?;
        if k == 0 {
            return Ok(false);
        }
        read += k;
    }
    Ok(&magic == BEMB_MAGIC)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn text(s: &str) -> Result<EmbeddingMatrix<f64>> {
        read_text_embedding(s.as_bytes())
    }

    fn toks(ts: &[&str]) -> Vec<String> {
        ts.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn parses_glove_lines_in_order() {
        let emb = text("a 1 0\nb 0 1").unwrap();
        assert_eq!(emb.vocab(), &["a", "b"]);
        assert_eq!(
            emb.data(),
            &Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap()
        );
        assert_eq!(emb.vector("b"), Some(&[0.0, 1.0][..]));
    }

    #[test]
    fn empty_file_has_no_vectors() {
        let err = text("").unwrap_err();
        assert!(matches!(err, Error::NoVectors));
        assert_eq!(err.to_string(), "no vectors");
    }

    #[test]
    fn inconsistent_dimension_names_line() {
        let err = text("a 1 0\nb 1").unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn rejects_bad_numbers_duplicates_and_non_finite() {
        assert!(matches!(
            text("a 1 x").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(matches!(
            text("a 1 2\nb 3 4\na 5 6").unwrap_err(),
            Error::DuplicateToken { line: 3, .. }
        ));
        assert!(matches!(text("a NaN 1").unwrap_err(), Error::Parse { .. }));
        assert!(matches!(text("a 1 inf").unwrap_err(), Error::Parse { .. }));
        assert!(matches!(text("a\n").unwrap_err(), Error::Format(_)));
        // overflows f32 but not f64
        assert!(read_text_embedding::<f32, _>("a 1e300".as_bytes()).is_err());
    }

    #[test]
    fn text_round_trip() {
        let emb = text("the 0.25 -1.5 3\n, 1e-3 2 -0.0\n").unwrap();
        let mut buf = Vec::new();
        write_text_embedding(&emb, &mut buf).unwrap();
        assert_eq!(text(std::str::from_utf8(&buf).unwrap()).unwrap(), emb);
    }

    #[test]
    fn alternating_row_packs_to_0x55() {
        let signs = Matrix::from_rows(&[[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]]).unwrap();
        let b = BinaryEmbedding::from_signs(toks(&["w"]), &signs).unwrap();
        assert_eq!(b.packed(), &[0x55]);
        let mut buf = Vec::new();
        write_packed(&b, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"BEMB");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..16], &1u64.to_le_bytes());
        assert_eq!(&buf[16..20], &8u32.to_le_bytes());
        assert_eq!(&buf[20..24], &1u32.to_le_bytes());
        assert_eq!(&buf[24..25], b"w");
        assert_eq!(&buf[25..], &[0x55]);
        assert_eq!(buf.len(), b.file_size());
    }

    #[test]
    fn size_accounting_for_300_bits() {
        let signs = Matrix::from_fn(2, 300, |i, j| if (i + j) % 3 == 0 { 1.0 } else { -1.0 });
        let b = BinaryEmbedding::from_signs(toks(&["ab", "c"]), &signs).unwrap();
        assert_eq!(b.row_bytes(), 38);
        assert_eq!(b.packed().len(), 2 * 38);
        assert_eq!(b.file_size(), BEMB_HEADER_LEN + (4 + 2) + (4 + 1) + 76);
        // 300 float32 values per row against 38 bytes per row
        let ratio = (300.0 * 4.0) / 38.0;
        assert!(ratio > 31.5 && ratio < 32.0);
    }

    #[test]
    fn rejects_non_sign_entries_and_dirty_padding() {
        let m = Matrix::from_rows(&[[1.0, 0.5]]).unwrap();
        assert!(BinaryEmbedding::from_signs(toks(&["a"]), &m).is_err());
        assert!(BinaryEmbedding::from_packed(toks(&["a"]), 3, vec![0b1000]).is_err());
        assert!(BinaryEmbedding::from_packed(toks(&["a"]), 3, vec![0b101]).is_ok());
    }

    #[test]
    fn packed_reader_errors() {
        let b = BinaryEmbedding::from_packed(toks(&["ab", "cd"]), 12, vec![1, 2, 3, 4]).unwrap();
        let mut buf = Vec::new();
        write_packed(&b, &mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_packed(&bad_magic[..]).unwrap_err(),
            Error::Format(_)
        ));

        let mut bad_version = buf.clone();
        bad_version[4] = 9;
        assert!(matches!(
            read_packed(&bad_version[..]).unwrap_err(),
            Error::Format(_)
        ));

        for cut in [2, 10, 22, 27, buf.len() - 1] {
            assert!(
                matches!(read_packed(&buf[..cut]).unwrap_err(), Error::Length(_)),
                "cut at {cut}"
            );
        }

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(matches!(
            read_packed(&trailing[..]).unwrap_err(),
            Error::Format(_)
        ));

        assert_eq!(read_packed(&buf[..]).unwrap(), b);
    }

    #[test]
    fn similarity_dataset_parsing() {
        let ds = read_similarity_dataset("cat\tdog\t7.5".as_bytes()).unwrap();
        assert_eq!(ds.pairs, vec![("cat".into(), "dog".into(), 7.5)]);
        let ds = read_similarity_dataset("a,b,1\n\nc,d,2\n".as_bytes()).unwrap();
        assert_eq!(ds.pairs.len(), 2);
        assert!(matches!(
            read_similarity_dataset("cat\tdog\tabc".as_bytes()).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(matches!(
            read_similarity_dataset("a b 1\nc d".as_bytes()).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
        let err = read_similarity_dataset("".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn categorization_dataset_parsing() {
        let ds = read_categorization_dataset("cat\tanimal\nrose\tplant\ndog\tanimal\n".as_bytes())
            .unwrap();
        assert_eq!(ds.items.len(), 3);
        assert_eq!(ds.categories(), vec!["animal", "plant"]);
        assert!(read_categorization_dataset("cat".as_bytes()).is_err());
        assert!(matches!(
            read_categorization_dataset("\n \n".as_bytes()).unwrap_err(),
            Error::EmptyDataset
        ));
    }

    fn arb_binary() -> impl Strategy<Value = BinaryEmbedding> {
        (1usize..12, 1usize..70).prop_flat_map(|(n, c)| {
            proptest::collection::vec(any::<bool>(), n * c).prop_map(move |bits| {
                let signs = Matrix::from_fn(n, c, |i, j| if bits[i * c + j] { 1.0 } else { -1.0 });
                let vocab = (0..n).map(|i| format!("w{i}é")).collect();
                BinaryEmbedding::from_signs::<f64>(vocab, &signs).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn packed_round_trip(b in arb_binary()) {
            let mut buf = Vec::new();
            write_packed(&b, &mut buf).unwrap();
            prop_assert_eq!(buf.len(), b.file_size());
            let back = read_packed(&buf[..]).unwrap();
            prop_assert_eq!(&back, &b);
            // unpack then repack is the identity
            let signs = back.to_sign_matrix::<f64>();
            prop_assert_eq!(BinaryEmbedding::from_signs(back.vocab().to_vec(), &signs).unwrap(), b);
        }
    }
}
