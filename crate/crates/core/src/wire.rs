//! Framed binary serialization for databases, query bundles and responses.
//!
//! Frame layout (all integers little-endian):
//!
//! ```text
//!   magic   4 bytes  "CBPW"
//!   version u16      1
//!   kind    u8       1 = database, 2 = query bundle, 3 = response
//!   p       u64      field characteristic
//!   e       u32      base-field degree (q = p^e)
//!   s       u32      extension degree
//!   dims    kind-specific u32 fields (see below)
//!   payload bit-packed symbols, zero-padded to a byte boundary
//! ```
//!
//! Database dims: file_count, payload_width, file_rows; payload is
//! file_rows * file_count * payload_width base-field elements. Query dims:
//! rows, cols, has_mask (u8); payload is one or two rows*cols extension-field
//! matrices. Response dims are the same as query dims.
//!
//! Symbols are packed little-endian-bit-first: each F_p residue takes
//! ceil(log2 p) bits, an F_q element is its e residues low-degree-first, an
//! F_{q^s} element is its s base-field coefficients low-degree-first.
//! Reduction moduli are not stored: the deterministic modulus search rebuilds
//! identical fields from (p, e, s).

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::field::{make_fields, ExtFieldSpec, FieldSpec, FqElem, FqsElem};
use crate::matrix::{MatFq, MatFqs};
use crate::scheme::{Database, QueryBundle, Response};

pub const MAGIC: [u8; 4] = *b"CBPW";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u16),
    #[error("unexpected frame kind {got}, wanted {want}")]
    WrongKind { want: u8, got: u8 },
    #[error("corrupt frame: {0}")]
    Corrupt(String),
    #[error("field rejected: {0}")]
    Field(#[from] crate::field::FieldError),
}

const KIND_DATABASE: u8 = 1;
const KIND_QUERY: u8 = 2;
const KIND_RESPONSE: u8 = 3;

fn residue_bits(p: u64) -> u32 {
    64 - (p - 1).leading_zeros().min(63)
}

struct BitSink {
    bytes: Vec<u8>,
    cur: u8,
    used: u32,
}

impl BitSink {
    fn new() -> Self {
        BitSink {
            bytes: Vec::new(),
            cur: 0,
            used: 0,
        }
    }

    fn push(&mut self, val: u64, bits: u32) {
        for i in 0..bits {
            let bit = (val >> i) & 1;
            self.cur |= (bit as u8) << self.used;
            self.used += 1;
            if self.used == 8 {
                self.bytes.push(self.cur);
                self.cur = 0;
                self.used = 0;
            }
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.used > 0 {
            self.bytes.push(self.cur);
        }
        self.bytes
    }
}

struct BitSource<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitSource<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitSource { bytes, pos: 0 }
    }

    fn pull(&mut self, bits: u32) -> Result<u64, WireError> {
        let mut val = 0u64;
        for i in 0..bits {
            let byte = self.pos / 8;
            if byte >= self.bytes.len() {
                return Err(WireError::Corrupt("payload truncated".into()));
            }
            let bit = (self.bytes[byte] >> (self.pos % 8)) & 1;
            val |= (bit as u64) << i;
            self.pos += 1;
        }
        Ok(val)
    }
}

fn push_fq(sink: &mut BitSink, spec: &FieldSpec, a: &FqElem) {
    let bits = residue_bits(spec.characteristic());
    for c in spec.coeffs(a) {
        sink.push(c, bits);
    }
}

fn pull_fq(src: &mut BitSource, spec: &FieldSpec) -> Result<FqElem, WireError> {
    let bits = residue_bits(spec.characteristic());
    let mut coeffs = Vec::with_capacity(spec.degree());
    for _ in 0..spec.degree() {
        let c = src.pull(bits)?;
        if c >= spec.characteristic() {
            return Err(WireError::Corrupt(format!(
                "residue {c} out of range for characteristic {}",
                spec.characteristic()
            )));
        }
        coeffs.push(c);
    }
    Ok(spec.from_coeffs(&coeffs))
}

fn push_fqs(sink: &mut BitSink, ext: &ExtFieldSpec, a: &FqsElem) {
    for c in a.coeffs() {
        push_fq(sink, ext.base(), c);
    }
}

fn pull_fqs(src: &mut BitSource, ext: &ExtFieldSpec) -> Result<FqsElem, WireError> {
    let mut coeffs = Vec::with_capacity(ext.ext_degree());
    for _ in 0..ext.ext_degree() {
        coeffs.push(pull_fq(src, ext.base())?);
    }
    Ok(ext.from_coeffs(coeffs))
}

fn write_frame_start(
    w: &mut impl Write,
    kind: u8,
    p: u64,
    e: usize,
    s: usize,
) -> Result<(), WireError> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[kind])?;
    w.write_all(&p.to_le_bytes())?;
    w.write_all(&(e as u32).to_le_bytes())?;
    w.write_all(&(s as u32).to_le_bytes())?;
    Ok(())
}

fn read_frame_start(r: &mut impl Read, want: u8) -> Result<(u64, usize, usize), WireError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(WireError::BadMagic);
    }
    let version = read_u16(r)?;
    if version != VERSION {
        return Err(WireError::BadVersion(version));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    if kind[0] != want {
        return Err(WireError::WrongKind { want, got: kind[0] });
    }
    let mut p = [0u8; 8];
    r.read_exact(&mut p)?;
    let e = read_u32(r)? as usize;
    let s = read_u32(r)? as usize;
    Ok((u64::from_le_bytes(p), e, s))
}

fn read_u16(r: &mut impl Read) -> Result<u16, WireError> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32, WireError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn write_u32(w: &mut impl Write, v: usize) -> Result<(), WireError> {
    w.write_all(&(v as u32).to_le_bytes())?;
    Ok(())
}

pub fn write_database(
    w: &mut impl Write,
    spec: &FieldSpec,
    ext_degree: usize,
    db: &Database,
) -> Result<(), WireError> {
    write_frame_start(
        w,
        KIND_DATABASE,
        spec.characteristic(),
        spec.degree(),
        ext_degree,
    )?;
    write_u32(w, db.file_count())?;
    write_u32(w, db.payload_width())?;
    write_u32(w, db.file_rows())?;
    let mut sink = BitSink::new();
    for e in db.data().data() {
        push_fq(&mut sink, spec, e);
    }
    let payload = sink.finish();
    write_u32(w, payload.len())?;
    w.write_all(&payload)?;
    Ok(())
}

pub fn read_database(r: &mut impl Read) -> Result<(FieldSpec, usize, Database), WireError> {
    let (p, e, s) = read_frame_start(r, KIND_DATABASE)?;
    let (spec, _) = make_fields(p, e, s)?;
    let file_count = read_u32(r)? as usize;
    let payload_width = read_u32(r)? as usize;
    let file_rows = read_u32(r)? as usize;
    let payload = read_payload(r)?;
    let mut src = BitSource::new(&payload);
    let total = file_rows * file_count * payload_width;
    let mut data = Vec::with_capacity(total);
    for _ in 0..total {
        data.push(pull_fq(&mut src, &spec)?);
    }
    let mat = MatFq::from_data(file_rows, file_count * payload_width, data);
    Ok((
        spec,
        s,
        Database::from_parts(mat, file_count, payload_width),
    ))
}

fn read_payload(r: &mut impl Read) -> Result<Vec<u8>, WireError> {
    let len = read_u32(r)? as usize;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(payload)
}

fn write_fqs_matrix(sink: &mut BitSink, ext: &ExtFieldSpec, m: &MatFqs) {
    for r in 0..m.rows() {
        for e in m.row(r) {
            push_fqs(sink, ext, e);
        }
    }
}

fn read_fqs_matrix(
    src: &mut BitSource,
    ext: &ExtFieldSpec,
    rows: usize,
    cols: usize,
) -> Result<MatFqs, WireError> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(pull_fqs(src, ext)?);
    }
    Ok(MatFqs::from_data(rows, cols, data))
}

fn write_pair_frame(
    w: &mut impl Write,
    kind: u8,
    ext: &ExtFieldSpec,
    first: &MatFqs,
    second: Option<&MatFqs>,
) -> Result<(), WireError> {
    let spec = ext.base();
    write_frame_start(
        w,
        kind,
        spec.characteristic(),
        spec.degree(),
        ext.ext_degree(),
    )?;
    write_u32(w, first.rows())?;
    write_u32(w, first.cols())?;
    w.write_all(&[second.is_some() as u8])?;
    let mut sink = BitSink::new();
    write_fqs_matrix(&mut sink, ext, first);
    if let Some(m) = second {
        if (m.rows(), m.cols()) != (first.rows(), first.cols()) {
            return Err(WireError::Corrupt(
                "mask matrix shape differs from main matrix".into(),
            ));
        }
        write_fqs_matrix(&mut sink, ext, m);
    }
    let payload = sink.finish();
    write_u32(w, payload.len())?;
    w.write_all(&payload)?;
    Ok(())
}

fn read_pair_frame(
    r: &mut impl Read,
    kind: u8,
) -> Result<(ExtFieldSpec, MatFqs, Option<MatFqs>), WireError> {
    let (p, e, s) = read_frame_start(r, kind)?;
    let (_, ext) = make_fields(p, e, s)?;
    let rows = read_u32(r)? as usize;
    let cols = read_u32(r)? as usize;
    let mut has_second = [0u8; 1];
    r.read_exact(&mut has_second)?;
    let payload = read_payload(r)?;
    let mut src = BitSource::new(&payload);
    let first = read_fqs_matrix(&mut src, &ext, rows, cols)?;
    let second = if has_second[0] != 0 {
        Some(read_fqs_matrix(&mut src, &ext, rows, cols)?)
    } else {
        None
    };
    Ok((ext, first, second))
}

pub fn write_query_bundle(
    w: &mut impl Write,
    ext: &ExtFieldSpec,
    bundle: &QueryBundle,
) -> Result<(), WireError> {
    write_pair_frame(
        w,
        KIND_QUERY,
        ext,
        &bundle.query,
        bundle.mask_query.as_ref(),
    )
}

pub fn read_query_bundle(r: &mut impl Read) -> Result<(ExtFieldSpec, QueryBundle), WireError> {
    let (ext, query, mask_query) = read_pair_frame(r, KIND_QUERY)?;
    Ok((ext, QueryBundle { query, mask_query }))
}

pub fn write_response(
    w: &mut impl Write,
    ext: &ExtFieldSpec,
    resp: &Response,
) -> Result<(), WireError> {
    write_pair_frame(
        w,
        KIND_RESPONSE,
        ext,
        &resp.answer,
        resp.mask_answer.as_ref(),
    )
}

pub fn read_response(r: &mut impl Read) -> Result<(ExtFieldSpec, Response), WireError> {
    let (ext, answer, mask_answer) = read_pair_frame(r, KIND_RESPONSE)?;
    Ok((
        ext,
        Response {
            answer,
            mask_answer,
        },
    ))
}

/// Pack bytes into an F_q matrix, log2(q) bits per symbol,
/// little-endian-bit-first, zero padded. Characteristic 2 only.
pub fn fq_matrix_from_bytes(
    spec: &FieldSpec,
    rows: usize,
    cols: usize,
    bytes: &[u8],
) -> Result<MatFq, WireError> {
    if spec.characteristic() != 2 {
        return Err(WireError::Corrupt(
            "byte packing is defined for characteristic 2 only".into(),
        ));
    }
    let e = spec.degree();
    if bytes.len() * 8 > rows * cols * e {
        return Err(WireError::Corrupt(format!(
            "{} bytes exceed matrix capacity of {} bits",
            bytes.len(),
            rows * cols * e
        )));
    }
    let mut src = BitSource::new(bytes);
    let total_bits = bytes.len() * 8;
    let mut consumed = 0u64;
    let mat = MatFq::from_fn(rows, cols, |_, _| {
        let mut coeffs = vec![0u64; e];
        for c in coeffs.iter_mut() {
            if (consumed as usize) < total_bits {
                *c = src.pull(1).expect("within bounds");
                consumed += 1;
            }
        }
        spec.from_coeffs(&coeffs)
    });
    Ok(mat)
}

/// Inverse of `fq_matrix_from_bytes`: emits ceil(rows*cols*e/8) bytes.
pub fn fq_matrix_to_bytes(spec: &FieldSpec, m: &MatFq) -> Result<Vec<u8>, WireError> {
    if spec.characteristic() != 2 {
        return Err(WireError::Corrupt(
            "byte packing is defined for characteristic 2 only".into(),
        ));
    }
    let mut sink = BitSink::new();
    for elem in m.data() {
        for c in spec.coeffs(elem) {
            sink.push(c, 1);
        }
    }
    Ok(sink.finish())
}
