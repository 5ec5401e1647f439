//! The two PIR protocols, end to end.
//!
//! Both schemes share the same tooling. The database is an L x m*delta matrix
//! over F_q, file t occupying its own delta-column block. A query is an
//! m*delta x n matrix over F_{q^s} of the form
//!
//! ```text
//!     Q = D + E + c (x) Delta
//! ```
//!
//! where D has codeword rows, E carries error-subspace noise off the
//! information set, Delta carries payload-subspace rows off the information
//! set, and (x) is the block Kronecker product. The original scheme uses the
//! unit selector c = e_target; CB-cPIR uses c = e_target + beta for a nonzero
//! mask vector beta and ships a second query built the same way around beta
//! alone. The server only ever multiplies: R = X * Q.
//!
//! Extraction strips the codeword part row by row via information-set
//! interpolation, projects the remainder onto the payload subspace, flattens
//! it to a delta-vector (positions outside the information set in ascending
//! order, payload coordinates within each position), and applies the inverse
//! of the flattened Delta core. For CB-cPIR the mask-side payload is recovered
//! the same way and subtracted, since c - beta = e_target.

use num::BigRational;
use rand::Rng;
use thiserror::Error;

use crate::basis::{SplitBasis, Subspace};
use crate::code::LinearCode;
use crate::field::{make_fields, ExtFieldSpec, FieldError, FieldSpec, FqElem, FqsElem};
use crate::matrix::{kron_vec, mul_fq_fqs, MatFq, MatFqs};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("requested file {target} out of range (database holds {file_count})")]
    TargetOutOfRange { target: usize, file_count: usize },
    #[error("session limit of {limit} queries exhausted")]
    SessionExhausted { limit: usize },
    #[error("mask-side answer required for extraction but not available")]
    MissingMaskAnswer,
}

impl From<FieldError> for SchemeError {
    fn from(e: FieldError) -> Self {
        SchemeError::InvalidParams(e.to_string())
    }
}

/// Scheme parameters: fields, split, code shape, database shape.
#[derive(Clone, Debug)]
pub struct SchemeParams {
    field: FieldSpec,
    ext: ExtFieldSpec,
    error_dim: usize,
    code_length: usize,
    code_dim: usize,
    file_count: usize,
    file_rows: usize,
    session_files: usize,
}

impl SchemeParams {
    pub fn new(
        field: FieldSpec,
        ext: ExtFieldSpec,
        error_dim: usize,
        code_length: usize,
        code_dim: usize,
        file_count: usize,
        file_rows: usize,
        session_files: usize,
    ) -> Result<Self, SchemeError> {
        let s = ext.ext_degree();
        if error_dim == 0 || error_dim >= s {
            return Err(SchemeError::InvalidParams(format!(
                "error dimension must satisfy 1 <= v < s (got v = {error_dim}, s = {s})"
            )));
        }
        if code_dim == 0 || code_dim >= code_length {
            return Err(SchemeError::InvalidParams(format!(
                "code must satisfy 1 <= k < n (got n = {code_length}, k = {code_dim})"
            )));
        }
        if file_count == 0 || file_rows == 0 || session_files == 0 {
            return Err(SchemeError::InvalidParams(
                "file count, file rows and session size must be positive".into(),
            ));
        }
        if ext.base() != &field {
            return Err(SchemeError::InvalidParams(
                "extension field does not extend the given base field".into(),
            ));
        }
        Ok(SchemeParams {
            field,
            ext,
            error_dim,
            code_length,
            code_dim,
            file_count,
            file_rows,
            session_files,
        })
    }

    /// Construct the fields from (p, e, s) and validate the rest.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        p: u64,
        e: usize,
        s: usize,
        error_dim: usize,
        code_length: usize,
        code_dim: usize,
        file_count: usize,
        file_rows: usize,
        session_files: usize,
    ) -> Result<Self, SchemeError> {
        let (field, ext) = make_fields(p, e, s)?;
        Self::new(
            field,
            ext,
            error_dim,
            code_length,
            code_dim,
            file_count,
            file_rows,
            session_files,
        )
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn ext(&self) -> &ExtFieldSpec {
        &self.ext
    }

    pub fn ext_degree(&self) -> usize {
        self.ext.ext_degree()
    }

    pub fn error_dim(&self) -> usize {
        self.error_dim
    }

    pub fn code_length(&self) -> usize {
        self.code_length
    }

    pub fn code_dim(&self) -> usize {
        self.code_dim
    }

    pub fn file_count(&self) -> usize {
        self.file_count
    }

    pub fn file_rows(&self) -> usize {
        self.file_rows
    }

    pub fn session_files(&self) -> usize {
        self.session_files
    }

    /// Payload width per file: delta = (s - v)(n - k).
    pub fn payload_width(&self) -> usize {
        (self.ext.ext_degree() - self.error_dim) * (self.code_length - self.code_dim)
    }

    /// Total F_q columns of the packed database.
    pub fn database_width(&self) -> usize {
        self.file_count * self.payload_width()
    }
}

/// The packed database: file t occupies columns [t*delta, (t+1)*delta).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    data: MatFq,
    file_count: usize,
    payload_width: usize,
}

impl Database {
    pub fn data(&self) -> &MatFq {
        &self.data
    }

    pub fn file_count(&self) -> usize {
        self.file_count
    }

    pub fn file_rows(&self) -> usize {
        self.data.rows()
    }

    pub fn payload_width(&self) -> usize {
        self.payload_width
    }

    pub fn file(&self, t: usize) -> MatFq {
        assert!(t < self.file_count);
        self.data
            .col_range(t * self.payload_width, (t + 1) * self.payload_width)
    }

    pub fn unpack(&self) -> Vec<MatFq> {
        (0..self.file_count).map(|t| self.file(t)).collect()
    }

    /// Uniformly random database for the given parameters.
    pub fn random<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Database {
        let data = MatFq::from_fn(params.file_rows(), params.database_width(), |_, _| {
            params.field().sample(rng)
        });
        Database {
            data,
            file_count: params.file_count(),
            payload_width: params.payload_width(),
        }
    }

    pub(crate) fn from_parts(data: MatFq, file_count: usize, payload_width: usize) -> Database {
        Database {
            data,
            file_count,
            payload_width,
        }
    }

    /// Wrap an already-packed matrix whose width is file_count * payload_width.
    pub fn from_matrix(data: MatFq, file_count: usize) -> Result<Database, SchemeError> {
        if file_count == 0 || data.cols() % file_count != 0 {
            return Err(SchemeError::ShapeMismatch(format!(
                "width {} does not split into {file_count} files",
                data.cols()
            )));
        }
        let payload_width = data.cols() / file_count;
        Ok(Database {
            data,
            file_count,
            payload_width,
        })
    }
}

/// Pack per-file matrices (each L x delta) side by side.
pub fn pack_database(params: &SchemeParams, files: &[MatFq]) -> Result<Database, SchemeError> {
    if files.len() != params.file_count() {
        return Err(SchemeError::ShapeMismatch(format!(
            "expected {} files, got {}",
            params.file_count(),
            files.len()
        )));
    }
    let delta = params.payload_width();
    for (t, f) in files.iter().enumerate() {
        if f.rows() != params.file_rows() || f.cols() != delta {
            return Err(SchemeError::ShapeMismatch(format!(
                "file {t} is {}x{}, expected {}x{delta}",
                f.rows(),
                f.cols(),
                params.file_rows()
            )));
        }
    }
    let data = MatFq::hstack(files).expect("shapes checked above");
    Ok(Database {
        data,
        file_count: params.file_count(),
        payload_width: delta,
    })
}

/// Everything one query side needs for generation and extraction: the code,
/// the split basis, the payload matrix Delta (delta x n, payload-subspace
/// entries, zero on the information set) and the inverse of its flattened
/// delta x delta core.
#[derive(Clone, Debug)]
pub struct QuerySide {
    pub(crate) code: LinearCode,
    pub(crate) basis: SplitBasis,
    pub(crate) payload_mat: MatFqs,
    pub(crate) payload_flat_inv: MatFq,
}

impl QuerySide {
    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn basis(&self) -> &SplitBasis {
        &self.basis
    }

    pub fn payload_matrix(&self) -> &MatFqs {
        &self.payload_mat
    }
}

/// Private material retained by the client for extraction.
#[derive(Clone, Debug)]
pub struct ClientSecret {
    target: usize,
    pub(crate) main: QuerySide,
    /// beta, CB-cPIR only.
    pub(crate) mask: Option<Vec<FqElem>>,
    /// c = e_target + beta, CB-cPIR only.
    pub(crate) selector: Option<Vec<FqElem>>,
    pub(crate) mask_side: Option<QuerySide>,
}

impl ClientSecret {
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn main_side(&self) -> &QuerySide {
        &self.main
    }

    /// beta, present for CB-cPIR secrets.
    pub fn mask(&self) -> Option<&[FqElem]> {
        self.mask.as_deref()
    }

    /// c = e_target + beta, present for CB-cPIR secrets.
    pub fn selector(&self) -> Option<&[FqElem]> {
        self.selector.as_deref()
    }
}

/// What actually travels to the server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryBundle {
    pub query: MatFqs,
    /// Present on standalone CB-cPIR queries and on the first query of a
    /// session; absent on mask-reuse follow-ups and in the original scheme.
    pub mask_query: Option<MatFqs>,
}

/// What travels back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Response {
    pub answer: MatFqs,
    pub mask_answer: Option<MatFqs>,
}

/// The three structural components of a query, kept separate for tests.
#[derive(Clone, Debug)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct QueryParts {
    pub codeword_part: MatFqs,
    pub error_part: MatFqs,
    pub payload_part: MatFqs,
    pub query: MatFqs,
}

/// Sample a full query side: code, basis, payload matrix with invertible
/// flattened core.
fn sample_side<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> QuerySide {
    let ext = params.ext();
    let code = LinearCode::sample(ext, params.code_length(), params.code_dim(), rng)
        .expect("dimensions validated by SchemeParams");
    let basis = SplitBasis::sample(ext, params.error_dim(), rng);
    let delta = params.payload_width();
    loop {
        let complement = code.complement();
        let mut payload_mat = MatFqs::zeros(delta, params.code_length(), ext);
        for r in 0..delta {
            for &pos in &complement {
                payload_mat[(r, pos)] = basis.sample_in(Subspace::Payload, ext, rng);
            }
        }
        let flat = flatten_payload_matrix(params, &code, &basis, &payload_mat);
        if let Ok(payload_flat_inv) = flat.inverse(params.field()) {
            return QuerySide {
                code,
                basis,
                payload_mat,
                payload_flat_inv,
            };
        }
        // Flattened core was singular; resample the payload matrix.
    }
}

/// Flatten payload-subspace rows to delta-wide F_q vectors: positions outside
/// the information set in ascending order, payload coordinates within each.
fn flatten_payload_row(
    params: &SchemeParams,
    code: &LinearCode,
    basis: &SplitBasis,
    row: &[FqsElem],
) -> Vec<FqElem> {
    let ext = params.ext();
    let v = params.error_dim();
    let mut out = Vec::with_capacity(params.payload_width());
    for &pos in &code.complement() {
        let coords = basis.coords(&row[pos], ext);
        out.extend(coords[v..].iter().cloned());
    }
    out
}

fn flatten_payload_matrix(
    params: &SchemeParams,
    code: &LinearCode,
    basis: &SplitBasis,
    m: &MatFqs,
) -> MatFq {
    let rows: Vec<Vec<FqElem>> = (0..m.rows())
        .map(|r| flatten_payload_row(params, code, basis, m.row(r)))
        .collect();
    let delta = params.payload_width();
    MatFq::from_fn(m.rows(), delta, |r, c| rows[r][c].clone())
}

/// Assemble Q = D + E + selector (x) Delta for one side.
pub(crate) fn assemble_query<R: Rng + ?Sized>(
    params: &SchemeParams,
    side: &QuerySide,
    selector: &[FqElem],
    rng: &mut R,
) -> QueryParts {
    let ext = params.ext();
    let n = params.code_length();
    let total_rows = params.file_count() * params.payload_width();

    let codeword_part = MatFqs::from_rows(
        (0..total_rows)
            .map(|_| {
                let msg: Vec<FqsElem> = (0..params.code_dim()).map(|_| ext.sample(rng)).collect();
                side.code.encode(&msg, ext).expect("message length matches")
            })
            .collect(),
    );

    let complement = side.code.complement();
    let mut error_part = MatFqs::zeros(total_rows, n, ext);
    for r in 0..total_rows {
        for &pos in &complement {
            error_part[(r, pos)] = side.basis.sample_in(Subspace::Error, ext, rng);
        }
    }

    let payload_part = kron_vec(selector, &side.payload_mat, ext);
    let query = codeword_part.add(&error_part, ext).add(&payload_part, ext);
    QueryParts {
        codeword_part,
        error_part,
        payload_part,
        query,
    }
}

/// Original-scheme query: Q = D + E + e_target (x) Delta.
pub fn query_original<R: Rng + ?Sized>(
    params: &SchemeParams,
    target: usize,
    rng: &mut R,
) -> Result<(QueryBundle, ClientSecret), SchemeError> {
    if target >= params.file_count() {
        return Err(SchemeError::TargetOutOfRange {
            target,
            file_count: params.file_count(),
        });
    }
    let side = sample_side(params, rng);
    let mut selector = vec![params.field().zero(); params.file_count()];
    selector[target] = params.field().one();
    let parts = assemble_query(params, &side, &selector, rng);
    Ok((
        QueryBundle {
            query: parts.query,
            mask_query: None,
        },
        ClientSecret {
            target,
            main: side,
            mask: None,
            selector: None,
            mask_side: None,
        },
    ))
}

/// Sample the CB-cPIR mask beta and selector c = e_target + beta. Every
/// selector entry is nonzero: beta is nonzero everywhere and beta_target
/// additionally avoids -1. Requires q > 2.
pub(crate) fn sample_mask_selector<R: Rng + ?Sized>(
    params: &SchemeParams,
    target: usize,
    rng: &mut R,
) -> Result<(Vec<FqElem>, Vec<FqElem>), SchemeError> {
    let f = params.field();
    if f.order_u128() == Some(2) {
        return Err(SchemeError::InvalidParams(
            "CB-cPIR selector cannot be made totally nonzero over F_2".into(),
        ));
    }
    let mut mask: Vec<FqElem> = (0..params.file_count())
        .map(|_| f.sample_nonzero(rng))
        .collect();
    loop {
        let bumped = f.add(&f.one(), &mask[target]);
        if !f.is_zero(&bumped) {
            break;
        }
        mask[target] = f.sample_nonzero(rng);
    }
    let mut selector = mask.clone();
    selector[target] = f.add(&f.one(), &mask[target]);
    Ok((mask, selector))
}

/// Standalone CB-cPIR query: (Q, Q_beta) plus the client secret.
pub fn query_cbcpir<R: Rng + ?Sized>(
    params: &SchemeParams,
    target: usize,
    rng: &mut R,
) -> Result<(QueryBundle, ClientSecret), SchemeError> {
    if target >= params.file_count() {
        return Err(SchemeError::TargetOutOfRange {
            target,
            file_count: params.file_count(),
        });
    }
    let (mask, selector) = sample_mask_selector(params, target, rng)?;
    let main = sample_side(params, rng);
    let mask_side = sample_side(params, rng);
    let main_parts = assemble_query(params, &main, &selector, rng);
    let mask_parts = assemble_query(params, &mask_side, &mask, rng);
    Ok((
        QueryBundle {
            query: main_parts.query,
            mask_query: Some(mask_parts.query),
        },
        ClientSecret {
            target,
            main,
            mask: Some(mask),
            selector: Some(selector),
            mask_side: Some(mask_side),
        },
    ))
}

/// Mask-reuse session: up to `session_files` queries share one beta, so the
/// mask query travels once and its answer is cached client-side.
#[derive(Clone, Debug)]
pub struct Session {
    mask: Vec<FqElem>,
    mask_side: QuerySide,
    pending_mask_query: Option<MatFqs>,
    queries_used: usize,
    limit: usize,
    stored_mask_answer: Option<MatFqs>,
}

impl Session {
    /// Sample the shared mask material and build the mask query. Every mask
    /// entry avoids both 0 and -1 so any later target keeps the selector
    /// totally nonzero.
    pub fn new<R: Rng + ?Sized>(
        params: &SchemeParams,
        rng: &mut R,
    ) -> Result<Session, SchemeError> {
        let f = params.field();
        if f.order_u128() == Some(2) {
            return Err(SchemeError::InvalidParams(
                "CB-cPIR selector cannot be made totally nonzero over F_2".into(),
            ));
        }
        let minus_one = f.neg(&f.one());
        let mask: Vec<FqElem> = (0..params.file_count())
            .map(|_| loop {
                let b = f.sample_nonzero(rng);
                if b != minus_one {
                    break b;
                }
            })
            .collect();
        let mask_side = sample_side(params, rng);
        let mask_parts = assemble_query(params, &mask_side, &mask, rng);
        Ok(Session {
            mask,
            mask_side,
            pending_mask_query: Some(mask_parts.query),
            queries_used: 0,
            limit: params.session_files(),
            stored_mask_answer: None,
        })
    }

    pub fn queries_used(&self) -> usize {
        self.queries_used
    }

    /// Next query in the session. The first bundle carries the mask query;
    /// follow-ups do not.
    pub fn query<R: Rng + ?Sized>(
        &mut self,
        params: &SchemeParams,
        target: usize,
        rng: &mut R,
    ) -> Result<(QueryBundle, ClientSecret), SchemeError> {
        if target >= params.file_count() {
            return Err(SchemeError::TargetOutOfRange {
                target,
                file_count: params.file_count(),
            });
        }
        if self.queries_used >= self.limit {
            return Err(SchemeError::SessionExhausted { limit: self.limit });
        }
        self.queries_used += 1;
        let f = params.field();
        let mut selector = self.mask.clone();
        selector[target] = f.add(&f.one(), &self.mask[target]);
        let main = sample_side(params, rng);
        let parts = assemble_query(params, &main, &selector, rng);
        Ok((
            QueryBundle {
                query: parts.query,
                mask_query: self.pending_mask_query.take(),
            },
            ClientSecret {
                target,
                main,
                mask: Some(self.mask.clone()),
                selector: Some(selector),
                mask_side: Some(self.mask_side.clone()),
            },
        ))
    }

    /// Cache the mask answer from the first response.
    pub fn store_answer(&mut self, resp: &Response) {
        if let Some(ma) = &resp.mask_answer {
            self.stored_mask_answer = Some(ma.clone());
        }
    }

    pub fn mask_answer(&self) -> Option<&MatFqs> {
        self.stored_mask_answer.as_ref()
    }
}

/// Server side: R = X * Q (and R_beta = X * Q_beta when present).
pub fn server_answer(
    params: &SchemeParams,
    db: &Database,
    bundle: &QueryBundle,
) -> Result<Response, SchemeError> {
    let expected_rows = params.database_width();
    if bundle.query.rows() != expected_rows || bundle.query.cols() != params.code_length() {
        return Err(SchemeError::ShapeMismatch(format!(
            "query is {}x{}, expected {}x{}",
            bundle.query.rows(),
            bundle.query.cols(),
            expected_rows,
            params.code_length()
        )));
    }
    if db.data().cols() != expected_rows {
        return Err(SchemeError::ShapeMismatch(format!(
            "database width {} does not match query height {expected_rows}",
            db.data().cols()
        )));
    }
    let answer = mul_fq_fqs(db.data(), &bundle.query, params.ext())
        .map_err(|e| SchemeError::ShapeMismatch(e.to_string()))?;
    let mask_answer = match &bundle.mask_query {
        Some(mq) => Some(
            mul_fq_fqs(db.data(), mq, params.ext())
                .map_err(|e| SchemeError::ShapeMismatch(e.to_string()))?,
        ),
        None => None,
    };
    Ok(Response {
        answer,
        mask_answer,
    })
}

/// Recover X * (selector (x) I_delta) from one answer matrix: strip the
/// codeword row by row, project onto the payload subspace, flatten, and apply
/// the inverse of the flattened Delta core.
fn recover_payload(
    params: &SchemeParams,
    side: &QuerySide,
    answer: &MatFqs,
) -> Result<MatFq, SchemeError> {
    if answer.cols() != params.code_length() {
        return Err(SchemeError::ShapeMismatch(format!(
            "answer has {} columns, expected {}",
            answer.cols(),
            params.code_length()
        )));
    }
    let ext = params.ext();
    let delta = params.payload_width();
    let mut out = MatFq::zeros(answer.rows(), delta, params.field());
    for j in 0..answer.rows() {
        let row = answer.row(j);
        let vals: Vec<FqsElem> = side
            .code
            .info_set()
            .iter()
            .map(|&c| row[c].clone())
            .collect();
        let codeword = side
            .code
            .codeword_from_info(&vals, ext)
            .expect("information-set length fixed by construction");
        let remainder: Vec<FqsElem> = row
            .iter()
            .zip(&codeword)
            .map(|(a, b)| ext.sub(a, b))
            .collect();
        debug_assert!(side
            .code
            .info_set()
            .iter()
            .all(|&c| ext.is_zero(&remainder[c])));
        let payload: Vec<FqsElem> = remainder
            .iter()
            .map(|x| side.basis.project(x, Subspace::Payload, ext))
            .collect();
        let flat = flatten_payload_row(params, &side.code, &side.basis, &payload);
        let recovered = side.payload_flat_inv.vec_mul(&flat, params.field());
        for (c, val) in recovered.into_iter().enumerate() {
            out[(j, c)] = val;
        }
    }
    Ok(out)
}

/// Original-scheme extraction: the payload of the single selected block is the
/// file itself.
pub fn extract_original(
    params: &SchemeParams,
    secret: &ClientSecret,
    resp: &Response,
) -> Result<MatFq, SchemeError> {
    recover_payload(params, &secret.main, &resp.answer)
}

/// CB-cPIR extraction: subtract the mask-side payload from the main-side
/// payload. The mask answer comes from this response or, in a session, from
/// the stored first response.
pub fn extract_cbcpir(
    params: &SchemeParams,
    secret: &ClientSecret,
    resp: &Response,
    stored_mask_answer: Option<&MatFqs>,
) -> Result<MatFq, SchemeError> {
    let mask_side = secret
        .mask_side
        .as_ref()
        .ok_or_else(|| SchemeError::InvalidParams("secret lacks mask material".into()))?;
    let mask_answer = resp
        .mask_answer
        .as_ref()
        .or(stored_mask_answer)
        .ok_or(SchemeError::MissingMaskAnswer)?;
    let main_payload = recover_payload(params, &secret.main, &resp.answer)?;
    let mask_payload = recover_payload(params, mask_side, mask_answer)?;
    Ok(main_payload.sub(&mask_payload, params.field()))
}

/// Communication accounting for one CB-cPIR session of f files.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficReport {
    /// (f + 1) query matrices of m*delta*n extension-field symbols each.
    pub upload_symbols: u128,
    /// (f + 1) answer matrices of L*n extension-field symbols each.
    pub download_symbols: u128,
    pub upload_bits: f64,
    pub download_bits: f64,
    /// Retrieved-file bits over total communicated bits, exact: the log2(q)
    /// factors cancel, leaving f*L*delta / ((f+1)(m*delta*n + L*n) * s).
    pub rate: BigRational,
}

impl TrafficReport {
    /// Floating-point view of the exact rate.
    pub fn rate_f64(&self) -> f64 {
        use num::ToPrimitive;
        self.rate.to_f64().unwrap_or(f64::NAN)
    }
}

/// Evaluate the CB-cPIR session traffic and exact rate for these parameters.
pub fn cbcpir_traffic(params: &SchemeParams) -> TrafficReport {
    let f = params.session_files() as u128;
    let m = params.file_count() as u128;
    let delta = params.payload_width() as u128;
    let n = params.code_length() as u128;
    let l = params.file_rows() as u128;
    let s = params.ext_degree() as u128;

    let upload_symbols = (f + 1) * m * delta * n;
    let download_symbols = (f + 1) * l * n;
    let log2q = params.field().log2_order();
    let sym_bits = log2q * s as f64;
    let payload = f * l * delta;
    let total = (f + 1) * (m * delta * n + l * n) * s;
    TrafficReport {
        upload_symbols,
        download_symbols,
        upload_bits: upload_symbols as f64 * sym_bits,
        download_bits: download_symbols as f64 * sym_bits,
        rate: BigRational::new(payload.into(), total.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    /// Small parameters that keep unit tests quick: q = 16, s = 4, v = 2,
    /// n = 6, k = 3, delta = 6, m = 5, L = 3.
    fn small_params() -> SchemeParams {
        SchemeParams::build(2, 4, 4, 2, 6, 3, 5, 3, 1).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(SchemeParams::build(2, 4, 4, 4, 6, 3, 5, 3, 1).is_err()); // v = s
        assert!(SchemeParams::build(2, 4, 4, 2, 6, 6, 5, 3, 1).is_err()); // k = n
        assert!(SchemeParams::build(2, 4, 4, 2, 6, 3, 0, 3, 1).is_err()); // m = 0
        assert!(SchemeParams::build(9, 1, 4, 1, 6, 3, 5, 3, 1).is_err()); // 9 not prime
        let p = small_params();
        assert_eq!(p.payload_width(), (4 - 2) * (6 - 3));
    }

    #[test]
    fn pack_unpack_round_trip() {
        let params = small_params();
        let mut rng = StdRng::seed_from_u64(1);
        let delta = params.payload_width();
        let files: Vec<MatFq> = (0..params.file_count())
            .map(|_| {
                MatFq::from_fn(params.file_rows(), delta, |_, _| {
                    params.field().sample(&mut rng)
                })
            })
            .collect();
        let db = pack_database(&params, &files).unwrap();
        assert_eq!(db.unpack(), files);
        for (t, f) in files.iter().enumerate() {
            assert_eq!(&db.file(t), f);
        }

        // Single-file database is the file itself.
        let one = SchemeParams::build(2, 4, 4, 2, 6, 3, 1, 3, 1).unwrap();
        let db1 = pack_database(&one, &files[..1]).unwrap();
        assert_eq!(db1.data(), &files[0]);

        // Mismatched shapes are rejected.
        let bad = MatFq::zeros(params.file_rows() + 1, delta, params.field());
        let mut files_bad = files.clone();
        files_bad[2] = bad;
        assert!(matches!(
            pack_database(&params, &files_bad),
            Err(SchemeError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn query_structure_original() {
        let params = small_params();
        let ext = params.ext();
        let mut rng = StdRng::seed_from_u64(2);
        let target = 3;
        let side = sample_side(&params, &mut rng);
        let mut selector = vec![params.field().zero(); params.file_count()];
        selector[target] = params.field().one();
        let parts = assemble_query(&params, &side, &selector, &mut rng);

        // Error part: zero on the information set, error-subspace entries off it.
        for r in 0..parts.error_part.rows() {
            for &c in side.code.info_set() {
                assert!(ext.is_zero(&parts.error_part[(r, c)]));
            }
            for c in 0..params.code_length() {
                let e = &parts.error_part[(r, c)];
                assert_eq!(side.basis.project(e, Subspace::Error, ext), *e);
            }
        }
        // Payload matrix: zero on the information set, payload-subspace entries.
        for r in 0..side.payload_mat.rows() {
            for &c in side.code.info_set() {
                assert!(ext.is_zero(&side.payload_mat[(r, c)]));
            }
            for c in 0..params.code_length() {
                let w = &side.payload_mat[(r, c)];
                assert_eq!(side.basis.project(w, Subspace::Payload, ext), *w);
            }
        }
        // Q - E - e_target (x) Delta rows all lie in the code.
        let d = parts
            .query
            .sub(&parts.error_part, ext)
            .sub(&parts.payload_part, ext);
        for r in 0..d.rows() {
            assert!(side.code.contains(d.row(r), ext));
        }
        // Projecting the error part onto the error subspace fixes it.
        for r in 0..parts.error_part.rows() {
            for c in 0..params.code_length() {
                let e = &parts.error_part[(r, c)];
                assert_eq!(side.basis.project(e, Subspace::Error, ext), e.clone());
            }
        }
    }

    #[test]
    fn selector_case_split_and_nonzero() {
        let params = small_params();
        let f = params.field();
        let mut rng = StdRng::seed_from_u64(3);
        for trial in 0..1000 {
            let target = trial % params.file_count();
            let (mask, selector) = sample_mask_selector(&params, target, &mut rng).unwrap();
            for t in 0..params.file_count() {
                assert!(!f.is_zero(&selector[t]));
                if t != target {
                    // c_t = beta_t away from the target
                    assert_eq!(selector[t], mask[t]);
                } else {
                    assert_eq!(selector[t], f.add(&f.one(), &mask[t]));
                }
            }
        }
    }

    #[test]
    fn selector_rejected_over_f2() {
        let params = SchemeParams::build(2, 1, 4, 2, 6, 3, 5, 3, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(4);
        assert!(matches!(
            query_cbcpir(&params, 0, &mut rng),
            Err(SchemeError::InvalidParams(_))
        ));
    }

    #[test]
    fn answer_decomposition_matches_eq_structure() {
        // R = X*D + X*E + X*(c (x) Delta): codeword rows plus two parts
        // supported off the information set (error/payload subspaces).
        let params = small_params();
        let ext = params.ext();
        let mut rng = StdRng::seed_from_u64(5);
        let db = Database::random(&params, &mut rng);
        let side = sample_side(&params, &mut rng);
        let (_, selector) = sample_mask_selector(&params, 1, &mut rng).unwrap();
        let parts = assemble_query(&params, &side, &selector, &mut rng);

        let r_full = mul_fq_fqs(db.data(), &parts.query, ext).unwrap();
        let r_cw = mul_fq_fqs(db.data(), &parts.codeword_part, ext).unwrap();
        let r_err = mul_fq_fqs(db.data(), &parts.error_part, ext).unwrap();
        let r_pay = mul_fq_fqs(db.data(), &parts.payload_part, ext).unwrap();
        assert_eq!(r_cw.add(&r_err, ext).add(&r_pay, ext), r_full);

        for j in 0..r_full.rows() {
            assert!(side.code.contains(r_cw.row(j), ext));
            for &c in side.code.info_set() {
                assert!(ext.is_zero(&r_err[(j, c)]));
                assert!(ext.is_zero(&r_pay[(j, c)]));
            }
            for c in 0..params.code_length() {
                let e = &r_err[(j, c)];
                assert_eq!(side.basis.project(e, Subspace::Error, ext), *e);
                let w = &r_pay[(j, c)];
                assert_eq!(side.basis.project(w, Subspace::Payload, ext), *w);
            }
        }
    }

    #[test]
    fn original_round_trip() {
        let params = small_params();
        let mut rng = StdRng::seed_from_u64(6);
        for trial in 0..20 {
            let db = Database::random(&params, &mut rng);
            let target = trial % params.file_count();
            let (bundle, secret) = query_original(&params, target, &mut rng).unwrap();
            assert!(bundle.mask_query.is_none());
            let resp = server_answer(&params, &db, &bundle).unwrap();
            let got = extract_original(&params, &secret, &resp).unwrap();
            assert_eq!(got, db.file(target));
        }
    }

    #[test]
    fn cbcpir_round_trip() {
        let params = small_params();
        let mut rng = StdRng::seed_from_u64(7);
        for trial in 0..20 {
            let db = Database::random(&params, &mut rng);
            let target = trial % params.file_count();
            let (bundle, secret) = query_cbcpir(&params, target, &mut rng).unwrap();
            assert!(bundle.mask_query.is_some());
            let resp = server_answer(&params, &db, &bundle).unwrap();
            let got = extract_cbcpir(&params, &secret, &resp, None).unwrap();
            assert_eq!(got, db.file(target));
        }
    }

    #[test]
    fn round_trips_at_toy32() {
        // Same shape as toy16 but over GF(32), exercising the 5-bit packing.
        let params = SchemeParams::build(2, 5, 4, 2, 12, 6, 40, 5, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(32);
        for trial in 0..3 {
            let db = Database::random(&params, &mut rng);
            let target = 13 * trial % params.file_count();
            let (bundle, secret) = query_original(&params, target, &mut rng).unwrap();
            let resp = server_answer(&params, &db, &bundle).unwrap();
            assert_eq!(
                extract_original(&params, &secret, &resp).unwrap(),
                db.file(target)
            );
            let (bundle, secret) = query_cbcpir(&params, target, &mut rng).unwrap();
            let resp = server_answer(&params, &db, &bundle).unwrap();
            assert_eq!(
                extract_cbcpir(&params, &secret, &resp, None).unwrap(),
                db.file(target)
            );
        }
    }

    #[test]
    fn cbcpir_single_file_database() {
        let params = SchemeParams::build(2, 4, 4, 2, 6, 3, 1, 3, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(8);
        let db = Database::random(&params, &mut rng);
        let (bundle, secret) = query_cbcpir(&params, 0, &mut rng).unwrap();
        let resp = server_answer(&params, &db, &bundle).unwrap();
        let got = extract_cbcpir(&params, &secret, &resp, None).unwrap();
        assert_eq!(got, db.file(0));
    }

    #[test]
    fn zero_database_extracts_zero() {
        let params = small_params();
        let mut rng = StdRng::seed_from_u64(9);
        let db = Database::from_parts(
            MatFq::zeros(params.file_rows(), params.database_width(), params.field()),
            params.file_count(),
            params.payload_width(),
        );
        let (bundle, secret) = query_cbcpir(&params, 2, &mut rng).unwrap();
        let resp = server_answer(&params, &db, &bundle).unwrap();
        let got = extract_cbcpir(&params, &secret, &resp, None).unwrap();
        assert_eq!(
            got,
            MatFq::zeros(params.file_rows(), params.payload_width(), params.field())
        );

        let (bundle, secret) = query_original(&params, 2, &mut rng).unwrap();
        let resp = server_answer(&params, &db, &bundle).unwrap();
        let got = extract_original(&params, &secret, &resp).unwrap();
        assert_eq!(
            got,
            MatFq::zeros(params.file_rows(), params.payload_width(), params.field())
        );
    }

    #[test]
    fn session_reuses_one_mask_answer_for_f_files() {
        let params = SchemeParams::build(2, 4, 4, 2, 6, 3, 5, 3, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(10);
        let db = Database::random(&params, &mut rng);
        let mut session = Session::new(&params, &mut rng).unwrap();
        for (i, target) in [1usize, 4, 2].into_iter().enumerate() {
            let (bundle, secret) = session.query(&params, target, &mut rng).unwrap();
            assert_eq!(
                bundle.mask_query.is_some(),
                i == 0,
                "mask query only on first use"
            );
            let resp = server_answer(&params, &db, &bundle).unwrap();
            session.store_answer(&resp);
            let got = extract_cbcpir(&params, &secret, &resp, session.mask_answer()).unwrap();
            assert_eq!(got, db.file(target));
        }
        // The fourth query exceeds f = 3.
        assert!(matches!(
            session.query(&params, 0, &mut rng),
            Err(SchemeError::SessionExhausted { limit: 3 })
        ));
    }

    #[test]
    fn follow_up_without_mask_answer_fails() {
        let params = SchemeParams::build(2, 4, 4, 2, 6, 3, 5, 3, 2).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        let db = Database::random(&params, &mut rng);
        let mut session = Session::new(&params, &mut rng).unwrap();
        let _ = session.query(&params, 0, &mut rng).unwrap();
        let (bundle2, secret2) = session.query(&params, 1, &mut rng).unwrap();
        assert!(bundle2.mask_query.is_none());
        let resp2 = server_answer(&params, &db, &bundle2).unwrap();
        // Never stored the first answer: extraction cannot proceed.
        assert!(matches!(
            extract_cbcpir(&params, &secret2, &resp2, None),
            Err(SchemeError::MissingMaskAnswer)
        ));
    }

    #[test]
    fn answer_is_additive_in_database() {
        let params = small_params();
        let mut rng = StdRng::seed_from_u64(12);
        let d1 = Database::random(&params, &mut rng);
        let d2 = Database::random(&params, &mut rng);
        let sum = Database::from_parts(
            d1.data().add(d2.data(), params.field()),
            params.file_count(),
            params.payload_width(),
        );
        let (bundle, _) = query_cbcpir(&params, 0, &mut rng).unwrap();
        let r1 = server_answer(&params, &d1, &bundle).unwrap();
        let r2 = server_answer(&params, &d2, &bundle).unwrap();
        let rs = server_answer(&params, &sum, &bundle).unwrap();
        assert_eq!(rs.answer, r1.answer.add(&r2.answer, params.ext()));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let params = small_params();
        let other = SchemeParams::build(2, 4, 4, 2, 6, 3, 4, 3, 1).unwrap(); // m = 4
        let mut rng = StdRng::seed_from_u64(13);
        let db = Database::random(&params, &mut rng);
        let (bundle, _) = query_cbcpir(&other, 0, &mut rng).unwrap();
        assert!(matches!(
            server_answer(&params, &db, &bundle),
            Err(SchemeError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn traffic_matches_closed_formula() {
        // q = 32, s = 32, v = 31, n = 100, k = 50 gives delta = 50; with
        // m = 100, L = 1000, f = 1 the exact rate is 250000/192000000.
        let params = SchemeParams::build(2, 5, 32, 31, 100, 50, 100, 1000, 1).unwrap();
        assert_eq!(params.payload_width(), 50);
        let t = cbcpir_traffic(&params);
        let expected = BigRational::new(BigInt::from(250000u64), BigInt::from(192000000u64));
        assert_eq!(t.rate, expected);
        assert_eq!(t.upload_symbols, 2 * 100 * 50 * 100);
        assert_eq!(t.download_symbols, 2 * 1000 * 100);
        // Bits: symbols * s * log2(q) with log2(32) = 5 exactly.
        assert_eq!(t.upload_bits, (2u128 * 100 * 50 * 100) as f64 * 160.0);
    }
}
