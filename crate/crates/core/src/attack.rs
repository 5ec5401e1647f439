//! The two rank attacks on the code-based PIR schemes, plus the closed-form
//! cost model.
//!
//! **Subquery attack** (breaks the original scheme): deleting the target's
//! delta-row block from the query removes the only payload-carrying rows, so
//! the F_q-rank of the remainder drops to at most s*n - delta, while deleting
//! any other block leaves the rank above the threshold with overwhelming
//! probability. CB-cPIR spreads the payload matrix over every block, which
//! kills this distinguisher.
//!
//! **Auxiliary-matrix attack** (breaks CB-cPIR): every block of Q carries
//! c_b * Delta, with c = e_target + beta. Step 1 absorbs the first
//! rows-per-block rows of enough blocks into an echelon accumulator A whose
//! span covers the whole codeword-plus-error space and the first few Delta
//! rows, so a fresh block row increases the rank of A exactly when it still
//! carries a Delta component. Step 2.1 finds, for a block pair (i, j), the
//! scalar with alpha*c_i + c_j = 0 by appending batches of combined rows
//! alpha_t*Q^i + Q^j and watching for a rank shortfall, then bisecting the
//! hitting batch. Step 2.2 replays the relation against the mask query: the
//! combined mask row keeps its Delta component (rank grows) exactly when the
//! target is one of (i, j), because alpha*beta_i + beta_j = 0 would require
//! c and beta to agree on both blocks. Negative pairs are discarded two at a
//! time; a positive pair is disambiguated by re-pairing with fresh partners.

use std::time::{Duration, Instant};

use num::{BigUint, One, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use thiserror::Error;

use crate::echelon::{fq_rank_incremental, EchelonAccumulator};
use crate::field::{ExtFieldSpec, FqElem, FqsElem};
use crate::matrix::MatFqs;
use crate::scheme::SchemeParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("database too small: need {condition}, have m = {file_count}")]
    DatabaseTooSmall {
        condition: String,
        file_count: usize,
    },
    #[error("rows per block must satisfy 1 <= p < delta (got p = {rows}, delta = {delta})")]
    InvalidRowsPerBlock { rows: usize, delta: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch of {got} candidates exceeds the {max} fresh rows available")]
    BatchTooLarge { max: usize, got: usize },
    #[error("inconsistent hit batch: no candidate verifies (upstream false positive)")]
    InconsistentBatch,
    #[error("field order 2^{log2q:.1} is too large for scalar enumeration")]
    FieldTooLargeForSearch { log2q: f64 },
}

/// Outcome of the subquery-rank distinguisher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubqueryOutcome {
    Identified(usize),
    Undecided,
}

/// Query with block `block` (delta rows) removed.
pub fn delete_block(query: &MatFqs, block: usize, payload_width: usize) -> MatFqs {
    let start = block * payload_width;
    query.delete_row_range(start, start + payload_width)
}

/// The subquery attack of the original scheme: find the unique block whose
/// deletion drops the F_q-rank to s*n - delta or below.
pub fn subquery_attack(
    params: &SchemeParams,
    query: &MatFqs,
) -> Result<SubqueryOutcome, AttackError> {
    let delta = params.payload_width();
    let m = params.file_count();
    let n = params.code_length();
    check_query_shape(params, query)?;
    if (m - 1) * delta < n {
        return Err(AttackError::DatabaseTooSmall {
            condition: format!("(m-1)*delta >= n, i.e. m >= {}", n.div_ceil(delta) + 1),
            file_count: m,
        });
    }
    let threshold = params.ext_degree() * n - delta;
    let mut hits = Vec::new();
    for block in 0..m {
        let sub = delete_block(query, block, delta);
        if fq_rank_incremental(&sub, params.ext()) <= threshold {
            hits.push(block);
        }
    }
    Ok(match hits.as_slice() {
        [only] => SubqueryOutcome::Identified(*only),
        _ => SubqueryOutcome::Undecided,
    })
}

/// Exact q-binomial coefficient: the number of b-dimensional subspaces of
/// F_q^a, via the product formula prod_{i=1..b} (q^(a-b+i) - 1) / (q^i - 1).
/// Every partial product is itself a q-binomial, so the division is exact.
pub fn q_binomial(a: u64, b: u64, q: &BigUint) -> BigUint {
    assert!(a >= b, "q-binomial requires a >= b");
    let mut result = BigUint::one();
    for i in 1..=b {
        let num = q.pow((a - b + i) as u32) - BigUint::one();
        let den = q.pow(i as u32) - BigUint::one();
        result *= num;
        debug_assert!((&result % &den).is_zero());
        result /= den;
    }
    result
}

/// log2 of a positive big integer, good to double precision.
pub fn log2_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero());
    let bits = x.bits();
    if bits <= 53 {
        x.to_f64().unwrap().log2()
    } else {
        let shifted = x >> (bits - 53);
        shifted.to_f64().unwrap().log2() + (bits - 53) as f64
    }
}

/// log2 of the probability bound that a non-target block passes the subquery
/// rank test: [sn-delta choose sn-2delta]_q * q^(-delta^2 (m-1)). Values at or
/// above 0 are vacuous.
pub fn subquery_bound_log2(params: &SchemeParams) -> Result<f64, AttackError> {
    let sn = params.ext_degree() as u64 * params.code_length() as u64;
    let delta = params.payload_width() as u64;
    if sn < 2 * delta {
        return Err(AttackError::ShapeMismatch(format!(
            "bound needs s*n >= 2*delta (s*n = {sn}, delta = {delta})"
        )));
    }
    let q = BigUint::from(params.field().order_u128().ok_or_else(|| {
        AttackError::FieldTooLargeForSearch {
            log2q: params.field().log2_order(),
        }
    })?);
    let binom = q_binomial(sn - delta, sn - 2 * delta, &q);
    let exponent = delta as f64 * delta as f64 * (params.file_count() as f64 - 1.0);
    Ok(log2_biguint(&binom) - exponent * params.field().log2_order())
}

/// Tuning knobs for the auxiliary-matrix attack.
#[derive(Clone, Debug)]
pub struct AttackConfig {
    /// Rows absorbed per block in Step 1 (None: smallest p with m*p > ns - delta).
    pub rows_per_block: Option<usize>,
    /// Worker threads for pair evaluation (0: rayon default).
    pub workers: usize,
    /// Seed for pair ordering. The result is deterministic in the seed,
    /// independent of the worker count.
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            rows_per_block: None,
            workers: 1,
            seed: 0,
        }
    }
}

/// Step-1 state: the echelon accumulator spanning the payload-free space plus
/// the first rows-per-block Delta rows, with per-block absorption counts.
#[derive(Clone, Debug)]
pub struct AuxiliaryMatrix {
    acc: EchelonAccumulator,
    used_rows: Vec<usize>,
    rows_per_block: usize,
    target_rank: usize,
    deficient: bool,
}

impl AuxiliaryMatrix {
    pub fn rank(&self) -> usize {
        self.acc.rank()
    }

    pub fn target_rank(&self) -> usize {
        self.target_rank
    }

    pub fn rows_per_block(&self) -> usize {
        self.rows_per_block
    }

    /// Rank fell short of ns - delta + p even after absorbing every candidate
    /// row; downstream tests may then misfire (handled as anomalies).
    pub fn is_deficient(&self) -> bool {
        self.deficient
    }

    /// Rows of `block` already inside the accumulator.
    pub fn used_rows(&self, block: usize) -> usize {
        self.used_rows[block]
    }
}

fn check_query_shape(params: &SchemeParams, query: &MatFqs) -> Result<(), AttackError> {
    let rows = params.file_count() * params.payload_width();
    if query.rows() != rows || query.cols() != params.code_length() {
        return Err(AttackError::ShapeMismatch(format!(
            "query is {}x{}, expected {}x{}",
            query.rows(),
            query.cols(),
            rows,
            params.code_length()
        )));
    }
    Ok(())
}

fn expand_row(row: &[FqsElem], ext: &ExtFieldSpec) -> Vec<FqElem> {
    let mut out = Vec::with_capacity(row.len() * ext.ext_degree());
    for e in row {
        out.extend_from_slice(e.coeffs());
    }
    out
}

/// Step 1: absorb `rows_per_block` leading rows from consecutive blocks until
/// ns - delta + p rows are in, then keep absorbing (still only leading rows)
/// while the rank is short of the same bound.
pub fn build_auxiliary(
    params: &SchemeParams,
    query: &MatFqs,
    rows_per_block: usize,
) -> Result<AuxiliaryMatrix, AttackError> {
    let delta = params.payload_width();
    let m = params.file_count();
    let ns = params.ext_degree() * params.code_length();
    check_query_shape(params, query)?;
    if rows_per_block == 0 || rows_per_block >= delta {
        return Err(AttackError::InvalidRowsPerBlock {
            rows: rows_per_block,
            delta,
        });
    }
    if m * rows_per_block <= ns - delta {
        return Err(AttackError::DatabaseTooSmall {
            condition: format!(
                "m * p > ns - delta = {} at p = {rows_per_block}",
                ns - delta
            ),
            file_count: m,
        });
    }
    let target_rank = ns - delta + rows_per_block;
    let ext = params.ext();
    let mut acc = EchelonAccumulator::new(params.field(), ns);
    let mut used_rows = vec![0usize; m];
    let mut absorbed = 0usize;
    'outer: for block in 0..m {
        for r in 0..rows_per_block {
            // Past the row quota, keep going only while rank-deficient.
            if absorbed >= target_rank && acc.rank() >= target_rank {
                break 'outer;
            }
            let row = expand_row(&query.row(block * delta + r), ext);
            acc.append_row(&row).expect("width fixed at ns");
            used_rows[block] = r + 1;
            absorbed += 1;
        }
    }
    let deficient = acc.rank() < target_rank;
    Ok(AuxiliaryMatrix {
        acc,
        used_rows,
        rows_per_block,
        target_rank,
        deficient,
    })
}

/// One evaluated batch of scalar candidates for a block pair, with the
/// expanded combination rows cached for the bisection step.
#[derive(Clone, Debug)]
pub struct ScalarBatch {
    candidates: Vec<FqElem>,
    rows: Vec<Vec<FqElem>>,
    pub rank_increase: usize,
    pub hit: bool,
}

/// Step 2.1, batched test: append the combination rows
/// alpha_t * Q^i_[r_t] + Q^j_[r_t] (one fresh row index per candidate) to a
/// fork of A. Payload-carrying rows each raise the rank by one; a shortfall
/// means some candidate satisfied alpha*c_i + c_j = 0.
pub fn scalar_batch_test(
    aux: &AuxiliaryMatrix,
    params: &SchemeParams,
    query: &MatFqs,
    block_i: usize,
    block_j: usize,
    candidates: &[FqElem],
) -> Result<ScalarBatch, AttackError> {
    let delta = params.payload_width();
    let ext = params.ext();
    // The payload matrix is shared across blocks, so the directions of its
    // first rows_per_block rows sit inside A no matter which blocks supplied
    // them; candidate rows must start past that for EVERY block, including
    // blocks never absorbed.
    let start = aux.rows_per_block();
    let available = delta.saturating_sub(start);
    if candidates.len() > available {
        return Err(AttackError::BatchTooLarge {
            max: available,
            got: candidates.len(),
        });
    }
    let mut rows = Vec::with_capacity(candidates.len());
    for (t, alpha) in candidates.iter().enumerate() {
        let r = start + t;
        let ri = query.row(block_i * delta + r);
        let rj = query.row(block_j * delta + r);
        let combined: Vec<FqsElem> = ri
            .iter()
            .zip(rj)
            .map(|(a, b)| ext.add(&ext.scale(a, alpha), b))
            .collect();
        rows.push(expand_row(&combined, ext));
    }
    let mut fork = aux.acc.clone();
    let mut rank_increase = 0;
    for row in &rows {
        rank_increase += fork.append_row(row).expect("width fixed at ns");
    }
    Ok(ScalarBatch {
        candidates: candidates.to_vec(),
        rows,
        rank_increase,
        hit: rank_increase < candidates.len(),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Bisection rank evaluations; at most ceil(log2(batch size)).
    pub halving_calls: u32,
    /// Final single-row verification when the bisection path never directly
    /// witnessed a shortfall (0 or 1).
    pub verify_calls: u32,
}

/// Step 2.1, bisection: isolate the satisfying scalar inside a hitting batch.
/// Each rank evaluation appends the first half of the remaining candidate
/// rows to a fresh fork of A; a shortfall keeps the first half, a full
/// increase keeps the second.
pub fn isolate_scalar(
    aux: &AuxiliaryMatrix,
    batch: &ScalarBatch,
) -> Result<(FqElem, SearchStats), AttackError> {
    if !batch.hit {
        return Err(AttackError::InconsistentBatch);
    }
    let mut lo = 0usize;
    let mut hi = batch.candidates.len();
    let mut stats = SearchStats::default();
    let mut witnessed = false;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let mut fork = aux.acc.clone();
        let mut inc = 0;
        for row in &batch.rows[lo..mid] {
            inc += fork.append_row(row).expect("width fixed at ns");
        }
        stats.halving_calls += 1;
        if inc < mid - lo {
            hi = mid;
            witnessed = true;
        } else {
            lo = mid;
            witnessed = false;
        }
    }
    debug_assert!(
        stats.halving_calls <= (usize::BITS - (batch.candidates.len() - 1).leading_zeros()).max(0),
        "bisection exceeded ceil(log2(batch size)) rank evaluations"
    );
    if batch.candidates.len() > 1 && !witnessed {
        // The last elimination step was by exclusion; spend one rank
        // evaluation to verify the survivor is genuinely payload-free.
        let mut fork = aux.acc.clone();
        let inc = fork.append_row(&batch.rows[lo]).expect("width fixed at ns");
        stats.verify_calls = 1;
        if inc != 0 {
            return Err(AttackError::InconsistentBatch);
        }
    }
    Ok((batch.candidates[lo].clone(), stats))
}

/// Step 2.2: replay the found relation against the mask query. Appending
/// alpha * Qb^i_[r] + Qb^j_[r] to a fork of A_beta raises the rank exactly
/// when alpha*beta_i + beta_j != 0, which holds iff the target is i or j.
pub fn pair_membership_test(
    aux_mask: &AuxiliaryMatrix,
    params: &SchemeParams,
    mask_query: &MatFqs,
    alpha: &FqElem,
    block_i: usize,
    block_j: usize,
) -> Result<bool, AttackError> {
    let delta = params.payload_width();
    let ext = params.ext();
    // First row index whose payload direction is guaranteed fresh (see
    // scalar_batch_test).
    let r = aux_mask.rows_per_block();
    if r >= delta {
        return Err(AttackError::BatchTooLarge { max: 0, got: 1 });
    }
    let ri = mask_query.row(block_i * delta + r);
    let rj = mask_query.row(block_j * delta + r);
    let combined: Vec<FqsElem> = ri
        .iter()
        .zip(rj)
        .map(|(a, b)| ext.add(&ext.scale(a, alpha), b))
        .collect();
    let mut fork = aux_mask.acc.clone();
    let inc = fork
        .append_row(&expand_row(&combined, ext))
        .expect("width fixed at ns");
    Ok(inc == 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairOutcome {
    /// Rank grew: the target is one of the two blocks.
    Positive,
    /// Rank did not grow: neither block is the target.
    Negative,
    /// A step misfired (no scalar found, inconsistent batch, no fresh rows);
    /// the pair stays undecided.
    Anomalous(String),
}

#[derive(Clone, Debug)]
pub struct PairRecord {
    pub block_i: usize,
    pub block_j: usize,
    pub batches: u32,
    pub halving_calls: u32,
    pub verify_calls: u32,
    pub membership_tests: u32,
    pub outcome: PairOutcome,
}

impl PairRecord {
    pub fn rank_ops(&self) -> u64 {
        self.batches as u64
            + self.halving_calls as u64
            + self.verify_calls as u64
            + self.membership_tests as u64
    }
}

/// Full evidence trail of one attack run.
#[derive(Clone, Debug)]
pub struct AttackReport {
    /// The recovered target index, or None when the run ended undecided.
    pub recovered: Option<usize>,
    pub undecided_reason: Option<String>,
    pub rows_per_block: usize,
    pub seed: u64,
    pub aux_rank: usize,
    pub aux_mask_rank: usize,
    pub aux_target_rank: usize,
    pub aux_deficient: bool,
    pub pair_log: Vec<PairRecord>,
    /// Total fork-append-and-compare rank evaluations across all pairs;
    /// always equals the sum over the pair log.
    pub rank_ops: u64,
    pub elapsed: Duration,
}

impl AttackReport {
    pub fn rank_ops_from_log(&self) -> u64 {
        self.pair_log.iter().map(|p| p.rank_ops()).sum()
    }

    /// Flat key=value rendering consumed by the CLI and the acceptance tests.
    /// Wall time is deliberately left out so that identical runs serialize to
    /// identical bytes; callers report `elapsed` separately if they want it.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        match self.recovered {
            Some(idx) => out.push_str(&format!("recovered_index={idx}\n")),
            None => out.push_str("recovered_index=undecided\n"),
        }
        if let Some(reason) = &self.undecided_reason {
            out.push_str(&format!("undecided_reason={reason}\n"));
        }
        out.push_str(&format!("rows_per_block={}\n", self.rows_per_block));
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!("aux_rank={}\n", self.aux_rank));
        out.push_str(&format!("aux_mask_rank={}\n", self.aux_mask_rank));
        out.push_str(&format!("aux_target_rank={}\n", self.aux_target_rank));
        out.push_str(&format!("aux_deficient={}\n", self.aux_deficient));
        out.push_str(&format!("pairs_tested={}\n", self.pair_log.len()));
        out.push_str(&format!("rank_ops={}\n", self.rank_ops));
        for (n, p) in self.pair_log.iter().enumerate() {
            let outcome = match &p.outcome {
                PairOutcome::Positive => "positive".to_string(),
                PairOutcome::Negative => "negative".to_string(),
                PairOutcome::Anomalous(r) => format!("anomalous({r})"),
            };
            out.push_str(&format!(
                "pair.{n}=i:{} j:{} batches:{} halving:{} verify:{} membership:{} outcome:{}\n",
                p.block_i,
                p.block_j,
                p.batches,
                p.halving_calls,
                p.verify_calls,
                p.membership_tests,
                outcome
            ));
        }
        out
    }
}

struct PairContext<'a> {
    params: &'a SchemeParams,
    query: &'a MatFqs,
    mask_query: &'a MatFqs,
    aux: &'a AuxiliaryMatrix,
    aux_mask: &'a AuxiliaryMatrix,
    field_order: u64,
}

enum PairResult {
    Negative,
    Positive,
    Anomalous,
}

/// Run Steps 2.1 + 2.2 for one block pair. Deterministic: scalars are
/// enumerated in canonical index order and rows are fixed by the auxiliary
/// state, so the outcome depends only on the queries.
fn evaluate_pair(ctx: &PairContext, block_i: usize, block_j: usize) -> (PairRecord, PairResult) {
    let mut record = PairRecord {
        block_i,
        block_j,
        batches: 0,
        halving_calls: 0,
        verify_calls: 0,
        membership_tests: 0,
        outcome: PairOutcome::Anomalous(String::new()),
    };
    let delta = ctx.params.payload_width();
    let available = delta.saturating_sub(ctx.aux.rows_per_block());
    if available == 0 {
        record.outcome = PairOutcome::Anomalous("no fresh rows in pair blocks".into());
        return (record, PairResult::Anomalous);
    }
    let field = ctx.params.field();
    let mut alpha_found = None;
    let mut idx = 1u64; // enumerate F_q^x: the satisfying scalar is never 0
    while idx < ctx.field_order {
        let batch_len = available.min((ctx.field_order - idx) as usize);
        let candidates: Vec<FqElem> = (idx..idx + batch_len as u64)
            .map(|v| field.from_index(v))
            .collect();
        idx += batch_len as u64;
        let batch = match scalar_batch_test(
            ctx.aux,
            ctx.params,
            ctx.query,
            block_i,
            block_j,
            &candidates,
        ) {
            Ok(b) => b,
            Err(_) => {
                record.outcome = PairOutcome::Anomalous("batch construction failed".into());
                return (record, PairResult::Anomalous);
            }
        };
        record.batches += 1;
        if batch.hit {
            match isolate_scalar(ctx.aux, &batch) {
                Ok((alpha, stats)) => {
                    record.halving_calls += stats.halving_calls;
                    record.verify_calls += stats.verify_calls;
                    alpha_found = Some(alpha);
                    break;
                }
                Err(_) => {
                    record.halving_calls += 1;
                    record.outcome = PairOutcome::Anomalous("inconsistent hit batch".into());
                    return (record, PairResult::Anomalous);
                }
            }
        }
    }
    let Some(alpha) = alpha_found else {
        record.outcome = PairOutcome::Anomalous("no scalar satisfied the relation".into());
        return (record, PairResult::Anomalous);
    };
    match pair_membership_test(
        ctx.aux_mask,
        ctx.params,
        ctx.mask_query,
        &alpha,
        block_i,
        block_j,
    ) {
        Ok(grew) => {
            record.membership_tests = 1;
            if grew {
                record.outcome = PairOutcome::Positive;
                (record, PairResult::Positive)
            } else {
                record.outcome = PairOutcome::Negative;
                (record, PairResult::Negative)
            }
        }
        Err(_) => {
            record.outcome = PairOutcome::Anomalous("membership row unavailable".into());
            (record, PairResult::Anomalous)
        }
    }
}

/// The full attack: recover the requested index from a CB-cPIR query pair.
///
/// Pairs within one sweep are evaluated in parallel over forked accumulators;
/// the candidate-set reduction is sequential. Results are deterministic for a
/// fixed seed regardless of the worker count. Failures are reported as
/// undecided, never as a silently wrong index.
pub fn recover_index(
    params: &SchemeParams,
    query: &MatFqs,
    mask_query: &MatFqs,
    config: &AttackConfig,
) -> Result<AttackReport, AttackError> {
    let start_time = Instant::now();
    let delta = params.payload_width();
    let m = params.file_count();
    let ns = params.ext_degree() * params.code_length();
    let field_order = params
        .field()
        .order_u128()
        .filter(|&q| q <= 1 << 20)
        .ok_or(AttackError::FieldTooLargeForSearch {
            log2q: params.field().log2_order(),
        })? as u64;

    let rows_per_block = match config.rows_per_block {
        Some(p) => {
            if p == 0 || p >= delta {
                return Err(AttackError::InvalidRowsPerBlock { rows: p, delta });
            }
            p
        }
        None => {
            // Smallest p whose m*p rows can actually reach rank ns-delta+p:
            // p*(m-1) >= ns-delta. For large databases this is 1.
            if m < 2 {
                return Err(AttackError::DatabaseTooSmall {
                    condition: "at least two blocks".into(),
                    file_count: m,
                });
            }
            let p = ((ns - delta).div_ceil(m - 1)).max(1);
            if p >= delta {
                return Err(AttackError::DatabaseTooSmall {
                    condition: format!("(delta-1)*(m-1) >= ns - delta = {}", ns - delta),
                    file_count: m,
                });
            }
            p
        }
    };

    let aux = build_auxiliary(params, query, rows_per_block)?;
    let aux_mask = build_auxiliary(params, mask_query, rows_per_block)?;
    let ctx = PairContext {
        params,
        query,
        mask_query,
        aux: &aux,
        aux_mask: &aux_mask,
        field_order,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("thread pool construction");

    let mut rng = StdRng::seed_from_u64(config.seed);
    let mut alive = vec![true; m];
    let mut alive_count = m;
    let mut removed_order: Vec<usize> = Vec::new();
    let mut pair_log: Vec<PairRecord> = Vec::new();
    let mut recovered: Option<usize> = None;
    let mut undecided_reason: Option<String> = None;
    let mut stalls = 0u32;

    let finish =
        |recovered: Option<usize>, undecided_reason: Option<String>, pair_log: Vec<PairRecord>| {
            let rank_ops = pair_log.iter().map(|p| p.rank_ops()).sum();
            AttackReport {
                recovered,
                undecided_reason,
                rows_per_block,
                seed: config.seed,
                aux_rank: aux.rank(),
                aux_mask_rank: aux_mask.rank(),
                aux_target_rank: aux.target_rank(),
                aux_deficient: aux.is_deficient() || aux_mask.is_deficient(),
                pair_log,
                rank_ops,
                elapsed: start_time.elapsed(),
            }
        };

    // Disambiguate a positive pair (target is i or j): re-pair i with fresh
    // partners; past that, compare against already-excluded references.
    let resolve_positive = |block_i: usize,
                            block_j: usize,
                            alive: &[bool],
                            removed_order: &[usize],
                            rng: &mut StdRng,
                            pair_log: &mut Vec<PairRecord>|
     -> Option<usize> {
        let mut partners: Vec<usize> = (0..m)
            .filter(|&t| alive[t] && t != block_i && t != block_j)
            .collect();
        partners.shuffle(rng);
        for j2 in partners {
            let (record, result) = evaluate_pair(&ctx, block_i, j2);
            pair_log.push(record);
            match result {
                PairResult::Positive => return Some(block_i),
                PairResult::Negative => return Some(block_j),
                PairResult::Anomalous => continue,
            }
        }
        // No fresh partner settled it: vote with two excluded references.
        let mut votes = Vec::new();
        for &r in removed_order {
            if votes.len() == 2 {
                break;
            }
            let (record, result) = evaluate_pair(&ctx, block_i, r);
            pair_log.push(record);
            match result {
                PairResult::Positive => votes.push(block_i),
                PairResult::Negative => votes.push(block_j),
                PairResult::Anomalous => continue,
            }
        }
        match votes.as_slice() {
            [a, b] if a == b => Some(*a),
            _ => None,
        }
    };

    let max_sweeps = 2 * m + 4;
    for _sweep in 0..max_sweeps {
        if recovered.is_some() || alive_count <= 1 {
            break;
        }
        let mut order: Vec<usize> = (0..m).filter(|&t| alive[t]).collect();
        order.shuffle(&mut rng);
        let pairs: Vec<(usize, usize)> = order.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        if pairs.is_empty() {
            break;
        }
        let evals: Vec<(PairRecord, PairResult)> = pool.install(|| {
            pairs
                .par_iter()
                .map(|&(i, j)| evaluate_pair(&ctx, i, j))
                .collect()
        });

        let mut progressed = false;
        let mut positives: Vec<(usize, usize)> = Vec::new();
        for (record, result) in evals {
            let (i, j) = (record.block_i, record.block_j);
            pair_log.push(record);
            match result {
                PairResult::Negative => {
                    alive[i] = false;
                    alive[j] = false;
                    alive_count -= 2;
                    removed_order.push(i);
                    removed_order.push(j);
                    progressed = true;
                }
                PairResult::Positive => positives.push((i, j)),
                PairResult::Anomalous => {}
            }
        }
        for (i, j) in positives {
            progressed = true;
            if let Some(idx) =
                resolve_positive(i, j, &alive, &removed_order, &mut rng, &mut pair_log)
            {
                recovered = Some(idx);
                break;
            }
            // Unresolvable positive (anomalies or no usable references):
            // leave both blocks alive and let a later sweep re-pair them.
            failure_note = Some(format!("positive pair ({i},{j}) could not be disambiguated"));
        }
        if recovered.is_some() {
            break;
        }
        if !progressed {
            stalls += 1;
            if stalls >= 3 {
                failure_note = Some("no progress across consecutive sweeps".into());
                break;
            }
        } else {
            stalls = 0;
        }
    }

    if recovered.is_none() {
        if alive_count == 1 {
            let last = (0..m).find(|&t| alive[t]).expect("count says one alive");
            // Confirm the survivor against excluded references before
            // answering; a refuted survivor means an earlier step lied.
            let mut confirmed = true;
            for &r in removed_order.iter().take(2) {
                let (record, result) = evaluate_pair(&ctx, last, r);
                pair_log.push(record);
                match result {
                    PairResult::Positive => break,
                    PairResult::Negative => {
                        confirmed = false;
                        break;
                    }
                    PairResult::Anomalous => continue,
                }
            }
            if confirmed {
                recovered = Some(last);
            } else {
                undecided_reason = Some("surviving candidate failed confirmation".into());
            }
        } else if alive_count == 0 {
            undecided_reason = Some("all candidates were excluded".into());
        } else {
            undecided_reason =
                Some(failure_note.unwrap_or_else(|| "sweep limit reached".into()));
        }
    }

    Ok(finish(recovered, undecided_reason, pair_log))
}

/// Closed-form cost of the attack: per pair at most ceil(q/(delta-1)) batch
/// rank computations plus ceil(log2 delta) bisection steps plus one
/// membership test, each on a matrix of size at most ns x ns, over m/2 pairs.
#[derive(Clone, Debug)]
pub struct CostEstimate {
    /// ceil(q / (delta - 1)): scalar batches per pair.
    pub batches_per_pair: BigUint,
    pub log2_batches: f64,
    /// ceil(m/2) * (batches + ceil(log2 delta) + 1) rank computations.
    pub rank_matrix_count: BigUint,
    /// rank_matrix_count * (ns)^3 base-field operations.
    pub fq_ops: BigUint,
    pub log2_fq_ops: f64,
}

pub fn attack_cost(q: &BigUint, delta: usize, n: usize, s: usize, m: usize) -> CostEstimate {
    assert!(delta >= 2, "cost model needs delta >= 2");
    let dm1 = BigUint::from(delta as u64 - 1);
    let batches_per_pair = (q + &dm1 - BigUint::one()) / &dm1;
    let log2_delta = (usize::BITS - (delta - 1).leading_zeros()) as u64;
    let rank_matrix_count = BigUint::from(m.div_ceil(2) as u64)
        * (&batches_per_pair + BigUint::from(log2_delta) + BigUint::one());
    let ns = BigUint::from((n * s) as u64);
    let fq_ops = &rank_matrix_count * (&ns * &ns * &ns);
    CostEstimate {
        log2_batches: log2_biguint(&batches_per_pair),
        log2_fq_ops: log2_biguint(&fq_ops),
        batches_per_pair,
        rank_matrix_count,
        fq_ops,
    }
}
