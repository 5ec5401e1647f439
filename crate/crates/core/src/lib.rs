//! Laboratory for the CB-cPIR code-based private information retrieval scheme
//! and its cryptanalysis.
//!
//! The crate implements, at desk scale:
//!
//! - arithmetic in F_q and F_{q^s} with deterministic modulus selection
//!   ([`field`]), random split bases with error/payload projections
//!   ([`basis`]), and random linear codes with information-set interpolation
//!   ([`code`]);
//! - dense matrices with F_q-rank via coordinate expansion ([`matrix`]) and an
//!   incremental append-and-rank echelon engine ([`echelon`]);
//! - the original code-based PIR protocol and its CB-cPIR repair, end to end,
//!   including the mask-reuse session variant ([`scheme`]) and a framed binary
//!   wire format for the exchanged matrices ([`wire`]);
//! - the subquery rank attack the repair was designed to resist, and the
//!   auxiliary-matrix attack that breaks the repair ([`attack`]);
//! - closed-form communication-rate formulas for CB-cPIR, XPIR and SimplePIR,
//!   with CSV table and curve emission ([`rates`]).

pub mod basis;
pub mod code;
pub mod echelon;
pub mod field;
pub mod matrix;

pub use basis::{SplitBasis, Subspace};
pub use code::{CodeError, LinearCode};
pub use echelon::{EchelonAccumulator, EchelonError};
pub use field::{make_fields, ExtFieldSpec, FieldError, FieldSpec, FqElem, FqsElem};
pub use matrix::{kron_vec, mul_fq_fqs, MatFq, MatFqs, MatrixError};

pub mod scheme;
pub mod wire;

pub use scheme::{
    cbcpir_traffic, extract_cbcpir, extract_original, pack_database, query_cbcpir, query_original,
    server_answer, ClientSecret, Database, QueryBundle, Response, SchemeError, SchemeParams,
    Session, TrafficReport,
};
pub use wire::WireError;

pub mod attack;

pub use attack::{
    attack_cost, build_auxiliary, delete_block, isolate_scalar, pair_membership_test, q_binomial,
    recover_index, scalar_batch_test, subquery_attack, subquery_bound_log2, AttackConfig,
    AttackError, AttackReport, AuxiliaryMatrix, CostEstimate, PairOutcome, PairRecord,
    SubqueryOutcome,
};

pub mod rates;

pub use num::{BigRational, BigUint};
pub use rates::{
    emit_tables_and_curves, rate_cbcpir_asymptotic, rate_cbcpir_exact, rate_cbcpir_filesize,
    rate_simplepir, rate_xpir, HintReuse, ParameterSet, RateError, PARAMETER_SETS,
};
