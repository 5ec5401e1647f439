//! Random [n, k] linear codes over F_{q^s} with a fixed information set.
//!
//! The schemes never decode: codewords are reconstructed from their values on
//! the information set by interpolation through the precomputed inverse of the
//! corresponding generator columns.

use rand::Rng;
use thiserror::Error;

use crate::field::{ExtFieldSpec, FqsElem};
use crate::matrix::MatFqs;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("code dimensions must satisfy 1 <= k < n (got n = {n}, k = {k})")]
    InvalidDims { n: usize, k: usize },
    #[error("vector length {got} does not match expected {want}")]
    LengthMismatch { want: usize, got: usize },
    #[error("generator matrix is rank deficient")]
    RankDeficient,
    #[error("selected information-set columns are singular")]
    SingularInfoSet,
}

#[derive(Clone, Debug)]
pub struct LinearCode {
    length: usize,
    dim: usize,
    generator: MatFqs,
    /// Sorted k-subset of column indices whose generator columns are
    /// invertible.
    info_set: Vec<usize>,
    /// Inverse of the k x k generator submatrix at the information set.
    info_inverse: MatFqs,
}

impl LinearCode {
    /// Sample a uniformly random full-rank generator matrix and a uniformly
    /// random valid information set, resampling on the (rare) degenerate
    /// draws.
    pub fn sample<R: Rng + ?Sized>(
        ext: &ExtFieldSpec,
        length: usize,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self, CodeError> {
        if dim == 0 || dim >= length {
            return Err(CodeError::InvalidDims { n: length, k: dim });
        }
        loop {
            let generator = MatFqs::from_fn(dim, length, |_, _| ext.sample(rng));
            if generator.rank(ext) < dim {
                continue;
            }
            match Self::with_random_info_set(ext, generator, rng) {
                Ok(code) => return Ok(code),
                Err(CodeError::SingularInfoSet) => continue,
                Err(e) => return Err(e),
            }
        }
    }

    /// Attach a random information set to a full-rank generator.
    fn with_random_info_set<R: Rng + ?Sized>(
        ext: &ExtFieldSpec,
        generator: MatFqs,
        rng: &mut R,
    ) -> Result<Self, CodeError> {
        let (dim, length) = (generator.rows(), generator.cols());
        // A full-rank generator always admits an information set; a bounded
        // number of uniform draws finds one with overwhelming probability.
        for _ in 0..1000 {
            let mut idx = rand::seq::index::sample(rng, length, dim).into_vec();
            idx.sort_unstable();
            if let Ok(code) = Self::from_generator(ext, generator.clone(), idx) {
                return Ok(code);
            }
        }
        Err(CodeError::SingularInfoSet)
    }

    /// Build a code from an explicit generator and information set.
    pub fn from_generator(
        ext: &ExtFieldSpec,
        generator: MatFqs,
        info_set: Vec<usize>,
    ) -> Result<Self, CodeError> {
        let (dim, length) = (generator.rows(), generator.cols());
        if dim == 0 || dim >= length {
            return Err(CodeError::InvalidDims { n: length, k: dim });
        }
        if info_set.len() != dim || info_set.iter().any(|&c| c >= length) {
            return Err(CodeError::LengthMismatch {
                want: dim,
                got: info_set.len(),
            });
        }
        let submatrix = generator.select_cols(&info_set);
        let info_inverse = submatrix
            .inverse(ext)
            .map_err(|_| CodeError::SingularInfoSet)?;
        Ok(LinearCode {
            length,
            dim,
            generator,
            info_set,
            info_inverse,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &MatFqs {
        &self.generator
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    /// Positions outside the information set, ascending.
    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.length - self.dim);
        let mut it = self.info_set.iter().peekable();
        for c in 0..self.length {
            if it.peek() == Some(&&c) {
                it.next();
            } else {
                out.push(c);
            }
        }
        out
    }

    /// msg * G.
    pub fn encode(&self, msg: &[FqsElem], ext: &ExtFieldSpec) -> Result<Vec<FqsElem>, CodeError> {
        if msg.len() != self.dim {
            return Err(CodeError::LengthMismatch {
                want: self.dim,
                got: msg.len(),
            });
        }
        Ok(self.generator.vec_mul(msg, ext))
    }

    /// The unique codeword agreeing with `vals` on the information set,
    /// computed as (vals * G_I^{-1}) * G.
    pub fn codeword_from_info(
        &self,
        vals: &[FqsElem],
        ext: &ExtFieldSpec,
    ) -> Result<Vec<FqsElem>, CodeError> {
        if vals.len() != self.dim {
            return Err(CodeError::LengthMismatch {
                want: self.dim,
                got: vals.len(),
            });
        }
        let msg = self.info_inverse.vec_mul(vals, ext);
        self.encode(&msg, ext)
    }

    /// Membership test via augmented rank: `word` is a codeword iff stacking
    /// it under G leaves the rank at k.
    pub fn contains(&self, word: &[FqsElem], ext: &ExtFieldSpec) -> bool {
        if word.len() != self.length {
            return false;
        }
        let stacked = MatFqs::vstack(&[
            self.generator.clone(),
            MatFqs::from_data(1, self.length, word.to_vec()),
        ])
        .expect("widths match");
        stacked.rank(ext) == self.dim
    }
}
