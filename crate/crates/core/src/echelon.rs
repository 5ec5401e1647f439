//! Incremental append-and-rank state over F_q.
//!
//! The accumulator absorbs rows one at a time and reports, per append, whether
//! the F_q-rank grew. The rank attack asks this question thousands of times on
//! forked copies, so the state is kept in reduced echelon form over the prime
//! subfield: an F_q row of width w is stored as its e coordinate rows
//! (x^j * row for j < e, written in F_p coordinates of width w*e). The F_p-span
//! of those families is exactly the F_q-span, so every F_q append moves the
//! prime rank by 0 or e, never anything in between.
//!
//! Characteristic 2 packs coordinate rows into machine words and eliminates
//! with word-wide XOR; other characteristics keep residue vectors.

use thiserror::Error;

use crate::field::{self, ExtFieldSpec, FieldSpec, FqElem, FqsElem};
use crate::matrix::MatFq;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EchelonError {
    #[error("row width {got} does not match accumulator width {want}")]
    WidthMismatch { want: usize, got: usize },
}

#[derive(Clone, Debug)]
pub struct EchelonAccumulator {
    spec: FieldSpec,
    width: usize,
    backend: Backend,
}

#[derive(Clone, Debug)]
enum Backend {
    Binary(BinaryEchelon),
    Prime(PrimeEchelon),
}

/// Reduced echelon basis over F_2, bit-packed.
#[derive(Clone, Debug)]
struct BinaryEchelon {
    bit_width: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
    /// Pivot bit of rows[i]; strictly increasing.
    pivots: Vec<usize>,
}

/// Reduced echelon basis over F_p, residue vectors.
#[derive(Clone, Debug)]
struct PrimeEchelon {
    p: u64,
    width: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl EchelonAccumulator {
    /// Empty accumulator for F_q rows of the given width.
    pub fn new(spec: &FieldSpec, width: usize) -> Self {
        let e = spec.degree();
        let backend = if spec.characteristic() == 2 {
            let bit_width = width * e;
            Backend::Binary(BinaryEchelon {
                bit_width,
                words: bit_width.div_ceil(64),
                rows: Vec::new(),
                pivots: Vec::new(),
            })
        } else {
            Backend::Prime(PrimeEchelon {
                p: spec.characteristic(),
                width: width * e,
                rows: Vec::new(),
                pivots: Vec::new(),
            })
        };
        EchelonAccumulator {
            spec: spec.clone(),
            width,
            backend,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Current F_q-rank of everything absorbed so far.
    pub fn rank(&self) -> usize {
        let prime_rank = match &self.backend {
            Backend::Binary(b) => b.rows.len(),
            Backend::Prime(b) => b.rows.len(),
        };
        debug_assert_eq!(prime_rank % self.spec.degree(), 0);
        prime_rank / self.spec.degree()
    }

    /// Absorb one F_q row; returns the rank increase (0 or 1).
    pub fn append_row(&mut self, row: &[FqElem]) -> Result<usize, EchelonError> {
        if row.len() != self.width {
            return Err(EchelonError::WidthMismatch {
                want: self.width,
                got: row.len(),
            });
        }
        let e = self.spec.degree();
        let mut grew = 0usize;
        // One coordinate row per plane: coords(x^j * row) for j = 0..e.
        let mut plane: Vec<FqElem> = row.to_vec();
        for j in 0..e {
            if j > 0 {
                for v in plane.iter_mut() {
                    *v = self.spec.mul_by_x(v);
                }
            }
            grew += match &mut self.backend {
                Backend::Binary(b) => b.absorb(&self.spec, &plane),
                Backend::Prime(b) => b.absorb(&self.spec, &plane),
            };
        }
        debug_assert!(
            grew == 0 || grew == e,
            "F_q append must move prime rank by 0 or e"
        );
        Ok(grew / e)
    }

    /// Absorb every row of an F_q matrix; returns the total rank increase.
    pub fn append_rows(&mut self, m: &MatFq) -> Result<usize, EchelonError> {
        let mut total = 0;
        for r in 0..m.rows() {
            total += self.append_row(m.row(r))?;
        }
        Ok(total)
    }

    /// Absorb an F_{q^s} row by first expanding it into base-field
    /// coordinates (width must equal row length * s).
    pub fn append_fqs_row(
        &mut self,
        row: &[FqsElem],
        ext: &ExtFieldSpec,
    ) -> Result<usize, EchelonError> {
        let mut expanded = Vec::with_capacity(row.len() * ext.ext_degree());
        for entry in row {
            expanded.extend_from_slice(entry.coeffs());
        }
        self.append_row(&expanded)
    }
}

impl BinaryEchelon {
    fn absorb(&mut self, spec: &FieldSpec, plane: &[FqElem]) -> usize {
        let mut row = vec![0u64; self.words];
        let e = spec.degree();
        for (i, v) in plane.iter().enumerate() {
            for (j, c) in spec.coeffs(v).into_iter().enumerate() {
                if c != 0 {
                    let bit = i * e + j;
                    row[bit / 64] |= 1 << (bit % 64);
                }
            }
        }
        // Forward reduction against the existing basis.
        for (idx, &piv) in self.pivots.iter().enumerate() {
            if row[piv / 64] >> (piv % 64) & 1 == 1 {
                xor_into(&mut row, &self.rows[idx]);
            }
        }
        let Some(pivot) = first_set_bit(&row) else {
            return 0;
        };
        debug_assert!(pivot < self.bit_width);
        // Clear the new pivot column from the existing basis.
        for r in self.rows.iter_mut() {
            if r[pivot / 64] >> (pivot % 64) & 1 == 1 {
                xor_into(r, &row);
            }
        }
        let pos = self.pivots.partition_point(|&p| p < pivot);
        self.pivots.insert(pos, pivot);
        self.rows.insert(pos, row);
        1
    }
}

impl PrimeEchelon {
    fn absorb(&mut self, spec: &FieldSpec, plane: &[FqElem]) -> usize {
        let p = self.p;
        let mut row: Vec<u64> = Vec::with_capacity(self.width);
        for v in plane {
            row.extend(spec.coeffs(v));
        }
        for (idx, &piv) in self.pivots.iter().enumerate() {
            let factor = row[piv];
            if factor != 0 {
                sub_scaled(&mut row, &self.rows[idx], factor, p);
            }
        }
        let Some(pivot) = row.iter().position(|&v| v != 0) else {
            return 0;
        };
        let inv = field::invmod(row[pivot], p).expect("pivot entry is nonzero");
        for v in row.iter_mut() {
            *v = (*v as u128 * inv as u128 % p as u128) as u64;
        }
        for r in self.rows.iter_mut() {
            let factor = r[pivot];
            if factor != 0 {
                sub_scaled(r, &row, factor, p);
            }
        }
        let pos = self.pivots.partition_point(|&q| q < pivot);
        self.pivots.insert(pos, pivot);
        self.rows.insert(pos, row);
        1
    }
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

#[inline]
fn first_set_bit(row: &[u64]) -> Option<usize> {
    for (w, &word) in row.iter().enumerate() {
        if word != 0 {
            return Some(w * 64 + word.trailing_zeros() as usize);
        }
    }
    None
}

#[inline]
fn sub_scaled(dst: &mut [u64], src: &[u64], factor: u64, p: u64) {
    for (d, &s) in dst.iter_mut().zip(src) {
        let sub = (factor as u128 * s as u128 % p as u128) as u64;
        *d = if *d >= sub { *d - sub } else { *d + (p - sub) };
    }
}

/// F_q-rank of an extension-field matrix through the accumulator. This is the
/// fast path used by the attacks; `MatFqs::rank_fq` is the independent
/// one-shot route.
pub fn fq_rank_incremental(m: &crate::matrix::MatFqs, ext: &ExtFieldSpec) -> usize {
    let mut acc = EchelonAccumulator::new(ext.base(), m.cols() * ext.ext_degree());
    for r in 0..m.rows() {
        acc.append_fqs_row(m.row(r), ext)
            .expect("width fixed by construction");
    }
    acc.rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_fields;
    use crate::matrix::MatFqs;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn independent_rows_each_raise_rank() {
        let (f, _) = make_fields(2, 4, 1).unwrap();
        let mut acc = EchelonAccumulator::new(&f, 5);
        let m = MatFq::identity(5, &f);
        for r in 0..5 {
            assert_eq!(acc.append_row(m.row(r)).unwrap(), 1);
            assert_eq!(acc.rank(), r + 1);
        }
        // A row already in the span contributes nothing.
        let mut row = m.row(0).to_vec();
        row[1] = f.one();
        assert_eq!(acc.append_row(&row).unwrap(), 0);
        assert_eq!(acc.rank(), 5);
    }

    #[test]
    fn width_mismatch_is_reported() {
        let (f, _) = make_fields(2, 1, 1).unwrap();
        let mut acc = EchelonAccumulator::new(&f, 4);
        let row = vec![f.one(); 3];
        assert_eq!(
            acc.append_row(&row),
            Err(EchelonError::WidthMismatch { want: 4, got: 3 })
        );
    }

    #[test]
    fn incremental_rank_matches_batch_rank() {
        // Cross-check the packed incremental engine against the generic
        // one-shot elimination, over several backends.
        for (p, e) in [(2u64, 4usize), (5, 1), (3, 2)] {
            let (f, _) = make_fields(p, e, 1).unwrap();
            let mut rng = StdRng::seed_from_u64(100 + p);
            for _ in 0..100 {
                let rows = rng.gen_range(1..30usize);
                let cols = rng.gen_range(1..10usize);
                let m = MatFq::from_fn(rows, cols, |_, _| f.sample(&mut rng));
                let mut acc = EchelonAccumulator::new(&f, cols);
                let inc = acc.append_rows(&m).unwrap();
                assert_eq!(acc.rank(), m.rank(&f));
                assert_eq!(inc, acc.rank());
            }
        }
    }

    #[test]
    fn rank_is_partition_independent() {
        let (f, _) = make_fields(2, 4, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let m = MatFq::from_fn(20, 8, |_, _| f.sample(&mut rng));
            let batch_rank = m.rank(&f);
            let mut acc = EchelonAccumulator::new(&f, 8);
            let mut r = 0;
            while r < 20 {
                let chunk = rng.gen_range(1..=(20 - r));
                for i in r..r + chunk {
                    acc.append_row(m.row(i)).unwrap();
                }
                r += chunk;
            }
            assert_eq!(acc.rank(), batch_rank);
        }
    }

    #[test]
    fn subadditivity_of_appends() {
        let (f, _) = make_fields(3, 1, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(9);
        let mut acc = EchelonAccumulator::new(&f, 6);
        for _ in 0..10 {
            let m = MatFq::from_fn(4, 6, |_, _| f.sample(&mut rng));
            let before = acc.rank();
            let inc = acc.append_rows(&m).unwrap();
            assert!(inc <= 4);
            assert_eq!(acc.rank(), before + inc);
        }
    }

    #[test]
    fn forked_accumulators_are_independent() {
        let (f, _) = make_fields(2, 4, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(13);
        let mut acc = EchelonAccumulator::new(&f, 6);
        let m = MatFq::from_fn(3, 6, |_, _| f.sample(&mut rng));
        acc.append_rows(&m).unwrap();
        let base_rank = acc.rank();
        let mut fork = acc.clone();
        let extra = MatFq::from_fn(4, 6, |_, _| f.sample(&mut rng));
        fork.append_rows(&extra).unwrap();
        assert_eq!(acc.rank(), base_rank);
        assert!(fork.rank() >= base_rank);
    }

    #[test]
    fn fqs_rows_match_expansion_route() {
        for (p, e, s) in [(2u64, 2usize, 3usize), (3, 1, 2)] {
            let (_, ext) = make_fields(p, e, s).unwrap();
            let mut rng = StdRng::seed_from_u64(17);
            for _ in 0..25 {
                let m = MatFqs::from_fn(6, 3, |_, _| ext.sample(&mut rng));
                assert_eq!(fq_rank_incremental(&m, &ext), m.rank_fq(&ext));
            }
        }
    }
}
