//! Random bases of F_{q^s} over F_q, split into an error part and a payload
//! part, with the coordinate projections onto each part.
//!
//! A `SplitBasis` holds s basis elements; the first `error_dim` of them span
//! the error subspace (queries hide noise there), the remaining ones span the
//! payload subspace (queries carry file data there). Elements stay in
//! polynomial-basis form internally; the basis is a view applied on demand.

use rand::Rng;

use crate::field::{ExtFieldSpec, FqElem, FqsElem};
use crate::matrix::{MatFq, MatrixError};

/// Which component of the direct sum to keep.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Subspace {
    /// Span of the first `error_dim` basis elements.
    Error,
    /// Span of the remaining basis elements.
    Payload,
}

#[derive(Clone, Debug)]
pub struct SplitBasis {
    elements: Vec<FqsElem>,
    /// s x s over F_q; column i holds the polynomial-basis coordinates of
    /// elements[i]. Maps basis coordinates to polynomial coordinates.
    from_basis: MatFq,
    /// Inverse of `from_basis`: polynomial coordinates to basis coordinates.
    to_basis: MatFq,
    error_dim: usize,
}

impl SplitBasis {
    /// Sample a uniformly random basis, retrying until the coordinate matrix
    /// is invertible.
    pub fn sample<R: Rng + ?Sized>(ext: &ExtFieldSpec, error_dim: usize, rng: &mut R) -> Self {
        assert!(
            error_dim >= 1 && error_dim < ext.ext_degree(),
            "split must leave both parts nonempty"
        );
        loop {
            let elements: Vec<FqsElem> = (0..ext.ext_degree()).map(|_| ext.sample(rng)).collect();
            if let Ok(basis) = Self::from_elements(ext, elements, error_dim) {
                return basis;
            }
        }
    }

    /// Build from explicit elements; fails if they are linearly dependent
    /// over F_q.
    pub fn from_elements(
        ext: &ExtFieldSpec,
        elements: Vec<FqsElem>,
        error_dim: usize,
    ) -> Result<Self, MatrixError> {
        let s = ext.ext_degree();
        assert_eq!(elements.len(), s);
        let from_basis = MatFq::from_fn(s, s, |r, c| ext.poly_coords(&elements[c])[r].clone());
        let to_basis = from_basis.inverse(ext.base())?;
        Ok(SplitBasis {
            elements,
            from_basis,
            to_basis,
            error_dim,
        })
    }

    pub fn elements(&self) -> &[FqsElem] {
        &self.elements
    }

    pub fn error_dim(&self) -> usize {
        self.error_dim
    }

    pub fn payload_dim(&self) -> usize {
        self.elements.len() - self.error_dim
    }

    pub fn from_basis_matrix(&self) -> &MatFq {
        &self.from_basis
    }

    pub fn to_basis_matrix(&self) -> &MatFq {
        &self.to_basis
    }

    /// Coordinates of `x` with respect to this basis.
    pub fn coords(&self, x: &FqsElem, ext: &ExtFieldSpec) -> Vec<FqElem> {
        self.to_basis.mul_vec(&ext.poly_coords(x), ext.base())
    }

    /// Element with the given basis coordinates.
    pub fn from_coords(&self, coords: &[FqElem], ext: &ExtFieldSpec) -> FqsElem {
        ext.from_coeffs(self.from_basis.mul_vec(coords, ext.base()))
    }

    /// Projection onto the error or payload part with respect to this basis.
    pub fn project(&self, x: &FqsElem, part: Subspace, ext: &ExtFieldSpec) -> FqsElem {
        let spec = ext.base();
        let mut coords = self.coords(x, ext);
        let (lo, hi) = match part {
            Subspace::Error => (0, self.error_dim),
            Subspace::Payload => (self.error_dim, coords.len()),
        };
        for (i, c) in coords.iter_mut().enumerate() {
            if i < lo || i >= hi {
                *c = spec.zero();
            }
        }
        self.from_coords(&coords, ext)
    }

    /// Uniformly random element of the chosen part.
    pub fn sample_in<R: Rng + ?Sized>(
        &self,
        part: Subspace,
        ext: &ExtFieldSpec,
        rng: &mut R,
    ) -> FqsElem {
        let spec = ext.base();
        let s = self.elements.len();
        let mut coords = vec![spec.zero(); s];
        let range = match part {
            Subspace::Error => 0..self.error_dim,
            Subspace::Payload => self.error_dim..s,
        };
        for i in range {
            coords[i] = spec.sample(rng);
        }
        self.from_coords(&coords, ext)
    }
}
