//! Property tests for the algebraic invariants the protocols lean on.

use std::sync::OnceLock;

use proptest::prelude::*;

use cbcpir::echelon::EchelonAccumulator;
use cbcpir::field::{make_fields, ExtFieldSpec, FieldSpec};
use cbcpir::matrix::{MatFq, MatFqs};
use cbcpir::{SplitBasis, Subspace};

const FIELDS: [(u64, usize, usize); 4] = [(2, 4, 4), (2, 5, 4), (3, 2, 2), (5, 1, 3)];

fn field(idx: usize) -> &'static (FieldSpec, ExtFieldSpec) {
    static CACHE: OnceLock<Vec<(FieldSpec, ExtFieldSpec)>> = OnceLock::new();
    &CACHE.get_or_init(|| {
        FIELDS
            .iter()
            .map(|&(p, e, s)| make_fields(p, e, s).unwrap())
            .collect()
    })[idx]
}

/// An element as raw coefficients, mapped through from_coeffs.
fn fq_elem(spec: &FieldSpec, raw: &[u64]) -> cbcpir::FqElem {
    let coeffs: Vec<u64> = (0..spec.degree())
        .map(|i| raw.get(i).copied().unwrap_or(0))
        .collect();
    spec.from_coeffs(&coeffs)
}

fn fqs_elem(ext: &ExtFieldSpec, raw: &[u64]) -> cbcpir::FqsElem {
    let e = ext.base().degree();
    let coeffs = (0..ext.ext_degree())
        .map(|i| {
            let lo = i * e;
            fq_elem(ext.base(), raw.get(lo..lo + e).unwrap_or(&[]))
        })
        .collect();
    ext.from_coeffs(coeffs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn field_axioms(
        idx in 0usize..FIELDS.len(),
        a in proptest::collection::vec(0u64..64, 8),
        b in proptest::collection::vec(0u64..64, 8),
        c in proptest::collection::vec(0u64..64, 8),
    ) {
        let (f, _) = field(idx);
        let (x, y, z) = (fq_elem(f, &a), fq_elem(f, &b), fq_elem(f, &c));
        prop_assert_eq!(f.add(&x, &y), f.add(&y, &x));
        prop_assert_eq!(f.mul(&x, &y), f.mul(&y, &x));
        prop_assert_eq!(f.add(&f.add(&x, &y), &z), f.add(&x, &f.add(&y, &z)));
        prop_assert_eq!(f.mul(&f.mul(&x, &y), &z), f.mul(&x, &f.mul(&y, &z)));
        prop_assert_eq!(
            f.mul(&x, &f.add(&y, &z)),
            f.add(&f.mul(&x, &y), &f.mul(&x, &z))
        );
        prop_assert_eq!(f.sub(&f.add(&x, &y), &y), x.clone());
        if !f.is_zero(&x) {
            prop_assert_eq!(f.mul(&x, &f.inv(&x).unwrap()), f.one());
        }
    }

    #[test]
    fn extension_field_axioms(
        idx in 0usize..FIELDS.len(),
        a in proptest::collection::vec(0u64..64, 24),
        b in proptest::collection::vec(0u64..64, 24),
        c in proptest::collection::vec(0u64..64, 24),
    ) {
        let (_, ext) = field(idx);
        let (x, y, z) = (fqs_elem(ext, &a), fqs_elem(ext, &b), fqs_elem(ext, &c));
        prop_assert_eq!(ext.mul(&x, &y), ext.mul(&y, &x));
        prop_assert_eq!(
            ext.mul(&x, &ext.add(&y, &z)),
            ext.add(&ext.mul(&x, &y), &ext.mul(&x, &z))
        );
        if !ext.is_zero(&x) {
            prop_assert_eq!(ext.mul(&x, &ext.inv(&x).unwrap()), ext.one());
        }
    }

    #[test]
    fn projection_decomposes_every_element(
        idx in 0usize..FIELDS.len(),
        seed in 0u64..1_000_000,
        raw in proptest::collection::vec(0u64..64, 24),
    ) {
        use rand::SeedableRng;
        let (_, ext) = field(idx);
        if ext.ext_degree() < 2 {
            return Ok(());
        }
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let basis = SplitBasis::sample(ext, 1 + (seed as usize % (ext.ext_degree() - 1)), &mut rng);
        let x = fqs_elem(ext, &raw);
        let e = basis.project(&x, Subspace::Error, ext);
        let w = basis.project(&x, Subspace::Payload, ext);
        prop_assert_eq!(ext.add(&e, &w), x);
        prop_assert_eq!(basis.project(&e, Subspace::Error, ext), e.clone());
        prop_assert_eq!(basis.project(&w, Subspace::Payload, ext), w.clone());
    }

    #[test]
    fn incremental_rank_equals_one_shot_rank(
        idx in 0usize..FIELDS.len(),
        rows in 1usize..12,
        cols in 1usize..8,
        raw in proptest::collection::vec(0u64..64, 12 * 8 * 8),
    ) {
        let (f, _) = field(idx);
        let e = f.degree();
        let m = MatFq::from_fn(rows, cols, |r, c| {
            let lo = (r * cols + c) * e;
            fq_elem(f, raw.get(lo..lo + e).unwrap_or(&[]))
        });
        let mut acc = EchelonAccumulator::new(f, cols);
        let inc = acc.append_rows(&m).unwrap();
        prop_assert_eq!(acc.rank(), m.rank(f));
        prop_assert_eq!(inc, acc.rank());
        prop_assert!(acc.rank() <= rows.min(cols));
    }

    #[test]
    fn fq_rank_is_expansion_basis_independent(
        idx in 0usize..FIELDS.len(),
        seed in 0u64..1_000_000,
        rows in 1usize..6,
        cols in 1usize..4,
    ) {
        use rand::SeedableRng;
        let (f, ext) = field(idx);
        if ext.ext_degree() < 2 {
            return Ok(());
        }
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let m = MatFqs::from_fn(rows, cols, |_, _| ext.sample(&mut rng));
        let poly_rank = m.rank_fq(ext);

        // Re-expand through a random basis: same row space dimension.
        let basis = SplitBasis::sample(ext, 1, &mut rng);
        let s = ext.ext_degree();
        let alt = MatFq::from_fn(rows, cols * s, |r, c| {
            let entry = &m[(r, c / s)];
            basis.coords(entry, ext)[c % s].clone()
        });
        prop_assert_eq!(alt.rank(f), poly_rank);
    }

    #[test]
    fn wire_database_round_trip(
        idx in 0usize..FIELDS.len(),
        rows in 1usize..5,
        files in 1usize..4,
        width in 1usize..4,
        raw in proptest::collection::vec(0u64..64, 5 * 4 * 4 * 8),
    ) {
        let (f, ext) = field(idx);
        let e = f.degree();
        let data = MatFq::from_fn(rows, files * width, |r, c| {
            let lo = (r * files * width + c) * e;
            fq_elem(f, raw.get(lo..lo + e).unwrap_or(&[]))
        });
        let db = cbcpir::Database::from_matrix(data, files).unwrap();
        let mut buf = Vec::new();
        cbcpir::wire::write_database(&mut buf, f, ext.ext_degree(), &db).unwrap();
        let (spec, _, back) = cbcpir::wire::read_database(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(&spec, f);
        prop_assert_eq!(back, db);
    }
}
