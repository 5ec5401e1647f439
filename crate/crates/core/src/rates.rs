//! Closed-form communication rates: CB-cPIR (exact, asymptotic, file-size
//! parameterized, squared-database variant), XPIR and SimplePIR, plus CSV
//! emission for the parameter tables and comparison curves.
//!
//! Everything rational in the inputs is evaluated in exact rational
//! arithmetic; floating point only enters through log2 of non-powers-of-two
//! (SimplePIR's plaintext modulus 495 and odd-characteristic field orders).

use std::io::{self, Write};
use std::path::Path;

use num::{BigRational, BigUint, FromPrimitive};
use thiserror::Error;

use crate::attack::attack_cost;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("failed writing {path}: {source}")]
    Emit {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// One published CB-cPIR parameter set with its claimed security level.
#[derive(Clone, Copy, Debug)]
pub struct ParameterSet {
    pub q: u128,
    /// Field characteristic and degree with q = p^e.
    pub p: u64,
    pub e: u32,
    pub s: usize,
    pub v: usize,
    pub n: usize,
    pub k: usize,
    /// Claimed security level in bits against previously known attacks.
    pub security_bits: u32,
}

impl ParameterSet {
    pub fn delta(&self) -> usize {
        (self.s - self.v) * (self.n - self.k)
    }
}

/// The six proposed parameter sets, in publication order.
pub const PARAMETER_SETS: [ParameterSet; 6] = [
    ParameterSet {
        q: 32,
        p: 2,
        e: 5,
        s: 32,
        v: 31,
        n: 100,
        k: 50,
        security_bits: 113,
    },
    ParameterSet {
        q: 32,
        p: 2,
        e: 5,
        s: 32,
        v: 30,
        n: 100,
        k: 50,
        security_bits: 113,
    },
    ParameterSet {
        q: 1 << 16,
        p: 2,
        e: 16,
        s: 12,
        v: 10,
        n: 100,
        k: 50,
        security_bits: 113,
    },
    ParameterSet {
        q: (1 << 32) - 5,
        p: 4294967291,
        e: 1,
        s: 6,
        v: 4,
        n: 120,
        k: 60,
        security_bits: 128,
    },
    ParameterSet {
        q: 1 << 32,
        p: 2,
        e: 32,
        s: 5,
        v: 3,
        n: 100,
        k: 50,
        security_bits: 96,
    },
    ParameterSet {
        q: (1 << 61) - 1,
        p: (1 << 61) - 1,
        e: 1,
        s: 6,
        v: 2,
        n: 100,
        k: 50,
        security_bits: 113,
    },
];

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(
        num::BigInt::from_u128(num).unwrap(),
        num::BigInt::from_u128(den).unwrap(),
    )
}

/// Large-file single-query limit: delta / (2 n s).
pub fn rate_cbcpir_asymptotic(delta: usize, n: usize, s: usize) -> BigRational {
    ratio(delta as u128, 2 * (n as u128) * (s as u128))
}

/// Exact session rate: f L delta / ((f+1)(m delta n + L n) s). The log2(q)
/// factors of payload and traffic cancel.
pub fn rate_cbcpir_exact(
    delta: usize,
    n: usize,
    s: usize,
    m: u128,
    file_rows: u128,
    session_files: u128,
) -> BigRational {
    let (delta, n, s) = (delta as u128, n as u128, s as u128);
    ratio(
        session_files * file_rows * delta,
        (session_files + 1) * (m * delta * n + file_rows * n) * s,
    )
}

/// File-size form of the single-query rate, F in bits:
/// plain    F / (2 n s (m delta log2(q) + F / delta)),
/// squared  F / (2 n s sqrt(m) (delta log2(q) + F / delta)).
pub fn rate_cbcpir_filesize(
    file_bits: f64,
    m: u64,
    delta: usize,
    n: usize,
    s: usize,
    log2_q: f64,
    squared: bool,
) -> f64 {
    let (delta, n, s) = (delta as f64, n as f64, s as f64);
    if squared {
        file_bits / (2.0 * n * s * (m as f64).sqrt() * (delta * log2_q + file_bits / delta))
    } else {
        file_bits / (2.0 * n * s * (m as f64 * delta * log2_q + file_bits / delta))
    }
}

/// XPIR rate: F / (m s_c + F s_c / s_p) with ciphertext and plaintext sizes
/// in bits.
pub fn rate_xpir(file_bits: f64, m: u64, cipher_bits: f64, plain_bits: f64) -> f64 {
    file_bits / (m as f64 * cipher_bits + file_bits * cipher_bits / plain_bits)
}

/// Hint-download amortization for SimplePIR.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HintReuse {
    /// Hint cost spread over this many queries.
    Queries(u64),
    /// Hint cost ignored entirely (theoretical upper bound).
    Unbounded,
}

/// SimplePIR rate: F log2(p) / ((n F / t sqrt(m) + (F + log2 p) sqrt(m)) log2(q)),
/// with the hint term dropped for unbounded reuse.
pub fn rate_simplepir(
    file_bits: f64,
    m: u64,
    log2_q: f64,
    plaintext_mod: u64,
    dim: u64,
    hint: HintReuse,
) -> f64 {
    let log2_p = (plaintext_mod as f64).log2();
    let sqrt_m = (m as f64).sqrt();
    let hint_term = match hint {
        HintReuse::Queries(t) => dim as f64 * file_bits / t as f64 * sqrt_m,
        HintReuse::Unbounded => 0.0,
    };
    file_bits * log2_p / ((hint_term + (file_bits + log2_p) * sqrt_m) * log2_q)
}

/// CB-cPIR side of a comparison curve (only log2(q) matters at this level).
#[derive(Clone, Copy, Debug)]
pub struct CbCurveParams {
    pub log2_q: f64,
    pub s: usize,
    pub v: usize,
    pub n: usize,
    pub k: usize,
}

impl CbCurveParams {
    pub fn delta(&self) -> usize {
        (self.s - self.v) * (self.n - self.k)
    }
}

/// XPIR-versus-CB-cPIR comparison setup. Defaults: XPIR at
/// (n, log q) = (1024, 60) with s_c = 128000 and s_p = 20000 bits, CB-cPIR at
/// q = 2^104, s = 6, v = 4, n = 100, k = 50, m = 1000 files.
#[derive(Clone, Copy, Debug)]
pub struct XpirComparison {
    pub cb: CbCurveParams,
    pub cipher_bits: f64,
    pub plain_bits: f64,
    pub file_count: u64,
}

impl Default for XpirComparison {
    fn default() -> Self {
        XpirComparison {
            cb: CbCurveParams {
                log2_q: 104.0,
                s: 6,
                v: 4,
                n: 100,
                k: 50,
            },
            cipher_bits: 128000.0,
            plain_bits: 20000.0,
            file_count: 1000,
        }
    }
}

/// SimplePIR-versus-CB-cPIR comparison setup. Defaults: SimplePIR at
/// (q, p, n) = (2^32, 495, 1024), CB-cPIR at q = 2^135, s = 6, v = 4,
/// n = 120, k = 60, m = 1000 files.
#[derive(Clone, Copy, Debug)]
pub struct SimplePirComparison {
    pub cb: CbCurveParams,
    pub log2_q: f64,
    pub plaintext_mod: u64,
    pub dim: u64,
    pub file_count: u64,
}

impl Default for SimplePirComparison {
    fn default() -> Self {
        SimplePirComparison {
            cb: CbCurveParams {
                log2_q: 135.0,
                s: 6,
                v: 4,
                n: 120,
                k: 60,
            },
            log2_q: 32.0,
            plaintext_mod: 495,
            dim: 1024,
            file_count: 1000,
        }
    }
}

/// Log-spaced file-size grid over the figures' domain, 6400 to 1e10 bits.
pub fn default_file_grid() -> Vec<u64> {
    log_grid(6400, 10_000_000_000, 100)
}

pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    assert!(points >= 2 && lo >= 1 && hi > lo);
    let (llo, lhi) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (llo + t * (lhi - llo)).exp().round() as u64
        })
        .collect();
    out[0] = lo;
    let last = out.len() - 1;
    out[last] = hi;
    out
}

/// Scheme parameter table with exact asymptotic rates, one row per published
/// parameter set. Columns: q,s,v,n,k,delta,rate.
pub fn write_parameter_table(w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "q,s,v,n,k,delta,rate")?;
    for row in &PARAMETER_SETS {
        let rate = rate_cbcpir_asymptotic(row.delta(), row.n, row.s);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.q,
            row.s,
            row.v,
            row.n,
            row.k,
            row.delta(),
            rate
        )?;
    }
    Ok(())
}

/// Security-versus-attack-cost table: the published security levels joined
/// with the batch-count exponent of the rank attack.
/// Columns: q,s,v,n,k,delta,security_bits,log2_batches.
pub fn write_security_table(w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "q,s,v,n,k,delta,security_bits,log2_batches")?;
    for row in &PARAMETER_SETS {
        let est = attack_cost(&BigUint::from(row.q), row.delta(), row.n, row.s, 1000);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.2}",
            row.q,
            row.s,
            row.v,
            row.n,
            row.k,
            row.delta(),
            row.security_bits,
            est.log2_batches
        )?;
    }
    Ok(())
}

fn write_curve_row(
    w: &mut dyn Write,
    file_bits: u64,
    scheme: &str,
    variant: &str,
    rate: f64,
) -> io::Result<()> {
    writeln!(w, "{file_bits},{scheme},{variant},{rate:.11e}")
}

/// Rate curves for the XPIR comparison. CSV schema:
/// file_size_bits,scheme,variant,rate with 12-significant-digit rates.
pub fn write_xpir_comparison(
    w: &mut dyn Write,
    cfg: &XpirComparison,
    grid: &[u64],
) -> io::Result<()> {
    writeln!(w, "file_size_bits,scheme,variant,rate")?;
    let cb = &cfg.cb;
    for &f_bits in grid {
        let f = f_bits as f64;
        write_curve_row(
            w,
            f_bits,
            "xpir",
            "standard",
            rate_xpir(f, cfg.file_count, cfg.cipher_bits, cfg.plain_bits),
        )?;
        write_curve_row(
            w,
            f_bits,
            "cbcpir",
            "plain",
            rate_cbcpir_filesize(f, cfg.file_count, cb.delta(), cb.n, cb.s, cb.log2_q, false),
        )?;
        write_curve_row(
            w,
            f_bits,
            "cbcpir",
            "squared",
            rate_cbcpir_filesize(f, cfg.file_count, cb.delta(), cb.n, cb.s, cb.log2_q, true),
        )?;
    }
    Ok(())
}

/// Rate curves for the SimplePIR comparison (hint reuse t in {1, 100, inf}).
pub fn write_simplepir_comparison(
    w: &mut dyn Write,
    cfg: &SimplePirComparison,
    grid: &[u64],
) -> io::Result<()> {
    writeln!(w, "file_size_bits,scheme,variant,rate")?;
    let cb = &cfg.cb;
    let hints = [
        (HintReuse::Queries(1), "t1"),
        (HintReuse::Queries(100), "t100"),
        (HintReuse::Unbounded, "tinf"),
    ];
    for &f_bits in grid {
        let f = f_bits as f64;
        for (hint, label) in hints {
            write_curve_row(
                w,
                f_bits,
                "simplepir",
                label,
                rate_simplepir(
                    f,
                    cfg.file_count,
                    cfg.log2_q,
                    cfg.plaintext_mod,
                    cfg.dim,
                    hint,
                ),
            )?;
        }
        write_curve_row(
            w,
            f_bits,
            "cbcpir",
            "plain",
            rate_cbcpir_filesize(f, cfg.file_count, cb.delta(), cb.n, cb.s, cb.log2_q, false),
        )?;
        write_curve_row(
            w,
            f_bits,
            "cbcpir",
            "squared",
            rate_cbcpir_filesize(f, cfg.file_count, cb.delta(), cb.n, cb.s, cb.log2_q, true),
        )?;
    }
    Ok(())
}

/// Write one CSV through a closure, attaching the path to any I/O failure.
pub fn emit_csv(
    path: &Path,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), RateError> {
    let wrap = |source: io::Error| RateError::Emit {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(wrap)?;
    let mut buf = io::BufWriter::new(file);
    f(&mut buf).map_err(wrap)?;
    buf.flush().map_err(wrap)
}

/// Emit every table and curve CSV into a directory: parameter_table.csv,
/// security_table.csv, curves_xpir_vs_cbcpir.csv,
/// curves_simplepir_vs_cbcpir.csv.
pub fn emit_tables_and_curves(dir: &Path) -> Result<(), RateError> {
    let grid = default_file_grid();
    emit_csv(&dir.join("parameter_table.csv"), write_parameter_table)?;
    emit_csv(&dir.join("security_table.csv"), write_security_table)?;
    emit_csv(&dir.join("curves_xpir_vs_cbcpir.csv"), |w| {
        write_xpir_comparison(w, &XpirComparison::default(), &grid)
    })?;
    emit_csv(&dir.join("curves_simplepir_vs_cbcpir.csv"), |w| {
        write_simplepir_comparison(w, &SimplePirComparison::default(), &grid)
    })?;
    Ok(())
}
