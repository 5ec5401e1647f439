//! Named parameter presets and key=value preset files.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use cbcpir::{BigUint, SchemeParams, PARAMETER_SETS};

use crate::CliError;

/// One loadable parameter set. `table1-rowN` presets mirror the published
/// parameter table (demo-scale m and L attached); `toy16`/`toy32` are the
/// desk-scale families every attack criterion runs on; the `cmp-*` presets
/// carry the rate-comparison parameters.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub p: u64,
    pub e: usize,
    pub s: usize,
    pub v: usize,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub file_rows: usize,
    pub session_files: usize,
    pub note: String,
}

impl Preset {
    #[allow(clippy::too_many_arguments)]
    fn new(
        name: &str,
        p: u64,
        e: usize,
        s: usize,
        v: usize,
        n: usize,
        k: usize,
        m: usize,
        file_rows: usize,
        session_files: usize,
        note: &str,
    ) -> Self {
        Preset {
            name: name.into(),
            p,
            e,
            s,
            v,
            n,
            k,
            m,
            file_rows,
            session_files,
            note: note.into(),
        }
    }

    pub fn delta(&self) -> usize {
        (self.s - self.v) * (self.n - self.k)
    }

    pub fn log2_q(&self) -> f64 {
        (self.p as f64).log2() * self.e as f64
    }

    pub fn q_big(&self) -> BigUint {
        BigUint::from(self.p).pow(self.e as u32)
    }

    /// Validate the cheap invariants without constructing fields.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::InvalidParams(msg));
        if self.v == 0 || self.v >= self.s {
            return fail(format!("need 1 <= v < s, got v={} s={}", self.v, self.s));
        }
        if self.k == 0 || self.k >= self.n {
            return fail(format!("need 1 <= k < n, got k={} n={}", self.k, self.n));
        }
        if self.m == 0 || self.file_rows == 0 || self.session_files == 0 {
            return fail("m, L and f must be positive".into());
        }
        if !cbcpir::field::is_prime_u64(self.p) {
            return fail(format!("q_base {} is not prime", self.p));
        }
        Ok(())
    }

    /// Build the fields and full scheme parameters (the expensive step).
    pub fn scheme_params(&self) -> Result<SchemeParams, CliError> {
        self.validate()?;
        SchemeParams::build(
            self.p,
            self.e,
            self.s,
            self.v,
            self.n,
            self.k,
            self.m,
            self.file_rows,
            self.session_files,
        )
        .map_err(|e| CliError::InvalidParams(e.to_string()))
    }

    /// Rough operation count for generating one query pair; used to refuse
    /// workloads that are hopeless at desk scale.
    pub fn demo_work_estimate(&self) -> f64 {
        let enc = (self.m * self.delta()) as f64 * (self.k * self.n) as f64;
        enc * (self.s * self.s) as f64
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = if self.e == 1 {
            format!("{}", self.p)
        } else {
            format!("{}^{}", self.p, self.e)
        };
        write!(
            f,
            "preset={} q={} s={} v={} n={} k={} delta={} m={} L={} f={}",
            self.name,
            q,
            self.s,
            self.v,
            self.n,
            self.k,
            self.delta(),
            self.m,
            self.file_rows,
            self.session_files
        )?;
        if !self.note.is_empty() {
            write!(f, " note={:?}", self.note)?;
        }
        Ok(())
    }
}

pub fn builtin_names() -> Vec<String> {
    let mut names = vec!["toy16".to_string(), "toy32".to_string()];
    names.extend((1..=6).map(|i| format!("table1-row{i}")));
    names.push("cmp-xpir".into());
    names.push("cmp-simplepir".into());
    names
}

fn builtin(name: &str) -> Option<Preset> {
    match name {
        "toy16" => Some(Preset::new(
            "toy16",
            2,
            4,
            4,
            2,
            12,
            6,
            40,
            5,
            1,
            "toy family over GF(16); the attack-criteria workhorse",
        )),
        "toy32" => Some(Preset::new(
            "toy32",
            2,
            5,
            4,
            2,
            12,
            6,
            40,
            5,
            1,
            "GF(32) analogue of toy16",
        )),
        "cmp-xpir" => Some(Preset::new(
            "cmp-xpir",
            2,
            104,
            6,
            4,
            100,
            50,
            1000,
            1000,
            1,
            "XPIR-comparable security level; rate analysis only",
        )),
        "cmp-simplepir" => Some(Preset::new(
            "cmp-simplepir",
            2,
            135,
            6,
            4,
            120,
            60,
            1000,
            1000,
            1,
            "SimplePIR-comparable security level; rate analysis only",
        )),
        _ => {
            let row: usize = name.strip_prefix("table1-row")?.parse().ok()?;
            if !(1..=6).contains(&row) {
                return None;
            }
            let ps = &PARAMETER_SETS[row - 1];
            // Demo-scale attachments: the smallest database the single-row
            // attack applies to, and a nominal file length.
            let m = ps.n * ps.s - ps.delta() + 1;
            Some(Preset::new(
                name,
                ps.p,
                ps.e as usize,
                ps.s,
                ps.v,
                ps.n,
                ps.k,
                m,
                1000,
                1,
                "published parameter set",
            ))
        }
    }
}

/// Load a preset by builtin name, or from a key=value file when the argument
/// names an existing file. Required keys: q_base,q_exp,s,v,n,k,m,L,f.
pub fn load_preset(arg: &str) -> Result<Preset, CliError> {
    if let Some(p) = builtin(arg) {
        p.validate()?;
        return Ok(p);
    }
    let path = Path::new(arg);
    if path.exists() {
        let preset = from_file(path)?;
        preset.validate()?;
        return Ok(preset);
    }
    Err(CliError::UnknownPreset(format!(
        "{arg} (builtins: {})",
        builtin_names().join(", ")
    )))
}

fn from_file(path: &Path) -> Result<Preset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut kv: HashMap<&str, &str> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, val)) = line.split_once('=') else {
            return Err(CliError::BadPresetFile(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            )));
        };
        kv.insert(key.trim(), val.trim());
    }
    let get = |key: &str| -> Result<u64, CliError> {
        kv.get(key)
            .ok_or_else(|| {
                CliError::BadPresetFile(format!("{}: missing key {key}", path.display()))
            })?
            .parse()
            .map_err(|_| {
                CliError::BadPresetFile(format!("{}: key {key} is not an integer", path.display()))
            })
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    Ok(Preset {
        name,
        p: get("q_base")?,
        e: get("q_exp")? as usize,
        s: get("s")? as usize,
        v: get("v")? as usize,
        n: get("n")? as usize,
        k: get("k")? as usize,
        m: get("m")? as usize,
        file_rows: get("L")? as usize,
        session_files: get("f")? as usize,
        note: "preset file".into(),
    })
}
