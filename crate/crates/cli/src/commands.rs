//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cbcpir::attack::{attack_cost, recover_index, subquery_attack, AttackError, SubqueryOutcome};
use cbcpir::rates::{
    emit_csv, write_parameter_table, write_security_table, write_simplepir_comparison,
    write_xpir_comparison, HintReuse, SimplePirComparison, XpirComparison,
};
use cbcpir::scheme::{
    cbcpir_traffic, extract_cbcpir, extract_original, query_cbcpir, query_original, server_answer,
    Database, SchemeParams, Session,
};
use cbcpir::{wire, AttackConfig};

use crate::presets::{load_preset, Preset};
use crate::{CliError, Command, HintChoice, SchemeChoice};

/// Query-generation workloads above this many base-field operations are
/// refused: they would run for hours where the toy presets take milliseconds.
const DESK_SCALE_OPS: f64 = 2e9;

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Demo {
            preset,
            seed,
            scheme,
            index,
            m,
            rows,
            out,
        } => demo(&preset, seed, scheme, index, m, rows, out.as_deref()),
        Command::Attack {
            preset,
            seed,
            workers,
            rows_per_block,
            index,
            m,
            out,
        } => attack(
            &preset,
            seed,
            workers,
            rows_per_block,
            index,
            m,
            out.as_deref(),
        ),
        Command::Subquery {
            preset,
            seed,
            scheme,
            index,
            m,
        } => subquery(&preset, seed, scheme, index, m),
        Command::Rates {
            table,
            out,
            format: _,
        } => rates(table, out.as_deref()),
        Command::Curves {
            out,
            t,
            xpir_cb_log2q,
            simplepir_cb_log2q,
            format: _,
        } => curves(&out, t, xpir_cb_log2q, simplepir_cb_log2q),
        Command::Cost { preset, m } => cost(&preset, m),
        Command::Selftest { seed } => selftest(seed),
    }
}

fn load_with_overrides(
    name: &str,
    m: Option<usize>,
    rows: Option<usize>,
) -> Result<Preset, CliError> {
    let mut preset = load_preset(name)?;
    if let Some(m) = m {
        preset.m = m;
    }
    if let Some(rows) = rows {
        preset.file_rows = rows;
    }
    preset.validate()?;
    Ok(preset)
}

fn guard_desk_scale(preset: &Preset, command: &str) -> Result<(), CliError> {
    let est = preset.demo_work_estimate();
    if est > DESK_SCALE_OPS {
        return Err(CliError::DeskScale(format!(
            "{command} at preset {} needs ~2^{:.1} field operations just to build a query; \
             use toy16/toy32 (or `cost`/`rates` for the large parameter sets)",
            preset.name,
            est.log2()
        )));
    }
    Ok(())
}

fn pick_index(
    requested: Option<usize>,
    file_count: usize,
    rng: &mut StdRng,
) -> Result<usize, CliError> {
    match requested {
        Some(i) if i < file_count => Ok(i),
        Some(i) => Err(CliError::InvalidParams(format!(
            "index {i} out of range for {file_count} files"
        ))),
        None => Ok(rng.gen_range(0..file_count)),
    }
}

fn map_attack_err(e: AttackError) -> CliError {
    match e {
        AttackError::DatabaseTooSmall { .. } => CliError::Precondition(e.to_string()),
        AttackError::FieldTooLargeForSearch { .. } => CliError::DeskScale(e.to_string()),
        other => CliError::InvalidParams(other.to_string()),
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn demo(
    name: &str,
    seed: u64,
    scheme: SchemeChoice,
    index: Option<usize>,
    m: Option<usize>,
    rows: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let preset = load_with_overrides(name, m, rows)?;
    guard_desk_scale(&preset, "demo")?;
    let params = preset.scheme_params()?;
    let mut rng = StdRng::seed_from_u64(seed);
    let db = Database::random(&params, &mut rng);
    let target = pick_index(index, params.file_count(), &mut rng)?;
    println!("{preset} seed={seed} index={target}");

    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("database.bin");
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        wire::write_database(&mut f, params.field(), params.ext_degree(), &db)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }

    let mut all_ok = true;
    let schemes: &[&str] = match scheme {
        SchemeChoice::Original => &["original"],
        SchemeChoice::Cbcpir => &["cbcpir"],
        SchemeChoice::Both => &["original", "cbcpir"],
    };
    for &which in schemes {
        let started = Instant::now();
        let (bundle, secret) = match which {
            "original" => query_original(&params, target, &mut rng)
                .map_err(|e| CliError::InvalidParams(e.to_string()))?,
            _ => query_cbcpir(&params, target, &mut rng)
                .map_err(|e| CliError::InvalidParams(e.to_string()))?,
        };
        let resp = server_answer(&params, &db, &bundle)
            .map_err(|e| CliError::InvalidParams(e.to_string()))?;
        let extracted = match which {
            "original" => extract_original(&params, &secret, &resp),
            _ => extract_cbcpir(&params, &secret, &resp, None),
        }
        .map_err(|e| CliError::InvalidParams(e.to_string()))?;
        let ok = extracted == db.file(target);
        all_ok &= ok;
        print!(
            "scheme={which} match={ok} elapsed_ms={}",
            started.elapsed().as_millis()
        );
        if which == "cbcpir" {
            let t = cbcpir_traffic(&params);
            print!(
                " upload_bits={:.0} download_bits={:.0} rate={} (~{:.4e})",
                t.upload_bits,
                t.download_bits,
                t.rate,
                t.rate_f64()
            );
        }
        println!();

        if let Some(dir) = out {
            let qpath = dir.join(format!("query_{which}.bin"));
            let mut f = fs::File::create(&qpath).map_err(io_err(&qpath))?;
            wire::write_query_bundle(&mut f, params.ext(), &bundle)
                .map_err(|e| CliError::Io(format!("{}: {e}", qpath.display())))?;
            let rpath = dir.join(format!("response_{which}.bin"));
            let mut f = fs::File::create(&rpath).map_err(io_err(&rpath))?;
            wire::write_response(&mut f, params.ext(), &resp)
                .map_err(|e| CliError::Io(format!("{}: {e}", rpath.display())))?;
            println!("wrote {} and {}", qpath.display(), rpath.display());
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Failed(
            "extracted file did not match the stored file".into(),
        ))
    }
}

fn attack(
    name: &str,
    seed: u64,
    workers: usize,
    rows_per_block: Option<usize>,
    index: Option<usize>,
    m: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let preset = load_with_overrides(name, m, None)?;
    if preset.log2_q() >= 16.0 {
        let est = attack_cost(
            &preset.q_big(),
            preset.delta().max(2),
            preset.n,
            preset.s,
            preset.m,
        );
        return Err(CliError::DeskScale(format!(
            "attack at preset {} would need ~2^{:.1} scalar batches per pair \
             (~2^{:.1} base-field operations total); q >= 2^16 is cost-model territory, \
             see `cbcpir cost --preset {}`",
            preset.name, est.log2_batches, est.log2_fq_ops, preset.name
        )));
    }
    guard_desk_scale(&preset, "attack")?;
    let params = preset.scheme_params()?;
    let mut rng = StdRng::seed_from_u64(seed);
    let target = pick_index(index, params.file_count(), &mut rng)?;
    let (bundle, _) = query_cbcpir(&params, target, &mut rng)
        .map_err(|e| CliError::InvalidParams(e.to_string()))?;
    let mask_query = bundle
        .mask_query
        .as_ref()
        .expect("standalone query carries the mask");
    let config = AttackConfig {
        rows_per_block,
        workers,
        seed,
    };
    let report =
        recover_index(&params, &bundle.query, mask_query, &config).map_err(map_attack_err)?;

    println!("{preset} seed={seed}");
    println!("planted_index={target}");
    print!("{}", report.to_kv());
    println!("elapsed_ms={}", report.elapsed.as_millis());

    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let rpath = dir.join("attack_report.txt");
        let mut f = fs::File::create(&rpath).map_err(io_err(&rpath))?;
        write!(f, "planted_index={target}\n{}", report.to_kv()).map_err(io_err(&rpath))?;
        let qpath = dir.join("query_cbcpir.bin");
        let mut f = fs::File::create(&qpath).map_err(io_err(&qpath))?;
        wire::write_query_bundle(&mut f, params.ext(), &bundle)
            .map_err(|e| CliError::Io(format!("{}: {e}", qpath.display())))?;
        println!("wrote {} and {}", rpath.display(), qpath.display());
    }

    match report.recovered {
        Some(idx) if idx == target => Ok(()),
        Some(idx) => Err(CliError::Failed(format!(
            "recovered index {idx} does not match planted index {target}"
        ))),
        None => Err(CliError::Failed(format!(
            "attack undecided: {}",
            report.undecided_reason.unwrap_or_default()
        ))),
    }
}

fn subquery(
    name: &str,
    seed: u64,
    scheme: SchemeChoice,
    index: Option<usize>,
    m: Option<usize>,
) -> Result<(), CliError> {
    let preset = load_with_overrides(name, m, None)?;
    guard_desk_scale(&preset, "subquery")?;
    let params = preset.scheme_params()?;
    let mut rng = StdRng::seed_from_u64(seed);
    let target = pick_index(index, params.file_count(), &mut rng)?;
    let which = match scheme {
        SchemeChoice::Original => "original",
        SchemeChoice::Cbcpir => "cbcpir",
        SchemeChoice::Both => {
            return Err(CliError::InvalidParams(
                "subquery takes --scheme original or --scheme cbcpir".into(),
            ))
        }
    };
    let (bundle, _) = match scheme {
        SchemeChoice::Original => query_original(&params, target, &mut rng),
        _ => query_cbcpir(&params, target, &mut rng),
    }
    .map_err(|e| CliError::InvalidParams(e.to_string()))?;
    let started = Instant::now();
    let outcome = subquery_attack(&params, &bundle.query).map_err(map_attack_err)?;
    println!("{preset} seed={seed} scheme={which}");
    println!("planted_index={target}");
    match outcome {
        SubqueryOutcome::Identified(idx) => {
            println!(
                "outcome=identified recovered_index={idx} match={}",
                idx == target
            );
        }
        SubqueryOutcome::Undecided => println!("outcome=undecided"),
    }
    println!("elapsed_ms={}", started.elapsed().as_millis());
    Ok(())
}

fn rates(table: u8, out: Option<&Path>) -> Result<(), CliError> {
    let write = |w: &mut dyn Write| match table {
        1 => write_parameter_table(w),
        2 => write_security_table(w),
        _ => unreachable!(),
    };
    if !(1..=2).contains(&table) {
        return Err(CliError::InvalidParams(format!(
            "--table must be 1 or 2, got {table}"
        )));
    }
    match out {
        Some(path) => {
            emit_csv(path, write).map_err(|e| CliError::Io(e.to_string()))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            write(&mut stdout.lock()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn curves(
    out: &Path,
    t: Option<HintChoice>,
    xpir_cb_log2q: f64,
    simplepir_cb_log2q: f64,
) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let grid = cbcpir::rates::default_file_grid();

    let mut xpir_cfg = XpirComparison::default();
    xpir_cfg.cb.log2_q = xpir_cb_log2q;
    let xpath = out.join("curves_xpir_vs_cbcpir.csv");
    emit_csv(&xpath, |w| write_xpir_comparison(w, &xpir_cfg, &grid))
        .map_err(|e| CliError::Io(e.to_string()))?;
    println!("wrote {}", xpath.display());

    let mut simple_cfg = SimplePirComparison::default();
    simple_cfg.cb.log2_q = simplepir_cb_log2q;
    let spath = out.join("curves_simplepir_vs_cbcpir.csv");
    match t {
        None => emit_csv(&spath, |w| {
            write_simplepir_comparison(w, &simple_cfg, &grid)
        }),
        Some(choice) => {
            let (hint, label) = match choice {
                HintChoice::One => (HintReuse::Queries(1), "t1"),
                HintChoice::Hundred => (HintReuse::Queries(100), "t100"),
                HintChoice::Inf => (HintReuse::Unbounded, "tinf"),
            };
            emit_csv(&spath, |w| {
                writeln!(w, "file_size_bits,scheme,variant,rate")?;
                let cb = &simple_cfg.cb;
                for &f_bits in &grid {
                    let f = f_bits as f64;
                    let r = cbcpir::rate_simplepir(
                        f,
                        simple_cfg.file_count,
                        simple_cfg.log2_q,
                        simple_cfg.plaintext_mod,
                        simple_cfg.dim,
                        hint,
                    );
                    writeln!(w, "{f_bits},simplepir,{label},{r:.11e}")?;
                    let plain = cbcpir::rate_cbcpir_filesize(
                        f,
                        simple_cfg.file_count,
                        cb.delta(),
                        cb.n,
                        cb.s,
                        cb.log2_q,
                        false,
                    );
                    writeln!(w, "{f_bits},cbcpir,plain,{plain:.11e}")?;
                    let squared = cbcpir::rate_cbcpir_filesize(
                        f,
                        simple_cfg.file_count,
                        cb.delta(),
                        cb.n,
                        cb.s,
                        cb.log2_q,
                        true,
                    );
                    writeln!(w, "{f_bits},cbcpir,squared,{squared:.11e}")?;
                }
                Ok(())
            })
        }
    }
    .map_err(|e| CliError::Io(e.to_string()))?;
    println!("wrote {}", spath.display());
    Ok(())
}

fn cost(name: &str, m: Option<usize>) -> Result<(), CliError> {
    let preset = load_with_overrides(name, m, None)?;
    if preset.delta() < 2 {
        return Err(CliError::InvalidParams(
            "cost model needs payload width delta >= 2".into(),
        ));
    }
    let est = attack_cost(
        &preset.q_big(),
        preset.delta(),
        preset.n,
        preset.s,
        preset.m,
    );
    println!("{preset}");
    println!("log2_q={}", preset.log2_q());
    println!("batches_per_pair={}", est.batches_per_pair);
    println!("log2_batches={:.2}", est.log2_batches);
    println!("rank_matrices={}", est.rank_matrix_count);
    println!("fq_ops={}", est.fq_ops);
    println!("log2_fq_ops={:.2}", est.log2_fq_ops);
    Ok(())
}

fn selftest(seed: u64) -> Result<(), CliError> {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if ok {
            println!("PASS {name}");
        } else {
            println!("FAIL {name}");
            failures.push(name.to_string());
        }
    };

    // Field axioms over a characteristic-2 tower and an odd-prime field.
    {
        let mut ok = true;
        for (p, e, s) in [(2u64, 4usize, 4usize), (5, 1, 2), (3, 2, 2)] {
            let (f, ext) = cbcpir::make_fields(p, e, s).unwrap();
            let mut rng = StdRng::seed_from_u64(seed ^ 1);
            for _ in 0..100 {
                let (a, b, c) = (f.sample(&mut rng), f.sample(&mut rng), f.sample(&mut rng));
                ok &= f.mul(&a, &f.add(&b, &c)) == f.add(&f.mul(&a, &b), &f.mul(&a, &c));
                if !f.is_zero(&a) {
                    ok &= f.mul(&a, &f.inv(&a).unwrap()) == f.one();
                }
                let x = ext.sample(&mut rng);
                if !ext.is_zero(&x) {
                    ok &= ext.mul(&x, &ext.inv(&x).unwrap()) == ext.one();
                }
            }
        }
        check("field-axioms", ok);
    }

    // Projections decompose and are idempotent.
    {
        let (_, ext) = cbcpir::make_fields(2, 4, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(seed ^ 2);
        let basis = cbcpir::SplitBasis::sample(&ext, 2, &mut rng);
        let mut ok = true;
        for _ in 0..200 {
            let x = ext.sample(&mut rng);
            let e = basis.project(&x, cbcpir::Subspace::Error, &ext);
            let w = basis.project(&x, cbcpir::Subspace::Payload, &ext);
            ok &= ext.add(&e, &w) == x;
            ok &= basis.project(&w, cbcpir::Subspace::Payload, &ext) == w;
        }
        check("split-basis-projections", ok);
    }

    // Incremental rank agrees with one-shot elimination.
    {
        let (f, _) = cbcpir::make_fields(2, 4, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(seed ^ 3);
        let mut ok = true;
        for _ in 0..50 {
            let rows = rng.gen_range(1..20);
            let cols = rng.gen_range(1..10);
            let m = cbcpir::MatFq::from_fn(rows, cols, |_, _| f.sample(&mut rng));
            let mut acc = cbcpir::EchelonAccumulator::new(&f, cols);
            acc.append_rows(&m).unwrap();
            ok &= acc.rank() == m.rank(&f);
        }
        check("incremental-rank", ok);
    }

    // Codeword interpolation round trip.
    {
        let (_, ext) = cbcpir::make_fields(2, 4, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(seed ^ 4);
        let code = cbcpir::LinearCode::sample(&ext, 12, 6, &mut rng).unwrap();
        let mut ok = true;
        for _ in 0..100 {
            let msg: Vec<_> = (0..6).map(|_| ext.sample(&mut rng)).collect();
            let cw = code.encode(&msg, &ext).unwrap();
            let vals: Vec<_> = code.info_set().iter().map(|&c| cw[c].clone()).collect();
            ok &= code.codeword_from_info(&vals, &ext).unwrap() == cw;
        }
        check("information-set-interpolation", ok);
    }

    // Round trips for both schemes at toy16, plus a mask-reuse session.
    {
        let params = SchemeParams::build(2, 4, 4, 2, 12, 6, 40, 5, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(seed ^ 5);
        let db = Database::random(&params, &mut rng);
        let mut ok = true;
        for target in [0usize, 17] {
            let (b, s) = query_original(&params, target, &mut rng).unwrap();
            let r = server_answer(&params, &db, &b).unwrap();
            ok &= extract_original(&params, &s, &r).unwrap() == db.file(target);
            let (b, s) = query_cbcpir(&params, target, &mut rng).unwrap();
            let r = server_answer(&params, &db, &b).unwrap();
            ok &= extract_cbcpir(&params, &s, &r, None).unwrap() == db.file(target);
        }
        let mut session = Session::new(&params, &mut rng).unwrap();
        for target in [3usize, 9, 33] {
            let (b, s) = session.query(&params, target, &mut rng).unwrap();
            let r = server_answer(&params, &db, &b).unwrap();
            session.store_answer(&r);
            ok &=
                extract_cbcpir(&params, &s, &r, session.mask_answer()).unwrap() == db.file(target);
        }
        check("pir-round-trips", ok);
    }

    // Wire round trip.
    {
        let params = SchemeParams::build(2, 4, 4, 2, 6, 3, 4, 3, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(seed ^ 6);
        let db = Database::random(&params, &mut rng);
        let mut buf = Vec::new();
        wire::write_database(&mut buf, params.field(), params.ext_degree(), &db).unwrap();
        let (_, _, back) = wire::read_database(&mut buf.as_slice()).unwrap();
        check("wire-round-trip", back == db);
    }

    // Exact combinatorics and rate table.
    {
        let two = cbcpir::BigUint::from(2u64);
        let ok = cbcpir::q_binomial(2, 1, &two) == cbcpir::BigUint::from(3u64)
            && cbcpir::q_binomial(4, 2, &two) == cbcpir::BigUint::from(35u64);
        check("q-binomial", ok);

        let mut buf = Vec::new();
        write_parameter_table(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        check(
            "parameter-table",
            text.contains("1/128") && text.contains("1/6"),
        );
    }

    // Attack smoke test: one planted toy16 instance.
    {
        let params = SchemeParams::build(2, 4, 4, 2, 12, 6, 40, 5, 1).unwrap();
        let mut rng = StdRng::seed_from_u64(seed ^ 7);
        let target = rng.gen_range(0..40);
        let (bundle, _) = query_cbcpir(&params, target, &mut rng).unwrap();
        let report = recover_index(
            &params,
            &bundle.query,
            bundle.mask_query.as_ref().unwrap(),
            &AttackConfig {
                seed,
                ..AttackConfig::default()
            },
        )
        .unwrap();
        check("rank-attack", report.recovered == Some(target));

        let (ob, _) = query_original(&params, target, &mut rng).unwrap();
        let sub_orig = subquery_attack(&params, &ob.query).unwrap();
        let sub_cb = subquery_attack(&params, &bundle.query).unwrap();
        check(
            "subquery-contrast",
            sub_orig == SubqueryOutcome::Identified(target) && sub_cb == SubqueryOutcome::Undecided,
        );
    }

    if failures.is_empty() {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(CliError::SelftestFailed(format!(
            "{} check(s) failed: {}",
            failures.len(),
            failures.join(", ")
        )))
    }
}
