use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64;
use pentagon::doublesine::{self, SbMethod};
use pentagon::identities::{self, FormVariant, IdentityId, VerificationReport};
use pentagon::qseries;
use pentagon::{Nome64, Policy64, Squashing64};
use rayon::prelude::*;

use crate::config::{Config, Settings};
use crate::parse::{self, format_complex};
use crate::record::{self, RunRecord, SeedFailure};
use crate::{CliError, EvalArgs, EvalFn, Method, RunArgs};

const EVAL_TOL: f64 = 1e-12;

pub fn eval(cfg: &Config, a: &EvalArgs) -> Result<(), CliError> {
    let e = &cfg.eval;
    let func = a.function.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let get = |cli: &Option<String>, conf: &Option<String>, name: &str| -> Result<Complex64, CliError> {
        let s = cli
            .as_ref()
            .or(conf.as_ref())
            .ok_or_else(|| CliError::Usage(format!("eval {func} needs --{name}")))?;
        parse::complex(s)
    };
    let m = || a.m.or(e.m).ok_or_else(|| CliError::Usage(format!("eval {func} needs --m")));
    let n = a.n.or(e.n);
    let tol = positive(a.tol.or(e.tol).unwrap_or(EVAL_TOL))?;
    let nome = |s: &Option<String>, c: &Option<String>| -> Result<Nome64, CliError> { Ok(Nome64::new(get(s, c, "q")?)?) };
    let value = match a.function {
        EvalFn::Sb => {
            let b = Squashing64::new(get(&a.b, &e.b, "b")?)?;
            let x = get(&a.x, &e.x, "x")?;
            let method = match (a.method, &e.method) {
                (Some(m), _) => m,
                (None, Some(s)) => Method::from_str(s, true).map_err(CliError::Usage)?,
                (None, None) => Method::Integral,
            };
            match method {
                Method::Integral => doublesine::sb_integral(x, &b, tol)?,
                Method::Product => doublesine::sb(x, &b, SbMethod::Product, tol)?,
                Method::Auto => doublesine::sb(x, &b, SbMethod::Auto, tol)?,
            }
        }
        EvalFn::Pochhammer => {
            let z = get(&a.a, &e.a, "a")?;
            let q = nome(&a.q, &e.q)?;
            match n {
                Some(n) if n < 0 => return Err(CliError::Usage(format!("--n must be non-negative, got {n}"))),
                Some(n) => qseries::pochhammer_fin(z, &q, n as usize),
                None => qseries::pochhammer_inf(z, &q, &Policy64 { tol, ..Default::default() })?.value,
            }
        }
        EvalFn::BfunS3b => {
            let b = Squashing64::new(get(&a.b, &e.b, "b")?)?;
            identities::bfun_s3b(get(&a.x, &e.x, "x")?, get(&a.y, &e.y, "y")?, &b, tol)?
        }
        EvalFn::BfunS2s1 => identities::bfun_s2s1(m()?, get(&a.z, &e.z, "z")?, &nome(&a.q, &e.q)?)?,
        EvalFn::BfunRp2 => {
            let m = m()?;
            if m < 0.0 || m.fract() != 0.0 || m > u32::MAX as f64 {
                return Err(CliError::Usage(format!("--m must be a non-negative integer, got {m}")));
            }
            identities::bfun_rp2(get(&a.z, &e.z, "z")?, m as u32, &nome(&a.q, &e.q)?)?
        }
        EvalFn::BfunFlavored => {
            let m = m()?;
            if m.fract() != 0.0 {
                return Err(CliError::Usage(format!("--m must be an integer, got {m}")));
            }
            let n = n.ok_or_else(|| CliError::Usage("eval bfun-flavored needs --n".into()))?;
            let z = get(&a.a, &e.a, "a")?;
            let b = get(&a.b, &e.b, "b")?;
            identities::bfun_flavored(z, n, b, m as i64, &nome(&a.q, &e.q)?)?
        }
    };
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(CliError::Evaluation(format!("eval {func} produced a non-finite value")));
    }
    println!("{}", format_complex(value));
    Ok(())
}

fn positive(tol: f64) -> Result<f64, CliError> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(CliError::Usage(format!("tolerance must be positive and finite, got {tol}")))
    }
}

struct Run {
    id: IdentityId,
    form: FormVariant,
    tol: f64,
    seeds: Vec<u64>,
    jobs: usize,
    out: Option<PathBuf>,
}

fn resolve(cfg: &Config, args: &RunArgs, default_seeds: &str) -> Result<Run, CliError> {
    let s: Settings = cfg.resolve(args.settings(), None);
    let id_name = s.identity.as_deref().ok_or_else(|| CliError::Usage("--identity is required".into()))?;
    let id: IdentityId = id_name.parse().map_err(|e: pentagon::Error| CliError::Usage(e.to_string()))?;
    let form = match s.form.as_deref() {
        Some(f) => id.resolve_form(f).map_err(|e| CliError::Usage(e.to_string()))?,
        None => id.canonical_form(),
    };
    let seeds = match (&s.seeds, s.seed) {
        (Some(r), _) => parse::seeds(r)?,
        (None, Some(n)) => vec![n],
        (None, None) => parse::seeds(default_seeds)?,
    };
    let jobs = s.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok(Run { id, form, tol: positive(s.tol.unwrap_or(id.default_tol()))?, seeds, jobs, out: s.out })
}

fn check(id: IdentityId, seed: u64, form: FormVariant, tol: f64) -> Result<VerificationReport, pentagon::Error> {
    identities::verify(id, &identities::sample_point(id, seed)?, form, tol)
}

/// Runs every seed on a pool of `jobs` threads; results come back in seed order.
fn run_seeds(run: &Run) -> Result<RunRecord, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", run.jobs)))?;
    let results: Vec<_> = pool.install(|| {
        run.seeds.par_iter().map(|&seed| (seed, check(run.id, seed, run.form, run.tol))).collect()
    });
    Ok(collect("", run, results))
}

fn collect(command: &str, run: &Run, results: Vec<(u64, Result<VerificationReport, pentagon::Error>)>) -> RunRecord {
    let mut rec = RunRecord::new(command, Some(run.id), run.seeds.clone(), run.tol);
    rec.form = Some(run.form);
    for (seed, r) in results {
        match r {
            Ok(r) => rec.reports.push(r),
            Err(e) => rec.failures.push(SeedFailure { seed, error: e.to_string() }),
        }
    }
    rec.summarize();
    rec
}

fn report_seeds(rec: &RunRecord) -> Vec<u64> {
    let failed: Vec<u64> = rec.failures.iter().map(|f| f.seed).collect();
    rec.seeds.iter().copied().filter(|s| !failed.contains(s)).collect()
}

fn outcome(rec: &RunRecord) -> Result<(), CliError> {
    if let Some(first) = rec.failures.first() {
        let seeds: Vec<String> = rec.failures.iter().map(|f| f.seed.to_string()).collect();
        return Err(CliError::Evaluation(format!(
            "evaluation failed for seeds [{}]; seed {}: {}",
            seeds.join(", "),
            first.seed,
            first.error
        )));
    }
    if rec.summary.failed > 0 {
        return Err(CliError::Violation(format!(
            "{}: {} of {} points exceed tolerance {:e}",
            rec.identity.map(|i| i.name()).unwrap_or("?"),
            rec.summary.failed,
            rec.summary.points,
            rec.tolerance
        )));
    }
    Ok(())
}

pub fn verify(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let run = resolve(cfg, args, "0")?;
    let results = run.seeds.iter().map(|&seed| (seed, check(run.id, seed, run.form, run.tol))).collect();
    let rec = collect("verify", &run, results);
    for (seed, r) in report_seeds(&rec).iter().zip(&rec.reports) {
        println!(
            "{} seed {} [{}]: lhs {} rhs {} rel_residual {:.3e} tol {:e} {}",
            run.id,
            seed,
            run.form,
            format_complex(r.lhs),
            format_complex(r.rhs),
            r.rel_residual,
            run.tol,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    if let Some(out) = &run.out {
        rec.write(out)?;
    }
    outcome(&rec)
}

fn sweep_paths(out: &Path) -> (PathBuf, PathBuf) {
    if out.extension().is_some_and(|e| e == "csv") {
        (out.with_extension("json"), out.to_path_buf())
    } else {
        (out.to_path_buf(), out.with_extension("csv"))
    }
}

pub fn sweep(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let run = resolve(cfg, args, "0..20")?;
    let mut rec = run_seeds(&run)?;
    rec.command = "sweep".into();
    let seeds = report_seeds(&rec);
    match &run.out {
        Some(out) => {
            let (json, csv) = sweep_paths(out);
            rec.write(&json)?;
            let file = std::fs::File::create(&csv).map_err(|e| CliError::Io(csv.display().to_string(), e))?;
            record::write_table(file, &seeds, &rec.reports)?;
            println!(
                "{}: {}/{} passed, worst {}",
                run.id,
                rec.summary.passed,
                rec.summary.points,
                rec.summary.worst_rel_residual.map_or("n/a".into(), |w| format!("{w:.3e}"))
            );
        }
        None => record::write_table(std::io::stdout().lock(), &seeds, &rec.reports)?,
    }
    outcome(&rec)
}

pub fn scan_variants(cfg: &Config, args: &RunArgs) -> Result<(), CliError> {
    let run = resolve(cfg, args, "0..5")?;
    let points = run
        .seeds
        .iter()
        .map(|&s| identities::sample_point(run.id, s))
        .collect::<Result<Vec<_>, _>>()?;
    let scores = identities::variant_scan(run.id, &points, run.tol)?;
    let canonical = scores.iter().find(|s| s.canonical).map(|s| s.form);
    let mut rec = RunRecord::new("scan-variants", Some(run.id), run.seeds.clone(), run.tol);
    for s in &scores {
        let shown = match (&s.max_rel_residual, &s.error) {
            (Some(r), _) => format!("{r:.3e}"),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "n/a".into(),
        };
        println!("{:<20} {}{}", s.form.name(), shown, if s.canonical { "  canonical" } else { "" });
        let holds = s.max_rel_residual.is_some_and(|r| r < run.tol);
        if s.form.name().ends_with("as-printed") && !holds {
            rec.discrepancies.push(format!("{} does not hold as printed: {}", s.form, shown));
        }
    }
    if let Some(form) = canonical {
        rec.form = Some(form);
        rec.reports = points.iter().map(|p| identities::verify(run.id, p, form, run.tol)).collect::<Result<_, _>>()?;
    }
    rec.canonical_variant = canonical;
    rec.variant_scan = Some(scores);
    rec.summarize();
    if let Some(out) = &run.out {
        rec.write(out)?;
    }
    match canonical {
        Some(_) => Ok(()),
        None => Err(CliError::Violation(format!("{}: no form holds to {:e}", run.id, run.tol))),
    }
}

#[derive(Default)]
struct Tally {
    passed: usize,
    points: usize,
    worst: Option<f64>,
    canonical: Option<FormVariant>,
}

pub fn report(files: &[PathBuf]) -> Result<(), CliError> {
    if files.is_empty() {
        return Err(CliError::Usage("report needs at least one run record".into()));
    }
    let mut tallies: BTreeMap<IdentityId, Tally> = BTreeMap::new();
    for path in files {
        let rec = RunRecord::read(path)?;
        let Some(id) = rec.identity else { continue };
        let t = tallies.entry(id).or_default();
        t.passed += rec.summary.passed;
        t.points += rec.summary.points;
        t.worst = match (t.worst, rec.summary.worst_rel_residual) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        t.canonical = rec.canonical_variant.or(t.canonical);
    }
    let mut bad = 0;
    for (id, t) in &tallies {
        let worst = t.worst.map_or("n/a".into(), |w| format!("{w:.1e}"));
        let canonical = t.canonical.map_or(String::new(), |c| format!(", canonical {c}"));
        println!("{id}: {}/{}, worst {worst}{canonical}", t.passed, t.points);
        bad += t.points - t.passed;
    }
    if bad > 0 {
        return Err(CliError::Violation(format!("{bad} points failed")));
    }
    Ok(())
}
