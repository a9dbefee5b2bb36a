//! Command-line front end behind the `staircase` binary.
//!
//! Every configuration key is also a `--key` flag; precedence is defaults,
//! then `--config` file, then the cache-directory environment variable, then
//! flags. Exit codes: 0 success, 1 error or oracle mismatch, 2 indeterminate
//! verdicts.

use std::ffi::OsString;
use std::sync::Arc;

use clap::{Arg, ArgMatches, Command};
use log::info;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::json;

use crate::analytics::{
    cross_height_gap, distance_grid, fit_cross_constant, inequality2, lemma_gap, lemma_sweep,
    mixing_profile, spectral_density, LemmaReport,
};
use crate::config::{RunConfig, KEYS};
use crate::construction::{census_horizon, j_r_census, Construction, StaircaseParams};
use crate::formal::{corrected_identity_residual, printed_identity_residual};
use crate::numeric::{bigint_from_biguint, ln_biguint, rational_string};
use crate::oracle::{compare_stage, sample_shifts, DEFAULT_WORD_CAP};
use crate::report::{decimals, enclosure_json, geometry_json, timestamp, write_formats, write_json, CsvReport};
use crate::correlation::CorrelationEngine;
use crate::enclosure::{Enclosure, Verdict};
use crate::error::{Error, Result};

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("build", "tower geometry per stage"),
    ("corr", "correlation enclosures c(n)"),
    ("lemma", "tower-height gap against 2r/h_j + 2r^-r"),
    ("ineq2", "averaged estimate against 2/|J_r|"),
    ("cross", "cross-height Gram deviation against r^-p"),
    ("distance", "distance to the cyclic space of f(x)f"),
    ("census", "plateau census J_r"),
    ("identity", "Cesaro identity residuals"),
    ("spectrum", "Fejer spectral density estimates"),
    ("mix", "correlation profile against the mixing limit"),
    ("oracle-check", "engine against brute force and the interval model"),
];

fn cli() -> Command {
    let mut cmd = Command::new("staircase")
        .about("Staircase rank-one transformations with certified correlations")
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .global(true)
                .help("key = value configuration file"),
        );
    for (key, default, help) in KEYS {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(*key)
                .value_name("VALUE")
                .global(true)
                .help(format!("{help} [default: {default:?}]")),
        );
    }
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(*name).about(*about));
    }
    cmd
}

fn load_config(m: &ArgMatches, sub: &ArgMatches) -> Result<RunConfig> {
    let mut cfg = match sub.get_one::<String>("config").or(m.get_one::<String>("config")) {
        Some(path) => RunConfig::from_file(path.as_ref())?,
        None => RunConfig::default(),
    };
    cfg.apply_env();
    for (key, _, _) in KEYS {
        if let Some(v) = sub.get_one::<String>(key).or(m.get_one::<String>(key)) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Run {
    cfg: RunConfig,
    command: String,
    indeterminate: bool,
}

impl Run {
    fn report(&self, name: &str) -> CsvReport {
        let mut r = CsvReport::new(name);
        r.comment(format!("staircase {}", self.command))
            .comment(format!("seed {}", self.cfg.seed))
            .comment(format!("generated {}", timestamp()))
            .comment(self.cfg.to_text());
        r
    }

    fn write(&self, r: &CsvReport) -> Result<()> {
        let path = r.write(&self.cfg.out_dir)?;
        info!("wrote {}", path.display());
        Ok(())
    }

    fn params(&self) -> Result<StaircaseParams> {
        self.cfg.params()
    }

    fn engine_for(&self, params: StaircaseParams) -> Result<CorrelationEngine> {
        let c = Arc::new(Construction::new(params)?);
        let e = if self.cfg.cache {
            CorrelationEngine::with_cache_dir(c, &self.cfg.cache_dir)?
        } else {
            CorrelationEngine::new(c)
        };
        Ok(e.with_stage_budget(self.cfg.stage_budget))
    }

    fn engine(&self) -> Result<CorrelationEngine> {
        self.engine_for(self.params()?)
    }

    fn eps(&self, engine: &CorrelationEngine) -> Result<BigRational> {
        Ok(self.cfg.absolute_eps(&engine.c0()?))
    }

    fn note(&mut self, v: &Verdict) {
        self.indeterminate |= v.is_indeterminate();
    }
}

fn enc_cols(e: &Enclosure) -> [String; 2] {
    let (lo, hi) = decimals(e);
    [lo, hi]
}

fn log10_of(x: &BigUint) -> f64 {
    ln_biguint(x) / std::f64::consts::LN_10
}

fn build(run: &mut Run) -> Result<()> {
    let c = Construction::new(run.params()?)?;
    let stages: Vec<usize> = if run.cfg.j.is_empty() {
        (0..=20).collect()
    } else {
        run.cfg.j.clone()
    };
    let mut rep = run.report("geometry");
    let mut geoms = Vec::new();
    for &j in &stages {
        let g = c.geometry(j)?;
        rep.push(vec![
            j.to_string(),
            g.rank.to_string(),
            g.height.to_string(),
            rational_string(&g.width),
            g.rank_product.to_string(),
            rational_string(&g.tower_measure),
        ]);
        println!("j={j} r_j={} h_j={} w_j={}", g.rank, g.height, rational_string(&g.width));
        geoms.push((*g).clone());
    }
    run.write(&rep)?;
    let mu = crate::construction::total_measure(&c, run.cfg.measure_stage)?;
    write_json(
        &run.cfg.out_dir,
        "geometry",
        &json!({ "params": c.params().canonical(), "stages": geometry_json(&geoms), "total_measure": enclosure_json(&mu) }),
    )?;
    Ok(())
}

fn corr(run: &mut Run) -> Result<()> {
    let e = run.engine()?;
    let eps = run.eps(&e)?;
    let mu = if run.cfg.normalize {
        Some(crate::construction::total_measure(e.construction(), run.cfg.measure_stage)?)
    } else {
        None
    };
    let mut rep = run.report("corr");
    for n in &run.cfg.corr_shifts()? {
        let est = e.correlation(&bigint_from_biguint(n), &eps)?;
        let enc = match &mu {
            Some(mu) => normalized(&est.enclosure, mu),
            None => est.enclosure.clone(),
        };
        let [lo, hi] = enc_cols(&enc);
        println!("c({n}) in [{lo}, {hi}] stage {}{}", est.stage, if est.converged { "" } else { " (not converged)" });
        rep.push(vec![
            n.to_string(),
            est.stage.to_string(),
            lo,
            hi,
            decimals(&Enclosure::point(enc.width())).1,
            est.converged.to_string(),
        ]);
    }
    run.write(&rep)?;
    e.flush_cache()
}

/// `c / μ(X)` for nonnegative enclosures with `μ(X) > 0`.
fn normalized(c: &Enclosure, mu: &Enclosure) -> Enclosure {
    Enclosure::new(c.lo() / mu.hi(), c.hi() / mu.lo())
}

fn census_of(params: &StaircaseParams, r: u64) -> Result<crate::construction::JrCensus> {
    j_r_census(params, r, census_horizon(params, r, 256))
}

fn census(run: &mut Run) -> Result<()> {
    let p = run.params()?;
    let mut rep = run.report("census");
    for &r in &run.cfg.r {
        let c = census_of(&p, r)?;
        println!("r={r} j_r={} |J_r|={} members={:?}", c.j_r, c.size(), c.members);
        rep.push(vec![
            r.to_string(),
            c.plateau_start.to_string(),
            c.j_r.to_string(),
            c.size().to_string(),
            c.reference.map(|x| format!("{x:.6}")).unwrap_or_default(),
            c.members.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(";"),
        ]);
    }
    run.write(&rep)
}

fn lemma_row(rep: &mut CsvReport, l: &LemmaReport) {
    let [glo, ghi] = enc_cols(&l.gap);
    let [alo, ahi] = enc_cols(&l.aligned_gap);
    rep.push(vec![
        l.r.to_string(),
        l.j.to_string(),
        format!("{:.6}", log10_of(&l.h_j)),
        l.on_plateau.to_string(),
        glo,
        ghi,
        decimals(&Enclosure::point(l.bound.clone())).1,
        l.verdict.label().to_string(),
        alo,
        ahi,
        l.aligned_verdict.label().to_string(),
    ]);
}

fn lemma(run: &mut Run) -> Result<()> {
    let e = run.engine()?;
    let eps = run.eps(&e)?;
    let mut rep = run.report("lemma");
    let mut slopes = run.report("lemma_slopes");
    let rs = run.cfg.r.clone();
    for r in rs {
        if run.cfg.j.is_empty() {
            let s = lemma_sweep(&e, r, &eps, &run.cfg.lemma_rel, run.cfg.max_log10_height)?;
            for l in &s.reports {
                lemma_row(&mut rep, l);
                run.note(&l.verdict);
            }
            let fmt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
            println!(
                "r={r} |J_r|={} slope={} aligned_slope={} indeterminate={:.3}",
                s.census.size(),
                fmt(s.slope),
                fmt(s.aligned_slope),
                s.indeterminate_fraction()
            );
            slopes.push(vec![
                r.to_string(),
                s.census.size().to_string(),
                fmt(s.slope),
                fmt(s.aligned_slope),
                format!("{:.6}", s.indeterminate_fraction()),
            ]);
        } else {
            for &j in &run.cfg.j.clone() {
                let l = lemma_gap(&e, j, r, &eps)?;
                println!("r={r} j={j} gap={} bound={} {}", l.gap, rational_string(&l.bound), l.verdict);
                lemma_row(&mut rep, &l);
                run.note(&l.verdict);
            }
        }
    }
    run.write(&rep)?;
    if !slopes.rows().is_empty() {
        run.write(&slopes)?;
    }
    e.flush_cache()
}

fn ineq2(run: &mut Run) -> Result<()> {
    let e = run.engine()?;
    let eps = run.eps(&e)?;
    let p = run.params()?;
    let mut rep = run.report("ineq2");
    let mut summary = Vec::new();
    for &r in &run.cfg.r.clone() {
        let c = census_of(&p, r)?;
        let x = inequality2(&e, &c, &eps)?;
        println!("r={r} |J_r|={} lhs={} rhs={} {}", c.size(), x.lhs, rational_string(&x.rhs), x.verdict);
        run.note(&x.verdict);
        let mut row = vec![r.to_string(), c.size().to_string()];
        for enc in [&x.qq, &x.qp, &x.pp, &x.lhs] {
            row.extend(enc_cols(enc));
        }
        row.push(rational_string(&x.rhs));
        row.push(x.verdict.label().to_string());
        row.extend(enc_cols(&x.lhs_aligned));
        row.push(x.verdict_aligned.label().to_string());
        rep.push(row);
        summary.push(json!({
            "r": r,
            "members": x.members,
            "lhs": enclosure_json(&x.lhs),
            "rhs": rational_string(&x.rhs),
            "verdict": x.verdict.label(),
        }));
    }
    run.write(&rep)?;
    write_json(&run.cfg.out_dir, "ineq2", &json!(summary))?;
    e.flush_cache()
}

fn cross(run: &mut Run) -> Result<()> {
    let e = run.engine()?;
    let eps = run.eps(&e)?;
    let params = run.params()?;
    let mut rep = run.report("cross");
    for &r in &run.cfg.r {
        let stages = if run.cfg.j.is_empty() {
            census_of(&params, r)?.members
        } else {
            run.cfg.j.clone()
        };
        let mut reports = Vec::new();
        for &j in &stages {
            for &p in &run.cfg.p {
                if params.rank(j + p)? != (r + 1) as u32 {
                    continue;
                }
                let x = cross_height_gap(&e, j, p, r, &eps)?;
                let [lo, hi] = enc_cols(&x.deviation);
                rep.push(vec![
                    r.to_string(),
                    j.to_string(),
                    p.to_string(),
                    lo,
                    hi,
                    format!("{:.6e}", x.height_ratio),
                    format!("{:.6e}", x.reference),
                    format!("{:.6e}", x.c_estimate),
                ]);
                reports.push(x);
            }
        }
        match fit_cross_constant(&reports) {
            Some(c) => println!("r={r} points={} fitted C={c:.6e}", reports.len()),
            None => println!("r={r} no plateau pairs with p >= 1"),
        }
    }
    run.write(&rep)?;
    e.flush_cache()
}

fn distance(run: &mut Run) -> Result<()> {
    let e = run.engine()?;
    let eps = run.eps(&e)?;
    let grid = distance_grid(&e, &run.cfg.r, &run.cfg.n_basis, run.cfg.precision_bits, &eps)?;
    let mut rep = run.report("distance");
    for d in &grid {
        println!(
            "r={} N={} rho_sq={:.6e} residual={:.3e} rank={}",
            d.r, d.n, d.rho_sq, d.solver_residual, d.effective_rank
        );
        rep.push(vec![
            d.r.to_string(),
            d.n.to_string(),
            format!("{:.12e}", d.rho_sq),
            format!("{:.12e}", d.relative),
            d.rho_sq_exact.map(|x| format!("{x:.12e}")).unwrap_or_default(),
            format!("{:.6e}", d.gram_condition),
            format!("{:.6e}", d.solver_residual),
            d.precision_bits.to_string(),
            d.effective_rank.to_string(),
            d.stage.to_string(),
        ]);
    }
    run.write(&rep)?;
    e.flush_cache()
}

fn identity(run: &mut Run) -> Result<()> {
    let mut rep = run.report("identity");
    let mut support = run.report("identity_support");
    let printed = run.cfg.mode == "printed";
    for &r in &run.cfg.r {
        let r = r as i64;
        let residual = if printed {
            printed_identity_residual(r)?.residual
        } else {
            corrected_identity_residual(r)?
        };
        let l1 = residual.l1_norm();
        println!("r={r} mode={} terms={} l1={}", run.cfg.mode, residual.len(), rational_string(&l1));
        rep.push(vec![r.to_string(), run.cfg.mode.clone(), residual.len().to_string(), rational_string(&l1)]);
        for ((a, b), k) in residual.iter() {
            support.push(vec![r.to_string(), a.to_string(), b.to_string(), rational_string(k)]);
        }
    }
    run.write(&rep)?;
    if printed {
        run.write(&support)?;
    }
    Ok(())
}

fn spectrum(run: &mut Run) -> Result<()> {
    let e = run.engine()?;
    let eps = run.eps(&e)?;
    let seq = e.sequence(run.cfg.spectrum_n as u64 - 1, &eps)?;
    let s = spectral_density(&seq, run.cfg.spectrum_n, run.cfg.grid)?;
    let mut rep = run.report("spectrum");
    for k in 0..s.theta.len() {
        rep.push(vec![
            k.to_string(),
            format!("{:.12e}", s.theta[k]),
            format!("{:.12e}", s.sigma[k]),
            format!("{:.12e}", s.sigma_sq[k]),
        ]);
    }
    let min = s.sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "stage={} mean={:.9e} c0={:.9e} min={:.3e} width={:.3e}",
        seq.stage,
        s.mean_sigma(),
        e.c0()?.to_f64().unwrap_or(f64::NAN),
        min,
        s.width_sigma
    );
    run.write(&rep)?;
    e.flush_cache()
}

fn mix(run: &mut Run) -> Result<()> {
    let e = run.engine()?;
    let eps = run.eps(&e)?;
    let rows = mixing_profile(&e, &run.cfg.shifts, &eps, run.cfg.measure_stage)?;
    let mut rep = run.report("mix");
    for row in &rows {
        let [lo, hi] = enc_cols(&row.corr);
        let [tlo, thi] = enc_cols(&row.target);
        println!("n={} c in [{lo}, {hi}] target in [{tlo}, {thi}]", row.n);
        rep.push(vec![row.n.to_string(), lo, hi, tlo, thi, row.converged.to_string()]);
    }
    run.write(&rep)?;
    e.flush_cache()
}

fn oracle_params(run: &Run, law: &str) -> Result<StaircaseParams> {
    if law == "config" {
        return run.params();
    }
    law.strip_prefix("constant")
        .and_then(|k| k.parse::<u32>().ok())
        .map(StaircaseParams::constant)
        .ok_or_else(|| Error::Config(format!("unknown oracle law {law:?}")))
}

fn oracle_check(run: &mut Run) -> Result<bool> {
    let mut rep = run.report("oracle");
    let mut all = true;
    for law in run.cfg.oracle_laws.clone() {
        let e = run.engine_for(oracle_params(run, &law)?)?;
        let base = e.construction().base_stage();
        let mut mismatches = 0;
        let mut total = 0;
        for j in base..=run.cfg.oracle_j_max {
            let h = e
                .construction()
                .height(j)?
                .to_u64()
                .ok_or_else(|| Error::Precondition("tower too tall for the oracle".into()))?;
            let shifts = sample_shifts(run.cfg.seed, j, h, run.cfg.samples);
            for row in compare_stage(&e, j, &shifts, DEFAULT_WORD_CAP)? {
                total += 1;
                if !row.matches() {
                    mismatches += 1;
                }
                rep.push(vec![
                    law.clone(),
                    j.to_string(),
                    row.shift.to_string(),
                    row.engine.to_string(),
                    row.brute.to_string(),
                    rational_string(&row.simulated),
                    rational_string(&row.lower),
                    row.matches().to_string(),
                ]);
            }
        }
        println!("{law}: {total} comparisons, {mismatches} mismatches");
        all &= mismatches == 0;
        e.flush_cache()?;
    }
    run.write(&rep)?;
    Ok(all)
}

fn dispatch(run: &mut Run) -> Result<bool> {
    match run.command.as_str() {
        "build" => build(run)?,
        "corr" => corr(run)?,
        "lemma" => lemma(run)?,
        "ineq2" => ineq2(run)?,
        "cross" => cross(run)?,
        "distance" => distance(run)?,
        "census" => census(run)?,
        "identity" => identity(run)?,
        "spectrum" => spectrum(run)?,
        "mix" => mix(run)?,
        "oracle-check" => return oracle_check(run),
        other => return Err(Error::Config(format!("unknown subcommand {other}"))),
    }
    Ok(true)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let result = load_config(&matches, sub).and_then(|cfg| {
        if cfg.threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
        }
        write_formats(&cfg.out_dir)?;
        let mut run = Run {
            cfg,
            command: name.to_string(),
            indeterminate: false,
        };
        let ok = dispatch(&mut run)?;
        Ok((ok, run.indeterminate))
    });
    match result {
        Ok((true, false)) => 0,
        Ok((true, true)) => {
            eprintln!("some verdicts are indeterminate");
            2
        }
        Ok((false, _)) => {
            eprintln!("oracle mismatches found");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
