use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use richards_core::io::{
    assign_orders, diagnose, diagnostics_csv, execute, field_l2_distance, parse_config_unchecked,
    read_fields, sweep_summary_csv, RunConfig, RunOutcome, RunReport, SweepRow,
};

/// Structure-preserving solver for nonisothermal multi-species Richards flow.
///
/// Every flag can also be set through an environment variable with the
/// `RICHARDS_` prefix, e.g. `RICHARDS_HORIZON=0.5`.
#[derive(Parser, Debug)]
#[command(name = "richards", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, env = "RICHARDS_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true, env = "RICHARDS_OUT")]
    out: Option<PathBuf>,
    /// Simulated time, overriding `run.horizon`.
    #[arg(long, global = true, env = "RICHARDS_HORIZON")]
    horizon: Option<f64>,
    /// Seed of the initial perturbation noise, overriding `run.seed`.
    #[arg(long, global = true, env = "RICHARDS_SEED")]
    seed: Option<u64>,
    /// Worker threads for sweeps; 0 uses all cores.
    #[arg(long, global = true, env = "RICHARDS_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation and write fields and diagnostics.
    Run,
    /// Run the Cartesian parameter sweep of the `[sweep]` block.
    Sweep,
    /// Check the model hypotheses and scheme parameters.
    Validate,
    /// Recompute diagnostics from the field dumps in the output directory.
    Diagnose,
}

/// Invariant failures exit with 1, configuration and I/O errors with 2.
enum Failure {
    Invariant,
    Setup(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Setup(e)
    }
}

impl Cli {
    fn read_text(&self) -> anyhow::Result<String> {
        match &self.config {
            Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
            None => Ok(String::new()),
        }
    }

    fn apply_overrides(&self, cfg: &mut RunConfig) {
        if let Some(o) = &self.out {
            cfg.output.directory = o.clone();
        }
        if let Some(h) = self.horizon {
            cfg.run.horizon = h;
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
    }

    fn load(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = parse_config_unchecked(&self.read_text()?)?;
        self.apply_overrides(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run => cmd_run(&cli),
        Command::Sweep => cmd_sweep(&cli),
        Command::Validate => cmd_validate(&cli),
        Command::Diagnose => cmd_diagnose(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant) => ExitCode::from(1),
        Err(Failure::Setup(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn report_outcome(dir: &Path, outcome: &Result<RunOutcome, String>) -> anyhow::Result<bool> {
    let rep = match outcome {
        Ok(o) => RunReport::from_outcome(o),
        Err(e) => RunReport::from_error(e),
    };
    fs::create_dir_all(dir)?;
    rep.write(&dir.join("report.toml"))?;
    Ok(rep.status == "ok")
}

fn cmd_run(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.load()?;
    let dir = cfg.output.directory.clone();
    let outcome = execute(&cfg, &dir).map_err(|e| e.to_string());
    let ok = report_outcome(&dir, &outcome)?;
    match &outcome {
        Ok(o) => {
            let last = o.records.last().expect("initial record");
            println!(
                "{} steps to t = {}, lyapunov {:.6e} -> {:.6e}, output in {}",
                last.step,
                last.time,
                o.records[0].lyapunov,
                last.lyapunov,
                dir.display()
            );
            for v in &o.violations {
                eprintln!("violation: {v}");
            }
        }
        Err(e) => eprintln!("run failed: {e}"),
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Invariant)
    }
}

fn point_dir(root: &Path, k: usize, c: &RunConfig) -> PathBuf {
    root.join(format!("point_{k:03}_eps{}_tau{}_delta{}", c.scheme.eps, c.scheme.tau, c.scheme.delta))
}

fn cmd_sweep(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.load()?;
    let root = cfg.output.directory.clone();
    let points = cfg.sweep_points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .context("building thread pool")?;

    // Reference runs, one per (eps, delta) pair.
    let mut refs: BTreeMap<(u64, u64), RunConfig> = BTreeMap::new();
    if let Some(rt) = cfg.sweep.reference_tau {
        for p in &points {
            let mut r = p.clone();
            r.scheme.tau = rt;
            r.output.cadence = 0;
            refs.entry((p.scheme.eps.to_bits(), p.scheme.delta.to_bits())).or_insert(r);
        }
    }
    let ref_list: Vec<_> = refs.into_iter().collect();

    let (outcomes, ref_outcomes) = pool.install(|| {
        let o: Vec<Result<RunOutcome, String>> = points
            .par_iter()
            .enumerate()
            .map(|(k, p)| execute(p, &point_dir(&root, k, p)).map_err(|e| e.to_string()))
            .collect();
        let r: Vec<Result<RunOutcome, String>> = ref_list
            .par_iter()
            .enumerate()
            .map(|(k, (_, c))| execute(c, &root.join(format!("reference_{k:03}"))).map_err(|e| e.to_string()))
            .collect();
        (o, r)
    });

    let mut ok = true;
    let mut rows = Vec::with_capacity(points.len());
    for (k, (p, o)) in points.iter().zip(&outcomes).enumerate() {
        ok &= report_outcome(&point_dir(&root, k, p), o)?;
        let mut row = SweepRow::new(p, o);
        let key = (p.scheme.eps.to_bits(), p.scheme.delta.to_bits());
        if let (Ok(run), Some(j)) = (o, ref_list.iter().position(|(k, _)| *k == key)) {
            if let Ok(reference) = &ref_outcomes[j] {
                let scheme = p.build_scheme().context("rebuilding scheme")?;
                row.error_l2 = field_l2_distance(&scheme, &run.final_state, &reference.final_state).ok();
            }
        }
        rows.push(row);
    }
    for (k, r) in ref_outcomes.iter().enumerate() {
        ok &= report_outcome(&root.join(format!("reference_{k:03}")), r)?;
    }
    assign_orders(&mut rows);
    let summary = sweep_summary_csv(&rows);
    fs::create_dir_all(&root).context("creating output directory")?;
    fs::write(root.join("sweep_summary.csv"), &summary).context("writing sweep summary")?;
    print!("{summary}");
    if ok {
        Ok(())
    } else {
        Err(Failure::Invariant)
    }
}

fn cmd_validate(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = parse_config_unchecked(&cli.read_text()?).map_err(anyhow::Error::from)?;
    cli.apply_overrides(&mut cfg);
    let report = cfg.model().validate_hypotheses();
    print!("{report}");
    let rest = cfg.validate();
    if let Err(e) = &rest {
        println!("FAIL  configuration: {e}");
    }
    if report.all_passed() && rest.is_ok() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Failure::Invariant)
    }
}

fn cmd_diagnose(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.load()?;
    let dir = cfg.output.directory.clone();
    let mut dumps = Vec::new();
    for entry in fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry.context("listing output directory")?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(step) = name
            .strip_prefix("fields_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            dumps.push((step, path));
        }
    }
    if dumps.is_empty() {
        return Err(anyhow::anyhow!("no fields_*.csv dumps in {}", dir.display()).into());
    }
    dumps.sort();
    let loaded = dumps
        .iter()
        .map(|(step, path)| {
            let d = read_fields(path).with_context(|| format!("reading {}", path.display()))?;
            Ok((*step, *step as f64 * cfg.scheme.tau, d))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let records = diagnose(&cfg, &loaded).map_err(anyhow::Error::from)?;
    let scheme = cfg.build_scheme().map_err(anyhow::Error::from)?;
    let out = dir.join("diagnostics_recomputed.csv");
    fs::write(&out, diagnostics_csv(cfg.model.species, &records)).context("writing diagnostics")?;
    let mut bad = 0;
    for r in &records {
        for v in r.violations(&scheme) {
            eprintln!("step {}: {v}", r.step);
            bad += 1;
        }
    }
    println!("{} dumps diagnosed, {bad} violations, written to {}", records.len(), out.display());
    if bad == 0 {
        Ok(())
    } else {
        Err(Failure::Invariant)
    }
}
