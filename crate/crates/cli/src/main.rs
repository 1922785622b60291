//! Batch front end: configure, run, inspect files.
//!
//! Subcommands: `run`, `sweep-delta`, `sweep-sigma`, `refine`,
//! `dispersion`, `check`, `resume`. Exit codes: 0 success, 1 validation
//! or usage failure, 2 step failure, 3 check-suite failure.

mod config;
mod snapshot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chnl_core::diagnostics::{self, Scenario};
use chnl_core::model::make_initial;
use chnl_core::stepper::{self, checkpoint, StepError};

use config::RunConfig;

const USAGE: &str = "usage: chnl <subcommand> [args]

subcommands:
  run <config>                      integrate; writes diagnostics.csv, snapshots, checkpoints
  sweep-delta <config> --ladder v1,v2,...   sixth-order coefficient ladder; writes sweep.csv
  sweep-sigma <config> --ladder v1,v2,...   regularisation ladder; writes sweep.csv
  refine <config> --levels n        mesh-refinement study; writes sweep.csv
  dispersion <config>               linear-regime decay-rate table; writes dispersion.csv
  check                             run the built-in property suite
  resume <checkpoint> <config>      continue a checkpointed run to t_end

flags: --out <dir>  --seed <u64>  --quiet  --snapshot-every <n>
       --ladder <v1,v2,...>  --levels <n>";

struct Flags {
    out: Option<String>,
    seed: Option<u64>,
    quiet: bool,
    snapshot_every: Option<usize>,
    ladder: Option<Vec<f64>>,
    levels: Option<usize>,
    positional: Vec<String>,
}

fn parse_flags(args: &[String]) -> Result<Flags, String> {
    let mut flags = Flags {
        out: None,
        seed: None,
        quiet: false,
        snapshot_every: None,
        ladder: None,
        levels: None,
        positional: Vec::new(),
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" => {
                flags.out = Some(it.next().ok_or("--out needs a directory")?.clone());
            }
            "--seed" => {
                let v = it.next().ok_or("--seed needs a value")?;
                flags.seed = Some(v.parse().map_err(|e| format!("bad --seed `{v}`: {e}"))?);
            }
            "--quiet" => flags.quiet = true,
            "--snapshot-every" => {
                let v = it.next().ok_or("--snapshot-every needs a value")?;
                flags.snapshot_every =
                    Some(v.parse().map_err(|e| format!("bad --snapshot-every `{v}`: {e}"))?);
            }
            "--ladder" => {
                let v = it.next().ok_or("--ladder needs a comma list")?;
                let ladder = v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| format!("bad --ladder `{v}`: {e}"))?;
                flags.ladder = Some(ladder);
            }
            "--levels" => {
                let v = it.next().ok_or("--levels needs a value")?;
                flags.levels = Some(v.parse().map_err(|e| format!("bad --levels `{v}`: {e}"))?);
            }
            other if other.starts_with("--") => return Err(format!("unknown flag {other}")),
            other => flags.positional.push(other.to_string()),
        }
    }
    Ok(flags)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(args: &[String]) -> Result<ExitCode, String> {
    let Some(sub) = args.first() else {
        eprintln!("{USAGE}");
        return Ok(ExitCode::from(1));
    };
    let flags = parse_flags(&args[1..])?;
    match sub.as_str() {
        "run" => cmd_run(&flags),
        "sweep-delta" => cmd_sweep(&flags, SweepKind::Delta),
        "sweep-sigma" => cmd_sweep(&flags, SweepKind::Sigma),
        "refine" => cmd_refine(&flags),
        "dispersion" => cmd_dispersion(&flags),
        "check" => Ok(cmd_check(&flags)),
        "resume" => cmd_resume(&flags),
        other => {
            eprintln!("unknown subcommand `{other}`\n{USAGE}");
            Ok(ExitCode::from(1))
        }
    }
}

fn load_config(flags: &Flags, at: usize) -> Result<RunConfig, String> {
    let path = flags
        .positional
        .get(at)
        .ok_or_else(|| format!("missing config path\n{USAGE}"))?;
    let mut cfg = RunConfig::from_file(Path::new(path)).map_err(|e| e.to_string())?;
    if let Some(out) = &flags.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(n) = flags.snapshot_every {
        cfg.snapshot_every = n;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, String> {
    let dir = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

fn step_exit(err: &StepError) -> ExitCode {
    match err {
        StepError::StepFailure { .. } | StepError::Instability(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn cmd_run(flags: &Flags) -> Result<ExitCode, String> {
    let cfg = load_config(flags, 0)?;
    let dir = out_dir(&cfg)?;
    let domain = cfg.domain().map_err(|e| e.to_string())?;
    let params = cfg.params().map_err(|e| e.to_string())?;
    let stepper_cfg = cfg.stepper();
    let u0 = make_initial(&cfg.initial_kind(), &domain).map_err(|e| e.to_string())?;

    snapshot::write_snapshot(&dir.join("initial.snap"), &u0, 0.0).map_err(|e| e.to_string())?;
    let mut io_error: Option<String> = None;
    let result = stepper::run_with(&u0, &stepper_cfg, &params, cfg.diagnostics_every, |i, state, report| {
        if cfg.snapshot_every > 0 && i % cfg.snapshot_every == 0 {
            let p = dir.join(format!("u_{i:08}.snap"));
            if let Err(e) = snapshot::write_snapshot(&p, &state.u, state.t) {
                io_error.get_or_insert(e.to_string());
            }
        }
        if cfg.checkpoint_every > 0 && i % cfg.checkpoint_every == 0 {
            let tau_resume = (2.0 * report.tau_used).min(stepper_cfg.tau);
            if let Err(e) =
                checkpoint::write_checkpoint(&dir.join("checkpoint.chkp"), state, tau_resume)
            {
                io_error.get_or_insert(e.to_string());
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e);
    }

    let (output, failure) = match result {
        Ok(out) => (out, None),
        Err(fail) => {
            let stepper::RunFailure { error, partial } = *fail;
            (partial, Some(error))
        }
    };
    std::fs::write(dir.join("diagnostics.csv"), output.series.to_csv())
        .map_err(|e| e.to_string())?;
    snapshot::write_snapshot(
        &dir.join("final.snap"),
        &output.final_state.u,
        output.final_state.t,
    )
    .map_err(|e| e.to_string())?;

    if let Some(err) = failure {
        eprintln!("run failed at t = {}: {err}", output.final_state.t);
        eprintln!("partial results written to {}", dir.display());
        return Ok(step_exit(&err));
    }
    if !flags.quiet {
        let last = output.series.records.last().expect("nonempty series");
        println!(
            "run complete: t = {}, {} steps, energy {} -> {}, mass drift {:e}",
            output.final_state.t,
            output.accepted_steps,
            output.series.records[0].energy,
            last.energy,
            (last.mass - output.series.records[0].mass).abs()
        );
        println!("wrote {}", dir.join("diagnostics.csv").display());
    }
    Ok(ExitCode::SUCCESS)
}

enum SweepKind {
    Delta,
    Sigma,
}

fn scenario_from(cfg: &RunConfig) -> Result<Scenario, String> {
    Ok(Scenario {
        domain: cfg.domain().map_err(|e| e.to_string())?,
        params: cfg.params().map_err(|e| e.to_string())?,
        cfg: cfg.stepper(),
        initial: cfg.initial_kind(),
        smooth_initial: false,
        diagnostics_every: cfg.diagnostics_every,
    })
}

fn sweep_exit(e: &diagnostics::DiagnosticsError) -> ExitCode {
    match e {
        diagnostics::DiagnosticsError::RunAt { source, .. } => step_exit(&source.error),
        diagnostics::DiagnosticsError::Step(s) => step_exit(s),
        _ => ExitCode::from(1),
    }
}

fn cmd_sweep(flags: &Flags, kind: SweepKind) -> Result<ExitCode, String> {
    let cfg = load_config(flags, 0)?;
    let dir = out_dir(&cfg)?;
    let ladder = flags.ladder.clone().ok_or("sweep needs --ladder v1,v2,...")?;
    let scenario = scenario_from(&cfg)?;
    let result = match kind {
        SweepKind::Delta => diagnostics::sweep_delta(&scenario, &ladder),
        SweepKind::Sigma => diagnostics::sweep_sigma(&scenario, &ladder),
    };
    match result {
        Ok(report) => {
            std::fs::write(dir.join("sweep.csv"), report.to_csv()).map_err(|e| e.to_string())?;
            if !flags.quiet {
                println!(
                    "sweep complete: distances {:?}, observed order {:.3}",
                    report.distances_l2, report.observed_order
                );
                println!("wrote {}", dir.join("sweep.csv").display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("sweep failed: {e}");
            Ok(sweep_exit(&e))
        }
    }
}

fn cmd_refine(flags: &Flags) -> Result<ExitCode, String> {
    let cfg = load_config(flags, 0)?;
    let dir = out_dir(&cfg)?;
    let levels = flags.levels.ok_or("refine needs --levels n")?;
    let scenario = scenario_from(&cfg)?;
    match diagnostics::refine(&scenario, levels) {
        Ok(report) => {
            std::fs::write(dir.join("sweep.csv"), report.to_csv()).map_err(|e| e.to_string())?;
            if !flags.quiet {
                println!(
                    "refinement complete: distances {:?}, observed order {:.3}",
                    report.distances_l2, report.observed_order
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("refine failed: {e}");
            Ok(sweep_exit(&e))
        }
    }
}

fn cmd_dispersion(flags: &Flags) -> Result<ExitCode, String> {
    let cfg = load_config(flags, 0)?;
    let dir = out_dir(&cfg)?;
    let domain = cfg.domain().map_err(|e| e.to_string())?;
    let params = cfg.params().map_err(|e| e.to_string())?;
    match diagnostics::dispersion_check(&domain, &params, &[1, 2, 3], 0.1, 1e-4) {
        Ok(rows) => {
            let mut csv = String::from("k_index,symbol,mu_numeric,mu_analytic,rel_err\n");
            if !flags.quiet {
                println!("{:>3} {:>14} {:>16} {:>16} {:>10}", "k", "symbol", "mu_numeric", "mu_analytic", "rel_err");
            }
            for r in &rows {
                if !flags.quiet {
                    println!(
                        "{:>3} {:>14.6} {:>16.6} {:>16.6} {:>10.2e}",
                        r.k_index, r.symbol, r.mu_numeric, r.mu_analytic, r.rel_err
                    );
                }
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.k_index, r.symbol, r.mu_numeric, r.mu_analytic, r.rel_err
                ));
            }
            std::fs::write(dir.join("dispersion.csv"), csv).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("dispersion failed: {e}");
            Ok(sweep_exit(&e))
        }
    }
}

fn cmd_check(flags: &Flags) -> ExitCode {
    let mut all_ok = true;
    for outcome in chnl_core::check::run_all() {
        all_ok &= outcome.passed;
        let tag = if outcome.passed { "ok  " } else { "FAIL" };
        if !flags.quiet || !outcome.passed {
            println!("{tag} {:-24} {}", outcome.group, outcome.detail);
        }
    }
    // format round trips live in this crate
    match format_selftest() {
        Ok(detail) => {
            if !flags.quiet {
                println!("ok   {:-24} {detail}", "config-and-formats");
            }
        }
        Err(detail) => {
            all_ok = false;
            println!("FAIL {:-24} {detail}", "config-and-formats");
        }
    }
    if all_ok {
        if !flags.quiet {
            println!("all checks passed");
        }
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn format_selftest() -> Result<String, String> {
    // config canonical round trip
    let text = "mode = fourth\ncells = 32\nsigma = 1e-3\nlambda = 1\n";
    let cfg = RunConfig::parse(text).map_err(|e| e.to_string())?;
    let canon = cfg.to_canonical_string();
    let back = RunConfig::parse(&canon).map_err(|e| e.to_string())?;
    if back != cfg {
        return Err("config canonical form does not round trip".into());
    }
    // snapshot bit-exact round trip in a scratch dir
    let dir = std::env::temp_dir().join(format!("chnl-selftest-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let dom = chnl_core::grid::Domain::unit(&[16, 8], chnl_core::grid::Bc::Periodic)
        .map_err(|e| e.to_string())?;
    let f = chnl_core::grid::Field::from_fn(&dom, |x| (x[0] * 12.7).sin() + x[1]);
    let p = dir.join("roundtrip.snap");
    snapshot::write_snapshot(&p, &f, 0.625).map_err(|e| e.to_string())?;
    let (g, t) = snapshot::read_snapshot(&p).map_err(|e| e.to_string())?;
    let bits_ok = t.to_bits() == 0.625f64.to_bits()
        && f.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    let _ = std::fs::remove_dir_all(&dir);
    if !bits_ok {
        return Err("snapshot round trip is not bit-exact".into());
    }
    Ok("config and snapshot round trips are exact".into())
}

fn cmd_resume(flags: &Flags) -> Result<ExitCode, String> {
    let ckpt_path = flags
        .positional
        .first()
        .ok_or_else(|| format!("resume needs <checkpoint> <config>\n{USAGE}"))?
        .clone();
    let cfg = load_config(flags, 1)?;
    let dir = out_dir(&cfg)?;
    let params = cfg.params().map_err(|e| e.to_string())?;
    let stepper_cfg = cfg.stepper();
    let (state, tau) =
        checkpoint::read_checkpoint(Path::new(&ckpt_path)).map_err(|e| e.to_string())?;
    if state.t >= stepper_cfg.t_end {
        return Err(format!(
            "checkpoint time {} is already past t_end {}",
            state.t, stepper_cfg.t_end
        ));
    }
    let result =
        stepper::run_from(state, tau, &stepper_cfg, &params, cfg.diagnostics_every, |_, _, _| {});
    let (output, failure) = match result {
        Ok(out) => (out, None),
        Err(fail) => {
            let stepper::RunFailure { error, partial } = *fail;
            (partial, Some(error))
        }
    };
    std::fs::write(dir.join("diagnostics.csv"), output.series.to_csv())
        .map_err(|e| e.to_string())?;
    snapshot::write_snapshot(
        &dir.join("final.snap"),
        &output.final_state.u,
        output.final_state.t,
    )
    .map_err(|e| e.to_string())?;
    if let Some(err) = failure {
        eprintln!("resume failed at t = {}: {err}", output.final_state.t);
        return Ok(step_exit(&err));
    }
    if !flags.quiet {
        println!(
            "resume complete: t = {}, {} further steps",
            output.final_state.t, output.accepted_steps
        );
    }
    Ok(ExitCode::SUCCESS)
}
