//! Batch driver for the periodic competition-diffusion toolkit.
//!
//! Every invocation loads one scenario (from a TOML file or a named
//! built-in), runs one analysis subcommand, and writes its artifacts
//! under an output directory keyed by the scenario hash. Exit status:
//! 0 on success, 2 on an inconclusive result (for example a rejected
//! front), 1 on errors.

mod output;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lvfront_core::asymptotics::{self, SegregatedKind};
use lvfront_core::eigen;
use lvfront_core::evolution::{self, Scheme, Stepper};
use lvfront_core::front::{self, FrontDomain, FrontMeasurement, RunSettings};
use lvfront_core::grid::{Field, PeriodicGrid};
use lvfront_core::model::Species;
use lvfront_core::stationary::{self, StatePair};
use lvfront_core::Scenario;
use output::{Manifest, RunDir};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "lvfront", version, about = "Periodic two-species competition-diffusion toolkit")]
struct Cli {
    /// Scenario TOML file; mutually exclusive with --builtin.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Built-in scenario: default | homogeneous | wide.
    #[arg(long, global = true, default_value = "default")]
    builtin: String,

    /// Override the competition rate k.
    #[arg(long, global = true)]
    k: Option<f64>,

    /// Output root; defaults to $LVFRONT_OUT or ./runs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override nodes per period.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Scale all solver tolerances by this factor.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Cap worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the reaction hypotheses and the frequency condition.
    Check,
    /// Compute the two extinction-state profiles.
    Extinction,
    /// Periodic principal eigenvalues of the two scalar operators.
    Eigen,
    /// Search for periodic coexistence states and classify stability.
    Coexist {
        /// Number of pseudo-random seeds in the bank.
        #[arg(long, default_value_t = 16)]
        seeds: usize,
        /// Optional explicit path for the JSON report.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Integrate the parabolic system and record snapshots.
    Simulate {
        #[arg(long = "t-end", default_value_t = 5.0)]
        t_end: f64,
        #[arg(long)]
        dt: Option<f64>,
        /// Initial condition: extinction1 | extinction2 | front | file:PATH.
        #[arg(long, default_value = "extinction1")]
        ic: String,
        #[arg(long = "record-every", default_value_t = 100)]
        record_every: usize,
        /// Domain width in periods.
        #[arg(long, default_value_t = 1)]
        periods: usize,
    },
    /// Construct a front-like run and measure the invasion speed.
    Front {
        #[arg(long, default_value_t = 100)]
        periods: usize,
        #[arg(long, default_value_t = 0.5)]
        level: f64,
        #[arg(long = "t-end", default_value_t = 60.0)]
        t_end: f64,
        #[arg(long = "nodes-per-period", default_value_t = 64)]
        nodes_per_period: usize,
        /// Species whose level set is tracked (1 or 2).
        #[arg(long, default_value_t = 1)]
        track: usize,
    },
    /// Sweep the competition rate and track coexistence decay.
    Sweep {
        /// Comma-separated increasing k values.
        #[arg(long = "k-values", default_value = "10,30,100,300,1000")]
        k_values: String,
        #[arg(long, default_value_t = 8)]
        seeds: usize,
    },
    /// Solve the segregated limit equations for both kinked reactions.
    Segregate {
        #[arg(long, default_value_t = 32)]
        seeds: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario> {
    let mut scenario = match &cli.scenario {
        Some(path) => Scenario::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => Scenario::builtin(&cli.builtin, cli.k.unwrap_or(100.0))?,
    };
    if let Some(k) = cli.k {
        scenario = scenario.with_k(k);
    }
    if let Some(n) = cli.grid {
        scenario = scenario.with_grid_n(n);
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0) {
            bail!("--tol must be positive");
        }
        scenario.tolerances = scenario.tolerances.scaled(tol);
    }
    Ok(scenario)
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let scenario = load_scenario(&cli)?;
    let out_root = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("LVFRONT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let rundir = RunDir::create(&out_root, &scenario)?;
    let started = Instant::now();

    let command_name = match &cli.command {
        Command::Check => "check",
        Command::Extinction => "extinction",
        Command::Eigen => "eigen",
        Command::Coexist { .. } => "coexist",
        Command::Simulate { .. } => "simulate",
        Command::Front { .. } => "front",
        Command::Sweep { .. } => "sweep",
        Command::Segregate { .. } => "segregate",
    };

    let (exit, verdicts) = dispatch(&cli.command, &scenario, &rundir)?;

    let manifest = Manifest {
        scenario_hash: rundir.hash.clone(),
        scenario_name: scenario.name.clone(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command_name.to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        grid_n: scenario.grid_n,
        tolerances: scenario.tolerances,
        verdicts,
    };
    std::fs::write(
        rundir.dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    println!("{}", rundir.dir.display());
    Ok(exit)
}

fn dispatch(command: &Command, scenario: &Scenario, rundir: &RunDir) -> Result<(i32, serde_json::Value)> {
    let params = scenario.params;
    let spec = &scenario.reactions;
    let grid = scenario.grid()?;
    match command {
        Command::Check => {
            let report = spec.check_hypotheses(&params)?;
            rundir.write_json("hypotheses.json", &report)?;
            let verdict = serde_json::json!({
                "h2_ok": report.h2_ok,
                "h3_ok": report.h3_ok,
                "hfreq_ok": report.hfreq_ok,
                "hfreq_margin": report.hfreq_margin,
            });
            Ok((0, verdict))
        }
        Command::Extinction => {
            let (u1, u2) = stationary::extinction_states(&params, spec, &grid)?;
            for (name, field) in [("extinction1.csv", &u1), ("extinction2.csv", &u2)] {
                rundir.write_csv(name, "x,u", |out| {
                    for (x, v) in grid.nodes().zip(field.values()) {
                        out.push_str(&format!("{x},{v}\n"));
                    }
                })?;
            }
            let verdict = serde_json::json!({
                "sup_u1": u1.sup_norm(),
                "sup_u2": u2.sup_norm(),
            });
            Ok((0, verdict))
        }
        Command::Eigen => {
            #[derive(serde::Serialize)]
            struct EigenRecord {
                species: usize,
                lambda: f64,
                residual: f64,
                n: usize,
                refinement_estimate: f64,
            }
            let mut records = Vec::new();
            for i in Species::BOTH {
                let coarse = eigen::reaction_eigen(spec, i, &params, scenario.grid_n)?;
                let fine = eigen::reaction_eigen(spec, i, &params, 2 * scenario.grid_n)?;
                records.push(EigenRecord {
                    species: i.index(),
                    lambda: coarse.lambda,
                    residual: coarse.residual,
                    n: scenario.grid_n,
                    refinement_estimate: (4.0 * fine.lambda - coarse.lambda) / 3.0,
                });
            }
            rundir.write_json("eigen.json", &serde_json::json!({ "records": records }))?;
            let verdict = serde_json::json!({
                "lambda1": records[0].lambda,
                "lambda2": records[1].lambda,
            });
            Ok((0, verdict))
        }
        Command::Coexist { seeds, emit } => {
            let fields = spec.sample(&grid)?;
            let (u1t, u2t) = stationary::extinction_states(&params, spec, &grid)?;
            let bank = stationary::default_seed_bank(&params, &fields, &u1t, &u2t, *seeds, scenario.seed);
            let reports = stationary::find_coexistence_states(&params, spec, &grid, &bank)?;
            #[derive(serde::Serialize)]
            struct CoexistEntry {
                #[serde(flatten)]
                report: stationary::StationaryReport,
                audit: stationary::MaxPrincipleAudit,
                certificate: stationary::Certificate,
            }
            let entries: Vec<CoexistEntry> = reports
                .into_iter()
                .map(|report| -> Result<CoexistEntry> {
                    let audit = stationary::audit_max_principle(&report.state, &params, spec)?;
                    let certificate = stationary::instability_certificate(&report.state, &params, spec)?;
                    Ok(CoexistEntry {
                        report,
                        audit,
                        certificate,
                    })
                })
                .collect::<Result<_>>()?;
            let doc = serde_json::json!({ "states": entries });
            let path = rundir.write_json("coexist.json", &doc)?;
            if let Some(target) = emit {
                std::fs::copy(&path, target)?;
            }
            let verdict = serde_json::json!({
                "states_found": entries.len(),
                "all_unstable": entries.iter().all(|e| e.report.lambda_principal < 0.0),
                "all_certified": !entries.is_empty() && entries.iter().all(|e| e.certificate.ok),
            });
            Ok((0, verdict))
        }
        Command::Simulate {
            t_end,
            dt,
            ic,
            record_every,
            periods,
        } => {
            let sim_grid = PeriodicGrid::new(params.period * *periods as f64, scenario.grid_n * *periods)?;
            let (u1t, u2t) = {
                let cell = PeriodicGrid::new(params.period, scenario.grid_n)?;
                let (a, b) = stationary::extinction_states(&params, spec, &cell)?;
                let tile = |f: &Field| {
                    Field::new(
                        sim_grid,
                        f.values().iter().cycle().take(sim_grid.len()).copied().collect(),
                    )
                    .expect("tiled extinction profile")
                };
                (tile(&a), tile(&b))
            };
            let initial = initial_condition(ic, &sim_grid, &u1t, &u2t, params.period)?;
            let dt = dt.unwrap_or_else(|| evolution::default_dt(&params, spec));
            let mut stepper = Stepper::new(spec, &params, &sim_grid, dt, Scheme::Imex)?;
            let traj = evolution::integrate(&mut stepper, &initial, *t_end, *record_every)?;
            rundir.write_csv("simulate.csv", "t,x,u1,u2", |out| {
                for (t, state) in traj.times.iter().zip(&traj.states) {
                    for (j, x) in sim_grid.nodes().enumerate() {
                        out.push_str(&format!(
                            "{t},{x},{},{}\n",
                            state.u1.values()[j],
                            state.u2.values()[j]
                        ));
                    }
                }
            })?;
            let clamps = stepper.clamp_stats();
            let verdict = serde_json::json!({
                "snapshots": traj.times.len(),
                "dt": dt,
                "clamp_total": clamps.total_clamped,
                "clamp_worst_step_fraction": clamps.worst_step_fraction,
                "clamp_warnings": clamps.warnings,
            });
            Ok((0, verdict))
        }
        Command::Front {
            periods,
            level,
            t_end,
            nodes_per_period,
            track,
        } => {
            let domain = FrontDomain::new(*periods, *nodes_per_period)?;
            let mut settings = RunSettings::defaults(spec, &params, *t_end);
            settings.level = *level;
            settings.tracked = Species::from_index(*track)?;
            let run = front::run_front(spec, &params, &domain, &settings)?;
            let measurement = run.measure()?;
            let (exit, verdict) = match &measurement {
                FrontMeasurement::Accepted(result) => {
                    let checks = run.verify(result);
                    rundir.write_csv("profile.csv", "xi,x,phi1,phi2", |out| {
                        for s in &result.profile {
                            out.push_str(&format!("{},{},{},{}\n", s.xi, s.x, s.phi1, s.phi2));
                        }
                    })?;
                    rundir.write_json(
                        "front.json",
                        &serde_json::json!({
                            "c": result.c,
                            "fit_r2": result.fit_r2,
                            "pulsation_residual": result.pulsation_residual,
                            "level": result.level,
                            "checks": checks,
                            "clamps": run.clamps,
                        }),
                    )?;
                    (
                        0,
                        serde_json::json!({
                            "outcome": "accepted",
                            "c": result.c,
                            "fit_r2": result.fit_r2,
                            "checks_all": checks.all(),
                        }),
                    )
                }
                FrontMeasurement::ZeroSpeed { c, noise } => {
                    rundir.write_json(
                        "front.json",
                        &serde_json::json!({ "outcome": "zero-speed", "c": c, "noise": noise }),
                    )?;
                    (0, serde_json::json!({ "outcome": "zero-speed", "c": c }))
                }
                FrontMeasurement::Inconclusive { max_travel } => {
                    rundir.write_json(
                        "front.json",
                        &serde_json::json!({ "outcome": "inconclusive", "max_travel": max_travel }),
                    )?;
                    (2, serde_json::json!({ "outcome": "inconclusive", "max_travel": max_travel }))
                }
                FrontMeasurement::Rejected { c, fit_r2, reason } => {
                    rundir.write_json(
                        "front.json",
                        &serde_json::json!({
                            "outcome": "rejected", "c": c, "fit_r2": fit_r2, "reason": reason,
                        }),
                    )?;
                    (2, serde_json::json!({ "outcome": "rejected", "reason": reason }))
                }
            };
            Ok((exit, verdict))
        }
        Command::Sweep { k_values, seeds } => {
            let ks: Vec<f64> = k_values
                .split(',')
                .map(|s| s.trim().parse::<f64>().context("parsing k value"))
                .collect::<Result<_>>()?;
            let records = asymptotics::sweep_k(spec, &params, &ks, &grid, *seeds, scenario.seed)?;
            rundir.write_csv(
                "sweep.csv",
                "k,state,sup_u1,sup_u2,ratio,max_k_u1u2,min_ku1,max_ku1,min_ku2,max_ku2,overlap_integral,lambda_principal,certificate_ok",
                |out| {
                    for rec in &records {
                        for (idx, s) in rec.states.iter().enumerate() {
                            out.push_str(&format!(
                                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                                rec.k,
                                idx,
                                s.sup_u1,
                                s.sup_u2,
                                s.ratio,
                                s.max_k_u1u2,
                                s.min_ku1,
                                s.max_ku1,
                                s.min_ku2,
                                s.max_ku2,
                                s.overlap_integral,
                                s.lambda_principal,
                                s.certificate_ok
                            ));
                        }
                    }
                },
            )?;
            let sups: Vec<Option<f64>> = records.iter().map(|r| r.max_sup_norm()).collect();
            let decreasing = sups
                .windows(2)
                .all(|w| match (w[0], w[1]) {
                    (Some(a), Some(b)) => b <= a,
                    _ => false,
                });
            let verdict = serde_json::json!({
                "k_values": ks,
                "states_per_k": records.iter().map(|r| r.states.len()).collect::<Vec<_>>(),
                "all_unstable": records.iter().all(|r| r.all_unstable()),
                "sup_norms_decreasing": decreasing,
                "empirical_kstar": asymptotics::empirical_kstar(&records),
            });
            rundir.write_json("sweep.json", &verdict)?;
            Ok((0, verdict))
        }
        Command::Segregate { seeds } => {
            let eta = asymptotics::solve_segregated(SegregatedKind::Eta, spec, &params, &grid, *seeds, scenario.seed)?;
            let gamma =
                asymptotics::solve_segregated(SegregatedKind::Gamma, spec, &params, &grid, *seeds, scenario.seed)?;
            let summarize = |sols: &[asymptotics::SegregatedSolution]| {
                sols.iter()
                    .map(|s| {
                        serde_json::json!({
                            "classification": s.classification,
                            "residual": s.residual,
                            "sup": s.z.sup_norm(),
                            "min": s.z.min(),
                            "max": s.z.max(),
                        })
                    })
                    .collect::<Vec<_>>()
            };
            let doc = serde_json::json!({
                "eta": summarize(&eta),
                "gamma": summarize(&gamma),
            });
            rundir.write_json("segregate.json", &doc)?;
            let sign_changing = eta
                .iter()
                .chain(&gamma)
                .filter(|s| s.classification == asymptotics::SegregatedClass::SignChanging)
                .count();
            let verdict = serde_json::json!({
                "eta_solutions": eta.len(),
                "gamma_solutions": gamma.len(),
                "sign_changing": sign_changing,
            });
            Ok((0, verdict))
        }
    }
}

fn initial_condition(
    ic: &str,
    grid: &PeriodicGrid,
    u1t: &Field,
    u2t: &Field,
    period: f64,
) -> Result<StatePair> {
    match ic {
        "extinction1" => Ok(StatePair {
            u1: u1t.clone(),
            u2: Field::constant(*grid, 0.0),
        }),
        "extinction2" => Ok(StatePair {
            u1: Field::constant(*grid, 0.0),
            u2: u2t.clone(),
        }),
        "front" => {
            let mid = 0.5 * grid.length();
            let sig = |s: f64| 1.0 / (1.0 + (8.0 * s).exp());
            let u1 = Field::new(
                *grid,
                grid.nodes()
                    .zip(u1t.values())
                    .map(|(x, &t)| t * sig((x - mid) / period))
                    .collect(),
            )?;
            let u2 = Field::new(
                *grid,
                grid.nodes()
                    .zip(u2t.values())
                    .map(|(x, &t)| t * (1.0 - sig((x - mid) / period)))
                    .collect(),
            )?;
            Ok(StatePair { u1, u2 })
        }
        other => {
            let Some(path) = other.strip_prefix("file:") else {
                bail!("unknown initial condition {other:?}; use extinction1 | extinction2 | front | file:PATH");
            };
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let mut u1 = Vec::new();
            let mut u2 = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with("x,") || line.starts_with("t,") {
                    continue;
                }
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 3 {
                    bail!("initial-condition file needs x,u1,u2 columns");
                }
                u1.push(cols[1].trim().parse::<f64>()?);
                u2.push(cols[2].trim().parse::<f64>()?);
            }
            if u1.len() != grid.len() {
                bail!(
                    "initial-condition file has {} rows, grid needs {}",
                    u1.len(),
                    grid.len()
                );
            }
            Ok(StatePair {
                u1: Field::new(*grid, u1)?,
                u2: Field::new(*grid, u2)?,
            })
        }
    }
}
