//! Dispatch of a parsed experiment and the files it leaves behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use riesz_core::lattice::{epstein_hurwitz_zeta, epstein_zeta};
use riesz_core::optimize::{estimate_csd_with, minimize_confined_with, minimize_periodic_with, CsdMode};
use riesz_core::sampler::{atomic_write, run_chains, SampleArchive};
use riesz_core::stats::{nn_spacing_stats, solve_limit_measure, two_point_correlation, ws_from_correlation, CorrelationBins};
use riesz_core::RieszError;

use crate::config::{parse_config_for, ConfigErrors, ExperimentConfig, Mode, Settings};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Core(#[from] RieszError),
    #[error("{0}")]
    Other(String),
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Core(_) => "computation",
            RunError::Other(_) => "io",
        }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let details: Vec<Value> = match self {
            RunError::Config(errs) => errs.0.iter().map(|e| json!({"line": e.line, "message": e.message})).collect(),
            _ => Vec::new(),
        };
        json!({"error": {"kind": self.kind(), "message": self.to_string(), "details": details}})
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// What a run produced: the lines printed to stdout and the files written.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub artifacts: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl Writer<'_> {
    fn bytes(&mut self, name: &str, bytes: &[u8]) -> RunResult<()> {
        atomic_write(&self.dir.join(name), bytes)?;
        self.outcome.artifacts.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> RunResult<()> {
        self.bytes(name, text.as_bytes())
    }

    fn json(&mut self, name: &str, value: &Value) -> RunResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Other(e.to_string()))?;
        text.push('\n');
        self.text(name, &text)
    }

    fn say(&mut self, line: String) {
        self.outcome.summary.push(line);
    }
}

/// Reads a configuration file or a manifest written by an earlier run; the
/// manifest's seed applies unless `seed` overrides it.
pub fn load_config(text: &str, mode: Option<Mode>, seed: Option<u64>) -> RunResult<ExperimentConfig> {
    let trimmed = text.trim_start();
    let (source, manifest_seed) = if trimmed.starts_with('{') {
        let v: Value = serde_json::from_str(trimmed).map_err(|e| RunError::Other(format!("manifest is not valid JSON: {e}")))?;
        let source = v["config_text"]
            .as_str()
            .ok_or_else(|| RunError::Other("manifest has no config_text".into()))?
            .to_string();
        (source, v["seed"].as_u64())
    } else {
        (text.to_string(), None)
    };
    let mut config = parse_config_for(&source, mode)?;
    if let Some(s) = seed.or(manifest_seed) {
        config.seed = s;
    }
    Ok(config)
}

fn snapshot_csv(lines: &[(f64, f64)], header: &str) -> String {
    let mut out = String::new();
    writeln!(out, "{header}").unwrap();
    for (a, b) in lines {
        writeln!(out, "{a:?},{b:?}").unwrap();
    }
    out
}

fn grid(lo: &[f64], hi: &[f64], points: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    let per_axis = if d == 1 {
        points
    } else {
        ((points as f64).powf(1.0 / d as f64).round() as usize).max(2)
    };
    let axis = |k: usize, i: usize| {
        if per_axis == 1 {
            0.5 * (lo[k] + hi[k])
        } else {
            lo[k] + (hi[k] - lo[k]) * i as f64 / (per_axis - 1) as f64
        }
    };
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut flat| {
            let mut x = vec![0.0; d];
            for k in (0..d).rev() {
                x[k] = axis(k, flat % per_axis);
                flat /= per_axis;
            }
            x
        })
        .collect()
}

fn execute(config: &ExperimentConfig, w: &mut Writer) -> RunResult<()> {
    let seed = config.seed;
    match &config.settings {
        Settings::Minimize {
            params,
            field,
            lattice,
            restarts,
            options,
        } => {
            let report = match (field, lattice) {
                (_, Some(l)) => minimize_periodic_with(l, params.s, params.n, *restarts, seed, options)?,
                (Some(f), None) => minimize_confined_with(f, params, *restarts, seed, options)?,
                (None, None) => return Err(RunError::Other("minimize needs a field or a lattice".into())),
            };
            if report.restarts_disagree {
                log::warn!("restart energies disagree: {:?}", report.restart_energies);
            }
            w.json("report.json", &report.to_json())?;
            w.text("configuration.csv", &report.best_config.to_csv())?;
            let trace: Vec<(f64, f64)> = report.energy_trace.iter().enumerate().map(|(i, e)| (i as f64, *e)).collect();
            w.text("energy_trace.csv", &snapshot_csv(&trace, "iteration,energy"))?;
            w.say(format!("energy {:?}", report.best_energy));
        }
        Settings::Sample { spec, chains, gzip } => {
            let mut spec = spec.clone();
            spec.seed = seed;
            let archives = run_chains(&spec, *chains)?;
            let ext = if *gzip { "csv.gz" } else { "csv" };
            let mut rates = Vec::new();
            for (k, a) in archives.iter().enumerate() {
                let name = format!("chain_{k}.{ext}");
                a.write(&w.dir.join(&name))?;
                w.outcome.artifacts.push(name);
                rates.push(a.acceptance_rate);
            }
            let summary = json!({
                "chains": archives.len(),
                "acceptance_rates": rates,
                "final_proposal_scales": archives.iter().map(|a| a.final_proposal_scale).collect::<Vec<_>>(),
                "snapshots_per_chain": archives.first().map(|a| a.snapshots.len()),
                "spec": spec.echo(),
            });
            w.json("sample.json", &summary)?;
            let mean = rates.iter().sum::<f64>() / rates.len() as f64;
            w.say(format!("acceptance {mean:?}"));
        }
        Settings::Zeta { lattice, s, tol, shift } => {
            let z = epstein_zeta(lattice, *s, *tol)?;
            let mut out = json!({
                "lattice": lattice.generator(),
                "s": s,
                "zeta": z,
            });
            w.say(format!("zeta {:?}", z.value));
            if let Some(x) = shift {
                let h = epstein_hurwitz_zeta(lattice, *s, x, *tol)?;
                out["shift"] = json!(x);
                out["hurwitz"] = json!(h);
                w.say(format!("hurwitz {:?}", h.value));
            }
            w.json("zeta.json", &out)?;
        }
        Settings::Csd {
            s,
            d,
            n_list,
            lattice,
            restarts,
            options,
        } => {
            let mode = match lattice {
                Some(l) => {
                    let unit = l.scaled(l.covolume().powf(-1.0 / *d as f64))?;
                    CsdMode::Periodic(unit)
                }
                None => CsdMode::ConfinedCube,
            };
            let est = match estimate_csd_with(*s, *d, n_list, &mode, *restarts, seed, options) {
                Ok(e) => e,
                Err(e) => {
                    if !e.partial.is_empty() {
                        w.json("csd_partial.json", &json!({"failed_at": e.n, "rows": e.partial}))?;
                    }
                    return Err(RunError::Core(e.source));
                }
            };
            let mut csv = String::from("n,energy,ratio,restarts_disagree\n");
            for row in &est.table {
                writeln!(csv, "{},{:?},{:?},{}", row.n, row.energy, row.ratio, row.restarts_disagree).unwrap();
                w.say(format!("ratio N={} {:?}", row.n, row.ratio));
            }
            w.text("csd.csv", &csv)?;
            w.json("csd.json", &serde_json::to_value(&est).map_err(|e| RunError::Other(e.to_string()))?)?;
            w.say(format!("csd {:?}", est.extrapolated));
        }
        Settings::LimitMeasure {
            field,
            s,
            d,
            csd,
            grid_lo,
            grid_hi,
            grid_points,
        } => {
            let m = solve_limit_measure(field, *s, *d, *csd)?;
            let lo = grid_lo.clone().unwrap_or_else(|| m.support.0.clone());
            let hi = grid_hi.clone().unwrap_or_else(|| m.support.1.clone());
            w.text("density.csv", &m.to_csv(&grid(&lo, &hi, *grid_points)))?;
            w.json(
                "limit_measure.json",
                &json!({
                    "level": m.level,
                    "residual": m.residual,
                    "csd": m.csd,
                    "support": {"lo": m.support.0, "hi": m.support.1},
                }),
            )?;
            w.say(format!("level {:?}", m.level));
        }
        Settings::Correlate {
            archives,
            s,
            window,
            bin_width,
            bins,
        } => {
            let mut snapshots = Vec::new();
            for path in archives {
                let a = SampleArchive::read(path, None)
                    .map_err(|e| RunError::Other(format!("{}: {e}", path.display())))?;
                snapshots.extend(a.snapshots);
            }
            let bins = CorrelationBins::centered(*bin_width, *bins)?;
            let corr = two_point_correlation(&snapshots, *window, &bins)?;
            w.text("correlation.csv", &corr.to_csv())?;
            let mut out = json!({
                "window": window,
                "samples": corr.sample_count,
                "intensity": corr.intensity,
            });
            if let Some(s) = s {
                let ws = ws_from_correlation(&corr, *s);
                if ws.singular_warning {
                    log::warn!("pairs fell in the central bin; they are left out of the energy estimate");
                }
                out["ws"] = json!(ws);
                w.say(format!("ws {:?}", ws.value));
            }
            w.json("correlation.json", &out)?;
            w.say(format!("intensity {:?}", corr.intensity));
        }
        Settings::CrystalCheck {
            params,
            field,
            restarts,
            options,
        } => {
            let report = minimize_confined_with(field, params, *restarts, seed, options)?;
            let (mean, cv, gaps) = nn_spacing_stats(&report.best_config)?;
            let rows: Vec<(f64, f64)> = gaps.iter().enumerate().map(|(i, g)| (i as f64, *g)).collect();
            w.text("gaps.csv", &snapshot_csv(&rows, "index,gap"))?;
            w.text("configuration.csv", &report.best_config.to_csv())?;
            w.json(
                "crystal.json",
                &json!({
                    "energy": report.best_energy,
                    "mean_gap": mean,
                    "gap_cv": cv,
                    "gaps_used": gaps.len(),
                    "restarts_disagree": report.restarts_disagree,
                }),
            )?;
            w.say(format!("cv {cv:?}"));
        }
    }
    Ok(())
}

/// Runs the experiment, writing its artifacts and a manifest into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> RunResult<Outcome> {
    std::fs::create_dir_all(out).map_err(|e| RunError::Other(format!("{}: {e}", out.display())))?;
    let start = Instant::now();
    let mut w = Writer {
        dir: out,
        outcome: Outcome::default(),
    };
    log::info!("running {} with seed {}", config.mode, config.seed);
    execute(config, &mut w)?;
    let manifest = json!({
        "program": "riesz",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": config.mode.name(),
        "seed": config.seed,
        "threads": rayon::current_num_threads(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "artifacts": w.outcome.artifacts,
        "resolved": config.echo(),
        "config_text": config.source,
    });
    w.json(MANIFEST, &manifest)?;
    w.outcome.artifacts.pop();
    Ok(w.outcome)
}

/// Output directory: the explicit one, else the configuration's, else `riesz-out`.
pub fn output_dir(config: &ExperimentConfig, explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("riesz-out"))
}
