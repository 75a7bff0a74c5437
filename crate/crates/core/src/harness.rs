//! Experiment commands behind the `splitmax` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    convergence_study, divergence_study, energy_study, ConvergenceReport, CoupledSetup,
    DivergenceSeries, EnergySeries, EnsembleSetup,
};
use crate::audit::{run_audit, AuditReport, AuditSettings};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::format::{csv_row, g17};
use crate::grid::GridSpec;
use crate::subflow::SchemeKind;

pub const ORDER_BAND: (f64, f64) = (0.85, 1.15);
pub const ENERGY_BAND_STDERR: f64 = 4.0;
/// Relative slack on the energy band, the round-off allowance for `λ = 0`.
pub const ENERGY_BAND_RELATIVE: f64 = 1e-9;
pub const DIVERGENCE_MIN_RATIO: f64 = 1.7;
/// Intervals per axis of the structure-audit grid.
pub const AUDIT_INTERVALS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Convergence,
    Energy,
    Divergence,
    Audit,
}

impl Command {
    pub const ALL: [Command; 4] = [
        Command::Convergence,
        Command::Energy,
        Command::Divergence,
        Command::Audit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Convergence => "convergence",
            Command::Energy => "energy",
            Command::Divergence => "divergence",
            Command::Audit => "audit",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

/// Result of one command: gate verdict, a human summary and the files written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Command,
    pub passed: bool,
    pub summary: String,
    pub outputs: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Exit code for a command that could not run.
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub config_hash: String,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub workers: usize,
    pub passed: bool,
    pub outputs: Vec<String>,
}

pub fn manifest_path(out_dir: &Path, command: Command) -> PathBuf {
    out_dir.join(format!("{}_manifest.json", command.name()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs `command`, writes its outputs and manifest under `out_dir`.
pub fn run_command(
    command: Command,
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let start = Instant::now();
    let mut outcome = match command {
        Command::Convergence => cmd_convergence(cfg, out_dir, workers)?.1,
        Command::Energy => cmd_energy(cfg, out_dir, workers)?.1,
        Command::Divergence => cmd_divergence(cfg, out_dir, workers)?.1,
        Command::Audit => cmd_audit(cfg, out_dir)?.1,
    };
    let csvs: Vec<PathBuf> = outcome
        .outputs
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .cloned()
        .collect();
    outcome.outputs.extend(emit_plots(&csvs)?);
    let manifest_file = manifest_path(out_dir, command);
    outcome.outputs.push(manifest_file.clone());
    let manifest = RunManifest {
        command,
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        workers,
        passed: outcome.passed,
        outputs: outcome
            .outputs
            .iter()
            .map(|p| {
                p.file_name().map_or_else(
                    || p.display().to_string(),
                    |n| n.to_string_lossy().into_owned(),
                )
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_file, &(json + "\n"))?;
    Ok(outcome)
}

pub fn coupled_setup(cfg: &ExperimentConfig, workers: usize) -> Result<CoupledSetup> {
    Ok(CoupledSetup {
        z0: cfg.initial_state()?,
        spec: cfg.noise_spec()?,
        horizon: cfg.time.horizon,
        taus: cfg.time.taus.clone(),
        tau_ref: cfg.tau_ref(),
        samples: cfg.run.samples,
        order: cfg.scheme.order,
        reference_scheme: SchemeKind::Exact,
        workers,
    })
}

/// Ensemble over the first ladder step.
pub fn ensemble_setup(cfg: &ExperimentConfig, workers: usize) -> Result<EnsembleSetup> {
    let tau = cfg.time.taus[0];
    Ok(EnsembleSetup {
        z0: cfg.initial_state()?,
        spec: cfg.noise_spec()?,
        horizon: cfg.time.horizon,
        steps: (cfg.time.horizon / tau).round() as usize,
        samples: cfg.run.samples,
        scheme: cfg.scheme.kind,
        order: cfg.scheme.order,
        workers,
    })
}

pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut s = String::from("tau,ms_error,stderr,order_fit\n");
    for p in &report.points {
        s.push_str(&csv_row(&[p.tau, p.ms_error, p.stderr, report.order]));
    }
    s
}

pub fn cmd_convergence(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<(ConvergenceReport, Outcome)> {
    let setup = coupled_setup(cfg, workers)?;
    let report = convergence_study(&setup, &[cfg.scheme.kind])?
        .pop()
        .expect("one report per scheme");
    let path = out_dir.join("convergence.csv");
    write_file(&path, &convergence_csv(&report))?;
    let passed = report.passes(ORDER_BAND.0, ORDER_BAND.1);
    let summary = format!(
        "{}: fitted order {:.4} (band [{}, {}]), residual {:.3e}, {} samples",
        report.scheme,
        report.order,
        ORDER_BAND.0,
        ORDER_BAND.1,
        report.fit_residual,
        report.samples
    );
    Ok((
        report,
        Outcome {
            command: Command::Convergence,
            passed,
            summary,
            outputs: vec![path],
        },
    ))
}

pub fn energy_csv(series: &EnergySeries) -> String {
    let mut s = String::from("t,mean_energy,stderr,predicted\n");
    for i in 0..series.times.len() {
        s.push_str(&csv_row(&[
            series.times[i],
            series.mean[i],
            series.stderr[i],
            series.predicted[i],
        ]));
    }
    s
}

pub fn cmd_energy(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<(EnergySeries, Outcome)> {
    if cfg.scheme.kind != SchemeKind::Exact {
        return Err(Error::Unsupported(format!(
            "the averaged energy law holds exactly only for the exact scheme, not {}; \
             use the convergence command to study {}",
            cfg.scheme.kind, cfg.scheme.kind
        )));
    }
    let series = energy_study(&ensemble_setup(cfg, workers)?)?;
    let path = out_dir.join("energy.csv");
    write_file(&path, &energy_csv(&series))?;
    let bad = series.violations(ENERGY_BAND_STDERR, ENERGY_BAND_RELATIVE);
    let summary = if bad.is_empty() {
        format!(
            "all {} recorded energies within {} stderr of the linear law",
            series.times.len(),
            ENERGY_BAND_STDERR
        )
    } else {
        let times: Vec<String> = bad.iter().map(|&i| g17(series.times[i])).collect();
        format!("energy band violated at t = {}", times.join(", "))
    };
    Ok((
        series,
        Outcome {
            command: Command::Energy,
            passed: bad.is_empty(),
            summary,
            outputs: vec![path],
        },
    ))
}

pub fn divergence_csv(series: &DivergenceSeries) -> String {
    let mut s = String::from("t,residual_coarse,residual_fine\n");
    for i in 0..series.times.len() {
        s.push_str(&csv_row(&[
            series.times[i],
            series.coarse[i],
            series.fine[i],
        ]));
    }
    s
}

pub fn cmd_divergence(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<(DivergenceSeries, Outcome)> {
    let series = divergence_study(&ensemble_setup(cfg, workers)?)?;
    let path = out_dir.join("divergence.csv");
    write_file(&path, &divergence_csv(&series))?;
    let ratio = series.max_ratio();
    let passed = ratio >= DIVERGENCE_MIN_RATIO;
    let summary = format!(
        "residual ratio between tau and tau/2: max {:.4}, final {:.4} (required >= {})",
        ratio,
        series.final_ratio(),
        DIVERGENCE_MIN_RATIO
    );
    Ok((
        series,
        Outcome {
            command: Command::Divergence,
            passed,
            summary,
            outputs: vec![path],
        },
    ))
}

/// Structure audit on a grid of [`AUDIT_INTERVALS`] intervals per axis over the configured cuboid.
pub fn cmd_audit(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(AuditReport, Outcome)> {
    let grid = GridSpec::new(*cfg.grid_spec()?.cuboid(), [AUDIT_INTERVALS; 3])?;
    let report = run_audit(&grid, &AuditSettings::default())?;
    let path = out_dir.join("audit.txt");
    write_file(&path, &report.to_string())?;
    let failed: Vec<&str> = report.failures().map(|l| l.tag.as_str()).collect();
    let summary = if failed.is_empty() {
        format!("{} checks passed", report.lines.len())
    } else {
        format!(
            "{} of {} checks failed: {}",
            failed.len(),
            report.lines.len(),
            failed.join("; ")
        )
    };
    Ok((
        report.clone(),
        Outcome {
            command: Command::Audit,
            passed: failed.is_empty(),
            summary,
            outputs: vec![path],
        },
    ))
}

/// Reads the header and data rows of a report CSV.
fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let empty = || {
        Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "CSV has no data rows"),
        )
    };
    let header: Vec<String> = lines
        .next()
        .ok_or_else(empty)?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| {
                    Error::io(
                        path,
                        std::io::Error::new(std::io::ErrorKind::InvalidData, e),
                    )
                })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(empty());
    }
    Ok((header, rows))
}

/// Writes a gnuplot script next to every CSV and returns the script paths.
pub fn emit_plots(csvs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    csvs.iter().map(|p| emit_plot(p)).collect()
}

fn emit_plot(csv: &Path) -> Result<PathBuf> {
    let (header, rows) = read_csv(csv)?;
    let data = csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = csv
        .file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut s = String::new();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set terminal pngcairo size 800,600").unwrap();
    writeln!(s, "set output '{stem}.png'").unwrap();
    writeln!(s, "set key top left").unwrap();
    match header.join(",").as_str() {
        "tau,ms_error,stderr,order_fit" => {
            // Guide through the first point of the root-mean-square error.
            let (tau0, ms0) = (rows[0][0], rows[0][1]);
            writeln!(s, "set logscale xy").unwrap();
            writeln!(s, "set xlabel 'tau'").unwrap();
            writeln!(s, "set ylabel 'rms error'").unwrap();
            writeln!(s, "slope = 1").unwrap();
            writeln!(
                s,
                "guide(x) = {} * (x / {})**slope",
                g17(ms0.sqrt()),
                g17(tau0)
            )
            .unwrap();
            writeln!(
                s,
                "plot '{data}' skip 1 using 1:(sqrt($2)):(0.5*$3/sqrt($2)) with yerrorlines title 'sqrt(ms\\_error)', \\\n     guide(x) with lines dashtype 2 title 'slope 1'"
            )
            .unwrap();
        }
        "t,mean_energy,stderr,predicted" => {
            writeln!(s, "set xlabel 't'").unwrap();
            writeln!(s, "set ylabel 'E ||Z||^2'").unwrap();
            writeln!(
                s,
                "plot '{data}' skip 1 using 1:2:3 with yerrorbars title 'mean energy', \\\n     '{data}' skip 1 using 1:4 with lines title 'predicted'"
            )
            .unwrap();
        }
        "t,residual_coarse,residual_fine" => {
            writeln!(s, "set xlabel 't'").unwrap();
            writeln!(s, "set ylabel 'divergence residual'").unwrap();
            writeln!(
                s,
                "plot '{data}' skip 1 using 1:2 with linespoints title 'tau', \\\n     '{data}' skip 1 using 1:3 with linespoints title 'tau/2'"
            )
            .unwrap();
        }
        other => {
            return Err(Error::io(
                csv,
                std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("unrecognised CSV header {other:?}"),
                ),
            ))
        }
    }
    let out = csv.with_extension("gp");
    write_file(&out, &s)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(extra: &str) -> ExperimentConfig {
        let text = format!(
            "[grid]\nintervals = [6, 6, 6]\n[time]\nhorizon = 0.25\ntaus = [0.0625, 0.03125, 0.015625]\n[noise]\nmodes = 2\n{extra}"
        );
        ExperimentConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn commands_parse() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }

    #[test]
    fn convergence_writes_csv_plot_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config("[run]\nsamples = 8");
        let outcome = run_command(Command::Convergence, &cfg, dir.path(), 2).unwrap();
        let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("tau,ms_error,stderr,order_fit"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 3);
        let fits: Vec<&str> = rows.iter().map(|r| r.rsplit(',').next().unwrap()).collect();
        assert!(fits.iter().all(|f| *f == fits[0]));
        assert!(csv.ends_with('\n') && !csv.contains('\r'));

        let gp = fs::read_to_string(dir.path().join("convergence.gp")).unwrap();
        assert!(gp.contains("slope = 1\n"));
        assert!(gp.contains("'convergence.csv'"));

        let manifest: RunManifest = serde_json::from_str(
            &fs::read_to_string(manifest_path(dir.path(), Command::Convergence)).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest.config_hash, cfg.hash());
        for f in &outcome.outputs {
            let name = f.file_name().unwrap().to_string_lossy();
            assert!(manifest.outputs.iter().any(|o| *o == name), "{name}");
            assert!(f.exists());
        }
        assert_eq!(manifest.outputs.len(), 3);
    }

    #[test]
    fn convergence_preconditions_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let one = small_config("[run]\nsamples = 1");
        assert!(matches!(
            run_command(Command::Convergence, &one, dir.path(), 1),
            Err(Error::Statistics(_))
        ));
        let mut two = small_config("[run]\nsamples = 8");
        two.time.taus.truncate(2);
        assert!(matches!(
            run_command(Command::Convergence, &two, dir.path(), 1),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn energy_refuses_dissipative_schemes() {
        let dir = tempfile::tempdir().unwrap();
        for kind in ["implicit-euler", "midpoint"] {
            let cfg = small_config(&format!("[scheme]\nkind = \"{kind}\"\n[run]\nsamples = 4"));
            let err = run_command(Command::Energy, &cfg, dir.path(), 1).unwrap_err();
            assert!(
                matches!(&err, Error::Unsupported(m) if m.contains("convergence")),
                "{err}"
            );
        }
    }

    #[test]
    fn silent_energy_is_flat() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config("[run]\nsamples = 2");
        cfg.noise.lambda1 = [0.0; 3];
        cfg.noise.lambda2 = [0.0; 3];
        let (series, outcome) = cmd_energy(&cfg, dir.path(), 1).unwrap();
        assert!(outcome.passed, "{}", outcome.summary);
        let e0 = series.predicted[0];
        assert!(series.predicted.iter().all(|&p| p == e0));
        assert!(series.mean.iter().all(|m| ((m - e0) / e0).abs() <= 1e-9));
    }

    #[test]
    fn plots_need_data() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("energy.csv");
        fs::write(&empty, "t,mean_energy,stderr,predicted\n").unwrap();
        assert!(matches!(emit_plots(&[empty]), Err(Error::Io { .. })));
        assert!(matches!(
            emit_plots(&[dir.path().join("missing.csv")]),
            Err(Error::Io { .. })
        ));
        let energy = dir.path().join("e.csv");
        fs::write(
            &energy,
            "t,mean_energy,stderr,predicted\n0,1,0,1\n0.5,2,0.1,2\n",
        )
        .unwrap();
        let gp = fs::read_to_string(&emit_plots(&[energy]).unwrap()[0]).unwrap();
        assert!(gp.contains("yerrorbars"));
    }

    #[test]
    fn csv_is_identical_across_worker_counts() {
        let cfg = small_config("[run]\nsamples = 8");
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        cmd_convergence(&cfg, a.path(), 1).unwrap();
        cmd_convergence(&cfg, b.path(), 3).unwrap();
        assert_eq!(
            fs::read(a.path().join("convergence.csv")).unwrap(),
            fs::read(b.path().join("convergence.csv")).unwrap()
        );
    }
}
