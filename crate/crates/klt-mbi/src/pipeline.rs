//! End-to-end run: scenario, reduction, solver, factorization, outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use klt_mbi_core::mbi::mbi_solve_with;
use klt_mbi_core::{
    empirical_mse, factorize_wsn, reduce_problem, CompressorBank, Matrix, MbiTrace, Provenance,
    SampleEnsemble,
};
use tempfile::NamedTempFile;

use crate::config::RunConfig;
use crate::error::{RunError, RunResult};
use crate::export::{self, WsnDocument};
use crate::parallel::{threads_from_env, Threaded};
use crate::pgm::Pgm;
use crate::scenarios::{decoupled_baseline, generate, Generated, Scenario};
use crate::trace::trace_csv;

/// Image-experiment errors over the full image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageErrors {
    pub mbi_mse: f64,
    pub baseline_mse: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_analytic_mse: f64,
    pub final_empirical_mse: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub baseline_analytic_mse: Option<f64>,
    pub baseline_empirical_mse: Option<f64>,
    pub image: Option<ImageErrors>,
    pub bank: CompressorBank,
    pub baseline: CompressorBank,
    pub trace: MbiTrace,
    pub written: Vec<PathBuf>,
}

impl RunSummary {
    pub fn report(&self) -> String {
        let mut lines = vec![
            format!("final analytic MSE: {:.11e}", self.final_analytic_mse),
            format!(
                "iterations: {} ({})",
                self.iterations,
                if self.converged { "converged" } else { "iteration budget reached" }
            ),
        ];
        if let Some(v) = self.final_empirical_mse {
            lines.push(format!("final empirical MSE: {v:.11e}"));
        }
        if let Some(v) = self.baseline_analytic_mse {
            lines.push(format!("baseline analytic MSE: {v:.11e}"));
        }
        if let Some(v) = self.baseline_empirical_mse {
            lines.push(format!("baseline empirical MSE: {v:.11e}"));
        }
        if let Some(img) = self.image {
            lines.push(format!("image MSE: {:.11e} (baseline {:.11e})", img.mbi_mse, img.baseline_mse));
        }
        lines.join("\n")
    }
}

/// Loads the scenario named in `cfg` and runs it.
pub fn run(cfg: &RunConfig) -> RunResult<RunSummary> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(RunError::Config(problems.join("; ")));
    }
    let generated = generate(&cfg.scenario)?;
    execute(cfg, &generated)
}

fn mean_sq(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>() / m.ncols() as f64
}

/// Runs an already generated scenario and writes every output of `cfg`.
/// Outputs are staged next to their targets and only renamed into place
/// once all of them have been written.
pub fn execute(cfg: &RunConfig, generated: &Generated) -> RunResult<RunSummary> {
    let model = generated.model()?;
    let rp = reduce_problem(&model)?;
    let baseline = decoupled_baseline(&model)?;
    let training = generated.training();

    let mut mbi = cfg.mbi.to_config();
    mbi.record_trace |= training.is_some();
    let evaluator = Threaded {
        threads: threads_from_env(),
    };
    let (bank, trace) = mbi_solve_with(&rp, &baseline, &mbi, &evaluator)?;

    let empirical: Option<Vec<f64>> = match training {
        Some(ens) => Some(
            trace
                .iterates
                .iter()
                .map(|b| empirical_mse(ens, b))
                .collect::<Result<_, _>>()?,
        ),
        None => None,
    };
    let final_analytic_mse = rp.analytic_mse(&bank)?;

    let mut staged: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    staged.push((
        cfg.outputs.trace_csv.clone(),
        trace_csv(&trace, rp.mse_offset(), empirical.as_deref()).into_bytes(),
    ));

    let wsn = factorize_wsn(&bank)?;
    let (second_moments, samples) = match model.provenance() {
        Provenance::Exact => ("exact", None),
        Provenance::Estimated { samples } => ("estimated", Some(samples)),
    };
    let provenance = export::Provenance {
        scenario: serde_json::to_value(cfg.scenario.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
        seed: cfg.scenario.seed,
        second_moments: second_moments.into(),
        samples,
        iterations: trace.iterations_used,
        converged: trace.converged,
        analytic_mse: final_analytic_mse,
    };
    staged.push((
        cfg.outputs.model_json.clone(),
        WsnDocument::new(&wsn, provenance).to_json().into_bytes(),
    ));

    let image = match (&generated.scenario, &cfg.outputs.image_out_dir) {
        (Scenario::Image(data), Some(dir)) => Some(image_outputs(data.full.clone(), &bank, &baseline, dir, cfg.report_baseline, &mut staged)?),
        _ => None,
    };

    let written = commit(staged)?;
    let (baseline_analytic_mse, baseline_empirical_mse) = if cfg.report_baseline {
        (
            Some(rp.analytic_mse(&baseline)?),
            training.map(|ens| empirical_mse(ens, &baseline)).transpose()?,
        )
    } else {
        (None, None)
    };

    Ok(RunSummary {
        final_analytic_mse,
        final_empirical_mse: empirical.as_ref().and_then(|e| e.last().copied()),
        iterations: trace.iterations_used,
        converged: trace.converged,
        baseline_analytic_mse,
        baseline_empirical_mse,
        image,
        bank,
        baseline,
        trace,
        written,
    })
}

fn image_outputs(
    full: SampleEnsemble,
    bank: &CompressorBank,
    baseline: &CompressorBank,
    dir: &Path,
    with_baseline: bool,
    staged: &mut Vec<(PathBuf, Vec<u8>)>,
) -> RunResult<ImageErrors> {
    let mut emit = |name: &str, m: &Matrix| staged.push((dir.join(name), Pgm::from_matrix(m, 255).to_p5()));
    let x_hat = bank.apply(full.y())?;
    let err = (full.x() - &x_hat).abs();
    emit("reconstruction.pgm", &x_hat);
    emit("error_map.pgm", &err);
    let base_hat = baseline.apply(full.y())?;
    let base_err = (full.x() - &base_hat).abs();
    if with_baseline {
        emit("baseline_reconstruction.pgm", &base_hat);
        emit("baseline_error_map.pgm", &base_err);
    }
    Ok(ImageErrors {
        mbi_mse: mean_sq(&err),
        baseline_mse: mean_sq(&base_err),
    })
}

fn commit(staged: Vec<(PathBuf, Vec<u8>)>) -> RunResult<Vec<PathBuf>> {
    let mut temps = Vec::with_capacity(staged.len());
    for (path, bytes) in staged {
        let parent = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| RunError::io(&parent, e))?;
        let mut tmp = NamedTempFile::new_in(&parent).map_err(|e| RunError::io(&parent, e))?;
        tmp.write_all(&bytes)
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| RunError::io(&path, e))?;
        temps.push((path, tmp));
    }
    let mut written = Vec::with_capacity(temps.len());
    for (path, tmp) in temps {
        tmp.persist(&path).map_err(|e| RunError::io(&path, e.error))?;
        written.push(path);
    }
    Ok(written)
}
