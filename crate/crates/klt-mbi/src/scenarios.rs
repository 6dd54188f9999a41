//! Seeded generators for the simulation studies and the per-sensor KLT
//! baseline.

use std::path::PathBuf;

use klt_mbi_core::{
    estimate_moments, example1_model, init_bank, CompressorBank, Matrix, SampleEnsemble,
    SecondMomentModel, SensorPartition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{RunError, RunResult};
use crate::pgm::{load_pgm, subsample_even_columns};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Exact three-component, two-sensor model.
    ExactExample1,
    /// `Y_j = X + sigma_j N_j`.
    AdditiveNoise,
    /// `Y_j = sigma_j N_j`, independent of `X`.
    PureNoiseObs,
    /// `Y_j = A_j X + sigma_j N_j` with square uniform `A_j`.
    LinearMixing,
    /// `Y_j = A_j o X + sigma_j N_j` on an image, trained on its even columns.
    Image,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub m: usize,
    pub n: Vec<usize>,
    pub r: Vec<usize>,
}

impl PartitionSpec {
    pub fn build(&self) -> klt_mbi_core::Result<SensorPartition> {
        SensorPartition::new(self.m, self.n.clone(), self.r.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub partition: PartitionSpec,
    /// Training sample count `s`; derived from the image for `image`.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub image_path: Option<PathBuf>,
    /// `pure_noise_obs` only: use the printed `m = 2`, `s = 4` samples.
    #[serde(default)]
    pub fixture: bool,
}

/// Image experiment data: training columns and the full image.
#[derive(Debug, Clone)]
pub struct ImageData {
    pub training: SampleEnsemble,
    pub full: SampleEnsemble,
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Exact(SecondMomentModel),
    Samples(SampleEnsemble),
    Image(ImageData),
}

pub struct Generated {
    pub partition: SensorPartition,
    pub scenario: Scenario,
}

impl Generated {
    /// Exact model, or sample moments of the training ensemble.
    pub fn model(&self) -> klt_mbi_core::Result<SecondMomentModel> {
        match &self.scenario {
            Scenario::Exact(m) => Ok(m.clone()),
            Scenario::Samples(ens) => estimate_moments(ens, &self.partition),
            Scenario::Image(img) => estimate_moments(&img.training, &self.partition),
        }
    }

    pub fn training(&self) -> Option<&SampleEnsemble> {
        match &self.scenario {
            Scenario::Exact(_) => None,
            Scenario::Samples(ens) => Some(ens),
            Scenario::Image(img) => Some(&img.training),
        }
    }
}

/// Every problem with the spec, empty when it is complete and consistent.
pub fn check_spec(spec: &ScenarioSpec) -> Vec<String> {
    let mut problems = Vec::new();
    let part = match spec.partition.build() {
        Ok(p) => p,
        Err(e) => {
            problems.push(format!("partition: {e}"));
            return problems;
        }
    };
    let p = part.sensor_count();
    let m = part.signal_dim();
    let square = |problems: &mut Vec<String>| {
        if part.obs_dims().iter().any(|&n| n != m) {
            problems.push(format!("{:?} needs n_j = m = {m} for every sensor", spec.kind));
        }
    };
    let sampled = |problems: &mut Vec<String>| {
        if spec.sigmas.len() != p {
            problems.push(format!("sigmas has {} entries, expected one per sensor ({p})", spec.sigmas.len()));
        } else if spec.sigmas.iter().any(|s| !s.is_finite()) {
            problems.push("sigmas must be finite".into());
        }
    };
    match spec.kind {
        ScenarioKind::ExactExample1 => {
            if m != 3 || part.obs_dims() != [3, 3] {
                problems.push("exact_example1 has m = 3 and n = [3, 3]".into());
            }
        }
        ScenarioKind::AdditiveNoise | ScenarioKind::LinearMixing => {
            square(&mut problems);
            sampled(&mut problems);
            if spec.samples.unwrap_or(0) == 0 {
                problems.push("samples must be at least 1".into());
            }
        }
        ScenarioKind::PureNoiseObs => {
            if spec.fixture {
                if m != 2 || part.obs_dims() != [2, 2] {
                    problems.push("the pure_noise_obs fixture has m = 2 and n = [2, 2]".into());
                }
                if spec.samples.is_some_and(|s| s != 4) {
                    problems.push("the pure_noise_obs fixture has 4 samples".into());
                }
            } else {
                sampled(&mut problems);
                if spec.samples.unwrap_or(0) == 0 {
                    problems.push("samples must be at least 1".into());
                }
            }
        }
        ScenarioKind::Image => {
            square(&mut problems);
            sampled(&mut problems);
            match &spec.image_path {
                None => problems.push("image scenario requires image_path".into()),
                Some(path) if !path.is_file() => {
                    problems.push(format!("image_path {} is not a readable file", path.display()))
                }
                _ => {}
            }
        }
    }
    if spec.fixture && spec.kind != ScenarioKind::PureNoiseObs {
        problems.push("fixture applies to pure_noise_obs only".into());
    }
    problems
}

fn uniform(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

fn normal(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn stack(blocks: &[Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let mut out = Matrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.rows_mut(r, b.nrows()).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Builds the scenario. Random draws come from ChaCha20 seeded with
/// `spec.seed` in a fixed order: `X`, then for each sensor `A_j` (when
/// used) followed by the noise `N_j`, all filled column by column.
pub fn generate(spec: &ScenarioSpec) -> RunResult<Generated> {
    if spec.kind == ScenarioKind::Image {
        let path = spec
            .image_path
            .as_ref()
            .ok_or_else(|| RunError::Config("image scenario requires image_path".into()))?;
        let image = load_pgm(path).map_err(|source| RunError::Image {
            path: path.clone(),
            source,
        })?;
        return generate_image(spec, &image);
    }
    let problems = check_spec(spec);
    if !problems.is_empty() {
        return Err(RunError::Config(problems.join("; ")));
    }
    let partition = spec.partition.build()?;
    let scenario = match spec.kind {
        ScenarioKind::ExactExample1 => {
            Scenario::Exact(example1_model().with_ranks(partition.ranks().to_vec())?)
        }
        ScenarioKind::PureNoiseObs if spec.fixture => Scenario::Samples(example3_fixture()),
        _ => {
            let s = spec.samples.expect("checked");
            let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
            let m = partition.signal_dim();
            let x = uniform(&mut rng, m, s);
            let mut ys = Vec::with_capacity(partition.sensor_count());
            for (j, &sigma) in spec.sigmas.iter().enumerate() {
                let n = partition.obs_dim(j);
                let y = match spec.kind {
                    ScenarioKind::AdditiveNoise => &x + normal(&mut rng, n, s) * sigma,
                    ScenarioKind::PureNoiseObs => normal(&mut rng, n, s) * sigma,
                    ScenarioKind::LinearMixing => {
                        let a = uniform(&mut rng, n, m);
                        a * &x + normal(&mut rng, n, s) * sigma
                    }
                    ScenarioKind::ExactExample1 | ScenarioKind::Image => unreachable!(),
                };
                ys.push(y);
            }
            Scenario::Samples(SampleEnsemble::new(x, stack(&ys))?)
        }
    };
    Ok(Generated { partition, scenario })
}

/// Image scenario from an in-memory image of intensities.
pub fn generate_image(spec: &ScenarioSpec, image: &Matrix) -> RunResult<Generated> {
    let problems: Vec<String> = check_spec(spec)
        .into_iter()
        .filter(|p| !p.contains("image_path"))
        .collect();
    if !problems.is_empty() {
        return Err(RunError::Config(problems.join("; ")));
    }
    let partition = spec.partition.build()?;
    let m = partition.signal_dim();
    if image.nrows() != m {
        return Err(RunError::Config(format!(
            "image has {} rows but the partition has m = {m}",
            image.nrows()
        )));
    }
    if image.ncols() < 2 {
        return Err(RunError::Config("image needs at least two columns".into()));
    }
    let k = image.ncols();
    if let Some(s) = spec.samples {
        if s != k / 2 {
            return Err(RunError::Config(format!(
                "samples = {s} but the image yields {} training columns",
                k / 2
            )));
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut ys = Vec::with_capacity(partition.sensor_count());
    for &sigma in &spec.sigmas {
        let a = uniform(&mut rng, m, k);
        ys.push(a.component_mul(image) + normal(&mut rng, m, k) * sigma);
    }
    let y_full = stack(&ys);
    let even = |mat: &Matrix| subsample_even_columns(mat).expect("at least two columns");
    let training = SampleEnsemble::new(even(image), even(&y_full))?;
    let full = SampleEnsemble::new(image.clone(), y_full)?;
    Ok(Generated {
        partition,
        scenario: Scenario::Image(ImageData { training, full }),
    })
}

/// Per-sensor KLT of each sensor's own slice of the signal; the starting
/// point of the solver.
pub fn decoupled_baseline(model: &SecondMomentModel) -> klt_mbi_core::Result<CompressorBank> {
    init_bank(model, None)
}

/// Printed `m = 2`, `s = 4` samples with pure-noise observations.
pub fn example3_fixture() -> SampleEnsemble {
    let x = Matrix::from_row_slice(2, 4, &[0.086, 0.439, 0.857, 0.904, 0.074, 0.574, 0.386, 0.429]);
    let y = Matrix::from_row_slice(
        4,
        4,
        &[
            0.284, -0.942, 0.067, 0.222, //
            -2.206, 0.514, -1.293, -0.686, //
            0.4660, -0.1260, 0.3870, 0.3290, //
            0.6880, -0.4690, -0.9420, -0.5630,
        ],
    );
    SampleEnsemble::new(x, y).expect("fixture shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use klt_mbi_core::{empirical_mse, klt_single, mbi_solve, reduce_problem, MbiConfig};

    fn spec(kind: ScenarioKind, m: usize, n: Vec<usize>, r: Vec<usize>, sigmas: Vec<f64>) -> ScenarioSpec {
        ScenarioSpec {
            kind,
            partition: PartitionSpec { m, n, r },
            samples: Some(20),
            sigmas,
            seed: 7,
            image_path: None,
            fixture: false,
        }
    }

    #[test]
    fn exact_example1() {
        let s = spec(ScenarioKind::ExactExample1, 3, vec![3, 3], vec![1, 1], vec![]);
        let g = generate(&s).unwrap();
        assert_eq!(g.model().unwrap().e_xx()[(0, 0)], 0.585);
        assert!(g.training().is_none());
    }

    #[test]
    fn noiseless_additive_recovers_signal() {
        let s = spec(ScenarioKind::AdditiveNoise, 4, vec![4, 4], vec![4, 4], vec![0.0, 0.0]);
        let g = generate(&s).unwrap();
        let Scenario::Samples(ens) = &g.scenario else { panic!() };
        assert_eq!(ens.sensor_block(&g.partition, 0), *ens.x());
        let model = g.model().unwrap();
        let rp = reduce_problem(&model).unwrap();
        let (bank, _) = mbi_solve(&rp, &decoupled_baseline(&model).unwrap(), &MbiConfig::default()).unwrap();
        assert!(empirical_mse(ens, &bank).unwrap() <= 1e-8);
    }

    #[test]
    fn deterministic_per_seed() {
        let mut s = spec(ScenarioKind::LinearMixing, 5, vec![5, 5, 5], vec![2, 2, 2], vec![0.1, 0.2, 0.3]);
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        let (Scenario::Samples(ea), Scenario::Samples(eb)) = (&a.scenario, &b.scenario) else { panic!() };
        assert_eq!(ea, eb);
        s.seed += 1;
        let c = generate(&s).unwrap();
        let Scenario::Samples(ec) = &c.scenario else { panic!() };
        assert_ne!(ea.y(), ec.y());
        assert_eq!(ec.y().shape(), (15, 20));
    }

    #[test]
    fn pure_noise_is_independent_of_signal() {
        let s = spec(ScenarioKind::PureNoiseObs, 3, vec![2, 4], vec![1, 2], vec![1.0, 1.0]);
        let g = generate(&s).unwrap();
        let Scenario::Samples(ens) = &g.scenario else { panic!() };
        assert_eq!(ens.y().shape(), (6, 20));
        assert!(ens.x().iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn fixture_values() {
        let f = example3_fixture();
        assert_eq!(f.x()[(1, 1)], 0.574);
        assert_eq!(f.y()[(2, 0)], 0.466);
        let mut s = spec(ScenarioKind::PureNoiseObs, 2, vec![2, 2], vec![1, 1], vec![]);
        s.fixture = true;
        s.samples = None;
        assert!(generate(&s).is_ok());
    }

    #[test]
    fn rejects_bad_specs() {
        let s = spec(ScenarioKind::AdditiveNoise, 4, vec![4, 3], vec![1, 1], vec![0.1, 0.1]);
        assert!(check_spec(&s).iter().any(|p| p.contains("n_j = m")));
        let s = spec(ScenarioKind::AdditiveNoise, 4, vec![4, 4], vec![5, 1], vec![0.1, 0.1]);
        assert!(check_spec(&s)[0].contains("r_j <= n_j"));
        let s = spec(ScenarioKind::LinearMixing, 4, vec![4, 4], vec![1, 1], vec![0.1]);
        assert!(check_spec(&s)[0].contains("sigmas"));
        let s = spec(ScenarioKind::Image, 4, vec![4, 4], vec![1, 1], vec![0.1, 0.1]);
        assert!(check_spec(&s).iter().any(|p| p.contains("image_path")));
        assert!(matches!(generate(&s), Err(RunError::Config(_))));
    }

    #[test]
    fn image_shapes() {
        let mut s = spec(ScenarioKind::Image, 8, vec![8, 8], vec![4, 4], vec![0.2, 0.1]);
        s.samples = None;
        let img = Matrix::from_fn(8, 8, |r, c| ((r + c) % 5) as f64 / 4.0);
        let g = generate_image(&s, &img).unwrap();
        let Scenario::Image(data) = &g.scenario else { panic!() };
        assert_eq!(data.training.x().shape(), (8, 4));
        assert_eq!(data.training.y().shape(), (16, 4));
        assert_eq!(data.full.y().shape(), (16, 8));
        assert_eq!(data.training.x().column(0), img.column(1));
        assert_eq!(data.training.y().column(2), data.full.y().column(5));
        assert!(generate_image(&s, &Matrix::zeros(7, 8)).is_err());
    }

    #[test]
    fn single_sensor_baseline_is_klt() {
        let s = spec(ScenarioKind::AdditiveNoise, 3, vec![3], vec![2], vec![0.3]);
        let model = generate(&s).unwrap().model().unwrap();
        let direct = klt_single(model.e_xy(), model.e_yy(), 2).unwrap();
        assert!((decoupled_baseline(&model).unwrap().block(0) - direct).norm() < 1e-12);
    }
}
