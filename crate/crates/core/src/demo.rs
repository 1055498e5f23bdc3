//! Built-in desk-scale demonstration tasks: seeded synthetic datasets with
//! analytically known invariant targets, fitted by the linear model.

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::algebra::sample_group_element;
use crate::cluster::{
    fit_linear, seeded_mix, AceModel, CouplingProvider, Embedding, PointCloud, RadialBasis,
};
use crate::coupling::CouplingCache;
use crate::error::{Error, Result};
use crate::irreps::{GroupKind, IrrepLabel, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoTask {
    /// O(3) clouds, target sum_i |r_i|^2; exactly inside the nu=1 span of a
    /// monomial radial basis.
    O3Invariant,
    /// SO(1,3) clouds of four-momenta, target the Minkowski norm (squared
    /// invariant mass) of the total momentum; exactly inside the nu=2
    /// invariant span of the four-vector embedding.
    LorentzMass,
}

impl DemoTask {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "o3-invariant" => Ok(DemoTask::O3Invariant),
            "lorentz-mass" => Ok(DemoTask::LorentzMass),
            other => Err(Error::Parse(format!(
                "unknown demo task {other:?} (expected o3-invariant or lorentz-mass)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DemoTask::O3Invariant => "o3-invariant",
            DemoTask::LorentzMass => "lorentz-mass",
        }
    }

    pub fn rmse_threshold(&self) -> f64 {
        match self {
            DemoTask::O3Invariant => 1e-6,
            DemoTask::LorentzMass => 1e-5,
        }
    }
}

/// Everything the demo prints, serializable for deterministic output.
#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub task: String,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub rmse_threshold: f64,
    pub equivariance_residual: f64,
    pub equivariance_threshold: f64,
    pub pass: bool,
    pub readout_weights: Vec<f64>,
}

const NUM_CLOUDS: usize = 200;
const TRAIN_FRACTION: usize = 160;
const EQUIVARIANCE_THRESHOLD: f64 = 1e-8;

fn o3_dataset(seed: u64) -> Vec<(PointCloud, f64)> {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(NUM_CLOUDS);
    for _ in 0..NUM_CLOUDS {
        let n = rng.gen_range(3..=8);
        let raws: Vec<Vec<f64>> =
            (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect()).collect();
        let target: f64 = raws.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>()).sum();
        data.push((PointCloud::new(raws), target));
    }
    data
}

fn lorentz_dataset(seed: u64) -> Vec<(PointCloud, f64)> {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(NUM_CLOUDS);
    for _ in 0..NUM_CLOUDS {
        let raws: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mass: f64 = rng.gen_range(0.5..2.0);
                let energy = (mass * mass + p.iter().map(|x| x * x).sum::<f64>()).sqrt();
                vec![energy, p[0], p[1], p[2]]
            })
            .collect();
        let total: Vec<f64> = (0..4).map(|mu| raws.iter().map(|r| r[mu]).sum()).collect();
        let target = total[0] * total[0] - total[1] * total[1] - total[2] * total[2] - total[3] * total[3];
        data.push((PointCloud::new(raws), target));
    }
    data
}

fn demo_model(task: DemoTask, seed: u64, cache: &dyn CouplingProvider) -> Result<AceModel> {
    match task {
        DemoTask::O3Invariant => {
            let embedding = Embedding::radial_harmonic(
                GroupKind::O3,
                &[0, 1],
                3,
                RadialBasis::Monomial,
                cache,
            )?;
            AceModel::new(
                embedding,
                1,
                &[IrrepLabel::O3 { l: 0, parity: Parity::Even }],
                seeded_mix(3, seed ^ 0xace),
                cache,
            )
        }
        DemoTask::LorentzMass => {
            let embedding = Embedding::rep_coordinates(GroupKind::So13, &[1], 2, cache)?;
            AceModel::new(
                embedding,
                2,
                &[IrrepLabel::So13 { two_j1: 0, two_j2: 0 }],
                seeded_mix(2, seed ^ 0xace),
                cache,
            )
        }
    }
}

/// Max relative change of the invariant feature vector under sampled group
/// elements, over a handful of clouds.
fn equivariance_residual(
    model: &AceModel,
    clouds: &[(PointCloud, f64)],
    seed: u64,
    scale: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (idx, (cloud, _)) in clouds.iter().take(5).enumerate() {
        let base = model.invariant_features(cloud)?;
        for s in 0..20u64 {
            let g = sample_group_element(
                &model.embedding.coord_rep,
                seed.wrapping_add(1000 * idx as u64 + s),
                scale,
            )?;
            let moved = model.embedding.transform_cloud(cloud, &g.coords)?;
            let got = model.invariant_features(&moved)?;
            for (a, b) in base.iter().zip(&got) {
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    Ok(worst)
}

/// Generates the seeded dataset, fits the linear model, and evaluates the
/// acceptance thresholds for the task.
pub fn run_demo(task: DemoTask, seed: u64) -> Result<DemoReport> {
    let cache = CouplingCache::new();
    let model = demo_model(task, seed, &cache)?;
    let data = match task {
        DemoTask::O3Invariant => o3_dataset(seed),
        DemoTask::LorentzMass => lorentz_dataset(seed),
    };
    let (train, test) = data.split_at(TRAIN_FRACTION);
    let fit = fit_linear(&model, train, test, 1e-10)?;
    let test_rmse = fit.test_rmse.expect("held-out split present");
    if !fit.train_rmse.is_finite() || !test_rmse.is_finite() {
        return Err(Error::InvalidArgument("fit produced non-finite errors".into()));
    }
    let boost_scale = match task {
        DemoTask::O3Invariant => 1.0,
        DemoTask::LorentzMass => 1.0,
    };
    let equiv = equivariance_residual(&model, test, seed ^ 0xe9, boost_scale)?;
    let pass = test_rmse < task.rmse_threshold() && equiv < EQUIVARIANCE_THRESHOLD;
    Ok(DemoReport {
        task: task.name().to_string(),
        seed,
        train_size: train.len(),
        test_size: test.len(),
        train_rmse: fit.train_rmse,
        test_rmse,
        rmse_threshold: task.rmse_threshold(),
        equivariance_residual: equiv,
        equivariance_threshold: EQUIVARIANCE_THRESHOLD,
        pass,
        readout_weights: fit.weights,
    })
}

impl DemoReport {
    /// Deterministic plain-text rendering (17 significant digits).
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("task: {}\n", self.task));
        s.push_str(&format!("seed: {}\n", self.seed));
        s.push_str(&format!("train size: {}\n", self.train_size));
        s.push_str(&format!("test size: {}\n", self.test_size));
        s.push_str(&format!("train RMSE: {:.17e}\n", self.train_rmse));
        s.push_str(&format!("test RMSE: {:.17e} (threshold {:.1e})\n", self.test_rmse, self.rmse_threshold));
        s.push_str(&format!(
            "equivariance residual: {:.17e} (threshold {:.1e})\n",
            self.equivariance_residual, self.equivariance_threshold
        ));
        s.push_str(&format!("result: {}\n", if self.pass { "PASS" } else { "FAIL" }));
        s
    }
}
