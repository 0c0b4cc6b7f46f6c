//! Experiment runner. Artifacts are staged in a hidden directory and moved
//! into place only after every step has succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use switchcode_core::dataset::{gen_gaussian, gen_line_manifold, gen_mog};
use switchcode_core::preprocess::{fit_pca, whiten_fit, WhitenMode};
use switchcode_core::rng::RNG_ALGORITHM;
use switchcode_core::training::sgd_train_with;
use switchcode_core::viz::{hyperplanes, pair_tiles, pairing_report, response_grid_with, tiles_from_rows, GridMode, TileSheet};
use switchcode_core::{Dataset, Executor, Matrix, Model, TrainReport};

use crate::config::{hex, DatasetConfig, ExperimentConfig, OutputsConfig, WhitenChoice};
use crate::documents::{ModelDoc, PcaDoc, WhitenDoc};
use crate::error::{Error, Result};
use crate::formats;
use crate::parallel::Pool;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "switchcode-manifest";

/// Pixels between tiles in composite images.
pub const TILE_PAD: usize = 1;

#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub threads: usize,
    pub mnist_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the canonical configuration or argument record.
    pub config_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub rng_algorithm: String,
    pub artifacts: Vec<ArtifactRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Collects artifacts in `<out>/.staging-<pid>`; dropping without
/// [`Staging::commit`] deletes everything written so far.
pub struct Staging {
    out: PathBuf,
    dir: PathBuf,
    records: Vec<ArtifactRecord>,
    committed: bool,
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let dir = out.join(format!(".staging-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Staging {
            out: out.to_path_buf(),
            dir,
            records: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        if self.records.iter().any(|r| r.path == rel) {
            return Err(Error::Data(format!("artifact {rel} written twice")));
        }
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.records.push(ArtifactRecord {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Writes the manifest and moves every artifact into the output directory.
    pub fn commit(mut self, command: &str, config_sha256: String, seed: Option<u64>) -> Result<Manifest> {
        let mut artifacts = self.records.clone();
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            version: 1,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256,
            seed,
            rng_algorithm: RNG_ALGORITHM.into(),
            artifacts,
        };
        let bytes = formats::to_json_bytes(&manifest)?;
        let mpath = self.dir.join(MANIFEST_FILE);
        fs::write(&mpath, bytes).map_err(|e| Error::io(&mpath, e))?;
        let mut names: Vec<String> = self.records.iter().map(|r| r.path.clone()).collect();
        names.push(MANIFEST_FILE.into());
        for rel in names {
            let from = self.dir.join(&rel);
            let to = self.out.join(&rel);
            if let Some(parent) = to.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
        self.committed = true;
        let _ = fs::remove_dir_all(&self.dir);
        Ok(manifest)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

/// Metrics written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub num_samples: usize,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
    /// Mean fraction of active code units over the data after training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_fraction: Option<f64>,
    /// Code units active on at least one sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_features: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_normal_features: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pca_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: Manifest,
    pub data: Dataset,
    pub model: Option<Model>,
    pub report: Option<TrainReport>,
    pub summary: Summary,
}

pub fn load_dataset(cfg: &ExperimentConfig, ctx: &Context) -> Result<Dataset> {
    let seed = cfg.data_seed();
    match &cfg.dataset {
        DatasetConfig::Gaussian {
            num_samples,
            mean,
            covariance,
        } => {
            let c = Matrix::from_rows(covariance)?;
            Ok(gen_gaussian(*num_samples, mean, &c, seed)?)
        }
        DatasetConfig::Mog { num_samples, .. } => Ok(gen_mog(*num_samples, &cfg.mixture_spec()?, seed)?),
        DatasetConfig::LineManifold {
            num_samples,
            extent,
            noise_std,
        } => Ok(gen_line_manifold(*num_samples, *extent, *noise_std, seed)?),
        DatasetConfig::Mnist { images, labels, limit } => {
            let dir = ctx.mnist_dir.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "experiment {:?} reads MNIST; pass --mnist-dir <dir> pointing at a directory containing {images}",
                    cfg.name
                ))
            })?;
            let img = dir.join(images);
            if !img.is_file() {
                return Err(Error::Data(format!(
                    "{} not found; --mnist-dir must contain the uncompressed IDX file {images}",
                    img.display()
                )));
            }
            let lab = labels.as_ref().map(|l| dir.join(l));
            let data = formats::load_mnist_idx(&img, lab.as_deref())?.images;
            match limit {
                Some(n) if *n < data.num_samples() => Ok(data.slice(0, *n)?),
                _ => Ok(data),
            }
        }
        DatasetConfig::File { path } => formats::read_dataset(path),
    }
}

fn bounding_box(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let n = data.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for row in data.rows() {
        for (d, v) in row.iter().enumerate() {
            lo[d] = lo[d].min(*v);
            hi[d] = hi[d].max(*v);
        }
    }
    (lo, hi)
}

fn composite(sheet: &TileSheet) -> Vec<u8> {
    formats::pgm(&sheet.composite(TILE_PAD, 0))
}

/// Input-space images of the units of layer `l`: rows of `W_l ⋯ W_1`.
pub fn layer_features(model: &Model, l: usize) -> Result<Matrix> {
    let layers = model.layers();
    let mut m = layers[0].weights.clone();
    for layer in &layers[1..=l] {
        m = layer.weights.matmul(&m)?;
    }
    Ok(m)
}

/// Activity of every code unit over the data: (mean active fraction, units
/// active on at least one sample).
pub fn code_activity<E: Executor>(exec: &E, model: &Model, data: &Dataset) -> Result<(f64, usize)> {
    let rows: Vec<&[f64]> = data.rows().collect();
    let sets = exec.map_indexed(rows.len(), |i| model.encode(rows[i]).map(|e| e.active_set));
    let mut ever = vec![false; model.code_dim()];
    let mut total = 0usize;
    for s in sets {
        let s = s?;
        total += s.len();
        for j in s {
            ever[j] = true;
        }
    }
    let frac = total as f64 / (rows.len() * model.code_dim()) as f64;
    Ok((frac, ever.iter().filter(|a| **a).count()))
}

pub fn run_experiment(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    cfg.validate()?;
    let pool = Pool::new(ctx.threads)?;
    let mut staging = Staging::new(&ctx.out)?;
    let mut data = load_dataset(cfg, ctx)?;

    let mode = match cfg.preprocess.whiten {
        WhitenChoice::None => None,
        WhitenChoice::Pca => Some(WhitenMode::Pca),
        WhitenChoice::Zca => Some(WhitenMode::Zca),
    };
    if let Some(mode) = mode {
        let t = whiten_fit(&data, cfg.whiten_epsilon(), mode)?;
        data = t.apply(&data)?;
        staging.write("whiten.json", &formats::to_json_bytes(&WhitenDoc::from(&t))?)?;
    }
    if cfg.outputs.dataset_csv {
        staging.write("dataset.csv", &formats::dataset_csv(&data)?)?;
    }

    let mut summary = Summary {
        name: cfg.name.clone(),
        num_samples: data.num_samples(),
        dim: data.dim(),
        ..Summary::default()
    };

    if let Some(p) = &cfg.outputs.pca {
        let basis = fit_pca(&data, p.k)?;
        staging.write("pca.json", &formats::to_json_bytes(&PcaDoc::from(&basis))?)?;
        if let Some([r, c]) = p.tile_shape {
            let sheet = tiles_from_rows(&basis.components, &basis.eigenvalues, (r, c), None)?;
            staging.write("eigendigits.pgm", &composite(&sheet))?;
        }
        summary.pca_eigenvalues = basis.eigenvalues.clone();
    }

    let mut model = None;
    let mut report = None;
    if let (Some(spec), Some(t)) = (cfg.model_spec(data.dim())?, &cfg.train) {
        let init = Model::init(&spec, cfg.init_seed())?;
        let tc = cfg.train_config(t);
        let mut checkpoints = Vec::new();
        let (trained, rep) = sgd_train_with(&pool, &init, &data, &tc, |epoch, m, _| {
            if t.checkpoint_every.is_some_and(|k| epoch % k == 0) {
                checkpoints.push((epoch, ModelDoc::from_model(m, Some(epoch))));
            }
        })?;
        for (epoch, doc) in checkpoints {
            staging.write(&format!("checkpoints/epoch_{epoch:04}.json"), &formats::to_json_bytes(&doc)?)?;
        }
        staging.write(
            "model.json",
            &formats::to_json_bytes(&ModelDoc::from_model(&trained, Some(tc.epochs)))?,
        )?;
        staging.write("report.csv", &formats::report_csv(&rep)?)?;
        let (frac, active) = code_activity(&pool, &trained, &data)?;
        summary.initial_loss = Some(rep.initial_loss);
        summary.final_loss = Some(rep.final_loss);
        summary.active_fraction = Some(frac);
        summary.active_features = Some(active);
        model = Some(trained);
        report = Some(rep);
    }

    if let Some(m) = &model {
        write_model_outputs(&cfg.outputs, &pool, m, Some(&data), &mut staging, &mut summary)?;
    }

    staging.write("summary.json", &formats::to_json_bytes(&summary)?)?;
    let manifest = staging.commit("experiment", cfg.hash(), Some(cfg.seed))?;
    Ok(Outcome {
        manifest,
        data,
        model,
        report,
        summary,
    })
}

/// Model-derived artifacts. Planes are clipped to the bounding box of `data`.
pub fn write_model_outputs(
    o: &OutputsConfig,
    pool: &Pool,
    model: &Model,
    data: Option<&Dataset>,
    staging: &mut Staging,
    summary: &mut Summary,
) -> Result<()> {
    if o.planes {
        let data = data.ok_or_else(|| Error::Config("plane export needs data for the clipping box".into()))?;
        let planes = hyperplanes(model)?;
        let (lo, hi) = bounding_box(data);
        match data.dim() {
            3 => staging.write("planes.obj", formats::planes_obj(&planes, &lo, &hi)?.as_bytes())?,
            2 => staging.write("planes.csv", &formats::segments_csv(&planes, &lo, &hi)?)?,
            n => return Err(Error::Config(format!("plane export needs 2D or 3D data, got {n}D"))),
        }
        summary.zero_normal_features = planes.skipped;
    }
    if let Some(g) = &o.grid {
        let bounds = [(g.bounds[0][0], g.bounds[0][1]), (g.bounds[1][0], g.bounds[1][1])];
        let sum = response_grid_with(pool, model, bounds, g.resolution, GridMode::Sum)?;
        staging.write("grid.csv", &formats::grid_csv(&sum)?)?;
        if g.per_feature {
            for j in 0..model.code_dim() {
                let gj = response_grid_with(pool, model, bounds, g.resolution, GridMode::PerFeature(j))?;
                staging.write(&format!("grid_feature_{j:03}.csv"), &formats::grid_csv(&gj)?)?;
            }
        }
    }
    if let Some(t) = &o.tiles {
        let shape = (t.shape[0], t.shape[1]);
        for (l, layer) in model.layers().iter().enumerate() {
            let features = layer_features(model, l)?;
            let sheet = tiles_from_rows(&features, &layer.bias, shape, t.limit)?;
            let name = if l == 0 {
                "tiles.pgm".to_string()
            } else {
                format!("tiles_layer{}.pgm", l + 1)
            };
            staging.write(&name, &composite(&sheet))?;
        }
    }
    if let Some(p) = &o.pair_tiles {
        let sheet = pair_tiles(model, (p.shape[0], p.shape[1]), p.top)?;
        staging.write("pairs.pgm", &composite(&sheet))?;
    }
    if o.pairing {
        let pairs = pairing_report(model)?;
        staging.write("pairing.json", &formats::pairing_json(&pairs, &model.layers()[0].bias)?)?;
    }
    Ok(())
}
