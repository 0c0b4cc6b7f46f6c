use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use switchcode_core::idx;
use switchcode_core::lasso::{lasso_encode, LassoProblem, Method, Objective};
use switchcode_core::preprocess::{fit_pca, whiten_fit, WhitenMode};
use switchcode_core::viz::tiles_from_rows;
use switchcode_core::{soft_threshold_encode, triangle_kmeans_encode, Executor, Matrix, Model};

use crate::config::{ExperimentConfig, GridOutput, OutputsConfig, PairTilesOutput, TilesOutput};
use crate::documents::{parse_model_json, PcaDoc, WhitenDoc};
use crate::error::{Error, Result};
use crate::formats;
use crate::parallel::Pool;
use crate::pipeline::{self, sha256_hex, Context, Manifest, Staging};
use crate::reproduce::Figure;

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(name = "switchcode", version, about = "Switched-linear coding experiments")]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration's root seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: $SWITCHCODE_OUT or ./out].
    #[arg(long, global = true, env = "SWITCHCODE_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Directory holding uncompressed MNIST IDX files.
    #[arg(long, global = true)]
    pub mnist_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Csv,
    Idx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Pca,
    Zca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Model,
    Lasso,
    Triangle,
    SoftThreshold,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the configured dataset.
    Generate {
        #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
        format: DataFormat,
    },
    /// Fit a whitening transform and apply it.
    Whiten {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Principal components, optionally rendered as tiles.
    Pca {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        /// Tile shape `ROWSxCOLS` for `eigendigits.pgm`.
        #[arg(long)]
        tile_shape: Option<String>,
    },
    /// Run the configured experiment end to end.
    Train,
    /// Encode every row of a dataset.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        scheme: Scheme,
        /// Model JSON; its decoder columns are the dictionary atoms.
        #[arg(long)]
        model: Option<PathBuf>,
        /// CSV with one dictionary atom (or centroid) per row.
        #[arg(long, conflicts_with = "model")]
        dictionary: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long)]
        fista: bool,
        /// Solve the lasso without the ½ on the squared error.
        #[arg(long)]
        unhalved: bool,
    },
    /// Export planes, grids, tiles and pairings for a trained model.
    Viz {
        #[arg(long)]
        model: PathBuf,
        /// Data whose bounding box clips the planes.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        planes: bool,
        /// `XMIN,XMAX,YMIN,YMAX`.
        #[arg(long)]
        grid: Option<String>,
        /// `NX,NY`.
        #[arg(long, default_value = "101,101")]
        resolution: String,
        #[arg(long)]
        per_feature: bool,
        /// Tile shape `ROWSxCOLS`.
        #[arg(long)]
        tiles: Option<String>,
        #[arg(long)]
        tile_limit: Option<usize>,
        /// Number of highest-bias features to show with their partners.
        #[arg(long, requires = "tiles")]
        pair_tiles: Option<usize>,
        #[arg(long)]
        pairing: bool,
    },
    /// Regenerate a figure from its bundled configuration.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

/// Status line printed on success.
fn ok_line(out: &Path, manifest: &Manifest) -> String {
    json!({
        "status": "ok",
        "out": out.display().to_string(),
        "command": manifest.command,
        "artifacts": manifest.artifacts.len(),
    })
    .to_string()
}

fn parse_list<T: std::str::FromStr>(s: &str, sep: char, n: usize, what: &str) -> Result<Vec<T>> {
    let parts: Vec<T> = s
        .split(sep)
        .map(|p| p.trim().parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("{what}: cannot parse {s:?}")))?;
    if parts.len() != n {
        return Err(Error::Config(format!("{what}: expected {n} values separated by {sep:?}, got {s:?}")));
    }
    Ok(parts)
}

fn parse_shape(s: &str) -> Result<[usize; 2]> {
    let v = parse_list::<usize>(&s.to_ascii_lowercase(), 'x', 2, "tile shape")?;
    Ok([v[0], v[1]])
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config <path>".into()))?;
    let bytes = fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&bytes)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn context(cli: &Cli, out: PathBuf) -> Context {
    Context {
        out,
        threads: cli.threads,
        mnist_dir: cli.mnist_dir.clone(),
    }
}

/// Hash of an argument record for commands without a configuration file.
fn record_hash(record: &serde_json::Value) -> String {
    sha256_hex(record.to_string().as_bytes())
}

/// Runs one invocation and returns the success line.
pub fn run(cli: &Cli) -> Result<String> {
    let out = out_dir(cli);
    let manifest = match &cli.command {
        Command::Generate { format } => {
            let cfg = load_config(cli)?;
            let data = pipeline::load_dataset(&cfg, &context(cli, out.clone()))?;
            let mut st = Staging::new(&out)?;
            match format {
                DataFormat::Csv => st.write("dataset.csv", &formats::dataset_csv(&data)?)?,
                DataFormat::Idx => st.write("dataset.idx", &idx::encode_f64(&data))?,
            }
            st.commit("generate", cfg.hash(), Some(cfg.seed))?
        }
        Command::Train => {
            let cfg = load_config(cli)?;
            pipeline::run_experiment(&cfg, &context(cli, out.clone()))?.manifest
        }
        Command::Reproduce { figure } => {
            if cli.config.is_some() {
                return Err(Error::Config("reproduce uses its bundled configuration; drop --config".into()));
            }
            let mut cfg = figure.config()?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let dir = out.join(figure.name());
            let manifest = pipeline::run_experiment(&cfg, &context(cli, dir.clone()))?.manifest;
            return Ok(ok_line(&dir, &manifest));
        }
        Command::Whiten { input, mode, epsilon } => {
            let bytes = read_bytes(input)?;
            let data = formats::read_dataset(input)?;
            let mode = match mode {
                ModeArg::Pca => WhitenMode::Pca,
                ModeArg::Zca => WhitenMode::Zca,
            };
            let t = whiten_fit(&data, *epsilon, mode)?;
            let mut st = Staging::new(&out)?;
            st.write("whitened.csv", &formats::dataset_csv(&t.apply(&data)?)?)?;
            st.write("whiten.json", &formats::to_json_bytes(&WhitenDoc::from(&t))?)?;
            let rec = json!({"command": "whiten", "input_sha256": sha256_hex(&bytes), "mode": mode.as_str(), "epsilon": epsilon});
            st.commit("whiten", record_hash(&rec), None)?
        }
        Command::Pca { input, k, tile_shape } => {
            let bytes = read_bytes(input)?;
            let data = formats::read_dataset(input)?;
            let basis = fit_pca(&data, *k)?;
            let mut st = Staging::new(&out)?;
            st.write("pca.json", &formats::to_json_bytes(&PcaDoc::from(&basis))?)?;
            if let Some(s) = tile_shape {
                let [r, c] = parse_shape(s)?;
                let sheet = tiles_from_rows(&basis.components, &basis.eigenvalues, (r, c), None)?;
                st.write("eigendigits.pgm", &formats::pgm(&sheet.composite(pipeline::TILE_PAD, 0)))?;
            }
            let rec = json!({"command": "pca", "input_sha256": sha256_hex(&bytes), "k": k, "tile_shape": tile_shape});
            st.commit("pca", record_hash(&rec), None)?
        }
        Command::Encode { .. } => encode(cli, &out)?,
        Command::Viz { .. } => viz(cli, &out)?,
    };
    Ok(ok_line(&out, &manifest))
}

/// Dictionary atoms as columns of an `n × k` matrix.
fn dictionary(model: Option<&Model>, atoms_csv: Option<&Path>) -> Result<Matrix> {
    match (model, atoms_csv) {
        (Some(m), None) => Ok(m.dictionary()?),
        (None, Some(p)) => Ok(formats::parse_matrix_csv(&read_bytes(p)?, "dictionary")?.transpose()),
        _ => Err(Error::Config("give exactly one of --model or --dictionary".into())),
    }
}

fn encode(cli: &Cli, out: &Path) -> Result<Manifest> {
    let Command::Encode {
        input,
        scheme,
        model,
        dictionary: atoms,
        lambda,
        tol,
        max_iter,
        fista,
        unhalved,
    } = &cli.command
    else {
        unreachable!()
    };
    let pool = Pool::new(cli.threads)?;
    let input_bytes = read_bytes(input)?;
    let data = formats::read_dataset(input)?;
    let rows: Vec<&[f64]> = data.rows().collect();
    let model_bytes = model.as_ref().map(|p| read_bytes(p)).transpose()?;
    let model = model_bytes.as_deref().map(parse_model_json).transpose()?;
    let atoms_bytes = atoms.as_ref().map(|p| read_bytes(p)).transpose()?;
    let need_lambda = || lambda.ok_or_else(|| Error::Config(format!("--scheme {scheme:?} needs --lambda").to_lowercase()));

    let mut lasso = None;
    let codes: Vec<Vec<f64>> = match scheme {
        Scheme::Model => {
            let m = model
                .as_ref()
                .ok_or_else(|| Error::Config("--scheme model needs --model".into()))?;
            pool.map_indexed(rows.len(), |i| m.encode(rows[i]).map(|e| e.h))
                .into_iter()
                .collect::<std::result::Result<_, _>>()?
        }
        Scheme::SoftThreshold => {
            let d = dictionary(model.as_ref(), atoms.as_deref())?;
            let lam = need_lambda()?;
            pool.map_indexed(rows.len(), |i| soft_threshold_encode(&d, lam, rows[i]))
                .into_iter()
                .collect::<std::result::Result<_, _>>()?
        }
        Scheme::Triangle => {
            let centroids = dictionary(model.as_ref(), atoms.as_deref())?.transpose();
            pool.map_indexed(rows.len(), |i| triangle_kmeans_encode(&centroids, rows[i]))
                .into_iter()
                .collect::<std::result::Result<_, _>>()?
        }
        Scheme::Lasso => {
            let d = dictionary(model.as_ref(), atoms.as_deref())?;
            let lam = need_lambda()?;
            let problem = |x: &[f64]| LassoProblem {
                tol: *tol,
                max_iter: *max_iter,
                method: if *fista { Method::Fista } else { Method::Ista },
                objective: if *unhalved { Objective::Unhalved } else { Objective::Halved },
                ..LassoProblem::new(d.clone(), x.to_vec(), lam)
            };
            problem(rows[0]).validate().map_err(|e| Error::Config(e.to_string()))?;
            let sols = pool
                .map_indexed(rows.len(), |i| lasso_encode(&problem(rows[i])))
                .into_iter()
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let codes = sols.iter().map(|s| s.code.clone()).collect();
            lasso = Some(sols);
            codes
        }
    };
    let mut st = Staging::new(out)?;
    st.write("codes.csv", &formats::codes_csv(&codes, lasso.as_deref())?)?;
    let rec = json!({
        "command": "encode",
        "input_sha256": sha256_hex(&input_bytes),
        "model_sha256": model_bytes.as_deref().map(sha256_hex),
        "dictionary_sha256": atoms_bytes.as_deref().map(sha256_hex),
        "scheme": format!("{scheme:?}"),
        "lambda": lambda, "tol": tol, "max_iter": max_iter, "fista": fista, "unhalved": unhalved,
    });
    st.commit("encode", record_hash(&rec), None)
}

fn viz(cli: &Cli, out: &Path) -> Result<Manifest> {
    let Command::Viz {
        model,
        input,
        planes,
        grid,
        resolution,
        per_feature,
        tiles,
        tile_limit,
        pair_tiles,
        pairing,
    } = &cli.command
    else {
        unreachable!()
    };
    let pool = Pool::new(cli.threads)?;
    let model_bytes = read_bytes(model)?;
    let m = parse_model_json(&model_bytes)?;
    let input_bytes = input.as_ref().map(|p| read_bytes(p)).transpose()?;
    let data = input.as_ref().map(|p| formats::read_dataset(p)).transpose()?;
    if *planes && data.is_none() {
        return Err(Error::Config("--planes needs --input to fix the clipping box".into()));
    }
    let grid = match grid {
        Some(g) => {
            let b = parse_list::<f64>(g, ',', 4, "--grid")?;
            let r = parse_list::<usize>(resolution, ',', 2, "--resolution")?;
            Some(GridOutput {
                bounds: [[b[0], b[1]], [b[2], b[3]]],
                resolution: [r[0], r[1]],
                per_feature: *per_feature,
            })
        }
        None => None,
    };
    let shape = tiles.as_deref().map(parse_shape).transpose()?;
    let outputs = OutputsConfig {
        planes: *planes,
        pairing: *pairing,
        grid,
        tiles: shape.map(|shape| TilesOutput {
            shape,
            limit: *tile_limit,
        }),
        pair_tiles: match (shape, pair_tiles) {
            (Some(shape), Some(top)) => Some(PairTilesOutput { shape, top: *top }),
            _ => None,
        },
        ..OutputsConfig::default()
    };
    let mut st = Staging::new(out)?;
    pipeline::write_model_outputs(&outputs, &pool, &m, data.as_ref(), &mut st, &mut Default::default())?;
    let rec = json!({
        "command": "viz",
        "model_sha256": sha256_hex(&model_bytes),
        "input_sha256": input_bytes.as_deref().map(sha256_hex),
        "outputs": outputs,
    });
    st.commit("viz", record_hash(&rec), None)
}

/// Parses arguments, runs, prints one line and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.kind().exit_code()
        }
    }
}
