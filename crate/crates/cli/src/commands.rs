//! Command-line interface. Exit codes: 0 success, 1 item-level failures,
//! 2 configuration or IO error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lumisphere::edit::{encode_png, material_transfer, normal_paint, shape_reshade, EditOutput, EditSession, Stroke};
use lumisphere::pfm;
use lumisphere::synth::dataset::MANIFEST_FILE;
use lumisphere::synth::{generate_dataset, Manifest};

use crate::assets::{init_assets, load_assets};
use crate::config::Config;
use crate::eval::{evaluate, write_outputs, RunRecord};
use crate::methods::{emit_sparse, reconstruct, resolve};
use crate::plot::{score_strips, Metric};
use crate::serve::{serve, AppState, Session};
use crate::{write_file, Outcome, EXIT_CONFIG};

#[derive(Debug, Parser)]
#[command(name = "lumisphere", version, about = "Reflectance map datasets, reconstruction, evaluation and editing")]
pub struct Cli {
    /// TOML config; command-line flags override its values [default: built-in defaults]
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log level filter (error, warn, info, debug, trace)
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write starter materials and procedural environments into an asset root
    InitAssets(InitAssetsArgs),
    /// Generate a synthetic dataset
    Synth(SynthArgs),
    /// Predict a reflectance map per item with named methods
    Reconstruct(ReconstructArgs),
    /// Score stored predictions against ground truth
    Eval(EvalArgs),
    /// Re-render an image with another reflectance map
    Transfer(TransferArgs),
    /// Re-render an image on edited normals
    Reshade(ReshadeArgs),
    /// Serve the editing API
    Serve(ServeArgs),
    /// Plot per-item scores from an evaluation run record as SVG
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct InitAssetsArgs {
    /// Asset root to populate
    #[arg(long)]
    pub assets: PathBuf,
    /// Number of procedural environments
    #[arg(long, default_value_t = 6)]
    pub environments: usize,
    /// Overwrite existing files
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Asset root [default: $LUMISPHERE_ASSETS, then `assets` in the config]
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// Number of items [default: 500]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Image side in pixels [default: 128]
    #[arg(long)]
    pub image_size: Option<usize>,
    /// Reflectance map resolution [default: 32]
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Monte Carlo samples per map cell [default: 4096]
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Share of assets and items held out for testing [default: 0.5]
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Skip the shadowed image variants [default: shadows on]
    #[arg(long)]
    pub no_shadows: bool,
    /// Write a run record here; keep it outside the output tree so the tree
    /// stays byte-identical across runs
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotMetric {
    Dssim,
    Mse,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Dataset directory holding manifest.json
    #[arg(long)]
    pub dataset: PathBuf,
    /// Methods to run: gt, sh, indirect_rbf, gt_normals, or a name from
    /// the config's [methods] table
    #[arg(long = "method", value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Work on linear images and maps [default: tone-mapped]
    #[arg(long)]
    pub linear: bool,
    /// Also write sparse/<item>.tblk from ground-truth normals
    #[arg(long)]
    pub emit_sparse: bool,
    /// Cone half-angle of the change of domain in degrees [default: 5]
    #[arg(long)]
    pub eps_deg: Option<f64>,
    /// RBF kernel width [default: 8]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Spherical harmonics order [default: 2]
    #[arg(long)]
    pub sh_order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Methods in table row order
    #[arg(long = "method", value_delimiter = ',', required = true)]
    pub methods: Vec<String>,
    /// Score linear maps [default: tone-mapped]
    #[arg(long)]
    pub linear: bool,
    /// Output directory [default: <dataset>/eval, or eval-linear]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EditInputs {
    /// Input image (PFM with mask sidecar)
    #[arg(long)]
    pub image: PathBuf,
    /// Normal map (PFM with mask sidecar)
    #[arg(long)]
    pub normals: PathBuf,
    /// The object's own reflectance map (PFM with mask sidecar)
    #[arg(long)]
    pub rm: PathBuf,
    /// Output image; `.png` writes 8-bit sRGB, anything else PFM
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[command(flatten)]
    pub inputs: EditInputs,
    /// Reflectance map of the other material
    #[arg(long)]
    pub target_rm: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReshadeArgs {
    #[command(flatten)]
    pub inputs: EditInputs,
    /// JSON list of strokes {x, y, radius, azimuth_deg, tilt_deg, strength}
    #[arg(long, conflicts_with = "new_normals", required_unless_present = "new_normals")]
    pub strokes: Option<PathBuf>,
    /// Edited normal map to render with instead of strokes
    #[arg(long)]
    pub new_normals: Option<PathBuf>,
    /// Also write the edited normals here
    #[arg(long)]
    pub normals_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Session from a directory with image.pfm, normals.pfm, rm.pfm, as id=DIR
    #[arg(long = "session")]
    pub sessions: Vec<String>,
    /// Dataset whose items become sessions named by item id
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Items of --dataset to load [default: all]
    #[arg(long, value_delimiter = ',')]
    pub items: Vec<String>,
    /// Bind address [default: 127.0.0.1]
    #[arg(long)]
    pub host: Option<String>,
    /// Port [default: 8080]
    #[arg(long)]
    pub port: Option<u16>,
    /// Largest accepted request body in bytes [default: 16777216]
    #[arg(long)]
    pub max_upload_bytes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// run.json written by eval
    #[arg(long)]
    pub record: PathBuf,
    /// SVG output
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = PlotMetric::Dssim)]
    pub metric: PlotMetric,
}

fn read_manifest(root: &Path) -> anyhow::Result<Manifest> {
    let path = root.join(MANIFEST_FILE);
    Manifest::read(&path).with_context(|| format!("dataset {}", root.display()))
}

pub fn cmd_synth(config: &Config, args: &SynthArgs) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    let mut config = config.clone();
    let s = &mut config.synth;
    if let Some(v) = args.samples {
        s.samples = v;
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.image_size {
        s.image_size = v;
    }
    if let Some(v) = args.resolution {
        s.resolution = v;
    }
    if let Some(v) = args.mc_samples {
        s.mc_samples = v;
    }
    if let Some(v) = args.test_fraction {
        s.test_fraction = v;
    }
    if args.no_shadows {
        s.shadow_augmentation = false;
    }
    config.validate()?;
    let root = config.asset_root(args.assets.as_deref())?;
    let assets = load_assets(&root)?;
    let manifest = generate_dataset(&config.synth, &assets.registry, &args.out).with_context(|| format!("generating into {}", args.out.display()))?;
    eprintln!("wrote {} items to {}", manifest.items.len(), args.out.display());
    if let Some(path) = &args.record {
        let mut config = config.clone();
        config.assets = Some(root);
        let record = RunRecord { wall_clock_s: start.elapsed().as_secs_f64(), ..RunRecord::new("synth", &config, assets.hashes) };
        record.write(path)?;
    }
    Ok(Outcome::default())
}

pub fn cmd_reconstruct(config: &Config, args: &ReconstructArgs) -> anyhow::Result<Outcome> {
    let mut rc = config.reconstruct.clone();
    if let Some(v) = args.eps_deg {
        rc.eps_deg = v;
    }
    if let Some(v) = args.sigma {
        rc.sigma = v;
    }
    if let Some(v) = args.sh_order {
        rc.sh_order = v;
    }
    Config { reconstruct: rc.clone(), ..config.clone() }.validate()?;
    if args.methods.is_empty() && !args.emit_sparse {
        bail!("nothing to do: pass --method or --emit-sparse");
    }
    let specs = args.methods.iter().map(|m| resolve(m, config)).collect::<anyhow::Result<Vec<_>>>()?;
    let manifest = read_manifest(&args.dataset)?;
    let linear = args.linear || config.eval.linear;
    let mut outcome = Outcome::default();
    if args.emit_sparse {
        outcome.failures.extend(emit_sparse(&args.dataset, &manifest, &rc, linear).failures);
    }
    for spec in &specs {
        let o = reconstruct(&args.dataset, &manifest, spec, &rc, linear)?;
        eprintln!("{}: {} of {} items", spec.name, manifest.items.len() - o.failures.len(), manifest.items.len());
        outcome.failures.extend(o.failures.into_iter().map(|(id, e)| (format!("{}/{id}", spec.name), e)));
    }
    Ok(outcome)
}

pub fn cmd_eval(config: &Config, args: &EvalArgs) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    let linear = args.linear || config.eval.linear;
    for m in &args.methods {
        resolve(m, config)?;
    }
    let manifest = read_manifest(&args.dataset)?;
    let eval = evaluate(&args.dataset, &manifest, &args.methods, linear)?;
    let out = args.out.clone().unwrap_or_else(|| args.dataset.join(if linear { "eval-linear" } else { "eval" }));
    let mut config = config.clone();
    config.eval.linear = linear;
    write_outputs(&out, &args.dataset, &eval, &config, start.elapsed().as_secs_f64())?;
    print!("{}", eval.table.render());
    Ok(eval.outcome)
}

fn edit_session(inputs: &EditInputs) -> anyhow::Result<EditSession> {
    let image = pfm::read_image(&inputs.image)?;
    let normals = pfm::read_normals(&inputs.normals)?;
    let rm = pfm::read_map(&inputs.rm)?;
    Ok(EditSession::new(image, normals, rm)?)
}

fn write_edit(out: &EditOutput, path: &Path) -> anyhow::Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        write_file(path, &encode_png(&out.image))?;
    } else {
        pfm::write_image(&out.image, path)?;
    }
    if out.unknown_pixels > 0 || out.out_of_gamut > 0 {
        eprintln!("{} pixels kept for undefined lookups, {} out of gamut", out.unknown_pixels, out.out_of_gamut);
    }
    Ok(())
}

pub fn cmd_transfer(args: &TransferArgs) -> anyhow::Result<Outcome> {
    let session = edit_session(&args.inputs)?;
    let target = pfm::read_map(&args.target_rm)?;
    write_edit(&material_transfer(&session, &target)?, &args.inputs.out)?;
    Ok(Outcome::default())
}

pub fn read_strokes(path: &Path) -> anyhow::Result<Vec<Stroke>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("strokes {}", path.display()))
}

pub fn cmd_reshade(args: &ReshadeArgs) -> anyhow::Result<Outcome> {
    let session = edit_session(&args.inputs)?;
    let normals = match (&args.strokes, &args.new_normals) {
        (Some(path), _) => {
            let mut nm = session.normals().clone();
            for (k, s) in read_strokes(path)?.iter().enumerate() {
                nm = normal_paint(&nm, s).with_context(|| format!("stroke {k}"))?;
            }
            nm
        }
        (None, Some(path)) => pfm::read_normals(path)?,
        (None, None) => bail!("pass --strokes or --new-normals"),
    };
    if let Some(p) = &args.normals_out {
        pfm::write_normals(&normals, p)?;
    }
    write_edit(&shape_reshade(&session, &normals)?, &args.inputs.out)?;
    Ok(Outcome::default())
}

pub fn load_sessions(args: &ServeArgs) -> anyhow::Result<Vec<(String, Session)>> {
    let mut sessions = Vec::new();
    for spec in &args.sessions {
        let Some((id, dir)) = spec.split_once('=') else {
            bail!("--session expects id=DIR, got {spec:?}");
        };
        sessions.push((id.to_string(), Session::load_dir(Path::new(dir))?));
    }
    if let Some(root) = &args.dataset {
        let manifest = read_manifest(root)?;
        let ids: Vec<String> = if args.items.is_empty() { manifest.items.iter().map(|i| i.id.clone()).collect() } else { args.items.clone() };
        for id in ids {
            let s = Session::load_item(root, &manifest, &id)?;
            sessions.push((id, s));
        }
    }
    if sessions.is_empty() {
        bail!("no sessions: pass --session id=DIR or --dataset");
    }
    let mut ids: Vec<&str> = sessions.iter().map(|s| s.0.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        bail!("session id {} is used twice", w[0]);
    }
    Ok(sessions)
}

pub fn cmd_serve(config: &Config, args: &ServeArgs) -> anyhow::Result<Outcome> {
    let mut sc = config.serve.clone();
    if let Some(h) = &args.host {
        sc.host = h.clone();
    }
    if let Some(p) = args.port {
        sc.port = p;
    }
    if let Some(m) = args.max_upload_bytes {
        sc.max_upload_bytes = m;
    }
    let state = AppState::new(load_sessions(args)?, sc.max_upload_bytes);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(serve(state, &sc.host, sc.port))?;
    Ok(Outcome::default())
}

pub fn cmd_plot(args: &PlotArgs) -> anyhow::Result<Outcome> {
    let record = RunRecord::read(&args.record)?;
    if record.methods.is_empty() {
        bail!("{} holds no per-item scores", args.record.display());
    }
    let metric = match args.metric {
        PlotMetric::Dssim => Metric::Dssim,
        PlotMetric::Mse => Metric::Mse,
    };
    write_file(&args.out, score_strips(&record, metric).as_bytes())?;
    Ok(Outcome::default())
}

pub fn dispatch(cli: &Cli) -> anyhow::Result<Outcome> {
    let config = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::InitAssets(a) => {
            let written = init_assets(&a.assets, a.environments, a.force)?;
            eprintln!("wrote {} files under {}", written.len(), a.assets.display());
            Ok(Outcome::default())
        }
        Command::Synth(a) => cmd_synth(&config, a),
        Command::Reconstruct(a) => cmd_reconstruct(&config, a),
        Command::Eval(a) => cmd_eval(&config, a),
        Command::Transfer(a) => cmd_transfer(a),
        Command::Reshade(a) => cmd_reshade(a),
        Command::Serve(a) => cmd_serve(&config, a),
        Command::Plot(a) => cmd_plot(a),
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log).try_init();
    match dispatch(&cli) {
        Ok(outcome) => {
            for (item, msg) in &outcome.failures {
                eprintln!("failed: {item}: {msg}");
            }
            if !outcome.failures.is_empty() {
                eprintln!("{} item failures", outcome.failures.len());
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}
