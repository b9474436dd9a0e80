use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uflmatch::dictionary::Method;
use uflmatch::encode::{EncoderConfig, Encoding};
use uflmatch::eval::BoundingBox;
use uflmatch::matching::MatchParams;
use uflmatch::synth::SynthKind;

#[derive(Parser, Debug)]
#[command(name = "uflmatch", version, about = "Dense image correspondence with learned patch features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Learn a patch dictionary from a directory of images.
    LearnDict(LearnDictArgs),
    /// Match a test image against an exemplar and write flow files.
    Match(MatchArgs),
    /// Match every pair in a manifest and report transfer metrics.
    Eval(EvalArgs),
    /// Transfer exemplar labels (and optionally pixels) through a pixel flow.
    Transfer(TransferArgs),
    /// Write a synthetic image pair with ground truth.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Kmeans,
    Ksvd,
    Random,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Kmeans => Method::KMeans,
            MethodArg::Ksvd => Method::Ksvd,
            MethodArg::Random => Method::Random,
        }
    }
}

#[derive(Args, Debug)]
pub struct LearnDictArgs {
    /// Image file or directory of PNG / PNM images.
    pub images: PathBuf,
    /// Output dictionary file.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of codewords.
    #[arg(long, default_value_t = 100)]
    pub dict_size: usize,
    /// Number of training patches.
    #[arg(long, default_value_t = 1_000_000)]
    pub patches: usize,
    #[arg(long, default_value_t = 11)]
    pub pixel_patch: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Kmeans)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    /// K-SVD coding sparsity.
    #[arg(long, default_value_t = 10)]
    pub sparsity: usize,
    /// Whitening regularizer.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    Kt,
    Sa,
    Omp,
}

/// Encoder and solver settings shared by `match` and `eval`.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Dictionary file written by `learn-dict`.
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long, value_enum, default_value_t = EncodingArg::Kt)]
    pub encoding: EncodingArg,
    /// Soft-assignment smoothing factor.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// OMP sparsity.
    #[arg(long, default_value_t = 10)]
    pub omp_k: usize,
    #[arg(long, default_value_t = 11)]
    pub pixel_patch: usize,
    #[arg(long, default_value_t = 7)]
    pub pool: usize,
    #[arg(long, default_value_t = 0.02)]
    pub alpha: f64,
    /// Smoothness truncation; `inf` disables it.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Fixed data truncation; estimated from the pair when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub bp_iters: usize,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Candidate translation step, in patches.
    #[arg(long, default_value_t = 1)]
    pub stride: i32,
    /// Pixel search radius; defaults to the pool width.
    #[arg(long)]
    pub radius: Option<usize>,
    /// Run pixel-level refinement.
    #[arg(long)]
    pub pixel: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    pub fn encoder(&self) -> EncoderConfig {
        let encoding = match self.encoding {
            EncodingArg::Kt => Encoding::Triangle,
            EncodingArg::Sa => Encoding::SoftAssignment { beta: self.beta },
            EncodingArg::Omp => Encoding::Omp { sparsity: self.omp_k },
        };
        EncoderConfig {
            encoding,
            pixel_patch_width: self.pixel_patch,
            pool_width: self.pool,
        }
    }

    pub fn params(&self) -> MatchParams {
        MatchParams {
            alpha: self.alpha,
            gamma: self.gamma,
            lambda: self.lambda,
            bp_iters: self.bp_iters,
            levels: self.levels,
            candidate_stride: self.stride,
            seed: self.seed,
            pixel_radius: self.radius,
            ..MatchParams::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    pub test: PathBuf,
    pub exemplar: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output prefix: writes `<out>.patch.uflf` and, with `--pixel`, `<out>.pixel.uflf`.
    #[arg(long)]
    pub out: PathBuf,
    /// Test and exemplar boxes `x,y,w,h` (give twice) to report LOC-ERR.
    #[arg(long = "box", num_args = 1, value_name = "X,Y,W,H")]
    pub boxes: Vec<BoundingBox>,
    /// Also write the report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// TOML manifest listing `[[pair]]` entries.
    pub manifest: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Class id scored by IOU.
    #[arg(long, default_value_t = 1)]
    pub class: u16,
}

#[derive(Args, Debug)]
pub struct TransferArgs {
    /// Pixel flow file.
    pub flow: PathBuf,
    /// Exemplar label map (PGM).
    pub exemplar_labels: PathBuf,
    /// Output label map (PGM).
    #[arg(long)]
    pub out: PathBuf,
    /// Exemplar image to warp alongside the labels.
    #[arg(long, requires = "warped")]
    pub image: Option<PathBuf>,
    /// Output path of the warped image (PGM).
    #[arg(long, requires = "image")]
    pub warped: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// `shift`, `warp-free` or `noise`.
    pub kind: SynthKind,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    /// Shift `u,v` in pixels, for `shift`.
    #[arg(long, default_value = "3,0", value_parser = parse_shift, allow_hyphen_values = true)]
    pub shift: (i32, i32),
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_shift(s: &str) -> Result<(i32, i32), String> {
    let (u, v) = s.split_once(',').ok_or_else(|| format!("shift `{s}` is not u,v"))?;
    let parse = |p: &str| p.trim().parse::<i32>().map_err(|_| format!("bad shift component `{p}`"));
    Ok((parse(u)?, parse(v)?))
}
