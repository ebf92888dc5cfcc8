use std::path::PathBuf;

use clap::{Args, Subcommand};

#[derive(Debug, Clone, Copy, Args)]
pub struct GridArgs {
    /// Quantization levels per axis.
    #[arg(long, default_value_t = 1024)]
    pub levels: u32,
    /// Blocks per axis; must divide the level count.
    #[arg(long, default_value_t = 16)]
    pub blocks: u32,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct MaskArgsCommon {
    #[arg(long, default_value_t = 0.8)]
    pub tau_quad: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau_topo: f64,
}

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// JSONL file receiving the record.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record id (default: input file stem).
    #[arg(long)]
    pub id: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Decode the tokens again and compare with the canonical mesh.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct DetokenizeArgs {
    /// Token records (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Record to decode (default: the first).
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Reference point cloud (XYZ).
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Candidate id (default: mesh file stem).
    #[arg(long)]
    pub id: Option<String>,
    /// Condition the candidate belongs to, carried into the report.
    #[arg(long)]
    pub cond: Option<String>,
    /// Surface samples for the Hausdorff distance.
    #[arg(long, default_value_t = meshtopo::metrics::DEFAULT_HD_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Quality reports: a JSONL file or a directory of JSON files.
    #[arg(long)]
    pub reports: PathBuf,
    /// Token records (JSONL) keyed by candidate id.
    #[arg(long)]
    pub tokens: PathBuf,
    /// Triplets output (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// Condition assigned to reports that do not name one.
    #[arg(long, default_value = "default")]
    pub cond: String,
    #[command(flatten)]
    pub mask: MaskArgsCommon,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Token records (JSONL).
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub id: Option<String>,
    /// Mesh the record was encoded from.
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub mask: MaskArgsCommon,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainCommon {
    /// Training data (JSONL).
    #[arg(long)]
    pub data: PathBuf,
    /// Starting checkpoint.
    #[arg(long)]
    pub model_in: Option<PathBuf>,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Per-step log (JSONL).
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub lr: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Directory of `<cond>.xyz` clouds; without it conditions are zero.
    #[arg(long)]
    pub clouds: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelShape {
    /// Vocabulary size (default: from the data).
    #[arg(long)]
    pub vocab: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 64)]
    pub context: usize,
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 32)]
    pub cond_dim: usize,
    /// Standard deviation of the initial weights.
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    /// Likelihood training on token sequences.
    Pretrain {
        #[command(flatten)]
        common: TrainCommon,
        #[command(flatten)]
        shape: ModelShape,
    },
    /// Masked preference training on triplets against a frozen reference.
    Mdpo {
        #[command(flatten)]
        common: TrainCommon,
        /// Frozen reference checkpoint; also the starting policy without --model-in.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub max_tokens: usize,
    /// Context window (default: the model context).
    #[arg(long)]
    pub window: Option<usize>,
    /// Token that ends generation.
    #[arg(long)]
    pub stop: Option<u32>,
    /// Conditioning point cloud (XYZ).
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "generated")]
    pub id: String,
}

#[derive(Debug, Subcommand)]
pub enum SeamCommand {
    /// Seam text (6 numbers per line) to a token record.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 1024)]
        levels: u32,
    },
    /// Token record to seam text.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1024)]
        levels: u32,
    },
    /// Cut a mesh along a seam (text or token record).
    Cut {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        seam: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Normalize the mesh into [-1, 1]³ before snapping.
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = 1024)]
        levels: u32,
    },
    /// Flatten every chart of a cut mesh into one OBJ with texture coordinates.
    Flatten {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conformal energy of an OBJ with texture coordinates.
    Distort {
        #[arg(long)]
        input: PathBuf,
        /// Per-face energies (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structural point sample of a mesh (XYZ).
    Sample {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
    },
}
