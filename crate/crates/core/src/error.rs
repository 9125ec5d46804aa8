//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tile geometry: {0}")]
    InvalidTile(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("empty corpus: at least one tile is required")]
    EmptyCorpus,

    #[error("insufficient tissue: {found} pixels above the OD threshold, {required} required")]
    InsufficientTissue { found: usize, required: usize },

    #[error("degenerate stain plane: optical density is rank-deficient (single stain?)")]
    DegenerateStainPlane,

    #[error("no usable tiles in corpus; per-tile failures: {}", format_skips(.reasons))]
    NoUsableTiles { reasons: Vec<(String, String)> },

    #[error("images must have identical dimensions: {0}x{1} vs {2}x{3}")]
    SizeMismatch(u32, u32, u32, u32),

    #[error("invalid SSIM window {window} for {width}x{height} image (must be odd, positive, and fit inside the image)")]
    InvalidWindow {
        window: usize,
        width: u32,
        height: u32,
    },

    #[error("empty sample set: {0}")]
    EmptySamples(&'static str),

    #[error("sample contains a non-finite value")]
    NonFiniteSample,

    #[error("need at least {required} samples to fit a Gaussian, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("matrix is not symmetric within tolerance")]
    AsymmetricMatrix,

    #[error("feature extraction failed for tile '{tile_id}': {reason}")]
    FeatureExtraction { tile_id: String, reason: String },

    #[error("invalid extractor model: {0}")]
    InvalidModel(String),

    #[error("feature cache mismatch: {0}")]
    CacheMismatch(String),

    #[error("image {width}x{height} is smaller than the tile size {tile_size}")]
    ImageTooSmall {
        width: u32,
        height: u32,
        tile_size: u32,
    },

    #[error("duplicate tile id '{0}' in manifest")]
    DuplicateId(String),

    #[error("split leakage: source image '{source_id}' appears in both {a} and {b}")]
    SplitLeakage {
        source_id: String,
        a: &'static str,
        b: &'static str,
    },

    #[error("manifest references missing file: {0}")]
    MissingTile(String),

    #[error("manifest line {line}: {source}")]
    ManifestParse {
        line: usize,
        source: serde_json::Error,
    },

    #[error("not enough tiles for blind mix: need {needed} in the {which} pool, got {got}")]
    InsufficientTiles {
        which: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_skips(reasons: &[(String, String)]) -> String {
    let shown: Vec<String> = reasons
        .iter()
        .take(5)
        .map(|(id, why)| format!("{id}: {why}"))
        .collect();
    let mut s = shown.join("; ");
    if reasons.len() > 5 {
        s.push_str(&format!("; ... ({} total)", reasons.len()));
    }
    s
}

pub type Result<T> = std::result::Result<T, Error>;
