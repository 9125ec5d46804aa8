//! The three evaluation metrics: SSIM on gray source/generated pairs,
//! Wasserstein color distance on generated-vs-target sets, and Fréchet
//! feature distance on generated-vs-target sets.

mod features;
mod frechet;
mod ssim;
mod wasserstein;

pub use features::{
    extract_features, fid, load_features, save_features, ExternalMlpExtractor, FeatureExtractor,
    RandomProjectionExtractor,
};
pub use frechet::{fit_feature_gaussian, frechet_distance, sqrtm_psd, FeatureGaussian};
pub use ssim::{ssim, SsimResult, DEFAULT_DATA_RANGE, DEFAULT_WINDOW};
pub use wasserstein::{wasserstein_1d, wd_color, EmpiricalDistribution, WD_SAMPLE_CAP};

pub use crate::util::mean_and_stderr;
