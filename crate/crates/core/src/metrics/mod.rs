//! Non-learned evaluation metrics: edge fidelity (SSIM, chamfer distance)
//! and appearance transfer (PSNR, GLCM texture distance, color histogram loss).

pub mod chamfer;
pub mod glcm;
pub mod histogram;
pub mod pixel;
pub mod report;

pub use chamfer::{chamfer, squared_distance_transform, EdgePointSet};
pub use glcm::{glcm, glcm_counts, glcm_distance, GlcmMatrix, GlcmStatistic, DEFAULT_OFFSETS};
pub use histogram::{color_hist_loss, joint_histogram};
pub use pixel::{psnr, ssim, SsimParams};
pub use report::{evaluate_pair, sobel_magnitude, write_csv, EdgeOperator, MetricParams, MetricReport};
