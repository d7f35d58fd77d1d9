//! Affine transforms, resampling, the SSD metric and simplex optimization.

mod optimizer;
mod register;
mod resample;
mod transform;

pub use optimizer::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use register::{register_affine, ssd, RegionBox, RegistrationOptions, RegistrationResult};
pub use resample::{
    resample, resample_field, resample_mask, resample_mask_volume, resample_volume, Image3,
    Interpolation,
};
pub use transform::{AffineDof, AffineTransform, Mat3};
