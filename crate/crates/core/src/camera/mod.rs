//! Camera model: optics (radiance to sensor-plane irradiance) and the sensor
//! (irradiance to noisy digital numbers on a colour filter mosaic).

mod optics;
mod sensor;

pub use optics::{field_angles, irradiance_factor, optics_irradiance, IrradianceImage, OpticsSpec};
pub use sensor::{
    digitize, expose, expose_electrons, expose_frame, mean_electrons, snr_curve, electrons_per_irradiance,
    CfaChannel, CfaPattern, FixedPattern, RawImage, RawMetadata, SensorSpec,
};
