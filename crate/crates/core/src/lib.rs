//! Invariant-form Hodge Laplacian spectra on homogeneous torus bundles.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32` or `f64`);
//! lattice computations in [`intlat`] are exact. The aliases below fix the
//! scalar to `f64`, which is what the CLI uses.

pub mod curvature;
pub mod error;
pub mod euler_bound;
pub mod flat_torus;
pub mod intlat;
pub mod lie;
pub mod mapping_torus;
pub mod scalar;
pub mod torus_bundle;

pub use error::{Error, Result};
pub use scalar::Real;

pub type StructureConstantsF64 = lie::StructureConstants<f64>;
pub type SpectrumReportF64 = lie::SpectrumReport<f64>;
pub type CurvatureTableF64 = curvature::CurvatureTable<f64>;
pub type MappingTorusBundleF64 = mapping_torus::MappingTorusBundle<f64>;
pub type CollapseFamilyF64 = mapping_torus::CollapseFamily<f64>;
pub type CollapseTableF64 = mapping_torus::CollapseTable<f64>;
pub type FlatTorusF64 = flat_torus::FlatTorus<f64>;
pub type ModeSpectrumF64 = flat_torus::ModeSpectrum<f64>;
pub type EulerMapF64 = euler_bound::EulerMap<f64>;
pub type TorusBundleOverT2F64 = torus_bundle::TorusBundleOverT2<f64>;
