//! Post-perception pipeline for suction manipulation of articulated objects.
//!
//! Given a part mask and a normal map, [`proposer::propose`] picks a contact
//! pixel and a manipulation direction. [`metrics`] scores predicted masks and
//! gates bad ones, and [`sim`] runs one-step, multi-step and random-point
//! policies against rendered box-and-joint scenes.

pub mod metrics;
pub mod normals;
pub mod predictor;
pub mod proposer;
pub mod raster;
pub mod seed;
pub mod sim;

