//! Numerical workbench for quaternionic Kähler geometry with torsion on
//! left-invariant models: torsion connections, curvature identities and
//! twistor-space Gray-Hervella classification.

pub mod frame_tensor;
pub mod lie_model;
pub mod linsolve;
pub mod models;
pub mod quaternionic;
pub mod torsion_connection;
pub mod twistor;
pub mod report;
pub mod curvature_lab;
pub mod suite;
