pub mod numerics;
pub mod geometry;
pub mod conjugate;
pub mod expfam;
pub mod report;
pub mod estimators;
pub mod regression;
pub mod cli;
