//! barwitt: exact-rational engine for bar-construction Hopf algebras of CDGA
//! models, Thom-Whitney simple algebras of cosimplicial CDGAs, weight
//! filtrations and spectral sequences, and the unipotent monodromy pipeline.

pub mod bar;
pub mod cdga;
pub mod cli;
pub mod cosimp;
pub mod filt;
pub mod fixtures;
pub mod free;
pub mod gla;
pub mod matrix;
pub mod model;
pub mod monodromy;
pub mod par;
pub mod report;
