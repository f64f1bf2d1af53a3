//! Generalized spectral clustering of lossless power networks.
//!
//! A network at a steady operating point defines a dynamic graph whose edge
//! weights are line synchronizing coefficients and whose node weights are
//! bus dampings. Clustering the generalized eigenvectors of the pair
//! `(L, D)` splits the grid into zones that swing coherently after a
//! disturbance. The crate covers the full pipeline:
//!
//! * [`netmodel`]: network types, MATPOWER and JSON input, parameter sampling
//! * [`powerflow`]: lossless angle solver and injection rebalancing
//! * [`dyngraph`]: dynamic graph, Laplacian and incidence matrices
//! * [`geig`]: dense symmetric and generalized eigensolvers
//! * [`cluster`]: spectral embedding, k-means, k selection, partition metrics
//! * [`sim`]: swing/Kuramoto simulation and coherence analysis
//! * [`robust`]: pencil perturbation bounds and randomized scenario studies

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod data;
pub mod dyngraph;
pub mod error;
pub mod geig;
pub mod io;
pub mod netmodel;
pub mod powerflow;
pub mod robust;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
pub use netmodel::{Branch, Bus, BusKind, Network, OperatingPoint};
