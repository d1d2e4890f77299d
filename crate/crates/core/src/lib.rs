//! Simulation engines and learning tools for measuring the local complexity
//! of quantum spin-chain states from few-site observations.

pub mod analysis;
pub mod autoencoder;
pub mod circuit;
pub mod dataset;
pub mod error;
pub mod gge;
pub mod lindblad;
pub mod linalg;
pub mod pauli;
pub mod reconstruct;
pub mod sparse;

pub use error::{Error, Result};

pub use analysis::{Correlation, Embedding2D, IdEstimate, LatentDirection, MuWindow, Pca, TsneConfig, WindowSlope};
pub use autoencoder::{Activation, Checkpoint, NetworkConfig, NetworkParams, SweepPoint, TrainConfig, TrainReport};
pub use circuit::{CircuitConfig, GateParams, GateSchedule, StateVector, TrajectoryRecord};
pub use dataset::{BathFamily, Dataset, GgeDatasetConfig, LindbladDatasetConfig, Metadata, Split};
pub use gge::{DensityMatrix, GgeState, GibbsSpectrum, LagrangeVector, ObservationVector};
pub use lindblad::{JumpOperator, LindbladSpec, Liouvillian, SolverOptions, SteadyState};
pub use pauli::{OperatorSpec, Pauli, PauliLabel, PlacedPauli, Term};
pub use reconstruct::{
    AveragedCoefficient, CandidateRanking, EmbeddingMode, NewtonOptions, Precondition, ReconstructConfig,
    ReconstructionReport, ReconstructionResult,
};
