use thiserror::Error;

use crate::medium::ComplexFrequency;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("depth {z} m is outside the medium")]
    Domain { z: f64 },

    #[error("zero wavenumber has no branch root")]
    ZeroWavenumber,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("surface impedance is degenerate (q(0) + ik0 = 0) at omega = {omega}")]
    Resonance { omega: ComplexFrequency },

    #[error("non-finite intermediate value: {0}")]
    NumericalOverflow(String),

    #[error("impedance pole crossed at z = {z} m, omega = {omega}")]
    PoleCrossing { z: f64, omega: ComplexFrequency },

    #[error("impedance pole inside a slab of thickness {dz} m")]
    SlabPole { dz: f64 },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("{fraction:.3e} of the pulse energy lies above the Nyquist frequency {nyquist:.3e} rad/s")]
    Aliasing { fraction: f64, nyquist: f64 },

    #[error("spectrum has no signal above the cutoff")]
    NoSignal,

    #[error("analytic continuation unstable: {0}")]
    ContinuationUnstable(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("time shift of {shift} samples empties a trace of {len} samples")]
    EmptyTrace { shift: usize, len: usize },

    #[error("field amplitude {0:e} is below the division floor")]
    DivisionDegenerate(f64),

    #[error("no arrival exceeds the detection threshold")]
    NoArrival,

    #[error("w pole (u = -1) at z = {z} m")]
    WPole { z: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
