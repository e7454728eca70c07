use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("mesh level {level} exceeds the supported maximum {max}")]
    SizeGuard { level: usize, max: usize },

    #[error("flux quantization violated: total flux / 2π = {ratio} is not an integer")]
    FluxQuantization { ratio: f64 },

    #[error(
        "curvature extraction failed on face {face}: holonomy eigenphase {phase:.6} rad \
         is within {margin} rad of the branch cut"
    )]
    BranchCut { face: usize, phase: f64, margin: f64 },

    #[error("degree quantization violated: residual {residual:.3e} (total {total})")]
    DegreeQuantization { residual: f64, total: f64 },

    #[error("flow step failed after {halvings} step halvings (energy {energy})")]
    StepFailure { halvings: u32, energy: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
