use thiserror::Error;

/// Errors raised by the core numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies on interface {interface} and no side hint was given")]
    OnInterfaceWithoutHint { interface: usize, point: [f64; 3] },

    #[error("point {0:?} is not inside any region")]
    OutsideAllRegions([f64; 3]),

    #[error("non-physical parameters at {point:?}: {reason}")]
    NonPhysical { point: [f64; 3], reason: String },

    #[error("medium has no foliation function")]
    NoFoliation,

    #[error("characteristic condition violated: relative drift {drift:.3e}")]
    CharacteristicViolation { drift: f64 },

    #[error("integrator step size underflow at s = {s} (h = {h:.3e})")]
    StepFailure { s: f64, h: f64 },

    #[error("glancing incidence on interface {interface}: |cos| = {cosine:.3e}")]
    GlancingRay { interface: usize, cosine: f64 },

    #[error("branch policy exhausted at event {event}: {reason}")]
    PolicyExhausted { event: usize, reason: String },

    #[error("ray did not return to the leaf: {reason}")]
    NoReturn { reason: String },

    #[error("interface system is singular (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("ray bundle broken: {reason}")]
    BundleBroken { reason: String },

    #[error("caustic encountered at t = {t}")]
    CausticEncountered { t: f64 },

    #[error("leading amplitude vanishes at the start of the ray")]
    ZeroLeadingAmplitude,

    #[error("{count} grid points lie on the set c_P = 2 c_S (first at {point:?})")]
    NearD { point: [f64; 3], count: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arr(v: &nalgebra::Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}
