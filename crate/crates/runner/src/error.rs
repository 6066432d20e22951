use chsav::Error as SchemeError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown recipe `{0}` (known: random, rose, two-circles, ellipse-circle, pinch-off)")]
    UnknownRecipe(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("step {step} (t = {t:.6e}): {source}")]
    Scheme {
        step: usize,
        t: f64,
        #[source]
        source: SchemeError,
    },
}

impl RunError {
    /// 2 for configuration problems, 3 for solver failures, 4 for certificate
    /// violations, 1 for i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::UnknownRecipe(_) => 2,
            RunError::Io(_) => 1,
            RunError::Scheme { source, .. } => match source.root() {
                SchemeError::CertificateViolation { .. } => 4,
                SchemeError::Parameter(_) => 2,
                _ => 3,
            },
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}
