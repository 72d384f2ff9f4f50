use thiserror::Error;

/// Outcome classes and their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn core_validation(e: &agitrack_core::Error) -> bool {
    matches!(e, agitrack_core::Error::Validation(_))
}

fn forest_validation(e: &agitrack_forest::Error) -> bool {
    use agitrack_forest::Error as E;
    match e {
        E::Validation(_) => true,
        E::Core(c) => core_validation(c),
        _ => false,
    }
}

fn seqnet_validation(e: &agitrack_seqnet::Error) -> bool {
    matches!(e, agitrack_seqnet::Error::Validation(_))
}

fn from_flag(validation: bool, msg: String) -> CliError {
    // bad values supplied by the caller are validation errors, the rest is runtime
    if validation {
        CliError::Validation(msg)
    } else {
        CliError::Runtime(msg)
    }
}

impl From<agitrack_core::Error> for CliError {
    fn from(e: agitrack_core::Error) -> Self {
        from_flag(core_validation(&e), e.to_string())
    }
}

impl From<agitrack_forest::Error> for CliError {
    fn from(e: agitrack_forest::Error) -> Self {
        from_flag(forest_validation(&e), e.to_string())
    }
}

impl From<agitrack_seqnet::Error> for CliError {
    fn from(e: agitrack_seqnet::Error) -> Self {
        from_flag(seqnet_validation(&e), e.to_string())
    }
}

impl From<agitrack_realtime::Error> for CliError {
    fn from(e: agitrack_realtime::Error) -> Self {
        use agitrack_realtime::Error as E;
        let v = match &e {
            E::Validation(_) => true,
            E::Core(c) => core_validation(c),
            E::Forest(f) => forest_validation(f),
            E::Seqnet(s) => seqnet_validation(s),
            _ => false,
        };
        from_flag(v, e.to_string())
    }
}

impl From<agitrack_service::Error> for CliError {
    fn from(e: agitrack_service::Error) -> Self {
        use agitrack_service::Error as E;
        let v = match &e {
            E::Validation(_) => true,
            E::Core(c) => core_validation(c),
            E::Forest(f) => forest_validation(f),
            E::Seqnet(s) => seqnet_validation(s),
            _ => false,
        };
        from_flag(v, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
