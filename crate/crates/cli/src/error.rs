use monogp::bench::BenchError;
use monogp::datasets::DatasetError;
use monogp::GpError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{failed} acceptance check(s) failed")]
    Check { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Check { .. } => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Check { .. } => "check",
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind(), "code": self.exit_code(), "message": self.to_string()}})
            .to_string()
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::Conditioning { .. }
            | GpError::Convergence { .. }
            | GpError::NotConverged
            | GpError::Initialization => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Fit { model, source } => match CliError::from(source) {
                CliError::Numerical(m) => CliError::Numerical(format!("{model} model: {m}")),
                other => CliError::Config(format!("{model} model: {other}")),
            },
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let num = CliError::from(GpError::Convergence { sweeps: 3, max_delta: 0.1 });
        assert_eq!(num.exit_code(), 3);
        assert_eq!(CliError::from(GpError::Initialization).exit_code(), 3);
        assert_eq!(CliError::from(GpError::EmptyData).exit_code(), 2);
        assert_eq!(CliError::from(DatasetError::MissingColumn("t".into())).exit_code(), 2);
        let fit = CliError::from(BenchError::Fit {
            model: "monotonic",
            source: GpError::Conditioning { jitters: vec![1e-8] },
        });
        assert_eq!(fit.exit_code(), 3);
        assert!(fit.to_string().starts_with("monotonic model"));
        assert_eq!(CliError::Check { failed: 1 }.exit_code(), 4);
    }

    #[test]
    fn error_json_shape() {
        let v: serde_json::Value = serde_json::from_str(&CliError::Config("bad".into()).to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "config");
        assert_eq!(v["error"]["code"], 2);
        assert_eq!(v["error"]["message"], "bad");
    }
}
