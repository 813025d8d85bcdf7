use serde_json::{json, Value};

use crate::CliError;

pub const VERSION: &str = concat!("pmax ", env!("CARGO_PKG_VERSION"));

/// The single header line/object that opens every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub version: String,
    pub command: String,
    pub config: Value,
    pub meta: Value,
}

impl Header {
    pub fn new(command: &str, config: Value) -> Self {
        Header {
            version: VERSION.to_string(),
            command: command.to_string(),
            config,
            meta: Value::Object(Default::default()),
        }
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = meta;
        self
    }

    pub fn to_value(&self) -> Value {
        json!({
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "meta": self.meta,
        })
    }

    /// `# {...}` with a trailing newline.
    pub fn line(&self) -> String {
        format!("# {}\n", self.to_value())
    }

    pub fn parse_line(line: &str) -> Result<Self, CliError> {
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| CliError::Parse("missing '# {...}' header line".into()))?;
        let v: Value = serde_json::from_str(body.trim())
            .map_err(|e| CliError::Parse(format!("header JSON: {e}")))?;
        let field = |k: &str| {
            v.get(k)
                .cloned()
                .ok_or_else(|| CliError::Parse(format!("header lacks \"{k}\"")))
        };
        let text = |k: &str| -> Result<String, CliError> {
            field(k)?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| CliError::Parse(format!("header \"{k}\" is not a string")))
        };
        Ok(Header {
            version: text("version")?,
            command: text("command")?,
            config: field("config")?,
            meta: v.get("meta").cloned().unwrap_or(Value::Null),
        })
    }

    pub fn meta_u64(&self, key: &str) -> Result<u64, CliError> {
        self.meta
            .get(key)
            .and_then(Value::as_u64)
            .ok_or_else(|| CliError::Parse(format!("header meta lacks integer \"{key}\"")))
    }

    pub fn meta_f64(&self, key: &str) -> Result<f64, CliError> {
        self.meta
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| CliError::Parse(format!("header meta lacks number \"{key}\"")))
    }

    pub fn meta_u64_list(&self, key: &str) -> Result<Vec<u64>, CliError> {
        self.meta
            .get(key)
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(Value::as_u64).collect())
            .ok_or_else(|| CliError::Parse(format!("header meta lacks integer list \"{key}\"")))
    }
}
