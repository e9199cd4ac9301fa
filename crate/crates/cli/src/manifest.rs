//! Run manifests written as comment headers into every output.

use crate::error::CliError;

pub const REPLAY_KEY: &str = "replay=";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    /// Canonical arguments after the program name, output paths excluded.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, seed: Option<u64>) -> Self {
        // outputs stay byte-identical unless the caller pins a build time
        let timestamp = std::env::var("SOURCE_DATE_EPOCH").unwrap_or_else(|_| "none".to_string());
        RunManifest {
            command: command.to_string(),
            args,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp,
        }
    }

    pub fn lines(&self) -> Vec<String> {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        let replay = shlex::try_join(self.args.iter().map(String::as_str)).expect("arguments contain no NUL bytes");
        vec![
            format!("tool=maskkit {}", self.version),
            format!("command={}", self.command),
            format!("seed={seed}"),
            format!("timestamp={}", self.timestamp),
            format!("{REPLAY_KEY}{replay}"),
        ]
    }

    /// Lines prefixed with `# ` for text outputs.
    pub fn header(&self) -> String {
        self.lines().iter().map(|l| format!("# {l}\n")).collect()
    }
}

/// Arguments recorded in a `replay=` comment line.
pub fn replay_args(comments: &[String]) -> Result<Vec<String>, CliError> {
    let line = comments
        .iter()
        .find_map(|c| c.strip_prefix(REPLAY_KEY))
        .ok_or_else(|| CliError::usage("no replay line in file header"))?;
    shlex::split(line).ok_or_else(|| CliError::usage(format!("malformed replay line {line:?}")))
}

/// Text of the leading `#` comment lines, prefix stripped.
pub fn leading_comments(data: &[u8]) -> Vec<String> {
    let text = String::from_utf8_lossy(data);
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        // Netpbm files carry the magic number on the first line
        if i == 0 && line.starts_with('P') && !line.starts_with('#') {
            continue;
        }
        match line.strip_prefix('#') {
            Some(c) => out.push(c.strip_prefix(' ').unwrap_or(c).to_string()),
            None => break,
        }
    }
    out
}
