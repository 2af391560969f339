//! External encoder invocation. The command template is run through `sh -c`
//! with `{input}`, `{output}`, `{crf}` and `{video_id}` replaced by
//! shell-quoted values. The encoder must leave one file per frame in the
//! output directory; nothing else about its output is checked.

use std::path::Path;
use std::process::Command;

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub command: String,
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

pub fn render_command(
    template: &str,
    input: &Path,
    output: &Path,
    crf: u32,
    video_id: &str,
) -> String {
    template
        .replace("{input}", &quote(&input.to_string_lossy()))
        .replace("{output}", &quote(&output.to_string_lossy()))
        .replace("{crf}", &crf.to_string())
        .replace("{video_id}", &quote(video_id))
}

pub fn count_frames(dir: &Path) -> CliResult<usize> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut n = 0;
    for e in entries {
        let e = e.map_err(|e| CliError::io(dir, e))?;
        if e.file_type()
            .map_err(|err| CliError::io(&e.path(), err))?
            .is_file()
        {
            n += 1;
        }
    }
    Ok(n)
}

/// Runs the encoder for one video and checks the frame count of its output.
pub fn encode(
    config: &EncoderConfig,
    input: &Path,
    output: &Path,
    crf: u32,
    video_id: &str,
    expected_frames: usize,
) -> CliResult<()> {
    std::fs::create_dir_all(output).map_err(|e| CliError::io(output, e))?;
    let cmd = render_command(&config.command, input, output, crf, video_id);
    tracing::debug!(video_id, %cmd, "encoder");
    let status = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .status()
        .map_err(|e| CliError::Other(format!("cannot start encoder: {e}")))?;
    if !status.success() {
        return Err(CliError::Other(format!("encoder exited with {status}")));
    }
    let got = count_frames(output)?;
    if got != expected_frames {
        return Err(CliError::Other(format!(
            "encoder wrote {got} frames, source timing has {expected_frames}"
        )));
    }
    Ok(())
}
