//! TTS and ASR engines reached through external command templates.
//!
//! A template is a whitespace-separated argv whose tokens may contain the
//! placeholders `{text}`, `{voice_path}`, `{out_path}` and `{in_path}`.
//! Substitution happens per token, so values containing spaces stay one
//! argument and no shell is involved. Recognizers print their 1-best
//! hypothesis as the final line of standard output.

use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};

pub trait Synthesizer {
    fn synthesize(&mut self, text: &str, voice_path: &str, out_path: &Path) -> Result<()>;
}

pub trait Recognizer {
    fn transcribe(&mut self, audio_path: &Path) -> Result<String>;
}

const PLACEHOLDERS: [&str; 4] = ["{text}", "{voice_path}", "{out_path}", "{in_path}"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTemplate {
    tokens: Vec<String>,
}

impl CommandTemplate {
    pub fn parse(template: &str) -> Result<Self> {
        let tokens: Vec<String> = template.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(Error::Config("empty command template".into()));
        }
        for tok in &tokens {
            let mut rest = tok.as_str();
            while let Some(open) = rest.find('{') {
                let close = rest[open..]
                    .find('}')
                    .ok_or_else(|| Error::Config(format!("unterminated placeholder in {tok:?}")))?;
                let ph = &rest[open..open + close + 1];
                if !PLACEHOLDERS.contains(&ph) {
                    return Err(Error::Config(format!("unknown placeholder {ph} in template")));
                }
                rest = &rest[open + close + 1..];
            }
        }
        Ok(CommandTemplate { tokens })
    }

    pub fn uses(&self, placeholder: &str) -> bool {
        self.tokens.iter().any(|t| t.contains(placeholder))
    }

    pub fn render(&self, values: &[(&str, &str)]) -> Vec<String> {
        self.tokens
            .iter()
            .map(|t| {
                values
                    .iter()
                    .fold(t.clone(), |acc, (ph, v)| acc.replace(ph, v))
            })
            .collect()
    }

    /// Runs the rendered command; non-zero exit becomes [`Error::External`]
    /// carrying the captured standard error.
    pub fn run(&self, values: &[(&str, &str)]) -> Result<String> {
        let argv = self.render(values);
        let output = Command::new(&argv[0])
            .args(&argv[1..])
            .output()
            .map_err(|e| Error::External(format!("{}: {e}", argv[0])))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(Error::External(format!(
                "{} exited with {}: {}",
                argv[0],
                output.status,
                stderr.trim()
            )));
        }
        String::from_utf8(output.stdout)
            .map_err(|_| Error::External(format!("{}: standard output is not UTF-8", argv[0])))
    }
}

/// Final line of a recognizer's standard output, ignoring one trailing newline.
pub fn final_line(stdout: &str) -> Result<String> {
    if stdout.is_empty() {
        return Err(Error::External("recognizer printed nothing".into()));
    }
    let body = stdout.strip_suffix('\n').unwrap_or(stdout);
    let body = body.strip_suffix('\r').unwrap_or(body);
    Ok(body.rsplit('\n').next().unwrap_or("").to_string())
}

pub struct CommandSynthesizer {
    pub template: CommandTemplate,
}

impl Synthesizer for CommandSynthesizer {
    fn synthesize(&mut self, text: &str, voice_path: &str, out_path: &Path) -> Result<()> {
        let out = out_path.to_string_lossy();
        self.template
            .run(&[("{text}", text), ("{voice_path}", voice_path), ("{out_path}", &out)])?;
        if !out_path.exists() {
            return Err(Error::External(format!(
                "synthesizer did not create {}",
                out_path.display()
            )));
        }
        Ok(())
    }
}

pub struct CommandRecognizer {
    pub template: CommandTemplate,
}

impl Recognizer for CommandRecognizer {
    fn transcribe(&mut self, audio_path: &Path) -> Result<String> {
        let input = audio_path.to_string_lossy();
        let stdout = self.template.run(&[("{in_path}", &input)])?;
        final_line(&stdout)
    }
}
