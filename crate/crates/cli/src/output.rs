use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// Where a run writes its artifacts. `--out` names either a directory
/// (artifacts are `<command>.json`, `<command>_<name>.<ext>`, `manifest.json`)
/// or a `.json` file, which then receives the main artifact while the others
/// sit next to it under the file's stem.
pub struct Output {
    dir: PathBuf,
    stem: String,
    primary: PathBuf,
    manifest: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn new(out: &Path, command: &str) -> Result<Self, CliError> {
        let is_file = out.extension().is_some_and(|e| e == "json");
        let (dir, stem, primary, manifest) = if is_file {
            let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
            let stem = out.file_stem().unwrap().to_string_lossy().into_owned();
            let manifest = dir.join(format!("{stem}.manifest.json"));
            (dir, stem, out.to_path_buf(), manifest)
        } else {
            let primary = out.join(format!("{command}.json"));
            (out.to_path_buf(), command.to_string(), primary, out.join("manifest.json"))
        };
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(&dir).map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?;
        }
        Ok(Output { dir, stem, primary, manifest, written: Vec::new() })
    }

    pub fn extra_path(&self, name: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{}_{name}.{ext}", self.stem))
    }

    /// Returns the bare file name, which is how reports refer to their siblings.
    fn write(&mut self, path: PathBuf, text: &str) -> Result<String, CliError> {
        fs::write(&path, text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        self.written.push(path.display().to_string());
        Ok(path.file_name().unwrap().to_string_lossy().into_owned())
    }

    pub fn primary_json<T: Serialize>(&mut self, value: &T) -> Result<String, CliError> {
        let text = to_json(value)?;
        self.write(self.primary.clone(), &text)
    }

    pub fn primary_text(&mut self, text: &str) -> Result<String, CliError> {
        self.write(self.primary.clone(), text)
    }

    pub fn extra_text(&mut self, name: &str, ext: &str, text: &str) -> Result<String, CliError> {
        self.write(self.extra_path(name, ext), text)
    }

    pub fn extra_mps(&mut self, name: &str, m: &mpskit::AnyMps) -> Result<String, CliError> {
        let text = mpskit::io::mps_to_json(m)?;
        self.extra_text(name, "json", &text)
    }

    pub fn finish(mut self, command: &str, argv: &[String], cfg: &RunConfig, inputs: &[PathBuf]) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "mpskit",
            "version": env!("CARGO_PKG_VERSION"),
            "format_version": cfg.format_version,
            "command": command,
            "argv": argv,
            "config": cfg,
            "seeds": { "seed": cfg.seed },
            "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "outputs": self.written.clone(),
        });
        let path = self.manifest.clone();
        self.write(path, &to_json(&manifest)?)?;
        Ok(())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// `[re, im]` pairs, the encoding used throughout the reports.
pub fn complex_list(v: impl IntoIterator<Item = mpskit::C64>) -> Value {
    Value::Array(v.into_iter().map(|z| json!([z.re, z.im])).collect())
}
