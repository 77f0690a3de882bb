//! One directory per invocation, with a manifest of what was written.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::failure::Failure;

pub struct OutputDir {
    dir: PathBuf,
    artifacts: Vec<(String, String)>,
}

/// `lqgame-out/<command>-<unix seconds>-<pid>`.
pub fn default_dir(command: &str) -> PathBuf {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    PathBuf::from("lqgame-out").join(format!("{command}-{secs}-{}", std::process::id()))
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Registers `name` and returns its full path.
    pub fn artifact(&mut self, name: &str, description: &str) -> PathBuf {
        self.artifacts.push((name.to_owned(), description.to_owned()));
        self.dir.join(name)
    }

    pub fn file(&mut self, name: &str, description: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.artifact(name, description);
        Ok(BufWriter::new(File::create(path)?))
    }

    pub fn json(&mut self, name: &str, description: &str, value: &Value) -> Result<(), Failure> {
        let path = self.artifact(name, description);
        fs::write(path, serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n")?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, description: &str, body: &str) -> Result<(), Failure> {
        fs::write(self.artifact(name, description), body)?;
        Ok(())
    }

    /// Writes `manifest.json` listing every artifact, the resolved settings
    /// and the exit code.
    pub fn finish(self, command: &str, config: &Value, exit_code: u8, message: Option<&str>) -> Result<(), Failure> {
        let artifacts: Vec<Value> =
            self.artifacts.iter().map(|(f, d)| json!({ "file": f, "description": d })).collect();
        let manifest = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "exit_code": exit_code,
            "message": message,
            "artifacts": artifacts,
        });
        fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("JSON") + "\n")?;
        Ok(())
    }
}
