//! Plain-text run manifests. Field order is fixed by insertion, so two
//! identical runs differ only in the wall-time line.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use super::write_file;
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stage {
    pub name: String,
    pub fields: Vec<(String, String)>,
}

impl Stage {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            fields: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: String,
    pub stages: Vec<Stage>,
    pub wall_time: Duration,
}

impl Manifest {
    pub fn new(command: &str, config: String) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            stages: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn stage(&mut self, name: &str) -> &mut Stage {
        self.stages.push(Stage::new(name));
        self.stages.last_mut().expect("just pushed")
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# keen run manifest");
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "\n## config");
        s.push_str(&self.config);
        for st in &self.stages {
            let _ = writeln!(s, "\n## stage {}", st.name);
            for (k, v) in &st.fields {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        let _ = writeln!(s, "\nwall_time_s = {:.3}", self.wall_time.as_secs_f64());
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.render())
    }
}
