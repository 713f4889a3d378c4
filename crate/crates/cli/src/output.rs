//! CSV and key-value artifacts, written atomically.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// CSV with `#` comment lines (title, units) above a header row.
pub struct Csv {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(kind: &str, note: &str) -> Self {
        Csv {
            comments: vec![
                format!("# ramsey {} {kind}", env!("CARGO_PKG_VERSION")),
                format!("# {note}"),
            ],
            header: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn unit(&mut self, column: &str, unit: &str) {
        self.comments.push(format!("# unit {column}: {unit}"));
    }

    pub fn columns<S: AsRef<str>>(&mut self, names: &[S]) {
        self.header = names.iter().map(|s| s.as_ref().to_string()).collect();
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    /// 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
    pub fn float(x: f64) -> String {
        if x.is_finite() {
            format!("{x:.16e}")
        } else if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    }

    pub fn into_artifact(self, name: &str) -> Artifact {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str(c);
            s.push('\n');
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        Artifact {
            name: name.to_string(),
            contents: s,
        }
    }
}

/// `key = value` lines in insertion order.
#[derive(Default)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn push(&mut self, key: impl Into<String>, value: impl MetaValue) {
        self.entries.push((key.into(), value.render()));
    }

    pub fn into_artifact(self) -> Artifact {
        let mut s = String::new();
        for (k, v) in self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        Artifact {
            name: "metadata.txt".into(),
            contents: s,
        }
    }
}

/// Floats are written round-trip exact; everything else via `Display`.
pub trait MetaValue {
    fn render(&self) -> String;
}

impl MetaValue for f64 {
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl MetaValue for &f64 {
    fn render(&self) -> String {
        format!("{:?}", **self)
    }
}

macro_rules! display_meta {
    ($($t:ty),*) => {
        $(impl MetaValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_meta!(usize, bool, &str, String, &String);

/// Write every artifact to a hidden temporary file, then rename them all into
/// place, so a failure never leaves a partial set behind.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let tmp = dir.join(format!(".{}.tmp", a.name));
        if let Err(e) = fs::write(&tmp, &a.contents) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(io(&tmp)(e));
        }
        staged.push((tmp, dir.join(&a.name)));
    }
    for (tmp, dest) in &staged {
        fs::rename(tmp, dest).map_err(io(dest))?;
    }
    Ok(())
}
