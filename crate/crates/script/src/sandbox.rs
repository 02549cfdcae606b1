//! Filesystem confinement for script-initiated file access.

use std::fs;
use std::io::Write;
use std::path::{Component, Path, PathBuf};

use crate::error::{ErrorKind, ExecError};

/// Lexically resolves `.` and `..` without touching the filesystem.
/// Returns `None` if the path climbs above its root.
pub fn normalize(path: &Path) -> Option<PathBuf> {
    let mut out = PathBuf::new();
    let mut depth = 0usize;
    for comp in path.components() {
        match comp {
            Component::Prefix(p) => out.push(p.as_os_str()),
            Component::RootDir => out.push(Component::RootDir.as_os_str()),
            Component::CurDir => {}
            Component::ParentDir => {
                if depth == 0 {
                    return None;
                }
                out.pop();
                depth -= 1;
            }
            Component::Normal(c) => {
                out.push(c);
                depth += 1;
            }
        }
    }
    Some(out)
}

/// Canonicalizes the deepest existing ancestor and re-appends the rest, so
/// symlinks inside the tree are followed without requiring the leaf to exist.
fn canonical_prefix(path: &Path) -> PathBuf {
    let mut existing = path.to_path_buf();
    let mut tail = Vec::new();
    loop {
        if let Ok(c) = existing.canonicalize() {
            let mut out = c;
            for part in tail.iter().rev() {
                out.push(part);
            }
            return out;
        }
        match (existing.file_name().map(|s| s.to_owned()), existing.parent()) {
            (Some(name), Some(parent)) => {
                tail.push(name);
                existing = parent.to_path_buf();
            }
            _ => return path.to_path_buf(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

#[derive(Debug)]
pub struct Sandbox {
    root: PathBuf,
    canonical_root: PathBuf,
    read_roots: Vec<PathBuf>,
    files_written: Vec<String>,
}

impl Sandbox {
    pub fn new(root: &Path, read_roots: &[PathBuf]) -> Self {
        let canonical_root = root.canonicalize().unwrap_or_else(|_| root.to_path_buf());
        Self {
            root: root.to_path_buf(),
            canonical_root,
            read_roots: read_roots
                .iter()
                .map(|r| r.canonicalize().unwrap_or_else(|_| r.clone()))
                .collect(),
            files_written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Maps a script-supplied path to a real path, or reports a violation.
    pub fn resolve(&self, raw: &str, access: Access) -> Result<PathBuf, ExecError> {
        let violation = || {
            ExecError::new(
                ErrorKind::SandboxViolation,
                format!("path '{raw}' resolves outside the working directory"),
                None,
            )
        };
        if raw.contains('\0') {
            return Err(violation());
        }
        let given = Path::new(raw);
        let joined = if given.is_absolute() { given.to_path_buf() } else { self.canonical_root.join(given) };
        let lexical = normalize(&joined).ok_or_else(violation)?;
        let real = canonical_prefix(&lexical);
        if real.starts_with(&self.canonical_root) && lexical.starts_with(&self.canonical_root) {
            return Ok(real);
        }
        if access == Access::Read && self.read_roots.iter().any(|r| real.starts_with(r)) {
            return Ok(real);
        }
        Err(violation())
    }

    /// Path relative to the working directory, for reporting.
    pub fn relative(&self, real: &Path) -> String {
        real.strip_prefix(&self.canonical_root)
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_else(|_| real.to_string_lossy().into_owned())
    }

    pub fn record_write(&mut self, real: &Path) {
        let rel = self.relative(real);
        if !self.files_written.contains(&rel) {
            self.files_written.push(rel);
        }
    }

    pub fn files_written(&self) -> &[String] {
        &self.files_written
    }

    pub fn open(&mut self, raw: &str, mode: &str) -> Result<FileHandle, OpenError> {
        let kind = match mode {
            "r" | "rt" => Access::Read,
            "w" | "wt" | "a" | "at" => Access::Write,
            other => return Err(OpenError::Mode(other.to_string())),
        };
        let real = self.resolve(raw, kind).map_err(OpenError::Sandbox)?;
        let state = if kind == Access::Read {
            let text = fs::read_to_string(&real).map_err(|e| OpenError::Io(io_class(&e), format!("{e}: '{raw}'")))?;
            FileState::Read { text, pos: 0 }
        } else {
            let file = fs::OpenOptions::new()
                .create(true)
                .write(true)
                .append(mode.starts_with('a'))
                .truncate(mode.starts_with('w'))
                .open(&real)
                .map_err(|e| OpenError::Io(io_class(&e), format!("{e}: '{raw}'")))?;
            self.record_write(&real);
            FileState::Write(Some(file))
        };
        Ok(FileHandle { display_name: raw.to_string(), state })
    }
}

pub fn io_class(e: &std::io::Error) -> &'static str {
    match e.kind() {
        std::io::ErrorKind::NotFound => "FileNotFoundError",
        std::io::ErrorKind::PermissionDenied => "PermissionError",
        std::io::ErrorKind::AlreadyExists => "FileExistsError",
        _ => "OSError",
    }
}

#[derive(Debug)]
pub enum OpenError {
    Sandbox(ExecError),
    Mode(String),
    Io(&'static str, String),
}

#[derive(Debug)]
enum FileState {
    Read { text: String, pos: usize },
    Write(Option<fs::File>),
}

/// An open text file.
#[derive(Debug)]
pub struct FileHandle {
    pub display_name: String,
    state: FileState,
}

impl FileHandle {
    pub fn read(&mut self) -> Result<String, String> {
        match &mut self.state {
            FileState::Read { text, pos } => {
                let out = text[*pos..].to_string();
                *pos = text.len();
                Ok(out)
            }
            FileState::Write(_) => Err("not readable".into()),
        }
    }

    pub fn readline(&mut self) -> Result<String, String> {
        match &mut self.state {
            FileState::Read { text, pos } => {
                let rest = &text[*pos..];
                let end = rest.find('\n').map(|i| i + 1).unwrap_or(rest.len());
                let line = rest[..end].to_string();
                *pos += end;
                Ok(line)
            }
            FileState::Write(_) => Err("not readable".into()),
        }
    }

    pub fn write(&mut self, s: &str) -> Result<usize, String> {
        match &mut self.state {
            FileState::Write(Some(f)) => {
                f.write_all(s.as_bytes()).map_err(|e| e.to_string())?;
                Ok(s.chars().count())
            }
            FileState::Write(None) => Err("I/O operation on closed file.".into()),
            FileState::Read { .. } => Err("not writable".into()),
        }
    }

    pub fn close(&mut self) {
        if let FileState::Write(f) = &mut self.state {
            *f = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_rejects_climbing_past_root() {
        assert_eq!(normalize(Path::new("a/../b")), Some(PathBuf::from("b")));
        assert_eq!(normalize(Path::new("../x")), None);
        assert_eq!(normalize(Path::new("/a/./b/..")), Some(PathBuf::from("/a")));
    }

    #[test]
    fn escapes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let sb = Sandbox::new(dir.path(), &[]);
        assert!(sb.resolve("../escape.txt", Access::Write).is_err());
        assert!(sb.resolve("/etc/passwd", Access::Read).is_err());
        assert!(sb.resolve("sub/../ok.txt", Access::Write).is_ok());
        let inside = dir.path().canonicalize().unwrap().join("x.txt");
        assert!(sb.resolve(inside.to_str().unwrap(), Access::Write).is_ok());
    }

    #[cfg(unix)]
    #[test]
    fn symlink_escape_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let outside = tempfile::tempdir().unwrap();
        std::os::unix::fs::symlink(outside.path(), dir.path().join("link")).unwrap();
        let sb = Sandbox::new(dir.path(), &[]);
        assert!(sb.resolve("link/f.txt", Access::Write).is_err());
    }

    #[test]
    fn read_roots_are_read_only() {
        let dir = tempfile::tempdir().unwrap();
        let data = tempfile::tempdir().unwrap();
        fs::write(data.path().join("d.txt"), "hi").unwrap();
        let mut sb = Sandbox::new(dir.path(), &[data.path().to_path_buf()]);
        let p = data.path().join("d.txt");
        let p = p.to_str().unwrap();
        assert!(sb.resolve(p, Access::Read).is_ok());
        assert!(sb.resolve(p, Access::Write).is_err());
        let mut f = sb.open(p, "r").unwrap();
        assert_eq!(f.read().unwrap(), "hi");
    }
}
