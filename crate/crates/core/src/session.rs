//! Per-run session state under the base tier.
//!
//! Everything the flusher and launcher share lives in
//! `<base>/.sea_session/<run-id>/`: the singleton lease, the journal, and
//! JSON-lines reports. Coordination happens only through the filesystem.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::os::unix::io::AsRawFd;
use std::path::{Path, PathBuf};

use crate::config::SeaConfig;

pub const SESSION_DIR: &str = ".sea_session";

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("session {0}: {1}")]
    Io(String, std::io::Error),
    #[error("another flusher already holds the lease for session `{0}`")]
    LeaseHeld(String),
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub dir: PathBuf,
}

impl Session {
    /// Opens (creating if needed) the session directory for `id`.
    pub fn open(cfg: &SeaConfig, id: &str) -> Result<Session, SessionError> {
        let dir = cfg.base().root.join(SESSION_DIR).join(id);
        std::fs::create_dir_all(&dir).map_err(|e| SessionError::Io(id.to_string(), e))?;
        Ok(Session {
            id: id.to_string(),
            dir,
        })
    }

    /// Fresh run id: coarse wall-clock plus pid keeps concurrent launches
    /// on one node distinct.
    pub fn fresh_id() -> String {
        let ms = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        format!("run-{ms}-{}", std::process::id())
    }

    pub fn lock_path(&self) -> PathBuf {
        self.dir.join("flusher.lock")
    }

    pub fn journal_path(&self) -> PathBuf {
        self.dir.join("journal.jsonl")
    }

    pub fn report_path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.jsonl"))
    }

    /// Appends one JSON line to the named report.
    pub fn append_report<T: serde::Serialize>(
        &self,
        name: &str,
        record: &T,
    ) -> Result<(), SessionError> {
        let path = self.report_path(name);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| SessionError::Io(self.id.clone(), e))?;
        let mut line = serde_json::to_string(record).expect("report serializes");
        line.push('\n');
        file.write_all(line.as_bytes())
            .map_err(|e| SessionError::Io(self.id.clone(), e))
    }
}

/// Exclusive advisory lock realizing the one-flusher-per-node rule. The
/// lock dies with the process, so a killed flusher frees it implicitly.
#[derive(Debug)]
pub struct Lease {
    _file: File,
    path: PathBuf,
}

impl Lease {
    pub fn acquire(session: &Session) -> Result<Lease, SessionError> {
        let path = session.lock_path();
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .open(&path)
            .map_err(|e| SessionError::Io(session.id.clone(), e))?;
        let rc = unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX | libc::LOCK_NB) };
        if rc != 0 {
            return Err(SessionError::LeaseHeld(session.id.clone()));
        }
        Ok(Lease { _file: file, path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SeaConfig;

    fn cfg(dir: &Path) -> SeaConfig {
        let base = dir.join("base");
        std::fs::create_dir_all(&base).unwrap();
        let text = format!(
            "[sea]\nmount = /sea\nmax_file_size = 1\nn_processes = 1\n\
             [tier:b]\nroot = {}\nclass = base\n",
            base.display()
        );
        SeaConfig::parse(&text, dir, "t").unwrap()
    }

    #[test]
    fn lease_is_exclusive_within_a_session() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg(dir.path());
        let session = Session::open(&cfg, "s1").unwrap();
        let lease = Lease::acquire(&session).unwrap();
        assert!(matches!(
            Lease::acquire(&session),
            Err(SessionError::LeaseHeld(_))
        ));
        drop(lease);
        assert!(Lease::acquire(&session).is_ok());
    }

    #[test]
    fn reports_append_json_lines() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg(dir.path());
        let session = Session::open(&cfg, "s2").unwrap();
        session.append_report("cycle", &serde_json::json!({"n": 1})).unwrap();
        session.append_report("cycle", &serde_json::json!({"n": 2})).unwrap();
        let text = std::fs::read_to_string(session.report_path("cycle")).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
