//! Access to the host C compiler; tests that need it skip without one.

use cbc_core::driver::{find_cc, Workdir};

pub struct Scratch {
    _dir: tempfile::TempDir,
    pub wd: Workdir,
}

pub fn scratch() -> Option<Scratch> {
    let Some(cc) = find_cc() else {
        eprintln!("skipping: no C compiler (set CBC_CC)");
        return None;
    };
    let dir = tempfile::tempdir().unwrap();
    let wd = Workdir::new(dir.path(), cc).unwrap();
    Some(Scratch { _dir: dir, wd })
}
