//! Merged directory streams.
//!
//! A directory under the mountpoint may have physical entries on several
//! tiers; `opendir`/`fdopendir` on such a directory return a pointer to a
//! `SeaDir` instead of a real `DIR`. The merged snapshot is union-by-name
//! with the fastest tier winning duplicates. A real stream on the fastest
//! physical directory is kept alive behind it so `dirfd` works. A magic
//! word distinguishes our streams from real ones inside the readdir-family
//! wrappers; real streams pass straight through.

use std::ffi::OsStr;
use std::os::unix::ffi::OsStrExt;
use std::path::Path;

use libc::{c_char, c_int, c_long};

use crate::state::Shim;

const SEA_DIR_MAGIC: u64 = 0x5EA_D1E5_0EA_D19; // arbitrary, unlikely on a real DIR

#[repr(C)]
pub struct SeaDir {
    magic: u64,
    entries: Vec<libc::dirent64>,
    pos: usize,
    real: *mut libc::DIR,
}

fn dtype_of(file_type: Option<std::fs::FileType>) -> u8 {
    use std::os::unix::fs::FileTypeExt;
    let Some(t) = file_type else { return libc::DT_UNKNOWN };
    if t.is_dir() {
        libc::DT_DIR
    } else if t.is_symlink() {
        libc::DT_LNK
    } else if t.is_file() {
        libc::DT_REG
    } else if t.is_fifo() {
        libc::DT_FIFO
    } else if t.is_socket() {
        libc::DT_SOCK
    } else if t.is_char_device() {
        libc::DT_CHR
    } else if t.is_block_device() {
        libc::DT_BLK
    } else {
        libc::DT_UNKNOWN
    }
}

fn make_dirent(name: &OsStr, ino: u64, dtype: u8, off: usize) -> Option<libc::dirent64> {
    let bytes = name.as_bytes();
    let mut entry: libc::dirent64 = unsafe { std::mem::zeroed() };
    if bytes.len() >= entry.d_name.len() {
        return None; // cannot happen on normal filesystems
    }
    entry.d_ino = ino;
    entry.d_off = off as i64 + 1;
    entry.d_reclen = std::mem::size_of::<libc::dirent64>() as u16;
    entry.d_type = dtype;
    for (i, b) in bytes.iter().enumerate() {
        entry.d_name[i] = *b as c_char;
    }
    entry.d_name[bytes.len()] = 0;
    Some(entry)
}

/// Builds the merged snapshot for a virtual directory, or `None` when no
/// tier has it (caller reports ENOENT).
pub fn open_union(shim: &Shim, rel: &Path) -> Option<Box<SeaDir>> {
    let union = shim.mapper.list_union(rel).ok()?;

    let mut entries = Vec::with_capacity(union.len() + 2);
    // Real streams yield the dot entries; tools like `ls -a` expect them.
    let self_ino = shim
        .mapper
        .locate_all(rel)
        .first()
        .and_then(|(_, p)| p.metadata().ok())
        .map(|m| std::os::unix::fs::MetadataExt::ino(&m))
        .unwrap_or(1);
    entries.push(make_dirent(OsStr::new("."), self_ino, libc::DT_DIR, 0)?);
    entries.push(make_dirent(OsStr::new(".."), 1, libc::DT_DIR, 1)?);
    for item in union {
        let off = entries.len();
        if let Some(e) = make_dirent(&item.name, item.inode, dtype_of(item.file_type), off) {
            entries.push(e);
        }
    }

    // A real handle on the fastest physical copy backs dirfd().
    let real = shim
        .mapper
        .locate_all(rel)
        .first()
        .and_then(|(_, path)| crate::paths::c_path(path))
        .and_then(|c| unsafe { crate::real::opendir().map(|f| f(c.as_ptr())) })
        .unwrap_or(std::ptr::null_mut());

    Some(Box::new(SeaDir {
        magic: SEA_DIR_MAGIC,
        entries,
        pos: 0,
        real,
    }))
}

/// Same, but adopting an already-open descriptor (fdopendir): the stream
/// owns `fd` and closedir releases it through the real stream.
pub fn open_union_fd(shim: &Shim, rel: &Path, fd: c_int) -> Option<Box<SeaDir>> {
    let union = shim.mapper.list_union(rel).ok()?;
    let mut entries = Vec::with_capacity(union.len() + 2);
    entries.push(make_dirent(OsStr::new("."), 1, libc::DT_DIR, 0)?);
    entries.push(make_dirent(OsStr::new(".."), 1, libc::DT_DIR, 1)?);
    for item in union {
        let off = entries.len();
        if let Some(e) = make_dirent(&item.name, item.inode, dtype_of(item.file_type), off) {
            entries.push(e);
        }
    }
    let real = unsafe { crate::real::fdopendir().map(|f| f(fd)).unwrap_or(std::ptr::null_mut()) };
    Some(Box::new(SeaDir {
        magic: SEA_DIR_MAGIC,
        entries,
        pos: 0,
        real,
    }))
}

pub fn into_raw(dir: Box<SeaDir>) -> *mut libc::DIR {
    Box::into_raw(dir) as *mut libc::DIR
}

/// Recognizes our streams. Reading 8 bytes from a real DIR is safe: glibc's
/// DIR is a heap struct far larger than a u64.
pub unsafe fn as_sea_dir<'a>(dirp: *mut libc::DIR) -> Option<&'a mut SeaDir> {
    if dirp.is_null() {
        return None;
    }
    let candidate = dirp as *mut SeaDir;
    if (*candidate).magic == SEA_DIR_MAGIC {
        Some(&mut *candidate)
    } else {
        None
    }
}

impl SeaDir {
    pub fn next_entry(&mut self) -> *mut libc::dirent64 {
        if self.pos >= self.entries.len() {
            return std::ptr::null_mut();
        }
        let entry = &mut self.entries[self.pos];
        self.pos += 1;
        entry as *mut libc::dirent64
    }

    pub fn rewind(&mut self) {
        self.pos = 0;
    }

    pub fn seek(&mut self, loc: c_long) {
        self.pos = (loc.max(0) as usize).min(self.entries.len());
    }

    pub fn tell(&self) -> c_long {
        self.pos as c_long
    }

    pub fn real_dirfd(&self) -> c_int {
        if self.real.is_null() {
            crate::state::set_errno(libc::EINVAL);
            return -1;
        }
        unsafe {
            match crate::real::dirfd() {
                Some(f) => f(self.real),
                None => {
                    crate::state::set_errno(libc::ENOSYS);
                    -1
                }
            }
        }
    }

    /// Iterates entries for scandir without consuming the stream position.
    pub fn entries(&self) -> &[libc::dirent64] {
        &self.entries
    }
}

pub unsafe fn close(dir: *mut SeaDir) -> c_int {
    let dir = Box::from_raw(dir);
    if !dir.real.is_null() {
        if let Some(f) = crate::real::closedir() {
            f(dir.real);
        }
    }
    0
}
