//! Path resolution for intercepted calls.
//!
//! Relative paths resolve against the working directory, and `*at` paths
//! against their directory descriptor (recovered through /proc). Both are
//! reverse-mapped first: a process whose physical cwd (or dirfd) sits
//! inside a tier is logically inside the mountpoint, so names it resolves
//! must re-enter the virtual namespace before translation. That keeps
//! descriptor-relative traversals (fts-style walkers) coherent across
//! tiers.

use std::ffi::{CStr, CString, OsStr};
use std::os::unix::ffi::{OsStrExt, OsStringExt};
use std::path::{Path, PathBuf};

use libc::{c_char, c_int};
use sea_core::config::normalize_lexical;

use crate::state::Shim;

/// Borrowed view of a C path argument.
pub unsafe fn os_str<'a>(ptr: *const c_char) -> Option<&'a OsStr> {
    if ptr.is_null() {
        return None;
    }
    Some(OsStr::from_bytes(CStr::from_ptr(ptr).to_bytes()))
}

pub fn c_path(path: &Path) -> Option<CString> {
    CString::new(path.as_os_str().as_bytes()).ok()
}

/// Physical working directory, reverse-mapped into the virtual namespace
/// when it lies inside a tier.
pub fn logical_cwd(shim: &Shim) -> Option<PathBuf> {
    let cwd = std::env::current_dir().ok()?;
    Some(shim.mapper.reverse(&cwd).unwrap_or(cwd))
}

/// Directory behind a descriptor, reverse-mapped like the cwd.
pub fn logical_dirfd(shim: &Shim, dirfd: c_int) -> Option<PathBuf> {
    let link = format!("/proc/self/fd/{dirfd}");
    let target = std::fs::read_link(link).ok()?;
    if !target.is_absolute() {
        return None; // pipes, sockets, anonymous fds
    }
    Some(shim.mapper.reverse(&target).unwrap_or(target))
}

/// Absolute, lexically clean form of a path argument. `None` means the
/// argument cannot be interpreted (undecodable, unresolvable dirfd) and
/// the wrapper should pass the call through untouched.
pub unsafe fn resolve_at(shim: &Shim, dirfd: c_int, path: *const c_char) -> Option<PathBuf> {
    let os = os_str(path)?;
    if os.is_empty() {
        return None; // AT_EMPTY_PATH style usage is descriptor-based
    }
    let p = Path::new(os);
    if p.is_absolute() {
        return Some(normalize_lexical(p));
    }
    let dir = if dirfd == libc::AT_FDCWD {
        logical_cwd(shim)?
    } else {
        logical_dirfd(shim, dirfd)?
    };
    Some(normalize_lexical(&dir.join(p)))
}

pub unsafe fn resolve(shim: &Shim, path: *const c_char) -> Option<PathBuf> {
    resolve_at(shim, libc::AT_FDCWD, path)
}

/// Writes a path into a caller buffer with getcwd-style semantics: a null
/// buffer mallocs (glibc extension), a short buffer is ERANGE.
pub unsafe fn export_path(virt: &Path, buf: *mut c_char, size: usize) -> *mut c_char {
    let bytes = virt.as_os_str().as_bytes();
    let needed = bytes.len() + 1;
    if buf.is_null() {
        let alloc = if size == 0 { needed } else { size };
        if alloc < needed {
            crate::state::set_errno(libc::ERANGE);
            return std::ptr::null_mut();
        }
        let mem = libc::malloc(alloc) as *mut c_char;
        if mem.is_null() {
            crate::state::set_errno(libc::ENOMEM);
            return std::ptr::null_mut();
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, mem, bytes.len());
        *mem.add(bytes.len()) = 0;
        return mem;
    }
    if size < needed {
        crate::state::set_errno(if size == 0 { libc::EINVAL } else { libc::ERANGE });
        return std::ptr::null_mut();
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
    *buf.add(bytes.len()) = 0;
    buf
}

/// Owned OsString from a malloc'd C string, freeing it.
pub unsafe fn take_malloced(ptr: *mut c_char) -> Option<std::ffi::OsString> {
    if ptr.is_null() {
        return None;
    }
    let owned = std::ffi::OsString::from_vec(CStr::from_ptr(ptr).to_bytes().to_vec());
    libc::free(ptr as *mut libc::c_void);
    Some(owned)
}
