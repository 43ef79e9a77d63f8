//! Resolution of the next (real) implementation of every wrapped symbol.
//!
//! Each symbol is looked up once through `dlsym(RTLD_NEXT, ...)` on first
//! use and cached in a lock-free cell; concurrent first calls may race the
//! lookup, which is benign because dlsym is idempotent. A symbol the host
//! C runtime does not export resolves to `None` and the wrapper reports
//! `ENOSYS` or falls back to a sibling symbol.

#![allow(clippy::missing_safety_doc)]

use std::sync::atomic::{AtomicUsize, Ordering};

use libc::{c_char, c_int, c_long, c_uint, c_void, mode_t, off_t, size_t, ssize_t};

/// How a wrapped symbol consumes paths; diagnostic metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolClass {
    /// One path argument is translated.
    PathIn,
    /// Two path arguments, translated independently.
    TwoPath,
    /// Produces or consumes a directory stream.
    DirStream,
    /// Touches the working directory.
    Cwd,
}

pub struct SymbolSpec {
    pub name: &'static str,
    pub class: SymbolClass,
}

macro_rules! real_fn {
    ($fname:ident, $sym:literal, fn($($ty:ty),*) -> $ret:ty) => {
        pub unsafe fn $fname() -> Option<unsafe extern "C" fn($($ty),*) -> $ret> {
            static PTR: AtomicUsize = AtomicUsize::new(0);
            let mut addr = PTR.load(Ordering::Relaxed);
            if addr == 0 {
                addr = libc::dlsym(libc::RTLD_NEXT, $sym.as_ptr() as *const c_char) as usize;
                // 1 marks "looked up, not present" so we never dlsym twice.
                PTR.store(addr.max(1), Ordering::Relaxed);
            }
            if addr <= 1 {
                None
            } else {
                Some(std::mem::transmute::<usize, unsafe extern "C" fn($($ty),*) -> $ret>(addr))
            }
        }
    };
}

real_fn!(open, b"open\0", fn(*const c_char, c_int, mode_t) -> c_int);
real_fn!(open64, b"open64\0", fn(*const c_char, c_int, mode_t) -> c_int);
real_fn!(openat, b"openat\0", fn(c_int, *const c_char, c_int, mode_t) -> c_int);
real_fn!(openat64, b"openat64\0", fn(c_int, *const c_char, c_int, mode_t) -> c_int);
real_fn!(creat, b"creat\0", fn(*const c_char, mode_t) -> c_int);
real_fn!(creat64, b"creat64\0", fn(*const c_char, mode_t) -> c_int);
real_fn!(open_2, b"__open_2\0", fn(*const c_char, c_int) -> c_int);
real_fn!(open64_2, b"__open64_2\0", fn(*const c_char, c_int) -> c_int);
real_fn!(openat_2, b"__openat_2\0", fn(c_int, *const c_char, c_int) -> c_int);
real_fn!(openat64_2, b"__openat64_2\0", fn(c_int, *const c_char, c_int) -> c_int);

real_fn!(fopen, b"fopen\0", fn(*const c_char, *const c_char) -> *mut libc::FILE);
real_fn!(fopen64, b"fopen64\0", fn(*const c_char, *const c_char) -> *mut libc::FILE);
real_fn!(freopen, b"freopen\0", fn(*const c_char, *const c_char, *mut libc::FILE) -> *mut libc::FILE);
real_fn!(freopen64, b"freopen64\0", fn(*const c_char, *const c_char, *mut libc::FILE) -> *mut libc::FILE);

real_fn!(stat, b"stat\0", fn(*const c_char, *mut libc::stat) -> c_int);
real_fn!(stat64, b"stat64\0", fn(*const c_char, *mut libc::stat64) -> c_int);
real_fn!(lstat, b"lstat\0", fn(*const c_char, *mut libc::stat) -> c_int);
real_fn!(lstat64, b"lstat64\0", fn(*const c_char, *mut libc::stat64) -> c_int);
real_fn!(fstatat, b"fstatat\0", fn(c_int, *const c_char, *mut libc::stat, c_int) -> c_int);
real_fn!(fstatat64, b"fstatat64\0", fn(c_int, *const c_char, *mut libc::stat64, c_int) -> c_int);
real_fn!(statx, b"statx\0", fn(c_int, *const c_char, c_int, c_uint, *mut libc::statx) -> c_int);
real_fn!(xstat, b"__xstat\0", fn(c_int, *const c_char, *mut libc::stat) -> c_int);
real_fn!(xstat64, b"__xstat64\0", fn(c_int, *const c_char, *mut libc::stat64) -> c_int);
real_fn!(lxstat, b"__lxstat\0", fn(c_int, *const c_char, *mut libc::stat) -> c_int);
real_fn!(lxstat64, b"__lxstat64\0", fn(c_int, *const c_char, *mut libc::stat64) -> c_int);
real_fn!(fxstatat, b"__fxstatat\0", fn(c_int, c_int, *const c_char, *mut libc::stat, c_int) -> c_int);
real_fn!(fxstatat64, b"__fxstatat64\0", fn(c_int, c_int, *const c_char, *mut libc::stat64, c_int) -> c_int);

real_fn!(access, b"access\0", fn(*const c_char, c_int) -> c_int);
real_fn!(faccessat, b"faccessat\0", fn(c_int, *const c_char, c_int, c_int) -> c_int);

real_fn!(unlink, b"unlink\0", fn(*const c_char) -> c_int);
real_fn!(unlinkat, b"unlinkat\0", fn(c_int, *const c_char, c_int) -> c_int);
real_fn!(remove, b"remove\0", fn(*const c_char) -> c_int);

real_fn!(rename, b"rename\0", fn(*const c_char, *const c_char) -> c_int);
real_fn!(renameat, b"renameat\0", fn(c_int, *const c_char, c_int, *const c_char) -> c_int);
real_fn!(renameat2, b"renameat2\0", fn(c_int, *const c_char, c_int, *const c_char, c_uint) -> c_int);

real_fn!(mkdir, b"mkdir\0", fn(*const c_char, mode_t) -> c_int);
real_fn!(mkdirat, b"mkdirat\0", fn(c_int, *const c_char, mode_t) -> c_int);
real_fn!(rmdir, b"rmdir\0", fn(*const c_char) -> c_int);

real_fn!(opendir, b"opendir\0", fn(*const c_char) -> *mut libc::DIR);
real_fn!(fdopendir, b"fdopendir\0", fn(c_int) -> *mut libc::DIR);
real_fn!(readdir, b"readdir\0", fn(*mut libc::DIR) -> *mut libc::dirent);
real_fn!(readdir64, b"readdir64\0", fn(*mut libc::DIR) -> *mut libc::dirent64);
real_fn!(closedir, b"closedir\0", fn(*mut libc::DIR) -> c_int);
real_fn!(rewinddir, b"rewinddir\0", fn(*mut libc::DIR) -> ());
real_fn!(seekdir, b"seekdir\0", fn(*mut libc::DIR, c_long) -> ());
real_fn!(telldir, b"telldir\0", fn(*mut libc::DIR) -> c_long);
real_fn!(dirfd, b"dirfd\0", fn(*mut libc::DIR) -> c_int);
real_fn!(
    scandir,
    b"scandir\0",
    fn(
        *const c_char,
        *mut *mut *mut libc::dirent,
        Option<unsafe extern "C" fn(*const libc::dirent) -> c_int>,
        Option<unsafe extern "C" fn(*mut c_void, *mut c_void) -> c_int>
    ) -> c_int
);
real_fn!(
    scandir64,
    b"scandir64\0",
    fn(
        *const c_char,
        *mut *mut *mut libc::dirent64,
        Option<unsafe extern "C" fn(*const libc::dirent64) -> c_int>,
        Option<unsafe extern "C" fn(*mut c_void, *mut c_void) -> c_int>
    ) -> c_int
);

real_fn!(chmod, b"chmod\0", fn(*const c_char, mode_t) -> c_int);
real_fn!(fchmodat, b"fchmodat\0", fn(c_int, *const c_char, mode_t, c_int) -> c_int);
real_fn!(chown, b"chown\0", fn(*const c_char, libc::uid_t, libc::gid_t) -> c_int);
real_fn!(lchown, b"lchown\0", fn(*const c_char, libc::uid_t, libc::gid_t) -> c_int);
real_fn!(fchownat, b"fchownat\0", fn(c_int, *const c_char, libc::uid_t, libc::gid_t, c_int) -> c_int);
real_fn!(truncate, b"truncate\0", fn(*const c_char, off_t) -> c_int);
real_fn!(truncate64, b"truncate64\0", fn(*const c_char, libc::off64_t) -> c_int);
real_fn!(utime, b"utime\0", fn(*const c_char, *const libc::utimbuf) -> c_int);
real_fn!(utimes, b"utimes\0", fn(*const c_char, *const libc::timeval) -> c_int);
real_fn!(utimensat, b"utimensat\0", fn(c_int, *const c_char, *const libc::timespec, c_int) -> c_int);

real_fn!(link, b"link\0", fn(*const c_char, *const c_char) -> c_int);
real_fn!(linkat, b"linkat\0", fn(c_int, *const c_char, c_int, *const c_char, c_int) -> c_int);
real_fn!(symlink, b"symlink\0", fn(*const c_char, *const c_char) -> c_int);
real_fn!(symlinkat, b"symlinkat\0", fn(*const c_char, c_int, *const c_char) -> c_int);
real_fn!(readlink, b"readlink\0", fn(*const c_char, *mut c_char, size_t) -> ssize_t);
real_fn!(readlinkat, b"readlinkat\0", fn(c_int, *const c_char, *mut c_char, size_t) -> ssize_t);
real_fn!(realpath, b"realpath\0", fn(*const c_char, *mut c_char) -> *mut c_char);

real_fn!(statfs, b"statfs\0", fn(*const c_char, *mut libc::statfs) -> c_int);
real_fn!(statfs64, b"statfs64\0", fn(*const c_char, *mut libc::statfs64) -> c_int);
real_fn!(statvfs, b"statvfs\0", fn(*const c_char, *mut libc::statvfs) -> c_int);
real_fn!(statvfs64, b"statvfs64\0", fn(*const c_char, *mut libc::statvfs64) -> c_int);

real_fn!(chdir, b"chdir\0", fn(*const c_char) -> c_int);
real_fn!(getcwd, b"getcwd\0", fn(*mut c_char, size_t) -> *mut c_char);
real_fn!(get_current_dir_name, b"get_current_dir_name\0", fn() -> *mut c_char);

/// The coverage table; used for diagnostics at init.
pub const INTERCEPTED: &[SymbolSpec] = &[
    SymbolSpec { name: "open", class: SymbolClass::PathIn },
    SymbolSpec { name: "open64", class: SymbolClass::PathIn },
    SymbolSpec { name: "openat", class: SymbolClass::PathIn },
    SymbolSpec { name: "openat64", class: SymbolClass::PathIn },
    SymbolSpec { name: "creat", class: SymbolClass::PathIn },
    SymbolSpec { name: "creat64", class: SymbolClass::PathIn },
    SymbolSpec { name: "__open_2", class: SymbolClass::PathIn },
    SymbolSpec { name: "__open64_2", class: SymbolClass::PathIn },
    SymbolSpec { name: "__openat_2", class: SymbolClass::PathIn },
    SymbolSpec { name: "__openat64_2", class: SymbolClass::PathIn },
    SymbolSpec { name: "fopen", class: SymbolClass::PathIn },
    SymbolSpec { name: "fopen64", class: SymbolClass::PathIn },
    SymbolSpec { name: "freopen", class: SymbolClass::PathIn },
    SymbolSpec { name: "freopen64", class: SymbolClass::PathIn },
    SymbolSpec { name: "stat", class: SymbolClass::PathIn },
    SymbolSpec { name: "stat64", class: SymbolClass::PathIn },
    SymbolSpec { name: "lstat", class: SymbolClass::PathIn },
    SymbolSpec { name: "lstat64", class: SymbolClass::PathIn },
    SymbolSpec { name: "fstatat", class: SymbolClass::PathIn },
    SymbolSpec { name: "fstatat64", class: SymbolClass::PathIn },
    SymbolSpec { name: "statx", class: SymbolClass::PathIn },
    SymbolSpec { name: "__xstat", class: SymbolClass::PathIn },
    SymbolSpec { name: "__xstat64", class: SymbolClass::PathIn },
    SymbolSpec { name: "__lxstat", class: SymbolClass::PathIn },
    SymbolSpec { name: "__lxstat64", class: SymbolClass::PathIn },
    SymbolSpec { name: "__fxstatat", class: SymbolClass::PathIn },
    SymbolSpec { name: "__fxstatat64", class: SymbolClass::PathIn },
    SymbolSpec { name: "access", class: SymbolClass::PathIn },
    SymbolSpec { name: "faccessat", class: SymbolClass::PathIn },
    SymbolSpec { name: "unlink", class: SymbolClass::PathIn },
    SymbolSpec { name: "unlinkat", class: SymbolClass::PathIn },
    SymbolSpec { name: "remove", class: SymbolClass::PathIn },
    SymbolSpec { name: "rename", class: SymbolClass::TwoPath },
    SymbolSpec { name: "renameat", class: SymbolClass::TwoPath },
    SymbolSpec { name: "renameat2", class: SymbolClass::TwoPath },
    SymbolSpec { name: "mkdir", class: SymbolClass::PathIn },
    SymbolSpec { name: "mkdirat", class: SymbolClass::PathIn },
    SymbolSpec { name: "rmdir", class: SymbolClass::PathIn },
    SymbolSpec { name: "opendir", class: SymbolClass::DirStream },
    SymbolSpec { name: "fdopendir", class: SymbolClass::DirStream },
    SymbolSpec { name: "readdir", class: SymbolClass::DirStream },
    SymbolSpec { name: "readdir64", class: SymbolClass::DirStream },
    SymbolSpec { name: "closedir", class: SymbolClass::DirStream },
    SymbolSpec { name: "rewinddir", class: SymbolClass::DirStream },
    SymbolSpec { name: "seekdir", class: SymbolClass::DirStream },
    SymbolSpec { name: "telldir", class: SymbolClass::DirStream },
    SymbolSpec { name: "dirfd", class: SymbolClass::DirStream },
    SymbolSpec { name: "scandir", class: SymbolClass::DirStream },
    SymbolSpec { name: "scandir64", class: SymbolClass::DirStream },
    SymbolSpec { name: "chmod", class: SymbolClass::PathIn },
    SymbolSpec { name: "fchmodat", class: SymbolClass::PathIn },
    SymbolSpec { name: "chown", class: SymbolClass::PathIn },
    SymbolSpec { name: "lchown", class: SymbolClass::PathIn },
    SymbolSpec { name: "fchownat", class: SymbolClass::PathIn },
    SymbolSpec { name: "truncate", class: SymbolClass::PathIn },
    SymbolSpec { name: "truncate64", class: SymbolClass::PathIn },
    SymbolSpec { name: "utime", class: SymbolClass::PathIn },
    SymbolSpec { name: "utimes", class: SymbolClass::PathIn },
    SymbolSpec { name: "utimensat", class: SymbolClass::PathIn },
    SymbolSpec { name: "link", class: SymbolClass::TwoPath },
    SymbolSpec { name: "linkat", class: SymbolClass::TwoPath },
    SymbolSpec { name: "symlink", class: SymbolClass::TwoPath },
    SymbolSpec { name: "symlinkat", class: SymbolClass::TwoPath },
    SymbolSpec { name: "readlink", class: SymbolClass::PathIn },
    SymbolSpec { name: "readlinkat", class: SymbolClass::PathIn },
    SymbolSpec { name: "realpath", class: SymbolClass::PathIn },
    SymbolSpec { name: "statfs", class: SymbolClass::PathIn },
    SymbolSpec { name: "statfs64", class: SymbolClass::PathIn },
    SymbolSpec { name: "statvfs", class: SymbolClass::PathIn },
    SymbolSpec { name: "statvfs64", class: SymbolClass::PathIn },
    SymbolSpec { name: "chdir", class: SymbolClass::Cwd },
    SymbolSpec { name: "getcwd", class: SymbolClass::Cwd },
    SymbolSpec { name: "get_current_dir_name", class: SymbolClass::Cwd },
];
