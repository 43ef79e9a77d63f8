//! The exported C symbols.
//!
//! Every wrapper follows the same discipline: resolve the real
//! implementation first, delegate untranslated when the recursion guard is
//! already held or no configuration is loaded, and otherwise translate
//! under the guard. Panics never cross the FFI boundary: any internal
//! failure falls back to the untranslated real call (fail open). No
//! descriptor-based data call (read/write/close/fstat) is wrapped;
//! translation happens at name resolution only.

#![allow(clippy::missing_safety_doc)]

use std::path::Path;

use libc::{c_char, c_int, c_long, c_uint, c_void, mode_t, off_t, size_t, ssize_t};
use sea_core::pathmap::Intent;

use crate::dirstream;
use crate::ops;
use crate::paths::{self, c_path};
use crate::real;
use crate::state::{self, set_errno, Guard, Shim};

macro_rules! intercept {
    ($name:ident => $realf:ident, err=$err:expr, ($($arg:ident: $ty:ty),*) -> $ret:ty, $body:expr) => {
        #[no_mangle]
        pub unsafe extern "C" fn $name($($arg: $ty),*) -> $ret {
            let Some(real) = crate::real::$realf() else {
                crate::state::set_errno(libc::ENOSYS);
                return $err;
            };
            let Some(_guard) = Guard::enter() else {
                return real($($arg),*);
            };
            let Some(shim) = state::get() else {
                return real($($arg),*);
            };
            let body = std::panic::AssertUnwindSafe(
                || -> Option<$ret> { ($body)(shim, real, $($arg),*) }
            );
            match std::panic::catch_unwind(body) {
                Ok(Some(ret)) => ret,
                Ok(None) => real($($arg),*),
                Err(_) => real($($arg),*),
            }
        }
    };
}

// --- open family -----------------------------------------------------------

unsafe fn open_body(
    shim: &Shim,
    real: unsafe extern "C" fn(*const c_char, c_int, mode_t) -> c_int,
    dirfd: c_int,
    path: *const c_char,
    flags: c_int,
    mode: mode_t,
) -> Option<c_int> {
    let abs = paths::resolve_at(shim, dirfd, path)?;
    let wants_create = flags & libc::O_CREAT != 0;
    let c = ops::plan_open(shim, &abs, wants_create)?;
    Some(real(c.as_ptr(), flags, mode))
}

intercept!(open => open, err=-1, (path: *const c_char, flags: c_int, mode: mode_t) -> c_int,
    |shim, real, path, flags, mode| open_body(shim, real, libc::AT_FDCWD, path, flags, mode));

intercept!(open64 => open64, err=-1, (path: *const c_char, flags: c_int, mode: mode_t) -> c_int,
    |shim, real, path, flags, mode| open_body(shim, real, libc::AT_FDCWD, path, flags, mode));

intercept!(openat => openat, err=-1,
    (dirfd: c_int, path: *const c_char, flags: c_int, mode: mode_t) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, c_int, mode_t) -> c_int, dirfd, path, flags, mode| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_open(shim, &abs, flags & libc::O_CREAT != 0)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), flags, mode))
    });

intercept!(openat64 => openat64, err=-1,
    (dirfd: c_int, path: *const c_char, flags: c_int, mode: mode_t) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, c_int, mode_t) -> c_int, dirfd, path, flags, mode| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_open(shim, &abs, flags & libc::O_CREAT != 0)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), flags, mode))
    });

intercept!(creat => creat, err=-1, (path: *const c_char, mode: mode_t) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, mode_t) -> c_int, path, mode| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_open(shim, &abs, true)?;
        Some(real(c.as_ptr(), mode))
    });

intercept!(creat64 => creat64, err=-1, (path: *const c_char, mode: mode_t) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, mode_t) -> c_int, path, mode| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_open(shim, &abs, true)?;
        Some(real(c.as_ptr(), mode))
    });

intercept!(__open_2 => open_2, err=-1, (path: *const c_char, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, c_int) -> c_int, path, flags| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_open(shim, &abs, flags & libc::O_CREAT != 0)?;
        Some(real(c.as_ptr(), flags))
    });

intercept!(__open64_2 => open64_2, err=-1, (path: *const c_char, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, c_int) -> c_int, path, flags| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_open(shim, &abs, flags & libc::O_CREAT != 0)?;
        Some(real(c.as_ptr(), flags))
    });

intercept!(__openat_2 => openat_2, err=-1,
    (dirfd: c_int, path: *const c_char, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, c_int) -> c_int, dirfd, path, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_open(shim, &abs, flags & libc::O_CREAT != 0)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), flags))
    });

intercept!(__openat64_2 => openat64_2, err=-1,
    (dirfd: c_int, path: *const c_char, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, c_int) -> c_int, dirfd, path, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_open(shim, &abs, flags & libc::O_CREAT != 0)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), flags))
    });

unsafe fn stream_mode_creates(mode: *const c_char) -> bool {
    // "r"/"r+" expect the file; "w", "a" and friends create it.
    !mode.is_null() && matches!(*mode as u8, b'w' | b'a')
}

intercept!(fopen => fopen, err=std::ptr::null_mut(),
    (path: *const c_char, mode: *const c_char) -> *mut libc::FILE,
    |shim, real: unsafe extern "C" fn(*const c_char, *const c_char) -> *mut libc::FILE, path, mode| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_open(shim, &abs, stream_mode_creates(mode))?;
        Some(real(c.as_ptr(), mode))
    });

intercept!(fopen64 => fopen64, err=std::ptr::null_mut(),
    (path: *const c_char, mode: *const c_char) -> *mut libc::FILE,
    |shim, real: unsafe extern "C" fn(*const c_char, *const c_char) -> *mut libc::FILE, path, mode| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_open(shim, &abs, stream_mode_creates(mode))?;
        Some(real(c.as_ptr(), mode))
    });

intercept!(freopen => freopen, err=std::ptr::null_mut(),
    (path: *const c_char, mode: *const c_char, stream: *mut libc::FILE) -> *mut libc::FILE,
    |shim, real: unsafe extern "C" fn(*const c_char, *const c_char, *mut libc::FILE) -> *mut libc::FILE, path, mode, stream| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_open(shim, &abs, stream_mode_creates(mode))?;
        Some(real(c.as_ptr(), mode, stream))
    });

intercept!(freopen64 => freopen64, err=std::ptr::null_mut(),
    (path: *const c_char, mode: *const c_char, stream: *mut libc::FILE) -> *mut libc::FILE,
    |shim, real: unsafe extern "C" fn(*const c_char, *const c_char, *mut libc::FILE) -> *mut libc::FILE, path, mode, stream| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_open(shim, &abs, stream_mode_creates(mode))?;
        Some(real(c.as_ptr(), mode, stream))
    });

// --- stat family ------------------------------------------------------------

macro_rules! stat_like {
    ($name:ident => $realf:ident, ($buf_ty:ty)) => {
        intercept!($name => $realf, err=-1, (path: *const c_char, buf: $buf_ty) -> c_int,
            |shim, real: unsafe extern "C" fn(*const c_char, $buf_ty) -> c_int, path, buf| {
                let abs = paths::resolve(shim, path)?;
                let c = ops::plan_meta(shim, &abs)?;
                Some(real(c.as_ptr(), buf))
            });
    };
}

stat_like!(stat => stat, (*mut libc::stat));
stat_like!(stat64 => stat64, (*mut libc::stat64));
stat_like!(lstat => lstat, (*mut libc::stat));
stat_like!(lstat64 => lstat64, (*mut libc::stat64));

intercept!(fstatat => fstatat, err=-1,
    (dirfd: c_int, path: *const c_char, buf: *mut libc::stat, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, *mut libc::stat, c_int) -> c_int, dirfd, path, buf, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), buf, flags))
    });

intercept!(fstatat64 => fstatat64, err=-1,
    (dirfd: c_int, path: *const c_char, buf: *mut libc::stat64, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, *mut libc::stat64, c_int) -> c_int, dirfd, path, buf, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), buf, flags))
    });

intercept!(statx => statx, err=-1,
    (dirfd: c_int, path: *const c_char, flags: c_int, mask: c_uint, buf: *mut libc::statx) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, c_int, c_uint, *mut libc::statx) -> c_int, dirfd, path, flags, mask, buf| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), flags, mask, buf))
    });

// Versioned entry points used by binaries built against older C runtimes.
macro_rules! xstat_like {
    ($name:ident => $realf:ident, ($buf_ty:ty)) => {
        intercept!($name => $realf, err=-1,
            (ver: c_int, path: *const c_char, buf: $buf_ty) -> c_int,
            |shim, real: unsafe extern "C" fn(c_int, *const c_char, $buf_ty) -> c_int, ver, path, buf| {
                let abs = paths::resolve(shim, path)?;
                let c = ops::plan_meta(shim, &abs)?;
                Some(real(ver, c.as_ptr(), buf))
            });
    };
}

xstat_like!(__xstat => xstat, (*mut libc::stat));
xstat_like!(__xstat64 => xstat64, (*mut libc::stat64));
xstat_like!(__lxstat => lxstat, (*mut libc::stat));
xstat_like!(__lxstat64 => lxstat64, (*mut libc::stat64));

intercept!(__fxstatat => fxstatat, err=-1,
    (ver: c_int, dirfd: c_int, path: *const c_char, buf: *mut libc::stat, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, c_int, *const c_char, *mut libc::stat, c_int) -> c_int, ver, dirfd, path, buf, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(ver, libc::AT_FDCWD, c.as_ptr(), buf, flags))
    });

intercept!(__fxstatat64 => fxstatat64, err=-1,
    (ver: c_int, dirfd: c_int, path: *const c_char, buf: *mut libc::stat64, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, c_int, *const c_char, *mut libc::stat64, c_int) -> c_int, ver, dirfd, path, buf, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(ver, libc::AT_FDCWD, c.as_ptr(), buf, flags))
    });

intercept!(access => access, err=-1, (path: *const c_char, amode: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, c_int) -> c_int, path, amode| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(c.as_ptr(), amode))
    });

intercept!(faccessat => faccessat, err=-1,
    (dirfd: c_int, path: *const c_char, amode: c_int, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, c_int, c_int) -> c_int, dirfd, path, amode, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), amode, flags))
    });

// --- removal and renames ----------------------------------------------------

intercept!(unlink => unlink, err=-1, (path: *const c_char) -> c_int,
    |shim, real, path| {
        let abs = paths::resolve(shim, path)?;
        ops::unlink_all(shim, &abs, real)
    });

intercept!(unlinkat => unlinkat, err=-1,
    (dirfd: c_int, path: *const c_char, flags: c_int) -> c_int,
    |shim, _real: unsafe extern "C" fn(c_int, *const c_char, c_int) -> c_int, dirfd, path, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        if flags & libc::AT_REMOVEDIR != 0 {
            ops::rmdir_virtual(shim, &abs, real::rmdir()?)
        } else {
            ops::unlink_all(shim, &abs, real::unlink()?)
        }
    });

intercept!(remove => remove, err=-1, (path: *const c_char) -> c_int,
    |shim, _real, path| {
        let abs = paths::resolve(shim, path)?;
        ops::remove_virtual(shim, &abs, real::unlink()?, real::rmdir()?)
    });

intercept!(rename => rename, err=-1, (src: *const c_char, dst: *const c_char) -> c_int,
    |shim, real, src, dst| {
        let src_abs = paths::resolve(shim, src)?;
        let dst_abs = paths::resolve(shim, dst)?;
        ops::rename_virtual(shim, &src_abs, &dst_abs, 0, real)
    });

intercept!(renameat => renameat, err=-1,
    (sfd: c_int, src: *const c_char, dfd: c_int, dst: *const c_char) -> c_int,
    |shim, _real: unsafe extern "C" fn(c_int, *const c_char, c_int, *const c_char) -> c_int, sfd, src, dfd, dst| {
        let src_abs = paths::resolve_at(shim, sfd, src)?;
        let dst_abs = paths::resolve_at(shim, dfd, dst)?;
        ops::rename_virtual(shim, &src_abs, &dst_abs, 0, real::rename()?)
    });

intercept!(renameat2 => renameat2, err=-1,
    (sfd: c_int, src: *const c_char, dfd: c_int, dst: *const c_char, flags: c_uint) -> c_int,
    |shim, _real: unsafe extern "C" fn(c_int, *const c_char, c_int, *const c_char, c_uint) -> c_int, sfd, src, dfd, dst, flags| {
        let src_abs = paths::resolve_at(shim, sfd, src)?;
        let dst_abs = paths::resolve_at(shim, dfd, dst)?;
        ops::rename_virtual(shim, &src_abs, &dst_abs, flags, real::rename()?)
    });

// --- directories ------------------------------------------------------------

intercept!(mkdir => mkdir, err=-1, (path: *const c_char, mode: mode_t) -> c_int,
    |shim, real, path, mode| {
        let abs = paths::resolve(shim, path)?;
        ops::mkdir_virtual(shim, &abs, mode, real)
    });

intercept!(mkdirat => mkdirat, err=-1,
    (dirfd: c_int, path: *const c_char, mode: mode_t) -> c_int,
    |shim, _real: unsafe extern "C" fn(c_int, *const c_char, mode_t) -> c_int, dirfd, path, mode| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        ops::mkdir_virtual(shim, &abs, mode, real::mkdir()?)
    });

intercept!(rmdir => rmdir, err=-1, (path: *const c_char) -> c_int,
    |shim, real, path| {
        let abs = paths::resolve(shim, path)?;
        ops::rmdir_virtual(shim, &abs, real)
    });

// --- metadata updates applied to every copy ---------------------------------

intercept!(chmod => chmod, err=-1, (path: *const c_char, mode: mode_t) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, mode_t) -> c_int, path, mode| {
        let abs = paths::resolve(shim, path)?;
        ops::apply_copies(shim, &abs, |p| real(p, mode))
    });

intercept!(fchmodat => fchmodat, err=-1,
    (dirfd: c_int, path: *const c_char, mode: mode_t, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, mode_t, c_int) -> c_int, dirfd, path, mode, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        ops::apply_copies(shim, &abs, |p| real(libc::AT_FDCWD, p, mode, flags))
    });

intercept!(chown => chown, err=-1,
    (path: *const c_char, uid: libc::uid_t, gid: libc::gid_t) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, libc::uid_t, libc::gid_t) -> c_int, path, uid, gid| {
        let abs = paths::resolve(shim, path)?;
        ops::apply_copies(shim, &abs, |p| real(p, uid, gid))
    });

intercept!(lchown => lchown, err=-1,
    (path: *const c_char, uid: libc::uid_t, gid: libc::gid_t) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, libc::uid_t, libc::gid_t) -> c_int, path, uid, gid| {
        let abs = paths::resolve(shim, path)?;
        ops::apply_copies(shim, &abs, |p| real(p, uid, gid))
    });

intercept!(fchownat => fchownat, err=-1,
    (dirfd: c_int, path: *const c_char, uid: libc::uid_t, gid: libc::gid_t, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, libc::uid_t, libc::gid_t, c_int) -> c_int, dirfd, path, uid, gid, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        ops::apply_copies(shim, &abs, |p| real(libc::AT_FDCWD, p, uid, gid, flags))
    });

intercept!(utime => utime, err=-1,
    (path: *const c_char, times: *const libc::utimbuf) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, *const libc::utimbuf) -> c_int, path, times| {
        let abs = paths::resolve(shim, path)?;
        ops::apply_copies(shim, &abs, |p| real(p, times))
    });

intercept!(utimes => utimes, err=-1,
    (path: *const c_char, times: *const libc::timeval) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, *const libc::timeval) -> c_int, path, times| {
        let abs = paths::resolve(shim, path)?;
        ops::apply_copies(shim, &abs, |p| real(p, times))
    });

intercept!(utimensat => utimensat, err=-1,
    (dirfd: c_int, path: *const c_char, times: *const libc::timespec, flags: c_int) -> c_int,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, *const libc::timespec, c_int) -> c_int, dirfd, path, times, flags| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        ops::apply_copies(shim, &abs, |p| real(libc::AT_FDCWD, p, times, flags))
    });

// Content-bearing: only the authoritative (fastest) copy shrinks; a later
// flush re-replicates the new version.
intercept!(truncate => truncate, err=-1, (path: *const c_char, length: off_t) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, off_t) -> c_int, path, length| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(c.as_ptr(), length))
    });

intercept!(truncate64 => truncate64, err=-1, (path: *const c_char, length: libc::off64_t) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char, libc::off64_t) -> c_int, path, length| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(c.as_ptr(), length))
    });

// --- links -------------------------------------------------------------------

intercept!(link => link, err=-1, (src: *const c_char, dst: *const c_char) -> c_int,
    |shim, real, src, dst| {
        let src_abs = paths::resolve(shim, src)?;
        let dst_abs = paths::resolve(shim, dst)?;
        ops::link_virtual(shim, &src_abs, &dst_abs, real)
    });

intercept!(linkat => linkat, err=-1,
    (sfd: c_int, src: *const c_char, dfd: c_int, dst: *const c_char, flags: c_int) -> c_int,
    |shim, _real: unsafe extern "C" fn(c_int, *const c_char, c_int, *const c_char, c_int) -> c_int, sfd, src, dfd, dst, _flags| {
        let src_abs = paths::resolve_at(shim, sfd, src)?;
        let dst_abs = paths::resolve_at(shim, dfd, dst)?;
        ops::link_virtual(shim, &src_abs, &dst_abs, real::link()?)
    });

intercept!(symlink => symlink, err=-1, (target: *const c_char, linkpath: *const c_char) -> c_int,
    |shim, real, target, linkpath| {
        let link_abs = paths::resolve(shim, linkpath)?;
        ops::symlink_virtual(shim, target, &link_abs, real)
    });

intercept!(symlinkat => symlinkat, err=-1,
    (target: *const c_char, dirfd: c_int, linkpath: *const c_char) -> c_int,
    |shim, _real: unsafe extern "C" fn(*const c_char, c_int, *const c_char) -> c_int, target, dirfd, linkpath| {
        let link_abs = paths::resolve_at(shim, dirfd, linkpath)?;
        ops::symlink_virtual(shim, target, &link_abs, real::symlink()?)
    });

intercept!(readlink => readlink, err=-1,
    (path: *const c_char, buf: *mut c_char, bufsiz: size_t) -> ssize_t,
    |shim, real: unsafe extern "C" fn(*const c_char, *mut c_char, size_t) -> ssize_t, path, buf, bufsiz| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(c.as_ptr(), buf, bufsiz))
    });

intercept!(readlinkat => readlinkat, err=-1,
    (dirfd: c_int, path: *const c_char, buf: *mut c_char, bufsiz: size_t) -> ssize_t,
    |shim, real: unsafe extern "C" fn(c_int, *const c_char, *mut c_char, size_t) -> ssize_t, dirfd, path, buf, bufsiz| {
        let abs = paths::resolve_at(shim, dirfd, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(libc::AT_FDCWD, c.as_ptr(), buf, bufsiz))
    });

// realpath reports the canonical virtual name: the concrete filesystem
// resolves dots and symlinks on the translated path, then the physical
// result maps back under the mountpoint so the virtual namespace stays
// closed under canonicalization.
intercept!(realpath => realpath, err=std::ptr::null_mut(),
    (path: *const c_char, resolved: *mut c_char) -> *mut c_char,
    |shim, real: unsafe extern "C" fn(*const c_char, *mut c_char) -> *mut c_char, path, resolved: *mut c_char| {
        let abs = paths::resolve(shim, path)?;
        ops::rel_of(shim, &abs)?;
        let t = shim.mapper.translate(&abs, Intent::ReadExisting);
        let c = c_path(&t.resolved)?;
        let phys = real(c.as_ptr(), std::ptr::null_mut());
        let Some(phys_os) = paths::take_malloced(phys) else {
            return Some(std::ptr::null_mut()); // errno set by the real call
        };
        let phys_path = std::path::PathBuf::from(phys_os);
        let virt = shim.mapper.reverse(&phys_path).unwrap_or(phys_path);
        if !resolved.is_null() && virt.as_os_str().len() >= libc::PATH_MAX as usize {
            set_errno(libc::ENAMETOOLONG);
            return Some(std::ptr::null_mut());
        }
        Some(paths::export_path(&virt, resolved, libc::PATH_MAX as usize))
    });

// --- filesystem statistics ----------------------------------------------------

macro_rules! fs_stat_like {
    ($name:ident => $realf:ident, ($buf_ty:ty)) => {
        intercept!($name => $realf, err=-1, (path: *const c_char, buf: $buf_ty) -> c_int,
            |shim, real: unsafe extern "C" fn(*const c_char, $buf_ty) -> c_int, path, buf| {
                let abs = paths::resolve(shim, path)?;
                let c = ops::plan_meta(shim, &abs)?;
                Some(real(c.as_ptr(), buf))
            });
    };
}

fs_stat_like!(statfs => statfs, (*mut libc::statfs));
fs_stat_like!(statfs64 => statfs64, (*mut libc::statfs64));
fs_stat_like!(statvfs => statvfs, (*mut libc::statvfs));
fs_stat_like!(statvfs64 => statvfs64, (*mut libc::statvfs64));

// --- working directory ---------------------------------------------------------

intercept!(chdir => chdir, err=-1, (path: *const c_char) -> c_int,
    |shim, real: unsafe extern "C" fn(*const c_char) -> c_int, path| {
        let abs = paths::resolve(shim, path)?;
        let c = ops::plan_meta(shim, &abs)?;
        Some(real(c.as_ptr()))
    });

/// getcwd reports the virtual directory when the physical one sits inside
/// a tier, so shells that chdir'd into the mountpoint stay in it.
#[no_mangle]
pub unsafe extern "C" fn getcwd(buf: *mut c_char, size: size_t) -> *mut c_char {
    let Some(real) = real::getcwd() else {
        set_errno(libc::ENOSYS);
        return std::ptr::null_mut();
    };
    let Some(_guard) = Guard::enter() else {
        return real(buf, size);
    };
    let Some(shim) = state::get() else {
        return real(buf, size);
    };
    let body = std::panic::AssertUnwindSafe(|| {
        let cwd = std::env::current_dir().ok()?;
        let virt = shim.mapper.reverse(&cwd)?;
        Some(paths::export_path(&virt, buf, size))
    });
    match std::panic::catch_unwind(body) {
        Ok(Some(ret)) => ret,
        _ => real(buf, size),
    }
}

#[no_mangle]
pub unsafe extern "C" fn get_current_dir_name() -> *mut c_char {
    let Some(real) = real::get_current_dir_name() else {
        set_errno(libc::ENOSYS);
        return std::ptr::null_mut();
    };
    let Some(_guard) = Guard::enter() else {
        return real();
    };
    let Some(shim) = state::get() else {
        return real();
    };
    let body = std::panic::AssertUnwindSafe(|| {
        let cwd = std::env::current_dir().ok()?;
        let virt = shim.mapper.reverse(&cwd)?;
        Some(paths::export_path(&virt, std::ptr::null_mut(), 0))
    });
    match std::panic::catch_unwind(body) {
        Ok(Some(ret)) => ret,
        _ => real(),
    }
}

// --- directory streams ----------------------------------------------------------

intercept!(opendir => opendir, err=std::ptr::null_mut(), (path: *const c_char) -> *mut libc::DIR,
    |shim, _real, path| {
        let abs = paths::resolve(shim, path)?;
        let rel = ops::rel_of(shim, &abs)?;
        match dirstream::open_union(shim, &rel) {
            Some(dir) => Some(dirstream::into_raw(dir)),
            None => {
                set_errno(libc::ENOENT);
                Some(std::ptr::null_mut())
            }
        }
    });

#[no_mangle]
pub unsafe extern "C" fn fdopendir(fd: c_int) -> *mut libc::DIR {
    let Some(real) = real::fdopendir() else {
        set_errno(libc::ENOSYS);
        return std::ptr::null_mut();
    };
    let Some(_guard) = Guard::enter() else {
        return real(fd);
    };
    let Some(shim) = state::get() else {
        return real(fd);
    };
    let body = std::panic::AssertUnwindSafe(|| {
        let physical = std::fs::read_link(format!("/proc/self/fd/{fd}")).ok()?;
        let virt = shim.mapper.reverse(&physical)?;
        let rel = shim.mapper.mount_relative(&virt)?;
        dirstream::open_union_fd(shim, &rel, fd).map(dirstream::into_raw)
    });
    match std::panic::catch_unwind(body) {
        Ok(Some(ret)) => ret,
        _ => real(fd),
    }
}

#[no_mangle]
pub unsafe extern "C" fn readdir(dirp: *mut libc::DIR) -> *mut libc::dirent {
    if let Some(_guard) = Guard::enter() {
        if let Some(dir) = dirstream::as_sea_dir(dirp) {
            // On 64-bit Linux the dirent and dirent64 layouts coincide.
            return dir.next_entry() as *mut libc::dirent;
        }
    }
    match real::readdir() {
        Some(real) => real(dirp),
        None => {
            set_errno(libc::ENOSYS);
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn readdir64(dirp: *mut libc::DIR) -> *mut libc::dirent64 {
    if let Some(_guard) = Guard::enter() {
        if let Some(dir) = dirstream::as_sea_dir(dirp) {
            return dir.next_entry();
        }
    }
    match real::readdir64() {
        Some(real) => real(dirp),
        None => {
            set_errno(libc::ENOSYS);
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn closedir(dirp: *mut libc::DIR) -> c_int {
    if let Some(_guard) = Guard::enter() {
        if let Some(dir) = dirstream::as_sea_dir(dirp) {
            return dirstream::close(dir as *mut _);
        }
    }
    match real::closedir() {
        Some(real) => real(dirp),
        None => {
            set_errno(libc::ENOSYS);
            -1
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn rewinddir(dirp: *mut libc::DIR) {
    if let Some(_guard) = Guard::enter() {
        if let Some(dir) = dirstream::as_sea_dir(dirp) {
            dir.rewind();
            return;
        }
    }
    if let Some(real) = real::rewinddir() {
        real(dirp);
    }
}

#[no_mangle]
pub unsafe extern "C" fn seekdir(dirp: *mut libc::DIR, loc: c_long) {
    if let Some(_guard) = Guard::enter() {
        if let Some(dir) = dirstream::as_sea_dir(dirp) {
            dir.seek(loc);
            return;
        }
    }
    if let Some(real) = real::seekdir() {
        real(dirp, loc);
    }
}

#[no_mangle]
pub unsafe extern "C" fn telldir(dirp: *mut libc::DIR) -> c_long {
    if let Some(_guard) = Guard::enter() {
        if let Some(dir) = dirstream::as_sea_dir(dirp) {
            return dir.tell();
        }
    }
    match real::telldir() {
        Some(real) => real(dirp),
        None => -1,
    }
}

#[no_mangle]
pub unsafe extern "C" fn dirfd(dirp: *mut libc::DIR) -> c_int {
    if let Some(_guard) = Guard::enter() {
        if let Some(dir) = dirstream::as_sea_dir(dirp) {
            return dir.real_dirfd();
        }
    }
    match real::dirfd() {
        Some(real) => real(dirp),
        None => {
            set_errno(libc::ENOSYS);
            -1
        }
    }
}

type ScanFilter = unsafe extern "C" fn(*const libc::dirent) -> c_int;
type ScanCompar = unsafe extern "C" fn(*mut c_void, *mut c_void) -> c_int;

unsafe fn scandir_union(
    shim: &Shim,
    rel: &Path,
    namelist: *mut *mut *mut libc::dirent,
    filter: Option<ScanFilter>,
    compar: Option<ScanCompar>,
) -> c_int {
    let Some(dir) = dirstream::open_union(shim, rel) else {
        set_errno(libc::ENOENT);
        return -1;
    };
    let mut kept: Vec<*mut libc::dirent> = Vec::new();
    for entry in dir.entries() {
        let as_dirent = entry as *const libc::dirent64 as *const libc::dirent;
        if let Some(f) = filter {
            if f(as_dirent) == 0 {
                continue;
            }
        }
        let cell = libc::malloc(std::mem::size_of::<libc::dirent64>()) as *mut libc::dirent64;
        if cell.is_null() {
            for p in &kept {
                libc::free(*p as *mut c_void);
            }
            set_errno(libc::ENOMEM);
            return -1;
        }
        std::ptr::copy_nonoverlapping(entry, cell, 1);
        kept.push(cell as *mut libc::dirent);
    }
    dirstream::close(Box::into_raw(dir));
    if let Some(cmp) = compar {
        kept.sort_by(|a, b| {
            let r = cmp(
                a as *const _ as *mut c_void,
                b as *const _ as *mut c_void,
            );
            r.cmp(&0)
        });
    }
    let array =
        libc::malloc(kept.len() * std::mem::size_of::<*mut libc::dirent>()) as *mut *mut libc::dirent;
    if array.is_null() && !kept.is_empty() {
        for p in &kept {
            libc::free(*p as *mut c_void);
        }
        set_errno(libc::ENOMEM);
        return -1;
    }
    for (i, p) in kept.iter().enumerate() {
        *array.add(i) = *p;
    }
    *namelist = array;
    kept.len() as c_int
}

#[no_mangle]
pub unsafe extern "C" fn scandir(
    path: *const c_char,
    namelist: *mut *mut *mut libc::dirent,
    filter: Option<ScanFilter>,
    compar: Option<ScanCompar>,
) -> c_int {
    let Some(real) = real::scandir() else {
        set_errno(libc::ENOSYS);
        return -1;
    };
    let Some(_guard) = Guard::enter() else {
        return real(path, namelist, filter, compar);
    };
    let Some(shim) = state::get() else {
        return real(path, namelist, filter, compar);
    };
    let body = std::panic::AssertUnwindSafe(|| {
        let abs = paths::resolve(shim, path)?;
        let rel = ops::rel_of(shim, &abs)?;
        Some(scandir_union(shim, &rel, namelist, filter, compar))
    });
    match std::panic::catch_unwind(body) {
        Ok(Some(ret)) => ret,
        _ => real(path, namelist, filter, compar),
    }
}

#[no_mangle]
pub unsafe extern "C" fn scandir64(
    path: *const c_char,
    namelist: *mut *mut *mut libc::dirent64,
    filter: Option<unsafe extern "C" fn(*const libc::dirent64) -> c_int>,
    compar: Option<ScanCompar>,
) -> c_int {
    let Some(real) = real::scandir64() else {
        set_errno(libc::ENOSYS);
        return -1;
    };
    let Some(_guard) = Guard::enter() else {
        return real(path, namelist, filter, compar);
    };
    let Some(shim) = state::get() else {
        return real(path, namelist, filter, compar);
    };
    let body = std::panic::AssertUnwindSafe(|| {
        let abs = paths::resolve(shim, path)?;
        let rel = ops::rel_of(shim, &abs)?;
        // Same layout on 64-bit Linux; reuse the dirent64-backed builder.
        let nl = namelist as *mut *mut *mut libc::dirent;
        let f: Option<ScanFilter> = std::mem::transmute(filter);
        Some(scandir_union(shim, &rel, nl, f, compar))
    });
    match std::panic::catch_unwind(body) {
        Ok(Some(ret)) => ret,
        _ => real(path, namelist, filter, compar),
    }
}
