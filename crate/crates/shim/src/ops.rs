//! Translation policies shared by the wrappers.
//!
//! Everything here runs with the recursion guard held, so std::fs calls
//! re-enter the exported symbols and fall straight through to the real
//! C runtime untranslated. A returned `None` always means "this call is
//! none of our business": the wrapper delegates with the original
//! arguments.
//!
//! Multi-copy rules: reads and content changes act on the fastest copy;
//! metadata changes apply to every copy so later flushes cannot resurrect
//! stale attributes; name removal clears every tier so no stale copy can
//! shadow the deletion.

use std::ffi::CString;
use std::path::{Path, PathBuf};

use libc::{c_char, c_int, c_uint};
use sea_core::pathmap::Intent;
use sea_core::sea_debug;
use sea_core::throttle::Pacer;

use crate::paths::c_path;
use crate::state::{set_errno, Shim};

fn errno_of(err: &std::io::Error) -> c_int {
    err.raw_os_error().unwrap_or(libc::EIO)
}

/// Mount-relative remainder, or None when the call is outside our world.
pub fn rel_of(shim: &Shim, abs: &Path) -> Option<PathBuf> {
    shim.mapper.mount_relative(abs)
}

pub fn base_path(shim: &Shim, rel: &Path) -> PathBuf {
    shim.mapper
        .resolve_on(shim.mapper.config().base_index(), rel)
}

/// Translated target for an open-style call. Creation places the file via
/// the capacity rule only when the name does not exist on any tier yet;
/// O_CREAT on an existing file opens the existing copy, which keeps reads
/// coherent after rewrites.
pub fn plan_open(shim: &Shim, abs: &Path, wants_create: bool) -> Option<CString> {
    let rel = rel_of(shim, abs)?;
    let creating = wants_create && shim.mapper.locate_all(&rel).is_empty();
    let intent = if creating {
        Intent::CreateNew
    } else {
        Intent::ReadExisting
    };
    let t = shim.mapper.translate(abs, intent);
    if creating {
        if let Some(parent) = t.resolved.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
    }
    sea_debug!(2, "open {} -> {}", abs.display(), t.resolved.display());
    c_path(&t.resolved)
}

/// Fastest existing copy (or the base path, yielding the native ENOENT).
pub fn plan_meta(shim: &Shim, abs: &Path) -> Option<CString> {
    rel_of(shim, abs)?;
    let t = shim.mapper.translate(abs, Intent::Metadata);
    sea_debug!(2, "meta {} -> {}", abs.display(), t.resolved.display());
    c_path(&t.resolved)
}

/// Applies an operation to every copy of a file: the fastest copy decides
/// the result, slower copies are best-effort so flushed replicas do not
/// diverge.
pub unsafe fn apply_copies(
    shim: &Shim,
    abs: &Path,
    apply: impl Fn(*const c_char) -> c_int,
) -> Option<c_int> {
    let rel = rel_of(shim, abs)?;
    let copies = shim.mapper.locate_all(&rel);
    if copies.is_empty() {
        let c = c_path(&base_path(shim, &rel))?;
        return Some(apply(c.as_ptr()));
    }
    let primary = c_path(&copies[0].1)?;
    let ret = apply(primary.as_ptr());
    if ret != 0 {
        return Some(ret);
    }
    for (_, path) in &copies[1..] {
        if let Some(c) = c_path(path) {
            let _ = apply(c.as_ptr());
        }
    }
    Some(0)
}

/// Removes a name from every tier. Succeeds when the virtual name is gone.
pub fn unlink_all(shim: &Shim, abs: &Path, real: unsafe extern "C" fn(*const c_char) -> c_int) -> Option<c_int> {
    let rel = rel_of(shim, abs)?;
    let copies = shim.mapper.locate_all(&rel);
    if copies.is_empty() {
        let c = c_path(&base_path(shim, &rel))?;
        return Some(unsafe { real(c.as_ptr()) });
    }
    let mut failed: Option<c_int> = None;
    for (_, path) in &copies {
        if let Err(e) = std::fs::remove_file(path) {
            failed = Some(errno_of(&e));
        }
    }
    match failed {
        Some(errno) => {
            set_errno(errno);
            Some(-1)
        }
        None => {
            sea_debug!(2, "unlink {} ({} copies)", abs.display(), copies.len());
            Some(0)
        }
    }
}

/// Virtual mkdir: EEXIST against the union, then a real mkdir on base.
/// Cache tiers grow the directory lazily when a file creation needs it.
pub unsafe fn mkdir_virtual(
    shim: &Shim,
    abs: &Path,
    mode: libc::mode_t,
    real: unsafe extern "C" fn(*const c_char, libc::mode_t) -> c_int,
) -> Option<c_int> {
    let rel = rel_of(shim, abs)?;
    if !shim.mapper.locate_all(&rel).is_empty() {
        set_errno(libc::EEXIST);
        return Some(-1);
    }
    if let Some(parent) = rel.parent() {
        if !parent.as_os_str().is_empty() && shim.mapper.locate_all(parent).is_empty() {
            set_errno(libc::ENOENT);
            return Some(-1);
        }
    }
    let target = base_path(shim, &rel);
    if let Some(parent) = target.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    let c = c_path(&target)?;
    Some(real(c.as_ptr(), mode))
}

/// Virtual rmdir: only an empty union can be removed, and then the
/// directory goes on every tier that has it.
pub fn rmdir_virtual(
    shim: &Shim,
    abs: &Path,
    real: unsafe extern "C" fn(*const c_char) -> c_int,
) -> Option<c_int> {
    let rel = rel_of(shim, abs)?;
    match shim.mapper.list_union(&rel) {
        Err(_) => {
            let c = c_path(&base_path(shim, &rel))?;
            return Some(unsafe { real(c.as_ptr()) });
        }
        Ok(entries) if !entries.is_empty() => {
            set_errno(libc::ENOTEMPTY);
            return Some(-1);
        }
        Ok(_) => {}
    }
    let mut last_errno = None;
    for (_, path) in shim.mapper.locate_all(&rel) {
        if let Err(e) = std::fs::remove_dir(&path) {
            last_errno = Some(errno_of(&e));
        }
    }
    match last_errno {
        Some(errno) => {
            set_errno(errno);
            Some(-1)
        }
        None => Some(0),
    }
}

/// Crash-tolerant cross-filesystem move: replicate (preserving bytes,
/// permissions, mtime), then unlink the source copies.
fn move_by_copy(src_copies: &[(usize, PathBuf)], dst: &Path) -> c_int {
    if let Some(parent) = dst.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    match sea_core::lifecycle::replicate(&src_copies[0].1, dst, &mut Pacer::new(None)) {
        Ok(_) => {
            for (_, path) in src_copies {
                let _ = std::fs::remove_file(path);
            }
            sea_debug!(1, "cross-tier rename via copy: {}", dst.display());
            0
        }
        Err(e) => {
            set_errno(errno_of(&e));
            -1
        }
    }
}

/// Rename with the virtual namespace semantics. Within the mountpoint the
/// move happens on the source's tier; copies of the destination name on
/// other tiers are cleared so nothing stale shadows the new file. Crossing
/// the mountpoint boundary falls back to copy-then-unlink.
pub unsafe fn rename_virtual(
    shim: &Shim,
    src_abs: &Path,
    dst_abs: &Path,
    flags: c_uint,
    real: unsafe extern "C" fn(*const c_char, *const c_char) -> c_int,
) -> Option<c_int> {
    const RENAME_NOREPLACE: c_uint = 1;
    const RENAME_EXCHANGE: c_uint = 2;

    let src_rel = rel_of(shim, src_abs);
    let dst_rel = rel_of(shim, dst_abs);
    if src_rel.is_none() && dst_rel.is_none() {
        return None;
    }
    if flags & RENAME_EXCHANGE != 0 {
        // Exchange across the virtual namespace is not representable with
        // per-tier primitives; callers fall back on EINVAL.
        set_errno(libc::EINVAL);
        return Some(-1);
    }
    if flags & !RENAME_NOREPLACE != 0 {
        set_errno(libc::EINVAL);
        return Some(-1);
    }
    if flags & RENAME_NOREPLACE != 0 {
        let dst_exists = match &dst_rel {
            Some(rel) => !shim.mapper.locate_all(rel).is_empty(),
            None => dst_abs.symlink_metadata().is_ok(),
        };
        if dst_exists {
            set_errno(libc::EEXIST);
            return Some(-1);
        }
    }

    match (&src_rel, &dst_rel) {
        (Some(src_rel), Some(dst_rel)) => {
            let src_copies = shim.mapper.locate_all(src_rel);
            if src_copies.is_empty() {
                let s = c_path(&base_path(shim, src_rel))?;
                let d = c_path(&base_path(shim, dst_rel))?;
                return Some(real(s.as_ptr(), d.as_ptr()));
            }
            if let Some(parent) = dst_rel.parent() {
                if !parent.as_os_str().is_empty() && shim.mapper.locate_all(parent).is_empty() {
                    set_errno(libc::ENOENT);
                    return Some(-1);
                }
            }
            let tier = src_copies[0].0;
            let src_path = &src_copies[0].1;
            let dst_path = shim.mapper.resolve_on(tier, dst_rel);
            if let Some(parent) = dst_path.parent() {
                let _ = std::fs::create_dir_all(parent);
            }
            let stale_dst: Vec<PathBuf> = shim
                .mapper
                .locate_all(dst_rel)
                .into_iter()
                .filter(|(t, _)| *t != tier)
                .map(|(_, p)| p)
                .collect();
            let (s, d) = (c_path(src_path)?, c_path(&dst_path)?);
            let mut ret = real(s.as_ptr(), d.as_ptr());
            if ret != 0 && crate::state::errno() == libc::EXDEV {
                ret = move_by_copy(&src_copies[..1], &dst_path);
            }
            if ret != 0 {
                return Some(ret);
            }
            sea_debug!(2, "rename {} -> {} on tier {}", src_abs.display(), dst_abs.display(), tier);
            for path in stale_dst {
                let _ = std::fs::remove_file(&path);
            }
            for (_, path) in &src_copies[1..] {
                let _ = std::fs::remove_file(path);
            }
            Some(0)
        }
        (Some(src_rel), None) => {
            let src_copies = shim.mapper.locate_all(src_rel);
            if src_copies.is_empty() {
                let s = c_path(&base_path(shim, src_rel))?;
                let d = c_path(dst_abs)?;
                return Some(real(s.as_ptr(), d.as_ptr()));
            }
            let (s, d) = (c_path(&src_copies[0].1)?, c_path(dst_abs)?);
            let mut ret = real(s.as_ptr(), d.as_ptr());
            if ret != 0 && crate::state::errno() == libc::EXDEV {
                ret = move_by_copy(&src_copies[..1], dst_abs);
            }
            if ret == 0 {
                for (_, path) in &src_copies[1..] {
                    let _ = std::fs::remove_file(path);
                }
            }
            Some(ret)
        }
        (None, Some(dst_rel)) => {
            let existing = shim.mapper.locate_all(dst_rel);
            let tier = existing
                .first()
                .map(|(t, _)| *t)
                .unwrap_or_else(|| shim.mapper.select_tier());
            let dst_path = shim.mapper.resolve_on(tier, dst_rel);
            if let Some(parent) = dst_path.parent() {
                let _ = std::fs::create_dir_all(parent);
            }
            let (s, d) = (c_path(src_abs)?, c_path(&dst_path)?);
            let mut ret = real(s.as_ptr(), d.as_ptr());
            if ret != 0 && crate::state::errno() == libc::EXDEV {
                let src = vec![(0usize, src_abs.to_path_buf())];
                ret = move_by_copy(&src, &dst_path);
            }
            if ret == 0 {
                for (t, path) in existing {
                    if t != tier {
                        let _ = std::fs::remove_file(&path);
                    }
                }
            }
            Some(ret)
        }
        (None, None) => unreachable!(),
    }
}

/// Hard link following the rename tier rules; cross-filesystem degrades to
/// an independent copy.
pub unsafe fn link_virtual(
    shim: &Shim,
    src_abs: &Path,
    dst_abs: &Path,
    real: unsafe extern "C" fn(*const c_char, *const c_char) -> c_int,
) -> Option<c_int> {
    let src_rel = rel_of(shim, src_abs);
    let dst_rel = rel_of(shim, dst_abs);
    if src_rel.is_none() && dst_rel.is_none() {
        return None;
    }
    if let Some(dst_rel) = &dst_rel {
        if !shim.mapper.locate_all(dst_rel).is_empty() {
            set_errno(libc::EEXIST);
            return Some(-1);
        }
    }
    let (src_path, src_tier) = match &src_rel {
        Some(rel) => {
            let copies = shim.mapper.locate_all(rel);
            match copies.first() {
                Some((t, p)) => (p.clone(), Some(*t)),
                None => (base_path(shim, rel), None),
            }
        }
        None => (src_abs.to_path_buf(), None),
    };
    let dst_path = match &dst_rel {
        Some(rel) => {
            let tier = src_tier.unwrap_or_else(|| shim.mapper.select_tier());
            let p = shim.mapper.resolve_on(tier, rel);
            if let Some(parent) = p.parent() {
                let _ = std::fs::create_dir_all(parent);
            }
            p
        }
        None => dst_abs.to_path_buf(),
    };
    let (s, d) = (c_path(&src_path)?, c_path(&dst_path)?);
    let mut ret = real(s.as_ptr(), d.as_ptr());
    if ret != 0 && crate::state::errno() == libc::EXDEV {
        ret = match sea_core::lifecycle::replicate(&src_path, &dst_path, &mut Pacer::new(None)) {
            Ok(_) => 0,
            Err(e) => {
                set_errno(errno_of(&e));
                -1
            }
        };
    }
    Some(ret)
}

/// Symlink creation: the link inode lands where a new file would; the
/// target string is stored verbatim and resolved by the concrete
/// filesystem at use time.
pub unsafe fn symlink_virtual(
    shim: &Shim,
    target: *const c_char,
    link_abs: &Path,
    real: unsafe extern "C" fn(*const c_char, *const c_char) -> c_int,
) -> Option<c_int> {
    let rel = rel_of(shim, link_abs)?;
    if !shim.mapper.locate_all(&rel).is_empty() {
        set_errno(libc::EEXIST);
        return Some(-1);
    }
    let tier = shim.mapper.select_tier();
    let link_path = shim.mapper.resolve_on(tier, &rel);
    if let Some(parent) = link_path.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    let l = c_path(&link_path)?;
    Some(real(target, l.as_ptr()))
}

/// remove(3): unlink for files, rmdir for directories.
pub unsafe fn remove_virtual(
    shim: &Shim,
    abs: &Path,
    real_unlink: unsafe extern "C" fn(*const c_char) -> c_int,
    real_rmdir: unsafe extern "C" fn(*const c_char) -> c_int,
) -> Option<c_int> {
    let rel = rel_of(shim, abs)?;
    let copies = shim.mapper.locate_all(&rel);
    let is_dir = copies
        .first()
        .and_then(|(_, p)| p.symlink_metadata().ok())
        .map(|m| m.is_dir())
        .unwrap_or(false);
    if is_dir {
        rmdir_virtual(shim, abs, real_rmdir)
    } else {
        unlink_all(shim, abs, real_unlink)
    }
}
