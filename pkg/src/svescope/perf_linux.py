"""Thin ctypes shim over the Linux perf_event_open interface.

Opens raw PMU events as one scheduled group (leader plus siblings) so that
all counters run simultaneously instead of being time-multiplexed. Counters
are configured with inheritance so work done by threads spawned inside the
region of interest is attributed to the session.

Only the calling thread / process is measured (pid=0, cpu=-1) and kernel and
hypervisor work is excluded, which keeps the interface usable at
perf_event_paranoid <= 2 without extra capabilities.
"""

from __future__ import annotations

import ctypes
import errno
import os
import platform
import struct

from .errors import BackendUnavailableError

# perf_event_open syscall numbers per architecture.
_SYSCALL_NR = {
    "x86_64": 298,
    "aarch64": 241,
    "arm64": 241,
    "i386": 336,
    "i686": 336,
    "armv7l": 364,
    "armv8l": 364,
}

PERF_TYPE_RAW = 4

# perf_event_attr flag bits (bit offsets into the flags word).
_FLAG_DISABLED = 1 << 0
_FLAG_INHERIT = 1 << 1
_FLAG_EXCLUDE_KERNEL = 1 << 5
_FLAG_EXCLUDE_HV = 1 << 6

# ioctl request codes from linux/perf_event.h.
_IOC_ENABLE = 0x2400
_IOC_DISABLE = 0x2401
_IOC_RESET = 0x2403
_IOC_FLAG_GROUP = 1

_ATTR_SIZE_VER0 = 64  # original perf_event_attr size; accepted by all kernels


class _PerfEventAttr(ctypes.Structure):
    _fields_ = [
        ("type", ctypes.c_uint32),
        ("size", ctypes.c_uint32),
        ("config", ctypes.c_uint64),
        ("sample_period", ctypes.c_uint64),
        ("sample_type", ctypes.c_uint64),
        ("read_format", ctypes.c_uint64),
        ("flags", ctypes.c_uint64),
        ("wakeup_events", ctypes.c_uint32),
        ("bp_type", ctypes.c_uint32),
        ("config1", ctypes.c_uint64),
        ("config2", ctypes.c_uint64),
    ]


def available() -> tuple[bool, str]:
    """Whether this host can plausibly open live counters, with a reason."""
    if platform.system() != "Linux":
        return False, f"live counters require Linux (host is {platform.system()})"
    if platform.machine() not in _SYSCALL_NR:
        return False, f"no perf_event_open syscall number for {platform.machine()}"
    return True, ""


def paranoid_level() -> int | None:
    try:
        with open("/proc/sys/kernel/perf_event_paranoid") as fh:
            return int(fh.read().strip())
    except OSError:
        return None


class PerfGroup:
    """One opened group of raw events; counts the calling thread tree."""

    def __init__(self, hexcodes: list[int]):
        ok, why = available()
        if not ok:
            raise BackendUnavailableError(why, kind="capability")
        self._libc = ctypes.CDLL(None, use_errno=True)
        self._nr = _SYSCALL_NR[platform.machine()]
        self.fds: list[int] = []
        leader = -1
        try:
            for code in hexcodes:
                fd = self._open_one(code, group_fd=leader)
                self.fds.append(fd)
                if leader == -1:
                    leader = fd
        except BaseException:
            self.close()
            raise
        self._leader = leader

    def _open_one(self, config: int, group_fd: int) -> int:
        attr = _PerfEventAttr()
        attr.type = PERF_TYPE_RAW
        attr.size = _ATTR_SIZE_VER0
        attr.config = config
        # Leader starts disabled and gates the whole group; siblings follow it.
        flags = _FLAG_INHERIT | _FLAG_EXCLUDE_KERNEL | _FLAG_EXCLUDE_HV
        if group_fd == -1:
            flags |= _FLAG_DISABLED
        attr.flags = flags
        fd = self._libc.syscall(
            self._nr, ctypes.byref(attr), 0, -1, group_fd, 0
        )
        if fd < 0:
            err = ctypes.get_errno()
            msg = (
                f"perf_event_open failed for raw event {config:#x}: "
                f"{os.strerror(err)}"
            )
            if err in (errno.EPERM, errno.EACCES):
                level = paranoid_level()
                if level is not None:
                    msg += f" (perf_event_paranoid={level})"
                raise BackendUnavailableError(msg, kind="permission")
            raise BackendUnavailableError(msg, kind="capability")
        return fd

    def enable(self) -> None:
        self._ioctl(_IOC_ENABLE)

    def disable(self) -> None:
        self._ioctl(_IOC_DISABLE)

    def reset(self) -> None:
        self._ioctl(_IOC_RESET)

    def _ioctl(self, request: int) -> None:
        if self._libc.ioctl(self._leader, request, _IOC_FLAG_GROUP) < 0:
            err = ctypes.get_errno()
            raise BackendUnavailableError(
                f"perf ioctl {request:#x} failed: {os.strerror(err)}",
                kind="capability",
            )

    def read(self) -> list[int]:
        # One u64 per fd; inherited events fold child counts in on read.
        values = []
        for fd in self.fds:
            data = os.read(fd, 8)
            values.append(struct.unpack("<Q", data)[0])
        return values

    def close(self) -> None:
        for fd in self.fds:
            try:
                os.close(fd)
            except OSError:
                pass
        self.fds = []
