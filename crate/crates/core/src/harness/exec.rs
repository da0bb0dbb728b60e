use std::io::{Read, Seek, SeekFrom};
use std::os::unix::process::CommandExt;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::Mode;

/// How often a running command is sampled.
const POLL: Duration = Duration::from_millis(5);

/// Sequential runs that stop consuming CPU are still killed after this many
/// times the limit of wall time.
const SEQUENTIAL_WALL_FACTOR: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    /// None if the process was killed by a signal.
    pub exit_code: Option<i32>,
    pub timed_out: bool,
    /// User plus system time of the process group.
    pub cpu_s: f64,
    pub wall_s: f64,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

impl CommandOutcome {
    /// The time charged under `mode`.
    pub fn charged(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Sequential => self.cpu_s,
            Mode::Parallel => self.wall_s,
        }
    }
}

fn ticks_per_second() -> f64 {
    // SAFETY: sysconf has no preconditions.
    let t = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
    if t > 0 {
        t as f64
    } else {
        100.0
    }
}

/// CPU seconds of every live process in group `pgid`, including children
/// they have reaped.
fn group_cpu(pgid: i32, tick: f64) -> f64 {
    let Ok(dir) = std::fs::read_dir("/proc") else {
        return 0.0;
    };
    let mut ticks = 0u64;
    for entry in dir.flatten() {
        let name = entry.file_name();
        let Some(pid) = name.to_str().and_then(|s| s.parse::<u32>().ok()) else {
            continue;
        };
        let Ok(stat) = std::fs::read_to_string(format!("/proc/{pid}/stat")) else {
            continue;
        };
        let Some(rest) = stat.rfind(')').map(|i| &stat[i + 1..]) else {
            continue;
        };
        let f: Vec<&str> = rest.split_ascii_whitespace().collect();
        if f.len() < 15 || f[2].parse::<i32>().ok() != Some(pgid) {
            continue;
        }
        ticks += f[11..15].iter().filter_map(|x| x.parse::<u64>().ok()).sum::<u64>();
    }
    ticks as f64 / tick
}

fn rusage_seconds(r: &libc::rusage) -> f64 {
    let tv = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 / 1e6;
    tv(r.ru_utime) + tv(r.ru_stime)
}

/// Runs `sh -c cmd` in its own process group and kills the whole group once
/// the charged time reaches `timeout`.
pub fn run_command(cmd: &str, mode: Mode, timeout: Duration) -> std::io::Result<CommandOutcome> {
    let mut out = tempfile::tempfile()?;
    let mut err = tempfile::tempfile()?;
    let child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::null())
        .stdout(out.try_clone()?)
        .stderr(err.try_clone()?)
        .process_group(0)
        .spawn()?;
    let pid = child.id() as i32;
    let tick = ticks_per_second();
    let start = Instant::now();
    let limit = timeout.as_secs_f64();
    let wall_cap = match mode {
        Mode::Sequential => timeout * SEQUENTIAL_WALL_FACTOR,
        Mode::Parallel => timeout,
    };
    let mut cpu_seen = 0.0f64;
    let mut timed_out = false;
    let mut status = 0;
    // SAFETY: rusage is plain old data.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    loop {
        // SAFETY: pid is our unreaped child; status and usage are valid out-pointers.
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if r == pid {
            break;
        }
        if r < 0 {
            return Err(std::io::Error::last_os_error());
        }
        cpu_seen = cpu_seen.max(group_cpu(pid, tick));
        let wall = start.elapsed();
        let over = match mode {
            Mode::Sequential => cpu_seen >= limit,
            Mode::Parallel => false,
        };
        if over || wall >= wall_cap {
            timed_out = true;
            // SAFETY: signalling our own process group.
            unsafe { libc::killpg(pid, libc::SIGKILL) };
            // SAFETY: as above, blocking.
            unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
            break;
        }
        std::thread::sleep(POLL);
    }
    let wall_s = start.elapsed().as_secs_f64();
    // stragglers that outlived the group leader
    // SAFETY: signalling our own process group; failure means it is empty.
    unsafe { libc::killpg(pid, libc::SIGKILL) };
    let mut cpu_s = cpu_seen.max(rusage_seconds(&usage));
    if timed_out && mode == Mode::Sequential && cpu_s < limit {
        // killed by the wall cap: charge the full limit
        cpu_s = limit;
    }
    let exit_code = if libc::WIFEXITED(status) { Some(libc::WEXITSTATUS(status)) } else { None };
    let mut stdout = Vec::new();
    out.seek(SeekFrom::Start(0))?;
    out.read_to_end(&mut stdout)?;
    let mut stderr = Vec::new();
    err.seek(SeekFrom::Start(0))?;
    err.read_to_end(&mut stderr)?;
    drop(child);
    Ok(CommandOutcome { exit_code, timed_out, cpu_s, wall_s, stdout, stderr })
}
