//! Runs independent invocations of this binary as child processes.

use std::collections::VecDeque;
use std::process::{Child, Command};
use std::thread::sleep;
use std::time::Duration;

use anyhow::{bail, Context, Result};

/// Runs every argument list as `dgkd <args>` with at most `jobs` alive at
/// once. Children inherit stdio and the environment. All jobs run even if
/// some fail; the error lists the failures.
pub fn run_all(arg_lists: Vec<Vec<String>>, jobs: usize) -> Result<()> {
    let exe = std::env::current_exe().context("locating the dgkd executable")?;
    let mut queue: VecDeque<Vec<String>> = arg_lists.into();
    let mut running: Vec<(Vec<String>, Child)> = Vec::new();
    let mut failed = Vec::new();
    while !queue.is_empty() || !running.is_empty() {
        while running.len() < jobs.max(1) {
            let Some(args) = queue.pop_front() else { break };
            log::info!("starting dgkd {}", args.join(" "));
            let child = Command::new(&exe)
                .args(&args)
                .spawn()
                .with_context(|| format!("spawning dgkd {}", args.join(" ")))?;
            running.push((args, child));
        }
        let mut i = 0;
        let mut progressed = false;
        while i < running.len() {
            if let Some(status) = running[i].1.try_wait()? {
                let (args, _) = running.swap_remove(i);
                if !status.success() {
                    failed.push(format!("dgkd {} ({status})", args.join(" ")));
                }
                progressed = true;
            } else {
                i += 1;
            }
        }
        if !progressed {
            sleep(Duration::from_millis(50));
        }
    }
    if !failed.is_empty() {
        bail!("{} run(s) failed:\n  {}", failed.len(), failed.join("\n  "));
    }
    Ok(())
}
