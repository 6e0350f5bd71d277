//! Commit records read from a local git repository.

use std::path::Path;
use std::process::Command;

use super::{CommitRecord, IngestError};

const MARK: &str = "\u{1}commit\u{1}";

/// Runs `git log -p -W` (whole-function context) over `repo` and returns one
/// record per non-merge commit, oldest first.
pub fn commits_from_git(repo: &Path, project: &str) -> Result<Vec<CommitRecord>, IngestError> {
    let out = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args([
            "log",
            "--reverse",
            "--no-merges",
            "--no-color",
            "--no-renames",
            "-p",
            "-W",
            "--format=\u{1}commit\u{1}%H%n%B\u{1}",
        ])
        .output()?;
    if !out.status.success() {
        return Err(IngestError::Git(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let mut commits = Vec::new();
    for chunk in text.split(MARK).skip(1) {
        let (head, diff) = chunk.split_once('\u{1}').unwrap_or((chunk, ""));
        let (sha, message) = head.split_once('\n').unwrap_or((head, ""));
        commits.push(CommitRecord {
            project: project.to_string(),
            sha: sha.trim().to_string(),
            message: message.trim().to_string(),
            diff: diff.trim_start_matches('\n').to_string(),
        });
    }
    Ok(commits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ingest::filter_commits;

    fn git(dir: &Path, args: &[&str]) {
        let ok = Command::new("git")
            .arg("-C")
            .arg(dir)
            .args(["-c", "user.name=t", "-c", "user.email=t@t", "-c", "commit.gpgsign=false"])
            .args(args)
            .status()
            .unwrap()
            .success();
        assert!(ok, "git {args:?}");
    }

    #[test]
    fn reads_function_context_commits() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        git(d, &["init", "-q"]);
        let file = d.join("request.c");
        std::fs::write(&file, format!("#include <string.h>\n\n{}", fixtures::HANDLER_VULNERABLE)).unwrap();
        git(d, &["add", "."]);
        git(d, &["commit", "-q", "-m", "initial import"]);
        std::fs::write(&file, format!("#include <string.h>\n\n{}", fixtures::HANDLER_PATCHED)).unwrap();
        git(d, &["commit", "-q", "-am", "usb: fix buffer overflow"]);

        let commits = commits_from_git(d, "demo").unwrap();
        assert_eq!(commits.len(), 2);
        assert_eq!(commits[1].message, "usb: fix buffer overflow");
        assert_eq!(commits[1].sha.len(), 40);
        let (kept, counts) = filter_commits(commits);
        assert_eq!(kept.len(), 1, "{counts:?}");
        let p = crate::ingest::extract_pair(&kept[0].0, kept[0].1).unwrap();
        assert_eq!(p.f_v.code, fixtures::HANDLER_VULNERABLE);
    }
}
