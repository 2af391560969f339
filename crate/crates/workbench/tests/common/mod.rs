#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qoe_forge_workbench::commands::{self, PlanOptions};
use qoe_forge_workbench::manifest::Manifest;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qoe-forge"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// One source per cell, one CRF, one mode per batch, 2 s sources: 15 videos.
pub fn small_corpus(dir: &Path) -> Manifest {
    commands::plan(
        dir,
        &PlanOptions {
            sources_per_cell: 1,
            crf: vec![27],
            modes_per_video: 1,
            source_seconds: Some(2.0),
        },
    )
    .unwrap()
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(commands::MANIFEST_FILE)
}

/// Ratings of `subjects` raters for `videos`, each rater an affine view of a
/// shared quality level per video.
pub fn ratings_csv(subjects: usize, videos: &[String]) -> String {
    let mut out = String::from("subject_id,video_id,score,timestamp_iso8601\n");
    for s in 0..subjects {
        for (j, v) in videos.iter().enumerate() {
            let quality = 1 + (j * 7 + s % 2) % 5;
            out.push_str(&format!("s{s:02},{v},{quality},\n"));
        }
    }
    out
}

/// All files under `dir` with their contents, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
