#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use fogbench::dataset::{read_json, SampleRef};
use sha2::{Digest, Sha256};

/// Runs the CLI in-process.
pub fn fogbench(args: &[&str]) -> fogbench::Result<()> {
    let argv = std::iter::once("fogbench").chain(args.iter().copied());
    fogbench::run(fogbench::Cli::try_parse_from(argv).expect("arguments parse"))
}

/// Runs the built binary and returns its exit code.
pub fn fogbench_bin(args: &[&str], env: &[(&str, &str)]) -> i32 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fogbench"));
    cmd.args(args).env_remove("FOGBENCH_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs").status.code().expect("exit code")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn synth(out: &Path, scenes: u32, variants: u32, size: &str, seed: u64) {
    let seed = seed.to_string();
    fogbench(&[
        "synthesize",
        "--scenes",
        &scenes.to_string(),
        "--variants",
        &variants.to_string(),
        "--size",
        size,
        "--seed",
        &seed,
        "--output",
        path_str(out),
    ])
    .expect("synthesize");
}

pub fn samples(root: &Path) -> Vec<SampleRef> {
    fogbench::dataset::list_samples(root, None).unwrap()
}

pub fn json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    read_json(path).unwrap()
}

/// SHA-256 of every file under `root`, keyed by relative path.
pub fn tree_hashes(root: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let digest = Sha256::digest(fs::read(&path).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), hex);
            }
        }
    }
    out
}
