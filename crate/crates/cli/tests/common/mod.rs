#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_uflmatch"));
    c.env("UFL_THREADS", "1");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> HashMap<String, String> {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    parse_report(&String::from_utf8_lossy(&out.stdout))
}

pub fn parse_report(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic pair in `dir/name`, returned as that directory.
pub fn synth(dir: &Path, name: &str, kind: &str, size: usize, shift: &str, seed: u64) -> PathBuf {
    let out = dir.join(name);
    run_ok(&[
        "synth",
        kind,
        "--out",
        s(&out),
        "--width",
        &size.to_string(),
        "--height",
        &size.to_string(),
        "--shift",
        shift,
        "--seed",
        &seed.to_string(),
    ]);
    out
}

/// Small 7x7, 32-codeword K-means dictionary learned from synthetic textures.
pub fn small_dict(dir: &Path) -> PathBuf {
    let imgs = dir.join("train");
    std::fs::create_dir_all(&imgs).unwrap();
    for seed in 0..3 {
        let pair = synth(dir, &format!("src{seed}"), "noise", 80, "0,0", 500 + seed);
        std::fs::copy(pair.join("test.pgm"), imgs.join(format!("t{seed}.pgm"))).unwrap();
    }
    let dict = dir.join("dict.txt");
    run_ok(&[
        "learn-dict",
        s(&imgs),
        "--out",
        s(&dict),
        "--dict-size",
        "32",
        "--patches",
        "10000",
        "--pixel-patch",
        "7",
        "--seed",
        "1",
    ]);
    dict
}

pub fn read_flow(path: &Path) -> (u32, usize, usize, Vec<(i32, i32)>) {
    let b = std::fs::read(path).unwrap();
    assert_eq!(&b[..4], b"UFLF");
    let word = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
    let (g, w, h) = (word(8), word(12) as usize, word(16) as usize);
    let v = b[20..]
        .chunks_exact(8)
        .map(|c| {
            (
                i32::from_le_bytes(c[..4].try_into().unwrap()),
                i32::from_le_bytes(c[4..].try_into().unwrap()),
            )
        })
        .collect();
    (g, w, h, v)
}
