mod common;

use std::collections::HashMap;
use std::fs;

use common::{read_flow, run, run_ok, s, small_dict, synth};
use tempfile::tempdir;

#[test]
fn learn_dict_random_from_one_tiny_image() {
    let dir = tempdir().unwrap();
    let pair = synth(dir.path(), "p", "noise", 16, "0,0", 1);
    let out = dir.path().join("d.txt");
    let r = run_ok(&[
        "learn-dict",
        s(&pair.join("test.pgm")),
        "--out",
        s(&out),
        "--dict-size",
        "4",
        "--patches",
        "10",
        "--pixel-patch",
        "5",
        "--method",
        "random",
    ]);
    assert_eq!(r["codewords"], "4");
    assert_eq!(r["dim"], "25");
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("UFLDICT 1 4 25 random "));
}

#[test]
fn learn_dict_is_deterministic_and_guards_sizes() {
    let dir = tempdir().unwrap();
    let pair = synth(dir.path(), "p", "noise", 40, "0,0", 2);
    let mut files = Vec::new();
    for name in ["a.txt", "b.txt"] {
        let out = dir.path().join(name);
        run_ok(&[
            "learn-dict",
            s(&pair.join("test.pgm")),
            "--out",
            s(&out),
            "--dict-size",
            "8",
            "--patches",
            "500",
            "--pixel-patch",
            "5",
            "--method",
            "kmeans",
            "--seed",
            "9",
        ]);
        files.push(fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);

    let bad = dir.path().join("bad.txt");
    let out = run(&[
        "learn-dict",
        s(&pair.join("test.pgm")),
        "--out",
        s(&bad),
        "--dict-size",
        "8",
        "--patches",
        "4",
        "--pixel-patch",
        "5",
    ]);
    assert!(!out.status.success());
    assert!(!bad.exists());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert!(!run(&["learn-dict", s(&empty), "--out", s(&bad)]).status.success());
}

#[test]
fn match_identity_reports_zero_energy_and_zero_flow() {
    let dir = tempdir().unwrap();
    let dict = small_dict(dir.path());
    let pair = synth(dir.path(), "same", "warp-free", 64, "0,0", 4);
    let prefix = dir.path().join("m");
    let report = dir.path().join("report.txt");
    let r = run_ok(&[
        "match",
        s(&pair.join("test.pgm")),
        s(&pair.join("exemplar.pgm")),
        "--dict",
        s(&dict),
        "--pixel-patch",
        "7",
        "--pixel",
        "--out",
        s(&prefix),
        "--report",
        s(&report),
    ]);
    assert!(r["energy"].parse::<f64>().unwrap().abs() <= 1e-9);
    for key in ["ms_encode", "ms_grid", "ms_patch", "ms_pixel", "lambda", "lambda_pixel"] {
        assert!(r[key].parse::<f64>().unwrap() >= 0.0, "{key}");
    }
    let (g, w, h, v) = read_flow(&dir.path().join("m.patch.uflf"));
    assert_eq!((g, w, h), (0, 9, 9));
    assert!(v.iter().all(|&t| t == (0, 0)));
    let (g, w, h, v) = read_flow(&dir.path().join("m.pixel.uflf"));
    assert_eq!((g, w, h), (1, 64, 64));
    assert!(v.iter().all(|&t| t == (0, 0)));
    assert_eq!(common::parse_report(&fs::read_to_string(report).unwrap()), r);
}

#[test]
fn match_recovers_a_synthetic_shift() {
    let dir = tempdir().unwrap();
    let dict = small_dict(dir.path());
    let pair = synth(dir.path(), "shift", "shift", 98, "14,-7", 5);
    let prefix = dir.path().join("m");
    run_ok(&[
        "match",
        s(&pair.join("test.pgm")),
        s(&pair.join("exemplar.pgm")),
        "--dict",
        s(&dict),
        "--pixel-patch",
        "7",
        "--out",
        s(&prefix),
    ]);
    let (_, _, _, v) = read_flow(&dir.path().join("m.patch.uflf"));
    let mut counts: HashMap<(i32, i32), usize> = HashMap::new();
    for t in v {
        *counts.entry(t).or_default() += 1;
    }
    let mode = counts.into_iter().max_by_key(|&(_, c)| c).unwrap().0;
    assert_eq!(mode, (2, -1));
    assert!(!dir.path().join("m.pixel.uflf").exists());
}

#[test]
fn match_fails_cleanly_without_a_dictionary() {
    let dir = tempdir().unwrap();
    let pair = synth(dir.path(), "p", "warp-free", 32, "0,0", 1);
    let out = run(&[
        "match",
        s(&pair.join("test.pgm")),
        s(&pair.join("exemplar.pgm")),
        "--dict",
        s(&dir.path().join("missing.txt")),
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    assert!(!dir.path().join("m.patch.uflf").exists());
}

#[test]
fn eval_identity_pair_scores_perfectly() {
    let dir = tempdir().unwrap();
    let dict = small_dict(dir.path());
    let pair = synth(dir.path(), "same", "warp-free", 56, "0,0", 6);
    let manifest = pair.join("boxed.toml");
    fs::write(
        &manifest,
        "[[pair]]\ntest = \"test.pgm\"\nexemplar = \"exemplar.pgm\"\n\
         test_labels = \"test_labels.pgm\"\nexemplar_labels = \"exemplar_labels.pgm\"\n\
         test_box = [4, 4, 40, 30]\nexemplar_box = [4, 4, 40, 30]\n",
    )
    .unwrap();
    let csv = dir.path().join("eval.csv");
    let r = run_ok(&[
        "eval",
        s(&manifest),
        "--dict",
        s(&dict),
        "--pixel-patch",
        "7",
        "--pixel",
        "--out",
        s(&csv),
    ]);
    assert_eq!(r["lt_acc"], "1.000000");
    assert_eq!(r["iou"], "1.000000");
    assert_eq!(r["loc_err"], "0.000000");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "pair,lt_acc,iou,loc_err,ms_patch,ms_pixel");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[1..4], &["1.000000", "1.000000", "0.000000"]);
}

#[test]
fn eval_five_synthetic_pairs_and_empty_manifest() {
    let dir = tempdir().unwrap();
    let dict = small_dict(dir.path());
    let mut manifest = String::new();
    for i in 0..5u64 {
        let kind = if i % 2 == 0 { "shift" } else { "noise" };
        let p = synth(dir.path(), &format!("p{i}"), kind, 56, "7,0", 10 + i);
        manifest.push_str(&format!(
            "[[pair]]\ntest = \"{0}/test.pgm\"\nexemplar = \"{0}/exemplar.pgm\"\n\
             test_labels = \"{0}/test_labels.pgm\"\nexemplar_labels = \"{0}/exemplar_labels.pgm\"\n",
            p.file_name().unwrap().to_str().unwrap()
        ));
    }
    let mpath = dir.path().join("all.toml");
    fs::write(&mpath, manifest).unwrap();
    let csv = dir.path().join("eval.csv");
    run_ok(&["eval", s(&mpath), "--dict", s(&dict), "--pixel-patch", "7", "--out", s(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 6);
        assert!(row[0].starts_with(&format!("{i}:")));
        let acc: f64 = row[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
        assert!(row[3].is_empty());
        assert!(row[4].parse::<f64>().unwrap() >= 0.0);
    }

    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    let out = run(&["eval", s(&empty), "--dict", s(&dict), "--out", s(&dir.path().join("x.csv"))]);
    assert!(!out.status.success());
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn synth_outputs_and_guards() {
    let dir = tempdir().unwrap();
    let a = synth(dir.path(), "a", "shift", 64, "3,0", 7);
    let b = synth(dir.path(), "b", "shift", 64, "3,0", 7);
    for f in ["test.pgm", "exemplar.pgm", "test_labels.pgm", "exemplar_labels.pgm", "flow.uflf", "manifest.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (g, w, h, v) = read_flow(&a.join("flow.uflf"));
    assert_eq!((g, w, h), (1, 64, 64));
    assert!(v.iter().all(|&t| t == (3, 0)));
    // Exemplar is the test image moved three pixels right.
    let test = fs::read(a.join("test.pgm")).unwrap();
    let ex = fs::read(a.join("exemplar.pgm")).unwrap();
    let header = b"P5\n64 64\n255\n".len();
    for y in 0..64 {
        for x in 3..64 {
            assert_eq!(ex[header + y * 64 + x], test[header + y * 64 + x - 3]);
        }
    }
    let out = run(&["synth", "swirl", "--out", s(&dir.path().join("c"))]);
    assert!(!out.status.success());
    let noise = synth(dir.path(), "n", "noise", 32, "0,0", 1);
    assert!(!noise.join("flow.uflf").exists());
}

#[test]
fn transfer_through_ground_truth_flow() {
    let dir = tempdir().unwrap();
    let p = synth(dir.path(), "p", "shift", 48, "-5,2", 3);
    let out = dir.path().join("labels.pgm");
    let warped = dir.path().join("warped.pgm");
    run_ok(&[
        "transfer",
        s(&p.join("flow.uflf")),
        s(&p.join("exemplar_labels.pgm")),
        "--out",
        s(&out),
        "--image",
        s(&p.join("exemplar.pgm")),
        "--warped",
        s(&warped),
    ]);
    let header = b"P5\n48 48\n255\n".len();
    let got = fs::read(&out).unwrap();
    let truth = fs::read(p.join("test_labels.pgm")).unwrap();
    let w = fs::read(&warped).unwrap();
    let test = fs::read(p.join("test.pgm")).unwrap();
    for y in 0..46 {
        for x in 5..48 {
            let i = header + y * 48 + x;
            assert_eq!(got[i], truth[i]);
            assert_eq!(w[i], test[i]);
        }
    }
    // Pixels whose match leaves the exemplar get label 0.
    assert_eq!(got[header], 0);
}

#[test]
fn corrupted_files_are_rejected() {
    let dir = tempdir().unwrap();
    let p = synth(dir.path(), "p", "shift", 32, "1,1", 3);
    let flow = p.join("flow.uflf");
    let mut bytes = fs::read(&flow).unwrap();
    bytes.truncate(bytes.len() - 3);
    let broken = dir.path().join("broken.uflf");
    fs::write(&broken, &bytes).unwrap();
    let out = run(&["transfer", s(&broken), s(&p.join("exemplar_labels.pgm")), "--out", s(&dir.path().join("o.pgm"))]);
    assert!(!out.status.success());
    assert!(!dir.path().join("o.pgm").exists());

    let dict = dir.path().join("dict.txt");
    fs::write(&dict, "UFLDICT 1 2 2 random 1e-1\n1 0\n").unwrap();
    let out = run(&[
        "match",
        s(&p.join("test.pgm")),
        s(&p.join("exemplar.pgm")),
        "--dict",
        s(&dict),
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert!(!out.status.success());
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempdir().unwrap();
    let out = common::bin()
        .env("UFL_THREADS", "zero")
        .args(["synth", "noise", "--out", s(&dir.path().join("n"))])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("UFL_THREADS"));
}
