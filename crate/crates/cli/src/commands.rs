use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use uflmatch::dictionary::{load_dictionary, save_dictionary, train_dictionary, TrainConfig};
use uflmatch::eval::{iou, loc_err, lt_acc, transfer_labels, warp_image, LabelMap};
use uflmatch::io_util::write_atomic;
use uflmatch::matching::{load_flow, match_images, save_flow, MatchResult};
use uflmatch::preprocess::{load_image, Image};
use uflmatch::synth::synth_pair;

use crate::args::{EvalArgs, LearnDictArgs, MatchArgs, SolverArgs, SynthArgs, TransferArgs};
use crate::manifest::load_manifest;
use crate::report::{ms, Report};

/// Patch-level time above which `eval` warns.
const PATCH_MS_BUDGET: f64 = 5_000.0;
/// Pixel-refinement time above which `eval` warns.
const PIXEL_MS_BUDGET: f64 = 30_000.0;

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "pgm", "ppm", "pnm", "pbm"];

fn image_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    ensure!(!files.is_empty(), "no images found in {}", path.display());
    Ok(files)
}

pub fn learn_dict(args: &LearnDictArgs) -> Result<()> {
    let files = image_files(&args.images)?;
    let images = files
        .iter()
        .map(|f| load_image(f).map_err(Into::into))
        .collect::<Result<Vec<Image>>>()?;
    let cfg = TrainConfig {
        size: args.dict_size,
        patches: args.patches,
        patch_width: args.pixel_patch,
        method: args.method.into(),
        iters: args.iters,
        sparsity: args.sparsity,
        epsilon: args.epsilon,
        seed: args.seed,
    };
    let trained = train_dictionary(&images, &cfg)?;
    save_dictionary(&trained.dictionary, &args.out)?;
    let mut r = Report::default();
    r.add("images", images.len())
        .add("patches", cfg.patches)
        .add("codewords", trained.dictionary.size())
        .add("dim", trained.dictionary.dim())
        .add("method", trained.dictionary.method());
    if let Some(obj) = trained.objective.last() {
        r.add("objective", format!("{obj:.10e}"));
    }
    r.add("out", args.out.display());
    r.emit(None)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run_match(test: &Image, exemplar: &Image, solver: &SolverArgs, pixel: bool) -> Result<MatchResult> {
    let dict = load_dictionary(&solver.dict)
        .with_context(|| format!("loading dictionary {}", solver.dict.display()))?;
    let mut params = solver.params();
    if !pixel {
        // Pure upsampling of the patch flow.
        params.pixel_radius = Some(0);
    }
    Ok(match_images(test, exemplar, &dict, &solver.encoder(), &params, true)?)
}

fn add_match_report(r: &mut Report, m: &MatchResult) {
    let o = &m.grid.outcome;
    r.add("patch_cols", m.patch_flow.width)
        .add("patch_rows", m.patch_flow.height)
        .add("grid_nodes", m.pyramid.node_count())
        .add("translations", m.domain.len())
        .add("lambda", format!("{:.10e}", m.lambda));
    if let Some(lp) = m.lambda_pixel {
        r.add("lambda_pixel", format!("{lp:.10e}"));
    }
    r.add("energy", format!("{:.10e}", o.energy))
        .add("energy_bp", format!("{:.10e}", o.bp_energy))
        .add("energy_independent", format!("{:.10e}", o.independent_energy));
    if let Some(z) = o.zero_energy {
        r.add("energy_zero", format!("{z:.10e}"));
    }
    r.add("labeling", format!("{:?}", o.source))
        .add("ms_encode", ms(m.timings.encode_ms))
        .add("ms_pool", ms(m.timings.pool_ms))
        .add("ms_grid", ms(m.timings.grid_ms))
        .add("ms_patch_layer", ms(m.timings.patch_ms))
        .add("ms_patch", ms(m.timings.patch_level_ms()))
        .add("ms_pixel", ms(m.timings.pixel_ms));
}

pub fn match_pair(args: &MatchArgs) -> Result<()> {
    if !args.boxes.is_empty() {
        ensure!(args.boxes.len() == 2, "--box takes a test box and an exemplar box");
        ensure!(args.solver.pixel, "--box needs --pixel to score a pixel flow");
    }
    let test = load_image(&args.test)?;
    let exemplar = load_image(&args.exemplar)?;
    let m = run_match(&test, &exemplar, &args.solver, args.solver.pixel)?;

    let mut r = Report::default();
    r.add("test", args.test.display()).add("exemplar", args.exemplar.display());
    add_match_report(&mut r, &m);
    let patch_path = with_suffix(&args.out, ".patch.uflf");
    save_flow(&m.patch_flow, &patch_path)?;
    r.add("patch_flow", patch_path.display());
    if args.solver.pixel {
        let flow = m.pixel_flow.as_ref().expect("pixel flow computed");
        let pixel_path = with_suffix(&args.out, ".pixel.uflf");
        save_flow(flow, &pixel_path)?;
        r.add("pixel_flow", pixel_path.display());
        if let [bt, be] = args.boxes[..] {
            r.add("loc_err", format!("{:.10e}", loc_err(flow, bt, be)?));
        }
    }
    r.emit(args.report.as_deref())
}

struct PairRow {
    name: String,
    lt_acc: Option<f64>,
    iou: Option<f64>,
    loc_err: Option<f64>,
    ms_patch: f64,
    ms_pixel: f64,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let pairs = load_manifest(&args.manifest)?;
    let mut rows = Vec::with_capacity(pairs.len());
    let mut transferred = Vec::new();
    for pair in &pairs {
        let test = load_image(&pair.test)?;
        let exemplar = load_image(&pair.exemplar)?;
        let m = run_match(&test, &exemplar, &args.solver, args.solver.pixel)
            .with_context(|| format!("matching pair {}", pair.name))?;
        let flow = m.pixel_flow.as_ref().expect("pixel flow computed");
        let mut row = PairRow {
            name: pair.name.clone(),
            lt_acc: None,
            iou: None,
            loc_err: None,
            ms_patch: m.timings.patch_level_ms(),
            ms_pixel: m.timings.pixel_ms,
        };
        if let Some((tl, el)) = &pair.labels {
            let truth = LabelMap::load(tl)?;
            let output = transfer_labels(flow, &LabelMap::load(el)?)?;
            ensure!(
                (truth.width(), truth.height()) == (output.width(), output.height()),
                "pair {}: test labels are not the size of the test image",
                pair.name
            );
            row.lt_acc = lt_acc(&[(&output, &truth)]).ok();
            row.iou = Some(iou(&output, &truth, args.class)?);
            transferred.push((output, truth));
        }
        if let Some((bt, be)) = pair.boxes {
            row.loc_err = Some(loc_err(flow, bt, be)?);
        }
        if row.ms_patch > PATCH_MS_BUDGET {
            eprintln!("warning: pair {} patch-level match took {:.0} ms", pair.name, row.ms_patch);
        }
        if row.ms_pixel > PIXEL_MS_BUDGET {
            eprintln!("warning: pair {} pixel refinement took {:.0} ms", pair.name, row.ms_pixel);
        }
        rows.push(row);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pair", "lt_acc", "iou", "loc_err", "ms_patch", "ms_pixel"])?;
    for row in &rows {
        w.write_record([
            row.name.clone(),
            cell(row.lt_acc),
            cell(row.iou),
            cell(row.loc_err),
            ms(row.ms_patch),
            ms(row.ms_pixel),
        ])?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    write_atomic(&args.out, &bytes)?;

    let mean = |f: fn(&PairRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let pooled: Vec<(&LabelMap, &LabelMap)> = transferred.iter().map(|(o, t)| (o, t)).collect();
    let mut r = Report::default();
    r.add("pairs", rows.len());
    if !pooled.is_empty() {
        match lt_acc(&pooled) {
            Ok(v) => r.add("lt_acc", format!("{v:.6}")),
            Err(e) => r.add("lt_acc", format!("undefined ({e})")),
        };
    }
    if let Some(v) = mean(|r| r.iou) {
        r.add("iou", format!("{v:.6}"));
    }
    if let Some(v) = mean(|r| r.loc_err) {
        r.add("loc_err", format!("{v:.6}"));
    }
    r.add("ms_patch_mean", ms(mean(|r| Some(r.ms_patch)).unwrap_or(0.0)))
        .add("ms_pixel_mean", ms(mean(|r| Some(r.ms_pixel)).unwrap_or(0.0)))
        .add("csv", args.out.display());
    r.emit(None)
}

pub fn transfer(args: &TransferArgs) -> Result<()> {
    let flow = load_flow(&args.flow)?;
    let labels = LabelMap::load(&args.exemplar_labels)?;
    let out = transfer_labels(&flow, &labels)?;
    let warped = match &args.image {
        Some(img) => Some(warp_image(&flow, &load_image(img)?)?),
        None => None,
    };
    out.save(&args.out)?;
    let mut r = Report::default();
    r.add("width", out.width()).add("height", out.height()).add("labels", args.out.display());
    if let (Some(w), Some(path)) = (warped, &args.warped) {
        w.save_pgm(path)?;
        r.add("warped", path.display());
    }
    r.emit(None)
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let pair = synth_pair(args.kind, args.width, args.height, args.shift, args.seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = |name: &str| args.out.join(name);
    pair.test.save_pgm(path("test.pgm"))?;
    pair.exemplar.save_pgm(path("exemplar.pgm"))?;
    pair.test_labels.save(path("test_labels.pgm"))?;
    pair.exemplar_labels.save(path("exemplar_labels.pgm"))?;
    let manifest = "[[pair]]\n\
                    test = \"test.pgm\"\n\
                    exemplar = \"exemplar.pgm\"\n\
                    test_labels = \"test_labels.pgm\"\n\
                    exemplar_labels = \"exemplar_labels.pgm\"\n";
    write_atomic(&path("manifest.toml"), manifest.as_bytes())?;
    let mut r = Report::default();
    r.add("kind", args.kind)
        .add("width", args.width)
        .add("height", args.height);
    if let Some(flow) = &pair.flow {
        save_flow(flow, path("flow.uflf"))?;
        r.add("shift", format!("{},{}", flow.vectors[0].0, flow.vectors[0].1))
            .add("flow", path("flow.uflf").display());
    }
    r.add("out", args.out.display());
    r.emit(None)
}
