use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use uflmatch::eval::BoundingBox;

/// One test/exemplar pair. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub test: PathBuf,
    pub exemplar: PathBuf,
    pub test_labels: Option<PathBuf>,
    pub exemplar_labels: Option<PathBuf>,
    pub test_box: Option<[usize; 4]>,
    pub exemplar_box: Option<[usize; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    pair: Vec<PairEntry>,
}

#[derive(Debug, Clone)]
pub struct Pair {
    pub name: String,
    pub test: PathBuf,
    pub exemplar: PathBuf,
    pub labels: Option<(PathBuf, PathBuf)>,
    pub boxes: Option<(BoundingBox, BoundingBox)>,
}

fn to_box(b: [usize; 4]) -> Result<BoundingBox> {
    Ok(BoundingBox::new(b[0], b[1], b[2], b[3])?)
}

pub fn load_manifest(path: &Path) -> Result<Vec<Pair>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ManifestFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.pair.is_empty() {
        bail!("manifest {} lists no pairs", path.display());
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &Path| -> Result<PathBuf> {
        let full = base.join(p);
        if !full.is_file() {
            bail!("manifest entry {} does not exist", full.display());
        }
        Ok(full)
    };
    file.pair
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let labels = match (&e.test_labels, &e.exemplar_labels) {
                (Some(t), Some(x)) => Some((resolve(t)?, resolve(x)?)),
                (None, None) => None,
                _ => bail!("pair {i}: give both test_labels and exemplar_labels or neither"),
            };
            let boxes = match (e.test_box, e.exemplar_box) {
                (Some(t), Some(x)) => Some((to_box(t)?, to_box(x)?)),
                (None, None) => None,
                _ => bail!("pair {i}: give both test_box and exemplar_box or neither"),
            };
            let name = e
                .test
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| i.to_string());
            Ok(Pair {
                name: format!("{i}:{name}"),
                test: resolve(&e.test)?,
                exemplar: resolve(&e.exemplar)?,
                labels,
                boxes,
            })
        })
        .collect()
}
