use super::PatchFeatureMap;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// 4-neighbours within one pyramid level.
    Neighbor,
    /// Parent (coarser level) to child by spatial containment.
    ParentChild,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PyramidEdge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
}

/// One grid-cell node.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub level: usize,
    /// Cell column / row within its level.
    pub gx: usize,
    pub gy: usize,
    /// Row-major indices of the patches inside the cell, ascending.
    pub patches: Vec<usize>,
    /// Mean patch coordinate `q_i`, in patch units.
    pub centroid: (f64, f64),
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl Cell {
    /// Number of patches `z` in the cell.
    pub fn patch_count(&self) -> usize {
        self.patches.len()
    }
}

/// Spatial pyramid over the patch grid: level `l` has `2^l x 2^l` cells.
/// Nodes are numbered level by level, row-major within a level.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCellPyramid {
    pub cols: usize,
    pub rows: usize,
    pub levels: usize,
    pub cells: Vec<Cell>,
    pub edges: Vec<PyramidEdge>,
    level_offsets: Vec<usize>,
    leaf_of_patch: Vec<usize>,
}

impl GridCellPyramid {
    pub fn node_count(&self) -> usize {
        self.cells.len()
    }

    /// Node indices of one level.
    pub fn level_nodes(&self, level: usize) -> std::ops::Range<usize> {
        self.level_offsets[level]..self.level_offsets[level + 1]
    }

    /// Finest-level cell containing `patch`.
    pub fn leaf_of(&self, patch: usize) -> usize {
        self.leaf_of_patch[patch]
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.a, e.b)).collect()
    }
}

/// Cell index along one axis: `floor(i * g / len)`.
#[inline]
fn cell_coord(i: usize, g: usize, len: usize) -> usize {
    i * g / len
}

/// Builds the pyramid over the patch grid of `pf`. Patches are assigned to
/// cells with the proportional floor rule, so uneven grids still partition.
pub fn build_grid_pyramid(pf: &PatchFeatureMap, levels: usize) -> Result<GridCellPyramid> {
    GridCellPyramid::new(pf.cols, pf.rows, levels)
}

impl GridCellPyramid {
    pub fn new(cols: usize, rows: usize, levels: usize) -> Result<Self> {
        build(cols, rows, levels)
    }
}

fn build(cols: usize, rows: usize, levels: usize) -> Result<GridCellPyramid> {
    if levels == 0 {
        return Err(Error::invalid("pyramid needs at least one level"));
    }
    if levels > 16 {
        return Err(Error::invalid(format!("{levels} pyramid levels is unreasonable")));
    }
    let finest = 1usize << (levels - 1);
    if cols < finest || rows < finest {
        return Err(Error::invalid(format!(
            "{cols}x{rows} patch grid is too small for {levels} levels (needs {finest}x{finest})"
        )));
    }

    let mut cells = Vec::new();
    let mut level_offsets = vec![0];
    let mut edges = Vec::new();
    let mut leaf_of_patch = vec![0; cols * rows];

    for level in 0..levels {
        let g = 1usize << level;
        let offset = cells.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); g * g];
        for r in 0..rows {
            for c in 0..cols {
                let cell = cell_coord(r, g, rows) * g + cell_coord(c, g, cols);
                members[cell].push(r * cols + c);
            }
        }
        for (idx, patches) in members.into_iter().enumerate() {
            let (gx, gy) = (idx % g, idx / g);
            let z = patches.len() as f64;
            let (sx, sy) = patches.iter().fold((0.0, 0.0), |(sx, sy), &p| {
                (sx + (p % cols) as f64, sy + (p / cols) as f64)
            });
            let parent = (level > 0).then(|| {
                let pg = g / 2;
                level_offsets[level - 1] + (gy / 2) * pg + gx / 2
            });
            if level + 1 == levels {
                for &p in &patches {
                    leaf_of_patch[p] = offset + idx;
                }
            }
            cells.push(Cell {
                level,
                gx,
                gy,
                patches,
                centroid: (sx / z, sy / z),
                parent,
                children: Vec::new(),
            });
        }
        level_offsets.push(cells.len());

        for gy in 0..g {
            for gx in 0..g {
                let here = offset + gy * g + gx;
                if gx + 1 < g {
                    edges.push(PyramidEdge {
                        a: here,
                        b: here + 1,
                        kind: EdgeKind::Neighbor,
                    });
                }
                if gy + 1 < g {
                    edges.push(PyramidEdge {
                        a: here,
                        b: here + g,
                        kind: EdgeKind::Neighbor,
                    });
                }
            }
        }
        for node in offset..cells.len() {
            if let Some(p) = cells[node].parent {
                cells[p].children.push(node);
                edges.push(PyramidEdge {
                    a: p,
                    b: node,
                    kind: EdgeKind::ParentChild,
                });
            }
        }
    }

    Ok(GridCellPyramid {
        cols,
        rows,
        levels,
        cells,
        edges,
        level_offsets,
        leaf_of_patch,
    })
}
