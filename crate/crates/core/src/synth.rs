//! Synthetic test/reference scenes with controlled positional offsets, and
//! an oracle for the level at which each offset pair becomes a true
//! positive.
//!
//! Cells are `(row, col)` with row 0 at the top. Blocks are anchored at
//! the lower-left corner like the aggregation pyramid, so block rows are
//! counted from the bottom row.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agreement::{Family, SwitchLevel, SwitchResult};
use crate::error::{Error, Result};
use crate::grid::ascii::AsciiCell;
use crate::grid::{Count, CountGrid, Grid, GridHeader};

pub type Cell = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPair {
    pub test: Cell,
    #[serde(rename = "ref")]
    pub reference: Cell,
}

/// Extra items placed at random, each in level-L blocks of its own.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomPlacement {
    pub pairs: usize,
    pub unpaired_test: usize,
    pub unpaired_ref: usize,
    /// Largest row/column offset between the cells of a random pair.
    pub max_offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub lattice: GridHeader,
    #[serde(default)]
    pub pairs: Vec<CellPair>,
    #[serde(default)]
    pub unpaired_test: Vec<Cell>,
    #[serde(default)]
    pub unpaired_ref: Vec<Cell>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomPlacement>,
}

const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Level-`s` block of `cell`, as (block row from bottom, block col).
pub fn block_of(nrows: usize, cell: Cell, s: usize) -> (usize, usize) {
    ((nrows - 1 - cell.0) >> s, cell.1 >> s)
}

/// Smallest s in 1..=L at which `a` and `b` fall in one block, or never.
/// For `a == b` this is level 1, although such a pair is TP from level 0.
pub fn shared_block_level(nrows: usize, a: Cell, b: Cell, levels: usize) -> SwitchLevel {
    let up_a = (nrows - 1 - a.0, a.1);
    let up_b = (nrows - 1 - b.0, b.1);
    for s in 1..=levels {
        let size = 1usize << s;
        if up_a.0 / size == up_b.0 / size && up_a.1 / size == up_b.1 / size {
            return SwitchLevel::At(s);
        }
    }
    SwitchLevel::Never
}

struct Item {
    label: String,
    cells: Vec<Cell>,
}

impl SceneSpec {
    pub fn new(lattice: GridHeader) -> Self {
        Self {
            lattice,
            pairs: Vec::new(),
            unpaired_test: Vec::new(),
            unpaired_ref: Vec::new(),
            seed: 0,
            random: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    fn items(&self) -> Vec<Item> {
        let pairs = self.pairs.iter().enumerate().map(|(i, p)| Item {
            label: format!("pair {i}"),
            cells: vec![p.test, p.reference],
        });
        let tests = self.unpaired_test.iter().enumerate().map(|(i, &c)| Item {
            label: format!("unpaired_test {i}"),
            cells: vec![c],
        });
        let refs = self.unpaired_ref.iter().enumerate().map(|(i, &c)| Item {
            label: format!("unpaired_ref {i}"),
            cells: vec![c],
        });
        pairs.chain(tests).chain(refs).collect()
    }

    fn check_bounds(&self) -> Result<()> {
        self.lattice.validate()?;
        let (nrows, ncols) = (self.lattice.nrows, self.lattice.ncols);
        for item in self.items() {
            for &(row, col) in &item.cells {
                if row >= nrows || col >= ncols {
                    return Err(Error::CellOutOfBounds {
                        role: item.label,
                        row,
                        col,
                        nrows,
                        ncols,
                    });
                }
            }
        }
        Ok(())
    }

    /// Every level-L block holds cells of at most one item.
    pub fn check_isolation(&self, levels: usize) -> Result<()> {
        self.check_bounds()?;
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        let items = self.items();
        for (i, item) in items.iter().enumerate() {
            for &cell in &item.cells {
                let block = block_of(self.lattice.nrows, cell, levels);
                match owner.get(&block) {
                    Some(&j) if j != i => {
                        return Err(Error::IsolationViolation {
                            first: items[j].label.clone(),
                            second: item.label.clone(),
                            level: levels,
                            block,
                        })
                    }
                    Some(_) => {}
                    None => {
                        owner.insert(block, i);
                    }
                }
            }
        }
        Ok(())
    }

    /// Appends the seeded random placements, each in level-L blocks not used
    /// by any other item, and returns a spec with only explicit cells.
    pub fn realize(&self, levels: usize) -> Result<SceneSpec> {
        self.check_isolation(levels)?;
        let mut out = SceneSpec {
            random: None,
            ..self.clone()
        };
        let Some(plan) = self.random else {
            return Ok(out);
        };
        let (nrows, ncols) = (self.lattice.nrows, self.lattice.ncols);
        let mut used: std::collections::HashSet<(usize, usize)> = self
            .items()
            .iter()
            .flat_map(|it| it.cells.iter().map(|&c| block_of(nrows, c, levels)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let offset = plan.max_offset as i64;

        let mut place = |rng: &mut ChaCha8Rng, paired: bool, what: &str| -> Result<Vec<Cell>> {
            for _ in 0..PLACEMENT_ATTEMPTS {
                let a = (rng.gen_range(0..nrows), rng.gen_range(0..ncols));
                let mut cells = vec![a];
                if paired {
                    let r = a.0 as i64 + rng.gen_range(-offset..=offset);
                    let c = a.1 as i64 + rng.gen_range(-offset..=offset);
                    if r < 0 || c < 0 || r >= nrows as i64 || c >= ncols as i64 {
                        continue;
                    }
                    cells.push((r as usize, c as usize));
                }
                let blocks: Vec<_> = cells.iter().map(|&c| block_of(nrows, c, levels)).collect();
                if blocks.iter().any(|b| used.contains(b)) {
                    continue;
                }
                used.extend(blocks);
                return Ok(cells);
            }
            Err(Error::Placement(format!(
                "no free level-{levels} block left for {what} after {PLACEMENT_ATTEMPTS} attempts"
            )))
        };

        for i in 0..plan.pairs {
            let cells = place(&mut rng, true, &format!("random pair {i}"))?;
            out.pairs.push(CellPair {
                test: cells[0],
                reference: cells[1],
            });
        }
        for i in 0..plan.unpaired_test {
            let cells = place(&mut rng, false, &format!("random unpaired_test {i}"))?;
            out.unpaired_test.push(cells[0]);
        }
        for i in 0..plan.unpaired_ref {
            let cells = place(&mut rng, false, &format!("random unpaired_ref {i}"))?;
            out.unpaired_ref.push(cells[0]);
        }
        Ok(out)
    }
}

/// Count grids with 1 added at every test (resp. reference) cell.
pub fn generate_scene(spec: &SceneSpec) -> Result<(CountGrid, CountGrid)> {
    if spec.random.is_some() {
        return Err(Error::Placement("random placement must be realized first".into()));
    }
    spec.check_bounds()?;
    let header = spec.lattice;
    let mut test = vec![0.0f64; header.len()];
    let mut reference = vec![0.0f64; header.len()];
    let at = |(r, c): Cell| r * header.ncols + c;
    for p in &spec.pairs {
        test[at(p.test)] += 1.0;
        reference[at(p.reference)] += 1.0;
    }
    for &c in &spec.unpaired_test {
        test[at(c)] += 1.0;
    }
    for &c in &spec.unpaired_ref {
        reference[at(c)] += 1.0;
    }
    let to_grid = |v: Vec<f64>| Grid::new(header, v.into_iter().map(Count::new).collect());
    Ok((to_grid(test)?, to_grid(reference)?))
}

/// Expected switch result per pixel; `None` where no disagreement is expected.
pub type ExpectedGrid = Grid<Option<SwitchResult>>;

/// File code of an expected result: 0 for none, otherwise
/// 10 × family class code (FP=3, FN=4) + switch level, with 0 for never.
pub fn expected_code(result: Option<SwitchResult>) -> u32 {
    match result {
        None => 0,
        Some(r) => {
            let family = match r.family {
                Family::Fp => 30,
                Family::Fn => 40,
            };
            family
                + match r.level {
                    SwitchLevel::At(s) => s as u32,
                    SwitchLevel::Never => 0,
                }
        }
    }
}

/// Inverse of [`expected_code`].
pub fn decode_expected(code: u32) -> Option<Option<SwitchResult>> {
    if code == 0 {
        return Some(None);
    }
    let family = match code / 10 {
        3 => Family::Fp,
        4 => Family::Fn,
        _ => return None,
    };
    let level = match code % 10 {
        0 => SwitchLevel::Never,
        s => SwitchLevel::At(s as usize),
    };
    Some(Some(SwitchResult { family, level }))
}

impl AsciiCell for Option<SwitchResult> {
    fn write_token(self, _nodata: &[u8], out: &mut Vec<u8>) {
        let mut buf = itoa::Buffer::new();
        out.extend_from_slice(buf.format(expected_code(self)).as_bytes());
    }
}

/// Switch results derived solely from [`shared_block_level`]; requires
/// mutually isolated items so each pair can be judged on its own.
pub fn expected_surface(spec: &SceneSpec, levels: usize) -> Result<ExpectedGrid> {
    if spec.random.is_some() {
        return Err(Error::Placement("random placement must be realized first".into()));
    }
    spec.check_isolation(levels)?;
    let nrows = spec.lattice.nrows;
    let mut grid = Grid::filled(spec.lattice, None)?;
    for p in &spec.pairs {
        if p.test == p.reference {
            continue;
        }
        let level = shared_block_level(nrows, p.test, p.reference, levels);
        grid.set(
            p.test.0,
            p.test.1,
            Some(SwitchResult {
                family: Family::Fp,
                level,
            }),
        );
        grid.set(
            p.reference.0,
            p.reference.1,
            Some(SwitchResult {
                family: Family::Fn,
                level,
            }),
        );
    }
    for &(r, c) in &spec.unpaired_test {
        grid.set(
            r,
            c,
            Some(SwitchResult {
                family: Family::Fp,
                level: SwitchLevel::Never,
            }),
        );
    }
    for &(r, c) in &spec.unpaired_ref {
        grid.set(
            r,
            c,
            Some(SwitchResult {
                family: Family::Fn,
                level: SwitchLevel::Never,
            }),
        );
    }
    Ok(grid)
}
