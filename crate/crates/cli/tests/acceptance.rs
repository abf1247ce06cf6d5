//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Pass criterion numbers as arguments to run a subset. Set
//! `XSCALE_BLESS=1` to rewrite the golden files instead of diffing them,
//! and `XSCALE_ACCEPTANCE_STRICT=1` to make known-unattainable criteria
//! fail the process too.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xscale::agreement::{
    build_cube, build_pyramid, switch_level, AgreementClass, ProbabilityMapping, ProbabilityTable, SwitchLevel,
};
use xscale::grid::ascii::{parse_ascii_grid, to_ascii_string, AsciiGridWriter};
use xscale::grid::{binarize, or_downsample, BinaryGrid, Count, CountGrid, Grid, GridHeader, Presence};
use xscale::metrics::confusion_matrix;
use xscale::synth::{expected_surface, generate_scene, shared_block_level, CellPair, RandomPlacement, SceneSpec};
use xscale::Family;

const RANKING_MAX: Duration = Duration::from_secs(1);
const ORACLE_SCENES: u64 = 200;
const ORACLE_MAX_SIDE: usize = 256;
const ORACLE_MAX: Duration = Duration::from_secs(30);
const RANDOM_PAIRS: u64 = 1000;
const RANDOM_MAX_SIDE: usize = 64;
const RANDOM_LEVELS: usize = 4;
const MONOTONE_MAX: Duration = Duration::from_secs(30);
const OR_SUM_GRIDS: u64 = 500;
const DETERMINISM_SIDE: usize = 2048;
const ROUND_TRIP_GRIDS: u64 = 200;
const THROUGHPUT_SIDE: usize = 10_000;
const THROUGHPUT_LEVELS: usize = 3;
const THROUGHPUT_MAX: Duration = Duration::from_secs(60);
const THROUGHPUT_MAX_RSS: u64 = 4_000_000_000;

/// Criteria that cannot hold as stated; they still run and report FAIL.
const KNOWN_UNATTAINABLE: &[u32] = &[5];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "switch-level ranking and probability ordering", switch_ranking),
        (2, "oracle equivalence on synthetic scenes", oracle_equivalence),
        (3, "trajectory monotonicity", trajectory_monotonicity),
        (4, "OR / sum-threshold equivalence", or_sum_equivalence),
        (5, "per-level percent correct non-decreasing", percent_correct_monotone),
        (6, "thread-count determinism", determinism),
        (7, "round trip and golden files", round_trip_and_golden),
        (8, "10000x10000 throughput and memory", throughput),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let strict = std::env::var_os("XSCALE_ACCEPTANCE_STRICT").is_some();

    let (mut passed, mut failed, mut blocking) = (0, Vec::new(), 0);
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id}] {name} ({secs:.2}s): {}", outcome.detail);
        if outcome.pass {
            passed += 1;
        } else {
            failed.push(id);
            if strict || !KNOWN_UNATTAINABLE.contains(&id) {
                blocking += 1;
            }
        }
    }
    let known: Vec<String> = failed
        .iter()
        .filter(|id| KNOWN_UNATTAINABLE.contains(id))
        .map(ToString::to_string)
        .collect();
    println!(
        "acceptance: {passed} passed, {} failed{}",
        failed.len(),
        if known.is_empty() {
            String::new()
        } else {
            format!(" (known unattainable: {})", known.join(", "))
        }
    );
    if blocking > 0 {
        std::process::exit(1);
    }
}

fn lattice(ncols: usize, nrows: usize) -> GridHeader {
    GridHeader::new(ncols, nrows, 0.0, 0.0, 250.0)
}

fn presence(bits: impl Iterator<Item = bool>) -> Vec<Presence> {
    bits.map(|b| if b { Presence::Present } else { Presence::Absent })
        .collect()
}

// ---------------------------------------------------------------- 1

fn switch_ranking() -> Outcome {
    use AgreementClass::{Fn as FN, Fp as FP, Tp as TP};
    let start = Instant::now();
    let rows = [
        ([FP, FP, FP, FP], Family::Fp, SwitchLevel::Never),
        ([FP, FP, FP, TP], Family::Fp, SwitchLevel::At(3)),
        ([FP, FP, TP, TP], Family::Fp, SwitchLevel::At(2)),
        ([FP, TP, TP, TP], Family::Fp, SwitchLevel::At(1)),
        ([FN, FN, FN, FN], Family::Fn, SwitchLevel::Never),
        ([FN, FN, FN, TP], Family::Fn, SwitchLevel::At(3)),
        ([FN, FN, TP, TP], Family::Fn, SwitchLevel::At(2)),
        ([FN, TP, TP, TP], Family::Fn, SwitchLevel::At(1)),
    ];
    for (traj, family, level) in &rows {
        match switch_level(traj) {
            Ok(Some(r)) if r.family == *family && r.level == *level => {}
            other => return Outcome::new(false, format!("{traj:?} ranked {other:?}, want {family:?} {level}")),
        }
    }

    // the same trajectories must come out of the pipeline
    let mut spec = SceneSpec::new(lattice(24, 16));
    let pairs = [((15, 0), (14, 1)), ((14, 9), (13, 10)), ((12, 19), (11, 20))];
    for (s, &(test, reference)) in pairs.iter().enumerate() {
        let want = SwitchLevel::At(s + 1);
        if shared_block_level(16, test, reference, 3) != want {
            return Outcome::new(false, format!("scene pair {s} does not switch at {want}"));
        }
        spec.pairs.push(CellPair { test, reference });
    }
    spec.unpaired_test.push((6, 2));
    spec.unpaired_ref.push((5, 10));
    let Ok((t, r)) = generate_scene(&spec) else {
        return Outcome::new(false, "scene generation failed");
    };
    let t = binarize(&t, 1.0).unwrap();
    let r = binarize(&r, 1.0).unwrap();
    let cube = build_cube(&build_pyramid(&t, &r, 3).unwrap());
    let cells = [
        ((6, 2), 0),
        ((12, 19), 1),
        ((14, 9), 2),
        ((15, 0), 3),
        ((5, 10), 4),
        ((11, 20), 5),
        ((13, 10), 6),
        ((14, 1), 7),
    ];
    for ((row, col), k) in cells {
        let got = cube.trajectory(row, col);
        if got != rows[k].0 {
            return Outcome::new(
                false,
                format!("pixel ({row},{col}) trajectory {got:?}, want {:?}", rows[k].0),
            );
        }
    }

    let mut mappings = vec![ProbabilityMapping::Linear, ProbabilityMapping::OrdinalRank];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let mut v: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v.dedup();
        if v.len() == 4 {
            mappings.push(ProbabilityMapping::Table(
                ProbabilityTable::new(v[..3].to_vec(), v[3]).unwrap(),
            ));
        }
    }
    for m in &mappings {
        let resolved = m.resolve(3).unwrap();
        for family in [Family::Fp, Family::Fn] {
            // lowest, low, medium, highest
            let p: Vec<f64> = rows
                .iter()
                .filter(|row| row.1 == family)
                .map(|row| resolved.probability(row.2))
                .collect();
            if !p.windows(2).all(|w| w[0] < w[1]) {
                return Outcome::new(false, format!("{m:?} orders {family:?} rows as {p:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        elapsed < RANKING_MAX,
        format!(
            "8 trajectories ranked, pipeline reproduces each, {} mappings order never < 3 < 2 < 1",
            mappings.len()
        ),
    )
}

// ---------------------------------------------------------------- 2

/// Scene `index` of the oracle batch, unrealized. Lattice sides grow with
/// the index up to the maximum.
fn oracle_scene(index: u64) -> (SceneSpec, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ce7e + index);
    let cap = 16 + (ORACLE_MAX_SIDE - 16) * index as usize / (ORACLE_SCENES as usize - 1);
    let levels = rng.gen_range(1..=4);
    let ncols = rng.gen_range(8..=cap);
    let nrows = rng.gen_range(8..=cap);
    let block = 1usize << levels;
    let blocks = ncols.div_ceil(block) * nrows.div_ceil(block);
    let mut spec = SceneSpec::new(lattice(ncols, nrows));
    spec.seed = rng.gen();
    spec.random = Some(RandomPlacement {
        pairs: rng.gen_range(1..=(blocks / 4).max(1)),
        unpaired_test: rng.gen_range(0..=blocks / 16),
        unpaired_ref: rng.gen_range(0..=blocks / 16),
        max_offset: rng.gen_range(1..=block),
    });
    (spec, levels)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (mut pixels, mut disagreements, mut mismatches) = (0usize, 0usize, 0usize);
    let mut first = None;
    for index in 0..ORACLE_SCENES {
        let (spec, levels) = oracle_scene(index);
        let scene = match spec.realize(levels) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, format!("scene {index}: {e}")),
        };
        let (t, r) = generate_scene(&scene).unwrap();
        let t = binarize(&t, 1.0).unwrap();
        let r = binarize(&r, 1.0).unwrap();
        let cube = build_cube(&build_pyramid(&t, &r, levels).unwrap());
        let expected = expected_surface(&scene, levels).unwrap();
        for (i, want) in expected.cells().iter().enumerate() {
            let got = cube.switch_at(i);
            pixels += 1;
            if want.is_some() {
                disagreements += 1;
            }
            if !matches!(&got, Ok(g) if g == want) {
                mismatches += 1;
                first.get_or_insert_with(|| format!("scene {index} pixel {i}: got {got:?}, oracle {want:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let mut detail = format!(
        "{ORACLE_SCENES} scenes, {pixels} pixels, {disagreements} disagreement pixels, {mismatches} mismatches"
    );
    if let Some(f) = first {
        detail += &format!("; first: {f}");
    }
    if elapsed >= ORACLE_MAX {
        detail += &format!("; over the {}s budget", ORACLE_MAX.as_secs());
    }
    Outcome::new(mismatches == 0 && elapsed < ORACLE_MAX, detail)
}

// ---------------------------------------------------------------- 3 and 5

fn random_pair(index: u64) -> (BinaryGrid, BinaryGrid) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xba1ed + index);
    let ncols = rng.gen_range(1..=RANDOM_MAX_SIDE);
    let nrows = rng.gen_range(1..=RANDOM_MAX_SIDE);
    let (dt, dr): (f64, f64) = (rng.gen(), rng.gen());
    let n = ncols * nrows;
    let t = presence((0..n).map(|_| rng.gen_bool(dt)));
    let r = presence((0..n).map(|_| rng.gen_bool(dr)));
    let h = lattice(ncols, nrows);
    (Grid::new(h, t).unwrap(), Grid::new(h, r).unwrap())
}

fn trajectory_monotonicity() -> Outcome {
    let start = Instant::now();
    let (mut pixels, mut violations) = (0usize, 0usize);
    let mut first = None;
    let mut traj = vec![AgreementClass::NoData; RANDOM_LEVELS + 1];
    for index in 0..RANDOM_PAIRS {
        let (t, r) = random_pair(index);
        let cube = build_cube(&build_pyramid(&t, &r, RANDOM_LEVELS).unwrap());
        for i in 0..cube.len() {
            pixels += 1;
            cube.trajectory_into(i, &mut traj);
            let tp_then_tp = match traj.iter().position(|&c| c == AgreementClass::Tp) {
                Some(s) => traj[s..].iter().all(|&c| c == AgreementClass::Tp),
                None => true,
            };
            if !tp_then_tp || switch_level(&traj).is_err() {
                violations += 1;
                first.get_or_insert_with(|| format!("pair {index} pixel {i}: {traj:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let mut detail =
        format!("{RANDOM_PAIRS} pairs at L={RANDOM_LEVELS}, {pixels} trajectories, {violations} violations");
    if let Some(f) = first {
        detail += &format!("; first: {f}");
    }
    if elapsed >= MONOTONE_MAX {
        detail += &format!("; over the {}s budget", MONOTONE_MAX.as_secs());
    }
    Outcome::new(violations == 0 && elapsed < MONOTONE_MAX, detail)
}

fn percent_correct(c: &xscale::ConfusionCounts) -> f64 {
    (c.tp + c.tn) as f64 / c.valid() as f64
}

/// A coarse cell at level s + 1 that is wrong although one of its level-s
/// children was right.
fn offending_block(pyramid: &xscale::Pyramid, s: usize) -> Option<String> {
    let fine = &pyramid.level(s).coarse;
    let coarse = &pyramid.level(s + 1).coarse;
    for crow in 0..coarse.nrows() {
        for ccol in 0..coarse.ncols() {
            let parent = *coarse.get(crow, ccol).unwrap();
            if !parent.is_misclassified() {
                continue;
            }
            let up = coarse.nrows() - 1 - crow;
            let mut children = Vec::new();
            for u in [2 * up + 1, 2 * up] {
                for c in [2 * ccol, 2 * ccol + 1] {
                    if u < fine.nrows() && c < fine.ncols() {
                        children.push(*fine.get(fine.nrows() - 1 - u, c).unwrap());
                    }
                }
            }
            if children.iter().any(|c| !c.is_misclassified()) {
                let names: Vec<String> = children.iter().map(ToString::to_string).collect();
                return Some(format!(
                    "block ({crow},{ccol}) children [{}] -> {parent}",
                    names.join(" ")
                ));
            }
        }
    }
    None
}

fn percent_correct_monotone() -> Outcome {
    let (mut steps, mut drops, mut pairs_with_drop) = (0usize, 0usize, 0usize);
    let mut first = None;
    for index in 0..RANDOM_PAIRS {
        let (t, r) = random_pair(index);
        let pyramid = build_pyramid(&t, &r, RANDOM_LEVELS).unwrap();
        let pc: Vec<f64> = pyramid
            .levels()
            .iter()
            .map(|l| percent_correct(&confusion_matrix(&l.coarse)))
            .collect();
        let mut dropped = false;
        for s in 0..RANDOM_LEVELS {
            steps += 1;
            if pc[s + 1] < pc[s] {
                drops += 1;
                dropped = true;
                first.get_or_insert_with(|| {
                    format!(
                        "pair {index} ({}x{}) level {s}->{}: {:.4} -> {:.4}, {}",
                        t.ncols(),
                        t.nrows(),
                        s + 1,
                        pc[s],
                        pc[s + 1],
                        offending_block(&pyramid, s).unwrap_or_else(|| "no single offending block".into())
                    )
                });
            }
        }
        pairs_with_drop += usize::from(dropped);
    }
    let mut detail = format!("{drops} of {steps} level steps decrease, in {pairs_with_drop} of {RANDOM_PAIRS} pairs");
    if let Some(f) = first {
        detail += &format!("; first: {f}");
    }
    Outcome::new(drops == 0, detail)
}

// ---------------------------------------------------------------- 4

fn random_counts(rng: &mut ChaCha8Rng, max_side: usize) -> CountGrid {
    let ncols = rng.gen_range(1..=max_side);
    let nrows = rng.gen_range(1..=max_side);
    let zero: f64 = rng.gen();
    let values = (0..ncols * nrows)
        .map(|_| {
            if rng.gen_bool(zero) {
                0.0
            } else {
                f64::from(rng.gen_range(1u8..=5))
            }
        })
        .collect();
    CountGrid::from_values(lattice(ncols, nrows), values).unwrap()
}

/// Block sums over lower-left anchored 2x2 blocks.
fn sum_downsample(g: &CountGrid) -> CountGrid {
    let h = g.header();
    let (cn, cr) = (h.ncols.div_ceil(2), h.nrows.div_ceil(2));
    let mut sums = vec![0.0; cn * cr];
    for row in 0..h.nrows {
        for col in 0..h.ncols {
            let crow = cr - 1 - (h.nrows - 1 - row) / 2;
            sums[crow * cn + col / 2] += g.get(row, col).unwrap().value().unwrap();
        }
    }
    let header = GridHeader::new(cn, cr, h.xll, h.yll, h.cellsize * 2.0).with_nodata(h.nodata_value);
    CountGrid::from_values(header, sums).unwrap()
}

fn or_sum_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a5);
    let mut cells = 0;
    for index in 0..OR_SUM_GRIDS {
        let g = random_counts(&mut rng, 64);
        let lhs = or_downsample(&binarize(&g, 1.0).unwrap(), 2).unwrap();
        let rhs = binarize(&sum_downsample(&g), 1.0).unwrap();
        if lhs != rhs {
            let at = lhs.cells().iter().zip(rhs.cells()).position(|(a, b)| a != b);
            return Outcome::new(false, format!("grid {index}: first differing coarse cell {at:?}"));
        }
        cells += lhs.cells().len();
    }
    Outcome::new(true, format!("{OR_SUM_GRIDS} grids, {cells} coarse cells identical"))
}

// ---------------------------------------------------------------- 6 and 8

/// Streams a test/reference pair to disk: clustered presence in the test
/// surface, and a reference that mostly repeats it one column to the right.
fn write_pair(side: usize, seed: u64, test: &Path, reference: &Path) -> xscale::Result<()> {
    let header = lattice(side, side);
    let open = |p: &Path| -> xscale::Result<_> { Ok(BufWriter::with_capacity(1 << 20, fs::File::create(p)?)) };
    let mut wt = AsciiGridWriter::new(open(test)?, header)?;
    let mut wr = AsciiGridWriter::new(open(reference)?, header)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trow = vec![Count::new(0.0); side];
    let mut rrow = vec![Count::new(0.0); side];
    for row in 0..side {
        let density = if (row / 64) % 3 == 0 { 0.3 } else { 0.03 };
        for c in trow.iter_mut() {
            *c = Count::new(if rng.gen_bool(density) {
                f64::from(rng.gen_range(1u8..=9))
            } else {
                0.0
            });
        }
        for col in 0..side {
            rrow[col] = if col > 0 && rng.gen_bool(0.9) {
                trow[col - 1]
            } else {
                Count::new(if rng.gen_bool(0.05) { 1.0 } else { 0.0 })
            };
        }
        if row % 997 == 0 {
            rrow[0] = Count::NODATA;
        }
        wt.write_row(&trow)?;
        wr.write_row(&rrow)?;
    }
    wt.finish()?;
    wr.finish()?;
    Ok(())
}

/// `global` flags go before the subcommand; `levels` after it.
fn run_compare(test: &Path, reference: &Path, out: &Path, global: &[&str], levels: &str) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xscale"));
    cmd.args(global).arg("compare").arg("--levels").arg(levels);
    cmd.arg("--test")
        .arg(test)
        .arg("--ref")
        .arg(reference)
        .arg("--out-dir")
        .arg(out);
    let o = cmd.output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!(
            "compare exited {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    if !o.stdout.is_empty() {
        return Err("compare wrote to stdout".into());
    }
    Ok(())
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (t, r) = (dir.path().join("test.asc"), dir.path().join("ref.asc"));
    if let Err(e) = write_pair(DETERMINISM_SIDE, 6, &t, &r) {
        return Outcome::new(false, format!("input generation: {e}"));
    }
    let many = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .max(4)
        .to_string();
    let runs = [
        ("one", vec!["--threads", "1"]),
        ("many", vec!["--threads", many.as_str()]),
        ("default", vec![]),
    ];
    let mut outs = Vec::new();
    for (name, extra) in &runs {
        let out = dir.path().join(name);
        if let Err(e) = run_compare(&t, &r, &out, extra, "3") {
            return Outcome::new(false, format!("{name}: {e}"));
        }
        outs.push(out);
    }
    let reference = sorted_files(&outs[0]);
    let mut bytes = 0;
    for other in &outs[1..] {
        let files = sorted_files(other);
        if files.len() != reference.len() {
            return Outcome::new(false, format!("{} files vs {}", files.len(), reference.len()));
        }
        for (a, b) in reference.iter().zip(&files) {
            let (x, y) = (fs::read(a).unwrap(), fs::read(b).unwrap());
            if x != y {
                return Outcome::new(false, format!("{} differs between thread counts", b.display()));
            }
            bytes += x.len();
        }
    }
    Outcome::new(
        true,
        format!(
            "{} files ({bytes} bytes) identical across 1, {many} and default threads",
            reference.len()
        ),
    )
}

#[cfg(target_os = "linux")]
fn children_peak_rss() -> Option<u64> {
    // SAFETY: getrusage only writes the struct passed to it.
    let usage = unsafe {
        let mut u: libc::rusage = std::mem::zeroed();
        (libc::getrusage(libc::RUSAGE_CHILDREN, &mut u) == 0).then_some(u)
    }?;
    Some(usage.ru_maxrss as u64 * 1024)
}

#[cfg(target_os = "macos")]
fn children_peak_rss() -> Option<u64> {
    // SAFETY: getrusage only writes the struct passed to it.
    let usage = unsafe {
        let mut u: libc::rusage = std::mem::zeroed();
        (libc::getrusage(libc::RUSAGE_CHILDREN, &mut u) == 0).then_some(u)
    }?;
    Some(usage.ru_maxrss as u64)
}

#[cfg(not(any(target_os = "linux", target_os = "macos")))]
fn children_peak_rss() -> Option<u64> {
    None
}

fn throughput() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (t, r) = (dir.path().join("test.asc"), dir.path().join("ref.asc"));
    let gen = Instant::now();
    if let Err(e) = write_pair(THROUGHPUT_SIDE, 8, &t, &r) {
        return Outcome::new(false, format!("input generation: {e}"));
    }
    let gen = gen.elapsed();
    let out = dir.path().join("out");
    let levels = THROUGHPUT_LEVELS.to_string();
    let start = Instant::now();
    if let Err(e) = run_compare(&t, &r, &out, &[], &levels) {
        return Outcome::new(false, e);
    }
    let elapsed = start.elapsed();
    let rss = children_peak_rss();
    let rss_ok = rss.map_or(true, |b| b < THROUGHPUT_MAX_RSS);
    let detail = format!(
        "compare {:.1}s (limit {}s), peak RSS {} (limit {:.1} GB); inputs generated in {:.1}s",
        elapsed.as_secs_f64(),
        THROUGHPUT_MAX.as_secs(),
        rss.map_or_else(|| "unmeasured".into(), |b| format!("{:.2} GB", b as f64 / 1e9)),
        THROUGHPUT_MAX_RSS as f64 / 1e9,
        gen.as_secs_f64()
    );
    Outcome::new(elapsed < THROUGHPUT_MAX && rss_ok, detail)
}

// ---------------------------------------------------------------- 7

fn round_trip() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7017);
    let mut cells = 0;
    for index in 0..ROUND_TRIP_GRIDS {
        let ncols = rng.gen_range(1..=64);
        let nrows = rng.gen_range(1..=64);
        let nodata = if rng.gen_bool(0.5) { -9999.0 } else { -1.0 };
        let big = rng.gen_bool(0.3);
        let values: Vec<f64> = (0..ncols * nrows)
            .map(|_| match rng.gen_range(0..10) {
                0 => f64::NAN,
                _ if big => rng.gen_range(0u64..1 << 53) as f64,
                _ => f64::from(rng.gen_range(0u32..1000)),
            })
            .collect();
        let header = GridHeader::new(ncols, nrows, rng.gen_range(-1e6..1e6), rng.gen_range(-1e6..1e6), 250.0)
            .with_nodata(nodata);
        let g = Grid::new(
            header,
            values
                .into_iter()
                .map(|v| if v.is_nan() { Count::NODATA } else { Count::new(v) })
                .collect(),
        )
        .unwrap();
        let text = to_ascii_string(&g);
        let back = parse_ascii_grid(text.as_bytes()).map_err(|e| format!("grid {index}: {e}"))?;
        if back.header() != g.header() || back.cells() != g.cells() {
            return Err(format!("grid {index}: cells or header changed"));
        }
        if to_ascii_string(&back) != text {
            return Err(format!("grid {index}: re-emitted text differs"));
        }
        cells += g.cells().len();
    }
    Ok(cells)
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

fn xscale(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_xscale"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

/// Runs synth and compare on the first oracle scene and lists the
/// produced files relative to `root`.
fn golden_run(root: &Path) -> Result<Vec<PathBuf>, String> {
    let (spec, levels) = oracle_scene(0);
    let levels = levels.to_string();
    let spec_path = root.join("spec.json");
    fs::create_dir_all(root).map_err(|e| e.to_string())?;
    fs::write(&spec_path, spec.to_json().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let scene = root.join("scene");
    let compare = root.join("compare");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    xscale(&[
        "synth",
        "--spec",
        &s(&spec_path),
        "--levels",
        &levels,
        "--out-dir",
        &s(&scene),
    ])?;
    xscale(&[
        "compare",
        "--test",
        &s(&scene.join("test.asc")),
        "--ref",
        &s(&scene.join("ref.asc")),
        "--levels",
        &levels,
        "--out-dir",
        &s(&compare),
    ])?;
    let mut files = vec![PathBuf::from("spec.json")];
    for sub in ["scene", "compare"] {
        for f in sorted_files(&root.join(sub)) {
            files.push(Path::new(sub).join(f.file_name().unwrap()));
        }
    }
    Ok(files)
}

fn round_trip_and_golden() -> Outcome {
    let cells = match round_trip() {
        Ok(c) => c,
        Err(e) => return Outcome::new(false, format!("round trip: {e}")),
    };
    let golden = golden_dir();
    if std::env::var_os("XSCALE_BLESS").is_some() {
        let _ = fs::remove_dir_all(&golden);
        return match golden_run(&golden) {
            Ok(files) => Outcome::new(true, format!("blessed {} golden files", files.len())),
            Err(e) => Outcome::new(false, e),
        };
    }
    let dir = tempfile::tempdir().unwrap();
    let files = match golden_run(dir.path()) {
        Ok(f) => f,
        Err(e) => return Outcome::new(false, e),
    };
    for rel in &files {
        let fresh = fs::read(dir.path().join(rel)).unwrap();
        match fs::read(golden.join(rel)) {
            Ok(checked_in) if checked_in == fresh => {}
            Ok(_) => return Outcome::new(false, format!("{} differs from golden", rel.display())),
            Err(e) => return Outcome::new(false, format!("golden {}: {e}", rel.display())),
        }
    }
    let checked_in = ["scene", "compare"]
        .iter()
        .map(|sub| fs::read_dir(golden.join(sub)).map_or(0, |d| d.count()))
        .sum::<usize>()
        + 1;
    if checked_in != files.len() {
        return Outcome::new(
            false,
            format!("{checked_in} golden files, run produced {}", files.len()),
        );
    }
    Outcome::new(
        true,
        format!(
            "{ROUND_TRIP_GRIDS} random grids ({cells} cells) round-trip exactly; {} golden files match",
            files.len()
        ),
    )
}
