use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use xscale::agreement::{
    build_cube, build_pyramid, composite_surface, ProbabilityMapping, ProbabilityTable, MAX_LEVELS,
};
use xscale::grid::ascii::{parse_ascii_grid, write_ascii, AsciiCell};
use xscale::grid::{align_check, binarize, BinaryGrid, Grid, GridHeader};
use xscale::metrics::{ComparisonReport, ConfigEcho, InputDigest};
use xscale::rasterize::{load_points_csv, points_to_counts};
use xscale::synth::{expected_surface, generate_scene, SceneSpec};

use crate::{CliError, CliResult, CompareArgs, MapArg, RasterizeArgs, SynthArgs};

fn core<T>(context: impl std::fmt::Display, r: xscale::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Core {
        context: context.to_string(),
        source,
    })
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_grid<T: AsciiCell>(grid: &Grid<T>, path: &Path) -> CliResult<()> {
    let file = fs::File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let sink = std::io::BufWriter::with_capacity(1 << 20, file);
    core(path.display(), write_ascii(grid, sink).map(drop))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn rasterize(args: &RasterizeArgs) -> CliResult<()> {
    let lattice = GridHeader::new(args.ncols, args.nrows, args.xll, args.yll, args.cellsize).with_nodata(args.nodata);
    core("lattice flags", lattice.validate())?;
    let bytes = read(&args.points)?;
    let points = core(args.points.display(), load_points_csv(bytes.as_slice()))?;
    let out = core(args.points.display(), points_to_counts(&points, &lattice))?;
    write_grid(&out.grid, &args.out)?;
    eprintln!(
        "dropped {} of {} points outside the lattice (weight {})",
        out.dropped_points,
        points.len(),
        out.dropped_weight
    );
    Ok(())
}

fn resolve_mapping(arg: &MapArg) -> CliResult<ProbabilityMapping> {
    Ok(match arg {
        MapArg::Linear => ProbabilityMapping::Linear,
        MapArg::Rank => ProbabilityMapping::OrdinalRank,
        MapArg::Table(src) => {
            let text = if src.trim_start().starts_with('{') {
                src.clone()
            } else {
                let path = PathBuf::from(src);
                String::from_utf8(read(&path)?)
                    .map_err(|_| CliError::Invalid(format!("{}: table is not UTF-8", path.display())))?
            };
            let table: ProbabilityTable =
                serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("--prob-map table: {e}")))?;
            ProbabilityMapping::Table(table)
        }
    })
}

/// Reads, digests and binarizes one input, keeping only the binary grid.
fn load_binary(path: &Path, threshold: f64) -> CliResult<(BinaryGrid, InputDigest)> {
    let bytes = read(path)?;
    let digest = InputDigest {
        file: file_name(path),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    let counts = core(path.display(), parse_ascii_grid(&bytes))?;
    drop(bytes);
    let binary = core(path.display(), binarize(&counts, threshold))?;
    Ok((binary, digest))
}

fn check_levels(levels: usize) -> CliResult<()> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(CliError::Invalid(format!(
            "--levels must be between 1 and {MAX_LEVELS}, got {levels}"
        )));
    }
    Ok(())
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    if !(args.threshold > 0.0 && args.threshold.is_finite()) {
        return Err(CliError::Invalid(format!(
            "--threshold must be a positive number, got {}",
            args.threshold
        )));
    }
    if !(0.0..=1.0).contains(&args.theta) {
        return Err(CliError::Invalid(format!(
            "--theta must lie in [0, 1], got {}",
            args.theta
        )));
    }
    check_levels(args.levels)?;
    let mapping = resolve_mapping(&args.prob_map)?;
    core("--prob-map", mapping.resolve(args.levels).map(drop))?;

    let (test, test_digest) = load_binary(&args.test, args.threshold)?;
    let (reference, ref_digest) = load_binary(&args.reference, args.threshold)?;
    if let Err(m) = align_check(test.header(), reference.header()).into_result() {
        return Err(CliError::Invalid(format!(
            "{} and {} are not aligned: {}",
            args.test.display(),
            args.reference.display(),
            match m {
                xscale::Error::Misaligned(m) => m.to_string(),
                other => other.to_string(),
            }
        )));
    }

    let pyramid = core("comparison", build_pyramid(&test, &reference, args.levels))?;
    drop((test, reference));
    let cube = build_cube(&pyramid);

    create_dir(&args.out_dir)?;
    let out = |name: &str| args.out_dir.join(name);
    {
        let surface = core("composite surface", composite_surface(&cube, args.levels, &mapping))?;
        write_grid(&surface.class, &out("class.asc"))?;
        write_grid(&surface.family, &out("family.asc"))?;
        write_grid(&surface.probability, &out("probability.asc"))?;
    }
    for level in pyramid.levels() {
        write_grid(&level.coarse, &out(&format!("level{}.asc", level.index)))?;
    }

    let config = ConfigEcho {
        levels: args.levels,
        threshold: args.threshold,
        mapping,
        theta: args.theta,
        inputs: BTreeMap::from([("ref".to_string(), ref_digest), ("test".to_string(), test_digest)]),
    };
    let report = core("report", ComparisonReport::build(&pyramid, &cube, config))?;
    write_file(&out("report.json"), core("report", report.to_json())?.as_bytes())?;
    let mut csv = Vec::new();
    core("report", report.write_csv(&mut csv))?;
    write_file(&out("report.csv"), &csv)?;
    Ok(())
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    check_levels(args.levels)?;
    let bytes = read(&args.spec)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Invalid(format!("{}: spec is not UTF-8", args.spec.display())))?;
    let spec = core(args.spec.display(), SceneSpec::from_json(&text))?;
    let scene = core(args.spec.display(), spec.realize(args.levels))?;
    let (test, reference) = core("scene", generate_scene(&scene))?;
    let expected = core("scene", expected_surface(&scene, args.levels))?;

    create_dir(&args.out_dir)?;
    write_grid(&test, &args.out_dir.join("test.asc"))?;
    write_grid(&reference, &args.out_dir.join("ref.asc"))?;
    write_grid(&expected, &args.out_dir.join("expected.asc"))?;
    Ok(())
}
