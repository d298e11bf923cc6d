use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use grayspace::engine::{PreparedScenario, RunOptions, Scenario, SimulationResult};
use grayspace::export;
use grayspace::griddata::{
    cells_to_invalidate, compensate_area, ingest_grid, read_grid_csv, write_grid_csv,
    GridMetadata, HouseholdGrid,
};
use grayspace::linkbudget::{quantize_distance, separation_report, SeparationReport};
use grayspace::stats::{
    average_tables, cdf_from_map, utilization_table, Bucket, CdfCurve, CdfPoint, GraySpaceMap,
};
use grayspace::{ChannelPlan, ChannelRelation, Execution, KnowledgeConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{render_cdf, render_map, render_utilization, sanitize, OutputSet, Summary};
use crate::CommonArgs;

const DEFAULT_RESOLUTIONS: [u32; 2] = [100, 1000];

fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let path = args
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("missing `--config PATH`".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = args.seed {
        config.run.seed.0 = seed;
    }
    if let Some(workers) = args.workers {
        config.run.workers = workers;
    }
    if let Some(out) = &args.out {
        config.run.out = out.clone();
    }
    if let Some(r) = args.resolution() {
        config.grid.resolution_m = Some(r);
    }
    config.validate()?;
    Ok(config)
}

fn execution(workers: usize) -> Execution {
    match workers {
        0 => Execution::Parallel,
        n => Execution::with_workers(n),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// Reads a grid file. `resolution` and `municipal_area_km2` fill in missing
/// metadata; a resolution contradicting the file is an error.
fn read_grid(
    path: &Path,
    resolution: Option<u32>,
    municipal_area_km2: Option<f64>,
) -> Result<HouseholdGrid, CliError> {
    let (meta, records) = read_grid_csv(open(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let expected = resolution.map(f64::from);
    let resolution_m = match (meta.resolution_m, expected) {
        (Some(file), Some(want)) if (file - want).abs() > 1e-9 => {
            return Err(CliError::Data(format!(
                "{}: file resolution {file} m does not match the requested {want} m",
                path.display()
            )))
        }
        (Some(r), _) | (None, Some(r)) => r,
        (None, None) => {
            return Err(CliError::Data(format!(
                "{}: resolution not given in file metadata; pass --resolution",
                path.display()
            )))
        }
    };
    let meta = meta.overridden_by(&GridMetadata {
        municipal_area_km2,
        ..GridMetadata::default()
    });
    let dims = match (meta.rows, meta.cols) {
        (Some(r), Some(c)) => Some((r, c)),
        _ => None,
    };
    ingest_grid(records, dims, resolution_m, meta.municipal_area_km2)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn linkbudget(args: &CommonArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let criteria = config.criteria()?;
    let hata = config.hata(&criteria)?;
    let resolutions: Vec<u32> = match args.resolution() {
        Some(r) => vec![r],
        None => DEFAULT_RESOLUTIONS.to_vec(),
    };
    let mut reports: Vec<SeparationReport> = Vec::new();
    for device in config.device_profiles()? {
        let h = hata.with_base_height(device.antenna_height_m);
        reports.push(separation_report(&device, &criteria, &h)?);
    }

    let mut outputs = OutputSet::default();
    let mut stdout = String::new();
    for &res in &resolutions {
        let csv = render_linkbudget(&reports, res)?;
        let _ = writeln!(stdout, "# resolution_m = {res}");
        stdout.push_str(&csv);
        if let Some(dir) = &args.out {
            outputs.add(dir.join(format!("linkbudget-{res}m.csv")), csv);
        }
    }
    for r in &reports {
        for w in &r.warnings {
            eprintln!("warning: {}: {w}", r.device);
        }
    }
    outputs.commit()?;
    print!("{stdout}");
    Ok(())
}

fn render_linkbudget(reports: &[SeparationReport], resolution_m: u32) -> Result<String, CliError> {
    let mut s = String::from("device,relation,E_TCR,L_min,d_min_m,d_min_quantized_m\n");
    for r in reports {
        for rel in ChannelRelation::BOTH {
            let d = r.min_distance_m(rel);
            let q = quantize_distance(d, resolution_m as f64)?;
            let _ = writeln!(
                s,
                "{},{},{:.2},{:.2},{:.1},{}",
                r.device,
                rel.as_str(),
                r.tx_field_strength,
                r.min_loss(rel),
                d,
                q
            );
        }
    }
    Ok(s)
}

pub fn ingest(
    args: &CommonArgs,
    grid: Option<&Path>,
    municipal_area: Option<f64>,
) -> Result<(), CliError> {
    let config = match &args.config {
        Some(_) => Some(load_config(args)?),
        None => None,
    };
    let (resolution, path) = match (grid, &config) {
        (Some(p), _) => (args.resolution(), p.to_path_buf()),
        (None, Some(c)) => {
            let (r, p) = c.grid_path(args.resolution())?;
            (Some(r), p)
        }
        (None, None) => {
            return Err(CliError::Config("no grid given: pass a GRID path or --config".into()))
        }
    };
    let area = municipal_area.or(config.as_ref().and_then(|c| c.grid.municipal_area_km2));
    let compensate = config.as_ref().is_none_or(|c| c.grid.compensate);
    let raw = read_grid(&path, resolution, area)?;

    let mut warnings = Vec::new();
    let normalized = if compensate {
        compensate_area(&raw)?
    } else {
        warnings.push("municipal-area compensation disabled".to_string());
        raw.clone()
    };
    let invalidated = if compensate { cells_to_invalidate(&raw)? } else { 0 };
    if raw.municipal_area_km2() > raw.grid_area_km2() {
        warnings.push(format!(
            "municipal area {} km² exceeds the grid area {} km²",
            raw.municipal_area_km2(),
            raw.grid_area_km2()
        ));
    }

    let mut summary = Summary::new("ingest");
    summary
        .field("source", path.display())
        .field("rows", normalized.rows())
        .field("cols", normalized.cols())
        .field("resolution_m", normalized.resolution_m())
        .field("grid_area_km2", normalized.grid_area_km2())
        .field("municipal_area_km2", normalized.municipal_area_km2())
        .field("households", normalized.total_households())
        .field("cells_invalidated", invalidated)
        .field("valid_cells", normalized.valid_cells())
        .warnings(&warnings);

    let out = args.out.clone().or(config.map(|c| c.run.out)).unwrap_or_else(|| PathBuf::from("out"));
    let mut grid_csv = Vec::new();
    write_grid_csv(&normalized, &mut grid_csv).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut valid_csv = Vec::new();
    export::write_mask_matrix(&normalized.valid_mask(), &mut valid_csv)?;
    let mut outputs = OutputSet::default();
    outputs.add(out.join("grid.csv"), grid_csv);
    outputs.add(out.join("valid.csv"), valid_csv);
    outputs.add(out.join("ingest-summary.txt"), summary.into_string());
    outputs.commit()?;

    println!("{invalidated} cells invalidated");
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

struct Combination {
    device: String,
    knowledge: KnowledgeConfig,
    result: SimulationResult,
    realization_maps: Vec<GraySpaceMap>,
}

pub fn simulate(args: &CommonArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let criteria = config.criteria()?;
    let hata = config.hata(&criteria)?;
    let plan = config.plan(&criteria)?;
    let devices = config.device_profiles()?;
    let knowledge = config.knowledge_configs()?;
    let buckets = config.buckets()?;
    let (resolution, grid_path) = config.grid_path(None)?;
    let raw = read_grid(&grid_path, Some(resolution), config.grid.municipal_area_km2)?;
    let grid = if config.grid.compensate { compensate_area(&raw)? } else { raw.clone() };
    let invalidated = grid.invalid_cells();
    let options = RunOptions {
        realizations: config.run.realizations,
        master_seed: config.run.seed.0,
        buckets: buckets.clone(),
        disc_rule: config.disc_rule()?,
        execution: execution(config.run.workers),
    };

    let mut combos = Vec::new();
    for device in &devices {
        for k in &knowledge {
            let scenario = Scenario {
                grid: &grid,
                device,
                criteria: &criteria,
                hata: &hata,
                plan: &plan,
                knowledge: k,
            };
            let prepared = PreparedScenario::new(scenario, options.clone())?;
            let result = prepared.run()?;
            let realization_maps = if config.run.keep_realizations {
                (0..options.realizations as u64).map(|r| prepared.realization_map(r)).collect()
            } else {
                Vec::new()
            };
            combos.push(Combination {
                device: device.label.clone(),
                knowledge: k.clone(),
                result,
                realization_maps,
            });
        }
    }

    let mut outputs = OutputSet::default();
    for c in &combos {
        let dir = config.run.out.join(sanitize(&c.device)).join(c.knowledge.tag());
        for (name, bytes) in render_map(&c.result.mean_map, config.run.export)? {
            outputs.add(dir.join(name), bytes);
        }
        outputs.add(dir.join("cdf.csv"), render_cdf(&c.result.cdf));
        outputs.add(dir.join("utilization.csv"), render_utilization(&c.result.utilization));
        for (r, map) in c.realization_maps.iter().enumerate() {
            for (name, bytes) in render_map(map, config.run.export)? {
                let ext = Path::new(name).extension().and_then(|e| e.to_str()).unwrap_or("csv");
                outputs.add(dir.join("realizations").join(format!("map-{r:04}.{ext}")), bytes);
            }
        }
        let r = &c.result;
        let mean_gray = {
            let v: Vec<f64> = r.mean_map.valid_values().collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let mut summary = Summary::new("simulate");
        summary
            .field("device", &c.device)
            .field("knowledge", c.knowledge.tag())
            .field("seed", config.run.seed)
            .field("realizations", config.run.realizations)
            .field("grid", grid_path.display())
            .field("resolution_m", resolution)
            .field("rows", grid.rows())
            .field("cols", grid.cols())
            .field("valid_cells", grid.valid_cells())
            .field("cells_invalidated", invalidated)
            .field("households", grid.total_households())
            .field("d_min_co_m", format!("{:.1}", r.separation.min_distance_co_m))
            .field("d_min_adj_m", format!("{:.1}", r.separation.min_distance_adj_m))
            .field("co_radius_m", r.co_radius_m)
            .field("adjacent_radius_m", r.adjacent_radius_m)
            .field("capacity_mhz", plan.gray_space_capacity())
            .field("mean_gray_mhz", format!("{mean_gray:.3}"))
            .warnings(&r.warnings);
        summary.config_echo(&config)?;
        outputs.add(dir.join("summary.txt"), summary.into_string());
    }
    let written: Vec<String> = outputs.paths().map(|p| p.display().to_string()).collect();
    outputs.commit()?;
    for c in &combos {
        println!(
            "{} {}: {:.1}% of area with at least {} MHz",
            c.device,
            c.knowledge.tag(),
            c.result.cdf.percent_at_least(plan.channel_bandwidth_mhz()),
            plan.channel_bandwidth_mhz()
        );
    }
    println!("wrote {} files under {}", written.len(), config.run.out.display());
    Ok(())
}

fn read_map(path: &Path) -> Result<(usize, usize, Vec<Option<f64>>), CliError> {
    let mut reader = open(path)?;
    let is_rle = {
        let buf = reader
            .fill_buf()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        buf.starts_with(b"# rle")
    };
    let parsed = if is_rle { export::read_rle(reader) } else { export::read_matrix(reader) };
    parsed.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn report(args: &CommonArgs, maps: &[PathBuf], grid: Option<&Path>) -> Result<(), CliError> {
    let config = match &args.config {
        Some(_) => Some(load_config(args)?),
        None => None,
    };
    let (plan, buckets) = match &config {
        Some(c) => (c.plan(&c.criteria()?)?, c.buckets()?),
        None => (ChannelPlan::abstract_default(), Bucket::defaults()),
    };

    let mut parsed: Vec<GraySpaceMap> = Vec::new();
    for path in maps {
        let (rows, cols, values) = read_map(path)?;
        if let Some(first) = parsed.first() {
            let (r0, c0) = (first.rows, first.cols);
            if (rows, cols) != (r0, c0) {
                return Err(CliError::Data(format!(
                    "{}: {rows}x{cols} map does not match {r0}x{c0}",
                    path.display()
                )));
            }
        }
        parsed.push(GraySpaceMap {
            rows,
            cols,
            values,
            channel_bandwidth_mhz: plan.channel_bandwidth_mhz(),
            capacity_mhz: plan.gray_space_capacity(),
            realizations: 1,
            device: String::new(),
            knowledge: String::new(),
        });
    }

    let mut curves = Vec::new();
    for m in &parsed {
        let valid: Vec<bool> = m.values.iter().map(Option::is_some).collect();
        curves.push(cdf_from_map(m, &valid)?);
    }
    let cdf = average_on_union(&curves);

    let grid_source = match (grid, &config) {
        (Some(p), _) => Some((args.resolution(), p.to_path_buf(), None)),
        (None, Some(c)) => match c.grid_path(args.resolution()) {
            Ok((r, p)) => Some((Some(r), p, c.grid.municipal_area_km2)),
            Err(_) => None,
        },
        (None, None) => None,
    };
    let utilization = match grid_source {
        Some((resolution, path, area)) => {
            let first = &parsed[0];
            let valid: Vec<bool> = first.values.iter().map(Option::is_some).collect();
            let g = read_grid(&path, resolution, area)?
                .with_valid_mask(valid)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let tables = parsed
                .iter()
                .map(|m| utilization_table(m, &g, &buckets))
                .collect::<Result<Vec<_>, _>>()?;
            Some(average_tables(&tables)?)
        }
        None => None,
    };

    let out = args
        .out
        .clone()
        .or(config.map(|c| c.run.out))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut summary = Summary::new("report");
    summary.field("maps", parsed.len());
    for m in maps {
        summary.field("map", m.display());
    }
    let mut warnings = Vec::new();
    let mut outputs = OutputSet::default();
    outputs.add(out.join("cdf.csv"), render_cdf(&cdf));
    match &utilization {
        Some(t) => outputs.add(out.join("utilization.csv"), render_utilization(t)),
        None => warnings.push("no household grid given; utilization table skipped".to_string()),
    }
    summary.warnings(&warnings);
    outputs.add(out.join("summary.txt"), summary.into_string());
    outputs.commit()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", render_cdf(&cdf));
    Ok(())
}

/// Mean survival curve over the union of tabulated amounts.
fn average_on_union(curves: &[CdfCurve]) -> CdfCurve {
    let mut amounts: Vec<f64> = curves.iter().flat_map(|c| c.points.iter().map(|p| p.gray_mhz)).collect();
    amounts.sort_by(f64::total_cmp);
    amounts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let n = curves.len() as f64;
    CdfCurve {
        points: amounts
            .into_iter()
            .map(|g| CdfPoint {
                gray_mhz: g,
                percent_area: curves.iter().map(|c| c.percent_at_least(g)).sum::<f64>() / n,
            })
            .collect(),
    }
}
