use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use surfoffset_bench::{data, run_suites, to_csv, BenchOptions, Suite};
use surfoffset_core::curve::{ShapeInput, SourceCurve};
use surfoffset_core::geodesic::{detect_field_inconsistency, GeodesicEngine, InitStrategy};
use surfoffset_core::morphology::{closing, dilate, erode, opening, Region};
use surfoffset_core::offset::{extract_offset, lift, OffsetResult};
use surfoffset_core::pipeline::{build_field, label, OffsetConfig};
use surfoffset_core::{io, Error, IntrinsicMesh, ParamPoint, SurfaceSpec};

use crate::{BenchArgs, CurveArgs, Format, GeodesicArgs, MeshArgs, MorphArgs, MorphOp, OffsetArgs, SuiteArg, VoronoiArgs};

const MAX_REPORTED_VIOLATIONS: usize = 100;

/// A failed command and the diagnostics to write next to its outputs.
#[derive(Debug)]
pub struct Failure {
    pub error: Error,
    pub diagnostics: Option<Value>,
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        if self.error.is_config() {
            2
        } else {
            3
        }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self { error, diagnostics: None }
    }
}

type Outcome = Result<(), Failure>;

fn input_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot read {}: {e}", path.display()))
}

fn read_input(arg: &str) -> Result<Option<String>, Error> {
    let path = Path::new(arg);
    if path.is_file() {
        fs::read_to_string(path).map(Some).map_err(|e| input_error(path, e))
    } else {
        Ok(None)
    }
}

fn load_surface(arg: &str) -> Result<SurfaceSpec, Error> {
    match read_input(arg)? {
        Some(text) => {
            serde_json::from_str(&text).map_err(|e| input_error(Path::new(arg), e))
        }
        None => data::surface(arg),
    }
}

fn load_curves(arg: &str, spec: &SurfaceSpec) -> Result<Vec<SourceCurve>, Error> {
    match read_input(arg)? {
        Some(text) => ShapeInput::from_json(&text)?.build(spec),
        None => data::curves(arg, spec),
    }
}

fn load_config(mesh: &MeshArgs, curve: Option<&CurveArgs>) -> Result<OffsetConfig, Error> {
    let mut cfg = match &mesh.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| input_error(path, e))?;
            serde_json::from_str(&text).map_err(|e| input_error(path, e))?
        }
        None => OffsetConfig::default(),
    };
    if let Some(grid) = mesh.grid {
        cfg.grid = grid;
    }
    if let Some(c) = curve {
        if let Some(n) = c.segments {
            cfg.segments = n;
        }
        if c.cutoff.is_some() {
            cfg.cutoff = c.cutoff;
        }
        if let InitStrategy::RandomWaypoints { seed, .. } = &mut cfg.field.init {
            *seed = c.seed;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_path(out: &Path, suffix: &str, ext: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(format!("{suffix}.{ext}"));
    PathBuf::from(name)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    write_file(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// Writes `{out}.diagnostics.json` for failures that are not caused by bad input.
fn guarded(out: &Path, body: impl FnOnce() -> Outcome) -> Outcome {
    let result = body();
    if let Err(f) = &result {
        if !f.error.is_config() {
            let value = f.diagnostics.clone().unwrap_or_else(|| json!({ "error": f.error.to_string() }));
            let path = output_path(out, "", "diagnostics.json");
            if let Err(e) = write_json(&path, &value) {
                tracing::error!(path = %path.display(), error = %e, "could not write diagnostics");
            }
        }
    }
    result
}

fn offset_params(result: &OffsetResult) -> Vec<(Vec<ParamPoint>, bool)> {
    result.polylines.iter().map(|pl| (pl.params(), pl.closed)).collect()
}

pub fn offset(args: &OffsetArgs) -> Outcome {
    guarded(&args.output.out, || {
        let spec = load_surface(&args.mesh.surface)?;
        let curves = load_curves(&args.curve.curve, &spec)?;
        let cfg = load_config(&args.mesh, Some(&args.curve))?;
        let max_d = args.distance.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let Some(&bad) = args.distance.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::Config(format!("offset distance must be positive, got {bad}")).into());
        }

        let stage = build_field(&spec, &curves, max_d, &cfg)?;
        if stage.field.non_converged > 0 {
            tracing::warn!(count = stage.field.non_converged, "some geodesic queries did not converge");
        }
        let violations = detect_field_inconsistency(&stage.mesh, &stage.field);
        if !violations.is_empty() {
            let error = Error::Numerical(format!("distance field violates the 1-Lipschitz bound on {} edges", violations.len()));
            let diagnostics = json!({
                "error": error.to_string(),
                "violation_count": violations.len(),
                "violations": &violations[..violations.len().min(MAX_REPORTED_VIOLATIONS)],
                "config": cfg,
                "seed": args.curve.seed,
            });
            return Err(Failure { error, diagnostics: Some(diagnostics) });
        }
        let prepared = label(stage)?;

        for &d in &args.distance {
            let result = extract_offset(&prepared.labeled, d)?;
            if result.clipped > 0 {
                tracing::warn!(d, clipped = result.clipped, "offset reaches the field cutoff or domain boundary");
            }
            let suffix = if args.distance.len() > 1 { format!("_d{d}") } else { String::new() };
            let out = &args.output.out;
            for format in &args.output.formats {
                match format {
                    Format::Obj => write_file(&output_path(out, &suffix, "obj"), &io::offset_obj(&result))?,
                    Format::Svg => {
                        write_file(&output_path(out, &suffix, "svg"), &io::svg(&spec, None, &curves, &offset_params(&result)))?
                    }
                    Format::Json => {
                        let mut value = io::offset_json(&spec, &result);
                        value["config"] = json!(cfg);
                        value["seed"] = json!(args.curve.seed);
                        write_json(&output_path(out, &suffix, "json"), &value)?
                    }
                }
            }
            println!("d = {d}: {} polylines, {} vertices", result.polylines.len(), result.vertex_count());
        }
        Ok(())
    })
}

pub fn geodesic(args: &GeodesicArgs) -> Outcome {
    guarded(&args.output.out, || {
        let spec = load_surface(&args.mesh.surface)?;
        let cfg = load_config(&args.mesh, None)?;
        let from = ParamPoint::new(args.from.0, args.from.1);
        let to = ParamPoint::new(args.to.0, args.to.1);
        let mut mesh = IntrinsicMesh::build_uniform(&spec, cfg.grid.0, cfg.grid.1)?;
        let s = mesh.insert_site(from)?;
        let t = mesh.insert_site(to)?;
        let engine = GeodesicEngine::new(&mesh);
        let mut ws = engine.workspace();
        let r = engine.geodesic(&mut ws, s, t)?;
        if !r.converged {
            tracing::warn!(iterations = r.iterations, "geodesic shortening did not converge");
        }
        let params = r.params(&mesh);
        let lifted = lift(&spec, &params, false);
        let out = &args.output.out;
        for format in &args.output.formats {
            match format {
                Format::Obj => {
                    let mut text = format!("# geodesic length {}\n", r.length);
                    for p in &lifted {
                        text.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
                    }
                    text.push('l');
                    for i in 1..=lifted.len() {
                        text.push_str(&format!(" {i}"));
                    }
                    text.push('\n');
                    write_file(&output_path(out, "", "obj"), &text)?
                }
                Format::Svg => write_file(&output_path(out, "", "svg"), &io::svg(&spec, None, &[], &[(params.clone(), false)]))?,
                Format::Json => {
                    let value = json!({
                        "surface": spec,
                        "from": [from.u, from.v],
                        "to": [to.u, to.v],
                        "grid": cfg.grid,
                        "length": r.length,
                        "converged": r.converged,
                        "iterations": r.iterations,
                        "params": params.iter().map(|&p| <[f64; 2]>::from(p)).collect::<Vec<_>>(),
                        "lifted": lifted,
                    });
                    write_json(&output_path(out, "", "json"), &value)?
                }
            }
        }
        println!("length = {}", r.length);
        Ok(())
    })
}

pub fn voronoi(args: &VoronoiArgs) -> Outcome {
    guarded(&args.output.out, || {
        let spec = load_surface(&args.mesh.surface)?;
        let curves = load_curves(&args.curve.curve, &spec)?;
        let cfg = load_config(&args.mesh, Some(&args.curve))?;
        let reach = match (args.distance, cfg.cutoff) {
            (Some(d), _) => d,
            (None, Some(c)) => c / 1.5,
            (None, None) => return Err(Error::Config("either --distance or --cutoff is required".into()).into()),
        };
        let prepared = label(build_field(&spec, &curves, reach, &cfg)?)?;
        let sites: Vec<ParamPoint> = (0..prepared.sites.len() as u32)
            .map(|i| prepared.sites.param(surfoffset_core::SiteId(i)))
            .collect();
        let out = &args.output.out;
        for format in &args.output.formats {
            match format {
                Format::Obj => write_file(&output_path(out, "", "obj"), &io::labels_obj(&spec, &prepared.labeled))?,
                Format::Svg => write_file(&output_path(out, "", "svg"), &io::svg(&spec, Some(&prepared.labeled), &curves, &[]))?,
                Format::Json => write_json(&output_path(out, "", "json"), &io::labels_json(&spec, &prepared.labeled, &sites))?,
            }
        }
        println!("{} sites, {} labelled faces", sites.len(), prepared.labeled.faces.len());
        Ok(())
    })
}

pub fn morph(args: &MorphArgs) -> Outcome {
    guarded(&args.output.out, || {
        let spec = load_surface(&args.mesh.surface)?;
        let loops = load_curves(&args.curve.curve, &spec)?;
        let cfg = load_config(&args.mesh, Some(&args.curve))?;
        let region = Region::new(loops, &spec)?;
        let op = match args.op {
            MorphOp::Dilate => dilate,
            MorphOp::Erode => erode,
            MorphOp::Opening => opening,
            MorphOp::Closing => closing,
        };
        let result = op(&spec, &region, args.distance, &cfg)?;
        let out = &args.output.out;
        for format in &args.output.formats {
            match format {
                Format::Obj => write_file(&output_path(out, "", "obj"), &io::loops_obj(&spec, result.loops()))?,
                Format::Svg => {
                    let shapes: Vec<(Vec<ParamPoint>, bool)> = result.loops().iter().map(|c| (c.samples().to_vec(), true)).collect();
                    write_file(&output_path(out, "", "svg"), &io::svg(&spec, None, region.loops(), &shapes))?
                }
                Format::Json => write_json(&output_path(out, "", "json"), &io::loops_json(&spec, result.loops()))?,
            }
        }
        println!("{} loops", result.loops().len());
        Ok(())
    })
}

pub fn bench(args: &BenchArgs) -> Outcome {
    guarded(&args.out, || {
        let mut suites = Vec::new();
        for s in &args.suite {
            let add: &[Suite] = match s {
                SuiteArg::Geodesic => &[Suite::Geodesic],
                SuiteArg::Accuracy => &[Suite::Accuracy],
                SuiteArg::Scaling => &[Suite::Scaling],
                SuiteArg::All => &[Suite::Geodesic, Suite::Accuracy, Suite::Scaling],
            };
            for s in add {
                if !suites.contains(s) {
                    suites.push(*s);
                }
            }
        }
        let opts = BenchOptions { seed: args.seed, pairs: args.pairs, levels: args.levels.clone(), ..Default::default() };
        let output = run_suites(&suites, &opts)?;
        for row in &output.rows {
            let hd = row.hd.map_or_else(|| "-".into(), |x| format!("{x:.3e}"));
            println!("{:<10} {:<20} {:>6} segments {:>7} faces d {:<5} HD {hd:<10} {:.3}s", row.suite, row.model, row.segments, row.faces, row.d, row.seconds);
        }
        write_file(&output_path(&args.out, "", "csv"), &to_csv(&output.rows)?)?;
        write_json(&output_path(&args.out, "", "json"), &json!(output))?;
        Ok(())
    })
}
