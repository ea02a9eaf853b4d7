//! Command-line front end: reconstruct textures, evaluate instance
//! classification, generate synthetic scenes and summarize timings.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use livetex::eval::{self, EvalReport};
use livetex::pipeline::{self, PipelineConfig};
use livetex::synth::{self, InstanceSceneSpec, Primitive, SequenceSpec, TextureSpec};
use serde_json::json;

const REPORT_FILE: &str = "report.json";
const DETECTIONS_FILE: &str = "detections.jsonl";

#[derive(Parser)]
#[command(name = "livetex", version, about = "Incremental texture reconstruction and hue-template instance classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct a texture from a posed frame sequence.
    Reconstruct(ReconstructArgs),
    /// Classify candidates against texture hypotheses and score them.
    Eval(EvalArgs),
    /// Write a synthetic sequence or instance scene.
    Synth(SynthArgs),
    /// Summarize accumulate and lookup timings of earlier runs.
    Timings(TimingsArgs),
}

/// Options shared by commands that read a pipeline config.
#[derive(Args)]
struct ConfigArgs {
    /// Key-value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    sequence: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    texture_size: Option<usize>,
    /// `mean` or `argmax`.
    #[arg(long)]
    merge_mode: Option<String>,
    /// `first-frame` or `off`.
    #[arg(long)]
    exposure: Option<String>,
    /// Merge patches without feathering their borders.
    #[arg(long)]
    no_blend: bool,
    /// Write per-frame depth, mask and texel-validity images.
    #[arg(long)]
    dump_debug: bool,
    /// Write per-frame merge maps.
    #[arg(long)]
    dump_merge_maps: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    sequence: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    /// Template store directory.
    #[arg(long)]
    templates: PathBuf,
    /// Texture hypothesis as `id=path.png`; repeatable.
    #[arg(long = "hypothesis", value_name = "ID=PNG", required = true)]
    hypotheses: Vec<String>,
    /// Directory for `report.json` and `detections.jsonl`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// quad, cube, icosphere or torus.
    #[arg(long, default_value = "cube")]
    primitive: String,
    /// checkerboard[:cells], noise[:cells], uniform:<color>, <color> or image:<png>.
    #[arg(long)]
    texture: Option<String>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    texture_size: Option<usize>,
    #[arg(long)]
    object_size: Option<f64>,
    /// Orbit radius in meters (single-object sequences).
    #[arg(long)]
    orbit_radius: Option<f64>,
    /// Comma-separated instance textures, e.g. `red,white`; writes an
    /// instance scene with spurious candidates instead of an orbit.
    #[arg(long, value_delimiter = ',')]
    instances: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TimingsArgs {
    /// `frames.jsonl` written by `reconstruct`.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// `report.json` written by `eval`.
    #[arg(long)]
    eval: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reconstruct(a) => reconstruct(a),
        Command::Eval(a) => evaluate(a),
        Command::Synth(a) => synthesize(a),
        Command::Timings(a) => timings(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}

/// One-line JSON error: the cause chain without repeated messages and,
/// for library errors, their kind.
fn error_json(e: &anyhow::Error) -> serde_json::Value {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !parts.last().is_some_and(|prev| prev.contains(&text)) {
            parts.push(text);
        }
    }
    let kind = e.chain().find_map(|c| c.downcast_ref::<livetex::Error>()).map(livetex::Error::kind);
    json!({ "error": parts.join(": "), "kind": kind })
}

fn load_config(args: &ConfigArgs, flags: &[(&str, String)]) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for kv in &args.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("expected KEY=VALUE, got `{kv}`"))?;
        cfg.set(k, v)?;
    }
    for (k, v) in flags {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn path_flag(flags: &mut Vec<(&str, String)>, key: &'static str, p: &Option<PathBuf>) {
    if let Some(p) = p {
        flags.push((key, p.display().to_string()));
    }
}

fn reconstruct(a: ReconstructArgs) -> Result<()> {
    let mut flags = Vec::new();
    path_flag(&mut flags, "mesh", &a.mesh);
    path_flag(&mut flags, "sequence", &a.sequence);
    path_flag(&mut flags, "out", &a.out);
    if let Some(n) = a.texture_size {
        flags.push(("texture-size", n.to_string()));
    }
    if let Some(m) = a.merge_mode {
        flags.push(("merge-mode", m));
    }
    if let Some(e) = a.exposure {
        flags.push(("exposure", e));
    }
    if a.no_blend {
        flags.push(("blend", "false".into()));
    }
    if a.dump_debug {
        flags.push(("dump-debug", "true".into()));
    }
    if a.dump_merge_maps {
        flags.push(("dump-merge-maps", "true".into()));
    }
    let cfg = load_config(&a.config, &flags)?;
    if cfg.mesh.as_os_str().is_empty() || cfg.sequence.as_os_str().is_empty() {
        bail!("both a mesh and a sequence are required");
    }
    let result = pipeline::run_reconstruction(&cfg)?;
    let table = eval::report_timings(&result.frames, &[]);
    let summary = json!({
        "frames": result.frames.len(),
        "skipped": result.skipped_count(),
        "observed_texels": result.accumulator.observed_count(),
        "texture_size": result.accumulator.size(),
        "merge_mode": result.accumulator.mode().as_str(),
        "accumulate": table.accumulate,
    });
    println!("{summary}");
    Ok(())
}

fn parse_hypothesis(s: &str) -> Result<(String, PathBuf)> {
    match s.split_once('=') {
        Some((id, path)) if !id.is_empty() && !path.is_empty() => Ok((id.to_string(), PathBuf::from(path))),
        _ => bail!("expected ID=PNG for a hypothesis, got `{s}`"),
    }
}

fn evaluate(a: EvalArgs) -> Result<()> {
    let cfg = load_config(&a.config, &[])?;
    let hypotheses = a.hypotheses.iter().map(|h| parse_hypothesis(h)).collect::<Result<Vec<_>>>()?;
    let report = eval::run_detection_eval_files(
        &a.sequence,
        &a.ground_truth,
        &a.candidates,
        &a.templates,
        &hypotheses,
        &cfg.matcher,
    )?;
    if let Some(dir) = &a.out {
        write_eval(dir, &report)?;
    }
    let table = eval::report_timings(&[], &report.lookup_ms);
    let summary = json!({
        "frames": report.frames,
        "ground_truth_instances": report.ground_truth_instances,
        "candidates": report.candidates,
        "candidates_considered": report.candidates_considered,
        "assignments": report.assignments,
        "true_positives": report.true_positives,
        "true_positive_rate": report.true_positive_rate,
        "assignment_accuracy": report.assignment_accuracy,
        "lookup": table.lookup,
    });
    println!("{summary}");
    Ok(())
}

fn write_eval(dir: &Path, report: &EvalReport) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(REPORT_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(report)?).with_context(|| format!("writing {}", path.display()))?;
    let path = dir.join(DETECTIONS_FILE);
    std::fs::write(&path, eval::detections_to_jsonl(report)).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn synthesize(a: SynthArgs) -> Result<()> {
    let primitive: Primitive = a.primitive.parse()?;
    let summary = if a.instances.is_empty() {
        let mut spec = SequenceSpec {
            primitive,
            seed: a.seed,
            ..SequenceSpec::default()
        };
        if let Some(t) = &a.texture {
            spec.texture = t.parse()?;
        }
        if let Some(n) = a.frames {
            spec.frames = n;
        }
        if let Some(n) = a.texture_size {
            spec.texture_size = n;
        }
        if let Some(s) = a.object_size {
            spec.object_size = s;
        }
        if let Some(r) = a.orbit_radius {
            spec.orbit_radius = r;
        }
        synth::generate_synthetic_scene(&spec, &a.out)?
    } else {
        if a.texture.is_some() || a.orbit_radius.is_some() {
            bail!("--texture and --orbit-radius do not apply to instance scenes");
        }
        let instances = a
            .instances
            .iter()
            .map(|name| Ok((name.clone(), name.parse::<TextureSpec>()?)))
            .collect::<Result<Vec<_>>>()?;
        let mut spec = InstanceSceneSpec {
            primitive,
            instances,
            seed: a.seed,
            ..InstanceSceneSpec::default()
        };
        if let Some(n) = a.frames {
            spec.frames = n;
        }
        if let Some(n) = a.texture_size {
            spec.texture_size = n;
        }
        if let Some(s) = a.object_size {
            spec.object_size = s;
        }
        let scene = synth::render_instance_scene(&spec)?;
        synth::write_instance_scene(&scene, &a.out)?
    };
    println!(
        "{}",
        json!({
            "frames": summary.frames,
            "templates": summary.templates,
            "candidates": summary.candidates,
            "ground_truth": summary.ground_truth,
        })
    );
    Ok(())
}

fn timings(a: TimingsArgs) -> Result<()> {
    let accumulate = match &a.frames {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            eval::parse_frame_reports(&text)?
        }
        None => Vec::new(),
    };
    let lookup = match &a.eval {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            let arr = v.get("lookup_ms").and_then(|l| l.as_array()).context("report has no `lookup_ms` array")?;
            arr.iter()
                .map(|x| x.as_f64().filter(|t| *t >= 0.0).context("lookup times must be non-negative numbers"))
                .collect::<Result<Vec<_>>>()?
        }
        None => Vec::new(),
    };
    let table = eval::TimingTable {
        accumulate: eval::summarize(&accumulate),
        lookup: eval::summarize(&lookup),
    };
    if a.json {
        println!("{}", serde_json::to_string(&table)?);
    } else {
        print!("{}", table.to_text());
    }
    Ok(())
}
