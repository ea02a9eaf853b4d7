mod common;

use livetex::exposure::ExposureMode;
use livetex::fusion::{MergeMode, TextureAccumulator};
use livetex::pipeline::{run_reconstruction, PipelineConfig, Reconstructor, FRAMES_REPORT_FILE, TEXTURE_FILE};
use livetex::raster::RasterConfig;
use livetex::synth::{generate_synthetic_scene, render_sequence, Photometric, SequenceSpec, SyntheticSequence};

use common::{linf, texel_truth};

fn run(seq: &SyntheticSequence, mode: MergeMode, exposure: ExposureMode, blend: bool) -> (TextureAccumulator, Vec<usize>) {
    let raster = RasterConfig {
        texture_size: seq.texture.width(),
        ..RasterConfig::default()
    };
    let mut rec = Reconstructor::new(seq.mesh.clone(), raster, mode, exposure, blend);
    let valid = seq
        .frames
        .iter()
        .zip(&seq.poses)
        .enumerate()
        .map(|(k, (f, p))| rec.process(k, f.clone(), &seq.camera, p).unwrap().valid)
        .collect();
    (rec.into_accumulator(), valid)
}

fn fraction_within(acc: &TextureAccumulator, truth: &livetex::RgbImage, tol: f32) -> f64 {
    let n = acc.size();
    let (mut seen, mut good) = (0usize, 0usize);
    for y in 0..n {
        for x in 0..n {
            if acc.alpha(x, y) > 0.0 {
                seen += 1;
                let c = acc.color(x, y).map(|v| v as f32);
                good += usize::from(linf(c, texel_truth(truth, x, y, n)) <= tol + 1e-6);
            }
        }
    }
    assert!(seen > 0);
    good as f64 / seen as f64
}

#[test]
fn empty_sequence_gives_an_empty_texture() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SequenceSpec {
        frames: 0,
        ..SequenceSpec::default()
    };
    generate_synthetic_scene(&spec, dir.path()).unwrap();
    let cfg = PipelineConfig {
        mesh: dir.path().join("mesh.obj"),
        sequence: dir.path().to_path_buf(),
        out: dir.path().join("out"),
        raster: RasterConfig {
            texture_size: 64,
            ..RasterConfig::default()
        },
        ..PipelineConfig::default()
    };
    let result = run_reconstruction(&cfg).unwrap();
    assert!(result.frames.is_empty());
    assert!(result.accumulator.alphas().iter().all(|&a| a == 0.0));
    assert_eq!(result.accumulator.observed_count(), 0);
    assert!(cfg.out.join(TEXTURE_FILE).exists());
    assert_eq!(std::fs::read_to_string(cfg.out.join(FRAMES_REPORT_FILE)).unwrap(), "");
}

#[test]
fn mean_and_argmax_both_converge_on_noiseless_input() {
    let seq = render_sequence(&SequenceSpec::default()).unwrap();
    for mode in [MergeMode::Mean, MergeMode::Argmax] {
        let (acc, _) = run(&seq, mode, ExposureMode::Off, false);
        let frac = fraction_within(&acc, &seq.texture, 2.0 / 255.0);
        assert!(frac >= 0.95, "{mode:?}: {frac}");
    }
}

#[test]
fn exposure_changes_colors_but_not_validity() {
    let spec = SequenceSpec {
        frames: 6,
        photometric: Photometric {
            gain_jitter: 0.2,
            noise_sigma: 0.0,
        },
        ..SequenceSpec::default()
    };
    let seq = render_sequence(&spec).unwrap();
    let (off, valid_off) = run(&seq, MergeMode::Argmax, ExposureMode::Off, true);
    let (on, valid_on) = run(&seq, MergeMode::Argmax, ExposureMode::FirstFrame, true);
    assert_eq!(valid_off, valid_on);
    assert_eq!(off.observed(), on.observed());
    assert_ne!(off.texture(), on.texture());
}

#[test]
fn reconstruction_is_deterministic() {
    let spec = SequenceSpec {
        frames: 5,
        photometric: Photometric {
            gain_jitter: 0.1,
            noise_sigma: 0.02,
        },
        seed: 7,
        ..SequenceSpec::default()
    };
    let seq = render_sequence(&spec).unwrap();
    let (a, va) = run(&seq, MergeMode::Mean, ExposureMode::FirstFrame, true);
    let (b, vb) = run(&seq, MergeMode::Mean, ExposureMode::FirstFrame, true);
    assert_eq!(va, vb);
    assert_eq!(a.texture(), b.texture());
    assert_eq!(a.alphas(), b.alphas());
}

#[test]
fn frames_the_object_misses_are_skipped_not_fatal() {
    let mut seq = render_sequence(&SequenceSpec {
        frames: 3,
        ..SequenceSpec::default()
    })
    .unwrap();
    // Looking away from the object.
    seq.poses[1].translation.z = -5.0;
    let raster = RasterConfig {
        texture_size: seq.texture.width(),
        ..RasterConfig::default()
    };
    let mut rec = Reconstructor::new(seq.mesh.clone(), raster, MergeMode::Argmax, ExposureMode::Off, true);
    let reports: Vec<_> = (0..3)
        .map(|k| rec.process(k, seq.frames[k].clone(), &seq.camera, &seq.poses[k]).unwrap())
        .collect();
    assert!(reports[0].skipped.is_none());
    assert!(reports[1].skipped.is_some());
    assert_eq!(reports[1].merged, 0);
    assert!(reports[2].skipped.is_none());
}

#[test]
fn run_writes_outputs_with_and_without_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SequenceSpec {
        frames: 2,
        texture_size: 64,
        ..SequenceSpec::default()
    };
    generate_synthetic_scene(&spec, dir.path()).unwrap();
    for dump in [false, true] {
        let out = dir.path().join(format!("out_{dump}"));
        let cfg = PipelineConfig {
            mesh: dir.path().join("mesh.obj"),
            sequence: dir.path().to_path_buf(),
            out: out.clone(),
            raster: RasterConfig {
                texture_size: 64,
                ..RasterConfig::default()
            },
            dump_debug: dump,
            dump_merge_maps: dump,
            ..PipelineConfig::default()
        };
        let result = run_reconstruction(&cfg).unwrap();
        assert_eq!(result.frames.len(), 2);
        assert!(out.join(TEXTURE_FILE).exists());
        assert_eq!(out.join("depth_000000.png").exists(), dump);
        assert_eq!(out.join("merge_000001.png").exists(), dump);
    }
}
