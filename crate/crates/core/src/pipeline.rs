//! End-to-end captioning: one sequence, or a batch of files written to disk.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{aggregate, select_motioncodes, AggregatedMotion, SalienceStats};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::motion::{normalize_sequence, parse_motion_file, MotionFormat, MotionSequence};
use crate::motioncode::{build_motioncodes, Motioncode};
use crate::noise::{derive_caption_seed, domain_rng, keyed_rng, Domain, NoiseConfig};
use crate::posecode::extract_posecode_timelines;
use crate::textgen::{plan_injections, render_caption, select_subject, CaptionDocument, ItemInjection, SubjectChoice, TemplateLibrary};

#[derive(Serialize)]
struct TimelineDump<'a> {
    index: usize,
    instance: String,
    categories: &'a [Option<i32>],
}

/// Everything computed for one caption, in a stable serialized form.
#[derive(Serialize)]
struct Dump<'a> {
    seed: u64,
    fps: f64,
    frames: usize,
    normalization_warning: Option<&'a str>,
    timelines: Vec<TimelineDump<'a>>,
    motioncodes: &'a [Motioncode],
    selected: &'a [Motioncode],
    subjects: &'a [Option<SubjectChoice>],
    aggregation: &'a [AggregatedMotion],
    injections: &'a [ItemInjection],
}

/// A validated configuration with its template library and rarity table loaded.
#[derive(Debug, Clone)]
pub struct Captioner {
    config: PipelineConfig,
    templates: TemplateLibrary,
    stats: SalienceStats,
}

impl Captioner {
    pub fn new(config: PipelineConfig) -> Result<Captioner> {
        config.validate()?;
        let templates = config.templates()?;
        let stats = SalienceStats::static_table(&config.selection);
        Ok(Captioner {
            config,
            templates,
            stats,
        })
    }

    pub fn with_stats(mut self, stats: SalienceStats) -> Captioner {
        self.stats = stats;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Captions one sequence with an explicit caption seed. The dump is
    /// attached when `emit_intermediate` is set.
    pub fn caption(&self, seq: &MotionSequence, seed: u64) -> CaptionDocument {
        let config = &self.config;
        let normalized = normalize_sequence(seq);
        let seq = &normalized.sequence;
        let noise = NoiseConfig {
            seed,
            ..config.noise.clone()
        };
        let timelines =
            extract_posecode_timelines(seq, &config.posecode.instances, &config.posecode.thresholds, &noise);
        let codes = build_motioncodes(&timelines, seq, &config.motioncode, &noise);
        let selected = select_motioncodes(&codes, &self.stats, &config.selection);
        let subjects: Vec<Option<SubjectChoice>> = selected
            .iter()
            .map(|c| select_subject(c, seq, config.textgen.subject_threshold))
            .collect();
        let items = aggregate(
            &selected,
            &subjects,
            &config.skeleton,
            &config.aggregation,
            seq.fps(),
            &mut domain_rng(seed, Domain::Aggregation),
        );
        let injections = plan_injections(
            &items,
            &selected,
            &timelines,
            config.textgen.start_injection_probability,
            config.textgen.end_injection_probability,
            &mut keyed_rng(seed, Domain::Rendering, 1, 0),
        );
        let mut doc = render_caption(
            &items,
            &injections,
            &self.templates,
            seed,
            &mut keyed_rng(seed, Domain::Rendering, 0, 0),
        );
        if config.emit_intermediate {
            let dump = Dump {
                seed,
                fps: seq.fps(),
                frames: seq.len(),
                normalization_warning: normalized.warning.as_deref(),
                timelines: timelines
                    .iter()
                    .map(|t| TimelineDump {
                        index: t.instance_index,
                        instance: t.instance.to_string(),
                        categories: &t.categories,
                    })
                    .collect(),
                motioncodes: &codes,
                selected: &selected,
                subjects: &subjects,
                aggregation: &items,
                injections: &injections,
            };
            doc.intermediate = Some(serde_json::to_value(&dump).expect("dump serializes"));
        }
        doc
    }

    /// The `captions_per_motion` captions of the `input`-th sequence of a batch.
    pub fn caption_input(&self, seq: &MotionSequence, input: usize) -> Vec<CaptionDocument> {
        (0..self.config.captions_per_motion)
            .map(|k| self.caption(seq, derive_caption_seed(self.config.seed, input as u64, k as u64)))
            .collect()
    }
}

/// Single-call convenience over [`Captioner`].
pub fn caption_sequence(seq: &MotionSequence, config: &PipelineConfig, seed: u64) -> Result<CaptionDocument> {
    Ok(Captioner::new(config.clone())?.caption(seq, seed))
}

/// Format from an explicit choice or the file extension.
pub fn infer_format(path: &Path, explicit: Option<MotionFormat>) -> Result<MotionFormat> {
    if let Some(f) = explicit {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(MotionFormat::CanonicalJson),
        Some("csv") => Ok(MotionFormat::FlatCsv),
        _ => Err(Error::Invalid(format!(
            "{}: cannot tell the motion format from the extension; pass --format",
            path.display()
        ))),
    }
}

pub fn read_motion(path: &Path, format: Option<MotionFormat>) -> Result<MotionSequence> {
    let format = infer_format(path, format)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_motion_file(&bytes, format).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })
}

/// Motion files directly inside `dir`, sorted by name.
pub fn motion_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "csv")))
        .collect();
    files.sort();
    Ok(files)
}

/// Rarity table from every motioncode detected, without noise, in the files of `dir`.
pub fn corpus_stats(dir: &Path, config: &PipelineConfig, format: Option<MotionFormat>) -> Result<SalienceStats> {
    let files = motion_files(dir)?;
    let noise = NoiseConfig::off();
    let per_file: Vec<Vec<Motioncode>> = files
        .par_iter()
        .filter_map(|path| match read_motion(path, format) {
            Ok(seq) => {
                let seq = normalize_sequence(&seq).sequence;
                let timelines =
                    extract_posecode_timelines(&seq, &config.posecode.instances, &config.posecode.thresholds, &noise);
                Some(build_motioncodes(&timelines, &seq, &config.motioncode, &noise))
            }
            Err(e) => {
                warn!("skipping corpus file: {e}");
                None
            }
        })
        .collect();
    info!("corpus statistics from {} of {} files", per_file.len(), files.len());
    Ok(SalienceStats::from_corpus(per_file.iter().flatten(), &config.selection))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputError {
    pub input: PathBuf,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub written: Vec<PathBuf>,
    pub errors: Vec<InputError>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.errors.is_empty()
    }
}

fn write_captions(out: &Path, stem: &str, docs: &[CaptionDocument]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (k, doc) in docs.iter().enumerate() {
        let txt = out.join(format!("{stem}.{k}.txt"));
        fs::write(&txt, format!("{}\n", doc.text)).map_err(|e| Error::io(&txt, e))?;
        written.push(txt);
        if doc.intermediate.is_some() {
            let dump = out.join(format!("{stem}.{k}.dump"));
            let mut body = serde_json::to_string_pretty(doc).expect("document serializes");
            body.push('\n');
            fs::write(&dump, body).map_err(|e| Error::io(&dump, e))?;
            written.push(dump);
        }
    }
    Ok(written)
}

/// Captions every input into `config.output_dir`. A failing input is
/// recorded in the report (and in `errors.json`) without stopping the others.
pub fn run_pipeline(captioner: &Captioner, inputs: &[PathBuf], format: Option<MotionFormat>) -> Result<RunReport> {
    let out = &captioner.config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let results: Vec<Result<Vec<PathBuf>>> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            let seq = read_motion(path, format)?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Invalid(format!("{}: no file stem", path.display())))?;
            write_captions(out, stem, &captioner.caption_input(&seq, i))
        })
        .collect();
    let mut report = RunReport::default();
    for (path, result) in inputs.iter().zip(results) {
        match result {
            Ok(files) => report.written.extend(files),
            Err(e) => {
                warn!("{}: {e}", path.display());
                report.errors.push(InputError {
                    input: path.clone(),
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    if !report.errors.is_empty() {
        let path = out.join("errors.json");
        let body = serde_json::to_string_pretty(&report.errors).expect("report serializes");
        fs::write(&path, body + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::to_canonical_json;
    use crate::skeleton::Joint;
    use crate::synth;

    fn quiet_config() -> PipelineConfig {
        PipelineConfig {
            noise: NoiseConfig::off(),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn arm_curl_caption_mentions_the_elbow() {
        let doc = caption_sequence(&synth::arm_curl(Joint::RightElbow, 40), &quiet_config(), 5).unwrap();
        assert!(!doc.no_salient_motion);
        assert!(doc.text.contains("right elbow"), "{}", doc.text);
    }

    #[test]
    fn still_sequence_has_no_salient_motion() {
        let seq = synth::still(&synth::PoseParams::default(), 30);
        let doc = caption_sequence(&seq, &quiet_config(), 5).unwrap();
        assert!(doc.no_salient_motion);
        assert_eq!(doc.text, "");
    }

    #[test]
    fn dump_only_when_asked() {
        let seq = synth::arm_curl(Joint::LeftElbow, 40);
        let mut config = quiet_config();
        assert!(caption_sequence(&seq, &config, 1).unwrap().intermediate.is_none());
        config.emit_intermediate = true;
        let dump = caption_sequence(&seq, &config, 1).unwrap().intermediate.unwrap();
        assert!(dump["timelines"].as_array().unwrap().len() == config.posecode.instances.len());
        assert!(!dump["selected"].as_array().unwrap().is_empty());
    }

    #[test]
    fn bad_input_does_not_stop_the_batch() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("curl.json");
        fs::write(&good, to_canonical_json(&synth::arm_curl(Joint::RightElbow, 40))).unwrap();
        let bad = dir.path().join("broken.json");
        fs::write(&bad, "{ not json").unwrap();
        let config = PipelineConfig {
            output_dir: dir.path().join("out"),
            captions_per_motion: 2,
            ..quiet_config()
        };
        let report = run_pipeline(&Captioner::new(config).unwrap(), &[good, bad.clone()], None).unwrap();
        assert_eq!(report.written.len(), 2);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].input, bad);
        assert_eq!(report.errors[0].kind, "parse");
        let listed = fs::read_to_string(dir.path().join("out/errors.json")).unwrap();
        assert!(listed.contains("broken.json"));
    }

    #[test]
    fn unknown_extension_needs_a_format() {
        assert!(infer_format(Path::new("x.bvh"), None).is_err());
        assert_eq!(infer_format(Path::new("x.bvh"), Some(MotionFormat::FlatCsv)).unwrap(), MotionFormat::FlatCsv);
    }
}
