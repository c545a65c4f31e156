use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use csisense_core::features::to_image;
use csisense_core::learn::{cross_validate, fit_fusion, Dataset, EvalReport, Protocol, Sample};
use csisense_core::model::tap_profile;
use csisense_core::pipeline::{stage_matrix, Extractor, ModelBundle, Stage};
use csisense_core::preprocess;
use csisense_core::scenario::Scenario;
use csisense_core::ChannelImage;
use rayon::prelude::*;

use crate::cache::FeatureCache;
use crate::config::RunConfig;
use crate::manifest::{self, DatasetManifest, ManifestEntry};
use crate::report::ReportDoc;
use crate::{fsutil, image_out, trace_file, CliError};

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    toml::from_str(&fsutil::read_string(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Writes every trace of `scenario` under `out_dir/traces` and the manifest
/// to `out_dir/manifest.json`.
pub fn cmd_synth(scenario: &Scenario, out_dir: &Path) -> Result<DatasetManifest, CliError> {
    let specs = scenario.traces()?;
    if specs.is_empty() {
        log::warn!("scenario produces no traces; writing an empty manifest");
    }
    let entries = specs
        .par_iter()
        .map(|spec| {
            let rel = format!("traces/{}.csit", spec.id);
            trace_file::write(&out_dir.join(&rel), &spec.generate()?)?;
            Ok(ManifestEntry {
                trace_path: rel,
                action_label: spec.action.clone(),
                person_label: spec.person.clone(),
                room_label: spec.room.clone(),
                location_label: spec.location.clone(),
                split_tags: vec![format!("rep{:03}", spec.repetition)],
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let m = DatasetManifest::new(entries);
    m.save(&out_dir.join("manifest.json"))?;
    Ok(m)
}

/// Descriptors of every manifest entry, in manifest order.
pub fn extract_manifest(
    manifest_path: &Path,
    m: &DatasetManifest,
    ex: &Extractor,
    cache: Option<&FeatureCache>,
) -> Result<Dataset, CliError> {
    let samples = m
        .entries
        .par_iter()
        .map(|e| {
            let path = manifest::resolve(manifest_path, e);
            let bytes = fsutil::read(&path)?;
            let key = cache.map(|_| FeatureCache::key(&bytes, &ex.cfg));
            let cached = cache.zip(key.as_deref()).and_then(|(c, k)| c.get(k));
            let pairs = match cached {
                Some(p) => p,
                None => {
                    let trace =
                        trace_file::decode(&bytes).map_err(|err| CliError::Data(format!("{}: {err}", path.display())))?;
                    let p = ex.extract(&trace).map_err(|err| with_path(&path, err.into()))?;
                    if let (Some(c), Some(k)) = (cache, key.as_deref()) {
                        c.put(k, &p)?;
                    }
                    p
                }
            };
            Ok(Sample {
                id: e.trace_path.clone(),
                pairs,
                action: e.action_label.clone(),
                person: e.person_label.clone(),
                room: e.room_label.clone(),
                location: e.location_label.clone(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Dataset { samples })
}

fn with_path(path: &Path, e: CliError) -> CliError {
    match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        CliError::Numeric(m) => CliError::Numeric(format!("{}: {m}", path.display())),
        other => other,
    }
}

/// Fills in scaling sizes `1..groups` when the config leaves them empty.
pub fn resolve_protocol(p: &Protocol, ds: &Dataset) -> Protocol {
    match p {
        Protocol::TrainSubsetScaling { group, sizes } if sizes.is_empty() => {
            let groups = ds.labels(*group).0.len();
            Protocol::TrainSubsetScaling { group: *group, sizes: (1..groups.max(1)).collect() }
        }
        other => other.clone(),
    }
}

pub fn evaluate(ds: &Dataset, cfg: &RunConfig) -> Result<EvalReport, CliError> {
    let protocol = resolve_protocol(&cfg.protocol, ds);
    Ok(cross_validate(ds, cfg.target, &protocol, &cfg.pipeline.fusion, cfg.seed)?)
}

pub struct RunOutput {
    pub report: EvalReport,
    pub doc: ReportDoc,
    pub report_path: PathBuf,
}

/// Evaluates `cfg` on the manifest's traces and writes `report.toml`,
/// `confusion.pgm` (and `confusion.png` if asked) to `out_dir`. With
/// `save_model` a model trained on all traces goes to `model.json`.
pub fn cmd_run(
    manifest_path: &Path,
    cfg: &RunConfig,
    out_dir: &Path,
    png: bool,
    save_model: bool,
) -> Result<RunOutput, CliError> {
    let m = DatasetManifest::load(manifest_path)?;
    if m.entries.is_empty() {
        return Err(CliError::Data(format!("{}: manifest has no entries", manifest_path.display())));
    }
    let ex = Extractor::new(cfg.pipeline.clone())?;
    let cache = FeatureCache::from_env();
    let ds = extract_manifest(manifest_path, &m, &ex, cache.as_ref())?;
    let report = evaluate(&ds, cfg)?;
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let doc = ReportDoc::new(&report, &cfg.pipeline.name, &cfg.sha256(), created);
    let report_path = out_dir.join("report.toml");
    fsutil::write_atomic(&report_path, doc.render().as_bytes())?;
    let (side, px) = doc.confusion_pixels(16);
    image_out::write_pgm(&out_dir.join("confusion.pgm"), side, side, &px)?;
    if png {
        image_out::write_png(&out_dir.join("confusion.png"), side, side, &px)?;
    }
    if save_model {
        let (names, y) = ds.labels(cfg.target);
        let all: Vec<&Sample> = ds.samples.iter().collect();
        let model = fit_fusion(&all, &y, &names, &cfg.pipeline.fusion)?;
        let bundle = ModelBundle { pipeline: cfg.pipeline.clone(), model };
        let json = serde_json::to_vec_pretty(&bundle).expect("bundle serializes");
        fsutil::write_atomic(&out_dir.join("model.json"), &json)?;
    }
    Ok(RunOutput { report, doc, report_path })
}

/// Renders one stage of a trace with all streams stacked vertically and
/// writes it as PGM (plus PNG when `png_path` is given).
pub fn cmd_plot(
    trace_path: &Path,
    stage: Stage,
    out_image: &Path,
    png_path: Option<&Path>,
    cfg: &RunConfig,
) -> Result<ChannelImage, CliError> {
    let trace = trace_file::read(trace_path)?;
    let m = stage_matrix(&trace, stage, &cfg.pipeline).map_err(|e| with_path(trace_path, e.into()))?;
    let img = to_image(&m, cfg.pipeline.image_height, cfg.pipeline.image_width)
        .map_err(|e| with_path(trace_path, CliError::from(csisense_core::pipeline::PipelineError::from(e))))?;
    let (w, h) = (img.width(), img.height());
    let px = img.to_gray8();
    image_out::write_pgm(out_image, w, h, &px)?;
    if let Some(p) = png_path {
        image_out::write_png(p, w, h, &px)?;
    }
    Ok(img)
}

/// Summary of a manifest or a trace file, chosen by the file's content.
pub fn cmd_inspect(path: &Path, taps: bool) -> Result<String, CliError> {
    let bytes = fsutil::read(path)?;
    if bytes.starts_with(trace_file::MAGIC) {
        let t = trace_file::decode(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let amp = preprocess::amplitudes(&t);
        let mut out = format!(
            "trace {}\npairs {}\nsubcarriers {}\nframes {}\nnominal_rate {}\nspan_seconds {:.6}\n",
            path.display(),
            t.pairs(),
            t.subcarriers(),
            t.len(),
            t.meta.nominal_rate,
            t.frames.last().map_or(0.0, |l| l.timestamp - t.frames[0].timestamp),
        );
        for p in amp.pairs() {
            let cols = amp.values.select(ndarray::Axis(1), &amp.pair_columns(p));
            let mean = cols.mean().unwrap_or(0.0);
            let std = cols.std(0.0);
            out.push_str(&format!("pair {p} amplitude mean {mean:.6} std {std:.6}\n"));
        }
        if taps {
            for p in 0..t.pairs() {
                let prof = tap_profile(&t.frames[0], p)?;
                let mags: Vec<String> = prof.iter().map(|x| format!("{:.4}", x.magnitude)).collect();
                out.push_str(&format!("taps pair {p}: {}\n", mags.join(" ")));
            }
        }
        return Ok(out);
    }
    let m = DatasetManifest::load(path)?;
    let mut out = format!("manifest {}\nformat_version {}\nentries {}\n", path.display(), m.format_version, m.entries.len());
    for (kind, counts) in m.label_counts() {
        let items: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("{kind}: {}\n", items.join(" ")));
    }
    let missing = m.entries.iter().filter(|e| !manifest::resolve(path, e).exists()).count();
    out.push_str(&format!("missing_traces {missing}\n"));
    Ok(out)
}
