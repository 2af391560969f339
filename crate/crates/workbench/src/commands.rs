//! Batch commands. Each one reads its inputs, writes per-entry files and
//! returns a summary; the binary only adds argument handling and exit codes.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use qoe_forge::criteria::{evaluate_models, read_scores, EvaluationReport};
use qoe_forge::distortion::{corpus_plan, sample_recipe, synthesize_output_pts, DistortionRecipe};
use qoe_forge::restructure::{render_schedule, restructure as build_schedule};
use qoe_forge::subjective::{
    factor_summary, mos_pipeline, read_mos, read_ratings, render_factor_summary, render_mos,
    MosTable, RatingsMatrix, Rejection, VideoFactors,
};
use qoe_forge::timeline::sidecar::{parse_sidecar, render_sidecar, Preamble};
use qoe_forge::timeline::{FrameTimeline, Rational, Timebase};

use crate::encoder::{encode, EncoderConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{Manifest, ManifestEntry};
use crate::seed::derive_seed;

pub const MANIFEST_FILE: &str = "manifest.ndjson";

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read_timeline(path: &Path) -> CliResult<FrameTimeline> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_sidecar(&text).map_err(|e| CliError::from(e).context(path.display()))?)
}

/// First error in manifest order, so parallel runs report deterministically.
fn first_error<T>(results: Vec<CliResult<T>>) -> CliResult<Vec<T>> {
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanOptions {
    pub sources_per_cell: usize,
    pub crf: Vec<u32>,
    pub modes_per_video: usize,
    /// Writes uniform source sidecars of this length, for dry runs.
    pub source_seconds: Option<f64>,
}

/// Writes `manifest.ndjson` into `out`, plus source sidecars when asked.
pub fn plan(out: &Path, options: &PlanOptions) -> CliResult<Manifest> {
    let planned = corpus_plan(
        options.sources_per_cell,
        &options.crf,
        options.modes_per_video,
    );
    let manifest = Manifest {
        dir: out.to_path_buf(),
        entries: planned.iter().map(ManifestEntry::from_plan).collect(),
    };
    write_file(&out.join(MANIFEST_FILE), &manifest.render())?;
    if let Some(seconds) = options.source_seconds {
        if !(seconds.is_finite() && seconds > 0.0) {
            return Err(CliError::input(format!(
                "source length {seconds}s must be positive"
            )));
        }
        let mut done = BTreeSet::new();
        for e in &manifest.entries {
            if !done.insert(e.source_id.clone()) {
                continue;
            }
            let frames = (seconds * e.framerate as f64).round() as usize;
            let timeline = FrameTimeline::uniform(
                frames,
                Rational::from_integer(e.framerate as i64),
                Timebase::new(1, 90_000)?,
                e.resolution,
            )?;
            write_file(&manifest.resolve(&e.source), &render_sidecar(&timeline))?;
        }
    }
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DistortSummary {
    pub stalled: usize,
    pub clean: usize,
    pub encoded: usize,
}

enum Outcome {
    Stalled { encoded: bool },
    Clean { encoded: bool },
}

fn distort_entry(
    manifest: &Manifest,
    entry: &ManifestEntry,
    seed: u64,
    encoder: Option<&EncoderConfig>,
) -> CliResult<Outcome> {
    let source_path = manifest.resolve(&entry.source);
    if !source_path.is_file() {
        return Err(CliError::input(format!(
            "missing source {} ({})",
            entry.source_id,
            source_path.display()
        )));
    }
    let source = read_timeline(&source_path)?;
    let output = match (entry.mode, entry.batch) {
        (Some(mode), Some(batch)) => {
            let mut recipe = sample_recipe(
                mode,
                batch,
                derive_seed(seed, &entry.video_id),
                source.duration_seconds(),
            )?;
            recipe.crf = entry.crf;
            recipe.source_id = Some(entry.source_id.clone());
            let (out, _) = synthesize_output_pts(&source, &recipe)?;
            let recipe_path = entry
                .recipe
                .as_ref()
                .ok_or_else(|| CliError::input("stalled entry has no recipe path"))?;
            let json = serde_json::to_string_pretty(&recipe).expect("recipes serialize");
            write_file(&manifest.resolve(recipe_path), &(json + "\n"))?;
            out
        }
        (Some(_), None) => return Err(CliError::input("stalled entry has no batch")),
        (None, _) => source.clone(),
    };
    write_file(&manifest.resolve(&entry.sidecar), &render_sidecar(&output))?;

    let encoded = match (encoder, entry.crf, &entry.source_frames, &entry.frames) {
        (Some(enc), Some(crf), Some(input), Some(frames)) => {
            encode(
                enc,
                &manifest.resolve(input),
                &manifest.resolve(frames),
                crf,
                &entry.video_id,
                source.frame_count(),
            )?;
            true
        }
        _ => false,
    };
    Ok(if entry.is_stalled() {
        Outcome::Stalled { encoded }
    } else {
        Outcome::Clean { encoded }
    })
}

/// Writes the output sidecar of every entry and the recipe of every stalled
/// entry. Recipe seeds come from `seed` and the video id only.
pub fn distort(
    manifest: &Manifest,
    seed: u64,
    encoder: Option<&EncoderConfig>,
) -> CliResult<DistortSummary> {
    let results: Vec<CliResult<Outcome>> = manifest
        .entries
        .par_iter()
        .map(|e| distort_entry(manifest, e, seed, encoder).map_err(|err| err.context(&e.video_id)))
        .collect();
    let mut summary = DistortSummary::default();
    for outcome in first_error(results)? {
        let encoded = match outcome {
            Outcome::Stalled { encoded } => {
                summary.stalled += 1;
                encoded
            }
            Outcome::Clean { encoded } => {
                summary.clean += 1;
                encoded
            }
        };
        summary.encoded += usize::from(encoded);
    }
    Ok(summary)
}

fn restructure_entry(manifest: &Manifest, entry: &ManifestEntry) -> CliResult<()> {
    let timeline = read_timeline(&manifest.resolve(&entry.sidecar))?;
    let schedule = build_schedule(&timeline);
    write_file(
        &manifest.resolve(&entry.schedule),
        &render_schedule(&schedule, &Preamble::of(&timeline)),
    )
}

/// Writes the render schedule of every entry; returns the number written.
pub fn restructure(manifest: &Manifest) -> CliResult<usize> {
    let results: Vec<CliResult<()>> = manifest
        .entries
        .par_iter()
        .map(|e| restructure_entry(manifest, e).map_err(|err| err.context(&e.video_id)))
        .collect();
    Ok(first_error(results)?.len())
}

fn ratings_matrix(path: &Path) -> CliResult<RatingsMatrix> {
    let ratings = read_ratings(path).map_err(|e| CliError::from(e).context(path.display()))?;
    if ratings.is_empty() {
        return Err(CliError::input(format!("{}: no ratings", path.display())));
    }
    Ok(RatingsMatrix::from_ratings(&ratings)?)
}

/// Subject screening and MOS; returns the rejection log, the table and its CSV.
pub fn mos(ratings: &Path) -> CliResult<(Rejection, MosTable, String)> {
    let matrix = ratings_matrix(ratings)?;
    let (rejection, table) = mos_pipeline(&matrix)?;
    let csv = render_mos(&table);
    Ok((rejection, table, csv))
}

fn model_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Evaluates each scores file against the MOS derived from `ratings`.
/// Models are named after their file stems.
pub fn evaluate(ratings: &Path, scores: &[PathBuf]) -> CliResult<EvaluationReport> {
    if scores.is_empty() {
        return Err(CliError::input("at least one scores file is required"));
    }
    let mut models: Vec<(String, HashMap<String, f64>)> = Vec::with_capacity(scores.len());
    for path in scores {
        let name = model_name(path);
        if models.iter().any(|(n, _)| *n == name) {
            return Err(CliError::input(format!(
                "two scores files are named {name}"
            )));
        }
        let s = read_scores(path).map_err(|e| CliError::from(e).context(path.display()))?;
        models.push((name, s));
    }
    let (_, table, _) = mos(ratings)?;
    Ok(evaluate_models(&table, &models)?)
}

fn factors_of(manifest: &Manifest, entry: &ManifestEntry) -> CliResult<VideoFactors> {
    let recipe = match &entry.recipe {
        Some(path) if entry.is_stalled() => {
            let path = manifest.resolve(path);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let r: DistortionRecipe = serde_json::from_str(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            Some(r)
        }
        _ => None,
    };
    Ok(VideoFactors {
        video_id: entry.video_id.clone(),
        resolution: entry.resolution.to_string(),
        framerate: entry.framerate,
        crf: entry.crf,
        stall_count: recipe.as_ref().map_or(0, |r| r.stalls.len()),
        ar: recipe.as_ref().map(|r| r.ar.as_f64()),
        mode: recipe.as_ref().map(|r| r.mode_id.to_string()),
        total_stall_seconds: recipe.as_ref().map_or(0.0, |r| r.total_stall_seconds()),
    })
}

/// Factor aggregates CSV for the videos of a MOS file.
pub fn summarize(mos: &Path, manifest: &Manifest) -> CliResult<String> {
    let table = read_mos(mos).map_err(|e| CliError::from(e).context(mos.display()))?;
    let wanted: BTreeSet<&str> = table.rows.iter().map(|r| r.video_id.as_str()).collect();
    let factors = manifest
        .entries
        .iter()
        .filter(|e| wanted.contains(e.video_id.as_str()))
        .map(|e| factors_of(manifest, e))
        .collect::<CliResult<Vec<_>>>()?;
    let groups = factor_summary(&table, &factors)?;
    Ok(render_factor_summary(&groups))
}
