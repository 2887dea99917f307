use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chain::{run_generation, ChainContext};
use super::sampler::{sample_eval_tagset, MANDATORY};
use super::{GenerationMode, GenerationRequest, GenerationResult, IdeationError, TagSet, DEFAULT_IMAGE_COUNT};
use crate::client::ImageInput;
use crate::corpus::PaintingRecord;
use crate::design_space::DesignSpaceCatalog;
use crate::stats::{RatingRow, RatingSheet};

/// Rated criteria and whether the baseline condition is rated on them.
pub const CRITERIA: [(&str, bool); 6] = [
    ("intention_relevance", false),
    ("image_relevance", true),
    ("image_preference", true),
    ("image_aesthetics", true),
    ("image_diversity", true),
    ("poem_relevance", false),
];

pub type EvalOutput = GenerationResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub set_count: usize,
    pub seed: u64,
    pub modes: Vec<GenerationMode>,
    /// Sets that get a corpus painting as image prompt.
    pub image_prompt_count: usize,
    pub image_count: usize,
    pub raters: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            set_count: 20,
            seed: 0,
            modes: vec![GenerationMode::Crafted, GenerationMode::Baseline],
            image_prompt_count: 5,
            image_count: DEFAULT_IMAGE_COUNT,
            raters: vec!["R1".into(), "R2".into(), "R3".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSet {
    pub set_id: String,
    pub seed: u64,
    pub tags: TagSet,
    /// Record id of the painting used as image prompt.
    pub image_prompt: Option<String>,
    pub outputs: Vec<EvalOutput>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalBundle {
    pub config: EvalConfig,
    pub sets: Vec<EvalSet>,
    pub ratings: RatingSheet,
}

/// `mode:criterion` item names rated for the given modes.
pub fn rating_items(modes: &[GenerationMode]) -> Vec<String> {
    let mut out = Vec::new();
    for m in modes {
        for (c, baseline) in CRITERIA {
            if *m == GenerationMode::Crafted || baseline {
                out.push(format!("{}:{c}", m.as_str()));
            }
        }
    }
    out
}

/// Prefers paintings sharing a tag with the set, else any painting.
fn pick_image_prompt<'a>(rng: &mut ChaCha8Rng, tags: &TagSet, pool: &'a [PaintingRecord]) -> Option<&'a PaintingRecord> {
    let matching: Vec<&PaintingRecord> = pool
        .iter()
        .filter(|r| tags.tags().iter().any(|t| r.annotations.contains(t.dimension, t.concept())))
        .collect();
    if !matching.is_empty() {
        return Some(matching[rng.random_range(0..matching.len())]);
    }
    (!pool.is_empty()).then(|| &pool[rng.random_range(0..pool.len())])
}

/// Runs the evaluation batch. Failing sets are marked and skipped in the
/// rating sheet; the batch continues.
pub fn run_eval_batch(
    catalog: &DesignSpaceCatalog,
    config: &EvalConfig,
    ctx: ChainContext<'_>,
    image_prompt_pool: &[PaintingRecord],
) -> Result<EvalBundle, IdeationError> {
    if config.set_count == 0 {
        return Err(IdeationError::Eval("set_count must be at least 1".into()));
    }
    if config.modes.is_empty() {
        return Err(IdeationError::Eval("no generation modes requested".into()));
    }
    if config.image_count == 0 {
        return Err(IdeationError::Eval("image_count must be at least 1".into()));
    }
    for dim in MANDATORY {
        if catalog.concepts(dim).len() < 2 {
            return Err(IdeationError::Sampler(format!("catalog lists fewer than 2 `{dim}` concepts")));
        }
    }

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let n_prompted = config.image_prompt_count.min(config.set_count);
    let prompted: Vec<usize> = if image_prompt_pool.is_empty() {
        if n_prompted > 0 {
            tracing::warn!("no paintings available for image prompts");
        }
        Vec::new()
    } else {
        sample(&mut master, config.set_count, n_prompted).into_vec()
    };

    let mut sets = Vec::with_capacity(config.set_count);
    for i in 0..config.set_count {
        let set_seed = master.next_u64();
        let set_id = format!("set-{:02}", i + 1);
        let tags = sample_eval_tagset(catalog, set_seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(set_seed ^ 0x9e37_79b9_7f4a_7c15);
        let prompt_record = if prompted.contains(&i) { pick_image_prompt(&mut rng, &tags, image_prompt_pool) } else { None };

        let mut set = EvalSet {
            set_id,
            seed: set_seed,
            tags: tags.clone(),
            image_prompt: prompt_record.map(|r| r.id.clone()),
            outputs: Vec::new(),
            error: None,
        };
        for mode in &config.modes {
            let request = GenerationRequest {
                tags: tags.clone(),
                free_text: None,
                image_prompt: set.image_prompt.clone(),
                mode: *mode,
                image_count: config.image_count,
            };
            let reference = prompt_record.map(|r| ImageInput::Ref(r.image_ref.clone()));
            match run_generation(ctx, &request, reference) {
                Ok(out) => set.outputs.push(out),
                Err(e) => {
                    tracing::warn!(set = %set.set_id, mode = mode.as_str(), error = %e, "eval set failed");
                    set.error = Some(format!("{}: {e}", mode.as_str()));
                    break;
                }
            }
        }
        sets.push(set);
    }

    let items = rating_items(&config.modes);
    let mut rows = Vec::new();
    for s in sets.iter().filter(|s| s.error.is_none()) {
        for item in &items {
            for rater in &config.raters {
                rows.push(RatingRow { set_id: s.set_id.clone(), item: item.clone(), rater: rater.clone(), score: None });
            }
        }
    }
    Ok(EvalBundle { config: config.clone(), sets, ratings: RatingSheet { rows } })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: EvalConfig,
    set_ids: Vec<String>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> IdeationError {
    IdeationError::Eval(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), IdeationError> {
    let text = serde_json::to_string_pretty(v).expect("bundle document serializes");
    crate::fsutil::write_atomic(path, text.as_bytes()).map_err(|e| io_err(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IdeationError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

/// Writes `manifest.json`, `sets/<id>.json`, `images/<ref>` and
/// `ratings.csv` under `dir`.
pub fn export_bundle(bundle: &EvalBundle, dir: &Path, images: &super::ImageStore) -> Result<(), IdeationError> {
    let sets_dir = dir.join("sets");
    let img_dir = dir.join("images");
    for d in [&sets_dir, &img_dir] {
        std::fs::create_dir_all(d).map_err(|e| io_err(d, e))?;
    }
    for s in &bundle.sets {
        write_json(&sets_dir.join(format!("{}.json", s.set_id)), s)?;
        for r in s.outputs.iter().flat_map(|o| &o.images) {
            let src = images.path(r).ok_or_else(|| IdeationError::Eval(format!("bad image ref `{r}`")))?;
            let dst = img_dir.join(r);
            std::fs::copy(&src, &dst).map_err(|e| io_err(&src, e))?;
        }
    }
    let ratings = dir.join("ratings.csv");
    crate::fsutil::write_atomic(&ratings, bundle.ratings.to_csv().as_bytes()).map_err(|e| io_err(&ratings, e))?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest { config: bundle.config.clone(), set_ids: bundle.sets.iter().map(|s| s.set_id.clone()).collect() },
    )
}

/// Reads a bundle written by [`export_bundle`]; `ratings.csv` may have been
/// filled in by raters since.
pub fn import_bundle(dir: &Path) -> Result<EvalBundle, IdeationError> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    let mut sets = Vec::with_capacity(manifest.set_ids.len());
    for id in &manifest.set_ids {
        let s: EvalSet = read_json(&dir.join("sets").join(format!("{id}.json")))?;
        for r in s.outputs.iter().flat_map(|o| &o.images) {
            let p = dir.join("images").join(r);
            if !p.is_file() {
                return Err(IdeationError::Eval(format!("missing image {}", p.display())));
            }
        }
        sets.push(s);
    }
    let path = dir.join("ratings.csv");
    let f = std::fs::File::open(&path).map_err(|e| io_err(&path, e))?;
    let ratings = RatingSheet::from_csv(f).map_err(|e| io_err(&path, e))?;
    Ok(EvalBundle { config: manifest.config, sets, ratings })
}
