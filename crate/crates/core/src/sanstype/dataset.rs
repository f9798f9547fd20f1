//! Labeled, unlabeled, denoising and test splits.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::check::{check, TestCase, Verdict};
use super::corrupt::{corrupt, Corruption};
use super::program::{generate_program, make_tests, GenConfig, Init, Line, Program};
use super::templates::{render_pseudocode, TemplateSet};
use crate::error::Result;
use crate::rng;

/// A generated program with its pseudocode, gold code and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub program: Program,
    pub pseudocode: String,
    pub code: String,
    pub tests: Vec<TestCase>,
}

/// The on-disk form of a labeled example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub pseudocode: String,
    pub code: String,
    pub tests: Vec<TestCase>,
}

impl Example {
    pub fn record(&self) -> Record {
        Record {
            id: self.id.clone(),
            pseudocode: self.pseudocode.clone(),
            code: self.code.clone(),
            tests: self.tests.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeRecord {
    pub id: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoisingPair {
    pub id: String,
    pub kind: Corruption,
    pub corrupted: String,
    pub clean: String,
}

/// Streams of the master seed, one range per split so splits never share programs.
const SPLIT_STRIDE: u64 = 1 << 32;

fn split_stream(split: u64, index: usize) -> u64 {
    split * SPLIT_STRIDE + index as u64
}

/// Example `index` of a split; each example has its own random stream.
pub fn generate_example(
    seed: u64,
    split: u64,
    index: usize,
    id: String,
    gen: &GenConfig,
    templates: &TemplateSet,
) -> Result<Example> {
    let mut rng = rng::substream(seed, split_stream(split, index));
    let program = generate_program(gen, &mut rng)?;
    let pseudocode = render_pseudocode(&program, templates, &mut rng);
    let tests = make_tests(&program, gen.tests_per_program, &mut rng)?;
    let code = program.render_code();
    Ok(Example { id, program, pseudocode, code, tests })
}

/// `n` examples from `seed`, rendered with the in-distribution or OOD templates.
pub fn generate(seed: u64, n: usize, ood: bool, gen: &GenConfig) -> Result<Vec<Example>> {
    let templates = if ood { TemplateSet::out_of_distribution() } else { TemplateSet::in_distribution() };
    (0..n)
        .map(|i| generate_example(seed, 0, i, format!("{i}"), gen, &templates))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub seed: u64,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_test: usize,
    pub n_ood_test: usize,
    pub gen: GenConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { seed: 0, n_labeled: 1000, n_unlabeled: 20_000, n_test: 500, n_ood_test: 500, gen: GenConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub labeled: Vec<Example>,
    pub unlabeled: Vec<CodeRecord>,
    /// One corrupted copy of every unlabeled program.
    pub denoising: Vec<DenoisingPair>,
    pub test: Vec<Example>,
    pub ood_test: Vec<Example>,
}

#[derive(Debug, Clone, Copy)]
enum Split {
    Labeled = 1,
    Unlabeled = 2,
    Test = 3,
    OodTest = 4,
    Corruption = 5,
}

fn split(cfg: &DatasetConfig, which: Split, n: usize, templates: &TemplateSet) -> Result<Vec<Example>> {
    let prefix = match which {
        Split::Labeled => "train",
        Split::Unlabeled => "unlabeled",
        Split::Test => "test",
        Split::OodTest => "ood",
        Split::Corruption => "corrupt",
    };
    (0..n)
        .map(|i| generate_example(cfg.seed, which as u64, i, format!("{prefix}-{i}"), &cfg.gen, templates))
        .collect()
}

pub fn build_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.gen.validate()?;
    let id = TemplateSet::in_distribution();
    let ood = TemplateSet::out_of_distribution();
    let labeled = split(cfg, Split::Labeled, cfg.n_labeled, &id)?;
    let unlabeled: Vec<CodeRecord> = split(cfg, Split::Unlabeled, cfg.n_unlabeled, &id)?
        .into_iter()
        .map(|e| CodeRecord { id: e.id, code: e.code })
        .collect();
    let mut denoising = Vec::with_capacity(unlabeled.len());
    for (i, u) in unlabeled.iter().enumerate() {
        let mut rng = rng::substream(cfg.seed, split_stream(Split::Corruption as u64, i));
        let (kind, corrupted) = corrupt(&u.code, &mut rng)?;
        denoising.push(DenoisingPair { id: u.id.clone(), kind, corrupted, clean: u.code.clone() });
    }
    Ok(Dataset {
        labeled,
        unlabeled,
        denoising,
        test: split(cfg, Split::Test, cfg.n_test, &id)?,
        ood_test: split(cfg, Split::OodTest, cfg.n_ood_test, &ood)?,
    })
}

/// Counts over a set of generated programs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub programs: usize,
    pub initial_declarations: usize,
    pub stdin_declarations: usize,
    pub operation_lines: usize,
    pub fresh_declarations: usize,
    /// `fresh_declarations / operation_lines`.
    pub fresh_fraction: f64,
    pub code_lines: usize,
    /// Verdicts of every gold program on its own tests.
    pub verdicts: BTreeMap<Verdict, usize>,
}

pub fn generation_stats(examples: &[Example]) -> GenerationStats {
    let count = |lines: &[Line], f: fn(&Line) -> bool| lines.iter().filter(|l| f(l)).count();
    let mut s = GenerationStats {
        programs: examples.len(),
        initial_declarations: 0,
        stdin_declarations: 0,
        operation_lines: 0,
        fresh_declarations: 0,
        fresh_fraction: 0.0,
        code_lines: 0,
        verdicts: BTreeMap::new(),
    };
    for e in examples {
        let p = &e.program;
        s.initial_declarations += p.declarations.len();
        s.stdin_declarations += count(&p.declarations, |l| matches!(l, Line::DeclareInit { init: Init::Stdin, .. }));
        s.operation_lines += p.operations.len();
        s.fresh_declarations += count(&p.operations, |l| matches!(l, Line::DeclareInit { .. }));
        s.code_lines += e.code.lines().count();
        *s.verdicts.entry(check(&e.code, &e.tests).verdict).or_insert(0) += 1;
    }
    if s.operation_lines > 0 {
        s.fresh_fraction = s.fresh_declarations as f64 / s.operation_lines as f64;
    }
    s
}

/// Per-kind verdicts of randomly corrupted programs against the clean program's tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionStats {
    pub samples: usize,
    pub by_kind: BTreeMap<Corruption, BTreeMap<Verdict, usize>>,
    /// Fraction of corrupted programs that are no longer correct.
    pub broken_fraction: f64,
}

pub fn corruption_stats(examples: &[Example], seed: u64) -> Result<CorruptionStats> {
    let mut by_kind: BTreeMap<Corruption, BTreeMap<Verdict, usize>> = BTreeMap::new();
    let mut broken = 0;
    for (i, e) in examples.iter().enumerate() {
        let mut rng = rng::substream(seed, split_stream(Split::Corruption as u64, i));
        let (kind, code) = corrupt(&e.code, &mut rng)?;
        let verdict = check(&code, &e.tests).verdict;
        broken += usize::from(verdict != Verdict::Correct);
        *by_kind.entry(kind).or_default().entry(verdict).or_insert(0) += 1;
    }
    let samples = examples.len();
    Ok(CorruptionStats {
        samples,
        by_kind,
        broken_fraction: if samples > 0 { broken as f64 / samples as f64 } else { 0.0 },
    })
}
