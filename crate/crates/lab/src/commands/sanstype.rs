use std::path::PathBuf;

use clap::{Args, Subcommand};
use composed_core::rng;
use composed_core::sanstype::{
    build_dataset, check, corrupt, corrupt_with, corruption_stats, generate, generation_stats, Corruption,
    DatasetConfig, GenConfig, Record, TestCase,
};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, Result};
use crate::io::{json_bytes, jsonl_bytes, overlay, read_json, read_text, Run};

#[derive(Debug, Clone, Subcommand)]
pub enum SansCommand {
    /// Generate programs as JSONL records {id, pseudocode, code, tests}.
    Gen(GenArgs),
    /// Apply one random perturbation to a code file.
    Corrupt(CorruptArgs),
    /// Compile and run code against tests; exit 0 correct, 1 runtime or wrong output, 2 compile error.
    Check(CheckArgs),
    /// Generation and corruption statistics.
    Stats(GenArgs),
    /// Write the labeled, unlabeled, denoising, test and OOD test splits.
    Dataset(DatasetArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Render pseudocode with the out-of-distribution templates.
    #[arg(long)]
    pub ood: bool,
    /// JSON object overriding generator settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CorruptArgs {
    /// Code file, or `-` for stdin.
    #[arg(default_value = "-")]
    pub code: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Force one kind: type_replace, type_delete, type_insert, drop_arrows, reverse_arrows, drop_cout.
    #[arg(long)]
    pub kind: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Code file, or `-` for stdin.
    #[arg(default_value = "-")]
    pub code: PathBuf,
    /// Tests as a JSON array of {stdin, stdout}, or a record with a `tests` field.
    #[arg(long)]
    pub tests: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub labeled: Option<usize>,
    #[arg(long)]
    pub unlabeled: Option<usize>,
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub ood_test: Option<usize>,
    /// JSON object overriding generator settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TestsFile {
    List(Vec<TestCase>),
    Record { tests: Vec<TestCase> },
    One(TestCase),
}

pub fn read_tests(path: &std::path::Path) -> Result<Vec<TestCase>> {
    Ok(match read_json::<TestsFile>(path)? {
        TestsFile::List(t) | TestsFile::Record { tests: t } => t,
        TestsFile::One(t) => vec![t],
    })
}

pub fn run(cmd: &SansCommand, run: &mut Run) -> Result<u8> {
    match cmd {
        SansCommand::Gen(a) => gen(a, run),
        SansCommand::Corrupt(a) => corrupt_cmd(a, run),
        SansCommand::Check(a) => check_cmd(a, run),
        SansCommand::Stats(a) => stats(a, run),
        SansCommand::Dataset(a) => dataset(a, run),
    }
}

fn gen_config(path: Option<&std::path::Path>) -> Result<GenConfig> {
    let cfg = overlay(&GenConfig::default(), path)?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct GenRun<'a> {
    seed: u64,
    n: usize,
    ood: bool,
    generator: &'a GenConfig,
}

fn gen(a: &GenArgs, run: &mut Run) -> Result<u8> {
    let g = gen_config(a.config.as_deref())?;
    run.set_config(&GenRun { seed: a.seed, n: a.n, ood: a.ood, generator: &g }, Some(a.seed))?;
    let records: Vec<Record> = generate(a.seed, a.n, a.ood, &g)?.iter().map(|e| e.record()).collect();
    run.emit("programs.jsonl", &jsonl_bytes(&records)?, true)?;
    Ok(0)
}

fn corrupt_cmd(a: &CorruptArgs, run: &mut Run) -> Result<u8> {
    let code = read_text(&a.code)?;
    let kind = match &a.kind {
        Some(name) => Some(Corruption::from_name(name).ok_or_else(|| Failure::Usage(format!("unknown kind `{name}`")))?),
        None => None,
    };
    run.set_config(&serde_json::json!({ "seed": a.seed, "kind": kind, "source": a.code }), Some(a.seed))?;
    let mut r = rng::seeded(a.seed);
    let (kind, out) = match kind {
        Some(k) => (k, corrupt_with(&code, k, &mut r)?),
        None => corrupt(&code, &mut r)?,
    };
    eprintln!("{}", kind.name());
    run.emit("corrupted.cpp", out.as_bytes(), true)?;
    run.emit("corruption.json", &json_bytes(&serde_json::json!({ "kind": kind }))?, false)?;
    Ok(0)
}

fn check_cmd(a: &CheckArgs, run: &mut Run) -> Result<u8> {
    let tests = read_tests(&a.tests)?;
    let code = read_text(&a.code)?;
    run.set_config(&serde_json::json!({ "source": a.code, "tests": tests }), None)?;
    let outcome = check(&code, &tests);
    run.emit("outcome.json", &json_bytes(&outcome)?, false)?;
    if run.out_dir().is_none() {
        println!("{outcome}");
    }
    Ok(outcome.verdict.exit_code() as u8)
}

fn stats(a: &GenArgs, run: &mut Run) -> Result<u8> {
    let g = gen_config(a.config.as_deref())?;
    run.set_config(&GenRun { seed: a.seed, n: a.n, ood: a.ood, generator: &g }, Some(a.seed))?;
    let examples = generate(a.seed, a.n, a.ood, &g)?;
    let out = serde_json::json!({
        "generation": generation_stats(&examples),
        "corruption": corruption_stats(&examples, a.seed)?,
    });
    run.emit("stats.json", &json_bytes(&out)?, true)?;
    Ok(0)
}

fn dataset(a: &DatasetArgs, run: &mut Run) -> Result<u8> {
    if run.out_dir().is_none() {
        return Err(Failure::Usage("`sanstype dataset` needs --out".into()));
    }
    let d = DatasetConfig::default();
    let cfg = DatasetConfig {
        seed: a.seed,
        n_labeled: a.labeled.unwrap_or(d.n_labeled),
        n_unlabeled: a.unlabeled.unwrap_or(d.n_unlabeled),
        n_test: a.test.unwrap_or(d.n_test),
        n_ood_test: a.ood_test.unwrap_or(d.n_ood_test),
        gen: gen_config(a.config.as_deref())?,
    };
    run.set_config(&cfg, Some(cfg.seed))?;
    let ds = build_dataset(&cfg)?;
    let records = |xs: &[composed_core::sanstype::Example]| xs.iter().map(|e| e.record()).collect::<Vec<_>>();
    run.emit("train.jsonl", &jsonl_bytes(&records(&ds.labeled))?, false)?;
    run.emit("unlabeled.jsonl", &jsonl_bytes(&ds.unlabeled)?, false)?;
    run.emit("denoising.jsonl", &jsonl_bytes(&ds.denoising)?, false)?;
    run.emit("test.jsonl", &jsonl_bytes(&records(&ds.test))?, false)?;
    run.emit("ood_test.jsonl", &jsonl_bytes(&records(&ds.ood_test))?, false)?;
    Ok(0)
}
