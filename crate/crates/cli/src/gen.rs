use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use hscop::synthdata::{generate, Manifest, SynthConfig};
use hscop::treatment::write_dataset_csv;

use crate::record::{sha256_hex, SCHEMA_VERSION};

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, default_value_t = 25)]
    distinct: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    covariates: usize,
    /// Dataset CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Manifest JSON; defaults to the dataset path with a .manifest.json suffix.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    schema_version: u32,
    data_file: String,
    data_sha256: String,
    #[serde(flatten)]
    generator: &'a Manifest,
}

pub fn manifest_path(out: &std::path::Path) -> PathBuf {
    out.with_extension("manifest.json")
}

pub fn run(a: &GenArgs) -> anyhow::Result<u8> {
    let config = SynthConfig {
        distinct: a.distinct,
        samples: a.samples,
        seed: a.seed,
        covariates: a.covariates,
        ..SynthConfig::default()
    };
    let (data, manifest) = generate(&config)?;
    let mut csv = Vec::new();
    write_dataset_csv(&mut csv, &data)?;
    crate::write_output(Some(&a.out), std::str::from_utf8(&csv)?)
        .with_context(|| format!("cannot write {}", a.out.display()))?;
    let file = ManifestFile {
        schema_version: SCHEMA_VERSION,
        data_file: a.out.display().to_string(),
        data_sha256: sha256_hex(&csv),
        generator: &manifest,
    };
    let path = a.manifest.clone().unwrap_or_else(|| manifest_path(&a.out));
    crate::write_output(Some(&path), &(serde_json::to_string_pretty(&file)? + "\n"))?;
    eprintln!(
        "wrote {} samples over {} covariates to {}",
        data.len(),
        data.num_cells(),
        a.out.display()
    );
    Ok(0)
}
