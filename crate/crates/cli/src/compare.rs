use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;

use crate::record::{RunResult, SCHEMA_VERSION};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Directory of result JSON files written by `solve`.
    #[arg(long)]
    runs: PathBuf,
    /// CSV to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn load_runs(dir: &Path) -> anyhow::Result<Vec<(String, RunResult)>> {
    let mut runs = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let run: RunResult =
            serde_json::from_str(&text).with_context(|| format!("malformed run file {}", path.display()))?;
        if run.schema_version != SCHEMA_VERSION {
            bail!("{}: unsupported schema version {}", path.display(), run.schema_version);
        }
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        runs.push((name, run));
    }
    runs.sort_by(|a, b| a.1.method.cmp(&b.1.method).then_with(|| a.0.cmp(&b.0)));
    Ok(runs)
}

pub fn table(runs: &[(String, RunResult)]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "welfare", "gini", "time"])?;
    for (_, r) in runs {
        let gini = match (r.gamma > 0.0, r.gini_ipw) {
            (true, _) => "infeas.".to_string(),
            (false, Some(g)) => format!("{g:.4}"),
            (false, None) => String::new(),
        };
        w.write_record([r.method.clone(), format!("{:.4}", r.welfare), gini, format!("{:.2}", r.wall_seconds)])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn run(a: &CompareArgs) -> anyhow::Result<u8> {
    let runs = load_runs(&a.runs)?;
    crate::write_output(a.out.as_ref(), &table(&runs)?)?;
    Ok(0)
}
