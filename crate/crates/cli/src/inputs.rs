use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use interview_core::harness::CandidateSpec;
use interview_core::pool::read_questions;
use interview_core::Question;

use crate::manifest::sha256_hex;

/// Parse `--candidate`. Inline forms are `synthetic:ABILITY[:SLOPE[:FLOOR]]`,
/// `scripted:PATH` and `remote[:URL]`; anything else is read as a TOML file.
pub fn parse_candidate(text: &str, id: Option<String>) -> Result<CandidateSpec> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let spec = match kind {
        "synthetic" => {
            let parts: Vec<f64> = rest
                .split(':')
                .map(|p| p.parse::<f64>().with_context(|| format!("bad number `{p}` in `{text}`")))
                .collect::<Result<_>>()?;
            let (ability, slope, floor) = match parts.as_slice() {
                [a] => (*a, 1.0, 0.0),
                [a, s] => (*a, *s, 0.0),
                [a, s, f] => (*a, *s, *f),
                _ => bail!("expected synthetic:ABILITY[:SLOPE[:FLOOR]], got `{text}`"),
            };
            CandidateSpec::Synthetic { id: id.unwrap_or_else(|| format!("synthetic-{ability}")), ability, slope, floor }
        }
        "scripted" => {
            if rest.is_empty() {
                bail!("expected scripted:PATH");
            }
            let path = PathBuf::from(rest);
            let default_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scripted".into());
            CandidateSpec::Scripted { id: id.unwrap_or(default_id), path }
        }
        "remote" => CandidateSpec::Remote {
            id: id.unwrap_or_else(|| "remote".into()),
            url: (!rest.is_empty()).then(|| rest.to_string()),
            timeout_ms: None,
            retries: 0,
        },
        _ => {
            let path = Path::new(text);
            let body = fs::read_to_string(path).with_context(|| format!("reading candidate file {}", path.display()))?;
            let mut spec: CandidateSpec = toml::from_str(&body).with_context(|| format!("parsing {}", path.display()))?;
            if let CandidateSpec::Scripted { path: p, .. } = &mut spec {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
            spec
        }
    };
    Ok(spec)
}

/// Hash of a candidate's answer file, if it has one.
pub fn candidate_input_hash(spec: &CandidateSpec) -> Result<Option<String>> {
    match spec {
        CandidateSpec::Scripted { path, .. } => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(Some(sha256_hex(&bytes)))
        }
        _ => Ok(None),
    }
}

/// Questions plus the hash of the file they came from.
pub fn load_questions(path: &Path) -> Result<(Vec<Question>, String)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let questions = read_questions(BufReader::new(bytes.as_slice()))
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    if questions.is_empty() {
        bail!("{}: no questions", path.display());
    }
    Ok((questions, sha256_hex(&bytes)))
}
