//! Cached downloads of the public case and stringency files, with a
//! JSON-lines provenance manifest (`manifest.jsonl` in the cache directory).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A downloadable public dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Source {
    pub name: &'static str,
    pub url: &'static str,
    pub file: &'static str,
}

pub const SOURCES: [Source; 2] = [
    Source {
        name: "jhu",
        url: "https://raw.githubusercontent.com/CSSEGISandData/COVID-19/master/csse_covid_19_data/csse_covid_19_time_series/time_series_covid19_confirmed_US.csv",
        file: "jhu_confirmed_us.csv",
    },
    Source {
        name: "oxcgrt",
        url: "https://raw.githubusercontent.com/OxCGRT/USA-covid-policy/master/data/OxCGRT_US_latest.csv",
        file: "oxcgrt_us_latest.csv",
    },
];

pub const MANIFEST_FILE: &str = "manifest.jsonl";

pub fn source(name: &str) -> Result<Source> {
    SOURCES.iter().copied().find(|s| s.name == name).ok_or_else(|| Error::UnknownSource {
        name: name.to_string(),
        valid: SOURCES.iter().map(|s| s.name).collect::<Vec<_>>().join(", "),
    })
}

/// Plain HTTPS GET.
pub trait Transport: Sync {
    fn get(&self, url: &str) -> Result<Vec<u8>>;
}

/// Blocking client backed by `ureq`.
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>> {
        let net = |e: ureq::Error| Error::Network { url: url.to_string(), message: e.to_string() };
        let mut resp = ureq::get(url).call().map_err(net)?;
        resp.body_mut().with_config().limit(1 << 30).read_to_vec().map_err(net)
    }
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub source: String,
    pub url: String,
    pub file: String,
    pub timestamp: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Cached files keyed by source name, and the manifest describing them.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchedSources {
    pub files: BTreeMap<String, PathBuf>,
    pub manifest: Vec<ProvenanceRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_manifest(cache_dir: &Path) -> Result<Vec<ProvenanceRecord>> {
    let path = cache_dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(&path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

fn write_manifest(cache_dir: &Path, records: &[ProvenanceRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    std::fs::write(cache_dir.join(MANIFEST_FILE), out)?;
    Ok(())
}

/// Hash-check a cached file against its manifest record.
pub fn verify_cached(cache_dir: &Path, record: &ProvenanceRecord) -> Result<PathBuf> {
    let path = cache_dir.join(&record.file);
    let bytes = std::fs::read(&path)?;
    let found = sha256_hex(&bytes);
    if found != record.sha256 {
        return Err(Error::Integrity { path, expected: record.sha256.clone(), found });
    }
    Ok(path)
}

enum Outcome {
    Cached(PathBuf),
    Downloaded(Vec<u8>),
}

/// Make each named source available in `cache_dir`.
///
/// A source with a manifest record and intact cached bytes is served from the
/// cache without touching the network unless `refresh` is set. Refreshing
/// content whose hash differs from the recorded one is an integrity error;
/// the cached copy is never silently replaced. A network failure falls back
/// to the cache when one exists. Downloads run concurrently.
pub fn fetch_public_sources(
    cache_dir: &Path,
    names: &[String],
    transport: &dyn Transport,
    refresh: bool,
) -> Result<FetchedSources> {
    let sources: Vec<Source> = names.iter().map(|n| source(n)).collect::<Result<_>>()?;
    if sources.is_empty() {
        return Err(Error::config("no sources requested"));
    }
    std::fs::create_dir_all(cache_dir)?;
    let mut manifest: BTreeMap<String, ProvenanceRecord> =
        read_manifest(cache_dir)?.into_iter().map(|r| (r.source.clone(), r)).collect();

    let outcomes: Vec<Result<Outcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sources
            .iter()
            .map(|src| {
                let record = manifest.get(src.name).cloned();
                scope.spawn(move || -> Result<Outcome> {
                    let cached = match &record {
                        Some(r) => Some(verify_cached(cache_dir, r)?),
                        None => None,
                    };
                    match cached {
                        Some(path) if !refresh => Ok(Outcome::Cached(path)),
                        Some(path) => match transport.get(src.url) {
                            Ok(bytes) => Ok(Outcome::Downloaded(bytes)),
                            Err(e) => {
                                log::warn!("{}: {e}; using cached copy", src.name);
                                Ok(Outcome::Cached(path))
                            }
                        },
                        None => transport.get(src.url).map(Outcome::Downloaded),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fetch thread panicked")).collect()
    });

    let mut files = BTreeMap::new();
    let mut changed = false;
    for (src, outcome) in sources.iter().zip(outcomes) {
        let path = cache_dir.join(src.file);
        match outcome? {
            Outcome::Cached(p) => {
                files.insert(src.name.to_string(), p);
            }
            Outcome::Downloaded(bytes) => {
                let sha = sha256_hex(&bytes);
                if let Some(old) = manifest.get(src.name) {
                    if old.sha256 != sha {
                        return Err(Error::Integrity { path, expected: old.sha256.clone(), found: sha });
                    }
                    files.insert(src.name.to_string(), path);
                    continue;
                }
                std::fs::write(&path, &bytes)?;
                manifest.insert(
                    src.name.to_string(),
                    ProvenanceRecord {
                        source: src.name.to_string(),
                        url: src.url.to_string(),
                        file: src.file.to_string(),
                        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                        sha256: sha,
                        bytes: bytes.len() as u64,
                    },
                );
                changed = true;
                files.insert(src.name.to_string(), path);
            }
        }
    }
    let records: Vec<ProvenanceRecord> = manifest.into_values().collect();
    if changed {
        write_manifest(cache_dir, &records)?;
    }
    Ok(FetchedSources { files, manifest: records })
}
