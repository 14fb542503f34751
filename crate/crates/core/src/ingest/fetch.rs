//! HTTP history fetching against a pluggable transport.
//!
//! The fetcher speaks the public JSON listing shape (`/user/<name>/about.json`
//! and `/user/<name>/overview.json` pages chained by an `after` cursor). All
//! network access goes through the [`Transport`] trait so tests replay
//! recorded transcripts byte-for-byte; the real HTTP client lives behind the
//! `live` feature.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{PostRecord, RecordKind, UserMeta};

/// Status and body of one HTTP exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal HTTP GET abstraction.
///
/// `wait` is called for politeness delays and retry backoff; the default
/// implementation really sleeps, replay transports override it to a no-op.
pub trait Transport {
    fn get(&mut self, url: &str) -> Result<HttpResponse, FetchError>;

    fn wait(&mut self, d: Duration) {
        std::thread::sleep(d);
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("user not found: {username}")]
    UserNotFound { username: String },
    #[error("rate limited after {retries} retries: {url}")]
    RateLimited { url: String, retries: u32 },
    #[error("unexpected HTTP {status} from {url}")]
    Status { url: String, status: u16 },
    #[error("malformed response from {url}: {message}")]
    Malformed { url: String, message: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("transcript exhausted, wanted {url}")]
    TranscriptExhausted { url: String },
    #[error("transcript mismatch: wanted {wanted}, recorded {recorded}")]
    TranscriptMismatch { wanted: String, recorded: String },
    #[error("cannot read transcript {path}: {message}")]
    Transcript { path: String, message: String },
}

/// Paging, retry, and politeness parameters.
#[derive(Debug, Clone)]
pub struct FetchConfig {
    /// Maximum number of listing pages requested per user.
    pub page_limit: usize,
    /// Items requested per page.
    pub page_size: u32,
    /// Delay between consecutive requests.
    pub politeness_delay: Duration,
    /// Retries after rate-limit responses before giving up.
    pub max_retries: u32,
    /// First backoff interval; doubles per retry.
    pub backoff_base: Duration,
    /// Capture timestamp recorded on the fetched metadata. `None` means
    /// current wall-clock time; fixed values keep replay runs reproducible.
    pub snapshot_utc: Option<i64>,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            page_limit: 10,
            page_size: 100,
            politeness_delay: Duration::from_millis(1000),
            max_retries: 4,
            backoff_base: Duration::from_millis(1000),
            snapshot_utc: None,
        }
    }
}

#[derive(Deserialize)]
struct Envelope {
    kind: String,
    data: serde_json::Value,
}

#[derive(Deserialize)]
struct ListingData {
    #[serde(default)]
    after: Option<String>,
    #[serde(default)]
    children: Vec<Envelope>,
}

#[derive(Deserialize)]
struct ItemData {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    id: Option<String>,
    author: String,
    subreddit: String,
    created_utc: serde_json::Number,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    selftext: Option<String>,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    score: i64,
}

#[derive(Deserialize)]
struct AboutData {
    name: String,
    #[serde(default)]
    created_utc: Option<f64>,
    #[serde(default)]
    link_karma: Option<i64>,
    #[serde(default)]
    comment_karma: Option<i64>,
    #[serde(default)]
    has_verified_email: Option<bool>,
    #[serde(default)]
    is_suspended: Option<bool>,
}

fn get_with_backoff(
    transport: &mut dyn Transport,
    url: &str,
    config: &FetchConfig,
) -> Result<HttpResponse, FetchError> {
    let mut backoff = config.backoff_base;
    for attempt in 0..=config.max_retries {
        let resp = transport.get(url)?;
        if resp.status != 429 {
            return Ok(resp);
        }
        if attempt == config.max_retries {
            break;
        }
        transport.wait(backoff);
        backoff *= 2;
    }
    Err(FetchError::RateLimited { url: url.to_owned(), retries: config.max_retries })
}

fn malformed(url: &str, message: impl ToString) -> FetchError {
    FetchError::Malformed { url: url.to_owned(), message: message.to_string() }
}

fn parse_item(url: &str, child: Envelope) -> Result<PostRecord, FetchError> {
    let kind = match child.kind.as_str() {
        "t1" => RecordKind::Comment,
        "t3" => RecordKind::Post,
        other => return Err(malformed(url, format!("unexpected child kind {other}"))),
    };
    let item: ItemData =
        serde_json::from_value(child.data).map_err(|e| malformed(url, e))?;
    let id = item
        .name
        .or_else(|| {
            item.id.map(|id| match kind {
                RecordKind::Comment => format!("t1_{id}"),
                RecordKind::Post => format!("t3_{id}"),
            })
        })
        .ok_or_else(|| malformed(url, "item without name or id"))?;
    let created_utc = item
        .created_utc
        .as_i64()
        .or_else(|| item.created_utc.as_f64().map(|f| f as i64))
        .ok_or_else(|| malformed(url, "created_utc is not a number"))?;
    let (title, body) = match kind {
        RecordKind::Comment => (None, item.body.unwrap_or_default()),
        RecordKind::Post => (item.title, item.selftext.unwrap_or_default()),
    };
    Ok(PostRecord {
        id,
        author: super::normalize_author(&item.author),
        subreddit: super::normalize_subreddit(&item.subreddit),
        created_utc,
        kind,
        title,
        body,
        score: item.score,
    })
}

/// Fetch a user's metadata and full recent history.
///
/// A 404 on any request maps to [`FetchError::UserNotFound`]; an empty
/// listing yields an empty history alongside the metadata. Rate-limit
/// responses are retried with doubling backoff up to `max_retries`.
pub fn fetch_user_history(
    transport: &mut dyn Transport,
    base_url: &str,
    username: &str,
    config: &FetchConfig,
) -> Result<(Vec<PostRecord>, UserMeta), FetchError> {
    let base = base_url.trim_end_matches('/');
    let username_norm = super::normalize_author(username);

    let about_url = format!("{base}/user/{username_norm}/about.json");
    let resp = get_with_backoff(transport, &about_url, config)?;
    match resp.status {
        200 => {}
        404 => return Err(FetchError::UserNotFound { username: username_norm }),
        status => return Err(FetchError::Status { url: about_url, status }),
    }
    let envelope: Envelope =
        serde_json::from_str(&resp.body).map_err(|e| malformed(&about_url, e))?;
    if envelope.kind != "t2" {
        return Err(malformed(&about_url, format!("expected kind t2, got {}", envelope.kind)));
    }
    let about: AboutData =
        serde_json::from_value(envelope.data).map_err(|e| malformed(&about_url, e))?;
    let snapshot_utc = config.snapshot_utc.or_else(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs() as i64)
    });
    let meta = UserMeta {
        username: super::normalize_author(&about.name),
        account_created_utc: about.created_utc.map(|f| f as i64),
        link_karma: about.link_karma,
        comment_karma: about.comment_karma,
        has_verified_email: about.has_verified_email,
        is_suspended: about.is_suspended,
        snapshot_utc,
    };

    let mut records = Vec::new();
    let mut after: Option<String> = None;
    for _page in 0..config.page_limit {
        transport.wait(config.politeness_delay);
        let mut url = format!(
            "{base}/user/{username_norm}/overview.json?limit={}&raw_json=1",
            config.page_size
        );
        if let Some(cursor) = &after {
            url.push_str("&after=");
            url.push_str(cursor);
        }
        let resp = get_with_backoff(transport, &url, config)?;
        match resp.status {
            200 => {}
            404 => return Err(FetchError::UserNotFound { username: username_norm }),
            status => return Err(FetchError::Status { url, status }),
        }
        let envelope: Envelope =
            serde_json::from_str(&resp.body).map_err(|e| malformed(&url, e))?;
        if envelope.kind != "Listing" {
            return Err(malformed(&url, format!("expected kind Listing, got {}", envelope.kind)));
        }
        let listing: ListingData =
            serde_json::from_value(envelope.data).map_err(|e| malformed(&url, e))?;
        for child in listing.children {
            records.push(parse_item(&url, child)?);
        }
        match listing.after {
            Some(cursor) if !cursor.is_empty() => after = Some(cursor),
            _ => break,
        }
    }
    Ok((records, meta))
}

/// One request/response pair of a recorded session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub url: String,
    pub status: u16,
    pub body: String,
}

/// Replays a recorded transcript in order, matching requested URLs.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    entries: VecDeque<TranscriptEntry>,
}

impl ReplayTransport {
    pub fn new(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        ReplayTransport { entries: entries.into_iter().collect() }
    }

    /// Load a transcript file (newline-delimited JSON entries).
    pub fn from_file(path: &Path) -> Result<Self, FetchError> {
        let display = path.display().to_string();
        let file = File::open(path)
            .map_err(|e| FetchError::Transcript { path: display.clone(), message: e.to_string() })?;
        let mut entries = VecDeque::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| FetchError::Transcript {
                path: display.clone(),
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(&line).map_err(|e| FetchError::Transcript {
                    path: display.clone(),
                    message: format!("line {}: {e}", i + 1),
                })?;
            entries.push_back(entry);
        }
        Ok(ReplayTransport { entries })
    }

    /// Entries left unconsumed (0 after a complete replay).
    pub fn remaining(&self) -> usize {
        self.entries.len()
    }
}

impl Transport for ReplayTransport {
    fn get(&mut self, url: &str) -> Result<HttpResponse, FetchError> {
        let entry = self
            .entries
            .pop_front()
            .ok_or_else(|| FetchError::TranscriptExhausted { url: url.to_owned() })?;
        if entry.url != url {
            return Err(FetchError::TranscriptMismatch {
                wanted: url.to_owned(),
                recorded: entry.url,
            });
        }
        Ok(HttpResponse { status: entry.status, body: entry.body })
    }

    fn wait(&mut self, _d: Duration) {}
}

/// Wraps a transport and appends every exchange to a transcript file that
/// [`ReplayTransport::from_file`] can replay.
pub struct RecordingTransport<T: Transport> {
    inner: T,
    out: BufWriter<File>,
    path: String,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn create(inner: T, path: &Path) -> Result<Self, FetchError> {
        let display = path.display().to_string();
        let file = File::create(path)
            .map_err(|e| FetchError::Transcript { path: display.clone(), message: e.to_string() })?;
        Ok(RecordingTransport { inner, out: BufWriter::new(file), path: display })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&mut self, url: &str) -> Result<HttpResponse, FetchError> {
        let resp = self.inner.get(url)?;
        let entry = TranscriptEntry {
            url: url.to_owned(),
            status: resp.status,
            body: resp.body.clone(),
        };
        serde_json::to_writer(&mut self.out, &entry)
            .map_err(std::io::Error::other)
            .and_then(|()| self.out.write_all(b"\n"))
            .and_then(|()| self.out.flush())
            .map_err(|e| FetchError::Transcript {
                path: self.path.clone(),
                message: e.to_string(),
            })?;
        Ok(resp)
    }

    fn wait(&mut self, d: Duration) {
        self.inner.wait(d);
    }
}

#[cfg(feature = "live")]
pub use live::LiveTransport;

#[cfg(feature = "live")]
mod live {
    use super::{FetchError, HttpResponse, Transport};

    /// Real HTTP client. Non-2xx statuses are returned as responses so the
    /// fetcher's own 404/429 handling applies.
    pub struct LiveTransport {
        agent: ureq::Agent,
    }

    impl LiveTransport {
        pub fn new(user_agent: &str) -> Self {
            let config = ureq::Agent::config_builder()
                .http_status_as_error(false)
                .user_agent(user_agent)
                .build();
            LiveTransport { agent: config.new_agent() }
        }
    }

    impl Transport for LiveTransport {
        fn get(&mut self, url: &str) -> Result<HttpResponse, FetchError> {
            let mut resp = self
                .agent
                .get(url)
                .call()
                .map_err(|e| FetchError::Transport(e.to_string()))?;
            let status = resp.status().as_u16();
            let body = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| FetchError::Transport(e.to_string()))?;
            Ok(HttpResponse { status, body })
        }
    }
}
