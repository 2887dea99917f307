//! Replays recorded transcripts in place of live endpoints.
//!
//! Recorded entries are matched on their request key. Fixture entries with an
//! empty `request_key` are served in file order, per call kind, to any request
//! whose key has no recorded match; hand-assembled fixtures use this form.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use super::{
    request_key, CallKind, ClientError, Embedder, GeneratedImage, ImageGenerator, ImageRequest,
    ModelRequest, ModelTranscript, OnlineImage, OnlineSource, TextModel, TranscriptLog,
};

#[derive(Debug, Default)]
pub struct Replay {
    id: String,
    by_key: HashMap<String, String>,
    queued: Mutex<HashMap<CallKind, VecDeque<String>>>,
}

impl Replay {
    pub fn from_transcripts(id: impl Into<String>, entries: &[ModelTranscript]) -> Replay {
        let mut by_key = HashMap::new();
        let mut queued: HashMap<CallKind, VecDeque<String>> = HashMap::new();
        for t in entries {
            let Some(raw) = &t.raw_response else { continue };
            if t.request_key.is_empty() {
                queued.entry(t.kind).or_default().push_back(raw.clone());
            } else {
                by_key.insert(format!("{}:{}", t.kind.as_str(), t.request_key), raw.clone());
            }
        }
        Replay { id: id.into(), by_key, queued: Mutex::new(queued) }
    }

    pub fn from_file(path: &Path) -> Result<Replay, ClientError> {
        let entries = TranscriptLog::read_file(path)
            .map_err(|e| ClientError::Config(format!("{}: {e}", path.display())))?;
        Ok(Replay::from_transcripts(format!("replay:{}", path.display()), &entries))
    }

    fn lookup(&self, kind: CallKind, request: &serde_json::Value) -> Result<String, ClientError> {
        let key = request_key(kind, request);
        if let Some(raw) = self.by_key.get(&format!("{}:{key}", kind.as_str())) {
            return Ok(raw.clone());
        }
        self.queued
            .lock()
            .expect("replay lock poisoned")
            .get_mut(&kind)
            .and_then(VecDeque::pop_front)
            .ok_or(ClientError::ReplayMiss(key))
    }
}

fn parse<T: serde::de::DeserializeOwned>(raw: &str) -> Result<T, ClientError> {
    serde_json::from_str(raw).map_err(|e| ClientError::Malformed(e.to_string()))
}

impl TextModel for Replay {
    fn endpoint_id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError> {
        self.lookup(CallKind::Text, &serde_json::to_value(request).expect("serializes"))
    }
}

impl Embedder for Replay {
    fn endpoint_id(&self) -> &str {
        &self.id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ClientError> {
        parse(&self.lookup(CallKind::Embed, &serde_json::json!({ "input": texts }))?)
    }
}

impl ImageGenerator for Replay {
    fn endpoint_id(&self) -> &str {
        &self.id
    }

    fn generate(&self, request: &ImageRequest) -> Result<Vec<GeneratedImage>, ClientError> {
        parse(&self.lookup(CallKind::Image, &serde_json::to_value(request).expect("serializes"))?)
    }
}

impl OnlineSource for Replay {
    fn endpoint_id(&self) -> &str {
        &self.id
    }

    fn search(&self, query: &str, limit: usize) -> Result<Vec<OnlineImage>, ClientError> {
        parse(&self.lookup(
            CallKind::Online,
            &serde_json::json!({ "query": query, "limit": limit }),
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::mock::EchoModel;
    use crate::client::Gateway;

    #[test]
    fn recorded_session_replays_exactly() {
        let gw = Gateway::for_tests();
        let req = ModelRequest::text("describe the pine");
        let live = gw.complete(&EchoModel::default(), &req).unwrap();

        let replay = Replay::from_transcripts("r", &gw.log.entries());
        assert_eq!(replay.complete(&req).unwrap(), live);
        assert!(matches!(
            replay.complete(&ModelRequest::text("something else")),
            Err(ClientError::ReplayMiss(_))
        ));
    }

    #[test]
    fn keyless_entries_serve_in_order() {
        let mk = |raw: &str| ModelTranscript {
            kind: CallKind::Text,
            endpoint_id: "fixture".into(),
            request_key: String::new(),
            request: serde_json::Value::Null,
            raw_response: Some(raw.into()),
            error: None,
            attempt: 0,
            timestamp: chrono::Utc::now(),
        };
        let replay = Replay::from_transcripts("r", &[mk("first"), mk("second")]);
        assert_eq!(replay.complete(&ModelRequest::text("a")).unwrap(), "first");
        assert_eq!(replay.complete(&ModelRequest::text("b")).unwrap(), "second");
        assert!(replay.complete(&ModelRequest::text("c")).is_err());
    }
}
