//! Client for a remote synthesis service.
//!
//! `POST {endpoint}/synthesize` with
//! `{"pairs": [{"in": grid, "out": grid}], "beam_width", "top_k", "seed"}`
//! (at most five pairs, grids in the cell-mask form) answered by
//! `{"candidates": [{"tokens": [string], "score": real}]}`, best first.
//! `GET {endpoint}/healthz` reports liveness.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Candidate, CandidateSet, Generator, GeneratorParams, SynthesisError, CONDITIONING_PAIRS};
use crate::lang::{parse_tokens, TokenSeq};
use crate::sampling::{IoPair, SpecSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeRequest {
    pub pairs: Vec<IoPair>,
    pub beam_width: usize,
    pub top_k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub tokens: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeResponse {
    pub candidates: Vec<WireCandidate>,
}

impl SynthesizeRequest {
    pub fn new(spec: &SpecSet, params: &GeneratorParams) -> SynthesizeRequest {
        SynthesizeRequest {
            pairs: spec.pairs.iter().take(CONDITIONING_PAIRS).cloned().collect(),
            beam_width: params.beam_width,
            top_k: params.top_k,
            seed: params.seed,
        }
    }
}

/// Turns a response into a candidate set, dropping token streams that do
/// not parse and keeping the service's order.
pub fn decode_response(response: SynthesizeResponse, top_k: usize) -> CandidateSet {
    let mut set = CandidateSet::default();
    for wire in response.candidates {
        let program = TokenSeq::from_terminals(wire.tokens.iter().map(String::as_str))
            .and_then(|tokens| parse_tokens(&tokens));
        match program {
            Ok(program) if set.len() < top_k => set.candidates.push(Candidate { program, score: wire.score }),
            Ok(_) => {}
            Err(_) => set.dropped += 1,
        }
    }
    set
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Gate {
        Gate { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

pub struct RemoteGenerator {
    endpoint: String,
    agent: ureq::Agent,
    gate: Gate,
}

impl RemoteGenerator {
    pub fn new(endpoint: &str, max_in_flight: usize, timeout: Duration) -> RemoteGenerator {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteGenerator { endpoint: endpoint.trim_end_matches('/').to_string(), agent, gate: Gate::new(max_in_flight) }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn health(&self) -> Result<(), SynthesisError> {
        let resp = self
            .agent
            .get(&format!("{}/healthz", self.endpoint))
            .call()
            .map_err(|e| SynthesisError::Unavailable(e.to_string()))?;
        match resp.status().as_u16() {
            200..=299 => Ok(()),
            code => Err(SynthesisError::Unavailable(format!("health check returned {code}"))),
        }
    }
}

impl Generator for RemoteGenerator {
    fn name(&self) -> &str {
        "remote"
    }

    fn generate(&self, spec: &SpecSet, params: &GeneratorParams) -> Result<CandidateSet, SynthesisError> {
        if spec.is_empty() {
            return Err(SynthesisError::EmptySpec);
        }
        let request = SynthesizeRequest::new(spec, params);
        let _permit = self.gate.acquire();
        let mut resp = self
            .agent
            .post(&format!("{}/synthesize", self.endpoint))
            .send_json(&request)
            .map_err(|e| SynthesisError::Unavailable(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 503 || status >= 500 {
            return Err(SynthesisError::Unavailable(format!("service returned {status}")));
        }
        if !(200..300).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(SynthesisError::Protocol(format!("service returned {status}: {body}")));
        }
        let response: SynthesizeResponse =
            resp.body_mut().read_json().map_err(|e| SynthesisError::Protocol(e.to_string()))?;
        Ok(decode_response(response, params.top_k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::GridState;

    #[test]
    fn request_truncates_to_five_pairs() {
        let g = GridState::from_ascii("> . / . .").unwrap();
        let pair = IoPair { input: g.clone(), output: g };
        let spec = SpecSet::new(vec![pair; 7]);
        let req = SynthesizeRequest::new(&spec, &GeneratorParams::default());
        assert_eq!(req.pairs.len(), 5);
        assert_eq!(req.beam_width, 64);
        let json = serde_json::to_value(&req).unwrap();
        assert_eq!(json["pairs"][0]["in"]["cells"][0], 8);
        assert_eq!(json["top_k"], 50);
    }

    #[test]
    fn decode_drops_unparseable() {
        let ok = |s: &str| WireCandidate { tokens: s.split(' ').map(String::from).collect(), score: 1.0 };
        let response = SynthesizeResponse {
            candidates: vec![
                ok("def run ( ) : move ( )"),
                ok("def run ( ) : move ("),
                ok("def run ( ) : turnLeft ( )"),
                ok("def run ( ) : repeat ( 3 ) : putMarker ( )"),
                ok("def run ( ) : { move ( ) ; pickMarker ( ) }"),
            ],
        };
        let set = decode_response(response, 50);
        assert_eq!(set.len(), 4);
        assert_eq!(set.dropped, 1);
        assert_eq!(set.candidates[1].program.emit(), "def run(): turnLeft()");
    }

    /// Serves one canned HTTP response per accepted connection.
    fn stub(responses: Vec<(u16, String)>) -> String {
        use std::io::{BufRead, BufReader, Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut request = vec![0; length];
                reader.read_exact(&mut request).unwrap();
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        format!("http://{addr}")
    }

    fn spec() -> SpecSet {
        let g = GridState::from_ascii("> . / . .").unwrap();
        SpecSet::new(vec![IoPair { input: g.clone(), output: g }])
    }

    #[test]
    fn status_codes_map_to_errors() {
        let ok = r#"{"candidates":[{"tokens":["def","run","(",")",":","move","(",")"],"score":-0.5}]}"#;
        let url = stub(vec![
            (200, ok.to_string()),
            (503, "{}".to_string()),
            (400, "bad".to_string()),
            (200, "not json".to_string()),
        ]);
        let remote = RemoteGenerator::new(&url, 2, Duration::from_secs(5));
        let params = GeneratorParams::default();
        let set = remote.generate(&spec(), &params).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.candidates[0].score, -0.5);
        assert!(matches!(remote.generate(&spec(), &params), Err(SynthesisError::Unavailable(_))));
        assert!(matches!(remote.generate(&spec(), &params), Err(SynthesisError::Protocol(_))));
        assert!(matches!(remote.generate(&spec(), &params), Err(SynthesisError::Protocol(_))));
    }

    #[test]
    fn unreachable_service_is_unavailable() {
        let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let remote = RemoteGenerator::new(&format!("http://127.0.0.1:{port}"), 1, Duration::from_secs(2));
        assert!(matches!(remote.generate(&spec(), &GeneratorParams::default()), Err(SynthesisError::Unavailable(_))));
        assert!(remote.health().is_err());
    }
}
