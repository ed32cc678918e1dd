use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use offload_sim::icl::*;
use offload_sim::llm_client::*;
use offload_sim::policies::PolicyKind;
use offload_sim::runner::{run_episode, ExperimentConfig, OracleKind};
use offload_sim::SimError;
use serde_json::{json, Value};

struct Request {
    headers: String,
    body: Value,
}

fn read_request(stream: &mut TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut headers = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        if line == "\r\n" {
            break;
        }
        headers.push_str(&line);
    }
    let len = headers
        .lines()
        .find_map(|l| {
            let (k, v) = l.split_once(':')?;
            k.eq_ignore_ascii_case("content-length").then(|| v.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some(Request { headers, body: serde_json::from_slice(&body).unwrap_or(Value::Null) })
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) {
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}

fn completion(content: &str) -> String {
    json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }).to_string()
}

/// Serves requests forever; `handler` maps (call index, request) to
/// (delay, status, body).
fn serve<F>(handler: F) -> (String, Arc<Mutex<Vec<Request>>>)
where
    F: Fn(usize, &Request) -> (Duration, u16, String) + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        let calls = AtomicUsize::new(0);
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let Some(req) = read_request(&mut stream) else { continue };
            let (delay, status, body) = handler(calls.fetch_add(1, Ordering::SeqCst), &req);
            log.lock().unwrap().push(req);
            thread::sleep(delay);
            respond(&mut stream, status, &body);
        }
    });
    (url, seen)
}

fn endpoint(url: &str, key_var: &str) -> OracleEndpointConfig {
    // Each test uses its own variable so parallel tests do not race.
    std::env::set_var(key_var, "test-key");
    OracleEndpointConfig {
        base_url: url.to_string(),
        model_name: "test-model".into(),
        api_key_env_var: key_var.into(),
        timeout_s: 2.0,
        max_retries: 2,
        temperature: 0.0,
        backoff_initial_s: 0.01,
    }
}

fn prompt() -> MetaPrompt {
    MetaPrompt {
        description: PromptTemplate::default().description().to_string(),
        examples: Vec::new(),
        query: Condition { task_type: offload_sim::delay::TaskType::Regular, token_bin: 5 },
        bin_width: 200,
    }
}

#[test]
fn sends_chat_completion_and_parses_reply() {
    let (url, seen) = serve(|_, _| (Duration::ZERO, 200, completion("OFFLOAD")));
    let mut oracle = RemoteOracle::new(endpoint(&url, "OFFLOAD_SIM_TEST_KEY_A")).unwrap();
    let p = prompt();
    assert_eq!(parse_reply(&oracle.answer(&p).unwrap()).unwrap(), offload_sim::delay::Decision::Offload);
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    let req = &seen[0];
    assert!(req.headers.starts_with("POST /v1/chat/completions "));
    assert!(req.headers.to_ascii_lowercase().contains("authorization: bearer test-key"));
    assert_eq!(req.body["model"], "test-model");
    assert_eq!(req.body["temperature"], 0.0);
    assert_eq!(req.body["messages"][0]["content"], p.render());
}

#[test]
fn retries_rate_limits_and_server_errors() {
    let (url, seen) = serve(|i, _| match i {
        0 => (Duration::ZERO, 429, "{}".into()),
        1 => (Duration::ZERO, 503, "{}".into()),
        _ => (Duration::ZERO, 200, completion("local")),
    });
    let mut oracle = RemoteOracle::new(endpoint(&url, "OFFLOAD_SIM_TEST_KEY_B")).unwrap();
    assert_eq!(oracle.answer(&prompt()).unwrap(), "local");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn gives_up_after_retry_budget() {
    let (url, seen) = serve(|_, _| (Duration::ZERO, 500, "{}".into()));
    let mut oracle = RemoteOracle::new(endpoint(&url, "OFFLOAD_SIM_TEST_KEY_C")).unwrap();
    assert!(matches!(oracle.answer(&prompt()), Err(SimError::Transport(_))));
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen) = serve(|_, _| (Duration::ZERO, 401, "{}".into()));
    let mut oracle = RemoteOracle::new(endpoint(&url, "OFFLOAD_SIM_TEST_KEY_D")).unwrap();
    assert!(matches!(oracle.answer(&prompt()), Err(SimError::Transport(_))));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn slow_server_hits_timeout_within_budget() {
    let (url, _) = serve(|_, _| (Duration::from_secs(3), 200, completion("local")));
    let cfg = OracleEndpointConfig { timeout_s: 0.2, max_retries: 1, ..endpoint(&url, "OFFLOAD_SIM_TEST_KEY_E") };
    let mut oracle = RemoteOracle::new(cfg.clone()).unwrap();
    let start = Instant::now();
    assert!(matches!(oracle.answer(&prompt()), Err(SimError::Transport(_))));
    assert!(start.elapsed() < cfg.budget() + Duration::from_millis(500), "{:?}", start.elapsed());
}

#[test]
fn missing_content_is_an_error() {
    let (url, _) = serve(|_, _| (Duration::ZERO, 200, json!({ "choices": [] }).to_string()));
    let mut oracle = RemoteOracle::new(endpoint(&url, "OFFLOAD_SIM_TEST_KEY_F")).unwrap();
    assert!(oracle.answer(&prompt()).is_err());
}

#[test]
fn missing_credential_is_config_error() {
    let cfg = OracleEndpointConfig { api_key_env_var: "OFFLOAD_SIM_TEST_KEY_UNSET".into(), ..Default::default() };
    assert!(matches!(RemoteOracle::new(cfg), Err(SimError::Config(_))));
}

/// Answers each prompt the way the mock oracle would, from the prompt text only.
fn mock_over_http(_: usize, req: &Request) -> (Duration, u16, String) {
    let text = req.body["messages"][0]["content"].as_str().unwrap_or_default();
    let mut examples = Vec::new();
    let mut query = None;
    for line in text.lines() {
        if line.starts_with("Example ") {
            examples.push(parse_example_line(line).unwrap());
        } else if let Some(kw) = line.strip_prefix("Now I give you a new condition to solve: ") {
            let fake = format!("Example 0: {kw}, Decision: local, Reward: 0, Evaluation: Good decision.");
            query = Some(parse_example_line(&fake).unwrap().condition);
        }
    }
    let d = mock_decision(&examples, &query.expect("query line"));
    (Duration::ZERO, 200, completion(&format!("My decision: {d}.")))
}

#[test]
fn remote_run_records_transcript_and_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (url, seen) = serve(mock_over_http);
    let mut cfg = ExperimentConfig { steps: 300, replications: 1, ..ExperimentConfig::default() };
    cfg.policy.kind = PolicyKind::Icl;
    let reference = run_episode(&cfg).unwrap().to_csv();

    let transcript = dir.path().join("t.jsonl");
    cfg.oracle.kind = OracleKind::Remote;
    cfg.oracle.remote = endpoint(&url, "OFFLOAD_SIM_TEST_KEY_G");
    cfg.oracle.transcript = Some(transcript.clone());
    let remote = run_episode(&cfg).unwrap().to_csv();
    assert_eq!(remote, reference);

    let calls = seen.lock().unwrap().len();
    let records: Vec<TranscriptRecord> = std::fs::read_to_string(&transcript)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), calls);
    assert!(records.iter().enumerate().all(|(i, r)| r.step == i && r.decision.is_some() && r.prompt_hash.len() == 64));

    cfg.oracle.kind = OracleKind::Replay;
    cfg.oracle.replay_from = Some(transcript);
    cfg.oracle.transcript = None;
    assert_eq!(run_episode(&cfg).unwrap().to_csv(), reference);
    assert_eq!(seen.lock().unwrap().len(), calls);
}

#[test]
fn replay_detects_diverging_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let mut rec = RecordingOracle::create(MockOracle, &path).unwrap();
    let p = prompt();
    rec.answer(&p).unwrap();
    drop(rec);
    let mut other = p.clone();
    other.query.token_bin = 6;
    assert!(ReplayOracle::load(&path).unwrap().answer(&other).is_err());
    let mut lax = ReplayOracle::load(&path).unwrap().without_prompt_check();
    assert_eq!(lax.answer(&other).unwrap(), "local");
    assert_eq!(lax.remaining(), 0);
    assert!(lax.answer(&p).is_err());
}
