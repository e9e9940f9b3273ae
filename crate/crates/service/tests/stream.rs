mod common;

use std::net::SocketAddr;
use std::time::Duration;

use common::*;
use futures_util::{SinkExt, StreamExt};
use interviewer_service::config::ServiceConfig;
use interviewer_service::Server;
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

struct Running {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    done: tokio::task::JoinHandle<()>,
    _dirs: Dirs,
}

async fn serve(adjust: impl FnOnce(&mut ServiceConfig)) -> Running {
    let (mut config, dirs) = config();
    adjust(&mut config);
    let server = Server::start(config).await.unwrap();
    let addr = server.local_addr();
    let (stop, stopped) = oneshot::channel::<()>();
    let done = tokio::spawn(async move {
        server
            .run(async {
                let _ = stopped.await;
            })
            .await
            .unwrap();
    });
    Running {
        addr,
        stop: Some(stop),
        done,
        _dirs: dirs,
    }
}

impl Running {
    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        raw_request(self.addr, "POST", path, Some(body)).await
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        raw_request(self.addr, "GET", path, None).await
    }

    async fn create(&self) -> String {
        let (status, body) = self.post("/sessions", json!({"script_id": "humanlike-ai"})).await;
        assert_eq!(status, 201);
        body["session_id"].as_str().unwrap().to_string()
    }

    async fn connect(&self, id: &str, after: u64) -> Result<Ws, tokio_tungstenite::tungstenite::Error> {
        let url = format!("ws://{}/sessions/{id}/stream?after_seq={after}", self.addr);
        tokio_tungstenite::connect_async(url).await.map(|(ws, _)| ws)
    }

    async fn shutdown(mut self) {
        self.stop.take().unwrap().send(()).unwrap();
        self.done.await.unwrap();
    }
}

/// A minimal HTTP/1.1 client so the tests need no extra client crate.
async fn raw_request(addr: SocketAddr, method: &str, path: &str, body: Option<Value>) -> (u16, Value) {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut stream = TcpStream::connect(addr).await.unwrap();
    let payload = body.map(|b| b.to_string()).unwrap_or_default();
    let head = format!(
        "{method} {path} HTTP/1.1\r\nhost: {addr}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
        payload.len()
    );
    stream.write_all(head.as_bytes()).await.unwrap();
    stream.write_all(payload.as_bytes()).await.unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).await.unwrap();
    let text = String::from_utf8(raw).unwrap();
    let status: u16 = text[9..12].parse().unwrap();
    let (headers, body) = text.split_once("\r\n\r\n").unwrap();
    let body = if headers.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        dechunk(body)
    } else {
        body.to_string()
    };
    (status, serde_json::from_str(&body).unwrap_or(Value::Null))
}

fn dechunk(mut body: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, rest) = body.split_once("\r\n").unwrap();
        let size = usize::from_str_radix(size.trim(), 16).unwrap();
        if size == 0 {
            return out;
        }
        out.push_str(&rest[..size]);
        body = &rest[size + 2..];
    }
}

async fn next_json(ws: &mut Ws) -> Option<Value> {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("stream stalled")?;
        match msg.ok()? {
            Message::Text(text) => return Some(serde_json::from_str(text.as_str()).unwrap()),
            Message::Close(_) => return None,
            _ => {}
        }
    }
}

/// Read until a system utterance or a control message arrives.
async fn until_reply(ws: &mut Ws, seen: &mut Vec<Value>) -> Option<Value> {
    while let Some(v) = next_json(ws).await {
        if v.get("type").is_some() {
            return Some(v);
        }
        let reply = v["kind"] == "system_utterance";
        seen.push(v);
        if reply {
            return None;
        }
    }
    None
}

fn seqs(events: &[Value]) -> Vec<u64> {
    events.iter().map(|e| e["seq"].as_u64().unwrap()).collect()
}

#[tokio::test]
async fn stream_delivers_every_event_in_order_and_matches_the_transcript() {
    let server = serve(|_| {}).await;
    let wire = validator("wire");
    let id = server.create().await;
    let mut ws = server.connect(&id, 0).await.unwrap();
    let mut seen = Vec::new();
    assert!(until_reply(&mut ws, &mut seen).await.is_none());

    let complete = loop {
        let (topic, _) = last_system(&seen).unwrap();
        ws.send(Message::Text(user_text(answer_for(&topic)).to_string().into()))
            .await
            .unwrap();
        if let Some(control) = until_reply(&mut ws, &mut seen).await {
            break control;
        }
        if last_system(&seen).unwrap().1 == "close" {
            break loop {
                let v = next_json(&mut ws).await.unwrap();
                if v.get("type").is_some() {
                    break v;
                }
                seen.push(v);
            };
        }
    };
    assert_valid(&wire, &complete);
    assert_eq!(complete["type"], "interview_complete");
    assert_eq!(complete["status"], "complete");
    assert_eq!(complete["session_id"], id.as_str());
    assert!(next_json(&mut ws).await.is_none(), "stream closes after completion");

    for e in &seen {
        assert_valid(&wire, e);
    }
    assert_eq!(seqs(&seen), (1..=seen.len() as u64).collect::<Vec<_>>());
    let (status, transcript) = server.get(complete["transcript"].as_str().unwrap()).await;
    assert_eq!(status, 200);
    assert_eq!(transcript["events"].as_array().unwrap(), &seen);
    server.shutdown().await;
}

#[tokio::test]
async fn reconnecting_resumes_after_the_given_seq() {
    let server = serve(|_| {}).await;
    let id = server.create().await;
    let (_, first) = server
        .post(&format!("/sessions/{id}/events"), user_text(AGREE))
        .await;
    let produced = first.as_array().unwrap().len();
    assert!(produced > 0);

    let mut ws = server.connect(&id, 0).await.unwrap();
    let mut all = Vec::new();
    while all.last().is_none_or(|e: &Value| e["seq"].as_u64().unwrap() < produced as u64 + 1) {
        all.push(next_json(&mut ws).await.unwrap());
    }
    drop(ws);

    // the old connection may take a moment to release
    let mut resumed = None;
    for _ in 0..100 {
        if let Ok(ws) = server.connect(&id, 2).await {
            resumed = Some(ws);
            break;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    let mut ws = resumed.expect("reconnect accepted");
    let mut tail = Vec::new();
    for _ in 2..all.len() {
        tail.push(next_json(&mut ws).await.unwrap());
    }
    assert_eq!(tail, all[2..]);
    server.shutdown().await;
}

#[tokio::test]
async fn a_second_stream_is_refused() {
    let server = serve(|_| {}).await;
    let id = server.create().await;
    let _first = server.connect(&id, 0).await.unwrap();
    let second = server.connect(&id, 0).await;
    match second {
        Err(tokio_tungstenite::tungstenite::Error::Http(resp)) => assert_eq!(resp.status(), 409),
        other => panic!("expected a 409, got {other:?}"),
    }
    server.shutdown().await;
}

#[tokio::test]
async fn bad_client_messages_get_error_controls() {
    let server = serve(|_| {}).await;
    let id = server.create().await;
    let mut ws = server.connect(&id, 0).await.unwrap();
    ws.send(Message::Text("{\"type\":\"nonsense\"}".into())).await.unwrap();
    let control = loop {
        let v = next_json(&mut ws).await.unwrap();
        if v.get("type").is_some() {
            break v;
        }
    };
    assert_eq!(control["type"], "error");
    assert_eq!(control["code"], "bad_request");
    assert_valid(&validator("wire"), &control);
    server.shutdown().await;
}

#[tokio::test]
async fn heartbeats_arrive_while_idle() {
    let server = serve(|c| c.timing.heartbeat_s = 0.05).await;
    let id = server.create().await;
    let mut ws = server.connect(&id, 0).await.unwrap();
    let beat = loop {
        let v = next_json(&mut ws).await.unwrap();
        if v.get("type").is_some() {
            break v;
        }
    };
    assert_eq!(beat, json!({"type": "heartbeat"}));
    assert_valid(&validator("wire"), &beat);
    server.shutdown().await;
}

#[tokio::test]
async fn silence_is_injected_after_the_turn_timeout() {
    // a fast clock makes the turn timeout elapse in milliseconds
    let server = serve(|c| c.timing.clock_rate = 1000.0).await;
    let id = server.create().await;
    let mut ws = server.connect(&id, 0).await.unwrap();
    let mut seen = Vec::new();
    until_reply(&mut ws, &mut seen).await;
    let asked = seen.len();
    // the next system utterance arrives with no participant input
    until_reply(&mut ws, &mut seen).await;
    let silent_turn = seen[asked..]
        .iter()
        .find(|e| e["kind"] == "user_utterance")
        .expect("a silent user turn is recorded");
    assert_eq!(silent_turn["payload"]["asr_status"], "silence", "{silent_turn}");
    server.shutdown().await;
}

#[tokio::test]
async fn idle_sessions_expire_as_incomplete() {
    let server = serve(|c| {
        c.timing.idle_expiry_s = 0.1;
        c.timing.max_auto_silences = 0;
    })
    .await;
    let id = server.create().await;
    let mut ws = server.connect(&id, 0).await.unwrap();
    let control = loop {
        let v = next_json(&mut ws).await.unwrap();
        if v.get("type").is_some() {
            break v;
        }
    };
    assert_eq!(control["type"], "interview_complete");
    assert_eq!(control["status"], "incomplete");
    let (_, transcript) = server.get(&format!("/sessions/{id}/transcript")).await;
    assert_eq!(transcript["status"], "incomplete");

    // a finished session can still be replayed
    let mut replay = server.connect(&id, 0).await.unwrap();
    let mut events = Vec::new();
    let end = loop {
        let v = next_json(&mut replay).await.unwrap();
        if v.get("type").is_some() {
            break v;
        }
        events.push(v);
    };
    assert_eq!(&events, transcript["events"].as_array().unwrap());
    assert_eq!(end["status"], "incomplete");
    server.shutdown().await;
}

#[tokio::test]
async fn prosody_frames_alone_yield_a_backchannel() {
    let server = serve(|_| {}).await;
    let id = server.create().await;
    let mut ws = server.connect(&id, 0).await.unwrap();
    ws.send(Message::Text(json!({"type": "voice_activity", "active": true}).to_string().into()))
        .await
        .unwrap();
    // frames stamped well after the opening question has been spoken
    for frame in interviewer_core::listening::synthetic_frames("one two three four five six seven eight", 3.0, 60_000) {
        let mut msg = serde_json::to_value(frame).unwrap();
        msg["type"] = json!("prosody_frame");
        ws.send(Message::Text(msg.to_string().into())).await.unwrap();
    }
    let backchannel = loop {
        let v = next_json(&mut ws).await.unwrap();
        if v["kind"] == "backchannel" {
            break v;
        }
    };
    assert_valid(&validator("wire"), &backchannel);
    server.shutdown().await;
}

#[tokio::test]
async fn shutdown_closes_live_sessions_as_incomplete() {
    let server = serve(|_| {}).await;
    let id = server.create().await;
    let data_dir = tempfile::tempdir().unwrap();
    let sessions = data_dir.path().join("sessions");
    copy_after_shutdown(server, &sessions).await;
    let store = interviewer_core::transcript::TranscriptStore::open(sessions).unwrap();
    let t = store.load(&id).unwrap();
    assert_eq!(t.status, interviewer_core::transcript::SessionStatus::Incomplete);
}

/// Stop the server, then copy its stored sessions to `to` before its temp
/// dirs are dropped.
async fn copy_after_shutdown(mut server: Running, to: &std::path::Path) {
    server.stop.take().unwrap().send(()).unwrap();
    (&mut server.done).await.unwrap();
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(server._dirs.data.path().join("sessions")).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), to.join(entry.file_name())).unwrap();
    }
}
