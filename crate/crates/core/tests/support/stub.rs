//! Scripted HTTP/1.1 server for exercising the remote NLI client.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Instant;

pub type Handler = Box<dyn Fn(&str) -> (u16, String) + Send>;

pub enum Reply {
    Status(u16),
    Body(u16, String),
    With(Handler),
}

#[derive(Debug, Clone)]
pub struct Received {
    pub at: Instant,
    pub path: String,
    pub body: String,
}

pub struct StubServer {
    pub addr: SocketAddr,
    received: Arc<Mutex<Vec<Received>>>,
    _handle: JoinHandle<()>,
}

/// Logits derived from each pair so tests can check alignment:
/// `[index, premise length, hypothesis length]`.
pub fn echo_logits(body: &str) -> (u16, String) {
    let req: serde_json::Value = serde_json::from_str(body).expect("request is JSON");
    let rows: Vec<serde_json::Value> = req["pairs"]
        .as_array()
        .expect("pairs array")
        .iter()
        .enumerate()
        .map(|(i, p)| {
            serde_json::json!([
                i as f64,
                p["premise"].as_str().unwrap().len() as f64,
                p["hypothesis"].as_str().unwrap().len() as f64
            ])
        })
        .collect();
    (200, serde_json::json!({ "logits": rows }).to_string())
}

fn read_request(stream: &mut TcpStream) -> Option<(String, String)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).ok()?;
    let path = request_line.split_whitespace().nth(1)?.to_string();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    Some((path, String::from_utf8(body).ok()?))
}

impl StubServer {
    /// Serves one scripted reply per request, then 500s once the script is
    /// exhausted.
    pub fn start(script: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let addr = listener.local_addr().unwrap();
        let received = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&received);
        let mut script: VecDeque<Reply> = script.into();
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let Some((path, body)) = read_request(&mut stream) else {
                    continue;
                };
                log.lock().unwrap().push(Received {
                    at: Instant::now(),
                    path,
                    body: body.clone(),
                });
                let (status, payload) = match script.pop_front() {
                    Some(Reply::Status(s)) => (s, "{}".to_string()),
                    Some(Reply::Body(s, b)) => (s, b),
                    Some(Reply::With(f)) => f(&body),
                    None => (500, "{}".to_string()),
                };
                let response = format!(
                    "HTTP/1.1 {status} Scripted\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                let _ = stream.write_all(response.as_bytes());
                let _ = stream.flush();
            }
        });
        StubServer {
            addr,
            received,
            _handle: handle,
        }
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn received(&self) -> Vec<Received> {
        self.received.lock().unwrap().clone()
    }
}
