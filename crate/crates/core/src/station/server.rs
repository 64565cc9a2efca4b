//! Websocket gateway and static asset server on one port.

use std::collections::HashMap;
use std::fs;
use std::io::{self, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use chrono::{DateTime, Utc};
use tungstenite::{Message, WebSocket};

use super::events::{Command, LinkEvent, Topic};
use super::gateway::{encode_error, gateway_decode, gateway_encode};
use super::StationError;

const POLL: Duration = Duration::from_millis(20);

/// Topics whose latest frame a newly connected client gets straight away.
const CACHED: [Topic; 4] = [Topic::Session, Topic::Gimbal, Topic::Stats, Topic::Sensor];

const FALLBACK_INDEX: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>trackstation</title></head>\n<body><h1>trackstation</h1><p>Gateway at <code>ws://HOST/ws</code>. No UI bundle is installed.</p></body></html>\n";

/// A command from a UI client, with a way to answer that client alone.
#[derive(Debug)]
pub struct Inbound {
    pub command: Command,
    pub reply: Sender<String>,
}

/// Frame sent to one client when the station refuses its command.
pub fn refusal_frame(id: &str, err: &StationError, time: DateTime<Utc>) -> String {
    let kind = match err {
        StationError::DuplicateCommand(_) => "duplicate_command",
        StationError::InvalidCommand { .. } => "schema_violation",
        _ => "command_failed",
    };
    serde_json::json!({
        "type": "error",
        "time": time,
        "body": { "error": kind, "id": id, "reason": err.to_string() }
    })
    .to_string()
}

#[derive(Default)]
struct Clients {
    senders: Vec<Sender<String>>,
    cache: HashMap<Topic, String>,
}

pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    commands: Receiver<Inbound>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn commands(&self) -> &Receiver<Inbound> {
        &self.commands
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds `addr` (port 0 picks one) and starts serving. `events` is a bus
/// subscription; every event on it goes to every client.
pub fn serve(
    addr: &str,
    static_dir: Option<PathBuf>,
    events: Receiver<LinkEvent>,
) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let clients = Arc::new(Mutex::new(Clients::default()));
    let (cmd_tx, cmd_rx) = mpsc::channel();

    let fan = {
        let clients = Arc::clone(&clients);
        let shutdown = Arc::clone(&shutdown);
        thread::spawn(move || fan_out(events, clients, shutdown))
    };
    let acceptor = {
        let shutdown = Arc::clone(&shutdown);
        thread::spawn(move || {
            let mut workers = Vec::new();
            while !shutdown.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let clients = Arc::clone(&clients);
                        let shutdown = Arc::clone(&shutdown);
                        let cmd_tx = cmd_tx.clone();
                        let dir = static_dir.clone();
                        workers.push(thread::spawn(move || {
                            if let Err(e) = connection(stream, dir.as_deref(), clients, cmd_tx, shutdown) {
                                log::debug!("connection closed: {e}");
                            }
                        }));
                    }
                    Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
                    Err(e) => log::warn!("accept failed: {e}"),
                }
            }
            for w in workers {
                let _ = w.join();
            }
        })
    };
    log::info!("gateway listening on {local}");
    Ok(ServerHandle {
        addr: local,
        shutdown,
        commands: cmd_rx,
        threads: vec![fan, acceptor],
    })
}

fn fan_out(events: Receiver<LinkEvent>, clients: Arc<Mutex<Clients>>, shutdown: Arc<AtomicBool>) {
    while !shutdown.load(Ordering::SeqCst) {
        match events.recv_timeout(POLL) {
            Ok(e) => {
                let frame = gateway_encode(&e);
                let mut c = clients.lock().unwrap();
                if CACHED.contains(&e.topic()) {
                    c.cache.insert(e.topic(), frame.clone());
                }
                c.senders.retain(|s| s.send(frame.clone()).is_ok());
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {}
            Err(mpsc::RecvTimeoutError::Disconnected) => return,
        }
    }
}

fn connection(
    stream: TcpStream,
    static_dir: Option<&Path>,
    clients: Arc<Mutex<Clients>>,
    commands: Sender<Inbound>,
    shutdown: Arc<AtomicBool>,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut head = [0u8; 4096];
    let n = stream.peek(&mut head)?;
    let request = String::from_utf8_lossy(&head[..n]).to_ascii_lowercase();
    if request.contains("upgrade: websocket") {
        let ws = tungstenite::accept(stream).map_err(io::Error::other)?;
        websocket(ws, clients, commands, shutdown)
    } else {
        static_file(stream, static_dir)
    }
}

fn websocket(
    mut ws: WebSocket<TcpStream>,
    clients: Arc<Mutex<Clients>>,
    commands: Sender<Inbound>,
    shutdown: Arc<AtomicBool>,
) -> io::Result<()> {
    ws.get_ref().set_read_timeout(Some(POLL))?;
    let (tx, rx) = mpsc::channel::<String>();
    {
        let mut c = clients.lock().unwrap();
        for topic in CACHED {
            if let Some(f) = c.cache.get(&topic) {
                let _ = tx.send(f.clone());
            }
        }
        c.senders.push(tx.clone());
    }
    loop {
        if shutdown.load(Ordering::SeqCst) {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
        loop {
            match rx.try_recv() {
                Ok(frame) => ws.send(Message::text(frame)).map_err(io::Error::other)?,
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return Ok(()),
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => match gateway_decode(&text) {
                Ok(command) => {
                    let inbound = Inbound {
                        command,
                        reply: tx.clone(),
                    };
                    if commands.send(inbound).is_err() {
                        return Ok(());
                    }
                }
                Err(e) => ws
                    .send(Message::text(encode_error(&e, Utc::now())))
                    .map_err(io::Error::other)?,
            },
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed) | Err(tungstenite::Error::AlreadyClosed) => {
                return Ok(())
            }
            Err(e) => return Err(io::Error::other(e)),
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "geojson" => "application/geo+json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "wasm" => "application/wasm",
        "woff2" => "font/woff2",
        _ => "application/octet-stream",
    }
}

/// Maps a request path onto the asset directory, refusing anything that
/// would leave it.
pub fn resolve_static(root: &Path, url_path: &str) -> Option<PathBuf> {
    let path = url_path.split(['?', '#']).next().unwrap_or("");
    let rel = path.trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if rel
        .components()
        .any(|c| !matches!(c, Component::Normal(_)))
    {
        return None;
    }
    Some(root.join(rel))
}

fn respond(stream: &mut TcpStream, status: &str, ctype: &str, body: &[u8]) -> io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    stream.write_all(body)?;
    stream.flush()
}

fn static_file(mut stream: TcpStream, root: Option<&Path>) -> io::Result<()> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    while !buf.windows(4).any(|w| w == b"\r\n\r\n") && buf.len() < 16 * 1024 {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }
    let text = String::from_utf8_lossy(&buf);
    let mut parts = text.lines().next().unwrap_or("").split_whitespace();
    let (method, target) = (parts.next().unwrap_or(""), parts.next().unwrap_or("/"));
    if method != "GET" && method != "HEAD" {
        return respond(&mut stream, "405 Method Not Allowed", "text/plain", b"method not allowed\n");
    }
    let is_index = matches!(target.split('?').next(), Some("/") | Some("/index.html"));
    let resolved = match root {
        Some(r) => resolve_static(r, target),
        None => Some(PathBuf::new()),
    };
    let Some(path) = resolved else {
        return respond(&mut stream, "403 Forbidden", "text/plain", b"forbidden\n");
    };
    match root.and_then(|_| fs::read(&path).ok()) {
        Some(body) => respond(&mut stream, "200 OK", content_type(&path), &body),
        None if is_index => respond(
            &mut stream,
            "200 OK",
            "text/html; charset=utf-8",
            FALLBACK_INDEX.as_bytes(),
        ),
        None => respond(&mut stream, "404 Not Found", "text/plain", b"not found\n"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traversal_refused() {
        let root = Path::new("/srv/ui");
        assert_eq!(resolve_static(root, "/"), Some(root.join("index.html")));
        assert_eq!(
            resolve_static(root, "/assets/app.js?v=3"),
            Some(root.join("assets/app.js"))
        );
        assert_eq!(resolve_static(root, "/../etc/passwd"), None);
        assert_eq!(resolve_static(root, "/a/../../b"), None);
    }

    #[test]
    fn content_types() {
        assert_eq!(content_type(Path::new("a.js")), "text/javascript; charset=utf-8");
        assert_eq!(content_type(Path::new("x.bin")), "application/octet-stream");
    }
}
