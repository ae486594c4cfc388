//! WebSocket telemetry server.
//!
//! The pipeline thread calls [`TelemetryServer::broadcast`] once per frame
//! and drains [`TelemetryServer::controls`] at frame boundaries; it never
//! blocks on a client. Each client gets its own thread and a bounded report
//! queue. A backed-up queue first loses thumbnails, then whole reports; the
//! next report that does get through carries the number lost in `dropped`.

use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_channel::{bounded, Receiver, Sender, TrySendError};
use serde_json::Value;
use tungstenite::{Message, WebSocket};

use crate::error::{EngineError, Result};
use crate::pipeline::FrameReport;
use crate::protocol::{parse_client_message, report_message, ControlMessage, Reply};

pub const DEFAULT_QUEUE: usize = 64;
const CONTROL_QUEUE: usize = 256;
const REPLY_QUEUE: usize = 32;
const POLL: Duration = Duration::from_millis(2);

/// A control message waiting for the pipeline, with a way back to its
/// sender.
#[derive(Debug)]
pub struct ControlRequest {
    pub message: ControlMessage,
    reply: Sender<String>,
}

impl ControlRequest {
    pub fn respond(&self, reply: &Reply) {
        // A full or closed reply queue means the client is gone or stuck.
        let _ = self.reply.try_send(reply.to_json().to_string());
    }
}

struct Client {
    reports: Sender<String>,
    dropped: u64,
}

pub struct TelemetryServer {
    addr: SocketAddr,
    clients: Arc<Mutex<Vec<Client>>>,
    controls: Receiver<ControlRequest>,
    shutdown: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

impl TelemetryServer {
    /// Binds and starts accepting; port 0 picks a free port.
    pub fn bind(addr: impl ToSocketAddrs, queue_capacity: usize) -> Result<Self> {
        let listener = TcpListener::bind(addr).map_err(|e| EngineError::Telemetry(format!("bind: {e}")))?;
        listener
            .set_nonblocking(true)
            .map_err(|e| EngineError::Telemetry(e.to_string()))?;
        let addr = listener.local_addr().map_err(|e| EngineError::Telemetry(e.to_string()))?;
        let clients = Arc::new(Mutex::new(Vec::new()));
        let shutdown = Arc::new(AtomicBool::new(false));
        let (control_tx, controls) = bounded(CONTROL_QUEUE);
        let acceptor = {
            let clients = Arc::clone(&clients);
            let shutdown = Arc::clone(&shutdown);
            std::thread::Builder::new()
                .name("telemetry-accept".into())
                .spawn(move || accept_loop(listener, clients, control_tx, shutdown, queue_capacity.max(1)))
                .map_err(|e| EngineError::Telemetry(e.to_string()))?
        };
        Ok(Self {
            addr,
            clients,
            controls,
            shutdown,
            acceptor: Some(acceptor),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn controls(&self) -> &Receiver<ControlRequest> {
        &self.controls
    }

    pub fn client_count(&self) -> usize {
        self.clients.lock().expect("client list").len()
    }

    pub fn broadcast(&self, report: &FrameReport) {
        let mut clients = self.clients.lock().expect("client list");
        if clients.is_empty() {
            return;
        }
        let full = report_message(report);
        let lean = report.thumbnail.is_some().then(|| {
            let mut v = full.clone();
            if let Value::Object(m) = &mut v {
                m.remove("thumbnail");
            }
            v
        });
        clients.retain_mut(|c| {
            let cap = c.reports.capacity().unwrap_or(usize::MAX);
            let mut msg = match &lean {
                Some(lean) if c.reports.len() * 2 >= cap => lean.clone(),
                _ => full.clone(),
            };
            msg["dropped"] = Value::from(c.dropped);
            match c.reports.try_send(msg.to_string()) {
                Ok(()) => {
                    c.dropped = 0;
                    true
                }
                Err(TrySendError::Full(_)) => {
                    c.dropped += 1;
                    true
                }
                Err(TrySendError::Disconnected(_)) => false,
            }
        });
    }

    /// Sends a message to every client outside the report queue accounting.
    pub fn announce(&self, reply: &Reply) {
        let text = reply.to_json().to_string();
        let clients = self.clients.lock().expect("client list");
        for c in clients.iter() {
            let _ = c.reports.try_send(text.clone());
        }
    }
}

impl Drop for TelemetryServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

fn accept_loop(
    listener: TcpListener,
    clients: Arc<Mutex<Vec<Client>>>,
    controls: Sender<ControlRequest>,
    shutdown: Arc<AtomicBool>,
    queue_capacity: usize,
) {
    let mut workers: Vec<JoinHandle<()>> = Vec::new();
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let (tx, rx) = bounded(queue_capacity);
                let controls = controls.clone();
                let shutdown = Arc::clone(&shutdown);
                let clients = Arc::clone(&clients);
                let spawned = std::thread::Builder::new()
                    .name("telemetry-client".into())
                    .spawn(move || {
                        if let Some(ws) = handshake(stream) {
                            clients.lock().expect("client list").push(Client { reports: tx, dropped: 0 });
                            serve_client(ws, rx, controls, shutdown);
                        }
                    });
                if let Ok(h) = spawned {
                    workers.push(h);
                }
                workers.retain(|h| !h.is_finished());
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL * 5),
            Err(_) => std::thread::sleep(POLL * 5),
        }
    }
    for h in workers {
        let _ = h.join();
    }
}

fn handshake(stream: TcpStream) -> Option<WebSocket<TcpStream>> {
    stream.set_nonblocking(false).ok()?;
    stream.set_nodelay(true).ok()?;
    stream.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    let ws = tungstenite::accept(stream).ok()?;
    ws.get_ref().set_read_timeout(Some(POLL)).ok()?;
    Some(ws)
}

fn serve_client(
    mut ws: WebSocket<TcpStream>,
    reports: Receiver<String>,
    controls: Sender<ControlRequest>,
    shutdown: Arc<AtomicBool>,
) {
    let (reply_tx, replies) = bounded::<String>(REPLY_QUEUE);
    loop {
        if shutdown.load(Ordering::SeqCst) {
            let _ = ws.close(None);
            let _ = ws.flush();
            return;
        }
        for text in replies.try_iter().chain(reports.try_iter()) {
            if ws.send(Message::text(text)).is_err() {
                return;
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                let request = parse_client_message(text.as_str()).map(|message| ControlRequest {
                    message,
                    reply: reply_tx.clone(),
                });
                let refusal = match request {
                    Ok(req) => match controls.try_send(req) {
                        Ok(()) => None,
                        Err(_) => Some(Reply::Err {
                            key: None,
                            detail: "control queue full".into(),
                        }),
                    },
                    Err(r) => Some(r),
                };
                if let Some(r) = refusal {
                    if ws.send(Message::text(r.to_json().to_string())).is_err() {
                        return;
                    }
                }
            }
            Ok(Message::Close(_)) => {
                let _ = ws.flush();
                return;
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => return,
        }
    }
}
