//! Session service: one websocket per client at `/ws`, newline-delimited JSON
//! messages, realtime sessions paced at 30 ticks per second. Static client
//! assets are served from a directory when one is configured.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::time::MissedTickBehavior;
use tower_http::services::ServeDir;

use duelevo_core::enemies::ArchetypeTable;
use duelevo_core::network::{Genome, GenomeFile};
use duelevo_core::session::{ClientMessage, Pace, ServerMessage, Session, PROTOCOL_VERSION, REALTIME_TPS};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("binding {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Directory of static client files served at `/`.
    pub assets: Option<PathBuf>,
    /// Directory genome references are resolved against.
    pub genomes: PathBuf,
    pub archetypes: ArchetypeTable,
}

struct Shared {
    config: ServerConfig,
    next_session: AtomicU64,
}

pub fn router(config: ServerConfig) -> Router {
    let assets = config.assets.clone();
    let shared = Arc::new(Shared {
        config,
        next_session: AtomicU64::new(1),
    });
    let app = Router::new().route("/ws", get(upgrade)).with_state(shared);
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Binds `addr` and serves until the task is dropped. Returns the bound address
/// through `on_bound` so callers may pass port 0.
pub async fn serve(addr: &str, config: ServerConfig, on_bound: impl FnOnce(SocketAddr)) -> Result<(), ServeError> {
    let listener = TcpListener::bind(addr).await.map_err(|source| ServeError::Bind {
        addr: addr.to_string(),
        source,
    })?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(config)).await?;
    Ok(())
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, shared))
}

/// Resolves a genome reference inside the genome directory. References may
/// not escape it.
fn resolve_genome(dir: &Path, reference: &str) -> Result<Genome, String> {
    let rel = Path::new(reference);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err("genome references must be relative paths inside the genome directory".into());
    }
    GenomeFile::load(&dir.join(rel)).map(|f| f.genome).map_err(|e| e.to_string())
}

struct Live {
    id: u64,
    session: Session,
}

async fn connection(socket: WebSocket, shared: Arc<Shared>) {
    let (mut tx, mut rx) = socket.split();
    let mut live: Option<Live> = None;
    let mut ticker = tokio::time::interval(Duration::from_secs(1) / REALTIME_TPS);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);

    loop {
        let running = live.as_ref().is_some_and(|l| !l.session.is_over());
        let realtime = running && live.as_ref().is_some_and(|l| l.session.config.pace == Pace::Realtime30Tps);
        let headless = running && !realtime;
        let outgoing: Vec<ServerMessage> = tokio::select! {
            biased;
            incoming = rx.next() => {
                let Some(Ok(msg)) = incoming else { break };
                let text = match msg {
                    Message::Text(t) => t.to_string(),
                    Message::Close(_) => break,
                    _ => continue,
                };
                let mut out = Vec::new();
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    out.extend(handle_line(line, &shared, &mut live, &mut ticker));
                }
                out
            }
            _ = ticker.tick(), if realtime => advance(&mut live),
            _ = std::future::ready(()), if headless => advance(&mut live),
        };
        for m in outgoing {
            if tx.send(Message::Text(m.to_line().into())).await.is_err() {
                return;
            }
        }
    }
}

fn advance(live: &mut Option<Live>) -> Vec<ServerMessage> {
    let Some(l) = live.as_mut() else { return Vec::new() };
    match l.session.tick() {
        Ok(frame) => {
            let mut out = vec![ServerMessage::Frame { session: l.id, frame }];
            out.extend(l.session.end_message(l.id));
            out
        }
        Err(e) => vec![ServerMessage::Error { message: e.to_string() }],
    }
}

fn handle_line(
    line: &str,
    shared: &Shared,
    live: &mut Option<Live>,
    ticker: &mut tokio::time::Interval,
) -> Vec<ServerMessage> {
    let error = |message: String| vec![ServerMessage::Error { message }];
    let msg: ClientMessage = match serde_json::from_str(line) {
        Ok(m) => m,
        Err(e) => return error(format!("malformed message: {e}")),
    };
    match msg {
        ClientMessage::Hello { format_version } => {
            if format_version != PROTOCOL_VERSION {
                return error(format!(
                    "unsupported protocol version {format_version} (server speaks {PROTOCOL_VERSION})"
                ));
            }
            vec![ServerMessage::Hello {
                format_version: PROTOCOL_VERSION,
                server: format!("duelevo {}", env!("CARGO_PKG_VERSION")),
            }]
        }
        ClientMessage::Open { config } => {
            let dir = shared.config.genomes.clone();
            match Session::open(config, &shared.config.archetypes, |r| resolve_genome(&dir, r)) {
                Ok(session) => {
                    let id = shared.next_session.fetch_add(1, Ordering::Relaxed);
                    let opened = ServerMessage::Opened {
                        session: id,
                        format_version: PROTOCOL_VERSION,
                        stage: session.state().stage.clone(),
                        enemy_name: session.state().archetype.name.clone(),
                        frame: session.frame(),
                    };
                    ticker.reset();
                    *live = Some(Live { id, session });
                    vec![opened]
                }
                Err(e) => error(e.to_string()),
            }
        }
        ClientMessage::Input { session, input } => match live.as_mut() {
            Some(l) if l.id == session => match l.session.submit_input(&input) {
                Ok(()) => Vec::new(),
                Err(e) => error(e.to_string()),
            },
            _ => error(format!("no open session {session} on this connection")),
        },
    }
}
