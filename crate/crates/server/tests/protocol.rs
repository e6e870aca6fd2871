use std::path::Path;
use std::time::{Duration, Instant};

use futures::{SinkExt, StreamExt};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;

use duelevo_core::enemies::ArchetypeTable;
use duelevo_core::engine::ActionSet;
use duelevo_core::network::{FixedGenome, Genome, GenomeFile};
use duelevo_core::session::{
    ClientMessage, FrameMessage, InputMessage, Pace, ServerMessage, SessionConfig, SessionMode, PROTOCOL_VERSION,
};
use duelevo_server::{serve, ServerConfig};

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<TcpStream>>;

async fn start(genomes: &Path, assets: Option<&Path>) -> std::net::SocketAddr {
    let config = ServerConfig {
        assets: assets.map(Path::to_path_buf),
        genomes: genomes.to_path_buf(),
        archetypes: ArchetypeTable::builtin(),
    };
    let (tx, rx) = tokio::sync::oneshot::channel();
    tokio::spawn(async move {
        serve("127.0.0.1:0", config, move |addr| {
            let _ = tx.send(addr);
        })
        .await
        .unwrap();
    });
    rx.await.unwrap()
}

fn write_shooter(dir: &Path) {
    let mut g = FixedGenome::zeros();
    g.set_bias(1, 5.0);
    g.set_bias(3, 5.0);
    GenomeFile::new(Genome::Fixed(g), None).save(&dir.join("shooter.json")).unwrap();
}

async fn connect(addr: std::net::SocketAddr) -> Socket {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    ws
}

async fn send(ws: &mut Socket, msg: &ClientMessage) {
    ws.send(Message::Text(msg.to_line().into())).await.unwrap();
}

async fn recv(ws: &mut Socket) -> ServerMessage {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(20), ws.next())
            .await
            .expect("server answers")
            .unwrap()
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

fn config(mode: SessionMode, pace: Pace) -> SessionConfig {
    SessionConfig {
        mode,
        enemy_archetype: 2,
        player_genome: Some("shooter.json".into()),
        enemy_genome: None,
        seed: 12,
        pace,
        tick_limit: None,
    }
}

/// Opens a session and collects frames until the end message.
async fn stream(addr: std::net::SocketAddr, cfg: SessionConfig) -> (Vec<FrameMessage>, ServerMessage) {
    let mut ws = connect(addr).await;
    send(&mut ws, &ClientMessage::Hello { format_version: PROTOCOL_VERSION }).await;
    assert!(matches!(recv(&mut ws).await, ServerMessage::Hello { format_version: 1, .. }));
    send(&mut ws, &ClientMessage::Open { config: cfg }).await;
    let ServerMessage::Opened { frame, .. } = recv(&mut ws).await else {
        panic!("expected opened")
    };
    assert_eq!(frame.tick, 0);
    let mut frames = Vec::new();
    loop {
        match recv(&mut ws).await {
            ServerMessage::Frame { frame, .. } => frames.push(frame),
            end @ ServerMessage::End { .. } => return (frames, end),
            other => panic!("unexpected {other:?}"),
        }
    }
}

#[tokio::test]
async fn headless_streams_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    write_shooter(dir.path());
    let addr = start(dir.path(), None).await;
    let (a, end_a) = stream(addr, config(SessionMode::AiVsStatic, Pace::Headless)).await;
    let (b, end_b) = stream(addr, config(SessionMode::AiVsStatic, Pace::Headless)).await;
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[1].tick == w[0].tick + 1));
    assert!(a.last().unwrap().terminal);
    let (ServerMessage::End { duration: da, .. }, ServerMessage::End { duration: db, .. }) = (end_a, end_b) else {
        unreachable!()
    };
    assert_eq!(da, db);
    assert_eq!(da as usize, a.len());
}

#[tokio::test]
async fn invalid_sessions_are_rejected_with_reasons() {
    let dir = tempfile::tempdir().unwrap();
    write_shooter(dir.path());
    let addr = start(dir.path(), None).await;
    let mut ws = connect(addr).await;
    send(&mut ws, &ClientMessage::Open { config: config(SessionMode::HumanVsStatic, Pace::Headless) }).await;
    let ServerMessage::Error { message } = recv(&mut ws).await else { panic!() };
    assert!(message.contains("realtime"), "{message}");

    let mut cfg = config(SessionMode::AiVsStatic, Pace::Headless);
    cfg.player_genome = Some("nope.json".into());
    send(&mut ws, &ClientMessage::Open { config: cfg }).await;
    let ServerMessage::Error { message } = recv(&mut ws).await else { panic!() };
    assert!(message.contains("nope.json"), "{message}");

    ws.send(Message::Text("{\"type\":\"dance\"}".into())).await.unwrap();
    assert!(matches!(recv(&mut ws).await, ServerMessage::Error { .. }));

    send(&mut ws, &ClientMessage::Hello { format_version: 99 }).await;
    let ServerMessage::Error { message } = recv(&mut ws).await else { panic!() };
    assert!(message.contains("99"));
}

#[tokio::test]
async fn human_session_runs_in_realtime_and_applies_input() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(dir.path(), None).await;
    let mut ws = connect(addr).await;
    let mut cfg = config(SessionMode::HumanVsStatic, Pace::Realtime30Tps);
    cfg.player_genome = None;
    cfg.tick_limit = Some(40);
    send(&mut ws, &ClientMessage::Open { config: cfg }).await;
    let ServerMessage::Opened { session, frame, .. } = recv(&mut ws).await else { panic!() };
    let start_x = frame.player.rect.min.x;

    let mut bad = ActionSet::IDLE;
    bad.shoot_n[2] = true;
    send(&mut ws, &ClientMessage::Input { session, input: InputMessage { tick: 0, actions: bad } }).await;

    let left = ActionSet { left: true, ..ActionSet::IDLE };
    let started = Instant::now();
    let mut latencies = Vec::new();
    let mut frames = 0;
    let mut saw_error = false;
    let mut last_x = start_x;
    loop {
        let sent = Instant::now();
        send(&mut ws, &ClientMessage::Input { session, input: InputMessage { tick: 0, actions: left } }).await;
        let mut got_frame = false;
        while !got_frame {
            match recv(&mut ws).await {
                ServerMessage::Frame { frame, .. } => {
                    latencies.push(sent.elapsed());
                    frames += 1;
                    last_x = frame.player.rect.min.x;
                    got_frame = true;
                }
                ServerMessage::Error { message } => {
                    assert!(message.contains("shoot1..shoot6"));
                    saw_error = true;
                }
                ServerMessage::End { duration, .. } => {
                    assert_eq!(duration, frames);
                    let elapsed = started.elapsed();
                    // 40 ticks at 30 per second.
                    assert!(elapsed >= Duration::from_millis(1100), "{elapsed:?}");
                    assert!(saw_error);
                    assert!(last_x < start_x);
                    latencies.sort();
                    assert!(latencies[latencies.len() / 2] <= Duration::from_millis(34));
                    return;
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}

#[tokio::test]
async fn serves_static_assets() {
    let genomes = tempfile::tempdir().unwrap();
    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<title>duel</title>").unwrap();
    let addr = start(genomes.path(), Some(assets.path())).await;
    let mut s = TcpStream::connect(addr).await.unwrap();
    s.write_all(b"GET /index.html HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut body = String::new();
    s.read_to_string(&mut body).await.unwrap();
    assert!(body.starts_with("HTTP/1.1 200"), "{body}");
    assert!(body.contains("<title>duel</title>"));
}
