use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use super::Harness;

pub type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

pub async fn connect(h: &Harness, sid: &str, token: &str, resume_after: Option<u64>) -> Ws {
    connect_async(h.ws_url(sid, token, resume_after)).await.unwrap().0
}

/// Next JSON envelope, or None on close or timeout.
pub async fn next(ws: &mut Ws, wait: Duration) -> Option<Value> {
    loop {
        match tokio::time::timeout(wait, ws.next()).await {
            Ok(Some(Ok(Message::Text(t)))) => return Some(serde_json::from_str(t.as_str()).unwrap()),
            Ok(Some(Ok(Message::Close(_)))) | Ok(None) | Err(_) | Ok(Some(Err(_))) => return None,
            Ok(Some(Ok(_))) => continue,
        }
    }
}

/// Skips envelopes until one of type `kind` arrives.
pub async fn next_of(ws: &mut Ws, kind: &str, wait: Duration) -> Value {
    loop {
        let e = next(ws, wait).await.unwrap_or_else(|| panic!("no {kind} envelope"));
        if e["type"] == kind {
            return e;
        }
    }
}

/// Everything that arrives before `wait` passes with nothing new.
pub async fn drain(ws: &mut Ws, wait: Duration) -> Vec<Value> {
    let mut out = Vec::new();
    while let Some(e) = next(ws, wait).await {
        out.push(e);
    }
    out
}

pub async fn send(ws: &mut Ws, frame: Value) {
    ws.send(Message::Text(frame.to_string().into())).await.unwrap();
}

/// Waits for the close frame and returns its code.
pub async fn close_code(ws: &mut Ws, wait: Duration) -> Option<u16> {
    loop {
        match tokio::time::timeout(wait, ws.next()).await {
            Ok(Some(Ok(Message::Close(Some(f))))) => return Some(f.code.into()),
            Ok(Some(Ok(Message::Close(None)))) | Ok(None) | Err(_) | Ok(Some(Err(_))) => return None,
            Ok(Some(Ok(_))) => continue,
        }
    }
}
