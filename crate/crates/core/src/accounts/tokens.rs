use std::collections::HashMap;
use std::sync::Mutex;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::model::Principal;

/// Opaque 128-bit bearer token, hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AuthToken(pub String);

impl AuthToken {
    fn generate() -> Self {
        let mut bytes = [0u8; 16];
        rand::rngs::OsRng.fill_bytes(&mut bytes);
        AuthToken(hex::encode(bytes))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

struct Entry {
    principal: Principal,
    last_seen_ms: i64,
}

/// Server-side session table with idle expiry.
pub struct TokenTable {
    idle_expiry_ms: i64,
    entries: Mutex<HashMap<AuthToken, Entry>>,
}

impl TokenTable {
    pub fn new(idle_expiry_ms: i64) -> Self {
        TokenTable {
            idle_expiry_ms,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn issue(&self, principal: Principal, now_ms: i64) -> AuthToken {
        let token = AuthToken::generate();
        let mut entries = self.entries.lock().unwrap();
        entries.retain(|_, e| now_ms - e.last_seen_ms <= self.idle_expiry_ms);
        entries.insert(
            token.clone(),
            Entry {
                principal,
                last_seen_ms: now_ms,
            },
        );
        token
    }

    /// Looks up a live token and refreshes its idle timer.
    pub fn resolve(&self, token: &AuthToken, now_ms: i64) -> Option<Principal> {
        let mut entries = self.entries.lock().unwrap();
        let entry = entries.get_mut(token)?;
        if now_ms - entry.last_seen_ms > self.idle_expiry_ms {
            entries.remove(token);
            return None;
        }
        entry.last_seen_ms = now_ms;
        Some(entry.principal.clone())
    }

    pub fn revoke(&self, token: &AuthToken) -> Option<Principal> {
        self.entries.lock().unwrap().remove(token).map(|e| e.principal)
    }
}
