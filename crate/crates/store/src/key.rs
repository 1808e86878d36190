use std::fmt;
use std::str::FromStr;

use crate::error::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Namespace {
    Users,
    Classes,
    Groups,
    Constructions,
    Sessions,
    Chats,
    Logs,
    Scrapbooks,
    LoginLog,
}

impl Namespace {
    pub const ALL: [Namespace; 9] = [
        Namespace::Users,
        Namespace::Classes,
        Namespace::Groups,
        Namespace::Constructions,
        Namespace::Sessions,
        Namespace::Chats,
        Namespace::Logs,
        Namespace::Scrapbooks,
        Namespace::LoginLog,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Users => "users",
            Namespace::Classes => "classes",
            Namespace::Groups => "groups",
            Namespace::Constructions => "constructions",
            Namespace::Sessions => "sessions",
            Namespace::Chats => "chats",
            Namespace::Logs => "logs",
            Namespace::Scrapbooks => "scrapbooks",
            Namespace::LoginLog => "login_log",
        }
    }

    /// Whether [`crate::Store::append`] may target this namespace.
    pub fn appendable(self) -> bool {
        matches!(self, Namespace::Logs | Namespace::LoginLog | Namespace::Chats)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Namespace {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Namespace::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| StoreError::UnknownNamespace(s.to_string()))
    }
}

/// `(namespace, id)`; ids are nonempty URL-safe strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub namespace: Namespace,
    pub id: String,
}

impl RecordKey {
    pub fn new(namespace: Namespace, id: impl Into<String>) -> Self {
        RecordKey {
            namespace,
            id: id.into(),
        }
    }

    pub(crate) fn validate(&self) -> Result<(), StoreError> {
        validate_id(&self.id)
    }
}

pub(crate) fn validate_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= 512
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidKey(id.to_string()))
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.namespace, self.id)
    }
}
