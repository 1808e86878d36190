//! Opaque, URL-safe identifiers.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

fn random_suffix() -> String {
    let mut bytes = [0u8; 8];
    rand::thread_rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn generate() -> Self {
                $name(format!(concat!($prefix, "-{}"), random_suffix()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

id_type!(UserId, "u");
id_type!(ClassId, "c");
id_type!(GroupId, "g");
id_type!(SessionId, "s");
id_type!(ConstructionId, "k");
id_type!(LogId, "l");

impl UserId {
    /// The shared principal behind every anonymous login.
    pub fn anonymous() -> Self {
        UserId("anonymous".to_string())
    }
}
