use argon2::password_hash::rand_core::OsRng;
use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};

/// Argon2id cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashCost {
    pub memory_kib: u32,
    pub iterations: u32,
}

impl HashCost {
    pub const DEFAULT: HashCost = HashCost {
        memory_kib: 19 * 1024,
        iterations: 2,
    };

    /// Cheap settings for tests.
    pub const FAST: HashCost = HashCost {
        memory_kib: 64,
        iterations: 1,
    };
}

impl Default for HashCost {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Salted, peppered one-way credential hashing.
#[derive(Clone)]
pub struct CredentialHasher {
    pepper: Vec<u8>,
    cost: HashCost,
}

impl std::fmt::Debug for CredentialHasher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CredentialHasher").field("cost", &self.cost).finish_non_exhaustive()
    }
}

impl CredentialHasher {
    pub fn new(pepper: impl Into<Vec<u8>>, cost: HashCost) -> Self {
        CredentialHasher {
            pepper: pepper.into(),
            cost,
        }
    }

    fn argon(&self) -> Argon2<'_> {
        let params = Params::new(self.cost.memory_kib, self.cost.iterations, 1, None)
            .expect("valid argon2 parameters");
        Argon2::new_with_secret(&self.pepper, Algorithm::Argon2id, Version::V0x13, params)
            .expect("pepper length within argon2 limits")
    }

    pub fn digest(&self, credential: &str) -> String {
        let salt = SaltString::generate(&mut OsRng);
        self.argon()
            .hash_password(credential.as_bytes(), &salt)
            .expect("argon2 hashing with valid parameters")
            .to_string()
    }

    pub fn verify(&self, credential: &str, digest: &str) -> bool {
        match PasswordHash::new(digest) {
            Ok(parsed) => self.argon().verify_password(credential.as_bytes(), &parsed).is_ok(),
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_verifies_and_is_salted() {
        let h = CredentialHasher::new("pepper", HashCost::FAST);
        let a = h.digest("hunter2");
        let b = h.digest("hunter2");
        assert_ne!(a, b);
        assert!(!a.contains("hunter2"));
        assert!(h.verify("hunter2", &a));
        assert!(!h.verify("hunter3", &a));
    }

    #[test]
    fn pepper_is_required() {
        let h = CredentialHasher::new("pepper", HashCost::FAST);
        let other = CredentialHasher::new("different", HashCost::FAST);
        assert!(!other.verify("pw", &h.digest("pw")));
    }
}
