//! User accounts. Only a SHA-256 digest of each token is stored.

use std::collections::HashMap;

use chrono::{DateTime, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    /// Unique name; also the user id.
    pub name: String,
    pub token_sha256: String,
    pub created_at: DateTime<Utc>,
}

pub fn hash_token(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

/// 256 bits from the OS-seeded thread generator, hex encoded.
pub fn generate_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

pub fn valid_user_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone, Default)]
pub struct UserBook {
    by_name: HashMap<String, User>,
    by_digest: HashMap<String, String>,
}

impl UserBook {
    pub fn from_records(records: impl IntoIterator<Item = User>) -> Self {
        let mut book = Self::default();
        for user in records {
            // A later duplicate cannot arise through `user add`; keep the first.
            let _ = book.insert(user);
        }
        book
    }

    /// Returns `false` if the name is already taken.
    pub fn insert(&mut self, user: User) -> bool {
        if self.by_name.contains_key(&user.name) {
            return false;
        }
        self.by_digest
            .insert(user.token_sha256.clone(), user.name.clone());
        self.by_name.insert(user.name.clone(), user);
        true
    }

    pub fn get(&self, name: &str) -> Option<&User> {
        self.by_name.get(name)
    }

    pub fn authenticate(&self, token: &str) -> Option<&User> {
        self.by_digest
            .get(&hash_token(token))
            .and_then(|name| self.by_name.get(name))
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    pub fn users(&self) -> Vec<User> {
        let mut all: Vec<User> = self.by_name.values().cloned().collect();
        all.sort_by(|a, b| a.name.cmp(&b.name));
        all
    }
}
