//! Bearer tokens. Secrets are random strings handed out once; only their
//! digests are kept, in `tokens.json` under the data directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use hazreg_core::domain::{Actor, Role};
use hazreg_core::formats::{to_canonical_bytes, Digest};
use parking_lot::RwLock;
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub const TOKEN_FILE: &str = "tokens.json";
const SECRET_PREFIX: &str = "hzr_";

/// What the registry remembers about an issued token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiToken {
    pub token_id: String,
    pub actor_id: String,
    pub roles: BTreeSet<Role>,
    pub expires_at: DateTime<Utc>,
    pub secret_digest: Digest,
}

impl ApiToken {
    pub fn actor(&self) -> Actor {
        Actor::new(self.actor_id.clone(), self.roles.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuthError {
    #[error("missing bearer token")]
    Missing,
    #[error("unknown token")]
    Unknown,
    #[error("token {0} has expired")]
    Expired(String),
}

#[derive(Debug, thiserror::Error)]
pub enum TokenStoreError {
    #[error("token store {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("token store {path} is corrupt: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug)]
pub struct TokenStore {
    path: PathBuf,
    tokens: RwLock<Vec<ApiToken>>,
}

fn read_tokens(path: &Path) -> Result<Vec<ApiToken>, TokenStoreError> {
    match std::fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| TokenStoreError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(source) => Err(TokenStoreError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

impl TokenStore {
    pub fn open(data_dir: &Path) -> Result<Self, TokenStoreError> {
        let path = data_dir.join(TOKEN_FILE);
        let tokens = read_tokens(&path)?;
        Ok(Self {
            path,
            tokens: RwLock::new(tokens),
        })
    }

    /// Mint a token. Returns the stored record and the secret, which is
    /// never persisted.
    pub fn issue(
        &self,
        actor_id: &str,
        roles: BTreeSet<Role>,
        ttl: Duration,
        now: DateTime<Utc>,
    ) -> Result<(ApiToken, String), TokenStoreError> {
        if actor_id.trim().is_empty() {
            return Err(TokenStoreError::Invalid(
                "actor id must not be blank".into(),
            ));
        }
        if roles.is_empty() {
            return Err(TokenStoreError::Invalid(
                "a token needs at least one role".into(),
            ));
        }
        if ttl <= Duration::zero() {
            return Err(TokenStoreError::Invalid(
                "token lifetime must be positive".into(),
            ));
        }
        let mut raw = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut raw);
        let secret = format!("{SECRET_PREFIX}{}", hex_string(&raw));
        let secret_digest = Digest::of(secret.as_bytes());
        let token = ApiToken {
            token_id: format!("tok-{}", &secret_digest.hex()[..12]),
            actor_id: actor_id.to_string(),
            roles,
            expires_at: now + ttl,
            secret_digest,
        };
        let mut tokens = self.tokens.write();
        // Another process may have issued tokens since we loaded.
        *tokens = read_tokens(&self.path)?;
        tokens.push(token.clone());
        self.persist(&tokens)?;
        Ok((token, secret))
    }

    fn persist(&self, tokens: &[ApiToken]) -> Result<(), TokenStoreError> {
        let io = |source| TokenStoreError::Io {
            path: self.path.clone(),
            source,
        };
        let bytes =
            to_canonical_bytes(tokens).map_err(|e| TokenStoreError::Invalid(e.to_string()))?;
        let tmp = self.path.with_extension("json.tmp");
        std::fs::write(&tmp, bytes).map_err(io)?;
        std::fs::rename(&tmp, &self.path).map_err(io)
    }

    fn lookup(&self, digest: &Digest) -> Option<ApiToken> {
        self.tokens
            .read()
            .iter()
            .find(|t| &t.secret_digest == digest)
            .cloned()
    }

    /// Resolve an `Authorization` header value to an actor.
    pub fn authenticate(
        &self,
        header: Option<&str>,
        now: DateTime<Utc>,
    ) -> Result<Actor, AuthError> {
        let secret = header
            .and_then(|h| h.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or(AuthError::Missing)?;
        let digest = Digest::of(secret.as_bytes());
        let token = match self.lookup(&digest) {
            Some(token) => token,
            None => {
                // Tokens issued by the operator command land on disk only.
                if let Ok(fresh) = read_tokens(&self.path) {
                    *self.tokens.write() = fresh;
                }
                self.lookup(&digest).ok_or(AuthError::Unknown)?
            }
        };
        if now >= token.expires_at {
            return Err(AuthError::Expired(token.token_id));
        }
        Ok(token.actor())
    }

    pub fn list(&self) -> Vec<ApiToken> {
        self.tokens.read().clone()
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
