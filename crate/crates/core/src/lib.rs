//! Core of the hazard disclosure registry.
//!
//! The crate is organised by responsibility:
//!
//! * [`domain`] holds the shared vocabulary (model cards, reports, impact
//!   claims, severity, actors, evidence) and the pure classification,
//!   scoping and severity functions.
//! * [`formats`] parses, validates, lints and canonically serializes every
//!   registry document kind, and owns the identifier grammars.
//! * [`engine`] is the role-guarded disclosure state machine for both the
//!   security and the safety track.
//! * [`stats`] is the exact statistics kernel used by the adjudication panel.
//! * [`hex`] derives and manages Hazards Exposure eXchange statements.

#![forbid(unsafe_code)]

/// Closed token vocabulary: serde as snake_case text, plus `as_str`,
/// `FromStr` and an `ALL` listing in declaration order.
macro_rules! token_enum {
    ($(#[$meta:meta])* $vis:vis enum $name:ident { $($(#[$vmeta:meta])* $variant:ident => $text:literal,)* }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
        $vis enum $name {
            $($(#[$vmeta])* #[serde(rename = $text)] $variant,)*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)*
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $name {
            type Err = crate::UnknownToken;

            fn from_str(text: &str) -> Result<Self, Self::Err> {
                match text {
                    $($text => Ok($name::$variant),)*
                    _ => Err(crate::UnknownToken {
                        vocabulary: stringify!($name),
                        token: text.to_string(),
                    }),
                }
            }
        }
    };
}

/// A token outside a closed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {vocabulary} token `{token}`")]
pub struct UnknownToken {
    pub vocabulary: &'static str,
    pub token: String,
}

pub mod domain;
pub mod engine;
pub mod formats;
pub mod hex;
pub mod stats;
pub mod testing;
