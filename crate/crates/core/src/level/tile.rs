use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LevelError;

/// Gameplay role of a tile glyph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Empty,
    Solid,
    Breakable,
    Question,
    Coin,
    Enemy,
    PipeTopLeft,
    PipeTopRight,
    PipeBodyLeft,
    PipeBodyRight,
    CannonHead,
    CannonBody,
}

impl Role {
    pub const ALL: [Role; 12] = [
        Role::Empty,
        Role::Solid,
        Role::Breakable,
        Role::Question,
        Role::Coin,
        Role::Enemy,
        Role::PipeTopLeft,
        Role::PipeTopRight,
        Role::PipeBodyLeft,
        Role::PipeBodyRight,
        Role::CannonHead,
        Role::CannonBody,
    ];

    /// Whether the agent can stand on (and cannot pass through) this tile.
    pub fn is_solid(self) -> bool {
        !matches!(self, Role::Empty | Role::Coin | Role::Enemy)
    }

    pub fn is_pipe(self) -> bool {
        matches!(
            self,
            Role::PipeTopLeft | Role::PipeTopRight | Role::PipeBodyLeft | Role::PipeBodyRight
        )
    }

    pub fn is_cannon(self) -> bool {
        matches!(self, Role::CannonHead | Role::CannonBody)
    }

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(code: u8) -> Option<Role> {
        Role::ALL.get(code as usize).copied()
    }
}

/// A single cell: the glyph as written in the corpus plus its role.
///
/// Two glyphs may share a role ('?' and 'Q' are both question blocks), so the
/// glyph is kept to make serialization byte-exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tile {
    glyph: u8,
    role: Role,
}

impl Tile {
    pub fn glyph(self) -> char {
        self.glyph as char
    }

    pub fn glyph_byte(self) -> u8 {
        self.glyph
    }

    pub fn role(self) -> Role {
        self.role
    }

    pub fn is_solid(self) -> bool {
        self.role.is_solid()
    }
}

impl fmt::Display for Tile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.glyph())
    }
}

/// Total mapping from a declared set of ASCII glyphs to roles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileAlphabet {
    roles: [Option<Role>; 128],
    canonical: BTreeMap<Role, u8>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphabetFile {
    glyphs: BTreeMap<String, Role>,
}

impl TileAlphabet {
    /// Builds an alphabet from `(glyph, role)` pairs. The first glyph listed
    /// for a role becomes the glyph written when a tile of that role is
    /// synthesized (by the generator or the repairer).
    pub fn new(pairs: &[(char, Role)]) -> Result<Self, LevelError> {
        let mut roles = [None; 128];
        let mut canonical = BTreeMap::new();
        for &(glyph, role) in pairs {
            if !glyph.is_ascii() || glyph.is_ascii_control() || glyph == ' ' {
                return Err(LevelError::Alphabet(format!("glyph {glyph:?} is not printable ASCII")));
            }
            let slot = &mut roles[glyph as usize];
            if let Some(existing) = slot {
                if *existing != role {
                    return Err(LevelError::Alphabet(format!(
                        "glyph {glyph:?} mapped to both {existing:?} and {role:?}"
                    )));
                }
            }
            *slot = Some(role);
            canonical.entry(role).or_insert(glyph as u8);
        }
        for role in Role::ALL {
            if !canonical.contains_key(&role) {
                return Err(LevelError::Alphabet(format!("no glyph declared for role {role:?}")));
            }
        }
        Ok(Self { roles, canonical })
    }

    /// The VGLC Super Mario Bros. encoding.
    pub fn vglc() -> Self {
        Self::new(&[
            ('-', Role::Empty),
            ('X', Role::Solid),
            ('S', Role::Breakable),
            ('?', Role::Question),
            ('Q', Role::Question),
            ('o', Role::Coin),
            ('E', Role::Enemy),
            ('<', Role::PipeTopLeft),
            ('>', Role::PipeTopRight),
            ('[', Role::PipeBodyLeft),
            (']', Role::PipeBodyRight),
            ('B', Role::CannonHead),
            ('b', Role::CannonBody),
        ])
        .expect("built-in alphabet is valid")
    }

    /// Parses an alphabet config file:
    ///
    /// ```toml
    /// [glyphs]
    /// "-" = "empty"
    /// "X" = "solid"
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, LevelError> {
        let file: AlphabetFile =
            toml::from_str(text).map_err(|e| LevelError::Alphabet(e.to_string()))?;
        let mut pairs = Vec::with_capacity(file.glyphs.len());
        for (key, role) in file.glyphs {
            let mut chars = key.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => pairs.push((c, role)),
                _ => return Err(LevelError::Alphabet(format!("key {key:?} is not a single glyph"))),
            }
        }
        Self::new(&pairs)
    }

    pub fn load(path: &Path) -> Result<Self, LevelError> {
        let text = std::fs::read_to_string(path).map_err(|e| LevelError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let mut out = String::from("[glyphs]\n");
        for (glyph, role) in self.pairs() {
            let role = toml::Value::try_from(role).expect("role serializes");
            out.push_str(&format!("{:?} = {}\n", glyph.to_string(), role));
        }
        out
    }

    /// All declared `(glyph, role)` pairs in glyph order.
    pub fn pairs(&self) -> impl Iterator<Item = (char, Role)> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter_map(|(g, r)| r.map(|r| (g as u8 as char, r)))
    }

    pub fn tile(&self, glyph: char) -> Option<Tile> {
        if !glyph.is_ascii() {
            return None;
        }
        self.roles[glyph as usize].map(|role| Tile { glyph: glyph as u8, role })
    }

    /// The canonical tile for a role.
    pub fn of(&self, role: Role) -> Tile {
        Tile { glyph: self.canonical[&role], role }
    }

    pub fn empty(&self) -> Tile {
        self.of(Role::Empty)
    }

    pub(crate) fn encode(&self) -> Vec<(u8, u8)> {
        self.pairs().map(|(g, r)| (g as u8, r.code())).collect()
    }

    pub(crate) fn decode(pairs: &[(u8, u8)]) -> Result<Self, LevelError> {
        let mut out = Vec::with_capacity(pairs.len());
        for &(g, r) in pairs {
            let role = Role::from_code(r)
                .ok_or_else(|| LevelError::Alphabet(format!("unknown role code {r}")))?;
            out.push((g as char, role));
        }
        Self::new(&out)
    }
}

impl Default for TileAlphabet {
    fn default() -> Self {
        Self::vglc()
    }
}
