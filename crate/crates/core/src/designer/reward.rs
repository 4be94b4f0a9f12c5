use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DesignerError;

/// Reward terms the designer can be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Component {
    /// Fun: diversity moderated into a band.
    F,
    /// Historical deviation from remembered segments.
    H,
    /// Playability: one per playable segment.
    P,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub components: BTreeSet<Component>,
    pub normalizer_window: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::of(&[Component::F, Component::H, Component::P])
    }
}

impl RewardConfig {
    pub fn of(components: &[Component]) -> Self {
        Self { components: components.iter().copied().collect(), normalizer_window: 1000 }
    }

    /// Parses a label such as `"FHP"` or `"fh"`.
    pub fn parse(label: &str) -> Result<Self, DesignerError> {
        let mut set = BTreeSet::new();
        for ch in label.chars() {
            set.insert(match ch.to_ascii_uppercase() {
                'F' => Component::F,
                'H' => Component::H,
                'P' => Component::P,
                _ => return Err(DesignerError::Config(format!("unknown reward component {ch:?}"))),
            });
        }
        let cfg = Self { components: set, normalizer_window: 1000 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DesignerError> {
        if self.components.is_empty() {
            return Err(DesignerError::Config("reward needs at least one component".into()));
        }
        if self.normalizer_window == 0 {
            return Err(DesignerError::Config("normalizer_window must be >= 1".into()));
        }
        Ok(())
    }

    pub fn has(&self, c: Component) -> bool {
        self.components.contains(&c)
    }

    pub fn label(&self) -> String {
        self.components.iter().map(|c| format!("{c:?}")).collect()
    }
}

impl fmt::Display for RewardConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Min-max normalization against the most recent `window` raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningNormalizer {
    window: usize,
    buffer: VecDeque<f64>,
}

impl RunningNormalizer {
    pub fn new(window: usize) -> Self {
        Self { window: window.max(1), buffer: VecDeque::with_capacity(window.max(1)) }
    }

    /// Records `raw`, then maps it to `(raw - min) / (max - min)` over the
    /// buffer, or 0.5 when the buffer holds a single distinct value.
    pub fn push(&mut self, raw: f64) -> f64 {
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(raw);
        self.normalize(raw)
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        let (lo, hi) = self
            .buffer
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(hi > lo) {
            return 0.5;
        }
        ((raw - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.buffer.iter().copied()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub(crate) fn restore(window: usize, values: Vec<f64>) -> Self {
        let mut n = Self::new(window);
        for v in values {
            if n.buffer.len() == n.window {
                n.buffer.pop_front();
            }
            n.buffer.push_back(v);
        }
        n
    }
}

/// One normalizer per normalized component.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizers {
    pub fun: RunningNormalizer,
    pub deviation: RunningNormalizer,
}

impl Normalizers {
    pub fn new(window: usize) -> Self {
        Self { fun: RunningNormalizer::new(window), deviation: RunningNormalizer::new(window) }
    }
}

/// Raw per-segment reward inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RawComponents {
    pub fun: Option<f64>,
    pub deviation: Option<f64>,
}

/// Sum of the configured components for one playable segment: F and H are
/// pushed through their normalizers, P contributes 1.
pub fn compose_reward(
    raw: &RawComponents,
    normalizers: &mut Normalizers,
    cfg: &RewardConfig,
) -> Result<f64, DesignerError> {
    let mut total = 0.0;
    if cfg.has(Component::F) {
        let f = raw.fun.ok_or(DesignerError::MissingComponent(Component::F))?;
        total += normalizers.fun.push(f);
    }
    if cfg.has(Component::H) {
        let h = raw.deviation.ok_or(DesignerError::MissingComponent(Component::H))?;
        total += normalizers.deviation.push(h);
    }
    if cfg.has(Component::P) {
        total += 1.0;
    }
    Ok(total)
}
