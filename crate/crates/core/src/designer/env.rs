use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::reward::{compose_reward, Component, Normalizers, RawComponents, RewardConfig};
use super::DesignerError;
use crate::generator::{detect_faulty_tiles, Backend, LatentVector, Repairer};
use crate::level::{census, ElementCensus, Level, Segment};
use crate::metrics::{diversity, fun, historical_deviation_of, MetricConfig, PatternDistribution};
use crate::player::{AgentState, Playtester, SegmentPlay};

/// Attempts at finding a playable first segment before giving up.
pub const RESET_RETRY_CAP: usize = 1000;

/// Generator, repairer, play-tester and metric settings: everything needed
/// to turn a latent action into a scored segment.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub backend: Backend,
    pub repairer: Repairer,
    pub playtester: Playtester,
    pub metrics: MetricConfig,
}

impl Pipeline {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            repairer: Repairer::default(),
            playtester: Playtester::default(),
            metrics: MetricConfig::default(),
        }
    }

    /// Generates, repairs and play-tests the segment for `z` as the next
    /// segment after `state` (or as a first segment when `state` is None).
    pub fn propose(
        &self,
        state: Option<&EnvState>,
        z: &LatentVector,
    ) -> Result<Candidate, DesignerError> {
        let raw = self.backend.generate(z);
        let faulty_before = detect_faulty_tiles(&raw).len();
        let segment = self.repairer.repair(&raw);
        let faulty_after = detect_faulty_tiles(&segment).len();
        let empty;
        let (level, end) = match state {
            Some(s) => (&s.level, s.end_state),
            None => {
                empty = Level::empty(segment.height(), segment.width());
                (&empty, None)
            }
        };
        let play = self.playtester.test_segment(level, end, &segment)?;
        Ok(Candidate { latent: *z, segment, faulty_before, faulty_after, play })
    }

    /// Diversity, fun and historical deviation of `segment` as the next
    /// segment of `state`'s level.
    pub fn measure(&self, state: &EnvState, segment: &Segment) -> Result<SegmentMetrics, DesignerError> {
        let cfg = &self.metrics;
        let w = state.level.segment_width();
        // Only the last ceil(n*d / w) segments can fall inside a diversity window.
        let reach = (cfg.history_windows * cfg.window_stride).div_ceil(w);
        let kept = state.level.segment_count().min(reach);
        let start = state.level.width() - kept * w;
        let mut tail = state.level.grid().window(start, kept * w)?;
        tail.append(segment.grid())?;
        let d = diversity(&tail, kept * w, cfg)?;
        let dist = PatternDistribution::of(segment.grid(), cfg.pattern_size)?;
        let h = historical_deviation_of(&dist, &state.history_dists, cfg)?;
        Ok(SegmentMetrics { diversity: d, fun: fun(d, cfg), deviation: h, census: census(segment) })
    }

    /// Samples uniform latents until one decodes to a playable stand-alone
    /// segment.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EnvState, DesignerError> {
        for _ in 0..RESET_RETRY_CAP {
            let z = LatentVector::uniform(rng);
            let cand = self.propose(None, &z)?;
            if cand.play.playable {
                return Ok(EnvState::start(cand, &self.metrics));
            }
        }
        Err(DesignerError::NoPlayableStart(RESET_RETRY_CAP))
    }
}

/// A repaired, play-tested segment not yet added to the level.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub latent: LatentVector,
    pub segment: Segment,
    pub faulty_before: usize,
    pub faulty_after: usize,
    pub play: SegmentPlay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMetrics {
    pub diversity: f64,
    pub fun: f64,
    pub deviation: f64,
    pub census: ElementCensus,
}

/// Design state: the latent of the latest segment plus the level built so
/// far and the remembered segments.
#[derive(Debug, Clone)]
pub struct EnvState {
    pub current_latent: LatentVector,
    pub level: Level,
    /// Segments added after the initial one.
    pub segments_done: usize,
    /// Where the play-tester finished the latest segment, in level columns.
    /// None after an unplayable segment.
    pub end_state: Option<AgentState>,
    history: Vec<Segment>,
    history_dists: Vec<PatternDistribution>,
    history_cap: usize,
}

impl EnvState {
    fn start(cand: Candidate, cfg: &MetricConfig) -> Self {
        let w = cand.segment.width();
        let level = Level::empty(cand.segment.height(), w);
        let reach = (cfg.history_windows * cfg.window_stride).div_ceil(w);
        let mut state = Self {
            current_latent: cand.latent,
            level,
            segments_done: 0,
            end_state: None,
            history: Vec::new(),
            history_dists: Vec::new(),
            history_cap: cfg.memory.max(reach).max(1),
        };
        state.push(cand, cfg.pattern_size);
        state.segments_done = 0;
        state
    }

    /// Remembered segments, oldest first.
    pub fn history(&self) -> impl ExactSizeIterator<Item = &Segment> {
        self.history.iter()
    }

    /// Appends a candidate segment. An unplayable candidate leaves no end
    /// state, so the next play-test respawns.
    pub fn push(&mut self, cand: Candidate, pattern_size: usize) {
        self.level.concat(&cand.segment).expect("segment matches level dimensions");
        let dist = PatternDistribution::of(cand.segment.grid(), pattern_size)
            .expect("segment larger than pattern");
        if self.history.len() == self.history_cap {
            self.history.remove(0);
            self.history_dists.remove(0);
        }
        self.history.push(cand.segment);
        self.history_dists.push(dist);
        self.current_latent = cand.latent;
        self.end_state = if cand.play.playable { cand.play.end_state } else { None };
        self.segments_done += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub playable: bool,
    pub metrics: Option<SegmentMetrics>,
    pub faulty_before: usize,
    pub faulty_after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub reward: f64,
    pub done: bool,
    /// The episode hit the segment cap rather than an unplayable segment.
    pub truncated: bool,
    pub info: StepInfo,
}

/// The design MDP: actions are latents, the next state is the action.
#[derive(Debug, Clone)]
pub struct DesignEnv {
    pipeline: Pipeline,
    reward: RewardConfig,
    max_segments: usize,
    normalizers: Normalizers,
    rng: ChaCha8Rng,
    state: Option<EnvState>,
    done: bool,
}

impl DesignEnv {
    pub fn new(pipeline: Pipeline, reward: RewardConfig, max_segments: usize, rng: ChaCha8Rng) -> Self {
        let normalizers = Normalizers::new(reward.normalizer_window);
        Self { pipeline, reward, max_segments, normalizers, rng, state: None, done: true }
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    pub fn normalizers(&self) -> &Normalizers {
        &self.normalizers
    }

    pub fn set_normalizers(&mut self, normalizers: Normalizers) {
        self.normalizers = normalizers;
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    pub fn reset(&mut self) -> Result<&EnvState, DesignerError> {
        let state = self.pipeline.initial_state(&mut self.rng)?;
        self.done = false;
        Ok(self.state.insert(state))
    }

    pub fn step(&mut self, action: &LatentVector) -> Result<Step, DesignerError> {
        if self.done {
            return Err(DesignerError::StepAfterDone);
        }
        let state = self.state.as_mut().expect("reset before step");
        let cand = self.pipeline.propose(Some(state), action)?;
        let (faulty_before, faulty_after) = (cand.faulty_before, cand.faulty_after);
        if !cand.play.playable {
            self.done = true;
            return Ok(Step {
                reward: 0.0,
                done: true,
                truncated: false,
                info: StepInfo { playable: false, metrics: None, faulty_before, faulty_after },
            });
        }
        let metrics = self.pipeline.measure(state, &cand.segment)?;
        let raw = RawComponents {
            fun: Some(metrics.fun),
            deviation: Some(metrics.deviation),
        };
        let reward = compose_reward(&raw, &mut self.normalizers, &self.reward)?;
        state.push(cand, self.pipeline.metrics.pattern_size);
        let truncated = state.segments_done >= self.max_segments;
        self.done = truncated;
        Ok(Step {
            reward,
            done: truncated,
            truncated,
            info: StepInfo { playable: true, metrics: Some(metrics), faulty_before, faulty_after },
        })
    }

    /// Whether the reward includes playability.
    pub fn rewards_playability(&self) -> bool {
        self.reward.has(Component::P)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{CorpusDescriptor, PoolEntry, SegmentPool};
    use crate::level::TileAlphabet;
    use rand::SeedableRng;

    fn pool_of(rows_fn: impl Fn(usize) -> String) -> Backend {
        let a = TileAlphabet::vglc();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let entries = (0..4)
            .map(|i| {
                let text: Vec<String> = (0..14).map(|r| rows_fn(r + i * 0)).collect();
                PoolEntry {
                    segment: Segment::parse(&text.join("\n"), &a).unwrap(),
                    code: LatentVector::uniform(&mut rng),
                }
            })
            .collect();
        Backend::pool(
            SegmentPool::from_entries(entries, 0, CorpusDescriptor { levels: 1, hash: [0; 32] }).unwrap(),
        )
    }

    fn flat_backend() -> Backend {
        pool_of(|r| if r >= 12 { "X".repeat(14) } else { "-".repeat(14) })
    }

    fn env(backend: Backend, reward: RewardConfig, n: usize) -> DesignEnv {
        DesignEnv::new(Pipeline::new(backend), reward, n, ChaCha8Rng::seed_from_u64(42))
    }

    #[test]
    fn flat_pool_resets_first_try() {
        let mut e = env(flat_backend(), RewardConfig::default(), 100);
        let s = e.reset().unwrap();
        assert_eq!(s.level.segment_count(), 1);
        assert_eq!(s.history().len(), 1);
        assert_eq!(s.segments_done, 0);
    }

    #[test]
    fn bottomless_backend_fails_reset() {
        let mut e = env(pool_of(|_| "-".repeat(14)), RewardConfig::default(), 100);
        assert!(matches!(e.reset(), Err(DesignerError::NoPlayableStart(RESET_RETRY_CAP))));
    }

    #[test]
    fn reset_is_deterministic() {
        let mut a = env(Backend::procedural(), RewardConfig::default(), 100);
        let mut b = env(Backend::procedural(), RewardConfig::default(), 100);
        let (sa, sb) = (a.reset().unwrap().clone(), b.reset().unwrap().clone());
        assert_eq!(sa.current_latent, sb.current_latent);
        assert_eq!(sa.level, sb.level);
    }

    #[test]
    fn p_only_return_counts_segments() {
        let mut e = env(flat_backend(), RewardConfig::of(&[Component::P]), 100);
        e.reset().unwrap();
        let mut ret = 0.0;
        let mut steps = 0;
        loop {
            let s = e.step(&LatentVector::zeros()).unwrap();
            ret += s.reward;
            steps += 1;
            if s.done {
                assert!(s.truncated);
                break;
            }
        }
        assert_eq!(steps, 100);
        assert_eq!(ret, 100.0);
        assert!(matches!(e.step(&LatentVector::zeros()), Err(DesignerError::StepAfterDone)));
    }

    #[test]
    fn unplayable_step_terminates_with_zero_reward() {
        let mut e = env(Backend::procedural(), RewardConfig::default(), 100);
        e.reset().unwrap();
        // all columns at the maximum height make a wall the agent cannot climb
        // unless it already stands high; a full-gap segment is always fatal
        let mut z = LatentVector::zeros();
        for c in 0..14 {
            z = z.with(c, -1.0);
        }
        for d in 14..18 {
            z = z.with(d, [0.55, 0.75, 0.9, 1.0][d - 14]);
        }
        let cand = e.pipeline().propose(e.state(), &z).unwrap();
        if !cand.play.playable {
            let s = e.step(&z).unwrap();
            assert_eq!((s.reward, s.done, s.truncated), (0.0, true, false));
        }
    }

    #[test]
    fn fun_inside_band_is_zero() {
        let mut e = env(Backend::procedural(), RewardConfig::of(&[Component::F]), 100);
        e.reset().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = false;
        for _ in 0..200 {
            if e.done {
                e.reset().unwrap();
            }
            let s = e.step(&LatentVector::uniform(&mut rng)).unwrap();
            if let Some(m) = s.info.metrics {
                assert!(s.info.playable);
                assert_eq!(s.info.faulty_after, 0);
                if crate::metrics::in_band(m.diversity, &e.pipeline.metrics) {
                    assert_eq!(m.fun, 0.0);
                    seen = true;
                }
                assert!((0.0..=1.0).contains(&s.reward));
            }
        }
        assert!(seen);
    }
}
