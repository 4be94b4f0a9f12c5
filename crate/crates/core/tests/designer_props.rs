use edrl::designer::{
    ActMode, AdamParams, DesignEnv, DesignerPolicy, Pipeline, PolicyConfig, RewardConfig, RunningNormalizer,
};
use edrl::generator::{Backend, LatentVector, LATENT_DIM};
use edrl::metrics::MetricConfig;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn normalizer_stays_in_unit_range(values in proptest::collection::vec(-1e3f64..1e3, 1..300), window in 1usize..50) {
        let mut n = RunningNormalizer::new(window);
        for v in values {
            let out = n.push(v);
            prop_assert!((0.0..=1.0).contains(&out));
            prop_assert!(n.len() <= window);
        }
    }

    #[test]
    fn actions_stay_in_the_cube(seed in any::<u64>(), state in proptest::collection::vec(-1.0f64..=1.0, LATENT_DIM)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut policy = DesignerPolicy::new(&PolicyConfig::default(), AdamParams::default(), RewardConfig::parse("FHP").unwrap(), &mut rng);
        // wide log_std so clipping actually happens
        policy.actor.log_std.iter_mut().for_each(|v| *v = 1.0);
        let state = LatentVector::from_slice(&state).unwrap();
        for mode in [ActMode::Stochastic, ActMode::Mean] {
            let a = policy.act(&state, mode, &mut rng).unwrap();
            prop_assert!(a.latent.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        let mean = policy.actor.mean.forward(state.as_slice());
        prop_assert!(mean.iter().all(|m| m.abs() < 1.0));
    }

    #[test]
    fn history_stays_bounded(seed in any::<u64>(), steps in 1usize..40) {
        let reward = RewardConfig::parse("FH").unwrap();
        let mut env = DesignEnv::new(Pipeline::new(Backend::procedural()), reward, 100, ChaCha8Rng::seed_from_u64(seed));
        env.reset().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let m = MetricConfig::default();
        let cap = m.memory.max((m.history_windows * m.window_stride).div_ceil(14));
        for _ in 0..steps {
            let z = LatentVector::uniform(&mut rng);
            let step = env.step(&z).unwrap();
            let state = env.state().unwrap();
            prop_assert!(state.history().len() <= cap);
            if step.info.playable {
                prop_assert_eq!(&state.current_latent, &z);
            }
            if step.done {
                break;
            }
        }
    }
}
