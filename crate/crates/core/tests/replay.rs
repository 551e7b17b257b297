mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twostage::phase1::{Phase1Design, Phase1Policy};
use twostage::scenario::bundled_scenarios;
use twostage::sim::Simulator;
use twostage::{Dose, TrialConfig};

use support::{replay_difference, resolved_arm, top_bop2_difference};

fn replay_pair(tite: Phase1Design, plain: Phase1Design) {
    let cfg = TrialConfig::default();
    let scenarios = bundled_scenarios(&cfg).unwrap();
    let a = Phase1Policy::new(tite, &cfg).unwrap();
    let b = Phase1Policy::new(plain, &cfg).unwrap();
    for seed in 0..100u64 {
        let sc = &scenarios[seed as usize % scenarios.len()];
        if let Some(diff) = replay_difference(&a, &b, sc, seed) {
            panic!("{diff}");
        }
    }
}

#[test]
fn tite_boin_replays_boin_on_complete_data() {
    replay_pair(Phase1Design::TiteBoin, Phase1Design::Boin);
}

#[test]
fn tite_boin12_replays_boin12_on_complete_data() {
    replay_pair(Phase1Design::TiteBoin12, Phase1Design::Boin12);
}

#[test]
fn top_decides_like_bop2_without_pending_outcomes() {
    let cfg = TrialConfig::default();
    let sim = Simulator::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..100 {
        let arm = resolved_arm(&cfg, Dose(1 + i % 6), &mut rng);
        if let Some(diff) = top_bop2_difference(&sim, arm) {
            panic!("arm {i}: {diff}");
        }
    }
}
