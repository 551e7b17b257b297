mod support;

use proptest::prelude::*;
use twostage::domain::{CountTable, OutcomeCell};
use twostage::phase1::{boin_decision, BoinBoundaries, BoinDecision, Phase1Design, Phase1Policy};
use twostage::phase2::Phase2Design;
use twostage::{Scenario, TrialConfig};

use support::{check_elimination, check_trial, monotone_tox, scenario};

fn scenario_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.01f64..0.2, 6),
        prop::collection::vec(0.0f64..0.9, 6),
    )
        .prop_map(|(steps, eff)| (monotone_tox(&steps), eff))
}

fn phase1_design() -> impl Strategy<Value = Phase1Design> {
    prop::sample::select(Phase1Design::ALL.to_vec())
}

fn phase2_design() -> impl Strategy<Value = Option<Phase2Design>> {
    prop::option::weighted(0.8, prop::sample::select(Phase2Design::ALL.to_vec()))
}

fn build(tox: &[f64], eff: &[f64]) -> (TrialConfig, Scenario) {
    let cfg = TrialConfig::default();
    let sc = scenario("random", tox, eff, &cfg);
    (cfg, sc)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn simulated_trials_respect_paths_caps_and_clock(
        (tox, eff) in scenario_strategy(),
        p1 in phase1_design(),
        p2 in phase2_design(),
        seed in any::<u64>(),
    ) {
        let (cfg, sc) = build(&tox, &eff);
        let checked = check_trial(&sc, &cfg, p1, p2, seed);
        prop_assert!(checked.is_ok(), "{}", checked.unwrap_err());
    }

    #[test]
    fn safety_elimination_closes_every_higher_dose(
        (tox, eff) in scenario_strategy(),
        p1 in phase1_design(),
        seed in any::<u64>(),
    ) {
        let (cfg, sc) = build(&tox, &eff);
        let checked = check_elimination(&Phase1Policy::new(p1, &cfg).unwrap(), &sc, seed);
        prop_assert!(checked.is_ok(), "{}", checked.unwrap_err());
    }

    #[test]
    fn count_table_identities(cells in prop::collection::vec(0usize..4, 0..60)) {
        let cells: Vec<OutcomeCell> = cells.into_iter().map(|i| OutcomeCell::ALL[i]).collect();
        let t = CountTable::from_cells(cells.iter().copied());
        prop_assert!(t.identities_hold());
        prop_assert_eq!(t.n(), cells.len());
        prop_assert_eq!(t.n_tox(), cells.iter().filter(|c| c.is_tox()).count());
        prop_assert_eq!(t.n_eff(), cells.iter().filter(|c| c.is_eff()).count());
        let mut inc = CountTable::default();
        for c in &cells {
            inc.add(*c);
        }
        prop_assert_eq!(inc, t);
    }

    #[test]
    fn boin_decisions_partition_the_unit_interval(
        phi in 0.1f64..0.5,
        lo in 0.3f64..0.9,
        hi in 1.1f64..1.9,
        p in 0.0f64..=1.0,
        q in 0.0f64..=1.0,
    ) {
        prop_assume!(phi * hi < 1.0);
        let b = BoinBoundaries::new(phi, lo * phi, hi * phi).unwrap();
        prop_assert!(b.lambda_e < phi && phi < b.lambda_d);
        let want = if p <= b.lambda_e {
            BoinDecision::Escalate
        } else if p >= b.lambda_d {
            BoinDecision::Deescalate
        } else {
            BoinDecision::Stay
        };
        prop_assert_eq!(boin_decision(&b, p), want);
        let rank = |d| match d {
            BoinDecision::Escalate => 0,
            BoinDecision::Stay => 1,
            BoinDecision::Deescalate => 2,
        };
        if p <= q {
            prop_assert!(rank(boin_decision(&b, p)) <= rank(boin_decision(&b, q)));
        }
    }
}
