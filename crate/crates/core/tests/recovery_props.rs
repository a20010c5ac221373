use proptest::prelude::*;
use terranav::recovery::{
    monitor_tick, next_recovery, HealthEvent, HealthEventKind, MonitorConfig, MonitorState, Outcome, PlannerStatus,
    RecoveryConfig, RecoveryDecision, RecoveryRecord, TickInputs,
};
use terranav::PoseSE3;

fn kind() -> impl Strategy<Value = HealthEventKind> {
    prop_oneof![
        Just(HealthEventKind::PlannerAllBlocked),
        Just(HealthEventKind::NoPath),
        Just(HealthEventKind::OdometryConfidenceLoss),
        Just(HealthEventKind::StuckDetected),
        Just(HealthEventKind::SensorDropout),
    ]
}

/// (gap before the event, kind, time the action takes, whether it works)
fn incident() -> impl Strategy<Value = (f64, HealthEventKind, f64, bool)> {
    (prop_oneof![3 => 0.0..5.0f64, 1 => 25.0..60.0f64], kind(), 0.0..12.0f64, any::<bool>())
}

fn tick() -> impl Strategy<Value = (Option<PlannerStatus>, f64, f64, bool, Option<usize>)> {
    (
        prop::option::of(prop_oneof![Just(PlannerStatus::Ok), Just(PlannerStatus::NoPath), Just(PlannerStatus::AllBlocked)]),
        0.0..1.0f64,
        0.0..0.05f64,
        prop::bool::weighted(0.05),
        prop::option::of(0usize..3),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn escalation_follows_the_fixed_order_once_per_episode(incidents in prop::collection::vec(incident(), 1..30)) {
        let config = RecoveryConfig::default();
        let mut history: Vec<RecoveryRecord> = Vec::new();
        let mut now = 0.0;
        // Independent episode bookkeeping: a gap of at least `episode_reset`
        // since the last action finished starts a fresh episode.
        let mut tried = 0;
        for (gap, kind, took, works) in incidents {
            now += gap;
            let event = HealthEvent { kind, stamp: now, details: String::new() };
            if history.last().is_some_and(|r| now - r.finished >= config.episode_reset) {
                tried = 0;
            }
            match next_recovery(&history, &event, &config) {
                RecoveryDecision::Act(action) => {
                    prop_assert_eq!(action.rank(), tried);
                    tried += 1;
                    now += took;
                    let outcome = if works { Outcome::Succeeded } else { Outcome::Failed };
                    history.push(RecoveryRecord { event, action, outcome, finished: now });
                }
                RecoveryDecision::Exhausted => prop_assert_eq!(tried, 4),
            }
        }
    }

    #[test]
    fn monitor_is_a_function_of_its_inputs(
        ticks in prop::collection::vec(tick(), 1..120),
        drift in prop::collection::vec((-0.02..0.02f64, -0.02..0.02f64), 120),
    ) {
        let config = MonitorConfig::default();
        let inputs: Vec<TickInputs> = ticks
            .iter()
            .zip(&drift)
            .enumerate()
            .scan((0.0, 0.0), |pos, (k, (&(planner, cmd, step, fault, scan), &(dx, dy)))| {
                pos.0 += step + dx;
                pos.1 += dy;
                Some(TickInputs {
                    stamp: k as f64 * 0.1,
                    planner,
                    commanded_speed: cmd,
                    pose: PoseSE3::new(pos.0, pos.1, 0.0, 0.0, 0.0, 0.0),
                    odometry_fault: fault,
                    scan_points: scan.map(|n| n * 500),
                })
            })
            .collect();
        let run = || {
            let mut state = MonitorState::new();
            inputs.iter().map(|t| monitor_tick(t, &mut state, &config)).collect::<Vec<_>>()
        };
        let a = run();
        prop_assert_eq!(&a, &run());
        for (t, events) in inputs.iter().zip(&a) {
            prop_assert!(events.iter().all(|e| e.stamp == t.stamp));
        }
    }
}
