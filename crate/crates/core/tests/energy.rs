use periodauth::auth::Verdict;
use periodauth::energy::{
    default_profile, default_profiles, estimate_energy, policy_step, profiles_from_json, PolicyConfig, RiskLevel,
    SpotCheck,
};

fn replay(decisions: &[Option<Verdict>], start: RiskLevel, cfg: &PolicyConfig) -> (f64, Vec<RiskLevel>) {
    let sensor = default_profile("BMA220").unwrap();
    let mut risk = start;
    let mut total = 0.0;
    let mut path = Vec::new();
    for d in decisions {
        let (sch, next) = policy_step(risk, *d, false, cfg).unwrap();
        total += estimate_energy(&sch, &sensor).unwrap().average_ua;
        risk = next;
        path.push(risk);
    }
    (total / decisions.len() as f64, path)
}

#[test]
fn shipped_table_survives_json() {
    let json = serde_json::to_string(&default_profiles()).unwrap();
    assert_eq!(profiles_from_json(&json).unwrap(), default_profiles());
}

#[test]
fn lockdown_costs_more_than_regular() {
    let cfg = PolicyConfig::default();
    let (regular, _) = replay(&[None; 24], RiskLevel::Regular, &cfg);
    let (locked, path) = replay(&[Some(Verdict::Reject); 24], RiskLevel::Regular, &cfg);
    assert_eq!(path[0], RiskLevel::Lockdown);
    assert!(locked > regular, "{locked} vs {regular}");
    assert_eq!(locked, 250.0);
    assert!((regular - 25.9).abs() < 1e-9);
}

#[test]
fn accepts_walk_down_from_lockdown() {
    let (_, path) = replay(&[Some(Verdict::Accept); 4], RiskLevel::Lockdown, &PolicyConfig::default());
    assert_eq!(
        path,
        [RiskLevel::Elevated, RiskLevel::Regular, RiskLevel::Low, RiskLevel::Low]
    );
}

#[test]
fn spot_checks_only_raise_the_duty() {
    let cfg = PolicyConfig {
        spot_check: Some(SpotCheck {
            probability: 0.3,
            seed: 9,
        }),
        ..PolicyConfig::default()
    };
    let mut raised = 0;
    for step in 0..200 {
        let base = cfg.schedule(RiskLevel::Low, true).unwrap().normal_fraction();
        let f = cfg.schedule_at(RiskLevel::Low, true, step).unwrap().normal_fraction();
        assert!(f >= base);
        if f > base {
            raised += 1;
        }
    }
    assert!((30..=90).contains(&raised), "{raised}");
}
