use std::sync::OnceLock;

use periodauth::auth::{
    accept_and_update, authenticate, enroll, resample_window, ActivityProfile, ActivityWindow, AuthConfig, Verdict,
};
use periodauth::synth::activity_signal;
use periodauth::Activity;
use proptest::prelude::*;

fn config() -> AuthConfig {
    AuthConfig {
        n_sims: 300,
        ..AuthConfig::default()
    }
}

fn profile() -> &'static ActivityProfile {
    static P: OnceLock<ActivityProfile> = OnceLock::new();
    P.get_or_init(|| {
        let axes = activity_signal(Activity::Jumping, 4).cycles(8, 4).unwrap();
        let w = ActivityWindow::from_axes(Some(Activity::Jumping), axes).unwrap();
        enroll(&ActivityProfile::new("owner"), &w, &config()).unwrap()
    })
}

fn window(noise: f64, amplitude: f64, seed: u64) -> ActivityWindow {
    let e = profile().entry(Activity::Jumping).unwrap();
    let start = e.buffer().t().last().unwrap() + 1.0 + (seed % 4) as f64 * 25.0;
    resample_window(e, start, 100, noise, amplitude, seed).unwrap()
}

#[test]
fn noise_inflated_window_lands_between_floors() {
    let cfg = config();
    let mut mean = 0.0;
    for seed in 0..20 {
        let d = authenticate(&window(2.0, 1.0, seed), profile(), &AuthConfig { seed, ..cfg.clone() }).unwrap();
        assert_ne!(d.verdict, Verdict::Accept, "{d:?}");
        mean += d.coverage_ratio / 20.0;
    }
    assert!(mean > cfg.escalation_floor && mean < cfg.te_threshold, "{mean}");
}

#[test]
fn owner_windows_mostly_accepted() {
    let cfg = config();
    let accepted = (0..40)
        .filter(|&seed| {
            let d = authenticate(&window(1.0, 1.0, seed), profile(), &AuthConfig { seed, ..cfg.clone() }).unwrap();
            d.verdict == Verdict::Accept
        })
        .count();
    assert!(accepted >= 36, "{accepted}/40");
}

#[test]
fn scaled_impostor_never_accepted() {
    let cfg = config();
    for seed in 0..20 {
        let d = authenticate(&window(1.0, 2.5, seed), profile(), &AuthConfig { seed, ..cfg.clone() }).unwrap();
        assert_ne!(d.verdict, Verdict::Accept, "{d:?}");
    }
}

#[test]
fn update_leaves_original_profile_untouched() {
    let p = profile();
    let before = p.to_json().unwrap();
    let w = window(0.0, 1.0, 0);
    let d = authenticate(&w, p, &config()).unwrap();
    assert_eq!(d.verdict, Verdict::Accept);
    let updated = accept_and_update(&w, p, &d, &config()).unwrap();
    assert_eq!(p.to_json().unwrap(), before);
    let (old, new) = (p.entry(Activity::Jumping).unwrap(), updated.entry(Activity::Jumping).unwrap());
    assert_eq!(new.observation_count(), old.observation_count() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn decisions_are_deterministic(seed in 0u64..1000, noise in 0.0f64..2.0) {
        let w = window(noise, 1.0, seed);
        let cfg = AuthConfig { seed, ..config() };
        prop_assert_eq!(authenticate(&w, profile(), &cfg).unwrap(), authenticate(&w, profile(), &cfg).unwrap());
    }

    #[test]
    fn raising_te_never_turns_reject_into_accept(seed in 0u64..1000, noise in 0.0f64..2.5, te in 0.4f64..1.0) {
        let w = window(noise, 1.0, seed);
        let base = AuthConfig { seed, ..config() };
        let low = authenticate(&w, profile(), &base).unwrap();
        let high = authenticate(&w, profile(), &AuthConfig { te_threshold: te.max(base.te_threshold), ..base.clone() }).unwrap();
        if low.verdict == Verdict::Reject {
            prop_assert_eq!(high.verdict, Verdict::Reject);
        }
        if high.verdict == Verdict::Accept {
            prop_assert_eq!(low.verdict, Verdict::Accept);
        }
    }
}
