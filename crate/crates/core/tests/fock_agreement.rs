use linopt::fock::{oracle_fidelity, FockSpace};
use linopt::optics::{fidelity, random_linear_optical};
use linopt::training::sample_training_set;
use linopt::SchemeTag;

#[test]
fn oracle_matches_closed_form_on_training_states() {
    for m in 1..=2 {
        let space = FockSpace::with_default_cutoff(m).unwrap();
        for seed in 0..6u64 {
            let ou = random_linear_optical::<f64>(m, seed);
            let ov = random_linear_optical::<f64>(m, seed + 50);
            let set = sample_training_set::<f64>(SchemeTag::Erm2, m, 2, 2.0, seed).unwrap();
            for x in &set.states {
                let a = oracle_fidelity(x, &ou, &ov, &space).unwrap();
                let b = fidelity(x, &ou, &ov).unwrap();
                assert!((a - b).abs() < 1e-8, "M={m} seed={seed}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn cutoff_doubling_is_stable() {
    let (ou, ov) = (random_linear_optical::<f64>(1, 1), random_linear_optical::<f64>(1, 2));
    let set = sample_training_set::<f64>(SchemeTag::Erm1, 1, 4, 1.5, 9).unwrap();
    let (s1, s2) = (FockSpace::new(1, 30).unwrap(), FockSpace::new(1, 60).unwrap());
    for x in &set.states {
        let d = oracle_fidelity(x, &ou, &ov, &s1).unwrap() - oracle_fidelity(x, &ou, &ov, &s2).unwrap();
        assert!(d.abs() < 1e-10);
    }
}
