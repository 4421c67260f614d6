use linopt::junta::{algorithm1, swap_junta_id, StagePolicy, TrainingSize};
use linopt::optics::{embed_junta, frobenius_dist_sq, random_linear_optical, realify_unchecked, JuntaSpec};
use linopt::rng;
use rand::seq::index::sample;

#[test]
fn six_mode_three_juntas_are_recovered() {
    let policy = StagePolicy { training_size: TrainingSize::AtLeast(3), ..StagePolicy::default() };
    let mut recovered = 0;
    for seed in 0..10u64 {
        let mut set = sample(&mut rng::seeded(seed), 6, 3).into_vec();
        set.sort_unstable();
        let target = embed_junta(&JuntaSpec::new(6, set.clone(), random_linear_optical::<f64>(3, 100 + seed)).unwrap());
        let r = algorithm1(&target, &policy, seed).unwrap();
        if r.junta_set == set && r.stage_count() == 2 {
            recovered += 1;
            assert!(r.final_risk < policy.termination_threshold);
            assert!(frobenius_dist_sq(target.matrix(), &realify_unchecked(&r.learned_full)) < 1e-6);
        }
    }
    assert!(recovered >= 8, "{recovered}/10");
}

#[test]
fn stage_minima_never_increase_past_termination() {
    let target = embed_junta(&JuntaSpec::new(5, vec![0, 2, 4], random_linear_optical::<f64>(3, 9)).unwrap());
    let r = algorithm1(&target, &StagePolicy::default(), 4).unwrap();
    let last = r.stages.last().unwrap();
    assert!(last.minimum < 1e-10);
    assert_eq!(r.terminated_stage, last.stage);
    assert!(r.energy_spent > 0.0);
}

#[test]
fn swap_identification_finds_the_junta() {
    let target = embed_junta(&JuntaSpec::new(6, vec![1, 4], random_linear_optical::<f64>(2, 77)).unwrap());
    let res = swap_junta_id(&target, 4.0, 100_000, 5).unwrap();
    assert!(!res.undetermined);
    assert_eq!(res.junta_set, vec![1, 4]);
}
