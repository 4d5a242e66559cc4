use blockjig::cipher::{encrypt_with, generate_pattern, BlockPattern, CipherConfig, Schedule};
use blockjig::restoration::{best_symmetry, restore_subblocks, score_hypothesis, RestorationHypothesis};
use blockjig::{split_blocks, synth, KeySet};

fn encrypt_in_place(img: &blockjig::Image, pattern: BlockPattern, cfg: &CipherConfig) -> blockjig::Image {
    let n = (img.width() / cfg.m) * (img.height() / cfg.m);
    let schedule = Schedule { block_perm: (0..n).collect(), patterns: vec![pattern] };
    encrypt_with(img, &schedule, cfg).unwrap()
}

#[test]
fn restores_up_to_global_symmetry() {
    let cfg = CipherConfig::default();
    for seed in 0..6u64 {
        let plain = synth::scene(224, 224, seed);
        let keys = KeySet::derive(seed, &[b"restore"]);
        let pattern = generate_pattern(&keys, &cfg, 1).unwrap().patterns[0];
        let enc = encrypt_in_place(&plain, pattern, &cfg);
        let (restored, hyp) = restore_subblocks(&enc, &cfg).unwrap();

        let truth_blocks = split_blocks(&plain, cfg.m).unwrap().blocks;
        let got_blocks = split_blocks(&restored, cfg.m).unwrap().blocks;
        let (_, agreement) = best_symmetry(&truth_blocks, &got_blocks);
        assert_eq!(agreement, 1.0, "seed {seed}: {hyp:?}");

        let truth_score = score_hypothesis(&enc, &RestorationHypothesis::from_pattern(&pattern), cfg.m).unwrap();
        assert!(hyp.score <= truth_score + 1e-9, "seed {seed}: {} > {truth_score}", hyp.score);
    }
}

#[test]
fn plaintext_is_left_alone_up_to_symmetry() {
    let cfg = CipherConfig::default();
    let plain = synth::scene(128, 96, 41);
    let (restored, hyp) = restore_subblocks(&plain, &cfg).unwrap();
    let a = split_blocks(&plain, cfg.m).unwrap().blocks;
    let b = split_blocks(&restored, cfg.m).unwrap().blocks;
    assert_eq!(best_symmetry(&a, &b).1, 1.0);
    let identity = score_hypothesis(&plain, &RestorationHypothesis::identity(), cfg.m).unwrap();
    assert!(hyp.score <= identity + 1e-9);
}

#[test]
fn restoration_is_deterministic() {
    let cfg = CipherConfig::default();
    let plain = synth::scene(96, 96, 5);
    let pattern = generate_pattern(&KeySet::new([9, 8, 7, 6, 5]), &cfg, 1).unwrap().patterns[0];
    let enc = encrypt_in_place(&plain, pattern, &cfg);
    assert_eq!(restore_subblocks(&enc, &cfg).unwrap(), restore_subblocks(&enc, &cfg).unwrap());
}
