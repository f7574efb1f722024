mod support;

use attrikit::backends::MockGroundedDetector;
use attrikit::prompt::{build_prompt_sequence, candidate_prompts, mean_relevance, AblationMode, DEFAULT_TOP_N};
use support::oracle::relevance_double_loop;
use support::Harness;

#[test]
fn mean_relevance_matches_double_loop() {
    let h = Harness::new(6, 2);
    let det = MockGroundedDetector::default();
    let lexicon = h.lexicon();
    let candidates = candidate_prompts(&lexicon, AblationMode::Full).unwrap();
    assert!(candidates.len() > DEFAULT_TOP_N);
    for p in &candidates {
        let got = mean_relevance(p, &h.images, &det).unwrap().relevance;
        let want = relevance_double_loop(&p.rendered, &h.images, &det).unwrap();
        assert!((got - want).abs() <= 1e-12, "{}: {got} vs {want}", p.rendered);
    }
}

#[test]
fn sequence_is_sorted_and_truncated_to_default_n() {
    let h = Harness::new(6, 2);
    let seq = build_prompt_sequence(
        &h.lexicon(),
        &h.images,
        &MockGroundedDetector::default(),
        DEFAULT_TOP_N,
        AblationMode::Full,
    )
    .unwrap();
    assert_eq!(DEFAULT_TOP_N, 9);
    assert_eq!(seq.entries.len(), 9);
    assert_eq!(seq.n_selected, 9);
    assert!(seq.entries.windows(2).all(|w| w[0].relevance >= w[1].relevance));
    assert_eq!(seq.concatenated(), seq.prompts().join(" "));
}

#[test]
fn shuffled_images_give_the_same_relevance() {
    let h = Harness::new(6, 4);
    let det = MockGroundedDetector::default();
    let p = &candidate_prompts(&h.lexicon(), AblationMode::Full).unwrap()[0];
    let mut rev = h.images.clone();
    rev.reverse();
    let a = mean_relevance(p, &h.images, &det).unwrap().relevance;
    let b = mean_relevance(p, &rev, &det).unwrap().relevance;
    assert!((a - b).abs() <= 1e-12);
}
