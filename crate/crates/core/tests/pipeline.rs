use swrisk::embedding::{assemble_dataset, AssembleOptions, Split};
use swrisk::fusion::{load_checkpoint, save_checkpoint, Architecture, FusionConfig};
use swrisk::synth::{generate, SynthConfig};
use swrisk::train::{evaluate, predict_scores, train, Dataset, F1Average, TrainConfig};

fn small_corpus(root: &std::path::Path) -> std::path::PathBuf {
    let cfg = SynthConfig {
        n_subjects: 60,
        split: [40, 10, 10],
        audio_dim: 24,
        text_dim: 16,
        wav_seconds: 0.4,
        seed: 11,
        ..SynthConfig::default()
    };
    generate(&cfg, root).unwrap().manifest
}

#[test]
fn corpus_to_checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_corpus(dir.path());
    let data = assemble_dataset(&manifest, &AssembleOptions::default()).unwrap();
    let arch = Architecture::ModalityAttentionV2;
    let train_set = Dataset::from_records(data.get(Split::Train), arch).unwrap();
    let dev_set = Dataset::from_records(data.get(Split::Dev), arch).unwrap();
    let test_set = Dataset::from_records(data.get(Split::Test), arch).unwrap();
    assert!(test_set.labels.iter().all(Option::is_none), "test labels are withheld");

    let acoustic = train_set.inputs[0].acoustic.as_ref().map(Vec::len);
    assert_eq!(acoustic, Some(50));
    let cfg = FusionConfig {
        proj_dim: 16,
        hidden_dim: 8,
        ..FusionConfig::new(arch, 24, 16, acoustic)
    };
    let tc = TrainConfig {
        epochs: 60,
        seed: 3,
        ..TrainConfig::for_architecture(arch)
    };
    let (model, history) = train(&tc, &cfg, &train_set, &dev_set).unwrap();
    assert!(history.best_epoch >= 1);

    let scores = predict_scores(&model, &dev_set.inputs).unwrap();
    let m = evaluate("dev", &scores, &dev_set.require_labels().unwrap(), F1Average::Binary).unwrap();
    assert!(m.accuracy >= 0.9, "{m:?}");

    // a saved checkpoint reproduces the in-memory scores exactly
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model, tc.seed, &path).unwrap();
    let (back, header) = load_checkpoint(&path).unwrap();
    assert_eq!(header.seed, 3);
    let again = predict_scores(&back, &dev_set.inputs).unwrap();
    assert_eq!(
        scores.iter().map(|s| s.to_bits()).collect::<Vec<_>>(),
        again.iter().map(|s| s.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn audio_text_model_skips_acoustic_loading() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_corpus(dir.path());
    let opts = AssembleOptions {
        include_acoustic: false,
        ..AssembleOptions::default()
    };
    let data = assemble_dataset(&manifest, &opts).unwrap();
    let set = Dataset::from_records(data.get(Split::Train), Architecture::EarlyConcatV1).unwrap();
    assert_eq!(set.len(), 40);
    assert!(set.inputs.iter().all(|x| x.acoustic.is_none() && x.audio.len() == 24 && x.text.len() == 16));
    assert!(Dataset::from_records(data.get(Split::Train), Architecture::WeightedAttentionV3).is_err());
}
