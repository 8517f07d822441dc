use textcnn_core::analysis::{
    build_activation_matrix, correlation_matrix, probe_group, probe_kernel, GroupKey, KernelId, ProbeSets,
};
use textcnn_core::data::synthetic::{dataset_embeddings, question_corpus};
use textcnn_core::data::{embed_tokens, Dataset, EmbeddingTable, ProbeSplit};
use textcnn_core::model::{Model, ModelConfig, Trainer};
use textcnn_core::{Error, Mode, Tensor};

/// A model with populated running statistics after a few training steps.
fn trained(maps: usize, dim: usize, seed: u64) -> (Model, Dataset, EmbeddingTable) {
    let data = question_corpus(60, 20, 0.0, seed).unwrap();
    let table = dataset_embeddings(&data, dim, seed).unwrap();
    let mut model = Model::new(ModelConfig {
        feature_maps: maps,
        seed,
        ..ModelConfig::new(dim, 6)
    })
    .unwrap();
    let inputs: Vec<Tensor> = data.sentences.iter().map(|s| model.embed(&s.tokens, &table).unwrap()).collect();
    let labels: Vec<usize> = data.sentences.iter().map(|s| s.label).collect();
    let mut trainer = Trainer::new(&model);
    for _ in 0..3 {
        trainer.step(&mut model, &inputs, &labels).unwrap();
    }
    (model, data, table)
}

#[test]
fn probes_match_the_retained_forward_activations() {
    let (model, data, table) = trained(6, 8, 1);
    for s in data.sentences.iter().take(10) {
        let x = model.embed(&s.tokens, &table).unwrap();
        let forward = model.forward_batch(std::slice::from_ref(&x), Mode::Infer, None).unwrap();
        for tower in &forward.towers {
            let h = tower.window;
            let l1 = &tower.layer1[0];
            for p in 0..l1.rows() {
                let ngram = Tensor::from_rows(&(p..p + h).map(|r| x.row(r)).collect::<Vec<_>>()).unwrap();
                let probe = probe_group(&model, GroupKey::new(1, h), &ngram).unwrap();
                for (a, b) in probe.iter().zip(l1.row(p)) {
                    assert!((a - b).abs() < 1e-12, "layer 1 h={h} p={p}: {a} vs {b}");
                }
            }
            let l2 = &tower.layer2[0];
            for p in 0..l2.rows() {
                let ngram = Tensor::from_rows(&(p..p + 2 * h - 1).map(|r| x.row(r)).collect::<Vec<_>>()).unwrap();
                let probe = probe_group(&model, GroupKey::new(2, h), &ngram).unwrap();
                for (a, b) in probe.iter().zip(l2.row(p)) {
                    assert!((a - b).abs() < 1e-12, "layer 2 h={h} p={p}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn zero_kernel_with_nonpositive_shift_is_silent() {
    let (mut model, data, table) = trained(4, 8, 2);
    let tower = &mut model.towers[0];
    let h = tower.window;
    let mut k = tower.conv1.kernel(1);
    k.weights.iter_mut().for_each(|w| *w = 0.0);
    k.bias = 0.0;
    tower.conv1.set_kernel(1, &k).unwrap();
    tower.bn1.beta[1] = -0.3;
    let ngram = embed_tokens(&data.sentences[0].tokens[..h], &table).unwrap();
    assert_eq!(probe_kernel(&model, KernelId::new(1, h, 1), &ngram).unwrap(), 0.0);
}

#[test]
fn doubling_gamma_doubles_a_positive_activation() {
    let (mut model, data, table) = trained(4, 8, 3);
    let h = model.towers[0].window;
    let kernel = KernelId::new(1, h, 0);
    model.towers[0].bn1.beta[0] = 0.0;
    let ngram = data
        .sentences
        .iter()
        .flat_map(|s| s.tokens.windows(h).map(|w| embed_tokens(w, &table).unwrap()).collect::<Vec<_>>())
        .find(|g| probe_kernel(&model, kernel, g).unwrap() > 0.0)
        .expect("some n-gram activates the kernel");
    let before = probe_kernel(&model, kernel, &ngram).unwrap();
    model.towers[0].bn1.gamma[0] *= 2.0;
    assert_eq!(probe_kernel(&model, kernel, &ngram).unwrap(), 2.0 * before);
}

#[test]
fn probe_errors() {
    let (model, data, table) = trained(4, 8, 4);
    let tokens = &data.sentences[0].tokens;
    let three = embed_tokens(&tokens[..3], &table).unwrap();
    assert!(matches!(
        probe_kernel(&model, KernelId::new(1, 4, 0), &three),
        Err(Error::ShapeMismatch { .. })
    ));
    assert!(probe_kernel(&model, KernelId::new(3, 3, 0), &three).is_err());
    assert!(probe_kernel(&model, KernelId::new(1, 3, 9), &three).is_err());
    let fresh = Model::new(model.config.clone()).unwrap();
    assert!(matches!(
        probe_kernel(&fresh, KernelId::new(1, 3, 0), &three),
        Err(Error::MissingRunningStats)
    ));
}

#[test]
fn matrix_entries_are_single_probes() {
    let (model, data, table) = trained(4, 8, 5);
    let probes = ProbeSets::extract(&data, &table, &model.config.windows, ProbeSplit::Both).unwrap();
    let m = build_activation_matrix(&model, &probes, &table, &data.class_names).unwrap();
    assert_eq!(m.groups.len(), 6);
    assert_eq!(m.probe_split, "train+test");
    for g in &m.groups {
        assert_eq!(g.records.len(), probes.get(g.key.ngram_len()).unwrap().len());
        assert!(g.records.iter().all(|r| r.tokens.len() == g.key.ngram_len()));
        for (col, rec) in g.records.iter().enumerate().step_by(7) {
            let x = embed_tokens(&rec.tokens, &table).unwrap();
            for (row, &k) in g.kernels.iter().enumerate() {
                let v = probe_kernel(&model, k, &x).unwrap();
                assert_eq!(v.to_bits(), g.activations.get(row, col).to_bits());
                assert_eq!(v.to_bits(), probe_kernel(&model, k, &x).unwrap().to_bits());
            }
        }
    }
    let again = build_activation_matrix(&model, &probes, &table, &data.class_names).unwrap();
    assert_eq!(m, again);
}

#[test]
fn default_config_has_384_kernel_rows() {
    let (model, data, table) = trained(64, 300, 6);
    let probes = ProbeSets::extract(&data, &table, &model.config.windows, ProbeSplit::Both).unwrap();
    let m = build_activation_matrix(&model, &probes, &table, &data.class_names).unwrap();
    assert_eq!(m.kernel_count(), 384);
    let g = m.group(GroupKey::new(2, 5)).unwrap();
    assert!(g.records.iter().all(|r| r.tokens.len() == 9));
    assert!(m.groups.iter().all(|g| g.activations.data().iter().all(|v| v.is_finite() && *v >= 0.0)));
    let cm = correlation_matrix(m.group(GroupKey::new(1, 3)).unwrap()).unwrap();
    assert_eq!((cm.r.rows(), cm.r.cols()), (64, 64));
}

#[test]
fn duplicated_kernel_correlates_perfectly() {
    let (mut model, data, table) = trained(5, 8, 7);
    let tower = &mut model.towers[1];
    let h = tower.window;
    let k = tower.conv1.kernel(0);
    tower.conv1.set_kernel(3, &k).unwrap();
    tower.bn1.gamma[3] = tower.bn1.gamma[0];
    tower.bn1.beta[3] = tower.bn1.beta[0];
    let (mut mean, mut var) = (tower.bn1.running_mean.clone(), tower.bn1.running_var.clone());
    mean[3] = mean[0];
    var[3] = var[0];
    tower.bn1.set_running_stats(mean, var).unwrap();
    let probes = ProbeSets::extract(&data, &table, &model.config.windows, ProbeSplit::Both).unwrap();
    let m = build_activation_matrix(&model, &probes, &table, &data.class_names).unwrap();
    let cm = correlation_matrix(m.group(GroupKey::new(1, h)).unwrap()).unwrap();
    assert!(!cm.degenerate[0]);
    assert!((cm.get(0, 3) - 1.0).abs() < 1e-9);
    for i in 0..cm.size() {
        for j in 0..cm.size() {
            assert_eq!(cm.get(i, j), cm.get(j, i));
            assert!(cm.get(i, j).abs() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn empty_probe_group_is_named() {
    let (model, data, table) = trained(4, 8, 8);
    let mut probes = ProbeSets::extract(&data, &table, &model.config.windows, ProbeSplit::Both).unwrap();
    probes.sets.remove(&7);
    let err = build_activation_matrix(&model, &probes, &table, &data.class_names).unwrap_err();
    assert_eq!(err.to_string(), Error::EmptyProbeGroup("2-4 (7-grams)".into()).to_string());
}
