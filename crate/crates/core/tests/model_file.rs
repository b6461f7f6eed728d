use std::io::BufReader;

use dpgp_core::fitted::FittedModel;
use dpgp_core::inference::GibbsConfig;
use dpgp_core::io::{extract_frames, load_model, read_model, save_model, write_model, ModelFileError};
use dpgp_core::model::PriorConfig;
use dpgp_core::simulate::classify_frame;
use dpgp_core::synth::{generate, synth_roi, SynthSpec};

fn fitted(n_gibbs: usize) -> FittedModel {
    let spec = SynthSpec {
        n_frames: 40,
        seed: 12,
        ..SynthSpec::default()
    };
    let data = generate(&spec).unwrap();
    let (frames, _) = extract_frames(&data.records, &synth_roi(), spec.dt).unwrap();
    let prior = PriorConfig::from_frames(&frames, 10.0, 1.0, 20, n_gibbs, 12).unwrap();
    FittedModel::fit(frames, synth_roi(), GibbsConfig::new(prior), |_| {}).unwrap()
}

fn to_text(m: &FittedModel) -> String {
    let mut buf = Vec::new();
    write_model(m, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn round_trip_preserves_model_and_scores() {
    let model = fitted(4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.dpgp");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(to_text(&loaded), to_text(&model));

    let held_out = {
        let spec = SynthSpec {
            n_frames: 10,
            seed: 500,
            ..SynthSpec::default()
        };
        let data = generate(&spec).unwrap();
        extract_frames(&data.records, &synth_roi(), spec.dt).unwrap().0
    };
    for f in &held_out {
        let a = classify_frame(f, &model).unwrap();
        let b = classify_frame(f, &loaded).unwrap();
        assert_eq!(a, b);
    }
    for id in model.pattern_ids() {
        let (x, y) = (model.field(id).unwrap(), loaded.field(id).unwrap());
        assert_eq!(x.log_marginal(), y.log_marginal());
    }
}

#[test]
fn replayed_sweep_matches_after_reload() {
    let model = fitted(3);
    let loaded = read_model(BufReader::new(to_text(&model).as_bytes())).unwrap();
    let mut a = model.resume().unwrap();
    let mut b = loaded.resume().unwrap();
    let ra = a.step().unwrap();
    let rb = b.step().unwrap();
    assert_eq!(a.state(), b.state());
    assert_eq!(ra.log_likelihood, rb.log_likelihood);
}

#[test]
fn zero_iterations_round_trip() {
    let model = fitted(0);
    assert_eq!(model.state.k(), 1);
    let loaded = read_model(to_text(&model).as_bytes()).unwrap();
    assert_eq!(loaded.state.k(), 1);
    assert!(loaded.trace.is_empty());
}

#[test]
fn truncated_file_names_missing_section() {
    let text = to_text(&fitted(1));
    let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    match read_model(cut.as_bytes()) {
        Err(ModelFileError::MissingSection(s)) => assert_eq!(s, "frames"),
        other => panic!("unexpected {other:?}"),
    }
    let no_end: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
    assert!(matches!(read_model(no_end.as_bytes()), Err(ModelFileError::MissingSection("end"))));
    let mid_line = &text[..text.find("state ").unwrap() + 40];
    match read_model(mid_line.as_bytes()) {
        Err(ModelFileError::Schema { section, .. }) => assert_eq!(section, "state"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn future_version_is_rejected() {
    let text = to_text(&fitted(1)).replacen("dpgp-model 1", "dpgp-model 2", 1);
    match read_model(text.as_bytes()) {
        Err(ModelFileError::VersionMismatch { found }) => assert_eq!(found, "2"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn schema_errors_carry_the_field_path() {
    let text = to_text(&fitted(1));
    let bad = text.replacen("\"w_x\":", "\"w_x\":\"oops\",\"ignored\":", 1);
    match read_model(bad.as_bytes()) {
        Err(ModelFileError::Schema { section, msg }) => {
            assert_eq!(section, "state");
            assert!(msg.contains("w_x"), "{msg}");
        }
        other => panic!("unexpected {other:?}"),
    }
    let bad = text.replacen("\"alpha\":", "\"alpha\":-", 1);
    assert!(matches!(read_model(bad.as_bytes()), Err(ModelFileError::Schema { .. })));
}
