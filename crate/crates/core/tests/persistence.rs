//! State files survive a round trip and reject damage.

use ids_core::{alm, persist, DeviceParams, Model, Plane, PulseSpec, Quantizer, ReadoutConfig, Sample};

fn trained() -> Model {
    let params = DeviceParams::default().calibrated(-3.0, 10e-3, 100.0).unwrap();
    let plane = |lo: f64, hi: f64| {
        Plane::new(
            params,
            1000.0,
            Quantizer::new(lo, hi, 12).unwrap(),
            Quantizer::new(-1.0, 1.0, 10).unwrap(),
        )
        .unwrap()
    };
    let mut m = Model::new(
        vec![plane(0.0, 1.0), plane(-5.0, 5.0).with_rectification(true)],
        ReadoutConfig::default(),
        PulseSpec::new(-3.0, 10e-3, 10).unwrap(),
        0.01,
    )
    .unwrap();
    let data: Vec<Sample> = (0..30)
        .map(|k| {
            let t = k as f64 / 29.0;
            Sample::new(vec![t, 10.0 * t - 5.0], (6.0 * t).sin() * 0.9)
        })
        .collect();
    m.train(&data).unwrap();
    m
}

#[test]
fn reload_reproduces_inference_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.idsx");
    let m = trained();
    persist::save(&m, &path).unwrap();
    let back = persist::load(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(persist::encode(&back), std::fs::read(&path).unwrap());
    for k in 0..25 {
        let x = [k as f64 / 24.0, 4.0 - k as f64 / 3.0];
        let (a, b) = (alm::infer(&m, &x).unwrap(), alm::infer(&back, &x).unwrap());
        assert_eq!(a.y_hat.to_bits(), b.y_hat.to_bits());
        assert_eq!(a, b);
    }
}

#[test]
fn damaged_file_is_rejected_and_left_alone() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.idsx");
    persist::save(&trained(), &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(
        persist::load(&path).unwrap_err(),
        ids_core::Error::CorruptState(_)
    ));
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
}

#[test]
fn save_replaces_previous_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.idsx");
    std::fs::write(&path, b"old").unwrap();
    let m = trained();
    persist::save(&m, &path).unwrap();
    assert_eq!(persist::load(&path).unwrap(), m);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = persist::load(&dir.path().join("absent")).unwrap_err();
    assert!(matches!(err, ids_core::Error::Io(_)));
}
