use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;

use periodyn::ensemble::instance;
use periodyn::kernels::{DelayKernel, DensityShape};
use periodyn::model::builtin_example;
use periodyn_cli::config::{parse_config, to_config};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn read(name: &str) -> String {
    fs::read_to_string(config_path(name)).unwrap()
}

#[test]
fn builtin_config_equals_embedded_model() {
    assert_eq!(parse_config(&read("builtin.toml")).unwrap(), builtin_example());
}

#[test]
fn shipped_configs_are_admissible_and_canonical_form_is_idempotent() {
    for name in ["builtin.toml", "unstable_scalar.toml", "forced_linear.toml", "equilibrium.toml", "decoupled.toml"] {
        let model = parse_config(&read(name)).unwrap();
        assert!(model.validate().is_admissible(), "{name}");
        let once = to_config(&model);
        let reparsed = parse_config(&once).unwrap();
        assert_eq!(reparsed, model, "{name}");
        assert_eq!(to_config(&reparsed), once, "{name}");
    }
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let text = read("builtin.toml").replace("omega = 2.0", "omega = = 2.0");
    let err = parse_config(&text).unwrap_err().to_string();
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains("column"), "{err}");
}

proptest! {
    #[test]
    fn random_models_round_trip(seed in 0u64..1000, index in 0u64..1000, rate in 0.1f64..10.0, width in 0.01f64..5.0) {
        let mut m = instance(seed, index);
        m.kernels[(0, 0)].density = DelayKernel::density(DensityShape::Exponential { rate }, (rate / 3.0).into()).density;
        m.kernels[(0, 1)] = DelayKernel::density(DensityShape::Table { width, values: vec![0.0, rate, 1.0 / 3.0] }, width.into());
        let text = to_config(&m);
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(to_config(&back), text);
    }
}
