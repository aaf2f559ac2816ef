use std::path::PathBuf;

use actstate::bc::{binary_example_spec, binary_scheme_vars};
use actstate::config::{parse_config, parse_vars, SpecConfig, VarsConfig};
use actstate::gaussian::GaussPowers;

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn binary_example_config_matches_builder() {
    let l = parse_config(&shipped("binary_example.toml")).unwrap();
    let SpecConfig::Bc(spec) = l.value else { panic!("expected a bc spec") };
    let want = binary_example_spec(0.1, 0.1, 0.1).unwrap();
    assert_eq!(spec.sizes, want.sizes);
    for (k, r) in [(&spec.state_channel, &want.state_channel), (&spec.channel1, &want.channel1), (&spec.degrading_channel, &want.degrading_channel)] {
        for (a, b) in k.rows().zip(r.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }
    assert_eq!(spec.cost, want.cost);
    assert!(l.warnings.is_empty());
}

#[test]
fn scheme_vars_file_matches_builder() {
    let l = parse_vars(&shipped("binary_scheme_vars.toml"), 2, 2, 2).unwrap();
    let VarsConfig::Bc(v) = l.value else { panic!("expected bc vars") };
    let want = binary_scheme_vars(0.1, 0.25).unwrap();
    assert_eq!(v.f_a, want.f_a);
    assert_eq!(v.f_x, want.f_x);
    for (a, b) in v.pu.probs().iter().zip(want.pu.probs()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn every_shipped_config_parses() {
    for name in ["binary_example.toml", "ptp_binary.toml", "probing_example.toml", "gaussian_unit.toml"] {
        let l = parse_config(&shipped(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(l.warnings.is_empty(), "{name}: {:?}", l.warnings);
    }
    let l = parse_config(&shipped("gaussian_unit.toml")).unwrap();
    assert_eq!(l.value, SpecConfig::Gaussian(GaussPowers::unit()));
}

#[test]
fn schemas_cover_shipped_configs() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    for name in ["binary_example.toml", "ptp_binary.toml", "probing_example.toml", "gaussian_unit.toml", "binary_scheme_vars.toml"] {
        let cfg: toml::Table = std::fs::read_to_string(shipped(name)).unwrap().parse().unwrap();
        let kind = cfg["kind"].as_str().unwrap();
        let schema: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(root.join(format!("{kind}.schema.json"))).unwrap()).unwrap();
        let props = schema["properties"].as_object().unwrap();
        for key in cfg.keys() {
            assert!(props.contains_key(key), "{name}: `{key}` not in the {kind} schema");
        }
        for req in schema["required"].as_array().unwrap() {
            assert!(cfg.contains_key(req.as_str().unwrap()), "{name}: missing required `{req}`");
        }
    }
}
