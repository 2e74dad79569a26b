mod common;

use common::arb_config;
use proptest::prelude::*;
use sqmem_cli::config::{ConfigError, ExperimentConfig, KEYS};

#[test]
fn empty_file_gives_defaults() {
    assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    assert_eq!(ExperimentConfig::parse("# nothing here\n\n   \n").unwrap(), ExperimentConfig::default());
}

#[test]
fn default_text_documents_every_key() {
    let text = ExperimentConfig::default().to_text();
    for (key, doc) in KEYS {
        assert!(text.contains(&format!("\n{key} = ")), "{key} missing");
        assert!(text.contains(doc), "doc of {key} missing");
    }
    assert_eq!(ExperimentConfig::parse(&text).unwrap(), ExperimentConfig::default());
}

#[test]
fn switch_on_before_switch_off_names_the_key() {
    let err = ExperimentConfig::parse("channel.t_off = 1e-6\nchannel.t_on = 0.5e-6\n").unwrap_err();
    assert!(matches!(err, ConfigError::Constraint { key: "channel.t_on", .. }), "{err:?}");
    assert!(err.to_string().contains("channel.t_on"));
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let err = ExperimentConfig::parse("run.seed = 3\n\n  medium.optical_depth 5\n").unwrap_err();
    match err {
        ConfigError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 3)),
        other => panic!("{other:?}"),
    }
    let err = ExperimentConfig::parse("run.seed = three\n").unwrap_err();
    match err {
        ConfigError::Value { line, column, key, .. } => {
            assert_eq!((line, column), (1, 12));
            assert_eq!(key, "run.seed");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_and_duplicate_keys() {
    match ExperimentConfig::parse("run.seed = 1\nrun.sed = 2\n").unwrap_err() {
        ConfigError::UnknownKey { line, column, key } => {
            assert_eq!((line, column, key.as_str()), (2, 1, "run.sed"));
        }
        other => panic!("{other:?}"),
    }
    match ExperimentConfig::parse("run.seed = 1\n run.seed = 2\n").unwrap_err() {
        ConfigError::Duplicate { line, column, first, .. } => assert_eq!((line, column, first), (2, 2, 1)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn trailing_comments_and_auto_values() {
    let c =
        ExperimentConfig::parse("channel.eta0 = 0.3 # pinned\nrun.sequences = auto\nimperfections.adc_bits = off\n")
            .unwrap();
    assert_eq!(c.channel.eta0, Some(0.3));
    assert_eq!(c.run.sequences, None);
    assert_eq!(c.imperfections.adc_bits, None);
}

#[test]
fn constraint_violations() {
    let cases = [
        ("source.pump_param = 0.4\n", "source.escape_eff"),
        ("source.min_db = 1\n", "source.min_db"),
        ("run.lo_phases = 0, 1\n", "run.lo_phases"),
        ("channel.flux_ratio_target = 0\n", "channel.flux_ratio_target"),
        ("imperfections.spike_lines = 900e3:-40\n", "imperfections.spike_lines"),
        ("run.sequences = 1\n", "run.sequences"),
        ("schedule.trace_start = 0\n", "schedule.trace_start"),
    ];
    for (text, key) in cases {
        match ExperimentConfig::parse(text) {
            Err(ConfigError::Constraint { key: k, .. }) => assert_eq!(k, key, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn nan_is_rejected() {
    assert!(matches!(ExperimentConfig::parse("medium.optical_depth = NaN\n"), Err(ConfigError::Value { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn text_round_trip_is_lossless(c in arb_config()) {
        prop_assume!(c.validate().is_ok());
        let text = c.to_text();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_text(), text);
        for (key, _) in KEYS {
            prop_assert_eq!(back.get(key), c.get(key));
        }
    }
}
