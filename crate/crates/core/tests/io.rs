use proptest::prelude::*;
use sqmem_core::io::*;
use sqmem_core::synth::{HomodyneTrace, Scenario};

fn sample_trace(n: usize, scenario: Scenario) -> HomodyneTrace {
    HomodyneTrace {
        sample_rate: 2e8,
        samples: (0..n).map(|i| (i as f64 * 0.37).sin() * 1e-3 + i as f64).collect(),
        lo_phase: std::f64::consts::FRAC_PI_2,
        scenario,
        seed: 0xdead_beef_0123,
        t0_offset: 0.0,
    }
}

#[test]
fn hodt_header_layout() {
    let b = encode_traces(&[sample_trace(3, Scenario::EitDelay)]);
    assert_eq!(b.len(), 44 + 24);
    assert_eq!(&b[..4], b"HODT");
    assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), HODT_VERSION);
    assert_eq!(f64::from_le_bytes(b[8..16].try_into().unwrap()), 2e8);
    assert_eq!(u32::from_le_bytes(b[24..28].try_into().unwrap()), 2);
    assert_eq!(u64::from_le_bytes(b[36..44].try_into().unwrap()), 3);
}

#[test]
fn hodt_multi_record_round_trip() {
    let traces = vec![sample_trace(2200, Scenario::Vacuum), sample_trace(17, Scenario::StoreRetrieve)];
    let back = decode_traces(&encode_traces(&traces)).unwrap();
    assert_eq!(back, traces);
}

#[test]
fn hodt_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("sqmem-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("t.hodt");
    let traces = vec![sample_trace(100, Scenario::SourceOnly)];
    write_hodt_file(&p, &traces).unwrap();
    assert_eq!(read_hodt_file(&p).unwrap(), traces);
    std::fs::remove_dir_all(&dir).unwrap();
    assert!(matches!(read_hodt_file(&p), Err(FormatError::Io(_))));
}

#[test]
fn hodt_rejects_damage() {
    let good = encode_traces(&[sample_trace(10, Scenario::Vacuum)]);
    assert!(matches!(decode_traces(&[]), Err(FormatError::Truncated { .. })));
    for cut in [3, 20, 44, good.len() - 1] {
        assert!(matches!(decode_traces(&good[..cut]), Err(FormatError::Truncated { .. })), "cut {cut}");
    }
    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(decode_traces(&bad), Err(FormatError::BadMagic(m)) if &m == b"XODT"));
    let mut bad = good.clone();
    bad[4] = 2;
    assert!(matches!(decode_traces(&bad), Err(FormatError::Version(2))));
    let mut bad = good.clone();
    bad[24] = 9;
    assert!(matches!(decode_traces(&bad), Err(FormatError::Scenario(9))));
    let mut bad = good.clone();
    bad[44..52].copy_from_slice(&f64::NAN.to_le_bytes());
    assert!(matches!(decode_traces(&bad), Err(FormatError::Invalid(_))));
    let mut two = good.clone();
    two.extend_from_slice(&good[..30]);
    assert!(matches!(decode_traces(&two), Err(FormatError::Truncated { .. })));
}

#[test]
fn timeline_table_round_trip() {
    let rows = vec![
        TimelineRow {
            window_index: 0,
            t_center_s: -1.16e-6,
            s_min_db: -0.142,
            s_max_db: 0.8017,
            flux: 0.1,
            stat_err_db: 0.061,
            lo_err_db: 0.004,
        },
        TimelineRow {
            window_index: 16,
            t_center_s: 9.08e-6,
            s_min_db: 0.0,
            s_max_db: -1e-17,
            flux: -0.0,
            stat_err_db: 0.0065,
            lo_err_db: 0.0,
        },
    ];
    let text = timeline_csv(&rows);
    assert!(text.starts_with("window_index,t_center_s,s_min_db,s_max_db,flux,stat_err_db,lo_err_db\n"));
    assert_eq!(parse_timeline_csv(&text).unwrap(), rows);
}

#[test]
fn spectrum_and_trace_tables_round_trip() {
    let rows = vec![SpectrumRow { freq_hz: 1.5625e6, s_min_db: -2.0, s_max_db: 6.0, shot_db: 0.0 }];
    assert_eq!(parse_spectrum_csv(&spectrum_csv(&rows)).unwrap(), rows);
    let t = HomodyneTrace { t0_offset: -1.48e-6, ..sample_trace(50, Scenario::Vacuum) };
    let (time, v) = parse_trace_csv(&trace_csv(&t)).unwrap();
    assert_eq!(v, t.samples);
    for (i, ti) in time.iter().enumerate() {
        assert_eq!(*ti, t.time(i));
    }
}

#[test]
fn csv_errors_carry_line_numbers() {
    let bad = "freq_hz,s_min_db,s_max_db,shot_db\n1,2,3,4\n1,2,x,4\n";
    match parse_spectrum_csv(bad) {
        Err(FormatError::Csv { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    match parse_spectrum_csv("a,b\n") {
        Err(FormatError::Csv { line, .. }) => assert_eq!(line, 1),
        other => panic!("{other:?}"),
    }
    assert!(parse_timeline_csv(
        "window_index,t_center_s,s_min_db,s_max_db,flux,stat_err_db,lo_err_db\n1.5,0,0,0,0,0,0\n"
    )
    .is_err());
    assert!(parse_trace_csv("").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn hodt_round_trips_any_finite_trace(
        samples in prop::collection::vec(-1e300f64..1e300, 1..200),
        fs in 1.0f64..1e12,
        phase in -10.0f64..10.0,
        code in 0u32..4,
        seed in any::<u64>(),
    ) {
        let t = HomodyneTrace { sample_rate: fs, samples, lo_phase: phase, scenario: Scenario::from_code(code).unwrap(), seed, t0_offset: 0.0 };
        prop_assert_eq!(decode_traces(&encode_traces(std::slice::from_ref(&t))).unwrap(), vec![t]);
    }

    #[test]
    fn timeline_csv_is_lossless(vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 6), idx in 0usize..100_000) {
        let r = TimelineRow { window_index: idx, t_center_s: vals[0], s_min_db: vals[1], s_max_db: vals[2], flux: vals[3], stat_err_db: vals[4], lo_err_db: vals[5] };
        prop_assert_eq!(parse_timeline_csv(&timeline_csv(std::slice::from_ref(&r))).unwrap(), vec![r]);
    }
}
