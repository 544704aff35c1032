use monogp::datasets::{
    fatigue_s355n, gen_hallpetch, gen_logistic, load_csv, parse_csv, save_csv, CsvSchema,
    DatasetError, Split, SplitRule, FATIGUE_TEST, FATIGUE_TRAIN,
};

#[test]
fn fatigue_table_is_exact() {
    let d = fatigue_s355n();
    assert_eq!(d.count(Split::Train), 12);
    assert_eq!(d.count(Split::Test), 13);
    assert_eq!(FATIGUE_TRAIN.len(), 12);
    assert_eq!(FATIGUE_TEST.len(), 13);
    let (x, y) = d.train();
    assert_eq!(x[(0, 0)], FATIGUE_TRAIN[0].0);
    assert!((y[0] - FATIGUE_TRAIN[0].1.log10()).abs() < 1e-15);
    // training stress range
    assert_eq!(x.min(), 469.0);
    assert_eq!(x.max(), 674.0);
}

#[test]
fn generators_are_seeded() {
    assert_eq!(gen_logistic(10, 1).checksum(), gen_logistic(10, 1).checksum());
    assert_ne!(gen_logistic(10, 1).checksum(), gen_logistic(10, 2).checksum());
    let h = gen_hallpetch(20, 1, 1.0);
    assert_eq!(h.len(), 20);
    assert!(h.x().iter().all(|d| (15.0..=350.0).contains(d)));
}

#[test]
fn file_round_trip_preserves_every_bit() {
    let dir = tempfile::tempdir().unwrap();
    for data in [gen_hallpetch(20, 3, 1.0), fatigue_s355n()] {
        let path = dir.path().join("d.csv");
        save_csv(&data, &path).unwrap();
        let back = load_csv(&path, &CsvSchema::of(&data)).unwrap();
        assert_eq!(back.x(), data.x());
        assert_eq!(back.y(), data.y());
        assert_eq!(back.splits(), data.splits());
        assert_eq!(back.checksum(), data.checksum());
    }
}

fn schema(inputs: &[&str], output: &str) -> CsvSchema {
    CsvSchema {
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        output: output.into(),
        ..Default::default()
    }
}

#[test]
fn bad_files_name_the_problem() {
    let s = schema(&["t", "kT"], "g");
    let missing = parse_csv(b"t,g\n1,2\n", &s).unwrap_err();
    assert_eq!(missing, DatasetError::MissingColumn("kT".into()));

    let bad = parse_csv(b"t[s],kT,g[um]\n1,0.2,3\n2,abc,4\n", &s).unwrap_err();
    assert!(matches!(bad, DatasetError::NonNumeric { row: 2, ref column, .. } if column == "kT"), "{bad:?}");

    let nan = parse_csv(b"t,kT,g\n1,0.2,NaN\n", &s).unwrap_err();
    assert!(matches!(nan, DatasetError::NonFinite { row: 1, .. }), "{nan:?}");

    assert_eq!(parse_csv(b"t,kT,g\n", &s).unwrap_err(), DatasetError::Empty);

    let err = load_csv("/nonexistent/file.csv", &s).unwrap_err();
    assert!(matches!(err, DatasetError::Io { .. }));
}

#[test]
fn units_are_stripped_from_names() {
    let d = parse_csv(b"t[s], kT ,g[um]\n1,0.2,3\n", &schema(&["t", "kT"], "g")).unwrap();
    assert_eq!(d.inputs()[0].unit, "s");
    assert_eq!(d.inputs()[1].name, "kT");
    assert_eq!(d.output().unit, "um");
}

#[test]
fn split_rule_marks_the_corner() {
    let mut body = String::from("t,kT,g\n");
    for i in 0..5 {
        for k in 0..3 {
            body.push_str(&format!("{},{},{}\n", i * 500, 0.25 + 0.3 * k as f64, i + k));
        }
    }
    let mut d = parse_csv(body.as_bytes(), &schema(&["t", "kT"], "g")).unwrap();
    SplitRule::parse("kT>0.75, t>=1000").unwrap().apply(&mut d).unwrap();
    assert_eq!(d.count(Split::Test), 3);
    assert!(SplitRule::parse("t~3").is_err());
    assert!(SplitRule::parse("u>3").unwrap().apply(&mut d).is_err());
}

#[test]
fn explicit_split_column() {
    let s = CsvSchema {
        split: Some("split".into()),
        ..schema(&["x"], "y")
    };
    let d = parse_csv(b"x,y,split\n1,2,train\n2,3,test\n", &s).unwrap();
    assert_eq!(d.splits(), &[Split::Train, Split::Test]);
    let bad = parse_csv(b"x,y,split\n1,2,validate\n", &s).unwrap_err();
    assert!(matches!(bad, DatasetError::BadSplit { row: 1, .. }), "{bad:?}");
}
