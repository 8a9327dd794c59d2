use std::fs;

use chrono::{DateTime, TimeZone, Utc};
use svcal::param_store::{quote_digest, Diagnostic, StoredParams, TenorParams, RECORDS_FILE};
use svcal::{Error, HestonParams, Model, ModelKind, ParamRecord, ParamStore, SchobelZhuParams};

fn day(d: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2008, 9, d, 0, 0, 0).unwrap()
}

fn heston_record(v0: f64, at: DateTime<Utc>) -> ParamRecord {
    let m = Model::Heston(HestonParams::new(v0, 0.0187, 1.7, 0.31, -0.137).unwrap());
    ParamRecord {
        id: 0,
        model_kind: ModelKind::Heston,
        params: StoredParams::Single(m),
        timestamp: at,
        quote_digest: quote_digest(b"quotes"),
        strategy: "full".into(),
        diagnostics: vec![Diagnostic {
            label: "surface".into(),
            rmse: 1.25e-4,
            feller: Some(0.66),
            converged: true,
        }],
        digest_mismatch: false,
    }
}

#[test]
fn save_then_load_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let store = ParamStore::open(dir.path()).unwrap();
    let mut rec = heston_record(0.1 + 0.2, day(16));
    rec.params = StoredParams::PerTenor(vec![
        TenorParams {
            tenor: "3M".into(),
            expiry: 0.24917,
            params: Model::Heston(HestonParams::new(1.0 / 3.0, 0.0161, 6.02, 0.49, -0.13).unwrap()),
        },
        TenorParams {
            tenor: "5Y".into(),
            expiry: 5.0,
            params: Model::Heston(HestonParams::new(0.0115, 0.0115, 0.3, 0.12, f64::MIN_POSITIVE - 0.17).unwrap()),
        },
    ]);
    let id = store.save(&rec, None).unwrap();
    assert_eq!(id, 1);
    let back = store.load(id).unwrap();
    rec.id = id;
    assert_eq!(back, rec);

    // A reopened store sees the same record.
    let again = ParamStore::open(dir.path()).unwrap().load(id).unwrap();
    assert_eq!(again, rec);
}

#[test]
fn latest_respects_kind_and_as_of() {
    let dir = tempfile::tempdir().unwrap();
    let store = ParamStore::open(dir.path()).unwrap();
    store.save(&heston_record(0.01, day(15)), None).unwrap();
    store.save(&heston_record(0.02, day(17)), None).unwrap();
    store.save(&heston_record(0.03, day(16)), None).unwrap();
    let mut sz = heston_record(0.01, day(18));
    sz.model_kind = ModelKind::SchobelZhu;
    sz.params = StoredParams::Single(Model::SchobelZhu(
        SchobelZhuParams::new(0.1, 0.1, 1.0, 0.2, -0.3).unwrap(),
    ));
    store.save(&sz, None).unwrap();

    assert_eq!(store.latest(ModelKind::Heston, None).unwrap().id, 2);
    assert_eq!(store.latest(ModelKind::Heston, Some(day(16))).unwrap().id, 3);
    assert_eq!(store.latest(ModelKind::SchobelZhu, None).unwrap().id, 4);
    assert!(matches!(
        store.latest(ModelKind::Heston, Some(day(14))),
        Err(Error::NotFound(_))
    ));
    assert!(matches!(store.latest(ModelKind::Bates, None), Err(Error::NotFound(_))));

    // Same timestamp: the later save wins.
    store.save(&heston_record(0.04, day(17)), None).unwrap();
    assert_eq!(store.latest(ModelKind::Heston, None).unwrap().id, 5);
}

#[test]
fn digest_mismatch_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let store = ParamStore::open(dir.path()).unwrap();
    let rec = heston_record(0.01, day(16));
    let same = store.save(&rec, Some(&quote_digest(b"quotes"))).unwrap();
    let other = store.save(&rec, Some(&quote_digest(b"edited quotes"))).unwrap();
    assert!(!store.load(same).unwrap().digest_mismatch);
    assert!(store.load(other).unwrap().digest_mismatch);
}

#[test]
fn invalid_records_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let store = ParamStore::open(dir.path()).unwrap();
    let mut wrong_kind = heston_record(0.01, day(16));
    wrong_kind.model_kind = ModelKind::Bates;
    assert!(store.save(&wrong_kind, None).is_err());
    let mut no_digest = heston_record(0.01, day(16));
    no_digest.quote_digest.clear();
    assert!(store.save(&no_digest, None).is_err());
    assert!(store.list().unwrap().is_empty());
    assert!(matches!(store.load(1), Err(Error::NotFound(_))));
}

#[test]
fn concurrent_writers_get_distinct_ids() {
    let dir = tempfile::tempdir().unwrap();
    std::thread::scope(|s| {
        for w in 0..4 {
            let path = dir.path();
            s.spawn(move || {
                // Separate handles so only the file lock serializes them.
                let store = ParamStore::open(path).unwrap();
                for i in 0..5 {
                    store
                        .save(&heston_record(0.01 + 0.001 * (w * 5 + i) as f64, day(16)), None)
                        .unwrap();
                }
            });
        }
    });
    let records = ParamStore::open(dir.path()).unwrap().list().unwrap();
    let mut ids: Vec<u64> = records.iter().map(|r| r.id).collect();
    ids.sort_unstable();
    assert_eq!(ids, (1..=20).collect::<Vec<_>>());
}

#[test]
fn corrupt_line_is_a_storage_error() {
    let dir = tempfile::tempdir().unwrap();
    let store = ParamStore::open(dir.path()).unwrap();
    store.save(&heston_record(0.01, day(16)), None).unwrap();
    let path = dir.path().join(RECORDS_FILE);
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{not json\n");
    fs::write(&path, text).unwrap();
    match store.list() {
        Err(Error::Storage(msg)) => assert!(msg.contains("line 2"), "{msg}"),
        other => panic!("expected storage error, got {other:?}"),
    }
}

#[test]
fn digest_is_hex_sha256() {
    assert_eq!(
        quote_digest(b"abc"),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
}
