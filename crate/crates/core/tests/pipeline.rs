mod common;

use std::fs;
use std::path::Path;

use common::medal_table;
use tablogic::dataset::{Release, Split};
use tablogic::metrics::{sp_acc, SemanticParser};
use tablogic::ranker::{train, TrainConfig, TrainingItem};
use tablogic::records::Prediction;
use tablogic::{link, synthesize, RankerModel, SynthConfig, TableError, TableStore};

fn fixture(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

#[test]
fn release_fixture_summary() {
    let r = Release::new(fixture("release"));
    let s = r.summarize().unwrap();
    assert_eq!(s.statements[&Split::Train], 5);
    assert_eq!(s.statements[&Split::Val], 2);
    assert_eq!(s.statements[&Split::Test], 2);
    assert_eq!(s.tables, 2);
    let entries = r.manifest().unwrap();
    let store = TableStore::from_tables(
        entries
            .iter()
            .map(|e| tablogic::table::load_table(e, Path::new("")).unwrap()),
    )
    .unwrap();
    let games = store.get("2-7.html.csv").unwrap();
    assert_eq!(games.n_rows(), 4);
    assert_eq!(games.title, "1986 season");
    assert_eq!(
        games.column_types(),
        &[
            tablogic::ColumnType::Date,
            tablogic::ColumnType::Str,
            tablogic::ColumnType::Str,
            tablogic::ColumnType::Num
        ]
    );
}

#[test]
fn duplicate_manifest_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
    let manifest = dir.path().join("m.json");
    fs::write(
        &manifest,
        r#"[{"table_id":"a","title":"","csv":"a.csv"},{"table_id":"a","title":"","csv":"a.csv"}]"#,
    )
    .unwrap();
    assert!(matches!(
        TableStore::load_manifest(&manifest, 1),
        Err(TableError::DuplicateId(id)) if id == "a"
    ));
}

#[test]
fn sp_acc_is_independent_of_worker_count() {
    let store = TableStore::from_tables([medal_table()]).unwrap();
    let preds: Vec<Prediction> = [
        "canada won 3 gold medals",
        "mexico has the highest total",
        "there were 4 nations",
    ]
    .iter()
    .map(|s| Prediction {
        table_id: "medals".into(),
        sentence: s.to_string(),
    })
    .collect();
    let parser = SemanticParser::new(
        RankerModel::with_weights(vec![0.5; tablogic::ranker::feature_dim()], 0.0),
        SynthConfig {
            max_depth: 3,
            ..SynthConfig::default()
        },
    );
    let a = sp_acc(&preds, &store, &parser, 1).unwrap();
    let b = sp_acc(&preds, &store, &parser, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trained_model_survives_a_file_round_trip() {
    let t = medal_table();
    let sentences = [
        "canada won 3 gold medals",
        "colombia obtained 2 more silver medals than canada",
    ];
    let prepared: Vec<_> = sentences
        .iter()
        .map(|s| {
            let m = link(s, &t);
            let c = synthesize(
                &m,
                &t,
                &SynthConfig {
                    max_depth: 3,
                    ..SynthConfig::default()
                },
            );
            (s, m, c)
        })
        .collect();
    let corpus: Vec<TrainingItem> = prepared
        .iter()
        .map(|(s, m, c)| TrainingItem {
            table: &t,
            sentence: s,
            mentions: m,
            candidates: c,
        })
        .collect();
    let (model, report) = train(&corpus, &TrainConfig::default()).unwrap();
    assert!(report.objective.windows(2).all(|w| w[1] >= w[0]));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ranker.json");
    model.save(&path).unwrap();
    assert_eq!(RankerModel::load(&path).unwrap(), model);
}
