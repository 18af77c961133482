use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use editkit_core::builder::{audit, BuildConfig, Builder, Manifest};
use editkit_core::verbalizer::TemplateBank;
use editkit_core::{EditTask, Error, InstanceRecord, Mode, Split};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic/build.toml")
}

fn build(mode: Mode, out: &Path) -> Manifest {
    let config = BuildConfig::load(&fixture()).unwrap();
    Builder::for_config(&config).unwrap().build(&config, Some(mode), out).unwrap()
}

fn records(dir: &Path, split: Split) -> Vec<InstanceRecord> {
    fs::read_to_string(dir.join(format!("{split}.jsonl")))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn builds_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = build(Mode::Instruction, a.path());
    let mb = build(Mode::Instruction, b.path());
    assert_eq!(ma, mb);
    for split in Split::ALL {
        let f = format!("{split}.jsonl");
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap());
    }
}

#[test]
fn counts_follow_config() {
    let d = tempfile::tempdir().unwrap();
    let m = build(Mode::Instruction, d.path());
    let train = &m.counts[&Split::Train];
    assert_eq!(train["gec"], 40);
    assert_eq!(train["neutralize"], 30);
    assert_eq!(train["gec+simplification"], 10);
    assert_eq!(train["formalize+paraphrase+simplification"], 10);
    assert!(m.counts[&Split::Validation].values().all(|&n| n == 5));
    assert!(m.counts[&Split::Test].values().all(|&n| n == 10));
    assert_eq!(m.total(), 40 + 6 * 30 + 20 + 7 * 5 + 7 * 10);
    assert_eq!(audit(d.path(), &TemplateBank::shipped()).unwrap().records, m.total());
}

#[test]
fn every_mode_passes_audit() {
    for mode in [Mode::Instruction, Mode::Prefix, Mode::Randomized] {
        let d = tempfile::tempdir().unwrap();
        build(mode, d.path());
        audit(d.path(), &TemplateBank::shipped()).unwrap();
    }
}

#[test]
fn randomized_never_uses_own_bank() {
    let d = tempfile::tempdir().unwrap();
    build(Mode::Randomized, d.path());
    let bank = TemplateBank::shipped();
    let mut own = 0;
    for split in Split::ALL {
        for r in records(d.path(), split) {
            if r.task.tasks().iter().any(|t| bank.contains(*t, &r.instruction)) {
                own += 1;
            }
            assert!(EditTask::ALL.iter().any(|t| bank.contains(*t, &r.instruction)));
        }
    }
    assert_eq!(own, 0);
}

#[test]
fn prefix_mode_uses_tags() {
    let d = tempfile::tempdir().unwrap();
    build(Mode::Prefix, d.path());
    let tags = ["gec", "simplify", "clarify", "coherence", "formalize", "neutralize", "paraphrase"];
    for r in records(d.path(), Split::Train) {
        assert!(r.instruction.split(',').all(|t| tags.contains(&t)), "{}", r.instruction);
        assert!(r.input.starts_with(&format!("{}: ", r.instruction)));
    }
}

#[test]
fn mode_changes_only_instruction_and_input() {
    let strip = |dir: &Path| -> Vec<_> {
        Split::ALL
            .iter()
            .flat_map(|s| records(dir, *s))
            .map(|r| (r.source().unwrap().to_string(), r.target, r.task, r.corpus_id, r.split))
            .collect()
    };
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    build(Mode::Instruction, dirs[0].path());
    build(Mode::Prefix, dirs[1].path());
    build(Mode::Randomized, dirs[2].path());
    let base = strip(dirs[0].path());
    assert_eq!(base, strip(dirs[1].path()));
    assert_eq!(base, strip(dirs[2].path()));
}

#[test]
fn no_source_in_two_splits() {
    let d = tempfile::tempdir().unwrap();
    build(Mode::Instruction, d.path());
    let mut home: HashMap<String, Split> = HashMap::new();
    for split in Split::ALL {
        for r in records(d.path(), split) {
            let prev = home.insert(r.source().unwrap().to_string(), split);
            assert!(prev.is_none_or(|p| p == split));
        }
    }
}

#[test]
fn split_hygiene_drops_leaked_sources() {
    let d = tempfile::tempdir().unwrap();
    let corpus = d.path().join("c.jsonl");
    fs::write(
        &corpus,
        concat!(
            r#"{"source":"shared line","target":"Shared line.","split":"train"}"#, "\n",
            r#"{"source":"train only","target":"Train only.","split":"train"}"#, "\n",
            r#"{"source":"shared line","target":"Shared line.","split":"test"}"#, "\n",
        ),
    )
    .unwrap();
    let mut config = BuildConfig::parse(&format!(
        "seed = 1\n[[corpora]]\nid = \"c\"\nformat = \"jsonl\"\ntask = \"gec\"\n[[entries]]\ntask = \"gec\"\ncount = 1\nfilter = \"none\"\nsources = [{{ corpus = \"c\", path = {:?} }}]\n",
        corpus
    ))
    .unwrap();
    let builder = Builder::for_config(&config).unwrap();
    let plan = builder.plan(&config, Mode::Instruction).unwrap();
    let train: Vec<_> = plan.iter().filter(|i| i.split == Split::Train).collect();
    assert_eq!(train.len(), 1);
    assert_eq!(train[0].source, "train only");

    config.entries[0].count = Some(2);
    match builder.plan(&config, Mode::Instruction) {
        Err(Error::InsufficientPool { task, requested, available, .. }) => {
            assert_eq!((task.as_str(), requested, available), ("gec", 2, 1));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn insufficient_pool_names_task() {
    let d = tempfile::tempdir().unwrap();
    let corpus = d.path().join("train.tsv");
    fs::write(&corpus, "a b\ta c\nd e\td f\ng h\tg i\n").unwrap();
    let config = BuildConfig::parse(&format!(
        "seed = 1\n[[entries]]\ntask = \"simplification\"\ncount = 5\nfilter = \"none\"\nsources = [{{ corpus = \"newsela\", path = {:?} }}]\n",
        corpus
    ))
    .unwrap();
    let err = Builder::shipped().plan(&config, Mode::Instruction).unwrap_err();
    assert!(matches!(err, Error::InsufficientPool { ref task, requested: 5, available: 3, .. } if task == "simplification"));
}

#[test]
fn conflicting_mode_is_rejected() {
    let mut config = BuildConfig::load(&fixture()).unwrap();
    config.mode = Some(Mode::Prefix);
    let d = tempfile::tempdir().unwrap();
    let err = Builder::for_config(&config).unwrap().build(&config, Some(Mode::Instruction), d.path());
    assert!(matches!(err, Err(Error::ConflictingMode { .. })));
}

#[test]
fn tampered_record_fails_audit() {
    let d = tempfile::tempdir().unwrap();
    build(Mode::Instruction, d.path());
    let path = d.path().join("train.jsonl");
    let body = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = body.lines().map(str::to_string).collect();
    let (idx, mut rec) = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (i, serde_json::from_str::<InstanceRecord>(l).unwrap()))
        .find(|(_, r)| r.task.as_single() == Some(EditTask::Gec))
        .unwrap();
    let source = rec.source().unwrap().to_string();
    rec.instruction = "Paraphrase the sentence".into();
    rec.input = format!("{}: {source}", rec.instruction);
    lines[idx] = serde_json::to_string(&rec).unwrap();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    match audit(d.path(), &TemplateBank::shipped()) {
        Err(Error::AuditFailure(list)) => {
            let at = format!("train:{}", idx + 1);
            assert!(list.iter().any(|f| f.starts_with(&at)), "{list:?}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn composite_instructions_parse_back() {
    let d = tempfile::tempdir().unwrap();
    build(Mode::Instruction, d.path());
    let bank = TemplateBank::shipped();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for r in records(d.path(), Split::Train) {
        if r.task.as_single().is_none() {
            assert!(bank.is_composition_of(r.task.tasks(), &r.instruction));
            assert!(r.input.starts_with(&format!("{}: ", r.instruction)));
            *seen.entry(r.task.to_string()).or_default() += 1;
        }
    }
    assert_eq!(seen.values().sum::<usize>(), 20);
}
