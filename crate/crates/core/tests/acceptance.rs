//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so each criterion reports exactly once.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::Value;
use taxowl::gbif::{FixtureTransport, GbifClient, MatchType, Response, Transport, TransportError};
use taxowl::names::RawNameEntry;
use taxowl::owl::{emit, parse, EmitConfig};
use taxowl::pipeline::convert;
use taxowl::taxonomy::{build, ChainLink, MatchPolicy, Outcome, TaxonomyGraph};
use taxowl::Rank;

type Check = fn() -> Result<(), String>;

const SPECIES: &str = "https://www.gbif.org/species/";

const APIS_DOCUMENT: &str = r#"<rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
         xmlns:rdfs="http://www.w3.org/2000/01/rdf-schema#"
         xmlns:owl="http://www.w3.org/2002/07/owl#">

    <!-- Kingdom Animalia -->
    <owl:Class rdf:about="https://www.gbif.org/species/1">
        <rdfs:label xml:lang="lat">Animalia</rdfs:label>
    </owl:Class>

    <!-- Phylum Arthropoda -->
    <owl:Class rdf:about="https://www.gbif.org/species/54">
        <rdfs:label xml:lang="lat">Arthropoda</rdfs:label>
        <rdfs:subClassOf rdf:resource="https://www.gbif.org/species/1"/>
    </owl:Class>

    <!-- Class Insecta -->
    <owl:Class rdf:about="https://www.gbif.org/species/216">
        <rdfs:label xml:lang="lat">Insecta</rdfs:label>
        <rdfs:subClassOf rdf:resource="https://www.gbif.org/species/54"/>
    </owl:Class>

    <!-- Order Hymenoptera -->
    <owl:Class rdf:about="https://www.gbif.org/species/1457">
        <rdfs:label xml:lang="lat">Hymenoptera</rdfs:label>
        <rdfs:subClassOf rdf:resource="https://www.gbif.org/species/216"/>
    </owl:Class>

    <!-- Family Apidae -->
    <owl:Class rdf:about="https://www.gbif.org/species/4334">
        <rdfs:label xml:lang="lat">Apidae</rdfs:label>
        <rdfs:subClassOf rdf:resource="https://www.gbif.org/species/1457"/>
    </owl:Class>

    <!-- Genus Apis -->
    <owl:Class rdf:about="https://www.gbif.org/species/1334757">
        <rdfs:label xml:lang="lat">Apis</rdfs:label>
        <rdfs:subClassOf rdf:resource="https://www.gbif.org/species/4334"/>
    </owl:Class>

    <!-- Species Apis mellifera -->
    <owl:Class rdf:about="https://www.gbif.org/species/1341976">
        <rdfs:label xml:lang="lat">Apis mellifera</rdfs:label>
        <rdfs:subClassOf rdf:resource="https://www.gbif.org/species/1334757"/>
    </owl:Class>

</rdf:RDF>
"#;

const CITRUS_AXIOM: &str = r#"    <SubClassOf>
        <Class IRI="https://www.gbif.org/species/8077391"/>
        <ObjectSomeValuesFrom>
            <ObjectProperty IRI="is_a_hybrid_of"/>
            <ObjectIntersectionOf>
                <Class IRI="https://www.gbif.org/species/3190160"/>
                <Class IRI="https://www.gbif.org/species/3190164"/>
            </ObjectIntersectionOf>
        </ObjectSomeValuesFrom>
    </SubClassOf>
"#;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn taxowl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taxowl")).args(args).env_remove("GBIF_BASE_URL").output().unwrap()
}

fn taxowl_on_fixtures(args: &[&str]) -> (Output, Duration) {
    let backbone = common::backbone();
    let mut all = args.to_vec();
    all.extend(["--fixtures", backbone.to_str().unwrap()]);
    let start = Instant::now();
    let out = taxowl(&all);
    (out, start.elapsed())
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Drops banner comment lines and the blank-line runs they leave behind.
fn without_banners(doc: &str) -> String {
    let mut out = String::new();
    let mut blank = false;
    for line in doc.lines() {
        if line.trim_start().starts_with("<!--") {
            continue;
        }
        if line.is_empty() && blank {
            continue;
        }
        blank = line.is_empty();
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn about_keys(doc: &str) -> BTreeSet<u64> {
    doc.split("rdf:about=\"")
        .skip(1)
        .map(|rest| rest[..rest.find('"').unwrap()].strip_prefix(SPECIES).unwrap().parse().unwrap())
        .collect()
}

fn class_and_edge_sets(doc: &str, name: &str) -> (BTreeSet<String>, BTreeSet<(String, String)>) {
    let f = parse(doc, name).unwrap();
    let classes = f.classes.iter().map(|c| c.iri.clone()).collect();
    let edges = f.classes.iter().flat_map(|c| c.parents.iter().map(move |p| (c.iri.clone(), p.clone()))).collect();
    (classes, edges)
}

fn animals_file() -> String {
    common::fixtures().join("lists/animals.txt").to_str().unwrap().to_string()
}

fn golden_hierarchy() -> Result<(), String> {
    let (out, took) = taxowl_on_fixtures(&["convert", "--names", "Apis mellifera"]);
    ensure(out.status.code() == Some(0), text(&out.stderr))?;
    let doc = text(&out.stdout);
    ensure(doc == without_banners(APIS_DOCUMENT), format!("document differs:\n{doc}"))?;
    ensure(took < Duration::from_secs(1), format!("took {took:?}"))?;

    let (out, _) = taxowl_on_fixtures(&["convert", "--names", "Apis mellifera", "--comments"]);
    ensure(text(&out.stdout) == APIS_DOCUMENT, "banner form differs")?;
    let keys = about_keys(&doc);
    ensure(keys == BTreeSet::from([1, 54, 216, 1457, 4334, 1334757, 1341976]), format!("keys {keys:?}"))?;
    ensure(doc.matches("<rdfs:subClassOf").count() == 6, "expected 6 edges")
}

fn synonym_table() -> Result<(), String> {
    let names = ["Capra hircus", "Prochilodus cearensis", "Prochilodus scrofa", "Prochilodus margravii", "Colossoma mitrei"];
    let mut args = vec!["check", "--names"];
    args.extend(names);
    let (out, took) = taxowl_on_fixtures(&args);
    ensure(out.status.code() == Some(0), text(&out.stderr))?;
    let table = text(&out.stdout);
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    ensure(rows.len() == 5, format!("{} rows", rows.len()))?;
    ensure(rows.iter().all(|r| r[1] == "SYNONYM"), format!("statuses:\n{table}"))?;
    let accepted: BTreeSet<&str> = rows.iter().map(|r| r[4]).collect();
    let expected = BTreeSet::from([
        "Capra aegagrus",
        "Prochilodus brevis",
        "Prochilodus lineatus",
        "Prochilodus argenteus",
        "Piaractus mesopotamicus",
    ]);
    ensure(accepted == expected, format!("accepted names {accepted:?}"))?;
    ensure(took < Duration::from_secs(1), format!("took {took:?}"))
}

fn prochilodus_keys() -> Result<(), String> {
    let (out, _) = taxowl_on_fixtures(&[
        "convert", "--names", "Prochilodus cearensis", "Prochilodus scrofa", "Prochilodus margravii",
    ]);
    ensure(out.status.code() == Some(0), text(&out.stderr))?;
    let doc = text(&out.stdout);
    let (_, edges) = class_and_edge_sets(&doc, "prochilodus.owl");
    for key in [2352151, 2352154, 2352177] {
        let edge = (format!("{SPECIES}{key}"), format!("{SPECIES}2352148"));
        ensure(edges.contains(&edge), format!("missing {edge:?}"))?;
    }
    let species: BTreeSet<u64> =
        about_keys(&doc).into_iter().filter(|k| edges.contains(&(format!("{SPECIES}{k}"), format!("{SPECIES}2352148")))).collect();
    ensure(species == BTreeSet::from([2352151, 2352154, 2352177]), format!("species under genus {species:?}"))
}

/// Percent-encodes everything except unreserved characters.
fn encode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

fn raw_json(manifest: &BTreeMap<String, String>, key: &str) -> Result<Value, String> {
    let file = manifest.get(key).ok_or_else(|| format!("{key} not in manifest"))?;
    let body = std::fs::read(common::backbone().join(file)).map_err(|e| e.to_string())?;
    serde_json::from_slice(&body).map_err(|e| e.to_string())
}

/// Unions lineage keys straight from the recorded JSON, independent of the
/// client, resolver and graph code.
fn oracle_keys(names: &[&str]) -> Result<BTreeSet<u64>, String> {
    let index = std::fs::read_to_string(common::backbone().join("index.tsv")).map_err(|e| e.to_string())?;
    let manifest: BTreeMap<String, String> = index
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| {
            let mut f = l.split('\t');
            Some((f.next()?.to_string(), f.next()?.to_string()))
        })
        .collect();
    let mut keys = BTreeSet::new();
    for name in names {
        let m = raw_json(&manifest, &format!("species/match?name={}", encode(name)))?;
        let usage = m["acceptedUsageKey"].as_u64().or(m["usageKey"].as_u64()).ok_or(format!("{name}: no key"))?;
        let record = raw_json(&manifest, &format!("species/{}", encode(&usage.to_string())))?;
        for field in ["kingdomKey", "phylumKey", "classKey", "orderKey", "familyKey", "genusKey", "speciesKey", "key"] {
            if let Some(k) = record[field].as_u64() {
                keys.insert(k);
            }
        }
    }
    Ok(keys)
}

fn deduplication() -> Result<(), String> {
    let names: Vec<String> = common::list("animals.txt").into_iter().map(|e| e.raw_text).collect();
    ensure(names.len() == 14, format!("{} names", names.len()))?;
    let (out, _) = taxowl_on_fixtures(&["convert", "--names-file", &animals_file()]);
    ensure(out.status.code() == Some(0), text(&out.stderr))?;
    let doc = text(&out.stdout);
    let abouts = doc.matches("rdf:about=").count();
    let emitted = about_keys(&doc);
    ensure(abouts == emitted.len(), format!("{abouts} declarations for {} keys", emitted.len()))?;
    ensure(doc.matches(&format!("rdf:about=\"{SPECIES}1\"")).count() == 1, "Animalia not declared once")?;
    let expected = oracle_keys(&names.iter().map(String::as_str).collect::<Vec<_>>())?;
    ensure(
        emitted == expected,
        format!(
            "only emitted {:?}, only expected {:?}",
            emitted.difference(&expected).collect::<Vec<_>>(),
            expected.difference(&emitted).collect::<Vec<_>>()
        ),
    )
}

fn order_insensitivity() -> Result<(), String> {
    let client = common::client();
    let cfg = EmitConfig::default();
    let policy = MatchPolicy::default();
    let mut names = common::list("animals.txt");
    let reference = convert(&names, &client, &policy, &cfg).xml;
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for i in 0..20 {
        names.shuffle(&mut rng);
        let xml = convert(&names, &client, &policy, &cfg).xml;
        ensure(xml == reference, format!("permutation {i} differs"))?;
    }
    Ok(())
}

fn merge_repair() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |p: &Path| p.to_str().unwrap().to_string();
    let (batch, _) = taxowl_on_fixtures(&["convert", "--names-file", &animals_file()]);
    ensure(batch.status.code() == Some(0), text(&batch.stderr))?;
    let batch_doc = text(&batch.stdout);

    let lines: Vec<String> = std::fs::read_to_string(animals_file())
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(String::from)
        .collect();
    let mut parts = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let list = dir.path().join(format!("name{i:02}.txt"));
        std::fs::write(&list, format!("{line}\n")).unwrap();
        let owl = dir.path().join(format!("name{i:02}.owl"));
        let (out, _) = taxowl_on_fixtures(&["convert", "--names-file", &path(&list), "--out", &path(&owl)]);
        ensure(out.status.code() == Some(0), format!("{line}: {}", text(&out.stderr)))?;
        parts.push(path(&owl));
    }
    ensure(parts.len() == 14, format!("{} parts", parts.len()))?;
    let merged_file = dir.path().join("merged.owl");
    let mut args = vec!["merge".to_string()];
    args.extend(parts);
    args.extend(["--out".into(), path(&merged_file)]);
    let out = taxowl(&args.iter().map(String::as_str).collect::<Vec<_>>());
    ensure(out.status.code() == Some(0), text(&out.stderr))?;
    let merged = std::fs::read_to_string(&merged_file).unwrap();
    ensure(
        class_and_edge_sets(&merged, "merged.owl") == class_and_edge_sets(&batch_doc, "batch.owl"),
        "merged class or edge set differs from the batch document",
    )?;
    let again = taxowl(&["merge", &path(&merged_file), &path(&merged_file)]);
    ensure(again.status.code() == Some(0) && text(&again.stdout) == merged, "merge is not idempotent")
}

/// Records request keys on their way to the fixture corpus.
struct Recording {
    inner: FixtureTransport,
    seen: std::sync::Mutex<Vec<String>>,
}

impl Transport for Recording {
    fn fetch(&self, request_key: &str) -> Result<Response, TransportError> {
        self.seen.lock().unwrap().push(request_key.to_string());
        self.inner.fetch(request_key)
    }
}

fn hybrid_handling() -> Result<(), String> {
    let transport = std::sync::Arc::new(Recording {
        inner: FixtureTransport::open(common::backbone()).map_err(|e| e.to_string())?,
        seen: Default::default(),
    });
    let client = GbifClient::new(transport.clone());
    let (_, report) = build(&[RawNameEntry::new("Triticum × Secale")], &client, &MatchPolicy::default());
    let row = &report.rows[0];
    ensure(row.outcome == Outcome::SynonymReplaced, format!("outcome {:?}", row.outcome))?;
    ensure(row.accepted_name.as_deref() == Some("Secale cereale"), format!("accepted {:?}", row.accepted_name))?;
    let seen = transport.seen.lock().unwrap().clone();
    ensure(seen.first().map(String::as_str) == Some("species/match?name=Triticum%20%C3%97secale"), format!("{seen:?}"))?;
    // both candidate forms are recorded and each resolves on its own
    for candidate in ["Triticum ×secale", "Triticum secale"] {
        let m = client.match_name(candidate).map_err(|e| format!("{candidate}: {e}"))?;
        ensure(m.accepted_usage_key == Some(2705965), format!("{candidate}: {:?}", m.accepted_usage_key))?;
    }

    let (out, _) = taxowl_on_fixtures(&["convert", "--names", "Triticum × Secale"]);
    ensure(out.status.code() == Some(0), text(&out.stderr))?;
    ensure(text(&out.stdout).contains(">Secale cereale</rdfs:label>"), "Secale cereale class missing")?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = dir.path().join("hybrids.txt");
    std::fs::write(&spec, "Citrus aurantium | some-intersection | is_a_hybrid_of | Citrus maxima, Citrus reticulata\n")
        .unwrap();
    let (out, _) = taxowl_on_fixtures(&["axioms", spec.to_str().unwrap()]);
    ensure(out.status.code() == Some(0), text(&out.stderr))?;
    ensure(text(&out.stdout) == CITRUS_AXIOM, format!("axiom differs:\n{}", text(&out.stdout)))
}

fn random_graph(rng: &mut StdRng) -> TaxonomyGraph {
    let mut pool: Vec<u64> = (1..=10_000).collect();
    pool.shuffle(rng);
    let slots = 3;
    let mut g = TaxonomyGraph::new();
    for _ in 0..rng.gen_range(1..6) {
        let mut chain = Vec::new();
        for (r, &rank) in Rank::ALL.iter().enumerate() {
            if !rng.gen_bool(0.6) {
                continue;
            }
            let slot = rng.gen_range(0..slots);
            let key = pool[r * slots + slot];
            chain.push(ChainLink { rank, name: format!("{} <{key}> & \"{slot}\"", rank.title()), key });
        }
        let _ = g.accumulate_chain(&chain);
    }
    g
}

fn round_trip() -> Result<(), String> {
    let cfg = EmitConfig::default();
    let mut rng = StdRng::seed_from_u64(8);
    let mut checked = 0;
    while checked < 100 {
        let g = random_graph(&mut rng);
        if g.is_empty() {
            continue;
        }
        let f = parse(&emit(&g, &cfg).xml, "random.owl").map_err(|e| e.to_string())?;
        let key_of = |iri: &str| iri.strip_prefix(SPECIES).and_then(|k| k.parse::<u64>().ok());
        let mut back = BTreeSet::new();
        for c in &f.classes {
            let key = key_of(&c.iri).ok_or(format!("bad IRI {}", c.iri))?;
            ensure(c.labels.len() == 1 && c.labels[0].lang.as_deref() == Some("lat"), "label shape")?;
            ensure(c.parents.len() <= 1, "more than one parent")?;
            let parent = c.parents.first().map(|p| key_of(p).ok_or(format!("bad parent {p}"))).transpose()?;
            back.insert((key, c.labels[0].text.clone(), parent));
        }
        let original: BTreeSet<_> = g.nodes().map(|n| (n.key, n.label.clone(), n.parent)).collect();
        ensure(back == original, format!("graph {checked} did not round-trip"))?;
        checked += 1;
    }
    Ok(())
}

fn capitalization_repair() -> Result<(), String> {
    let client = common::client();
    let names: Vec<RawNameEntry> =
        ["Prochilodus Cearensis", "Prochilodus Scrofa", "Prochilodus Margravii"].into_iter().map(RawNameEntry::new).collect();
    let (_, repaired) = build(&names, &client, &MatchPolicy::default());
    for row in &repaired.rows {
        ensure(row.outcome == Outcome::SynonymReplaced, format!("{}: {:?} {}", row.input, row.outcome, row.detail))?;
        ensure(row.detail.contains("RECAPITALIZED"), format!("{}: repair not noted", row.input))?;
    }
    let raw = MatchPolicy { normalize: false, ..MatchPolicy::default() };
    let (graph, failed) = build(&names, &client, &raw);
    for row in &failed.rows {
        ensure(row.outcome == Outcome::Failed, format!("{}: {:?}", row.input, row.outcome))?;
        ensure(row.match_type == Some(MatchType::None), format!("{}: match type {:?}", row.input, row.match_type))?;
    }
    ensure(graph.is_empty(), "failed names left classes behind")?;

    let (out, _) = taxowl_on_fixtures(&["convert", "--names", "Prochilodus Cearensis", "--no-normalize"]);
    ensure(out.status.code() == Some(2), format!("exit {:?}", out.status.code()))
}

fn throughput() -> Result<(), String> {
    let names = common::list("plants.txt");
    ensure(names.len() == 74, format!("{} plants", names.len()))?;
    let cfg = EmitConfig::default();
    let policy = MatchPolicy::default();
    let time = |n: usize| {
        (0..5)
            .map(|_| {
                let client = common::client();
                let start = Instant::now();
                let c = convert(&names[..n], &client, &policy, &cfg);
                let took = start.elapsed();
                assert!(!c.report.has_failures(), "{}", c.report.summary());
                took
            })
            .min()
            .unwrap()
    };
    let t: Vec<(usize, Duration)> = [10, 30, 74].into_iter().map(|n| (n, time(n))).collect();
    ensure(t[2].1 < Duration::from_secs(5), format!("74 names took {:?}", t[2].1))?;
    for (i, &(small, ts)) in t.iter().enumerate() {
        for &(large, tl) in &t[i + 1..] {
            let allowed = ts.as_secs_f64() * (large as f64 / small as f64) * 1.5;
            ensure(tl.as_secs_f64() <= allowed, format!("{large} names took {tl:?}, {small} took {ts:?}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("golden hierarchy", golden_hierarchy),
        ("synonym table", synonym_table),
        ("Prochilodus keys", prochilodus_keys),
        ("deduplication", deduplication),
        ("order insensitivity", order_insensitivity),
        ("merge repair", merge_repair),
        ("hybrid handling", hybrid_handling),
        ("round trip", round_trip),
        ("capitalization repair", capitalization_repair),
        ("throughput", throughput),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(()) => println!("criterion {:>2} PASS {name}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
