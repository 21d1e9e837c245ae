//! End-to-end runs of the `taxowl` binary.

mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use taxowl::cache::CacheStore;

fn taxowl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taxowl")).args(args).env_remove("GBIF_BASE_URL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Serves the fixture corpus over HTTP under `/v1/`, counting requests.
struct Backbone {
    base_url: String,
    requests: Arc<AtomicUsize>,
}

fn serve_backbone() -> Backbone {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base_url = format!("http://{}/v1/", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = requests.clone();
    let store = CacheStore::open_existing(common::backbone()).unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            if reader.read_line(&mut request_line).is_err() {
                continue;
            }
            let mut header = String::new();
            while reader.read_line(&mut header).is_ok_and(|n| n > 2) {
                header.clear();
            }
            counter.fetch_add(1, Ordering::SeqCst);
            let target = request_line.split_whitespace().nth(1).unwrap_or("");
            let key = target.strip_prefix("/v1/").unwrap_or("");
            let (status, body) = match store.get(key, None).unwrap() {
                Some(entry) => ("200 OK", entry.body),
                None => ("404 Not Found", b"{}".to_vec()),
            };
            let head = format!(
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(&body);
        }
    });
    Backbone { base_url, requests }
}

#[test]
fn empty_name_is_fatal_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.owl");
    let o = taxowl(&["convert", "--names", "", "--fixtures", path(&common::backbone()), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn partial_failure_exits_2_with_output_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mixed.owl");
    let o = taxowl(&[
        "convert", "--names", "Apis mellifera", "Zzzz qqq", "--fixtures", path(&common::backbone()), "--out", path(&out),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 failed"));
    assert!(std::fs::read_to_string(&out).unwrap().contains("Apis mellifera"));
    let report = std::fs::read_to_string(dir.path().join("mixed.report.csv")).unwrap();
    assert!(report.lines().nth(2).unwrap().starts_with("Zzzz qqq,Zzzz qqq,FAILED,NONE,"));
}

#[test]
fn missing_fixture_directory_is_fatal() {
    let o = taxowl(&["convert", "--names", "Apis mellifera", "--fixtures", "/nonexistent/corpus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("transport"));
}

#[test]
fn unwritable_output_is_fatal() {
    let o = taxowl(&[
        "convert", "--names", "Apis mellifera", "--fixtures", path(&common::backbone()), "--out", "/nonexistent/dir/out.owl",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_prints_status_rows() {
    let o = taxowl(&["check", "--names", "Capra hircus", "Apis mellifera", "--fixtures", path(&common::backbone())]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("Capra hircus\tSYNONYM\tEXACT\t99\tCapra aegagrus\tSYNONYM_REPLACED"), "{text}");
    assert!(text.contains("Apis mellifera\tACCEPTED\tEXACT\t99\t-\tACCEPTED"), "{text}");
}

#[test]
fn merge_single_file_reserializes() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("apis.owl");
    let o = taxowl(&["convert", "--names", "Apis mellifera", "--fixtures", path(&common::backbone()), "--out", path(&one)]);
    assert_eq!(o.status.code(), Some(0));
    let merged = taxowl(&["merge", path(&one)]);
    assert_eq!(merged.status.code(), Some(0));
    // Apis keys happen to ascend with rank, so both orderings agree
    assert_eq!(stdout(&merged), std::fs::read_to_string(&one).unwrap());
}

#[test]
fn merge_conflict_names_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let header = "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\" xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\" xmlns:owl=\"http://www.w3.org/2002/07/owl#\">";
    let a = dir.path().join("latin.owl");
    let b = dir.path().join("english.owl");
    for (p, label) in [(&a, "Animalia"), (&b, "Animals")] {
        let doc = format!("{header}<owl:Class rdf:about=\"https://www.gbif.org/species/1\"><rdfs:label xml:lang=\"lat\">{label}</rdfs:label></owl:Class></rdf:RDF>");
        std::fs::write(p, doc).unwrap();
    }
    let o = taxowl(&["merge", path(&a), path(&b)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("latin.owl") && err.contains("english.owl"), "{err}");
}

#[test]
fn merge_reports_placeholder_parents() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("orphan.owl");
    std::fs::write(&f, "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\" xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\" xmlns:owl=\"http://www.w3.org/2002/07/owl#\"><owl:Class rdf:about=\"https://www.gbif.org/species/54\"><rdfs:subClassOf rdf:resource=\"https://www.gbif.org/species/1\"/></owl:Class></rdf:RDF>").unwrap();
    let o = taxowl(&["merge", path(&f)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning: https://www.gbif.org/species/1"));
    assert!(stdout(&o).contains("<owl:Class rdf:about=\"https://www.gbif.org/species/1\"/>"));
}

#[test]
fn axioms_empty_spec_gives_empty_fragment() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("empty.txt");
    std::fs::write(&spec, "# nothing yet\n").unwrap();
    let o = taxowl(&["axioms", path(&spec), "--fixtures", path(&common::backbone())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "");
}

#[test]
fn axioms_unresolved_target_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.txt");
    std::fs::write(&spec, "# hybrids\n\nCitrus aurantium | some-intersection | is_a_hybrid_of | Citrus maxima, Zzzz qqq\n").unwrap();
    let o = taxowl(&["axioms", path(&spec), "--fixtures", path(&common::backbone())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert!(stderr(&o).contains("Zzzz qqq"));
}

#[test]
fn axioms_append_in_place_and_merge_keeps_them() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("citrus.owl");
    let o = taxowl(&[
        "convert", "--names", "Citrus ×aurantium", "Citrus maxima", "Citrus reticulata",
        "--fixtures", path(&common::backbone()), "--out", path(&doc),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let spec = dir.path().join("hybrids.txt");
    std::fs::write(&spec, "Citrus aurantium | some-intersection | is_a_hybrid_of | Citrus maxima, Citrus reticulata\n").unwrap();
    let o = taxowl(&["axioms", path(&spec), "--append-to", path(&doc), "--fixtures", path(&common::backbone())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&doc).unwrap();
    assert!(text.ends_with("    </SubClassOf>\n\n</rdf:RDF>\n"));
    let merged = taxowl(&["merge", path(&doc), path(&doc)]);
    assert_eq!(merged.status.code(), Some(0), "{}", stderr(&merged));
    assert_eq!(stdout(&merged).matches("<SubClassOf>").count(), 1);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("taxowl.conf");
    std::fs::write(&conf, format!("fixtures = {}\nlang_tag = la\n", common::backbone().display())).unwrap();
    let o = taxowl(&["--config", path(&conf), "convert", "--names", "Apis mellifera"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("<rdfs:label xml:lang=\"la\">Apis mellifera</rdfs:label>"));
    let o = taxowl(&["--config", path(&conf), "convert", "--names", "Apis mellifera", "--lang-tag", "lat"]);
    assert!(stdout(&o).contains("xml:lang=\"lat\""));
}

#[test]
fn live_mode_uses_base_url_from_environment() {
    let server = serve_backbone();
    let o = Command::new(env!("CARGO_BIN_EXE_taxowl"))
        .args(["convert", "--names", "Apis mellifera"])
        .env("GBIF_BASE_URL", &server.base_url)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), common::golden("apis.owl"));
    assert!(server.requests.load(Ordering::SeqCst) >= 1);
}

#[test]
fn cache_through_records_then_replays() {
    let server = serve_backbone();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = |extra: &[&str]| {
        let mut args = vec!["convert", "--names", "Prochilodus cearensis", "Bos taurus", "--cache-dir", path(&cache)];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_taxowl")).args(&args).env("GBIF_BASE_URL", &server.base_url).output().unwrap()
    };
    let first = run(&[]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let fetched = server.requests.load(Ordering::SeqCst);
    assert!(fetched >= 3);
    assert!(stderr(&first).contains("0 hits"));

    let second = run(&[]);
    assert_eq!(stdout(&second), stdout(&first));
    assert_eq!(server.requests.load(Ordering::SeqCst), fetched, "second run went upstream");
    assert!(stderr(&second).contains(&format!("{fetched} hits, 0 misses")), "{}", stderr(&second));

    let refreshed = run(&["--refresh"]);
    assert_eq!(refreshed.status.code(), Some(0));
    assert_eq!(server.requests.load(Ordering::SeqCst), 2 * fetched);

    let inspect = taxowl(&["cache", "inspect", "--cache-dir", path(&cache), "--list"]);
    assert!(stdout(&inspect).contains(&format!("{fetched} entries")), "{}", stdout(&inspect));
    assert!(stdout(&inspect).contains("species/match?name=Bos%20taurus"));
    let clear = taxowl(&["cache", "clear", "--cache-dir", path(&cache)]);
    assert_eq!(clear.status.code(), Some(0));
    assert!(CacheStore::open_existing(&cache).unwrap().is_empty());
}
