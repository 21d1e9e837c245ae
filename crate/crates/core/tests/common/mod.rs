#![allow(dead_code)]

use std::path::PathBuf;

use taxowl::gbif::{FixtureTransport, GbifClient};
use taxowl::names::{parse_names_list, RawNameEntry};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn backbone() -> PathBuf {
    fixtures().join("backbone")
}

pub fn client() -> GbifClient {
    GbifClient::from_transport(FixtureTransport::open(backbone()).expect("fixture corpus present"))
}

pub fn list(name: &str) -> Vec<RawNameEntry> {
    let text = std::fs::read_to_string(fixtures().join("lists").join(name)).unwrap();
    parse_names_list(&text).unwrap()
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("golden").join(name)).unwrap()
}
