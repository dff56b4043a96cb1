//! A small generated SMART collection with planted topics.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 6] = ["k", "m", "p", "t", "x", "z"];

fn word(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{}{}{}{}{}",
        ONSETS.choose(rng).unwrap(),
        VOWELS.choose(rng).unwrap(),
        ONSETS.choose(rng).unwrap(),
        VOWELS.choose(rng).unwrap(),
        CODAS.choose(rng).unwrap()
    )
}

pub struct Synthetic {
    pub docs: String,
    pub queries: String,
    pub qrels: String,
    pub ndocs: usize,
    pub nqueries: usize,
}

/// `topics` groups of `per_topic` documents; each query targets one topic and
/// its judged-relevant documents are that topic's documents.
pub fn generate(seed: u64, topics: usize, per_topic: usize, words_per_topic: usize) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = std::collections::BTreeSet::new();
    while vocab.len() < topics * words_per_topic + 10 {
        vocab.insert(word(&mut rng));
    }
    let mut vocab: Vec<String> = vocab.into_iter().collect();
    vocab.shuffle(&mut rng);
    let background: Vec<String> = vocab.split_off(topics * words_per_topic);
    let topic_words: Vec<&[String]> = vocab.chunks(words_per_topic).collect();

    let mut docs = String::new();
    let mut id = 0;
    let mut members = vec![Vec::new(); topics];
    for _ in 0..per_topic {
        for (t, words) in topic_words.iter().enumerate() {
            id += 1;
            members[t].push(id);
            let len = rng.gen_range(15..40);
            let mut text = Vec::with_capacity(len);
            for _ in 0..len {
                let pool: &[String] = match rng.gen_range(0..10) {
                    0..=5 => words,
                    6..=7 => &background,
                    _ => topic_words[rng.gen_range(0..topics)],
                };
                text.push(pool.choose(&mut rng).unwrap().as_str());
            }
            let (title, body) = text.split_at(3);
            writeln!(docs, ".I {id}\n.T\n{}\n.A\nanon\n.W\n{}", title.join(" "), body.join(" ")).unwrap();
        }
    }

    let mut queries = String::new();
    let mut qrels = String::new();
    let mut qid = 0;
    for _ in 0..3 {
        for (t, words) in topic_words.iter().enumerate() {
            qid += 1;
            let text: Vec<&str> = (0..5).map(|_| words.choose(&mut rng).unwrap().as_str()).collect();
            writeln!(queries, ".I {qid}\n.W\n{}", text.join(" ")).unwrap();
            for d in &members[t] {
                if rng.gen_bool(0.8) {
                    writeln!(qrels, "{qid} 0 {d} 1").unwrap();
                }
            }
        }
    }
    // one query without any judgment, to exercise exclusion
    qid += 1;
    writeln!(queries, ".I {qid}\n.W\n{}", background[..3].join(" ")).unwrap();
    Synthetic { docs, queries, qrels, ndocs: id as usize, nqueries: qid as usize }
}

/// Writes the collection and a config into `dir`; returns the config path.
pub fn write_collection(dir: &Path, s: &Synthetic, extra: &str) -> PathBuf {
    fs::write(dir.join("toy.all"), &s.docs).unwrap();
    fs::write(dir.join("toy.qry"), &s.queries).unwrap();
    fs::write(dir.join("toy.rel"), &s.qrels).unwrap();
    let config = format!(
        "name = toy\ndocs = toy.all\nqueries = toy.qry\nqrels = toy.rel\n\
         qrels_columns = query=0 doc=2 rel=3 min_rel=1\noutput = out\n{extra}\n"
    );
    let path = dir.join("toy.conf");
    fs::write(&path, config).unwrap();
    path
}
