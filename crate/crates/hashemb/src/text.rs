//! Text preprocessing and dataset handling: tokenization, n-gram expansion,
//! snippet sampling, CSV ingestion (Zhang-style classification layout),
//! validation splitting, and frequency-ranked vocabulary building.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{Error, Result};

/// Snippet length bounds for training-time input dropout.
pub const SNIPPET_MIN: usize = 4;
pub const SNIPPET_MAX: usize = 100;

fn strip_char(c: char) -> bool {
    matches!(
        c.general_category_group(),
        GeneralCategoryGroup::Punctuation | GeneralCategoryGroup::Symbol
    )
}

/// Lowercased whitespace-separated words with punctuation and symbol
/// characters removed; digits are kept.
#[must_use]
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| !strip_char(*c))
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// All contiguous n-grams for n = 1..=n_max, grouped by order, each group in
/// document order. Words of an n-gram are joined with `_`.
#[must_use]
pub fn ngrams<S: AsRef<str>>(words: &[S], n_max: usize) -> Vec<String> {
    assert!(n_max >= 1, "n-gram order bound must be positive");
    let len = words.len();
    let mut out = Vec::with_capacity(total_ngrams(len, n_max));
    for n in 1..=n_max.min(len) {
        for window in words.windows(n) {
            let mut gram = String::with_capacity(
                window.iter().map(|w| w.as_ref().len() + 1).sum::<usize>(),
            );
            for (i, w) in window.iter().enumerate() {
                if i > 0 {
                    gram.push('_');
                }
                gram.push_str(w.as_ref());
            }
            out.push(gram);
        }
    }
    out
}

/// Number of n-grams `ngrams` produces for a sequence of length `len`.
#[must_use]
pub fn total_ngrams(len: usize, n_max: usize) -> usize {
    (1..=n_max.min(len)).map(|n| len - n + 1).sum()
}

/// Contiguous training snippet: length drawn uniformly from
/// `{SNIPPET_MIN..=SNIPPET_MAX}` (clamped to the sequence), start uniform.
/// Sequences of at most `SNIPPET_MIN` tokens are returned whole without
/// consuming randomness. Evaluation should pass the full sequence instead.
pub fn sample_snippet<'a, T, R: Rng + ?Sized>(tokens: &'a [T], rng: &mut R) -> &'a [T] {
    let len = tokens.len();
    if len <= SNIPPET_MIN {
        return tokens;
    }
    let length = rng.random_range(SNIPPET_MIN..=SNIPPET_MAX).min(len);
    let start = rng.random_range(0..=len - length);
    &tokens[start..start + length]
}

/// One labeled document. Labels are 0-based internally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub label: usize,
    pub text: String,
}

/// A labeled document collection with a fixed class count.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub num_classes: usize,
    pub name: String,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, num_classes: usize, name: impl Into<String>) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::invalid("class count must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::invalid("dataset must not be empty"));
        }
        if let Some(s) = samples.iter().find(|s| s.label >= num_classes) {
            return Err(Error::invalid(format!(
                "label {} outside 0..{num_classes}",
                s.label
            )));
        }
        Ok(Dataset {
            samples,
            num_classes,
            name: name.into(),
        })
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Loads a comma-separated classification file: every field double-quoted,
/// first field the 1-based class index, remaining fields joined with a
/// space. Doubled quotes unescape to `"`; literal `\n` sequences become
/// spaces. The dataset name is the file stem.
pub fn load_dataset<P: AsRef<Path>>(path: P, num_classes: usize) -> Result<Dataset> {
    let path = path.as_ref();
    if num_classes == 0 {
        return Err(Error::invalid("class count must be positive"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::io(path, std::io::Error::other(e.to_string()))
            }
            _ => Error::Csv(e),
        })?;
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, csv::Position::line);
        let Some(label_field) = record.get(0) else {
            continue; // fully empty record (blank line)
        };
        let label: i64 = label_field.trim().parse().map_err(|_| Error::MalformedRecord {
            path: path.to_path_buf(),
            line,
            reason: format!("class field {label_field:?} is not an integer"),
        })?;
        if label < 1 || label as usize > num_classes {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes,
                path: path.to_path_buf(),
                line,
            });
        }
        let text = record
            .iter()
            .skip(1)
            .collect::<Vec<_>>()
            .join(" ")
            .replace("\\n", " ");
        samples.push(Sample {
            label: label as usize - 1,
            text,
        });
    }
    let name = path
        .file_stem()
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::new(samples, num_classes, name)
}

/// Writes a dataset back in the same layout `load_dataset` reads (label as
/// a 1-based quoted field, text as a single quoted field).
pub fn save_dataset<P: AsRef<Path>>(dataset: &Dataset, path: P) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Always)
        .from_path(path)
        .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))?;
    for sample in &dataset.samples {
        writer.write_record([&(sample.label + 1).to_string(), &sample.text])?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Deterministic shuffled split into (train, validation). The validation
/// part takes `ceil(len · fraction)` samples (clamped so both sides stay
/// non-empty); the two parts partition the input exactly.
pub fn split_validation(dataset: Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "validation fraction must be in (0, 1), got {fraction}"
        )));
    }
    if dataset.len() < 2 {
        return Err(Error::invalid("need at least 2 samples to split"));
    }
    let Dataset {
        mut samples,
        num_classes,
        name,
    } = dataset;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.shuffle(&mut rng);
    let n = samples.len();
    let val_len = ((n as f64 * fraction).ceil() as usize).clamp(1, n - 1);
    let val_samples = samples.split_off(n - val_len);
    Ok((
        Dataset {
            samples,
            num_classes,
            name: name.clone(),
        },
        Dataset {
            samples: val_samples,
            num_classes,
            name,
        },
    ))
}

/// Frequency-ranked n-gram vocabulary. Ids are dense in `{1..len}`; id 0 is
/// reserved for unknown tokens.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    table: HashMap<String, u64>,
    max_size: usize,
    n_max: usize,
}

/// Counts n-grams over a corpus, remembering each gram's first-occurrence
/// rank for deterministic tie-breaking.
fn ngram_counts<'a, I>(corpus: I, n_max: usize) -> HashMap<String, (u64, u64)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<String, (u64, u64)> = HashMap::new();
    let mut next_rank = 0u64;
    for text in corpus {
        for gram in ngrams(&tokenize(text), n_max) {
            let entry = counts.entry(gram).or_insert_with(|| {
                let rank = next_rank;
                next_rank += 1;
                (0, rank)
            });
            entry.0 += 1;
        }
    }
    counts
}

/// Builds a vocabulary of the `max_size` most frequent n-grams of order at
/// most `n_max`. Ties at the cutoff go to the gram seen first.
pub fn build_vocab<'a, I>(corpus: I, n_max: usize, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a str>,
{
    if max_size == 0 {
        return Err(Error::invalid("vocabulary capacity must be positive"));
    }
    if n_max == 0 {
        return Err(Error::invalid("n-gram order bound must be positive"));
    }
    let counts = ngram_counts(corpus, n_max);
    let mut ranked: Vec<(String, u64, u64)> = counts
        .into_iter()
        .map(|(gram, (count, first))| (gram, count, first))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    ranked.truncate(max_size);
    let table = ranked
        .into_iter()
        .enumerate()
        .map(|(i, (gram, _, _))| (gram, i as u64 + 1))
        .collect();
    Ok(Vocabulary {
        table,
        max_size,
        n_max,
    })
}

impl Vocabulary {
    /// Number of enrolled n-grams (id 0 not counted).
    #[must_use]
    pub fn len(&self) -> usize {
        self.table.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    #[must_use]
    pub fn max_size(&self) -> usize {
        self.max_size
    }

    #[must_use]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Id of an enrolled token.
    #[must_use]
    pub fn id(&self, token: &str) -> Option<u64> {
        self.table.get(token).copied()
    }

    /// Id of a token, 0 when unenrolled.
    #[must_use]
    pub fn id_or_unknown(&self, token: &str) -> u64 {
        self.id(token).unwrap_or(0)
    }

    /// Smallest id range that covers the reserved id plus all enrolled ids.
    #[must_use]
    pub fn required_id_range(&self) -> u64 {
        self.table.len() as u64 + 1
    }

    /// Enrolled (token, id) pairs, unordered.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.table.iter().map(|(t, &id)| (t.as_str(), id))
    }

    /// Copy of the token table, for wiring into an embedding.
    #[must_use]
    pub fn to_table(&self) -> HashMap<String, u64> {
        self.table.clone()
    }

    /// Wraps an existing token table, e.g. one recovered from an embedding
    /// whose ids do not follow the frequency-ranked convention.
    pub fn from_table(table: HashMap<String, u64>, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::invalid("n-gram order bound must be positive"));
        }
        let max_size = table.len().max(1);
        Ok(Vocabulary {
            table,
            max_size,
            n_max,
        })
    }

    /// Writes `token<TAB>id` lines, sorted by id.
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut entries: Vec<(&str, u64)> = self.entries().collect();
        entries.sort_by_key(|&(_, id)| id);
        for (token, id) in entries {
            writeln!(w, "{token}\t{id}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads `token<TAB>id` lines. Capacity and order bound are restored as
    /// observed file properties: the entry count and the highest n-gram
    /// order present.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = HashMap::new();
        let mut n_max = 1;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (token, id) = line.split_once('\t').ok_or_else(|| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                reason: "expected token<TAB>id".into(),
            })?;
            let id: u64 = id.parse().map_err(|_| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                reason: format!("id {id:?} is not an integer"),
            })?;
            n_max = n_max.max(token.matches('_').count() + 1);
            if table.insert(token.to_string(), id).is_some() {
                return Err(Error::MalformedRecord {
                    path: path.to_path_buf(),
                    line: i as u64 + 1,
                    reason: format!("duplicate token {token:?}"),
                });
            }
        }
        let max_size = table.len().max(1);
        Ok(Vocabulary {
            table,
            max_size,
            n_max,
        })
    }
}

/// A dataset expanded to per-document n-gram token lists, ready for
/// embedding and training.
#[derive(Debug, Clone)]
pub struct TokenDocs {
    pub docs: Vec<Vec<String>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl TokenDocs {
    #[must_use]
    pub fn from_dataset(dataset: &Dataset, n_max: usize) -> Self {
        TokenDocs {
            docs: dataset
                .samples
                .iter()
                .map(|s| ngrams(&tokenize(&s.text), n_max))
                .collect(),
            labels: dataset.samples.iter().map(|s| s.label).collect(),
            num_classes: dataset.num_classes,
        }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_strips_punctuation_keeps_digits() {
        assert_eq!(tokenize("I loved it!"), vec!["i", "loved", "it"]);
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("4 stars, really."), vec!["4", "stars", "really"]);
        assert_eq!(tokenize("co-op & café…"), vec!["coop", "café"]);
        assert_eq!(tokenize("  spaced\tout \n lines "), vec!["spaced", "out", "lines"]);
    }

    #[test]
    fn ngram_enumeration_and_join() {
        let words = ["the".to_string(), "cat".to_string()];
        assert_eq!(ngrams(&words, 2), vec!["the", "cat", "the_cat"]);
        assert_eq!(ngrams(&["a"], 9), vec!["a"]);
        let phrase = ["4", "stars", "instead", "of", "5"];
        assert!(ngrams(&phrase, 5).contains(&"4_stars_instead_of_5".to_string()));
        assert_eq!(ngrams(&[] as &[&str], 3), Vec::<String>::new());
    }

    #[test]
    fn ngram_count_formula() {
        for len in 0..12usize {
            for n_max in 1..=10usize {
                let words: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
                assert_eq!(ngrams(&words, n_max).len(), total_ngrams(len, n_max));
            }
        }
    }

    #[test]
    fn short_sequences_come_back_whole() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tokens = ["a", "b", "c"];
        assert_eq!(sample_snippet(&tokens, &mut rng), &tokens);
        let four = ["a", "b", "c", "d"];
        assert_eq!(sample_snippet(&four, &mut rng), &four);
    }

    #[test]
    fn snippets_are_bounded_contiguous_slices() {
        let tokens: Vec<usize> = (0..1000).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let snip = sample_snippet(&tokens, &mut rng);
            assert!((SNIPPET_MIN..=SNIPPET_MAX).contains(&snip.len()));
            // Contiguity: values continue from the first element.
            let start = snip[0];
            assert!(snip.iter().enumerate().all(|(i, &v)| v == start + i));
        }
    }

    #[test]
    fn snippet_sampling_is_deterministic() {
        let tokens: Vec<usize> = (0..500).collect();
        let a = sample_snippet(&tokens, &mut ChaCha8Rng::seed_from_u64(9)).to_vec();
        let b = sample_snippet(&tokens, &mut ChaCha8Rng::seed_from_u64(9)).to_vec();
        assert_eq!(a, b);
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_joins_fields_and_rebases_labels() {
        let f = write_csv("\"3\",\"T\",\"D\"\n\"1\",\"Quoted \"\"x\"\"\",\"a\\nb\"\n");
        let ds = load_dataset(f.path(), 4).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples[0], Sample { label: 2, text: "T D".into() });
        assert_eq!(ds.samples[1], Sample { label: 0, text: "Quoted \"x\" a b".into() });
    }

    #[test]
    fn load_rejects_out_of_range_label() {
        let f = write_csv("\"5\",\"x\",\"y\"\n");
        match load_dataset(f.path(), 4) {
            Err(Error::LabelOutOfRange { label: 5, num_classes: 4, line: 1, .. }) => {}
            other => panic!("expected LabelOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_line_of_malformed_label() {
        let f = write_csv("\"1\",\"ok\"\n\"x\",\"bad\"\n");
        match load_dataset(f.path(), 4) {
            Err(Error::MalformedRecord { line: 2, .. }) => {}
            other => panic!("expected MalformedRecord at line 2, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trips_samples() {
        let samples = vec![
            Sample { label: 0, text: "alpha beta".into() },
            Sample { label: 2, text: "gamma, with \"quotes\"".into() },
            Sample { label: 1, text: "".into() },
        ];
        let ds = Dataset::new(samples.clone(), 3, "mini").unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_dataset(&ds, f.path()).unwrap();
        let back = load_dataset(f.path(), 3).unwrap();
        assert_eq!(back.samples, samples);
    }

    #[test]
    fn split_partitions_exactly() {
        let samples: Vec<Sample> = (0..100)
            .map(|i| Sample { label: i % 4, text: format!("doc {i}") })
            .collect();
        let ds = Dataset::new(samples.clone(), 4, "s").unwrap();
        let (train, val) = split_validation(ds, 0.05, 7).unwrap();
        assert_eq!(train.len(), 95);
        assert_eq!(val.len(), 5);
        let mut all: Vec<&Sample> = train.samples.iter().chain(&val.samples).collect();
        all.sort_by_key(|s| s.text.clone());
        let mut want: Vec<&Sample> = samples.iter().collect();
        want.sort_by_key(|s| s.text.clone());
        assert_eq!(all, want, "split must partition the input");
        let train_texts: std::collections::HashSet<_> =
            train.samples.iter().map(|s| &s.text).collect();
        assert!(val.samples.iter().all(|s| !train_texts.contains(&s.text)));
    }

    #[test]
    fn split_sizes_match_benchmark_arithmetic() {
        let samples: Vec<Sample> = (0..120_000)
            .map(|i| Sample { label: i % 4, text: i.to_string() })
            .collect();
        let ds = Dataset::new(samples, 4, "big").unwrap();
        let (train, val) = split_validation(ds, 0.05, 0).unwrap();
        assert_eq!((train.len(), val.len()), (114_000, 6_000));
    }

    #[test]
    fn split_is_deterministic_and_validates_fraction() {
        let mk = || {
            Dataset::new(
                (0..10).map(|i| Sample { label: 0, text: i.to_string() }).collect(),
                1,
                "d",
            )
            .unwrap()
        };
        let (t1, v1) = split_validation(mk(), 0.3, 11).unwrap();
        let (t2, v2) = split_validation(mk(), 0.3, 11).unwrap();
        assert_eq!(t1.samples, t2.samples);
        assert_eq!(v1.samples, v2.samples);
        assert!(split_validation(mk(), 0.0, 1).is_err());
        assert!(split_validation(mk(), 1.0, 1).is_err());
    }

    #[test]
    fn vocab_keeps_most_frequent() {
        let vocab = build_vocab(["a b a"], 1, 1).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.id("a"), Some(1));
        assert_eq!(vocab.id("b"), None);
        assert_eq!(vocab.id_or_unknown("b"), 0);
    }

    #[test]
    fn vocab_enrolls_everything_under_capacity() {
        let vocab = build_vocab(["x y z"], 2, 100).unwrap();
        assert_eq!(vocab.len(), 5); // x y z x_y y_z
        assert_eq!(vocab.required_id_range(), 6);
        let ids: std::collections::HashSet<u64> =
            vocab.entries().map(|(_, id)| id).collect();
        assert_eq!(ids, (1..=5).collect());
    }

    #[test]
    fn vocab_ties_go_to_first_seen() {
        // All four tokens occur once; capacity 2 keeps the first two seen.
        let vocab = build_vocab(["m n o p"], 1, 2).unwrap();
        assert_eq!(vocab.id("m"), Some(1));
        assert_eq!(vocab.id("n"), Some(2));
        assert_eq!(vocab.id("o"), None);
    }

    #[test]
    fn vocab_ranks_by_frequency_then_order() {
        let vocab = build_vocab(["c b b a a a"], 1, 3).unwrap();
        assert_eq!(vocab.id("a"), Some(1));
        assert_eq!(vocab.id("b"), Some(2));
        assert_eq!(vocab.id("c"), Some(3));
    }

    #[test]
    fn vocab_counts_are_permutation_invariant() {
        let docs = ["a b c", "b c d", "c d e"];
        let permuted = ["c d e", "a b c", "b c d"];
        let a = ngram_counts(docs, 2);
        let b = ngram_counts(permuted, 2);
        let counts = |m: &HashMap<String, (u64, u64)>| {
            let mut v: Vec<(String, u64)> =
                m.iter().map(|(g, &(c, _))| (g.clone(), c)).collect();
            v.sort();
            v
        };
        assert_eq!(counts(&a), counts(&b));
    }

    #[test]
    fn vocab_save_load_round_trips() {
        let vocab = build_vocab(["one two three two two"], 2, 10).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        vocab.save(f.path()).unwrap();
        let back = Vocabulary::load(f.path()).unwrap();
        assert_eq!(back.len(), vocab.len());
        assert_eq!(back.n_max(), 2);
        for (token, id) in vocab.entries() {
            assert_eq!(back.id(token), Some(id));
        }
    }

    #[test]
    fn token_docs_expand_documents() {
        let ds = Dataset::new(
            vec![
                Sample { label: 1, text: "Big cats sleep.".into() },
                Sample { label: 0, text: "".into() },
            ],
            2,
            "d",
        )
        .unwrap();
        let docs = TokenDocs::from_dataset(&ds, 2);
        assert_eq!(docs.len(), 2);
        assert_eq!(docs.labels, vec![1, 0]);
        assert_eq!(docs.docs[0], vec!["big", "cats", "sleep", "big_cats", "cats_sleep"]);
        assert!(docs.docs[1].is_empty());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn snippet_is_contiguous_subslice(len in 0usize..400, seed in any::<u64>()) {
                let tokens: Vec<usize> = (0..len).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let snip = sample_snippet(&tokens, &mut rng);
                if len <= SNIPPET_MIN {
                    prop_assert_eq!(snip.len(), len);
                } else {
                    prop_assert!(snip.len() >= SNIPPET_MIN && snip.len() <= SNIPPET_MAX.min(len));
                }
                if !snip.is_empty() {
                    let start = snip[0];
                    prop_assert!(snip.iter().enumerate().all(|(i, &v)| v == start + i));
                }
            }

            #[test]
            fn ngram_output_matches_formula(len in 0usize..30, n_max in 1usize..6) {
                let words: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
                prop_assert_eq!(ngrams(&words, n_max).len(), total_ngrams(len, n_max));
            }

            #[test]
            fn tokenize_never_emits_empty_or_uppercase(text in ".*") {
                for token in tokenize(&text) {
                    prop_assert!(!token.is_empty());
                    prop_assert!(!token.chars().any(|c| c.is_uppercase()));
                    prop_assert!(!token.chars().any(char::is_whitespace));
                }
            }
        }
    }
}
