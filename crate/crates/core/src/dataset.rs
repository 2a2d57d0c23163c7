//! Training-corpus generation and serialization.
//!
//! Labels depend only on the per-variable transition set, so besides
//! sampling whole random systems the generator can enumerate Boolean
//! functions directly: all `2^(2^n)` complete labeled sets, or all
//! `3^(2^n) - 1` non-empty partial ones. Records are deduplicated by token
//! multiset and written sorted, so output files are reproducible byte for
//! byte given mode and seed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_example, canonical_example_strong};
use crate::error::{Error, Result};
use crate::logic::{HerbrandBase, LabeledTransitions, State, TransitionSet};
use crate::model::tokens::{tokenize, TokenSet};
use crate::rule_index::{body_count, RuleIndexTable};
use crate::symbolic::{learn_minimal, targets_from_rules, TargetVectors};

/// One canonicalized, oracle-labeled training record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub n: usize,
    /// Token ids, stored sorted ascending.
    pub tokens: Vec<u32>,
    pub targets: TargetVectors,
}

impl TrainingExample {
    fn from_labeled(labeled: &LabeledTransitions, table: &RuleIndexTable) -> Result<Self> {
        let tokens = tokenize(labeled)?;
        let bodies = learn_minimal(labeled)?;
        Ok(Self {
            n: labeled.width(),
            tokens: tokens.sorted_ids(),
            targets: targets_from_rules(&bodies, table)?,
        })
    }

    pub fn token_set(&self) -> TokenSet {
        TokenSet::new(self.tokens.clone()).expect("stored tokens are valid")
    }

    /// Recover the labeled transition set the tokens encode.
    pub fn labeled(&self) -> LabeledTransitions {
        crate::model::tokens::detokenize(&self.tokens, self.n)
    }
}

/// How a corpus was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenMode {
    Sampled,
    ExhaustiveComplete,
    ExhaustivePartial,
}

impl std::fmt::Display for GenMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenMode::Sampled => write!(f, "sampled"),
            GenMode::ExhaustiveComplete => write!(f, "exhaustive-complete"),
            GenMode::ExhaustivePartial => write!(f, "exhaustive-partial"),
        }
    }
}

/// Sidecar describing a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n: usize,
    pub mode: GenMode,
    pub seed: Option<u64>,
    pub count: usize,
    pub version: u8,
}

/// A uniformly random synchronous system: every source state mapped to an
/// independently uniform target state.
pub fn random_system(n: usize, rng: &mut impl Rng) -> Result<TransitionSet> {
    if n > crate::logic::ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge {
            n,
            cap: crate::logic::ENUMERATION_CAP,
        });
    }
    let base = HerbrandBase::anonymous(n)?;
    let states = 1u64 << n;
    Ok(TransitionSet::new(
        base,
        (0..states).map(|bits| (State::new(bits), State::new(rng.gen_range(0..states)))),
    ))
}

/// Widest `n` for which all `2^(2^n)` complete labeled sets are enumerated.
pub const COMPLETE_BUDGET: usize = 4;
/// Widest `n` for which all `3^(2^n) - 1` partial labeled sets are enumerated.
pub const PARTIAL_BUDGET: usize = 3;

/// All complete per-variable labeled sets, i.e. all Boolean functions
/// `2^n -> {0,1}`, each exactly once.
pub fn enumerate_complete_inputs(
    n: usize,
) -> Result<impl Iterator<Item = LabeledTransitions>> {
    if n > COMPLETE_BUDGET {
        return Err(Error::GenerationBudget {
            n,
            mode: "exhaustive-complete",
        });
    }
    let states = 1u64 << n;
    let functions: u64 = 1 << states;
    Ok((0..functions).map(move |function| {
        LabeledTransitions::new(
            n,
            (0..states).map(|bits| (State::new(bits), function >> bits & 1 == 1)),
        )
    }))
}

/// All non-empty partial labeled sets: each state is absent, labeled 0, or
/// labeled 1.
pub fn enumerate_partial_inputs(
    n: usize,
) -> Result<impl Iterator<Item = LabeledTransitions>> {
    if n > PARTIAL_BUDGET {
        return Err(Error::GenerationBudget {
            n,
            mode: "exhaustive-partial",
        });
    }
    let states = 1u64 << n;
    let assignments: u64 = 3u64.pow(states as u32);
    Ok((1..assignments).map(move |assignment| {
        let mut rest = assignment;
        let mut items = Vec::new();
        for bits in 0..states {
            match rest % 3 {
                0 => {}
                digit => items.push((State::new(bits), digit == 2)),
            }
            rest /= 3;
        }
        LabeledTransitions::new(n, items)
    }))
}

/// Corpus generation request.
#[derive(Debug, Clone)]
pub struct GenOptions {
    pub mode: GenMode,
    pub n: usize,
    /// Systems to sample; ignored by the exhaustive modes.
    pub count: usize,
    pub seed: u64,
    /// Search all tail orderings during canonicalization (sampled mode only).
    pub strong_canonical: bool,
}

/// Generate, canonicalize, label, and deduplicate a corpus. Examples come
/// back sorted by token encoding.
pub fn build_training_set(options: &GenOptions) -> Result<Vec<TrainingExample>> {
    let n = options.n;
    let table = RuleIndexTable::new(n)?;
    let mut dedup: BTreeMap<Vec<u32>, TargetVectors> = BTreeMap::new();

    let mut insert = |example: TrainingExample| -> Result<()> {
        if let Some(existing) = dedup.get(&example.tokens) {
            // the oracle is deterministic, so equal inputs must agree
            if *existing != example.targets {
                return Err(Error::CorruptRecord {
                    kind: "training set",
                    detail: "equal token multisets produced different targets".into(),
                });
            }
            return Ok(());
        }
        dedup.insert(example.tokens, example.targets);
        Ok(())
    };

    match options.mode {
        GenMode::Sampled => {
            if options.count == 0 {
                return Err(Error::InvalidConfig("sampled mode requires count > 0".into()));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
            for _ in 0..options.count {
                let system = random_system(n, &mut rng)?;
                for v in 0..n {
                    let example = if options.strong_canonical {
                        canonical_example_strong(&system, v)?
                    } else {
                        canonical_example(&system, v)?
                    };
                    insert(TrainingExample::from_labeled(&example.labeled, &table)?)?;
                }
            }
        }
        GenMode::ExhaustiveComplete => {
            for labeled in enumerate_complete_inputs(n)? {
                insert(TrainingExample::from_labeled(&labeled, &table)?)?;
            }
        }
        GenMode::ExhaustivePartial => {
            for labeled in enumerate_partial_inputs(n)? {
                insert(TrainingExample::from_labeled(&labeled, &table)?)?;
            }
        }
    }

    Ok(dedup
        .into_iter()
        .map(|(tokens, targets)| TrainingExample { n, tokens, targets })
        .collect())
}

const MAGIC: &[u8; 4] = b"DLF2";
const VERSION: u8 = 1;

fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// Write the binary record file plus its JSON manifest sidecar.
pub fn write_dataset(
    path: &Path,
    examples: &[TrainingExample],
    n: usize,
    mode: GenMode,
    seed: Option<u64>,
) -> Result<()> {
    if n > 15 {
        // token ids are stored as u16
        return Err(Error::TooManyVariables { n, max: 15 });
    }
    let mut sorted: Vec<&TrainingExample> = examples.iter().collect();
    sorted.sort_by(|a, b| a.tokens.cmp(&b.tokens));

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION, n as u8])?;
    for example in &sorted {
        if example.n != n {
            return Err(Error::WidthMismatch {
                left: example.n,
                right: n,
            });
        }
        out.write_all(&(example.tokens.len() as u16).to_le_bytes())?;
        for &id in &example.tokens {
            out.write_all(&(id as u16).to_le_bytes())?;
        }
        for head in example.targets.heads() {
            out.write_all(&pack_bits(head))?;
        }
    }
    out.flush()?;

    let manifest = DatasetManifest {
        n,
        mode,
        seed,
        count: sorted.len(),
        version: VERSION,
    };
    let file = File::create(manifest_path(path))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    Ok(())
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &bit) in bits.iter().enumerate() {
        if bit {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    bytes
}

fn unpack_bits(bytes: &[u8], len: usize) -> Vec<bool> {
    (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

/// Read a record file back; returns the examples and the manifest when the
/// sidecar is present and consistent.
pub fn read_dataset(path: &Path) -> Result<(Vec<TrainingExample>, Option<DatasetManifest>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u8; 6];
    reader.read_exact(&mut header).map_err(|_| Error::CorruptRecord {
        kind: "dataset",
        detail: "file shorter than header".into(),
    })?;
    if &header[..4] != MAGIC {
        return Err(Error::BadMagic { kind: "dataset" });
    }
    if header[4] != VERSION {
        return Err(Error::UnsupportedVersion {
            kind: "dataset",
            found: header[4],
            expected: VERSION,
        });
    }
    let n = header[5] as usize;
    let head_widths: Vec<usize> = (0..=n)
        .map(|l| body_count(n, l).map(|c| c as usize + 1))
        .collect::<Result<_>>()?;

    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    struct Cursor<'a> {
        bytes: &'a [u8],
        offset: usize,
    }
    impl<'a> Cursor<'a> {
        fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
            if self.offset + len > self.bytes.len() {
                return Err(Error::CorruptRecord {
                    kind: "dataset",
                    detail: format!("truncated while reading {what}"),
                });
            }
            let slice = &self.bytes[self.offset..self.offset + len];
            self.offset += len;
            Ok(slice)
        }
        fn exhausted(&self) -> bool {
            self.offset >= self.bytes.len()
        }
    }
    let mut cursor = Cursor {
        bytes: &rest,
        offset: 0,
    };

    let mut examples = Vec::new();
    while !cursor.exhausted() {
        let count =
            u16::from_le_bytes(cursor.take(2, "token count")?.try_into().unwrap()) as usize;
        if count > 1 << n {
            return Err(Error::CorruptRecord {
                kind: "dataset",
                detail: format!("token count {count} exceeds 2^{n}"),
            });
        }
        let mut tokens = Vec::with_capacity(count);
        for _ in 0..count {
            let id = u16::from_le_bytes(cursor.take(2, "token id")?.try_into().unwrap()) as u32;
            if id >= 1 << (n + 1) {
                return Err(Error::CorruptRecord {
                    kind: "dataset",
                    detail: format!("token id {id} out of range"),
                });
            }
            tokens.push(id);
        }
        let mut heads = Vec::with_capacity(head_widths.len());
        for (l, &width) in head_widths.iter().enumerate() {
            let bytes = cursor.take(width.div_ceil(8), "target bitset")?;
            let bits = unpack_bits(bytes, width);
            let no_rule = *bits.last().expect("head width >= 1");
            let any_body = bits[..width - 1].iter().any(|&b| b);
            if no_rule == any_body {
                return Err(Error::CorruptRecord {
                    kind: "dataset",
                    detail: format!("no-rule node inconsistent at body length {l}"),
                });
            }
            heads.push(bits);
        }
        examples.push(TrainingExample {
            n,
            tokens,
            targets: TargetVectors::from_heads(n, heads)?,
        });
    }

    let manifest = match File::open(manifest_path(path)) {
        Ok(file) => {
            let manifest: DatasetManifest = serde_json::from_reader(BufReader::new(file))?;
            if manifest.count != examples.len() || manifest.n != n {
                return Err(Error::CorruptRecord {
                    kind: "dataset",
                    detail: "manifest disagrees with record file".into(),
                });
            }
            Some(manifest)
        }
        Err(_) => None,
    };

    Ok((examples, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn random_system_is_deterministic_per_seed() {
        let mut a = ChaCha12Rng::seed_from_u64(11);
        let mut b = ChaCha12Rng::seed_from_u64(11);
        assert_eq!(
            random_system(3, &mut a).unwrap(),
            random_system(3, &mut b).unwrap()
        );
    }

    #[test]
    fn random_system_covers_the_domain() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let system = random_system(1, &mut rng).unwrap();
        assert_eq!(system.len(), 2);
        assert!(system.target(State::new(0)).is_some());
        assert!(system.target(State::new(1)).is_some());
    }

    #[test]
    fn random_system_targets_look_uniform() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut ones = 0u64;
        let mut total = 0u64;
        for _ in 0..10_000 {
            let system = random_system(3, &mut rng).unwrap();
            for (_, tgt) in system.pairs() {
                ones += tgt.bits().count_ones() as u64;
                total += 3;
            }
        }
        let mean = ones as f64 / total as f64;
        assert!((mean - 0.5).abs() < 0.05, "target bit mean {mean}");
    }

    #[test]
    fn complete_enumeration_counts() {
        assert_eq!(enumerate_complete_inputs(1).unwrap().count(), 4);
        assert_eq!(enumerate_complete_inputs(2).unwrap().count(), 16);
        assert_eq!(enumerate_complete_inputs(3).unwrap().count(), 256);
        assert!(enumerate_complete_inputs(5).is_err());
    }

    #[test]
    fn complete_enumeration_is_duplicate_free() {
        let all: Vec<_> = enumerate_complete_inputs(2).unwrap().collect();
        for (i, a) in all.iter().enumerate() {
            assert!(a.is_complete());
            for b in &all[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn exhaustive_complete_training_set_n3_has_256_examples() {
        let options = GenOptions {
            mode: GenMode::ExhaustiveComplete,
            n: 3,
            count: 0,
            seed: 0,
            strong_canonical: false,
        };
        let examples = build_training_set(&options).unwrap();
        assert_eq!(examples.len(), 256);
        // sorted by token encoding
        for pair in examples.windows(2) {
            assert!(pair[0].tokens < pair[1].tokens);
        }
    }

    #[test]
    fn exhaustive_partial_training_set_n2_has_80_examples() {
        let options = GenOptions {
            mode: GenMode::ExhaustivePartial,
            n: 2,
            count: 0,
            seed: 0,
            strong_canonical: false,
        };
        let examples = build_training_set(&options).unwrap();
        assert_eq!(examples.len(), 80);
        assert!(examples.iter().all(|e| !e.tokens.is_empty()));
    }

    #[test]
    fn sampled_training_set_respects_bound_and_seed() {
        let options = GenOptions {
            mode: GenMode::Sampled,
            n: 3,
            count: 10,
            seed: 5,
            strong_canonical: false,
        };
        let first = build_training_set(&options).unwrap();
        assert!(first.len() <= 30);
        let second = build_training_set(&options).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let options = GenOptions {
            mode: GenMode::ExhaustiveComplete,
            n: 3,
            count: 0,
            seed: 0,
            strong_canonical: false,
        };
        let examples = build_training_set(&options).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("corpus.dlf2");
        write_dataset(&path, &examples, 3, GenMode::ExhaustiveComplete, None).unwrap();
        let (read, manifest) = read_dataset(&path).unwrap();
        assert_eq!(read, examples);
        let manifest = manifest.unwrap();
        assert_eq!(manifest.count, 256);
        assert_eq!(manifest.mode, GenMode::ExhaustiveComplete);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let options = GenOptions {
            mode: GenMode::ExhaustiveComplete,
            n: 2,
            count: 0,
            seed: 0,
            strong_canonical: false,
        };
        let examples = build_training_set(&options).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("corpus.dlf2");
        write_dataset(&path, &examples, 2, GenMode::ExhaustiveComplete, None).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        let clipped = dir.path().join("clipped.dlf2");
        std::fs::write(&clipped, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            read_dataset(&clipped),
            Err(Error::CorruptRecord { .. })
        ));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("corpus.dlf2");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"DLF2");
        bytes.push(9);
        bytes.push(2);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_dataset(&path),
            Err(Error::UnsupportedVersion { found: 9, .. })
        ));

        std::fs::write(&path, b"NOPE\x01\x02").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::BadMagic { .. })));
    }
}
