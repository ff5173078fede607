//! Corpus format, validation, splitting, fusion and synthetic data.

mod fuse;
mod io;
mod spans;
mod split;
mod synthetic;
mod types;

pub use fuse::fuse_modalities;
pub use io::{load_and_validate, load_dir, save, save_dir, validate, DATA_FILE, MANIFEST_FILE};
pub use spans::average_over_spans;
pub use split::{speaker_disjoint_split, train_validation_split, SplitReport};
pub use synthetic::{generate_synthetic, SyntheticCorpus, SyntheticSpec};
pub use types::{Corpus, Dialogue, Manifest, Utterance};
