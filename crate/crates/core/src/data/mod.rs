//! Synthetic hierarchical data and loaders for matrices, tensors, labels
//! and vocabularies.

mod io;
mod synthetic;

pub use io::{
    load_labels, load_matrix, load_tensor, load_vocab, parse_labels, parse_matrix_csv,
    parse_vocab, Labels,
};
pub use synthetic::{gen_synthetic, Block, SyntheticData, SyntheticSpec};
