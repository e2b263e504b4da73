//! Vocabulary, TF-IDF statistics, skip-gram embeddings and document
//! featurization.

mod embeddings;
mod layers;
mod skipgram;
mod tfidf;
mod vocab;

pub use embeddings::{bag_of_words, doc_vector, load_embeddings, term_counts, write_embeddings, EmbeddingMatrix};
pub use layers::{load_layer_features, select_layers, LayerFeatures, LayerStrategy};
pub use skipgram::{sgns_pair_loss_grad, train_skipgram, SgnsPairGrad, SkipGramConfig};
pub use tfidf::{compute_tfidf, TfIdfTable};
pub use vocab::{build_vocab, Vocabulary};
