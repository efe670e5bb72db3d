//! Corpus handling: character classes, preprocessing, vocabulary,
//! pretrained embeddings, batching, synthetic corpora and gold-segmented IO.

pub mod batch;
pub mod charclass;
pub mod embeddings;
pub mod preprocess;
pub mod segmented;
pub mod synth;
pub mod vocab;

pub use batch::make_batches;
pub use charclass::{CharClass, CharClassTable};
pub use embeddings::{load_pretrained, CoverageReport};
pub use preprocess::{
    preprocess_line, FragmentText, LineItem, PreprocessedLine, Punc, Sym, ENG_TOKEN, EOS_TOKEN,
    NUM_TOKEN, PUNC_TOKEN, SENT_END_TOKEN, UNK_TOKEN,
};
pub use segmented::{
    enforce_max_word_len, read_segmented, read_segmented_str, render_segmented_line,
    render_segmented_placeholders, GuidelineExample, OverlongPolicy,
};
pub use synth::{random_lexicon, zipf_probs, SynthCorpus, SynthSpec, GREEK_ALPHABET};
pub use vocab::{Vocabulary, ENG_ID, EOS_ID, NUM_ID, NUM_RESERVED, PUNC_ID, SENT_END_ID, UNK_ID};
