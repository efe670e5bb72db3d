//! `slm` — train, decode, score and sample segmental language models.

mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slm::corpus::{
    enforce_max_word_len, load_pretrained, preprocess_line, read_segmented,
    render_segmented_placeholders, CharClassTable, Sym, SynthSpec, Vocabulary,
    GREEK_ALPHABET,
};
use slm::eval::{error_stats, score};
use slm::model::{
    generate, load_model, read_sidecar, save_tensors, write_sidecar, Sample, Segmentation,
    Sidecar, SlmParameters,
};
use slm::postprocess::RuleSet;
use slm::train::train;
use slm::{Real, Result, SlmError};

use config::{OverlongPolicy, RunConfig};

#[derive(Parser)]
#[command(name = "slm", version, about = "Unsupervised word segmentation with a segmental language model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on raw (and optionally guideline-segmented) text.
    Train {
        /// Run configuration file (flat `key value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override any config key, e.g. --set total_steps=1000. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Segment raw text with a trained model.
    Segment {
        /// Directory holding model.ckpt, model.cfg and vocab.txt.
        #[arg(long)]
        model: PathBuf,
        /// Raw input text; one line per sentence.
        #[arg(long)]
        input: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Apply rule-based particle splitting after decoding.
        #[arg(long)]
        postprocess: bool,
        /// Rule file (defaults to the built-in particle list).
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Score a predicted segmentation against gold.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Sample segmented sentences from a trained model.
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-sentence character budget.
        #[arg(long, default_value_t = 200)]
        max_chars: usize,
    },
    /// Emit a synthetic corpus with known gold segmentation.
    Synth {
        /// Output directory for fragments.txt, gold.txt and lexicon.txt.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        lexicon_size: usize,
        #[arg(long, default_value_t = 8)]
        alphabet_size: usize,
        #[arg(long, default_value_t = 1)]
        min_word_len: usize,
        #[arg(long, default_value_t = 3)]
        max_word_len: usize,
        #[arg(long, default_value_t = 3)]
        min_words: usize,
        #[arg(long, default_value_t = 8)]
        max_words: usize,
        #[arg(long, default_value_t = 10000)]
        num_fragments: usize,
        /// Zipf exponent for word frequencies.
        #[arg(long, default_value_t = 1.0)]
        zipf_s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are successful exits; anything else is a usage
            // problem, reported as a validation error
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Train { config, overrides } => cmd_train(config, overrides),
        Command::Segment { model, input, output, postprocess, rules } => {
            cmd_segment(&model, &input, output.as_deref(), postprocess, rules.as_deref())
        }
        Command::Eval { gold, pred } => cmd_eval(&gold, &pred),
        Command::Generate { model, count, seed, max_chars } => {
            cmd_generate(&model, count, seed, max_chars)
        }
        Command::Synth {
            out,
            lexicon_size,
            alphabet_size,
            min_word_len,
            max_word_len,
            min_words,
            max_words,
            num_fragments,
            zipf_s,
            seed,
        } => cmd_synth(
            &out,
            lexicon_size,
            alphabet_size,
            (min_word_len, max_word_len),
            (min_words, max_words),
            num_fragments,
            zipf_s,
            seed,
        ),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

/// 1 for validation problems (bad input, bad config), 2 for runtime failures
/// (I/O, corrupt checkpoints, numeric blow-ups).
fn exit_code(e: &SlmError) -> i32 {
    match e {
        SlmError::InvalidArgument(_)
        | SlmError::Config(_)
        | SlmError::Parse { .. }
        | SlmError::Vocab(_)
        | SlmError::Shape(_) => 1,
        SlmError::Io { .. } | SlmError::Checkpoint(_) | SlmError::NonFinite(_) => 2,
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| SlmError::io(path.display().to_string(), e))?;
    Ok(body.lines().map(|l| l.to_string()).collect())
}

fn charclass_table(cfg_path: Option<&PathBuf>) -> Result<CharClassTable> {
    match cfg_path {
        Some(p) => CharClassTable::from_file(p),
        None => Ok(CharClassTable::default_table()),
    }
}

/// Collect the punctuation-free fragments of raw text lines.
fn raw_fragments(paths: &[&PathBuf], table: &CharClassTable) -> Result<Vec<Vec<Sym>>> {
    let mut out = Vec::new();
    for path in paths {
        for line in read_lines(path)? {
            let pre = preprocess_line(&line, table);
            for f in pre.fragments() {
                out.push(f.syms.clone());
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// train

fn cmd_train(config_path: Option<PathBuf>, overrides: Vec<String>) -> Result<()> {
    let mut cfg = match &config_path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&overrides)?;
    cfg.validate()?;
    match cfg.precision.as_str() {
        "f32" => run_train::<f32>(&cfg),
        _ => run_train::<f64>(&cfg),
    }
}

fn run_train<F: Real>(cfg: &RunConfig) -> Result<()> {
    let train_file = cfg
        .train_file
        .as_ref()
        .ok_or_else(|| SlmError::InvalidArgument("train_file is required".into()))?;
    let table = charclass_table(cfg.charclass_file.as_ref())?;

    let mut sources: Vec<&PathBuf> = vec![train_file];
    if let Some(extra) = &cfg.extra_train_file {
        sources.push(extra);
    }
    let fragments = raw_fragments(&sources, &table)?;
    if fragments.is_empty() {
        return Err(SlmError::InvalidArgument("no fragments found in training text".into()));
    }
    let vocab = Vocabulary::build(fragments.iter().map(|f| f.as_slice()));
    let raw: Vec<Sample> =
        fragments.iter().map(|f| Sample::unsupervised(vocab.encode_fragment(f))).collect();
    println!(
        "corpus: {} fragments, vocabulary of {} entries",
        raw.len(),
        vocab.len()
    );

    let mut guideline: Vec<Sample> = Vec::new();
    if let Some(gpath) = &cfg.guideline_file {
        let examples = read_segmented(gpath, &table)?;
        let taken: Vec<_> = examples.into_iter().take(cfg.guideline_count).collect();
        let policy = match cfg.overlong_policy {
            OverlongPolicy::Skip => slm::corpus::OverlongPolicy::Skip,
            OverlongPolicy::Split => slm::corpus::OverlongPolicy::SplitGreedy,
        };
        let (kept, affected) = enforce_max_word_len(taken, cfg.max_segment_len, policy);
        if affected > 0 {
            println!(
                "guideline: {affected} examples had words over {} characters ({})",
                cfg.max_segment_len,
                match cfg.overlong_policy {
                    OverlongPolicy::Skip => "skipped",
                    OverlongPolicy::Split => "split greedily",
                }
            );
        }
        guideline = kept
            .iter()
            .map(|ex| Sample {
                syms: vocab.encode_fragment(&ex.syms),
                gold: Some(ex.gold.clone()),
            })
            .collect();
        println!("guideline: {} gold-segmented examples in the stream", guideline.len());
    }

    let model_cfg = cfg.model_config(vocab.model_alphabet_size());
    model_cfg.validate()?;
    let mut params =
        SlmParameters::<F>::init(&model_cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    if let Some(emb_path) = &cfg.pretrained_file {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xE4B);
        let (matrix, report) = load_pretrained(emb_path, &vocab, cfg.embed_dim, &mut rng)?;
        params.embed = matrix;
        println!(
            "pretrained embeddings: {}/{} rows covered ({:.1}%), {} entries unmatched",
            report.covered,
            report.total,
            100.0 * report.fraction(),
            report.unmatched
        );
    }

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| SlmError::io(cfg.out_dir.display().to_string(), e))?;
    let log_path = cfg.out_dir.join("loss.log");
    let mut log = std::fs::File::create(&log_path)
        .map_err(|e| SlmError::io(log_path.display().to_string(), e))?;

    let mut aborted = None;
    if cfg.total_steps > 0 {
        let schedule = cfg.schedule();
        let out = train(&mut params, &raw, &guideline, &schedule, &mut |step, loss| {
            let _ = writeln!(log, "{step} {loss}");
            if step % schedule.log_every == 0 {
                println!("step {step}: loss {loss:.6}");
            }
        })?;
        params = out.params;
        aborted = out.aborted;
    }

    save_artifacts(&params, &vocab, &cfg.precision, &cfg.out_dir)?;
    println!("wrote model to {}", cfg.out_dir.display());
    if let Some(msg) = aborted {
        return Err(SlmError::NonFinite(format!(
            "{msg}; last-good checkpoint written to {}",
            cfg.out_dir.display()
        )));
    }
    Ok(())
}

fn save_artifacts<F: Real>(
    params: &SlmParameters<F>,
    vocab: &Vocabulary,
    precision: &str,
    out_dir: &Path,
) -> Result<()> {
    save_tensors(params, &out_dir.join("model.ckpt"))?;
    write_sidecar(
        &Sidecar {
            config: params.config.clone(),
            precision: precision.to_string(),
            vocab_hash: vocab.hash(),
        },
        &out_dir.join("model.cfg"),
    )?;
    vocab.save(&out_dir.join("vocab.txt"))
}

// ---------------------------------------------------------------------------
// segment

fn cmd_segment(
    model_dir: &Path,
    input: &Path,
    output: Option<&Path>,
    postprocess: bool,
    rules_path: Option<&Path>,
) -> Result<()> {
    let sidecar = read_sidecar(&model_dir.join("model.cfg"))?;
    match sidecar.precision.as_str() {
        "f32" => run_segment::<f32>(model_dir, input, output, postprocess, rules_path),
        _ => run_segment::<f64>(model_dir, input, output, postprocess, rules_path),
    }
}

fn run_segment<F: Real>(
    model_dir: &Path,
    input: &Path,
    output: Option<&Path>,
    postprocess: bool,
    rules_path: Option<&Path>,
) -> Result<()> {
    let vocab = Vocabulary::load(&model_dir.join("vocab.txt"))?;
    let (params, _) = load_model::<F>(
        &model_dir.join("model.ckpt"),
        &model_dir.join("model.cfg"),
        Some(vocab.hash()),
    )?;
    let rules = if postprocess {
        Some(match rules_path {
            Some(p) => RuleSet::from_file(p)?,
            None => RuleSet::default_rules(),
        })
    } else {
        None
    };
    let table = CharClassTable::default_table();
    let mut out_lines = Vec::new();
    for line in read_lines(input)? {
        let pre = preprocess_line(&line, &table);
        let mut segs: Vec<Segmentation> = Vec::new();
        for frag in pre.fragments() {
            let syms = vocab.encode_fragment(&frag.syms);
            let (mut seg, _) = params.viterbi_segment(&syms)?;
            if let Some(rules) = &rules {
                seg = rules.apply(&frag.syms, &seg)?;
            }
            segs.push(seg);
        }
        out_lines.push(render_segmented_placeholders(&pre, &segs)?);
    }
    write_output(output, &out_lines)
}

fn write_output(output: Option<&Path>, lines: &[String]) -> Result<()> {
    let mut body = lines.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    match output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| SlmError::io(path.display().to_string(), e)),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// eval

fn cmd_eval(gold: &Path, pred: &Path) -> Result<()> {
    let gold_lines = read_lines(gold)?;
    let pred_lines = read_lines(pred)?;
    let report = score(&gold_lines, &pred_lines)?;
    let errors = error_stats(&gold_lines, &pred_lines)?;
    println!(
        "precision {:.4}  recall {:.4}  F1 {:.4}  ({} gold words, {} predicted, {} correct)",
        report.precision,
        report.recall,
        report.f1,
        report.gold_words,
        report.pred_words,
        report.correct_words
    );
    println!(
        "boundary insertions {}  deletions {}",
        errors.insertions, errors.deletions
    );
    println!("---");
    print!("{}", report.to_kv());
    print!("{}", errors.to_kv());
    Ok(())
}

// ---------------------------------------------------------------------------
// generate

fn cmd_generate(model_dir: &Path, count: usize, seed: u64, max_chars: usize) -> Result<()> {
    let sidecar = read_sidecar(&model_dir.join("model.cfg"))?;
    match sidecar.precision.as_str() {
        "f32" => run_generate::<f32>(model_dir, count, seed, max_chars),
        _ => run_generate::<f64>(model_dir, count, seed, max_chars),
    }
}

fn run_generate<F: Real>(
    model_dir: &Path,
    count: usize,
    seed: u64,
    max_chars: usize,
) -> Result<()> {
    let vocab = Vocabulary::load(&model_dir.join("vocab.txt"))?;
    let (params, _) = load_model::<F>(
        &model_dir.join("model.ckpt"),
        &model_dir.join("model.cfg"),
        Some(vocab.hash()),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let sentence = generate(&params, &mut rng, max_chars)?;
        let words: Vec<String> = sentence
            .segments
            .iter()
            .map(|seg| seg.iter().map(|m| vocab.render_model_id(*m)).collect())
            .collect();
        println!("{}", words.join(" "));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// synth

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    out: &Path,
    lexicon_size: usize,
    alphabet_size: usize,
    word_len: (usize, usize),
    words_per_fragment: (usize, usize),
    num_fragments: usize,
    zipf_s: f64,
    seed: u64,
) -> Result<()> {
    if alphabet_size == 0 || alphabet_size > GREEK_ALPHABET.len() {
        return Err(SlmError::InvalidArgument(format!(
            "alphabet_size must be in 1..={}",
            GREEK_ALPHABET.len()
        )));
    }
    let lexicon = slm::corpus::random_lexicon(
        &GREEK_ALPHABET[..alphabet_size],
        lexicon_size,
        word_len.0,
        word_len.1,
        seed,
    )?;
    let spec = SynthSpec {
        word_probs: slm::corpus::zipf_probs(lexicon.len(), zipf_s),
        lexicon,
        words_per_fragment,
        num_fragments,
        seed: seed ^ 0x5F17,
    };
    let corpus = spec.generate()?;
    std::fs::create_dir_all(out).map_err(|e| SlmError::io(out.display().to_string(), e))?;
    let write = |name: &str, lines: &[String]| -> Result<()> {
        let path = out.join(name);
        let mut body = lines.join("\n");
        body.push('\n');
        std::fs::write(&path, body).map_err(|e| SlmError::io(path.display().to_string(), e))
    };
    write("fragments.txt", &corpus.fragments)?;
    write("gold.txt", &corpus.gold_lines())?;
    write("lexicon.txt", &spec.lexicon)?;
    println!(
        "wrote {} fragments over a {}-word lexicon to {}",
        corpus.fragments.len(),
        spec.lexicon.len(),
        out.display()
    );
    Ok(())
}
