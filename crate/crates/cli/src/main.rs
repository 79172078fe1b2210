use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use igkit::inputs::{legal_act_examples, read_statements, statement_examples};
use igkit::pipeline::write_output;
use igkit::serve::{serve, AppState};
use igkit::{run_pipeline, PipelineConfig, PipelineError, Stage};
use igkit_core::classifier::{
    classify_statement, LegalActModel, StatementModel, StatementType, TrainConfig,
};
use igkit_core::conllu::parse_conllu;
use igkit_core::eval::component_prf;
use igkit_core::graph::{build_hypergraph, EntityLexicon, HyperedgeUnit};
use igkit_core::metrics::{metrics_report, Denominator, MetricsConfig, VisibilityWeights};
use igkit_core::splitter::{expand, AtomicStatement};
use igkit_core::store::{read_json, write_atomic, CorpusStore};
use igkit_core::tagger::{RuleFile, TaggedStatement, Tagger};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "igkit",
    version,
    about = "Institutional Grammar annotation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline, or one stage of it.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        stage: Option<Stage>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a statement-type or legal-act model.
    Train {
        #[arg(long, value_enum, default_value_t = ModelChoice::Statement)]
        kind: ModelChoice,
        /// CoNLL-U with `# stype` comments, or JSON lines.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Vocabulary size; 70 for statements and 80 for legal acts by default.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        trees: Option<usize>,
    },
    /// Classify statements by IG type; prints JSON lines.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Tag CoNLL-U sentences; prints annotation JSON.
    Tag {
        #[arg(long)]
        input: PathBuf,
        /// Type for every sentence; otherwise `# stype` comments, then the model.
        #[arg(long)]
        stype: Option<StatementType>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Also print atomic statements.
        #[arg(long)]
        split: bool,
    },
    /// Visibility and centrality report from annotation or atomic JSON.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scatter: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long, value_enum, default_value_t = DenominatorChoice::Atomic)]
        denominator: DenominatorChoice,
    },
    /// Score predicted annotations against gold; table on stdout.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        layer: Option<StatementType>,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Serve the review API over the pipeline's store.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelChoice {
    Statement,
    LegalAct,
}

#[derive(Clone, Copy, ValueEnum)]
enum DenominatorChoice {
    Atomic,
    Statement,
}

/// Write to stdout; a closed pipe ends the process quietly.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn print_json<T: Serialize>(value: &T) {
    emit(&(serde_json::to_string_pretty(value).expect("serializable") + "\n"));
}

fn train(
    kind: ModelChoice,
    input: &Path,
    out: &Path,
    seed: u64,
    k: Option<usize>,
    trees: Option<usize>,
) -> Result<(), PipelineError> {
    let mut cfg = match kind {
        ModelChoice::Statement => TrainConfig::statement_type(seed),
        ModelChoice::LegalAct => TrainConfig::legal_act(seed),
    };
    if let Some(k) = k {
        cfg.k = k;
    }
    if let Some(n) = trees {
        cfg.forest.n_trees = n;
    }
    let fail = |e: igkit_core::classifier::ClassifierError| PipelineError::input(input, e);
    let saved = match kind {
        ModelChoice::Statement => {
            let (texts, labels) = statement_examples(input)?;
            let texts: Vec<&str> = texts.iter().map(String::as_str).collect();
            StatementModel::train(&texts, &labels, &cfg)
                .map_err(fail)?
                .save(out)
        }
        ModelChoice::LegalAct => {
            let (texts, labels) = legal_act_examples(input)?;
            let texts: Vec<&str> = texts.iter().map(String::as_str).collect();
            LegalActModel::train(&texts, &labels, &cfg)
                .map_err(fail)?
                .save(out)
        }
    };
    saved.map_err(|e| PipelineError::input(out, e))
}

#[derive(Serialize)]
struct ClassifiedLine<'a> {
    id: &'a str,
    stype: StatementType,
    confidence: f64,
}

fn classify(model: &Path, input: &Path) -> Result<(), PipelineError> {
    let m = StatementModel::load(model).map_err(|e| PipelineError::input(model, e))?;
    for (id, text, _) in read_statements(input)? {
        let c = classify_statement(&text, &m);
        let line = ClassifiedLine {
            id: &id,
            stype: c.stype,
            confidence: c.confidence,
        };
        emit(&(serde_json::to_string(&line).expect("serializable") + "\n"));
    }
    Ok(())
}

fn tag(
    input: &Path,
    stype: Option<StatementType>,
    model: Option<&Path>,
    rules: Option<&Path>,
    split: bool,
) -> Result<(), PipelineError> {
    let tagger = match rules {
        Some(p) => RuleFile::load(p)
            .and_then(Tagger::from_rule_file)
            .map_err(|e| PipelineError::input(p, e))?,
        None => Tagger::default(),
    };
    let model = model
        .map(|p| StatementModel::load(p).map_err(|e| PipelineError::input(p, e)))
        .transpose()?;
    let text = std::fs::read_to_string(input).map_err(|e| PipelineError::input(input, e))?;
    let trees = parse_conllu(&text).map_err(|e| PipelineError::input(input, e))?;
    let mut tagged = Vec::new();
    for (i, tree) in trees.iter().enumerate() {
        let id = tree
            .sent_id()
            .map_or_else(|| format!("{}", i + 1), str::to_string);
        let t = match (stype, igkit::inputs::gold_stype(tree), &model) {
            (Some(t), _, _) => t,
            (None, Some(Ok(t)), _) => t,
            (None, Some(Err(e)), _) => {
                return Err(PipelineError::input(input, format!("{id}: {e}")))
            }
            (None, None, Some(m)) => classify_statement(&tree.text(), m).stype,
            (None, None, None) => {
                return Err(PipelineError::input(
                    input,
                    format!("{id}: no --stype, no stype comment and no --model"),
                ))
            }
        };
        tagged.push(tagger.route_and_tag(tree, t).with_id(id));
    }
    if split {
        let atomics: Vec<AtomicStatement> = tagged.iter().flat_map(expand).collect();
        print_json(&serde_json::json!({ "statements": tagged, "atomics": atomics }));
    } else {
        print_json(&tagged);
    }
    Ok(())
}

/// Atomic statements from a file of either tagged statements or atomics.
fn load_atomics(path: &Path) -> Result<Vec<AtomicStatement>, PipelineError> {
    let value: serde_json::Value = read_json(path).map_err(|e| PipelineError::input(path, e))?;
    if let Ok(tagged) = serde_json::from_value::<Vec<TaggedStatement>>(value.clone()) {
        return Ok(tagged.iter().flat_map(expand).collect());
    }
    serde_json::from_value(value).map_err(|e| {
        PipelineError::input(
            path,
            format!("neither tagged statements nor atomic statements: {e}"),
        )
    })
}

#[allow(clippy::too_many_arguments)]
fn metrics(
    input: &Path,
    lexicon: &Path,
    weights: Option<&Path>,
    out: &Path,
    scatter: Option<&Path>,
    s: usize,
    denominator: DenominatorChoice,
) -> Result<(), PipelineError> {
    let atomics = load_atomics(input)?;
    let lex = EntityLexicon::load(lexicon).map_err(|e| PipelineError::input(lexicon, e))?;
    let weights = match weights {
        Some(p) => VisibilityWeights::load(p).map_err(|e| PipelineError::input(p, e))?,
        None => VisibilityWeights::default(),
    };
    let cfg = MetricsConfig {
        weights,
        s,
        denominator: match denominator {
            DenominatorChoice::Atomic => Denominator::Atomic,
            DenominatorChoice::Statement => Denominator::Statement,
        },
    };
    let h = build_hypergraph(&atomics, &lex, HyperedgeUnit::Atomic);
    let report = metrics_report(&h, &atomics, &lex, &cfg)
        .map_err(|e| PipelineError::stage(Stage::Metrics, None, e))?;
    for d in &report.diagnostics {
        log::warn!("{d}");
    }
    write_atomic(out, report.to_csv().as_bytes()).map_err(|e| PipelineError::input(out, e))?;
    if let Some(p) = scatter {
        write_output(p, &report.scatter())?;
    }
    emit(&report.to_csv());
    Ok(())
}

fn eval(
    pred: &Path,
    gold: &Path,
    layer: Option<StatementType>,
    json: Option<&Path>,
) -> Result<(), PipelineError> {
    let p: Vec<TaggedStatement> = read_json(pred).map_err(|e| PipelineError::input(pred, e))?;
    let g: Vec<TaggedStatement> = read_json(gold).map_err(|e| PipelineError::input(gold, e))?;
    let report = component_prf(&p, &g, layer).map_err(|e| PipelineError::input(pred, e))?;
    emit(&report.to_table());
    if let Some(path) = json {
        write_atomic(path, (report.to_json() + "\n").as_bytes())
            .map_err(|e| PipelineError::input(path, e))?;
    }
    Ok(())
}

fn serve_cmd(config: &Path, port: u16) -> Result<(), PipelineError> {
    let cfg = PipelineConfig::load(config)?;
    let store = CorpusStore::open(cfg.store_root())
        .map_err(|e| PipelineError::input(cfg.store_root(), e))?;
    let lexicon = EntityLexicon::load(&cfg.paths.lexicon)
        .map_err(|e| PipelineError::input(&cfg.paths.lexicon, e))?;
    let weights = match &cfg.paths.weights {
        Some(p) => VisibilityWeights::load(p).map_err(|e| PipelineError::input(p, e))?,
        None => VisibilityWeights::default(),
    };
    let metrics = MetricsConfig {
        weights,
        s: cfg.metrics.s,
        denominator: cfg.metrics.denominator,
    };
    let state = Arc::new(AppState::new(
        store,
        lexicon,
        metrics,
        cfg.metrics.hyperedge_unit,
    ));
    let rt = tokio::runtime::Runtime::new().map_err(|e| PipelineError::input("runtime", e))?;
    rt.block_on(serve(state, cfg.paths.ui_dir.clone(), port))
        .map_err(|e| PipelineError::input(format!("port {port}"), e))
}

fn dispatch(cmd: Command) -> Result<(), PipelineError> {
    match cmd {
        Command::Run {
            config,
            stage,
            seed,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let manifest = run_pipeline(&cfg, stage)?;
            emit(&manifest.to_json());
            Ok(())
        }
        Command::Train {
            kind,
            input,
            out,
            seed,
            k,
            trees,
        } => train(kind, &input, &out, seed, k, trees),
        Command::Classify { model, input } => classify(&model, &input),
        Command::Tag {
            input,
            stype,
            model,
            rules,
            split,
        } => tag(&input, stype, model.as_deref(), rules.as_deref(), split),
        Command::Metrics {
            input,
            lexicon,
            weights,
            out,
            scatter,
            s,
            denominator,
        } => metrics(
            &input,
            &lexicon,
            weights.as_deref(),
            &out,
            scatter.as_deref(),
            s,
            denominator,
        ),
        Command::Eval {
            pred,
            gold,
            layer,
            json,
        } => eval(&pred, &gold, layer, json.as_deref()),
        Command::Serve { config, port } => serve_cmd(&config, port),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
