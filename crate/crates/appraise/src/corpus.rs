//! Synthetic app corpus: a seeded generator with class-conditional planted
//! signal in both the executable and the UI channel, the on-disk bundle
//! format (`program.sir`, `layout/*.sxml`, `meta`), and the corpus
//! manifest.
//!
//! Programs are generated as structured statement trees and lowered to the
//! flat IR with rotated loops (condition at the bottom, taken edge jumping
//! back), so every generated CFG is reducible and loop conditions are
//! back-edge sources. Reference graphs between layout documents only point
//! forward, so they are acyclic by construction.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::callgraph::build_call_graph;
use crate::cfg::CfgError;
use crate::ir::{self, InstrKind, IrError, Method, Program, TypeId, Vocabulary};
use crate::layout::{parse_layout, LayoutAcc, LayoutDoc, LayoutError, LayoutNode, UiVocabulary};
use crate::records::{AppRecord, Label};
use crate::semvec::{inter_vector, SemanticAcc};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: meta: {msg}")]
    Meta { path: PathBuf, msg: String },
    #[error("manifest: line {line}: {msg}")]
    Manifest { msg: String, line: usize },
    #[error("bundle {id}: stars {stars} outside [1, 5]")]
    StarsOutOfRange { id: String, stars: f64 },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Instruction types every generated corpus shares: arithmetic/memory
/// opcodes first, then framework API names. The two reserved types are
/// appended by the vocabulary itself.
pub const DEFAULT_INSTR_NAMES: &[&str] = &[
    "add", "sub", "mul", "div", "neg", "cmp", "load", "store", "new", "cast", "arr_get",
    "arr_put", "api_io_read", "api_io_write", "api_net_open", "api_net_send", "api_db_query",
    "api_db_put", "api_ui_draw", "api_ui_anim", "api_log_write", "api_mem_alloc",
    "api_str_format", "api_rand_next",
];

/// Known UI element types of generated layouts (M = 18, so vectors have
/// 20 slots with the legacy and custom buckets).
pub const DEFAULT_UI_NAMES: &[&str] = &[
    "LinearLayout", "FrameLayout", "RelativeLayout", "GridLayout", "TextView", "EditText",
    "Button", "ImageButton", "ImageView", "CheckBox", "RadioButton", "Switch", "SeekBar",
    "ProgressBar", "ListView", "ScrollView", "Spinner", "WebView",
];

pub fn default_vocabulary() -> Vocabulary {
    Vocabulary::new(DEFAULT_INSTR_NAMES.iter().copied()).expect("default names are unique")
}

pub fn default_ui_vocabulary() -> UiVocabulary {
    UiVocabulary::new(DEFAULT_UI_NAMES.iter().copied()).expect("default names are unique")
}

/// Knobs of the generator. `margin` scales every class-conditional
/// difference; at 0 both classes draw from identical distributions and
/// only the star ratings differ.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub seed: u64,
    pub app_count: usize,
    pub margin: f64,
    /// Fraction of apps whose call graph is acyclic; the rest get one
    /// self-recursive method.
    pub acyclic_share: f64,
    pub methods_range: (usize, usize),
    /// Statement budget per method body.
    pub instr_range: (usize, usize),
    pub docs_range: (usize, usize),
    /// Element budget per layout document.
    pub ui_nodes_range: (usize, usize),
}

impl Default for CorpusSpec {
    fn default() -> CorpusSpec {
        CorpusSpec {
            seed: 0,
            app_count: 100,
            margin: 1.0,
            acyclic_share: 1.0,
            methods_range: (3, 8),
            instr_range: (10, 30),
            docs_range: (1, 4),
            ui_nodes_range: (4, 18),
        }
    }
}

// Planted-signal strengths; class Low tilts positive, NotLow negative.
const INSTR_TILT: f64 = 0.55;
const INSTR_JITTER: f64 = 0.65;
const P_LOOP_BASE: f64 = 0.13;
const P_LOOP_TILT: f64 = 0.04;
const P_IF_BASE: f64 = 0.15;
const P_IF_TILT: f64 = 0.05;
const P_CALL: f64 = 0.08;
const P_UNKNOWN_CALL: f64 = 0.02;
const UI_TILT: f64 = 0.45;
const UI_JITTER: f64 = 0.85;
const P_CHILD_BASE: f64 = 0.55;
const P_CHILD_TILT: f64 = 0.06;
const P_LEGACY_BASE: f64 = 0.10;
const P_LEGACY_TILT: f64 = 0.05;
const P_CUSTOM_BASE: f64 = 0.12;
const P_CUSTOM_TILT: f64 = 0.06;
const P_REF: f64 = 0.12;

struct ClassProfile {
    instr_weights: Vec<f64>,
    p_loop: f64,
    p_if: f64,
    ui_weights: Vec<f64>,
    p_child: f64,
    p_legacy: f64,
    p_custom: f64,
}

impl ClassProfile {
    fn new(label: Label, margin: f64, rng: &mut ChaCha8Rng) -> ClassProfile {
        let sign = match label {
            Label::Low => 1.0,
            Label::NotLow => -1.0,
        };
        // Arithmetic/memory types tilt one way, API types the other.
        let n_instr = DEFAULT_INSTR_NAMES.len();
        let mut instr_weights = Vec::with_capacity(n_instr);
        for k in 0..n_instr {
            let tilt = if k < 12 { 1.0 } else { -1.0 };
            let w = 1.0 + sign * tilt * INSTR_TILT * margin;
            let jitter = (rng.gen_range(-INSTR_JITTER..INSTR_JITTER)).exp();
            instr_weights.push(w.max(0.05) * jitter);
        }
        // Alternate UI types between the classes.
        let n_ui = DEFAULT_UI_NAMES.len();
        let mut ui_weights = Vec::with_capacity(n_ui);
        for k in 0..n_ui {
            let tilt = if k % 2 == 0 { 1.0 } else { -1.0 };
            let w = 1.0 + sign * tilt * UI_TILT * margin;
            let jitter = (rng.gen_range(-UI_JITTER..UI_JITTER)).exp();
            ui_weights.push(w.max(0.05) * jitter);
        }
        ClassProfile {
            instr_weights,
            p_loop: P_LOOP_BASE + sign * P_LOOP_TILT * margin,
            p_if: P_IF_BASE - sign * P_IF_TILT * margin,
            ui_weights,
            p_child: (P_CHILD_BASE + sign * P_CHILD_TILT * margin).clamp(0.05, 0.85),
            p_legacy: (P_LEGACY_BASE - sign * P_LEGACY_TILT * margin).max(0.0),
            p_custom: (P_CUSTOM_BASE + sign * P_CUSTOM_TILT * margin).max(0.0),
        }
    }
}

/// One generated app, in memory.
#[derive(Debug, Clone)]
pub struct GeneratedApp {
    pub id: String,
    pub stars: f64,
    pub label: Label,
    pub program: Program,
    pub docs: Vec<LayoutDoc>,
}

/// Generates app `index` of the corpus; deterministic in `(spec.seed, index)`.
pub fn generate_app(spec: &CorpusSpec, index: usize) -> GeneratedApp {
    let mut rng = ChaCha8Rng::seed_from_u64(
        spec.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let label = if index % 2 == 0 { Label::Low } else { Label::NotLow };
    // Quantized to the 9 fractional digits every file format carries, so
    // in-memory and re-parsed values agree exactly.
    let stars = match label {
        Label::Low => quantize(1.0 + 2.0 * rng.gen::<f64>()).min(2.999999999),
        Label::NotLow => quantize(5.0 - 2.0 * rng.gen::<f64>()).max(3.000000001),
    };
    let profile = ClassProfile::new(label, spec.margin, &mut rng);
    let recursive = rng.gen::<f64>() >= spec.acyclic_share;

    let program = gen_program(spec, &profile, recursive, &mut rng);
    let docs = gen_docs(spec, &profile, &mut rng);
    GeneratedApp {
        id: format!("app{index:04}"),
        stars,
        label,
        program,
        docs,
    }
}

fn quantize(stars: f64) -> f64 {
    (stars * 1e9).round() / 1e9
}

fn range_sample(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    if lo >= hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn weighted_idx(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        x -= w;
        if x <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

enum Stmt {
    Instr(TypeId),
    Call(String),
    If { then_b: Vec<Stmt>, else_b: Vec<Stmt> },
    Loop { body: Vec<Stmt> },
}

fn gen_program(
    spec: &CorpusSpec,
    profile: &ClassProfile,
    recursive: bool,
    rng: &mut ChaCha8Rng,
) -> Program {
    let vocab = default_vocabulary();
    let cmp = vocab.id("cmp").expect("cmp in default vocabulary");
    let n_methods = range_sample(rng, spec.methods_range);
    let names: Vec<String> = (0..n_methods).map(|i| format!("m{i}")).collect();
    let recursive_at = if recursive && n_methods > 0 {
        Some(rng.gen_range(0..n_methods))
    } else {
        None
    };

    let mut methods = Vec::with_capacity(n_methods);
    for i in 0..n_methods {
        let callables = &names[i + 1..];
        let mut budget = range_sample(rng, spec.instr_range);
        let mut stmts = gen_block(profile, &vocab, callables, 0, &mut budget, rng);
        if stmts.is_empty() {
            stmts.push(Stmt::Instr(TypeId(1 + weighted_idx(rng, &profile.instr_weights) as u32)));
        }
        if recursive_at == Some(i) {
            stmts.push(Stmt::Call(names[i].clone()));
        }
        let mut kinds = Vec::new();
        lower_block(&stmts, cmp, &mut kinds);
        kinds.push(InstrKind::Ret);
        methods.push(Method::new(names[i].clone(), kinds));
    }
    Program::new(methods, vec!["m0".to_string()]).expect("generated program is valid")
}

fn gen_block(
    profile: &ClassProfile,
    vocab: &Vocabulary,
    callables: &[String],
    depth: usize,
    budget: &mut usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Stmt> {
    let mut stmts = Vec::new();
    let max_len = 8;
    while *budget > 0 && stmts.len() < max_len {
        *budget -= 1;
        let u = rng.gen::<f64>();
        if depth < 3 && u < profile.p_loop {
            let mut body = gen_block(profile, vocab, callables, depth + 1, budget, rng);
            if body.is_empty() {
                body.push(draw_instr(profile, rng));
            }
            stmts.push(Stmt::Loop { body });
        } else if depth < 4 && u < profile.p_loop + profile.p_if {
            let mut then_b = gen_block(profile, vocab, callables, depth + 1, budget, rng);
            if then_b.is_empty() {
                then_b.push(draw_instr(profile, rng));
            }
            let else_b = if rng.gen::<f64>() < 0.4 {
                let mut e = gen_block(profile, vocab, callables, depth + 1, budget, rng);
                if e.is_empty() {
                    e.push(draw_instr(profile, rng));
                }
                e
            } else {
                Vec::new()
            };
            stmts.push(Stmt::If { then_b, else_b });
        } else if u < profile.p_loop + profile.p_if + P_CALL && !callables.is_empty() {
            let callee = callables[rng.gen_range(0..callables.len())].clone();
            stmts.push(Stmt::Call(callee));
        } else if u < profile.p_loop + profile.p_if + P_CALL + P_UNKNOWN_CALL {
            stmts.push(Stmt::Call(format!("ext.lib.fn{}", rng.gen_range(0..50))));
        } else {
            stmts.push(draw_instr(profile, rng));
        }
    }
    stmts
}

fn draw_instr(profile: &ClassProfile, rng: &mut ChaCha8Rng) -> Stmt {
    Stmt::Instr(TypeId(1 + weighted_idx(rng, &profile.instr_weights) as u32))
}

/// Lowers a statement tree to flat instructions. Loops come out rotated
/// (body first, conditional jump back at the bottom); `if` branches jump
/// forward over their bodies.
fn lower_block(stmts: &[Stmt], cmp: TypeId, out: &mut Vec<InstrKind>) {
    for s in stmts {
        match s {
            Stmt::Instr(t) => out.push(InstrKind::Plain(*t)),
            Stmt::Call(name) => out.push(InstrKind::Call {
                callee: name.clone(),
            }),
            Stmt::Loop { body } => {
                let start = out.len();
                lower_block(body, cmp, out);
                debug_assert!(out.len() > start, "loop bodies are non-empty");
                out.push(InstrKind::CondJump {
                    type_id: cmp,
                    target: start,
                });
            }
            Stmt::If { then_b, else_b } => {
                let cond_at = out.len();
                out.push(InstrKind::CondJump {
                    type_id: cmp,
                    target: usize::MAX,
                });
                lower_block(then_b, cmp, out);
                if else_b.is_empty() {
                    let end = out.len();
                    if let InstrKind::CondJump { target, .. } = &mut out[cond_at] {
                        *target = end;
                    }
                } else {
                    let jump_at = out.len();
                    out.push(InstrKind::Jump { target: usize::MAX });
                    let else_start = out.len();
                    if let InstrKind::CondJump { target, .. } = &mut out[cond_at] {
                        *target = else_start;
                    }
                    lower_block(else_b, cmp, out);
                    let end = out.len();
                    if let InstrKind::Jump { target } = &mut out[jump_at] {
                        *target = end;
                    }
                }
            }
        }
    }
}

fn gen_docs(spec: &CorpusSpec, profile: &ClassProfile, rng: &mut ChaCha8Rng) -> Vec<LayoutDoc> {
    let n_docs = range_sample(rng, spec.docs_range);
    let names: Vec<String> = (0..n_docs).map(|i| format!("doc{i}")).collect();
    let mut docs = Vec::with_capacity(n_docs);
    for i in 0..n_docs {
        let mut budget = range_sample(rng, spec.ui_nodes_range);
        let root = gen_ui_element(profile, &names[i + 1..], 0, &mut budget, rng);
        docs.push(LayoutDoc {
            name: names[i].clone(),
            root,
        });
    }
    docs
}

fn gen_ui_element(
    profile: &ClassProfile,
    refs: &[String],
    depth: usize,
    budget: &mut usize,
    rng: &mut ChaCha8Rng,
) -> LayoutNode {
    let tag = {
        let u = rng.gen::<f64>();
        if u < profile.p_legacy {
            format!("android.support.v{}.Widget{}", rng.gen_range(4..8), rng.gen_range(0..6))
        } else if u < profile.p_legacy + profile.p_custom {
            format!("com.app.Custom{}", rng.gen_range(0..8))
        } else {
            DEFAULT_UI_NAMES[weighted_idx(rng, &profile.ui_weights)].to_string()
        }
    };
    let mut children = Vec::new();
    while *budget > 0 && children.len() < 4 && depth < 6 && rng.gen::<f64>() < profile.p_child {
        *budget -= 1;
        if !refs.is_empty() && depth > 0 && rng.gen::<f64>() < P_REF {
            children.push(LayoutNode::Reference {
                target: refs[rng.gen_range(0..refs.len())].clone(),
            });
        } else {
            children.push(gen_ui_element(profile, refs, depth + 1, budget, rng));
        }
    }
    LayoutNode::Element { tag, children }
}

/// Renders a layout tree back to markup.
pub fn render_layout(doc: &LayoutDoc) -> String {
    fn walk(node: &LayoutNode, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match node {
            LayoutNode::Reference { target } => {
                out.push_str(&format!("{pad}<ref target=\"{target}\"/>\n"));
            }
            LayoutNode::Element { tag, children } => {
                if children.is_empty() {
                    out.push_str(&format!("{pad}<{tag}/>\n"));
                } else {
                    out.push_str(&format!("{pad}<{tag}>\n"));
                    for c in children {
                        walk(c, indent + 1, out);
                    }
                    out.push_str(&format!("{pad}</{tag}>\n"));
                }
            }
        }
    }
    let mut out = String::new();
    walk(&doc.root, 0, &mut out);
    out
}

/// Manifest of a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub stars: f64,
    pub label: Label,
    pub rel_path: String,
}

pub fn render_manifest(m: &Manifest) -> String {
    let mut out = String::from("manifest v1\n");
    for e in &m.entries {
        out.push_str(&format!(
            "{}\t{:.9}\t{}\t{}\n",
            e.id, e.stars, e.label, e.rel_path
        ));
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Manifest, CorpusError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "manifest v1")) => {}
        _ => {
            return Err(CorpusError::Manifest {
                msg: "missing `manifest v1` header".into(),
                line: 1,
            })
        }
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(CorpusError::Manifest {
                msg: format!("expected 4 tab-separated fields, got {}", parts.len()),
                line: i + 1,
            });
        }
        let stars: f64 = parts[1].parse().map_err(|_| CorpusError::Manifest {
            msg: format!("bad stars `{}`", parts[1]),
            line: i + 1,
        })?;
        let label = match parts[2] {
            "0" => Label::Low,
            "1" => Label::NotLow,
            other => {
                return Err(CorpusError::Manifest {
                    msg: format!("bad label `{other}`"),
                    line: i + 1,
                })
            }
        };
        entries.push(ManifestEntry {
            id: parts[0].to_string(),
            stars,
            label,
            rel_path: parts[3].to_string(),
        });
    }
    Ok(Manifest { entries })
}

/// Generates and writes a whole corpus: `manifest`, `vocab`, `ui_vocab`,
/// and one bundle directory per app under `apps/`.
pub fn gen_corpus(spec: &CorpusSpec, out_dir: &Path) -> Result<Manifest, CorpusError> {
    let vocab = default_vocabulary();
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_file(&out_dir.join("vocab"), &vocab_manifest_text())?;
    write_file(&out_dir.join("ui_vocab"), &ui_vocab_manifest_text())?;

    let mut entries = Vec::with_capacity(spec.app_count);
    for i in 0..spec.app_count {
        let app = generate_app(spec, i);
        let rel = format!("apps/{}", app.id);
        let dir = out_dir.join(&rel);
        write_bundle(&dir, &app, &vocab)?;
        entries.push(ManifestEntry {
            id: app.id,
            stars: app.stars,
            label: app.label,
            rel_path: rel,
        });
    }
    let manifest = Manifest { entries };
    write_file(&out_dir.join("manifest"), &render_manifest(&manifest))?;
    Ok(manifest)
}

/// The raw vocabulary manifests exclude the reserved names; loading adds
/// them back, keeping ids stable.
fn vocab_manifest_text() -> String {
    let mut s = String::new();
    for n in DEFAULT_INSTR_NAMES {
        s.push_str(n);
        s.push('\n');
    }
    s
}

fn ui_vocab_manifest_text() -> String {
    let mut s = String::new();
    for n in DEFAULT_UI_NAMES {
        s.push_str(n);
        s.push('\n');
    }
    s
}

pub fn write_bundle(dir: &Path, app: &GeneratedApp, vocab: &Vocabulary) -> Result<(), CorpusError> {
    let layout_dir = dir.join("layout");
    fs::create_dir_all(&layout_dir).map_err(io_err(&layout_dir))?;
    write_file(&dir.join("program.sir"), &ir::render_program(&app.program, vocab))?;
    write_file(
        &dir.join("meta"),
        &format!("id={}\nstars={:.9}\n", app.id, app.stars),
    )?;
    for doc in &app.docs {
        write_file(
            &layout_dir.join(format!("{}.sxml", doc.name)),
            &render_layout(doc),
        )?;
    }
    Ok(())
}

fn write_file(path: &Path, content: &str) -> Result<(), CorpusError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(content.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// An app bundle read back from disk, before analysis.
#[derive(Debug, Clone)]
pub struct RawBundle {
    pub id: String,
    pub stars: f64,
    pub program_text: String,
    /// `(doc name, markup)` sorted by name.
    pub layouts: Vec<(String, String)>,
}

pub fn load_bundle(dir: &Path) -> Result<RawBundle, CorpusError> {
    let meta_path = dir.join("meta");
    let meta = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let mut id = None;
    let mut stars = None;
    for line in meta.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some(("id", v)) => id = Some(v.trim().to_string()),
            Some(("stars", v)) => {
                stars = Some(v.trim().parse::<f64>().map_err(|_| CorpusError::Meta {
                    path: meta_path.clone(),
                    msg: format!("bad stars value `{v}`"),
                })?)
            }
            Some((k, _)) => {
                return Err(CorpusError::Meta {
                    path: meta_path.clone(),
                    msg: format!("unknown key `{k}`"),
                })
            }
            None => {
                return Err(CorpusError::Meta {
                    path: meta_path.clone(),
                    msg: format!("expected key=value, got `{line}`"),
                })
            }
        }
    }
    let id = id.ok_or_else(|| CorpusError::Meta {
        path: meta_path.clone(),
        msg: "missing id".into(),
    })?;
    let stars = stars.ok_or_else(|| CorpusError::Meta {
        path: meta_path.clone(),
        msg: "missing stars".into(),
    })?;
    if !(1.0..=5.0).contains(&stars) {
        return Err(CorpusError::StarsOutOfRange { id, stars });
    }

    let program_path = dir.join("program.sir");
    let program_text = fs::read_to_string(&program_path).map_err(io_err(&program_path))?;

    let mut layouts = Vec::new();
    let layout_dir = dir.join("layout");
    if layout_dir.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(&layout_dir)
            .map_err(io_err(&layout_dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "sxml"))
            .collect();
        paths.sort();
        for p in paths {
            let name = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let text = fs::read_to_string(&p).map_err(io_err(&p))?;
            layouts.push((name, text));
        }
    }
    Ok(RawBundle {
        id,
        stars,
        program_text,
        layouts,
    })
}

/// A fully analyzed app: the averaged record plus the exact accumulators.
#[derive(Debug, Clone)]
pub struct AnalyzedApp {
    pub record: AppRecord,
    pub sem_acc: SemanticAcc,
    pub lay_acc: LayoutAcc,
}

/// Runs the whole analysis stage on one parsed app.
pub fn analyze_app(
    id: &str,
    stars: f64,
    program: &Program,
    docs: &[LayoutDoc],
    vocab: &Vocabulary,
    ui_vocab: &UiVocabulary,
) -> Result<AnalyzedApp, CorpusError> {
    let cg = build_call_graph(program);
    let sem = inter_vector(program, &cg, vocab)?;
    let lay = crate::layout::layout_vector(docs, ui_vocab)?;
    Ok(AnalyzedApp {
        record: AppRecord {
            id: id.to_string(),
            stars,
            label: Label::from_stars(stars),
            sem: sem.app,
            lay: lay.app,
        },
        sem_acc: sem.app_acc,
        lay_acc: lay.app_acc,
    })
}

/// Parses and analyzes a bundle read from disk.
pub fn analyze_bundle(
    bundle: &RawBundle,
    vocab: &Vocabulary,
    ui_vocab: &UiVocabulary,
) -> Result<AnalyzedApp, CorpusError> {
    let program = ir::parse_program(&bundle.program_text, vocab)?;
    let docs = bundle
        .layouts
        .iter()
        .map(|(name, text)| parse_layout(name, text))
        .collect::<Result<Vec<_>, _>>()?;
    analyze_app(&bundle.id, bundle.stars, &program, &docs, vocab, ui_vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::analyze_method;

    #[test]
    fn generation_is_deterministic() {
        let spec = CorpusSpec {
            seed: 7,
            app_count: 5,
            ..CorpusSpec::default()
        };
        for i in 0..5 {
            let a = generate_app(&spec, i);
            let b = generate_app(&spec, i);
            assert_eq!(a.program, b.program);
            assert_eq!(a.docs, b.docs);
            assert_eq!(a.stars, b.stars);
        }
    }

    #[test]
    fn stars_match_class_ranges() {
        let spec = CorpusSpec {
            seed: 3,
            app_count: 40,
            ..CorpusSpec::default()
        };
        for i in 0..40 {
            let app = generate_app(&spec, i);
            match app.label {
                Label::Low => assert!((1.0..3.0).contains(&app.stars)),
                Label::NotLow => assert!(app.stars > 3.0 && app.stars <= 5.0),
            }
            assert_eq!(Label::from_stars(app.stars), app.label);
        }
    }

    #[test]
    fn generated_programs_are_reducible_and_analyzable() {
        let spec = CorpusSpec {
            seed: 11,
            app_count: 30,
            ..CorpusSpec::default()
        };
        let vocab = default_vocabulary();
        let ui = default_ui_vocabulary();
        for i in 0..30 {
            let app = generate_app(&spec, i);
            for m in app.program.methods() {
                analyze_method(m).expect("generated CFGs are reducible");
            }
            analyze_app(&app.id, app.stars, &app.program, &app.docs, &vocab, &ui)
                .expect("generated apps analyze cleanly");
        }
    }

    #[test]
    fn generated_programs_roundtrip_through_ir_text() {
        let spec = CorpusSpec {
            seed: 19,
            app_count: 10,
            ..CorpusSpec::default()
        };
        let vocab = default_vocabulary();
        for i in 0..10 {
            let app = generate_app(&spec, i);
            let text = ir::render_program(&app.program, &vocab);
            let parsed = ir::parse_program(&text, &vocab).expect("rendered IR parses");
            assert_eq!(parsed, app.program);
        }
    }

    #[test]
    fn recursive_apps_have_a_cycle() {
        let spec = CorpusSpec {
            seed: 23,
            app_count: 6,
            acyclic_share: 0.0,
            ..CorpusSpec::default()
        };
        let mut saw_cycle = false;
        for i in 0..6 {
            let app = generate_app(&spec, i);
            let cg = build_call_graph(&app.program);
            for u in 0..cg.len() {
                if cg.callees(u).any(|v| v == u) {
                    saw_cycle = true;
                }
            }
        }
        assert!(saw_cycle);
    }

    #[test]
    fn corpus_writes_and_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec {
            seed: 7,
            app_count: 4,
            ..CorpusSpec::default()
        };
        let manifest = gen_corpus(&spec, dir.path()).unwrap();
        assert_eq!(manifest.entries.len(), 4);

        let text = fs::read_to_string(dir.path().join("manifest")).unwrap();
        let parsed = parse_manifest(&text).unwrap();
        assert_eq!(parsed, manifest);

        let vocab = Vocabulary::load(&fs::read_to_string(dir.path().join("vocab")).unwrap()).unwrap();
        let ui = UiVocabulary::load(&fs::read_to_string(dir.path().join("ui_vocab")).unwrap()).unwrap();
        assert_eq!(vocab.len(), DEFAULT_INSTR_NAMES.len() + 2);
        assert_eq!(ui.slot_count(), DEFAULT_UI_NAMES.len() + 2);

        for e in &manifest.entries {
            let bundle = load_bundle(&dir.path().join(&e.rel_path)).unwrap();
            assert_eq!(bundle.id, e.id);
            let analyzed = analyze_bundle(&bundle, &vocab, &ui).unwrap();
            assert_eq!(analyzed.record.label, e.label);
        }
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let spec = CorpusSpec {
            seed: 7,
            app_count: 3,
            ..CorpusSpec::default()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        gen_corpus(&spec, d1.path()).unwrap();
        gen_corpus(&spec, d2.path()).unwrap();
        let walk = |root: &Path| -> Vec<(String, Vec<u8>)> {
            let mut files = Vec::new();
            let mut stack = vec![root.to_path_buf()];
            while let Some(p) = stack.pop() {
                for entry in fs::read_dir(&p).unwrap() {
                    let path = entry.unwrap().path();
                    if path.is_dir() {
                        stack.push(path);
                    } else {
                        let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                        files.push((rel, fs::read(&path).unwrap()));
                    }
                }
            }
            files.sort();
            files
        };
        assert_eq!(walk(d1.path()), walk(d2.path()));
    }

    #[test]
    fn margin_zero_profiles_are_class_blind() {
        // With margin 0 the only class-dependent inputs left are the rng
        // draws themselves; the derived probabilities must coincide.
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(1);
        let low = ClassProfile::new(Label::Low, 0.0, &mut r1);
        let high = ClassProfile::new(Label::NotLow, 0.0, &mut r2);
        assert_eq!(low.p_loop, high.p_loop);
        assert_eq!(low.p_if, high.p_if);
        assert_eq!(low.instr_weights, high.instr_weights);
        assert_eq!(low.ui_weights, high.ui_weights);
        assert_eq!(low.p_child, high.p_child);
    }
}
