//! Textual IR for app executables: vocabulary of instruction types, the
//! instruction/method/program object model, and a parser/renderer pair.
//!
//! The IR is deliberately unstructured (labels + jumps, no loop or if
//! syntax) so the control-flow analyses reconstruct structure the same way
//! a binary analyzer would.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Name every call to an undefined, out-of-vocabulary target degrades to.
pub const UNKNOWN_API: &str = "__unknown_api__";
/// Name intra-SCC (recursive) call sites degrade to.
pub const RECURSIVE_CALL: &str = "__recursive_call__";

/// Instruction type id, 1-based as in the vector layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

impl TypeId {
    /// Zero-based slot index for vector storage.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error)]
pub enum IrError {
    #[error("line {line}: duplicate vocabulary name `{name}`")]
    DuplicateVocabName { name: String, line: usize },
    #[error("line {line}: unknown opcode `{name}`")]
    UnknownOpcode { name: String, line: usize },
    #[error("line {line}: unresolved label `{label}` in method `{method}`")]
    UnresolvedLabel {
        label: String,
        method: String,
        line: usize,
    },
    #[error("line {line}: duplicate label `{label}` in method `{method}`")]
    DuplicateLabel {
        label: String,
        method: String,
        line: usize,
    },
    #[error("line {line}: duplicate method `{name}`")]
    DuplicateMethod { name: String, line: usize },
    #[error("line {line}: conditional jump at end of method `{method}` has no fallthrough")]
    CondJumpNoFallthrough { method: String, line: usize },
    #[error("line {line}: conditional jump target equals its fallthrough")]
    CondJumpSameTarget { line: usize },
    #[error("entry directive names unknown method `{name}`")]
    EntryUnknownMethod { name: String },
    #[error("line {line}: {msg}")]
    Syntax { msg: String, line: usize },
}

/// Ordered instruction-type names (opcodes plus known API names), ids 1..=N.
///
/// Always contains the reserved [`UNKNOWN_API`] and [`RECURSIVE_CALL`]
/// names; they are appended when the source manifest omits them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<String>,
    ids: HashMap<String, TypeId>,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit names, appending the reserved ones.
    pub fn new<I, S>(names: I) -> Result<Vocabulary, IrError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            entries: Vec::new(),
            ids: HashMap::new(),
        };
        for (i, name) in names.into_iter().enumerate() {
            v.push(name.into(), i + 1)?;
        }
        v.add_reserved();
        Ok(v)
    }

    /// Parses a manifest: one name per line, `#` starts a comment.
    /// Ids are assigned by line order starting at 1.
    pub fn load(text: &str) -> Result<Vocabulary, IrError> {
        let mut v = Vocabulary {
            entries: Vec::new(),
            ids: HashMap::new(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let name = strip_comment(raw).trim();
            if name.is_empty() {
                continue;
            }
            v.push(name.to_string(), lineno + 1)?;
        }
        v.add_reserved();
        Ok(v)
    }

    fn push(&mut self, name: String, line: usize) -> Result<(), IrError> {
        if self.ids.contains_key(&name) {
            return Err(IrError::DuplicateVocabName { name, line });
        }
        let id = TypeId(self.entries.len() as u32 + 1);
        self.ids.insert(name.clone(), id);
        self.entries.push(name);
        Ok(())
    }

    fn add_reserved(&mut self) {
        for name in [UNKNOWN_API, RECURSIVE_CALL] {
            if !self.ids.contains_key(name) {
                let id = TypeId(self.entries.len() as u32 + 1);
                self.ids.insert(name.to_string(), id);
                self.entries.push(name.to_string());
            }
        }
    }

    /// Total number of instruction types, N.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<TypeId> {
        self.ids.get(name).copied()
    }

    /// Name of a type id; panics on an id from a different vocabulary.
    pub fn name(&self, id: TypeId) -> &str {
        &self.entries[id.slot()]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|s| s.as_str())
    }

    pub fn unknown_api(&self) -> TypeId {
        self.ids[UNKNOWN_API]
    }

    pub fn recursive_call(&self) -> TypeId {
        self.ids[RECURSIVE_CALL]
    }

    /// Manifest rendering; `load(render())` reproduces the vocabulary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for name in &self.entries {
            out.push_str(name);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrKind {
    /// An ordinary instruction of a vocabulary type.
    Plain(TypeId),
    /// Conditional jump; the comparison itself counts under `type_id`.
    /// Falls through to the next instruction when not taken.
    CondJump { type_id: TypeId, target: usize },
    /// Unconditional jump. Not counted in semantic vectors.
    Jump { target: usize },
    /// Call by name; resolution to method/API/unknown happens per program.
    Call { callee: String },
    /// Method exit. Not counted in semantic vectors.
    Ret,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    /// Position within the method, 0-based.
    pub index: usize,
    pub kind: InstrKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Method {
    pub name: String,
    pub instructions: Vec<Instruction>,
}

impl Method {
    pub fn new(name: impl Into<String>, kinds: Vec<InstrKind>) -> Method {
        Method {
            name: name.into(),
            instructions: kinds
                .into_iter()
                .enumerate()
                .map(|(index, kind)| Instruction { index, kind })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}

/// Parsed IR of one app's executable: methods in declaration order plus
/// the entry-point set. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Program {
    methods: Vec<Method>,
    by_name: HashMap<String, usize>,
    entry_points: Vec<String>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.methods == other.methods && self.entry_points == other.entry_points
    }
}

impl Eq for Program {}

impl Program {
    /// Validates and assembles a program. `entry_points` empty means
    /// "default to uncalled methods".
    pub fn new(methods: Vec<Method>, entry_points: Vec<String>) -> Result<Program, IrError> {
        let mut by_name = HashMap::new();
        for (i, m) in methods.iter().enumerate() {
            if by_name.insert(m.name.clone(), i).is_some() {
                return Err(IrError::DuplicateMethod {
                    name: m.name.clone(),
                    line: 0,
                });
            }
        }
        for m in &methods {
            validate_method(m, 0)?;
        }
        for e in &entry_points {
            if !by_name.contains_key(e) {
                return Err(IrError::EntryUnknownMethod { name: e.clone() });
            }
        }
        let mut p = Program {
            methods,
            by_name,
            entry_points,
        };
        if p.entry_points.is_empty() {
            p.entry_points = p.uncalled_methods();
        }
        Ok(p)
    }

    /// Methods never named as a call target, in declaration order.
    fn uncalled_methods(&self) -> Vec<String> {
        let mut called = vec![false; self.methods.len()];
        for m in &self.methods {
            for ins in &m.instructions {
                if let InstrKind::Call { callee } = &ins.kind {
                    if let Some(&i) = self.by_name.get(callee) {
                        called[i] = true;
                    }
                }
            }
        }
        self.methods
            .iter()
            .enumerate()
            .filter(|(i, _)| !called[*i])
            .map(|(_, m)| m.name.clone())
            .collect()
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn method(&self, name: &str) -> Option<&Method> {
        self.by_name.get(name).map(|&i| &self.methods[i])
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn entry_points(&self) -> &[String] {
        &self.entry_points
    }

    pub fn total_instructions(&self) -> usize {
        self.methods.iter().map(Method::len).sum()
    }
}

fn validate_method(m: &Method, line: usize) -> Result<(), IrError> {
    for (i, ins) in m.instructions.iter().enumerate() {
        debug_assert_eq!(ins.index, i);
        match &ins.kind {
            InstrKind::CondJump { target, .. } => {
                if i + 1 >= m.instructions.len() {
                    return Err(IrError::CondJumpNoFallthrough {
                        method: m.name.clone(),
                        line,
                    });
                }
                if *target == i + 1 {
                    return Err(IrError::CondJumpSameTarget { line });
                }
                if *target >= m.instructions.len() {
                    return Err(IrError::UnresolvedLabel {
                        label: format!("@{target}"),
                        method: m.name.clone(),
                        line,
                    });
                }
            }
            InstrKind::Jump { target } => {
                if *target >= m.instructions.len() {
                    return Err(IrError::UnresolvedLabel {
                        label: format!("@{target}"),
                        method: m.name.clone(),
                        line,
                    });
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn is_name(tok: &str) -> bool {
    !tok.is_empty()
        && tok
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '.' | '$' | '/'))
        && !matches!(tok, "method" | "entry" | "vocab" | "if" | "jump" | "call" | "ret")
}

/// Source file parse result: the program plus the inline vocabulary block,
/// when the file carried one.
pub struct ParsedSource {
    pub program: Program,
    pub inline_vocab: Option<Vocabulary>,
}

/// Parses IR source against a known vocabulary.
///
/// If the file carries an inline `vocab { .. }` block it must agree with
/// `vocab` name-for-name; passing the external vocabulary always wins is
/// not supported — mixing the two is a usage error upstream, so here the
/// inline block is simply rejected.
pub fn parse_program(text: &str, vocab: &Vocabulary) -> Result<Program, IrError> {
    let parsed = parse_source_inner(text, Some(vocab))?;
    Ok(parsed.program)
}

/// Parses IR source, taking the vocabulary from the file's own
/// `vocab { .. }` block.
pub fn parse_source(text: &str) -> Result<ParsedSource, IrError> {
    parse_source_inner(text, None)
}

fn parse_source_inner(text: &str, external: Option<&Vocabulary>) -> Result<ParsedSource, IrError> {
    let mut inline_names: Vec<(String, usize)> = Vec::new();
    let mut inline_seen = false;
    let mut entry_points: Vec<String> = Vec::new();
    let mut raw_methods: Vec<(String, usize, Vec<RawLine>)> = Vec::new();

    enum State {
        Top,
        Vocab,
        Method,
    }
    let mut state = State::Top;

    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        match state {
            State::Top => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                match toks[0] {
                    "vocab" => {
                        if inline_seen || !raw_methods.is_empty() || !entry_points.is_empty() {
                            return Err(IrError::Syntax {
                                msg: "vocab block must come first and appear once".into(),
                                line: lineno,
                            });
                        }
                        if toks.len() != 2 || toks[1] != "{" {
                            return Err(IrError::Syntax {
                                msg: "expected `vocab {`".into(),
                                line: lineno,
                            });
                        }
                        inline_seen = true;
                        state = State::Vocab;
                    }
                    "entry" => {
                        if toks.len() < 2 {
                            return Err(IrError::Syntax {
                                msg: "entry directive needs at least one method name".into(),
                                line: lineno,
                            });
                        }
                        for t in &toks[1..] {
                            entry_points.push((*t).to_string());
                        }
                    }
                    "method" => {
                        if toks.len() != 3 || toks[2] != "{" || !is_name(toks[1]) {
                            return Err(IrError::Syntax {
                                msg: "expected `method <name> {`".into(),
                                line: lineno,
                            });
                        }
                        raw_methods.push((toks[1].to_string(), lineno, Vec::new()));
                        state = State::Method;
                    }
                    other => {
                        return Err(IrError::Syntax {
                            msg: format!("unexpected token `{other}`"),
                            line: lineno,
                        });
                    }
                }
            }
            State::Vocab => {
                if line == "}" {
                    state = State::Top;
                } else if is_name(line) {
                    inline_names.push((line.to_string(), lineno));
                } else {
                    return Err(IrError::Syntax {
                        msg: format!("invalid vocabulary name `{line}`"),
                        line: lineno,
                    });
                }
            }
            State::Method => {
                if line == "}" {
                    state = State::Top;
                } else {
                    let cur = raw_methods.last_mut().unwrap();
                    cur.2.push(parse_raw_line(line, lineno)?);
                }
            }
        }
    }
    if matches!(state, State::Vocab | State::Method) {
        return Err(IrError::Syntax {
            msg: "unterminated block (missing `}`)".into(),
            line: text.lines().count(),
        });
    }

    let owned_vocab;
    let vocab = match (external, inline_seen) {
        (Some(_), true) => {
            return Err(IrError::Syntax {
                msg: "vocabulary given twice (external and inline vocab block)".into(),
                line: 1,
            });
        }
        (Some(v), false) => v,
        (None, true) => {
            let mut v = Vocabulary {
                entries: Vec::new(),
                ids: HashMap::new(),
            };
            for (name, line) in inline_names {
                v.push(name, line)?;
            }
            v.add_reserved();
            owned_vocab = v;
            &owned_vocab
        }
        (None, false) => {
            return Err(IrError::Syntax {
                msg: "no vocabulary: pass a manifest or add a `vocab { .. }` block".into(),
                line: 1,
            });
        }
    };

    let mut methods = Vec::new();
    let mut seen = HashMap::new();
    for (name, decl_line, lines) in raw_methods {
        if seen.insert(name.clone(), ()).is_some() {
            return Err(IrError::DuplicateMethod {
                name,
                line: decl_line,
            });
        }
        methods.push(assemble_method(name, decl_line, lines, vocab)?);
    }

    let program = Program::new(methods, entry_points)?;
    Ok(ParsedSource {
        program,
        inline_vocab: if inline_seen {
            Some(vocab.clone())
        } else {
            None
        },
    })
}

struct RawLine {
    label: Option<String>,
    op: RawOp,
    line: usize,
}

enum RawOp {
    Plain(String),
    If { opcode: String, label: String },
    Jump { label: String },
    Call { callee: String },
    Ret,
}

fn parse_raw_line(line: &str, lineno: usize) -> Result<RawLine, IrError> {
    let (label, rest) = match line.find(':') {
        Some(i) if !line[..i].contains(char::is_whitespace) && is_name(&line[..i]) => {
            (Some(line[..i].to_string()), line[i + 1..].trim())
        }
        _ => (None, line),
    };
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.is_empty() {
        return Err(IrError::Syntax {
            msg: "label must be followed by an instruction".into(),
            line: lineno,
        });
    }
    let op = match toks[0] {
        "if" => {
            if toks.len() != 3 || !is_name(toks[1]) || !is_name(toks[2]) {
                return Err(IrError::Syntax {
                    msg: "expected `if <opcode> <label>`".into(),
                    line: lineno,
                });
            }
            RawOp::If {
                opcode: toks[1].to_string(),
                label: toks[2].to_string(),
            }
        }
        "jump" => {
            if toks.len() != 2 || !is_name(toks[1]) {
                return Err(IrError::Syntax {
                    msg: "expected `jump <label>`".into(),
                    line: lineno,
                });
            }
            RawOp::Jump {
                label: toks[1].to_string(),
            }
        }
        "call" => {
            if toks.len() != 2 || !is_name(toks[1]) {
                return Err(IrError::Syntax {
                    msg: "expected `call <name>`".into(),
                    line: lineno,
                });
            }
            RawOp::Call {
                callee: toks[1].to_string(),
            }
        }
        "ret" => {
            if toks.len() != 1 {
                return Err(IrError::Syntax {
                    msg: "`ret` takes no operands".into(),
                    line: lineno,
                });
            }
            RawOp::Ret
        }
        name if is_name(name) && toks.len() == 1 => RawOp::Plain(name.to_string()),
        other => {
            return Err(IrError::Syntax {
                msg: format!("unrecognized instruction `{other}`"),
                line: lineno,
            });
        }
    };
    Ok(RawLine {
        label,
        op,
        line: lineno,
    })
}

fn assemble_method(
    name: String,
    decl_line: usize,
    lines: Vec<RawLine>,
    vocab: &Vocabulary,
) -> Result<Method, IrError> {
    let mut labels: HashMap<String, usize> = HashMap::new();
    for (i, l) in lines.iter().enumerate() {
        if let Some(lbl) = &l.label {
            if labels.insert(lbl.clone(), i).is_some() {
                return Err(IrError::DuplicateLabel {
                    label: lbl.clone(),
                    method: name.clone(),
                    line: l.line,
                });
            }
        }
    }
    let resolve = |label: &str, line: usize| -> Result<usize, IrError> {
        labels.get(label).copied().ok_or_else(|| IrError::UnresolvedLabel {
            label: label.to_string(),
            method: name.clone(),
            line,
        })
    };
    let opcode_id = |op: &str, line: usize| -> Result<TypeId, IrError> {
        vocab.id(op).ok_or_else(|| IrError::UnknownOpcode {
            name: op.to_string(),
            line,
        })
    };

    let n = lines.len();
    let mut kinds = Vec::with_capacity(n);
    for (i, l) in lines.iter().enumerate() {
        let kind = match &l.op {
            RawOp::Plain(op) => InstrKind::Plain(opcode_id(op, l.line)?),
            RawOp::If { opcode, label } => {
                let type_id = opcode_id(opcode, l.line)?;
                let target = resolve(label, l.line)?;
                if i + 1 >= n {
                    return Err(IrError::CondJumpNoFallthrough {
                        method: name.clone(),
                        line: l.line,
                    });
                }
                if target == i + 1 {
                    return Err(IrError::CondJumpSameTarget { line: l.line });
                }
                InstrKind::CondJump { type_id, target }
            }
            RawOp::Jump { label } => InstrKind::Jump {
                target: resolve(label, l.line)?,
            },
            RawOp::Call { callee } => InstrKind::Call {
                callee: callee.clone(),
            },
            RawOp::Ret => InstrKind::Ret,
        };
        kinds.push(kind);
    }
    let m = Method::new(name, kinds);
    validate_method(&m, decl_line)?;
    Ok(m)
}

/// Renders a program back to IR source. Labels are synthesized from
/// target indices, so `parse_program(render(p), vocab) == p`.
pub fn render_program(p: &Program, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    if !p.entry_points().is_empty() {
        out.push_str("entry");
        for e in p.entry_points() {
            out.push(' ');
            out.push_str(e);
        }
        out.push('\n');
    }
    for m in p.methods() {
        out.push_str(&format!("method {} {{\n", m.name));
        let mut is_target = vec![false; m.instructions.len()];
        for ins in &m.instructions {
            match ins.kind {
                InstrKind::CondJump { target, .. } | InstrKind::Jump { target } => {
                    is_target[target] = true;
                }
                _ => {}
            }
        }
        for ins in &m.instructions {
            if is_target[ins.index] {
                out.push_str(&format!("L{}: ", ins.index));
            } else {
                out.push_str("  ");
            }
            match &ins.kind {
                InstrKind::Plain(t) => out.push_str(vocab.name(*t)),
                InstrKind::CondJump { type_id, target } => {
                    out.push_str(&format!("if {} L{}", vocab.name(*type_id), target));
                }
                InstrKind::Jump { target } => out.push_str(&format!("jump L{}", target)),
                InstrKind::Call { callee } => out.push_str(&format!("call {}", callee)),
                InstrKind::Ret => out.push_str("ret"),
            }
            out.push('\n');
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocab_ids_by_line_order() {
        let v = Vocabulary::load("add\ncmp\n").unwrap();
        assert_eq!(v.id("add"), Some(TypeId(1)));
        assert_eq!(v.id("cmp"), Some(TypeId(2)));
        assert_eq!(v.id(UNKNOWN_API), Some(TypeId(3)));
        assert_eq!(v.id(RECURSIVE_CALL), Some(TypeId(4)));
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn vocab_empty_manifest_keeps_reserved() {
        let v = Vocabulary::load("").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.name(v.unknown_api()), UNKNOWN_API);
        assert_eq!(v.name(v.recursive_call()), RECURSIVE_CALL);
    }

    #[test]
    fn vocab_duplicate_names_line() {
        let err = Vocabulary::load("add\nadd\n").unwrap_err();
        match err {
            IrError::DuplicateVocabName { name, line } => {
                assert_eq!(name, "add");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn vocab_comments_and_blank_lines() {
        let v = Vocabulary::load("# header\nadd # trailing\n\ncmp\n").unwrap();
        assert_eq!(v.id("add"), Some(TypeId(1)));
        assert_eq!(v.id("cmp"), Some(TypeId(2)));
    }

    #[test]
    fn vocab_id_lookup_is_bijective() {
        let v = Vocabulary::load("a\nb\nc\n").unwrap();
        for (i, name) in v.names().enumerate() {
            let id = v.id(name).unwrap();
            assert_eq!(id.0 as usize, i + 1);
            assert_eq!(v.name(id), name);
        }
    }

    #[test]
    fn parse_single_ret_method() {
        let v = Vocabulary::load("add\n").unwrap();
        let p = parse_program("method m { ret }", &v);
        // `{ ret }` on one line is not line-oriented; the grammar is per-line.
        assert!(p.is_err());
        let p = parse_program("method m {\n ret\n}\n", &v).unwrap();
        assert_eq!(p.methods().len(), 1);
        assert_eq!(p.methods()[0].len(), 1);
        assert_eq!(p.methods()[0].instructions[0].kind, InstrKind::Ret);
        assert_eq!(p.entry_points(), ["m"]);
    }

    #[test]
    fn parse_unresolved_label_named() {
        let v = Vocabulary::load("add\n").unwrap();
        let err = parse_program("method m {\n jump L1\n ret\n}\n", &v).unwrap_err();
        match err {
            IrError::UnresolvedLabel { label, method, .. } => {
                assert_eq!(label, "L1");
                assert_eq!(method, "m");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_unknown_opcode() {
        let v = Vocabulary::load("add\n").unwrap();
        let err = parse_program("method m {\n bogus\n}\n", &v).unwrap_err();
        assert!(matches!(err, IrError::UnknownOpcode { .. }));
    }

    #[test]
    fn parse_duplicate_method() {
        let v = Vocabulary::load("add\n").unwrap();
        let err = parse_program("method m {\n ret\n}\nmethod m {\n ret\n}\n", &v).unwrap_err();
        assert!(matches!(err, IrError::DuplicateMethod { .. }));
    }

    #[test]
    fn cond_jump_needs_distinct_successors() {
        let v = Vocabulary::load("cmp\n").unwrap();
        let err = parse_program("method m {\n if cmp L\nL: ret\n}\n", &v).unwrap_err();
        assert!(matches!(err, IrError::CondJumpSameTarget { .. }));
        let err = parse_program("method m {\n add\n if cmp L\n}\n", &v);
        assert!(err.is_err());
    }

    #[test]
    fn inline_vocab_block() {
        let src = "vocab {\n add\n cmp\n}\nmethod m {\n add\n ret\n}\n";
        let parsed = parse_source(src).unwrap();
        let v = parsed.inline_vocab.unwrap();
        assert_eq!(v.id("add"), Some(TypeId(1)));
        assert_eq!(parsed.program.methods()[0].instructions[0].kind, InstrKind::Plain(TypeId(1)));
    }

    #[test]
    fn entry_directive_overrides_default() {
        let v = Vocabulary::load("add\n").unwrap();
        let src = "entry b\nmethod a {\n call b\n ret\n}\nmethod b {\n ret\n}\n";
        let p = parse_program(src, &v).unwrap();
        assert_eq!(p.entry_points(), ["b"]);
        // Without the directive, `a` is the only uncalled method.
        let src = "method a {\n call b\n ret\n}\nmethod b {\n ret\n}\n";
        let p = parse_program(src, &v).unwrap();
        assert_eq!(p.entry_points(), ["a"]);
    }

    #[test]
    fn render_parse_roundtrip_smoke() {
        let v = Vocabulary::load("add\ncmp\n").unwrap();
        let src = "entry m\nmethod m {\n add\nL0: add\n if cmp L0\n call api\n ret\n}\n";
        let p = parse_program(src, &v).unwrap();
        let rendered = render_program(&p, &v);
        let p2 = parse_program(&rendered, &v).unwrap();
        assert_eq!(p, p2);
    }
}
