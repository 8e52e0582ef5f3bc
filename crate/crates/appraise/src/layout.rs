//! Layout vectors: per-element-type `(count, average tree depth)` pairs
//! over an app's layout documents, with two extra buckets for legacy-library
//! and customized elements, plus reference-tag splicing.
//!
//! A `<ref target="doc"/>` tag stands for another document's whole tree:
//! the target's root takes the reference tag's place (and depth), so
//! documents are summarized leaves-first and spliced by depth shift —
//! the same move the executable side makes for call sites.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("{doc}:{line}:{col}: expected </{expected}>, found </{found}>")]
    TagMismatch {
        doc: String,
        expected: String,
        found: String,
        line: usize,
        col: usize,
    },
    #[error("{doc}:{line}:{col}: unclosed element <{tag}>")]
    Unclosed {
        doc: String,
        tag: String,
        line: usize,
        col: usize,
    },
    #[error("{doc}:{line}:{col}: multiple root elements")]
    MultipleRoots { doc: String, line: usize, col: usize },
    #[error("{doc}:{line}:{col}: reference tag cannot have children")]
    RefWithChildren { doc: String, line: usize, col: usize },
    #[error("{doc}:{line}:{col}: reference tag needs a target attribute")]
    RefWithoutTarget { doc: String, line: usize, col: usize },
    #[error("{doc}: document has no root element")]
    EmptyDoc { doc: String },
    #[error("{doc}:{line}:{col}: {msg}")]
    Syntax {
        doc: String,
        msg: String,
        line: usize,
        col: usize,
    },
    #[error("document `{doc}` references unknown document `{target}`")]
    UnresolvedRef { doc: String, target: String },
    #[error("reference cycle through document `{doc}`")]
    ReferenceCycle { doc: String },
    #[error("duplicate UI element name `{name}` on line {line}")]
    DuplicateName { name: String, line: usize },
}

/// UI element slot: known types are 1..=M, then the legacy bucket M+1 and
/// the customized bucket M+2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotId(pub u32);

impl SlotId {
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

/// Known UI element names with ids 1..=M, plus the legacy-prefix list that
/// routes unknown `android.support.`-style tags into the legacy bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UiVocabulary {
    entries: Vec<String>,
    ids: HashMap<String, SlotId>,
    legacy_prefixes: Vec<String>,
}

pub const DEFAULT_LEGACY_PREFIXES: &[&str] = &["android.support."];

impl UiVocabulary {
    pub fn new<I, S>(names: I) -> Result<UiVocabulary, LayoutError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = UiVocabulary {
            entries: Vec::new(),
            ids: HashMap::new(),
            legacy_prefixes: DEFAULT_LEGACY_PREFIXES.iter().map(|s| s.to_string()).collect(),
        };
        for (i, name) in names.into_iter().enumerate() {
            v.push(name.into(), i + 1)?;
        }
        Ok(v)
    }

    /// Parses a manifest: one element name per line, `#` comments.
    pub fn load(text: &str) -> Result<UiVocabulary, LayoutError> {
        let mut v = UiVocabulary {
            entries: Vec::new(),
            ids: HashMap::new(),
            legacy_prefixes: DEFAULT_LEGACY_PREFIXES.iter().map(|s| s.to_string()).collect(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let name = match raw.find('#') {
                Some(i) => raw[..i].trim(),
                None => raw.trim(),
            };
            if name.is_empty() {
                continue;
            }
            v.push(name.to_string(), lineno + 1)?;
        }
        Ok(v)
    }

    fn push(&mut self, name: String, line: usize) -> Result<(), LayoutError> {
        if self.ids.contains_key(&name) {
            return Err(LayoutError::DuplicateName { name, line });
        }
        let id = SlotId(self.entries.len() as u32 + 1);
        self.ids.insert(name.clone(), id);
        self.entries.push(name);
        Ok(())
    }

    pub fn with_legacy_prefixes(mut self, prefixes: Vec<String>) -> UiVocabulary {
        self.legacy_prefixes = prefixes;
        self
    }

    /// Known type count M; vectors have M+2 slots.
    pub fn known_len(&self) -> usize {
        self.entries.len()
    }

    pub fn slot_count(&self) -> usize {
        self.entries.len() + 2
    }

    pub fn legacy_slot(&self) -> SlotId {
        SlotId(self.entries.len() as u32 + 1)
    }

    pub fn custom_slot(&self) -> SlotId {
        SlotId(self.entries.len() as u32 + 2)
    }

    pub fn id(&self, name: &str) -> Option<SlotId> {
        self.ids.get(name).copied()
    }

    /// Display name of a slot, synthesizing the two bucket names.
    pub fn slot_name(&self, id: SlotId) -> &str {
        let i = id.index();
        if i < self.entries.len() {
            &self.entries[i]
        } else if id == self.legacy_slot() {
            "<legacy>"
        } else {
            "<custom>"
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|s| s.as_str())
    }

    /// Total classification: known name -> its id, legacy prefix -> M+1,
    /// anything else -> M+2.
    pub fn classify(&self, tag: &str) -> SlotId {
        if let Some(id) = self.id(tag) {
            return id;
        }
        if self.legacy_prefixes.iter().any(|p| tag.starts_with(p.as_str())) {
            return self.legacy_slot();
        }
        self.custom_slot()
    }

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
pub enum LayoutNode {
    Element { tag: String, children: Vec<LayoutNode> },
    /// Stands for the whole tree of another document; never has children.
    Reference { target: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutDoc {
    pub name: String,
    pub root: LayoutNode,
}

/// Accumulator form of the layout vector: `(n, Σdepth)` per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutAcc {
    slots: Vec<(u64, u64)>,
}

/// Averaged form: `(n, d)` with `d = Σdepth/n`, zeros staying exact.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutVector {
    slots: Vec<(u64, f64)>,
}

impl LayoutAcc {
    pub fn zero(slot_count: usize) -> LayoutAcc {
        LayoutAcc {
            slots: vec![(0, 0); slot_count],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, id: SlotId) -> (u64, u64) {
        self.slots[id.index()]
    }

    pub fn slots(&self) -> &[(u64, u64)] {
        &self.slots
    }

    pub fn record(&mut self, id: SlotId, depth: u64) {
        let s = &mut self.slots[id.index()];
        s.0 += 1;
        s.1 += depth;
    }

    pub fn merge(&mut self, other: &LayoutAcc) {
        assert_eq!(self.slots.len(), other.slots.len(), "slot count mismatch");
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }

    /// Splices another document's accumulator in at `depth`: its root sat
    /// at depth 0 and now sits where the reference tag was.
    pub fn splice(&mut self, depth: u64, target: &LayoutAcc) {
        assert_eq!(self.slots.len(), target.slots.len(), "slot count mismatch");
        for (a, t) in self.slots.iter_mut().zip(&target.slots) {
            a.0 += t.0;
            a.1 += depth * t.0 + t.1;
        }
    }

    pub fn total_elements(&self) -> u64 {
        self.slots.iter().map(|s| s.0).sum()
    }

    pub fn averaged(&self) -> LayoutVector {
        LayoutVector {
            slots: self
                .slots
                .iter()
                .map(|&(n, sd)| if n == 0 { (0, 0.0) } else { (n, sd as f64 / n as f64) })
                .collect(),
        }
    }
}

impl LayoutVector {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, id: SlotId) -> (u64, f64) {
        self.slots[id.index()]
    }

    pub fn slots(&self) -> &[(u64, f64)] {
        &self.slots
    }
}

/// Parses one layout document. `name` is the document name used by
/// reference resolution (the file stem on disk).
pub fn parse_layout(name: &str, text: &str) -> Result<LayoutDoc, LayoutError> {
    let mut parser = Parser {
        doc: name,
        chars: text.char_indices().peekable(),
        line: 1,
        col: 1,
    };
    let root = parser.parse_document()?;
    Ok(LayoutDoc {
        name: name.to_string(),
        root,
    })
}

struct Parser<'a> {
    doc: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
}

enum Tag {
    Open { name: String, target: Option<String> },
    SelfClose { name: String, target: Option<String> },
    Close { name: String },
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn err(&self, msg: impl Into<String>) -> LayoutError {
        LayoutError::Syntax {
            doc: self.doc.to_string(),
            msg: msg.into(),
            line: self.line,
            col: self.col,
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn parse_document(&mut self) -> Result<LayoutNode, LayoutError> {
        self.skip_ws();
        if self.peek().is_none() {
            return Err(LayoutError::EmptyDoc {
                doc: self.doc.to_string(),
            });
        }
        let (root, _) = self.parse_node()?;
        self.skip_ws();
        if self.peek().is_some() {
            return Err(LayoutError::MultipleRoots {
                doc: self.doc.to_string(),
                line: self.line,
                col: self.col,
            });
        }
        Ok(root)
    }

    /// Parses one element (or reference) starting at `<`.
    fn parse_node(&mut self) -> Result<(LayoutNode, (usize, usize)), LayoutError> {
        let pos = (self.line, self.col);
        match self.read_tag()? {
            Tag::SelfClose { name, target } => Ok((self.finish_leaf(name, target, pos)?, pos)),
            Tag::Open { name, target } => {
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    let child_pos = (self.line, self.col);
                    if self.peek().is_none() {
                        return Err(LayoutError::Unclosed {
                            doc: self.doc.to_string(),
                            tag: name,
                            line: pos.0,
                            col: pos.1,
                        });
                    }
                    if self.peek() != Some('<') {
                        return Err(self.err("expected a tag"));
                    }
                    // Lookahead for a closing tag without consuming a full node.
                    if self.peek_is_close() {
                        match self.read_tag()? {
                            Tag::Close { name: close } => {
                                if close != name {
                                    return Err(LayoutError::TagMismatch {
                                        doc: self.doc.to_string(),
                                        expected: name,
                                        found: close,
                                        line: child_pos.0,
                                        col: child_pos.1,
                                    });
                                }
                                break;
                            }
                            _ => unreachable!("peek_is_close guarantees a close tag"),
                        }
                    }
                    let (child, _) = self.parse_node()?;
                    children.push(child);
                }
                if name == "ref" {
                    if !children.is_empty() {
                        return Err(LayoutError::RefWithChildren {
                            doc: self.doc.to_string(),
                            line: pos.0,
                            col: pos.1,
                        });
                    }
                    return Ok((self.finish_leaf(name, target, pos)?, pos));
                }
                Ok((LayoutNode::Element { tag: name, children }, pos))
            }
            Tag::Close { name } => Err(LayoutError::TagMismatch {
                doc: self.doc.to_string(),
                expected: "(nothing)".to_string(),
                found: name,
                line: pos.0,
                col: pos.1,
            }),
        }
    }

    fn finish_leaf(
        &self,
        name: String,
        target: Option<String>,
        pos: (usize, usize),
    ) -> Result<LayoutNode, LayoutError> {
        if name == "ref" {
            match target {
                Some(t) => Ok(LayoutNode::Reference { target: t }),
                None => Err(LayoutError::RefWithoutTarget {
                    doc: self.doc.to_string(),
                    line: pos.0,
                    col: pos.1,
                }),
            }
        } else {
            Ok(LayoutNode::Element {
                tag: name,
                children: Vec::new(),
            })
        }
    }

    fn peek_is_close(&mut self) -> bool {
        // self.peek() == '<'; check the character after it without state.
        let mut clone = self.chars.clone();
        clone.next();
        matches!(clone.peek(), Some(&(_, '/')))
    }

    fn read_tag(&mut self) -> Result<Tag, LayoutError> {
        match self.bump() {
            Some('<') => {}
            _ => return Err(self.err("expected `<`")),
        }
        let closing = if self.peek() == Some('/') {
            self.bump();
            true
        } else {
            false
        };
        let name = self.read_name()?;
        let mut target = None;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('>') => {
                    self.bump();
                    return Ok(if closing {
                        Tag::Close { name }
                    } else {
                        Tag::Open { name, target }
                    });
                }
                Some('/') if !closing => {
                    self.bump();
                    if self.peek() == Some('>') {
                        self.bump();
                        return Ok(Tag::SelfClose { name, target });
                    }
                    return Err(self.err("expected `/>`"));
                }
                Some(c) if is_name_char(c) && !closing => {
                    let attr = self.read_name()?;
                    if self.peek() != Some('=') {
                        return Err(self.err(format!("attribute `{attr}` needs =\"value\"")));
                    }
                    self.bump();
                    if self.peek() != Some('"') {
                        return Err(self.err("attribute value must be quoted"));
                    }
                    self.bump();
                    let mut value = String::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some(c) => value.push(c),
                            None => return Err(self.err("unterminated attribute value")),
                        }
                    }
                    if attr == "target" {
                        target = Some(value);
                    }
                    // other attributes are ignored
                }
                Some(c) => return Err(self.err(format!("unexpected `{c}` in tag"))),
                None => return Err(self.err("unterminated tag")),
            }
        }
    }

    fn read_name(&mut self) -> Result<String, LayoutError> {
        let mut name = String::new();
        while matches!(self.peek(), Some(c) if is_name_char(c)) {
            name.push(self.bump().unwrap());
        }
        if name.is_empty() {
            return Err(self.err("expected a tag name"));
        }
        Ok(name)
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '-' | '$')
}

/// Accumulates one document's own elements, dispatching references
/// through `on_ref(target, depth)`.
fn accumulate_doc<E>(
    doc: &LayoutDoc,
    vocab: &UiVocabulary,
    acc: &mut LayoutAcc,
    mut on_ref: impl FnMut(&mut LayoutAcc, &str, u64) -> Result<(), E>,
) -> Result<(), E> {
    fn walk<E>(
        node: &LayoutNode,
        depth: u64,
        vocab: &UiVocabulary,
        acc: &mut LayoutAcc,
        on_ref: &mut impl FnMut(&mut LayoutAcc, &str, u64) -> Result<(), E>,
    ) -> Result<(), E> {
        match node {
            LayoutNode::Element { tag, children } => {
                acc.record(vocab.classify(tag), depth);
                for c in children {
                    walk(c, depth + 1, vocab, acc, on_ref)?;
                }
                Ok(())
            }
            LayoutNode::Reference { target } => on_ref(acc, target, depth),
        }
    }
    walk(&doc.root, 0, vocab, acc, &mut on_ref)
}

/// Summary of a single document treating references as errors; used where
/// a standalone recount is wanted.
pub fn doc_vector_no_refs(doc: &LayoutDoc, vocab: &UiVocabulary) -> Result<LayoutAcc, LayoutError> {
    let mut acc = LayoutAcc::zero(vocab.slot_count());
    accumulate_doc(doc, vocab, &mut acc, |_, target, _| {
        Err(LayoutError::UnresolvedRef {
            doc: doc.name.clone(),
            target: target.to_string(),
        })
    })?;
    Ok(acc)
}

/// Result of the app-level layout pass.
#[derive(Debug, Clone)]
pub struct LayoutVectors {
    /// Per-document summaries, indexed like the input slice.
    pub summaries: Vec<LayoutAcc>,
    /// Accumulated app vector (root documents only).
    pub app_acc: LayoutAcc,
    /// Averaged app vector.
    pub app: LayoutVector,
}

/// Builds per-document summaries leaf-documents-first over the reference
/// graph, splicing referenced summaries by depth shift, then sums the
/// documents nothing references (the roots) into the app vector.
/// Referenced documents contribute only through their inclusion sites.
pub fn layout_vector(docs: &[LayoutDoc], vocab: &UiVocabulary) -> Result<LayoutVectors, LayoutError> {
    let index: HashMap<&str, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.name.as_str(), i))
        .collect();

    // Reference edges and in-degrees.
    let mut refs: Vec<Vec<usize>> = vec![Vec::new(); docs.len()];
    let mut referenced = vec![false; docs.len()];
    for (i, doc) in docs.iter().enumerate() {
        collect_refs(&doc.root, &mut |target| match index.get(target) {
            Some(&j) => {
                refs[i].push(j);
                referenced[j] = true;
                Ok(())
            }
            None => Err(LayoutError::UnresolvedRef {
                doc: doc.name.clone(),
                target: target.to_string(),
            }),
        })?;
    }

    // Leaves-first order; a grey hit is a reference cycle.
    let mut order = Vec::with_capacity(docs.len());
    let mut mark = vec![0u8; docs.len()]; // 0 white, 1 grey, 2 black
    fn visit(
        i: usize,
        refs: &[Vec<usize>],
        mark: &mut [u8],
        order: &mut Vec<usize>,
        docs: &[LayoutDoc],
    ) -> Result<(), LayoutError> {
        match mark[i] {
            1 => Err(LayoutError::ReferenceCycle {
                doc: docs[i].name.clone(),
            }),
            2 => Ok(()),
            _ => {
                mark[i] = 1;
                for &j in &refs[i] {
                    visit(j, refs, mark, order, docs)?;
                }
                mark[i] = 2;
                order.push(i);
                Ok(())
            }
        }
    }
    for i in 0..docs.len() {
        visit(i, &refs, &mut mark, &mut order, docs)?;
    }

    let mut summaries: Vec<Option<LayoutAcc>> = vec![None; docs.len()];
    for &i in &order {
        let mut acc = LayoutAcc::zero(vocab.slot_count());
        accumulate_doc(&docs[i], vocab, &mut acc, |acc, target, depth| {
            let j = index[target];
            acc.splice(
                depth,
                summaries[j].as_ref().expect("leaves-first order broken"),
            );
            Ok::<(), LayoutError>(())
        })?;
        summaries[i] = Some(acc);
    }
    let summaries: Vec<LayoutAcc> = summaries.into_iter().map(Option::unwrap).collect();

    let mut app_acc = LayoutAcc::zero(vocab.slot_count());
    for (i, s) in summaries.iter().enumerate() {
        if !referenced[i] {
            app_acc.merge(s);
        }
    }
    let app = app_acc.averaged();
    Ok(LayoutVectors {
        summaries,
        app_acc,
        app,
    })
}

fn collect_refs<E>(
    node: &LayoutNode,
    f: &mut impl FnMut(&str) -> Result<(), E>,
) -> Result<(), E> {
    match node {
        LayoutNode::Element { children, .. } => {
            for c in children {
                collect_refs(c, f)?;
            }
            Ok(())
        }
        LayoutNode::Reference { target } => f(target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> UiVocabulary {
        UiVocabulary::new(["LinearLayout", "TextView"]).unwrap()
    }

    /// The two-LinearLayout document with two legacy and one customized
    /// element; LinearLayout depths are 0 and 1.
    pub(crate) fn example_doc_text() -> &'static str {
        "<LinearLayout>\n\
           <LinearLayout>\n\
             <TextView/>\n\
             <android.support.v7.widget.Toolbar/>\n\
           </LinearLayout>\n\
           <android.support.v4.view.Pager>\n\
             <com.example.FancyText/>\n\
           </android.support.v4.view.Pager>\n\
         </LinearLayout>\n"
    }

    #[test]
    fn parse_nested_depths() {
        let doc = parse_layout("main", "<A><B/></A>").unwrap();
        match &doc.root {
            LayoutNode::Element { tag, children } => {
                assert_eq!(tag, "A");
                assert_eq!(children.len(), 1);
                assert!(matches!(&children[0], LayoutNode::Element { tag, children } if tag == "B" && children.is_empty()));
            }
            _ => panic!("expected element root"),
        }
    }

    #[test]
    fn parse_single_self_closing() {
        let doc = parse_layout("main", "<A/>").unwrap();
        assert!(matches!(&doc.root, LayoutNode::Element { tag, children } if tag == "A" && children.is_empty()));
    }

    #[test]
    fn parse_mismatch_has_position() {
        let err = parse_layout("main", "<A><B></A></B>").unwrap_err();
        match err {
            LayoutError::TagMismatch {
                expected,
                found,
                line,
                col,
                ..
            } => {
                assert_eq!(expected, "B");
                assert_eq!(found, "A");
                assert_eq!(line, 1);
                assert_eq!(col, 7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_multiple_roots_rejected() {
        assert!(matches!(
            parse_layout("main", "<A/><B/>"),
            Err(LayoutError::MultipleRoots { .. })
        ));
    }

    #[test]
    fn parse_ref_with_children_rejected() {
        assert!(matches!(
            parse_layout("main", "<ref target=\"x\"><A/></ref>"),
            Err(LayoutError::RefWithChildren { .. })
        ));
        // the empty open/close form is still a plain reference
        let doc = parse_layout("main", "<ref target=\"x\"></ref>").unwrap();
        assert!(matches!(&doc.root, LayoutNode::Reference { target } if target == "x"));
    }

    #[test]
    fn parse_ignores_other_attributes() {
        let doc = parse_layout("main", "<A width=\"10\" height=\"4\"/>").unwrap();
        assert!(matches!(&doc.root, LayoutNode::Element { tag, .. } if tag == "A"));
    }

    #[test]
    fn classify_known_legacy_custom() {
        let v = vocab();
        assert_eq!(v.classify("LinearLayout"), SlotId(1));
        assert_eq!(v.classify("TextView"), SlotId(2));
        assert_eq!(v.classify("android.support.v7.widget.Toolbar"), v.legacy_slot());
        assert_eq!(v.classify("com.example.Widget"), v.custom_slot());
        assert_eq!(v.legacy_slot(), SlotId(3));
        assert_eq!(v.custom_slot(), SlotId(4));
    }

    #[test]
    fn worked_example_layout_vector() {
        let v = vocab();
        let doc = parse_layout("main", example_doc_text()).unwrap();
        let out = layout_vector(&[doc], &v).unwrap();
        assert_eq!(out.app.slot(SlotId(1)), (2, 0.5)); // LinearLayout
        assert_eq!(out.app.slot(SlotId(2)), (1, 2.0)); // TextView
        assert_eq!(out.app.slot(v.legacy_slot()), (2, 1.5));
        assert_eq!(out.app.slot(v.custom_slot()), (1, 2.0));
    }

    #[test]
    fn empty_doc_set_zero_vector() {
        let v = vocab();
        let out = layout_vector(&[], &v).unwrap();
        assert!(out.app.slots().iter().all(|&(n, d)| n == 0 && d == 0.0));
    }

    #[test]
    fn reference_splices_at_depth() {
        let v = vocab();
        let a = parse_layout(
            "a",
            "<LinearLayout><LinearLayout><ref target=\"b\"/></LinearLayout></LinearLayout>",
        )
        .unwrap();
        let b = parse_layout("b", "<TextView><TextView/></TextView>").unwrap();
        let out = layout_vector(&[a, b], &v).unwrap();
        // b's root lands at depth 2, its child at 3.
        assert_eq!(out.app.slot(SlotId(2)), (2, 2.5));
        // The spliced result equals the hand-expanded tree.
        let expanded = parse_layout(
            "x",
            "<LinearLayout><LinearLayout><TextView><TextView/></TextView></LinearLayout></LinearLayout>",
        )
        .unwrap();
        let direct = doc_vector_no_refs(&expanded, &v).unwrap();
        assert_eq!(out.app_acc, direct);
    }

    #[test]
    fn included_docs_do_not_double_count() {
        let v = vocab();
        let a = parse_layout("a", "<LinearLayout><ref target=\"b\"/></LinearLayout>").unwrap();
        let b = parse_layout("b", "<TextView/>").unwrap();
        let out = layout_vector(&[a, b], &v).unwrap();
        assert_eq!(out.app_acc.total_elements(), 2);
        assert_eq!(out.app.slot(SlotId(2)), (1, 1.0));
    }

    #[test]
    fn unresolved_reference_is_an_error() {
        let v = vocab();
        let a = parse_layout("a", "<ref target=\"nope\"/>").unwrap();
        assert!(matches!(
            layout_vector(&[a], &v),
            Err(LayoutError::UnresolvedRef { .. })
        ));
    }

    #[test]
    fn reference_cycle_is_an_error() {
        let v = vocab();
        let a = parse_layout("a", "<LinearLayout><ref target=\"b\"/></LinearLayout>").unwrap();
        let b = parse_layout("b", "<LinearLayout><ref target=\"a\"/></LinearLayout>").unwrap();
        assert!(matches!(
            layout_vector(&[a, b], &v),
            Err(LayoutError::ReferenceCycle { .. })
        ));
    }

    #[test]
    fn element_total_matches_expansion() {
        let v = vocab();
        let a = parse_layout(
            "a",
            "<LinearLayout><ref target=\"b\"/><ref target=\"b\"/></LinearLayout>",
        )
        .unwrap();
        let b = parse_layout("b", "<TextView><TextView/><TextView/></TextView>").unwrap();
        let out = layout_vector(&[a, b], &v).unwrap();
        // a's own 1 element + 2 * b's 3 elements
        assert_eq!(out.app_acc.total_elements(), 7);
    }
}
