//! Recursive-descent parser and printer for the plan DSL.
//!
//! ```text
//! plan        := stmt (";" stmt)* ";"? ;
//! stmt        := "target" labels | "anchor" IDENT ":" labels
//!              | "viewpoint" view_spec | predicate ;
//! labels      := label ("|" label)* ;
//! label       := WORD+ | STRING ;
//! predicate   := (KIND "(" args? ")" | SUPERLATIVE) ("@" ("scene" | "camera"))? ;
//! args        := IDENT ("," IDENT)* ("," NUMBER)? ;
//! view_spec   := "top" | "front" | "side" | "pose" "(" NUMBER ("," NUMBER){5} ")" ;
//! ```

use crate::camera::ViewSpec;
use crate::error::PlanError;
use crate::plan::ast::{Anchor, Frame, Predicate, PredicateKind, PredicatePlan};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Num(f64),
    Semi,
    Colon,
    Pipe,
    LParen,
    RParen,
    Comma,
    At,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("{w:?}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Semi => "';'".into(),
            Tok::Colon => "':'".into(),
            Tok::Pipe => "'|'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::At => "'@'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '\''
}

pub(crate) fn is_word(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_word_start(c)) && chars.all(is_word_char)
}

fn lex(src: &str) -> Result<Vec<Spanned>, PlanError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |line, column, message: String| PlanError::Syntax { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let single = match c {
            ';' => Some(Tok::Semi),
            ':' => Some(Tok::Colon),
            '|' => Some(Tok::Pipe),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '@' => Some(Tok::At),
            _ => None,
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if let Some(tok) = single {
            out.push(Spanned { tok, line: tl, column: tc });
            i += 1;
            col += 1;
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(tl, tc, "unterminated string".into())),
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some(&e @ ('"' | '\\')) => s.push(e),
                            Some('n') => s.push('\n'),
                            _ => return Err(syntax(line, col, "bad escape in string".into())),
                        }
                        i += 2;
                        col += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        if ch == '\n' {
                            line += 1;
                            col = 1;
                        } else {
                            col += 1;
                        }
                        i += 1;
                    }
                }
            }
            out.push(Spanned { tok: Tok::Str(s), line: tl, column: tc });
            continue;
        }
        if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(tl, tc, format!("bad number {text:?}")))?;
            if !v.is_finite() {
                return Err(syntax(tl, tc, format!("number {text:?} is not finite")));
            }
            col += i - start;
            out.push(Spanned { tok: Tok::Num(v), line: tl, column: tc });
            continue;
        }
        if is_word_start(c) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            col += i - start;
            out.push(Spanned { tok: Tok::Word(chars[start..i].iter().collect()), line: tl, column: tc });
            continue;
        }
        return Err(syntax(tl, tc, format!("unexpected character {c:?}")));
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

struct RawPredicate {
    pred: Predicate,
    explicit_frame: Option<Frame>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> PlanError {
        let t = &self.toks[self.pos];
        PlanError::Syntax { line: t.line, column: t.column, message: message.into() }
    }

    fn expect(&mut self, want: Tok) -> Result<(), PlanError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {}, found {}", want.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self) -> Result<String, PlanError> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.bump();
                Ok(w)
            }
            other => Err(self.error_here(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn number(&mut self) -> Result<f64, PlanError> {
        match *self.peek() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            ref other => Err(self.error_here(format!("expected number, found {}", other.describe()))),
        }
    }

    fn label(&mut self) -> Result<String, PlanError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Word(_) => {
                let mut words = Vec::new();
                while let Tok::Word(w) = self.peek().clone() {
                    self.bump();
                    words.push(w);
                }
                Ok(words.join(" "))
            }
            other => Err(self.error_here(format!("expected label, found {}", other.describe()))),
        }
    }

    fn labels(&mut self) -> Result<Vec<String>, PlanError> {
        let mut out = vec![self.label()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            out.push(self.label()?);
        }
        Ok(out)
    }

    fn view_spec(&mut self) -> Result<ViewSpec, PlanError> {
        let word = self.ident()?;
        match word.as_str() {
            "top" => Ok(ViewSpec::Top),
            "front" => Ok(ViewSpec::Front),
            "side" => Ok(ViewSpec::Side),
            "pose" => {
                self.expect(Tok::LParen)?;
                let mut v = [0.0; 6];
                for (i, slot) in v.iter_mut().enumerate() {
                    if i > 0 {
                        self.expect(Tok::Comma)?;
                    }
                    *slot = self.number()?;
                }
                self.expect(Tok::RParen)?;
                Ok(ViewSpec::Pose { eye: [v[0], v[1], v[2]], target: [v[3], v[4], v[5]] })
            }
            other => Err(PlanError::Syntax {
                line: self.toks[self.pos - 1].line,
                column: self.toks[self.pos - 1].column,
                message: format!("unknown view {other:?}; expected top, front, side or pose(...)"),
            }),
        }
    }

    fn frame_suffix(&mut self) -> Result<Option<Frame>, PlanError> {
        if *self.peek() != Tok::At {
            return Ok(None);
        }
        self.bump();
        match self.ident()?.as_str() {
            "scene" => Ok(Some(Frame::Scene)),
            "camera" => Ok(Some(Frame::Camera)),
            other => Err(self.error_here(format!("unknown frame {other:?}"))),
        }
    }

    fn predicate(&mut self, word: &str, start: &Spanned) -> Result<RawPredicate, PlanError> {
        if let Some(kind) = PredicateKind::from_superlative(word) {
            let explicit_frame = self.frame_suffix()?;
            return Ok(RawPredicate { pred: Predicate::new(kind, vec![]), explicit_frame });
        }
        let Some(kind) = PredicateKind::from_name(word) else {
            return Err(PlanError::Syntax {
                line: start.line,
                column: start.column,
                message: format!("unknown predicate keyword {word:?}"),
            });
        };
        self.expect(Tok::LParen)?;
        let mut anchors = Vec::new();
        let mut param = None;
        if *self.peek() != Tok::RParen {
            loop {
                match self.peek().clone() {
                    Tok::Word(w) if param.is_none() => {
                        self.bump();
                        anchors.push(w);
                    }
                    Tok::Num(n) if param.is_none() => {
                        self.bump();
                        param = Some(n);
                    }
                    other => return Err(self.error_here(format!("unexpected {} in arguments", other.describe()))),
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let explicit_frame = self.frame_suffix()?;
        let mut pred = Predicate::new(kind, anchors);
        if param.is_some() {
            pred.param = param;
        }
        Ok(RawPredicate { pred, explicit_frame })
    }

    fn plan(&mut self) -> Result<PredicatePlan, PlanError> {
        let mut targets: Option<Vec<String>> = None;
        let mut anchors = Vec::new();
        let mut viewpoint = None;
        let mut raw = Vec::new();
        loop {
            let start = self.toks[self.pos].clone();
            let word = match start.tok.clone() {
                Tok::Word(w) => {
                    self.bump();
                    w
                }
                other => return Err(self.error_here(format!("expected statement, found {}", other.describe()))),
            };
            match word.as_str() {
                "target" => {
                    if targets.is_some() {
                        return Err(PlanError::Syntax {
                            line: start.line,
                            column: start.column,
                            message: "duplicate target statement".into(),
                        });
                    }
                    targets = Some(self.labels()?);
                }
                "anchor" => {
                    let name = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let labels = self.labels()?;
                    anchors.push(Anchor { name, labels });
                }
                "viewpoint" => {
                    if viewpoint.is_some() {
                        return Err(PlanError::Syntax {
                            line: start.line,
                            column: start.column,
                            message: "duplicate viewpoint statement".into(),
                        });
                    }
                    viewpoint = Some(self.view_spec()?);
                }
                _ => raw.push(self.predicate(&word, &start)?),
            }
            match self.peek() {
                Tok::Semi => {
                    self.bump();
                    if *self.peek() == Tok::Eof {
                        break;
                    }
                }
                Tok::Eof => break,
                other => return Err(self.error_here(format!("expected ';', found {}", other.describe()))),
            }
        }
        let mut plan = PredicatePlan {
            target_labels: targets.ok_or(PlanError::MissingTarget)?,
            anchors,
            constraints: Vec::with_capacity(raw.len()),
            viewpoint,
        };
        for RawPredicate { mut pred, explicit_frame } in raw {
            pred.frame = explicit_frame.unwrap_or_else(|| plan.default_frame(pred.kind));
            plan.constraints.push(pred);
        }
        plan.check()?;
        Ok(plan)
    }
}

/// Parses DSL text into a checked AST with defaults filled in.
pub fn parse_plan(text: &str) -> Result<PredicatePlan, PlanError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.plan()
}

fn print_label(label: &str) -> String {
    let bare = !label.is_empty() && label.split(' ').all(is_word);
    if bare {
        label.to_string()
    } else {
        let escaped = label.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
        format!("\"{escaped}\"")
    }
}

fn print_labels(labels: &[String]) -> String {
    labels.iter().map(|l| print_label(l)).collect::<Vec<_>>().join(" | ")
}

fn print_view(v: &ViewSpec) -> String {
    match v {
        ViewSpec::Top => "top".into(),
        ViewSpec::Front => "front".into(),
        ViewSpec::Side => "side".into(),
        ViewSpec::Pose { eye, target } => format!(
            "pose({}, {}, {}, {}, {}, {})",
            eye[0], eye[1], eye[2], target[0], target[1], target[2]
        ),
    }
}

/// Canonical text form; `parse_plan(&print_plan(p)) == p` for checked plans.
pub fn print_plan(plan: &PredicatePlan) -> String {
    let mut stmts = vec![format!("target {}", print_labels(&plan.target_labels))];
    for a in &plan.anchors {
        stmts.push(format!("anchor {}: {}", a.name, print_labels(&a.labels)));
    }
    if let Some(v) = &plan.viewpoint {
        stmts.push(format!("viewpoint {}", print_view(v)));
    }
    for c in &plan.constraints {
        let mut s = match (c.anchor_refs.is_empty(), c.kind.superlative_name()) {
            (true, Some(sup)) if c.param.is_none() => sup.to_string(),
            _ => {
                let mut args: Vec<String> = c.anchor_refs.clone();
                if let Some(p) = c.param {
                    args.push(format!("{p}"));
                }
                format!("{}({})", c.kind, args.join(", "))
            }
        };
        if c.frame != plan.default_frame(c.kind) {
            s.push_str(match c.frame {
                Frame::Scene => "@scene",
                Frame::Camera => "@camera",
            });
        }
        stmts.push(s);
    }
    stmts.join("; ")
}
