//! The `.mzia` model description language.
//!
//! ```text
//! automaton boiler {
//!   continuous x! ; continuous y! ;
//!   output a0 ;
//!   location l0 { rate x = 20; rate y = 20; inv y <= 1000; }
//!   trans l0 -> l0 on a0 when y >= 700 reset y := 700 ;
//!   init l0 { x = 20; y = 100; }
//!   schema action a0 [ y! : real | y! = 700 ]
//! }
//! ```
//!
//! Rationals may be written as integers, decimals or fractions `p/q`.
//! Comments run from `//` to the end of the line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{validate_model, ActionDecl, ActionKind, InitDecl, Location, Mzia, RectConstraint, RectOp, TransitionDecl, ValidationReport};
use crate::rational::Rational;
use crate::zschema::{Atom, CmpOp, Decoration, Expr, VarDecl, ZSchema, ZType};

/// A syntax error with a 1-based position.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
    pub line_text: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}:{}: expected {}, found {}", self.line, self.column, self.expected, self.found)?;
        writeln!(f, "  {}", self.line_text)?;
        write!(f, "  {}^", " ".repeat(self.column.saturating_sub(1)))
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),
}

/// Named constants available in schema predicates by default.
pub fn default_constants() -> BTreeMap<String, Rational> {
    BTreeMap::from([("pi".to_string(), Rational::new(314159, 100000))])
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rational),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[(&str, &str)] = &[
    ("->", "->"),
    (":=", ":="),
    ("<=", "<="),
    (">=", ">="),
    ("!=", "!="),
    ("..", ".."),
    ("≤", "<="),
    ("≥", ">="),
    ("≠", "!="),
    ("•", "•"),
    ("<", "<"),
    (">", ">"),
    ("=", "="),
    ("{", "{"),
    ("}", "}"),
    ("[", "["),
    ("]", "]"),
    ("(", "("),
    (")", ")"),
    (";", ";"),
    (":", ":"),
    (",", ","),
    ("|", "|"),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    ("/", "/"),
    ("?", "?"),
    ("!", "!"),
];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut k = 0;
        let col = |k: usize| k + 1;
        while k < chars.len() {
            let (byte, c) = chars[k];
            if c.is_whitespace() {
                k += 1;
                continue;
            }
            let rest = &line[byte..];
            if rest.starts_with("//") {
                break;
            }
            let start = k;
            if c.is_alphabetic() || c == '_' {
                while k < chars.len() && (chars[k].1.is_alphanumeric() || chars[k].1 == '_' || chars[k].1 == '\'') {
                    k += 1;
                }
                // A `?`/`!` glued to a name is its decoration.
                if k < chars.len() && (chars[k].1 == '?' || chars[k].1 == '!') {
                    k += 1;
                }
                let end = chars.get(k).map_or(line.len(), |p| p.0);
                out.push(Spanned { tok: Tok::Ident(line[byte..end].to_string()), line: li + 1, col: col(start) });
                continue;
            }
            if c.is_ascii_digit() {
                while k < chars.len() && chars[k].1.is_ascii_digit() {
                    k += 1;
                }
                if k + 1 < chars.len() && chars[k].1 == '.' && chars[k + 1].1.is_ascii_digit() {
                    k += 1;
                    while k < chars.len() && chars[k].1.is_ascii_digit() {
                        k += 1;
                    }
                }
                let end = chars.get(k).map_or(line.len(), |p| p.0);
                let n: Rational = line[byte..end].parse().expect("lexed number");
                out.push(Spanned { tok: Tok::Num(n), line: li + 1, col: col(start) });
                continue;
            }
            match SYMBOLS.iter().find(|(s, _)| rest.starts_with(s)) {
                Some((s, canon)) => {
                    out.push(Spanned { tok: Tok::Sym(canon), line: li + 1, col: col(start) });
                    k += s.chars().count();
                }
                None => {
                    return Err(ParseError {
                        line: li + 1,
                        column: col(start),
                        expected: "a token".into(),
                        found: format!("`{c}`"),
                        line_text: line.to_string(),
                    })
                }
            }
        }
    }
    let last = src.lines().count().max(1);
    out.push(Spanned { tok: Tok::Eof, line: last, col: src.lines().last().map_or(1, |l| l.chars().count() + 1) });
    Ok(out)
}

fn split_decoration(name: &str) -> (&str, Decoration) {
    if let Some(n) = name.strip_suffix('?') {
        (n, Decoration::Input)
    } else if let Some(n) = name.strip_suffix('!') {
        (n, Decoration::Output)
    } else {
        (name, Decoration::Internal)
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Spanned>,
    pos: usize,
    constants: BTreeMap<String, Rational>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str, constants: BTreeMap<String, Rational>) -> PResult<Self> {
        Ok(Parser { src, toks: lex(src)?, pos: 0, constants })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let sp = &self.toks[self.pos];
        ParseError {
            line: sp.line,
            column: sp.col,
            expected: expected.into(),
            found: sp.tok.to_string(),
            line_text: self.src.lines().nth(sp.line - 1).unwrap_or("").to_string(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("`{s}`")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    /// Plain identifier without decoration.
    fn name(&mut self, what: &str) -> PResult<String> {
        let save = self.pos;
        let s = self.ident(what)?;
        if split_decoration(&s).1 != Decoration::Internal {
            self.pos = save;
            return Err(self.error(what));
        }
        Ok(s)
    }

    /// Variable reference; a decoration is accepted and dropped.
    fn var_name(&mut self) -> PResult<String> {
        let s = self.ident("a variable name")?;
        Ok(split_decoration(&s).0.to_string())
    }

    fn integer(&mut self) -> PResult<i64> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Num(n) if n.is_integer() => {
                self.bump();
                let v = n.to_i64().ok_or_else(|| self.error("a 64-bit integer"))?;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.error("an integer")),
        }
    }

    /// `-? num ("/" num)?` or a named constant.
    fn rational(&mut self) -> PResult<Rational> {
        let neg = self.eat_sym("-");
        let v = match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                if self.is_sym("/") && matches!(self.peek_at(1), Tok::Num(_)) {
                    self.bump();
                    let Tok::Num(d) = self.bump() else { unreachable!() };
                    if d.is_zero() {
                        return Err(self.error("a non-zero denominator"));
                    }
                    n / d
                } else {
                    n
                }
            }
            Tok::Ident(c) if self.constants.contains_key(&c) => {
                self.bump();
                self.constants[&c].clone()
            }
            _ => return Err(self.error("a rational number")),
        };
        Ok(if neg { -v } else { v })
    }

    fn rect_op(&mut self) -> PResult<RectOp> {
        let op = match self.peek() {
            Tok::Sym("<=") => RectOp::Le,
            Tok::Sym("<") => RectOp::Lt,
            Tok::Sym(">=") => RectOp::Ge,
            Tok::Sym(">") => RectOp::Gt,
            _ => return Err(self.error("a comparison (`<`, `<=`, `>=`, `>`)")),
        };
        self.bump();
        Ok(op)
    }

    /// `v op c`, `c op v`, or `c op v op c`.
    fn rect(&mut self, out: &mut Vec<RectConstraint>) -> PResult<()> {
        let flip = |op: RectOp| match op {
            RectOp::Le => RectOp::Ge,
            RectOp::Lt => RectOp::Gt,
            RectOp::Ge => RectOp::Le,
            RectOp::Gt => RectOp::Lt,
        };
        if matches!(self.peek(), Tok::Ident(s) if !self.constants.contains_key(s)) {
            let v = self.var_name()?;
            let op = self.rect_op()?;
            let c = self.rational()?;
            out.push(RectConstraint { var: v, op, value: c });
            return Ok(());
        }
        let c = self.rational()?;
        let op = self.rect_op()?;
        let v = self.var_name()?;
        out.push(RectConstraint { var: v.clone(), op: flip(op), value: c });
        if matches!(self.peek(), Tok::Sym("<" | "<=" | ">" | ">=")) {
            let op2 = self.rect_op()?;
            let c2 = self.rational()?;
            out.push(RectConstraint { var: v, op: op2, value: c2 });
        }
        Ok(())
    }

    fn rect_list(&mut self) -> PResult<Vec<RectConstraint>> {
        let mut out = Vec::new();
        self.rect(&mut out)?;
        while self.eat_sym(",") {
            self.rect(&mut out)?;
        }
        Ok(out)
    }

    fn ztype(&mut self) -> PResult<ZType> {
        if self.eat_sym("{") {
            let mut labels = Vec::new();
            if !self.is_sym("}") {
                labels.push(self.name("a label")?);
                while self.eat_sym(",") {
                    labels.push(self.name("a label")?);
                }
            }
            self.expect_sym("}")?;
            return Ok(ZType::Enum(labels));
        }
        let t = self.ident("a type (`real`, `int`, `int lo..hi` or `{...}`)")?;
        match t.as_str() {
            "real" | "ℝ" => Ok(ZType::Real),
            "int" | "ℤ" => {
                if matches!(self.peek(), Tok::Num(_)) || self.is_sym("-") {
                    let lo = self.integer()?;
                    self.expect_sym("..")?;
                    let hi = self.integer()?;
                    Ok(ZType::IntRange(lo, hi))
                } else {
                    Ok(ZType::Int)
                }
            }
            _ => {
                self.pos -= 1;
                Err(self.error("a type (`real`, `int`, `int lo..hi` or `{...}`)"))
            }
        }
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let raw = self.ident("a variable name")?;
        let (name, deco) = split_decoration(&raw);
        let deco = match deco {
            Decoration::Internal if self.eat_sym("?") => Decoration::Input,
            Decoration::Internal if self.eat_sym("!") => Decoration::Output,
            d => d,
        };
        self.expect_sym(":")?;
        let ty = self.ztype()?;
        Ok(VarDecl::new(name, deco, ty))
    }

    /// `[ decls | atoms ]`, with an optional `exists decls •` block.
    fn schema(&mut self) -> PResult<ZSchema> {
        self.expect_sym("[")?;
        let mut decls = Vec::new();
        if !self.is_sym("|") && !self.is_sym("]") {
            decls.push(self.var_decl()?);
            while self.eat_sym(";") || self.eat_sym(",") {
                if self.is_sym("|") || self.is_sym("]") {
                    break;
                }
                decls.push(self.var_decl()?);
            }
        }
        let mut hidden = Vec::new();
        let mut predicate = Vec::new();
        if self.eat_sym("|") {
            if self.is_kw("exists") {
                self.bump();
                hidden.push(self.var_decl()?);
                while self.eat_sym(",") {
                    hidden.push(self.var_decl()?);
                }
                self.expect_sym("•")?;
            }
            let known: BTreeSet<String> = decls.iter().chain(&hidden).map(|d| d.name.clone()).collect();
            if !self.is_sym("]") {
                self.atoms(&known, &mut predicate)?;
                while self.eat_sym(";") {
                    if self.is_sym("]") {
                        break;
                    }
                    self.atoms(&known, &mut predicate)?;
                }
            }
        }
        self.expect_sym("]")?;
        Ok(ZSchema { decls, hidden, predicate })
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym(">") => CmpOp::Gt,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    /// One atom, or a chain `a ≤ b ≤ c` expanded into several.
    fn atoms(&mut self, known: &BTreeSet<String>, out: &mut Vec<Atom>) -> PResult<()> {
        for (kw, even) in [("even", true), ("odd", false)] {
            if self.is_kw(kw) && matches!(self.peek_at(1), Tok::Sym("(")) {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr(known)?;
                self.expect_sym(")")?;
                out.push(if even { Atom::Even(e) } else { Atom::Odd(e) });
                return Ok(());
            }
        }
        for (kw, b) in [("true", true), ("false", false)] {
            if self.is_kw(kw) && !known.contains(kw) {
                self.bump();
                out.push(Atom::Bool(b));
                return Ok(());
            }
        }
        let mut lhs = self.expr(known)?;
        if self.is_kw("in") {
            self.bump();
            self.expect_sym("{")?;
            let mut set = vec![self.expr(known)?];
            while self.eat_sym(",") {
                set.push(self.expr(known)?);
            }
            self.expect_sym("}")?;
            out.push(Atom::Member(lhs, set));
            return Ok(());
        }
        let Some(op) = self.cmp_op() else {
            return Err(self.error("a comparison"));
        };
        let mut rhs = self.expr(known)?;
        out.push(Atom::Cmp(lhs, op, rhs.clone()));
        while let Some(op) = self.cmp_op() {
            lhs = rhs;
            rhs = self.expr(known)?;
            out.push(Atom::Cmp(lhs, op, rhs.clone()));
        }
        Ok(())
    }

    fn expr(&mut self, known: &BTreeSet<String>) -> PResult<Expr> {
        let mut e = self.term(known)?;
        loop {
            if self.eat_sym("+") {
                e = Expr::Add(Box::new(e), Box::new(self.term(known)?));
            } else if self.eat_sym("-") {
                e = Expr::Sub(Box::new(e), Box::new(self.term(known)?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self, known: &BTreeSet<String>) -> PResult<Expr> {
        let mut e = self.unary(known)?;
        loop {
            if self.eat_sym("*") {
                e = Expr::Mul(Box::new(e), Box::new(self.unary(known)?));
            } else if self.eat_sym("/") {
                let d = self.unary(known)?;
                e = match (e, d) {
                    (Expr::Num(a), Expr::Num(b)) if !b.is_zero() => Expr::Num(a / b),
                    (a, b) => Expr::Div(Box::new(a), Box::new(b)),
                };
            } else if self.is_kw("mod") {
                self.bump();
                e = Expr::Mod(Box::new(e), Box::new(self.unary(known)?));
            } else if matches!(self.peek(), Tok::Ident(_)) && matches!(e, Expr::Num(_)) {
                // Juxtaposition `30x` is a product.
                e = Expr::Mul(Box::new(e), Box::new(self.unary(known)?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self, known: &BTreeSet<String>) -> PResult<Expr> {
        if self.eat_sym("-") {
            return Ok(match self.unary(known)? {
                Expr::Num(n) => Expr::Num(-n),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.primary(known)
    }

    fn primary(&mut self, known: &BTreeSet<String>) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr(known)?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(raw) => {
                self.bump();
                if raw == "floor" && self.is_sym("(") {
                    self.bump();
                    let e = self.expr(known)?;
                    self.expect_sym(")")?;
                    return Ok(Expr::Floor(Box::new(e)));
                }
                let (name, _) = split_decoration(&raw);
                if known.contains(name) {
                    Ok(Expr::Var(name.to_string()))
                } else if let Some(c) = self.constants.get(name) {
                    Ok(Expr::Num(c.clone()))
                } else {
                    Ok(Expr::Label(raw))
                }
            }
            _ => Err(self.error("an expression")),
        }
    }

    fn model(&mut self) -> PResult<Mzia> {
        self.expect_kw("automaton")?;
        let name = self.name("an automaton name")?;
        self.expect_sym("{")?;
        let mut m = Mzia {
            name,
            variables: Vec::new(),
            clock: "clock".into(),
            location_var: "l".into(),
            actions: Vec::new(),
            locations: Vec::new(),
            initial: InitDecl { location: String::new(), point: BTreeMap::new() },
            transitions: Vec::new(),
        };
        let mut action_schemas: Vec<(String, ZSchema, Spanned)> = Vec::new();
        let mut state_schemas: Vec<(String, ZSchema, Spanned)> = Vec::new();
        let mut seen_init = false;
        while !self.eat_sym("}") {
            let kw = self.ident("a declaration keyword")?;
            match kw.as_str() {
                "continuous" | "discrete" => {
                    let raw = self.ident("a variable name")?;
                    let (vname, mut deco) = split_decoration(&raw);
                    if deco == Decoration::Internal {
                        if self.eat_sym("?") {
                            deco = Decoration::Input;
                        } else if self.eat_sym("!") {
                            deco = Decoration::Output;
                        }
                    }
                    let ty = if self.eat_sym(":") {
                        self.ztype()?
                    } else if kw == "continuous" {
                        ZType::Real
                    } else {
                        return Err(self.error("`:` and a type for a discrete variable"));
                    };
                    if (kw == "continuous") != ty.is_continuous() {
                        self.pos -= 1;
                        return Err(self.error(if kw == "continuous" { "type `real`" } else { "a discrete type" }));
                    }
                    m.variables.push(VarDecl::new(vname, deco, ty));
                    self.expect_sym(";")?;
                }
                "input" | "output" | "internal" => {
                    let kind = match kw.as_str() {
                        "input" => ActionKind::Input,
                        "output" => ActionKind::Output,
                        _ => ActionKind::Internal,
                    };
                    loop {
                        let a = self.name("an action name")?;
                        m.actions.push(ActionDecl { name: a, kind, schema: ZSchema::trivial() });
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(";")?;
                }
                "clock" => {
                    m.clock = self.name("a clock name")?;
                    self.expect_sym(";")?;
                }
                "const" => {
                    let c = self.name("a constant name")?;
                    self.expect_sym("=")?;
                    let v = self.rational()?;
                    self.constants.insert(c, v);
                    self.expect_sym(";")?;
                }
                "location" => {
                    let lname = self.name("a location name")?;
                    self.expect_sym("{")?;
                    let mut loc = Location { name: lname, rates: BTreeMap::new(), invariant: Vec::new(), template: None };
                    while !self.eat_sym("}") {
                        if self.is_kw("rate") {
                            self.bump();
                            let v = self.var_name()?;
                            self.expect_sym("=")?;
                            let k = self.rational()?;
                            loc.rates.insert(v, k);
                        } else if self.is_kw("inv") {
                            self.bump();
                            loc.invariant.extend(self.rect_list()?);
                        } else {
                            return Err(self.error("`rate`, `inv` or `}`"));
                        }
                        self.expect_sym(";")?;
                    }
                    m.locations.push(loc);
                }
                "trans" => {
                    let source = self.name("a source location")?;
                    self.expect_sym("->")?;
                    let target = self.name("a target location")?;
                    self.expect_kw("on")?;
                    let action = self.name("an action name")?;
                    let mut t = TransitionDecl { source, action, guard: Vec::new(), resets: BTreeMap::new(), target };
                    if self.is_kw("when") {
                        self.bump();
                        t.guard = self.rect_list()?;
                    }
                    if self.is_kw("reset") {
                        self.bump();
                        loop {
                            let v = self.var_name()?;
                            self.expect_sym(":=")?;
                            let c = self.rational()?;
                            t.resets.insert(v, c);
                            self.eat_sym(",");
                            if !matches!(self.peek(), Tok::Ident(_)) {
                                break;
                            }
                        }
                    }
                    self.expect_sym(";")?;
                    m.transitions.push(t);
                }
                "init" => {
                    if seen_init {
                        self.pos -= 1;
                        return Err(self.error("a single `init` declaration"));
                    }
                    seen_init = true;
                    m.initial.location = self.name("the initial location")?;
                    self.expect_sym("{")?;
                    loop {
                        let v = self.var_name()?;
                        self.expect_sym("=")?;
                        let c = self.rational()?;
                        m.initial.point.insert(v, c);
                        self.expect_sym(";")?;
                        if self.eat_sym("}") {
                            break;
                        }
                    }
                }
                "schema" => {
                    let kind = self.ident("`state` or `action`")?;
                    let at = self.toks[self.pos].clone();
                    let target = self.name("a location or action name")?;
                    let s = self.schema()?;
                    self.eat_sym(";");
                    match kind.as_str() {
                        "action" => action_schemas.push((target, s, at)),
                        "state" => state_schemas.push((target, s, at)),
                        _ => {
                            return Err(ParseError {
                                line: at.line,
                                column: at.col,
                                expected: "`state` or `action`".into(),
                                found: format!("`{kind}`"),
                                line_text: self.src.lines().nth(at.line - 1).unwrap_or("").to_string(),
                            })
                        }
                    }
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.error("a declaration (`continuous`, `discrete`, `input`, `output`, `internal`, `clock`, `const`, `location`, `trans`, `init`, `schema`)"));
                }
            }
        }
        if !matches!(self.peek(), Tok::Eof) {
            return Err(self.error("end of input"));
        }
        if !seen_init {
            return Err(self.error("an `init` declaration"));
        }
        let unknown = |p: &Parser, at: &Spanned, what: &str| ParseError {
            line: at.line,
            column: at.col,
            expected: what.to_string(),
            found: at.tok.to_string(),
            line_text: p.src.lines().nth(at.line - 1).unwrap_or("").to_string(),
        };
        for (a, s, at) in action_schemas {
            match m.actions.iter_mut().find(|d| d.name == a) {
                Some(d) => d.schema = s,
                None => return Err(unknown(self, &at, "a declared action")),
            }
        }
        for (l, s, at) in state_schemas {
            match m.locations.iter_mut().find(|d| d.name == l) {
                Some(d) => d.template = Some(s),
                None => return Err(unknown(self, &at, "a declared location")),
            }
        }
        Ok(m)
    }
}

/// Parses a model without validating it.
pub fn parse_model_unchecked(text: &str) -> Result<Mzia, ParseError> {
    Parser::new(text, default_constants())?.model()
}

/// Parses and validates a model. Validation warnings are not errors.
pub fn parse_model(text: &str) -> Result<Mzia, LoadError> {
    let m = parse_model_unchecked(text)?;
    let report = validate_model(&m);
    if !report.is_ok() {
        return Err(LoadError::Invalid(report));
    }
    Ok(m)
}

/// Parses a schema literal such as `[ x? : int 0..100; y! : real | y! = pi * x? ]`.
pub fn parse_schema(text: &str, constants: &BTreeMap<String, Rational>) -> Result<ZSchema, ParseError> {
    let mut p = Parser::new(text, constants.clone())?;
    let s = p.schema()?;
    if !matches!(p.peek(), Tok::Eof) {
        return Err(p.error("end of input"));
    }
    Ok(s)
}

/// Prints a model in the language accepted by [`parse_model`].
pub fn print_model(m: &Mzia) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "automaton {} {{", m.name);
    if m.clock != "clock" {
        let _ = writeln!(out, "  clock {};", m.clock);
    }
    for v in &m.variables {
        let kw = if v.ty.is_continuous() { "continuous" } else { "discrete" };
        let _ = writeln!(out, "  {kw} {} : {};", v.decorated(), v.ty);
    }
    for kind in [ActionKind::Input, ActionKind::Output, ActionKind::Internal] {
        let names: Vec<&str> = m.actions.iter().filter(|a| a.kind == kind).map(|a| a.name.as_str()).collect();
        if !names.is_empty() {
            let _ = writeln!(out, "  {} {};", kind.keyword(), names.join(", "));
        }
    }
    for loc in &m.locations {
        let _ = writeln!(out, "  location {} {{", loc.name);
        for (v, k) in &loc.rates {
            let _ = writeln!(out, "    rate {v} = {k};");
        }
        if !loc.invariant.is_empty() {
            let inv: Vec<String> = loc.invariant.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(out, "    inv {};", inv.join(", "));
        }
        let _ = writeln!(out, "  }}");
    }
    for t in &m.transitions {
        let _ = write!(out, "  trans {} -> {} on {}", t.source, t.target, t.action);
        if !t.guard.is_empty() {
            let g: Vec<String> = t.guard.iter().map(|r| r.to_string()).collect();
            let _ = write!(out, " when {}", g.join(", "));
        }
        if !t.resets.is_empty() {
            let r: Vec<String> = t.resets.iter().map(|(v, c)| format!("{v} := {c}")).collect();
            let _ = write!(out, " reset {}", r.join(", "));
        }
        let _ = writeln!(out, ";");
    }
    let _ = write!(out, "  init {} {{", m.initial.location);
    for (v, c) in &m.initial.point {
        let _ = write!(out, " {v} = {c};");
    }
    let _ = writeln!(out, " }}");
    for a in &m.actions {
        if a.schema != ZSchema::trivial() {
            let _ = writeln!(out, "  schema action {} {}", a.name, a.schema);
        }
    }
    for loc in &m.locations {
        if let Some(t) = &loc.template {
            let _ = writeln!(out, "  schema state {} {}", loc.name, t);
        }
    }
    let _ = writeln!(out, "}}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zschema::{Assignment, Value};

    const SMALL: &str = "
automaton demo {
  continuous x! ;
  output go;
  location a { rate x = 2; inv x <= 10; }
  location b { rate x = 3; }
  trans a -> b on go when x >= 4 reset x := 1/2;
  init a { x = 0; }
  schema action go [ x! : real | x! = 0.5 ]
}
";

    #[test]
    fn parses_small_model() {
        let m = parse_model(SMALL).unwrap();
        assert_eq!(m.locations.len(), 2);
        assert_eq!(m.transitions[0].resets["x"], Rational::new(1, 2));
        assert_eq!(m.locations[0].rates["x"], Rational::from_int(2));
        let s = &m.action("go").unwrap().schema;
        assert!(s.evaluate(&[("x".to_string(), Value::Num(Rational::new(1, 2)))].into()).unwrap());
    }

    #[test]
    fn print_then_parse_is_identity() {
        let m = parse_model(SMALL).unwrap();
        let again = parse_model(&print_model(&m)).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn error_positions_are_one_based() {
        let err = parse_model_unchecked("automaton m {\n  location a { rate x = ; }\n}").unwrap_err();
        assert_eq!((err.line, err.column), (2, 25));
        assert!(err.expected.contains("rational"));
        assert!(err.to_string().contains("location a { rate x = ; }"));
    }

    #[test]
    fn zero_rate_fails_validation() {
        let src = SMALL.replace("rate x = 2", "rate x = 0");
        match parse_model(&src) {
            Err(LoadError::Invalid(r)) => assert!(r.has_error("positive-rate")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_literal_with_chain_and_juxtaposition() {
        let s = parse_schema("[ x! : real; y! : real | 4600 <= 30x! - 20y! <= 13600 ]", &default_constants()).unwrap();
        assert_eq!(s.predicate.len(), 2);
        let at = |x: i64, y: i64| -> Assignment {
            [("x".to_string(), Value::from(x)), ("y".to_string(), Value::from(y))].into()
        };
        assert!(s.evaluate(&at(620, 700)).unwrap());
        assert!(!s.evaluate(&at(600, 700)).unwrap());
    }
}
