// SPDX-License-Identifier: Apache-2.0

//! Module interfaces and a small parser for ANSI-style Verilog module headers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SourceLoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortDecl {
    pub name: String,
    pub direction: Direction,
    pub width: usize,
    pub is_clock: bool,
    pub is_reset: bool,
}

impl PortDecl {
    /// Builds a port, deriving the clock/reset flags from its name.
    pub fn new(name: impl Into<String>, direction: Direction, width: usize) -> Self {
        let name = name.into();
        let lower = name.to_ascii_lowercase();
        let is_clock = direction == Direction::Input && width == 1 && (lower == "clk" || lower == "clock");
        let is_reset = lower.contains("reset") || lower == "rst" || lower == "areset";
        Self { name, direction, width, is_clock, is_reset }
    }

    pub fn input(name: impl Into<String>, width: usize) -> Self {
        Self::new(name, Direction::Input, width)
    }

    pub fn output(name: impl Into<String>, width: usize) -> Self {
        Self::new(name, Direction::Output, width)
    }

    /// Inputs that appear in stimulus steps: every input except the clock.
    pub fn is_data_input(&self) -> bool {
        self.direction == Direction::Input && !self.is_clock
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModuleInterface {
    module_name: String,
    ports: Vec<PortDecl>,
}

impl ModuleInterface {
    pub fn new(module_name: impl Into<String>, ports: Vec<PortDecl>) -> Result<Self> {
        let module_name = module_name.into();
        if !is_identifier(&module_name) {
            return Err(Error::Invalid(format!("bad module name {module_name:?}")));
        }
        let mut seen = BTreeSet::new();
        for p in &ports {
            if !is_identifier(&p.name) {
                return Err(Error::Invalid(format!("bad port name {:?}", p.name)));
            }
            if p.width == 0 {
                return Err(Error::Invalid(format!("port {} has zero width", p.name)));
            }
            if p.is_clock && (p.direction != Direction::Input || p.width != 1) {
                return Err(Error::Invalid(format!("clock port {} must be a 1-bit input", p.name)));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(Error::Invalid(format!("duplicate port {}", p.name)));
            }
        }
        if !ports.iter().any(|p| p.direction == Direction::Input) {
            return Err(Error::Invalid(format!("module {module_name} has no input port")));
        }
        if !ports.iter().any(|p| p.direction == Direction::Output) {
            return Err(Error::Invalid(format!("module {module_name} has no output port")));
        }
        Ok(Self { module_name, ports })
    }

    pub fn module_name(&self) -> &str {
        &self.module_name
    }

    pub fn ports(&self) -> &[PortDecl] {
        &self.ports
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn data_inputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| p.is_data_input())
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| p.direction == Direction::Output)
    }

    pub fn clock_ports(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| p.is_clock)
    }

    pub fn has_clock(&self) -> bool {
        self.clock_ports().next().is_some()
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    loc: SourceLoc,
}

fn lex(source: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let loc = SourceLoc { line, column: col };
        if c.is_whitespace() {
            bump!();
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(Error::Parse { loc, message: "unterminated block comment".into() });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
        } else if c == '`' {
            // compiler directive: skip the rest of the line
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c.is_ascii_alphabetic() || c == '_' || c == '\\' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$' || chars[i] == '\\') {
                s.push(chars[i]);
                bump!();
            }
            out.push(Token { tok: Tok::Ident(s), loc });
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '\'' || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            out.push(Token { tok: Tok::Number(s), loc });
        } else {
            out.push(Token { tok: Tok::Punct(c), loc });
            bump!();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: SourceLoc,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn loc(&self) -> SourceLoc {
        self.peek().map(|t| t.loc).unwrap_or(self.eof)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { loc: self.loc(), message: message.into() })
    }

    fn next(&mut self) -> Result<Token> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Punct(p), .. }) if *p == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), .. }) => Some(s.as_str()),
            _ => None,
        }
    }

    fn skip_balanced_parens(&mut self) -> Result<()> {
        self.expect_punct('(')?;
        let mut depth = 1;
        while depth > 0 {
            match self.next()?.tok {
                Tok::Punct('(') => depth += 1,
                Tok::Punct(')') => depth -= 1,
                _ => {}
            }
        }
        Ok(())
    }

    fn range_bound(&mut self) -> Result<i64> {
        let tok = self.next()?;
        match tok.tok {
            Tok::Number(n) if n.chars().all(|c| c.is_ascii_digit()) => n
                .parse()
                .map_err(|_| Error::Parse { loc: tok.loc, message: format!("range bound {n} out of range") }),
            _ => Err(Error::Parse {
                loc: tok.loc,
                message: "unsupported parameterized width: range bounds must be integer literals".into(),
            }),
        }
    }

    /// `[hi:lo]` → width
    fn packed_range(&mut self) -> Result<usize> {
        self.expect_punct('[')?;
        let hi = self.range_bound()?;
        self.expect_punct(':')?;
        let lo = self.range_bound()?;
        self.expect_punct(']')?;
        Ok((hi - lo).unsigned_abs() as usize + 1)
    }
}

const NET_KEYWORDS: &[&str] = &["wire", "reg", "logic", "var", "tri", "signed", "unsigned", "bit"];

/// Parse the first ANSI module header in `source` (or the one named
/// `top_module` when several modules are present).
pub fn parse_verilog_interface(source: &str) -> Result<ModuleInterface> {
    let toks = lex(source)?;
    let line_count = source.lines().count().max(1);
    let module_starts: Vec<usize> = toks
        .iter()
        .enumerate()
        .filter(|(_, t)| matches!(&t.tok, Tok::Ident(s) if s == "module" || s == "macromodule"))
        .map(|(i, _)| i)
        .collect();
    if module_starts.is_empty() {
        return Err(Error::Parse {
            loc: SourceLoc { line: 1, column: 1 },
            message: "no module declaration found".into(),
        });
    }
    let start = module_starts
        .iter()
        .copied()
        .find(|&i| matches!(toks.get(i + 1), Some(Token { tok: Tok::Ident(n), .. }) if n == "top_module"))
        .unwrap_or(module_starts[0]);

    let mut p = Parser { toks, pos: start + 1, eof: SourceLoc { line: line_count, column: 1 } };
    let module_name = match p.next()?.tok {
        Tok::Ident(name) => name,
        _ => return p.err("expected module name"),
    };
    if p.eat_punct('#') {
        p.skip_balanced_parens()?;
    }
    p.expect_punct('(')?;

    let mut ports: Vec<PortDecl> = Vec::new();
    let mut direction: Option<Direction> = None;
    let mut width = 1usize;

    if !p.eat_punct(')') {
        loop {
            let mut explicit_direction = false;
            if let Some(kw) = p.peek_ident() {
                match kw {
                    "input" => {
                        direction = Some(Direction::Input);
                        explicit_direction = true;
                    }
                    "output" => {
                        direction = Some(Direction::Output);
                        explicit_direction = true;
                    }
                    "inout" => return p.err("inout ports are not supported"),
                    _ => {}
                }
                if explicit_direction {
                    p.pos += 1;
                    width = 1;
                }
            }
            let mut saw_type = false;
            while let Some(kw) = p.peek_ident() {
                if NET_KEYWORDS.contains(&kw) {
                    saw_type = true;
                    p.pos += 1;
                } else {
                    break;
                }
            }
            if matches!(p.peek(), Some(Token { tok: Tok::Punct('['), .. })) {
                width = p.packed_range()?;
            } else if explicit_direction || saw_type {
                width = 1;
            }
            let name_tok = p.next()?;
            let name = match name_tok.tok {
                Tok::Ident(n) => n,
                _ => {
                    return Err(Error::Parse { loc: name_tok.loc, message: "expected port name".into() });
                }
            };
            let Some(dir) = direction else {
                return Err(Error::Parse {
                    loc: name_tok.loc,
                    message: format!("port {name} has no direction; only ANSI-style headers are supported"),
                });
            };
            if matches!(p.peek(), Some(Token { tok: Tok::Punct('['), .. })) {
                return p.err("unpacked array ports are not supported");
            }
            if ports.iter().any(|q| q.name == name) {
                return Err(Error::Parse { loc: name_tok.loc, message: format!("duplicate port {name}") });
            }
            ports.push(PortDecl::new(name, dir, width));

            if p.eat_punct(',') {
                continue;
            }
            p.expect_punct(')')?;
            break;
        }
    }

    let loc = p.loc();
    ModuleInterface::new(module_name, ports).map_err(|e| Error::Parse { loc, message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_header() {
        let m = parse_verilog_interface("module top_module(input clk, input [3:0] a, output [3:0] q);").unwrap();
        assert_eq!(m.module_name(), "top_module");
        assert_eq!(m.ports().len(), 3);
        assert_eq!(m.port("a").unwrap().width, 4);
        assert!(m.port("clk").unwrap().is_clock);
        assert!(!m.port("a").unwrap().is_clock);
    }

    #[test]
    fn scalar_ports() {
        let m = parse_verilog_interface("module m(input x, output y);").unwrap();
        assert_eq!(m.port("x").unwrap().width, 1);
        assert_eq!(m.port("y").unwrap().width, 1);
        assert!(!m.has_clock());
    }

    #[test]
    fn nonzero_low_bound() {
        let m = parse_verilog_interface("module m(input [4:1] q_in, output z);").unwrap();
        assert_eq!(m.port("q_in").unwrap().width, 4);
    }

    #[test]
    fn inherited_direction_and_types() {
        let src = "// header\nmodule top_module (\n  input wire [7:0] a, b,\n  input reset,\n  output reg [8:0] sum, /* c */ output logic ovf\n);\nendmodule\n";
        let m = parse_verilog_interface(src).unwrap();
        assert_eq!(m.port("b").unwrap().width, 8);
        assert_eq!(m.port("b").unwrap().direction, Direction::Input);
        assert!(m.port("reset").unwrap().is_reset);
        assert_eq!(m.port("reset").unwrap().width, 1);
        assert_eq!(m.port("sum").unwrap().width, 9);
        assert_eq!(m.port("ovf").unwrap().direction, Direction::Output);
    }

    #[test]
    fn reset_naming() {
        let m = parse_verilog_interface("module m(input clock, input rst, input areset, input sync_reset_n, input rstx, output y);").unwrap();
        assert!(m.port("clock").unwrap().is_clock);
        assert!(m.port("rst").unwrap().is_reset);
        assert!(m.port("areset").unwrap().is_reset);
        assert!(m.port("sync_reset_n").unwrap().is_reset);
        assert!(!m.port("rstx").unwrap().is_reset);
    }

    #[test]
    fn parameter_block_is_skipped() {
        let m = parse_verilog_interface("module m #(parameter W = 4) (input [3:0] a, output [3:0] b);").unwrap();
        assert_eq!(m.port("a").unwrap().width, 4);
    }

    #[test]
    fn picks_top_module() {
        let src = "module helper(input a, output b); endmodule\nmodule top_module(input [1:0] x, output y); endmodule";
        assert_eq!(parse_verilog_interface(src).unwrap().module_name(), "top_module");
    }

    #[test]
    fn errors_carry_location() {
        match parse_verilog_interface("// nothing here") {
            Err(Error::Parse { .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_verilog_interface("module m(\n  input [W-1:0] a, output y);") {
            Err(Error::Parse { loc, message }) => {
                assert_eq!(loc.line, 2);
                assert!(message.contains("parameterized"));
            }
            other => panic!("{other:?}"),
        }
        match parse_verilog_interface("module m(input a, output a);") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("duplicate")),
            other => panic!("{other:?}"),
        }
        // non-ANSI header
        assert!(parse_verilog_interface("module m(a, y);\ninput a; output y;\nendmodule").is_err());
        assert!(parse_verilog_interface("module m(inout a, output y);").is_err());
    }
}
