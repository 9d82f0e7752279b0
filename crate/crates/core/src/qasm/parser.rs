//! Recursive-descent parser producing a flattened [`Circuit`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use super::lexer::{tokenize, Tok, Token};
use super::{detect_version, ParseError, ParseErrorKind, SourceVersion};
use crate::circuit::{Circuit, CircuitError, Instruction, Register};
use crate::gates::gate_signature;

/// Parses OpenQASM 2.0 or the supported OpenQASM 3 subset into a circuit.
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let version = detect_version(text)?;
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        version,
        std_gates: false,
        qregs: Vec::new(),
        cregs: Vec::new(),
        macros: HashMap::new(),
        out: Vec::new(),
    };
    p.header()?;
    while !p.at_end() {
        p.statement()?;
    }
    p.finish()
}

const QASM3_UNSUPPORTED: &[&str] = &[
    "if",
    "else",
    "for",
    "while",
    "def",
    "return",
    "box",
    "break",
    "continue",
    "switch",
    "input",
    "output",
    "const",
    "let",
    "extern",
    "defcal",
    "cal",
    "defcalgrammar",
    "delay",
    "gphase",
    "int",
    "uint",
    "float",
    "angle",
    "bool",
    "duration",
    "stretch",
    "complex",
    "array",
    "ctrl",
    "negctrl",
    "inv",
    "pow",
    "end",
    "opaque",
];

#[derive(Debug, Clone, Copy)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Asin,
    Acos,
    Atan,
}

#[derive(Debug, Clone)]
enum Expr {
    Num(f64),
    Param(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    fn eval(&self, bound: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Param(i) => bound[*i],
            Expr::Neg(e) => -e.eval(bound),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(bound), b.eval(bound));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(bound);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Asin => v.asin(),
                    Func::Acos => v.acos(),
                    Func::Atan => v.atan(),
                }
            }
        }
    }
}

#[derive(Debug)]
enum BodyOp {
    Gate {
        name: String,
        params: Vec<Expr>,
        args: Vec<usize>,
    },
    Barrier(Vec<usize>),
}

#[derive(Debug)]
struct GateDef {
    num_params: usize,
    num_qubits: usize,
    body: Vec<BodyOp>,
}

enum Callee {
    Macro(Rc<GateDef>),
    Builtin(&'static str),
}

struct Decl {
    name: String,
    offset: usize,
    size: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    version: SourceVersion,
    std_gates: bool,
    qregs: Vec<Decl>,
    cregs: Vec<Decl>,
    macros: HashMap<String, Rc<GateDef>>,
    out: Vec<(Instruction, usize, usize)>,
}

/// One argument in a gate/measure statement: either a single flat index or
/// a whole register.
type Operand = Vec<usize>;

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset).map(|t| &t.tok)
    }

    /// Position of the current token, or just past the last one.
    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(t) => (t.line, t.column),
            None => self.toks.last().map_or((1, 1), |t| (t.line, t.column + 1)),
        }
    }

    fn err(&self, kind: ParseErrorKind, msg: impl Into<String>) -> ParseError {
        let (l, c) = self.here();
        ParseError::new(kind, l, c, msg)
    }

    fn err_at(
        &self,
        at: (usize, usize),
        kind: ParseErrorKind,
        msg: impl Into<String>,
    ) -> ParseError {
        ParseError::new(kind, at.0, at.1, msg)
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err(ParseErrorKind::Syntax, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(
                ParseErrorKind::Syntax,
                format!("expected {}, found {}", want.describe(), t.describe()),
            )),
            None => Err(self.err(
                ParseErrorKind::Syntax,
                format!("expected {}, found end of input", want.describe()),
            )),
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => Err(self.err(
                ParseErrorKind::Syntax,
                format!("expected identifier, found {}", t.describe()),
            )),
            None => Err(self.err(
                ParseErrorKind::Syntax,
                "expected identifier, found end of input",
            )),
        }
    }

    fn uint(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v as usize;
                self.pos += 1;
                Ok(v)
            }
            Some(t) => Err(self.err(
                ParseErrorKind::Syntax,
                format!("expected integer, found {}", t.describe()),
            )),
            None => Err(self.err(
                ParseErrorKind::Syntax,
                "expected integer, found end of input",
            )),
        }
    }

    fn header(&mut self) -> Result<(), ParseError> {
        // detect_version has already vetted the header text
        self.next()?;
        self.next()?;
        self.expect(Tok::Semi)
    }

    fn statement(&mut self) -> Result<(), ParseError> {
        let start = self.here();
        let word = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            Some(t) => {
                return Err(self.err(
                    ParseErrorKind::Syntax,
                    format!("expected a statement, found {}", t.describe()),
                ))
            }
            None => return Ok(()),
        };
        let v3 = self.version == SourceVersion::Qasm3;
        match word.as_str() {
            "OPENQASM" => Err(self.err(ParseErrorKind::Syntax, "duplicate version header")),
            "include" => self.include(),
            "qreg" => self.old_style_decl(true),
            "creg" => self.old_style_decl(false),
            "qubit" if v3 => self.new_style_decl(true),
            "bit" if v3 => self.new_style_decl(false),
            "gate" => self.gate_def(),
            "opaque" => Err(self.err(
                ParseErrorKind::UnsupportedFeature,
                "opaque gate declarations are not supported",
            )),
            "if" if !v3 => Err(self.err(
                ParseErrorKind::UnsupportedFeature,
                "classically controlled operations are not supported",
            )),
            w if v3 && QASM3_UNSUPPORTED.contains(&w) => Err(self.err(
                ParseErrorKind::UnsupportedFeature,
                format!("OpenQASM 3 `{w}` is outside the supported subset"),
            )),
            "measure" => {
                self.pos += 1;
                let q = self.operand(true)?;
                if v3 && self.peek() == Some(&Tok::Semi) {
                    return Err(self.err_at(
                        start,
                        ParseErrorKind::UnsupportedFeature,
                        "measurement without a classical target is not supported",
                    ));
                }
                self.expect(Tok::Arrow)?;
                let c = self.operand(false)?;
                self.expect(Tok::Semi)?;
                self.emit_measure(q, c, start)
            }
            "reset" => {
                self.pos += 1;
                let q = self.operand(true)?;
                self.expect(Tok::Semi)?;
                for qubit in q {
                    self.out
                        .push((Instruction::Reset { qubit }, start.0, start.1));
                }
                Ok(())
            }
            "barrier" => {
                self.pos += 1;
                let mut qubits = Vec::new();
                if !(v3 && self.peek() == Some(&Tok::Semi)) {
                    loop {
                        qubits.extend(self.operand(true)?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                } else {
                    qubits.extend(0..self.num_qubits());
                }
                self.expect(Tok::Semi)?;
                self.check_distinct(&qubits, start)?;
                self.out
                    .push((Instruction::Barrier { qubits }, start.0, start.1));
                Ok(())
            }
            _ if v3 && self.peek_at(1) != Some(&Tok::LParen) && self.looks_like_assignment() => {
                let c = self.operand(false)?;
                self.expect(Tok::Assign)?;
                match self.peek() {
                    Some(Tok::Ident(w)) if w == "measure" => self.pos += 1,
                    _ => {
                        return Err(self.err(
                            ParseErrorKind::UnsupportedFeature,
                            "only `bit = measure qubit;` assignments are supported",
                        ))
                    }
                }
                let q = self.operand(true)?;
                self.expect(Tok::Semi)?;
                self.emit_measure(q, c, start)
            }
            _ => self.gate_call(),
        }
    }

    /// `c[0] = ...` or `c = ...` in version 3.
    fn looks_like_assignment(&self) -> bool {
        match self.peek_at(1) {
            Some(Tok::Assign) => true,
            Some(Tok::LBracket) => {
                matches!(self.peek_at(2), Some(Tok::Int(_)))
                    && matches!(self.peek_at(3), Some(Tok::RBracket))
                    && matches!(self.peek_at(4), Some(Tok::Assign))
            }
            _ => false,
        }
    }

    fn num_qubits(&self) -> usize {
        self.qregs.iter().map(|d| d.size).sum()
    }

    fn num_clbits(&self) -> usize {
        self.cregs.iter().map(|d| d.size).sum()
    }

    fn include(&mut self) -> Result<(), ParseError> {
        self.pos += 1;
        let at = self.here();
        let file = match self.next()?.tok {
            Tok::Str(s) => s,
            t => {
                return Err(self.err_at(
                    at,
                    ParseErrorKind::Syntax,
                    format!("expected file name string, found {}", t.describe()),
                ))
            }
        };
        self.expect(Tok::Semi)?;
        match file.as_str() {
            "qelib1.inc" | "stdgates.inc" => {
                self.std_gates = true;
                Ok(())
            }
            other => Err(self.err_at(
                at,
                ParseErrorKind::UnsupportedFeature,
                format!("include file \"{other}\" is not available"),
            )),
        }
    }

    fn declare(
        &mut self,
        quantum: bool,
        name: String,
        size: usize,
        at: (usize, usize),
    ) -> Result<(), ParseError> {
        let taken = self.qregs.iter().chain(&self.cregs).any(|d| d.name == name);
        if taken {
            return Err(self.err_at(
                at,
                ParseErrorKind::Syntax,
                format!("register `{name}` already declared"),
            ));
        }
        if size == 0 {
            return Err(self.err_at(
                at,
                ParseErrorKind::IndexRange,
                "register size must be positive",
            ));
        }
        let (list, offset) = if quantum {
            let o = self.num_qubits();
            (&mut self.qregs, o)
        } else {
            let o = self.num_clbits();
            (&mut self.cregs, o)
        };
        list.push(Decl { name, offset, size });
        Ok(())
    }

    fn old_style_decl(&mut self, quantum: bool) -> Result<(), ParseError> {
        self.pos += 1;
        let at = self.here();
        let name = self.ident()?;
        self.expect(Tok::LBracket)?;
        let size = self.uint()?;
        self.expect(Tok::RBracket)?;
        self.expect(Tok::Semi)?;
        self.declare(quantum, name, size, at)
    }

    fn new_style_decl(&mut self, quantum: bool) -> Result<(), ParseError> {
        self.pos += 1;
        let size = if self.eat(&Tok::LBracket) {
            let s = self.uint()?;
            self.expect(Tok::RBracket)?;
            s
        } else {
            1
        };
        let at = self.here();
        let name = self.ident()?;
        if self.peek() == Some(&Tok::Assign) {
            return Err(self.err(
                ParseErrorKind::UnsupportedFeature,
                "initialized declarations are not supported",
            ));
        }
        self.expect(Tok::Semi)?;
        self.declare(quantum, name, size, at)
    }

    /// `name` or `name[i]`, resolved against the quantum or classical registers.
    fn operand(&mut self, quantum: bool) -> Result<Operand, ParseError> {
        let at = self.here();
        let name = self.ident()?;
        let regs = if quantum { &self.qregs } else { &self.cregs };
        let Some(decl) = regs.iter().find(|d| d.name == name) else {
            let what = if quantum { "quantum" } else { "classical" };
            return Err(self.err_at(
                at,
                ParseErrorKind::Syntax,
                format!("undeclared {what} register `{name}`"),
            ));
        };
        let (offset, size) = (decl.offset, decl.size);
        if self.eat(&Tok::LBracket) {
            let iat = self.here();
            let idx = self.uint()?;
            self.expect(Tok::RBracket)?;
            if idx >= size {
                return Err(self.err_at(
                    iat,
                    ParseErrorKind::IndexRange,
                    format!("index {idx} out of range for register `{name}` of size {size}"),
                ));
            }
            Ok(vec![offset + idx])
        } else {
            Ok((offset..offset + size).collect())
        }
    }

    fn check_distinct(&self, qubits: &[usize], at: (usize, usize)) -> Result<(), ParseError> {
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(self.err_at(
                    at,
                    ParseErrorKind::IndexRange,
                    "the same qubit is used twice in one statement",
                ));
            }
        }
        Ok(())
    }

    fn emit_measure(
        &mut self,
        q: Operand,
        c: Operand,
        at: (usize, usize),
    ) -> Result<(), ParseError> {
        if q.len() != c.len() {
            return Err(self.err_at(
                at,
                ParseErrorKind::Arity,
                format!("measure of {} qubit(s) into {} bit(s)", q.len(), c.len()),
            ));
        }
        for (qubit, clbit) in q.into_iter().zip(c) {
            self.out
                .push((Instruction::Measure { qubit, clbit }, at.0, at.1));
        }
        Ok(())
    }

    fn resolve(&self, name: &str) -> Option<(Callee, usize, usize)> {
        if let Some(def) = self.macros.get(name) {
            return Some((Callee::Macro(def.clone()), def.num_params, def.num_qubits));
        }
        match name {
            "U" => return Some((Callee::Builtin("u3"), 3, 1)),
            "CX" => return Some((Callee::Builtin("cx"), 0, 2)),
            _ => {}
        }
        if self.std_gates {
            let sig = gate_signature(name)?;
            let canonical = crate::gates::SUPPORTED_GATES
                .iter()
                .find(|g| **g == name)
                .copied()?;
            return Some((Callee::Builtin(canonical), sig.num_params, sig.num_qubits));
        }
        None
    }

    fn param_list(&mut self, formals: &[String]) -> Result<Vec<Expr>, ParseError> {
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            loop {
                params.push(self.expr(formals)?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        Ok(params)
    }

    fn gate_call(&mut self) -> Result<(), ParseError> {
        let start = self.here();
        let name = self.ident()?;
        let (callee, num_params, num_qubits) = self.resolve(&name).ok_or_else(|| {
            let hint = if !self.std_gates && gate_signature(&name).is_some() {
                " (missing `include \"qelib1.inc\";`?)"
            } else {
                ""
            };
            self.err_at(
                start,
                ParseErrorKind::UnknownGate,
                format!("unknown gate `{name}`{hint}"),
            )
        })?;
        let params = self.param_list(&[])?;
        let values: Vec<f64> = params.iter().map(|e| e.eval(&[])).collect();
        let mut args = Vec::new();
        loop {
            args.push(self.operand(true)?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        if values.len() != num_params {
            return Err(self.err_at(
                start,
                ParseErrorKind::Arity,
                format!(
                    "`{name}` takes {num_params} parameter(s), got {}",
                    values.len()
                ),
            ));
        }
        if args.len() != num_qubits {
            return Err(self.err_at(
                start,
                ParseErrorKind::Arity,
                format!("`{name}` acts on {num_qubits} qubit(s), got {}", args.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(self.err_at(
                start,
                ParseErrorKind::Syntax,
                "parameter expression is not finite",
            ));
        }
        // register broadcast
        let width = args
            .iter()
            .map(Vec::len)
            .filter(|&n| n > 1)
            .max()
            .unwrap_or(1);
        if args.iter().any(|a| a.len() != 1 && a.len() != width) {
            return Err(self.err_at(
                start,
                ParseErrorKind::Arity,
                "registers of different sizes in one broadcast statement",
            ));
        }
        for k in 0..width {
            let qubits: Vec<usize> = args
                .iter()
                .map(|a| if a.len() == 1 { a[0] } else { a[k] })
                .collect();
            self.check_distinct(&qubits, start)?;
            self.expand(&callee, &values, &qubits, start);
        }
        Ok(())
    }

    fn expand(&mut self, callee: &Callee, params: &[f64], qubits: &[usize], at: (usize, usize)) {
        match callee {
            Callee::Builtin(name) => {
                self.out.push((
                    Instruction::gate(*name, params.to_vec(), qubits.to_vec()),
                    at.0,
                    at.1,
                ));
            }
            Callee::Macro(def) => {
                for op in &def.body {
                    match op {
                        BodyOp::Gate {
                            name,
                            params: exprs,
                            args,
                        } => {
                            let values: Vec<f64> = exprs.iter().map(|e| e.eval(params)).collect();
                            let mapped: Vec<usize> = args.iter().map(|&a| qubits[a]).collect();
                            let (inner, _, _) =
                                self.resolve(name).expect("validated at definition");
                            self.expand(&inner, &values, &mapped, at);
                        }
                        BodyOp::Barrier(args) => {
                            let mapped = args.iter().map(|&a| qubits[a]).collect();
                            self.out
                                .push((Instruction::Barrier { qubits: mapped }, at.0, at.1));
                        }
                    }
                }
            }
        }
    }

    fn ident_list(&mut self, close: &Tok) -> Result<Vec<String>, ParseError> {
        let mut names = Vec::new();
        if self.peek() == Some(close) {
            return Ok(names);
        }
        loop {
            let at = self.here();
            let n = self.ident()?;
            if names.contains(&n) {
                return Err(self.err_at(
                    at,
                    ParseErrorKind::Syntax,
                    format!("duplicate name `{n}`"),
                ));
            }
            names.push(n);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(names)
    }

    fn gate_def(&mut self) -> Result<(), ParseError> {
        self.pos += 1;
        let at = self.here();
        let name = self.ident()?;
        if self.macros.contains_key(&name) || matches!(name.as_str(), "U" | "CX") {
            return Err(self.err_at(
                at,
                ParseErrorKind::Syntax,
                format!("gate `{name}` is already defined"),
            ));
        }
        let formals = if self.eat(&Tok::LParen) {
            let f = self.ident_list(&Tok::RParen)?;
            self.expect(Tok::RParen)?;
            f
        } else {
            Vec::new()
        };
        let qargs = self.ident_list(&Tok::LBrace)?;
        if qargs.is_empty() {
            return Err(self.err(
                ParseErrorKind::Syntax,
                "gate definition needs at least one qubit argument",
            ));
        }
        self.expect(Tok::LBrace)?;
        let mut body = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let sat = self.here();
            let inner = self.ident()?;
            if inner == "barrier" {
                let args = self.body_args(&qargs)?;
                self.expect(Tok::Semi)?;
                body.push(BodyOp::Barrier(args));
                continue;
            }
            if inner == name {
                return Err(self.err_at(
                    sat,
                    ParseErrorKind::UnknownGate,
                    format!("gate `{name}` cannot call itself"),
                ));
            }
            let (_, np, nq) = self.resolve(&inner).ok_or_else(|| {
                self.err_at(
                    sat,
                    ParseErrorKind::UnknownGate,
                    format!("unknown gate `{inner}`"),
                )
            })?;
            let params = self.param_list(&formals)?;
            let args = self.body_args(&qargs)?;
            self.expect(Tok::Semi)?;
            if params.len() != np || args.len() != nq {
                return Err(self.err_at(
                    sat,
                    ParseErrorKind::Arity,
                    format!("`{inner}` takes {np} parameter(s) and {nq} qubit(s)"),
                ));
            }
            for (i, a) in args.iter().enumerate() {
                if args[..i].contains(a) {
                    return Err(self.err_at(
                        sat,
                        ParseErrorKind::IndexRange,
                        "the same qubit is used twice in one statement",
                    ));
                }
            }
            body.push(BodyOp::Gate {
                name: inner,
                params,
                args,
            });
        }
        self.macros.insert(
            name,
            Rc::new(GateDef {
                num_params: formals.len(),
                num_qubits: qargs.len(),
                body,
            }),
        );
        Ok(())
    }

    fn body_args(&mut self, qargs: &[String]) -> Result<Vec<usize>, ParseError> {
        let mut out = Vec::new();
        loop {
            let at = self.here();
            let n = self.ident()?;
            let idx = qargs.iter().position(|q| *q == n).ok_or_else(|| {
                self.err_at(
                    at,
                    ParseErrorKind::Syntax,
                    format!("`{n}` is not a qubit argument of this gate"),
                )
            })?;
            out.push(idx);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    // expression grammar: sum -> product -> unary -> power -> atom

    fn expr(&mut self, formals: &[String]) -> Result<Expr, ParseError> {
        let mut lhs = self.product(formals)?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product(formals)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self, formals: &[String]) -> Result<Expr, ParseError> {
        let mut lhs = self.unary(formals)?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary(formals)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self, formals: &[String]) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary(formals)?)));
        }
        if self.eat(&Tok::Plus) {
            return self.unary(formals);
        }
        self.power(formals)
    }

    fn power(&mut self, formals: &[String]) -> Result<Expr, ParseError> {
        let base = self.atom(formals)?;
        if self.eat(&Tok::Caret) {
            let exp = self.unary(formals)?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self, formals: &[String]) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.next()?.tok {
            Tok::Int(v) => Ok(Expr::Num(v as f64)),
            Tok::Real(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr(formals)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(i) = formals.iter().position(|f| *f == name) {
                    return Ok(Expr::Param(i));
                }
                let func = match name.as_str() {
                    "pi" | "π" => return Ok(Expr::Num(PI)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "tan" => Func::Tan,
                    "exp" => Func::Exp,
                    "ln" => Func::Ln,
                    "sqrt" => Func::Sqrt,
                    "arcsin" | "asin" => Func::Asin,
                    "arccos" | "acos" => Func::Acos,
                    "arctan" | "atan" => Func::Atan,
                    _ => {
                        return Err(self.err_at(
                            at,
                            ParseErrorKind::Syntax,
                            format!("unknown identifier `{name}` in expression"),
                        ))
                    }
                };
                self.expect(Tok::LParen)?;
                let arg = self.expr(formals)?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            t => Err(self.err_at(
                at,
                ParseErrorKind::Syntax,
                format!("expected expression, found {}", t.describe()),
            )),
        }
    }

    fn finish(self) -> Result<Circuit, ParseError> {
        let qregs = self
            .qregs
            .iter()
            .map(|d| Register::new(d.name.clone(), d.size))
            .collect();
        let cregs = self
            .cregs
            .iter()
            .map(|d| Register::new(d.name.clone(), d.size))
            .collect();
        let mut circuit = Circuit::with_registers(qregs, cregs);
        if circuit.num_qubits() == 0 {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                1,
                1,
                "program declares no qubits",
            ));
        }
        for (instr, line, col) in self.out {
            circuit.push(instr).map_err(|e| {
                let kind = match e {
                    CircuitError::QubitOutOfRange { .. }
                    | CircuitError::ClbitOutOfRange { .. }
                    | CircuitError::DuplicateQubit(_) => ParseErrorKind::IndexRange,
                    CircuitError::Arity { .. } | CircuitError::Gate(_) => ParseErrorKind::Arity,
                    _ => ParseErrorKind::Syntax,
                };
                ParseError::new(kind, line, col, e.to_string())
            })?;
        }
        Ok(circuit)
    }
}
