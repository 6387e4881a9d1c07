//! Recursive-descent parser for the `.carm` requirements DSL.
//!
//! Parsing is total: syntax errors are recorded and the parser resynchronizes
//! at the next clause or declaration, so one run reports every problem in the
//! file. Reference resolution (precedence targets, registry paths, `ref`
//! domains) runs as a post-pass over the assembled model.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::{codes, sort_diagnostics, Diagnostic, Pos};
use crate::message::{
    Aggregation, Domain, Field, Item, Iteration, MessageStructure, ObjectRegistry, OpTag,
    RegistryEntry, Substructure,
};
use crate::requirements::lexer::{lex, Tok, Token};
use crate::requirements::{
    BusinessProcess, CardMax, CardSide, CommunicativeEvent, DeclaredKind, PrecedenceDecl,
    ReactionKind, ReactionSpec, RequirementsModel, Restriction, RestrictionKind, TypeName,
};

const CLAUSE_KEYWORDS: &[&str] = &[
    "primary",
    "support",
    "message",
    "registers",
    "identified-by",
    "cardinality",
    "size",
    "nulls",
    "kind",
    "type",
    "reaction",
    "precedes",
];

/// Parse a `.carm` source into a requirements model.
///
/// Returns the model when no errors were found; otherwise the full list of
/// diagnostics, sorted by (position, code).
pub fn parse_requirements(source: &str) -> Result<RequirementsModel, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex(source);
    let mut parser = Parser { tokens, i: 0, diags: Vec::new(), pending_registers: Vec::new() };
    let mut model = parser.parse_model();
    diags.append(&mut parser.diags);
    resolve_and_check(&mut model, parser.pending_registers, &mut diags);
    if diags.iter().any(Diagnostic::is_error) {
        sort_diagnostics(&mut diags);
        Err(diags)
    } else {
        Ok(model)
    }
}

/// Parse a standalone `NAME = < ... >` message structure.
pub fn parse_message_only(text: &str) -> Result<MessageStructure, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex(text);
    let mut parser = Parser { tokens, i: 0, diags: Vec::new(), pending_registers: Vec::new() };
    let name = parser.collect_name();
    let ms = if name.0.is_empty() {
        parser.error_here("expected message structure name");
        None
    } else if !parser.eat(&Tok::Eq) {
        parser.error_here("expected `=` after message structure name");
        None
    } else {
        parser.parse_aggregation(name.0, name.1)
    };
    if parser.i < parser.tokens.len() {
        parser.error_here("trailing input after message structure");
    }
    diags.append(&mut parser.diags);
    let ms = ms.map(|root| MessageStructure { root });
    if let Some(ms) = &ms {
        check_message_tree(ms, &mut diags);
    }
    if diags.iter().any(Diagnostic::is_error) {
        sort_diagnostics(&mut diags);
        Err(diags)
    } else {
        Ok(ms.expect("no errors implies a parsed structure"))
    }
}

// ---------------------------------------------------------------------------
// Parser core
// ---------------------------------------------------------------------------

type PendingRegisters = Vec<(String, Vec<(String, Vec<String>, Pos)>)>;

struct Parser {
    tokens: Vec<Token>,
    i: usize,
    diags: Vec<Diagnostic>,
    /// `registers` clauses per event, resolved after the whole file is read.
    pending_registers: PendingRegisters,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.i)
    }

    fn peek_tok(&self) -> Option<&Tok> {
        self.peek().map(|t| &t.tok)
    }

    fn peek_word(&self) -> Option<&str> {
        match self.peek_tok() {
            Some(Tok::Word(w)) => Some(w.as_str()),
            _ => None,
        }
    }

    fn pos(&self) -> Pos {
        self.peek()
            .map(|t| t.pos)
            .or_else(|| self.tokens.last().map(|t| t.pos))
            .unwrap_or_default()
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek_tok() == Some(tok) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if self.peek_word() == Some(word) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn error_here(&mut self, message: impl Into<String>) {
        let pos = self.pos();
        self.diags.push(Diagnostic::error(pos, codes::SYNTAX, message));
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> bool {
        if self.eat(tok) {
            true
        } else {
            let found = match self.peek_tok() {
                Some(t) => format!("{t}"),
                None => "end of file".to_string(),
            };
            self.error_here(format!("expected {what}, found {found}"));
            false
        }
    }

    fn expect_string(&mut self, what: &str) -> Option<String> {
        match self.peek_tok() {
            Some(Tok::Str(_)) => match self.bump() {
                Some(Token { tok: Tok::Str(s), .. }) => Some(s),
                _ => unreachable!(),
            },
            _ => {
                self.error_here(format!("expected {what} string"));
                None
            }
        }
    }

    fn expect_int(&mut self, what: &str) -> Option<u32> {
        match self.peek_tok() {
            Some(Tok::Int(_)) => match self.bump() {
                Some(Token { tok: Tok::Int(n), .. }) => Some(n),
                _ => unreachable!(),
            },
            _ => {
                self.error_here(format!("expected {what}"));
                None
            }
        }
    }

    /// Collect consecutive words into a space-joined name. Returns the name
    /// and the position of its first word (current position if empty).
    fn collect_name(&mut self) -> (String, Pos) {
        let pos = self.pos();
        let mut words: Vec<String> = Vec::new();
        while let Some(Tok::Word(w)) = self.peek_tok() {
            words.push(w.clone());
            self.i += 1;
        }
        (words.join(" "), pos)
    }

    /// Single-word name (event ids, process acronyms, object names).
    fn expect_single_word(&mut self, what: &str) -> Option<(String, Pos)> {
        match self.peek_tok() {
            Some(Tok::Word(_)) => {
                let t = self.bump().expect("peeked");
                match t.tok {
                    Tok::Word(w) => Some((w, t.pos)),
                    _ => unreachable!(),
                }
            }
            _ => {
                self.error_here(format!("expected {what}"));
                None
            }
        }
    }

    // -- model level --------------------------------------------------------

    fn parse_model(&mut self) -> RequirementsModel {
        let mut model = RequirementsModel::default();
        while let Some(tok) = self.peek_tok() {
            match tok {
                Tok::Word(w) if w == "process" => {
                    if let Some(p) = self.parse_process() {
                        model.processes.push(p);
                    }
                }
                Tok::Word(w) if w == "event" => {
                    if let Some(e) = self.parse_event() {
                        model.events.push(e);
                    }
                }
                _ => {
                    self.error_here("expected `process` or `event` declaration");
                    self.recover_top_level();
                }
            }
        }
        model
    }

    fn recover_top_level(&mut self) {
        while let Some(tok) = self.peek_tok() {
            if matches!(tok, Tok::Word(w) if w == "process" || w == "event") {
                return;
            }
            self.i += 1;
        }
    }

    fn recover_in_event(&mut self) {
        while let Some(tok) = self.peek_tok() {
            match tok {
                Tok::RBrace => return,
                Tok::Word(w)
                    if CLAUSE_KEYWORDS.contains(&w.as_str())
                        || w == "process"
                        || w == "event" =>
                {
                    return
                }
                _ => self.i += 1,
            }
        }
    }

    fn parse_process(&mut self) -> Option<BusinessProcess> {
        let pos = self.pos();
        self.eat_word("process");
        let (acronym, _) = self.expect_single_word("process acronym")?;
        let name = self.expect_string("process name")?;
        Some(BusinessProcess { acronym, name, pos })
    }

    fn parse_event(&mut self) -> Option<CommunicativeEvent> {
        let pos = self.pos();
        self.eat_word("event");
        let (id, _) = self.expect_single_word("event id").or_else(|| {
            self.recover_top_level();
            None
        })?;
        let title = self.expect_string("event title").unwrap_or_default();
        if !self.eat_word("in") {
            self.error_here("expected `in` before the process acronym");
        }
        let process = self
            .expect_single_word("process acronym")
            .map(|(w, _)| w)
            .unwrap_or_default();
        self.expect(&Tok::LBrace, "`{` opening the event block");

        let mut builder = EventBuilder::new(id, title, process, pos);
        loop {
            match self.peek_tok() {
                None => {
                    self.error_here("unexpected end of file inside event block");
                    break;
                }
                Some(Tok::RBrace) => {
                    self.i += 1;
                    break;
                }
                Some(Tok::Word(w)) if CLAUSE_KEYWORDS.contains(&w.as_str()) => {
                    self.parse_clause(&mut builder);
                }
                _ => {
                    self.error_here("expected an event clause");
                    self.recover_in_event();
                    if matches!(self.peek_word(), Some("process") | Some("event")) {
                        break;
                    }
                }
            }
        }
        Some(builder.finish(self))
    }

    fn parse_clause(&mut self, builder: &mut EventBuilder) {
        let clause_pos = self.pos();
        let kw = match self.peek_word() {
            Some(w) => w.to_string(),
            None => return,
        };
        self.i += 1;
        match kw.as_str() {
            "primary" => {
                self.expect(&Tok::Colon, "`:` after `primary`");
                if let Some(s) = self.expect_string("actor name") {
                    builder.set_primary(s, clause_pos, &mut self.diags);
                }
            }
            "support" => {
                self.expect(&Tok::Colon, "`:` after `support`");
                if let Some(s) = self.expect_string("actor name") {
                    builder.set_support(s, clause_pos, &mut self.diags);
                }
            }
            "message" => {
                let (name, name_pos) = self.collect_name();
                if name.is_empty() {
                    self.error_here("expected message structure name");
                    self.recover_in_event();
                    return;
                }
                if !self.expect(&Tok::Eq, "`=` after the message name") {
                    self.recover_in_event();
                    return;
                }
                if let Some(root) = self.parse_aggregation(name, name_pos) {
                    builder.set_message(MessageStructure { root }, clause_pos, &mut self.diags);
                } else {
                    self.recover_in_event();
                }
            }
            "registers" => {
                let Some((object, _)) = self.expect_single_word("business object name") else {
                    self.recover_in_event();
                    return;
                };
                if !self.expect(&Tok::Eq, "`=` after the object name") {
                    self.recover_in_event();
                    return;
                }
                let mut path = Vec::new();
                loop {
                    let (part, _) = self.collect_name();
                    if part.is_empty() {
                        self.error_here("expected substructure name in registry path");
                        break;
                    }
                    path.push(part);
                    if !self.eat(&Tok::Dot) {
                        break;
                    }
                }
                builder.registers.push((object, path, clause_pos));
            }
            "identified-by" => {
                let Some((object, _)) = self.expect_single_word("business object name") else {
                    self.recover_in_event();
                    return;
                };
                if !self.expect(&Tok::LParen, "`(` before the identifier field list") {
                    self.recover_in_event();
                    return;
                }
                let mut fields = Vec::new();
                loop {
                    let (field, _) = self.collect_name();
                    if field.is_empty() {
                        self.error_here("expected field name");
                        break;
                    }
                    fields.push(field);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RParen, "`)` closing the identifier field list");
                builder.restrictions.push(Restriction {
                    kind: RestrictionKind::IdentifiedBy { object, fields },
                    pos: clause_pos,
                });
            }
            "cardinality" => {
                let Some(a_obj) = self.expect_single_word("business object name") else {
                    self.recover_in_event();
                    return;
                };
                let Some(a_card) = self.parse_card() else {
                    self.recover_in_event();
                    return;
                };
                let dynamic = self.eat_word("dynamic");
                if !self.expect(&Tok::DashDash, "`--` between cardinalities") {
                    self.recover_in_event();
                    return;
                }
                let Some(b_card) = self.parse_card() else {
                    self.recover_in_event();
                    return;
                };
                let Some(b_obj) = self.expect_single_word("business object name") else {
                    self.recover_in_event();
                    return;
                };
                builder.restrictions.push(Restriction {
                    kind: RestrictionKind::Cardinality {
                        a: CardSide { object: a_obj.0, min: a_card.0, max: a_card.1 },
                        dynamic,
                        b: CardSide { object: b_obj.0, min: b_card.0, max: b_card.1 },
                    },
                    pos: clause_pos,
                });
            }
            "size" | "nulls" | "kind" | "type" => {
                let (substructure, field) = match self.parse_field_address() {
                    Some(pair) => pair,
                    None => {
                        self.recover_in_event();
                        return;
                    }
                };
                match kw.as_str() {
                    "size" => {
                        if let Some(size) = self.expect_int("size value") {
                            builder.restrictions.push(Restriction {
                                kind: RestrictionKind::Size { substructure, field, size },
                                pos: clause_pos,
                            });
                        }
                    }
                    "nulls" => match self.peek_word() {
                        Some("yes") | Some("no") => {
                            let allowed = self.peek_word() == Some("yes");
                            self.i += 1;
                            builder.restrictions.push(Restriction {
                                kind: RestrictionKind::Nulls { substructure, field, allowed },
                                pos: clause_pos,
                            });
                        }
                        _ => self.error_here("expected `yes` or `no`"),
                    },
                    "kind" => match self.peek_word() {
                        Some("constant") | Some("variable") => {
                            let kind = if self.peek_word() == Some("constant") {
                                DeclaredKind::Constant
                            } else {
                                DeclaredKind::Variable
                            };
                            self.i += 1;
                            builder.restrictions.push(Restriction {
                                kind: RestrictionKind::AttributeKind { substructure, field, kind },
                                pos: clause_pos,
                            });
                        }
                        _ => self.error_here("expected `constant` or `variable`"),
                    },
                    "type" => match self.peek_word().and_then(TypeName::from_str) {
                        Some(data_type) => {
                            self.i += 1;
                            builder.restrictions.push(Restriction {
                                kind: RestrictionKind::TypeOverride { substructure, field, data_type },
                                pos: clause_pos,
                            });
                        }
                        _ => self.error_here("expected a data type name"),
                    },
                    _ => unreachable!(),
                }
            }
            "reaction" => {
                let kind = match self.peek_word() {
                    Some("creation") => ReactionKind::Creation,
                    Some("extension") => ReactionKind::Extension,
                    _ => {
                        self.error_here("expected `creation` or `extension`");
                        self.recover_in_event();
                        return;
                    }
                };
                self.i += 1;
                if !self.eat_word("name") {
                    self.error_here("expected `name` after the reaction kind");
                }
                let name = self.expect_string("reaction name").unwrap_or_default();
                let mut end_of_editing = None;
                if self.eat_word("end-of-editing") {
                    match self.peek_word() {
                        Some("yes") => {
                            end_of_editing = Some(true);
                            self.i += 1;
                        }
                        Some("no") => {
                            end_of_editing = Some(false);
                            self.i += 1;
                        }
                        _ => self.error_here("expected `yes` or `no` after `end-of-editing`"),
                    }
                }
                builder.set_reaction(
                    ReactionSpec { kind, name, end_of_editing, pos: clause_pos },
                    &mut self.diags,
                );
            }
            "precedes" => {
                let Some((to, _)) = self.expect_single_word("event id") else {
                    self.recover_in_event();
                    return;
                };
                let mut loopback = false;
                let mut guard = None;
                if self.eat_word("loopback") {
                    loopback = true;
                    if let Some(Tok::Str(_)) = self.peek_tok() {
                        guard = self.expect_string("loopback guard");
                    }
                }
                builder.precedes.push(PrecedenceDecl { to, loopback, guard, pos: clause_pos });
            }
            _ => unreachable!("clause dispatch covers CLAUSE_KEYWORDS"),
        }
    }

    /// `SUB NAME . FIELD NAME =` — shared prefix of size/nulls/kind/type.
    fn parse_field_address(&mut self) -> Option<(String, String)> {
        let (substructure, _) = self.collect_name();
        if substructure.is_empty() {
            self.error_here("expected substructure name");
            return None;
        }
        if !self.expect(&Tok::Dot, "`.` between substructure and field name") {
            return None;
        }
        let (field, _) = self.collect_name();
        if field.is_empty() {
            self.error_here("expected field name");
            return None;
        }
        if !self.expect(&Tok::Eq, "`=` after the field name") {
            return None;
        }
        Some((substructure, field))
    }

    fn parse_card(&mut self) -> Option<(u8, CardMax)> {
        let min = self.expect_int("minimum cardinality")?;
        if min > 1 {
            self.error_here("minimum cardinality must be 0 or 1");
        }
        if !self.expect(&Tok::Colon, "`:` inside the cardinality") {
            return None;
        }
        match self.peek_tok() {
            Some(Tok::Int(1)) => {
                self.i += 1;
                Some((min.min(1) as u8, CardMax::One))
            }
            Some(Tok::Word(w)) if w == "M" => {
                self.i += 1;
                Some((min.min(1) as u8, CardMax::Many))
            }
            _ => {
                self.error_here("expected `1` or `M` as maximum cardinality");
                None
            }
        }
    }

    // -- message structures -------------------------------------------------

    fn parse_aggregation(&mut self, name: String, name_pos: Pos) -> Option<Aggregation> {
        if !self.expect(&Tok::Lt, "`<` opening an aggregation") {
            return None;
        }
        let mut items = Vec::new();
        loop {
            if self.eat(&Tok::Gt) {
                break;
            }
            if self.peek_tok().is_none() {
                self.error_here("unterminated aggregation: missing `>`");
                return Some(Aggregation { name, items, pos: name_pos });
            }
            match self.parse_item() {
                Some(item) => items.push(item),
                None => {
                    // Skip one token to guarantee progress, then try to carry on.
                    self.i += 1;
                }
            }
            if self.eat(&Tok::Plus) {
                continue;
            }
            if self.eat(&Tok::Gt) {
                break;
            }
            if self.peek_tok().is_none() {
                self.error_here("unterminated aggregation: missing `>`");
                break;
            }
            self.error_here("expected `+` between items or `>` closing the aggregation");
        }
        Some(Aggregation { name, items, pos: name_pos })
    }

    fn parse_item(&mut self) -> Option<Item> {
        let (name, name_pos) = self.collect_name();
        if name.is_empty() {
            self.error_here("expected a field or substructure name");
            return None;
        }
        match self.peek_tok() {
            Some(Tok::LBracket) => self.parse_field_body(name, name_pos).map(Item::Field),
            Some(Tok::Eq) => {
                self.i += 1;
                match self.peek_tok() {
                    Some(Tok::Lt) => self
                        .parse_aggregation(name, name_pos)
                        .map(|a| Item::Sub(Substructure::Aggregation(a))),
                    Some(Tok::LBrace) => self
                        .parse_iteration(name, name_pos)
                        .map(|i| Item::Sub(Substructure::Iteration(i))),
                    _ => {
                        self.error_here("expected `<` or `{` after `=`");
                        None
                    }
                }
            }
            _ => {
                self.error_here(format!("expected `[` or `=` after `{name}`"));
                None
            }
        }
    }

    fn parse_iteration(&mut self, name: String, name_pos: Pos) -> Option<Iteration> {
        self.expect(&Tok::LBrace, "`{` opening an iteration");
        let body = match self.peek_tok() {
            Some(Tok::Lt) => self.parse_aggregation(String::new(), self.pos()),
            Some(Tok::Word(_)) => {
                let (body_name, body_pos) = self.collect_name();
                if self.eat(&Tok::Eq) {
                    if matches!(self.peek_tok(), Some(Tok::Lt)) {
                        self.parse_aggregation(body_name, body_pos)
                    } else {
                        self.diags.push(Diagnostic::error(
                            body_pos,
                            codes::ITERATION_BODY,
                            "iteration body must be an aggregation",
                        ));
                        None
                    }
                } else {
                    self.diags.push(Diagnostic::error(
                        body_pos,
                        codes::ITERATION_BODY,
                        "iteration body must be an aggregation",
                    ));
                    None
                }
            }
            _ => {
                self.diags.push(Diagnostic::error(
                    self.pos(),
                    codes::ITERATION_BODY,
                    "iteration body must be an aggregation",
                ));
                None
            }
        };
        let body = match body {
            Some(b) => b,
            None => {
                // Skip to the closing brace so the parse can continue.
                while let Some(tok) = self.peek_tok() {
                    if matches!(tok, Tok::RBrace) {
                        break;
                    }
                    self.i += 1;
                }
                self.eat(&Tok::RBrace);
                return None;
            }
        };
        if !self.eat(&Tok::RBrace) {
            self.diags.push(Diagnostic::error(
                self.pos(),
                codes::ITERATION_BODY,
                "iteration body must be exactly one aggregation",
            ));
            while let Some(tok) = self.peek_tok() {
                if matches!(tok, Tok::RBrace) {
                    break;
                }
                self.i += 1;
            }
            self.eat(&Tok::RBrace);
        }
        Some(Iteration { name, body, pos: name_pos })
    }

    fn parse_field_body(&mut self, name: String, name_pos: Pos) -> Option<Field> {
        self.expect(&Tok::LBracket, "`[`");
        let op = match self.peek_word() {
            Some("g") => OpTag::Generated,
            Some("i") => OpTag::Indicated,
            _ => {
                self.error_here("expected op tag `g` or `i`");
                self.skip_to_bracket_end();
                return None;
            }
        };
        self.i += 1;
        let domain = self.parse_domain()?;
        let mut size = None;
        if self.eat(&Tok::LParen) {
            size = self.expect_int("size");
            self.expect(&Tok::RParen, "`)` closing the size");
        }
        let affected = self.eat_word("affected");
        let mut init = None;
        if self.eat_word("init") {
            init = self.expect_string("init expression");
        }
        if !self.eat(&Tok::RBracket) {
            self.error_here("expected `]` closing the field");
            self.skip_to_bracket_end();
        }
        Some(Field { name, op, domain, size, affected, init, pos: name_pos })
    }

    fn skip_to_bracket_end(&mut self) {
        while let Some(tok) = self.peek_tok() {
            if matches!(tok, Tok::RBracket) {
                self.i += 1;
                return;
            }
            if matches!(tok, Tok::Gt | Tok::RBrace) {
                return;
            }
            self.i += 1;
        }
    }

    fn parse_domain(&mut self) -> Option<Domain> {
        match self.peek_word() {
            Some("number") => {
                self.i += 1;
                Some(Domain::Number)
            }
            Some("text") => {
                self.i += 1;
                Some(Domain::Text)
            }
            Some("date") => {
                self.i += 1;
                Some(Domain::Date)
            }
            Some("datetime") => {
                self.i += 1;
                Some(Domain::DateTime)
            }
            Some("money") => {
                self.i += 1;
                Some(Domain::Money)
            }
            Some("enum") => {
                self.i += 1;
                self.expect(&Tok::LParen, "`(` after `enum`");
                let mut literals = Vec::new();
                loop {
                    match self.expect_single_word("enum literal") {
                        Some((lit, _)) => literals.push(lit),
                        None => break,
                    }
                    if !self.eat(&Tok::Pipe) {
                        break;
                    }
                }
                self.expect(&Tok::RParen, "`)` closing the enum literals");
                Some(Domain::Enum(literals))
            }
            Some("ref") => {
                self.i += 1;
                let (object, _) = self.expect_single_word("business object name")?;
                Some(Domain::Ref(object))
            }
            _ => {
                self.error_here("expected a field domain");
                self.skip_to_bracket_end();
                None
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Event assembly
// ---------------------------------------------------------------------------

struct EventBuilder {
    id: String,
    title: String,
    process: String,
    pos: Pos,
    primary: Option<String>,
    support: Option<String>,
    message: Option<MessageStructure>,
    reaction: Option<ReactionSpec>,
    registers: Vec<(String, Vec<String>, Pos)>,
    restrictions: Vec<Restriction>,
    precedes: Vec<PrecedenceDecl>,
}

impl EventBuilder {
    fn new(id: String, title: String, process: String, pos: Pos) -> Self {
        EventBuilder {
            id,
            title,
            process,
            pos,
            primary: None,
            support: None,
            message: None,
            reaction: None,
            registers: Vec::new(),
            restrictions: Vec::new(),
            precedes: Vec::new(),
        }
    }

    fn set_primary(&mut self, s: String, pos: Pos, diags: &mut Vec<Diagnostic>) {
        if self.primary.replace(s).is_some() {
            diags.push(Diagnostic::error(pos, codes::DUP_CLAUSE, "duplicate `primary` clause"));
        }
    }

    fn set_support(&mut self, s: String, pos: Pos, diags: &mut Vec<Diagnostic>) {
        if self.support.replace(s).is_some() {
            diags.push(Diagnostic::error(pos, codes::DUP_CLAUSE, "duplicate `support` clause"));
        }
    }

    fn set_message(&mut self, ms: MessageStructure, pos: Pos, diags: &mut Vec<Diagnostic>) {
        if self.message.replace(ms).is_some() {
            diags.push(Diagnostic::error(
                pos,
                codes::DUP_CLAUSE,
                format!("event {} declares more than one message structure", self.id),
            ));
        }
    }

    fn set_reaction(&mut self, r: ReactionSpec, diags: &mut Vec<Diagnostic>) {
        let pos = r.pos;
        if self.reaction.replace(r).is_some() {
            diags.push(Diagnostic::error(
                pos,
                codes::DUP_CLAUSE,
                format!("event {} declares more than one reaction", self.id),
            ));
        }
    }

    fn finish(self, parser: &mut Parser) -> CommunicativeEvent {
        if self.message.is_none() {
            parser.diags.push(Diagnostic::error(
                self.pos,
                codes::MISSING_MESSAGE,
                format!("event {} has no message structure", self.id),
            ));
        }
        if self.reaction.is_none() {
            parser.diags.push(Diagnostic::error(
                self.pos,
                codes::MISSING_REACTION,
                format!("event {} has no reaction clause", self.id),
            ));
        }
        let event = CommunicativeEvent {
            id: self.id,
            title: self.title,
            process: self.process,
            primary_actor: self.primary.unwrap_or_default(),
            support_actor: self.support.unwrap_or_default(),
            message: self.message.unwrap_or(MessageStructure {
                root: Aggregation { name: String::new(), items: Vec::new(), pos: self.pos },
            }),
            restrictions: self.restrictions,
            reaction: self.reaction.unwrap_or(ReactionSpec {
                kind: ReactionKind::Creation,
                name: String::new(),
                end_of_editing: None,
                pos: self.pos,
            }),
            precedes: self.precedes,
            pos: self.pos,
        };
        parser.pending_registers.push((event.id.clone(), self.registers));
        event
    }
}

// ---------------------------------------------------------------------------
// Post-parse resolution and structural checks
// ---------------------------------------------------------------------------

fn resolve_and_check(
    model: &mut RequirementsModel,
    pending: PendingRegisters,
    diags: &mut Vec<Diagnostic>,
) {
    // Duplicate processes.
    let mut seen = BTreeSet::new();
    for p in &model.processes {
        if !seen.insert(p.acronym.clone()) {
            diags.push(Diagnostic::error(
                p.pos,
                codes::DUP_PROCESS,
                format!("duplicate process acronym {}", p.acronym),
            ));
        }
    }

    // Duplicate events (case-insensitive ids). Duplicates are dropped so the
    // surviving model honors the uniqueness invariant.
    let mut ids = BTreeSet::new();
    let mut kept = Vec::new();
    for e in model.events.drain(..) {
        if ids.insert(e.id.to_ascii_uppercase()) {
            kept.push(e);
        } else {
            diags.push(Diagnostic::error(
                e.pos,
                codes::DUP_EVENT,
                format!("duplicate event id {}", e.id),
            ));
        }
    }
    model.events = kept;

    // Registry assembly with duplicate-object detection and path resolution.
    let mut registry = ObjectRegistry::default();
    for (event_id, registers) in pending {
        let Some(event) = model.events.iter().find(|e| e.id == event_id) else {
            continue; // the duplicate event was dropped above
        };
        for (object, path, pos) in registers {
            if registry.contains(&object) {
                diags.push(Diagnostic::error(
                    pos,
                    codes::DUP_OBJECT,
                    format!("business object {object} is registered more than once"),
                ));
                continue;
            }
            if resolve_path(&event.message, &path).is_none() {
                diags.push(Diagnostic::error(
                    pos,
                    codes::UNRESOLVED_PATH,
                    format!(
                        "registry path {} does not name an aggregation in the message of {}",
                        path.join("."),
                        event.id
                    ),
                ));
                continue;
            }
            registry.insert(object, RegistryEntry { event: event.id.clone(), path, pos });
        }
    }
    model.objects = registry;

    // Precedence targets must exist; self-loops are structural errors.
    let known: BTreeSet<String> =
        model.events.iter().map(|e| e.id.to_ascii_uppercase()).collect();
    for e in &model.events {
        for d in &e.precedes {
            if !known.contains(&d.to.to_ascii_uppercase()) {
                diags.push(Diagnostic::error(
                    d.pos,
                    codes::UNRESOLVED_EVENT,
                    format!("precedes {}: no event named {} is defined", d.to, d.to),
                ));
            } else if d.to.eq_ignore_ascii_case(&e.id) {
                diags.push(Diagnostic::error(
                    d.pos,
                    codes::SELF_LOOP,
                    format!("event {} cannot precede itself", e.id),
                ));
            }
        }
    }

    // Reference fields must name registered objects; message trees must be
    // well formed.
    for e in &model.events {
        for field in e.message.all_fields() {
            if let Domain::Ref(object) = &field.domain {
                if !model.objects.contains(object) {
                    diags.push(Diagnostic::error(
                        field.pos,
                        codes::UNRESOLVED_OBJECT,
                        format!(
                            "field {} references unregistered business object {object}",
                            field.name
                        ),
                    ));
                }
            }
        }
        check_message_tree(&e.message, diags);
    }
}

/// Resolve a registry path to the aggregation it names, walking through
/// iteration names.
pub(crate) fn resolve_path<'a>(ms: &'a MessageStructure, path: &[String]) -> Option<&'a Aggregation> {
    let mut current: &Aggregation = &ms.root;
    let mut idx = 0;
    if path.is_empty() {
        return None;
    }
    if path[0] != current.name {
        return None;
    }
    idx += 1;
    while idx < path.len() {
        let part = &path[idx];
        let mut next: Option<&Aggregation> = None;
        for item in &current.items {
            match item {
                Item::Sub(Substructure::Aggregation(a)) if &a.name == part => {
                    next = Some(a);
                    break;
                }
                Item::Sub(Substructure::Iteration(it)) if &it.name == part => {
                    // An iteration name is followed by its body name.
                    if idx + 1 < path.len() && path[idx + 1] == it.body.name {
                        next = Some(&it.body);
                        idx += 1;
                        break;
                    }
                    return None;
                }
                _ => {}
            }
        }
        current = next?;
        idx += 1;
    }
    Some(current)
}

fn check_message_tree(ms: &MessageStructure, diags: &mut Vec<Diagnostic>) {
    fn walk(agg: &Aggregation, diags: &mut Vec<Diagnostic>) {
        let mut names = BTreeMap::new();
        for item in &agg.items {
            let (name, pos) = match item {
                Item::Field(f) => (&f.name, f.pos),
                Item::Sub(Substructure::Aggregation(a)) => (&a.name, a.pos),
                Item::Sub(Substructure::Iteration(i)) => (&i.name, i.pos),
            };
            if let Some(_first) = names.insert(name.clone(), pos) {
                diags.push(Diagnostic::error(
                    pos,
                    codes::DUP_SIBLING,
                    format!("duplicate sibling name {name}"),
                ));
            }
        }
        for item in &agg.items {
            match item {
                Item::Field(f) => {
                    if let Domain::Enum(literals) = &f.domain {
                        let distinct: BTreeSet<&String> = literals.iter().collect();
                        if distinct.len() < 2 {
                            diags.push(Diagnostic::error(
                                f.pos,
                                codes::ENUM_LITERALS,
                                format!("enum domain of {} needs at least 2 distinct literals", f.name),
                            ));
                        }
                    }
                }
                Item::Sub(Substructure::Aggregation(a)) => walk(a, diags),
                Item::Sub(Substructure::Iteration(i)) => walk(&i.body, diags),
            }
        }
    }
    walk(&ms.root, diags);
}
