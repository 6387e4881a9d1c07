//! Positioned diagnostics shared by the parser and the validator.
//!
//! Diagnostics are plain values: operations collect them into vectors and
//! callers decide what to do (print, count errors, fail). The reported list
//! is always sorted by (file position, code, message) so repeated runs are
//! byte-identical.

use std::fmt;

/// 1-based line/column position in a `.carm` source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// Diagnostic codes. Exxx are errors, Wxxx are warnings; the numeric part
/// groups related checks (1xx lexical/reference, 2xx structural, 9xx
/// defaults and advisories).
pub mod codes {
    pub const SYNTAX: &str = "E101";
    pub const DUP_PROCESS: &str = "E110";
    pub const DUP_EVENT: &str = "E111";
    pub const DUP_OBJECT: &str = "E112";
    pub const DUP_CLAUSE: &str = "E113";
    pub const MISSING_MESSAGE: &str = "E114";
    pub const MISSING_REACTION: &str = "E115";
    pub const UNRESOLVED_EVENT: &str = "E120";
    pub const UNRESOLVED_OBJECT: &str = "E121";
    pub const UNRESOLVED_PATH: &str = "E122";
    pub const UNKNOWN_PROCESS: &str = "E123";
    pub const EMPTY_MESSAGE: &str = "E201";
    pub const ITERATION_BODY: &str = "E202";
    pub const UNREGISTERED_AGG: &str = "E203";
    pub const DUP_SIBLING: &str = "E204";
    pub const ENUM_LITERALS: &str = "E205";
    pub const AFFECTED_COUNT: &str = "E210";
    pub const AFFECTED_MISPLACED: &str = "E211";
    pub const EXT_ITERATION: &str = "E212";
    pub const IDENTIFIER_FIELDS: &str = "E220";
    pub const ANNOTATION_TARGET: &str = "E221";
    pub const ANNOTATION_APPLIES: &str = "E222";
    pub const TYPE_OVERRIDE: &str = "E223";
    pub const CARDINALITY_CONFLICT: &str = "E224";
    pub const GENERATED_DOMAIN: &str = "E230";
    pub const EXT_FIELD_ANNOTATION: &str = "E231";
    pub const IDENTIFIER_PROPS: &str = "E232";
    pub const INIT_ON_REF: &str = "E233";
    pub const SELF_LOOP: &str = "E240";
    pub const UNFLAGGED_CYCLE: &str = "E241";
    pub const DEFAULT_IDENTIFIER: &str = "W901";
    pub const DEFAULT_SIZE: &str = "W902";
    pub const DEFAULT_CARDINALITY: &str = "W903";
    pub const FORWARD_REFERENCE: &str = "W910";
    pub const EOE_SINGLE_CLASS: &str = "W911";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Option<Pos>,
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn error(pos: impl Into<Option<Pos>>, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            pos: pos.into(),
            severity: Severity::Error,
            code,
            message: message.into(),
        }
    }

    pub fn warning(pos: impl Into<Option<Pos>>, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            pos: pos.into(),
            severity: Severity::Warning,
            code,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{}[{}] {}: {}", self.severity, self.code, p, self.message),
            None => write!(f, "{}[{}] {}", self.severity, self.code, self.message),
        }
    }
}

/// Sort diagnostics into the reporting order: by position, then code, then
/// message. Position-less diagnostics come last.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        let ka = a.pos.unwrap_or(Pos::new(u32::MAX, u32::MAX));
        let kb = b.pos.unwrap_or(Pos::new(u32::MAX, u32::MAX));
        ka.cmp(&kb)
            .then_with(|| a.code.cmp(b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
}

/// True if any diagnostic in the list is an error.
pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_by_position_then_code() {
        let mut diags = vec![
            Diagnostic::error(Pos::new(3, 1), codes::DUP_EVENT, "b"),
            Diagnostic::error(None, codes::SYNTAX, "model-level"),
            Diagnostic::error(Pos::new(1, 5), codes::SYNTAX, "a"),
            Diagnostic::error(Pos::new(1, 5), codes::DUP_EVENT, "a"),
        ];
        sort_diagnostics(&mut diags);
        assert_eq!(diags[0].pos, Some(Pos::new(1, 5)));
        assert_eq!(diags[0].code, codes::SYNTAX);
        assert_eq!(diags[1].code, codes::DUP_EVENT);
        assert_eq!(diags[2].pos, Some(Pos::new(3, 1)));
        assert!(diags[3].pos.is_none());
    }
}
