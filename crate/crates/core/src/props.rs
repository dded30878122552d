//! Foot-contact propositions and propositional guard formulas.
//!
//! Each of the four propositions means "this foot is in the air". A
//! [`LabelSet`] is a truth assignment over them and a [`Guard`] is a
//! propositional formula evaluated against one. Guards have a small ASCII
//! concrete syntax:
//!
//! ```text
//! expr  := or
//! or    := and ("|" and)*
//! and   := unary ("&" unary)*
//! unary := "!" unary | "(" expr ")" | ident
//! ident := "FL" | "FR" | "BL" | "BR"
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A foot-in-the-air proposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prop {
    FL,
    FR,
    BL,
    BR,
}

impl Prop {
    pub const ALL: [Prop; 4] = [Prop::FL, Prop::FR, Prop::BL, Prop::BR];

    /// Bit position in a [`LabelSet`] and in the toy observation code.
    pub const fn index(self) -> usize {
        match self {
            Prop::FL => 0,
            Prop::FR => 1,
            Prop::BL => 2,
            Prop::BR => 3,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Prop::FL => "FL",
            Prop::FR => "FR",
            Prop::BL => "BL",
            Prop::BR => "BR",
        }
    }

    pub fn from_name(name: &str) -> Option<Prop> {
        Prop::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of propositions that hold, stored as a 4-bit mask (FL = bit 0 ... BR = bit 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LabelSet(u8);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);
    pub const FULL: LabelSet = LabelSet(0b1111);
    pub const COUNT: usize = 16;

    /// Builds a set from the low four bits of `bits`; higher bits are rejected.
    pub const fn from_bits(bits: u8) -> Option<LabelSet> {
        if bits < 16 {
            Some(LabelSet(bits))
        } else {
            None
        }
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub fn from_props<I: IntoIterator<Item = Prop>>(props: I) -> LabelSet {
        props.into_iter().fold(LabelSet::EMPTY, |s, p| s.with(p))
    }

    #[must_use]
    pub const fn with(self, p: Prop) -> LabelSet {
        LabelSet(self.0 | (1 << p.index()))
    }

    pub const fn contains(self, p: Prop) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn props(self) -> impl Iterator<Item = Prop> {
        Prop::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    /// All 16 label sets in ascending bit order.
    pub fn all() -> impl Iterator<Item = LabelSet> {
        (0u8..16).map(LabelSet)
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.props().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(p.name())?;
        }
        f.write_str("}")
    }
}

/// Serialized as a list of foot names, e.g. `["FL", "BR"]`.
impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.props().map(Prop::name))
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names
            .iter()
            .map(|n| Prop::from_name(n).ok_or_else(|| serde::de::Error::custom(format!("unknown foot {n:?}"))))
            .collect::<Result<Vec<_>, _>>()
            .map(LabelSet::from_props)
    }
}

/// Propositional formula over [`Prop`]s.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    Lit(Prop),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn lit(p: Prop) -> Guard {
        Guard::Lit(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: Guard) -> Guard {
        Guard::Not(Box::new(g))
    }

    pub fn and(a: Guard, b: Guard) -> Guard {
        Guard::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Guard, b: Guard) -> Guard {
        Guard::Or(Box::new(a), Box::new(b))
    }

    /// Conjunction over all four propositions that holds for exactly `pose`:
    /// the feet in `pose` are airborne and the others are not.
    pub fn exact_pose(pose: LabelSet) -> Guard {
        Prop::ALL
            .into_iter()
            .map(|p| {
                if pose.contains(p) {
                    Guard::lit(p)
                } else {
                    Guard::not(Guard::lit(p))
                }
            })
            .reduce(Guard::and)
            .expect("four propositions")
    }

    pub fn eval(&self, labels: LabelSet) -> bool {
        match self {
            Guard::Lit(p) => labels.contains(*p),
            Guard::Not(g) => !g.eval(labels),
            Guard::And(a, b) => a.eval(labels) && b.eval(labels),
            Guard::Or(a, b) => a.eval(labels) || b.eval(labels),
        }
    }

    /// Truth table as a 16-bit mask; bit `i` is the value on `LabelSet` with bits `i`.
    pub fn truth_table(&self) -> u16 {
        LabelSet::all()
            .filter(|l| self.eval(*l))
            .fold(0u16, |acc, l| acc | (1 << l.bits()))
    }

    /// Every label set satisfying the guard, in ascending bit order.
    pub fn satisfying_sets(&self) -> Vec<LabelSet> {
        LabelSet::all().filter(|l| self.eval(*l)).collect()
    }

    pub fn semantically_eq(&self, other: &Guard) -> bool {
        self.truth_table() == other.truth_table()
    }

    pub fn depth(&self) -> usize {
        match self {
            Guard::Lit(_) => 1,
            Guard::Not(g) => 1 + g.depth(),
            Guard::And(a, b) | Guard::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Renders with the minimum parentheses needed to re-parse to the same tree
    /// up to associativity.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            Guard::Lit(p) => out.push_str(p.name()),
            Guard::Not(g) => {
                out.push('!');
                g.render_child(out, !matches!(**g, Guard::Lit(_) | Guard::Not(_)));
            }
            Guard::And(a, b) => {
                a.render_child(out, matches!(**a, Guard::Or(..)));
                out.push_str(" & ");
                b.render_child(out, matches!(**b, Guard::Or(..)));
            }
            Guard::Or(a, b) => {
                a.render_into(out);
                out.push_str(" | ");
                b.render_into(out);
            }
        }
    }

    fn render_child(&self, out: &mut String, parenthesize: bool) {
        if parenthesize {
            out.push('(');
            self.render_into(out);
            out.push(')');
        } else {
            self.render_into(out);
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Guard parse failure. Positions are 0-based character offsets.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty guard expression")]
    Empty,
    #[error("unexpected character {ch:?} at position {pos}")]
    UnexpectedChar { pos: usize, ch: char },
    #[error("unexpected {found} at position {pos}, expected {expected}")]
    UnexpectedToken {
        pos: usize,
        found: String,
        expected: &'static str,
    },
    #[error("unexpected end of input at position {pos}, expected {expected}")]
    UnexpectedEnd { pos: usize, expected: &'static str },
    #[error("unknown identifier {name:?} at position {pos} (expected FL, FR, BL or BR)")]
    UnknownIdent { pos: usize, name: String },
}

impl ParseError {
    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::UnexpectedChar { pos, .. }
            | ParseError::UnexpectedToken { pos, .. }
            | ParseError::UnexpectedEnd { pos, .. }
            | ParseError::UnknownIdent { pos, .. } => Some(*pos),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Not,
    And,
    Or,
    LParen,
    RParen,
    Ident(Prop),
}

impl Token {
    fn describe(self) -> String {
        match self {
            Token::Not => "\"!\"".into(),
            Token::And => "\"&\"".into(),
            Token::Or => "\"|\"".into(),
            Token::LParen => "\"(\"".into(),
            Token::RParen => "\")\"".into(),
            Token::Ident(p) => format!("identifier {p}"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let tok = match ch {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' => Token::Not,
            '&' => Token::And,
            '|' => Token::Or,
            '(' => Token::LParen,
            ')' => Token::RParen,
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                let prop = Prop::from_name(&name)
                    .ok_or(ParseError::UnknownIdent { pos: start, name })?;
                tokens.push((start, Token::Ident(prop)));
                continue;
            }
            c => return Err(ParseError::UnexpectedChar { pos: i, ch: c }),
        };
        tokens.push((i, tok));
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.cursor).map(|(_, t)| *t)
    }

    fn bump(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.cursor).copied();
        self.cursor += 1;
        t
    }

    fn or(&mut self) -> Result<Guard, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(Token::Or) {
            self.bump();
            lhs = Guard::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Guard, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(Token::And) {
            self.bump();
            lhs = Guard::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Guard, ParseError> {
        const EXPECTED: &str = "\"!\", \"(\" or an identifier";
        match self.bump() {
            None => Err(ParseError::UnexpectedEnd {
                pos: self.end,
                expected: EXPECTED,
            }),
            Some((_, Token::Not)) => Ok(Guard::not(self.unary()?)),
            Some((_, Token::Ident(p))) => Ok(Guard::lit(p)),
            Some((_, Token::LParen)) => {
                let inner = self.or()?;
                match self.bump() {
                    Some((_, Token::RParen)) => Ok(inner),
                    Some((pos, tok)) => Err(ParseError::UnexpectedToken {
                        pos,
                        found: tok.describe(),
                        expected: "\")\"",
                    }),
                    None => Err(ParseError::UnexpectedEnd {
                        pos: self.end,
                        expected: "\")\"",
                    }),
                }
            }
            Some((pos, tok)) => Err(ParseError::UnexpectedToken {
                pos,
                found: tok.describe(),
                expected: EXPECTED,
            }),
        }
    }
}

/// Parses a guard expression. Precedence is `!` over `&` over `|`; binary
/// operators associate to the left.
pub fn parse_guard(text: &str) -> Result<Guard, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        end: text.chars().count(),
    };
    let guard = parser.or()?;
    if let Some((pos, tok)) = parser.bump() {
        return Err(ParseError::UnexpectedToken {
            pos,
            found: tok.describe(),
            expected: "\"&\", \"|\" or end of input",
        });
    }
    Ok(guard)
}

impl FromStr for Guard {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_guard(s)
    }
}

impl Serialize for Guard {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for Guard {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_guard(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trot_a() -> Guard {
        parse_guard("FL & !FR & !BL & BR").unwrap()
    }

    #[test]
    fn parses_trot_pose_a_as_left_and_chain() {
        use Prop::*;
        let expected = Guard::and(
            Guard::and(
                Guard::and(Guard::lit(FL), Guard::not(Guard::lit(FR))),
                Guard::not(Guard::lit(BL)),
            ),
            Guard::lit(BR),
        );
        assert_eq!(trot_a(), expected);
        assert_eq!(trot_a(), Guard::exact_pose(LabelSet::from_props([FL, BR])));
    }

    #[test]
    fn parses_single_literal() {
        assert_eq!(parse_guard("FL").unwrap(), Guard::Lit(Prop::FL));
        assert_eq!(parse_guard("  ( BR )\t").unwrap(), Guard::Lit(Prop::BR));
    }

    #[test]
    fn reports_position_of_stray_operator() {
        let err = parse_guard("FL & & BR").unwrap_err();
        assert_eq!(err.position(), Some(5));
        assert!(matches!(err, ParseError::UnexpectedToken { .. }));
    }

    #[test]
    fn rejects_unknown_identifiers_and_bad_input() {
        assert!(matches!(
            parse_guard("FL & XY"),
            Err(ParseError::UnknownIdent { pos: 5, .. })
        ));
        assert!(matches!(parse_guard("FLX"), Err(ParseError::UnknownIdent { pos: 0, .. })));
        assert_eq!(parse_guard("   "), Err(ParseError::Empty));
        assert_eq!(parse_guard(""), Err(ParseError::Empty));
        assert!(matches!(parse_guard("(FL"), Err(ParseError::UnexpectedEnd { pos: 3, .. })));
        assert!(matches!(parse_guard("FL)"), Err(ParseError::UnexpectedToken { pos: 2, .. })));
        assert!(matches!(parse_guard("FL # BR"), Err(ParseError::UnexpectedChar { pos: 3, ch: '#' })));
        assert!(matches!(parse_guard("FL BR"), Err(ParseError::UnexpectedToken { pos: 3, .. })));
        assert!(matches!(parse_guard("!"), Err(ParseError::UnexpectedEnd { pos: 1, .. })));
    }

    #[test]
    fn precedence_not_and_or() {
        // FL | FR & BL  ==  FL | (FR & BL)
        let g = parse_guard("FL | FR & BL").unwrap();
        assert!(matches!(g, Guard::Or(..)));
        let g = parse_guard("!FL & FR").unwrap();
        assert!(matches!(g, Guard::And(..)));
    }

    #[test]
    fn evaluates_trot_guard() {
        use Prop::*;
        let g = trot_a();
        assert!(g.eval(LabelSet::from_props([FL, BR])));
        assert!(!g.eval(LabelSet::from_props([FL, FR, BR])));
        assert!(Guard::not(g).eval(LabelSet::EMPTY));
    }

    #[test]
    fn renders_structure() {
        use Prop::*;
        assert_eq!(Guard::lit(FL).render(), "FL");
        assert_eq!(
            Guard::not(Guard::and(Guard::lit(FL), Guard::lit(BR))).render(),
            "!(FL & BR)"
        );
        assert_eq!(trot_a().render(), "FL & !FR & !BL & BR");
        assert_eq!(
            Guard::and(Guard::or(Guard::lit(FL), Guard::lit(FR)), Guard::lit(BL)).render(),
            "(FL | FR) & BL"
        );
        assert_eq!(Guard::not(Guard::not(Guard::lit(BL))).render(), "!!BL");
    }

    #[test]
    fn satisfying_sets_examples() {
        use Prop::*;
        assert_eq!(trot_a().satisfying_sets(), vec![LabelSet::from_props([FL, BR])]);
        assert_eq!(parse_guard("FL | !FL").unwrap().satisfying_sets().len(), 16);
        assert!(parse_guard("FL & !FL").unwrap().satisfying_sets().is_empty());
    }

    #[test]
    fn label_set_display_and_bits() {
        use Prop::*;
        let l = LabelSet::from_props([BR, FL]);
        assert_eq!(l.bits(), 0b1001);
        assert_eq!(l.to_string(), "{FL, BR}");
        assert_eq!(LabelSet::from_bits(16), None);
        assert_eq!(LabelSet::all().count(), 16);
    }

    pub(crate) fn arb_guard(depth: u32) -> impl Strategy<Value = Guard> {
        let leaf = prop::sample::select(Prop::ALL.to_vec()).prop_map(Guard::Lit);
        leaf.prop_recursive(depth, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Guard::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Guard::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Guard::or(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(g in arb_guard(5)) {
            let back = parse_guard(&g.render()).unwrap();
            prop_assert_eq!(back.truth_table(), g.truth_table());
        }

        #[test]
        fn eval_matches_satisfying_sets(g in arb_guard(5), bits in 0u8..16) {
            let l = LabelSet::from_bits(bits).unwrap();
            prop_assert_eq!(g.eval(l), g.satisfying_sets().contains(&l));
        }

        #[test]
        fn de_morgan(a in arb_guard(3), b in arb_guard(3)) {
            let lhs = Guard::not(Guard::and(a.clone(), b.clone()));
            let rhs = Guard::or(Guard::not(a), Guard::not(b));
            for l in LabelSet::all() {
                prop_assert_eq!(lhs.eval(l), rhs.eval(l));
            }
        }
    }
}
