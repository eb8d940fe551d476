//! Stress-free CMU phoneme inventory plus the reserved `PAUSE` and
//! `FILLER-UH` tokens.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Symbol table. Index order is stable and is the `Phoneme` id.
const SYMBOLS: [&str; 41] = [
    "AA",
    "AE",
    "AH",
    "AO",
    "AW",
    "AY",
    "B",
    "CH",
    "D",
    "DH",
    "EH",
    "ER",
    "EY",
    "F",
    "G",
    "HH",
    "IH",
    "IY",
    "JH",
    "K",
    "L",
    "M",
    "N",
    "NG",
    "OW",
    "OY",
    "P",
    "R",
    "S",
    "SH",
    "T",
    "TH",
    "UH",
    "UW",
    "V",
    "W",
    "Y",
    "Z",
    "ZH",
    "PAUSE",
    "FILLER-UH",
];

const VOWELS: [&str; 15] = ["AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW"];

/// Number of CMU phonemes (reserved tokens excluded).
pub const CMU_COUNT: usize = 39;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty phoneme sequence")]
    EmptyInput,
    /// `position` is 1-based.
    #[error("unknown phoneme symbol {0:?} at position {1}")]
    UnknownSymbol(String, usize),
}

/// One inventory token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phoneme(u8);

impl Phoneme {
    pub const PAUSE: Phoneme = Phoneme(39);
    pub const FILLER_UH: Phoneme = Phoneme(40);

    pub fn from_symbol(symbol: &str) -> Option<Phoneme> {
        SYMBOLS.iter().position(|s| *s == symbol).map(|i| Phoneme(i as u8))
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[self.0 as usize]
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }

    pub fn is_vowel(self) -> bool {
        VOWELS.contains(&self.symbol())
    }

    pub fn is_consonant(self) -> bool {
        (self.0 as usize) < CMU_COUNT && !self.is_vowel()
    }

    pub fn is_pause(self) -> bool {
        self == Phoneme::PAUSE
    }

    pub fn is_filler(self) -> bool {
        self == Phoneme::FILLER_UH
    }

    /// All 41 tokens in id order.
    pub fn inventory() -> impl Iterator<Item = Phoneme> {
        (0..SYMBOLS.len() as u8).map(Phoneme)
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Phoneme {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phoneme::from_symbol(s).ok_or_else(|| ParseError::UnknownSymbol(s.to_string(), 1))
    }
}

impl Serialize for Phoneme {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for Phoneme {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Phoneme::from_symbol(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown phoneme symbol {s:?}")))
    }
}

/// An ordered phoneme sequence: the reference text `C` or a transcription `τ`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhonemeSeq(pub Vec<Phoneme>);

impl PhonemeSeq {
    pub fn new(tokens: Vec<Phoneme>) -> Self {
        PhonemeSeq(tokens)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Phoneme] {
        &self.0
    }

    /// 1-based access, matching the alignment math.
    pub fn at(&self, index: usize) -> Option<Phoneme> {
        index.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }
}

impl fmt::Display for PhonemeSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PhonemeSeq {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_phoneme_seq(s)
    }
}

/// Parse whitespace-separated inventory symbols.
pub fn parse_phoneme_seq(text: &str) -> Result<PhonemeSeq, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::EmptyInput);
    }
    text.split_whitespace()
        .enumerate()
        .map(|(i, tok)| Phoneme::from_symbol(tok).ok_or_else(|| ParseError::UnknownSymbol(tok.to_string(), i + 1)))
        .collect::<Result<Vec<_>, _>>()
        .map(PhonemeSeq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_please() {
        let seq = parse_phoneme_seq("P L IY Z").unwrap();
        let syms: Vec<_> = seq.0.iter().map(|p| p.symbol()).collect();
        assert_eq!(syms, ["P", "L", "IY", "Z"]);
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(parse_phoneme_seq(""), Err(ParseError::EmptyInput));
        assert_eq!(parse_phoneme_seq("   \t"), Err(ParseError::EmptyInput));
    }

    #[test]
    fn unknown_symbol_reports_position() {
        assert_eq!(parse_phoneme_seq("P QX"), Err(ParseError::UnknownSymbol("QX".into(), 2)));
    }

    #[test]
    fn inventory_shape() {
        assert_eq!(Phoneme::inventory().count(), CMU_COUNT + 2);
        assert_eq!(Phoneme::inventory().filter(|p| p.is_vowel()).count(), 15);
        assert_eq!(Phoneme::inventory().filter(|p| p.is_consonant()).count(), 24);
        assert!(!Phoneme::PAUSE.is_vowel() && !Phoneme::PAUSE.is_consonant());
        assert_eq!(Phoneme::from_symbol("FILLER-UH"), Some(Phoneme::FILLER_UH));
        // stressed variants are not part of the inventory
        assert_eq!(Phoneme::from_symbol("AH0"), None);
    }

    #[test]
    fn one_based_access() {
        let seq = parse_phoneme_seq("R EH F").unwrap();
        assert_eq!(seq.at(0), None);
        assert_eq!(seq.at(1).unwrap().symbol(), "R");
        assert_eq!(seq.at(3).unwrap().symbol(), "F");
        assert_eq!(seq.at(4), None);
    }
}
