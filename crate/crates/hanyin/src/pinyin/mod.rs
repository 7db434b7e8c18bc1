//! Pinyin syllable structure: parsing, validation, rendering, enumeration.
//!
//! A written Mandarin syllable is an optional initial (one of 21 consonants),
//! a final (rhyme) drawn from four groups (a, i, u, ü), and a tone 1–5, where
//! tone 5 is the unmarked neutral tone. Which initial–final combinations are
//! attested is data, not rule: the embedded table in `data/pinyin_table.txt`
//! lists every cell, and this module treats that file as the single source of
//! truth. Tone is written either as a diacritic over the nucleus vowel
//! (`huá`) or as a trailing digit (`hua2`).

mod table;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Combining diacritics for tones 1–4, in tone order: macron, acute, caron,
/// grave.
const TONE_MARKS: [char; 4] = ['\u{0304}', '\u{0301}', '\u{030C}', '\u{0300}'];

/// The 21 syllable-initial consonants, in the conventional table order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Initial {
    B,
    P,
    M,
    F,
    D,
    T,
    N,
    L,
    G,
    K,
    H,
    J,
    Q,
    X,
    Zh,
    Ch,
    Sh,
    R,
    Z,
    C,
    S,
}

impl Initial {
    pub const ALL: [Initial; 21] = [
        Initial::B,
        Initial::P,
        Initial::M,
        Initial::F,
        Initial::D,
        Initial::T,
        Initial::N,
        Initial::L,
        Initial::G,
        Initial::K,
        Initial::H,
        Initial::J,
        Initial::Q,
        Initial::X,
        Initial::Zh,
        Initial::Ch,
        Initial::Sh,
        Initial::R,
        Initial::Z,
        Initial::C,
        Initial::S,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Initial::B => "b",
            Initial::P => "p",
            Initial::M => "m",
            Initial::F => "f",
            Initial::D => "d",
            Initial::T => "t",
            Initial::N => "n",
            Initial::L => "l",
            Initial::G => "g",
            Initial::K => "k",
            Initial::H => "h",
            Initial::J => "j",
            Initial::Q => "q",
            Initial::X => "x",
            Initial::Zh => "zh",
            Initial::Ch => "ch",
            Initial::Sh => "sh",
            Initial::R => "r",
            Initial::Z => "z",
            Initial::C => "c",
            Initial::S => "s",
        }
    }

    pub fn from_spelling(s: &str) -> Option<Initial> {
        Initial::ALL.iter().copied().find(|i| i.as_str() == s)
    }
}

impl fmt::Display for Initial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Initial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// The four final groups. The ü group is named `V` after its conventional
/// ASCII stand-in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FinalGroup {
    A,
    I,
    U,
    V,
}

impl FinalGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            FinalGroup::A => "a",
            FinalGroup::I => "i",
            FinalGroup::U => "u",
            FinalGroup::V => "ü",
        }
    }
}

impl Serialize for FinalGroup {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// Syllable-final nasal coda.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coda {
    None,
    N,
    Ng,
}

impl Coda {
    pub fn as_str(self) -> &'static str {
        match self {
            Coda::None => "",
            Coda::N => "n",
            Coda::Ng => "ng",
        }
    }
}

/// Finals in table-row order, with their group.
const FINALS: [(&str, FinalGroup); 38] = [
    ("a", FinalGroup::A),
    ("o", FinalGroup::A),
    ("e", FinalGroup::A),
    ("ê", FinalGroup::A),
    ("ai", FinalGroup::A),
    ("ei", FinalGroup::A),
    ("ao", FinalGroup::A),
    ("ou", FinalGroup::A),
    ("an", FinalGroup::A),
    ("en", FinalGroup::A),
    ("ang", FinalGroup::A),
    ("eng", FinalGroup::A),
    ("er", FinalGroup::A),
    ("i", FinalGroup::I),
    ("ia", FinalGroup::I),
    ("io", FinalGroup::I),
    ("ie", FinalGroup::I),
    ("iai", FinalGroup::I),
    ("iao", FinalGroup::I),
    ("iu", FinalGroup::I),
    ("ian", FinalGroup::I),
    ("in", FinalGroup::I),
    ("iang", FinalGroup::I),
    ("ing", FinalGroup::I),
    ("u", FinalGroup::U),
    ("ua", FinalGroup::U),
    ("uo", FinalGroup::U),
    ("uai", FinalGroup::U),
    ("ui", FinalGroup::U),
    ("uan", FinalGroup::U),
    ("un", FinalGroup::U),
    ("uang", FinalGroup::U),
    ("ong", FinalGroup::U),
    ("ü", FinalGroup::V),
    ("üe", FinalGroup::V),
    ("üan", FinalGroup::V),
    ("ün", FinalGroup::V),
    ("iong", FinalGroup::V),
];

/// A syllable final (rhyme): nucleus plus optional nasal coda.
///
/// Finals form a closed set of 38; this is a handle into that set. The
/// `ê`, `io`, and `iai` finals are attested only in their standalone forms.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Final(u8);

impl Final {
    pub fn all() -> impl Iterator<Item = Final> {
        (0..FINALS.len() as u8).map(Final)
    }

    pub fn from_spelling(spelling: &str) -> Option<Final> {
        FINALS
            .iter()
            .position(|&(s, _)| s == spelling)
            .map(|i| Final(i as u8))
    }

    /// Toneless spelling of the final itself, e.g. `"iu"`, `"üan"`.
    pub fn spelling(self) -> &'static str {
        FINALS[self.0 as usize].0
    }

    pub fn group(self) -> FinalGroup {
        FINALS[self.0 as usize].1
    }

    /// The written form the final takes with no initial, e.g. `"you"` for iu.
    pub fn standalone_spelling(self) -> &'static str {
        table::table()
            .lookup_pair(None, self)
            .expect("every final has a standalone form")
            .spelling
    }

    pub fn coda(self) -> Coda {
        let s = self.spelling();
        if s.ends_with("ng") {
            Coda::Ng
        } else if s.ends_with('n') {
            Coda::N
        } else {
            Coda::None
        }
    }

    /// The vowel-bearing core: spelling with the coda removed.
    pub fn nucleus(self) -> &'static str {
        let s = self.spelling();
        &s[..s.len() - self.coda().as_str().len()]
    }
}

impl fmt::Debug for Final {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Final({})", self.spelling())
    }
}

impl fmt::Display for Final {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.spelling())
    }
}

impl Serialize for Final {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.spelling())
    }
}

/// Lexical tone, 1–5. Tone 5 is the unmarked neutral tone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tone {
    Level,
    Rising,
    Dipping,
    Falling,
    Neutral,
}

impl Tone {
    pub const ALL: [Tone; 5] = [
        Tone::Level,
        Tone::Rising,
        Tone::Dipping,
        Tone::Falling,
        Tone::Neutral,
    ];

    pub fn number(self) -> u8 {
        match self {
            Tone::Level => 1,
            Tone::Rising => 2,
            Tone::Dipping => 3,
            Tone::Falling => 4,
            Tone::Neutral => 5,
        }
    }

    pub fn from_number(n: u8) -> Option<Tone> {
        Tone::ALL.get(n.checked_sub(1)? as usize).copied()
    }
}

impl Serialize for Tone {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.number())
    }
}

impl<'de> Deserialize<'de> for Tone {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let n = u8::deserialize(deserializer)?;
        Tone::from_number(n)
            .ok_or_else(|| serde::de::Error::custom(format!("tone out of range: {n}")))
    }
}

/// A parsed syllable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Syllable {
    pub initial: Option<Initial>,
    #[serde(rename = "final")]
    pub fin: Final,
    pub tone: Tone,
    /// The written form this syllable was built from.
    pub surface: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PinyinError {
    /// The input is not recognizable as a written pinyin syllable at all.
    #[error("not a pinyin syllable: {input:?}")]
    InvalidSyllable { input: String },
    /// The input decomposes into an initial and a final, but that cell of the
    /// combination table is empty.
    #[error("no such syllable: initial {} with final {}", fmt_initial(*initial), fin)]
    InvalidCombination {
        initial: Option<Initial>,
        fin: Final,
    },
    /// More than one tone indication (diacritics and/or a trailing digit).
    #[error("multiple tone marks in {input:?}")]
    MultipleToneMarks { input: String },
}

fn fmt_initial(i: Option<Initial>) -> String {
    match i {
        Some(i) => format!("'{i}'"),
        None => "(none)".to_string(),
    }
}

/// Parse a written syllable: tone diacritic or trailing tone digit, ü/v
/// equivalence, combining-mark input, and case all accepted.
///
/// Returns [`PinyinError::InvalidCombination`] when the input names an empty
/// table cell (e.g. `"fi1"`), [`PinyinError::InvalidSyllable`] when it cannot
/// be read as initial + final at all.
pub fn parse_pinyin(input: &str) -> Result<Syllable, PinyinError> {
    let lowered: String = input.trim().chars().flat_map(char::to_lowercase).collect();
    if lowered.is_empty() {
        return Err(PinyinError::InvalidSyllable {
            input: input.to_string(),
        });
    }

    // Decompose so tone diacritics become standalone combining marks, then
    // pull them out and recompose what is left (ü and ê re-compose).
    let mut tone_from_mark: Option<Tone> = None;
    let mut mark_count = 0usize;
    let mut base = String::new();
    for ch in lowered.nfd() {
        if let Some(t) = TONE_MARKS.iter().position(|&m| m == ch) {
            mark_count += 1;
            tone_from_mark = Some(Tone::from_number(t as u8 + 1).unwrap());
        } else {
            base.push(ch);
        }
    }
    if mark_count > 1 {
        return Err(PinyinError::MultipleToneMarks {
            input: input.to_string(),
        });
    }
    let mut base: String = base.nfc().collect();

    // Trailing tone digit.
    let mut tone_from_digit: Option<Tone> = None;
    if let Some(last) = base.chars().last() {
        if let Some(d) = last.to_digit(10) {
            if (1..=5).contains(&d) {
                tone_from_digit = Tone::from_number(d as u8);
                base.pop();
            }
        }
    }
    if tone_from_mark.is_some() && tone_from_digit.is_some() {
        return Err(PinyinError::MultipleToneMarks {
            input: input.to_string(),
        });
    }
    let tone = tone_from_mark.or(tone_from_digit).unwrap_or(Tone::Neutral);

    // v is the ASCII stand-in for ü.
    let base = base.replace('v', "ü");
    if base.is_empty()
        || !base
            .chars()
            .all(|c| c.is_ascii_lowercase() || c == 'ü' || c == 'ê')
    {
        return Err(PinyinError::InvalidSyllable {
            input: input.to_string(),
        });
    }

    let table = table::table();
    let record = table.lookup_spelling(&base).or_else(|| {
        // After j/q/x/y the bare u in a written form stands for ü, so an
        // explicit ü there is the same syllable: jü == ju.
        if base.contains('ü') && matches!(base.chars().next(), Some('j' | 'q' | 'x' | 'y')) {
            table.lookup_spelling(&base.replace('ü', "u"))
        } else {
            None
        }
    });
    if let Some(rec) = record {
        return Ok(Syllable {
            initial: rec.initial,
            fin: rec.fin,
            tone,
            surface: lowered,
        });
    }

    // Not an attested written form. Decide between "empty cell" and "not a
    // syllable": strip the longest matching initial and see whether the rest
    // could follow an initial in some attested row.
    let mut initials: Vec<Initial> = Initial::ALL.to_vec();
    initials.sort_by_key(|i| std::cmp::Reverse(i.as_str().len()));
    for initial in initials {
        if let Some(rest) = base.strip_prefix(initial.as_str()) {
            if let Some(fin) = table.final_for_combined_form(rest) {
                return Err(PinyinError::InvalidCombination {
                    initial: Some(initial),
                    fin,
                });
            }
        }
    }
    Err(PinyinError::InvalidSyllable {
        input: input.to_string(),
    })
}

/// Whether the combination table has a cell for this initial (or none) and
/// final.
pub fn is_valid_combination(initial: Option<Initial>, fin: Final) -> bool {
    table::table().lookup_pair(initial, fin).is_some()
}

/// Render a syllable in its canonical tone-marked written form.
///
/// The syllable must name an attested table cell (as produced by
/// [`parse_pinyin`] or [`enumerate_valid_syllables`]); rendering an
/// unattested combination panics.
pub fn render_pinyin(initial: Option<Initial>, fin: Final, tone: Tone) -> String {
    let spelling = table::table()
        .lookup_pair(initial, fin)
        .expect("render_pinyin: combination not in table")
        .spelling;
    apply_tone_mark(spelling, tone)
}

/// Place the tone diacritic on the correct vowel of a toneless written form.
///
/// Placement: `a` if present, else `e`, else `o`, else the second vowel of an
/// `iu`/`ui` pair, else the sole vowel (including ü and ê).
fn apply_tone_mark(spelling: &str, tone: Tone) -> String {
    let tone_idx = match tone {
        Tone::Neutral => return spelling.to_string(),
        t => (t.number() - 1) as usize,
    };

    let chars: Vec<char> = spelling.chars().collect();
    let pos = |target: char| chars.iter().position(|&c| c == target);
    let marked_pos = pos('a')
        .or_else(|| pos('e'))
        .or_else(|| pos('o'))
        .or_else(|| {
            chars
                .windows(2)
                .position(|w| w == ['i', 'u'] || w == ['u', 'i'])
                .map(|i| i + 1)
        })
        .or_else(|| {
            chars
                .iter()
                .position(|&c| matches!(c, 'i' | 'u' | 'ü' | 'ê'))
        })
        .expect("every written form has a vowel");

    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if i == marked_pos {
            out.push_str(toned_vowel(c, tone_idx));
        } else {
            out.push(c);
        }
    }
    // Compose where precomposed characters exist (ê + caron has none, so the
    // combining mark stays).
    out.nfc().collect()
}

/// Precomposed tone-marked vowels, indexed by tone 1–4.
fn toned_vowel(vowel: char, tone_idx: usize) -> &'static str {
    const TABLE: [(char, [&str; 4]); 7] = [
        ('a', ["ā", "á", "ǎ", "à"]),
        ('e', ["ē", "é", "ě", "è"]),
        ('i', ["ī", "í", "ǐ", "ì"]),
        ('o', ["ō", "ó", "ǒ", "ò"]),
        ('u', ["ū", "ú", "ǔ", "ù"]),
        ('ü', ["ǖ", "ǘ", "ǚ", "ǜ"]),
        ('ê', ["ê\u{0304}", "ế", "ê\u{030C}", "ề"]),
    ];
    TABLE
        .iter()
        .find(|&&(v, _)| v == vowel)
        .map(|&(_, forms)| forms[tone_idx])
        .expect("tone mark target is a vowel")
}

/// Every attested syllable, one per table cell, in table order, with tone
/// fixed to 1 and the canonical written form as surface.
pub fn enumerate_valid_syllables() -> Vec<Syllable> {
    table::table()
        .records()
        .iter()
        .map(|rec| Syllable {
            initial: rec.initial,
            fin: rec.fin,
            tone: Tone::Level,
            surface: apply_tone_mark(rec.spelling, Tone::Level),
        })
        .collect()
}

/// The raw table cells: (initial, final, toneless spelling), in table order.
pub fn table_records() -> Vec<(Option<Initial>, Final, &'static str)> {
    table::table()
        .records()
        .iter()
        .map(|r| (r.initial, r.fin, r.spelling))
        .collect()
}
