//! The embedded initial–final combination table.
//!
//! The table is shipped as a plain-text data file (one `initial,final,spelling`
//! record per attested cell, `-` for the standalone column, `#` comments) and
//! parsed once into lookup maps on first use. Record order in the file is the
//! enumeration order exposed by the library.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::{Final, Initial};

/// Raw table text, compiled into the binary.
const TABLE_TEXT: &str = include_str!("../../data/pinyin_table.txt");

/// One attested cell of the combination table.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Record {
    pub initial: Option<Initial>,
    pub fin: Final,
    /// Toneless written form of the cell, e.g. `shi`, `ju`, `weng`.
    pub spelling: &'static str,
}

pub(crate) struct Table {
    records: Vec<Record>,
    by_spelling: HashMap<&'static str, usize>,
    by_pair: HashMap<(Option<Initial>, Final), usize>,
    /// What can follow an initial, mapped to a representative final, e.g.
    /// `"i" -> i`, `"u" -> u`, `"üe" -> üe`. Used only to distinguish
    /// structurally plausible inputs from unparseable ones.
    combined_forms: HashMap<&'static str, Final>,
}

impl Table {
    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn lookup_spelling(&self, spelling: &str) -> Option<Record> {
        self.by_spelling.get(spelling).map(|&i| self.records[i])
    }

    pub fn lookup_pair(&self, initial: Option<Initial>, fin: Final) -> Option<Record> {
        self.by_pair.get(&(initial, fin)).map(|&i| self.records[i])
    }

    /// A final that could plausibly follow an initial with the written form
    /// `form`, if any. The representative is the final whose own spelling
    /// equals `form` when one exists, otherwise the first final attested with
    /// that form.
    pub fn final_for_combined_form(&self, form: &str) -> Option<Final> {
        self.combined_forms.get(form).copied()
    }
}

fn parse_table() -> Table {
    let mut records = Vec::new();
    let mut by_spelling = HashMap::new();
    let mut by_pair = HashMap::new();
    let mut combined_forms: HashMap<&'static str, Final> = HashMap::new();

    for (lineno, line) in TABLE_TEXT.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let (initial, fin, spelling) = match (fields.next(), fields.next(), fields.next()) {
            (Some(i), Some(f), Some(s)) if fields.next().is_none() => (i, f, s),
            _ => panic!(
                "combination table line {}: expected initial,final,spelling",
                lineno + 1
            ),
        };
        let initial = match initial {
            "-" => None,
            other => Some(Initial::from_spelling(other).unwrap_or_else(|| {
                panic!(
                    "combination table line {}: unknown initial {other:?}",
                    lineno + 1
                )
            })),
        };
        let fin = Final::from_spelling(fin).unwrap_or_else(|| {
            panic!(
                "combination table line {}: unknown final {fin:?}",
                lineno + 1
            )
        });

        let idx = records.len();
        records.push(Record {
            initial,
            fin,
            spelling,
        });
        if by_spelling.insert(spelling, idx).is_some() {
            panic!(
                "combination table line {}: duplicate spelling {spelling:?}",
                lineno + 1
            );
        }
        if by_pair.insert((initial, fin), idx).is_some() {
            panic!("combination table line {}: duplicate cell", lineno + 1);
        }
        if let Some(initial) = initial {
            let form = spelling.strip_prefix(initial.as_str()).unwrap_or_else(|| {
                panic!(
                    "combination table line {}: spelling does not start with its initial",
                    lineno + 1
                )
            });
            combined_forms.entry(form).or_insert(fin);
        }
    }

    // A final's own spelling is always an acceptable written form after an
    // initial for the purpose of error classification ("ber" names the b+er
    // cell even though no such cell exists).
    for fin in Final::all() {
        combined_forms.insert(fin.spelling(), fin);
    }
    // Prefer the final whose spelling equals the form as the representative.
    let exact: Vec<(&'static str, Final)> = combined_forms
        .keys()
        .filter_map(|&form| Final::from_spelling(form).map(|f| (form, f)))
        .collect();
    for (form, fin) in exact {
        combined_forms.insert(form, fin);
    }

    for fin in Final::all() {
        assert!(
            by_pair.contains_key(&(None, fin)),
            "combination table: final {:?} lacks a standalone record",
            fin.spelling()
        );
    }

    Table {
        records,
        by_spelling,
        by_pair,
        combined_forms,
    }
}

pub(crate) fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(parse_table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_loads_and_is_consistent() {
        let t = table();
        assert!(!t.records().is_empty());
        // Spot checks against well-known cells.
        let sheng = t.lookup_spelling("sheng").unwrap();
        assert_eq!(sheng.initial, Some(Initial::Sh));
        assert_eq!(sheng.fin.spelling(), "eng");
        let yi = t.lookup_spelling("yi").unwrap();
        assert_eq!(yi.initial, None);
        assert_eq!(yi.fin.spelling(), "i");
        let ju = t.lookup_spelling("ju").unwrap();
        assert_eq!(ju.fin.spelling(), "ü");
    }

    #[test]
    fn corrected_cells_are_present() {
        let t = table();
        for (initial, fin, spelling) in [
            (Initial::S, "an", "san"),
            (Initial::Sh, "ei", "shei"),
            (Initial::N, "ang", "nang"),
            (Initial::N, "eng", "neng"),
        ] {
            let fin = Final::from_spelling(fin).unwrap();
            let rec = t.lookup_pair(Some(initial), fin).unwrap();
            assert_eq!(rec.spelling, spelling);
        }
    }

    #[test]
    fn every_spelling_reachable_by_pair_lookup() {
        let t = table();
        for rec in t.records() {
            let again = t.lookup_pair(rec.initial, rec.fin).unwrap();
            assert_eq!(again.spelling, rec.spelling);
        }
    }
}
