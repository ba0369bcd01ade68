//! Small generated corpora used by tests, benches and the demo commands.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cube::Catalog;
use crate::error::Result;
use crate::path::ContextPath;
use crate::store::{Corpus, CorpusStats, IngestOptions, LinkKind, LinkSpec};

pub const QUERY1: &str = r#"(*, "United States") AND (trade country, *) AND (percentage, *)"#;

pub const IMPORT_TC: &str = "/country/economy/import_partners/item/trade_country";
pub const IMPORT_PCT: &str = "/country/economy/import_partners/item/percentage";
pub const EXPORT_TC: &str = "/country/economy/export_partners/item/trade_country";
pub const EXPORT_PCT: &str = "/country/economy/export_partners/item/percentage";

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub docs: Vec<(String, String)>,
    pub links: Vec<LinkSpec>,
}

impl Fixture {
    pub fn ingest(&self) -> Result<(Corpus, CorpusStats)> {
        self.ingest_with(&IngestOptions::default())
    }

    pub fn ingest_with(&self, opts: &IngestOptions) -> Result<(Corpus, CorpusStats)> {
        Corpus::ingest(
            self.docs.iter().map(|(n, x)| (n.clone(), x.clone().into_bytes())),
            &self.links,
            opts,
        )
    }

    pub fn corpus(&self) -> Result<Corpus> {
        Ok(self.ingest()?.0)
    }

    /// Write `docs/*.xml` and `links.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let docs = dir.join("docs");
        fs::create_dir_all(&docs)?;
        for (name, xml) in &self.docs {
            fs::write(docs.join(name), xml)?;
        }
        fs::write(dir.join("links.json"), serde_json::to_vec_pretty(&self.links)?)?;
        Ok(())
    }

    pub fn node_count(&self) -> Result<usize> {
        Ok(self.corpus()?.len())
    }
}

struct CountryDoc<'a> {
    name: &'a str,
    year: u32,
    gdp: &'a str,
    population: &'a str,
    imports: &'a [(&'a str, &'a str)],
    exports: &'a [(&'a str, &'a str)],
}

impl CountryDoc<'_> {
    fn xml(&self) -> String {
        let mut s = String::new();
        let items = |s: &mut String, list: &[(&str, &str)]| {
            for (c, p) in list {
                let _ = write!(s, "<item><trade_country>{c}</trade_country><percentage>{p}</percentage></item>");
            }
        };
        let _ = write!(
            s,
            "<country>{}<year>{}</year><economy><gdp>{}</gdp><import_partners>",
            self.name, self.year, self.gdp
        );
        items(&mut s, self.imports);
        s.push_str("</import_partners><export_partners>");
        items(&mut s, self.exports);
        let _ = write!(
            s,
            "</export_partners></economy><population>{}</population></country>",
            self.population
        );
        s
    }

    fn file(&self) -> String {
        let stem: String = self.name.to_lowercase().split_whitespace().collect::<Vec<_>>().join("_");
        format!("{stem}_{}.xml", self.year)
    }
}

fn trade_links() -> Vec<LinkSpec> {
    vec![
        LinkSpec::value_based(IMPORT_TC, "/country", "imports_from").expect("static path"),
        LinkSpec::value_based(EXPORT_TC, "/country", "exports_to").expect("static path"),
    ]
}

fn country_fixture(name: &str, docs: &[CountryDoc<'_>]) -> Fixture {
    Fixture {
        name: name.into(),
        docs: docs.iter().map(|d| (d.file(), d.xml())).collect(),
        links: trade_links(),
    }
}

/// Six country documents with import/export partner lists and value-based
/// trade links from partner names to country documents.
pub fn factbook() -> Fixture {
    country_fixture(
        "factbook",
        &[
            CountryDoc {
                name: "United States",
                year: 2007,
                gdp: "13.84",
                population: "301139947",
                imports: &[("China", "15"), ("Canada", "16.9")],
                exports: &[("Canada", "21.4"), ("Mexico", "11.7")],
            },
            CountryDoc {
                name: "China",
                year: 2007,
                gdp: "7.10",
                population: "1321851888",
                imports: &[("Japan", "14"), ("South Korea", "11")],
                exports: &[("United States", "21"), ("Japan", "8.4")],
            },
            CountryDoc {
                name: "Canada",
                year: 2007,
                gdp: "1.27",
                population: "33390141",
                imports: &[("United States", "54.9"), ("China", "9.4")],
                exports: &[("Japan", "2.3")],
            },
            CountryDoc {
                name: "Mexico",
                year: 2007,
                gdp: "1.35",
                population: "108700891",
                imports: &[("China", "10.6"), ("Japan", "5.9")],
                exports: &[("United States", "85.7")],
            },
            CountryDoc {
                name: "Japan",
                year: 2007,
                gdp: "4.22",
                population: "127433494",
                imports: &[("China", "20.5"), ("Saudi Arabia", "11.2")],
                exports: &[("China", "14.3")],
            },
            CountryDoc {
                name: "Germany",
                year: 2007,
                gdp: "2.63",
                population: "82400996",
                imports: &[("France", "8.6"), ("Netherlands", "8.2")],
                exports: &[("France", "9.7")],
            },
        ],
    )
}

/// Two years of the same country whose China import shares differ: keyed
/// without the year, the two percentage nodes collide.
pub fn collision() -> Fixture {
    country_fixture(
        "collision",
        &[
            CountryDoc {
                name: "United States",
                year: 2005,
                gdp: "12.36",
                population: "295734134",
                imports: &[("China", "12.5"), ("Canada", "17.4")],
                exports: &[("Canada", "23.4")],
            },
            CountryDoc {
                name: "United States",
                year: 2006,
                gdp: "12.98",
                population: "298444215",
                imports: &[("China", "13.8"), ("Canada", "16.9")],
                exports: &[("Canada", "22.2")],
            },
        ],
    )
}

/// One geography document with IDREF borders and an organizations document
/// whose members point at countries through XLink-style references.
pub fn mondial() -> Fixture {
    let geo = r#"<mondial>
<country id="USA"><name>United States</name><border ref="CDN MEX"/><city><name>Washington</name></city></country>
<country id="CDN"><name>Canada</name><border ref="USA"/><city><name>Ottawa</name></city></country>
<country id="MEX"><name>Mexico</name><border ref="USA GCA"/><city><name>Mexico City</name></city></country>
<country id="GCA"><name>Guatemala</name><border ref="MEX"/></country>
</mondial>"#;
    let orgs = r##"<organizations>
<organization><abbrev>NAFTA</abbrev><member href="mondial.xml#USA"/><member href="mondial.xml#CDN"/><member href="mondial.xml#MEX"/></organization>
<organization><abbrev>CACM</abbrev><member href="#GCA"/></organization>
</organizations>"##;
    Fixture {
        name: "mondial".into(),
        docs: vec![("mondial.xml".into(), geo.into()), ("organizations.xml".into(), orgs.into())],
        links: vec![
            LinkSpec {
                kind: LinkKind::Idref,
                source: ContextPath::parse("/mondial/country/border").expect("static path"),
                target: ContextPath::parse("/mondial/country").expect("static path"),
                source_attr: Some("ref".into()),
                target_attr: Some("id".into()),
                label: "borders".into(),
                case_fold: false,
            },
            LinkSpec {
                kind: LinkKind::Xlink,
                source: ContextPath::parse("/organizations/organization/member").expect("static path"),
                target: ContextPath::parse("/mondial/country").expect("static path"),
                source_attr: Some("href".into()),
                target_attr: Some("id".into()),
                label: "member".into(),
                case_fold: false,
            },
        ],
    }
}

/// Two record families sharing one leaf path and the `/rec/b/deep` prefix.
/// Family A carries a reference that links to names of other A records.
/// Merged into one guide, the reference becomes a shortcut between B's
/// `y` leaf and `name` that no B document realizes.
pub fn mixed_schema() -> Fixture {
    let mut docs = Vec::new();
    for i in 0..4 {
        let next = (i + 1) % 4;
        docs.push((
            format!("a{i}.xml"),
            format!(
                "<rec><name>alpha{i}</name><b><deep><a_ref>alpha{next}</a_ref></deep></b><a1>x</a1><a2>x</a2></rec>"
            ),
        ));
    }
    for i in 0..4 {
        docs.push((
            format!("b{i}.xml"),
            format!("<rec><name>beta{i}</name><b><deep><y>v{i}</y></deep></b><b1>z</b1><b2>z</b2></rec>"),
        ));
    }
    Fixture {
        name: "mixed_schema".into(),
        docs,
        links: vec![LinkSpec::value_based("/rec/b/deep/a_ref", "/rec/name", "refers").expect("static path")],
    }
}

/// Mixed-schema query: names paired with B's `y` leaf.
pub const MIXED_QUERY: &str = "(name, *) AND (y, *)";

/// `families` record families of `per_family` documents each. Every document
/// holds its family's 8 core leaves plus 2 of 4 optional ones; families
/// share only `/recipe/title`.
pub fn families(families: usize, per_family: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    for f in 0..families {
        for d in 0..per_family {
            let mut body = format!("<recipe><title>dish {f}-{d}</title>");
            for c in 0..7 {
                let _ = write!(body, "<f{f}_core{c}>v{}</f{f}_core{c}>", rng.gen_range(0..20));
            }
            let mut optional: Vec<usize> = (0..4).collect();
            optional.shuffle(&mut rng);
            let mut picked = optional[..2].to_vec();
            picked.sort_unstable();
            for o in picked {
                let _ = write!(body, "<f{f}_opt{o}>w</f{f}_opt{o}>");
            }
            body.push_str("</recipe>");
            docs.push((format!("f{f}_{d:03}.xml"), body));
        }
    }
    Fixture {
        name: format!("families_{families}x{per_family}"),
        docs,
        links: Vec::new(),
    }
}

/// `n` documents (n ≤ 56), each with a distinct 3-of-8 combination of
/// optional elements, so no document's path set contains another's.
pub fn degenerate(n: usize) -> Fixture {
    let mut combos = Vec::new();
    for a in 0..8 {
        for b in a + 1..8 {
            for c in b + 1..8 {
                combos.push([a, b, c]);
            }
        }
    }
    assert!(n <= combos.len(), "at most {} distinct documents", combos.len());
    let docs = combos
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, combo)| {
            let mut body = format!("<entry><id>{i}</id>");
            for o in combo {
                let _ = write!(body, "<opt{o}>x</opt{o}>");
            }
            body.push_str("</entry>");
            (format!("e{i:02}.xml"), body)
        })
        .collect();
    Fixture {
        name: format!("degenerate_{n}"),
        docs,
        links: Vec::new(),
    }
}

/// 16 documents: `/country` occurs in 15, `/country/rare` in 2.
pub fn skew() -> Fixture {
    let mut docs: Vec<(String, String)> = (0..15)
        .map(|i| {
            let extra = if i < 2 { "<rare>r</rare>" } else { "" };
            (format!("c{i:02}.xml"), format!("<country>C{i}<year>2007</year>{extra}</country>"))
        })
        .collect();
    docs.push(("region.xml".into(), "<region><name>Europe</name></region>".into()));
    Fixture {
        name: "skew".into(),
        docs,
        links: Vec::new(),
    }
}

const TAGS: [&str; 6] = ["a", "b", "c", "d", "item", "name"];
const WORDS: [&str; 8] = ["red", "green", "blue", "apple", "pear", "plum", "red apple", "green pear"];

/// Seeded random corpus of several documents, at most `max_nodes` nodes,
/// with value-based links from `name` leaves to `item` elements.
pub fn random(seed: u64, max_nodes: usize) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs_n = rng.gen_range(2..=5);
    let budget = max_nodes / docs_n;
    let mut docs = Vec::new();
    for d in 0..docs_n {
        let mut xml = String::from("<r>");
        let mut count = 1;
        gen_children(&mut rng, &mut xml, 1, budget, &mut count);
        xml.push_str("</r>");
        docs.push((format!("r{d}.xml"), xml));
    }
    let mut links = Vec::new();
    let paths = random_paths(&docs);
    let names: Vec<&ContextPath> = paths.iter().filter(|p| p.leaf() == "name").collect();
    let items: Vec<&ContextPath> = paths.iter().filter(|p| p.leaf() == "item").collect();
    for (i, src) in names.iter().enumerate().take(2) {
        if let Some(tgt) = items.get(i % items.len().max(1)) {
            links.push(LinkSpec {
                kind: LinkKind::ValueBased,
                source: (*src).clone(),
                target: (*tgt).clone(),
                source_attr: None,
                target_attr: Some("key".into()),
                label: format!("ref{i}"),
                case_fold: false,
            });
        }
    }
    Fixture {
        name: format!("random_{seed}"),
        docs,
        links,
    }
}

fn gen_children(rng: &mut ChaCha8Rng, out: &mut String, depth: usize, budget: usize, count: &mut usize) {
    let n = rng.gen_range(1..=4);
    for _ in 0..n {
        if *count >= budget {
            return;
        }
        let tag = TAGS[rng.gen_range(0..TAGS.len())];
        *count += 1;
        if tag == "item" {
            *count += 1;
            let _ = write!(out, "<item key=\"{}\">", WORDS[rng.gen_range(0..3)]);
        } else {
            let _ = write!(out, "<{tag}>");
        }
        if rng.gen_bool(0.6) {
            out.push_str(WORDS[rng.gen_range(0..WORDS.len())]);
        }
        if depth < 4 && rng.gen_bool(0.5) {
            gen_children(rng, out, depth + 1, budget, count);
        }
        let _ = write!(out, "</{tag}>");
    }
}

fn random_paths(docs: &[(String, String)]) -> BTreeSet<ContextPath> {
    let mut out = BTreeSet::new();
    for (_, xml) in docs {
        let Ok(doc) = roxmltree::Document::parse(xml) else { continue };
        for n in doc.descendants().filter(|n| n.is_element()) {
            let segs: Vec<String> = n
                .ancestors()
                .filter(|a| a.is_element())
                .map(|a| a.tag_name().name().to_string())
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            if let Ok(p) = ContextPath::from_segments(segs) {
                out.insert(p);
            }
        }
    }
    out
}

/// Catalog for the country fixtures: country, year and import-country
/// dimensions; percentage, export percentage, GDP and population facts.
pub fn seed_catalog() -> Catalog {
    let text = format!(
        r#"{{
  "dimensions": [
    {{"name": "country", "contexts": [{{"context": "/country", "key": ["/country", "/country/year"]}}]}},
    {{"name": "year", "contexts": [{{"context": "/country/year", "key": ["/country", "/country/year"]}}]}},
    {{"name": "import_country", "contexts": [{{"context": "{IMPORT_TC}", "key": ["/country", "/country/year", "."]}}]}},
    {{"name": "export_country", "contexts": [{{"context": "{EXPORT_TC}", "key": ["/country", "/country/year", "."]}}]}}
  ],
  "facts": [
    {{"name": "percentage", "contexts": [{{"context": "{IMPORT_PCT}", "key": ["/country", "/country/year", "./trade_country"]}}]}},
    {{"name": "export_percentage", "contexts": [{{"context": "{EXPORT_PCT}", "key": ["/country", "/country/year", "./trade_country"]}}]}},
    {{"name": "gdp", "contexts": [{{"context": "/country/economy/gdp", "key": ["/country", "/country/year"]}}]}},
    {{"name": "population", "contexts": [{{"context": "/country/population", "key": ["/country", "/country/year"]}}]}}
  ]
}}"#
    );
    Catalog::from_json(&text).expect("seed catalog is valid")
}
