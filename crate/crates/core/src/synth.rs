//! Seeded synthetic corpora: a separable relevance corpus, scholar snapshots
//! with CVs and gazetteer, and separable relation instances.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::corpus::{Label, PageRecord, Snapshot, TargetEntity};
use crate::extraction::{EntityRef, EntityType};
use crate::relations::{LabeledInstance, RelationContext, RelationType};
use crate::rng::SplitMix64;

const FIRST: &[&str] = &[
    "Maria", "Tomas", "Ingrid", "Kofi", "Lena", "Rafael", "Yuki", "Amara", "Pavel", "Nadia", "Oskar", "Leila",
    "Hugo", "Mina", "Arjun", "Clara", "Emil", "Zara", "Felix", "Irene", "Marco", "Sanne", "Dmitri", "Alma",
];
const LAST: &[&str] = &[
    "Lindqvist", "Okafor", "Haugland", "Mensah", "Varga", "Moreau", "Tanaka", "Nwosu", "Horak", "Petrova",
    "Berglund", "Haddad", "Vidal", "Kowalski", "Rao", "Falk", "Novak", "Aziz", "Keller", "Duarte", "Rossi",
    "Visser", "Sokolov", "Castro",
];
const CITIES: &[&str] = &[
    "Haifa", "Lisbon", "Oslo", "Kyoto", "Toronto", "Geneva", "Porto", "Bergen", "Delft", "Leiden", "Uppsala",
    "Tartu", "Ghent", "Lyon", "Padua", "Krakow", "Aarhus", "Bremen",
];
const NEUTRAL: &[&str] = &[
    "page", "note", "today", "update", "info", "more", "view", "list", "item", "read", "find", "new", "time",
    "year", "day", "people", "place", "thing", "story", "part", "way", "group", "home", "site", "link",
];
const RELEVANT_SIGNAL: &[&str] = &[
    "research", "professor", "lecture", "publication", "journal", "laboratory", "doctoral", "seminar",
    "theorem", "dataset", "conference", "thesis", "faculty", "grant", "experiment", "citation", "proceedings",
    "colloquium", "syllabus", "postdoc", "abstract", "manuscript", "reviewer", "symposium", "curriculum",
    "department", "tenure", "fellowship", "monograph", "preprint",
];
const IRRELEVANT_SIGNAL: &[&str] = &[
    "recipe", "football", "lyrics", "discount", "hotel", "fashion", "casino", "weather", "horoscope", "lottery",
    "gossip", "cocktail", "sneakers", "karaoke", "playlist", "coupon", "bakery", "boutique", "jersey", "tattoo",
    "barbecue", "makeup", "ringtone", "wallpaper", "jackpot", "salon", "pizza", "stadium", "concert", "vacation",
];
const HOSTS: &[&str] = &[
    "www.linkedin.com", "twitter.com", "www.facebook.com", "scholar.google.com", "www.researchgate.net",
    "news.example.org", "blog.example.net", "www.example.com", "archive.example.org", "people.example.edu",
];

fn pick<'a>(rng: &mut SplitMix64, items: &[&'a str]) -> &'a str {
    items[rng.below(items.len())]
}

fn distinct_names(rng: &mut SplitMix64, n: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let name = format!("{} {}", pick(rng, FIRST), pick(rng, LAST));
        if taken.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One generated page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPage {
    pub page_id: String,
    pub url: String,
    pub rank: u32,
    pub html: String,
    pub label: Option<Label>,
}

/// A generated snapshot that can be used in memory or written as a snapshot
/// directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSnapshot {
    pub target: String,
    pub pages: Vec<SynthPage>,
    pub homepage_ids: Vec<String>,
    pub wikipedia_ids: Vec<String>,
    /// `(title, body)` CV sections; written as `cv.json` when non-empty.
    pub cv: Vec<(String, String)>,
}

impl SynthSnapshot {
    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            dir: PathBuf::new(),
            target: TargetEntity::new(&self.target).expect("generated names are valid"),
            pages: self
                .pages
                .iter()
                .map(|p| PageRecord {
                    page_id: p.page_id.clone(),
                    url: p.url.clone(),
                    rank: p.rank,
                    raw_html: p.html.clone().into_bytes(),
                    label: p.label,
                })
                .collect(),
            homepage_ids: self.homepage_ids.iter().cloned().collect(),
            wikipedia_ids: self.wikipedia_ids.iter().cloned().collect(),
        }
    }

    /// Same snapshot with every label removed.
    pub fn unlabeled(&self) -> Self {
        let mut s = self.clone();
        for p in &mut s.pages {
            p.label = None;
        }
        s
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir.join("pages"))?;
        let pages: Vec<_> = self
            .pages
            .iter()
            .map(|p| json!({ "page_id": p.page_id, "url": p.url, "rank": p.rank, "file": format!("pages/{}.html", p.page_id) }))
            .collect();
        let manifest = json!({ "canonical_name": self.target, "domain_tag": "scholar", "pages": pages });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        let mut labels = String::new();
        for p in &self.pages {
            std::fs::write(dir.join(format!("pages/{}.html", p.page_id)), &p.html)?;
            if let Some(l) = p.label {
                let _ = writeln!(labels, "{}\t{}", p.page_id, l);
            }
        }
        if !labels.is_empty() {
            std::fs::write(dir.join("labels.tsv"), labels)?;
        }
        for (file, ids) in [("homepage.txt", &self.homepage_ids), ("wikipedia.txt", &self.wikipedia_ids)] {
            if !ids.is_empty() {
                std::fs::write(dir.join(file), ids.join("\n") + "\n")?;
            }
        }
        if !self.cv.is_empty() {
            let sections: Vec<_> = self.cv.iter().map(|(t, b)| json!({ "title": t, "body": b })).collect();
            std::fs::write(dir.join("cv.json"), serde_json::to_string_pretty(&json!({ "sections": sections }))? + "\n")?;
        }
        Ok(())
    }
}

fn html_page(title: &str, paragraphs: &[String]) -> String {
    let mut body = String::new();
    for p in paragraphs {
        let _ = writeln!(body, "<p>{p}</p>");
    }
    format!("<html><head><title>{}</title></head><body>\n{body}</body></html>\n", escape(title))
}

/// Parameters of the separable relevance corpus.
#[derive(Debug, Clone, Copy)]
pub struct RelevanceCorpusSpec {
    pub entities: usize,
    pub relevant_per_entity: usize,
    pub irrelevant_per_entity: usize,
    pub seed: u64,
}

impl Default for RelevanceCorpusSpec {
    fn default() -> Self {
        Self { entities: 6, relevant_per_entity: 5, irrelevant_per_entity: 5, seed: 1 }
    }
}

/// Separable corpus: relevant pages name the target two to four times
/// (full name, surname or initial plus surname) and draw topical words from
/// one vocabulary; irrelevant pages name it at most once and draw from a
/// disjoint vocabulary. Titles, hosts and filler are shared.
pub fn relevance_corpus(spec: RelevanceCorpusSpec) -> Vec<SynthSnapshot> {
    let mut rng = SplitMix64::new(spec.seed);
    let mut taken = BTreeSet::new();
    let names = distinct_names(&mut rng, spec.entities, &mut taken);
    names
        .into_iter()
        .map(|name| {
            let (first, last) = name.split_once(' ').unwrap();
            let variants = [name.clone(), last.to_string(), format!("{}. {last}", &first[..1])];
            let total = spec.relevant_per_entity + spec.irrelevant_per_entity;
            let mut labels: Vec<Label> = (0..total)
                .map(|i| if i < spec.relevant_per_entity { Label::Relevant } else { Label::Irrelevant })
                .collect();
            rng.shuffle(&mut labels);
            let pages = labels
                .into_iter()
                .enumerate()
                .map(|(i, label)| {
                    let (signal, mentions) = match label {
                        Label::Relevant => (RELEVANT_SIGNAL, 2 + rng.below(3)),
                        Label::Irrelevant => (IRRELEVANT_SIGNAL, rng.below(2)),
                    };
                    let mut words: Vec<String> = Vec::new();
                    for _ in 0..20 + rng.below(20) {
                        words.push(pick(&mut rng, NEUTRAL).to_string());
                    }
                    for _ in 0..6 + rng.below(6) {
                        words.push(pick(&mut rng, signal).to_string());
                    }
                    for _ in 0..mentions {
                        words.push(variants[rng.below(3)].clone());
                    }
                    rng.shuffle(&mut words);
                    let title = if rng.below(2) == 0 {
                        format!("{name} {}", pick(&mut rng, NEUTRAL))
                    } else {
                        format!("{} {}", pick(&mut rng, NEUTRAL), pick(&mut rng, NEUTRAL))
                    };
                    let host = pick(&mut rng, HOSTS);
                    SynthPage {
                        page_id: format!("p{:02}", i + 1),
                        url: format!("https://{host}/{}/{}", last.to_lowercase(), i + 1),
                        rank: i as u32 + 1,
                        html: html_page(&title, &[escape(&words.join(" "))]),
                        label: Some(label),
                    }
                })
                .collect();
            SynthSnapshot { target: name, pages, homepage_ids: vec![], wikipedia_ids: vec![], cv: vec![] }
        })
        .collect()
}

/// Co-author present in every generated scholar snapshot.
pub const SHARED_COAUTHOR: &str = "Sofia Brandt";

/// Locations listed in [`scholar_gazetteer`].
pub fn gazetteer_locations() -> &'static [&'static str] {
    CITIES
}

/// Gazetteer for the scholar snapshots: every city as a location.
pub fn scholar_gazetteer() -> String {
    let mut out = String::from("# surface\ttype\n");
    for c in CITIES {
        let _ = writeln!(out, "{c}\tlocation");
    }
    out
}

/// A scholar snapshot with ten related entities: three only on the homepage,
/// four only on other relevant pages and three on other relevant pages and
/// the Wikipedia page. Five irrelevant pages about a namesake follow.
pub fn scholar_snapshot(seed: u64) -> SynthSnapshot {
    let mut rng = SplitMix64::new(seed);
    let mut taken = BTreeSet::from([SHARED_COAUTHOR.to_string()]);
    let target = distinct_names(&mut rng, 1, &mut taken).remove(0);
    let people = distinct_names(&mut rng, 3, &mut taken);
    let mut cities: Vec<&str> = CITIES.to_vec();
    rng.shuffle(&mut cities);
    let (edu_a, edu_b) = (format!("University of {}", cities[0]), format!("{} Institute of Technology", cities[1]));
    let (emp_1, emp_2) = (format!("University of {}", cities[2]), format!("{} Research Institute", cities[3]));
    let (loc_1, loc_2) = (cities[4], cities[5]);
    let (p1, p2, p4) = (&people[0], &people[1], &people[2]);
    let surname = target.split_once(' ').unwrap().1;
    let mut year = |lo: i32, span: usize| lo + rng.below(span) as i32;
    let (y_a, y_b, y_e1, y_e2) = (year(1990, 8), year(1996, 8), year(2004, 12), year(2000, 6));
    let (y_p1, y_p2, y_p3, y_p4, y_l1, y_l2) = (year(2008, 12), year(2004, 14), year(2012, 10), year(2000, 20), year(2010, 10), year(2016, 6));

    let home = html_page(
        &format!("{target} homepage"),
        &[
            format!("{target} received a doctorate from {edu_a} in {y_a}."),
            format!("{target} coauthored a journal paper with <a href=\"/coauthors/1\">{p1}</a> in {y_p1}."),
            format!("{target} lives in {loc_1} since {y_l1} and enjoys hiking."),
            "<a href=\"/cv.pdf\">Curriculum vitae</a> and contact details.".to_string(),
        ],
    );
    let wiki = html_page(
        &format!("{target} - Wikipedia"),
        &[
            format!("{target} is a scientist. {target} studied mathematics at {edu_b} and graduated in {y_b}."),
            format!("{target} was appointed professor at {emp_1} in {y_e1}."),
            format!("{target} published papers with {p4} in {y_p4}."),
        ],
    );
    let article1 = html_page(
        &format!("Interview with {target}"),
        &[
            format!("{target} joined {emp_2} as a lecturer in {y_e2}."),
            format!("{target} coauthored a journal paper with {p2} in {y_p2}."),
            format!("{target} coauthored an article with {SHARED_COAUTHOR} in {y_p3}."),
        ],
    );
    let article2 = html_page(
        &format!("{surname} wins research award"),
        &[
            format!("{target} studied mathematics at {edu_b} and graduated in {y_b}."),
            format!("{target} was appointed professor at {emp_1} in {y_e1}."),
            format!("{target} gave a talk in {loc_2} in {y_l2}."),
        ],
    );
    let article3 = html_page(
        &format!("New paper by {surname}"),
        &[
            format!("{target} published papers with {p4} in {y_p4}."),
            format!("{target} published papers with {SHARED_COAUTHOR} in {y_p3}."),
        ],
    );
    let namesake = |topic: &str, place: &str| {
        html_page(
            &format!("{surname} {topic}"),
            &[
                format!("{target} bakery sells fresh bread and pastry in {place} every weekend."),
                format!("the {topic} opens early and the coffee is cheap."),
            ],
        )
    };
    let homonym_places: Vec<&str> = cities[6..11].to_vec();
    let mut pages = vec![
        (home, "people.example.edu", Label::Relevant),
        (wiki, "en.wikipedia.org", Label::Relevant),
        (article1, "news.example.org", Label::Relevant),
        (article2, "www.researchgate.net", Label::Relevant),
        (article3, "blog.example.net", Label::Relevant),
    ];
    for (i, topic) in ["bakery", "cafe", "market", "shop", "kitchen"].iter().enumerate() {
        let host = ["www.facebook.com", "twitter.com", "www.example.com", "shop.example.com", "www.linkedin.com"][i];
        pages.push((namesake(topic, homonym_places[i]), host, Label::Irrelevant));
    }
    let slug = target.to_lowercase().replace(' ', "-");
    let pages = pages
        .into_iter()
        .enumerate()
        .map(|(i, (html, host, label))| SynthPage {
            page_id: format!("p{:02}", i + 1),
            url: format!("https://{host}/{slug}/{}", i + 1),
            rank: i as u32 + 1,
            html,
            label: Some(label),
        })
        .collect();
    let cv = vec![
        ("Academic Education".to_string(), format!("Doctorate, {edu_a}, {y_a}. Diploma in mathematics, {edu_b}, {y_b}.")),
        ("Professional Experience".to_string(), format!("Professor, {emp_1}, {y_e1} to present. Lecturer, {emp_2}, {y_e2}.")),
        (
            "Publication History".to_string(),
            format!("{p1} and {target}, lattice methods, {y_p1}. {p2} and {target}, sparse codes, {y_p2}. {SHARED_COAUTHOR} and {target}, graph limits, {y_p3}. {p4} and {target}, random walks, {y_p4}."),
        ),
        ("Awards".to_string(), format!("Best paper award, {y_p3}.")),
    ];
    SynthSnapshot {
        target,
        pages,
        homepage_ids: vec!["p01".into()],
        wikipedia_ids: vec!["p02".into()],
        cv,
    }
}

/// Labeled relation instances whose contexts come from a vocabulary private
/// to each relation type.
pub fn relation_instances(seed: u64, per_type: usize) -> Vec<LabeledInstance> {
    const VOCAB: [(&str, &[&str]); 4] = [
        ("education", &["studied", "degree", "graduated", "doctorate", "alumnus", "diploma", "thesis", "enrolled"]),
        ("employment", &["joined", "lecturer", "appointed", "hired", "employed", "chair", "tenured", "staff"]),
        ("publications", &["coauthored", "paper", "journal", "article", "published", "preprint", "cited", "volume"]),
        ("other", &["visited", "met", "hiking", "talk", "dinner", "friend", "travelled", "concert"]),
    ];
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::new();
    for i in 0..per_type {
        for (ty, words) in VOCAB {
            let mut side = |n: usize| -> Vec<String> { (0..n).map(|_| pick(&mut rng, words).to_string()).collect() };
            let before = side(2 + i % 4);
            let after = side(1 + i % 5);
            let name = format!("{} {}", pick(&mut rng, FIRST), pick(&mut rng, LAST));
            let entity = EntityRef::new(name.split(' ').map(String::from).collect(), EntityType::Person).unwrap();
            out.push(LabeledInstance {
                context: RelationContext { entity_tokens: entity.lower_tokens(), before, after },
                entity,
                relation: RelationType::new(ty),
            });
        }
    }
    out
}
