//! Structured-text config files.
//!
//! The format is line based: `[section]` headers, `key = value` entries, `#`
//! comments and blank lines. Sections may repeat where that makes sense
//! (every `[bond]` adds one bond). Unknown sections and unknown keys are
//! rejected with their line number.
//!
//! Graph files use the sections:
//!
//! ```text
//! [vertices]
//! count = 8
//!
//! [bond]            # one section per bond
//! i = 0
//! j = 1
//! length = 0.43
//! phase = 0.15      # optional, default 0
//!
//! [pair]            # optional: build the conjugate pair of the base above
//! connect = 0 3 0.85          # from, to, cross-bond length (one or two)
//! delta_phi = 3.141592653589793
//!
//! [ports]           # optional: channels, indices into the resolved graph
//! vertices = 0 8
//! ```

use thiserror::Error;

use crate::graph::{
    build_symplectic_pair, Bond, CrossPair, Graph, GraphError, SymplecticPairSpec,
};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required section [{0}]")]
    MissingSection(&'static str),
    #[error("graph config invalid: {0}")]
    Graph(#[from] GraphError),
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
    consumed: bool,
}

/// Parsed config file; consumers take the sections they know and `finish`
/// rejects everything left over.
#[derive(Debug)]
pub struct Document {
    sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Document, ConfigError> {
        let mut sections: Vec<Section> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(err(line_no, "empty section name"));
                }
                sections.push(Section {
                    name: name.to_string(),
                    line: line_no,
                    entries: Vec::new(),
                    consumed: false,
                });
            } else if let Some(eq) = line.find('=') {
                let key = line[..eq].trim();
                let value = line[eq + 1..].trim();
                if key.is_empty() {
                    return Err(err(line_no, "empty key"));
                }
                let section = sections
                    .last_mut()
                    .ok_or_else(|| err(line_no, "entry before any [section] header"))?;
                section.entries.push(Entry {
                    key: key.to_string(),
                    value: value.to_string(),
                    line: line_no,
                });
            } else {
                return Err(err(line_no, format!("expected `key = value`, got `{line}`")));
            }
        }
        Ok(Document { sections })
    }

    /// Take (and mark consumed) every section with the given name.
    pub fn take_sections(&mut self, name: &str) -> Vec<Section> {
        let mut out = Vec::new();
        for s in self.sections.iter_mut() {
            if s.name == name && !s.consumed {
                s.consumed = true;
                out.push(s.clone());
            }
        }
        out
    }

    /// Error on any section nobody consumed.
    pub fn finish(&self) -> Result<(), ConfigError> {
        for s in &self.sections {
            if !s.consumed {
                return Err(err(s.line, format!("unknown section [{}]", s.name)));
            }
        }
        Ok(())
    }
}

pub fn reject_unknown(section: &Section, known: &[&str]) -> Result<(), ConfigError> {
    for e in &section.entries {
        if !known.contains(&e.key.as_str()) {
            return Err(err(
                e.line,
                format!("unknown key `{}` in section [{}]", e.key, section.name),
            ));
        }
    }
    Ok(())
}

pub fn get_required<'a>(section: &'a Section, key: &str) -> Result<&'a Entry, ConfigError> {
    section
        .entries
        .iter()
        .find(|e| e.key == key)
        .ok_or_else(|| err(section.line, format!("section [{}] needs `{key}`", section.name)))
}

pub fn parse_f64(e: &Entry) -> Result<f64, ConfigError> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("`{}` is not a number", e.value)))
}

pub fn parse_usize(e: &Entry) -> Result<usize, ConfigError> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("`{}` is not a nonnegative integer", e.value)))
}

pub fn parse_u64(e: &Entry) -> Result<u64, ConfigError> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("`{}` is not a nonnegative integer", e.value)))
}

#[derive(Debug, Clone)]
pub struct PairConfig {
    pub pairs: Vec<CrossPair>,
    pub delta_phi: f64,
}

/// A graph description plus the optional pair construction and port list.
#[derive(Debug, Clone)]
pub struct GraphConfig {
    pub base: Graph,
    pub pair: Option<PairConfig>,
    pub ports: Vec<usize>,
}

impl GraphConfig {
    pub fn from_document(doc: &mut Document) -> Result<GraphConfig, ConfigError> {
        let vertices = doc.take_sections("vertices");
        let vsec = vertices
            .first()
            .ok_or(ConfigError::MissingSection("vertices"))?;
        if vertices.len() > 1 {
            return Err(err(vertices[1].line, "duplicate [vertices] section"));
        }
        reject_unknown(vsec, &["count"])?;
        let count = parse_usize(get_required(vsec, "count")?)?;

        let mut bonds = Vec::new();
        for bsec in doc.take_sections("bond") {
            reject_unknown(&bsec, &["i", "j", "length", "phase"])?;
            let i = parse_usize(get_required(&bsec, "i")?)?;
            let j = parse_usize(get_required(&bsec, "j")?)?;
            let length = parse_f64(get_required(&bsec, "length")?)?;
            let phase = match bsec.entries.iter().find(|e| e.key == "phase") {
                Some(e) => parse_f64(e)?,
                None => 0.0,
            };
            bonds.push(Bond::new(i, j, length, phase));
        }
        let base = Graph::new(count, bonds)?;

        let pair_sections = doc.take_sections("pair");
        let pair = match pair_sections.first() {
            None => None,
            Some(psec) => {
                if pair_sections.len() > 1 {
                    return Err(err(pair_sections[1].line, "duplicate [pair] section"));
                }
                reject_unknown(psec, &["connect", "delta_phi", "base"])?;
                if let Some(e) = psec.entries.iter().find(|e| e.key == "base") {
                    if e.value != "inline" {
                        return Err(err(e.line, "only `base = inline` is supported"));
                    }
                }
                let delta_phi = parse_f64(get_required(psec, "delta_phi")?)?;
                let mut pairs = Vec::new();
                for e in psec.entries.iter().filter(|e| e.key == "connect") {
                    let parts: Vec<&str> = e.value.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err(e.line, "connect needs `from to length`"));
                    }
                    let from = parts[0]
                        .parse()
                        .map_err(|_| err(e.line, "bad `from` vertex"))?;
                    let to = parts[1].parse().map_err(|_| err(e.line, "bad `to` vertex"))?;
                    let length = parts[2]
                        .parse()
                        .map_err(|_| err(e.line, "bad cross-bond length"))?;
                    pairs.push(CrossPair { from, to, length });
                }
                if pairs.is_empty() {
                    return Err(err(psec.line, "[pair] needs at least one connect entry"));
                }
                Some(PairConfig { pairs, delta_phi })
            }
        };

        let port_sections = doc.take_sections("ports");
        let mut ports = Vec::new();
        if let Some(psec) = port_sections.first() {
            if port_sections.len() > 1 {
                return Err(err(port_sections[1].line, "duplicate [ports] section"));
            }
            reject_unknown(psec, &["vertices"])?;
            let e = get_required(psec, "vertices")?;
            for tok in e.value.split_whitespace() {
                ports.push(
                    tok.parse()
                        .map_err(|_| err(e.line, format!("bad vertex index `{tok}`")))?,
                );
            }
        }

        let cfg = GraphConfig { base, pair, ports };
        // ports index the resolved graph
        let resolved = cfg.resolved_graph()?;
        for &p in &cfg.ports {
            if p >= resolved.vertex_count() {
                return Err(ConfigError::Graph(GraphError::EndpointOutOfRange {
                    index: 0,
                    vertex: p,
                    vertex_count: resolved.vertex_count(),
                }));
            }
        }
        Ok(cfg)
    }

    pub fn pair_spec(&self) -> Option<SymplecticPairSpec> {
        self.pair.as_ref().map(|p| SymplecticPairSpec {
            base: self.base.clone(),
            pairs: p.pairs.clone(),
            delta_phi: p.delta_phi,
        })
    }

    /// The graph the file describes: the base alone, or the built pair.
    pub fn resolved_graph(&self) -> Result<Graph, GraphError> {
        let mut g = match self.pair_spec() {
            Some(spec) => build_symplectic_pair(&spec)?,
            None => self.base.clone(),
        };
        for &p in &self.ports {
            if p < g.vertex_count() {
                g.set_label(p, "port");
            }
        }
        Ok(g)
    }
}

/// Parse a standalone graph file, rejecting anything it does not understand.
pub fn parse_graph_config(text: &str) -> Result<GraphConfig, ConfigError> {
    let mut doc = Document::parse(text)?;
    let cfg = GraphConfig::from_document(&mut doc)?;
    doc.finish()?;
    Ok(cfg)
}
