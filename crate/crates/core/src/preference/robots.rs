//! robots.txt parsing and longest-match evaluation over captured snapshots.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::signal::Decision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Allow,
    Disallow,
}

/// Path pattern compiled into literal pieces separated by `*` wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledPattern {
    pub pieces: Vec<String>,
    /// Pattern ended in `$`: the path must end where the pattern ends.
    pub anchored: bool,
}

impl CompiledPattern {
    pub fn compile(pattern: &str) -> Self {
        let (body, anchored) = match pattern.strip_suffix('$') {
            Some(b) => (b, true),
            None => (pattern, false),
        };
        CompiledPattern {
            pieces: body.split('*').map(str::to_string).collect(),
            anchored,
        }
    }

    pub fn matches(&self, path: &str) -> bool {
        let (first, rest) = self.pieces.split_first().expect("split yields at least one piece");
        let Some(mut tail) = path.strip_prefix(first.as_str()) else {
            return false;
        };
        if rest.is_empty() {
            return !self.anchored || tail.is_empty();
        }
        let (last, middle) = rest.split_last().expect("non-empty");
        for piece in middle {
            match tail.find(piece.as_str()) {
                Some(i) => tail = &tail[i + piece.len()..],
                None => return false,
            }
        }
        if self.anchored {
            tail.ends_with(last.as_str())
        } else {
            tail.contains(last.as_str())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotsRule {
    pub kind: RuleKind,
    /// Path pattern exactly as written.
    pub pattern: String,
    /// 1-based line in the source file.
    pub line: usize,
    pub compiled: CompiledPattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotsGroup {
    pub user_agents: Vec<String>,
    pub rules: Vec<RobotsRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub name: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotsPolicy {
    pub origin: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetched_at: Option<DateTime<Utc>>,
    pub groups: Vec<RobotsGroup>,
    /// Recognised lines that carry no access rule (sitemap, crawl-delay, ...).
    pub other_directives: Vec<Directive>,
    pub skipped_lines: usize,
}

/// Parses robots.txt text. Parsing is total: lines that are not
/// `name: value` pairs, and rules outside any group, are counted as skipped.
pub fn parse_robots(text: &str, origin: &str) -> RobotsPolicy {
    let mut groups: Vec<RobotsGroup> = Vec::new();
    let mut other_directives = Vec::new();
    let mut skipped_lines = 0;
    // True while consecutive user-agent lines are accumulating.
    let mut collecting_agents = false;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((name, value)) = line.split_once(':') else {
            skipped_lines += 1;
            continue;
        };
        let name = name.trim().to_ascii_lowercase();
        let value = value.trim();
        match name.as_str() {
            "user-agent" => {
                if !collecting_agents {
                    groups.push(RobotsGroup {
                        user_agents: Vec::new(),
                        rules: Vec::new(),
                    });
                    collecting_agents = true;
                }
                groups.last_mut().expect("just pushed").user_agents.push(value.to_string());
            }
            "allow" | "disallow" => {
                collecting_agents = false;
                let Some(group) = groups.last_mut() else {
                    skipped_lines += 1;
                    continue;
                };
                // An empty pattern matches nothing.
                if value.is_empty() {
                    continue;
                }
                group.rules.push(RobotsRule {
                    kind: if name == "allow" { RuleKind::Allow } else { RuleKind::Disallow },
                    pattern: value.to_string(),
                    line: line_no,
                    compiled: CompiledPattern::compile(value),
                });
            }
            _ => {
                collecting_agents = false;
                other_directives.push(Directive {
                    name,
                    value: value.to_string(),
                    line: line_no,
                });
            }
        }
    }
    RobotsPolicy {
        origin: origin.to_string(),
        fetched_at: None,
        groups,
        other_directives,
        skipped_lines,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotsDecision {
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched: Option<RobotsRule>,
}

fn product_token(agent: &str) -> String {
    agent
        .split(['/', ' '])
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase()
}

impl RobotsPolicy {
    /// Groups that apply to `agent`: those naming its product token, or the
    /// `*` groups when none do.
    fn groups_for(&self, agent: &str) -> Vec<&RobotsGroup> {
        let token = product_token(agent);
        let named: Vec<_> = self
            .groups
            .iter()
            .filter(|g| g.user_agents.iter().any(|ua| !token.is_empty() && ua.to_ascii_lowercase() == token))
            .collect();
        if !named.is_empty() {
            return named;
        }
        self.groups
            .iter()
            .filter(|g| g.user_agents.iter().any(|ua| ua == "*"))
            .collect()
    }

    /// Longest matching pattern wins; allow wins a tie. No match includes.
    pub fn evaluate(&self, agent: &str, path: &str) -> RobotsDecision {
        let path = if path.is_empty() { "/" } else { path };
        let mut best: Option<&RobotsRule> = None;
        for group in self.groups_for(agent) {
            for rule in &group.rules {
                if !rule.compiled.matches(path) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        rule.pattern.len() > b.pattern.len()
                            || (rule.pattern.len() == b.pattern.len()
                                && rule.kind == RuleKind::Allow
                                && b.kind == RuleKind::Disallow)
                    }
                };
                if better {
                    best = Some(rule);
                }
            }
        }
        RobotsDecision {
            decision: match best.map(|r| r.kind) {
                Some(RuleKind::Disallow) => Decision::Exclude,
                _ => Decision::Include,
            },
            matched: best.cloned(),
        }
    }
}
