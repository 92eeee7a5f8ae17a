//! Marketplace handle grammar and signature link extraction.

use regex::Regex;
use scraper::{Html, Node};

/// Validates and normalizes shop handles: lowercase, leading `@` stripped,
/// alphanumerics plus `._-`.
#[derive(Debug, Clone)]
pub struct HandleGrammar {
    pattern: Regex,
}

pub const DEFAULT_HANDLE_PATTERN: &str = r"^[a-z0-9._-]{1,64}$";

impl HandleGrammar {
    pub fn new(pattern: &str) -> Result<Self, regex::Error> {
        Ok(HandleGrammar {
            pattern: Regex::new(pattern)?,
        })
    }

    pub fn normalize(&self, raw: &str) -> Option<String> {
        let trimmed = raw.trim();
        let stripped = trimmed.strip_prefix('@').unwrap_or(trimmed);
        let handle = stripped.trim_end_matches('.').to_lowercase();
        self.accepts(&handle).then_some(handle)
    }

    pub fn accepts(&self, handle: &str) -> bool {
        !handle.is_empty() && self.pattern.is_match(handle)
    }
}

impl Default for HandleGrammar {
    fn default() -> Self {
        HandleGrammar::new(DEFAULT_HANDLE_PATTERN).expect("default handle pattern")
    }
}

/// Paths on the marketplace host that are not shop pages.
pub const DEFAULT_RESERVED_PATHS: &[&str] = &[
    "product", "products", "api", "login", "register", "terms", "privacy", "faq", "pricing",
    "blog", "docs", "feedback", "support", "dashboard", "assets", "static",
];

/// Recognizes marketplace shop URLs (`host/@handle` or `host/handle`).
#[derive(Debug, Clone)]
pub struct MarketplaceLinks {
    link: Regex,
    reserved: Vec<String>,
    grammar: HandleGrammar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureLink {
    /// The matched URL text as it appeared.
    pub raw: String,
    pub handle: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureScan {
    pub links: Vec<SignatureLink>,
    pub diagnostics: Vec<String>,
}

impl SignatureScan {
    pub fn handles(&self) -> Vec<String> {
        self.links.iter().map(|l| l.handle.clone()).collect()
    }
}

impl MarketplaceLinks {
    pub fn new(hosts: &[String], grammar: HandleGrammar) -> Result<Self, regex::Error> {
        let alternatives = hosts
            .iter()
            .map(|h| regex::escape(&h.to_ascii_lowercase()))
            .collect::<Vec<_>>()
            .join("|");
        let link = Regex::new(&format!(
            r"(?i)(?:https?://)?(?:www\.)?(?:{alternatives})/(@?[A-Za-z0-9._-]+)"
        ))?;
        Ok(MarketplaceLinks {
            link,
            reserved: DEFAULT_RESERVED_PATHS.iter().map(|s| s.to_string()).collect(),
            grammar,
        })
    }

    pub fn grammar(&self) -> &HandleGrammar {
        &self.grammar
    }

    /// All shop links in `text`, in order of appearance (duplicates kept).
    pub fn find_in_text(&self, text: &str) -> Vec<SignatureLink> {
        let mut out = Vec::new();
        for caps in self.link.captures_iter(text) {
            let whole = caps.get(0).expect("group 0");
            // reject hosts that merely end with the marketplace host, e.g. `notshoppy.gg`
            if let Some(prev) = text[..whole.start()].chars().next_back() {
                if prev.is_alphanumeric() || prev == '.' || prev == '-' {
                    continue;
                }
            }
            let segment = &caps[1];
            let explicit = segment.starts_with('@');
            if !explicit && self.reserved.iter().any(|r| r.eq_ignore_ascii_case(segment)) {
                continue;
            }
            if let Some(handle) = self.grammar.normalize(segment) {
                out.push(SignatureLink {
                    raw: whole.as_str().trim_end_matches('.').to_string(),
                    handle,
                });
            }
        }
        out
    }

    /// Scans an HTML fragment: anchor targets and visible text, in document order,
    /// deduplicated by handle.
    pub fn scan_html(&self, html: &[u8]) -> SignatureScan {
        let mut scan = SignatureScan::default();
        if html.contains(&0) {
            scan.diagnostics
                .push("body contains NUL bytes; not treated as html".into());
            return scan;
        }
        let text = match std::str::from_utf8(html) {
            Ok(s) => std::borrow::Cow::Borrowed(s),
            Err(e) => {
                scan.diagnostics
                    .push(format!("invalid utf-8 at byte {}; decoded lossily", e.valid_up_to()));
                String::from_utf8_lossy(html)
            }
        };
        let doc = Html::parse_fragment(&text);
        let mut found = Vec::new();
        for node in doc.tree.root().descendants() {
            match node.value() {
                Node::Element(el) if el.name() == "a" => {
                    if let Some(href) = el.attr("href") {
                        found.extend(self.find_in_text(href));
                    }
                }
                Node::Text(t) => found.extend(self.find_in_text(t)),
                _ => {}
            }
        }
        for link in found {
            if !scan.links.iter().any(|l| l.handle == link.handle) {
                scan.links.push(link);
            }
        }
        scan
    }
}

/// Distinct normalized shop handles referenced in `html`.
pub fn extract_signature_links(html: &[u8], links: &MarketplaceLinks) -> SignatureScan {
    links.scan_html(html)
}
