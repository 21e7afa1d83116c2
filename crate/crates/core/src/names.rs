//! Hierarchical content names.
//!
//! A [`Name`] is an ordered list of [`NameComponent`]s written in URI form,
//! `/home/light/floor1/switchOFF`. The empty list is the root name `/`.
//!
//! Two auxiliary matchers operate on names:
//!
//! - [`NamePattern`] is a positional face filter such as
//!   `[room-2|room-3]<>*`: one bracketed set of allowed literals per
//!   position, optionally followed by `<>*` to accept any suffix.
//! - [`ExcludeFilter`] rejects Data whose component immediately after the
//!   Interest name is one of the excluded values.
//!
//! Components compare by exact byte equality; there is no case folding or
//! percent-decoding.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("malformed name {0:?}: names must start with '/'")]
    MissingLeadingSlash(String),

    #[error("malformed name {0:?}: empty component")]
    EmptyComponent(String),

    #[error("invalid name component {0:?}: components are non-empty and contain no '/'")]
    InvalidComponent(String),

    #[error("malformed pattern {pattern:?} at byte {offset}: {reason}")]
    MalformedPattern {
        pattern: String,
        offset: usize,
        reason: &'static str,
    },

    #[error("{interest} is not a prefix of {data}")]
    NotAPrefix { interest: Name, data: Name },
}

/// One element of a [`Name`]. Never empty, never contains `/`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NameComponent(String);

impl NameComponent {
    pub fn new(value: impl Into<String>) -> Result<Self, NameError> {
        let value = value.into();
        if value.is_empty() || value.contains('/') {
            return Err(NameError::InvalidComponent(value));
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; present for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for NameComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for NameComponent {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl AsRef<str> for NameComponent {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A hierarchical content name.
///
/// Ordering is component-wise lexicographic, which keeps every prefix
/// adjacent to (and before) its extensions in sorted containers.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    components: Vec<NameComponent>,
}

impl Name {
    /// The root name `/`.
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_components(components: Vec<NameComponent>) -> Self {
        Self { components }
    }

    /// Parses the URI form. The bare `/` is the root; any other empty
    /// component (`//`, trailing `/`) is rejected.
    pub fn parse(uri: &str) -> Result<Self, NameError> {
        let rest = uri
            .strip_prefix('/')
            .ok_or_else(|| NameError::MissingLeadingSlash(uri.to_owned()))?;
        if rest.is_empty() {
            return Ok(Self::root());
        }
        let components = rest
            .split('/')
            .map(|c| {
                if c.is_empty() {
                    Err(NameError::EmptyComponent(uri.to_owned()))
                } else {
                    Ok(NameComponent(c.to_owned()))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { components })
    }

    pub fn components(&self) -> &[NameComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&NameComponent> {
        self.components.get(index)
    }

    pub fn last(&self) -> Option<&NameComponent> {
        self.components.last()
    }

    /// True iff `self` is a leading sublist of `name`. Reflexive; the root
    /// is a prefix of everything.
    pub fn is_prefix_of(&self, name: &Name) -> bool {
        name.components.starts_with(&self.components)
    }

    /// The first `len` components (clamped to the name length).
    pub fn prefix(&self, len: usize) -> Name {
        let len = len.min(self.components.len());
        Name {
            components: self.components[..len].to_vec(),
        }
    }

    /// Components after the first `len`.
    pub fn suffix_after(&self, len: usize) -> &[NameComponent] {
        &self.components[len.min(self.components.len())..]
    }

    #[must_use]
    pub fn append(&self, component: NameComponent) -> Name {
        let mut components = self.components.clone();
        components.push(component);
        Name { components }
    }

    #[must_use]
    pub fn join<'a, I>(&self, components: I) -> Name
    where
        I: IntoIterator<Item = &'a NameComponent>,
    {
        let mut out = self.clone();
        out.components.extend(components.into_iter().cloned());
        out
    }

    pub fn push(&mut self, component: NameComponent) {
        self.components.push(component);
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("/");
        }
        for c in &self.components {
            write!(f, "/{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Name::parse(s)
    }
}

/// Free-function form of [`Name::parse`].
pub fn parse_name(uri: &str) -> Result<Name, NameError> {
    Name::parse(uri)
}

/// Free-function form of [`Name::is_prefix_of`].
pub fn is_prefix_of(prefix: &Name, name: &Name) -> bool {
    prefix.is_prefix_of(name)
}

/// Returns the entry whose prefix matches `name` with the most components.
///
/// Table prefixes are expected to be unique; if they are not, the first of
/// the longest is returned.
pub fn longest_prefix_match<'a, T>(table: &'a [(Name, T)], name: &Name) -> Option<&'a (Name, T)> {
    let mut best: Option<&'a (Name, T)> = None;
    for entry in table {
        if entry.0.is_prefix_of(name) && best.is_none_or(|b| entry.0.len() > b.0.len()) {
            best = Some(entry);
        }
    }
    best
}

/// Positional face filter: one non-empty set of allowed literals per
/// position, plus an optional any-suffix wildcard.
///
/// Text form: `[a|b|c][d]<>*`. An empty literal list with the wildcard
/// (`<>*`) matches every name; the empty string matches only the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NamePattern {
    literal_prefix: Vec<BTreeSet<NameComponent>>,
    wildcard_suffix: bool,
}

impl NamePattern {
    /// Fails if any position has an empty alternative set.
    pub fn new(literal_prefix: Vec<BTreeSet<NameComponent>>, wildcard_suffix: bool) -> Result<Self, NameError> {
        if literal_prefix.iter().any(BTreeSet::is_empty) {
            return Err(NameError::MalformedPattern {
                pattern: String::new(),
                offset: 0,
                reason: "empty alternative set",
            });
        }
        Ok(Self {
            literal_prefix,
            wildcard_suffix,
        })
    }

    /// Matches every name.
    pub fn any() -> Self {
        Self {
            literal_prefix: Vec::new(),
            wildcard_suffix: true,
        }
    }

    pub fn literal_prefix(&self) -> &[BTreeSet<NameComponent>] {
        &self.literal_prefix
    }

    pub fn wildcard_suffix(&self) -> bool {
        self.wildcard_suffix
    }

    pub fn matches(&self, name: &Name) -> bool {
        self.matches_components(name.components())
    }

    pub fn matches_components(&self, components: &[NameComponent]) -> bool {
        if components.len() < self.literal_prefix.len() {
            return false;
        }
        if !self.wildcard_suffix && components.len() != self.literal_prefix.len() {
            return false;
        }
        self.literal_prefix
            .iter()
            .zip(components)
            .all(|(allowed, c)| allowed.contains(c))
    }

    pub fn parse(text: &str) -> Result<Self, NameError> {
        let err = |offset: usize, reason: &'static str| NameError::MalformedPattern {
            pattern: text.to_owned(),
            offset,
            reason,
        };
        let bytes = text.as_bytes();
        let mut pos = 0;
        let mut literal_prefix = Vec::new();
        let mut wildcard_suffix = false;

        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos == bytes.len() {
                break;
            }
            if wildcard_suffix {
                return Err(err(pos, "trailing input after '<>*'"));
            }
            if text[pos..].starts_with("<>*") {
                wildcard_suffix = true;
                pos += 3;
                continue;
            }
            if bytes[pos] != b'[' {
                return Err(err(pos, "expected '[' or '<>*'"));
            }
            let close = text[pos..]
                .find(']')
                .map(|i| pos + i)
                .ok_or_else(|| err(pos, "unterminated '['"))?;
            let body = &text[pos + 1..close];
            let mut set = BTreeSet::new();
            for alt in body.split('|') {
                let alt = alt.trim();
                if alt.is_empty() {
                    return Err(err(pos + 1, "empty alternative"));
                }
                if alt.contains(['[', '<', '>', '/']) || alt.contains(char::is_whitespace) {
                    return Err(err(pos + 1, "invalid character in alternative"));
                }
                set.insert(NameComponent(alt.to_owned()));
            }
            literal_prefix.push(set);
            pos = close + 1;
        }

        Ok(Self {
            literal_prefix,
            wildcard_suffix,
        })
    }
}

impl fmt::Display for NamePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for set in &self.literal_prefix {
            f.write_str("[")?;
            for (i, c) in set.iter().enumerate() {
                if i > 0 {
                    f.write_str("|")?;
                }
                f.write_str(c.as_str())?;
            }
            f.write_str("]")?;
        }
        if self.wildcard_suffix {
            f.write_str("<>*")?;
        }
        Ok(())
    }
}

impl FromStr for NamePattern {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NamePattern::parse(s)
    }
}

/// Free-function form of [`NamePattern::matches`].
pub fn matches_pattern(pattern: &NamePattern, name: &Name) -> bool {
    pattern.matches(name)
}

/// Set of components excluded at the position right after an Interest name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ExcludeFilter {
    excluded: BTreeSet<NameComponent>,
}

impl ExcludeFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, component: NameComponent) -> bool {
        self.excluded.insert(component)
    }

    pub fn contains(&self, component: &NameComponent) -> bool {
        self.excluded.contains(component)
    }

    pub fn len(&self) -> usize {
        self.excluded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excluded.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NameComponent> {
        self.excluded.iter()
    }

    /// Whether Data named `data_name` is excluded for an Interest named
    /// `interest_name`. Only the component at `interest_name.len()` is
    /// inspected; exact-name Data is never excluded.
    pub fn is_excluded(&self, interest_name: &Name, data_name: &Name) -> Result<bool, NameError> {
        if !interest_name.is_prefix_of(data_name) {
            return Err(NameError::NotAPrefix {
                interest: interest_name.clone(),
                data: data_name.clone(),
            });
        }
        Ok(data_name
            .get(interest_name.len())
            .is_some_and(|c| self.excluded.contains(c)))
    }
}

impl FromIterator<NameComponent> for ExcludeFilter {
    fn from_iter<I: IntoIterator<Item = NameComponent>>(iter: I) -> Self {
        Self {
            excluded: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for ExcludeFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.excluded.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(c.as_str())?;
        }
        f.write_str("}")
    }
}

/// Free-function form of [`ExcludeFilter::is_excluded`].
pub fn is_excluded(exclude: &ExcludeFilter, interest_name: &Name, data_name: &Name) -> Result<bool, NameError> {
    exclude.is_excluded(interest_name, data_name)
}

/// Shorthand for building names from literals in tests and builders.
///
/// Panics on a malformed literal.
pub fn name(uri: &str) -> Name {
    Name::parse(uri).unwrap_or_else(|e| panic!("{e}"))
}

/// Panicking component constructor, the component counterpart of [`name`].
pub fn comp(value: &str) -> NameComponent {
    NameComponent::new(value).unwrap_or_else(|e| panic!("{e}"))
}
