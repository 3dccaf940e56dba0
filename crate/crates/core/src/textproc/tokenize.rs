use std::ops::Deref;

/// Lowercase tokens; none is empty and none contains whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// First `cap` tokens.
    pub fn truncated(&self, cap: usize) -> &[String] {
        &self.0[..self.0.len().min(cap)]
    }
}

impl Deref for TokenList {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a TokenList {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Lowercases and splits on every maximal run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> TokenList {
    TokenList(
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect(),
    )
}
