//! Whitespace tokenization and whole-word phrase matching.
//!
//! Every lexicon lookup in the dialogue core goes through this module so that
//! word counts and keyword hits agree on what a "word" is: a whitespace
//! separated chunk with leading and trailing punctuation removed, lowercased.
//! Internal punctuation is kept, so `don't` and `human-like` are single words.

/// Split `text` into normalized words.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if word.is_empty() {
                None
            } else {
                Some(normalize_word(word))
            }
        })
        .collect()
}

/// Number of words in `text` under [`tokenize`].
pub fn word_count(text: &str) -> usize {
    text.split_whitespace()
        .filter(|raw| raw.chars().any(char::is_alphanumeric))
        .count()
}

fn normalize_word(word: &str) -> String {
    // Curly apostrophes show up in ASR output and pasted text.
    word.to_lowercase().replace('\u{2019}', "'")
}

/// A lexicon entry pre-split into words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase {
    words: Vec<String>,
}

impl Phrase {
    pub fn new(entry: &str) -> Self {
        Self {
            words: tokenize(entry),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// True when the phrase occurs as a contiguous run of whole words.
    pub fn occurs_in(&self, tokens: &[String]) -> bool {
        if self.words.is_empty() || self.words.len() > tokens.len() {
            return false;
        }
        tokens
            .windows(self.words.len())
            .any(|window| window == self.words.as_slice())
    }

    /// Number of (possibly overlapping) occurrences.
    pub fn count_in(&self, tokens: &[String]) -> usize {
        if self.words.is_empty() || self.words.len() > tokens.len() {
            return 0;
        }
        tokens
            .windows(self.words.len())
            .filter(|window| *window == self.words.as_slice())
            .count()
    }
}

/// A compiled list of phrases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhraseSet {
    phrases: Vec<Phrase>,
}

impl PhraseSet {
    pub fn new<S: AsRef<str>>(entries: &[S]) -> Self {
        Self {
            phrases: entries
                .iter()
                .map(|e| Phrase::new(e.as_ref()))
                .filter(|p| !p.is_empty())
                .collect(),
        }
    }

    pub fn any_in(&self, tokens: &[String]) -> bool {
        self.phrases.iter().any(|p| p.occurs_in(tokens))
    }

    pub fn hits_in(&self, tokens: &[String]) -> usize {
        self.phrases.iter().map(|p| p.count_in(tokens)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_outer_punctuation_only() {
        assert_eq!(
            tokenize("Um, not really. It's \"human-like\"!"),
            vec!["um", "not", "really", "it's", "human-like"]
        );
    }

    #[test]
    fn counts_match_tokens() {
        let text = "Uh, well, I would say the response time maybe.";
        assert_eq!(word_count(text), 9);
        assert_eq!(tokenize(text).len(), 9);
        assert_eq!(word_count(" -- ... "), 0);
        assert_eq!(word_count(""), 0);
    }

    #[test]
    fn phrase_matching_is_whole_word() {
        let tokens = tokenize("I would say basically nothing");
        assert!(!Phrase::new("as").occurs_in(&tokens));
        assert!(Phrase::new("would say").occurs_in(&tokens));
        assert!(!Phrase::new("say nothing").occurs_in(&tokens));
    }

    #[test]
    fn curly_apostrophe_normalized() {
        assert_eq!(tokenize("I don\u{2019}t know"), vec!["i", "don't", "know"]);
    }
}
