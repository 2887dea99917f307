/// True for Han ideographs, which are indexed as whole runs and as bigrams.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2A6DF | 0x2A700..=0x2EBEF)
}

/// Lowercased, whitespace-collapsed form used for exact-concept matching.
pub fn normalize_concept(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Splits text into lowercase tokens.
///
/// Runs of letters/digits become tokens; punctuation and whitespace separate
/// them. A run of Han characters yields the whole run plus every adjacent
/// pair. Duplicates are removed, first occurrence kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |t: String, out: &mut Vec<String>| {
        if !t.is_empty() && !out.contains(&t) {
            out.push(t);
        }
    };
    let mut word = String::new();
    let mut han: Vec<char> = Vec::new();

    let flush_han = |han: &mut Vec<char>, out: &mut Vec<String>, push: &mut dyn FnMut(String, &mut Vec<String>)| {
        if han.is_empty() {
            return;
        }
        push(han.iter().collect(), out);
        if han.len() > 2 {
            for w in han.windows(2) {
                push(w.iter().collect(), out);
            }
        }
        han.clear();
    };

    for c in text.chars() {
        if is_cjk(c) {
            if !word.is_empty() {
                push(std::mem::take(&mut word), &mut out);
            }
            han.push(c);
        } else if c.is_alphanumeric() {
            flush_han(&mut han, &mut out, &mut push);
            word.extend(c.to_lowercase());
        } else {
            flush_han(&mut han, &mut out, &mut push);
            if !word.is_empty() {
                push(std::mem::take(&mut word), &mut out);
            }
        }
    }
    flush_han(&mut han, &mut out, &mut push);
    if !word.is_empty() {
        push(word, &mut out);
    }
    out
}
