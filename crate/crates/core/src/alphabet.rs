//! Fixed ordered character alphabet for AOI codes.
//!
//! Index 0 is the reserved blank character (gaze outside every AOI). Every
//! code is a non-digit character, so run-length renderings such as `A12B`
//! parse unambiguously.

/// Character for samples that fall outside all AOIs.
pub const BLANK: char = '.';

const GREEK_UPPER: &str = "ΑΒΓΔΕΖΗΘΙΚΛΜΝΞΟΠΡΣΤΥΦΧΨΩ";
const GREEK_LOWER: &str = "αβγδεζηθικλμνξοπρστυφχψω";

/// Returns the code at `index`. Index 0 is [`BLANK`].
pub fn char_at(index: usize) -> char {
    if index == 0 {
        return BLANK;
    }
    let mut i = index - 1;
    if i < 26 {
        return (b'A' + i as u8) as char;
    }
    i -= 26;
    if i < 26 {
        return (b'a' + i as u8) as char;
    }
    i -= 26;
    if let Some(c) = GREEK_UPPER.chars().nth(i) {
        return c;
    }
    i -= GREEK_UPPER.chars().count();
    if let Some(c) = GREEK_LOWER.chars().nth(i) {
        return c;
    }
    i -= GREEK_LOWER.chars().count();
    // CJK unified ideographs: a large contiguous block without digits.
    char::from_u32(0x4E00 + i as u32).expect("alphabet exhausted")
}

/// Whether `c` may label an AOI leaf.
pub fn is_code_char(c: char) -> bool {
    c != BLANK && !c.is_ascii_digit() && !c.is_numeric() && !c.is_whitespace() && !c.is_control()
}

/// Lowest-index code not present in `used`.
pub fn first_free<I: IntoIterator<Item = char>>(used: I) -> char {
    let used: std::collections::HashSet<char> = used.into_iter().collect();
    (1..)
        .map(char_at)
        .find(|c| !used.contains(c))
        .expect("alphabet is unbounded")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_codes() {
        assert_eq!(char_at(0), BLANK);
        assert_eq!(char_at(1), 'A');
        assert_eq!(char_at(26), 'Z');
        assert_eq!(char_at(27), 'a');
        assert_eq!(char_at(53), 'Α');
    }

    #[test]
    fn codes_are_distinct_and_valid() {
        let codes: Vec<char> = (1..400).map(char_at).collect();
        let set: std::collections::HashSet<_> = codes.iter().collect();
        assert_eq!(set.len(), codes.len());
        assert!(codes.iter().all(|&c| is_code_char(c)));
    }

    #[test]
    fn first_free_skips_used() {
        assert_eq!(first_free(['A', 'B', 'D']), 'C');
        assert_eq!(first_free([]), 'A');
    }
}
